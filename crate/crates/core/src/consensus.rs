//! Synchronous rounds of the private collaborative consensus algorithm.
//!
//! Each round runs the same six phases for every agent over consistent
//! snapshots:
//!
//! 1. fold the fresh sample into the private and privatized running means,
//! 2. decide which neighbors belong to the agent's class, using every
//!    neighbor's fresh privatized mean,
//! 3. publish the class-estimate sizes,
//! 4. mix the previous round's consensus values with the fresh privatized mean,
//! 5. publish the new consensus values,
//! 6. pick the personal output: the private local mean when every member of
//!    the class estimate reports a size of at most 2, else the consensus value.
//!
//! Only privatized means, class-estimate sizes and consensus values ever leave
//! an agent; [`Observer`] sees every such message.

use crate::error::{Error, Result};
use crate::privacy::PrivacySpec;
use crate::rules::{bernstein_z, optimistic_accepts, optimistic_radius, PublicStats, RuleSpec};
use crate::topology::Topology;

/// Weight given to the mixed consensus term at local time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaSchedule {
    /// `t/(t+1)`.
    Simple,
    /// `(⌊t/w⌋+1)/(⌊t/w⌋+2)`.
    Windowed { window: u64 },
}

impl AlphaSchedule {
    pub fn alpha_at(&self, t_local: u64) -> f64 {
        let step = match *self {
            AlphaSchedule::Simple => t_local,
            AlphaSchedule::Windowed { window } => t_local / window.max(1),
        } as f64;
        match self {
            AlphaSchedule::Simple => step / (step + 1.0),
            AlphaSchedule::Windowed { .. } => (step + 1.0) / (step + 2.0),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AlphaSchedule::Simple => "simple",
            AlphaSchedule::Windowed { .. } => "windowed",
        }
    }
}

/// `prev·(t−1)/t + x/t`, the running-mean update used everywhere a sample mean is kept.
#[inline]
pub fn running_mean_update(prev: f64, x: f64, t: u64) -> f64 {
    let tf = t as f64;
    prev * ((tf - 1.0) / tf) + x / tf
}

/// Off-diagonal mixing weight `1/(max(|C_a|, |C_b|) + 1)`.
#[inline]
pub fn mixing_weight(size_a: usize, size_b: usize) -> f64 {
    1.0 / (size_a.max(size_b) as f64 + 1.0)
}

/// One row of the mixing matrix, as `(agent, weight)` pairs sorted by agent.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingRow {
    pub weights: Vec<(usize, f64)>,
}

impl MixingRow {
    pub fn weight(&self, b: usize) -> f64 {
        self.weights
            .binary_search_by_key(&b, |&(agent, _)| agent)
            .map_or(0.0, |i| self.weights[i].1)
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().map(|&(_, w)| w).sum()
    }
}

/// Row `a` of the mixing matrix for class estimate `class_est_a` (which must
/// contain `a`). `sizes` reports `|C_b|` for each member.
pub fn mixing_row<F>(a: usize, class_est_a: &[usize], sizes: F) -> Result<MixingRow>
where
    F: Fn(usize) -> Option<usize>,
{
    if !class_est_a.contains(&a) {
        return Err(Error::ProtocolViolation(format!("class estimate of {a} does not contain it")));
    }
    let own = class_est_a.len();
    let mut weights = Vec::with_capacity(own);
    let mut off_diagonal = 0.0;
    for &b in class_est_a.iter().filter(|&&b| b != a) {
        let size_b = sizes(b)
            .ok_or_else(|| Error::ProtocolViolation(format!("agent {a} has no size report from {b}")))?;
        let w = mixing_weight(own, size_b);
        off_diagonal += w;
        weights.push((b, w));
    }
    weights.push((a, 1.0 - off_diagonal));
    weights.sort_by_key(|&(b, _)| b);
    Ok(MixingRow { weights })
}

/// A value crossing an edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Message {
    NoisyMean(f64),
    ClassSize(usize),
    Consensus(f64),
}

/// Receives every message sent during a round.
pub trait Observer {
    fn on_message(&mut self, from: usize, to: usize, message: Message);
}

/// Ignores all messages.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoObserver;

impl Observer for NoObserver {
    #[inline]
    fn on_message(&mut self, _: usize, _: usize, _: Message) {}
}

/// Counts messages by kind.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct MessageAudit {
    pub noisy_means: u64,
    pub class_sizes: u64,
    pub consensus: u64,
}

impl Observer for MessageAudit {
    fn on_message(&mut self, _: usize, _: usize, message: Message) {
        match message {
            Message::NoisyMean(_) => self.noisy_means += 1,
            Message::ClassSize(_) => self.class_sizes += 1,
            Message::Consensus(_) => self.consensus += 1,
        }
    }
}

/// Snapshot of one agent after a round.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    /// Rounds completed.
    pub t: u64,
    /// Private running mean of the raw samples.
    pub xbar: f64,
    /// Running mean of the noised samples (published).
    pub xbar_noisy: f64,
    /// Consensus estimate (published).
    pub mu_hat_consensus: f64,
    /// Personal output, never published.
    pub mu_hat_out: f64,
    /// Current class estimate, ascending, always containing the agent.
    pub class_est: Vec<usize>,
    /// `|C_b|` reported by each member `b` of the class estimate.
    pub class_est_sizes_of_members: Vec<(usize, usize)>,
    pub alpha_clock: u64,
}

/// All agents of one replica, advanced in lock step.
#[derive(Debug, Clone)]
pub struct Engine<'a> {
    topology: &'a Topology,
    privacy: PrivacySpec,
    rule: RuleSpec,
    alpha: AlphaSchedule,
    stats: Vec<PublicStats>,
    noisy_beta: Vec<f64>,
    // CSR adjacency plus the slot of each edge's reverse direction.
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    mirror: Vec<usize>,
    accept: Vec<bool>,
    prev_accept: Vec<bool>,
    t: Vec<u64>,
    xbar: Vec<f64>,
    xbar_noisy: Vec<f64>,
    consensus: Vec<f64>,
    next_consensus: Vec<f64>,
    output: Vec<f64>,
    sizes: Vec<usize>,
    alpha_clock: Vec<u64>,
}

impl<'a> Engine<'a> {
    /// `stats[a]` are agent `a`'s public data constants.
    pub fn new(
        topology: &'a Topology,
        stats: Vec<PublicStats>,
        privacy: PrivacySpec,
        rule: RuleSpec,
        alpha: AlphaSchedule,
    ) -> Result<Self> {
        rule.validate()?;
        let m = topology.num_agents();
        if stats.len() != m {
            return Err(Error::invalid(format!("{} public stats for {m} agents", stats.len())));
        }
        let graph = &topology.graph;
        let mut offsets = Vec::with_capacity(m + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for a in 0..m {
            neighbors.extend_from_slice(graph.neighbors(a));
            offsets.push(neighbors.len());
        }
        let mirror = (0..m)
            .flat_map(|a| graph.neighbors(a).iter().map(move |&b| (a, b)))
            .map(|(a, b)| {
                let pos = graph.neighbors(b).binary_search(&a).expect("adjacency is symmetric");
                offsets[b] + pos
            })
            .collect();
        let noisy_beta = stats.iter().map(|s| s.noisy_beta(&privacy)).collect();
        let slots = neighbors.len();
        Ok(Self {
            topology,
            privacy,
            rule,
            alpha,
            stats,
            noisy_beta,
            offsets,
            neighbors,
            mirror,
            accept: vec![false; slots],
            prev_accept: vec![false; slots],
            t: vec![0; m],
            xbar: vec![0.0; m],
            xbar_noisy: vec![0.0; m],
            consensus: vec![0.0; m],
            next_consensus: vec![0.0; m],
            output: vec![0.0; m],
            sizes: vec![0; m],
            alpha_clock: vec![0; m],
        })
    }

    pub fn num_agents(&self) -> usize {
        self.t.len()
    }

    /// Rounds completed.
    pub fn time(&self) -> u64 {
        self.t.first().copied().unwrap_or(0)
    }

    pub fn outputs(&self) -> &[f64] {
        &self.output
    }

    pub fn consensus_values(&self) -> &[f64] {
        &self.consensus
    }

    pub fn noisy_means(&self) -> &[f64] {
        &self.xbar_noisy
    }

    pub fn local_means(&self) -> &[f64] {
        &self.xbar
    }

    fn slots(&self, a: usize) -> std::ops::Range<usize> {
        self.offsets[a]..self.offsets[a + 1]
    }

    pub fn agent_state(&self, a: usize) -> AgentState {
        let mut class_est: Vec<usize> = self
            .slots(a)
            .filter(|&s| self.accept[s])
            .map(|s| self.neighbors[s])
            .chain(std::iter::once(a))
            .collect();
        class_est.sort_unstable();
        if self.t[a] == 0 {
            class_est.clear();
        }
        let class_est_sizes_of_members = class_est.iter().map(|&b| (b, self.sizes[b])).collect();
        AgentState {
            t: self.t[a],
            xbar: self.xbar[a],
            xbar_noisy: self.xbar_noisy[a],
            mu_hat_consensus: self.consensus[a],
            mu_hat_out: self.output[a],
            class_est,
            class_est_sizes_of_members,
            alpha_clock: self.alpha_clock[a],
        }
    }

    /// Mixing row of agent `a` for the current class estimates.
    pub fn mixing_row(&self, a: usize) -> Result<MixingRow> {
        let state = self.agent_state(a);
        mixing_row(a, &state.class_est, |b| Some(self.sizes[b]))
    }

    /// Advances every agent by one round given fresh samples and noise draws.
    pub fn round(&mut self, samples: &[f64], noise: &[f64]) -> Result<()> {
        self.round_observed(samples, noise, &mut NoObserver)
    }

    pub fn round_observed<O: Observer>(&mut self, samples: &[f64], noise: &[f64], observer: &mut O) -> Result<()> {
        let m = self.num_agents();
        if samples.len() != m || noise.len() != m {
            return Err(Error::invalid("one sample and one noise draw per agent are required"));
        }
        let prev_t = self.time();
        if let Some(a) = self.t.iter().position(|&t| t != prev_t) {
            return Err(Error::InvariantViolation(format!(
                "agent {a} is at round {} while agent 0 is at round {prev_t}",
                self.t[a]
            )));
        }
        let t = prev_t + 1;

        // Phase 1: running means.
        for a in 0..m {
            self.xbar[a] = running_mean_update(self.xbar[a], samples[a], t);
            self.xbar_noisy[a] = running_mean_update(self.xbar_noisy[a], samples[a] + noise[a], t);
            self.t[a] = t;
        }
        for a in 0..m {
            for s in self.slots(a) {
                observer.on_message(a, self.neighbors[s], Message::NoisyMean(self.xbar_noisy[a]));
            }
        }

        // Phase 2: class estimates, one decision per edge mirrored to both ends.
        std::mem::swap(&mut self.accept, &mut self.prev_accept);
        self.decide_all(t)?;
        for a in 0..m {
            self.sizes[a] = 1 + self.slots(a).filter(|&s| self.accept[s]).count();
        }

        // Phase 3: size exchange.
        for a in 0..m {
            for s in self.slots(a) {
                observer.on_message(a, self.neighbors[s], Message::ClassSize(self.sizes[a]));
            }
        }

        // Phase 4: consensus update from the previous round's consensus values.
        for a in 0..m {
            let range = self.slots(a);
            let changed = t == 1 || self.accept[range.clone()] != self.prev_accept[range.clone()];
            self.alpha_clock[a] = if changed { 1 } else { self.alpha_clock[a] + 1 };
            let alpha = self.alpha.alpha_at(self.alpha_clock[a]);

            let own = self.sizes[a];
            let mut off_diagonal = 0.0;
            let mut mixed = 0.0;
            for s in range {
                if self.accept[s] {
                    let b = self.neighbors[s];
                    let w = mixing_weight(own, self.sizes[b]);
                    off_diagonal += w;
                    mixed += w * self.consensus[b];
                }
            }
            let self_weight = 1.0 - off_diagonal;
            if self_weight < 0.0 {
                return Err(Error::InvariantViolation(format!(
                    "negative self weight {self_weight} for agent {a} at round {t}"
                )));
            }
            mixed += self_weight * self.consensus[a];
            self.next_consensus[a] = (1.0 - alpha) * self.xbar_noisy[a] + alpha * mixed;
        }
        std::mem::swap(&mut self.consensus, &mut self.next_consensus);

        // Phase 5: consensus exchange.
        for a in 0..m {
            for s in self.slots(a) {
                observer.on_message(a, self.neighbors[s], Message::Consensus(self.consensus[a]));
            }
        }

        // Phase 6: personal output.
        for a in 0..m {
            let small = self.sizes[a] <= 2
                && self
                    .slots(a)
                    .filter(|&s| self.accept[s])
                    .all(|s| self.sizes[self.neighbors[s]] <= 2);
            self.output[a] = if small { self.xbar[a] } else { self.consensus[a] };
        }
        Ok(())
    }

    fn decide_all(&mut self, t: u64) -> Result<()> {
        let m = self.num_agents();
        let sqrt_t = (t as f64).sqrt();
        match self.rule {
            RuleSpec::Oracle => {
                let classes = &self.topology.classes;
                for a in 0..m {
                    for s in self.offsets[a]..self.offsets[a + 1] {
                        self.accept[s] = classes.same_class(a, self.neighbors[s]);
                    }
                }
            }
            RuleSpec::BernsteinTest { schedule } => {
                let theta = schedule.theta_at(t);
                crate::bernstein::check_theta(theta)?;
                let log_term = (2.0 / theta).ln();
                for a in 0..m {
                    for s in self.offsets[a]..self.offsets[a + 1] {
                        let b = self.neighbors[s];
                        if b < a {
                            continue;
                        }
                        let z = bernstein_z(
                            self.noisy_beta[a],
                            self.noisy_beta[b],
                            self.stats[a].sigma_sq() + self.stats[b].sigma_sq(),
                            self.privacy.sigma_dp_sq,
                            sqrt_t,
                            log_term,
                        );
                        let ok = (self.xbar_noisy[a] - self.xbar_noisy[b]).abs() < z;
                        self.accept[s] = ok;
                        self.accept[self.mirror[s]] = ok;
                    }
                }
            }
            RuleSpec::OptimisticDistance { delta, r_assumed } => {
                let radius: Vec<f64> = self
                    .stats
                    .iter()
                    .map(|st| optimistic_radius(st.sigma_sq(), &self.privacy, t, delta, r_assumed, m))
                    .collect();
                for a in 0..m {
                    for s in self.offsets[a]..self.offsets[a + 1] {
                        let b = self.neighbors[s];
                        if b < a {
                            continue;
                        }
                        let distance = (self.xbar_noisy[a] - self.xbar_noisy[b]).abs();
                        let ok = optimistic_accepts(distance, radius[a], radius[b]);
                        self.accept[s] = ok;
                        self.accept[self.mirror[s]] = ok;
                    }
                }
            }
        }
        Ok(())
    }

    #[cfg(test)]
    pub(crate) fn force_time(&mut self, a: usize, t: u64) {
        self.t[a] = t;
    }
}

/// Checks that one consensus step preserved the component average:
/// `mean(after) = (1 − α)·mean(noisy) + α·mean(before)` within `1e-10`.
pub fn average_preservation_check(
    component: &[usize],
    before: &[f64],
    after: &[f64],
    noisy: &[f64],
    alpha: f64,
) -> bool {
    if component.is_empty() {
        return true;
    }
    let n = component.len() as f64;
    let mean = |v: &[f64]| component.iter().map(|&a| v[a]).sum::<f64>() / n;
    let expected = (1.0 - alpha) * mean(noisy) + alpha * mean(before);
    (mean(after) - expected).abs() <= 1e-10
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;
    use crate::topology::Graph;

    const L: f64 = 0.866_025_403_784_438_6;

    fn single_class(graph: Graph) -> Topology {
        let m = graph.num_agents();
        Topology::new(graph, vec![0; m], vec![0.4]).unwrap()
    }

    fn engine<'a>(topo: &'a Topology, eps: f64, rule: RuleSpec, alpha: AlphaSchedule) -> Engine<'a> {
        let stats = vec![PublicStats::uniform(L); topo.num_agents()];
        Engine::new(topo, stats, PrivacySpec::calibrate(eps, L).unwrap(), rule, alpha).unwrap()
    }

    #[test]
    fn alpha_schedules() {
        assert_eq!(AlphaSchedule::Simple.alpha_at(1), 0.5);
        let w = AlphaSchedule::Windowed { window: 10 };
        assert!((1..=9).all(|t| w.alpha_at(t) == 0.5));
        assert!((10..=19).all(|t| w.alpha_at(t) == 2.0 / 3.0));
        let mut prev = 0.0;
        for t in 1..1000 {
            let a = AlphaSchedule::Simple.alpha_at(t);
            assert!(a > prev && a < 1.0);
            prev = a;
        }
    }

    #[test]
    fn mixing_row_examples() {
        let alone = mixing_row(4, &[4], |_| None).unwrap();
        assert_eq!(alone.weights, vec![(4, 1.0)]);

        let row = mixing_row(0, &[0, 1, 2], |b| [3, 2, 2].get(b).copied()).unwrap();
        assert_eq!(row.weight(1), 0.25);
        assert_eq!(row.weight(2), 0.25);
        assert_eq!(row.weight(0), 0.5);
        assert_eq!(row.weight(7), 0.0);

        let missing = mixing_row(0, &[0, 1], |_| None);
        assert!(matches!(missing, Err(Error::ProtocolViolation(_))));
        assert!(mixing_row(0, &[1, 2], |_| Some(2)).is_err());
    }

    #[test]
    fn lone_agent_is_purely_local() {
        let topo = single_class(Graph::empty(1));
        let mut e = engine(&topo, 1.0, RuleSpec::Oracle, AlphaSchedule::Simple);
        let mut s = RandomStream::from_seed(1);
        for _ in 0..50 {
            let x = s.uniform();
            e.round(&[x], &[s.uniform() - 0.5]).unwrap();
            assert_eq!(e.outputs()[0], e.local_means()[0]);
            assert_eq!(e.agent_state(0).class_est, vec![0]);
        }
    }

    #[test]
    fn connected_pair_falls_back_to_local() {
        let topo = single_class(Graph::complete(2));
        let mut e = engine(&topo, 2.0, RuleSpec::Oracle, AlphaSchedule::Simple);
        let mut s = RandomStream::from_seed(2);
        for _ in 0..30 {
            e.round(&[s.uniform(), s.uniform()], &[s.uniform(), s.uniform()]).unwrap();
            assert_eq!(e.outputs(), e.local_means());
            assert_eq!(e.agent_state(0).class_est, vec![0, 1]);
        }
        // consensus keeps evolving regardless
        assert_ne!(e.consensus_values()[0], e.local_means()[0]);
    }

    #[test]
    fn triangle_constant_data_closed_form() {
        let topo = single_class(Graph::complete(3));
        let mut e = engine(&topo, f64::INFINITY, RuleSpec::Oracle, AlphaSchedule::Simple);
        let mu = 0.4;
        assert!(e.consensus_values().iter().all(|&c| c == 0.0));
        for t in 1..=200u64 {
            e.round(&[mu; 3], &[0.0; 3]).unwrap();
            let expected = mu * t as f64 / (t as f64 + 1.0);
            for a in 0..3 {
                assert!((e.consensus_values()[a] - expected).abs() < 1e-12);
                assert_eq!(e.outputs()[a], e.consensus_values()[a]);
            }
        }
    }

    #[test]
    fn running_means_match_direct_sums() {
        let topo = single_class(Graph::complete(4));
        let mut e = engine(&topo, 1.0, RuleSpec::Oracle, AlphaSchedule::Simple);
        let mut s = RandomStream::from_seed(3);
        let mut sums = [0.0f64; 4];
        let mut noisy = [0.0f64; 4];
        for t in 1..=500 {
            let x: Vec<f64> = (0..4).map(|_| s.uniform()).collect();
            let z: Vec<f64> = (0..4).map(|_| s.uniform() - 0.5).collect();
            for a in 0..4 {
                sums[a] += x[a];
                noisy[a] += x[a] + z[a];
            }
            e.round(&x, &z).unwrap();
            for a in 0..4 {
                let st = e.agent_state(a);
                assert!((st.xbar - sums[a] / t as f64).abs() <= 1e-12 * (sums[a] / t as f64).abs().max(1e-3));
                assert!((st.xbar_noisy - noisy[a] / t as f64).abs() <= 1e-12 * (noisy[a] / t as f64).abs().max(1e-1));
            }
        }
    }

    #[test]
    fn oracle_keeps_clock_running_and_w_fixed() {
        let g = crate::topology::gen_random_regular(30, 4, &mut RandomStream::from_seed(5)).unwrap();
        let topo = Topology::with_random_classes(g, &[0.2, 0.4, 0.8], 5, 0).unwrap();
        let mut e = engine(&topo, 2.0, RuleSpec::Oracle, AlphaSchedule::Windowed { window: 10 });
        let mut s = RandomStream::from_seed(6);
        e.round(&vec![0.5; 30], &vec![0.0; 30]).unwrap();
        let rows: Vec<MixingRow> = (0..30).map(|a| e.mixing_row(a).unwrap()).collect();
        for t in 2..=40 {
            let x: Vec<f64> = (0..30).map(|_| s.uniform()).collect();
            e.round(&x, &vec![0.0; 30]).unwrap();
            for a in 0..30 {
                assert_eq!(e.agent_state(a).alpha_clock, t);
                assert_eq!(e.mixing_row(a).unwrap(), rows[a]);
                let st = e.agent_state(a);
                assert!(st.class_est.contains(&a));
                assert!(st.class_est.iter().all(|&b| b == a || topo.graph.has_edge(a, b)));
            }
        }
    }

    #[test]
    fn clock_resets_when_class_estimate_changes() {
        let topo = Topology::new(Graph::complete(2), vec![0, 1], vec![0.0, 1.0]).unwrap();
        let rule = RuleSpec::BernsteinTest { schedule: crate::rules::ThetaSchedule::new(1.0, 3.0, 0.2).unwrap() };
        let mut e = engine(&topo, f64::INFINITY, rule, AlphaSchedule::Windowed { window: 10 });
        e.round(&[0.5, 0.5], &[0.0, 0.0]).unwrap();
        assert_eq!(e.agent_state(0).class_est, vec![0, 1]);
        assert_eq!(e.agent_state(0).alpha_clock, 1);
        e.round(&[0.5, 0.5], &[0.0, 0.0]).unwrap();
        assert_eq!(e.agent_state(0).alpha_clock, 2);
        // a wildly different sample splits them
        e.round(&[0.0, 100.0], &[0.0, 0.0]).unwrap();
        assert_eq!(e.agent_state(1).class_est, vec![1]);
        assert_eq!(e.agent_state(1).alpha_clock, 1);
        assert_eq!(e.agent_state(0).alpha_clock, 1);
    }

    #[test]
    fn audit_sees_only_public_fields() {
        let g = crate::topology::gen_random_regular(10, 3, &mut RandomStream::from_seed(7)).unwrap();
        let topo = single_class(g);
        let mut e = engine(&topo, 1.0, RuleSpec::Oracle, AlphaSchedule::Simple);
        let mut audit = MessageAudit::default();
        for _ in 0..5 {
            e.round_observed(&[0.1; 10], &[0.2; 10], &mut audit).unwrap();
        }
        let directed = 2 * topo.graph.edge_count() as u64 * 5;
        assert_eq!(audit, MessageAudit { noisy_means: directed, class_sizes: directed, consensus: directed });
    }

    #[test]
    fn desynchronized_agents_abort() {
        let topo = single_class(Graph::complete(3));
        let mut e = engine(&topo, 1.0, RuleSpec::Oracle, AlphaSchedule::Simple);
        e.round(&[0.0; 3], &[0.0; 3]).unwrap();
        e.force_time(1, 5);
        assert!(matches!(e.round(&[0.0; 3], &[0.0; 3]), Err(Error::InvariantViolation(_))));
        assert!(e.round(&[0.0; 2], &[0.0; 3]).is_err());
    }

    #[test]
    fn average_preserved_on_k4() {
        let topo = single_class(Graph::complete(4));
        let mut e = engine(&topo, 1.0, RuleSpec::Oracle, AlphaSchedule::Simple);
        let mut s = RandomStream::from_seed(8);
        for t in 1..=50u64 {
            let before = e.consensus_values().to_vec();
            let x: Vec<f64> = (0..4).map(|_| s.uniform()).collect();
            let z: Vec<f64> = (0..4).map(|_| s.uniform() - 0.5).collect();
            e.round(&x, &z).unwrap();
            let alpha = AlphaSchedule::Simple.alpha_at(t);
            assert!(average_preservation_check(&[0, 1, 2, 3], &before, e.consensus_values(), e.noisy_means(), alpha));
            assert!(average_preservation_check(&[2], &[0.3; 4], &[0.3; 4], &[0.3; 4], 0.7));
        }
    }

    #[test]
    fn row_stochastic_only_mixing_breaks_average() {
        // mixing row-stochastic but not column-stochastic: agent 0 copies agent 1
        let before = [0.0, 1.0, 0.0];
        let noisy = [0.2, 0.4, 0.6];
        let alpha = 0.5;
        let w = [[0.0, 1.0, 0.0], [0.0, 0.5, 0.5], [0.0, 0.5, 0.5]];
        let after: Vec<f64> = (0..3)
            .map(|a| (1.0 - alpha) * noisy[a] + alpha * (0..3).map(|b| w[a][b] * before[b]).sum::<f64>())
            .collect();
        assert!(!average_preservation_check(&[0, 1, 2], &before, &after, &noisy, alpha));
    }
}
