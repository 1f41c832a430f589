//! Monte Carlo replicas and their aggregation.

use std::borrow::Cow;
use std::collections::BTreeMap;

use rayon::prelude::*;

use super::config::{Estimator, ExperimentConfig};
use super::theory;
use crate::consensus::{running_mean_update, Engine};
use crate::error::{Error, Result};
use crate::rng::{Purpose, RandomStream, PINNED_TOPOLOGY_REPLICA};
use crate::rules::PublicStats;
use crate::topology::{corollary_rhs, Graph, Topology};

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "COLME_THREADS";

/// Per-round average MSE over replicas.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// `mse_mean[t − 1]` is the average over replicas of `(1/M) Σ_a (μ̂_a − μ_a)²` at round `t`.
    pub mse_mean: Vec<f64>,
    /// Standard error of `mse_mean`, treating replicas as the i.i.d. unit.
    pub mse_stderr: Vec<f64>,
    pub replica_count: u64,
    pub rule: String,
    pub epsilon: f64,
    pub degree: usize,
    pub num_agents: usize,
    pub master_seed: u64,
    pub config_hash: String,
}

impl RunResult {
    /// `mse_mean` at round `t` (1-based).
    pub fn mse_at(&self, t: u64) -> f64 {
        self.mse_mean[t as usize - 1]
    }

    pub fn stderr_at(&self, t: u64) -> f64 {
        self.mse_stderr[t as usize - 1]
    }
}

#[derive(Debug, Clone)]
enum TopologySource {
    Fixed(Topology),
    Graph(Graph),
    Random,
}

/// An experiment ready to run: config plus resolved topology source.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: ExperimentConfig,
    source: TopologySource,
}

impl Simulation {
    /// Resolves the topology: a graph file if one is configured, else random
    /// regular graphs. Without per-replica regeneration a single topology is
    /// drawn once and shared by all replicas.
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let graph = match &config.graph_file {
            Some(path) => {
                let file = std::fs::File::open(path)?;
                let g = Graph::read_edge_list(std::io::BufReader::new(file))?;
                if g.num_agents() != config.num_agents {
                    return Err(Error::Config(format!(
                        "graph file has {} agents but M = {}",
                        g.num_agents(),
                        config.num_agents
                    )));
                }
                Some(g)
            }
            None => None,
        };
        let source = match (graph, config.regenerate_topology) {
            (Some(g), true) => TopologySource::Graph(g),
            (Some(g), false) => TopologySource::Fixed(Topology::with_random_classes(
                g,
                &config.class_means,
                config.master_seed,
                PINNED_TOPOLOGY_REPLICA,
            )?),
            (None, true) => TopologySource::Random,
            (None, false) => TopologySource::Fixed(Topology::random(
                config.num_agents,
                config.degree,
                &config.class_means,
                config.master_seed,
                PINNED_TOPOLOGY_REPLICA,
            )?),
        };
        Ok(Self { config, source })
    }

    /// Runs every replica on the given topology.
    pub fn with_topology(config: ExperimentConfig, topology: Topology) -> Result<Self> {
        config.validate()?;
        if topology.num_agents() != config.num_agents {
            return Err(Error::Config(format!(
                "topology has {} agents but M = {}",
                topology.num_agents(),
                config.num_agents
            )));
        }
        Ok(Self { config, source: TopologySource::Fixed(topology) })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    /// Same topology source, different config (e.g. another rule or privacy level).
    pub fn with_config(&self, config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, source: self.source.clone() })
    }

    /// Topology used by `replica`.
    pub fn topology(&self, replica: u64) -> Result<Cow<'_, Topology>> {
        let c = &self.config;
        Ok(match &self.source {
            TopologySource::Fixed(t) => Cow::Borrowed(t),
            TopologySource::Graph(g) => {
                Cow::Owned(Topology::with_random_classes(g.clone(), &c.class_means, c.master_seed, replica)?)
            }
            TopologySource::Random => Cow::Owned(Topology::random(
                c.num_agents,
                c.degree,
                &c.class_means,
                c.master_seed,
                replica,
            )?),
        })
    }

    /// Per-round `(1/M) Σ_a (μ̂_a − μ_a)²` for one replica.
    pub fn replica_mse(&self, replica: u64) -> Result<Vec<f64>> {
        let topology = self.topology(replica)?;
        let c = &self.config;
        let m = c.num_agents;
        let half_range = c.half_range();
        let privacy = c.privacy()?;
        let mu: Vec<f64> = (0..m).map(|a| topology.classes.mean_of(a)).collect();
        let mut data: Vec<RandomStream> = (0..m)
            .map(|a| RandomStream::for_agent(c.master_seed, replica, a, Purpose::Data))
            .collect();
        let mut noise_streams: Vec<RandomStream> = (0..m)
            .map(|a| RandomStream::for_agent(c.master_seed, replica, a, Purpose::DpNoise))
            .collect();
        let mut samples = vec![0.0; m];
        let mut noise = vec![0.0; m];
        let mut errors = vec![0.0; m];
        let mut out = Vec::with_capacity(c.t_max as usize);

        let mut draw = |samples: &mut [f64]| {
            for a in 0..m {
                samples[a] = mu[a] - half_range + 2.0 * half_range * data[a].uniform();
            }
        };

        match c.estimator {
            Estimator::Local => {
                let mut xbar = vec![0.0; m];
                for t in 1..=c.t_max {
                    draw(&mut samples);
                    for a in 0..m {
                        xbar[a] = running_mean_update(xbar[a], samples[a], t);
                        errors[a] = (xbar[a] - mu[a]).powi(2);
                    }
                    out.push(pairwise_sum(&errors) / m as f64);
                }
            }
            Estimator::Collaborative(rule) => {
                let stats = vec![PublicStats { sigma: c.sigma, beta: half_range / (2.0 * 5f64.sqrt()) }; m];
                let mut engine = Engine::new(&topology, stats, privacy, rule, c.alpha)?;
                for _ in 1..=c.t_max {
                    draw(&mut samples);
                    for a in 0..m {
                        noise[a] = privacy.sample_noise(&mut noise_streams[a]);
                    }
                    engine.round(&samples, &noise)?;
                    for (a, est) in engine.outputs().iter().enumerate() {
                        errors[a] = (est - mu[a]).powi(2);
                    }
                    out.push(pairwise_sum(&errors) / m as f64);
                }
            }
        }
        Ok(out)
    }

    /// Runs all replicas using the pool size from `COLME_THREADS` (default: all cores).
    pub fn run(&self) -> Result<RunResult> {
        self.run_with_threads(threads_from_env())
    }

    /// Runs all replicas on `threads` workers (`None` for rayon's default).
    ///
    /// Per-replica trajectories are collected in replica order and reduced
    /// sequentially, so the result does not depend on the worker count.
    pub fn run_with_threads(&self, threads: Option<usize>) -> Result<RunResult> {
        let replicas = self.config.replicas;
        let trajectories: Vec<Vec<f64>> = with_pool(threads, || {
            (0..replicas).into_par_iter().map(|r| self.replica_mse(r)).collect::<Result<Vec<_>>>()
        })??;
        let (mse_mean, mse_stderr) = aggregate(&trajectories, self.config.t_max as usize);
        let c = &self.config;
        Ok(RunResult {
            mse_mean,
            mse_stderr,
            replica_count: replicas,
            rule: c.estimator.name().to_string(),
            epsilon: c.epsilon,
            degree: c.degree,
            num_agents: c.num_agents,
            master_seed: c.master_seed,
            config_hash: c.config_hash(),
        })
    }

    /// The benchmark constants of the replicas' topologies, averaged over replicas.
    pub fn theory_constants(&self) -> Result<TheoryConstants> {
        let c = &self.config;
        let privacy = c.privacy()?;
        let sigma_sq = c.sigma_sq_of();
        let per_replica: Vec<[f64; 2]> = if let TopologySource::Fixed(_) = self.source {
            let t = self.topology(0)?;
            vec![[
                theory::ideal_constant(&t.classes, &sigma_sq),
                theory::theorem1_constant(&t.classes, &sigma_sq, &privacy),
            ]]
        } else {
            with_pool(threads_from_env(), || {
                (0..c.replicas)
                    .into_par_iter()
                    .map(|r| {
                        let t = self.topology(r)?;
                        Ok([
                            theory::ideal_constant(&t.classes, &sigma_sq),
                            theory::theorem1_constant(&t.classes, &sigma_sq, &privacy),
                        ])
                    })
                    .collect::<Result<Vec<_>>>()
            })??
        };
        let n = per_replica.len() as f64;
        let col = |i: usize| pairwise_sum(&per_replica.iter().map(|v| v[i]).collect::<Vec<_>>()) / n;
        Ok(TheoryConstants { local: theory::local_constant(&sigma_sq), ideal: col(0), theorem1: col(1) })
    }
}

/// Leading `1/t` coefficients of the analytic curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryConstants {
    pub local: f64,
    pub ideal: f64,
    pub theorem1: f64,
}

/// Component-size histogram and corollary bound statistics over random topologies.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphStats {
    pub samples: u64,
    /// Number of agents (summed over samples) with each component size.
    pub component_size_histogram: BTreeMap<usize, u64>,
    /// Mean of the finite corollary bounds.
    pub mean_corollary_rhs: f64,
    pub corollary_rhs_stderr: f64,
    /// Samples where no agent had a component of size 3 or more.
    pub infinite_rhs_samples: u64,
}

/// Draws `samples` topologies as the config's replicas would and summarizes them.
pub fn graph_stats(config: &ExperimentConfig, samples: u64) -> Result<GraphStats> {
    if samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let mut cfg = config.clone();
    cfg.regenerate_topology = true;
    let sim = Simulation::new(cfg)?;
    let sigma_sq = config.sigma_sq_of();
    let draws: Vec<(Vec<usize>, f64)> = with_pool(threads_from_env(), || {
        (0..samples)
            .into_par_iter()
            .map(|r| {
                let t = sim.topology(r)?;
                Ok((t.classes.component_sizes().to_vec(), corollary_rhs(&t.classes, &sigma_sq)))
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let mut histogram = BTreeMap::new();
    for (sizes, _) in &draws {
        for &n in sizes {
            *histogram.entry(n).or_insert(0) += 1;
        }
    }
    let finite: Vec<f64> = draws.iter().map(|d| d.1).filter(|v| v.is_finite()).collect();
    let (mean, stderr) = mean_and_stderr(&finite);
    Ok(GraphStats {
        samples,
        component_size_histogram: histogram,
        mean_corollary_rhs: mean,
        corollary_rhs_stderr: stderr,
        infinite_rhs_samples: samples - finite.len() as u64,
    })
}

/// Pool size from `COLME_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvariantViolation(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Sum by recursive halving, for accumulations over many replicas.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        values.iter().sum()
    } else {
        let (lo, hi) = values.split_at(values.len() / 2);
        pairwise_sum(lo) + pairwise_sum(hi)
    }
}

/// Sample mean and standard error of the mean (0 for fewer than two values).
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, 0.0);
    }
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    let var = pairwise_sum(&sq) / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn aggregate(trajectories: &[Vec<f64>], t_max: usize) -> (Vec<f64>, Vec<f64>) {
    let mut column = vec![0.0; trajectories.len()];
    (0..t_max)
        .map(|t| {
            for (slot, traj) in column.iter_mut().zip(trajectories) {
                *slot = traj[t];
            }
            mean_and_stderr(&column)
        })
        .unzip()
}
