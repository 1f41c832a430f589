//! Communication graphs, class assignment, and same-class components.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{Purpose, RandomStream};

/// Restart budget for the random regular graph generator.
pub const MAX_RESTARTS: usize = 10_000;

/// Undirected simple graph on agents `0..M`, stored as sorted neighbor lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    assumed_degree: usize,
}

impl Graph {
    /// Builds a graph from an edge list, rejecting self-loops, duplicates and
    /// out-of-range endpoints. The assumed degree defaults to the maximum degree.
    pub fn from_edges<I>(num_agents: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adjacency = vec![Vec::new(); num_agents];
        let mut seen = HashSet::new();
        for (a, b) in edges {
            if a >= num_agents || b >= num_agents {
                return Err(Error::invalid(format!("edge ({a}, {b}) out of range for M = {num_agents}")));
            }
            if a == b {
                return Err(Error::invalid(format!("self-loop at agent {a}")));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::invalid(format!("duplicate edge ({a}, {b})")));
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let assumed_degree = adjacency.iter().map(Vec::len).max().unwrap_or(0);
        Ok(Self { adjacency, assumed_degree })
    }

    /// `M` isolated agents.
    pub fn empty(num_agents: usize) -> Self {
        Self { adjacency: vec![Vec::new(); num_agents], assumed_degree: 0 }
    }

    pub fn complete(num_agents: usize) -> Self {
        let adjacency = (0..num_agents)
            .map(|a| (0..num_agents).filter(|&b| b != a).collect())
            .collect();
        Self { adjacency, assumed_degree: num_agents.saturating_sub(1) }
    }

    /// Overrides the regularity `r` assumed by rules that need it.
    pub fn with_assumed_degree(mut self, r: usize) -> Self {
        self.assumed_degree = r;
        self
    }

    pub fn num_agents(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, a: usize) -> &[usize] {
        &self.adjacency[a]
    }

    pub fn degree(&self, a: usize) -> usize {
        self.adjacency[a].len()
    }

    pub fn assumed_degree(&self) -> usize {
        self.assumed_degree
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    /// Edges as `(a, b)` with `a < b`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, list)| list.iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// `Some(r)` when every vertex has degree `r`.
    pub fn regular_degree(&self) -> Option<usize> {
        let first = self.adjacency.first().map_or(0, Vec::len);
        self.adjacency.iter().all(|l| l.len() == first).then_some(first)
    }

    /// Writes the edge-list format: a header line `M r`, then one `a b` line per edge with `a < b`.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.num_agents(), self.assumed_degree)?;
        for (a, b) in self.edges() {
            writeln!(out, "{a} {b}")?;
        }
        Ok(())
    }

    pub fn to_edge_list(&self) -> String {
        let mut buf = Vec::new();
        self.write_edge_list(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("edge list is ASCII")
    }

    /// Parses the edge-list format. The header's `r` becomes the assumed degree;
    /// the graph itself need not be regular.
    pub fn read_edge_list<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
        let header = lines.next().ok_or_else(|| Error::invalid("edge list is empty"))??;
        let (m, r) = parse_pair(&header)?;
        let mut edges = Vec::new();
        for line in lines {
            let line = line?;
            let (a, b) = parse_pair(&line)?;
            if a >= b {
                return Err(Error::invalid(format!("edge line `{line}` must have a < b")));
            }
            edges.push((a, b));
        }
        Ok(Self::from_edges(m, edges)?.with_assumed_degree(r))
    }

    pub fn parse_edge_list(text: &str) -> Result<Self> {
        Self::read_edge_list(text.as_bytes())
    }
}

fn parse_pair(line: &str) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace().map(str::parse::<usize>);
    match (it.next(), it.next(), it.next()) {
        (Some(Ok(a)), Some(Ok(b)), None) => Ok((a, b)),
        _ => Err(Error::invalid(format!("expected two non-negative integers, got `{line}`"))),
    }
}

/// Random `r`-regular simple graph on `M` vertices.
///
/// Stubs are paired in shuffled batches; a pairing that would create a self-loop
/// or a repeated edge is set aside, and the set-aside stubs are reshuffled and
/// paired again. When the remaining stubs admit no valid pair the whole attempt
/// restarts from scratch.
pub fn gen_random_regular(num_agents: usize, r: usize, stream: &mut RandomStream) -> Result<Graph> {
    if r == 0 || r >= num_agents {
        return Err(Error::invalid(format!("need 1 <= r < M, got M = {num_agents}, r = {r}")));
    }
    if num_agents * r % 2 != 0 {
        return Err(Error::invalid(format!("M·r must be even, got M = {num_agents}, r = {r}")));
    }
    for _ in 0..MAX_RESTARTS {
        if let Some(edges) = try_pairing(num_agents, r, stream) {
            let graph = Graph::from_edges(num_agents, edges)?.with_assumed_degree(r);
            debug_assert_eq!(graph.regular_degree(), Some(r));
            return Ok(graph);
        }
    }
    Err(Error::GenerationFailure { restarts: MAX_RESTARTS, num_agents, degree: r })
}

fn try_pairing(num_agents: usize, r: usize, stream: &mut RandomStream) -> Option<Vec<(usize, usize)>> {
    let mut edges: HashSet<(usize, usize)> = HashSet::with_capacity(num_agents * r / 2);
    let mut ordered = Vec::with_capacity(num_agents * r / 2);
    let mut stubs: Vec<usize> = (0..num_agents).flat_map(|v| std::iter::repeat_n(v, r)).collect();
    while !stubs.is_empty() {
        stubs.shuffle(stream.rng());
        let mut leftover: BTreeMap<usize, usize> = BTreeMap::new();
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if a != b && edges.insert((a, b)) {
                ordered.push((a, b));
            } else {
                *leftover.entry(a).or_default() += 1;
                *leftover.entry(b).or_default() += 1;
            }
        }
        if !leftover_is_pairable(&edges, &leftover) {
            return None;
        }
        stubs = leftover.iter().flat_map(|(&v, &count)| std::iter::repeat_n(v, count)).collect();
    }
    Some(ordered)
}

fn leftover_is_pairable(edges: &HashSet<(usize, usize)>, leftover: &BTreeMap<usize, usize>) -> bool {
    if leftover.is_empty() {
        return true;
    }
    let vertices: Vec<usize> = leftover.keys().copied().collect();
    vertices
        .iter()
        .enumerate()
        .any(|(i, &a)| vertices[i + 1..].iter().any(|&b| !edges.contains(&(a, b))))
}

/// Independent uniform class index per agent.
pub fn assign_classes_uniform(num_agents: usize, num_classes: usize, stream: &mut RandomStream) -> Result<Vec<usize>> {
    if num_classes == 0 {
        return Err(Error::invalid("at least one class is required"));
    }
    Ok((0..num_agents).map(|_| stream.index(num_classes)).collect())
}

/// Class means plus the per-agent similarity classes and same-class components.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassStructure {
    class_of: Vec<usize>,
    mu_of_class: Vec<f64>,
    /// Lowest agent index in each agent's component.
    component_of: Vec<usize>,
    component_size: Vec<usize>,
}

impl ClassStructure {
    /// Computes components by breadth-first search over edges whose endpoints
    /// share a mean. Agents in distinct classes with equal means count as one class.
    pub fn build(graph: &Graph, class_of: Vec<usize>, mu_of_class: Vec<f64>) -> Result<Self> {
        let m = graph.num_agents();
        if class_of.len() != m {
            return Err(Error::invalid(format!("{} class labels for {m} agents", class_of.len())));
        }
        if let Some(&c) = class_of.iter().find(|&&c| c >= mu_of_class.len()) {
            return Err(Error::invalid(format!("class index {c} out of range")));
        }
        if mu_of_class.iter().any(|mu| !mu.is_finite()) {
            return Err(Error::invalid("class means must be finite"));
        }
        let mu = |a: usize| mu_of_class[class_of[a]];
        let mut component_of = vec![usize::MAX; m];
        let mut component_size = vec![0; m];
        let mut queue = VecDeque::new();
        for root in 0..m {
            if component_of[root] != usize::MAX {
                continue;
            }
            let mut members = vec![root];
            component_of[root] = root;
            queue.push_back(root);
            while let Some(a) = queue.pop_front() {
                for &b in graph.neighbors(a) {
                    if component_of[b] == usize::MAX && mu(b) == mu(root) {
                        component_of[b] = root;
                        members.push(b);
                        queue.push_back(b);
                    }
                }
            }
            for &a in &members {
                component_size[a] = members.len();
            }
        }
        Ok(Self { class_of, mu_of_class, component_of, component_size })
    }

    pub fn num_agents(&self) -> usize {
        self.class_of.len()
    }

    pub fn class_of(&self, a: usize) -> usize {
        self.class_of[a]
    }

    pub fn class_labels(&self) -> &[usize] {
        &self.class_of
    }

    pub fn class_means(&self) -> &[f64] {
        &self.mu_of_class
    }

    pub fn mean_of(&self, a: usize) -> f64 {
        self.mu_of_class[self.class_of[a]]
    }

    pub fn same_class(&self, a: usize, b: usize) -> bool {
        self.mean_of(a) == self.mean_of(b)
    }

    /// All agents sharing `a`'s mean.
    pub fn similarity_class(&self, a: usize) -> Vec<usize> {
        (0..self.num_agents()).filter(|&b| self.same_class(a, b)).collect()
    }

    /// Identifier of `a`'s component (its lowest member).
    pub fn component_id(&self, a: usize) -> usize {
        self.component_of[a]
    }

    /// Members of `a`'s component, ascending.
    pub fn component(&self, a: usize) -> Vec<usize> {
        let id = self.component_of[a];
        (0..self.num_agents()).filter(|&b| self.component_of[b] == id).collect()
    }

    /// `n_a`, the size of `a`'s component.
    pub fn component_size(&self, a: usize) -> usize {
        self.component_size[a]
    }

    pub fn component_sizes(&self) -> &[usize] {
        &self.component_size
    }
}

/// A graph together with its class structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub graph: Graph,
    pub classes: ClassStructure,
}

impl Topology {
    pub fn new(graph: Graph, class_of: Vec<usize>, class_means: Vec<f64>) -> Result<Self> {
        let classes = ClassStructure::build(&graph, class_of, class_means)?;
        Ok(Self { graph, classes })
    }

    /// Random `r`-regular graph and i.i.d. uniform class labels, drawn from the
    /// replica's graph and assignment streams.
    pub fn random(num_agents: usize, r: usize, class_means: &[f64], master_seed: u64, replica: u64) -> Result<Self> {
        let mut graph_stream = RandomStream::for_replica(master_seed, replica, Purpose::Graph);
        let mut assign_stream = RandomStream::for_replica(master_seed, replica, Purpose::Assignment);
        let graph = gen_random_regular(num_agents, r, &mut graph_stream)?;
        let class_of = assign_classes_uniform(num_agents, class_means.len(), &mut assign_stream)?;
        Self::new(graph, class_of, class_means.to_vec())
    }

    /// Random class labels on a given graph.
    pub fn with_random_classes(graph: Graph, class_means: &[f64], master_seed: u64, replica: u64) -> Result<Self> {
        let mut assign_stream = RandomStream::for_replica(master_seed, replica, Purpose::Assignment);
        let class_of = assign_classes_uniform(graph.num_agents(), class_means.len(), &mut assign_stream)?;
        Self::new(graph, class_of, class_means.to_vec())
    }

    pub fn num_agents(&self) -> usize {
        self.graph.num_agents()
    }
}

/// Largest DP noise variance for which collaboration beats local estimation:
///
/// ```text
/// Σ_{n_a ≥ 3} σ_a²(1 − 2/n_a)  /  (2 Σ_{n_a ≥ 3} 1/n_a)
/// ```
///
/// Returns `+∞` when no agent has `n_a ≥ 3`.
pub fn corollary_rhs(structure: &ClassStructure, sigma_sq_of: &[f64]) -> f64 {
    let (num, den) = (0..structure.num_agents())
        .map(|a| (structure.component_size(a), sigma_sq_of[a]))
        .filter(|&(n, _)| n >= 3)
        .fold((0.0, 0.0), |(num, den), (n, s2)| {
            let n = n as f64;
            (num + s2 * (1.0 - 2.0 / n), den + 1.0 / n)
        });
    if den == 0.0 {
        f64::INFINITY
    } else {
        num / (2.0 * den)
    }
}
