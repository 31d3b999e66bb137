//! Population diversity: a type-count distance between genomes, the length of
//! the population's minimum spanning tree under that distance, a linearly
//! decaying diversity target, and the tournament-ratio controller that tracks
//! it.

use rayon::prelude::*;
use thiserror::Error;

use crate::genome::{Genome, NodeGene, Role};
use crate::scalar::Scalar;

/// One bucket for inputs and the bias, then `(activation, memory)` buckets
/// for hidden nodes and again for outputs.
pub const NODE_TYPE_COUNT: usize = 1 + 2 * 3 * 3;

/// Weight on node-type count differences.
pub const NODE_WEIGHT: f64 = 0.5;
/// Weight on edge-type count differences.
pub const EDGE_WEIGHT: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum DiversityError {
    #[error("diversity needs at least 2 genomes, got {0}")]
    TooFewGenomes(usize),
    #[error("invalid diversity parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeTypeKey(u8);

impl NodeTypeKey {
    pub fn of(node: &NodeGene) -> Self {
        let props = |n: &NodeGene| {
            let a = n.activation.map_or(0, |a| a.index());
            a * 3 + n.memory.order()
        };
        let index = match node.role {
            Role::Input | Role::Bias => 0,
            Role::Hidden => 1 + props(node),
            Role::Output => 10 + props(node),
        };
        NodeTypeKey(index as u8)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Node counts per type and edge counts per `(source type, target type)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeProfile {
    nodes: [u32; NODE_TYPE_COUNT],
    edges: Vec<u32>,
}

impl TypeProfile {
    pub fn of<T: Scalar>(genome: &Genome<T>) -> Self {
        let mut nodes = [0u32; NODE_TYPE_COUNT];
        for n in genome.nodes() {
            nodes[NodeTypeKey::of(n).index()] += 1;
        }
        let mut edges = vec![0u32; NODE_TYPE_COUNT * NODE_TYPE_COUNT];
        for e in genome.edges() {
            if let (Some(s), Some(t)) = (genome.node(e.source), genome.node(e.target)) {
                edges[NodeTypeKey::of(s).index() * NODE_TYPE_COUNT + NodeTypeKey::of(t).index()] += 1;
            }
        }
        Self { nodes, edges }
    }

    pub fn node_count(&self, key: NodeTypeKey) -> u32 {
        self.nodes[key.index()]
    }

    pub fn edge_count(&self, from: NodeTypeKey, to: NodeTypeKey) -> u32 {
        self.edges[from.index() * NODE_TYPE_COUNT + to.index()]
    }

    /// Weighted L1 distance between profiles.
    pub fn distance<T: Scalar>(&self, other: &Self) -> T {
        let node_diff: u64 = self.nodes.iter().zip(&other.nodes).map(|(&a, &b)| a.abs_diff(b) as u64).sum();
        let edge_diff: u64 = self.edges.iter().zip(&other.edges).map(|(&a, &b)| a.abs_diff(b) as u64).sum();
        T::cast(NODE_WEIGHT * node_diff as f64 + EDGE_WEIGHT * edge_diff as f64)
    }
}

pub fn genome_distance<T: Scalar>(a: &Genome<T>, b: &Genome<T>) -> T {
    TypeProfile::of(a).distance(&TypeProfile::of(b))
}

/// Symmetric pairwise distances with a zero diagonal, stored as the strict
/// upper triangle.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix<T = f64> {
    n: usize,
    upper: Vec<T>,
}

impl<T: Scalar> DistanceMatrix<T> {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut upper = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                upper.push(f(i, j));
            }
        }
        Self { n, upper }
    }

    /// Genome distances for a whole population, rows computed in parallel.
    pub fn from_population(population: &[Genome<T>]) -> Self {
        let profiles: Vec<TypeProfile> = population.par_iter().map(TypeProfile::of).collect();
        let n = profiles.len();
        let rows: Vec<Vec<T>> = (0..n)
            .into_par_iter()
            .map(|i| (i + 1..n).map(|j| profiles[i].distance(&profiles[j])).collect())
            .collect();
        Self { n, upper: rows.into_iter().flatten().collect() }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Equal => T::zero(),
            Less => self.upper[self.offset(i, j)],
            Greater => self.upper[self.offset(j, i)],
        }
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        // Row i starts after rows 0..i, which hold (n-1) + ... + (n-i) entries.
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }
}

/// Disjoint-set forest with path compression and union by rank.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), rank: vec![0; n] }
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Merges the sets of `a` and `b`; false if they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpanningTree<T> {
    /// Tree edges `(i, j, length)` with `i < j`, in the order Kruskal accepted them.
    pub edges: Vec<(usize, usize, T)>,
    pub total: T,
}

/// Kruskal's algorithm on the complete graph described by `distances`.
/// Equal lengths are taken in lexicographic `(i, j)` order.
pub fn minimum_spanning_tree<T: Scalar>(distances: &DistanceMatrix<T>) -> SpanningTree<T> {
    let n = distances.len();
    let mut candidates: Vec<(T, usize, usize)> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            candidates.push((distances.get(i, j), i, j));
        }
    }
    candidates.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then((a.1, a.2).cmp(&(b.1, b.2)))
    });

    let mut sets = UnionFind::new(n);
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut total = T::zero();
    for (d, i, j) in candidates {
        if sets.union(i, j) {
            edges.push((i, j, d));
            total = total + d;
            if edges.len() + 1 == n {
                break;
            }
        }
    }
    SpanningTree { edges, total }
}

/// Total MST length `D_t` over the population's pairwise genome distances.
pub fn population_diversity<T: Scalar>(population: &[Genome<T>]) -> Result<T, DiversityError> {
    if population.len() < 2 {
        return Err(DiversityError::TooFewGenomes(population.len()));
    }
    Ok(minimum_spanning_tree(&DistanceMatrix::from_population(population)).total)
}

/// Diversity measured at `generation`, its target, and the ratio in force
/// afterwards.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiversityRecord<T> {
    pub generation: usize,
    pub measured: T,
    pub desired: T,
    pub ratio: T,
}

/// Controller state for tournament-ratio diversity regulation.
#[derive(Clone, Debug, PartialEq)]
pub struct DiversityState<T = f64> {
    /// Diversity of the initial population.
    pub d_init: T,
    /// `β_Div ≥ 1`; larger keeps more diversity at `t_max`.
    pub beta_div: T,
    pub t_max: usize,
    /// Gain `K_D`.
    pub k_d: T,
    pub ratio: T,
    pub ratio_min: T,
    pub ratio_max: T,
    pub history: Vec<DiversityRecord<T>>,
}

impl<T: Scalar> DiversityState<T> {
    /// Starts the controller from the measured initial diversity.
    pub fn new(d_init: T, beta_div: T, t_max: usize, k_d: T, initial_ratio: T) -> Result<Self, DiversityError> {
        if !(d_init >= T::zero() && d_init.is_finite()) {
            return Err(DiversityError::InvalidParameter(format!("d_init = {d_init}")));
        }
        if !(beta_div >= T::one() && beta_div.is_finite()) {
            return Err(DiversityError::InvalidParameter(format!("beta_div = {beta_div} < 1")));
        }
        if !(k_d > T::zero() && k_d.is_finite()) {
            return Err(DiversityError::InvalidParameter(format!("k_d = {k_d}")));
        }
        let (ratio_min, ratio_max) = (T::cast(0.02), T::one());
        if !(initial_ratio > T::zero() && initial_ratio <= T::one()) {
            return Err(DiversityError::InvalidParameter(format!("initial ratio = {initial_ratio}")));
        }
        let ratio = initial_ratio.max(ratio_min).min(ratio_max);
        Ok(Self {
            d_init,
            beta_div,
            t_max,
            k_d,
            ratio,
            ratio_min,
            ratio_max,
            history: vec![DiversityRecord { generation: 0, measured: d_init, desired: d_init, ratio }],
        })
    }

    /// Overrides the ratio clamp (default `[0.02, 1]`).
    pub fn with_ratio_bounds(mut self, min: T, max: T) -> Result<Self, DiversityError> {
        if !(min > T::zero() && min <= max && max <= T::one()) {
            return Err(DiversityError::InvalidParameter(format!("ratio bounds [{min}, {max}]")));
        }
        self.ratio_min = min;
        self.ratio_max = max;
        self.ratio = self.ratio.max(min).min(max);
        if let Some(first) = self.history.first_mut() {
            first.ratio = self.ratio;
        }
        Ok(self)
    }

    /// `D_d,t = D_init · (β·t_max − t) / (β·t_max)`.
    pub fn desired_diversity(&self, t: usize) -> T {
        let horizon = self.beta_div * T::cast(self.t_max as f64);
        if horizon <= T::zero() {
            return self.d_init;
        }
        self.d_init * (T::one() - T::cast(t as f64) / horizon)
    }

    /// `ratio_t = clamp(ratio_{t-1} · exp(−K_D (D_t − D_d,t)))`, recorded in history.
    pub fn update_ratio(&mut self, measured: T, t: usize) -> T {
        let desired = self.desired_diversity(t);
        let next = self.ratio * (-self.k_d * (measured - desired)).exp();
        self.ratio = next.max(self.ratio_min).min(self.ratio_max);
        self.history.push(DiversityRecord { generation: t, measured, desired, ratio: self.ratio });
        self.ratio
    }

    /// Records a generation without changing the ratio (controller disabled).
    pub fn record(&mut self, measured: T, t: usize) {
        let desired = self.desired_diversity(t);
        self.history.push(DiversityRecord { generation: t, measured, desired, ratio: self.ratio });
    }
}
