use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::VariationError;
use crate::genome::init::{random_properties, uniform_weight};
use crate::genome::{Activation, EdgeGene, Genome, InnovationTracker, Memory, NodeGene, NodeId, Role};
use crate::scalar::Scalar;

/// Attempts made by the sampling-based structural operators before giving up.
pub const STRUCTURAL_RETRIES: usize = 32;

/// Per-offspring mutation probabilities.
///
/// Each offspring independently receives an edge addition with probability
/// `structural`, an edge removal with `removal_ratio * structural`, a node
/// addition with `add_node_scale * structural` and a node removal with
/// `removal_ratio * add_node_scale * structural`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MutationRates<T = f64> {
    /// The adapted rate `μ_t`.
    pub structural: T,
    /// Standard deviation of the Gaussian weight perturbation.
    pub sigma_w: T,
    /// Per-edge probability of a weight perturbation.
    pub p_weight: T,
    /// Per-node probability of switching activation (and, independently, memory).
    pub p_prop: T,
    pub add_node_scale: T,
    pub removal_ratio: T,
}

impl<T: Scalar> Default for MutationRates<T> {
    fn default() -> Self {
        Self {
            structural: T::cast(0.5),
            sigma_w: T::cast(0.1),
            p_weight: T::cast(0.8),
            p_prop: T::cast(0.03),
            add_node_scale: T::cast(0.25),
            removal_ratio: T::cast(0.8),
        }
    }
}

impl<T: Scalar> MutationRates<T> {
    pub fn validate(&self) -> Result<(), VariationError> {
        let probability = |name: &'static str, p: T| {
            if p >= T::zero() && p <= T::one() {
                Ok(())
            } else {
                Err(VariationError::Rate { name, value: p.as_f64() })
            }
        };
        probability("structural", self.structural)?;
        probability("p_weight", self.p_weight)?;
        probability("p_prop", self.p_prop)?;
        probability("add_node_scale", self.add_node_scale)?;
        probability("removal_ratio", self.removal_ratio)?;
        if !(self.sigma_w > T::zero() && self.sigma_w.is_finite()) {
            return Err(VariationError::Rate { name: "sigma_w", value: self.sigma_w.as_f64() });
        }
        Ok(())
    }

    pub fn add_edge_rate(&self) -> T {
        self.structural
    }

    pub fn remove_edge_rate(&self) -> T {
        self.removal_ratio * self.structural
    }

    pub fn add_node_rate(&self) -> T {
        self.add_node_scale * self.structural
    }

    pub fn remove_node_rate(&self) -> T {
        self.removal_ratio * self.add_node_rate()
    }
}

/// Which structural operators an offspring drew.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MutationReport {
    pub add_edge: bool,
    pub remove_edge: bool,
    pub add_node: bool,
    pub remove_node: bool,
}

fn chance<T: Scalar, R: Rng + ?Sized>(p: T, rng: &mut R) -> bool {
    rng.random::<f64>() < p.as_f64()
}

/// Full offspring mutation: structural operators drawn per [`MutationRates`],
/// then weight perturbation and property switching.
pub fn mutate<T: Scalar, R: Rng + ?Sized>(
    genome: &Genome<T>,
    rates: &MutationRates<T>,
    tracker: &mut InnovationTracker,
    rng: &mut R,
) -> (Genome<T>, MutationReport) {
    let mut g = genome.clone();
    let report = MutationReport {
        add_edge: chance(rates.add_edge_rate(), rng),
        remove_edge: chance(rates.remove_edge_rate(), rng),
        add_node: chance(rates.add_node_rate(), rng),
        remove_node: chance(rates.remove_node_rate(), rng),
    };
    if report.add_node {
        apply_add_node(&mut g, tracker, rng);
    }
    if report.add_edge {
        apply_add_edge(&mut g, rng);
    }
    if report.remove_node {
        apply_remove_node(&mut g, rng);
    }
    if report.remove_edge {
        apply_remove_edge(&mut g, rng);
    }
    apply_weights(&mut g, rates, rng);
    apply_properties(&mut g, rates, rng);
    (g, report)
}

/// Adds `Normal(0, sigma_w)` to each weight with probability `p_weight`.
pub fn mutate_weights<T: Scalar, R: Rng + ?Sized>(
    genome: &Genome<T>,
    rates: &MutationRates<T>,
    rng: &mut R,
) -> Genome<T> {
    let mut g = genome.clone();
    apply_weights(&mut g, rates, rng);
    g
}

fn apply_weights<T: Scalar, R: Rng + ?Sized>(g: &mut Genome<T>, rates: &MutationRates<T>, rng: &mut R) {
    if rates.p_weight <= T::zero() {
        return;
    }
    let normal = Normal::new(0.0, rates.sigma_w.as_f64()).expect("sigma_w validated positive");
    for edge in g.edges_mut() {
        if chance(rates.p_weight, rng) {
            edge.weight = edge.weight + T::cast(normal.sample(rng));
        }
    }
}

/// Inserts one new edge with a `Uniform[-1, 1]` weight between a random
/// non-output source and hidden/output target, skipping duplicates and
/// cycles. Unchanged if no legal pair turns up within [`STRUCTURAL_RETRIES`].
pub fn add_edge<T: Scalar, R: Rng + ?Sized>(genome: &Genome<T>, rng: &mut R) -> Genome<T> {
    let mut g = genome.clone();
    apply_add_edge(&mut g, rng);
    g
}

pub(crate) fn apply_add_edge<T: Scalar, R: Rng + ?Sized>(g: &mut Genome<T>, rng: &mut R) -> bool {
    let sources: Vec<NodeId> = g.nodes().iter().filter(|n| n.role != Role::Output).map(|n| n.id).collect();
    let targets: Vec<NodeId> = g.nodes().iter().filter(|n| !n.role.is_source()).map(|n| n.id).collect();
    if sources.is_empty() || targets.is_empty() {
        return false;
    }
    for _ in 0..STRUCTURAL_RETRIES {
        let s = sources[rng.random_range(0..sources.len())];
        let t = targets[rng.random_range(0..targets.len())];
        if s == t || g.has_edge(s, t) || g.reaches(t, s) {
            continue;
        }
        let w = uniform_weight(rng);
        return g.insert_edge(EdgeGene::new(s, t, w));
    }
    false
}

/// Deletes a random edge whose removal strands no node. Unchanged if none is
/// found within [`STRUCTURAL_RETRIES`].
pub fn remove_edge<T: Scalar, R: Rng + ?Sized>(genome: &Genome<T>, rng: &mut R) -> Genome<T> {
    let mut g = genome.clone();
    apply_remove_edge(&mut g, rng);
    g
}

pub(crate) fn apply_remove_edge<T: Scalar, R: Rng + ?Sized>(g: &mut Genome<T>, rng: &mut R) -> bool {
    if g.edges().is_empty() {
        return false;
    }
    for _ in 0..STRUCTURAL_RETRIES {
        let i = rng.random_range(0..g.edges().len());
        let e = g.edges()[i];
        // A hidden source keeps another way out; a hidden or output target
        // keeps another way in, which also keeps outputs reachable.
        let source_ok = g.node(e.source).is_some_and(|n| n.role != Role::Hidden) || g.outgoing(e.source).len() > 1;
        let target_ok = g.incoming(e.target).nth(1).is_some();
        if source_ok && target_ok {
            g.remove_edge_at(i);
            return true;
        }
    }
    false
}

/// Splits a random edge `s -> t` (weight `w`) into `s -> n` (weight 1) and
/// `n -> t` (weight `w`) through a new hidden node with random properties.
pub fn add_node<T: Scalar, R: Rng + ?Sized>(
    genome: &Genome<T>,
    tracker: &mut InnovationTracker,
    rng: &mut R,
) -> Genome<T> {
    let mut g = genome.clone();
    apply_add_node(&mut g, tracker, rng);
    g
}

pub(crate) fn apply_add_node<T: Scalar, R: Rng + ?Sized>(
    g: &mut Genome<T>,
    tracker: &mut InnovationTracker,
    rng: &mut R,
) -> bool {
    if g.edges().is_empty() {
        return false;
    }
    let i = rng.random_range(0..g.edges().len());
    let old = g.remove_edge_at(i);
    let mut id = tracker.split_id(old.source, old.target);
    if g.node(id).is_some() {
        id = tracker.fresh();
    }
    let (activation, memory) = random_properties(rng);
    g.insert_node(NodeGene::hidden(id, activation, memory));
    g.insert_edge(EdgeGene::new(old.source, id, T::one()));
    g.insert_edge(EdgeGene::new(id, old.target, old.weight));
    true
}

/// Deletes a random hidden node and wires each of its upstream nodes to each
/// of its downstream nodes with weight `clamp(w_in * w_out, -1, 1)`, skipping
/// pairs that are already connected.
pub fn remove_node<T: Scalar, R: Rng + ?Sized>(genome: &Genome<T>, rng: &mut R) -> Genome<T> {
    let mut g = genome.clone();
    apply_remove_node(&mut g, rng);
    g
}

pub(crate) fn apply_remove_node<T: Scalar, R: Rng + ?Sized>(g: &mut Genome<T>, rng: &mut R) -> bool {
    let hidden: Vec<NodeId> = g.ids_with_role(Role::Hidden).collect();
    if hidden.is_empty() {
        return false;
    }
    let victim = hidden[rng.random_range(0..hidden.len())];
    let upstream: Vec<(NodeId, T)> = g.incoming(victim).map(|e| (e.source, e.weight)).collect();
    let downstream: Vec<(NodeId, T)> = g.outgoing(victim).iter().map(|e| (e.target, e.weight)).collect();
    g.remove_node(victim);
    for &(u, w_in) in &upstream {
        for &(d, w_out) in &downstream {
            // u -> victim -> d existed, so u precedes d and the bypass is acyclic.
            if !g.has_edge(u, d) && !g.reaches(d, u) {
                let w = (w_in * w_out).max(-T::one()).min(T::one());
                g.insert_edge(EdgeGene::new(u, d, w));
            }
        }
    }
    true
}

/// Switches each hidden/output node's activation to one of the other two
/// kinds with probability `p_prop`, and independently its memory.
pub fn mutate_properties<T: Scalar, R: Rng + ?Sized>(
    genome: &Genome<T>,
    rates: &MutationRates<T>,
    rng: &mut R,
) -> Genome<T> {
    let mut g = genome.clone();
    apply_properties(&mut g, rates, rng);
    g
}

fn apply_properties<T: Scalar, R: Rng + ?Sized>(g: &mut Genome<T>, rates: &MutationRates<T>, rng: &mut R) {
    if rates.p_prop <= T::zero() {
        return;
    }
    for node in g.nodes_mut().iter_mut().filter(|n| !n.role.is_source()) {
        if chance(rates.p_prop, rng) {
            if let Some(current) = node.activation {
                let others: Vec<Activation> = Activation::ALL.into_iter().filter(|&a| a != current).collect();
                node.activation = Some(others[rng.random_range(0..others.len())]);
            }
        }
        if chance(rates.p_prop, rng) {
            let others: Vec<Memory> = Memory::ALL.into_iter().filter(|&m| m != node.memory).collect();
            node.memory = others[rng.random_range(0..others.len())];
        }
    }
}
