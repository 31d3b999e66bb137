//! Direct genome encoding: node genes carrying activation and memory
//! properties, and weighted edge genes forming a feedforward DAG.

mod format;
pub(crate) mod init;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::scalar::Scalar;

pub use format::{deserialize, serialize, ParseError, ParseErrorKind, GENOME_HEADER};
pub use init::{init_population, InitConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Input,
    Bias,
    Hidden,
    Output,
}

impl Role {
    /// Input and bias nodes only emit values; they never receive edges.
    pub fn is_source(self) -> bool {
        matches!(self, Role::Input | Role::Bias)
    }

    pub fn name(self) -> &'static str {
        match self {
            Role::Input => "input",
            Role::Bias => "bias",
            Role::Hidden => "hidden",
            Role::Output => "output",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Activation {
    /// `1 / (1 + e^(-4.9x))`, the steepened sigmoid of classic NEAT.
    ModifiedSigmoid,
    /// `clamp(x, -1, 1)`.
    SaturatedLinear,
    /// `1 / (1 + e^(-x))`.
    Sigmoid,
}

impl Activation {
    pub const ALL: [Activation; 3] = [
        Activation::ModifiedSigmoid,
        Activation::SaturatedLinear,
        Activation::Sigmoid,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::ModifiedSigmoid => "modified_sigmoid",
            Activation::SaturatedLinear => "saturated_linear",
            Activation::Sigmoid => "sigmoid",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == name)
    }

    #[inline]
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::ModifiedSigmoid => T::one() / (T::one() + (-T::cast(4.9) * x).exp()),
            Activation::SaturatedLinear => x.max(-T::one()).min(T::one()),
            Activation::Sigmoid => T::one() / (T::one() + (-x).exp()),
        }
    }
}

/// How many past net inputs a node differentiates over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Memory {
    /// Uses the current weighted input.
    Current = 0,
    /// First temporal difference quotient of the weighted input.
    FirstDifference = 1,
    /// Second temporal difference quotient of the weighted input.
    SecondDifference = 2,
}

impl Memory {
    pub const ALL: [Memory; 3] = [
        Memory::Current,
        Memory::FirstDifference,
        Memory::SecondDifference,
    ];

    pub fn order(self) -> usize {
        self as usize
    }

    pub fn from_order(order: u8) -> Option<Self> {
        Self::ALL.get(order as usize).copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeGene {
    pub id: NodeId,
    pub role: Role,
    /// `None` exactly for input and bias nodes.
    pub activation: Option<Activation>,
    pub memory: Memory,
}

impl NodeGene {
    pub fn input(id: NodeId) -> Self {
        Self { id, role: Role::Input, activation: None, memory: Memory::Current }
    }

    pub fn bias(id: NodeId) -> Self {
        Self { id, role: Role::Bias, activation: None, memory: Memory::Current }
    }

    pub fn hidden(id: NodeId, activation: Activation, memory: Memory) -> Self {
        Self { id, role: Role::Hidden, activation: Some(activation), memory }
    }

    pub fn output(id: NodeId, activation: Activation, memory: Memory) -> Self {
        Self { id, role: Role::Output, activation: Some(activation), memory }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeGene<T = f64> {
    pub source: NodeId,
    pub target: NodeId,
    pub weight: T,
    /// Reserved; every edge is currently enabled.
    pub enabled: bool,
}

impl<T> EdgeGene<T> {
    pub fn new(source: NodeId, target: NodeId, weight: T) -> Self {
        Self { source, target, weight, enabled: true }
    }

    pub fn key(&self) -> (NodeId, NodeId) {
        (self.source, self.target)
    }
}

/// A structural rule broken by a genome.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("duplicate edge {0}->{1}")]
    DuplicateEdge(NodeId, NodeId),
    #[error("unknown node {node} referenced by edge {from}->{to}")]
    UnknownNode { from: NodeId, to: NodeId, node: NodeId },
    #[error("edge {0}->{1} targets an input or bias node")]
    EdgeIntoSource(NodeId, NodeId),
    #[error("edge {0}->{1} leaves an output node")]
    EdgeFromOutput(NodeId, NodeId),
    #[error("cycle through node {0}")]
    Cycle(NodeId),
    #[error("floating node {0}")]
    FloatingNode(NodeId),
    #[error("output {0} unreachable from any input or bias")]
    UnreachableOutput(NodeId),
    #[error("input or bias node {0} must have no activation and memory 0")]
    SourceProperties(NodeId),
    #[error("node {0} has no activation")]
    MissingActivation(NodeId),
    #[error("genome has no input nodes")]
    NoInputs,
    #[error("genome has no output nodes")]
    NoOutputs,
    #[error("genome has {0} bias nodes, expected 1")]
    BiasCount(usize),
}

#[derive(Debug, Error)]
pub enum GenomeError {
    #[error("invalid initialization config: {0}")]
    InvalidConfig(String),
    #[error("invalid genome: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
}

pub(crate) fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// Direct encoding of one network.
///
/// Nodes are kept sorted by id and edges by `(source, target)`, so lookups are
/// binary searches and two genomes with the same content compare equal.
#[derive(Clone, Debug, PartialEq)]
pub struct Genome<T = f64> {
    nodes: Vec<NodeGene>,
    edges: Vec<EdgeGene<T>>,
    pub fitness: Option<T>,
    pub species_id: Option<usize>,
}

impl<T: Scalar> Genome<T> {
    /// Assembles a genome without checking structural rules; see [`Genome::validate`].
    pub fn from_parts(mut nodes: Vec<NodeGene>, mut edges: Vec<EdgeGene<T>>) -> Self {
        nodes.sort_by_key(|n| n.id);
        edges.sort_by_key(|e| e.key());
        Self { nodes, edges, fitness: None, species_id: None }
    }

    /// Like [`Genome::from_parts`] but rejects anything `validate` reports.
    pub fn try_from_parts(nodes: Vec<NodeGene>, edges: Vec<EdgeGene<T>>) -> Result<Self, GenomeError> {
        let genome = Self::from_parts(nodes, edges);
        let report = genome.validate();
        if report.is_empty() {
            Ok(genome)
        } else {
            Err(GenomeError::Invalid(report))
        }
    }

    pub fn nodes(&self) -> &[NodeGene] {
        &self.nodes
    }

    pub fn edges(&self) -> &[EdgeGene<T>] {
        &self.edges
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeGene> {
        self.nodes.binary_search_by_key(&id, |n| n.id).ok().map(|i| &self.nodes[i])
    }

    #[cfg(test)]
    pub(crate) fn node_mut(&mut self, id: NodeId) -> Option<&mut NodeGene> {
        match self.nodes.binary_search_by_key(&id, |n| n.id) {
            Ok(i) => Some(&mut self.nodes[i]),
            Err(_) => None,
        }
    }

    pub fn edge(&self, source: NodeId, target: NodeId) -> Option<&EdgeGene<T>> {
        self.edge_index(source, target).map(|i| &self.edges[i])
    }

    pub fn has_edge(&self, source: NodeId, target: NodeId) -> bool {
        self.edge_index(source, target).is_some()
    }

    fn edge_index(&self, source: NodeId, target: NodeId) -> Option<usize> {
        self.edges.binary_search_by_key(&(source, target), |e| e.key()).ok()
    }

    /// Edges leaving `source`, contiguous because of the sort order.
    pub fn outgoing(&self, source: NodeId) -> &[EdgeGene<T>] {
        let start = self.edges.partition_point(|e| e.source < source);
        let end = self.edges.partition_point(|e| e.source <= source);
        &self.edges[start..end]
    }

    pub fn incoming(&self, target: NodeId) -> impl Iterator<Item = &EdgeGene<T>> + '_ {
        self.edges.iter().filter(move |e| e.target == target)
    }

    pub fn ids_with_role(&self, role: Role) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().filter(move |n| n.role == role).map(|n| n.id)
    }

    pub fn count_role(&self, role: Role) -> usize {
        self.nodes.iter().filter(|n| n.role == role).count()
    }

    pub fn hidden_count(&self) -> usize {
        self.count_role(Role::Hidden)
    }

    pub fn max_node_id(&self) -> Option<NodeId> {
        self.nodes.last().map(|n| n.id)
    }

    /// Same nodes, properties and edges (weights compared exactly); ignores
    /// fitness and species bookkeeping.
    pub fn same_structure(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges
    }

    pub(crate) fn insert_edge(&mut self, edge: EdgeGene<T>) -> bool {
        match self.edges.binary_search_by_key(&edge.key(), |e| e.key()) {
            Ok(_) => false,
            Err(pos) => {
                self.edges.insert(pos, edge);
                true
            }
        }
    }

    pub(crate) fn remove_edge_at(&mut self, index: usize) -> EdgeGene<T> {
        self.edges.remove(index)
    }

    pub(crate) fn edges_mut(&mut self) -> &mut [EdgeGene<T>] {
        &mut self.edges
    }

    pub(crate) fn nodes_mut(&mut self) -> &mut [NodeGene] {
        &mut self.nodes
    }

    pub(crate) fn insert_node(&mut self, node: NodeGene) -> bool {
        match self.nodes.binary_search_by_key(&node.id, |n| n.id) {
            Ok(_) => false,
            Err(pos) => {
                self.nodes.insert(pos, node);
                true
            }
        }
    }

    /// Removes a node together with every edge touching it.
    pub(crate) fn remove_node(&mut self, id: NodeId) {
        self.nodes.retain(|n| n.id != id);
        self.edges.retain(|e| e.source != id && e.target != id);
    }

    /// Whether `to` can be reached from `from` following edge direction.
    pub fn reaches(&self, from: NodeId, to: NodeId) -> bool {
        if from == to {
            return true;
        }
        let mut stack = vec![from];
        let mut seen = vec![from];
        while let Some(n) = stack.pop() {
            for e in self.outgoing(n) {
                if e.target == to {
                    return true;
                }
                if !seen.contains(&e.target) {
                    seen.push(e.target);
                    stack.push(e.target);
                }
            }
        }
        false
    }

    /// Topological order by Kahn's algorithm, lowest id first among ready
    /// nodes. `None` when the edges contain a cycle or dangle.
    pub fn topological_order(&self) -> Option<Vec<NodeId>> {
        let index: HashMap<NodeId, usize> =
            self.nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
        let mut indegree = vec![0usize; self.nodes.len()];
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            let (s, t) = (*index.get(&e.source)?, *index.get(&e.target)?);
            indegree[t] += 1;
            out[s].push(t);
        }
        // Min-heap on position, which is also id order.
        let mut ready: std::collections::BinaryHeap<std::cmp::Reverse<usize>> = indegree
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 0)
            .map(|(i, _)| std::cmp::Reverse(i))
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(std::cmp::Reverse(i)) = ready.pop() {
            order.push(self.nodes[i].id);
            for &t in &out[i] {
                indegree[t] -= 1;
                if indegree[t] == 0 {
                    ready.push(std::cmp::Reverse(t));
                }
            }
        }
        (order.len() == self.nodes.len()).then_some(order)
    }

    /// Every structural rule this genome breaks; empty when valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut report = Vec::new();

        for pair in self.nodes.windows(2) {
            if pair[0].id == pair[1].id {
                report.push(Violation::DuplicateNode(pair[0].id));
            }
        }
        for pair in self.edges.windows(2) {
            if pair[0].key() == pair[1].key() {
                report.push(Violation::DuplicateEdge(pair[0].source, pair[0].target));
            }
        }

        let inputs = self.count_role(Role::Input);
        let outputs = self.count_role(Role::Output);
        let biases = self.count_role(Role::Bias);
        if inputs == 0 {
            report.push(Violation::NoInputs);
        }
        if outputs == 0 {
            report.push(Violation::NoOutputs);
        }
        if biases != 1 {
            report.push(Violation::BiasCount(biases));
        }

        for n in &self.nodes {
            match n.role {
                Role::Input | Role::Bias => {
                    if n.activation.is_some() || n.memory != Memory::Current {
                        report.push(Violation::SourceProperties(n.id));
                    }
                }
                Role::Hidden | Role::Output => {
                    if n.activation.is_none() {
                        report.push(Violation::MissingActivation(n.id));
                    }
                }
            }
        }

        let mut dangling = false;
        for e in &self.edges {
            for id in [e.source, e.target] {
                if self.node(id).is_none() {
                    dangling = true;
                    report.push(Violation::UnknownNode { from: e.source, to: e.target, node: id });
                }
            }
            if let Some(t) = self.node(e.target) {
                if t.role.is_source() {
                    report.push(Violation::EdgeIntoSource(e.source, e.target));
                }
            }
            if let Some(s) = self.node(e.source) {
                if s.role == Role::Output {
                    report.push(Violation::EdgeFromOutput(e.source, e.target));
                }
            }
        }

        if !dangling {
            if let Some(id) = self.find_cycle() {
                report.push(Violation::Cycle(id));
            }
        }

        for n in self.nodes.iter().filter(|n| n.role == Role::Hidden) {
            let has_in = self.edges.iter().any(|e| e.target == n.id);
            let has_out = !self.outgoing(n.id).is_empty();
            if !has_in || !has_out {
                report.push(Violation::FloatingNode(n.id));
            }
        }

        let reached = self.reachable_from_sources();
        for n in self.nodes.iter().filter(|n| n.role == Role::Output) {
            if !reached.contains(&n.id) {
                report.push(Violation::UnreachableOutput(n.id));
            }
        }

        report
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    fn find_cycle(&self) -> Option<NodeId> {
        if self.topological_order().is_some() {
            return None;
        }
        // Peel off everything Kahn's algorithm can order; what remains sits on
        // or downstream of a cycle. Report the lowest id that lies on one.
        self.nodes
            .iter()
            .map(|n| n.id)
            .find(|&id| self.outgoing(id).iter().any(|e| self.reaches(e.target, id)))
            .or_else(|| self.nodes.first().map(|n| n.id))
    }

    fn reachable_from_sources(&self) -> Vec<NodeId> {
        let mut seen: Vec<NodeId> = self
            .nodes
            .iter()
            .filter(|n| n.role.is_source())
            .map(|n| n.id)
            .collect();
        let mut stack = seen.clone();
        while let Some(n) = stack.pop() {
            for e in self.outgoing(n) {
                if !seen.contains(&e.target) {
                    seen.push(e.target);
                    stack.push(e.target);
                }
            }
        }
        seen
    }
}

/// Issues node ids for structural innovations.
///
/// Ids grow monotonically. Within one generation, splitting the same
/// `(source, target)` edge in different genomes yields the same id so the
/// resulting edges line up during crossover.
#[derive(Clone, Debug)]
pub struct InnovationTracker {
    next: u32,
    splits: HashMap<(NodeId, NodeId), NodeId>,
}

impl InnovationTracker {
    /// `next` must exceed every id already present in the population.
    pub fn new(next: u32) -> Self {
        Self { next, splits: HashMap::new() }
    }

    /// Continues numbering after the largest id in `population`.
    pub fn after<T: Scalar>(population: &[Genome<T>]) -> Self {
        let max = population.iter().filter_map(|g| g.max_node_id()).map(|id| id.0).max();
        Self::new(max.map_or(0, |m| m + 1))
    }

    pub fn fresh(&mut self) -> NodeId {
        let id = NodeId(self.next);
        self.next += 1;
        id
    }

    /// Id for the node created by splitting `source -> target` this generation.
    pub fn split_id(&mut self, source: NodeId, target: NodeId) -> NodeId {
        if let Some(&id) = self.splits.get(&(source, target)) {
            return id;
        }
        let id = self.fresh();
        self.splits.insert((source, target), id);
        id
    }

    /// Forgets the per-generation split records.
    pub fn start_generation(&mut self) {
        self.splits.clear();
    }

    pub fn peek(&self) -> u32 {
        self.next
    }
}
