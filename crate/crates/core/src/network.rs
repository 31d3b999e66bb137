//! Executable feedforward form of a genome.
//!
//! Each non-input node computes its net input `U(τ) = Σ w·f` over incoming
//! edges, then feeds `V(τ)` through its activation, where `V` depends on the
//! node's memory:
//!
//! | memory | `V(τ)`                                  |
//! |--------|-----------------------------------------|
//! | 0      | `U(τ)`                                  |
//! | 1      | `(U(τ) - U(τ-1)) / δτ`                  |
//! | 2      | `(U(τ) - 2U(τ-1) + U(τ-2)) / δτ²`       |
//!
//! Past values are zero at episode start, so memory nodes see a transient on
//! the first steps.

use std::collections::HashMap;

use thiserror::Error;

use crate::genome::{join_violations, Activation, Genome, Memory, NodeId, Role, Violation};
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("cannot compile invalid genome: {}", join_violations(.0))]
    InvalidGenome(Vec<Violation>),
    #[error("time step must be positive and finite")]
    BadTimeStep,
    #[error("expected {expected} inputs, got {found}")]
    InputArity { expected: usize, found: usize },
    #[error("input {index} is not finite")]
    NonFiniteInput { index: usize },
    #[error("node {0} produced a non-finite value")]
    NonFiniteNode(NodeId),
}

#[derive(Clone, Debug)]
struct Unit {
    slot: usize,
    id: NodeId,
    activation: Activation,
    memory: Memory,
    /// Range into `Phenotype::sources` / `Phenotype::weights`.
    start: usize,
    end: usize,
}

/// Compiled network with per-node input history.
#[derive(Clone, Debug)]
pub struct Phenotype<T = f64> {
    topo_order: Vec<NodeId>,
    slot_of: HashMap<NodeId, usize>,
    units: Vec<Unit>,
    sources: Vec<usize>,
    weights: Vec<T>,
    input_slots: Vec<usize>,
    bias_slot: usize,
    output_slots: Vec<usize>,
    output_activations: Vec<Activation>,
    /// Node output `f` per slot.
    values: Vec<T>,
    /// `[U(τ), U(τ-1), U(τ-2)]` per slot.
    history: Vec<[T; 3]>,
    /// Last `V(τ)` per slot.
    drive: Vec<T>,
    dt: T,
    inv_dt: T,
    inv_dt2: T,
}

impl<T: Scalar> Phenotype<T> {
    /// Decodes `genome` for control steps of length `dt`.
    pub fn compile(genome: &Genome<T>, dt: T) -> Result<Self, NetworkError> {
        if !(dt > T::zero() && dt.is_finite()) {
            return Err(NetworkError::BadTimeStep);
        }
        let report = genome.validate();
        if !report.is_empty() {
            return Err(NetworkError::InvalidGenome(report));
        }
        let topo_order = genome.topological_order().expect("validated genome is acyclic");
        let slot_of: HashMap<NodeId, usize> =
            topo_order.iter().enumerate().map(|(i, &id)| (id, i)).collect();

        let mut incoming: Vec<Vec<(usize, T)>> = vec![Vec::new(); topo_order.len()];
        for e in genome.edges() {
            incoming[slot_of[&e.target]].push((slot_of[&e.source], e.weight));
        }

        let mut units = Vec::new();
        let mut sources = Vec::new();
        let mut weights = Vec::new();
        for (slot, &id) in topo_order.iter().enumerate() {
            let node = genome.node(id).expect("topological order lists genome nodes");
            if node.role.is_source() {
                continue;
            }
            let start = sources.len();
            for &(s, w) in &incoming[slot] {
                sources.push(s);
                weights.push(w);
            }
            units.push(Unit {
                slot,
                id,
                activation: node.activation.expect("validated non-source node has activation"),
                memory: node.memory,
                start,
                end: sources.len(),
            });
        }

        let input_slots = genome.ids_with_role(Role::Input).map(|id| slot_of[&id]).collect();
        let bias_slot = genome.ids_with_role(Role::Bias).map(|id| slot_of[&id]).next().expect("one bias");
        let outputs: Vec<NodeId> = genome.ids_with_role(Role::Output).collect();
        let output_slots = outputs.iter().map(|id| slot_of[id]).collect();
        let output_activations = outputs
            .iter()
            .map(|&id| genome.node(id).and_then(|n| n.activation).expect("output has activation"))
            .collect();

        let n = topo_order.len();
        let mut phenotype = Self {
            topo_order,
            slot_of,
            units,
            sources,
            weights,
            input_slots,
            bias_slot,
            output_slots,
            output_activations,
            values: vec![T::zero(); n],
            history: vec![[T::zero(); 3]; n],
            drive: vec![T::zero(); n],
            dt,
            inv_dt: T::one() / dt,
            inv_dt2: T::one() / (dt * dt),
        };
        phenotype.reset();
        Ok(phenotype)
    }

    /// Clears all history, as at the start of an episode.
    pub fn reset(&mut self) {
        self.values.iter_mut().for_each(|v| *v = T::zero());
        self.history.iter_mut().for_each(|h| *h = [T::zero(); 3]);
        self.drive.iter_mut().for_each(|v| *v = T::zero());
        self.values[self.bias_slot] = T::one();
    }

    pub fn n_inputs(&self) -> usize {
        self.input_slots.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.output_slots.len()
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn topo_order(&self) -> &[NodeId] {
        &self.topo_order
    }

    /// Output node activations, in output id order.
    pub fn output_activations(&self) -> &[Activation] {
        &self.output_activations
    }

    /// Net input `U(τ)` of `node` from the most recent step.
    pub fn net_input(&self, node: NodeId) -> Option<T> {
        self.slot_of.get(&node).map(|&s| self.history[s][0])
    }

    /// `V(τ)`, the value fed to the activation, from the most recent step.
    pub fn drive(&self, node: NodeId) -> Option<T> {
        self.slot_of.get(&node).map(|&s| self.drive[s])
    }

    /// Output `f` of `node` from the most recent step.
    pub fn value(&self, node: NodeId) -> Option<T> {
        self.slot_of.get(&node).map(|&s| self.values[s])
    }

    /// Advances one control step. Outputs are in output id order.
    pub fn step(&mut self, inputs: &[T]) -> Result<Vec<T>, NetworkError> {
        let mut out = vec![T::zero(); self.output_slots.len()];
        self.step_into(inputs, &mut out)?;
        Ok(out)
    }

    /// Allocation-free [`Phenotype::step`]; `out` must hold `n_outputs` values.
    pub fn step_into(&mut self, inputs: &[T], out: &mut [T]) -> Result<(), NetworkError> {
        if inputs.len() != self.input_slots.len() {
            return Err(NetworkError::InputArity { expected: self.input_slots.len(), found: inputs.len() });
        }
        for (index, (&slot, &x)) in self.input_slots.iter().zip(inputs).enumerate() {
            if !x.is_finite() {
                return Err(NetworkError::NonFiniteInput { index });
            }
            self.values[slot] = x;
        }
        self.values[self.bias_slot] = T::one();

        for unit in &self.units {
            let mut u = T::zero();
            for k in unit.start..unit.end {
                u = u + self.weights[k] * self.values[self.sources[k]];
            }
            let [prev1, prev2, _] = self.history[unit.slot];
            let v = match unit.memory {
                Memory::Current => u,
                Memory::FirstDifference => (u - prev1) * self.inv_dt,
                Memory::SecondDifference => (u - prev1 - prev1 + prev2) * self.inv_dt2,
            };
            if !u.is_finite() || !v.is_finite() {
                return Err(NetworkError::NonFiniteNode(unit.id));
            }
            self.history[unit.slot] = [u, prev1, prev2];
            self.drive[unit.slot] = v;
            self.values[unit.slot] = unit.activation.apply(v);
        }

        for (o, &slot) in out.iter_mut().zip(&self.output_slots) {
            *o = self.values[slot];
        }
        Ok(())
    }
}
