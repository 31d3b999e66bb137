use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::{Activation, EdgeGene, Genome, GenomeError, InnovationTracker, Memory, NodeGene, NodeId};
use crate::scalar::Scalar;

/// Shape of the initial population.
#[derive(Clone, Debug, PartialEq)]
pub struct InitConfig {
    pub n_inputs: usize,
    pub n_outputs: usize,
    pub population_size: usize,
    /// Expected hidden nodes per genome, `sqrt(n_inputs * n_outputs)`.
    pub hidden_seed_mean: f64,
}

impl InitConfig {
    pub fn new(n_inputs: usize, n_outputs: usize, population_size: usize) -> Self {
        Self {
            n_inputs,
            n_outputs,
            population_size,
            hidden_seed_mean: ((n_inputs * n_outputs) as f64).sqrt(),
        }
    }

    pub fn validate(&self) -> Result<(), GenomeError> {
        if self.n_inputs < 1 || self.n_outputs < 1 {
            return Err(GenomeError::InvalidConfig(format!(
                "need at least one input and one output, got {} and {}",
                self.n_inputs, self.n_outputs
            )));
        }
        if self.population_size < 4 {
            return Err(GenomeError::InvalidConfig(format!(
                "population size must be at least 4, got {}",
                self.population_size
            )));
        }
        if !(self.hidden_seed_mean.is_finite() && self.hidden_seed_mean >= 0.0) {
            return Err(GenomeError::InvalidConfig("hidden seed mean must be finite and >= 0".into()));
        }
        Ok(())
    }

    /// Ids are laid out as inputs, then the bias, then outputs.
    pub fn input_id(&self, i: usize) -> NodeId {
        NodeId(i as u32)
    }

    pub fn bias_id(&self) -> NodeId {
        NodeId(self.n_inputs as u32)
    }

    pub fn output_id(&self, o: usize) -> NodeId {
        NodeId((self.n_inputs + 1 + o) as u32)
    }

    /// First id free for hidden nodes.
    pub fn first_hidden_id(&self) -> u32 {
        (self.n_inputs + 1 + self.n_outputs) as u32
    }
}

fn random_activation<R: Rng + ?Sized>(rng: &mut R) -> Activation {
    Activation::ALL[rng.random_range(0..Activation::ALL.len())]
}

fn random_memory<R: Rng + ?Sized>(rng: &mut R) -> Memory {
    Memory::ALL[rng.random_range(0..Memory::ALL.len())]
}

pub(crate) fn random_properties<R: Rng + ?Sized>(rng: &mut R) -> (Activation, Memory) {
    (random_activation(rng), random_memory(rng))
}

pub(crate) fn uniform_weight<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::cast(rng.random_range(-1.0..=1.0))
}

/// Nonempty random subset: each element kept with probability 1/2, redrawn if empty.
fn nonempty_subset<R: Rng + ?Sized>(ids: &[NodeId], rng: &mut R) -> Vec<NodeId> {
    loop {
        let picked: Vec<NodeId> = ids.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
        if !picked.is_empty() {
            return picked;
        }
    }
}

/// Builds `population_size` genomes with every input and the bias wired to
/// every output, plus a Poisson number of hidden nodes per genome.
///
/// `tracker` must have been created for this layout (its next id at least
/// [`InitConfig::first_hidden_id`]); hidden ids are drawn from it so they are
/// unique across the population.
pub fn init_population<T: Scalar, R: Rng + ?Sized>(
    cfg: &InitConfig,
    tracker: &mut InnovationTracker,
    rng: &mut R,
) -> Result<Vec<Genome<T>>, GenomeError> {
    cfg.validate()?;
    if tracker.peek() < cfg.first_hidden_id() {
        *tracker = InnovationTracker::new(cfg.first_hidden_id());
    }
    let poisson = (cfg.hidden_seed_mean > 0.0)
        .then(|| Poisson::new(cfg.hidden_seed_mean).expect("mean checked positive"));
    let inputs: Vec<NodeId> = (0..cfg.n_inputs).map(|i| cfg.input_id(i)).collect();
    let outputs: Vec<NodeId> = (0..cfg.n_outputs).map(|o| cfg.output_id(o)).collect();

    let mut population = Vec::with_capacity(cfg.population_size);
    for _ in 0..cfg.population_size {
        let mut nodes: Vec<NodeGene> = inputs.iter().map(|&id| NodeGene::input(id)).collect();
        nodes.push(NodeGene::bias(cfg.bias_id()));
        for &id in &outputs {
            let (a, m) = random_properties(rng);
            nodes.push(NodeGene::output(id, a, m));
        }

        let mut edges = Vec::new();
        for &s in inputs.iter().chain(std::iter::once(&cfg.bias_id())) {
            for &t in &outputs {
                edges.push(EdgeGene::new(s, t, uniform_weight(rng)));
            }
        }

        let hidden = poisson.as_ref().map_or(0, |p| p.sample(rng) as usize);
        for _ in 0..hidden {
            let id = tracker.fresh();
            let (a, m) = random_properties(rng);
            nodes.push(NodeGene::hidden(id, a, m));
            for s in nonempty_subset(&inputs, rng) {
                edges.push(EdgeGene::new(s, id, uniform_weight(rng)));
            }
            for t in nonempty_subset(&outputs, rng) {
                edges.push(EdgeGene::new(id, t, uniform_weight(rng)));
            }
        }

        population.push(Genome::from_parts(nodes, edges));
    }
    Ok(population)
}
