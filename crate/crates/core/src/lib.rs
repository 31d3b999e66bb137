//! Neuroevolution of recurrent controllers with feedback-controlled
//! selection pressure and mutation rate.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common choices. Environments and the experiment harness run
//! in `f64`.

pub mod adaptation;
pub mod diversity;
pub mod environments;
pub mod evolution;
pub mod genome;
pub mod harness;
pub mod network;
pub mod scalar;
pub mod seeding;
pub mod variation;

pub use adaptation::{improvement, FitnessHistory, MutationRateState};
pub use diversity::{genome_distance, minimum_spanning_tree, population_diversity, DistanceMatrix, DiversityState};
pub use environments::{EnvEvaluator, EnvKind, Environment};
pub use evolution::{EvalContext, Evaluation, Evaluator, Evolution, EvolutionConfig, EvolutionError, GenerationReport};
pub use genome::{deserialize, serialize, Activation, EdgeGene, Genome, Memory, NodeGene, NodeId, Role};
pub use network::Phenotype;
pub use scalar::Scalar;

pub type Genome64 = Genome<f64>;
pub type Genome32 = Genome<f32>;
pub type Phenotype64 = Phenotype<f64>;
pub type Phenotype32 = Phenotype<f32>;
pub type EvolutionConfig64 = EvolutionConfig<f64>;
pub type EvolutionConfig32 = EvolutionConfig<f32>;
pub type DiversityState64 = DiversityState<f64>;
pub type MutationRateState64 = MutationRateState<f64>;
