//! Selection and reproduction operators.

mod crossover;
mod mutation;
mod selection;

use thiserror::Error;

pub use crossover::crossover;
pub use mutation::{
    add_edge, add_node, mutate, mutate_properties, mutate_weights, remove_edge, remove_node, MutationRates,
    MutationReport, STRUCTURAL_RETRIES,
};
pub use selection::{
    selection_probability, tournament_indices, tournament_select, SelectionProbability, TournamentConfig,
};

#[derive(Debug, Error, PartialEq)]
pub enum VariationError {
    #[error("invalid tournament: {n_winners} winners of {n_tournament} entrants")]
    Tournament { n_tournament: usize, n_winners: usize },
    #[error("selection pool is empty")]
    EmptyPool,
    #[error("genome {0} has no fitness")]
    MissingFitness(usize),
    #[error("rate {name} = {value} out of range")]
    Rate { name: &'static str, value: f64 },
}
