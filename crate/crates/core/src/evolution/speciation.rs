use std::cmp::Ordering;

use super::EvolutionError;
use crate::diversity::DistanceMatrix;
use crate::genome::Genome;
use crate::scalar::Scalar;

/// Assignment of population indices to species. Species ids are positions
/// in `representatives` / `members`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpeciesPartition {
    pub representatives: Vec<usize>,
    /// Member indices per species, ascending.
    pub members: Vec<Vec<usize>>,
}

impl SpeciesPartition {
    pub fn species_count(&self) -> usize {
        self.representatives.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }

    pub fn species_of(&self, index: usize) -> Option<usize> {
        self.members.iter().position(|m| m.binary_search(&index).is_ok())
    }
}

/// Index of the highest fitness, lowest index on ties. `None` entries rank last.
pub(crate) fn best_index<T: Scalar>(fitness: impl IntoIterator<Item = Option<T>>) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (i, f) in fitness.into_iter().enumerate() {
        if let Some(f) = f {
            if best.is_none_or(|(_, b)| f > b) {
                best = Some((i, f));
            }
        }
    }
    best.map(|(i, _)| i)
}

/// Farthest-first speciation over precomputed distances.
///
/// The first representative is the fittest genome; each next one maximizes its
/// minimum distance to those already chosen. Everyone else joins the nearest
/// representative. All ties go to the lowest index.
pub fn speciate_with<T: Scalar>(
    fitness: &[Option<T>],
    distances: &DistanceMatrix<T>,
    species_count: usize,
) -> Result<SpeciesPartition, EvolutionError> {
    let n = fitness.len();
    if species_count == 0 || n < species_count {
        return Err(EvolutionError::Speciation { population: n, species: species_count });
    }
    debug_assert_eq!(distances.len(), n);

    let first = best_index(fitness.iter().copied()).unwrap_or(0);
    let mut representatives = vec![first];
    let mut is_rep = vec![false; n];
    is_rep[first] = true;
    let mut nearest: Vec<T> = (0..n).map(|i| distances.get(i, first)).collect();
    while representatives.len() < species_count {
        let mut pick: Option<usize> = None;
        for i in (0..n).filter(|&i| !is_rep[i]) {
            if pick.is_none_or(|p| nearest[i] > nearest[p]) {
                pick = Some(i);
            }
        }
        let next = pick.expect("population larger than species count");
        is_rep[next] = true;
        representatives.push(next);
        for (i, d) in nearest.iter_mut().enumerate() {
            let to_new = distances.get(i, next);
            if to_new < *d {
                *d = to_new;
            }
        }
    }

    let mut members = vec![Vec::new(); species_count];
    for i in 0..n {
        let species = match representatives.iter().position(|&r| r == i) {
            Some(own) => own,
            None => (0..species_count)
                .min_by(|&a, &b| {
                    distances
                        .get(i, representatives[a])
                        .partial_cmp(&distances.get(i, representatives[b]))
                        .unwrap_or(Ordering::Equal)
                        .then(a.cmp(&b))
                })
                .expect("at least one species"),
        };
        members[species].push(i);
    }
    Ok(SpeciesPartition { representatives, members })
}

/// [`speciate_with`] computing genome distances on the fly.
pub fn speciate<T: Scalar>(population: &[Genome<T>], species_count: usize) -> Result<SpeciesPartition, EvolutionError> {
    let fitness: Vec<Option<T>> = population.iter().map(|g| g.fitness).collect();
    speciate_with(&fitness, &DistanceMatrix::from_population(population), species_count)
}
