use std::cmp::Ordering;

use rand::Rng;

use super::VariationError;
use crate::genome::Genome;
use crate::scalar::Scalar;

/// Single-child crossover.
///
/// The child takes the fitter parent's topology and every nodal property.
/// An edge present in both parents (same endpoints) takes its weight from
/// either parent with equal probability; edges only the fitter parent has are
/// copied. Equal fitness favours the parent with fewer edges, then a coin flip.
pub fn crossover<T: Scalar, R: Rng + ?Sized>(
    parent_a: &Genome<T>,
    parent_b: &Genome<T>,
    rng: &mut R,
) -> Result<Genome<T>, VariationError> {
    let fa = parent_a.fitness.ok_or(VariationError::MissingFitness(0))?;
    let fb = parent_b.fitness.ok_or(VariationError::MissingFitness(1))?;
    let a_first = match fa.partial_cmp(&fb).unwrap_or(Ordering::Equal) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => match parent_a.edges().len().cmp(&parent_b.edges().len()) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => rng.random_bool(0.5),
        },
    };
    let (fitter, other) = if a_first { (parent_a, parent_b) } else { (parent_b, parent_a) };

    let mut child = fitter.clone();
    child.fitness = None;
    child.species_id = None;
    for edge in child.edges_mut() {
        if let Some(matched) = other.edge(edge.source, edge.target) {
            if rng.random_bool(0.5) {
                edge.weight = matched.weight;
            }
        }
    }
    Ok(child)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::tests::{chain, id};
    use crate::genome::{Activation, EdgeGene, Memory, NodeGene};
    use crate::seeding::rng_from_seed;

    #[test]
    fn identical_parents_give_identical_child() {
        let mut g = chain();
        g.fitness = Some(1.0);
        for seed in 0..20 {
            let child = crossover(&g, &g, &mut rng_from_seed(seed)).unwrap();
            assert!(child.same_structure(&g));
        }
    }

    #[test]
    fn unique_edges_and_properties_come_from_fitter_parent() {
        let mut fitter = chain();
        fitter.fitness = Some(2.0);
        let mut weaker = chain();
        weaker.fitness = Some(1.0);
        weaker.node_mut(id(3)).unwrap().memory = Memory::SecondDifference;
        // Fitter gains an extra hidden node 4 spliced 0 -> 4 -> 2.
        fitter.insert_node(NodeGene::hidden(id(4), Activation::SaturatedLinear, Memory::FirstDifference));
        fitter.insert_edge(EdgeGene::new(id(0), id(4), 0.5));
        fitter.insert_edge(EdgeGene::new(id(4), id(2), 0.5));
        assert!(fitter.is_valid());

        for seed in 0..50 {
            let child = crossover(&weaker, &fitter, &mut rng_from_seed(seed)).unwrap();
            assert_eq!(child.nodes(), fitter.nodes());
            assert_eq!(child.edge(id(0), id(4)).unwrap().weight, 0.5);
            assert_eq!(child.edges().len(), fitter.edges().len());
        }
    }

    #[test]
    fn fitness_tie_prefers_fewer_edges() {
        let mut small = chain();
        small.fitness = Some(1.0);
        let mut big = chain();
        big.insert_edge(EdgeGene::new(id(0), id(2), 0.3));
        big.fitness = Some(1.0);
        for seed in 0..20 {
            let child = crossover(&big, &small, &mut rng_from_seed(seed)).unwrap();
            assert_eq!(child.edges().len(), small.edges().len());
        }
    }

    #[test]
    fn unevaluated_parent_is_rejected() {
        let g = chain();
        assert!(crossover(&g, &g, &mut rng_from_seed(0)).is_err());
    }
}
