mod common;

use agent_core::evolution::speciate;
use agent_core::{EvalContext, Evolution, EvolutionConfig, Genome};

#[test]
fn loop_without_variation_is_a_fixed_point() {
    let mut rng = common::rng(25);
    let g = common::random_genome_with_shape(&mut rng, 2, 1, 6);
    let mut cfg = EvolutionConfig::new(2, 1, 16);
    cfg.species_count = 3;
    cfg.crossover_rate = 0.0;
    cfg.mu0 = 0.0;
    cfg.mu_min = 0.0;
    cfg.mutation_control = false;
    cfg.rates.p_weight = 0.0;
    cfg.rates.p_prop = 0.0;
    cfg.t_max = 5;
    let eval = |g: &Genome<f64>, _: &EvalContext| common::checks::synthetic(g, &EvalContext { generation: 0, index: 0, seed: 0 });
    let mut evo = Evolution::from_population(cfg, eval, vec![g.clone(); 16]).unwrap();
    let best = evo.best_fitness();
    for _ in 0..5 {
        evo.step().unwrap();
        assert!(evo.population().iter().all(|x| x.same_structure(&g) && x.edges() == g.edges()));
        assert_eq!(evo.best_fitness(), best);
    }
}

#[test]
fn copies_join_their_original_species() {
    let mut rng = common::rng(26);
    for _ in 0..50 {
        // Distinct hidden-node counts keep the originals far apart.
        let originals: Vec<Genome<f64>> = (0..4)
            .map(|k| loop {
                let g = common::random_genome_with_shape(&mut rng, 2, 1, 20);
                if g.hidden_count() == 4 * k {
                    break g;
                }
            })
            .collect();
        let mut pop = originals.clone();
        for i in 0..8 {
            pop.push(originals[i % 4].clone());
        }
        for (i, g) in pop.iter_mut().enumerate() {
            g.fitness = Some(i as f64);
        }
        let part = speciate(&pop, 4).unwrap();
        for i in 4..pop.len() {
            assert_eq!(part.species_of(i), part.species_of(i % 4), "copy {i}");
        }
    }
}

#[test]
fn ten_thousand_operator_applications_keep_genomes_valid() {
    common::checks::ten_thousand_operator_applications_keep_genomes_valid();
}

#[test]
fn memory_values_are_difference_quotients_of_net_input() {
    common::checks::memory_values_are_difference_quotients_of_net_input();
}

#[test]
fn constant_inputs_drive_memory_terms_to_exactly_zero() {
    common::checks::constant_inputs_drive_memory_terms_to_exactly_zero();
}

#[test]
fn hundred_fuzzed_generations_keep_size_elites_and_validity() {
    common::checks::hundred_fuzzed_generations_keep_size_elites_and_validity();
}

#[test]
fn serialization_round_trips_on_random_genomes() {
    common::checks::serialization_round_trips_on_random_genomes();
}
