//! Suites shared by the integration tests and the acceptance runner.
//! Each check panics on the first violation.

use agent_core::diversity::population_diversity;
use agent_core::evolution::BoxError;
use agent_core::genome::InnovationTracker;
use agent_core::variation::{
    add_edge, add_node, crossover, mutate, mutate_properties, mutate_weights, remove_edge, remove_node,
    selection_probability, tournament_indices, MutationRates, TournamentConfig,
};
use agent_core::{deserialize, serialize, EvalContext, Evaluation, Evolution, EvolutionConfig, Genome, Memory, Phenotype, Role};
use rand::Rng;

pub fn serialization_round_trips_on_random_genomes() {
    let mut rng = super::rng(20);
    for i in 0..1000 {
        let mut g = super::random_genome(&mut rng, 15);
        g.fitness = rng.random_bool(0.5).then(|| rng.random_range(-1e3..1e3));
        let text = serialize(&g);
        let back: Genome<f64> = deserialize(&text).unwrap_or_else(|e| panic!("genome {i}: {e}"));
        assert!(back.same_structure(&g) && back.edges() == g.edges(), "genome {i}");
        assert_eq!(serialize(&back), text, "genome {i}");
    }
}

pub fn instrumented_nodes(g: &Genome<f64>, memory: Memory) -> Vec<agent_core::NodeId> {
    g.nodes().iter().filter(|n| !n.role.is_source() && n.memory == memory).map(|n| n.id).collect()
}

/// Cheap deterministic fitness: a smooth function of the weights plus
/// per-evaluation noise from the context seed.
pub fn synthetic(g: &Genome<f64>, ctx: &EvalContext) -> Result<Evaluation<f64>, BoxError> {
    let w: f64 = g.edges().iter().map(|e| (e.weight * (e.source.0 + 1) as f64).sin()).sum();
    let noise = (ctx.seed % 1000) as f64 * 1e-4;
    Ok(Evaluation { fitness: w - 0.05 * g.edges().len() as f64 + noise, episodes: 1, steps: 10 })
}

pub fn ten_thousand_operator_applications_keep_genomes_valid() {
    let mut rng = super::rng(21);
    let rates = MutationRates { structural: 0.7, p_prop: 0.2, ..MutationRates::default() };
    let mut pool: Vec<Genome<f64>> =
        (0..20).map(|_| super::random_genome_with_shape(&mut rng, 3, 2, 3)).collect();
    let mut tracker = InnovationTracker::after(&pool);
    let mut counts = [0usize; 8];
    for step in 0..10_000 {
        if step % 50 == 0 {
            tracker.start_generation();
        }
        let i = rng.random_range(0..pool.len());
        let op = rng.random_range(0..8);
        counts[op] += 1;
        let g = &pool[i];
        let child = match op {
            0 => add_edge(g, &mut rng),
            1 => remove_edge(g, &mut rng),
            2 => add_node(g, &mut tracker, &mut rng),
            3 => remove_node(g, &mut rng),
            4 => mutate_weights(g, &rates, &mut rng),
            5 => mutate_properties(g, &rates, &mut rng),
            6 => {
                let j = rng.random_range(0..pool.len());
                let (mut a, mut b) = (g.clone(), pool[j].clone());
                a.fitness = Some(rng.random_range(-1.0..1.0));
                b.fitness = Some(rng.random_range(-1.0..1.0));
                crossover(&a, &b, &mut rng).unwrap()
            }
            _ => mutate(g, &rates, &mut tracker, &mut rng).0,
        };
        let report = child.validate();
        assert!(report.is_empty(), "step {step}, operator {op}: {report:?}");
        pool[i] = child;
    }
    assert!(counts.iter().all(|&c| c > 1000), "{counts:?}");
}

pub fn memory_values_are_difference_quotients_of_net_input() {
    let mut rng = super::rng(22);
    let dt = 0.2;
    let mut checked = [0usize; 2];
    for _ in 0..300 {
        let g = super::random_genome(&mut rng, 15);
        let n_in = g.count_role(Role::Input);
        let mut net = Phenotype::compile(&g, dt).unwrap();
        let first = instrumented_nodes(&g, Memory::FirstDifference);
        let second = instrumented_nodes(&g, Memory::SecondDifference);
        let mut u_hist: Vec<Vec<f64>> = Vec::new();
        let ids: Vec<_> = first.iter().chain(&second).copied().collect();
        for _ in 0..30 {
            let x: Vec<f64> = (0..n_in).map(|_| rng.random_range(-1.0..1.0)).collect();
            net.step(&x).unwrap();
            u_hist.push(ids.iter().map(|&id| net.net_input(id).unwrap()).collect());
            let t = u_hist.len() - 1;
            let u = |back: usize, k: usize| if t >= back { u_hist[t - back][k] } else { 0.0 };
            for (k, &id) in ids.iter().enumerate() {
                let v = net.drive(id).unwrap();
                let expected = if k < first.len() {
                    (u(0, k) - u(1, k)) / dt
                } else {
                    (u(0, k) - 2.0 * u(1, k) + u(2, k)) / (dt * dt)
                };
                assert!((v - expected).abs() <= 1e-12 * expected.abs().max(1.0), "{v} vs {expected}");
                checked[usize::from(k >= first.len())] += 1;
            }
        }
    }
    assert!(checked.iter().all(|&c| c > 1000), "{checked:?}");
}

pub fn constant_inputs_drive_memory_terms_to_exactly_zero() {
    let mut rng = super::rng(23);
    for _ in 0..300 {
        let g = super::random_genome(&mut rng, 15);
        let n_in = g.count_role(Role::Input);
        let depth = g.topological_order().unwrap().len();
        let x: Vec<f64> = (0..n_in).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut net = Phenotype::compile(&g, 1.0).unwrap();
        let first = instrumented_nodes(&g, Memory::FirstDifference);
        let second = instrumented_nodes(&g, Memory::SecondDifference);
        // Nodes fed only by inputs and the bias see a constant net input at once.
        let direct = |id| g.incoming(id).all(|e| g.node(e.source).unwrap().role.is_source());
        for step in 1..=3 * depth + 3 {
            net.step(&x).unwrap();
            for &id in &first {
                if step >= 2 && direct(id) || step > 3 * depth {
                    assert_eq!(net.drive(id), Some(0.0), "first difference at step {step}");
                }
            }
            for &id in &second {
                if step >= 3 && direct(id) || step > 3 * depth {
                    assert_eq!(net.drive(id), Some(0.0), "second difference at step {step}");
                }
            }
        }
    }
}

pub fn hundred_fuzzed_generations_keep_size_elites_and_validity() {
    let mut rng = super::rng(24);
    for run in 0..4u64 {
        let n = rng.random_range(12..40);
        let mut cfg = EvolutionConfig::new(rng.random_range(1..4), rng.random_range(1..3), n);
        cfg.species_count = rng.random_range(1..6);
        cfg.t_max = 100;
        cfg.seed = run;
        cfg.crossover_rate = rng.random_range(0.0..1.0);
        cfg.stage2_fraction = rng.random_range(0.0..0.5);
        cfg.diversity_control = rng.random_bool(0.7);
        cfg.mutation_control = rng.random_bool(0.7);
        let mut evo = Evolution::new(cfg.clone(), synthetic).unwrap();
        let mut expected_evaluations = n as u64;
        let mut prev_best = evo.best_fitness();
        for t in 1..=100 {
            let champions: Vec<Genome<f64>> = evo
                .partition()
                .members
                .iter()
                .map(|m| {
                    let best = m
                        .iter()
                        .copied()
                        .max_by(|&a, &b| {
                            let fa = evo.population()[a].fitness.unwrap();
                            let fb = evo.population()[b].fitness.unwrap();
                            fa.partial_cmp(&fb).unwrap().then(b.cmp(&a))
                        })
                        .unwrap();
                    evo.population()[best].clone()
                })
                .collect();
            let s = champions.len();
            let report = evo.step().unwrap().clone();
            expected_evaluations += (n - s + cfg.stage2_offspring(s)) as u64;
            assert_eq!(evo.population().len(), n, "run {run} generation {t}");
            assert_eq!(report.evaluations, expected_evaluations);
            assert_eq!(evo.evaluations(), expected_evaluations);
            assert!(evo.population().iter().all(|g| g.validate().is_empty()));
            assert!(report.best_fitness >= prev_best, "best fell at generation {t}");
            prev_best = report.best_fitness;
            for (c, g) in champions.iter().zip(evo.population()) {
                assert!(c.same_structure(g) && c.edges() == g.edges() && c.fitness == g.fitness);
            }
            assert_eq!(report.species_sizes.iter().sum::<usize>(), n);
        }
    }
}

pub fn ranked_fitness(n: usize) -> Vec<f64> {
    (0..n).map(|i| -(i as f64)).collect()
}

pub fn slot_shares(n: usize, n_t: usize, n_w: usize, slots: usize, seed: u64) -> Vec<f64> {
    let cfg = TournamentConfig::new(n_t, n_w).unwrap();
    let pool = tournament_indices(&ranked_fitness(n), cfg, slots, &mut super::rng(seed)).unwrap();
    let mut counts = vec![0usize; n];
    for i in pool {
        counts[i] += 1;
    }
    counts.iter().map(|&c| c as f64 / slots as f64).collect()
}

pub fn diversity_equals_exhaustive_spanning_tree_minimum() {
    let mut rng = super::rng(1);
    for case in 0..1000 {
        let n = rng.random_range(2..=7);
        let pop: Vec<Genome<f64>> = (0..n).map(|_| super::random_genome(&mut rng, 6)).collect();
        let d: Vec<Vec<f64>> =
            pop.iter().map(|a| pop.iter().map(|b| super::oracle_distance(a, b)).collect()).collect();
        let expected = super::brute_force_mst(n, |i, j| d[i][j]);
        let got: f64 = population_diversity(&pop).unwrap();
        assert_eq!(got, expected, "case {case}, n = {n}");
    }
}

pub fn selection_probability_matches_exact_rational_evaluation() {
    for (n, n_t, n_w) in [(100, 10, 2), (50, 5, 1), (20, 4, 4), (8, 8, 8)] {
        for k in 1..=n {
            let exact = super::rational_to_f64(&super::selection_probability_exact(k, n, n_t, n_w));
            let got = selection_probability::<f64>(k, n, n_t, n_w).value;
            let tol = 1e-12 * exact.abs().max(1e-300);
            assert!((got - exact).abs() <= tol, "N={n} N_T={n_t} N_W={n_w} k={k}: {got} vs {exact}");
        }
    }
}

pub fn tournament_frequencies_match_monte_carlo_oracle() {
    for (n, n_t, n_w) in [(100, 10, 2), (10, 2, 1), (30, 6, 3)] {
        let got = slot_shares(n, n_t, n_w, 200_000, 4);
        let oracle = super::monte_carlo_slot_shares(n, n_t, n_w, 200_000 / n_w, 5);
        for (rank, (g, o)) in got.iter().zip(&oracle).enumerate() {
            assert!((g - o).abs() <= 0.02, "N={n} N_T={n_t} N_W={n_w} rank {rank}: {g} vs {o}");
        }
    }
}

pub fn best_genome_enters_a_tournament_pool_as_often_as_simulated() {
    let (n, n_t, n_w, tournaments) = (100, 10, 2, 100_000);
    let cfg = TournamentConfig::new(n_t, n_w).unwrap();
    let pool = tournament_indices(&ranked_fitness(n), cfg, tournaments * n_w, &mut super::rng(6)).unwrap();
    let got = pool.chunks(n_w).filter(|c| c.contains(&0)).count() as f64 / tournaments as f64;
    let oracle = 1.0 - (1.0 - 1.0 / n as f64).powi(n_t as i32);
    assert!((got - oracle).abs() <= 0.02, "{got} vs {oracle}");
}
