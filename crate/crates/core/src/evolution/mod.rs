//! The generational loop: speciation, within-species reproduction with
//! per-species elitism, a second reproduction stage among species champions,
//! and the diversity and mutation-rate controllers.

mod speciation;

use rand::Rng as _;
use rayon::prelude::*;
use thiserror::Error;

use crate::adaptation::{AdaptationError, FitnessHistory, MutationRateState};
use crate::diversity::{minimum_spanning_tree, DistanceMatrix, DiversityError, DiversityState};
use crate::genome::{init_population, Genome, GenomeError, InitConfig, InnovationTracker};
use crate::scalar::Scalar;
use crate::seeding::{derive_seed, rng_from_seed, stream, Rng};
use crate::variation::{crossover, mutate, tournament_indices, MutationRates, TournamentConfig, VariationError};

pub use speciation::{speciate, speciate_with, SpeciesPartition};

pub type BoxError = Box<dyn std::error::Error + Send + Sync>;

/// Outcome of one fitness evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation<T = f64> {
    pub fitness: T,
    pub episodes: u64,
    pub steps: u64,
}

impl<T> Evaluation<T> {
    pub fn of(fitness: T) -> Self {
        Self { fitness, episodes: 0, steps: 0 }
    }
}

/// Where a genome is being evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalContext {
    pub generation: usize,
    /// Position among the genomes evaluated this generation.
    pub index: usize,
    /// Seed derived from the run seed, generation and index.
    pub seed: u64,
}

/// Fitness function. Called concurrently; must be deterministic in its
/// arguments for runs to be reproducible.
pub trait Evaluator<T: Scalar>: Sync {
    fn evaluate(&self, genome: &Genome<T>, ctx: &EvalContext) -> Result<Evaluation<T>, BoxError>;
}

impl<T: Scalar, F> Evaluator<T> for F
where
    F: Fn(&Genome<T>, &EvalContext) -> Result<Evaluation<T>, BoxError> + Sync,
{
    fn evaluate(&self, genome: &Genome<T>, ctx: &EvalContext) -> Result<Evaluation<T>, BoxError> {
        self(genome, ctx)
    }
}

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error("invalid evolution config: {0}")]
    Config(String),
    #[error("cannot split {population} genomes into {species} species")]
    Speciation { population: usize, species: usize },
    #[error("evaluation of genome {index} in generation {generation} (seed {seed}) failed: {source}")]
    Evaluation { generation: usize, index: usize, seed: u64, source: BoxError },
    #[error("evaluation of genome {index} in generation {generation} returned non-finite fitness")]
    NonFiniteFitness { generation: usize, index: usize },
    #[error(transparent)]
    Genome(#[from] GenomeError),
    #[error(transparent)]
    Variation(#[from] VariationError),
    #[error(transparent)]
    Diversity(#[from] DiversityError),
    #[error(transparent)]
    Adaptation(#[from] AdaptationError),
}

/// Everything the loop needs besides the fitness function.
#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionConfig<T = f64> {
    pub n_inputs: usize,
    pub n_outputs: usize,
    pub population_size: usize,
    pub t_max: usize,
    pub species_count: usize,
    /// Tournament entrants `N_T`.
    pub n_tournament: usize,
    pub initial_ratio: T,
    pub ratio_min: T,
    pub ratio_max: T,
    pub beta_div: T,
    pub k_d: T,
    pub k_i: T,
    pub alpha_i: T,
    pub mu0: T,
    pub mu_min: T,
    pub mu_max: T,
    /// Mutation settings; `structural` is replaced by the controller's `μ_t`.
    pub rates: MutationRates<T>,
    /// Probability an offspring comes from crossover rather than a copy of
    /// its first parent.
    pub crossover_rate: T,
    /// Share of the population bred from species champions each generation.
    pub stage2_fraction: T,
    pub hidden_seed_mean: f64,
    pub diversity_control: bool,
    pub mutation_control: bool,
    /// Stop once the best fitness reaches this value.
    pub solve_threshold: Option<T>,
    pub seed: u64,
}

impl<T: Scalar> EvolutionConfig<T> {
    pub fn new(n_inputs: usize, n_outputs: usize, population_size: usize) -> Self {
        Self {
            n_inputs,
            n_outputs,
            population_size,
            t_max: 100,
            species_count: 8.min(population_size.max(1)),
            n_tournament: default_tournament_size(population_size),
            initial_ratio: T::cast(0.5),
            ratio_min: T::cast(0.02),
            ratio_max: T::one(),
            beta_div: T::cast(1.5),
            k_d: T::cast(0.1),
            k_i: T::cast(0.1),
            alpha_i: T::one(),
            mu0: T::cast(0.5),
            mu_min: T::cast(0.01),
            mu_max: T::cast(0.9),
            rates: MutationRates::default(),
            crossover_rate: T::one(),
            stage2_fraction: T::cast(0.1),
            hidden_seed_mean: std::f64::consts::SQRT_2,
            diversity_control: true,
            mutation_control: true,
            solve_threshold: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), EvolutionError> {
        let fail = |msg: String| Err(EvolutionError::Config(msg));
        if self.population_size < 2 {
            return fail(format!("population_size = {} (need at least 2)", self.population_size));
        }
        if self.species_count == 0 || self.species_count > self.population_size {
            return fail(format!("species_count = {} outside 1..={}", self.species_count, self.population_size));
        }
        if self.n_tournament < 2 {
            return fail(format!("n_tournament = {} (need at least 2)", self.n_tournament));
        }
        let unit = |name: &str, v: T| -> Result<(), EvolutionError> {
            if v >= T::zero() && v <= T::one() {
                Ok(())
            } else {
                Err(EvolutionError::Config(format!("{name} = {v} outside [0, 1]")))
            }
        };
        unit("crossover_rate", self.crossover_rate)?;
        unit("stage2_fraction", self.stage2_fraction)?;
        let positive = |name: &str, v: T| -> Result<(), EvolutionError> {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(EvolutionError::Config(format!("{name} = {v} must be positive")))
            }
        };
        positive("k_d", self.k_d)?;
        positive("k_i", self.k_i)?;
        positive("alpha_i", self.alpha_i)?;
        if self.beta_div.is_nan() || self.beta_div < T::one() {
            return fail(format!("beta_div = {} (need at least 1)", self.beta_div));
        }
        if !(self.ratio_min > T::zero() && self.ratio_min <= self.ratio_max && self.ratio_max <= T::one()) {
            return fail(format!("ratio bounds [{}, {}]", self.ratio_min, self.ratio_max));
        }
        if !(self.initial_ratio >= self.ratio_min && self.initial_ratio <= self.ratio_max) {
            return fail(format!("initial_ratio = {} outside ratio bounds", self.initial_ratio));
        }
        if !(self.mu_min >= T::zero() && self.mu_min <= self.mu_max && self.mu_max <= T::one()) {
            return fail(format!("mutation bounds [{}, {}]", self.mu_min, self.mu_max));
        }
        if !(self.mu0 >= self.mu_min && self.mu0 <= self.mu_max) {
            return fail(format!("mu0 = {} outside mutation bounds", self.mu0));
        }
        if !(self.hidden_seed_mean >= 0.0 && self.hidden_seed_mean.is_finite()) {
            return fail(format!("hidden_seed_mean = {}", self.hidden_seed_mean));
        }
        self.rates.validate()?;
        self.init_config().validate()?;
        Ok(())
    }

    pub fn init_config(&self) -> InitConfig {
        let mut cfg = InitConfig::new(self.n_inputs, self.n_outputs, self.population_size);
        cfg.hidden_seed_mean = self.hidden_seed_mean;
        cfg
    }

    /// `⌈stage2_fraction · N⌉`, leaving room for the champions.
    pub fn stage2_offspring(&self, species: usize) -> usize {
        let n = self.population_size;
        let wanted = (self.stage2_fraction.as_f64() * n as f64).ceil() as usize;
        wanted.min(n - species)
    }
}

/// `max(2, round(0.05 N))`.
pub fn default_tournament_size(population_size: usize) -> usize {
    ((0.05 * population_size as f64).round() as usize).max(2)
}

/// Telemetry for one generation, taken after its population is evaluated and
/// the controllers have been updated.
#[derive(Clone, Debug, PartialEq)]
pub struct GenerationReport<T = f64> {
    pub generation: usize,
    pub best_fitness: T,
    pub mean_fitness: T,
    pub diversity: T,
    pub desired_diversity: T,
    /// Tournament ratio in force for the next generation.
    pub ratio: T,
    pub n_tournament: usize,
    pub n_winners: usize,
    pub i_best: Option<T>,
    pub i_ave: Option<T>,
    /// Mutation rate in force for the next generation.
    pub mu: T,
    pub species_sizes: Vec<usize>,
    /// Cumulative fitness evaluations.
    pub evaluations: u64,
    /// Cumulative episodes and environment steps reported by the evaluator.
    pub episodes: u64,
    pub steps: u64,
}

#[derive(Clone, Debug)]
pub struct RunOutcome<T = f64> {
    pub best: Genome<T>,
    pub reports: Vec<GenerationReport<T>>,
    pub solved: bool,
}

/// A running evolution with its population, controllers and telemetry.
pub struct Evolution<T: Scalar, E> {
    config: EvolutionConfig<T>,
    evaluator: E,
    population: Vec<Genome<T>>,
    tracker: InnovationTracker,
    partition: SpeciesPartition,
    diversity: DiversityState<T>,
    mutation: MutationRateState<T>,
    history: FitnessHistory<T>,
    generation: usize,
    evaluations: u64,
    episodes: u64,
    steps: u64,
    reports: Vec<GenerationReport<T>>,
}

impl<T: Scalar, E: Evaluator<T>> Evolution<T, E> {
    /// Builds and evaluates the initial population (generation 0).
    pub fn new(config: EvolutionConfig<T>, evaluator: E) -> Result<Self, EvolutionError> {
        config.validate()?;
        let init = config.init_config();
        let mut tracker = InnovationTracker::new(init.first_hidden_id());
        let mut rng = rng_from_seed(derive_seed(config.seed, &[stream::REPRODUCTION, 0]));
        let population = init_population(&init, &mut tracker, &mut rng)?;
        Self::start(config, evaluator, population, tracker)
    }

    /// Starts from a given population, which is (re)evaluated as generation 0.
    pub fn from_population(
        config: EvolutionConfig<T>,
        evaluator: E,
        population: Vec<Genome<T>>,
    ) -> Result<Self, EvolutionError> {
        config.validate()?;
        if population.len() != config.population_size {
            return Err(EvolutionError::Config(format!(
                "population has {} genomes, config says {}",
                population.len(),
                config.population_size
            )));
        }
        if let Some(i) = population.iter().position(|g| !g.is_valid()) {
            return Err(EvolutionError::Config(format!("initial genome {i} is invalid")));
        }
        let tracker = InnovationTracker::after(&population);
        let tracker = if tracker.peek() < config.init_config().first_hidden_id() {
            InnovationTracker::new(config.init_config().first_hidden_id())
        } else {
            tracker
        };
        Self::start(config, evaluator, population, tracker)
    }

    fn start(
        config: EvolutionConfig<T>,
        evaluator: E,
        mut population: Vec<Genome<T>>,
        tracker: InnovationTracker,
    ) -> Result<Self, EvolutionError> {
        let results = evaluate_all(&evaluator, &population, 0, config.seed)?;
        let (mut episodes, mut steps) = (0, 0);
        for (g, r) in population.iter_mut().zip(&results) {
            g.fitness = Some(r.fitness);
            episodes += r.episodes;
            steps += r.steps;
        }
        let distances = DistanceMatrix::from_population(&population);
        let d_init = minimum_spanning_tree(&distances).total;
        let diversity = DiversityState::new(d_init, config.beta_div, config.t_max, config.k_d, config.initial_ratio)?
            .with_ratio_bounds(config.ratio_min, config.ratio_max)?;
        let mutation = MutationRateState::with_bounds(config.mu0, config.k_i, config.mu_min, config.mu_max)?;
        let mut history = FitnessHistory::new(config.alpha_i);
        let (best, mean) = best_and_mean(&population);
        history.push(best, mean);
        let partition = speciate_with(&fitness_of(&population), &distances, config.species_count)?;

        let mut evolution = Self {
            evaluations: population.len() as u64,
            config,
            evaluator,
            population,
            tracker,
            partition,
            diversity,
            mutation,
            history,
            generation: 0,
            episodes,
            steps,
            reports: Vec::new(),
        };
        let report = evolution.report(d_init, None);
        evolution.reports.push(report);
        Ok(evolution)
    }

    pub fn config(&self) -> &EvolutionConfig<T> {
        &self.config
    }

    pub fn population(&self) -> &[Genome<T>] {
        &self.population
    }

    pub fn partition(&self) -> &SpeciesPartition {
        &self.partition
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn reports(&self) -> &[GenerationReport<T>] {
        &self.reports
    }

    pub fn diversity_state(&self) -> &DiversityState<T> {
        &self.diversity
    }

    pub fn mutation_state(&self) -> &MutationRateState<T> {
        &self.mutation
    }

    pub fn fitness_history(&self) -> &FitnessHistory<T> {
        &self.history
    }

    /// Fittest genome, lowest index on ties.
    pub fn best(&self) -> &Genome<T> {
        let i = speciation::best_index(self.population.iter().map(|g| g.fitness)).unwrap_or(0);
        &self.population[i]
    }

    pub fn best_fitness(&self) -> T {
        self.best().fitness.expect("population is evaluated")
    }

    pub fn is_solved(&self) -> bool {
        self.config.solve_threshold.is_some_and(|th| self.best_fitness() >= th)
    }

    pub fn tournament(&self) -> Result<TournamentConfig, VariationError> {
        TournamentConfig::from_ratio(self.config.n_tournament, self.diversity.ratio.as_f64())
    }

    /// Breeds, evaluates and installs the next generation, then updates the
    /// controllers. Returns that generation's report.
    pub fn step(&mut self) -> Result<&GenerationReport<T>, EvolutionError> {
        let t = self.generation + 1;
        let mut rng = rng_from_seed(derive_seed(self.config.seed, &[stream::REPRODUCTION, t as u64]));
        self.tracker.start_generation();
        let rates = MutationRates { structural: self.mutation.mu, ..self.config.rates };
        let tournament = self.tournament()?;
        let cx = self.config.crossover_rate;

        // Stage 1: champions survive, each species refills itself.
        let mut next: Vec<Genome<T>> = Vec::with_capacity(self.population.len());
        let mut champions: Vec<Genome<T>> = Vec::with_capacity(self.partition.species_count());
        let mut offspring: Vec<Genome<T>> = Vec::new();
        for members in &self.partition.members {
            let fitness: Vec<T> = members.iter().map(|&i| self.population[i].fitness.expect("evaluated")).collect();
            let champ = speciation::best_index(fitness.iter().map(|&f| Some(f))).expect("species nonempty");
            champions.push(self.population[members[champ]].clone());
            let quota = members.len() - 1;
            if quota == 0 {
                continue;
            }
            let pool = tournament_indices(&fitness, tournament, 2 * quota, &mut rng)?;
            for pair in pool.chunks_exact(2) {
                let (a, b) = (&self.population[members[pair[0]]], &self.population[members[pair[1]]]);
                offspring.push(breed(a, b, cx, &rates, &mut self.tracker, &mut rng)?);
            }
        }

        // Stage 2: champion-pool offspring replace the worst stage-1 offspring.
        let n2 = self.config.stage2_offspring(champions.len());
        let champion_fitness: Vec<T> = champions.iter().map(|g| g.fitness.expect("evaluated")).collect();
        let pool = tournament_indices(&champion_fitness, tournament, 2 * n2, &mut rng)?;
        let mut elite_offspring = Vec::with_capacity(n2);
        for pair in pool.chunks_exact(2) {
            let (a, b) = (&champions[pair[0]], &champions[pair[1]]);
            elite_offspring.push(breed(a, b, cx, &rates, &mut self.tracker, &mut rng)?);
        }

        let n1 = offspring.len();
        offspring.extend(elite_offspring);
        let results = evaluate_all(&self.evaluator, &offspring, t, self.config.seed)?;
        for (g, r) in offspring.iter_mut().zip(&results) {
            g.fitness = Some(r.fitness);
            self.episodes += r.episodes;
            self.steps += r.steps;
        }
        self.evaluations += offspring.len() as u64;

        let elite = offspring.split_off(n1);
        let mut order: Vec<usize> = (0..n1).collect();
        order.sort_by(|&a, &b| {
            offspring[a].fitness.partial_cmp(&offspring[b].fitness).unwrap_or(std::cmp::Ordering::Equal)
        });
        for (slot, child) in order.into_iter().zip(elite) {
            offspring[slot] = child;
        }

        next.extend(champions);
        next.extend(offspring);
        debug_assert_eq!(next.len(), self.config.population_size);
        debug_assert!(next.iter().all(Genome::is_valid));
        self.population = next;
        self.generation = t;

        let distances = DistanceMatrix::from_population(&self.population);
        let measured = minimum_spanning_tree(&distances).total;
        self.partition = speciate_with(&fitness_of(&self.population), &distances, self.config.species_count)?;
        let (best, mean) = best_and_mean(&self.population);
        self.history.push(best, mean);
        if self.config.diversity_control {
            self.diversity.update_ratio(measured, t);
        } else {
            self.diversity.record(measured, t);
        }
        let improvements = self.history.improvements();
        if self.config.mutation_control {
            if let Some((i_best, i_ave)) = improvements {
                self.mutation.update(i_best, i_ave);
            }
        }
        let report = self.report(measured, improvements);
        self.reports.push(report);
        Ok(self.reports.last().expect("just pushed"))
    }

    /// Steps until `t_max` or until solved.
    pub fn run(mut self) -> Result<RunOutcome<T>, EvolutionError> {
        while self.generation < self.config.t_max && !self.is_solved() {
            self.step()?;
        }
        Ok(self.into_outcome())
    }

    pub fn into_outcome(self) -> RunOutcome<T> {
        let solved = self.is_solved();
        let best = self.best().clone();
        RunOutcome { best, reports: self.reports, solved }
    }

    fn report(&self, measured: T, improvements: Option<(T, T)>) -> GenerationReport<T> {
        let (best, mean) = best_and_mean(&self.population);
        let tournament = self.tournament().expect("validated tournament size");
        GenerationReport {
            generation: self.generation,
            best_fitness: best,
            mean_fitness: mean,
            diversity: measured,
            desired_diversity: self.diversity.desired_diversity(self.generation),
            ratio: self.diversity.ratio,
            n_tournament: tournament.n_tournament(),
            n_winners: tournament.n_winners(),
            i_best: improvements.map(|(b, _)| b),
            i_ave: improvements.map(|(_, a)| a),
            mu: self.mutation.mu,
            species_sizes: self.partition.sizes(),
            evaluations: self.evaluations,
            episodes: self.episodes,
            steps: self.steps,
        }
    }
}

/// Crossover (or a copy of `a`) followed by mutation.
fn breed<T: Scalar>(
    a: &Genome<T>,
    b: &Genome<T>,
    crossover_rate: T,
    rates: &MutationRates<T>,
    tracker: &mut InnovationTracker,
    rng: &mut Rng,
) -> Result<Genome<T>, EvolutionError> {
    let child = if rng.random::<f64>() < crossover_rate.as_f64() {
        crossover(a, b, rng)?
    } else {
        let mut c = a.clone();
        c.fitness = None;
        c.species_id = None;
        c
    };
    Ok(mutate(&child, rates, tracker, rng).0)
}

fn fitness_of<T: Scalar>(population: &[Genome<T>]) -> Vec<Option<T>> {
    population.iter().map(|g| g.fitness).collect()
}

fn best_and_mean<T: Scalar>(population: &[Genome<T>]) -> (T, T) {
    let mut best = T::neg_infinity();
    let mut sum = T::zero();
    for g in population {
        let f = g.fitness.expect("population is evaluated");
        best = best.max(f);
        sum = sum + f;
    }
    (best, sum / T::cast(population.len() as f64))
}

/// Evaluates in parallel, collecting in index order.
fn evaluate_all<T: Scalar, E: Evaluator<T>>(
    evaluator: &E,
    genomes: &[Genome<T>],
    generation: usize,
    run_seed: u64,
) -> Result<Vec<Evaluation<T>>, EvolutionError> {
    genomes
        .par_iter()
        .enumerate()
        .map(|(index, g)| {
            let seed = derive_seed(run_seed, &[stream::EVALUATION, generation as u64, index as u64]);
            let ctx = EvalContext { generation, index, seed };
            let r = evaluator
                .evaluate(g, &ctx)
                .map_err(|source| EvolutionError::Evaluation { generation, index, seed, source })?;
            if !r.fitness.is_finite() {
                return Err(EvolutionError::NonFiniteFitness { generation, index });
            }
            Ok(r)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::Role;

    /// Rewards edge count; cheap and deterministic.
    fn edges_fitness(g: &Genome<f64>, _: &EvalContext) -> Result<Evaluation<f64>, BoxError> {
        Ok(Evaluation { fitness: g.edges().len() as f64, episodes: 1, steps: 1 })
    }

    fn small_config() -> EvolutionConfig<f64> {
        let mut c = EvolutionConfig::new(2, 1, 20);
        c.species_count = 3;
        c.t_max = 5;
        c.seed = 11;
        c
    }

    #[test]
    fn generation_zero_is_reported() {
        let evo = Evolution::new(small_config(), edges_fitness).unwrap();
        assert_eq!(evo.reports().len(), 1);
        assert_eq!(evo.evaluations(), 20);
        assert_eq!(evo.reports()[0].desired_diversity, evo.reports()[0].diversity);
        assert_eq!(evo.population()[0].count_role(Role::Input), 2);
    }

    #[test]
    fn evaluation_accounting_per_generation() {
        let cfg = small_config();
        let mut evo = Evolution::new(cfg.clone(), edges_fitness).unwrap();
        let before = evo.evaluations();
        let species = evo.partition().species_count();
        evo.step().unwrap();
        let n2 = cfg.stage2_offspring(species) as u64;
        assert_eq!(evo.evaluations(), before + (20 - species as u64) + n2);
        assert_eq!(evo.population().len(), 20);
    }

    #[test]
    fn t_max_zero_returns_initial_best() {
        let mut cfg = small_config();
        cfg.t_max = 0;
        let evo = Evolution::new(cfg, edges_fitness).unwrap();
        let best = evo.best().clone();
        let out = evo.run().unwrap();
        assert_eq!(out.best, best);
        assert_eq!(out.reports.len(), 1);
    }

    #[test]
    fn evaluation_errors_carry_context() {
        let failing = |_: &Genome<f64>, ctx: &EvalContext| -> Result<Evaluation<f64>, BoxError> {
            if ctx.index == 3 {
                Err("boom".into())
            } else {
                Ok(Evaluation::of(0.0))
            }
        };
        let err = Evolution::new(small_config(), failing).err().unwrap();
        let msg = err.to_string();
        assert!(msg.contains("genome 3") && msg.contains("boom"), "{msg}");
    }

    #[test]
    fn solve_threshold_stops_early() {
        let mut cfg = small_config();
        cfg.solve_threshold = Some(0.0);
        cfg.t_max = 50;
        let out = Evolution::new(cfg, edges_fitness).unwrap().run().unwrap();
        assert!(out.solved);
        assert_eq!(out.reports.len(), 1);
    }

    #[test]
    fn config_validation() {
        let mut c = small_config();
        c.species_count = 21;
        assert!(c.validate().is_err());
        let mut c = small_config();
        c.mu0 = 0.95;
        assert!(c.validate().is_err());
        let mut c = small_config();
        c.n_tournament = 1;
        assert!(c.validate().is_err());
        assert_eq!(default_tournament_size(200), 10);
        assert_eq!(default_tournament_size(8), 2);
    }
}
