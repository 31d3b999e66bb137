//! Experiment configuration: a TOML file with one table per concern.
//!
//! Unknown keys are rejected. Settings left out are filled from defaults,
//! some of which depend on the environment; the fully resolved form is what
//! gets written to a run's manifest and can be fed back in unchanged.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::environments::{EnvEvaluator, EnvKind, ThresholdSchedule};
use crate::evolution::{default_tournament_size, EvolutionConfig};
use crate::variation::MutationRates;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub population: PopulationSection,
    #[serde(default)]
    pub selection: SelectionSection,
    #[serde(default)]
    pub diversity: DiversitySection,
    #[serde(default)]
    pub mutation: MutationSection,
    #[serde(default)]
    pub fitness: FitnessSection,
    /// Written by `evolve` into the manifest; ignored on input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    /// `mountain_car` or `acrobot`.
    pub environment: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "defaults::t_max")]
    pub t_max: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PopulationSection {
    pub size: usize,
    pub species: usize,
    /// Mean of the Poisson number of hidden nodes per initial genome.
    pub hidden_seed_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectionSection {
    /// Tournament entrants; defaults to `max(2, round(0.05 N))`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_tournament: Option<usize>,
    pub initial_ratio: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub crossover_rate: f64,
    pub stage2_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiversitySection {
    pub control: bool,
    pub beta_div: f64,
    pub k_d: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MutationSection {
    pub control: bool,
    pub mu0: f64,
    pub mu_min: f64,
    pub mu_max: f64,
    pub k_i: f64,
    pub alpha_i: f64,
    pub sigma_w: f64,
    pub p_weight: f64,
    pub p_prop: f64,
    pub add_node_scale: f64,
    pub removal_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitnessSection {
    pub scenarios: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// Generation after which `threshold_later` replaces `threshold`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_after: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_later: Option<f64>,
    /// Reward credited per scenario never reached; defaults to the worst
    /// possible episode reward.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unreached_reward: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve_threshold: Option<f64>,
    pub normalize_observations: bool,
}

/// Outcome summary stored alongside the resolved config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRecord {
    pub version: String,
    pub solved: bool,
    pub generations: usize,
    pub evaluations: u64,
    pub episodes: u64,
    pub steps: u64,
    pub best_fitness: f64,
}

mod defaults {
    use std::path::PathBuf;

    pub fn output_dir() -> PathBuf {
        PathBuf::from("runs")
    }

    pub fn t_max() -> usize {
        100
    }
}

impl Default for PopulationSection {
    fn default() -> Self {
        Self { size: 200, species: 8, hidden_seed_mean: std::f64::consts::SQRT_2 }
    }
}

impl Default for SelectionSection {
    fn default() -> Self {
        Self {
            n_tournament: None,
            initial_ratio: 0.5,
            ratio_min: 0.02,
            ratio_max: 1.0,
            crossover_rate: 1.0,
            stage2_fraction: 0.1,
        }
    }
}

impl Default for DiversitySection {
    fn default() -> Self {
        Self { control: true, beta_div: 1.5, k_d: 0.1 }
    }
}

impl Default for MutationSection {
    fn default() -> Self {
        let r = MutationRates::<f64>::default();
        Self {
            control: true,
            mu0: r.structural,
            mu_min: 0.01,
            mu_max: 0.9,
            k_i: 0.1,
            alpha_i: 1.0,
            sigma_w: r.sigma_w,
            p_weight: r.p_weight,
            p_prop: r.p_prop,
            add_node_scale: r.add_node_scale,
            removal_ratio: r.removal_ratio,
        }
    }
}

impl Default for FitnessSection {
    fn default() -> Self {
        Self {
            scenarios: 5,
            threshold: None,
            threshold_after: None,
            threshold_later: None,
            unreached_reward: None,
            solve_threshold: None,
            normalize_observations: true,
        }
    }
}

impl ExperimentConfig {
    /// Defaults for `env`.
    pub fn for_environment(env: EnvKind) -> Self {
        Self {
            experiment: ExperimentSection {
                environment: env.name().to_string(),
                seed: 0,
                output_dir: defaults::output_dir(),
                t_max: defaults::t_max(),
            },
            population: PopulationSection::default(),
            selection: SelectionSection::default(),
            diversity: DiversitySection::default(),
            mutation: MutationSection::default(),
            fitness: FitnessSection::default(),
            run: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn environment(&self) -> Result<EnvKind, HarnessError> {
        self.experiment
            .environment
            .parse()
            .map_err(|_| HarnessError::Config(format!(
                "experiment.environment: unknown environment `{}` (expected mountain_car or acrobot)",
                self.experiment.environment
            )))
    }

    /// Fills every environment-dependent default, validates, and drops any
    /// run record.
    pub fn resolve(&self) -> Result<Self, HarnessError> {
        let env = self.environment()?;
        let mut r = self.clone();
        r.run = None;
        r.experiment.environment = env.name().to_string();
        if r.experiment.seed > i64::MAX as u64 {
            return Err(HarnessError::Config(format!("experiment.seed = {} exceeds 2^63 - 1", r.experiment.seed)));
        }
        r.selection.n_tournament.get_or_insert(default_tournament_size(r.population.size));
        let schedule = ThresholdSchedule::default_for(env);
        let f = &mut r.fitness;
        f.threshold.get_or_insert(schedule.initial);
        match (f.threshold_after, f.threshold_later) {
            (None, None) => {
                if self.fitness.threshold.is_none() {
                    if let Some((after, later)) = schedule.switch {
                        f.threshold_after = Some(after);
                        f.threshold_later = Some(later);
                    }
                }
            }
            (Some(_), Some(_)) => {}
            _ => {
                return Err(HarnessError::Config(
                    "fitness.threshold_after and fitness.threshold_later must be given together".into(),
                ))
            }
        }
        f.unreached_reward.get_or_insert(env.min_episode_reward());
        f.solve_threshold.get_or_insert(env.solve_threshold());
        if f.scenarios == 0 {
            return Err(HarnessError::Config("fitness.scenarios must be at least 1".into()));
        }
        r.evolution_config()?.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(r)
    }

    /// Loop settings; call on a resolved config.
    pub fn evolution_config(&self) -> Result<EvolutionConfig<f64>, HarnessError> {
        let env = self.environment()?;
        let p = &self.population;
        let s = &self.selection;
        let m = &self.mutation;
        let mut c = EvolutionConfig::new(env.n_obs(), env.n_act(), p.size);
        c.t_max = self.experiment.t_max;
        c.species_count = p.species;
        c.hidden_seed_mean = p.hidden_seed_mean;
        c.n_tournament = s.n_tournament.unwrap_or_else(|| default_tournament_size(p.size));
        c.initial_ratio = s.initial_ratio;
        c.ratio_min = s.ratio_min;
        c.ratio_max = s.ratio_max;
        c.crossover_rate = s.crossover_rate;
        c.stage2_fraction = s.stage2_fraction;
        c.diversity_control = self.diversity.control;
        c.beta_div = self.diversity.beta_div;
        c.k_d = self.diversity.k_d;
        c.mutation_control = m.control;
        c.mu0 = m.mu0;
        c.mu_min = m.mu_min;
        c.mu_max = m.mu_max;
        c.k_i = m.k_i;
        c.alpha_i = m.alpha_i;
        c.rates = MutationRates {
            structural: m.mu0,
            sigma_w: m.sigma_w,
            p_weight: m.p_weight,
            p_prop: m.p_prop,
            add_node_scale: m.add_node_scale,
            removal_ratio: m.removal_ratio,
        };
        c.solve_threshold = self.fitness.solve_threshold;
        c.seed = self.experiment.seed;
        Ok(c)
    }

    /// Fitness function; call on a resolved config.
    pub fn evaluator(&self) -> Result<EnvEvaluator, HarnessError> {
        let env = self.environment()?;
        let f = &self.fitness;
        let mut e = EnvEvaluator::new(env, self.experiment.seed, f.scenarios);
        let defaults = ThresholdSchedule::default_for(env);
        e.schedule = ThresholdSchedule {
            initial: f.threshold.unwrap_or(defaults.initial),
            switch: f.threshold_after.zip(f.threshold_later),
        };
        e.unreached_reward = f.unreached_reward.unwrap_or(env.min_episode_reward());
        e.normalize = f.normalize_observations;
        Ok(e)
    }
}
