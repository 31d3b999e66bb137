use std::io::Write;

use super::{action_adapter, Action, EnvError, EnvKind, Environment};
use crate::evolution::{BoxError, EvalContext, Evaluation, Evaluator};
use crate::genome::Genome;
use crate::network::Phenotype;
use crate::scalar::Scalar;
use crate::seeding::{derive_seed, stream};

/// Episode seeds with the accumulated reward needed to pass each one.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSet {
    seeds: Vec<u64>,
    thresholds: Vec<f64>,
    /// Reward credited for each scenario the genome never reached.
    pub unreached_reward: f64,
}

impl ScenarioSet {
    pub fn new(seeds: Vec<u64>, thresholds: Vec<f64>) -> Result<Self, EnvError> {
        if seeds.is_empty() {
            return Err(EnvError::Scenarios("need at least one scenario".into()));
        }
        if seeds.len() != thresholds.len() {
            return Err(EnvError::Scenarios(format!(
                "{} seeds but {} thresholds",
                seeds.len(),
                thresholds.len()
            )));
        }
        Ok(Self { seeds, thresholds, unreached_reward: 0.0 })
    }

    /// `n` scenarios seeded from `run_seed`, all with the same threshold.
    pub fn derived(run_seed: u64, n: usize, threshold: f64) -> Result<Self, EnvError> {
        Self::new(Self::derived_seeds(run_seed, n), vec![threshold; n])
    }

    pub fn derived_seeds(run_seed: u64, n: usize) -> Vec<u64> {
        (0..n as u64).map(|i| scenario_seed(run_seed, i)).collect()
    }

    pub fn with_unreached_reward(mut self, reward: f64) -> Self {
        self.unreached_reward = reward;
        self
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    pub fn seeds(&self) -> &[u64] {
        &self.seeds
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }
}

/// Seed of training scenario `i` for a run.
pub fn scenario_seed(run_seed: u64, i: u64) -> u64 {
    derive_seed(run_seed, &[stream::SCENARIO, i])
}

/// Pass threshold that switches to `later` once the generation exceeds `after`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdSchedule {
    pub initial: f64,
    pub switch: Option<(usize, f64)>,
}

impl ThresholdSchedule {
    pub fn constant(threshold: f64) -> Self {
        Self { initial: threshold, switch: None }
    }

    pub fn at(&self, generation: usize) -> f64 {
        match self.switch {
            Some((after, later)) if generation > after => later,
            _ => self.initial,
        }
    }

    pub fn default_for(kind: EnvKind) -> Self {
        match kind {
            EnvKind::MountainCar => Self::constant(0.0),
            EnvKind::Acrobot => Self { initial: -500.0, switch: Some((20, -150.0)) },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpisodeOutcome {
    pub seed: u64,
    pub reward: f64,
    pub steps: usize,
    /// Ended before the step limit.
    pub terminated: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitnessOutcome {
    pub f_net: f64,
    /// Scenarios passed, `N_p`.
    pub passed: usize,
    /// Every episode actually run, in scenario order.
    pub episodes: Vec<EpisodeOutcome>,
}

impl FitnessOutcome {
    pub fn total_steps(&self) -> u64 {
        self.episodes.iter().map(|e| e.steps as u64).sum()
    }
}

/// Runs scenarios in order while the genome keeps passing them.
///
/// `F_net` is the sum of the rewards of the episodes run (the passed ones and
/// the first failure), plus `unreached_reward` for each scenario never
/// reached, divided by the number of scenarios.
pub fn progressive_fitness<E>(
    scenarios: &ScenarioSet,
    mut episode: impl FnMut(usize, u64) -> Result<EpisodeOutcome, E>,
) -> Result<FitnessOutcome, E> {
    let mut episodes = Vec::with_capacity(scenarios.len());
    let mut passed = 0;
    let mut sum = 0.0;
    for (i, (&seed, &threshold)) in scenarios.seeds.iter().zip(&scenarios.thresholds).enumerate() {
        let outcome = episode(i, seed)?;
        sum += outcome.reward;
        episodes.push(outcome);
        if outcome.reward >= threshold {
            passed += 1;
        } else {
            break;
        }
    }
    let unreached = scenarios.len() - episodes.len();
    sum += unreached as f64 * scenarios.unreached_reward;
    Ok(FitnessOutcome { f_net: sum / scenarios.len() as f64, passed, episodes })
}

/// One logged step: the observation the action was chosen from, the action,
/// and what it earned.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub observation: Vec<f64>,
    pub action: Action,
    pub reward: f64,
    pub done: bool,
}

/// Runs one episode of `net` in `env` from `seed`. With `normalize`, the
/// network sees observations rescaled by [`EnvKind::normalize_observation`];
/// traces always hold raw observations.
pub fn run_episode<T: Scalar>(
    env: &mut dyn Environment,
    net: &mut Phenotype<T>,
    seed: u64,
    normalize: bool,
    mut trace: Option<&mut Vec<TraceRow>>,
) -> Result<EpisodeOutcome, EnvError> {
    let kind = env.kind();
    if net.n_inputs() != env.n_obs() || net.n_outputs() != env.n_act() {
        return Err(EnvError::OutputArity { env: kind.name(), expected: env.n_act(), found: net.n_outputs() });
    }
    net.reset();
    let mut obs = env.reset(seed);
    let mut scaled = obs.clone();
    let mut inputs = vec![T::zero(); obs.len()];
    let mut outputs = vec![T::zero(); net.n_outputs()];
    let mut outputs_f64 = vec![0.0; net.n_outputs()];
    let activations = net.output_activations().to_vec();
    let mut reward = 0.0;
    loop {
        if normalize {
            kind.normalize_observation(&obs, &mut scaled);
        } else {
            scaled.copy_from_slice(&obs);
        }
        for (x, &o) in inputs.iter_mut().zip(&scaled) {
            *x = T::cast(o);
        }
        net.step_into(&inputs, &mut outputs)?;
        for (y, &o) in outputs_f64.iter_mut().zip(&outputs) {
            *y = o.as_f64();
        }
        let action = action_adapter(kind, &outputs_f64, &activations)?;
        let (r, done) = env.advance(action)?;
        reward += r;
        if let Some(rows) = trace.as_deref_mut() {
            rows.push(TraceRow { step: env.steps_taken() - 1, observation: obs.clone(), action, reward: r, done });
        }
        env.observe(&mut obs);
        if done {
            let steps = env.steps_taken();
            return Ok(EpisodeOutcome { seed, reward, steps, terminated: steps < env.max_steps() });
        }
    }
}

/// Writes a trace as CSV with columns `step, obs_0.., action, reward, done`.
pub fn write_trace_csv<W: Write>(writer: W, rows: &[TraceRow]) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(writer);
    let n_obs = rows.first().map_or(0, |r| r.observation.len());
    let mut header = vec!["step".to_string()];
    header.extend((0..n_obs).map(|i| format!("obs_{i}")));
    header.extend(["action".to_string(), "reward".to_string(), "done".to_string()]);
    out.write_record(&header)?;
    for row in rows {
        let mut rec = vec![row.step.to_string()];
        rec.extend(row.observation.iter().map(|x| x.to_string()));
        rec.push(match row.action {
            Action::Continuous(f) => f.to_string(),
            Action::Discrete(i) => i.to_string(),
        });
        rec.push(row.reward.to_string());
        rec.push(u8::from(row.done).to_string());
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Progressive fitness of genomes in one environment over fixed scenario seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvEvaluator {
    pub kind: EnvKind,
    pub seeds: Vec<u64>,
    pub schedule: ThresholdSchedule,
    pub unreached_reward: f64,
    pub normalize: bool,
}

impl EnvEvaluator {
    /// `n_scenarios` training scenarios seeded from `run_seed`, default
    /// thresholds, and unreached scenarios credited the worst episode reward.
    pub fn new(kind: EnvKind, run_seed: u64, n_scenarios: usize) -> Self {
        Self {
            kind,
            seeds: ScenarioSet::derived_seeds(run_seed, n_scenarios),
            schedule: ThresholdSchedule::default_for(kind),
            unreached_reward: kind.min_episode_reward(),
            normalize: true,
        }
    }

    pub fn scenarios(&self, generation: usize) -> Result<ScenarioSet, EnvError> {
        let threshold = self.schedule.at(generation);
        Ok(ScenarioSet::new(self.seeds.clone(), vec![threshold; self.seeds.len()])?
            .with_unreached_reward(self.unreached_reward))
    }

    pub fn fitness<T: Scalar>(&self, genome: &Genome<T>, generation: usize) -> Result<FitnessOutcome, BoxError> {
        let mut net = Phenotype::compile(genome, T::cast(self.kind.dt()))?;
        let mut env = self.kind.make();
        let scenarios = self.scenarios(generation)?;
        let outcome = progressive_fitness(&scenarios, |_, seed| run_episode(env.as_mut(), &mut net, seed, self.normalize, None))?;
        Ok(outcome)
    }
}

impl<T: Scalar> Evaluator<T> for EnvEvaluator {
    fn evaluate(&self, genome: &Genome<T>, ctx: &EvalContext) -> Result<Evaluation<T>, BoxError> {
        let outcome = self.fitness(genome, ctx.generation)?;
        Ok(Evaluation {
            fitness: T::cast(outcome.f_net),
            episodes: outcome.episodes.len() as u64,
            steps: outcome.total_steps(),
        })
    }
}
