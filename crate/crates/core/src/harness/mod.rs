//! Experiment runner behind the `agent` command line: `evolve` runs a
//! configured experiment, `eval` replays a saved genome, `inspect`
//! summarizes one.

mod config;
mod telemetry;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{debug, info};
use thiserror::Error;

use crate::environments::{run_episode, scenario_seed, write_trace_csv, EnvError, EnvKind, EpisodeOutcome, TraceRow};
use crate::evolution::{Evolution, EvolutionError, GenerationReport};
use crate::genome::{deserialize, serialize, Activation, Genome, Memory, ParseError, Role};
use crate::network::Phenotype;

pub use config::{
    DiversitySection, ExperimentConfig, ExperimentSection, FitnessSection, MutationSection, PopulationSection,
    RunRecord, SelectionSection,
};
pub use telemetry::{TelemetryWriter, TELEMETRY_COLUMNS};

pub const TELEMETRY_FILE: &str = "telemetry.csv";
pub const BEST_GENOME_FILE: &str = "best_genome.txt";
pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    GenomeFile { path: PathBuf, source: ParseError },
    #[error("genome does not fit {env}: {reason}")]
    GenomeMismatch { env: EnvKind, reason: String },
    #[error("could not start worker threads: {0}")]
    Threads(String),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error(transparent)]
    Environment(#[from] EnvError),
    #[error("writing csv: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        HarnessError::Io { path: path.to_path_buf(), source }
    }

    /// Process exit status: 1 for bad input, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::GenomeFile { .. } | HarnessError::GenomeMismatch { .. } => 1,
            HarnessError::Evolution(EvolutionError::Config(_)) => 1,
            _ => 2,
        }
    }
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), HarnessError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| HarnessError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
}

#[derive(Clone, Debug, Default)]
pub struct EvolveOptions {
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct EvolveSummary {
    pub output_dir: PathBuf,
    pub solved: bool,
    pub best: Genome<f64>,
    pub reports: Vec<GenerationReport<f64>>,
    pub config: ExperimentConfig,
}

impl EvolveSummary {
    /// 0 when solved, 3 when the generation budget ran out first.
    pub fn exit_code(&self) -> i32 {
        if self.solved {
            0
        } else {
            3
        }
    }
}

pub fn load_genome(path: &Path) -> Result<Genome<f64>, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    deserialize(&text).map_err(|source| HarnessError::GenomeFile { path: path.to_path_buf(), source })
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, HarnessError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    builder.build().map_err(|e| HarnessError::Threads(e.to_string()))
}

/// Runs the experiment in `config_path`, writing telemetry, the best genome
/// and a manifest of the resolved config into the output directory.
pub fn cmd_evolve(config_path: &Path, options: &EvolveOptions) -> Result<EvolveSummary, HarnessError> {
    let mut config = ExperimentConfig::load(config_path)?;
    if let Some(seed) = options.seed {
        config.experiment.seed = seed;
    }
    if let Some(dir) = &options.output_dir {
        config.experiment.output_dir = dir.clone();
    }
    evolve(config.resolve()?, options.threads)
}

/// [`cmd_evolve`] on an in-memory config.
pub fn evolve(config: ExperimentConfig, threads: Option<usize>) -> Result<EvolveSummary, HarnessError> {
    let config = config.resolve()?;
    let evo_config = config.evolution_config()?;
    let evaluator = config.evaluator()?;
    let dir = config.experiment.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    info!(
        "evolving {} with N = {}, t_max = {}, seed = {}",
        config.experiment.environment, evo_config.population_size, evo_config.t_max, evo_config.seed
    );

    let pool = thread_pool(threads)?;
    let final_path = dir.join(TELEMETRY_FILE);
    let partial_path = dir.join(format!("{TELEMETRY_FILE}.partial"));
    let (best, reports, solved) = pool.install(|| -> Result<_, HarnessError> {
        let mut telemetry = TelemetryWriter::create(&partial_path)?;
        let mut evo = Evolution::new(evo_config.clone(), evaluator)?;
        telemetry.write(&evo.reports()[0])?;
        while evo.generation() < evo_config.t_max && !evo.is_solved() {
            let report = evo.step()?;
            debug!(
                "generation {}: best {} mean {} D {} ratio {} mu {}",
                report.generation, report.best_fitness, report.mean_fitness, report.diversity, report.ratio, report.mu
            );
            telemetry.write(report)?;
        }
        telemetry.finish()?;
        let outcome = evo.into_outcome();
        Ok((outcome.best, outcome.reports, outcome.solved))
    })?;
    fs::rename(&partial_path, &final_path).map_err(|e| HarnessError::io(&final_path, e))?;

    write_atomic(&dir.join(BEST_GENOME_FILE), serialize(&best).as_bytes())?;
    let last = reports.last().expect("generation 0 is always reported");
    let mut manifest = config.clone();
    manifest.run = Some(RunRecord {
        version: env!("CARGO_PKG_VERSION").to_string(),
        solved,
        generations: last.generation,
        evaluations: last.evaluations,
        episodes: last.episodes,
        steps: last.steps,
        best_fitness: last.best_fitness,
    });
    write_atomic(&dir.join(MANIFEST_FILE), manifest.to_toml().as_bytes())?;
    info!(
        "finished after {} generations, {} evaluations: best {} ({})",
        last.generation,
        last.evaluations,
        last.best_fitness,
        if solved { "solved" } else { "not solved" }
    );
    Ok(EvolveSummary { output_dir: dir, solved, best, reports, config })
}

#[derive(Clone, Debug)]
pub struct EvalOptions {
    pub episodes: usize,
    pub seed: u64,
    pub trace_dir: Option<PathBuf>,
    pub normalize_observations: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalSummary {
    pub env: EnvKind,
    pub episodes: Vec<EpisodeOutcome>,
}

impl EvalSummary {
    pub fn mean(&self) -> Option<f64> {
        (!self.episodes.is_empty())
            .then(|| self.episodes.iter().map(|e| e.reward).sum::<f64>() / self.episodes.len() as f64)
    }

    pub fn min(&self) -> Option<f64> {
        self.episodes.iter().map(|e| e.reward).reduce(f64::min)
    }

    pub fn max(&self) -> Option<f64> {
        self.episodes.iter().map(|e| e.reward).reduce(f64::max)
    }

    /// Episodes that reached the goal before the step limit.
    pub fn successes(&self) -> usize {
        self.episodes.iter().filter(|e| e.terminated).count()
    }
}

impl fmt::Display for EvalSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "environment: {}", self.env)?;
        writeln!(f, "episodes: {}", self.episodes.len())?;
        let show = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| x.to_string());
        writeln!(f, "mean reward: {}", show(self.mean()))?;
        writeln!(f, "min reward: {}", show(self.min()))?;
        writeln!(f, "max reward: {}", show(self.max()))?;
        writeln!(f, "successes: {}", self.successes())?;
        for (i, e) in self.episodes.iter().enumerate() {
            writeln!(f, "episode {i}: reward {} steps {}", e.reward, e.steps)?;
        }
        Ok(())
    }
}

/// Replays `genome` for `episodes` episodes. Episode `i` uses the same seed as
/// training scenario `i` of a run with this seed.
pub fn evaluate_genome(genome: &Genome<f64>, env: EnvKind, options: &EvalOptions) -> Result<EvalSummary, HarnessError> {
    let mismatch = |reason: String| HarnessError::GenomeMismatch { env, reason };
    let inputs = genome.count_role(Role::Input);
    let outputs = genome.count_role(Role::Output);
    if inputs != env.n_obs() || outputs != env.n_act() {
        return Err(mismatch(format!(
            "genome has {inputs} inputs and {outputs} outputs, environment needs {} and {}",
            env.n_obs(),
            env.n_act()
        )));
    }
    let mut net = Phenotype::compile(genome, env.dt()).map_err(|e| mismatch(e.to_string()))?;
    if let Some(dir) = &options.trace_dir {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    let mut environment = env.make();
    let mut episodes = Vec::with_capacity(options.episodes);
    for i in 0..options.episodes {
        let seed = scenario_seed(options.seed, i as u64);
        let mut rows: Vec<TraceRow> = Vec::new();
        let trace = options.trace_dir.as_ref().map(|_| &mut rows);
        let outcome = run_episode(environment.as_mut(), &mut net, seed, options.normalize_observations, trace)?;
        if let Some(dir) = &options.trace_dir {
            let path = dir.join(format!("episode_{i}.csv"));
            let file = fs::File::create(&path).map_err(|e| HarnessError::io(&path, e))?;
            write_trace_csv(BufWriter::new(file), &rows)?;
        }
        episodes.push(outcome);
    }
    Ok(EvalSummary { env, episodes })
}

pub fn cmd_eval(genome_path: &Path, env: &str, options: &EvalOptions) -> Result<EvalSummary, HarnessError> {
    let env: EnvKind = env.parse().map_err(|e: EnvError| HarnessError::Config(e.to_string()))?;
    let genome = load_genome(genome_path)?;
    evaluate_genome(&genome, env, options)
}

/// Structural summary of a genome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InspectReport {
    pub nodes: usize,
    pub edges: usize,
    pub inputs: usize,
    pub bias: usize,
    pub hidden: usize,
    pub outputs: usize,
    /// Activation name (or `none` for inputs and bias) to node count.
    pub activations: BTreeMap<&'static str, usize>,
    /// Memory order to node count, over all nodes.
    pub memory: [usize; 3],
    /// Edges on the longest path from an input or the bias.
    pub depth: usize,
}

pub fn inspect(genome: &Genome<f64>) -> InspectReport {
    let mut activations: BTreeMap<&'static str, usize> = Activation::ALL.iter().map(|a| (a.name(), 0)).collect();
    activations.insert("none", 0);
    let mut memory = [0usize; 3];
    for n in genome.nodes() {
        *activations.entry(n.activation.map_or("none", Activation::name)).or_default() += 1;
        memory[n.memory.order()] += 1;
    }
    let mut depth_of: BTreeMap<_, usize> = BTreeMap::new();
    let mut depth = 0;
    for id in genome.topological_order().unwrap_or_default() {
        let d = genome.incoming(id).map(|e| depth_of.get(&e.source).copied().unwrap_or(0) + 1).max().unwrap_or(0);
        depth = depth.max(d);
        depth_of.insert(id, d);
    }
    InspectReport {
        nodes: genome.nodes().len(),
        edges: genome.edges().len(),
        inputs: genome.count_role(Role::Input),
        bias: genome.count_role(Role::Bias),
        hidden: genome.count_role(Role::Hidden),
        outputs: genome.count_role(Role::Output),
        activations,
        memory,
        depth,
    }
}

impl fmt::Display for InspectReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nodes: {}", self.nodes)?;
        writeln!(
            f,
            "  input: {}  bias: {}  hidden: {}  output: {}",
            self.inputs, self.bias, self.hidden, self.outputs
        )?;
        writeln!(f, "edges: {}", self.edges)?;
        writeln!(f, "depth: {}", self.depth)?;
        writeln!(f, "activation:")?;
        for (name, count) in &self.activations {
            writeln!(f, "  {name}: {count}")?;
        }
        writeln!(f, "memory:")?;
        for m in Memory::ALL {
            writeln!(f, "  {}: {}", m.order(), self.memory[m.order()])?;
        }
        Ok(())
    }
}

pub fn cmd_inspect(genome_path: &Path) -> Result<InspectReport, HarnessError> {
    Ok(inspect(&load_genome(genome_path)?))
}

/// Writes `text` to stdout, ignoring a closed pipe.
pub fn print_report(text: &str) {
    let _ = io::stdout().lock().write_all(text.as_bytes());
}
