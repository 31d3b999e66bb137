use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use super::HarnessError;
use crate::evolution::GenerationReport;

pub const TELEMETRY_COLUMNS: [&str; 15] = [
    "generation",
    "best_fitness",
    "mean_fitness",
    "diversity",
    "desired_diversity",
    "ratio",
    "n_tournament",
    "n_winners",
    "i_best",
    "i_ave",
    "mu",
    "species_sizes",
    "evaluations",
    "episodes",
    "steps",
];

/// Per-generation CSV rows, flushed after every row.
pub struct TelemetryWriter {
    path: PathBuf,
    out: csv::Writer<BufWriter<File>>,
}

impl TelemetryWriter {
    pub fn create(path: &Path) -> Result<Self, HarnessError> {
        let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
        let mut out = csv::Writer::from_writer(BufWriter::new(file));
        out.write_record(TELEMETRY_COLUMNS)?;
        Ok(Self { path: path.to_path_buf(), out })
    }

    pub fn write(&mut self, r: &GenerationReport<f64>) -> Result<(), HarnessError> {
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        let sizes = r.species_sizes.iter().map(usize::to_string).collect::<Vec<_>>().join(";");
        self.out.write_record([
            r.generation.to_string(),
            r.best_fitness.to_string(),
            r.mean_fitness.to_string(),
            r.diversity.to_string(),
            r.desired_diversity.to_string(),
            r.ratio.to_string(),
            r.n_tournament.to_string(),
            r.n_winners.to_string(),
            opt(r.i_best),
            opt(r.i_ave),
            r.mu.to_string(),
            sizes,
            r.evaluations.to_string(),
            r.episodes.to_string(),
            r.steps.to_string(),
        ])?;
        self.out.flush().map_err(|e| HarnessError::io(&self.path, e))
    }

    pub fn finish(mut self) -> Result<(), HarnessError> {
        self.out.flush().map_err(|e| HarnessError::io(&self.path, e))
    }
}
