use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiment::{run_sweep, SweepConfig};
use crate::graph::GraphDataset;
use crate::ingest::{generate_synthetic, load_dataset, SyntheticSpec};
use crate::neural::{ModelConfig, Readout, TrainConfig};
use crate::nnrdcore::NnrdReport;
use crate::noise::{make_schedule, NoiseAxis};

use super::artifacts::{write_curves_csv, write_report_json};
use super::svg::render_svg_plot;

pub const CURVES_FILE: &str = "curves.csv";
pub const REPORT_FILE: &str = "report.json";
pub const PLOT_FILE: &str = "curves.svg";

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Directory(PathBuf),
    /// Generated with the request seed.
    Synthetic(SyntheticSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRequest {
    pub source: DataSource,
    pub out_dir: PathBuf,
    pub levels: usize,
    pub repeats: usize,
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub hidden: usize,
    pub readout: Readout,
}

impl RunRequest {
    pub const DEFAULT_SEED: u64 = 42;

    /// Defaults: 10 levels, 5 repeats, seed 42, 50 epochs, batch 64, hidden 100.
    pub fn new(source: DataSource, out_dir: impl Into<PathBuf>) -> Self {
        let train = TrainConfig::default();
        Self {
            source,
            out_dir: out_dir.into(),
            levels: SweepConfig::DEFAULT_LEVELS,
            repeats: SweepConfig::DEFAULT_REPEATS,
            seed: Self::DEFAULT_SEED,
            epochs: train.epochs,
            batch_size: train.batch_size,
            hidden: ModelConfig::DEFAULT_HIDDEN,
            readout: Readout::Mean,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 || self.repeats == 0 {
            return Err(Error::InvalidArgument(
                "levels and repeats must be at least 1".into(),
            ));
        }
        if let DataSource::Directory(dir) = &self.source {
            if same_path(dir, &self.out_dir) {
                return Err(Error::InvalidArgument(format!(
                    "output directory {} is the dataset directory",
                    self.out_dir.display()
                )));
            }
        }
        Ok(())
    }

    /// Name recorded in the report.
    pub fn dataset_name(&self) -> String {
        match &self.source {
            DataSource::Directory(dir) => dir
                .canonicalize()
                .unwrap_or_else(|_| dir.clone())
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| dir.display().to_string()),
            DataSource::Synthetic(spec) => format!("synthetic:{}", spec.kind.as_str()),
        }
    }

    pub fn load(&self) -> Result<GraphDataset> {
        match &self.source {
            DataSource::Directory(dir) => load_dataset(dir),
            DataSource::Synthetic(spec) => generate_synthetic(spec, self.seed),
        }
    }

    pub fn sweep_config(&self, dataset: &GraphDataset) -> Result<SweepConfig> {
        Ok(SweepConfig {
            schedule: make_schedule(self.levels)?,
            repeats: self.repeats,
            base_seed: self.seed,
            train: TrainConfig {
                epochs: self.epochs,
                batch_size: self.batch_size,
                ..TrainConfig::default()
            },
            model: ModelConfig::for_dataset(dataset)?
                .with_hidden(self.hidden)
                .with_readout(self.readout),
        })
    }
}

fn same_path(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => a == b,
    }
}

/// Sweeps both axes and computes NNRD without touching the filesystem
/// beyond reading the dataset.
pub fn profile_dataset(
    dataset: &GraphDataset,
    name: &str,
    sweep: &SweepConfig,
) -> Result<NnrdReport> {
    let feature = run_sweep(dataset, NoiseAxis::Feature, sweep)?;
    let structure = run_sweep(dataset, NoiseAxis::Structure, sweep)?;
    NnrdReport::new(
        name,
        dataset.task.kind(),
        dataset.task.metric(),
        feature,
        structure,
        sweep,
    )
}

pub fn write_artifacts(report: &NnrdReport, out_dir: &Path) -> Result<()> {
    write_curves_csv(report, out_dir.join(CURVES_FILE))?;
    write_report_json(report, out_dir.join(REPORT_FILE))?;
    render_svg_plot(report, out_dir.join(PLOT_FILE))
}

/// Loads or generates the dataset, sweeps both axes, and writes
/// `curves.csv`, `report.json` and `curves.svg` into the output directory.
/// On failure nothing from this run is left behind.
pub fn run_profile(request: &RunRequest) -> Result<NnrdReport> {
    request.validate()?;
    let dataset = request.load()?;
    let sweep = request.sweep_config(&dataset)?;
    let report = profile_dataset(&dataset, &request.dataset_name(), &sweep)?;

    let out_dir = &request.out_dir;
    let created = !out_dir.exists();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    if let Err(e) = write_artifacts(&report, out_dir) {
        for name in [CURVES_FILE, REPORT_FILE, PLOT_FILE] {
            let _ = fs::remove_file(out_dir.join(name));
        }
        if created {
            let _ = fs::remove_dir(out_dir);
        }
        return Err(e.context(format!("writing outputs to {}", out_dir.display())));
    }
    Ok(report)
}
