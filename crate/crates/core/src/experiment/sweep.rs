//! One noise axis swept across the schedule, with repeats.
//!
//! Every `(level, repeat)` cell noises the pristine dataset, trains a fresh
//! model and scores the test split. Cells share nothing but the read-only
//! input, so they run in parallel; results are placed by coordinates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{validate_dataset, GraphDataset, MetricKind, SplitName};
use crate::neural::{ModelConfig, TrainConfig};
use crate::noise::{noise_dataset, NoiseAxis, NoiseSchedule};

use super::seeds::run_seeds;
use super::train::{evaluate_split, train_model};

/// Caps the number of worker threads used for a sweep.
pub const THREADS_ENV: &str = "NNRD_THREADS";

/// Mean-over-repeats performance along one noise axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseCurve {
    pub axis: NoiseAxis,
    pub schedule: NoiseSchedule,
    /// `per_run[level][repeat]`.
    pub per_run: Vec<Vec<f64>>,
    pub mean_per_level: Vec<f64>,
}

impl NoiseCurve {
    /// Builds a curve from raw runs, computing the per-level means.
    pub fn from_runs(
        axis: NoiseAxis,
        schedule: NoiseSchedule,
        per_run: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if per_run.len() != schedule.len() {
            return Err(Error::InvalidArgument(format!(
                "{} run rows for {} schedule levels",
                per_run.len(),
                schedule.len()
            )));
        }
        let repeats = per_run.first().map_or(0, Vec::len);
        if repeats == 0 || per_run.iter().any(|row| row.len() != repeats) {
            return Err(Error::InvalidArgument(
                "every level needs the same, non-zero number of repeats".into(),
            ));
        }
        let mean_per_level = per_run
            .iter()
            .map(|row| row.iter().sum::<f64>() / row.len() as f64)
            .collect();
        Ok(Self {
            axis,
            schedule,
            per_run,
            mean_per_level,
        })
    }

    pub fn repeats(&self) -> usize {
        self.per_run.first().map_or(0, Vec::len)
    }

    /// Checks value ranges for `metric`.
    pub fn check(&self, metric: MetricKind) -> Result<()> {
        for (t, row) in self.per_run.iter().enumerate() {
            for (r, &v) in row.iter().enumerate() {
                let ok = v.is_finite()
                    && match metric {
                        MetricKind::RocAuc => (0.0..=1.0).contains(&v),
                        MetricKind::Rmse => v >= 0.0,
                    };
                if !ok {
                    return Err(Error::Numeric(format!(
                        "{} curve level {t} repeat {r}: invalid {} value {v}",
                        self.axis,
                        metric.as_str()
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub schedule: NoiseSchedule,
    pub repeats: usize,
    pub base_seed: u64,
    pub train: TrainConfig,
    pub model: ModelConfig,
}

impl SweepConfig {
    pub const DEFAULT_REPEATS: usize = 5;
    pub const DEFAULT_LEVELS: usize = 10;
}

/// Worker threads: `NNRD_THREADS` if set to a positive integer, otherwise
/// the machine's available parallelism.
pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

fn run_cell(
    dataset: &GraphDataset,
    axis: NoiseAxis,
    level: usize,
    repeat: usize,
    sweep: &SweepConfig,
) -> Result<f64> {
    let seeds = run_seeds(sweep.base_seed, axis, level, repeat);
    let p = sweep.schedule.levels()[level];
    let mut noise_rng = ChaCha8Rng::seed_from_u64(seeds.noise);
    let noised = noise_dataset(dataset, axis, p, &mut noise_rng)?;
    let train = TrainConfig {
        seed: seeds.train,
        ..sweep.train
    };
    let params = train_model(&noised, &sweep.model, &train)?;
    evaluate_split(&params, &sweep.model, &noised, SplitName::Test)
}

/// Trains and scores every `(level, repeat)` cell of one axis.
pub fn run_sweep(
    dataset: &GraphDataset,
    axis: NoiseAxis,
    sweep: &SweepConfig,
) -> Result<NoiseCurve> {
    let violations = validate_dataset(dataset);
    if !violations.is_empty() {
        return Err(Error::InvalidDataset(violations));
    }
    if sweep.repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    sweep.train.validate()?;
    sweep.model.validate()?;

    let cells: Vec<(usize, usize)> = (0..sweep.schedule.len())
        .flat_map(|t| (0..sweep.repeats).map(move |r| (t, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let results: Vec<Result<f64>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(t, r)| {
                run_cell(dataset, axis, t, r, sweep).map_err(|e| {
                    e.context(format!(
                        "{axis} noise, level {t} (p = {}), repeat {r}",
                        sweep.schedule.levels()[t]
                    ))
                })
            })
            .collect()
    });

    let mut per_run = vec![vec![0.0; sweep.repeats]; sweep.schedule.len()];
    for (&(t, r), result) in cells.iter().zip(results) {
        per_run[t][r] = result?;
    }
    let curve = NoiseCurve::from_runs(axis, sweep.schedule.clone(), per_run)?;
    curve.check(dataset.task.metric())?;
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{generate_synthetic, SyntheticKind, SyntheticSpec};
    use crate::matrix::Matrix;
    use crate::noise::make_schedule;

    fn small(kind: SyntheticKind) -> GraphDataset {
        generate_synthetic(&SyntheticSpec::new(kind, 40, (5, 8)), 11).unwrap()
    }

    fn config(ds: &GraphDataset, levels: usize, repeats: usize) -> SweepConfig {
        SweepConfig {
            schedule: make_schedule(levels).unwrap(),
            repeats,
            base_seed: 5,
            train: TrainConfig {
                epochs: 2,
                batch_size: 16,
                ..TrainConfig::default()
            },
            model: ModelConfig::for_dataset(ds).unwrap().with_hidden(6),
        }
    }

    #[test]
    fn feature_noise_on_identical_rows_is_a_pristine_run() {
        let mut ds = small(SyntheticKind::TriangleStructure);
        for g in &mut ds.graphs {
            g.node_features = Matrix::filled(g.num_nodes, 4, 0.25);
        }
        let sweep = config(&ds, 1, 1);
        let curve = run_sweep(&ds, NoiseAxis::Feature, &sweep).unwrap();

        let seeds = run_seeds(sweep.base_seed, NoiseAxis::Feature, 1, 0);
        let train = TrainConfig {
            seed: seeds.train,
            ..sweep.train
        };
        let params = train_model(&ds, &sweep.model, &train).unwrap();
        let direct = evaluate_split(&params, &sweep.model, &ds, SplitName::Test).unwrap();
        assert_eq!(curve.per_run[1][0], direct);
    }

    #[test]
    fn curve_shape_means_and_determinism() {
        let ds = small(SyntheticKind::FeatureSum);
        let sweep = config(&ds, 2, 3);
        let a = run_sweep(&ds, NoiseAxis::Structure, &sweep).unwrap();
        assert_eq!(a.per_run.len(), 3);
        assert!(a.per_run.iter().all(|row| row.len() == 3));
        for (row, mean) in a.per_run.iter().zip(&a.mean_per_level) {
            assert_eq!(*mean, row.iter().sum::<f64>() / 3.0);
        }
        let b = run_sweep(&ds, NoiseAxis::Structure, &sweep).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn from_runs_rejects_ragged_input() {
        let schedule = make_schedule(1).unwrap();
        assert!(
            NoiseCurve::from_runs(NoiseAxis::Feature, schedule.clone(), vec![vec![0.5]]).is_err()
        );
        assert!(NoiseCurve::from_runs(
            NoiseAxis::Feature,
            schedule,
            vec![vec![0.5], vec![0.5, 0.6]]
        )
        .is_err());
    }

    #[test]
    fn out_of_range_values_fail_check() {
        let schedule = make_schedule(1).unwrap();
        let c = NoiseCurve::from_runs(NoiseAxis::Feature, schedule, vec![vec![0.5], vec![1.5]])
            .unwrap();
        assert!(c.check(MetricKind::RocAuc).is_err());
        assert!(c.check(MetricKind::Rmse).is_ok());
    }
}
