//! Training, evaluation and noise sweeps.

mod metrics;
mod seeds;
mod sweep;
mod train;

pub use metrics::{rmse, roc_auc_masked};
pub use seeds::{run_seeds, splitmix64, RunSeeds};
pub use sweep::{run_sweep, thread_count, NoiseCurve, SweepConfig, THREADS_ENV};
pub use train::{evaluate_loss, evaluate_split, train_model, train_model_traced, TrainOutcome};
