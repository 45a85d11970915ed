//! Noise-Noise Ratio Difference.
//!
//! With `h_X(t)` the performance under feature noise and `h_E(t)` under
//! structure noise,
//!
//! ```text
//! NNRD   = log10( mean_{t=1..T} ratio(t) )
//! NNRD_e = log10( ratio(T) )
//! ratio(t) = h_X(t) / h_E(t)   (higher-is-better metrics)
//!          = h_E(t) / h_X(t)   (lower-is-better metrics)
//! ```
//!
//! Positive values mean structure carries more useful information, negative
//! values mean features do. The unnoised level `t = 0` is left out of the mean,
//! and denominators are floored at [`DENOMINATOR_FLOOR`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{NoiseCurve, SweepConfig};
use crate::graph::{MetricKind, Orientation, TaskKind};
use crate::neural::Readout;
use crate::noise::NoiseSchedule;

pub const DENOMINATOR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NnrdValues {
    pub nnrd: f64,
    pub nnrd_e: f64,
}

/// Numerator and floored denominator of the ratio at one level.
fn ratio_terms(feature: f64, structure: f64, orientation: Orientation) -> (f64, f64) {
    let (num, den) = match orientation {
        Orientation::HigherIsBetter => (feature, structure),
        Orientation::LowerIsBetter => (structure, feature),
    };
    (num, den.max(DENOMINATOR_FLOOR))
}

/// NNRD and NNRD_e from the mean curves of both axes.
pub fn compute_nnrd(
    curve_feature: &NoiseCurve,
    curve_structure: &NoiseCurve,
    orientation: Orientation,
) -> Result<NnrdValues> {
    if curve_feature.schedule != curve_structure.schedule {
        return Err(Error::InvalidArgument(
            "feature and structure curves use different schedules".into(),
        ));
    }
    let (hx, he) = (
        &curve_feature.mean_per_level,
        &curve_structure.mean_per_level,
    );
    let levels = curve_feature.schedule.len();
    if hx.len() != levels || he.len() != levels || levels < 2 {
        return Err(Error::InvalidArgument(format!(
            "incomplete curves: {} and {} means for {levels} levels",
            hx.len(),
            he.len()
        )));
    }
    if let Some(v) = hx.iter().chain(he).find(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("non-finite curve value {v}")));
    }

    let terms: Vec<(f64, f64)> = (1..levels)
        .map(|t| ratio_terms(hx[t], he[t], orientation))
        .collect();
    let mean = terms.iter().map(|(n, d)| n / d).sum::<f64>() / terms.len() as f64;
    // Log of a quotient as a difference of logs, so swapping the curves
    // negates NNRD_e bit for bit.
    let (num, den) = terms[terms.len() - 1];
    let nnrd_e = num.log10() - den.log10();
    let nnrd = if terms.len() == 1 {
        nnrd_e
    } else {
        mean.log10()
    };
    let values = NnrdValues { nnrd, nnrd_e };
    if !values.nnrd.is_finite() || !values.nnrd_e.is_finite() {
        return Err(Error::Numeric(format!(
            "NNRD is not finite (mean ratio {mean}, extreme ratio {})",
            num / den
        )));
    }
    Ok(values)
}

/// Everything needed to interpret and reproduce one profiling run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnrdReport {
    pub dataset: String,
    pub task_kind: TaskKind,
    pub metric: MetricKind,
    pub orientation: Orientation,
    pub nnrd: f64,
    pub nnrd_e: f64,
    /// Mean of all `p = 0` runs over both axes.
    pub baseline: f64,
    pub curve_feature: NoiseCurve,
    pub curve_structure: NoiseCurve,
    pub schedule: NoiseSchedule,
    pub repeats: usize,
    pub seed: u64,
    pub layers: usize,
    pub hidden: usize,
    pub readout: Readout,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl NnrdReport {
    pub fn new(
        dataset: impl Into<String>,
        task_kind: TaskKind,
        metric: MetricKind,
        curve_feature: NoiseCurve,
        curve_structure: NoiseCurve,
        sweep: &SweepConfig,
    ) -> Result<Self> {
        let orientation = metric.orientation();
        let values = compute_nnrd(&curve_feature, &curve_structure, orientation)?;
        let zero_runs: Vec<f64> = curve_feature.per_run[0]
            .iter()
            .chain(&curve_structure.per_run[0])
            .copied()
            .collect();
        let baseline = zero_runs.iter().sum::<f64>() / zero_runs.len() as f64;
        Ok(Self {
            dataset: dataset.into(),
            task_kind,
            metric,
            orientation,
            nnrd: values.nnrd,
            nnrd_e: values.nnrd_e,
            baseline,
            schedule: sweep.schedule.clone(),
            repeats: sweep.repeats,
            seed: sweep.base_seed,
            layers: sweep.model.num_layers,
            hidden: sweep.model.hidden_dim,
            readout: sweep.model.readout,
            learning_rate: sweep.train.adam.learning_rate,
            epochs: sweep.train.epochs,
            batch_size: sweep.train.batch_size,
            curve_feature,
            curve_structure,
        })
    }

    /// Recomputes NNRD values from the stored curves.
    pub fn recompute(&self) -> Result<NnrdValues> {
        compute_nnrd(&self.curve_feature, &self.curve_structure, self.orientation)
    }
}
