//! `curves.csv` and `report.json`.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::NoiseCurve;
use crate::nnrdcore::NnrdReport;
use crate::noise::{NoiseAxis, NoiseSchedule};

pub const CURVES_HEADER: &str = "axis,level_index,p,repeat,metric";

/// Writes `contents` to a sibling temp file, then renames it over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(contents)?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn curves_csv(report: &NnrdReport) -> String {
    let mut out = String::new();
    out.push_str(CURVES_HEADER);
    out.push('\n');
    for curve in [&report.curve_feature, &report.curve_structure] {
        for (t, row) in curve.per_run.iter().enumerate() {
            let p = curve.schedule.levels()[t];
            for (r, &v) in row.iter().enumerate() {
                writeln!(
                    out,
                    "{},{t},{},{r},{}",
                    curve.axis,
                    format_real(p),
                    format_real(v)
                )
                .unwrap();
            }
        }
    }
    out
}

/// One row per run, ordered by axis (feature, structure), level, repeat.
pub fn write_curves_csv(report: &NnrdReport, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), curves_csv(report).as_bytes())
}

/// Parses a curves file back into `(feature, structure)` curves.
pub fn read_curves_csv(path: impl AsRef<Path>) -> Result<(NoiseCurve, NoiseCurve)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file = path.display().to_string();
    let mut lines = text.lines();
    if lines.next() != Some(CURVES_HEADER) {
        return Err(Error::format(&file, "missing or unexpected header"));
    }
    // (levels, runs) per axis
    let mut axes: [(Vec<f64>, Vec<Vec<f64>>); 2] = Default::default();
    for (i, line) in lines.enumerate() {
        let bad = |what: &str| Error::format(&file, format!("row {}: {what}", i + 2));
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 5 {
            return Err(bad("expected 5 columns"));
        }
        let slot = match cells[0] {
            "feature" => 0,
            "structure" => 1,
            _ => return Err(bad("unknown axis")),
        };
        let t: usize = cells[1].parse().map_err(|_| bad("bad level_index"))?;
        let p: f64 = cells[2].parse().map_err(|_| bad("bad p"))?;
        let r: usize = cells[3].parse().map_err(|_| bad("bad repeat"))?;
        let v: f64 = cells[4].parse().map_err(|_| bad("bad metric"))?;
        let (levels, runs) = &mut axes[slot];
        if t == levels.len() {
            levels.push(p);
            runs.push(Vec::new());
        } else if t + 1 != levels.len() {
            return Err(bad("rows out of order"));
        }
        if runs[t].len() != r {
            return Err(bad("repeats out of order"));
        }
        runs[t].push(v);
    }
    let [(fl, fr), (sl, sr)] = axes;
    Ok((
        NoiseCurve::from_runs(NoiseAxis::Feature, NoiseSchedule::new(fl)?, fr)?,
        NoiseCurve::from_runs(NoiseAxis::Structure, NoiseSchedule::new(sl)?, sr)?,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub layers: usize,
    pub hidden: usize,
    pub readout: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
}

/// On-disk shape of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportJson {
    pub dataset: String,
    pub task_kind: String,
    pub metric: String,
    pub nnrd: f64,
    pub nnrd_e: f64,
    pub baseline: f64,
    pub schedule: Vec<f64>,
    pub repeats: usize,
    pub seed: u64,
    pub model: ModelSummary,
    pub train: TrainSummary,
}

impl From<&NnrdReport> for ReportJson {
    fn from(r: &NnrdReport) -> Self {
        Self {
            dataset: r.dataset.clone(),
            task_kind: r.task_kind.as_str().to_string(),
            metric: r.metric.as_str().to_string(),
            nnrd: r.nnrd,
            nnrd_e: r.nnrd_e,
            baseline: r.baseline,
            schedule: r.schedule.levels().to_vec(),
            repeats: r.repeats,
            seed: r.seed,
            model: ModelSummary {
                layers: r.layers,
                hidden: r.hidden,
                readout: r.readout.as_str().to_string(),
            },
            train: TrainSummary {
                lr: r.learning_rate,
                epochs: r.epochs,
                batch: r.batch_size,
            },
        }
    }
}

pub fn write_report_json(report: &NnrdReport, path: impl AsRef<Path>) -> Result<()> {
    let mut json = serde_json::to_string_pretty(&ReportJson::from(report))
        .map_err(|e| Error::Numeric(format!("report serialization: {e}")))?;
    json.push('\n');
    write_atomic(path.as_ref(), json.as_bytes())
}

pub fn read_report_json(path: impl AsRef<Path>) -> Result<ReportJson> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::format(path.display().to_string(), e.to_string()))
}
