//! Profiling runs and their on-disk artifacts.

mod artifacts;
mod profile;
mod svg;

pub use artifacts::{
    curves_csv, format_real, read_curves_csv, read_report_json, write_atomic, write_curves_csv,
    write_report_json, ModelSummary, ReportJson, TrainSummary, CURVES_HEADER,
};
pub use profile::{
    profile_dataset, run_profile, write_artifacts, DataSource, RunRequest, CURVES_FILE, PLOT_FILE,
    REPORT_FILE,
};
pub use svg::{caption, render_svg_plot, svg_plot};
