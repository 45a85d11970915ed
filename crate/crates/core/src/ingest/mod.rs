//! Dataset I/O and synthetic dataset generation.

mod format;
mod synthetic;

pub use format::{load_dataset, save_dataset, DatasetManifest};
pub use synthetic::{
    feature_sum_positive, generate_synthetic, has_triangle, SyntheticKind, SyntheticSpec,
    SYNTHETIC_SPLIT,
};
