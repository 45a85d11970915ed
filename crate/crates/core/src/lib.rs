//! Structure-versus-feature information profiling for graph datasets.
//!
//! The pipeline degrades either the graph structure or the node/edge features
//! of a dataset at increasing noise levels, retrains a small GIN at every
//! level, and summarizes the two resulting performance curves as the
//! Noise-Noise Ratio Difference (NNRD): positive when structure carries more
//! useful information, negative when features do.
//!
//! Modules, bottom-up:
//! * [`graph`]: data model, validation, random splits
//! * [`ingest`]: on-disk dataset format and synthetic oracle datasets
//! * [`noise`]: structure and feature noise operators and schedules
//! * [`neural`]: autodiff tape, GIN model, masked losses, Adam
//! * [`experiment`]: training, metrics, noise sweeps
//! * [`nnrdcore`]: the NNRD summary of two curves
//! * [`report`]: CSV/JSON/SVG artifacts and the `profile` driver

pub mod error;
pub mod experiment;
pub mod graph;
pub mod ingest;
pub mod matrix;
pub mod neural;
pub mod nnrdcore;
pub mod noise;
pub mod report;

pub use error::{Error, Result};
pub use graph::{Graph, GraphDataset, TaskKind, TaskSpec};
pub use matrix::Matrix;
pub use noise::{NoiseAxis, NoiseSchedule};
