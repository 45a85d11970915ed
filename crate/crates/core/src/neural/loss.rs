//! Task-masked training losses.
//!
//! Classification uses binary cross-entropy on logits, regression squared
//! error. Missing label entries contribute to neither the sum nor the count.

use crate::error::{Error, Result};
use crate::graph::{Graph, Label, TaskKind, TaskSpec};
use crate::matrix::Matrix;

/// Row-major label matrix with missing entries.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedTargets {
    rows: usize,
    cols: usize,
    values: Vec<Label>,
}

impl MaskedTargets {
    pub fn new(rows: usize, cols: usize, values: Vec<Label>) -> Self {
        assert_eq!(values.len(), rows * cols, "target length mismatch");
        Self { rows, cols, values }
    }

    /// Stacks the label vectors of `graphs`.
    pub fn from_graphs(graphs: &[&Graph], num_tasks: usize) -> Self {
        let mut values = Vec::with_capacity(graphs.len() * num_tasks);
        for g in graphs {
            values.extend_from_slice(&g.labels);
        }
        Self::new(graphs.len(), num_tasks, values)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, r: usize, c: usize) -> Label {
        self.values[r * self.cols + c]
    }

    pub fn values(&self) -> &[Label] {
        &self.values
    }

    pub fn present(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    /// Column `c` as a vector.
    pub fn column(&self, c: usize) -> Vec<Label> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }
}

/// `log(1 + exp(z)) - y·z`, evaluated without overflow.
fn bce_with_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn check_shapes(predictions: &Matrix, targets: &MaskedTargets) -> Result<()> {
    if predictions.shape() != targets.shape() {
        return Err(Error::Shape {
            tensor: "predictions".into(),
            expected: format!("{}x{}", targets.rows, targets.cols),
            actual: format!("{}x{}", predictions.rows(), predictions.cols()),
        });
    }
    Ok(())
}

pub(crate) fn masked_loss_value(
    predictions: &Matrix,
    targets: &MaskedTargets,
    kind: TaskKind,
) -> Result<f64> {
    check_shapes(predictions, targets)?;
    let mut total = 0.0;
    let mut count = 0usize;
    for (&z, y) in predictions.as_slice().iter().zip(&targets.values) {
        if let Some(y) = *y {
            total += if kind.is_classification() {
                bce_with_logit(z, y)
            } else {
                (z - y) * (z - y)
            };
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::DegenerateBatch);
    }
    Ok(total / count as f64)
}

/// Gradient of [`masked_loss_value`] with respect to the predictions.
pub(crate) fn masked_loss_grad(
    predictions: &Matrix,
    targets: &MaskedTargets,
    kind: TaskKind,
) -> Matrix {
    let count = targets.present().max(1) as f64;
    let mut grad = Matrix::zeros(predictions.rows(), predictions.cols());
    for ((g, &z), y) in grad
        .as_mut_slice()
        .iter_mut()
        .zip(predictions.as_slice())
        .zip(&targets.values)
    {
        if let Some(y) = *y {
            *g = if kind.is_classification() {
                (sigmoid(z) - y) / count
            } else {
                2.0 * (z - y) / count
            };
        }
    }
    grad
}

/// Mean loss over the non-missing entries of `labels`.
pub fn masked_loss(predictions: &Matrix, labels: &MaskedTargets, task: &TaskSpec) -> Result<f64> {
    masked_loss_value(predictions, labels, task.kind())
}
