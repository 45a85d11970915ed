//! Bias-corrected Adam.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

use super::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment accumulators, one per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    first: Vec<Matrix>,
    second: Vec<Matrix>,
    step: u64,
}

impl AdamState {
    pub fn new(shapes: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let first: Vec<Matrix> = shapes
            .into_iter()
            .map(|(r, c)| Matrix::zeros(r, c))
            .collect();
        Self {
            second: first.clone(),
            first,
            step: 0,
        }
    }

    pub fn for_params(params: &ModelParams) -> Self {
        Self::new(params.tensors().iter().map(|(_, t)| t.shape()))
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// Applies one Adam update to named tensors in place.
///
/// Nothing is modified if any gradient is non-finite or mis-shaped.
pub fn adam_update<'a>(
    tensors: impl IntoIterator<Item = (String, &'a mut Matrix)>,
    grads: &[Matrix],
    state: &mut AdamState,
    config: &AdamConfig,
) -> Result<()> {
    let mut tensors: Vec<(String, &mut Matrix)> = tensors.into_iter().collect();
    if tensors.len() != grads.len() || tensors.len() != state.first.len() {
        return Err(Error::Shape {
            tensor: "gradient list".into(),
            expected: format!("{} tensors", tensors.len()),
            actual: format!("{} grads / {} moments", grads.len(), state.first.len()),
        });
    }
    for (i, ((name, p), g)) in tensors.iter().zip(grads).enumerate() {
        if p.shape() != g.shape() || p.shape() != state.first[i].shape() {
            return Err(Error::Shape {
                tensor: name.clone(),
                expected: format!("{}x{}", p.rows(), p.cols()),
                actual: format!("{}x{}", g.rows(), g.cols()),
            });
        }
        if !g.is_finite() {
            return Err(Error::Numeric(format!("non-finite gradient in {name}")));
        }
    }

    state.step += 1;
    let t = state.step as f64;
    let (b1, b2) = (config.beta1, config.beta2);
    let correct1 = 1.0 - b1.powf(t);
    let correct2 = 1.0 - b2.powf(t);
    for (i, (_, p)) in tensors.iter_mut().enumerate() {
        let m = state.first[i].as_mut_slice();
        let v = state.second[i].as_mut_slice();
        for (((w, &g), m), v) in p
            .as_mut_slice()
            .iter_mut()
            .zip(grads[i].as_slice())
            .zip(m.iter_mut())
            .zip(v.iter_mut())
        {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / correct1;
            let v_hat = *v / correct2;
            *w -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
        }
    }
    Ok(())
}

/// [`adam_update`] over every tensor of a model, in [`ModelParams::tensors`] order.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &[Matrix],
    state: &mut AdamState,
    config: &AdamConfig,
) -> Result<()> {
    adam_update(params.tensors_mut(), grads, state, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_step(w: &mut Matrix, g: f64, state: &mut AdamState, cfg: &AdamConfig) {
        adam_update([("w".to_string(), w)], &[Matrix::scalar(g)], state, cfg).unwrap();
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut w = Matrix::from_vec(1, 3, vec![1.0, -2.0, 0.5]);
        let before = w.clone();
        let mut state = AdamState::new([(1, 3)]);
        adam_update(
            [("w".to_string(), &mut w)],
            &[Matrix::zeros(1, 3)],
            &mut state,
            &AdamConfig::default(),
        )
        .unwrap();
        assert_eq!(w, before);
        assert_eq!(state.step(), 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let cfg = AdamConfig::default();
        for g in [5.0, -0.3, 1e3] {
            let mut w = Matrix::scalar(1.0);
            let mut state = AdamState::new([(1, 1)]);
            scalar_step(&mut w, g, &mut state, &cfg);
            let delta = w.get(0, 0) - 1.0;
            assert!(
                (delta + cfg.learning_rate * f64::signum(g)).abs() < 1e-9,
                "{delta}"
            );
        }
    }

    /// Independent scalar Adam, written directly from the update equations.
    fn reference_adam(w0: f64, lr: f64, steps: usize, grad: impl Fn(f64) -> f64) -> f64 {
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
        let (mut w, mut m, mut v) = (w0, 0.0, 0.0);
        for t in 1..=steps {
            let g = grad(w);
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t as i32));
            let vh = v / (1.0 - b2.powi(t as i32));
            w -= lr * mh / (vh.sqrt() + eps);
        }
        w
    }

    #[test]
    fn converges_on_quadratic_like_reference() {
        let cfg = AdamConfig {
            learning_rate: 0.1,
            ..Default::default()
        };
        let grad = |w: f64| 2.0 * (w - 3.0);
        let mut w = Matrix::scalar(0.0);
        let mut state = AdamState::new([(1, 1)]);
        for _ in 0..100 {
            let g = grad(w.get(0, 0));
            scalar_step(&mut w, g, &mut state, &cfg);
        }
        let reference = reference_adam(0.0, 0.1, 100, grad);
        assert!((w.get(0, 0) - reference).abs() < 1e-12);
        assert!((w.get(0, 0) - 3.0).abs() < 0.05, "{}", w.get(0, 0));
    }

    #[test]
    fn non_finite_gradient_names_tensor_and_changes_nothing() {
        let mut a = Matrix::scalar(1.0);
        let mut b = Matrix::scalar(2.0);
        let mut state = AdamState::new([(1, 1), (1, 1)]);
        let err = adam_update(
            [("alpha".to_string(), &mut a), ("beta".to_string(), &mut b)],
            &[Matrix::scalar(1.0), Matrix::scalar(f64::NAN)],
            &mut state,
            &AdamConfig::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("beta"));
        assert_eq!((a.get(0, 0), b.get(0, 0), state.step()), (1.0, 2.0, 0));
    }
}
