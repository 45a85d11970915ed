//! Reverse-mode differentiation over a flat tape of matrix operations.
//!
//! Only the operations the GIN model needs are supported. Each operation
//! appends a node holding its value; [`Tape::backward`] walks the nodes in
//! reverse and accumulates gradients for every node that depends on a
//! trainable leaf.

use std::rc::Rc;

use crate::error::{Error, Result};
use crate::graph::TaskKind;
use crate::matrix::Matrix;

use super::loss::{self, MaskedTargets};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    /// `n x d` plus a `1 x d` row broadcast.
    AddBias(Var, Var),
    Add(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    /// Output row `i` is input row `idx[i]`.
    GatherRows(Var, Rc<[usize]>),
    /// Output row `idx[i]` accumulates input row `i`.
    ScatterAddRows(Var, Rc<[usize]>),
    /// Row `i` multiplied by `factors[i]`.
    ScaleRows(Var, Rc<[f64]>),
    MaskedLoss(Var, Rc<MaskedTargets>, TaskKind),
}

#[derive(Debug, Default)]
pub struct Tape {
    values: Vec<Matrix>,
    ops: Vec<Op>,
    requires_grad: Vec<bool>,
}

/// Gradients indexed by tape position; `None` for nodes that received none.
#[derive(Debug)]
pub struct Grads(Vec<Option<Matrix>>);

impl Grads {
    pub fn get(&self, v: Var) -> Option<&Matrix> {
        self.0[v.0].as_ref()
    }

    /// Gradient of `v`, or zeros of the given shape if nothing flowed into it.
    pub fn take_or_zeros(&mut self, v: Var, shape: (usize, usize)) -> Matrix {
        self.0[v.0]
            .take()
            .unwrap_or_else(|| Matrix::zeros(shape.0, shape.1))
    }
}

fn shape_error(tensor: &str, expected: impl ToString, actual: (usize, usize)) -> Error {
    Error::Shape {
        tensor: tensor.to_string(),
        expected: expected.to_string(),
        actual: format!("{}x{}", actual.0, actual.1),
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn push(&mut self, value: Matrix, op: Op, requires_grad: bool) -> Var {
        self.values.push(value);
        self.ops.push(op);
        self.requires_grad.push(requires_grad);
        Var(self.values.len() - 1)
    }

    /// A trainable leaf.
    pub fn param(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// A leaf that never receives gradients.
    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.values[v.0]
    }

    fn rg(&self, a: Var) -> bool {
        self.requires_grad[a.0]
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.cols() != bv.rows() {
            return Err(shape_error(
                "matmul rhs",
                format!("{} rows", av.cols()),
                bv.shape(),
            ));
        }
        let out = av.matmul(bv);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, Op::MatMul(a, b), rg))
    }

    pub fn add_bias(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(bias));
        if bv.rows() != 1 || bv.cols() != av.cols() {
            return Err(shape_error("bias", format!("1x{}", av.cols()), bv.shape()));
        }
        let mut out = av.clone();
        let b = bv.as_slice();
        for r in 0..out.rows() {
            for (o, x) in out.row_mut(r).iter_mut().zip(b) {
                *o += x;
            }
        }
        let rg = self.rg(a) || self.rg(bias);
        Ok(self.push(out, Op::AddBias(a, bias), rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(shape_error(
                "add rhs",
                format!("{}x{}", av.rows(), av.cols()),
                bv.shape(),
            ));
        }
        let mut out = av.clone();
        out.add_assign(bv);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, Op::Add(a, b), rg))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let out = self.value(a).map(|x| x * factor);
        let rg = self.rg(a);
        self.push(out, Op::Scale(a, factor), rg)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| x.max(0.0));
        let rg = self.rg(a);
        self.push(out, Op::Relu(a), rg)
    }

    pub fn gather_rows(&mut self, a: Var, idx: Rc<[usize]>) -> Result<Var> {
        let av = self.value(a);
        if let Some(&bad) = idx.iter().find(|&&i| i >= av.rows()) {
            return Err(shape_error(
                "gather index",
                format!("< {}", av.rows()),
                (bad, 0),
            ));
        }
        let out = av.select_rows(&idx);
        let rg = self.rg(a);
        Ok(self.push(out, Op::GatherRows(a, idx), rg))
    }

    pub fn scatter_add_rows(&mut self, a: Var, idx: Rc<[usize]>, out_rows: usize) -> Result<Var> {
        let av = self.value(a);
        if idx.len() != av.rows() {
            return Err(shape_error(
                "scatter source",
                format!("{} rows", idx.len()),
                av.shape(),
            ));
        }
        let mut out = Matrix::zeros(out_rows, av.cols());
        for (i, &target) in idx.iter().enumerate() {
            if target >= out_rows {
                return Err(shape_error(
                    "scatter index",
                    format!("< {out_rows}"),
                    (target, 0),
                ));
            }
            for (o, x) in out.row_mut(target).iter_mut().zip(av.row(i)) {
                *o += x;
            }
        }
        let rg = self.rg(a);
        Ok(self.push(out, Op::ScatterAddRows(a, idx), rg))
    }

    pub fn scale_rows(&mut self, a: Var, factors: Rc<[f64]>) -> Result<Var> {
        let av = self.value(a);
        if factors.len() != av.rows() {
            return Err(shape_error(
                "row factors",
                format!("{} rows", factors.len()),
                av.shape(),
            ));
        }
        let mut out = av.clone();
        for (r, &f) in factors.iter().enumerate() {
            for x in out.row_mut(r) {
                *x *= f;
            }
        }
        let rg = self.rg(a);
        Ok(self.push(out, Op::ScaleRows(a, factors), rg))
    }

    /// Task-masked loss as a `1 x 1` node; see [`loss::masked_loss`].
    pub fn masked_loss(
        &mut self,
        predictions: Var,
        targets: Rc<MaskedTargets>,
        kind: TaskKind,
    ) -> Result<Var> {
        let value = loss::masked_loss_value(self.value(predictions), &targets, kind)?;
        let rg = self.rg(predictions);
        Ok(self.push(
            Matrix::scalar(value),
            Op::MaskedLoss(predictions, targets, kind),
            rg,
        ))
    }

    /// Gradients of the scalar `output` with respect to every node.
    pub fn backward(&self, output: Var) -> Grads {
        assert_eq!(
            self.value(output).shape(),
            (1, 1),
            "backward needs a scalar output"
        );
        let mut grads: Vec<Option<Matrix>> = vec![None; self.values.len()];
        grads[output.0] = Some(Matrix::scalar(1.0));

        for i in (0..=output.0).rev() {
            if !self.requires_grad[i] {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            match &self.ops[i] {
                Op::Leaf => {
                    grads[i] = Some(g);
                    continue;
                }
                Op::MatMul(a, b) => {
                    if self.rg(*a) {
                        let ga = g.matmul_transposed(self.value(*b));
                        accumulate(&mut grads, *a, ga);
                    }
                    if self.rg(*b) {
                        let gb = self.value(*a).transposed_matmul(&g);
                        accumulate(&mut grads, *b, gb);
                    }
                }
                Op::AddBias(a, bias) => {
                    if self.rg(*bias) {
                        let mut gb = Matrix::zeros(1, g.cols());
                        for row in g.iter_rows() {
                            for (o, x) in gb.as_mut_slice().iter_mut().zip(row) {
                                *o += x;
                            }
                        }
                        accumulate(&mut grads, *bias, gb);
                    }
                    if self.rg(*a) {
                        accumulate(&mut grads, *a, g);
                    }
                }
                Op::Add(a, b) => {
                    if self.rg(*a) && self.rg(*b) {
                        accumulate(&mut grads, *a, g.clone());
                        accumulate(&mut grads, *b, g);
                    } else if self.rg(*a) {
                        accumulate(&mut grads, *a, g);
                    } else if self.rg(*b) {
                        accumulate(&mut grads, *b, g);
                    }
                }
                Op::Scale(a, f) => {
                    accumulate(&mut grads, *a, g.map(|x| x * f));
                }
                Op::Relu(a) => {
                    let mut ga = g;
                    for (x, &y) in ga.as_mut_slice().iter_mut().zip(self.values[i].as_slice()) {
                        if y <= 0.0 {
                            *x = 0.0;
                        }
                    }
                    accumulate(&mut grads, *a, ga);
                }
                Op::GatherRows(a, idx) => {
                    let src = self.value(*a);
                    let mut ga = Matrix::zeros(src.rows(), src.cols());
                    for (r, &target) in idx.iter().enumerate() {
                        for (o, x) in ga.row_mut(target).iter_mut().zip(g.row(r)) {
                            *o += x;
                        }
                    }
                    accumulate(&mut grads, *a, ga);
                }
                Op::ScatterAddRows(a, idx) => {
                    accumulate(&mut grads, *a, g.select_rows(idx));
                }
                Op::ScaleRows(a, factors) => {
                    let mut ga = g;
                    for (r, &f) in factors.iter().enumerate() {
                        for x in ga.row_mut(r) {
                            *x *= f;
                        }
                    }
                    accumulate(&mut grads, *a, ga);
                }
                Op::MaskedLoss(pred, targets, kind) => {
                    let upstream = g.get(0, 0);
                    let mut gp = loss::masked_loss_grad(self.value(*pred), targets, *kind);
                    for x in gp.as_mut_slice() {
                        *x *= upstream;
                    }
                    accumulate(&mut grads, *pred, gp);
                }
            }
        }
        Grads(grads)
    }
}

fn accumulate(grads: &mut [Option<Matrix>], v: Var, g: Matrix) {
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Central differences on `f` at every entry of `x`.
    fn numeric_grad(x: &Matrix, f: impl Fn(&Matrix) -> f64) -> Matrix {
        let h = 1e-6;
        let mut out = Matrix::zeros(x.rows(), x.cols());
        for i in 0..x.len() {
            let mut plus = x.clone();
            plus.as_mut_slice()[i] += h;
            let mut minus = x.clone();
            minus.as_mut_slice()[i] -= h;
            out.as_mut_slice()[i] = (f(&plus) - f(&minus)) / (2.0 * h);
        }
        out
    }

    fn close(a: &Matrix, b: &Matrix) {
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((x - y).abs() < 1e-6 * (1.0 + x.abs()), "{x} vs {y}");
        }
    }

    /// sum(relu(gather(A·W + b)) scattered) through a masked MSE.
    fn pipeline(a: &Matrix, w: &Matrix, b: &Matrix) -> (Tape, Var, [Var; 3]) {
        let mut t = Tape::new();
        let (av, wv, bv) = (t.param(a.clone()), t.param(w.clone()), t.param(b.clone()));
        let h = t.matmul(av, wv).unwrap();
        let h = t.add_bias(h, bv).unwrap();
        let h = t.relu(h);
        let g = t.gather_rows(h, Rc::from(vec![0, 2, 2, 1])).unwrap();
        let s = t
            .scatter_add_rows(g, Rc::from(vec![1, 0, 1, 1]), 2)
            .unwrap();
        let s = t.scale_rows(s, Rc::from(vec![0.5, 2.0])).unwrap();
        let s = t.scale(s, 1.5);
        let s2 = t.add(s, s).unwrap();
        let targets = MaskedTargets::new(2, 2, vec![Some(1.0), None, Some(-0.5), Some(0.25)]);
        let loss = t
            .masked_loss(s2, Rc::new(targets), TaskKind::MultilabelClassification)
            .unwrap();
        (t, loss, [av, wv, bv])
    }

    #[test]
    fn composite_gradients_match_finite_differences() {
        let a = Matrix::from_vec(3, 2, vec![0.3, -0.7, 1.1, 0.4, -0.2, 0.9]);
        let w = Matrix::from_vec(2, 2, vec![0.5, -0.3, 0.8, 0.2]);
        let b = Matrix::from_vec(1, 2, vec![0.1, -0.05]);
        let (tape, loss, [av, wv, bv]) = pipeline(&a, &w, &b);
        let grads = tape.backward(loss);

        let f_a = |x: &Matrix| {
            let (t, l, _) = pipeline(x, &w, &b);
            t.value(l).get(0, 0)
        };
        close(grads.get(av).unwrap(), &numeric_grad(&a, f_a));
        let f_w = |x: &Matrix| {
            let (t, l, _) = pipeline(&a, x, &b);
            t.value(l).get(0, 0)
        };
        close(grads.get(wv).unwrap(), &numeric_grad(&w, f_w));
        let f_b = |x: &Matrix| {
            let (t, l, _) = pipeline(&a, &w, x);
            t.value(l).get(0, 0)
        };
        close(grads.get(bv).unwrap(), &numeric_grad(&b, f_b));
    }

    #[test]
    fn constants_receive_no_gradient() {
        let mut t = Tape::new();
        let x = t.constant(Matrix::filled(2, 2, 1.0));
        let w = t.param(Matrix::filled(2, 1, 0.5));
        let y = t.matmul(x, w).unwrap();
        let targets = MaskedTargets::new(2, 1, vec![Some(0.0), Some(0.0)]);
        let l = t
            .masked_loss(y, Rc::new(targets), TaskKind::Regression)
            .unwrap();
        let g = t.backward(l);
        assert!(g.get(x).is_none());
        assert!(g.get(w).is_some());
    }

    #[test]
    fn shape_errors_name_the_tensor() {
        let mut t = Tape::new();
        let a = t.param(Matrix::zeros(2, 3));
        let b = t.param(Matrix::zeros(2, 3));
        let err = t.matmul(a, b).unwrap_err();
        assert!(matches!(err, Error::Shape { ref tensor, .. } if tensor == "matmul rhs"));
        assert!(t.gather_rows(a, Rc::from(vec![5])).is_err());
        assert!(t.scatter_add_rows(a, Rc::from(vec![0]), 1).is_err());
    }
}
