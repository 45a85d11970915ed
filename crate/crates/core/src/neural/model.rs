//! Graph Isomorphism Network over [`GraphBatch`]es.
//!
//! Each layer computes `h_v <- MLP((1 + eps) * h_v + sum_u m_uv)` where the
//! message `m_uv` is `h_u`, or `ReLU(h_u + P e_uv)` when edge features exist.
//! Node states are pooled per graph (mean or sum) and passed through a
//! two-layer head producing one raw score per task.

use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphDataset, NodeEncoding};
use crate::matrix::Matrix;

use super::batch::GraphBatch;
use super::tape::{Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    Mean,
    Sum,
}

impl Readout {
    pub fn as_str(self) -> &'static str {
        match self {
            Readout::Mean => "mean",
            Readout::Sum => "sum",
        }
    }
}

impl std::str::FromStr for Readout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Readout::Mean),
            "sum" => Ok(Readout::Sum),
            other => Err(Error::InvalidArgument(format!("unknown readout {other:?}"))),
        }
    }
}

/// How raw node features are embedded into the hidden dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSpec {
    /// One lookup table per column; `vocab_sizes[c]` rows each.
    Categorical { vocab_sizes: Vec<usize> },
    /// One dense projection from `dim` raw columns.
    Linear { dim: usize },
}

impl InputSpec {
    pub fn input_dim(&self) -> usize {
        match self {
            InputSpec::Categorical { vocab_sizes } => vocab_sizes.len(),
            InputSpec::Linear { dim } => *dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub gin_epsilon: f64,
    pub readout: Readout,
    pub num_tasks: usize,
    pub input: InputSpec,
    pub edge_dim: Option<usize>,
}

impl ModelConfig {
    pub const DEFAULT_LAYERS: usize = 3;
    pub const DEFAULT_HIDDEN: usize = 100;

    /// Default architecture sized for `dataset`. Categorical vocabularies are
    /// `max value + 1` per column over the whole dataset.
    pub fn for_dataset(dataset: &GraphDataset) -> Result<Self> {
        let dim = dataset.node_feature_dim();
        let input = match dataset.node_encoding {
            NodeEncoding::Linear => InputSpec::Linear { dim },
            NodeEncoding::CategoricalEmbed => {
                let mut vocab = vec![1usize; dim];
                for g in &dataset.graphs {
                    for row in g.node_features.iter_rows() {
                        for (c, &x) in row.iter().enumerate() {
                            let code = category(x, c)?;
                            vocab[c] = vocab[c].max(code + 1);
                        }
                    }
                }
                InputSpec::Categorical { vocab_sizes: vocab }
            }
        };
        Ok(Self {
            num_layers: Self::DEFAULT_LAYERS,
            hidden_dim: Self::DEFAULT_HIDDEN,
            gin_epsilon: 0.0,
            readout: Readout::Mean,
            num_tasks: dataset.task.num_tasks(),
            input,
            edge_dim: dataset.edge_feature_dim(),
        })
    }

    pub fn with_hidden(mut self, hidden_dim: usize) -> Self {
        self.hidden_dim = hidden_dim;
        self
    }

    pub fn with_readout(mut self, readout: Readout) -> Self {
        self.readout = readout;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_layers == 0 || self.hidden_dim == 0 || self.num_tasks == 0 {
            return Err(Error::InvalidArgument(format!(
                "num_layers, hidden_dim and num_tasks must be positive \
                 (got {}, {}, {})",
                self.num_layers, self.hidden_dim, self.num_tasks
            )));
        }
        if !self.gin_epsilon.is_finite() {
            return Err(Error::InvalidArgument("gin_epsilon must be finite".into()));
        }
        Ok(())
    }
}

fn category(x: f64, column: usize) -> Result<usize> {
    if x >= 0.0 && x.fract() == 0.0 && x < u32::MAX as f64 {
        Ok(x as usize)
    } else {
        Err(Error::Shape {
            tensor: format!("categorical node feature column {column}"),
            expected: "a non-negative integer code".into(),
            actual: x.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// `in x out`.
    pub weight: Matrix,
    /// `1 x out`.
    pub bias: Matrix,
}

impl Dense {
    fn glorot(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize) -> Self {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let data = (0..fan_in * fan_out)
            .map(|_| rng.gen_range(-limit..=limit))
            .collect();
        Self {
            weight: Matrix::from_vec(fan_in, fan_out, data),
            bias: Matrix::zeros(1, fan_out),
        }
    }

    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weight: Matrix::zeros(fan_in, fan_out),
            bias: Matrix::zeros(1, fan_out),
        }
    }
}

/// Two dense layers with a ReLU in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub first: Dense,
    pub second: Dense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InputEncoder {
    Categorical(Vec<Matrix>),
    Linear(Dense),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub encoder: InputEncoder,
    pub edge_projection: Option<Dense>,
    pub layers: Vec<Mlp>,
    pub head: Mlp,
}

impl ModelParams {
    /// Glorot-uniform dense weights, `0.1 * N(0,1)` lookup tables, zero biases.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = config.hidden_dim;
        let encoder = match &config.input {
            InputSpec::Categorical { vocab_sizes } => InputEncoder::Categorical(
                vocab_sizes
                    .iter()
                    .map(|&v| {
                        let data = (0..v * h)
                            .map(|_| {
                                let z: f64 = StandardNormal.sample(&mut rng);
                                0.1 * z
                            })
                            .collect();
                        Matrix::from_vec(v, h, data)
                    })
                    .collect(),
            ),
            InputSpec::Linear { dim } => InputEncoder::Linear(Dense::glorot(&mut rng, *dim, h)),
        };
        let edge_projection = config.edge_dim.map(|d| Dense::glorot(&mut rng, d, h));
        let mut mlp = |out: usize| Mlp {
            first: Dense::glorot(&mut rng, h, h),
            second: Dense::glorot(&mut rng, h, out),
        };
        let layers = (0..config.num_layers).map(|_| mlp(h)).collect();
        let head = mlp(config.num_tasks);
        Ok(Self {
            encoder,
            edge_projection,
            layers,
            head,
        })
    }

    /// All-zero parameters with the shapes implied by `config`.
    pub fn zeros(config: &ModelConfig) -> Self {
        let h = config.hidden_dim;
        let encoder = match &config.input {
            InputSpec::Categorical { vocab_sizes } => InputEncoder::Categorical(
                vocab_sizes.iter().map(|&v| Matrix::zeros(v, h)).collect(),
            ),
            InputSpec::Linear { dim } => InputEncoder::Linear(Dense::zeros(*dim, h)),
        };
        let mlp = |out: usize| Mlp {
            first: Dense::zeros(h, h),
            second: Dense::zeros(h, out),
        };
        Self {
            encoder,
            edge_projection: config.edge_dim.map(|d| Dense::zeros(d, h)),
            layers: (0..config.num_layers).map(|_| mlp(h)).collect(),
            head: mlp(config.num_tasks),
        }
    }

    /// Every tensor with a stable name, in a fixed order.
    pub fn tensors(&self) -> Vec<(String, &Matrix)> {
        let mut out = Vec::new();
        match &self.encoder {
            InputEncoder::Categorical(tables) => {
                for (c, t) in tables.iter().enumerate() {
                    out.push((format!("encoder.table{c}"), t));
                }
            }
            InputEncoder::Linear(d) => {
                out.push(("encoder.weight".into(), &d.weight));
                out.push(("encoder.bias".into(), &d.bias));
            }
        }
        if let Some(d) = &self.edge_projection {
            out.push(("edge_projection.weight".into(), &d.weight));
            out.push(("edge_projection.bias".into(), &d.bias));
        }
        let mlps = self
            .layers
            .iter()
            .enumerate()
            .map(|(i, m)| (format!("layer{i}"), m))
            .chain(std::iter::once(("head".to_string(), &self.head)));
        for (prefix, m) in mlps {
            out.push((format!("{prefix}.first.weight"), &m.first.weight));
            out.push((format!("{prefix}.first.bias"), &m.first.bias));
            out.push((format!("{prefix}.second.weight"), &m.second.weight));
            out.push((format!("{prefix}.second.bias"), &m.second.bias));
        }
        out
    }

    /// Mutable counterpart of [`ModelParams::tensors`], same order.
    pub fn tensors_mut(&mut self) -> Vec<(String, &mut Matrix)> {
        let mut out = Vec::new();
        match &mut self.encoder {
            InputEncoder::Categorical(tables) => {
                for (c, t) in tables.iter_mut().enumerate() {
                    out.push((format!("encoder.table{c}"), t));
                }
            }
            InputEncoder::Linear(d) => {
                out.push(("encoder.weight".into(), &mut d.weight));
                out.push(("encoder.bias".into(), &mut d.bias));
            }
        }
        if let Some(d) = &mut self.edge_projection {
            out.push(("edge_projection.weight".into(), &mut d.weight));
            out.push(("edge_projection.bias".into(), &mut d.bias));
        }
        let mlps = self
            .layers
            .iter_mut()
            .enumerate()
            .map(|(i, m)| (format!("layer{i}"), m))
            .chain(std::iter::once(("head".to_string(), &mut self.head)));
        for (prefix, m) in mlps {
            out.push((format!("{prefix}.first.weight"), &mut m.first.weight));
            out.push((format!("{prefix}.first.bias"), &mut m.first.bias));
            out.push((format!("{prefix}.second.weight"), &mut m.second.weight));
            out.push((format!("{prefix}.second.bias"), &mut m.second.bias));
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.is_finite())
    }

    /// Errors on the first tensor whose shape disagrees with `config`.
    pub fn check_shapes(&self, config: &ModelConfig) -> Result<()> {
        let expected = ModelParams::zeros(config);
        let want = expected.tensors();
        let have = self.tensors();
        if want.len() != have.len() {
            return Err(Error::Shape {
                tensor: "parameter set".into(),
                expected: format!("{} tensors", want.len()),
                actual: format!("{} tensors", have.len()),
            });
        }
        for ((name, w), (_, h)) in want.iter().zip(&have) {
            if w.shape() != h.shape() {
                return Err(Error::Shape {
                    tensor: name.clone(),
                    expected: format!("{}x{}", w.rows(), w.cols()),
                    actual: format!("{}x{}", h.rows(), h.cols()),
                });
            }
        }
        Ok(())
    }
}

/// A recorded forward pass: `output` is `graphs x num_tasks` raw scores and
/// `params[i]` is the tape leaf of the `i`-th tensor of
/// [`ModelParams::tensors`].
pub struct Forward {
    pub tape: Tape,
    pub output: Var,
    pub params: Vec<Var>,
}

impl Forward {
    pub fn predictions(&self) -> &Matrix {
        self.tape.value(self.output)
    }
}

fn dense(tape: &mut Tape, x: Var, w: Var, b: Var) -> Result<Var> {
    let y = tape.matmul(x, w)?;
    tape.add_bias(y, b)
}

fn mlp(tape: &mut Tape, x: Var, vars: &[Var]) -> Result<Var> {
    let h = dense(tape, x, vars[0], vars[1])?;
    let h = tape.relu(h);
    dense(tape, h, vars[2], vars[3])
}

fn check_batch(config: &ModelConfig, graphs: &[&Graph]) -> Result<()> {
    if graphs.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let want = config.input.input_dim();
    for g in graphs {
        if g.node_feature_dim() != want {
            return Err(Error::Shape {
                tensor: "node_features".into(),
                expected: format!("{want} columns"),
                actual: format!("{} columns", g.node_feature_dim()),
            });
        }
        if g.edge_feature_dim() != config.edge_dim {
            return Err(Error::Shape {
                tensor: "edge_features".into(),
                expected: format!("{:?} columns", config.edge_dim),
                actual: format!("{:?} columns", g.edge_feature_dim()),
            });
        }
    }
    Ok(())
}

/// Runs the model on `graphs`, recording every operation for backward.
pub fn model_forward(
    params: &ModelParams,
    config: &ModelConfig,
    graphs: &[&Graph],
) -> Result<Forward> {
    config.validate()?;
    params.check_shapes(config)?;
    check_batch(config, graphs)?;
    let batch = GraphBatch::new(graphs);

    let mut tape = Tape::new();
    let param_vars: Vec<Var> = params
        .tensors()
        .into_iter()
        .map(|(_, t)| tape.param(t.clone()))
        .collect();
    let mut cursor = 0;
    let mut next = |count: usize| {
        let slice = &param_vars[cursor..cursor + count];
        cursor += count;
        slice.to_vec()
    };

    let mut h = match &config.input {
        InputSpec::Categorical { vocab_sizes } => {
            let tables = next(vocab_sizes.len());
            let mut acc: Option<Var> = None;
            for (c, (&table, &vocab)) in tables.iter().zip(vocab_sizes).enumerate() {
                let codes = (0..batch.num_nodes)
                    .map(|v| {
                        let code = category(batch.node_features.get(v, c), c)?;
                        if code >= vocab {
                            return Err(Error::Shape {
                                tensor: format!("categorical node feature column {c}"),
                                expected: format!("code < {vocab}"),
                                actual: code.to_string(),
                            });
                        }
                        Ok(code)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let emb = tape.gather_rows(table, codes.into())?;
                acc = Some(match acc {
                    Some(prev) => tape.add(prev, emb)?,
                    None => emb,
                });
            }
            match acc {
                Some(v) => v,
                None => tape.constant(Matrix::zeros(batch.num_nodes, config.hidden_dim)),
            }
        }
        InputSpec::Linear { .. } => {
            let w = next(2);
            let x = tape.constant(batch.node_features.clone());
            dense(&mut tape, x, w[0], w[1])?
        }
    };

    let edge_term = match (&batch.msg_edge_features, config.edge_dim) {
        (Some(ef), Some(_)) => {
            let w = next(2);
            let e = tape.constant(ef.clone());
            Some(dense(&mut tape, e, w[0], w[1])?)
        }
        _ => None,
    };

    for _ in 0..config.num_layers {
        let vars = next(4);
        let from = tape.gather_rows(h, Rc::clone(&batch.msg_src))?;
        let msg = match edge_term {
            Some(e) => {
                let m = tape.add(from, e)?;
                tape.relu(m)
            }
            None => from,
        };
        let agg = tape.scatter_add_rows(msg, Rc::clone(&batch.msg_dst), batch.num_nodes)?;
        let own = if config.gin_epsilon == 0.0 {
            h
        } else {
            tape.scale(h, 1.0 + config.gin_epsilon)
        };
        let z = tape.add(own, agg)?;
        h = mlp(&mut tape, z, &vars)?;
    }

    let pooled = tape.scatter_add_rows(h, Rc::clone(&batch.node_graph), batch.num_graphs)?;
    let pooled = match config.readout {
        Readout::Sum => pooled,
        Readout::Mean => {
            let factors: Vec<f64> = batch
                .graph_sizes
                .iter()
                .map(|&n| if n == 0 { 0.0 } else { 1.0 / n as f64 })
                .collect();
            tape.scale_rows(pooled, factors.into())?
        }
    };
    let head = next(4);
    let output = mlp(&mut tape, pooled, &head)?;

    Ok(Forward {
        tape,
        output,
        params: param_vars,
    })
}

/// Raw scores for `graphs`, evaluated in chunks of `chunk` graphs.
pub fn predict(
    params: &ModelParams,
    config: &ModelConfig,
    graphs: &[&Graph],
    chunk: usize,
) -> Result<Matrix> {
    let chunk = chunk.max(1);
    let mut data = Vec::with_capacity(graphs.len() * config.num_tasks);
    for part in graphs.chunks(chunk) {
        let fwd = model_forward(params, config, part)?;
        data.extend_from_slice(fwd.predictions().as_slice());
    }
    Ok(Matrix::from_vec(graphs.len(), config.num_tasks, data))
}
