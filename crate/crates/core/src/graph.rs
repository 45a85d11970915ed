//! Graph and dataset data model.
//!
//! A [`Graph`] is one undirected attributed graph. Each undirected edge is
//! stored once as `(u, v)` with `u < v`. The order of the edge list carries no
//! meaning: every consumer that depends on order goes through
//! [`Graph::canonical_edge_order`].

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// A per-task label entry; `None` marks a missing label.
pub type Label = Option<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    pub num_nodes: usize,
    pub edges: Vec<(usize, usize)>,
    /// `num_nodes x D_v`.
    pub node_features: Matrix,
    /// `edges.len() x D_e`; row `i` annotates `edges[i]`.
    pub edge_features: Option<Matrix>,
    pub labels: Vec<Label>,
}

impl Graph {
    pub fn new(
        num_nodes: usize,
        edges: Vec<(usize, usize)>,
        node_features: Matrix,
        edge_features: Option<Matrix>,
        labels: Vec<Label>,
    ) -> Self {
        Self {
            num_nodes,
            edges,
            node_features,
            edge_features,
            labels,
        }
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn node_feature_dim(&self) -> usize {
        self.node_features.cols()
    }

    pub fn edge_feature_dim(&self) -> Option<usize> {
        self.edge_features.as_ref().map(Matrix::cols)
    }

    /// Edge indices sorted by their canonical `(min, max)` pair.
    pub fn canonical_edge_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.edges.len()).collect();
        order.sort_by_key(|&i| canonical_pair(self.edges[i]));
        order
    }

    /// Copy of the graph with every pair stored low-index first and the edge
    /// list (and edge-feature rows) sorted.
    pub fn canonicalized(&self) -> Graph {
        let order = self.canonical_edge_order();
        Graph {
            num_nodes: self.num_nodes,
            edges: order
                .iter()
                .map(|&i| canonical_pair(self.edges[i]))
                .collect(),
            node_features: self.node_features.clone(),
            edge_features: self.edge_features.as_ref().map(|f| f.select_rows(&order)),
            labels: self.labels.clone(),
        }
    }

    /// Edge list as a set of canonical pairs.
    pub fn edge_set(&self) -> HashSet<(usize, usize)> {
        self.edges.iter().map(|&e| canonical_pair(e)).collect()
    }

    /// Invariant violations of this graph alone; `index` is used in messages.
    fn violations(&self, index: usize, out: &mut Vec<String>) {
        if self.node_features.rows() != self.num_nodes {
            out.push(format!(
                "graph {index}: node_features has {} rows, expected {}",
                self.node_features.rows(),
                self.num_nodes
            ));
        }
        let mut seen = HashSet::with_capacity(self.edges.len());
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            if u >= self.num_nodes || v >= self.num_nodes {
                out.push(format!(
                    "graph {index}: edge {e} ({u},{v}) has endpoint outside [0,{})",
                    self.num_nodes
                ));
            }
            if u == v {
                out.push(format!("graph {index}: edge {e} ({u},{v}) is a self-loop"));
            } else if u > v {
                out.push(format!(
                    "graph {index}: edge {e} ({u},{v}) is not stored lower index first"
                ));
            }
            if !seen.insert(canonical_pair((u, v))) {
                out.push(format!("graph {index}: edge {e} ({u},{v}) is a duplicate"));
            }
        }
        if let Some(ef) = &self.edge_features {
            if ef.rows() != self.edges.len() {
                out.push(format!(
                    "graph {index}: edge_features row count mismatch ({} rows for {} edges)",
                    ef.rows(),
                    self.edges.len()
                ));
            }
        }
    }
}

#[inline]
pub fn canonical_pair((u, v): (usize, usize)) -> (usize, usize) {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    BinaryClassification,
    MultilabelClassification,
    Regression,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::BinaryClassification => "binary_classification",
            TaskKind::MultilabelClassification => "multilabel_classification",
            TaskKind::Regression => "regression",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "binary_classification" => Some(TaskKind::BinaryClassification),
            "multilabel_classification" => Some(TaskKind::MultilabelClassification),
            "regression" => Some(TaskKind::Regression),
            _ => None,
        }
    }

    pub fn is_classification(self) -> bool {
        !matches!(self, TaskKind::Regression)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    RocAuc,
    Rmse,
}

impl MetricKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::RocAuc => "roc_auc",
            MetricKind::Rmse => "rmse",
        }
    }

    pub fn orientation(self) -> Orientation {
        match self {
            MetricKind::RocAuc => Orientation::HigherIsBetter,
            MetricKind::Rmse => Orientation::LowerIsBetter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    HigherIsBetter,
    LowerIsBetter,
}

/// What is predicted and how it is scored. Metric and orientation are
/// derived from the task kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaskSpec {
    kind: TaskKind,
    num_tasks: usize,
}

impl TaskSpec {
    pub fn new(kind: TaskKind, num_tasks: usize) -> Result<Self> {
        if num_tasks == 0 {
            return Err(Error::InvalidArgument("num_tasks must be positive".into()));
        }
        if kind == TaskKind::Regression && num_tasks != 1 {
            return Err(Error::InvalidArgument(format!(
                "regression requires exactly one task, got {num_tasks}"
            )));
        }
        Ok(Self { kind, num_tasks })
    }

    pub fn kind(&self) -> TaskKind {
        self.kind
    }

    pub fn num_tasks(&self) -> usize {
        self.num_tasks
    }

    pub fn metric(&self) -> MetricKind {
        if self.kind.is_classification() {
            MetricKind::RocAuc
        } else {
            MetricKind::Rmse
        }
    }

    pub fn orientation(&self) -> Orientation {
        self.metric().orientation()
    }
}

/// How raw node feature columns enter the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeEncoding {
    /// Integer-coded columns, each indexing a learned lookup table.
    CategoricalEmbed,
    /// Real-valued vector, one dense projection.
    Linear,
}

impl NodeEncoding {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeEncoding::CategoricalEmbed => "categorical_embed",
            NodeEncoding::Linear => "linear",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "categorical_embed" => Some(NodeEncoding::CategoricalEmbed),
            "linear" => Some(NodeEncoding::Linear),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SplitName {
    Train,
    Valid,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 3] = [SplitName::Train, SplitName::Valid, SplitName::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Valid => "valid",
            SplitName::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Splits {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

impl Splits {
    pub fn get(&self, name: SplitName) -> &[usize] {
        match name {
            SplitName::Train => &self.train,
            SplitName::Valid => &self.valid,
            SplitName::Test => &self.test,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphDataset {
    pub graphs: Vec<Graph>,
    pub task: TaskSpec,
    pub node_encoding: NodeEncoding,
    pub splits: Splits,
}

impl GraphDataset {
    pub fn num_graphs(&self) -> usize {
        self.graphs.len()
    }

    /// Total node count across all graphs.
    pub fn total_nodes(&self) -> usize {
        self.graphs.iter().map(|g| g.num_nodes).sum()
    }

    pub fn total_edges(&self) -> usize {
        self.graphs.iter().map(Graph::num_edges).sum()
    }

    pub fn node_feature_dim(&self) -> usize {
        self.graphs.first().map_or(0, Graph::node_feature_dim)
    }

    pub fn edge_feature_dim(&self) -> Option<usize> {
        self.graphs.first().and_then(Graph::edge_feature_dim)
    }

    pub fn split(&self, name: SplitName) -> Vec<&Graph> {
        self.splits
            .get(name)
            .iter()
            .map(|&i| &self.graphs[i])
            .collect()
    }
}

/// Describes every violated invariant of the dataset and its graphs. An empty
/// list means the dataset is valid.
pub fn validate_dataset(dataset: &GraphDataset) -> Vec<String> {
    let mut out = Vec::new();
    let num_tasks = dataset.task.num_tasks();
    let node_dim = dataset.node_feature_dim();
    let edge_dim = dataset.edge_feature_dim();

    for (i, g) in dataset.graphs.iter().enumerate() {
        g.violations(i, &mut out);
        if g.node_feature_dim() != node_dim {
            out.push(format!(
                "graph {i}: node feature dimension {} differs from {node_dim}",
                g.node_feature_dim()
            ));
        }
        if g.edge_feature_dim() != edge_dim {
            out.push(format!(
                "graph {i}: edge feature dimension {:?} differs from {edge_dim:?}",
                g.edge_feature_dim()
            ));
        }
        if g.labels.len() != num_tasks {
            out.push(format!(
                "graph {i}: {} label entries, expected {num_tasks}",
                g.labels.len()
            ));
        }
        if g.labels.iter().all(Option::is_none) {
            out.push(format!("graph {i}: every label entry is missing"));
        }
    }

    let n = dataset.graphs.len();
    let mut owner: Vec<Option<SplitName>> = vec![None; n];
    for name in SplitName::ALL {
        for &idx in dataset.splits.get(name) {
            if idx >= n {
                out.push(format!(
                    "split {}: index {idx} out of range for {n} graphs",
                    name.as_str()
                ));
                continue;
            }
            match owner[idx] {
                Some(prev) => out.push(format!(
                    "split {}: index {idx} already assigned to split {}",
                    name.as_str(),
                    prev.as_str()
                )),
                None => owner[idx] = Some(name),
            }
        }
    }
    if dataset.splits.train.is_empty() {
        out.push("split train: empty".to_string());
    }
    out
}

/// Assigns random train/valid/test splits. Valid and test get
/// `floor(fraction * n)` graphs; the remainder goes to train.
pub fn split_dataset_random(
    mut dataset: GraphDataset,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<GraphDataset> {
    let (ft, fv, fs) = fractions;
    for f in [ft, fv, fs] {
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "split fraction {f} is outside (0,1)"
            )));
        }
    }
    if ((ft + fv + fs) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "split fractions sum to {}, expected 1",
            ft + fv + fs
        )));
    }
    let n = dataset.graphs.len();
    if n == 0 {
        return Err(Error::InvalidArgument(
            "cannot split an empty dataset".into(),
        ));
    }

    let n_valid = (fv * n as f64).floor() as usize;
    let n_test = (fs * n as f64).floor() as usize;
    let n_train = n - n_valid - n_test;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let take = |range: std::ops::Range<usize>| {
        let mut part = order[range].to_vec();
        part.sort_unstable();
        part
    };
    dataset.splits = Splits {
        train: take(0..n_train),
        valid: take(n_train..n_train + n_valid),
        test: take(n_train + n_valid..n),
    };
    Ok(dataset)
}
