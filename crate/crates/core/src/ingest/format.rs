//! Directory-based dataset format.
//!
//! The layout follows the raw CSV dumps used by common molecular graph
//! benchmarks (cumulative node/edge count lists over flat tables), plus a
//! `manifest.json` describing the task:
//!
//! ```text
//! manifest.json        {"num_tasks", "task_kind", "node_feature_encoding", "has_edge_features"}
//! num-node-list.csv    one integer per graph
//! num-edge-list.csv    one integer per graph
//! edge.csv             u,v graph-local node indices, graphs concatenated
//! node-feat.csv        one row per node
//! edge-feat.csv        one row per edge.csv row (only with has_edge_features)
//! graph-label.csv      num_tasks columns, empty cell = missing
//! split/{train,valid,test}.csv   one global graph index per line
//! ```
//!
//! All CSVs are headerless. Directed duplicates `(u,v)`/`(v,u)` are collapsed
//! into one undirected edge, keeping the first occurrence's feature row.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    canonical_pair, validate_dataset, Graph, GraphDataset, Label, NodeEncoding, SplitName, Splits,
    TaskKind, TaskSpec,
};
use crate::matrix::Matrix;

pub const MANIFEST: &str = "manifest.json";
pub const NUM_NODE_LIST: &str = "num-node-list.csv";
pub const NUM_EDGE_LIST: &str = "num-edge-list.csv";
pub const EDGE: &str = "edge.csv";
pub const NODE_FEAT: &str = "node-feat.csv";
pub const EDGE_FEAT: &str = "edge-feat.csv";
pub const GRAPH_LABEL: &str = "graph-label.csv";
pub const SPLIT_DIR: &str = "split";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub num_tasks: usize,
    pub task_kind: String,
    pub node_feature_encoding: String,
    pub has_edge_features: bool,
}

impl DatasetManifest {
    fn task(&self) -> Result<TaskSpec> {
        let kind = TaskKind::parse(&self.task_kind).ok_or_else(|| {
            Error::format(MANIFEST, format!("unknown task_kind {:?}", self.task_kind))
        })?;
        TaskSpec::new(kind, self.num_tasks).map_err(|e| Error::format(MANIFEST, e.to_string()))
    }

    fn encoding(&self) -> Result<NodeEncoding> {
        NodeEncoding::parse(&self.node_feature_encoding).ok_or_else(|| {
            Error::format(
                MANIFEST,
                format!(
                    "unknown node_feature_encoding {:?}",
                    self.node_feature_encoding
                ),
            )
        })
    }
}

/// A headerless CSV file split into raw cells.
struct Table {
    name: String,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(dir: &Path, name: &str) -> Result<Table> {
        let path = dir.join(name);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(Error::NotFound(path))
            }
            Err(e) => return Err(Error::io(path, e)),
        };
        // `lines()` drops only the final terminator, so an empty line in the
        // middle (a single missing label) survives as an empty row.
        let rows = text
            .lines()
            .map(|line| line.split(',').map(|c| c.trim().to_string()).collect())
            .collect();
        Ok(Table {
            name: name.to_string(),
            rows,
        })
    }

    fn len(&self) -> usize {
        self.rows.len()
    }

    fn cell_error(&self, row: usize, col: usize, what: &str) -> Error {
        let cell = self.rows[row].get(col).map(String::as_str).unwrap_or("");
        Error::format(
            &self.name,
            format!("row {}, column {}: {what} {cell:?}", row + 1, col + 1),
        )
    }

    fn integer(&self, row: usize, col: usize) -> Result<usize> {
        self.rows[row]
            .get(col)
            .and_then(|c| c.parse::<usize>().ok())
            .ok_or_else(|| self.cell_error(row, col, "expected a non-negative integer, found"))
    }

    fn real(&self, row: usize, col: usize) -> Result<f64> {
        self.rows[row]
            .get(col)
            .and_then(|c| c.parse::<f64>().ok())
            .ok_or_else(|| self.cell_error(row, col, "expected a number, found"))
    }

    fn label(&self, row: usize, col: usize) -> Result<Label> {
        match self.rows[row].get(col).map(String::as_str) {
            Some("") | Some("nan") | Some("NaN") => Ok(None),
            Some(c) => c
                .parse::<f64>()
                .map(Some)
                .map_err(|_| self.cell_error(row, col, "expected a number or empty cell, found")),
            None => Err(self.cell_error(row, col, "missing cell")),
        }
    }

    fn check_width(&self, row: usize, width: usize) -> Result<()> {
        let actual = self.rows[row].len();
        if actual != width {
            return Err(Error::format(
                &self.name,
                format!("row {}: expected {width} columns, found {actual}", row + 1),
            ));
        }
        Ok(())
    }

    /// Column count implied by the first row; an empty table has width 0.
    fn width(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    fn column_of_integers(&self) -> Result<Vec<usize>> {
        (0..self.len()).map(|r| self.integer(r, 0)).collect()
    }

    fn matrix(&self, range: std::ops::Range<usize>, width: usize) -> Result<Matrix> {
        let mut data = Vec::with_capacity(range.len() * width);
        for r in range.clone() {
            self.check_width(r, width)?;
            for c in 0..width {
                data.push(self.real(r, c)?);
            }
        }
        Ok(Matrix::from_vec(range.len(), width, data))
    }
}

fn count_mismatch(file: &str, what: &str, expected: usize, actual: usize) -> Error {
    Error::format(
        file,
        format!("{what}: expected {expected} rows from cumulative counts, found {actual}"),
    )
}

/// Reads a dataset directory and validates the result.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<GraphDataset> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(Error::NotFound(dir.to_path_buf()));
    }
    let manifest_path = dir.join(MANIFEST);
    let manifest_text = fs::read_to_string(&manifest_path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::NotFound(manifest_path.clone())
        } else {
            Error::io(&manifest_path, e)
        }
    })?;
    let manifest: DatasetManifest =
        serde_json::from_str(&manifest_text).map_err(|e| Error::format(MANIFEST, e.to_string()))?;
    let task = manifest.task()?;
    let node_encoding = manifest.encoding()?;

    let node_counts = Table::read(dir, NUM_NODE_LIST)?.column_of_integers()?;
    let edge_counts = Table::read(dir, NUM_EDGE_LIST)?.column_of_integers()?;
    let edges = Table::read(dir, EDGE)?;
    let node_feat = Table::read(dir, NODE_FEAT)?;
    let edge_feat = if manifest.has_edge_features {
        Some(Table::read(dir, EDGE_FEAT)?)
    } else {
        None
    };
    let labels = Table::read(dir, GRAPH_LABEL)?;

    let num_graphs = node_counts.len();
    if edge_counts.len() != num_graphs {
        return Err(count_mismatch(
            NUM_EDGE_LIST,
            "graph count",
            num_graphs,
            edge_counts.len(),
        ));
    }
    let total_nodes: usize = node_counts.iter().sum();
    let total_edges: usize = edge_counts.iter().sum();
    if node_feat.len() != total_nodes {
        return Err(count_mismatch(
            NODE_FEAT,
            "node rows",
            total_nodes,
            node_feat.len(),
        ));
    }
    if edges.len() != total_edges {
        return Err(count_mismatch(EDGE, "edge rows", total_edges, edges.len()));
    }
    if let Some(ef) = &edge_feat {
        if ef.len() != total_edges {
            return Err(count_mismatch(
                EDGE_FEAT,
                "edge feature rows",
                total_edges,
                ef.len(),
            ));
        }
    }
    if labels.len() != num_graphs {
        return Err(count_mismatch(
            GRAPH_LABEL,
            "label rows",
            num_graphs,
            labels.len(),
        ));
    }

    let node_dim = node_feat.width();
    let edge_dim = edge_feat.as_ref().map_or(0, Table::width);
    let mut graphs = Vec::with_capacity(num_graphs);
    let (mut node_cursor, mut edge_cursor) = (0usize, 0usize);
    for g in 0..num_graphs {
        let n = node_counts[g];
        let m = edge_counts[g];
        let node_features = node_feat.matrix(node_cursor..node_cursor + n, node_dim)?;

        let mut pairs = Vec::with_capacity(m);
        let mut kept_rows = Vec::with_capacity(m);
        let mut seen = HashMap::with_capacity(m);
        for r in edge_cursor..edge_cursor + m {
            edges.check_width(r, 2)?;
            let pair = canonical_pair((edges.integer(r, 0)?, edges.integer(r, 1)?));
            if seen.insert(pair, r).is_none() {
                pairs.push(pair);
                kept_rows.push(r);
            }
        }
        let edge_features = match &edge_feat {
            Some(table) => {
                let mut data = Vec::with_capacity(kept_rows.len() * edge_dim);
                for &r in &kept_rows {
                    table.check_width(r, edge_dim)?;
                    for c in 0..edge_dim {
                        data.push(table.real(r, c)?);
                    }
                }
                Some(Matrix::from_vec(kept_rows.len(), edge_dim, data))
            }
            None => None,
        };

        labels.check_width(g, task.num_tasks())?;
        let label_row = (0..task.num_tasks())
            .map(|c| labels.label(g, c))
            .collect::<Result<Vec<_>>>()?;

        graphs.push(Graph::new(
            n,
            pairs,
            node_features,
            edge_features,
            label_row,
        ));
        node_cursor += n;
        edge_cursor += m;
    }

    let mut splits = Splits::default();
    let split_dir = dir.join(SPLIT_DIR);
    for name in SplitName::ALL {
        let file = format!("{}.csv", name.as_str());
        let table = Table::read(&split_dir, &file).map_err(|e| match e {
            Error::Format { message, .. } => Error::format(format!("{SPLIT_DIR}/{file}"), message),
            other => other,
        })?;
        let indices = table.column_of_integers()?;
        match name {
            SplitName::Train => splits.train = indices,
            SplitName::Valid => splits.valid = indices,
            SplitName::Test => splits.test = indices,
        }
    }

    let dataset = GraphDataset {
        graphs,
        task,
        node_encoding,
        splits,
    };
    let violations = validate_dataset(&dataset);
    if !violations.is_empty() {
        return Err(Error::InvalidDataset(violations));
    }
    Ok(dataset)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(path, e))
}

fn push_row(buf: &mut String, cells: impl IntoIterator<Item = String>) {
    let mut first = true;
    for cell in cells {
        if !first {
            buf.push(',');
        }
        buf.push_str(&cell);
        first = false;
    }
    buf.push('\n');
}

fn integer_lines(values: impl IntoIterator<Item = usize>) -> String {
    let mut buf = String::new();
    for v in values {
        writeln!(buf, "{v}").unwrap();
    }
    buf
}

/// Writes `dataset` in the directory format. `{}` formatting of `f64` is the
/// shortest round-trip representation, so loading returns identical values.
pub fn save_dataset(dataset: &GraphDataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    let violations = validate_dataset(dataset);
    if !violations.is_empty() {
        return Err(Error::InvalidDataset(violations));
    }
    fs::create_dir_all(dir.join(SPLIT_DIR)).map_err(|e| Error::io(dir, e))?;

    let has_edge_features = dataset.edge_feature_dim().is_some();
    let manifest = DatasetManifest {
        num_tasks: dataset.task.num_tasks(),
        task_kind: dataset.task.kind().as_str().to_string(),
        node_feature_encoding: dataset.node_encoding.as_str().to_string(),
        has_edge_features,
    };
    let manifest_json =
        serde_json::to_string_pretty(&manifest).expect("manifest serializes infallibly");
    write_file(dir, MANIFEST, &(manifest_json + "\n"))?;

    write_file(
        dir,
        NUM_NODE_LIST,
        &integer_lines(dataset.graphs.iter().map(|g| g.num_nodes)),
    )?;
    write_file(
        dir,
        NUM_EDGE_LIST,
        &integer_lines(dataset.graphs.iter().map(Graph::num_edges)),
    )?;

    let (mut edge_buf, mut node_buf, mut edge_feat_buf, mut label_buf) =
        (String::new(), String::new(), String::new(), String::new());
    for g in &dataset.graphs {
        for &(u, v) in &g.edges {
            writeln!(edge_buf, "{u},{v}").unwrap();
        }
        for row in g.node_features.iter_rows() {
            push_row(&mut node_buf, row.iter().map(|x| x.to_string()));
        }
        if let Some(ef) = &g.edge_features {
            for row in ef.iter_rows() {
                push_row(&mut edge_feat_buf, row.iter().map(|x| x.to_string()));
            }
        }
        push_row(
            &mut label_buf,
            g.labels
                .iter()
                .map(|l| l.map(|x| x.to_string()).unwrap_or_default()),
        );
    }
    write_file(dir, EDGE, &edge_buf)?;
    write_file(dir, NODE_FEAT, &node_buf)?;
    if has_edge_features {
        write_file(dir, EDGE_FEAT, &edge_feat_buf)?;
    }
    write_file(dir, GRAPH_LABEL, &label_buf)?;

    let split_dir = dir.join(SPLIT_DIR);
    for name in SplitName::ALL {
        write_file(
            &split_dir,
            &format!("{}.csv", name.as_str()),
            &integer_lines(dataset.splits.get(name).iter().copied()),
        )?;
    }
    Ok(())
}
