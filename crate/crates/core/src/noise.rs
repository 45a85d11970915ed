//! Destructive noising processes along the two information axes.
//!
//! Structure noise rewires edges: it removes `k = min(|E|, floor(p·|V|))`
//! random edges, then adds up to `k` random absent pairs, moving the removed
//! edges' feature rows onto the new edges. Feature noise picks a `p` fraction of
//! all node rows across the dataset and shuffles them among themselves (edge
//! rows independently, same `p`), which leaves the dataset-wide multiset of
//! rows unchanged.
//!
//! Both operators are always applied to a pristine input, never chained.

use std::collections::HashSet;
use std::fmt;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{canonical_pair, Graph, GraphDataset};
use crate::matrix::Matrix;

/// Noise fractions `p_0 = 0 < p_1 < ... < p_T = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    levels: Vec<f64>,
}

impl NoiseSchedule {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::InvalidArgument(
                "a schedule needs at least the levels 0 and 1".into(),
            ));
        }
        if levels[0] != 0.0 || *levels.last().unwrap() != 1.0 {
            return Err(Error::InvalidArgument(format!(
                "schedule must start at 0 and end at 1, got {levels:?}"
            )));
        }
        if levels
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
        {
            return Err(Error::InvalidArgument(format!(
                "schedule must be strictly increasing, got {levels:?}"
            )));
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Number of entries, including the zero baseline.
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Index of the final, `p = 1`, level.
    pub fn last_index(&self) -> usize {
        self.levels.len() - 1
    }
}

/// Linear grid `p_t = t / num_levels` for `t = 0..=num_levels`.
pub fn make_schedule(num_levels: usize) -> Result<NoiseSchedule> {
    if num_levels == 0 {
        return Err(Error::InvalidArgument(
            "num_levels must be at least 1".into(),
        ));
    }
    let levels = (0..=num_levels)
        .map(|t| t as f64 / num_levels as f64)
        .collect();
    NoiseSchedule::new(levels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseAxis {
    Structure,
    Feature,
}

impl NoiseAxis {
    pub const BOTH: [NoiseAxis; 2] = [NoiseAxis::Feature, NoiseAxis::Structure];

    pub fn as_str(self) -> &'static str {
        match self {
            NoiseAxis::Structure => "structure",
            NoiseAxis::Feature => "feature",
        }
    }
}

impl fmt::Display for NoiseAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn check_fraction(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "noise fraction {p} outside [0,1]"
        )))
    }
}

/// `floor(p·n)`, with a tolerance so that e.g. `0.3 * 10` yields 3.
fn fraction_count(p: f64, n: usize) -> usize {
    ((p * n as f64 + 1e-9).floor() as usize).min(n)
}

/// Rewires one graph at noise level `p`.
pub fn noise_structure_graph<R: Rng + ?Sized>(graph: &Graph, p: f64, rng: &mut R) -> Result<Graph> {
    check_fraction(p)?;
    let graph = graph.canonicalized();
    let n = graph.num_nodes;
    let m = graph.num_edges();
    let k = m.min(fraction_count(p, n));
    if k == 0 {
        return Ok(graph);
    }

    let mut removed = index::sample(rng, m, k).into_vec();
    let removed_set: HashSet<usize> = removed.iter().copied().collect();
    let kept: Vec<usize> = (0..m).filter(|i| !removed_set.contains(i)).collect();
    let present: HashSet<(usize, usize)> = kept.iter().map(|&i| graph.edges[i]).collect();

    let total_pairs = n * n.saturating_sub(1) / 2;
    let legal = total_pairs - present.len();
    let want = k.min(legal);
    let added = sample_absent_pairs(rng, n, &present, legal, want);

    // Random bijection from removed rows onto the added edges.
    removed.shuffle(rng);

    let mut edges: Vec<(usize, usize)> = kept.iter().map(|&i| graph.edges[i]).collect();
    edges.extend_from_slice(&added);
    let edge_features = graph.edge_features.as_ref().map(|ef| {
        let rows: Vec<usize> = kept
            .iter()
            .copied()
            .chain(removed.iter().copied().take(added.len()))
            .collect();
        ef.select_rows(&rows)
    });

    let noised = Graph::new(
        n,
        edges,
        graph.node_features.clone(),
        edge_features,
        graph.labels.clone(),
    );
    Ok(noised.canonicalized())
}

/// Uniform sample of `want` distinct unordered non-loop pairs not in `present`.
fn sample_absent_pairs<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    present: &HashSet<(usize, usize)>,
    legal: usize,
    want: usize,
) -> Vec<(usize, usize)> {
    if want == 0 {
        return Vec::new();
    }
    if legal <= 2 * want {
        // Dense regime: enumerate and sample by index.
        let absent: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .filter(|pair| !present.contains(pair))
            .collect();
        return index::sample(rng, absent.len(), want)
            .into_iter()
            .map(|i| absent[i])
            .collect();
    }
    // Sparse regime: at least half of the candidates are accepted.
    let mut chosen = Vec::with_capacity(want);
    let mut seen = HashSet::with_capacity(want);
    while chosen.len() < want {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u == v {
            continue;
        }
        let pair = canonical_pair((u, v));
        if !present.contains(&pair) && seen.insert(pair) {
            chosen.push(pair);
        }
    }
    chosen
}

/// Applies structure noise to every graph, in order, from one rng stream.
pub fn noise_structure_dataset<R: Rng + ?Sized>(
    dataset: &GraphDataset,
    p: f64,
    rng: &mut R,
) -> Result<GraphDataset> {
    check_fraction(p)?;
    let graphs = dataset
        .graphs
        .iter()
        .map(|g| noise_structure_graph(g, p, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(GraphDataset {
        graphs,
        ..dataset.clone()
    })
}

/// Shuffles `floor(p·N)` uniformly chosen rows among themselves. Each slot is
/// `(graph, row)` into the owning table.
fn permute_rows<R: Rng + ?Sized>(
    tables: &mut [&mut Matrix],
    slots: &[(usize, usize)],
    p: f64,
    rng: &mut R,
) {
    let count = fraction_count(p, slots.len());
    if count == 0 {
        return;
    }
    let chosen: Vec<(usize, usize)> = index::sample(rng, slots.len(), count)
        .into_iter()
        .map(|i| slots[i])
        .collect();
    let mut rows: Vec<Vec<f64>> = chosen
        .iter()
        .map(|&(g, r)| tables[g].row(r).to_vec())
        .collect();
    rows.shuffle(rng);
    for (&(g, r), row) in chosen.iter().zip(rows) {
        tables[g].row_mut(r).copy_from_slice(&row);
    }
}

/// Permutes node feature rows (and, independently, edge feature rows) of a
/// `p` fraction of positions across the whole dataset.
pub fn noise_features_dataset<R: Rng + ?Sized>(
    dataset: &GraphDataset,
    p: f64,
    rng: &mut R,
) -> Result<GraphDataset> {
    check_fraction(p)?;
    let mut out = dataset.clone();

    let node_slots: Vec<(usize, usize)> = out
        .graphs
        .iter()
        .enumerate()
        .flat_map(|(g, graph)| (0..graph.num_nodes).map(move |v| (g, v)))
        .collect();
    {
        let mut tables: Vec<&mut Matrix> = out
            .graphs
            .iter_mut()
            .map(|g| &mut g.node_features)
            .collect();
        permute_rows(&mut tables, &node_slots, p, rng);
    }

    if out.edge_feature_dim().is_some() {
        // Edge positions follow canonical edge order, not storage order.
        let edge_slots: Vec<(usize, usize)> = out
            .graphs
            .iter()
            .enumerate()
            .flat_map(|(g, graph)| {
                graph
                    .canonical_edge_order()
                    .into_iter()
                    .map(move |e| (g, e))
            })
            .collect();
        let mut tables: Vec<&mut Matrix> = out
            .graphs
            .iter_mut()
            .map(|g| g.edge_features.as_mut().expect("uniform edge features"))
            .collect();
        permute_rows(&mut tables, &edge_slots, p, rng);
    }
    Ok(out)
}

/// Applies noise on `axis` at level `p`, leaving the other axis untouched.
pub fn noise_dataset<R: Rng + ?Sized>(
    dataset: &GraphDataset,
    axis: NoiseAxis,
    p: f64,
    rng: &mut R,
) -> Result<GraphDataset> {
    match axis {
        NoiseAxis::Structure => noise_structure_dataset(dataset, p, rng),
        NoiseAxis::Feature => noise_features_dataset(dataset, p, rng),
    }
}
