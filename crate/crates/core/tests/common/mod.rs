//! Oracles and generators shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::rc::Rc;

use rand::Rng;

use nnrd::graph::{Graph, Label, TaskSpec};
use nnrd::neural::{masked_loss, model_forward, predict, MaskedTargets, ModelConfig, ModelParams};
use nnrd::Matrix;

/// Pair-counting AUC over tasks with both classes, mean over such tasks.
/// `None` when no task qualifies.
pub fn brute_force_auc(scores: &[Vec<f64>], labels: &[Vec<Label>]) -> Option<f64> {
    let tasks = scores.first().map_or(0, Vec::len);
    let mut per_task = Vec::new();
    for c in 0..tasks {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, li) in labels.iter().enumerate() {
            for (j, lj) in labels.iter().enumerate() {
                if li[c] == Some(1.0) && lj[c] == Some(0.0) {
                    pairs += 1.0;
                    let (si, sj) = (scores[i][c], scores[j][c]);
                    if si > sj {
                        wins += 1.0;
                    } else if si == sj {
                        wins += 0.5;
                    }
                }
            }
        }
        if pairs > 0.0 {
            per_task.push(wins / pairs);
        }
    }
    if per_task.is_empty() {
        None
    } else {
        Some(per_task.iter().sum::<f64>() / per_task.len() as f64)
    }
}

/// Random simple undirected graph with uniform edge probability.
pub fn random_graph<R: Rng>(
    rng: &mut R,
    n: usize,
    density: f64,
    node_dim: usize,
    edge_dim: Option<usize>,
    labels: Vec<Label>,
) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(density) {
                edges.push(if rng.gen_bool(0.5) { (u, v) } else { (v, u) });
            }
        }
    }
    let x = Matrix::from_vec(
        n,
        node_dim,
        (0..n * node_dim)
            .map(|_| rng.gen_range(-2.0..2.0))
            .collect(),
    );
    let e = edge_dim.map(|d| {
        Matrix::from_vec(
            edges.len(),
            d,
            (0..edges.len() * d)
                .map(|_| rng.gen_range(-2.0..2.0))
                .collect(),
        )
    });
    Graph::new(n, edges, x, e, labels)
}

/// Rows of `m` sorted by total order, for multiset comparison.
pub fn sorted_rows(rows: impl IntoIterator<Item = Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = rows.into_iter().collect();
    out.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    out
}

/// Largest relative disagreement between reverse-mode gradients of the
/// masked loss and central differences with step `step`. Relative error is
/// `|a - n| / max(|a|, |n|, floor)`.
pub fn max_gradient_error(
    params: &ModelParams,
    config: &ModelConfig,
    graphs: &[&Graph],
    task: &TaskSpec,
    step: f64,
    floor: f64,
) -> f64 {
    let targets = MaskedTargets::from_graphs(graphs, task.num_tasks());
    let loss_at = |p: &ModelParams| {
        let scores = predict(p, config, graphs, graphs.len()).unwrap();
        masked_loss(&scores, &targets, task).unwrap()
    };
    let mut fwd = model_forward(params, config, graphs).unwrap();
    let loss = fwd
        .tape
        .masked_loss(fwd.output, Rc::new(targets.clone()), task.kind())
        .unwrap();
    let grads = fwd.tape.backward(loss);

    let mut worst: f64 = 0.0;
    for (k, (_, tensor)) in params.tensors().iter().enumerate() {
        let analytic = grads.get(fwd.params[k]);
        for i in 0..tensor.len() {
            let mut plus = params.clone();
            plus.tensors_mut()[k].1.as_mut_slice()[i] += step;
            let mut minus = params.clone();
            minus.tensors_mut()[k].1.as_mut_slice()[i] -= step;
            let numeric = (loss_at(&plus) - loss_at(&minus)) / (2.0 * step);
            let a = analytic.map_or(0.0, |m| m.as_slice()[i]);
            let scale = a.abs().max(numeric.abs()).max(floor);
            worst = worst.max((a - numeric).abs() / scale);
        }
    }
    worst
}
