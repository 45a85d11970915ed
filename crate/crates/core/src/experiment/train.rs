use std::rc::Rc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphDataset, SplitName, TaskKind};
use crate::neural::{
    adam_step, model_forward, predict, AdamState, MaskedTargets, ModelConfig, ModelParams,
    TrainConfig,
};

use super::metrics::{rmse, roc_auc_masked};
use super::seeds::splitmix64;

/// Graphs per forward pass during evaluation.
const EVAL_CHUNK: usize = 256;

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    /// Mean batch loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Trains for a fixed number of epochs over shuffled mini-batches of the
/// train split and returns the final-epoch parameters.
pub fn train_model(
    dataset: &GraphDataset,
    model: &ModelConfig,
    train: &TrainConfig,
) -> Result<ModelParams> {
    train_model_traced(dataset, model, train).map(|o| o.params)
}

/// [`train_model`], also reporting per-epoch losses.
pub fn train_model_traced(
    dataset: &GraphDataset,
    model: &ModelConfig,
    train: &TrainConfig,
) -> Result<TrainOutcome> {
    train.validate()?;
    model.validate()?;
    let graphs = dataset.split(SplitName::Train);
    if graphs.is_empty() {
        return Err(Error::Training("train split is empty".into()));
    }
    let num_tasks = dataset.task.num_tasks();
    let kind = dataset.task.kind();

    let mut params = ModelParams::init(model, splitmix64(train.seed))?;
    let mut state = AdamState::for_params(&params);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(splitmix64(train.seed.wrapping_add(1)));
    let mut order: Vec<usize> = (0..graphs.len()).collect();
    let mut epoch_losses = Vec::with_capacity(train.epochs);

    for _ in 0..train.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(train.batch_size) {
            let batch: Vec<&Graph> = chunk.iter().map(|&i| graphs[i]).collect();
            let targets = MaskedTargets::from_graphs(&batch, num_tasks);
            if targets.present() == 0 {
                continue;
            }
            let loss = step(&mut params, &mut state, model, train, &batch, targets, kind)?;
            loss_sum += loss;
            batches += 1;
        }
        if batches == 0 {
            return Err(Error::Training(
                "every batch has only missing labels".into(),
            ));
        }
        epoch_losses.push(loss_sum / batches as f64);
    }
    Ok(TrainOutcome {
        params,
        epoch_losses,
    })
}

fn step(
    params: &mut ModelParams,
    state: &mut AdamState,
    model: &ModelConfig,
    train: &TrainConfig,
    batch: &[&Graph],
    targets: MaskedTargets,
    kind: TaskKind,
) -> Result<f64> {
    let mut fwd = model_forward(params, model, batch)?;
    let loss = fwd.tape.masked_loss(fwd.output, Rc::new(targets), kind)?;
    let value = fwd.tape.value(loss).get(0, 0);
    if !value.is_finite() {
        return Err(Error::Numeric(format!("training loss became {value}")));
    }
    let mut grads = fwd.tape.backward(loss);
    let shapes: Vec<(usize, usize)> = params.tensors().iter().map(|(_, t)| t.shape()).collect();
    let grads: Vec<_> = fwd
        .params
        .drain(..)
        .zip(shapes)
        .map(|(var, shape)| grads.take_or_zeros(var, shape))
        .collect();
    adam_step(params, &grads, state, &train.adam)?;
    Ok(value)
}

/// Mean masked training loss of `params` over a split, without updates.
pub fn evaluate_loss(
    params: &ModelParams,
    model: &ModelConfig,
    dataset: &GraphDataset,
    split: SplitName,
) -> Result<f64> {
    let graphs = dataset.split(split);
    let scores = predict(params, model, &graphs, EVAL_CHUNK)?;
    let targets = MaskedTargets::from_graphs(&graphs, dataset.task.num_tasks());
    crate::neural::masked_loss(&scores, &targets, &dataset.task)
}

/// Test-style metric on one split: ROC-AUC on raw logits for classification,
/// RMSE for regression.
pub fn evaluate_split(
    params: &ModelParams,
    model: &ModelConfig,
    dataset: &GraphDataset,
    split: SplitName,
) -> Result<f64> {
    let graphs = dataset.split(split);
    if graphs.is_empty() {
        return Err(Error::UndefinedMetric(format!(
            "{} split is empty",
            split.as_str()
        )));
    }
    let scores = predict(params, model, &graphs, EVAL_CHUNK)?;
    let targets = MaskedTargets::from_graphs(&graphs, dataset.task.num_tasks());
    if dataset.task.kind().is_classification() {
        roc_auc_masked(&scores, &targets)
    } else {
        rmse(scores.as_slice(), targets.values())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{NodeEncoding, Splits, TaskSpec};
    use crate::ingest::{generate_synthetic, SyntheticKind, SyntheticSpec};
    use crate::matrix::Matrix;
    use crate::neural::ModelConfig;

    fn feature_sum(n: usize, seed: u64) -> GraphDataset {
        generate_synthetic(
            &SyntheticSpec::new(SyntheticKind::FeatureSum, n, (4, 8)),
            seed,
        )
        .unwrap()
    }

    #[test]
    fn small_dataset_is_overfit() {
        let ds = feature_sum(20, 3);
        let model = ModelConfig::for_dataset(&ds).unwrap().with_hidden(16);
        let train = TrainConfig {
            epochs: 200,
            ..TrainConfig::default()
        };
        let out = train_model_traced(&ds, &model, &train).unwrap();
        let last = *out.epoch_losses.last().unwrap();
        assert!(last < 0.05, "final epoch loss {last}");
        let eval = evaluate_loss(&out.params, &model, &ds, SplitName::Train).unwrap();
        assert!(eval < 0.05, "train loss {eval}");
    }

    #[test]
    fn same_seed_same_parameters() {
        let ds = feature_sum(30, 1);
        let model = ModelConfig::for_dataset(&ds).unwrap().with_hidden(8);
        let train = TrainConfig {
            epochs: 3,
            batch_size: 5,
            seed: 17,
            ..TrainConfig::default()
        };
        let a = train_model(&ds, &model, &train).unwrap();
        let b = train_model(&ds, &model, &train).unwrap();
        assert_eq!(a, b);
        let c = train_model(&ds, &model, &TrainConfig { seed: 18, ..train }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn single_graph_train_split() {
        let mut ds = feature_sum(10, 2);
        ds.splits.train.truncate(1);
        let model = ModelConfig::for_dataset(&ds).unwrap().with_hidden(4);
        let out = train_model_traced(
            &ds,
            &model,
            &TrainConfig {
                epochs: 2,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        assert_eq!(out.epoch_losses.len(), 2);
    }

    #[test]
    fn all_missing_labels_fail_training() {
        let mut ds = feature_sum(10, 2);
        for g in &mut ds.graphs {
            g.labels = vec![None];
        }
        let model = ModelConfig::for_dataset(&ds).unwrap().with_hidden(4);
        assert!(matches!(
            train_model(&ds, &model, &TrainConfig::default()),
            Err(Error::Training(_))
        ));
    }

    #[test]
    fn evaluate_split_cases() {
        let ds = feature_sum(40, 4);
        let model = ModelConfig::for_dataset(&ds).unwrap().with_hidden(4);
        let zeros = ModelParams::zeros(&model);
        assert_eq!(
            evaluate_split(&zeros, &model, &ds, SplitName::Test).unwrap(),
            0.5
        );

        let mut one_class = ds.clone();
        one_class
            .splits
            .test
            .retain(|&i| ds.graphs[i].labels[0] == Some(1.0));
        assert!(matches!(
            evaluate_split(&zeros, &model, &one_class, SplitName::Test),
            Err(Error::UndefinedMetric(_))
        ));

        let mut empty = ds.clone();
        empty.splits.test.clear();
        assert!(matches!(
            evaluate_split(&zeros, &model, &empty, SplitName::Test),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn exact_regression_scores_zero() {
        let graphs: Vec<Graph> = (0..4)
            .map(|i| {
                Graph::new(
                    2,
                    vec![(0, 1)],
                    Matrix::filled(2, 1, i as f64),
                    None,
                    vec![Some(2.5)],
                )
            })
            .collect();
        let ds = GraphDataset {
            graphs,
            task: TaskSpec::new(TaskKind::Regression, 1).unwrap(),
            node_encoding: NodeEncoding::Linear,
            splits: Splits {
                train: vec![0, 1],
                valid: vec![2],
                test: vec![3],
            },
        };
        let model = ModelConfig::for_dataset(&ds).unwrap().with_hidden(3);
        let mut params = ModelParams::zeros(&model);
        params.head.second.bias.set(0, 0, 2.5);
        assert_eq!(
            evaluate_split(&params, &model, &ds, SplitName::Test).unwrap(),
            0.0
        );
    }
}
