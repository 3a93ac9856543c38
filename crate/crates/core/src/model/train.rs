use ndarray::{concatenate, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::batch::GraphBatch;
use super::config::TrainConfig;
use super::gnrk::{loss_and_grad, GnrkModel};
use super::params::GnrkParams;
use crate::dataset::{Dataset, Split};
use crate::error::{Error, Result};
use crate::nn::{AdamW, Parameters};
use crate::rng::{derive_seed, rng_from_seed};
use crate::solver::Trajectory;
use crate::systems::Instance;

const SHUFFLE_STREAM: u64 = 0x5348_5546;

#[derive(Clone, Copy, Debug)]
pub struct TrainSample<'a> {
    pub instance: &'a Instance,
    pub trajectory: &'a Trajectory,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub lr: f64,
    /// Mean squared one-step error over every node and channel seen this epoch.
    pub train_mse: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub history: Vec<EpochStats>,
}

impl TrainReport {
    /// `epoch,lr,train_mse` rows with full round-trip precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,lr,train_mse\n");
        for s in &self.history {
            out.push_str(&format!("{},{:e},{:e}\n", s.epoch, s.lr, s.train_mse));
        }
        out
    }

    pub fn final_mse(&self) -> Option<f64> {
        self.history.last().map(|s| s.train_mse)
    }
}

/// One-step pairs of a batch stacked as a disjoint union.
pub struct PairBatch {
    pub graphs: GraphBatch,
    pub state: Array2<f64>,
    pub target: Array2<f64>,
    pub dt: Vec<f64>,
}

impl PairBatch {
    /// Stacks `(sample, step)` pairs; `prepared[i]` is the batch of sample `i`.
    pub fn assemble(samples: &[TrainSample<'_>], prepared: &[GraphBatch], ids: &[(usize, usize)]) -> Result<PairBatch> {
        let parts: Vec<&GraphBatch> = ids.iter().map(|&(s, _)| &prepared[s]).collect();
        let graphs = GraphBatch::union(&parts)?;
        let stack = |offset: usize| -> Result<Array2<f64>> {
            let views: Vec<ArrayView2<'_, f64>> = ids
                .iter()
                .map(|&(s, k)| samples[s].trajectory.state(k + offset))
                .collect();
            concatenate(Axis(0), &views).map_err(|e| Error::shape(e.to_string()))
        };
        let dt = ids
            .iter()
            .flat_map(|&(s, k)| {
                let t = samples[s].trajectory;
                std::iter::repeat_n(t.time_grid.dts()[k], t.num_nodes())
            })
            .collect();
        Ok(PairBatch {
            graphs,
            state: stack(0)?,
            target: stack(1)?,
            dt,
        })
    }
}

/// Minimizes the one-step MSE with AdamW. `progress` sees every epoch.
pub fn train(
    model: &mut GnrkModel,
    samples: &[TrainSample<'_>],
    cfg: &TrainConfig,
    mut progress: impl FnMut(&EpochStats),
) -> Result<TrainReport> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::config("no training samples"));
    }
    let d = model.config.d_state();
    let prepared = samples
        .iter()
        .map(|s| {
            if s.trajectory.num_nodes() != s.instance.graph.num_nodes() || s.trajectory.d_state() != d {
                return Err(Error::shape("trajectory does not fit its graph or the model"));
            }
            GraphBatch::from_instance(&model.config, s.instance)
        })
        .collect::<Result<Vec<_>>>()?;
    let all_pairs: Vec<(usize, usize)> = samples
        .iter()
        .enumerate()
        .flat_map(|(i, s)| (0..s.trajectory.num_steps()).map(move |k| (i, k)))
        .collect();
    if all_pairs.is_empty() {
        return Err(Error::config("training trajectories have no steps"));
    }

    let mut optimizer = AdamW::new(model.num_params(), cfg.optimizer);
    let mut grads = GnrkParams::zeros(&model.config);
    let mut flat = model.params.to_flat();
    let mut report = TrainReport::default();
    for epoch in 0..cfg.epochs {
        let lr = cfg.schedule.lr_at(epoch);
        let mut order = all_pairs.clone();
        order.shuffle(&mut rng_from_seed(derive_seed(cfg.seed, SHUFFLE_STREAM, epoch as u64)));
        if let Some(n) = cfg.pairs_per_epoch {
            order.truncate(n);
        }
        let (mut sq_sum, mut count) = (0.0, 0usize);
        for (b, ids) in order.chunks(cfg.batch_size).enumerate() {
            let diverged = || Error::TrainingDivergence { epoch, batch: b };
            let pb = PairBatch::assemble(samples, &prepared, ids)?;
            let loss = loss_and_grad(
                model,
                &pb.graphs,
                pb.state.view(),
                pb.target.view(),
                &pb.dt,
                cfg.order,
                &mut grads,
            )
            .map_err(|e| match e {
                Error::Divergence { .. } => diverged(),
                other => other,
            })?;
            let mut g = grads.to_flat();
            if !loss.is_finite() || g.iter().any(|v| !v.is_finite()) {
                return Err(diverged());
            }
            if let Some(cap) = cfg.grad_clip {
                let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > cap {
                    let s = cap / norm;
                    g.iter_mut().for_each(|v| *v *= s);
                }
            }
            optimizer.update(&mut flat, &g, lr)?;
            model.params.load_flat(&flat);
            sq_sum += loss * pb.state.len() as f64;
            count += pb.state.len();
        }
        let stats = EpochStats {
            epoch,
            lr,
            train_mse: sq_sum / count as f64,
        };
        progress(&stats);
        report.history.push(stats);
    }
    Ok(report)
}

/// Trains on the `train` split of a loaded dataset.
pub fn train_dataset(
    model: &mut GnrkModel,
    dataset: &Dataset,
    cfg: &TrainConfig,
    progress: impl FnMut(&EpochStats),
) -> Result<TrainReport> {
    if dataset.system() != model.config.system {
        return Err(Error::config(format!(
            "model is for {}, dataset holds {}",
            model.config.system,
            dataset.system()
        )));
    }
    let samples: Vec<TrainSample<'_>> = dataset
        .split(Split::Train)
        .map(|s| TrainSample {
            instance: &s.instance,
            trajectory: &s.trajectory,
        })
        .collect();
    train(model, &samples, cfg, progress)
}
