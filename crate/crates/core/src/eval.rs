//! Rollout error metrics and grouped evaluation reports.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Split};
use crate::domain::Topology;
use crate::error::{Error, Result};
use crate::io::{create_dir_all, write_json};
use crate::model::GnrkModel;
use crate::solver::Trajectory;
use crate::systems::SystemKind;

pub const REPORT_FILE: &str = "report.json";
pub const MAE_CSV_FILE: &str = "mae_over_time.csv";

/// Distance between two phases on the circle, in `[0, π]`.
pub fn wrapped_angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// MAE over nodes and channels at every stored time, step 0 included.
/// `angular` compares every channel on the circle.
pub fn mae_series(truth: &Trajectory, pred: &Trajectory, angular: bool) -> Result<Vec<f64>> {
    if truth.states.dim() != pred.states.dim() {
        return Err(Error::shape(format!(
            "truth is {:?}, prediction is {:?}",
            truth.states.dim(),
            pred.states.dim()
        )));
    }
    if truth.time_grid != pred.time_grid {
        return Err(Error::shape("truth and prediction use different time grids"));
    }
    Ok((0..=truth.num_steps())
        .map(|k| {
            let (t, p) = (truth.state(k), pred.state(k));
            let sum: f64 = t
                .iter()
                .zip(p.iter())
                .map(|(a, b)| {
                    if angular {
                        wrapped_angle_diff(*a, *b)
                    } else {
                        (a - b).abs()
                    }
                })
                .sum();
            sum / t.len() as f64
        })
        .collect())
}

/// Mean over steps `1..=M`; step 0 is the shared initial condition.
pub fn time_average(series: &[f64]) -> f64 {
    if series.len() < 2 {
        return 0.0;
    }
    series[1..].iter().sum::<f64>() / (series.len() - 1) as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKey {
    Topology,
    Order,
    Variant,
}

impl std::str::FromStr for GroupKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "topology" => Ok(GroupKey::Topology),
            "order" => Ok(GroupKey::Order),
            "variant" => Ok(GroupKey::Variant),
            other => Err(Error::config(format!("unknown group key {other:?}"))),
        }
    }
}

/// Rollout of one test sample at one inference order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    pub sample: usize,
    pub seed: u64,
    pub order: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub topology: Option<Topology>,
    pub num_nodes: usize,
    pub times: Vec<f64>,
    pub mae: Vec<f64>,
    /// Time-averaged MAE.
    pub mean_mae: f64,
    pub final_mae: f64,
}

/// Aggregate over the samples sharing the non-`None` keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub topology: Option<Topology>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub variant: Option<String>,
    pub count: usize,
    /// Mean of the per-sample time-averaged MAEs.
    pub mean_mae: f64,
    pub max_mae: f64,
    pub mean_final_mae: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub system: SystemKind,
    pub variant: String,
    pub orders: Vec<usize>,
    pub group_by: Vec<GroupKey>,
    /// Over every sample and order.
    pub total: GroupRow,
    pub rows: Vec<GroupRow>,
    pub samples: Vec<SampleResult>,
}

fn aggregate(results: &[&SampleResult]) -> (usize, f64, f64, f64) {
    let n = results.len();
    let mean = results.iter().map(|r| r.mean_mae).sum::<f64>() / n as f64;
    let max = results.iter().fold(0.0f64, |m, r| m.max(r.mean_mae));
    let fin = results.iter().map(|r| r.final_mae).sum::<f64>() / n as f64;
    (n, mean, max, fin)
}

impl EvalReport {
    /// Builds the aggregate rows from per-sample results.
    pub fn from_results(
        system: SystemKind,
        variant: &str,
        orders: &[usize],
        group_by: &[GroupKey],
        samples: Vec<SampleResult>,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::config("no test samples to evaluate"));
        }
        let by_order = group_by.contains(&GroupKey::Order);
        let by_topology = group_by.contains(&GroupKey::Topology);
        let by_variant = group_by.contains(&GroupKey::Variant);
        let mut groups: BTreeMap<(Option<usize>, Option<Topology>), Vec<&SampleResult>> = BTreeMap::new();
        for r in &samples {
            let key = (by_order.then_some(r.order), if by_topology { r.topology } else { None });
            groups.entry(key).or_default().push(r);
        }
        let row = |order, topology, members: &[&SampleResult]| {
            let (count, mean_mae, max_mae, mean_final_mae) = aggregate(members);
            GroupRow {
                order,
                topology,
                variant: by_variant.then(|| variant.to_string()),
                count,
                mean_mae,
                max_mae,
                mean_final_mae,
            }
        };
        let rows = if by_order || by_topology {
            groups.iter().map(|((o, t), m)| row(*o, *t, m)).collect()
        } else {
            Vec::new()
        };
        let all: Vec<&SampleResult> = samples.iter().collect();
        let total = row(None, None, &all);
        Ok(EvalReport {
            system,
            variant: variant.to_string(),
            orders: orders.to_vec(),
            group_by: group_by.to_vec(),
            total,
            rows,
            samples,
        })
    }

    pub fn row(&self, order: Option<usize>, topology: Option<Topology>) -> Option<&GroupRow> {
        self.rows.iter().find(|r| r.order == order && r.topology == topology)
    }

    /// Per-time MAE as `sample,order,step,t,mae` rows in round-trip precision.
    pub fn mae_csv(&self) -> String {
        let mut out = String::from("sample,order,step,t,mae\n");
        for r in &self.samples {
            for (k, (t, e)) in r.times.iter().zip(&r.mae).enumerate() {
                writeln!(out, "{},{},{k},{t:e},{e:e}", r.sample, r.order).expect("write to string");
            }
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        create_dir_all(dir)?;
        write_json(&dir.join(REPORT_FILE), self)?;
        let path = dir.join(MAE_CSV_FILE);
        std::fs::write(&path, self.mae_csv()).map_err(|source| Error::Io { path, source })
    }
}

/// Rolls the model out from every test sample's initial state on its own
/// time grid at each order in `orders`.
pub fn evaluate(model: &GnrkModel, dataset: &Dataset, orders: &[usize], group_by: &[GroupKey]) -> Result<EvalReport> {
    let system = dataset.system();
    if system != model.config.system {
        return Err(Error::config(format!(
            "model is for {}, dataset holds {system}",
            model.config.system
        )));
    }
    if orders.is_empty() {
        return Err(Error::config("at least one inference order is required"));
    }
    let angular = system.is_angular();
    let mut results = Vec::new();
    for &order in orders {
        for s in dataset.split(Split::Test) {
            let truth = &s.trajectory;
            let pred = model.rollout(&s.instance, truth.state(0), &truth.time_grid, order)?;
            let mae = mae_series(truth, &pred, angular)?;
            results.push(SampleResult {
                sample: s.entry.index,
                seed: s.entry.seed,
                order,
                topology: s.entry.topology,
                num_nodes: s.entry.num_nodes,
                times: truth.time_grid.times(),
                mean_mae: time_average(&mae),
                final_mae: *mae.last().expect("step 0 is always present"),
                mae,
            });
        }
    }
    EvalReport::from_results(system, &dataset.manifest.variant, orders, group_by, results)
}
