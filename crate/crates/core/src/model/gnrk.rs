use ndarray::{Array2, ArrayView2};

use super::batch::GraphBatch;
use super::config::SystemModelConfig;
use super::network::{EvalRecord, Network, StaticGrads};
use super::params::GnrkParams;
use crate::domain::{FeatureSet, Graph};
use crate::error::{Error, Result};
use crate::nn::Parameters;
use crate::rng::rng_from_seed;
use crate::solver::{butcher, integrate, rk_step, ButcherTableau, Rhs, TimeGrid, Trajectory};
use crate::systems::Instance;

/// A configured `f_θ` and its parameters. The same parameters serve every
/// RK order.
#[derive(Clone, Debug, PartialEq)]
pub struct GnrkModel {
    pub config: SystemModelConfig,
    pub params: GnrkParams,
}

pub fn build_model(config: &SystemModelConfig, seed: u64) -> Result<GnrkModel> {
    config.validate()?;
    let mut rng = rng_from_seed(seed);
    Ok(GnrkModel {
        config: config.clone(),
        params: GnrkParams::init(config, &mut rng),
    })
}

pub fn count_params(model: &GnrkModel) -> usize {
    model.params.num_params()
}

impl GnrkModel {
    /// Model with every weight and bias zero; its `f_θ` is identically zero.
    pub fn zeros(config: &SystemModelConfig) -> Result<Self> {
        config.validate()?;
        Ok(GnrkModel {
            config: config.clone(),
            params: GnrkParams::zeros(config),
        })
    }

    pub fn num_params(&self) -> usize {
        self.params.num_params()
    }

    fn batch(&self, graph: &Graph, features: &FeatureSet) -> Result<GraphBatch> {
        GraphBatch::new(&self.config, graph, features)
    }

    /// One evaluation of the network on a single graph.
    pub fn f_theta(&self, graph: &Graph, features: &FeatureSet, state: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let batch = self.batch(graph, features)?;
        let net = Network::new(&self.config, &self.params, &batch)?;
        Ok(net.eval_recorded(state)?.0)
    }

    /// One RK step with `f_θ` in place of the governing function.
    pub fn gnrk_step(
        &self,
        instance: &Instance,
        state: ArrayView2<'_, f64>,
        dt: f64,
        order: usize,
    ) -> Result<Array2<f64>> {
        if !(dt > 0.0) {
            return Err(Error::config(format!("time step {dt} must be positive")));
        }
        let batch = GraphBatch::from_instance(&self.config, instance)?;
        let net = Network::new(&self.config, &self.params, &batch)?;
        check_state(&net, state)?;
        rk_step(&net, state, dt, &butcher(order)?)
    }

    /// Autoregressive prediction from `s0` over `time_grid` at RK order `order`.
    pub fn rollout(
        &self,
        instance: &Instance,
        s0: ArrayView2<'_, f64>,
        time_grid: &TimeGrid,
        order: usize,
    ) -> Result<Trajectory> {
        let batch = GraphBatch::from_instance(&self.config, instance)?;
        let net = Network::new(&self.config, &self.params, &batch)?;
        check_state(&net, s0)?;
        integrate(&net, s0, time_grid, &butcher(order)?)
    }
}

fn check_state(net: &Network<'_>, state: ArrayView2<'_, f64>) -> Result<()> {
    let want = (net.batch().num_nodes, net.config().d_state());
    if state.dim() != want {
        return Err(Error::shape(format!("state is {:?}, expected {want:?}", state.dim())));
    }
    Ok(())
}

/// Recorded RK step over a batch; `dt` holds one step size per node.
pub struct StepRecord {
    tableau: ButcherTableau,
    dt: Vec<f64>,
    stages: Vec<EvalRecord>,
}

/// `x += coef · dt_r · w` row by row, with `dt_r · coef` formed first as in
/// [`rk_step`].
fn add_scaled_rows(x: &mut Array2<f64>, dt: &[f64], coef: f64, w: &Array2<f64>) {
    let d = x.ncols();
    let xs = x.as_slice_mut().expect("standard layout");
    let ws = w.as_slice().expect("standard layout");
    for (r, &h) in dt.iter().enumerate() {
        let scale = h * coef;
        for c in r * d..(r + 1) * d {
            xs[c] += scale * ws[c];
        }
    }
}

/// Forward pass of one GNRK step that keeps every stage for backpropagation.
pub fn step_recorded(
    net: &Network<'_>,
    state: ArrayView2<'_, f64>,
    dt: &[f64],
    tableau: &ButcherTableau,
) -> Result<(Array2<f64>, StepRecord)> {
    if dt.len() != state.nrows() {
        return Err(Error::shape("one time step per node required"));
    }
    let m = tableau.order();
    let mut outputs: Vec<Array2<f64>> = Vec::with_capacity(m);
    let mut stages = Vec::with_capacity(m);
    for l in 0..m {
        let mut input = state.as_standard_layout().into_owned();
        for (k, wk) in outputs.iter().enumerate() {
            let coef = tableau.a(l, k);
            if coef != 0.0 {
                add_scaled_rows(&mut input, dt, coef, wk);
            }
        }
        let (w, record) = net.eval_recorded(input.view())?;
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                step: 0,
                substep: l + 1,
            });
        }
        outputs.push(w);
        stages.push(record);
    }
    let mut next = state.as_standard_layout().into_owned();
    for (wl, &bl) in outputs.iter().zip(tableau.b()) {
        if bl != 0.0 {
            add_scaled_rows(&mut next, dt, bl, wl);
        }
    }
    Ok((
        next,
        StepRecord {
            tableau: tableau.clone(),
            dt: dt.to_vec(),
            stages,
        },
    ))
}

/// Reverse pass through a recorded step given `dL/dnext`. Returns `dL/dstate`.
pub fn step_backward(
    net: &Network<'_>,
    record: &StepRecord,
    d_next: &Array2<f64>,
    grads: &mut GnrkParams,
    statics: &mut StaticGrads,
) -> Result<Array2<f64>> {
    let m = record.tableau.order();
    if record.stages.len() != m {
        return Err(Error::Usage("step record is incomplete".into()));
    }
    let mut d_stage: Vec<Array2<f64>> = (0..m)
        .map(|l| {
            let mut d = Array2::zeros(d_next.raw_dim());
            add_scaled_rows(&mut d, &record.dt, record.tableau.b()[l], d_next);
            d
        })
        .collect();
    let mut d_state = d_next.clone();
    for p in (0..m).rev() {
        let d_input = net.backward(&record.stages[p], &d_stage[p], grads, statics)?;
        for (l, d) in d_stage.iter_mut().enumerate().take(p) {
            let coef = record.tableau.a(p, l);
            if coef != 0.0 {
                add_scaled_rows(d, &record.dt, coef, &d_input);
            }
        }
        d_state += &d_input;
    }
    Ok(d_state)
}

/// Mean over nodes and channels of the squared difference.
pub fn mse(pred: &Array2<f64>, target: ArrayView2<'_, f64>) -> f64 {
    let n = pred.len().max(1) as f64;
    pred.iter()
        .zip(target.iter())
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n
}

/// One-step MSE loss of a batch and its gradient with respect to every
/// parameter. `grads` is overwritten.
pub fn loss_and_grad(
    model: &GnrkModel,
    batch: &GraphBatch,
    state: ArrayView2<'_, f64>,
    target: ArrayView2<'_, f64>,
    dt: &[f64],
    order: usize,
    grads: &mut GnrkParams,
) -> Result<f64> {
    let net = Network::new(&model.config, &model.params, batch)?;
    let (pred, record) = step_recorded(&net, state, dt, &butcher(order)?)?;
    if target.dim() != pred.dim() {
        return Err(Error::shape("target shape differs from the state"));
    }
    let loss = mse(&pred, target);
    let scale = 2.0 / pred.len() as f64;
    let mut d_pred = pred;
    d_pred.zip_mut_with(&target, |p, t| *p = scale * (*p - t));
    grads.fill(0.0);
    let mut statics = net.zero_static_grads();
    step_backward(&net, &record, &d_pred, grads, &mut statics)?;
    net.backward_static(&statics, grads);
    Ok(loss)
}

/// Loss only, through the same recorded path as [`loss_and_grad`].
pub fn loss_only(
    model: &GnrkModel,
    batch: &GraphBatch,
    state: ArrayView2<'_, f64>,
    target: ArrayView2<'_, f64>,
    dt: &[f64],
    order: usize,
) -> Result<f64> {
    let net = Network::new(&model.config, &model.params, batch)?;
    let (pred, _) = step_recorded(&net, state, dt, &butcher(order)?)?;
    Ok(mse(&pred, target))
}

/// Binds a model to one instance for repeated evaluation as an [`Rhs`].
pub struct BoundModel<'a> {
    net: Network<'a>,
}

impl<'a> BoundModel<'a> {
    pub fn new(model: &'a GnrkModel, batch: &'a GraphBatch) -> Result<Self> {
        Ok(BoundModel {
            net: Network::new(&model.config, &model.params, batch)?,
        })
    }
}

impl Rhs for BoundModel<'_> {
    fn eval(&self, state: ArrayView2<'_, f64>) -> Array2<f64> {
        self.net.eval(state)
    }
}
