use ndarray::{Array2, Array3, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::domain::jittered_spacings;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Explicit Runge-Kutta coefficients. `a` is strictly lower triangular.
#[derive(Clone, Debug, PartialEq)]
pub struct ButcherTableau {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
}

impl ButcherTableau {
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        let m = b.len();
        if m == 0 || a.len() != m || a.iter().any(|row| row.len() != m) {
            return Err(Error::config("tableau must be m x m with m weights"));
        }
        for (l, row) in a.iter().enumerate() {
            if row[l..].iter().any(|&x| x != 0.0) {
                return Err(Error::config("tableau is not explicit"));
            }
        }
        if (b.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::config("tableau weights must sum to 1"));
        }
        Ok(ButcherTableau { a, b })
    }

    /// Number of stages, which equals the order for the tableaus built here.
    pub fn order(&self) -> usize {
        self.b.len()
    }

    pub fn a(&self, l: usize, k: usize) -> f64 {
        self.a[l][k]
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }
}

/// Forward Euler, explicit midpoint, Kutta's third order, classic RK4.
pub fn butcher(order: usize) -> Result<ButcherTableau> {
    let (a, b) = match order {
        1 => (vec![vec![0.0]], vec![1.0]),
        2 => (vec![vec![0.0, 0.0], vec![0.5, 0.0]], vec![0.0, 1.0]),
        3 => (
            vec![vec![0.0, 0.0, 0.0], vec![0.5, 0.0, 0.0], vec![-1.0, 2.0, 0.0]],
            vec![1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
        ),
        4 => (
            vec![
                vec![0.0, 0.0, 0.0, 0.0],
                vec![0.5, 0.0, 0.0, 0.0],
                vec![0.0, 0.5, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0],
            ],
            vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
        ),
        other => return Err(Error::config(format!("unsupported RK order {other}"))),
    };
    ButcherTableau::new(a, b)
}

/// Time derivative of a per-node state matrix (nodes x channels).
pub trait Rhs {
    fn eval(&self, state: ArrayView2<'_, f64>) -> Array2<f64>;
}

impl<F> Rhs for F
where
    F: Fn(ArrayView2<'_, f64>) -> Array2<f64>,
{
    fn eval(&self, state: ArrayView2<'_, f64>) -> Array2<f64> {
        self(state)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    dts: Vec<f64>,
}

impl TimeGrid {
    pub fn new(dts: Vec<f64>) -> Result<Self> {
        if dts.iter().any(|dt| !(dt.is_finite() && *dt > 0.0)) {
            return Err(Error::config("time steps must be positive and finite"));
        }
        Ok(TimeGrid { dts })
    }

    pub fn uniform(total: f64, steps: usize) -> Result<Self> {
        TimeGrid::new(vec![total / steps as f64; steps])
    }

    /// Steps within `(1 ± jitter)·total/steps` that sum to `total`.
    pub fn jittered(total: f64, steps: usize, jitter: f64, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&jitter) {
            return Err(Error::config(format!("time jitter {jitter} outside [0, 1)")));
        }
        let mut rng = rng_from_seed(seed);
        TimeGrid::new(jittered_spacings(steps, total, jitter, &mut rng))
    }

    pub fn dts(&self) -> &[f64] {
        &self.dts
    }

    pub fn len(&self) -> usize {
        self.dts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dts.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.dts.iter().sum()
    }

    /// `t_0 = 0, t_1, ..., t_M`.
    pub fn times(&self) -> Vec<f64> {
        let mut t = 0.0;
        std::iter::once(0.0)
            .chain(self.dts.iter().map(|dt| {
                t += dt;
                t
            }))
            .collect()
    }
}

/// States `s(t_0) .. s(t_M)` stacked as `(M + 1) x nodes x channels`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub time_grid: TimeGrid,
    pub states: Array3<f64>,
}

impl Trajectory {
    pub fn new(time_grid: TimeGrid, states: Array3<f64>) -> Result<Self> {
        if states.len_of(Axis(0)) != time_grid.len() + 1 {
            return Err(Error::shape(format!(
                "{} snapshots for {} time steps",
                states.len_of(Axis(0)),
                time_grid.len()
            )));
        }
        Ok(Trajectory { time_grid, states })
    }

    pub fn num_steps(&self) -> usize {
        self.time_grid.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.states.len_of(Axis(1))
    }

    pub fn d_state(&self) -> usize {
        self.states.len_of(Axis(2))
    }

    pub fn state(&self, k: usize) -> ArrayView2<'_, f64> {
        self.states.index_axis(Axis(0), k)
    }

    pub fn final_state(&self) -> ArrayView2<'_, f64> {
        self.state(self.num_steps())
    }
}

/// One explicit RK step. A non-finite stage reports `Divergence` with
/// `step = 0` and the 1-based stage index.
pub fn rk_step<F: Rhs + ?Sized>(
    f: &F,
    state: ArrayView2<'_, f64>,
    dt: f64,
    tableau: &ButcherTableau,
) -> Result<Array2<f64>> {
    let m = tableau.order();
    let mut stages: Vec<Array2<f64>> = Vec::with_capacity(m);
    for l in 0..m {
        let w = if l == 0 {
            f.eval(state)
        } else {
            let mut input = state.to_owned();
            for (k, wk) in stages.iter().enumerate() {
                let coef = tableau.a(l, k);
                if coef != 0.0 {
                    input.scaled_add(dt * coef, wk);
                }
            }
            f.eval(input.view())
        };
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                step: 0,
                substep: l + 1,
            });
        }
        stages.push(w);
    }
    let mut next = state.to_owned();
    for (wl, &bl) in stages.iter().zip(tableau.b()) {
        if bl != 0.0 {
            next.scaled_add(dt * bl, wl);
        }
    }
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence { step: 0, substep: m });
    }
    Ok(next)
}

/// Applies [`rk_step`] over every step of `time_grid`. Divergence errors carry
/// the 1-based step index.
pub fn integrate<F: Rhs + ?Sized>(
    f: &F,
    initial: ArrayView2<'_, f64>,
    time_grid: &TimeGrid,
    tableau: &ButcherTableau,
) -> Result<Trajectory> {
    let (n, d) = initial.dim();
    let mut states = Array3::zeros((time_grid.len() + 1, n, d));
    states.index_axis_mut(Axis(0), 0).assign(&initial);
    let mut current = initial.to_owned();
    for (k, &dt) in time_grid.dts().iter().enumerate() {
        current = rk_step(f, current.view(), dt, tableau).map_err(|e| match e {
            Error::Divergence { substep, .. } => Error::Divergence { step: k + 1, substep },
            other => other,
        })?;
        states.index_axis_mut(Axis(0), k + 1).assign(&current);
    }
    Trajectory::new(time_grid.clone(), states)
}
