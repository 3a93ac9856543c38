//! Coupled ODE systems on graphs: heat diffusion, Kuramoto oscillators and
//! y-coupled Rössler attractors. Per-edge coefficients are indexed by
//! undirected edge id, in the order of [`Graph::edges`].

use ndarray::{Array2, ArrayView2};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::burgers::half_open_phase;
use crate::domain::Graph;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::solver::Rhs;

pub const HEAT_D_RANGE: (f64, f64) = (0.1, 1.0);
pub const KURAMOTO_K_RANGE: (f64, f64) = (0.1, 0.5);
pub const ROSSLER_AB_RANGE: (f64, f64) = (0.1, 0.3);
pub const ROSSLER_C_RANGE: (f64, f64) = (5.0, 7.0);
pub const ROSSLER_K_RANGE: (f64, f64) = (0.02, 0.04);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatCoeffs {
    #[serde(rename = "D")]
    pub d: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KuramotoCoeffs {
    pub omega: Vec<f64>,
    #[serde(rename = "K")]
    pub k: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RosslerCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    #[serde(rename = "K")]
    pub k: Vec<f64>,
}

fn check_edges(graph: &Graph, per_edge: &[f64], name: &str) -> Result<()> {
    if per_edge.len() != graph.num_edges() {
        return Err(Error::shape(format!(
            "{name} has {} entries for {} edges",
            per_edge.len(),
            graph.num_edges()
        )));
    }
    Ok(())
}

/// `dT_i/dt = Σ_j D_ij (T_j - T_i)`.
#[derive(Clone, Debug)]
pub struct Heat<'a> {
    graph: &'a Graph,
    coeffs: &'a HeatCoeffs,
}

impl<'a> Heat<'a> {
    pub fn new(graph: &'a Graph, coeffs: &'a HeatCoeffs) -> Result<Self> {
        check_edges(graph, &coeffs.d, "D")?;
        Ok(Heat { graph, coeffs })
    }
}

impl Rhs for Heat<'_> {
    fn eval(&self, s: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = Array2::zeros((self.graph.num_nodes(), 1));
        for i in 0..self.graph.num_nodes() {
            let ti = s[[i, 0]];
            out[[i, 0]] = self
                .graph
                .neighbors(i)
                .iter()
                .zip(self.graph.neighbor_edges(i))
                .map(|(&j, &e)| self.coeffs.d[e] * (s[[j, 0]] - ti))
                .sum();
        }
        out
    }
}

/// `dθ_i/dt = ω_i + Σ_j K_ij sin(θ_j - θ_i)`. Phases are not wrapped.
#[derive(Clone, Debug)]
pub struct Kuramoto<'a> {
    graph: &'a Graph,
    coeffs: &'a KuramotoCoeffs,
}

impl<'a> Kuramoto<'a> {
    pub fn new(graph: &'a Graph, coeffs: &'a KuramotoCoeffs) -> Result<Self> {
        check_edges(graph, &coeffs.k, "K")?;
        if coeffs.omega.len() != graph.num_nodes() {
            return Err(Error::shape("omega needs one entry per node"));
        }
        Ok(Kuramoto { graph, coeffs })
    }
}

impl Rhs for Kuramoto<'_> {
    fn eval(&self, s: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = Array2::zeros((self.graph.num_nodes(), 1));
        for i in 0..self.graph.num_nodes() {
            let th = s[[i, 0]];
            let coupling: f64 = self
                .graph
                .neighbors(i)
                .iter()
                .zip(self.graph.neighbor_edges(i))
                .map(|(&j, &e)| self.coeffs.k[e] * (s[[j, 0]] - th).sin())
                .sum();
            out[[i, 0]] = self.coeffs.omega[i] + coupling;
        }
        out
    }
}

/// Rössler attractors coupled diffusively through `y`. Channels `(x, y, z)`.
#[derive(Clone, Debug)]
pub struct Rossler<'a> {
    graph: &'a Graph,
    coeffs: &'a RosslerCoeffs,
}

impl<'a> Rossler<'a> {
    pub fn new(graph: &'a Graph, coeffs: &'a RosslerCoeffs) -> Result<Self> {
        check_edges(graph, &coeffs.k, "K")?;
        Ok(Rossler { graph, coeffs })
    }
}

impl Rhs for Rossler<'_> {
    fn eval(&self, s: ArrayView2<'_, f64>) -> Array2<f64> {
        let RosslerCoeffs { a, b, c, ref k } = *self.coeffs;
        let mut out = Array2::zeros((self.graph.num_nodes(), 3));
        for i in 0..self.graph.num_nodes() {
            let (x, y, z) = (s[[i, 0]], s[[i, 1]], s[[i, 2]]);
            let coupling: f64 = self
                .graph
                .neighbors(i)
                .iter()
                .zip(self.graph.neighbor_edges(i))
                .map(|(&j, &e)| k[e] * (s[[j, 1]] - y))
                .sum();
            out[[i, 0]] = -y - z;
            out[[i, 1]] = x + a * y + coupling;
            out[[i, 2]] = b + z * (x - c);
        }
        out
    }
}

pub fn heat_rhs(s: ArrayView2<'_, f64>, graph: &Graph, c: &HeatCoeffs) -> Result<Array2<f64>> {
    Ok(Heat::new(graph, c)?.eval(s))
}

pub fn kuramoto_rhs(s: ArrayView2<'_, f64>, graph: &Graph, c: &KuramotoCoeffs) -> Result<Array2<f64>> {
    Ok(Kuramoto::new(graph, c)?.eval(s))
}

pub fn rossler_rhs(s: ArrayView2<'_, f64>, graph: &Graph, c: &RosslerCoeffs) -> Result<Array2<f64>> {
    Ok(Rossler::new(graph, c)?.eval(s))
}

/// Each node is hot (1) with probability `p`, cold (0) otherwise; `p` itself
/// is uniform on `(0, 1)`. Returns the state and `p`.
pub fn sample_heat_ic(graph: &Graph, seed: u64) -> (Array2<f64>, f64) {
    let mut rng = rng_from_seed(seed);
    let p: f64 = super::burgers::open_unit(&mut rng);
    let state = Array2::from_shape_fn(
        (graph.num_nodes(), 1),
        |_| {
            if rng.random::<f64>() < p {
                1.0
            } else {
                0.0
            }
        },
    );
    (state, p)
}

/// Phases uniform on `(-π, π]`.
pub fn sample_kuramoto_ic(graph: &Graph, seed: u64) -> Array2<f64> {
    let mut rng = rng_from_seed(seed);
    Array2::from_shape_fn((graph.num_nodes(), 1), |_| half_open_phase(&mut rng))
}

/// `x, y` uniform on `[-4, 4]`, `z` uniform on `[0, 6]`.
pub fn sample_rossler_ic(graph: &Graph, seed: u64) -> Array2<f64> {
    let mut rng = rng_from_seed(seed);
    let mut s = Array2::zeros((graph.num_nodes(), 3));
    for mut row in s.rows_mut() {
        row[0] = rng.random_range(-4.0..=4.0);
        row[1] = rng.random_range(-4.0..=4.0);
        row[2] = rng.random_range(0.0..=6.0);
    }
    s
}

fn uniform_edges(graph: &Graph, range: (f64, f64), rng: &mut crate::rng::Rng) -> Vec<f64> {
    (0..graph.num_edges())
        .map(|_| rng.random_range(range.0..=range.1))
        .collect()
}

pub fn sample_heat_coeffs(graph: &Graph, seed: u64) -> HeatCoeffs {
    let mut rng = rng_from_seed(seed);
    HeatCoeffs {
        d: uniform_edges(graph, HEAT_D_RANGE, &mut rng),
    }
}

pub fn sample_kuramoto_coeffs(graph: &Graph, seed: u64) -> KuramotoCoeffs {
    let mut rng = rng_from_seed(seed);
    let omega = (0..graph.num_nodes()).map(|_| rng.sample(StandardNormal)).collect();
    KuramotoCoeffs {
        omega,
        k: uniform_edges(graph, KURAMOTO_K_RANGE, &mut rng),
    }
}

pub fn sample_rossler_coeffs(graph: &Graph, seed: u64) -> RosslerCoeffs {
    let mut rng = rng_from_seed(seed);
    let a = rng.random_range(ROSSLER_AB_RANGE.0..=ROSSLER_AB_RANGE.1);
    let b = rng.random_range(ROSSLER_AB_RANGE.0..=ROSSLER_AB_RANGE.1);
    let c = rng.random_range(ROSSLER_C_RANGE.0..=ROSSLER_C_RANGE.1);
    RosslerCoeffs {
        a,
        b,
        c,
        k: uniform_edges(graph, ROSSLER_K_RANGE, &mut rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::gen_erdos_renyi;
    use ndarray::array;
    use std::f64::consts::PI;

    fn star(leaves: usize) -> Graph {
        Graph::new(leaves + 1, (1..=leaves).map(|l| [0, l])).unwrap()
    }

    #[test]
    fn heat_cases() {
        let g = Graph::new(2, [[0, 1]]).unwrap();
        let c = HeatCoeffs { d: vec![1.0] };
        assert_eq!(
            heat_rhs(array![[1.0], [0.0]].view(), &g, &c).unwrap(),
            array![[-1.0], [1.0]]
        );
        assert_eq!(
            heat_rhs(array![[0.3], [0.3]].view(), &g, &c).unwrap(),
            array![[0.0], [0.0]]
        );

        let g = star(5);
        let c = HeatCoeffs { d: vec![0.5; 5] };
        let mut t = Array2::zeros((6, 1));
        t[[0, 0]] = 1.0;
        let r = heat_rhs(t.view(), &g, &c).unwrap();
        assert!((r[[0, 0]] + 2.5).abs() < 1e-15);
        assert!((r[[3, 0]] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn kuramoto_cases() {
        let g = Graph::new(2, [[0, 1]]).unwrap();
        let c = KuramotoCoeffs {
            omega: vec![0.0, 0.0],
            k: vec![0.2],
        };
        let r = kuramoto_rhs(array![[0.0], [PI / 2.0]].view(), &g, &c).unwrap();
        assert!((r[[0, 0]] - 0.2).abs() < 1e-15 && (r[[1, 0]] + 0.2).abs() < 1e-15);

        let c = KuramotoCoeffs {
            omega: vec![0.4, -1.3],
            k: vec![0.2],
        };
        let r = kuramoto_rhs(array![[1.0], [1.0]].view(), &g, &c).unwrap();
        assert_eq!(r, array![[0.4], [-1.3]]);
    }

    #[test]
    fn kuramoto_coupling_sums_to_zero() {
        let g = gen_erdos_renyi(40, 4.0, 2).unwrap();
        let c = sample_kuramoto_coeffs(&g, 3);
        let th = sample_kuramoto_ic(&g, 4);
        let r = kuramoto_rhs(th.view(), &g, &c).unwrap();
        let drift: f64 = r.iter().zip(&c.omega).map(|(d, w)| d - w).sum();
        assert!(drift.abs() < 1e-12, "{drift}");
    }

    #[test]
    fn rossler_cases() {
        let g = Graph::new(1, []).unwrap();
        let c = RosslerCoeffs {
            a: 0.2,
            b: 0.2,
            c: 5.7,
            k: vec![],
        };
        assert_eq!(
            rossler_rhs(array![[0.0, 0.0, 0.0]].view(), &g, &c).unwrap(),
            array![[0.0, 0.0, 0.2]]
        );

        let g = Graph::new(2, [[0, 1]]).unwrap();
        let c = RosslerCoeffs { k: vec![0.03], ..c };
        let s = array![[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]];
        let r = rossler_rhs(s.view(), &g, &c).unwrap();
        assert!((r[[0, 1]] - (1.0 + 0.2 * 2.0)).abs() < 1e-15);
    }

    #[test]
    fn rossler_coupling_sums_to_zero() {
        let g = gen_erdos_renyi(30, 4.0, 8).unwrap();
        let c = sample_rossler_coeffs(&g, 1);
        let s = sample_rossler_ic(&g, 2);
        let r = rossler_rhs(s.view(), &g, &c).unwrap();
        let coupling: f64 = (0..30).map(|i| r[[i, 1]] - s[[i, 0]] - c.a * s[[i, 1]]).sum();
        assert!(coupling.abs() < 1e-12);
    }

    #[test]
    fn samplers_respect_ranges() {
        let g = gen_erdos_renyi(60, 4.0, 5).unwrap();
        for seed in 0..20 {
            let (t, p) = sample_heat_ic(&g, seed);
            assert!(t.iter().all(|v| *v == 0.0 || *v == 1.0));
            assert!(p > 0.0 && p < 1.0);
            assert!(sample_kuramoto_ic(&g, seed).iter().all(|v| *v > -PI && *v <= PI));
            let r = sample_rossler_ic(&g, seed);
            for row in r.rows() {
                assert!(row[0].abs() <= 4.0 && row[1].abs() <= 4.0);
                assert!((0.0..=6.0).contains(&row[2]));
            }
            let h = sample_heat_coeffs(&g, seed);
            assert!(h.d.iter().all(|d| (0.1..=1.0).contains(d)));
            let k = sample_kuramoto_coeffs(&g, seed);
            assert!(k.k.iter().all(|d| (0.1..=0.5).contains(d)));
            let ro = sample_rossler_coeffs(&g, seed);
            assert!((5.0..=7.0).contains(&ro.c));
            assert!((0.1..=0.3).contains(&ro.a) && (0.1..=0.3).contains(&ro.b));
            assert!(ro.k.iter().all(|d| (0.02..=0.04).contains(d)));
        }
    }

    #[test]
    fn coefficient_length_checked() {
        let g = Graph::new(2, [[0, 1]]).unwrap();
        assert!(heat_rhs(array![[1.0], [0.0]].view(), &g, &HeatCoeffs { d: vec![] }).is_err());
    }
}
