use ndarray::Array2;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::graph::Graph;
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, Rng};

/// Tensor-product grid on the unit square.
///
/// Periodic grids cover `[0, 1)` per axis and wrap; open grids cover `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub periodic: bool,
}

impl GridSpec {
    pub fn uniform(nx: usize, ny: usize, periodic: bool) -> Result<Self> {
        build_nonuniform_grid(nx, ny, 0.0, periodic, 0)
    }

    pub fn num_nodes(&self) -> usize {
        self.nx * self.ny
    }

    /// Row-major node index: `x` varies fastest.
    pub fn node(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    pub fn x_spacings(&self) -> Vec<f64> {
        axis_spacings(&self.xs, self.periodic)
    }

    pub fn y_spacings(&self) -> Vec<f64> {
        axis_spacings(&self.ys, self.periodic)
    }

    pub fn validate(&self) -> Result<()> {
        if self.xs.len() != self.nx || self.ys.len() != self.ny {
            return Err(Error::shape("grid coordinate count differs from nx/ny"));
        }
        if self.nx < 3 || self.ny < 3 {
            return Err(Error::config("grid needs at least 3 points per axis"));
        }
        for s in self.x_spacings().iter().chain(&self.y_spacings()) {
            if !(s.is_finite() && *s > 0.0) {
                return Err(Error::config("grid spacings must be positive"));
            }
        }
        Ok(())
    }
}

/// Spacing between consecutive points; for periodic axes the last entry is
/// the wrap spacing `1 - last + first`.
pub fn axis_spacings(coords: &[f64], periodic: bool) -> Vec<f64> {
    let mut out: Vec<f64> = coords.windows(2).map(|w| w[1] - w[0]).collect();
    if periodic {
        out.push(1.0 - coords[coords.len() - 1] + coords[0]);
    }
    out
}

/// `count` positive spacings summing to `total`, each within
/// `(1 ± jitter)·total/count`.
///
/// Perturbations are drawn uniformly in `[-jitter, jitter]`, centered so the
/// sum is preserved, and shrunk if centering pushed any of them past the bound.
pub fn jittered_spacings(count: usize, total: f64, jitter: f64, rng: &mut Rng) -> Vec<f64> {
    let h = total / count as f64;
    if jitter == 0.0 {
        return vec![h; count];
    }
    let raw: Vec<f64> = (0..count).map(|_| rng.random_range(-jitter..=jitter)).collect();
    let mean = raw.iter().sum::<f64>() / count as f64;
    let centered: Vec<f64> = raw.iter().map(|u| u - mean).collect();
    let peak = centered.iter().fold(0.0f64, |m, u| m.max(u.abs()));
    let scale = if peak > jitter { jitter / peak } else { 1.0 };
    centered.iter().map(|u| h * (1.0 + u * scale)).collect()
}

fn axis_coords(n: usize, jitter: f64, periodic: bool, rng: &mut Rng) -> Vec<f64> {
    let intervals = if periodic { n } else { n - 1 };
    let spacings = jittered_spacings(intervals, 1.0, jitter, rng);
    let mut coords = Vec::with_capacity(n);
    let mut x = 0.0;
    coords.push(x);
    for s in &spacings[..n - 1] {
        x += s;
        coords.push(x);
    }
    if !periodic {
        coords[n - 1] = 1.0;
    }
    coords
}

pub fn build_nonuniform_grid(nx: usize, ny: usize, jitter: f64, periodic: bool, seed: u64) -> Result<GridSpec> {
    if nx < 3 || ny < 3 {
        return Err(Error::config(format!(
            "grid size {nx}x{ny} too small, need at least 3x3"
        )));
    }
    if !(0.0..0.5).contains(&jitter) {
        return Err(Error::config(format!("jitter {jitter} outside [0, 0.5)")));
    }
    let mut rng = rng_from_seed(seed);
    let xs = axis_coords(nx, jitter, periodic, &mut rng);
    let ys = axis_coords(ny, jitter, periodic, &mut rng);
    Ok(GridSpec {
        nx,
        ny,
        xs,
        ys,
        periodic,
    })
}

/// Converts a grid to a graph over its points, plus the per-directed-edge
/// displacement features `[x_j - x_i, y_j - y_i]` for each row `(i <- j)` of
/// [`Graph::directed`].
pub fn grid_to_graph(grid: &GridSpec) -> Result<(Graph, Array2<f64>)> {
    grid.validate()?;
    let (nx, ny) = (grid.nx, grid.ny);
    let dx = grid.x_spacings();
    let dy = grid.y_spacings();
    // Displacement of each undirected edge from its lower to its upper index.
    let mut edges = Vec::new();
    let mut disp = Vec::new();
    for iy in 0..ny {
        for ix in 0..nx {
            let here = grid.node(ix, iy);
            if ix + 1 < nx || grid.periodic {
                let there = grid.node((ix + 1) % nx, iy);
                edges.push([here, there]);
                disp.push([dx[ix], 0.0]);
            }
            if iy + 1 < ny || grid.periodic {
                let there = grid.node(ix, (iy + 1) % ny);
                edges.push([here, there]);
                disp.push([0.0, dy[iy]]);
            }
        }
    }
    let graph = Graph::new(grid.num_nodes(), edges.iter().copied())?;
    let directed = graph.directed();
    let mut feats = Array2::zeros((directed.len(), 2));
    for row in 0..directed.len() {
        let e = directed.undirected[row];
        let [a, _] = edges[e];
        // `disp` points from edges[e][0] to edges[e][1].
        let sign = if directed.receivers[row] == a { 1.0 } else { -1.0 };
        feats[[row, 0]] = sign * disp[e][0];
        feats[[row, 1]] = sign * disp[e][1];
    }
    Ok((graph, feats))
}
