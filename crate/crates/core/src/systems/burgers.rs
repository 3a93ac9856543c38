use std::f64::consts::PI;

use ndarray::{Array2, ArrayView2};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::domain::GridSpec;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::solver::fd::combine;
use crate::solver::Rhs;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BurgersCoeffs {
    pub nu: f64,
}

pub const DEFAULT_NU: f64 = 0.01;
pub const NU_RANGE: (f64, f64) = (0.005, 0.02);

/// Parameters of `A sin(2πx - φx) sin(2πy - φy) exp(-(x-x0)² - (y-y0)²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BurgersIc {
    pub phi_x: f64,
    pub phi_y: f64,
    pub x0: f64,
    pub y0: f64,
    /// Normalization so the largest grid value has magnitude 1.
    pub amplitude: f64,
}

impl BurgersIc {
    pub fn default_params() -> Self {
        BurgersIc {
            phi_x: 0.0,
            phi_y: 0.0,
            x0: 0.5,
            y0: 0.5,
            amplitude: 1.0,
        }
    }

    fn shape(&self, x: f64, y: f64) -> f64 {
        (2.0 * PI * x - self.phi_x).sin()
            * (2.0 * PI * y - self.phi_y).sin()
            * (-(x - self.x0).powi(2) - (y - self.y0).powi(2)).exp()
    }

    /// Sets `amplitude` from the grid maximum and returns the sampled field.
    pub fn realize(&mut self, grid: &GridSpec) -> Vec<f64> {
        let raw: Vec<f64> = (0..grid.ny)
            .flat_map(|iy| (0..grid.nx).map(move |ix| (ix, iy)))
            .map(|(ix, iy)| self.shape(grid.xs[ix], grid.ys[iy]))
            .collect();
        let peak = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.amplitude = if peak > 0.0 { 1.0 / peak } else { 1.0 };
        raw.iter().map(|v| v * self.amplitude).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BurgersIcVariant {
    Default,
    Random,
}

/// Initial `(u, v)` state and the parameters of each field.
///
/// With `shared` set, a random draw is reused for both fields.
pub fn sample_burgers_ic(
    grid: &GridSpec,
    variant: BurgersIcVariant,
    shared: bool,
    seed: u64,
) -> (Array2<f64>, [BurgersIc; 2]) {
    let mut rng = rng_from_seed(seed);
    let mut draw = || match variant {
        BurgersIcVariant::Default => BurgersIc::default_params(),
        BurgersIcVariant::Random => BurgersIc {
            phi_x: half_open_phase(&mut rng),
            phi_y: half_open_phase(&mut rng),
            x0: open_unit(&mut rng),
            y0: open_unit(&mut rng),
            amplitude: 1.0,
        },
    };
    let mut u = draw();
    let mut v = if shared { u } else { draw() };
    let fu = u.realize(grid);
    let fv = v.realize(grid);
    let mut state = Array2::zeros((grid.num_nodes(), 2));
    for (node, (a, b)) in fu.into_iter().zip(fv).enumerate() {
        state[[node, 0]] = a;
        state[[node, 1]] = b;
    }
    (state, [u, v])
}

/// Uniform on `(-π, π]`.
pub(crate) fn half_open_phase(rng: &mut crate::rng::Rng) -> f64 {
    -rng.random_range(-PI..PI)
}

/// Uniform on `(0, 1)`.
pub(crate) fn open_unit(rng: &mut crate::rng::Rng) -> f64 {
    loop {
        let x: f64 = rng.random();
        if x > 0.0 {
            return x;
        }
    }
}

/// Viscous 2-D Burgers' equation on a periodic nonuniform grid.
/// State channels are `(u, v)`.
#[derive(Clone, Debug)]
pub struct Burgers<'a> {
    grid: &'a GridSpec,
    dx: Vec<f64>,
    dy: Vec<f64>,
    nu: f64,
}

impl<'a> Burgers<'a> {
    pub fn new(grid: &'a GridSpec, coeffs: &BurgersCoeffs) -> Result<Self> {
        if !grid.periodic {
            return Err(Error::UnsupportedBoundary(
                "Burgers' equation is only defined here on periodic grids".into(),
            ));
        }
        grid.validate()?;
        Ok(Burgers {
            grid,
            dx: grid.x_spacings(),
            dy: grid.y_spacings(),
            nu: coeffs.nu,
        })
    }
}

impl Rhs for Burgers<'_> {
    fn eval(&self, state: ArrayView2<'_, f64>) -> Array2<f64> {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut out = Array2::zeros((nx * ny, 2));
        for iy in 0..ny {
            let (yl, yr) = ((iy + ny - 1) % ny, (iy + 1) % ny);
            let (dyl, dyr) = (self.dy[yl], self.dy[iy]);
            for ix in 0..nx {
                let (xl, xr) = ((ix + nx - 1) % nx, (ix + 1) % nx);
                let (dxl, dxr) = (self.dx[xl], self.dx[ix]);
                let here = iy * nx + ix;
                let (west, east) = (iy * nx + xl, iy * nx + xr);
                let (south, north) = (yl * nx + ix, yr * nx + ix);
                let u = state[[here, 0]];
                let v = state[[here, 1]];
                for ch in 0..2 {
                    let f = state[[here, ch]];
                    let (fx, fxx) = combine((f - state[[west, ch]]) / dxl, (state[[east, ch]] - f) / dxr, dxl, dxr);
                    let (fy, fyy) = combine((f - state[[south, ch]]) / dyl, (state[[north, ch]] - f) / dyr, dyl, dyr);
                    out[[here, ch]] = -u * fx - v * fy + self.nu * (fxx + fyy);
                }
            }
        }
        out
    }
}

pub fn burgers_rhs(state: ArrayView2<'_, f64>, grid: &GridSpec, coeffs: &BurgersCoeffs) -> Result<Array2<f64>> {
    Ok(Burgers::new(grid, coeffs)?.eval(state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::build_nonuniform_grid;

    #[test]
    fn zero_and_constant_fields_are_fixed_points() {
        let grid = build_nonuniform_grid(8, 6, 0.2, true, 1).unwrap();
        let c = BurgersCoeffs { nu: 0.5 };
        let zero = Array2::zeros((48, 2));
        assert!(burgers_rhs(zero.view(), &grid, &c).unwrap().iter().all(|v| *v == 0.0));
        let mut constant = Array2::zeros((48, 2));
        constant.column_mut(0).fill(0.7);
        let rhs = burgers_rhs(constant.view(), &grid, &c).unwrap();
        assert!(rhs.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn open_grid_rejected() {
        let grid = GridSpec::uniform(4, 4, false).unwrap();
        let s = Array2::zeros((16, 2));
        assert!(matches!(
            burgers_rhs(s.view(), &grid, &BurgersCoeffs { nu: 0.01 }),
            Err(Error::UnsupportedBoundary(_))
        ));
    }

    #[test]
    fn sine_profile_matches_analytic_rhs() {
        let n = 64;
        let grid = GridSpec::uniform(n, n, true).unwrap();
        let nu = 0.01;
        let mut s = Array2::zeros((n * n, 2));
        for iy in 0..n {
            for ix in 0..n {
                s[[grid.node(ix, iy), 0]] = (2.0 * PI * grid.xs[ix]).sin();
            }
        }
        let rhs = burgers_rhs(s.view(), &grid, &BurgersCoeffs { nu }).unwrap();
        let mut worst = 0.0f64;
        for iy in 0..n {
            for ix in 0..n {
                let x = grid.xs[ix];
                let k = 2.0 * PI;
                let exact = -(k * x).sin() * k * (k * x).cos() - nu * k * k * (k * x).sin();
                worst = worst.max((rhs[[grid.node(ix, iy), 0]] - exact).abs());
                assert_eq!(rhs[[grid.node(ix, iy), 1]], 0.0);
            }
        }
        assert!(worst < 1e-2, "max deviation {worst}");
    }

    #[test]
    fn default_ic_peaks_at_one() {
        let grid = GridSpec::uniform(100, 100, true).unwrap();
        let (s, [u, v]) = sample_burgers_ic(&grid, BurgersIcVariant::Default, false, 3);
        let peak = s.column(0).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!((peak - 1.0).abs() < 1e-15);
        assert_eq!(u, v);
        assert_eq!(u.phi_x, 0.0);
        assert_eq!(u.x0, 0.5);
        // Brute-force maximum of the unnormalized field.
        let mut raw_peak = 0.0f64;
        for &y in &grid.ys {
            for &x in &grid.xs {
                let f =
                    (2.0 * PI * x).sin() * (2.0 * PI * y).sin() * (-(x - 0.5f64).powi(2) - (y - 0.5f64).powi(2)).exp();
                raw_peak = raw_peak.max(f.abs());
            }
        }
        assert!((u.amplitude - 1.0 / raw_peak).abs() < 1e-12);
    }

    #[test]
    fn random_ic_ranges() {
        let grid = GridSpec::uniform(10, 10, true).unwrap();
        for seed in 0..50 {
            let (s, ics) = sample_burgers_ic(&grid, BurgersIcVariant::Random, false, seed);
            for ic in ics {
                assert!(ic.phi_x > -PI && ic.phi_x <= PI);
                assert!(ic.phi_y > -PI && ic.phi_y <= PI);
                assert!(ic.x0 > 0.0 && ic.x0 < 1.0 && ic.y0 > 0.0 && ic.y0 < 1.0);
            }
            let peak = s.column(1).iter().fold(0.0f64, |m, x| m.max(x.abs()));
            assert!((peak - 1.0).abs() < 1e-12);
        }
        let (_, [u, v]) = sample_burgers_ic(&grid, BurgersIcVariant::Random, false, 1);
        assert_ne!(u, v);
        let (_, [u, v]) = sample_burgers_ic(&grid, BurgersIcVariant::Random, true, 1);
        assert_eq!(u, v);
    }
}
