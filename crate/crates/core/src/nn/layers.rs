use std::f64::consts::{FRAC_1_SQRT_2, PI};

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng as _;

use crate::rng::Rng;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x * FRAC_1_SQRT_2))
}

/// `x Φ(x)` with the exact error function.
pub fn gelu(x: f64) -> f64 {
    x * normal_cdf(x)
}

pub fn gelu_grad(x: f64) -> f64 {
    gelu_grad_with_cdf(x, normal_cdf(x))
}

/// [`gelu_grad`] given `Φ(x)`, which the forward pass already computed.
#[inline]
pub fn gelu_grad_with_cdf(x: f64, cdf: f64) -> f64 {
    let density = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
    cdf + x * density
}

/// Visits trainable tensors in a fixed declaration order.
pub trait Parameters {
    fn visit(&self, f: &mut dyn FnMut(&[f64]));
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64]));

    fn num_params(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |s| n += s.len());
        n
    }

    fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        self.visit(&mut |s| out.extend_from_slice(s));
        out
    }

    /// Overwrites all parameters from `flat`; returns false on length mismatch.
    fn load_flat(&mut self, flat: &[f64]) -> bool {
        if flat.len() != self.num_params() {
            return false;
        }
        let mut at = 0;
        self.visit_mut(&mut |s| {
            s.copy_from_slice(&flat[at..at + s.len()]);
            at += s.len();
        });
        true
    }

    fn fill(&mut self, value: f64) {
        self.visit_mut(&mut |s| s.fill(value));
    }
}

/// Affine map applied row-wise: `y = x Wᵀ + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    /// `out x in`.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(input: usize, output: usize) -> Self {
        Dense {
            weight: Array2::zeros((output, input)),
            bias: Array1::zeros(output),
        }
    }

    /// Weights and biases uniform in `±1/sqrt(input)`.
    pub fn init(input: usize, output: usize, rng: &mut Rng) -> Self {
        let bound = 1.0 / (input.max(1) as f64).sqrt();
        let mut draw = || rng.random_range(-bound..=bound);
        let weight = Array2::from_shape_simple_fn((output, input), &mut draw);
        let bias = Array1::from_shape_simple_fn(output, &mut draw);
        Dense { weight, bias }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut y = x.dot(&self.weight.t());
        y += &self.bias;
        y
    }

    /// Accumulates parameter gradients into `grad` and returns `dL/dx`.
    pub fn backward(&self, x: ArrayView2<'_, f64>, dy: ArrayView2<'_, f64>, grad: &mut Dense) -> Array2<f64> {
        grad.weight += &dy.t().dot(&x);
        grad.bias += &dy.sum_axis(Axis(0));
        dy.dot(&self.weight)
    }
}

impl Parameters for Dense {
    fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        f(self.weight.as_slice().expect("standard layout"));
        f(self.bias.as_slice().expect("standard layout"));
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        f(self.weight.as_slice_mut().expect("standard layout"));
        f(self.bias.as_slice_mut().expect("standard layout"));
    }
}

/// Two dense layers with a GeLU in between.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp2 {
    pub l1: Dense,
    pub l2: Dense,
}

/// Intermediate values needed by [`Mlp2::backward`].
#[derive(Clone, Debug)]
pub struct MlpCache {
    pre: Array2<f64>,
    cdf: Array2<f64>,
    act: Array2<f64>,
}

impl Mlp2 {
    pub fn init(input: usize, hidden: usize, output: usize, rng: &mut Rng) -> Self {
        let l1 = Dense::init(input, hidden, rng);
        let l2 = Dense::init(hidden, output, rng);
        Mlp2 { l1, l2 }
    }

    pub fn zeros(input: usize, hidden: usize, output: usize) -> Self {
        Mlp2 {
            l1: Dense::zeros(input, hidden),
            l2: Dense::zeros(hidden, output),
        }
    }

    /// `h (in + 1) + out (h + 1)`.
    pub fn param_count(input: usize, hidden: usize, output: usize) -> usize {
        hidden * (input + 1) + output * (hidden + 1)
    }

    pub fn input_dim(&self) -> usize {
        self.l1.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.l2.output_dim()
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        self.forward_cached(x).0
    }

    pub fn forward_cached(&self, x: ArrayView2<'_, f64>) -> (Array2<f64>, MlpCache) {
        let pre = self.l1.forward(x);
        let cdf = pre.mapv(normal_cdf);
        let act = &pre * &cdf;
        let y = self.l2.forward(act.view());
        (y, MlpCache { pre, cdf, act })
    }

    pub fn backward(
        &self,
        x: ArrayView2<'_, f64>,
        cache: &MlpCache,
        dy: ArrayView2<'_, f64>,
        grad: &mut Mlp2,
    ) -> Array2<f64> {
        let mut dh = self.l2.backward(cache.act.view(), dy, &mut grad.l2);
        Zip::from(&mut dh)
            .and(&cache.pre)
            .and(&cache.cdf)
            .for_each(|d, &p, &c| *d *= gelu_grad_with_cdf(p, c));
        self.l1.backward(x, dh.view(), &mut grad.l1)
    }
}

impl Parameters for Mlp2 {
    fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        self.l1.visit(f);
        self.l2.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        self.l1.visit_mut(f);
        self.l2.visit_mut(f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use ndarray::array;

    #[test]
    fn gelu_values() {
        assert_eq!(gelu(0.0), 0.0);
        assert!((gelu(10.0) - 10.0).abs() < 1e-6);
        // Φ(-1) = 0.158655253931457...
        assert!((gelu(-1.0) + 0.158_655_253_931_457_05).abs() < 1e-14);
        for x in [-3.0, -0.5, 0.2, 1.7] {
            assert_eq!(gelu(x) - x * normal_cdf(x), 0.0);
        }
    }

    #[test]
    fn gelu_grad_matches_finite_difference() {
        for x in [-2.5, -0.3, 0.0, 0.8, 3.1] {
            let h = 1e-6;
            let fd = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
            assert!((fd - gelu_grad(x)).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_mlp_outputs_zero() {
        let m = Mlp2::zeros(3, 4, 2);
        let y = m.forward(array![[1.0, -2.0, 0.5]].view());
        assert!(y.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn identity_mlp_is_elementwise_gelu() {
        let mut m = Mlp2::zeros(3, 3, 3);
        m.l1.weight = Array2::eye(3);
        m.l2.weight = Array2::eye(3);
        let x = array![[1.0, -2.0, 0.5]];
        let y = m.forward(x.view());
        for i in 0..3 {
            assert_eq!(y[[0, i]], gelu(x[[0, i]]));
        }
    }

    #[test]
    fn mlp_matches_scalar_loops() {
        let mut rng = rng_from_seed(4);
        let m = Mlp2::init(3, 5, 2, &mut rng);
        let x = array![[0.3, -1.1, 2.0], [1.5, 0.0, -0.7]];
        let y = m.forward(x.view());
        for r in 0..2 {
            let mut hidden = [0.0; 5];
            for (h, out) in hidden.iter_mut().enumerate() {
                let mut acc = m.l1.bias[h];
                for i in 0..3 {
                    acc += m.l1.weight[[h, i]] * x[[r, i]];
                }
                *out = gelu(acc);
            }
            for o in 0..2 {
                let mut acc = m.l2.bias[o];
                for (h, a) in hidden.iter().enumerate() {
                    acc += m.l2.weight[[o, h]] * a;
                }
                assert!((acc - y[[r, o]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dense_gradient_closed_form() {
        // L = 0.5 |W x + b - t|², so dL/dW = (W x + b - t) xᵀ.
        let mut rng = rng_from_seed(1);
        let d = Dense::init(3, 2, &mut rng);
        let x = array![[0.5, -1.0, 2.0]];
        let t = array![[0.1, 0.2]];
        let y = d.forward(x.view());
        let delta = &y - &t;
        let mut grad = Dense::zeros(3, 2);
        d.backward(x.view(), delta.view(), &mut grad);
        for o in 0..2 {
            for i in 0..3 {
                assert!((grad.weight[[o, i]] - delta[[0, o]] * x[[0, i]]).abs() < 1e-12);
            }
            assert!((grad.bias[o] - delta[[0, o]]).abs() < 1e-12);
        }
    }

    #[test]
    fn param_count_formula() {
        let mut rng = rng_from_seed(0);
        let m = Mlp2::init(2, 32, 2, &mut rng);
        assert_eq!(m.num_params(), 162);
        assert_eq!(Mlp2::param_count(2, 32, 2), 162);
    }

    #[test]
    fn flat_round_trip() {
        let mut rng = rng_from_seed(0);
        let m = Mlp2::init(2, 3, 1, &mut rng);
        let flat = m.to_flat();
        let mut z = Mlp2::zeros(2, 3, 1);
        assert!(z.load_flat(&flat));
        assert_eq!(z, m);
        assert!(!z.load_flat(&flat[1..]));
    }
}
