use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

/// AdamW over a flat parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamW {
    pub config: AdamWConfig,
    first: Vec<f64>,
    second: Vec<f64>,
    step: u64,
}

impl AdamW {
    pub fn new(num_params: usize, config: AdamWConfig) -> Self {
        AdamW {
            config,
            first: vec![0.0; num_params],
            second: vec![0.0; num_params],
            step: 0,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Decoupled decay `p -= lr·wd·p`, then the bias-corrected Adam step.
    pub fn update(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
        if params.len() != self.first.len() || grads.len() != self.first.len() {
            return Err(Error::shape(format!(
                "optimizer tracks {} parameters, got {} params and {} grads",
                self.first.len(),
                params.len(),
                grads.len()
            )));
        }
        let AdamWConfig {
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.config;
        self.step += 1;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.first[i] = beta1 * self.first[i] + (1.0 - beta1) * g;
            self.second[i] = beta2 * self.second[i] + (1.0 - beta2) * g * g;
            let m_hat = self.first[i] / c1;
            let v_hat = self.second[i] / c2;
            params[i] -= lr * weight_decay * params[i];
            params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

/// Learning rate as a function of the epoch index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LrSchedule {
    Constant {
        lr: f64,
    },
    /// `(start_epoch, lr)` pairs sorted by start; the first must start at 0.
    Milestones {
        table: Vec<(usize, f64)>,
    },
    /// Cosine annealing restarted every cycle; at each restart the period is
    /// multiplied by `period_factor` and the peak by `peak_factor`.
    CosineCycles {
        lr_min: f64,
        lr_max: f64,
        period: f64,
        period_factor: f64,
        peak_factor: f64,
    },
}

impl LrSchedule {
    pub fn validate(&self) -> Result<()> {
        match self {
            LrSchedule::Constant { lr } if *lr > 0.0 => Ok(()),
            LrSchedule::Milestones { table }
                if table.first().is_some_and(|&(e, _)| e == 0) && table.windows(2).all(|w| w[0].0 < w[1].0) =>
            {
                Ok(())
            }
            LrSchedule::CosineCycles {
                lr_min,
                lr_max,
                period,
                period_factor,
                ..
            } if lr_min <= lr_max && *period >= 1.0 && *period_factor > 0.0 => Ok(()),
            other => Err(Error::config(format!("invalid learning-rate schedule {other:?}"))),
        }
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        match self {
            LrSchedule::Constant { lr } => *lr,
            LrSchedule::Milestones { table } => table
                .iter()
                .take_while(|&&(start, _)| start <= epoch)
                .last()
                .map_or(table[0].1, |&(_, lr)| lr),
            LrSchedule::CosineCycles {
                lr_min,
                lr_max,
                period,
                period_factor,
                peak_factor,
            } => {
                let mut t = epoch as f64;
                let mut len = *period;
                let mut peak = *lr_max;
                while t >= len {
                    t -= len;
                    len *= period_factor;
                    peak *= peak_factor;
                }
                cosine(*lr_min, peak, t, len)
            }
        }
    }
}

/// `η_min + ½(η_max − η_min)(1 + cos(π t / T))`.
pub fn cosine(lr_min: f64, lr_max: f64, t: f64, period: f64) -> f64 {
    lr_min + 0.5 * (lr_max - lr_min) * (1.0 + (PI * t / period).cos())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_grad_no_decay_is_fixed_point() {
        let mut opt = AdamW::new(
            3,
            AdamWConfig {
                weight_decay: 0.0,
                ..Default::default()
            },
        );
        let mut p = vec![1.0, -2.0, 0.5];
        opt.update(&mut p, &[0.0; 3], 0.1).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn pure_decay_shrinks() {
        let mut opt = AdamW::new(2, AdamWConfig::default());
        let mut p = vec![1.0, -4.0];
        opt.update(&mut p, &[0.0; 2], 0.1).unwrap();
        let shrink = 1.0 - 0.1 * 0.01;
        assert!((p[0] - shrink).abs() < 1e-15);
        assert!((p[1] + 4.0 * shrink).abs() < 1e-15);
    }

    #[test]
    fn first_step_matches_scalar_oracle() {
        let cfg = AdamWConfig {
            weight_decay: 0.0,
            ..Default::default()
        };
        let mut opt = AdamW::new(1, cfg);
        let (lr, g) = (0.01, 0.3);
        let mut p = vec![2.0];
        opt.update(&mut p, &[g], lr).unwrap();
        // m̂ = g, v̂ = g², so the displacement is lr·g/(|g| + eps).
        let expected = 2.0 - lr * g / (g.abs() + 1e-8);
        assert!((p[0] - expected).abs() < 1e-15);
        // Two steps with different gradients, expanded by hand.
        let mut p2 = p.clone();
        opt.update(&mut p2, &[-0.1], lr).unwrap();
        let m = 0.9 * 0.1 * g + 0.1 * -0.1;
        let v = 0.999 * 0.001 * g * g + 0.001 * 0.01;
        let step = lr * (m / (1.0 - 0.81)) / ((v / (1.0 - 0.999f64.powi(2))).sqrt() + 1e-8);
        assert!((p2[0] - (p[0] - step)).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch() {
        let mut opt = AdamW::new(2, AdamWConfig::default());
        assert!(opt.update(&mut [0.0; 3], &[0.0; 3], 0.1).is_err());
    }

    #[test]
    fn cosine_landmarks() {
        let s = LrSchedule::CosineCycles {
            lr_min: 1e-4,
            lr_max: 1e-2,
            period: 10.0,
            period_factor: 2.0,
            peak_factor: 0.7,
        };
        assert_eq!(s.lr_at(0), 1e-2);
        assert!((s.lr_at(5) - (1e-4 + 1e-2) / 2.0).abs() < 1e-15);
        assert!((cosine(1e-4, 1e-2, 10.0, 10.0) - 1e-4).abs() < 1e-15);
        // Second cycle restarts at epoch 10 with period 20 and peak 0.7e-2.
        assert!((s.lr_at(10) - 0.7e-2).abs() < 1e-15);
        assert!((s.lr_at(20) - (1e-4 + 0.7e-2) / 2.0).abs() < 1e-15);
        // Third cycle starts at 30.
        assert!((s.lr_at(30) - 0.49e-2).abs() < 1e-15);
    }

    #[test]
    fn milestones() {
        let s = LrSchedule::Milestones {
            table: vec![(0, 0.004), (20, 0.002), (50, 0.001)],
        };
        s.validate().unwrap();
        assert_eq!(s.lr_at(0), 0.004);
        assert_eq!(s.lr_at(19), 0.004);
        assert_eq!(s.lr_at(20), 0.002);
        assert_eq!(s.lr_at(49), 0.002);
        assert_eq!(s.lr_at(499), 0.001);
        assert!(LrSchedule::Milestones { table: vec![(3, 0.1)] }.validate().is_err());
    }
}
