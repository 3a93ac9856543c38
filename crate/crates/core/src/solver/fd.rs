//! Finite differences on nonuniform 1-D point sets.
//!
//! With `dl = x_i - x_{i-1}` and `dr = x_{i+1} - x_i`:
//!
//! ```text
//! f'_{i-1/2} = (f_i - f_{i-1}) / dl        f'_{i+1/2} = (f_{i+1} - f_i) / dr
//! f'_i  = (dr f'_{i-1/2} + dl f'_{i+1/2}) / (dl + dr)
//! f''_i = (f'_{i+1/2} - f'_{i-1/2}) / ((dl + dr) / 2)
//! ```
//!
//! `spacings[i]` is the gap between point `i` and `i + 1`. Periodic axes carry
//! one extra entry, the wrap gap from the last point back to the first.
//! On open axes the end points lack one half-derivative and are reported as
//! `None`.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct HalfDerivatives {
    pub left: Vec<Option<f64>>,
    pub right: Vec<Option<f64>>,
}

/// First and second derivative at a point from its two half-derivatives.
#[inline]
pub fn combine(left: f64, right: f64, dl: f64, dr: f64) -> (f64, f64) {
    let span = dl + dr;
    ((dr * left + dl * right) / span, (right - left) / (0.5 * span))
}

fn check(values: &[f64], spacings: &[f64], periodic: bool) -> Result<()> {
    let n = values.len();
    let expected = if periodic { n } else { n.saturating_sub(1) };
    if n < 2 || spacings.len() != expected {
        return Err(Error::shape(format!(
            "{n} values need {expected} spacings (periodic = {periodic}), got {}",
            spacings.len()
        )));
    }
    if spacings.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::config("spacings must be positive"));
    }
    Ok(())
}

pub fn fd_half_derivatives(values: &[f64], spacings: &[f64], periodic: bool) -> Result<HalfDerivatives> {
    check(values, spacings, periodic)?;
    let n = values.len();
    // Forward difference across gap `k`, between point k and k+1 (wrapping).
    let gap = |k: usize| (values[(k + 1) % n] - values[k]) / spacings[k];
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    for i in 0..n {
        left.push(match (i, periodic) {
            (0, true) => Some(gap(n - 1)),
            (0, false) => None,
            _ => Some(gap(i - 1)),
        });
        right.push(if i + 1 < n || periodic { Some(gap(i)) } else { None });
    }
    Ok(HalfDerivatives { left, right })
}

fn both(values: &[f64], spacings: &[f64], periodic: bool) -> Result<Vec<Option<(f64, f64)>>> {
    let half = fd_half_derivatives(values, spacings, periodic)?;
    let n = values.len();
    Ok((0..n)
        .map(|i| {
            let (l, r) = (half.left[i]?, half.right[i]?);
            let dl = spacings[(i + n - 1) % n];
            let dr = spacings[i];
            Some(combine(l, r, dl, dr))
        })
        .collect())
}

pub fn fd_first(values: &[f64], spacings: &[f64], periodic: bool) -> Result<Vec<Option<f64>>> {
    Ok(both(values, spacings, periodic)?
        .into_iter()
        .map(|d| d.map(|(first, _)| first))
        .collect())
}

pub fn fd_second(values: &[f64], spacings: &[f64], periodic: bool) -> Result<Vec<Option<f64>>> {
    Ok(both(values, spacings, periodic)?
        .into_iter()
        .map(|d| d.map(|(_, second)| second))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_periodic_right_halves() {
        let h = fd_half_derivatives(&[0.0, 1.0, 2.0, 3.0], &[1.0; 4], true).unwrap();
        for i in 0..3 {
            assert_eq!(h.right[i], Some(1.0));
        }
        // The wrap gap sees the jump back to the start.
        assert_eq!(h.right[3], Some(-3.0));
    }

    #[test]
    fn constant_field_has_zero_derivatives() {
        let h = fd_half_derivatives(&[2.5; 5], &[0.1, 0.3, 0.2, 0.15, 0.25], true).unwrap();
        assert!(h.left.iter().chain(&h.right).all(|d| *d == Some(0.0)));
    }

    #[test]
    fn quadratic_half_derivative_by_hand() {
        let xs = [0.0, 0.3, 0.7];
        let f: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let h = fd_half_derivatives(&f, &[0.3, 0.4], false).unwrap();
        assert!((h.right[1].unwrap() - 1.0).abs() < 1e-15);
        assert!((h.left[1].unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(h.left[0], None);
        assert_eq!(h.right[2], None);
        let d1 = fd_first(&f, &[0.3, 0.4], false).unwrap();
        assert!((d1[1].unwrap() - 0.6).abs() < 1e-14);
        let d2 = fd_second(&f, &[0.3, 0.4], false).unwrap();
        assert!((d2[1].unwrap() - 2.0).abs() < 1e-13);
        assert_eq!(d2[0], None);
    }

    #[test]
    fn uniform_spacing_reduces_to_central_differences() {
        let f = [0.3, -1.2, 0.8, 2.0, 0.1];
        let dx = 0.2;
        let d1 = fd_first(&f, &[dx; 5], true).unwrap();
        let d2 = fd_second(&f, &[dx; 5], true).unwrap();
        for i in 0..5 {
            let (p, q) = (f[(i + 4) % 5], f[(i + 1) % 5]);
            assert!((d1[i].unwrap() - (q - p) / (2.0 * dx)).abs() < 1e-12);
            assert!((d2[i].unwrap() - (q - 2.0 * f[i] + p) / (dx * dx)).abs() < 1e-10);
        }
    }

    #[test]
    fn shape_errors() {
        assert!(fd_first(&[1.0, 2.0, 3.0], &[1.0, 1.0], true).is_err());
        assert!(fd_first(&[1.0, 2.0, 3.0], &[1.0, 0.0], false).is_err());
    }
}
