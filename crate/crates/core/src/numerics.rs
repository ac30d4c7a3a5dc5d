//! Power-law fits, Richardson extrapolation and small numeric helpers.

use crate::error::{Error, Result};
use crate::grid::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    pub exponent: f64,
    pub log_prefactor: f64,
    /// RMS of the log-log residuals.
    pub residual: f64,
}

impl ScalingFit {
    pub fn predict(&self, scale: f64) -> f64 {
        (self.log_prefactor + self.exponent * scale.ln()).exp()
    }
}

/// Least-squares fit of `ln(value)` against `ln(scale)`.
pub fn fit_power_law(samples: &[(f64, f64)]) -> Result<ScalingFit> {
    if samples.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "power-law fit needs at least 3 samples, got {}",
            samples.len()
        )));
    }
    for &(s, v) in samples {
        if !(s > 0.0) || !(v > 0.0) || !s.is_finite() || !v.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "nonpositive sample ({s}, {v})"
            )));
        }
    }
    let m = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all scales coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let log_prefactor = my - exponent * mx;
    let ss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - log_prefactor - exponent * x).powi(2))
        .sum();
    Ok(ScalingFit {
        exponent,
        log_prefactor,
        residual: (ss / m).sqrt(),
    })
}

/// Values that can be extrapolated: complex scalars and vectors of them.
pub trait Extrapolable: Clone {
    fn lin(&self, a: f64, other: &Self, b: f64) -> Self;
    fn dist(&self, other: &Self) -> f64;
}

impl Extrapolable for f64 {
    fn lin(&self, a: f64, other: &Self, b: f64) -> Self {
        a * self + b * other
    }
    fn dist(&self, other: &Self) -> f64 {
        (self - other).abs()
    }
}

impl Extrapolable for C64 {
    fn lin(&self, a: f64, other: &Self, b: f64) -> Self {
        self * a + other * b
    }
    fn dist(&self, other: &Self) -> f64 {
        (self - other).norm()
    }
}

impl Extrapolable for Vec<C64> {
    fn lin(&self, a: f64, other: &Self, b: f64) -> Self {
        self.iter().zip(other).map(|(x, y)| x * a + y * b).collect()
    }
    fn dist(&self, other: &Self) -> f64 {
        self.iter()
            .zip(other)
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Polynomial (Neville) extrapolation of `values(eps)` to `eps = 0`.
///
/// `eps` must be positive and strictly decreasing with at least 3 terms.
/// Fails when successive differences grow along the whole ladder.
pub fn richardson<T: Extrapolable>(eps: &[f64], values: &[T]) -> Result<T> {
    check_ladder(eps)?;
    if values.len() != eps.len() {
        return Err(Error::InvalidArgument(
            "ladder and values differ in length".into(),
        ));
    }
    let m = eps.len();
    let first = values[1].dist(&values[0]);
    let last = values[m - 1].dist(&values[m - 2]);
    let scale = values
        .iter()
        .map(|v| v.dist(&v.lin(0.0, v, 0.0)))
        .fold(0.0, f64::max);
    if last > first && last > 1e-13 * scale {
        return Err(Error::Extrapolation(format!(
            "differences grow from {first:e} to {last:e}"
        )));
    }
    richardson_unchecked(eps, values)
}

/// [`richardson`] without the divergence test.
pub fn richardson_unchecked<T: Extrapolable>(eps: &[f64], values: &[T]) -> Result<T> {
    check_ladder(eps)?;
    let m = eps.len();
    let mut p: Vec<T> = values.to_vec();
    for k in 1..m {
        for i in 0..m - k {
            // p[i] interpolates eps[i..=i+k]; evaluate at 0
            let (a, b) = (eps[i], eps[i + k]);
            let wa = -b / (a - b);
            let wb = a / (a - b);
            p[i] = p[i].lin(wa, &p[i + 1], wb);
        }
    }
    Ok(p[0].clone())
}

pub fn check_ladder(eps: &[f64]) -> Result<()> {
    if eps.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "epsilon ladder needs at least 3 terms, got {}",
            eps.len()
        )));
    }
    if eps.iter().any(|&e| !(e > 0.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "epsilon ladder must be positive and strictly decreasing".into(),
        ));
    }
    Ok(())
}

/// Geometric ladder `eps0 * 2^-k`, `k = 0..count`.
pub fn geometric_ladder(eps0: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| eps0 * 0.5f64.powi(k as i32)).collect()
}

/// Principal square root with nonnegative imaginary part.
pub fn sqrt_upper(z: C64) -> C64 {
    let s = z.sqrt();
    if s.im < 0.0 {
        -s
    } else {
        s
    }
}

pub fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

pub fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn normalize3(a: [f64; 3]) -> [f64; 3] {
    let r = norm3(a);
    [a[0] / r, a[1] / r, a[2] / r]
}

/// Two unit vectors completing `e` to a right-handed orthonormal frame.
pub fn tangent_frame(e: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let helper = if e[0].abs() < 0.6 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let t1 = normalize3(cross3(e, helper));
    let t2 = cross3(e, t1);
    (t1, t2)
}

/// `(max - min) / mean` of positive values.
pub fn relative_spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (max - min) / mean.abs()
}

/// `max / min` of positive values.
pub fn max_min_ratio(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fit_examples() {
        let f = fit_power_law(&[(1.0, 1.0), (2.0, 2.0), (4.0, 4.0)]).unwrap();
        assert_relative_eq!(f.exponent, 1.0, epsilon = 1e-14);
        assert!(f.residual < 1e-14);
        let f = fit_power_law(&[(1.0, 1.0), (4.0, 0.5), (16.0, 0.25)]).unwrap();
        assert_relative_eq!(f.exponent, -0.5, epsilon = 1e-14);
        assert!(f.residual < 1e-14);
        let f = fit_power_law(&[(1.0, 3.0), (2.0, 3.0), (4.0, 3.0)]).unwrap();
        assert!(f.exponent.abs() < 1e-14);
        assert_relative_eq!(f.log_prefactor, 3f64.ln(), epsilon = 1e-14);
        assert!(fit_power_law(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
        assert!(fit_power_law(&[(1.0, 1.0), (2.0, 1.0)]).is_err());
    }

    #[test]
    fn richardson_recovers_polynomial_limit() {
        let eps = geometric_ladder(0.5, 4);
        let vals: Vec<f64> = eps
            .iter()
            .map(|e| 2.0 + 3.0 * e - e * e + 0.5 * e * e * e)
            .collect();
        assert_relative_eq!(richardson(&eps, &vals).unwrap(), 2.0, epsilon = 1e-12);
        let grow: Vec<f64> = eps.iter().map(|e| 1.0 / e).collect();
        assert!(richardson(&eps, &grow).is_err());
        assert!(richardson(&eps[..2], &vals[..2]).is_err());
        assert!(richardson(&[0.1, 0.2, 0.3], &[1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn sqrt_branch() {
        let s = sqrt_upper(C64::new(1.0, -1.0));
        assert!(s.im >= 0.0);
        assert!((s * s - C64::new(1.0, -1.0)).norm() < 1e-15);
        let s = sqrt_upper(C64::new(-1.0, 0.0));
        assert!((s - C64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn frames_are_orthonormal() {
        for e in [
            [0.0, 0.0, 1.0],
            normalize3([1.0, 2.0, -0.5]),
            [1.0, 0.0, 0.0],
        ] {
            let (a, b) = tangent_frame(e);
            for (u, v) in [(a, b), (a, e), (b, e)] {
                assert!(dot3(u, v).abs() < 1e-14);
            }
            for u in [a, b] {
                assert!((norm3(u) - 1.0).abs() < 1e-14);
            }
        }
    }
}
