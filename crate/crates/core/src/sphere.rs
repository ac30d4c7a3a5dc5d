//! Restriction of `f_hat` to spheres, the adjoint extension operator, the
//! trace function `G`, and checks for data whose transform vanishes on the
//! unit sphere.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::free_resolvent::apply_resolvent_at;
use crate::grid::{apply_multiplier, lp_norm, weighted_l2_norm, Domain, Field, Grid3, C64};
use crate::numerics::{check_ladder, fit_power_law};

/// Nodes and weights for the normalized surface measure on `S^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereQuadrature {
    nodes: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

pub const MIN_NODES: usize = 64;

/// Fibonacci spiral points on the unit sphere.
pub fn fibonacci_nodes(m: usize) -> Vec<[f64; 3]> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..m)
        .map(|j| {
            let z = 1.0 - (2 * j + 1) as f64 / m as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * j as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Fibonacci spiral nodes with equal weights.
pub fn sphere_quadrature(m: usize) -> Result<SphereQuadrature> {
    if m < MIN_NODES {
        return Err(Error::InvalidArgument(format!(
            "sphere quadrature needs at least {MIN_NODES} nodes, got {m}"
        )));
    }
    let q = SphereQuadrature {
        weights: vec![1.0 / m as f64; m],
        nodes: fibonacci_nodes(m),
    };
    q.self_test()?;
    Ok(q)
}

impl SphereQuadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Quadrature of `f` against normalized measure.
    pub fn integrate(&self, f: impl Fn([f64; 3]) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&w, &c)| c * f(w))
            .sum()
    }

    /// Degree <= 2 harmonics integrated to within `1e-3`.
    fn self_test(&self) -> Result<()> {
        let total: f64 = self.weights.iter().sum();
        let mut worst = (total - 1.0).abs();
        for a in 0..3 {
            worst = worst.max(self.integrate(|w| w[a]).abs());
            worst = worst.max((self.integrate(|w| w[a] * w[a]) - 1.0 / 3.0).abs());
            for b in a + 1..3 {
                worst = worst.max(self.integrate(|w| w[a] * w[b]).abs());
            }
        }
        if worst > 1e-3 {
            return Err(Error::CheckFailed(format!(
                "sphere quadrature degree-2 error {worst:e} exceeds 1e-3"
            )));
        }
        Ok(())
    }
}

/// Values on the sphere of a given radius, one per quadrature node.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereSamples {
    pub quadrature: SphereQuadrature,
    pub radius: f64,
    pub values: Vec<C64>,
}

impl SphereSamples {
    /// `(sum_j w_j |v_j|^2)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        self.values
            .iter()
            .zip(self.quadrature.weights())
            .map(|(v, w)| w * v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `sum_j w_j s_j conj(t_j)`.
    pub fn inner(&self, other: &SphereSamples) -> C64 {
        self.values
            .iter()
            .zip(&other.values)
            .zip(self.quadrature.weights())
            .map(|((a, b), w)| a * b.conj() * *w)
            .sum()
    }
}

fn axis_phases(grid: &Grid3, k: f64, sign: f64) -> Vec<C64> {
    (0..grid.n())
        .map(|j| C64::from_polar(1.0, sign * k * grid.coord(j)))
        .collect()
}

/// `h^3 sum_x f(x) exp(-i xi . x)` at an arbitrary frequency; rows of `f`
/// that vanish identically are skipped.
pub fn semi_discrete_transform(f: &Field, xi: [f64; 3]) -> Result<C64> {
    f.require(Domain::Position)?;
    let rows = nonzero_rows(f);
    Ok(transform_at(f, &rows, xi))
}

fn nonzero_rows(f: &Field) -> Vec<usize> {
    let n = f.grid().n();
    f.values()
        .chunks(n)
        .enumerate()
        .filter(|(_, r)| r.iter().any(|v| v.re != 0.0 || v.im != 0.0))
        .map(|(i, _)| i)
        .collect()
}

fn transform_at(f: &Field, rows: &[usize], xi: [f64; 3]) -> C64 {
    let g = f.grid();
    let n = g.n();
    let ex = axis_phases(g, xi[0], -1.0);
    let ey = axis_phases(g, xi[1], -1.0);
    let ez = axis_phases(g, xi[2], -1.0);
    let v = f.values();
    let mut acc = C64::new(0.0, 0.0);
    for &row in rows {
        let (i, j) = (row / n, row % n);
        let line = &v[row * n..(row + 1) * n];
        let mut s = C64::new(0.0, 0.0);
        for (a, b) in line.iter().zip(&ez) {
            s += a * b;
        }
        acc += s * ex[i] * ey[j];
    }
    acc * g.cell_volume()
}

/// Exact semi-discrete `f_hat(radius * w_j)` at every node.
pub fn restrict(f: &Field, radius: f64, quad: &SphereQuadrature) -> Result<SphereSamples> {
    f.require(Domain::Position)?;
    let g = f.grid();
    if !(radius > 0.0) || radius >= g.nyquist() {
        return Err(Error::Precondition(format!(
            "radius {radius} must lie inside the Nyquist shell {}",
            g.nyquist()
        )));
    }
    let rows = nonzero_rows(f);
    let values = quad
        .nodes()
        .par_iter()
        .map(|w| transform_at(f, &rows, [radius * w[0], radius * w[1], radius * w[2]]))
        .collect();
    Ok(SphereSamples {
        quadrature: quad.clone(),
        radius,
        values,
    })
}

/// Adjoint of [`restrict`]: `u(x) = sum_j w_j s_j exp(i radius w_j . x)`.
pub fn extend(s: &SphereSamples, grid: &Grid3) -> Field {
    extend_masked(s, grid, None)
}

/// [`extend`] evaluated only where `mask` is set (zero elsewhere).
pub fn extend_masked(s: &SphereSamples, grid: &Grid3, mask: Option<&[bool]>) -> Field {
    let n = grid.n();
    let rows: Vec<usize> = match mask {
        None => (0..n * n).collect(),
        Some(m) => (0..n * n)
            .filter(|r| m[r * n..(r + 1) * n].iter().any(|&b| b))
            .collect(),
    };
    let m = s.values.len();
    // per-node axis phases, with the weighted sample folded into x
    let mut ax = Vec::with_capacity(m * n);
    let mut ay = Vec::with_capacity(m * n);
    let mut az = Vec::with_capacity(m * n);
    for ((v, w), node) in s
        .values
        .iter()
        .zip(s.quadrature.weights())
        .zip(s.quadrature.nodes())
    {
        let c = v * *w;
        ax.extend(
            axis_phases(grid, s.radius * node[0], 1.0)
                .into_iter()
                .map(|e| c * e),
        );
        ay.extend(axis_phases(grid, s.radius * node[1], 1.0));
        az.extend(axis_phases(grid, s.radius * node[2], 1.0));
    }
    let mut out = vec![C64::new(0.0, 0.0); n * n * n];
    let computed: Vec<(usize, Vec<C64>)> = rows
        .par_iter()
        .map(|&row| {
            let (i, j) = (row / n, row % n);
            let mut acc = vec![C64::new(0.0, 0.0); n];
            for q in 0..m {
                let pref = ax[q * n + i] * ay[q * n + j];
                for (a, b) in acc.iter_mut().zip(&az[q * n..(q + 1) * n]) {
                    *a += pref * b;
                }
            }
            (row, acc)
        })
        .collect();
    for (row, acc) in computed {
        out[row * n..(row + 1) * n].copy_from_slice(&acc);
    }
    if let Some(m) = mask {
        for (v, &keep) in out.iter_mut().zip(m) {
            if !keep {
                *v = C64::new(0.0, 0.0);
            }
        }
    }
    Field::from_values(*grid, out, Domain::Position).expect("sized buffer")
}

/// Both evaluations of the trace function `G(lambda)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceG {
    /// `4 pi * mean over the sphere of |f_hat(lambda w)|^2`.
    pub spectral: f64,
    /// `4 pi h^6 sum_{x,y} f(x) sinc(lambda |x-y|) conj f(y)`, real part.
    pub kernel: f64,
    pub kernel_imag: f64,
}

impl TraceG {
    pub fn relative_disagreement(&self) -> f64 {
        (self.spectral - self.kernel).abs() / self.spectral.abs().max(self.kernel.abs())
    }
}

pub fn sinc(t: f64) -> f64 {
    if t.abs() < 1e-8 {
        1.0 - t * t / 6.0
    } else {
        t.sin() / t
    }
}

/// Spectral form of `G(lambda)` only; usable on any grid.
pub fn trace_g_spectral(f: &Field, lambda: f64, quad: &SphereQuadrature) -> Result<f64> {
    let s = restrict(f, lambda, quad)?;
    Ok(4.0 * PI * s.l2_norm().powi(2))
}

pub fn trace_g(f: &Field, lambda: f64, quad: &SphereQuadrature) -> Result<TraceG> {
    let g = f.grid();
    if g.n() > crate::free_resolvent::DIRECT_MAX_N {
        return Err(Error::Precondition(format!(
            "kernel form of G limited to n <= {}, got {}",
            crate::free_resolvent::DIRECT_MAX_N,
            g.n()
        )));
    }
    check_mid_box(f)?;
    let spectral = trace_g_spectral(f, lambda, quad)?;
    let support: Vec<([f64; 3], C64)> = f
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > 0.0)
        .map(|(idx, v)| (g.position(idx), *v))
        .collect();
    let parts: Vec<C64> = support
        .par_iter()
        .map(|(x, fx)| {
            let mut s = C64::new(0.0, 0.0);
            for (y, fy) in &support {
                let r =
                    ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2)).sqrt();
                s += fy.conj() * sinc(lambda * r);
            }
            fx * s
        })
        .collect();
    // sequential sum keeps the result independent of the thread count
    let acc: C64 = parts.iter().sum();
    let k = acc * 4.0 * PI * g.cell_volume().powi(2);
    Ok(TraceG {
        spectral,
        kernel: k.re,
        kernel_imag: k.im,
    })
}

/// Fails unless `f` vanishes outside the middle half `|x_i| < L/4`.
pub fn check_mid_box(f: &Field) -> Result<()> {
    let g = f.grid();
    let q = g.box_length() / 4.0;
    let outside = f
        .values()
        .iter()
        .enumerate()
        .any(|(idx, v)| v.norm() > 0.0 && g.position(idx).iter().any(|c| c.abs() >= q));
    if outside {
        return Err(Error::Precondition(
            "field must be supported in the middle half of the box".into(),
        ));
    }
    Ok(())
}

/// `f = (-Delta - 1) g`, so `f_hat = (|xi|^2 - 1) g_hat` vanishes on `S^2`.
pub fn vanishing_testfn(g: &Field) -> Result<Field> {
    apply_multiplier(g, |xi| {
        C64::new(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2] - 1.0, 0.0)
    })
}

/// [`vanishing_testfn`] plus a warning when the symbol nearly annihilates `g`.
pub fn vanishing_testfn_checked(g: &Field) -> Result<(Field, Option<String>)> {
    let f = vanishing_testfn(g)?;
    let (nf, ng) = (lp_norm(&f, 2.0)?, lp_norm(g, 2.0)?);
    let warning = (nf < 1e-3 * ng).then(|| {
        format!(
            "g_hat concentrates near the unit sphere: ||f||/||g|| = {:.3e}",
            nf / ng
        )
    });
    Ok((f, warning))
}

/// `||restrict(f, 1)|| / ||f||_2`, the residual of the vanishing property.
pub fn vanishing_residual(f: &Field, quad: &SphereQuadrature) -> Result<f64> {
    Ok(restrict(f, 1.0, quad)?.l2_norm() / lp_norm(f, 2.0)?)
}

pub fn check_vanishing(f: &Field, quad: &SphereQuadrature, tol: f64) -> Result<()> {
    let r = vanishing_residual(f, quad)?;
    if r > tol {
        return Err(Error::Precondition(format!(
            "restriction to the unit sphere is {r:.3e} of ||f||_2, above {tol:e}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderTable {
    pub p: f64,
    pub gamma: f64,
    /// `(delta, ||f_hat((1+delta) .)||_{L^2(S^2)})`.
    pub rows: Vec<(f64, f64)>,
    /// Log-slopes between consecutive rows.
    pub slopes: Vec<f64>,
    pub min_slope: f64,
    pub passed: bool,
}

/// `gamma = 2/p - 3/2`.
pub fn holder_gamma(p: f64) -> f64 {
    2.0 / p - 1.5
}

pub fn holder_check(
    f: &Field,
    p: f64,
    deltas: &[f64],
    quad: &SphereQuadrature,
) -> Result<HolderTable> {
    if !(1.0..4.0 / 3.0).contains(&p) {
        return Err(Error::InvalidExponent(p));
    }
    if deltas.len() < 2 || deltas.iter().any(|d| d.abs() >= 0.5 || *d == 0.0) {
        return Err(Error::InvalidArgument(
            "need at least two nonzero deltas with |delta| < 1/2".into(),
        ));
    }
    check_vanishing(f, quad, 1e-6)?;
    let rows: Vec<(f64, f64)> = deltas
        .iter()
        .map(|&d| Ok((d, restrict(f, 1.0 + d, quad)?.l2_norm())))
        .collect::<Result<_>>()?;
    let slopes: Vec<f64> = rows
        .windows(2)
        .map(|w| (w[0].1 / w[1].1).ln() / (w[0].0.abs() / w[1].0.abs()).ln())
        .collect();
    let gamma = holder_gamma(p);
    let min_slope = slopes.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(HolderTable {
        p,
        gamma,
        rows,
        slopes,
        min_slope,
        passed: min_slope >= gamma - 0.05,
    })
}

/// Largest admissible weight exponent `1/2 - 2/p'`.
pub fn agmon_delta_limit(p: f64) -> f64 {
    if p == 1.0 {
        0.5
    } else {
        0.5 - 2.0 * (p - 1.0) / p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedTable {
    pub delta: f64,
    /// `(eps, ||(1+|x|)^(delta-1/2) R0(1 + i eps) f||_2)`.
    pub rows: Vec<(f64, f64)>,
    /// Relative change over the last halving.
    pub last_change: f64,
    /// Last entry over first entry.
    pub growth: f64,
    pub stabilized: bool,
}

/// Weighted norms of `R0(1 + i eps) f` along a ladder, without hypotheses.
pub fn weighted_resolvent_table(
    f: &Field,
    delta: f64,
    eps_sequence: &[f64],
) -> Result<WeightedTable> {
    check_ladder(eps_sequence)?;
    let rows: Vec<(f64, f64)> = eps_sequence
        .iter()
        .map(|&e| {
            let u = apply_resolvent_at(f, C64::new(1.0, e))?;
            Ok((e, weighted_l2_norm(&u, delta)?))
        })
        .collect::<Result<_>>()?;
    let m = rows.len();
    let last_change = (rows[m - 1].1 - rows[m - 2].1).abs() / rows[m - 2].1;
    let growth = rows[m - 1].1 / rows[0].1;
    Ok(WeightedTable {
        delta,
        rows,
        last_change,
        growth,
        stabilized: last_change < 0.05,
    })
}

pub fn agmon_weighted_check(
    f: &Field,
    p: f64,
    delta: f64,
    eps_sequence: &[f64],
    quad: &SphereQuadrature,
) -> Result<WeightedTable> {
    if !(p >= 1.0) || p >= 4.0 / 3.0 {
        return Err(Error::InvalidExponent(p));
    }
    let limit = agmon_delta_limit(p);
    if !(delta < limit) {
        return Err(Error::InvalidArgument(format!(
            "delta = {delta} is not below the admissible limit {limit}"
        )));
    }
    check_vanishing(f, quad, 1e-6)?;
    weighted_resolvent_table(f, delta, eps_sequence)
}

/// Power-law exponent of a Holder table, for reports.
pub fn holder_fit(table: &HolderTable) -> Result<crate::numerics::ScalingFit> {
    let s: Vec<(f64, f64)> = table.rows.iter().map(|&(d, v)| (d.abs(), v)).collect();
    fit_power_law(&s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{band_limited, gaussian_bump, seeded_rng};
    use crate::grid::make_grid;

    #[test]
    fn quadrature_examples() {
        let q = sphere_quadrature(256).unwrap();
        assert!((q.weights().iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let c: [f64; 3] = [0, 1, 2].map(|a| q.integrate(|w| w[a]));
        assert!((c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt() <= 1e-2);
        let q = sphere_quadrature(1024).unwrap();
        let e = [0.3, -0.4, 0.866_025_403_784_438_6];
        let m = q.integrate(|w| (w[0] * e[0] + w[1] * e[1] + w[2] * e[2]).powi(2));
        assert!((m - 1.0 / 3.0).abs() < 1e-3);
        assert!(sphere_quadrature(32).is_err());
    }

    #[test]
    fn nodes_are_distinct() {
        let q = sphere_quadrature(300).unwrap();
        for (i, a) in q.nodes().iter().enumerate() {
            for b in &q.nodes()[i + 1..] {
                let d = (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2);
                assert!(d > 1e-6);
            }
        }
    }

    #[test]
    fn restrict_matches_fft_on_lattice() {
        let g = make_grid(8, 8.0).unwrap();
        let f = band_limited(g, &mut seeded_rng(8));
        let fh = f.forward().unwrap();
        let idx = g.index(1, 7, 2);
        let v = semi_discrete_transform(&f, g.frequency(idx)).unwrap();
        assert!((v - fh.values()[idx]).norm() < 1e-12 * fh.values()[idx].norm().max(1.0));
    }

    #[test]
    fn restrict_rejects_beyond_nyquist() {
        let g = make_grid(8, 8.0).unwrap();
        let f = Field::zeros(g, Domain::Position);
        let q = sphere_quadrature(128).unwrap();
        assert!(restrict(&f, 3.2, &q).is_err());
        assert!(restrict(&f, 3.0, &q).is_ok());
    }

    #[test]
    fn radial_field_has_constant_restriction() {
        let g = make_grid(32, 32.0).unwrap();
        let f = gaussian_bump(g, [0.0; 3], 1.5);
        let q = sphere_quadrature(128).unwrap();
        let s = restrict(&f, 1.0, &q).unwrap();
        let mean = s.values.iter().sum::<C64>() / s.values.len() as f64;
        for v in &s.values {
            assert!((v - mean).norm() < 1e-6 * mean.norm());
        }
    }

    #[test]
    fn extend_of_ones_is_one_at_origin() {
        let g = make_grid(8, 8.0).unwrap();
        let q = sphere_quadrature(200).unwrap();
        let s = SphereSamples {
            quadrature: q.clone(),
            radius: 1.0,
            values: vec![C64::new(1.0, 0.0); q.len()],
        };
        let u = extend(&s, &g);
        let origin = g.index(4, 4, 4);
        assert!((u.values()[origin] - C64::new(1.0, 0.0)).norm() < 1e-12);
        // sinc profile at |x| = 2
        let x = g.index(6, 4, 4);
        assert!((u.values()[x].re - sinc(2.0)).abs() < 5e-3);
    }

    #[test]
    fn extend_is_adjoint_of_restrict() {
        let g = make_grid(8, 8.0).unwrap();
        let q = sphere_quadrature(100).unwrap();
        let mut rng = seeded_rng(12);
        let f = band_limited(g, &mut rng);
        let s = SphereSamples {
            quadrature: q.clone(),
            radius: 1.3,
            values: (0..q.len())
                .map(|_| crate::family::complex_normal(&mut rng))
                .collect(),
        };
        let lhs = extend(&s, &g).inner(&f).unwrap();
        let rhs = s.inner(&restrict(&f, 1.3, &q).unwrap());
        assert!((lhs - rhs).norm() < 1e-10 * lhs.norm());
    }

    #[test]
    fn masked_extend_matches_full() {
        let g = make_grid(8, 8.0).unwrap();
        let q = sphere_quadrature(128).unwrap();
        let s = SphereSamples {
            quadrature: q.clone(),
            radius: 1.0,
            values: (0..q.len()).map(|j| C64::new(j as f64, 1.0)).collect(),
        };
        let mask: Vec<bool> = (0..g.len()).map(|i| i % 3 == 0).collect();
        let a = extend(&s, &g);
        let b = extend_masked(&s, &g, Some(&mask));
        for (i, (x, y)) in a.values().iter().zip(b.values()).enumerate() {
            if mask[i] {
                assert!((x - y).norm() < 1e-12);
            } else {
                assert_eq!(*y, C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn single_cell_trace() {
        let g = make_grid(16, 16.0).unwrap();
        let q = sphere_quadrature(256).unwrap();
        let f = Field::delta(g, g.index(8, 8, 8)).scale_real(2.0);
        let t = trace_g(&f, 1.0, &q).unwrap();
        let m = 2.0 * g.cell_volume();
        assert!((t.kernel - 4.0 * PI * m * m).abs() < 1e-12);
        assert!((t.spectral - t.kernel).abs() < 1e-12 * t.kernel);
    }

    #[test]
    fn two_cell_trace_agrees() {
        let g = make_grid(16, 16.0).unwrap();
        let q = sphere_quadrature(1024).unwrap();
        let mut f = Field::zeros(g, Domain::Position);
        f.values_mut()[g.index(8, 8, 8)] = C64::new(1.0, 0.5);
        f.values_mut()[g.index(9, 10, 7)] = C64::new(-0.3, 0.8);
        let t = trace_g(&f, 1.0, &q).unwrap();
        assert!(t.kernel_imag.abs() < 1e-10 * t.kernel.abs());
        assert!(t.relative_disagreement() < 1e-2, "{t:?}");
    }

    #[test]
    fn trace_rejects_large_grid_and_spread_support() {
        let q = sphere_quadrature(128).unwrap();
        let big = make_grid(32, 16.0).unwrap();
        assert!(trace_g(&Field::delta(big, 0), 1.0, &q).is_err());
        let g = make_grid(16, 16.0).unwrap();
        assert!(trace_g(&Field::delta(g, 0), 1.0, &q).is_err());
    }

    #[test]
    fn vanishing_testfn_kills_sphere() {
        let g = make_grid(32, 32.0).unwrap();
        let q = sphere_quadrature(256).unwrap();
        let base = gaussian_bump(g, [0.5, -0.3, 0.2], 2.0);
        let f = vanishing_testfn(&base).unwrap();
        assert!(vanishing_residual(&f, &q).unwrap() < 1e-8);
        assert!(trace_g_spectral(&f, 1.0, &q).unwrap() < 1e-12 * lp_norm(&f, 1.0).unwrap().powi(2));
    }

    #[test]
    fn vanishing_testfn_on_single_mode() {
        let g = make_grid(16, 2.0 * PI).unwrap();
        let w = Field::from_fn(g, |x| C64::from_polar(1.0, 2.0 * x[0] + x[2]));
        let f = vanishing_testfn(&w).unwrap();
        let want = w.scale_real(4.0);
        assert!(f.sub(&want).unwrap().vector_norm() < 1e-12 * want.vector_norm());
        let near = Field::from_fn(g, |x| C64::from_polar(1.0, x[0]));
        let (_, warn) = vanishing_testfn_checked(&near).unwrap();
        assert!(warn.is_some());
    }

    #[test]
    fn gamma_and_limits() {
        assert_eq!(holder_gamma(1.0), 0.5);
        assert!((holder_gamma(1.2) - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(agmon_delta_limit(1.0), 0.5);
        assert!((agmon_delta_limit(1.2) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn holder_slope_is_about_one() {
        let g = make_grid(32, 32.0).unwrap();
        let q = sphere_quadrature(256).unwrap();
        let f = vanishing_testfn(&gaussian_bump(g, [0.0, 0.5, -0.5], 1.8)).unwrap();
        let deltas: Vec<f64> = (0..6).map(|k| 0.1 * 0.5f64.powi(k)).collect();
        let t = holder_check(&f, 1.0, &deltas, &q).unwrap();
        assert!(t.passed);
        for s in &t.slopes {
            assert!((s - 1.0).abs() < 0.25, "{s}");
        }
        let raw = gaussian_bump(g, [0.0; 3], 1.5);
        assert!(holder_check(&raw, 1.0, &deltas, &q).is_err());
    }
}
