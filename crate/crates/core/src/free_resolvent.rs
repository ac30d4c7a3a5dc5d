//! Free resolvent `R0(z) = (-Delta - z)^-1` as a Fourier multiplier and as a
//! direct kernel sum, and the boundary jump `R0(l^2 + i0) - R0(l^2 - i0)`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{apply_multiplier, Domain, Field, Grid3, C64};
use crate::numerics::{check_ladder, richardson, sqrt_upper};
use crate::opnorm::LinearOperator;

/// `z = lambda^2 + i sign eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParam {
    pub lambda: f64,
    pub eps: f64,
    pub sign: i8,
}

impl SpectralParam {
    pub fn new(lambda: f64, eps: f64, sign: i8) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "lambda = {lambda} must be positive"
            )));
        }
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "eps = {eps} must be nonnegative"
            )));
        }
        if sign != 1 && sign != -1 {
            return Err(Error::InvalidArgument(format!(
                "sign = {sign} must be +1 or -1"
            )));
        }
        Ok(SpectralParam { lambda, eps, sign })
    }

    pub fn upper(lambda: f64, eps: f64) -> Result<Self> {
        Self::new(lambda, eps, 1)
    }

    pub fn lower(lambda: f64, eps: f64) -> Result<Self> {
        Self::new(lambda, eps, -1)
    }

    pub fn z(&self) -> C64 {
        C64::new(self.lambda * self.lambda, self.sign as f64 * self.eps)
    }

    /// Branch of `sqrt(z)` with nonnegative imaginary part.
    pub fn sqrt_z(&self) -> C64 {
        sqrt_upper(self.z())
    }

    pub fn conj(&self) -> Self {
        SpectralParam {
            sign: -self.sign,
            ..*self
        }
    }

    /// Rejects `eps = 0` when `lambda^2` is within `1e-6 freq_step^2` of a
    /// lattice value of `|xi|^2`.
    pub fn check_grid(&self, grid: &Grid3) -> Result<()> {
        if self.eps > 0.0 {
            return Ok(());
        }
        let l2 = self.lambda * self.lambda;
        let tol = 1e-6 * grid.freq_step().powi(2);
        if effective_eps(grid, C64::new(l2, 0.0)) < tol {
            return Err(Error::SingularMultiplier(l2));
        }
        Ok(())
    }
}

/// `min over the lattice of | |xi|^2 - z |`.
pub fn effective_eps(grid: &Grid3, z: C64) -> f64 {
    (0..grid.len())
        .map(|idx| (grid.xi2(idx) - z).norm())
        .fold(f64::INFINITY, f64::min)
}

/// `exp(i s r) / (4 pi r)` for a given square-root branch `s`.
pub fn kernel_with_root(r: f64, s: C64) -> C64 {
    (C64::new(0.0, 1.0) * s * r).exp() / (4.0 * PI * r)
}

pub fn kernel_value(r: f64, z: &SpectralParam) -> Result<C64> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "kernel is singular at r = {r}"
        )));
    }
    Ok(kernel_with_root(r, z.sqrt_z()))
}

/// Multiplier form at an arbitrary complex energy off the lattice spectrum.
pub fn apply_resolvent_at(f: &Field, z: C64) -> Result<Field> {
    apply_multiplier(f, |xi| {
        C64::new(1.0, 0.0) / (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2] - z)
    })
}

pub fn apply_free_resolvent(f: &Field, z: &SpectralParam) -> Result<Field> {
    z.check_grid(f.grid())?;
    apply_resolvent_at(f, z.z())
}

/// `-Delta f` applied spectrally.
pub fn neg_laplacian(f: &Field) -> Result<Field> {
    apply_multiplier(f, |xi| {
        C64::new(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2], 0.0)
    })
}

/// `R0(z)` as a [`LinearOperator`]; the adjoint is `R0(conj z)`.
#[derive(Debug, Clone, Copy)]
pub struct FreeResolvent {
    pub grid: Grid3,
    pub z: C64,
}

impl FreeResolvent {
    pub fn new(grid: Grid3, z: &SpectralParam) -> Result<Self> {
        z.check_grid(&grid)?;
        Ok(FreeResolvent { grid, z: z.z() })
    }
}

impl LinearOperator for FreeResolvent {
    fn grid(&self) -> Grid3 {
        self.grid
    }
    fn apply(&self, f: &Field) -> Result<Field> {
        apply_resolvent_at(f, self.z)
    }
    fn apply_adjoint(&self, f: &Field) -> Result<Field> {
        apply_resolvent_at(f, self.z.conj())
    }
}

/// How the direct kernel sum treats the periodic box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageSum {
    /// Plain sum over the box; needs the kernel to have decayed by `L/2`.
    Free,
    /// Sum over all periodic images of every source cell.
    Periodic,
}

/// Weight given to the `x = y` cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelfCell {
    /// `1/(4 pi r)` integrated over the ball of volume `h^3`.
    Ball,
    /// Lattice-sum corrected trapezoid weights up to `O(h^4)`, including a
    /// fourth-order finite-difference Laplacian term.
    Corrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirectOptions {
    pub images: ImageSum,
    pub self_cell: SelfCell,
}

impl Default for DirectOptions {
    fn default() -> Self {
        DirectOptions {
            images: ImageSum::Free,
            self_cell: SelfCell::Ball,
        }
    }
}

impl DirectOptions {
    pub fn periodic_corrected() -> Self {
        DirectOptions {
            images: ImageSum::Periodic,
            self_cell: SelfCell::Corrected,
        }
    }
}

/// Epstein zeta values of the cubic lattice `Z^3`:
/// `Z(s) = sum_{m != 0} |m|^{-2s}` continued analytically.
pub const EPSTEIN_HALF: f64 = -2.837_297_479_480_619_5;
pub const EPSTEIN_MINUS_HALF: f64 = -0.266_596_278_718_393_5;

/// Largest grid for the `O(n^6)` direct sum.
pub const DIRECT_MAX_N: usize = 24;

/// Direct kernel summation with a precomputed displacement table.
#[derive(Debug, Clone)]
pub struct DirectOracle {
    grid: Grid3,
    s: C64,
    options: DirectOptions,
    /// Free: `(2n-1)^3` table over signed displacements; Periodic: `n^3`.
    table: Vec<C64>,
}

impl DirectOracle {
    pub fn new(grid: Grid3, z: &SpectralParam, options: DirectOptions) -> Result<Self> {
        let n = grid.n();
        if n > DIRECT_MAX_N {
            return Err(Error::Precondition(format!(
                "direct sum limited to n <= {DIRECT_MAX_N}, got {n}"
            )));
        }
        if !(z.eps > 0.0) {
            return Err(Error::Precondition("direct sum needs eps > 0".into()));
        }
        let s = z.sqrt_z();
        let h = grid.spacing();
        let h3 = grid.cell_volume();
        let l = grid.box_length();
        let table = match options.images {
            ImageSum::Free => {
                let decay = (-s.im * l / 2.0).exp();
                if decay > 1e-6 {
                    return Err(Error::Precondition(format!(
                        "eps too small for the box: exp(-Im sqrt(z) L/2) = {decay:.3e} > 1e-6"
                    )));
                }
                let m = 2 * n - 1;
                let mut t = vec![C64::new(0.0, 0.0); m * m * m];
                for a in 0..m {
                    for b in 0..m {
                        for c in 0..m {
                            let d = [
                                (a as f64 - (n - 1) as f64) * h,
                                (b as f64 - (n - 1) as f64) * h,
                                (c as f64 - (n - 1) as f64) * h,
                            ];
                            let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                            if r > 0.0 {
                                t[(a * m + b) * m + c] = h3 * kernel_with_root(r, s);
                            }
                        }
                    }
                }
                t
            }
            ImageSum::Periodic => {
                // images beyond rcut contribute below 1e-16 of the leading term
                let rcut = 37.0 / s.im.max(1e-300) + l;
                let mimg = (rcut / l).ceil() as i64 + 1;
                let mut t = vec![C64::new(0.0, 0.0); n * n * n];
                t.par_iter_mut().enumerate().for_each(|(idx, out)| {
                    let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
                    let d = [
                        grid.mode(i) as f64 * h,
                        grid.mode(j) as f64 * h,
                        grid.mode(k) as f64 * h,
                    ];
                    let mut acc = C64::new(0.0, 0.0);
                    for a in -mimg..=mimg {
                        let x = d[0] + a as f64 * l;
                        for b in -mimg..=mimg {
                            let y = d[1] + b as f64 * l;
                            for c in -mimg..=mimg {
                                let zz = d[2] + c as f64 * l;
                                let r = (x * x + y * y + zz * zz).sqrt();
                                if r > 0.0 && r <= rcut {
                                    acc += kernel_with_root(r, s);
                                }
                            }
                        }
                    }
                    *out = h3 * acc;
                });
                t
            }
        };
        Ok(DirectOracle {
            grid,
            s,
            options,
            table,
        })
    }

    pub fn apply(&self, f: &Field) -> Result<Field> {
        f.require(Domain::Position)?;
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let g = self.grid;
        let n = g.n();
        let fv = f.values();
        let mut u = vec![C64::new(0.0, 0.0); g.len()];
        match self.options.images {
            ImageSum::Free => {
                let m = 2 * n - 1;
                u.par_iter_mut().enumerate().for_each(|(x, out)| {
                    let (xi, xj, xk) = (x / (n * n), (x / n) % n, x % n);
                    let mut acc = C64::new(0.0, 0.0);
                    for yi in 0..n {
                        let a = xi + n - 1 - yi;
                        for yj in 0..n {
                            let b = xj + n - 1 - yj;
                            let row = (a * m + b) * m + xk + n - 1;
                            let frow = (yi * n + yj) * n;
                            for yk in 0..n {
                                acc += self.table[row - yk] * fv[frow + yk];
                            }
                        }
                    }
                    *out = acc;
                });
            }
            ImageSum::Periodic => {
                u.par_iter_mut().enumerate().for_each(|(x, out)| {
                    let (xi, xj, xk) = (x / (n * n), (x / n) % n, x % n);
                    let mut acc = C64::new(0.0, 0.0);
                    for yi in 0..n {
                        let a = (xi + n - yi) % n;
                        for yj in 0..n {
                            let b = (xj + n - yj) % n;
                            let row = (a * n + b) * n;
                            let frow = (yi * n + yj) * n;
                            for yk in 0..n {
                                let c = (xk + n - yk) % n;
                                acc += self.table[row + c] * fv[frow + yk];
                            }
                        }
                    }
                    *out = acc;
                });
            }
        }
        self.add_self_cell(fv, &mut u);
        Field::from_values(g, u, Domain::Position)
    }

    fn add_self_cell(&self, fv: &[C64], u: &mut [C64]) {
        let h = self.grid.spacing();
        let s = self.s;
        match self.options.self_cell {
            SelfCell::Ball => {
                let a = (3.0 / (4.0 * PI)).powf(1.0 / 3.0) * h;
                let w = 0.5 * a * a;
                for (o, &v) in u.iter_mut().zip(fv) {
                    *o += w * v;
                }
            }
            SelfCell::Corrected => {
                let i = C64::new(0.0, 1.0);
                let four_pi = 4.0 * PI;
                let w0 = -EPSTEIN_HALF * h * h / four_pi
                    + i * s * h.powi(3) / four_pi
                    + EPSTEIN_MINUS_HALF / 6.0 * h.powi(4) * 3.0 * s * s / four_pi;
                let lap = fd4_laplacian(&self.grid, fv);
                let wl = -EPSTEIN_MINUS_HALF / 6.0 * h.powi(4) / four_pi;
                for ((o, &v), &l) in u.iter_mut().zip(fv).zip(&lap) {
                    *o += w0 * v + wl * l;
                }
            }
        }
    }
}

/// Periodic fourth-order central-difference Laplacian.
pub fn fd4_laplacian(grid: &Grid3, fv: &[C64]) -> Vec<C64> {
    let n = grid.n();
    let h2 = grid.spacing().powi(2);
    let mut out = vec![C64::new(0.0, 0.0); fv.len()];
    let wrap = |a: usize, d: i64| ((a as i64 + d).rem_euclid(n as i64)) as usize;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let c = fv[(i * n + j) * n + k];
                let mut acc = -7.5 * c;
                for d in [-2i64, -1, 1, 2] {
                    let w = if d.abs() == 1 {
                        16.0 / 12.0
                    } else {
                        -1.0 / 12.0
                    };
                    acc += w * fv[(wrap(i, d) * n + j) * n + k];
                    acc += w * fv[(i * n + wrap(j, d)) * n + k];
                    acc += w * fv[(i * n + j) * n + wrap(k, d)];
                }
                out[(i * n + j) * n + k] = acc / h2;
            }
        }
    }
    out
}

pub fn apply_free_resolvent_direct(
    f: &Field,
    z: &SpectralParam,
    options: DirectOptions,
) -> Result<Field> {
    DirectOracle::new(*f.grid(), z, options)?.apply(f)
}

/// Multiplier of `R0(l^2 + i eps) - R0(l^2 - i eps)`: `2 i eps / ((|xi|^2 - l^2)^2 + eps^2)`.
pub fn jump_symbol(xi2: f64, lambda: f64, eps: f64) -> C64 {
    let d = xi2 - lambda * lambda;
    C64::new(0.0, 2.0 * eps / (d * d + eps * eps))
}

/// Richardson limit of `[R0(l^2 + i eps) - R0(l^2 - i eps)] f` along the ladder.
pub fn resolvent_jump(f: &Field, lambda: f64, eps_sequence: &[f64]) -> Result<Field> {
    check_ladder(eps_sequence)?;
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda = {lambda} must be positive"
        )));
    }
    let fh = f.forward()?;
    let g = *f.grid();
    let samples: Vec<Vec<C64>> = eps_sequence
        .iter()
        .map(|&e| {
            let mut uh = fh.clone();
            for (idx, v) in uh.values_mut().iter_mut().enumerate() {
                *v *= jump_symbol(g.xi2(idx), lambda, e);
            }
            uh.inverse().map(Field::into_values)
        })
        .collect::<Result<_>>()?;
    // the limit is not square integrable, so divergence is judged pointwise
    // on the middle half of the box where the continuum picture applies
    let q = g.box_length() / 4.0;
    let mid: Vec<usize> = (0..g.len())
        .filter(|&i| g.position(i).iter().all(|c| c.abs() < q))
        .collect();
    let inner: Vec<Vec<C64>> = samples
        .iter()
        .map(|v| mid.iter().map(|&i| v[i]).collect())
        .collect();
    richardson(eps_sequence, &inner)?;
    let limit = crate::numerics::richardson_unchecked(eps_sequence, &samples)?;
    Field::from_values(g, limit, Domain::Position)
}

/// Measures `C(lambda)` in `jump f = C(lambda) * extend(restrict(f))` from the
/// pairing with `f`: the Richardson limit of `<jump_eps f, f>` divided by
/// `||restrict(f, lambda)||^2`.
pub fn jump_constant(
    f: &Field,
    lambda: f64,
    eps_sequence: &[f64],
    quad: &crate::sphere::SphereQuadrature,
) -> Result<C64> {
    check_ladder(eps_sequence)?;
    let fh = f.forward()?;
    let g = *f.grid();
    let pairs: Vec<C64> = eps_sequence
        .iter()
        .map(|&e| {
            // <J f, f> = (2 pi)^-3 sum symbol |f_hat|^2 freq_step^3
            let s: C64 = fh
                .values()
                .iter()
                .enumerate()
                .map(|(idx, v)| jump_symbol(g.xi2(idx), lambda, e) * v.norm_sqr())
                .sum();
            s * (g.freq_step() / (2.0 * PI)).powi(3)
        })
        .collect();
    let limit = richardson(eps_sequence, &pairs)?;
    let r = crate::sphere::restrict(f, lambda, quad)?.l2_norm().powi(2);
    Ok(limit / r)
}
