//! Periodic cubic grids, complex fields and the semi-discrete Fourier transform.
//!
//! Convention: `f_hat(xi) = h^3 * sum_x f(x) exp(-i xi . x)` on the position
//! lattice `x = -L/2 + j h`, frequencies `xi = freq_step * m` with `m` in
//! `-n/2 .. n/2 - 1` stored in FFT order.

use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid3 {
    n: usize,
    box_length: f64,
}

pub fn make_grid(n: usize, box_length: f64) -> Result<Grid3> {
    Grid3::new(n, box_length)
}

impl Grid3 {
    pub fn new(n: usize, box_length: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n = {n} must be a power of two and at least 8"
            )));
        }
        if !(box_length > 0.0) || !box_length.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "box length {box_length} must be positive"
            )));
        }
        Ok(Grid3 { n, box_length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.n as f64
    }

    pub fn freq_step(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.box_length
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    pub fn volume(&self) -> f64 {
        self.box_length.powi(3)
    }

    /// Number of lattice points, `n^3`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest frequency modulus along an axis, `pi / h`.
    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI / self.spacing()
    }

    pub fn coord(&self, j: usize) -> f64 {
        -0.5 * self.box_length + j as f64 * self.spacing()
    }

    /// Signed wavenumber index of FFT slot `j`.
    pub fn mode(&self, j: usize) -> i64 {
        if j < self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    pub fn wavenumber(&self, j: usize) -> f64 {
        self.mode(j) as f64 * self.freq_step()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    pub fn unravel(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.n;
        (idx / (n * n), (idx / n) % n, idx % n)
    }

    pub fn position(&self, idx: usize) -> [f64; 3] {
        let (i, j, k) = self.unravel(idx);
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    pub fn frequency(&self, idx: usize) -> [f64; 3] {
        let (i, j, k) = self.unravel(idx);
        [self.wavenumber(i), self.wavenumber(j), self.wavenumber(k)]
    }

    pub fn xi2(&self, idx: usize) -> f64 {
        let xi = self.frequency(idx);
        xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]
    }

    /// Position coordinates along one axis.
    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.coord(j)).collect()
    }

    /// Frequency values along one axis in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.wavenumber(j)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Position,
    Frequency,
}

impl Domain {
    fn name(self) -> &'static str {
        match self {
            Domain::Position => "position",
            Domain::Frequency => "frequency",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid3,
    values: Vec<C64>,
    domain: Domain,
}

impl Field {
    pub fn zeros(grid: Grid3, domain: Domain) -> Self {
        Field {
            grid,
            values: vec![C64::new(0.0, 0.0); grid.len()],
            domain,
        }
    }

    pub fn from_values(grid: Grid3, values: Vec<C64>, domain: Domain) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Field {
            grid,
            values,
            domain,
        })
    }

    /// Samples `f` at every lattice point.
    pub fn from_fn(grid: Grid3, f: impl Fn([f64; 3]) -> C64) -> Self {
        let values = (0..grid.len()).map(|idx| f(grid.position(idx))).collect();
        Field {
            grid,
            values,
            domain: Domain::Position,
        }
    }

    /// Frequency-domain field from a function of the lattice frequency.
    pub fn from_fn_frequency(grid: Grid3, f: impl Fn([f64; 3]) -> C64) -> Self {
        let values = (0..grid.len()).map(|idx| f(grid.frequency(idx))).collect();
        Field {
            grid,
            values,
            domain: Domain::Frequency,
        }
    }

    /// Unit mass (value 1) on the cell containing `idx`.
    pub fn delta(grid: Grid3, idx: usize) -> Self {
        let mut f = Field::zeros(grid, Domain::Position);
        f.values[idx] = C64::new(1.0, 0.0);
        f
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn require(&self, domain: Domain) -> Result<()> {
        if self.domain == domain {
            Ok(())
        } else {
            Err(Error::DomainMismatch {
                expected: domain.name(),
                found: self.domain.name(),
            })
        }
    }

    fn check_compatible(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        other.require(self.domain)
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
            domain: self.domain,
        }
    }

    /// Pointwise map with access to the position of each sample.
    pub fn map_position(&self, f: impl Fn([f64; 3], C64) -> C64) -> Field {
        let g = self.grid;
        Field {
            grid: g,
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(idx, &v)| f(g.position(idx), v))
                .collect(),
            domain: self.domain,
        }
    }

    pub fn scale(&self, c: C64) -> Field {
        self.map(|v| v * c)
    }

    pub fn scale_real(&self, c: f64) -> Field {
        self.map(|v| v * c)
    }

    pub fn conj(&self) -> Field {
        self.map(|v| v.conj())
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: C64, other: &Field, b: C64) -> Result<Field> {
        self.check_compatible(other)?;
        Ok(Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&x, &y)| a * x + b * y)
                .collect(),
            domain: self.domain,
        })
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.combine(C64::new(1.0, 0.0), other, C64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.combine(C64::new(1.0, 0.0), other, C64::new(-1.0, 0.0))
    }

    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.check_compatible(other)?;
        Ok(Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&x, &y)| x * y)
                .collect(),
            domain: self.domain,
        })
    }

    /// Position-domain pairing `h^3 sum f conj(g)`.
    pub fn inner(&self, other: &Field) -> Result<C64> {
        self.require(Domain::Position)?;
        self.check_compatible(other)?;
        let s: C64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&x, &y)| x * y.conj())
            .sum();
        Ok(s * self.grid.cell_volume())
    }

    /// Plain Euclidean norm of the value vector, independent of domain.
    pub fn vector_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn forward(&self) -> Result<Field> {
        transform(self, Direction::Forward)
    }

    pub fn inverse(&self) -> Result<Field> {
        transform(self, Direction::Inverse)
    }
}

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

fn plan(n: usize, dir: Direction) -> Arc<dyn Fft<f64>> {
    let mut p = planner().lock().unwrap_or_else(|e| e.into_inner());
    match dir {
        Direction::Forward => p.plan_fft_forward(n),
        Direction::Inverse => p.plan_fft_inverse(n),
    }
}

/// Unnormalized 3D DFT in place, row-major `n^3` layout.
pub(crate) fn fft3(data: &mut [C64], n: usize, dir: Direction) {
    let fft = plan(n, dir);
    let mut scratch = vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    // last axis is contiguous
    fft.process_with_scratch(data, &mut scratch);
    let mut lines = vec![C64::new(0.0, 0.0); n * n * n];
    for stride in [n, n * n] {
        // gather lines of the strided axis into contiguous storage
        let mut line = 0;
        for outer in 0..n * n * n / (stride * n) {
            for inner in 0..stride {
                let base = outer * stride * n + inner;
                for t in 0..n {
                    lines[line * n + t] = data[base + t * stride];
                }
                line += 1;
            }
        }
        fft.process_with_scratch(&mut lines, &mut scratch);
        line = 0;
        for outer in 0..n * n * n / (stride * n) {
            for inner in 0..stride {
                let base = outer * stride * n + inner;
                for t in 0..n {
                    data[base + t * stride] = lines[line * n + t];
                }
                line += 1;
            }
        }
    }
}

fn checkerboard(n: usize, idx: usize) -> f64 {
    let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
    if (i + j + k) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Forward: position to frequency with the `h^3` semi-discrete convention.
/// Inverse: `f(x) = L^-3 sum_xi f_hat(xi) exp(i xi . x)`.
pub fn transform(f: &Field, direction: Direction) -> Result<Field> {
    let g = f.grid;
    let n = g.n();
    let mut data = f.values.clone();
    match direction {
        Direction::Forward => {
            f.require(Domain::Position)?;
            fft3(&mut data, n, Direction::Forward);
            let h3 = g.cell_volume();
            for (idx, v) in data.iter_mut().enumerate() {
                *v *= h3 * checkerboard(n, idx);
            }
            Ok(Field {
                grid: g,
                values: data,
                domain: Domain::Frequency,
            })
        }
        Direction::Inverse => {
            f.require(Domain::Frequency)?;
            for (idx, v) in data.iter_mut().enumerate() {
                *v *= checkerboard(n, idx);
            }
            fft3(&mut data, n, Direction::Inverse);
            let s = 1.0 / g.volume();
            for v in data.iter_mut() {
                *v *= s;
            }
            Ok(Field {
                grid: g,
                values: data,
                domain: Domain::Position,
            })
        }
    }
}

/// Applies the Fourier multiplier `symbol(xi)` to a position-domain field.
pub fn apply_multiplier(f: &Field, symbol: impl Fn([f64; 3]) -> C64) -> Result<Field> {
    let mut fh = f.forward()?;
    let g = *f.grid();
    for (idx, v) in fh.values.iter_mut().enumerate() {
        *v *= symbol(g.frequency(idx));
    }
    fh.inverse()
}

/// Fourier-space `L^2` norm `(sum |f_hat|^2 freq_step^3)^{1/2}`.
pub fn spectral_l2_norm(fh: &Field) -> Result<f64> {
    fh.require(Domain::Frequency)?;
    let s: f64 = fh.values.iter().map(|v| v.norm_sqr()).sum();
    Ok((s * fh.grid.freq_step().powi(3)).sqrt())
}

/// Riemann-sum `L^p` norm; `p = f64::INFINITY` gives the max modulus.
pub fn lp_norm(f: &Field, p: f64) -> Result<f64> {
    f.require(Domain::Position)?;
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidExponent(p));
    }
    if p.is_infinite() {
        return Ok(f.values.iter().map(|v| v.norm()).fold(0.0, f64::max));
    }
    let h3 = f.grid.cell_volume();
    if p == 2.0 {
        let s: f64 = f.values.iter().map(|v| v.norm_sqr()).sum();
        return Ok((s * h3).sqrt());
    }
    if p == 1.0 {
        let s: f64 = f.values.iter().map(|v| v.norm()).sum();
        return Ok(s * h3);
    }
    // scale by the max modulus so large p cannot overflow
    let m = f.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if m == 0.0 {
        return Ok(0.0);
    }
    let s: f64 = f.values.iter().map(|v| (v.norm() / m).powf(p)).sum();
    Ok(m * (s * h3).powf(1.0 / p))
}

/// `||(1+|x|)^(delta-1/2) f||_2` as a Riemann sum.
pub fn weighted_l2_norm(f: &Field, delta: f64) -> Result<f64> {
    f.require(Domain::Position)?;
    let g = f.grid;
    let e = 2.0 * (delta - 0.5);
    let s: f64 = f
        .values
        .iter()
        .enumerate()
        .map(|(idx, v)| {
            let x = g.position(idx);
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            (1.0 + r).powf(e) * v.norm_sqr()
        })
        .sum();
    Ok((s * g.cell_volume()).sqrt())
}

/// `L^2` norm restricted to the ball `|x| < radius` (sharp cutoff).
pub fn ball_l2_norm(f: &Field, radius: f64) -> Result<f64> {
    f.require(Domain::Position)?;
    let g = f.grid;
    let r2 = radius * radius;
    let s: f64 = f
        .values
        .iter()
        .enumerate()
        .filter(|(idx, _)| {
            let x = g.position(*idx);
            x[0] * x[0] + x[1] * x[1] + x[2] * x[2] < r2
        })
        .map(|(_, v)| v.norm_sqr())
        .sum();
    Ok((s * g.cell_volume()).sqrt())
}

/// Sharp indicator of the ball `|x - center| < radius`.
pub fn ball_indicator(grid: Grid3, center: [f64; 3], radius: f64) -> Vec<bool> {
    let r2 = radius * radius;
    (0..grid.len())
        .map(|idx| {
            let x = grid.position(idx);
            let d = [x[0] - center[0], x[1] - center[1], x[2] - center[2]];
            d[0] * d[0] + d[1] * d[1] + d[2] * d[2] < r2
        })
        .collect()
}

/// Zeroes `f` outside `mask`.
pub fn restrict_to(f: &Field, mask: &[bool]) -> Field {
    let mut out = f.clone();
    for (v, &m) in out.values.iter_mut().zip(mask) {
        if !m {
            *v = C64::new(0.0, 0.0);
        }
    }
    out
}
