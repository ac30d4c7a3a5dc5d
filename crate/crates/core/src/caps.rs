//! Knapp caps on the unit shell, dyadic shell projections, square
//! functions, the discrete extension inequality, and ball-localized
//! resolvent and extension norms.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::family::{bump, complex_normal, plateau, seeded_rng, smooth_step, TestRng};
use crate::free_resolvent::apply_resolvent_at;
use crate::grid::{
    apply_multiplier, ball_indicator, ball_l2_norm, lp_norm, restrict_to, Domain, Field, Grid3, C64,
};
use crate::numerics::{dot3, norm3, tangent_frame};
use crate::opnorm::{estimate_l2_norm, FnOperator, OpNormEstimate};
use crate::sphere::{fibonacci_nodes, restrict, SphereQuadrature};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cap {
    pub center: [f64; 3],
    pub frame: ([f64; 3], [f64; 3]),
    /// Geodesic-chord radius of the cutoff support.
    pub angular_width: f64,
    pub radial_width: f64,
}

#[derive(Debug, Clone)]
pub struct CapDecomposition {
    r: f64,
    caps: Vec<Cap>,
    min_separation: f64,
    covering_radius: f64,
}

/// Caps may overlap at most this many times (cutoff above 0.01).
pub const MAX_OVERLAP: usize = 12;

fn chord(a: [f64; 3], b: [f64; 3]) -> f64 {
    norm3([a[0] - b[0], a[1] - b[1], a[2] - b[2]])
}

fn min_pair_distance(pts: &[[f64; 3]]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            // cheap reject on z before the full distance
            if (a[2] - b[2]).abs() < best {
                best = best.min(chord(*a, *b));
            }
        }
    }
    best
}

/// Centers `r^{-1/2}`-separated on the Fibonacci spiral, as many as fit.
fn separated_centers(r: f64) -> Vec<[f64; 3]> {
    let d = r.powf(-0.5);
    let mut m = ((10.0 * r).ceil() as usize).max(4);
    loop {
        let pts = fibonacci_nodes(m);
        if m <= 2 || min_pair_distance(&pts) >= d {
            return pts;
        }
        m = ((m as f64) * 0.97).floor() as usize;
    }
}

fn shell_samples(count: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = seeded_rng(seed);
    (0..count)
        .map(|_| crate::family::random_unit_vector(&mut rng))
        .collect()
}

/// Builds the cap partition of the shell `||xi| - 1| < 1/r` and verifies
/// coverage and bounded overlap on sampled points.
pub fn make_caps(r: f64) -> Result<CapDecomposition> {
    if !(r >= 1.0) || !r.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "cap scale R = {r} must be >= 1"
        )));
    }
    let centers = separated_centers(r);
    let min_separation = if centers.len() > 1 {
        min_pair_distance(&centers)
    } else {
        2.0
    };
    let probes = shell_samples(4000 + 8 * centers.len(), 0x5eed);
    let covering_radius = probes
        .iter()
        .map(|w| {
            centers
                .iter()
                .map(|c| chord(*w, *c))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    // support reaches every point; normalization turns the profiles into a partition
    let width = (1.4 * covering_radius).min(2.0);
    let caps = centers
        .into_iter()
        .map(|c| Cap {
            center: c,
            frame: tangent_frame(c),
            angular_width: width,
            radial_width: 1.0 / r,
        })
        .collect();
    let dec = CapDecomposition {
        r,
        caps,
        min_separation,
        covering_radius,
    };
    let (min_sum, overlap) = dec.sampled_invariants(&probes);
    let min_raw = probes
        .iter()
        .map(|w| dec.raw_weights(*w).iter().map(|p| p.1).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    if min_sum < 1.0 - 1e-6 || min_raw < 0.05 {
        return Err(Error::CheckFailed(format!(
            "caps leave a gap: cutoff sum {min_sum}, raw sum {min_raw}"
        )));
    }
    if overlap > MAX_OVERLAP {
        return Err(Error::CheckFailed(format!(
            "cap overlap {overlap} exceeds {MAX_OVERLAP}"
        )));
    }
    Ok(dec)
}

/// `1` on `||xi| - 1| <= 1/r`, `0` beyond `2/r`.
pub fn shell_window(radius: f64, r: f64) -> f64 {
    plateau(0.5 * (radius - 1.0) * r)
}

impl CapDecomposition {
    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn caps(&self) -> &[Cap] {
        &self.caps
    }

    pub fn len(&self) -> usize {
        self.caps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.caps.is_empty()
    }

    pub fn min_separation(&self) -> f64 {
        self.min_separation
    }

    pub fn covering_radius(&self) -> f64 {
        self.covering_radius
    }

    /// Unnormalized profiles `plateau(|w - center| / width)` that are nonzero at `w`.
    pub fn raw_weights(&self, w: [f64; 3]) -> Vec<(usize, f64)> {
        self.caps
            .iter()
            .enumerate()
            .filter_map(|(i, c)| {
                let v = plateau(chord(w, c.center) / c.angular_width);
                (v > 0.0).then_some((i, v))
            })
            .collect()
    }

    /// Angular partition of unity at the unit vector `w`.
    pub fn angular_weights(&self, w: [f64; 3]) -> Vec<(usize, f64)> {
        let mut raw = self.raw_weights(w);
        let s: f64 = raw.iter().map(|p| p.1).sum();
        if s > 0.0 {
            for p in &mut raw {
                p.1 /= s;
            }
        }
        raw
    }

    /// Cutoffs `chi_alpha(xi)`: radial window times the angular partition.
    pub fn cutoffs(&self, xi: [f64; 3]) -> Vec<(usize, f64)> {
        let r = norm3(xi);
        let rad = shell_window(r, self.r);
        if rad == 0.0 || r == 0.0 {
            return Vec::new();
        }
        let w = [xi[0] / r, xi[1] / r, xi[2] / r];
        let mut out = self.angular_weights(w);
        for p in &mut out {
            p.1 *= rad;
        }
        out
    }

    /// `(min cutoff sum, max overlap)` over unit vectors.
    pub fn sampled_invariants(&self, probes: &[[f64; 3]]) -> (f64, usize) {
        let mut min_sum = f64::INFINITY;
        let mut overlap = 0;
        for &w in probes {
            let ws = self.angular_weights(w);
            min_sum = min_sum.min(ws.iter().map(|p| p.1).sum());
            overlap = overlap.max(ws.iter().filter(|p| p.1 > 0.01).count());
        }
        (min_sum, overlap)
    }
}

/// `Phi(s)`: 1 for `s <= 1`, 0 for `s >= 2`.
fn dyadic_profile(s: f64) -> f64 {
    1.0 - smooth_step(s - 1.0)
}

/// Number of shells `k = 0..count` before the far part.
pub fn shell_count(r: f64) -> usize {
    (r.log2().floor() as i64 - 1).max(0) as usize + 1
}

fn shell_symbol(k: usize, r: f64, radius: f64) -> f64 {
    let t = (radius - 1.0).abs() * r;
    if k == 0 {
        dyadic_profile(t)
    } else {
        let s = 2f64.powi(k as i32);
        dyadic_profile(t / s) - dyadic_profile(2.0 * t / s)
    }
}

/// Frequency cutoff to `||xi| - 1| ~ 2^k / r` (`k = 0`: `<= 1/r`).
pub fn shell_project(f: &Field, k: usize, r: f64) -> Result<Field> {
    if !(r >= 1.0) {
        return Err(Error::InvalidArgument(format!("R = {r} must be >= 1")));
    }
    apply_multiplier(f, |xi| C64::new(shell_symbol(k, r, norm3(xi)), 0.0))
}

/// What the first [`shell_count`] shells leave behind.
pub fn far_part(f: &Field, r: f64) -> Result<Field> {
    if !(r >= 1.0) {
        return Err(Error::InvalidArgument(format!("R = {r} must be >= 1")));
    }
    let kmax = shell_count(r) - 1;
    let s = 2f64.powi(kmax as i32);
    apply_multiplier(f, |xi| {
        let t = (norm3(xi) - 1.0).abs() * r;
        C64::new(1.0 - dyadic_profile(t / s), 0.0)
    })
}

/// Both sides of the square-function inequality and of its dual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareFunction {
    pub r: f64,
    /// `||g||_4`.
    pub lhs_g2: f64,
    /// `R^{1/8} ||(sum |g_a|^2)^{1/2}||_4`.
    pub rhs_g2: f64,
    /// `||(sum |f_a|^2)^{1/2}||_{4/3}`.
    pub lhs_f2: f64,
    /// `R^{1/8} ||f||_{4/3}`.
    pub rhs_f2: f64,
}

impl SquareFunction {
    pub fn ratio_g2(&self) -> f64 {
        self.lhs_g2 / self.rhs_g2
    }

    pub fn ratio_f2(&self) -> f64 {
        self.lhs_f2 / self.rhs_f2
    }
}

/// Grid square functions of `f` after projection onto the shell window.
/// The grid must resolve the shell: `freq_step <= 1/R`.
pub fn square_function_check(f: &Field, caps: &CapDecomposition) -> Result<SquareFunction> {
    let grid = *f.grid();
    let r = caps.r();
    if grid.freq_step() > 1.0 / r {
        return Err(Error::Precondition(format!(
            "frequency step {} does not resolve shell width 1/R = {}",
            grid.freq_step(),
            1.0 / r
        )));
    }
    if 1.0 + 2.0 / r >= grid.nyquist() {
        return Err(Error::Precondition(
            "shell exceeds the Nyquist frequency".into(),
        ));
    }
    let fh = f.forward()?;
    let mut pieces: Vec<Vec<(usize, C64)>> = vec![Vec::new(); caps.len()];
    let mut gh = Field::zeros(grid, Domain::Frequency);
    for idx in 0..grid.len() {
        let v = fh.values()[idx];
        if v == C64::new(0.0, 0.0) {
            continue;
        }
        for (a, c) in caps.cutoffs(grid.frequency(idx)) {
            pieces[a].push((idx, v * c));
            gh.values_mut()[idx] += v * c;
        }
    }
    let g = gh.inverse()?;
    if lp_norm(&g, 2.0)? == 0.0 {
        return Err(Error::Precondition("f has no mass on the shell".into()));
    }
    let mut square = vec![0.0f64; grid.len()];
    for piece in pieces.iter().filter(|p| !p.is_empty()) {
        let mut ph = Field::zeros(grid, Domain::Frequency);
        for &(idx, v) in piece {
            ph.values_mut()[idx] = v;
        }
        let ga = ph.inverse()?;
        for (s, v) in square.iter_mut().zip(ga.values()) {
            *s += v.norm_sqr();
        }
    }
    let sq = Field::from_values(
        grid,
        square.iter().map(|s| C64::new(s.sqrt(), 0.0)).collect(),
        Domain::Position,
    )?;
    let k = r.powf(0.125);
    Ok(SquareFunction {
        r,
        lhs_g2: lp_norm(&g, 4.0)?,
        rhs_g2: k * lp_norm(&sq, 4.0)?,
        lhs_f2: lp_norm(&sq, 4.0 / 3.0)?,
        rhs_f2: k * lp_norm(&g, 4.0 / 3.0)?,
    })
}

/// Gaussian wave packets `a e^{i x.xi} exp(-x^T A x / 2)` on the caps, with
/// `A = (kappa^2/R)(I - xi xi^T) + (kappa^2/R^2) xi xi^T`: each packet has
/// frequency spread `kappa R^{-1/2} x kappa R^{-1/2} x kappa/R`.
#[derive(Debug, Clone)]
pub struct PacketSum {
    r: f64,
    kappa: f64,
    centers: Vec<[f64; 3]>,
    coeffs: Vec<C64>,
}

impl PacketSum {
    pub fn new(caps: &CapDecomposition, coeffs: Vec<C64>, kappa: f64) -> Result<Self> {
        if coeffs.len() != caps.len() {
            return Err(Error::InvalidArgument(format!(
                "{} coefficients for {} caps",
                coeffs.len(),
                caps.len()
            )));
        }
        if !(kappa > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "kappa = {kappa} must be positive"
            )));
        }
        let keep: Vec<usize> = (0..coeffs.len())
            .filter(|&i| coeffs[i].norm() > 0.0)
            .collect();
        if keep.is_empty() {
            return Err(Error::InvalidArgument("all coefficients vanish".into()));
        }
        Ok(PacketSum {
            r: caps.r(),
            kappa,
            centers: keep.iter().map(|&i| caps.caps()[i].center).collect(),
            coeffs: keep.iter().map(|&i| coeffs[i]).collect(),
        })
    }

    fn quadratic(&self, x: [f64; 3], c: [f64; 3]) -> (f64, f64) {
        let along = dot3(x, c);
        let k2 = self.kappa * self.kappa;
        let q = k2 / self.r * (dot3(x, x) - along * along) + k2 / (self.r * self.r) * along * along;
        (along, q)
    }

    /// `int (sum |g_a|^2)^2 dx` in closed form.
    pub fn square_l4_pow4(&self) -> f64 {
        let k2 = self.kappa * self.kappa;
        let c1 = k2 / self.r;
        let c2 = k2 / (self.r * self.r) - c1;
        let w: Vec<f64> = self.coeffs.iter().map(|a| a.norm_sqr()).collect();
        let mut total = 0.0;
        for (i, a) in self.centers.iter().enumerate() {
            for (j, b) in self.centers.iter().enumerate() {
                let c = dot3(*a, *b).clamp(-1.0, 1.0);
                let det = 2.0 * c1 * (2.0 * c1 + c2 * (1.0 + c)) * (2.0 * c1 + c2 * (1.0 - c));
                total += w[i] * w[j] * PI.powf(1.5) / det.sqrt();
            }
        }
        total
    }

    /// Importance-sampled integrals of `|g|^4`, `(sum |g_a|^2)^{2/3}`,
    /// `|g|^{4/3}` and `(sum |g_a|^2)^2`.
    pub fn sampled_integrals(&self, samples: usize, seed: u64) -> [f64; 4] {
        let mut rng = seeded_rng(seed);
        let r = self.r;
        let k = self.kappa;
        let weights: Vec<f64> = self.coeffs.iter().map(|a| a.norm_sqr()).collect();
        let wsum: f64 = weights.iter().sum();
        let cumulative: Vec<f64> = weights
            .iter()
            .scan(0.0, |s, w| {
                *s += w / wsum;
                Some(*s)
            })
            .collect();
        let s0 = 2.0;
        let s1 = r.sqrt();
        let tube_norm = (2.0 * PI).powf(-1.5) * k.powi(3) / (r * r);
        let iso = |x: [f64; 3], s: f64| {
            (2.0 * PI * s * s).powf(-1.5) * (-dot3(x, x) / (2.0 * s * s)).exp()
        };
        let mut acc = [0.0f64; 4];
        for _ in 0..samples {
            let z: [f64; 3] = [
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            ];
            let x = match rng.random_range(0..3) {
                0 => [s0 * z[0], s0 * z[1], s0 * z[2]],
                1 => [s1 * z[0], s1 * z[1], s1 * z[2]],
                _ => {
                    let u: f64 = rng.random();
                    let a = cumulative
                        .partition_point(|&c| c < u)
                        .min(self.centers.len() - 1);
                    let c = self.centers[a];
                    let (e1, e2) = tangent_frame(c);
                    let t = r.sqrt() / k;
                    let l = r / k;
                    [0, 1, 2].map(|i| t * (z[0] * e1[i] + z[1] * e2[i]) + l * z[2] * c[i])
                }
            };
            let mut sum = C64::new(0.0, 0.0);
            let mut square = 0.0;
            let mut tube = 0.0;
            for ((c, a), w) in self.centers.iter().zip(&self.coeffs).zip(&weights) {
                let (along, q) = self.quadratic(x, *c);
                let env = (-0.5 * q).exp();
                sum += a * C64::from_polar(env, along);
                square += w * env * env;
                tube += w / wsum * env;
            }
            let density = (iso(x, s0) + iso(x, s1) + tube_norm * tube) / 3.0;
            let m2 = sum.norm_sqr();
            acc[0] += m2 * m2 / density;
            acc[1] += square.powf(2.0 / 3.0) / density;
            acc[2] += m2.powf(2.0 / 3.0) / density;
            acc[3] += square * square / density;
        }
        acc.map(|a| a / samples as f64)
    }

    /// Square-function sides from a fixed-seed Monte Carlo run; the `g2`
    /// right-hand side is exact.
    pub fn square_function(&self, samples: usize, seed: u64) -> SquareFunction {
        let [g4, sq43, g43, _] = self.sampled_integrals(samples, seed);
        let k = self.r.powf(0.125);
        SquareFunction {
            r: self.r,
            lhs_g2: g4.powf(0.25),
            rhs_g2: k * self.square_l4_pow4().powf(0.25),
            lhs_f2: sq43.powf(0.75),
            rhs_f2: k * g43.powf(0.75),
        }
    }
}

/// Coefficients `e^{i theta_a}` with uniform random phases.
pub fn random_phases(count: usize, rng: &mut TestRng) -> Vec<C64> {
    (0..count)
        .map(|_| C64::from_polar(1.0, rng.random::<f64>() * 2.0 * PI))
        .collect()
}

/// `(int_Q |sum_a a_a e^{i x.xi_a}|^4 dx)^{1/4}` over the cube `Q` of the
/// given side centered at 0, by the tensor midpoint rule with at least
/// `per_wavelength` points per `2 pi`.
pub fn extension_l4_cube(
    nodes: &[[f64; 3]],
    coeffs: &[C64],
    side: f64,
    per_wavelength: usize,
) -> Result<f64> {
    if nodes.len() != coeffs.len() || nodes.is_empty() {
        return Err(Error::InvalidArgument(
            "nodes and coefficients differ".into(),
        ));
    }
    let m = ((side * per_wavelength as f64 / (2.0 * PI)).ceil() as usize).max(2);
    let step = side / m as f64;
    let xs: Vec<f64> = (0..m)
        .map(|i| -0.5 * side + (i as f64 + 0.5) * step)
        .collect();
    let table = |axis: usize| -> Vec<Vec<C64>> {
        nodes
            .iter()
            .map(|w| {
                xs.iter()
                    .map(|&x| C64::from_polar(1.0, x * w[axis]))
                    .collect()
            })
            .collect()
    };
    let (tx, ty, tz) = (table(0), table(1), table(2));
    let count = nodes.len();
    let mut b = vec![C64::new(0.0, 0.0); count];
    let mut c = vec![C64::new(0.0, 0.0); count];
    let mut total = 0.0;
    for i in 0..m {
        for a in 0..count {
            b[a] = coeffs[a] * tx[a][i];
        }
        for j in 0..m {
            for a in 0..count {
                c[a] = b[a] * ty[a][j];
            }
            for k in 0..m {
                let mut s = C64::new(0.0, 0.0);
                for a in 0..count {
                    s += c[a] * tz[a][k];
                }
                total += s.norm_sqr().powi(2);
            }
        }
    }
    Ok((total * step.powi(3)).powf(0.25))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteExtension {
    pub r: f64,
    pub nodes: usize,
    /// Ratios `||sum a e^{ix.xi}||_{L^4(Q)} / (R^{1/2} ||a||_2)` of the random trials.
    pub trial_ratios: Vec<f64>,
    pub all_ones_ratio: f64,
    /// Over the random trials and the all-ones vector.
    pub max_ratio: f64,
}

pub fn extension_ratio(nodes: &[[f64; 3]], coeffs: &[C64], r: f64) -> Result<f64> {
    let lhs = extension_l4_cube(nodes, coeffs, r.sqrt(), 8)?;
    let a2 = coeffs.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    Ok(lhs / (r.sqrt() * a2))
}

/// Random subsets of the cap centers with complex Gaussian coefficients.
pub fn discrete_extension_check(r: f64, trials: usize, seed: u64) -> Result<DiscreteExtension> {
    if !(r >= 4.0) {
        return Err(Error::InvalidArgument(format!("R = {r} must be >= 4")));
    }
    let caps = make_caps(r)?;
    let centers: Vec<[f64; 3]> = caps.caps().iter().map(|c| c.center).collect();
    if caps.min_separation() < r.powf(-0.5) {
        return Err(Error::CheckFailed(
            "cap centers are not R^{-1/2}-separated".into(),
        ));
    }
    let mut rng = seeded_rng(seed);
    let mut trial_ratios = Vec::with_capacity(trials);
    for _ in 0..trials {
        let mut nodes = Vec::new();
        let mut coeffs = Vec::new();
        for c in &centers {
            if rng.random_bool(0.5) {
                nodes.push(*c);
                coeffs.push(complex_normal(&mut rng));
            }
        }
        if nodes.is_empty() {
            nodes.push(centers[0]);
            coeffs.push(C64::new(1.0, 0.0));
        }
        trial_ratios.push(extension_ratio(&nodes, &coeffs, r)?);
    }
    let ones = vec![C64::new(1.0, 0.0); centers.len()];
    let all_ones_ratio = extension_ratio(&centers, &ones, r)?;
    let max_ratio = trial_ratios.iter().cloned().fold(all_ones_ratio, f64::max);
    Ok(DiscreteExtension {
        r,
        nodes: centers.len(),
        trial_ratios,
        all_ones_ratio,
        max_ratio,
    })
}

/// Knapp example: `e^{i x.d}` times bumps of length `R` along `d` and
/// width `sqrt(R)` across it.
pub fn knapp_field(r: f64, direction: [f64; 3], grid: Grid3) -> Result<Field> {
    if !(r >= 1.0) || r > grid.box_length() / 4.0 {
        return Err(Error::Precondition(format!(
            "tube length R = {r} must lie in [1, L/4 = {}]",
            grid.box_length() / 4.0
        )));
    }
    let n = norm3(direction);
    if !(n > 0.0) {
        return Err(Error::InvalidArgument("direction must be nonzero".into()));
    }
    let d = [direction[0] / n, direction[1] / n, direction[2] / n];
    let (e1, e2) = tangent_frame(d);
    let w = r.sqrt();
    Ok(Field::from_fn(grid, |x| {
        let a = dot3(x, d);
        let amp = bump(2.0 * a / r) * bump(2.0 * dot3(x, e1) / w) * bump(2.0 * dot3(x, e2) / w);
        C64::from_polar(amp, a)
    }))
}

fn check_eps(grid: &Grid3, eps: f64) -> Result<()> {
    let min = 4.0 / grid.box_length();
    if eps < min * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!(
            "eps = {eps} is below 4/L = {min}"
        )));
    }
    Ok(())
}

/// `||1_{|x|<R} R0(1 + i eps) f||_2`.
pub fn localized_resolvent_norm(f: &Field, r: f64, eps: f64) -> Result<f64> {
    let g = f.grid();
    if !(r > 0.0) || r > g.box_length() / 4.0 {
        return Err(Error::Precondition(format!(
            "ball radius R = {r} must lie in (0, L/4 = {}]",
            g.box_length() / 4.0
        )));
    }
    check_eps(g, eps)?;
    ball_l2_norm(&apply_resolvent_at(f, C64::new(1.0, eps))?, r)
}

/// `int_{|x|<R} e^{i x.eta} dx`.
pub fn ball_transform(r: f64, eta: f64) -> f64 {
    let t = r * eta;
    if t < 1e-3 {
        4.0 * PI * r.powi(3) / 3.0 * (1.0 - t * t / 10.0)
    } else {
        4.0 * PI * (t.sin() - t * t.cos()) / eta.powi(3)
    }
}

/// Nodes needed to resolve the extension on a ball of radius `R`.
pub fn extension_nodes(r: f64) -> usize {
    ((8.0 * r * r).ceil() as usize).max(512)
}

/// `||1_{|x|<R} E(f_hat|_{S^2})||_2 / (sqrt(R) ||f||_{4/3})` for each field,
/// where `E s(x) = sum_j w_j s_j e^{i x.w_j}`; the ball integral is exact.
pub fn local_extension_ratios(
    fields: &[Field],
    r: f64,
    quad: &SphereQuadrature,
) -> Result<Vec<f64>> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("R = {r} must be positive")));
    }
    let nodes = quad.nodes();
    let coeffs: Vec<Vec<C64>> = fields
        .iter()
        .map(|f| {
            let s = restrict(f, 1.0, quad)?;
            Ok(s.values
                .iter()
                .zip(quad.weights())
                .map(|(v, w)| v * *w)
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut totals = vec![0.0; fields.len()];
    let diag = ball_transform(r, 0.0);
    for (i, a) in nodes.iter().enumerate() {
        let mut rows = vec![0.0; fields.len()];
        for (j, b) in nodes.iter().enumerate().skip(i + 1) {
            let k = ball_transform(r, chord(*a, *b));
            for (row, c) in rows.iter_mut().zip(&coeffs) {
                *row += (c[i] * c[j].conj()).re * k;
            }
        }
        for ((t, row), c) in totals.iter_mut().zip(&rows).zip(&coeffs) {
            *t += 2.0 * row + c[i].norm_sqr() * diag;
        }
    }
    fields
        .iter()
        .zip(totals)
        .map(|(f, t)| Ok(t.max(0.0).sqrt() / (r.sqrt() * lp_norm(f, 4.0 / 3.0)?)))
        .collect()
}

/// Max of [`local_extension_ratios`] with [`extension_nodes`] quadrature.
pub fn local_extension_norm_check(fields: &[Field], r: f64) -> Result<f64> {
    let quad = crate::sphere::sphere_quadrature(extension_nodes(r))?;
    Ok(local_extension_ratios(fields, r, &quad)?
        .into_iter()
        .fold(0.0, f64::max))
}

/// `||1_{|x+v/2|<R} R0(1 + i eps) 1_{|x-v/2|<R}||_{2->2}` by power
/// iteration on `T*T`; translation of the pair `(0, v)` to be symmetric
/// about the origin leaves the norm unchanged.
pub fn local_bilinear_norm(
    r: f64,
    v: [f64; 3],
    eps: f64,
    grid: Grid3,
    iters: usize,
    seed: u64,
) -> Result<OpNormEstimate> {
    check_eps(&grid, eps)?;
    let half = grid.box_length() / 2.0;
    let a = [-0.5 * v[0], -0.5 * v[1], -0.5 * v[2]];
    let b = [0.5 * v[0], 0.5 * v[1], 0.5 * v[2]];
    for c in [a, b] {
        if c.iter().any(|x| x.abs() + r > half) {
            return Err(Error::Precondition(format!(
                "ball of radius {r} around {c:?} leaves the box"
            )));
        }
    }
    let ma = ball_indicator(grid, a, r);
    let mb = ball_indicator(grid, b, r);
    let z = C64::new(1.0, eps);
    let op = FnOperator::new(
        grid,
        |f: &Field| {
            Ok(restrict_to(
                &apply_resolvent_at(&restrict_to(f, &mb), z)?,
                &ma,
            ))
        },
        |f: &Field| {
            Ok(restrict_to(
                &apply_resolvent_at(&restrict_to(f, &ma), z.conj())?,
                &mb,
            ))
        },
    );
    let mut rng = seeded_rng(seed);
    let start = restrict_to(&crate::family::band_limited(grid, &mut rng), &mb);
    estimate_l2_norm(&op, start, iters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{gaussian_bump, random_unit_vector};
    use crate::grid::make_grid;
    use crate::numerics::normalize3;

    #[test]
    fn cap_counts_and_invariants() {
        for r in [1.0, 16.0, 64.0, 256.0] {
            let c = make_caps(r).unwrap();
            assert!(
                c.len() as f64 >= r / 4.0 && c.len() as f64 <= 16.0 * r,
                "{r}: {}",
                c.len()
            );
            assert!(c.min_separation() >= r.powf(-0.5));
            let (s, o) = c.sampled_invariants(&shell_samples(3000, 99));
            assert!(s >= 1.0 - 1e-6);
            assert!(o <= MAX_OVERLAP, "{r}: overlap {o}");
            for cap in c.caps() {
                let (t1, t2) = cap.frame;
                assert!(dot3(t1, t2).abs() < 1e-12 && dot3(t1, cap.center).abs() < 1e-12);
                let q = cap.angular_width.powi(2) / cap.radial_width;
                assert!((0.25..=4.0).contains(&q), "{q}");
            }
        }
        assert!(make_caps(0.5).is_err());
    }

    #[test]
    fn cutoffs_vanish_off_shell() {
        let c = make_caps(16.0).unwrap();
        assert!(c.cutoffs([0.0, 0.0, 1.2]).is_empty());
        let s: f64 = c
            .cutoffs(normalize3([0.3, -0.2, 0.9]))
            .iter()
            .map(|p| p.1)
            .sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    fn plane_wave(g: Grid3, m: [i64; 3]) -> Field {
        let fs = g.freq_step();
        Field::from_fn(g, |x| {
            C64::from_polar(
                1.0,
                fs * (m[0] as f64 * x[0] + m[1] as f64 * x[1] + m[2] as f64 * x[2]),
            )
        })
    }

    #[test]
    fn shells_partition_frequency_space() {
        let g = make_grid(16, 64.0).unwrap();
        let r = 8.0;
        let mut rng = seeded_rng(4);
        let f = crate::family::band_limited(g, &mut rng);
        let mut sum = far_part(&f, r).unwrap();
        for k in 0..shell_count(r) {
            sum = sum.add(&shell_project(&f, k, r).unwrap()).unwrap();
        }
        let err = lp_norm(&sum.sub(&f).unwrap(), 2.0).unwrap();
        assert!(err < 1e-10 * lp_norm(&f, 2.0).unwrap());
    }

    #[test]
    fn shell_location_examples() {
        // freq_step 1/8: mode 9 sits at 1 + 0.5/R for R = 4, mode 24 at 3
        let r = 4.0;
        let g = make_grid(64, 16.0 * PI).unwrap();
        let f = plane_wave(g, [9, 0, 0]);
        let n = lp_norm(&f, 2.0).unwrap();
        let k0 = lp_norm(&shell_project(&f, 0, r).unwrap(), 2.0).unwrap();
        assert!((k0 - n).abs() < 1e-10 * n);
        for k in 2..5 {
            assert!(lp_norm(&shell_project(&f, k, r).unwrap(), 2.0).unwrap() < 1e-10 * n);
        }
        let far = plane_wave(g, [0, 24, 0]);
        for k in 0..shell_count(r) {
            assert!(lp_norm(&shell_project(&far, k, r).unwrap(), 2.0).unwrap() < 1e-6 * n);
        }
    }

    #[test]
    fn shell_symbol_examples() {
        let r = 16.0;
        assert_eq!(shell_symbol(0, r, 1.0 + 0.5 / r), 1.0);
        for k in 2..6 {
            assert_eq!(shell_symbol(k, r, 1.0 + 0.5 / r), 0.0);
        }
        for k in 0..shell_count(r) {
            assert_eq!(shell_symbol(k, r, 3.0), 0.0);
        }
    }

    #[test]
    fn single_cap_square_function() {
        let r = 2.0;
        let caps = make_caps(r).unwrap();
        let g = make_grid(64, 64.0).unwrap();
        let c = caps.caps()[3].center;
        let f = Field::from_fn_frequency(g, |xi| {
            let d = chord(xi, c);
            C64::new(bump(d / (0.3 * caps.caps()[3].angular_width)), 0.0)
        })
        .inverse()
        .unwrap();
        let s = square_function_check(&f, &caps).unwrap();
        let one = s.lhs_g2 * r.powf(0.125) / s.rhs_g2;
        assert!((1.0..2.0).contains(&one), "{one}");
        assert!(square_function_check(&f, &make_caps(16.0).unwrap()).is_err());
    }

    #[test]
    fn packet_integrals_match_closed_form() {
        let caps = make_caps(16.0).unwrap();
        let mut rng = seeded_rng(8);
        let ps = PacketSum::new(&caps, random_phases(caps.len(), &mut rng), 0.5).unwrap();
        let exact = ps.square_l4_pow4();
        let mc = ps.sampled_integrals(20000, 1)[3];
        assert!((mc / exact - 1.0).abs() < 0.05, "{mc} {exact}");
    }

    #[test]
    fn single_point_extension_ratio() {
        for r in [16.0, 64.0] {
            let v = extension_ratio(&[[0.0, 0.6, 0.8]], &[C64::new(1.0, 0.0)], r).unwrap();
            assert!((v - r.powf(-0.125)).abs() < 1e-12, "{v}");
        }
    }

    #[test]
    fn discrete_extension_small() {
        let d = discrete_extension_check(16.0, 10, 3).unwrap();
        assert_eq!(d.trial_ratios.len(), 10);
        assert!(d.all_ones_ratio >= d.max_ratio / 4.0);
        assert!(discrete_extension_check(2.0, 1, 0).is_err());
    }

    #[test]
    fn knapp_field_norms() {
        // half-cell spacing keeps the sqrt(R) cross-section resolved
        let g = make_grid(128, 64.0).unwrap();
        let mut rng = seeded_rng(2);
        let base = knapp_field(16.0, [1.0, 0.0, 0.0], g).unwrap();
        let n2 = lp_norm(&base, 2.0).unwrap();
        let n43 = lp_norm(&base, 4.0 / 3.0).unwrap();
        for _ in 0..2 {
            let d = random_unit_vector(&mut rng);
            let f = knapp_field(16.0, d, g).unwrap();
            assert!((lp_norm(&f, 2.0).unwrap() / n2 - 1.0).abs() < 0.01);
            assert!((lp_norm(&f, 4.0 / 3.0).unwrap() / n43 - 1.0).abs() < 0.01);
        }
        let ninf = lp_norm(&base, f64::INFINITY).unwrap();
        let vol = n2 * n2 / (ninf * ninf);
        assert!(vol / (16.0 * 16.0) > 0.01 && vol / (16.0 * 16.0) < 1.0);
        assert!(knapp_field(20.0, [1.0, 0.0, 0.0], g).is_err());
    }

    #[test]
    fn localized_norm_off_shell_is_bounded() {
        let g = make_grid(32, 32.0).unwrap();
        let f = gaussian_bump(g, [0.0; 3], 0.3);
        // mostly |xi| > 1.5: the resolvent acts like (1 - Delta)^{-1}
        let a = localized_resolvent_norm(&f, 4.0, 0.125).unwrap();
        let b = localized_resolvent_norm(&f, 8.0, 0.125).unwrap();
        assert!(b / a < 1.5, "{a} {b}");
        assert!(localized_resolvent_norm(&f, 9.0, 0.125).is_err());
        assert!(localized_resolvent_norm(&f, 4.0, 0.1).is_err());
    }

    #[test]
    fn ball_transform_limits() {
        let v = 4.0 * PI / 3.0 * 8.0;
        assert!((ball_transform(2.0, 0.0) - v).abs() < 1e-12);
        assert!((ball_transform(2.0, 1e-5) - v).abs() < 1e-8);
        let t: f64 = 2.0 * 0.7;
        assert!(
            (ball_transform(2.0, 0.7) - 4.0 * PI * (t.sin() - t * t.cos()) / 0.343).abs() < 1e-12
        );
    }

    #[test]
    fn local_extension_radial_bump() {
        let g = make_grid(32, 32.0).unwrap();
        let f = gaussian_bump(g, [0.0; 3], 1.0);
        let a = local_extension_norm_check(std::slice::from_ref(&f), 8.0).unwrap();
        let b = local_extension_norm_check(std::slice::from_ref(&f), 16.0).unwrap();
        assert!(b / a > 0.5 && b / a < 2.0, "{a} {b}");
        let c = local_extension_norm_check(&[f.scale_real(7.0)], 8.0).unwrap();
        assert!((c - a).abs() < 1e-10 * a);
    }

    #[test]
    fn bilinear_symmetry() {
        let g = make_grid(16, 16.0).unwrap();
        let v = [2.0, 1.0, 0.0];
        let a = local_bilinear_norm(2.0, v, 0.25, g, 60, 1)
            .unwrap()
            .lower_bound;
        let b = local_bilinear_norm(2.0, [-2.0, -1.0, 0.0], 0.25, g, 60, 1)
            .unwrap()
            .lower_bound;
        assert!((a - b).abs() < 1e-3 * a, "{a} {b}");
        assert!(local_bilinear_norm(2.0, [14.0, 0.0, 0.0], 0.25, g, 5, 1).is_err());
    }
}
