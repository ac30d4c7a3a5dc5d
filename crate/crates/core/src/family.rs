//! Random and deterministic test fields.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::grid::{Domain, Field, Grid3, C64};

pub type TestRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex_normal(rng: &mut TestRng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

/// C-infinity bump `exp(1 - 1/(1 - t^2))` on `|t| < 1`, value 1 at 0.
pub fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

/// Smooth step: 0 for `t <= 0`, 1 for `t >= 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

/// Plateau profile: 1 on `[-1/2, 1/2]`, 0 outside `[-1, 1]`, smooth between.
pub fn plateau(t: f64) -> f64 {
    let a = t.abs();
    smooth_step(2.0 * (1.0 - a))
}

fn unit_l2(mut f: Field) -> Field {
    let n = crate::grid::lp_norm(&f, 2.0).unwrap_or(0.0);
    if n > 0.0 {
        for v in f.values_mut() {
            *v /= n;
        }
    }
    f
}

/// Complex Gaussian coefficients on `|xi| <= band`, unit `L^2` norm.
///
/// Coefficients are drawn in signed mode order, so refining the grid at a
/// fixed box length and band reproduces the same function.
pub fn band_limited_with(grid: Grid3, band: f64, rng: &mut TestRng) -> Field {
    let n = grid.n() as i64;
    let fs = grid.freq_step();
    let mmax = ((band / fs).floor() as i64).min(n / 2 - 1);
    let mut fh = Field::zeros(grid, Domain::Frequency);
    let slot = |m: i64| m.rem_euclid(n) as usize;
    for a in -mmax..=mmax {
        for b in -mmax..=mmax {
            for c in -mmax..=mmax {
                let r = fs * ((a * a + b * b + c * c) as f64).sqrt();
                if r <= band {
                    let idx = grid.index(slot(a), slot(b), slot(c));
                    fh.values_mut()[idx] = complex_normal(rng);
                }
            }
        }
    }
    unit_l2(fh.inverse().expect("frequency field"))
}

/// Default random family: band limit `n * freq_step / 4`.
pub fn band_limited(grid: Grid3, rng: &mut TestRng) -> Field {
    band_limited_with(grid, default_band(&grid), rng)
}

pub fn default_band(grid: &Grid3) -> f64 {
    grid.n() as f64 * grid.freq_step() / 4.0
}

/// Band-limited field concentrated in the middle half of the box:
/// a random field times a `cos^2` window on `|x_i| < L/4`, projected back
/// onto the band.
pub fn mid_box_band_limited(grid: Grid3, rng: &mut TestRng) -> Field {
    let q = grid.box_length() / 4.0;
    let raw = band_limited(grid, rng).map_position(|x, v| {
        let mut w = 1.0;
        for c in x {
            let t = c.abs() / q;
            w *= if t < 1.0 {
                (0.5 * std::f64::consts::PI * t).cos().powi(2)
            } else {
                0.0
            };
        }
        v * w
    });
    let band = default_band(&grid);
    let mut fh = raw.forward().expect("position field");
    for idx in 0..grid.len() {
        if grid.xi2(idx).sqrt() > band {
            fh.values_mut()[idx] = C64::new(0.0, 0.0);
        }
    }
    unit_l2(fh.inverse().expect("frequency field"))
}

/// Gaussian `exp(-|x-c|^2 / (2 sigma^2))`, set to zero beyond `9 sigma`.
pub fn gaussian_bump(grid: Grid3, center: [f64; 3], sigma: f64) -> Field {
    Field::from_fn(grid, |x| C64::new(gaussian_value(x, center, sigma), 0.0))
}

pub fn gaussian_value(x: [f64; 3], c: [f64; 3], sigma: f64) -> f64 {
    let d2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2);
    let t = d2 / (2.0 * sigma * sigma);
    if t > 40.5 {
        0.0
    } else {
        (-t).exp()
    }
}

/// Parameters of one Gaussian bump in a random sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: [f64; 3],
    pub sigma: f64,
    pub amplitude: C64,
}

/// Random sum of `count` Gaussian bumps with widths in `widths` and
/// centers uniform in the cube `[-spread, spread]^3`.
pub fn random_bumps(count: usize, widths: (f64, f64), spread: f64, rng: &mut TestRng) -> Vec<Bump> {
    (0..count)
        .map(|_| {
            let center = [
                rng.random_range(-spread..=spread),
                rng.random_range(-spread..=spread),
                rng.random_range(-spread..=spread),
            ];
            let sigma = rng.random_range(widths.0..=widths.1);
            let amplitude = complex_normal(rng);
            Bump {
                center,
                sigma,
                amplitude,
            }
        })
        .collect()
}

pub fn bump_field(grid: Grid3, bumps: &[Bump]) -> Field {
    Field::from_fn(grid, |x| {
        bumps
            .iter()
            .map(|b| b.amplitude * gaussian_value(x, b.center, b.sigma))
            .sum()
    })
}

/// Real-valued variant: amplitudes replaced by their moduli.
pub fn real_bump_field(grid: Grid3, bumps: &[Bump]) -> Field {
    Field::from_fn(grid, |x| {
        let s: f64 = bumps
            .iter()
            .map(|b| b.amplitude.norm() * gaussian_value(x, b.center, b.sigma))
            .sum();
        C64::new(s, 0.0)
    })
}

/// Uniform random unit vector.
pub fn random_unit_vector(rng: &mut TestRng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        ];
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if r > 1e-8 {
            return [v[0] / r, v[1] / r, v[2] / r];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn profiles() {
        assert_eq!(bump(0.0), 1.0);
        assert_eq!(bump(1.0), 0.0);
        assert_eq!(plateau(0.3), 1.0);
        assert_eq!(plateau(0.5), 1.0);
        assert_eq!(plateau(1.0), 0.0);
        assert!(plateau(0.75) > 0.0 && plateau(0.75) < 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn band_limit_holds() {
        let g = make_grid(16, 16.0).unwrap();
        let mut rng = seeded_rng(3);
        let f = band_limited(g, &mut rng);
        let fh = f.forward().unwrap();
        let band = default_band(&g);
        for (idx, v) in fh.values().iter().enumerate() {
            if g.xi2(idx).sqrt() > band {
                assert!(v.norm() < 1e-10);
            }
        }
        let m = mid_box_band_limited(g, &mut rng);
        assert!((crate::grid::lp_norm(&m, 2.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_given_seed() {
        let g = make_grid(8, 8.0).unwrap();
        let a = band_limited(g, &mut seeded_rng(11));
        let b = band_limited(g, &mut seeded_rng(11));
        assert_eq!(a, b);
    }
}
