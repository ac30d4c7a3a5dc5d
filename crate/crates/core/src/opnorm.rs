//! Lower bounds for `L^p -> L^q` operator norms by nonlinear power iteration.

use crate::error::{Error, Result};
use crate::family::{band_limited, seeded_rng};
use crate::grid::{lp_norm, Field, Grid3, C64};

/// A linear operator on position-domain fields together with its adjoint
/// for the pairing `h^3 sum f conj(g)`.
pub trait LinearOperator: Sync {
    fn grid(&self) -> Grid3;
    fn apply(&self, f: &Field) -> Result<Field>;
    fn apply_adjoint(&self, f: &Field) -> Result<Field>;
}

/// Operator built from two closures.
pub struct FnOperator<A, B> {
    grid: Grid3,
    forward: A,
    adjoint: B,
}

impl<A, B> FnOperator<A, B>
where
    A: Fn(&Field) -> Result<Field> + Sync,
    B: Fn(&Field) -> Result<Field> + Sync,
{
    pub fn new(grid: Grid3, forward: A, adjoint: B) -> Self {
        FnOperator {
            grid,
            forward,
            adjoint,
        }
    }
}

impl<A, B> LinearOperator for FnOperator<A, B>
where
    A: Fn(&Field) -> Result<Field> + Sync,
    B: Fn(&Field) -> Result<Field> + Sync,
{
    fn grid(&self) -> Grid3 {
        self.grid
    }
    fn apply(&self, f: &Field) -> Result<Field> {
        (self.forward)(f)
    }
    fn apply_adjoint(&self, f: &Field) -> Result<Field> {
        (self.adjoint)(f)
    }
}

#[derive(Debug, Clone)]
pub struct OpNormEstimate {
    pub p: f64,
    pub q: f64,
    pub lower_bound: f64,
    pub witness: Field,
    pub iterations: usize,
    /// Best-so-far ratio after each iteration of the winning trial.
    pub history: Vec<f64>,
}

fn phase(v: C64) -> C64 {
    let r = v.norm();
    if r == 0.0 {
        C64::new(0.0, 0.0)
    } else {
        v / r
    }
}

/// `|g|^(e) phase(g)` pointwise.
pub fn duality_map(g: &Field, e: f64) -> Field {
    g.map(|v| phase(v) * v.norm().powf(e))
}

fn normalize_lp(f: &Field, p: f64) -> Result<Option<Field>> {
    let n = lp_norm(f, p)?;
    if n == 0.0 || !n.is_finite() {
        return Ok(None);
    }
    Ok(Some(f.scale_real(1.0 / n)))
}

fn conjugate_exponent(p: f64) -> f64 {
    p / (p - 1.0)
}

/// Relative improvement below which a trial counts as converged.
const STALL: f64 = 1e-12;

/// Runs `trials` independent iterations from random band-limited starts and
/// returns the best ratio `||T f||_q / ||f||_p` found.
pub fn estimate_opnorm(
    op: &dyn LinearOperator,
    p: f64,
    q: f64,
    trials: usize,
    iters: usize,
    seed: u64,
) -> Result<OpNormEstimate> {
    let mut rng = seeded_rng(seed);
    let starts: Vec<Field> = (0..trials.max(1))
        .map(|_| band_limited(op.grid(), &mut rng))
        .collect();
    estimate_opnorm_from(op, p, q, starts, iters)
}

/// Same as [`estimate_opnorm`] with caller-supplied starting fields.
pub fn estimate_opnorm_from(
    op: &dyn LinearOperator,
    p: f64,
    q: f64,
    starts: Vec<Field>,
    iters: usize,
) -> Result<OpNormEstimate> {
    for e in [p, q] {
        if !(e > 1.0) || !e.is_finite() {
            return Err(Error::InvalidExponent(e));
        }
    }
    if starts.is_empty() {
        return Err(Error::InvalidArgument("no starting fields".into()));
    }
    let pp = conjugate_exponent(p);
    let mut best: Option<OpNormEstimate> = None;
    for start in starts {
        let Some(mut f) = normalize_lp(&start, p)? else {
            continue;
        };
        let mut best_ratio = 0.0f64;
        let mut witness = f.clone();
        let mut history = Vec::with_capacity(iters);
        let mut used = 0;
        for it in 0..iters.max(1) {
            used = it + 1;
            let g = op.apply(&f)?;
            let ratio = lp_norm(&g, q)? / lp_norm(&f, p)?;
            let improved = ratio > best_ratio * (1.0 + STALL);
            if ratio > best_ratio {
                best_ratio = ratio;
                witness = f.clone();
            }
            history.push(best_ratio);
            if it > 0 && !improved {
                break;
            }
            let h = duality_map(&g, q - 1.0);
            let k = op.apply_adjoint(&h)?;
            match normalize_lp(&duality_map(&k, pp - 1.0), p)? {
                Some(next) => f = next,
                None => break,
            }
        }
        let better = best.as_ref().is_none_or(|b| best_ratio > b.lower_bound);
        if better {
            best = Some(OpNormEstimate {
                p,
                q,
                lower_bound: best_ratio,
                witness,
                iterations: used,
                history,
            });
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("all starting fields vanish".into()))
}

/// Standard power iteration for the `L^2 -> L^2` norm (on `T*T`).
pub fn estimate_l2_norm(
    op: &dyn LinearOperator,
    start: Field,
    iters: usize,
) -> Result<OpNormEstimate> {
    estimate_opnorm_from(op, 2.0, 2.0, vec![start], iters)
}
