//! The twelve experiments. Each reads its parameters, validates them against
//! the module preconditions before any heavy work, then records a [`Report`].

mod caps;
mod endpoint;
mod free;
mod perturbed;
mod restriction;

use std::collections::BTreeSet;

use rand::Rng;
use resolvent_core::endpoint::{mid_box_leakage, MID_BOX_LEAKAGE};
use resolvent_core::family::{bump_field, random_bumps, Bump, TestRng};
use resolvent_core::sphere::vanishing_testfn;
use resolvent_core::{make_grid, Field, Grid3};

use crate::config::{ExperimentId, Params};
use crate::error::{CliError, Context, Result};
use crate::report::Report;

#[derive(Debug, Clone, Default)]
pub struct RunContext {
    pub seed: u64,
    pub allow_wraparound: bool,
    /// Criteria to evaluate; `None` means every part of the experiment.
    pub criteria: Option<BTreeSet<String>>,
}

impl RunContext {
    pub fn new(seed: u64) -> Self {
        RunContext {
            seed,
            ..Default::default()
        }
    }

    pub fn wants(&self, criterion: &str) -> bool {
        self.criteria.as_ref().is_none_or(|c| c.contains(criterion))
    }

    /// Independent stream per purpose, fixed by the run seed.
    pub fn sub_seed(&self, tag: u64) -> u64 {
        self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ tag.wrapping_mul(0xBF58_476D_1CE4_E5B9)
    }
}

/// Criteria each experiment can produce verdicts for.
pub fn criteria_of(id: ExperimentId) -> &'static [&'static str] {
    match id {
        ExperimentId::FreeScaling => &["C1", "C2"],
        ExperimentId::Holder => &["C3"],
        ExperimentId::AgmonWeighted => &["C4"],
        ExperimentId::Endpoint => &["C5"],
        ExperimentId::Jean => &["C6"],
        ExperimentId::SquareFunction => &["C7"],
        ExperimentId::Localized => &["C8"],
        ExperimentId::Bilinear | ExperimentId::LocalExtension => &["C9"],
        ExperimentId::ImagPairing | ExperimentId::PerturbedScaling => &["C10"],
        ExperimentId::JumpConstant => &[],
    }
}

pub fn run_experiment(id: ExperimentId, p: &Params, ctx: &RunContext) -> Result<Report> {
    let mut report = match id {
        ExperimentId::FreeScaling => free::free_scaling(p, ctx),
        ExperimentId::Holder => restriction::holder(p, ctx),
        ExperimentId::AgmonWeighted => restriction::agmon_weighted(p, ctx),
        ExperimentId::JumpConstant => restriction::jump_constant(p, ctx),
        ExperimentId::Endpoint => endpoint::endpoint(p, ctx),
        ExperimentId::Jean => caps::jean(p, ctx),
        ExperimentId::SquareFunction => caps::square_function(p, ctx),
        ExperimentId::Localized => caps::localized(p, ctx),
        ExperimentId::Bilinear => caps::bilinear(p, ctx),
        ExperimentId::LocalExtension => caps::local_extension(p, ctx),
        ExperimentId::ImagPairing => perturbed::imag_pairing(p, ctx),
        ExperimentId::PerturbedScaling => perturbed::perturbed_scaling(p, ctx),
    }?;
    report.param("allow_wraparound", ctx.allow_wraparound);
    Ok(report)
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// `grid.n` and `grid.l` with defaults.
fn grid_param(p: &Params, n: usize, l: f64) -> Result<Grid3> {
    let n = p.usize("grid.n", n)?;
    let l = p.positive("grid.l", l)?;
    make_grid(n, l).map_err(|e| config_err(format!("grid: {e}")))
}

fn checked_grid(n: usize, l: f64, what: &str) -> Result<Grid3> {
    make_grid(n, l).map_err(|e| config_err(format!("{what}: {e}")))
}

/// Continuum claims need `eps >= 4 lambda / L` unless every input is
/// supported in the middle half of the box.
fn check_wraparound(
    ctx: &RunContext,
    grid: &Grid3,
    lambda: f64,
    eps: f64,
    inputs: &[&Field],
    what: &str,
) -> Result<()> {
    if ctx.allow_wraparound || eps >= 4.0 * lambda / grid.box_length() * (1.0 - 1e-12) {
        return Ok(());
    }
    let worst = inputs
        .iter()
        .map(|f| mid_box_leakage(f))
        .fold(0.0, f64::max);
    if !inputs.is_empty() && worst <= MID_BOX_LEAKAGE {
        return Ok(());
    }
    Err(CliError::Wraparound(format!(
        "{what}: eps = {eps} < 4 lambda / L = {:.4} and the inputs are not confined to the middle half of the box",
        4.0 * lambda / grid.box_length()
    )))
}

fn check_range(name: &str, values: &[f64], ok: impl Fn(f64) -> bool, want: &str) -> Result<()> {
    match values.iter().find(|&&v| !ok(v)) {
        Some(v) => Err(config_err(format!("{name}: {v} is not {want}"))),
        None => Ok(()),
    }
}

fn check_decreasing(name: &str, values: &[f64]) -> Result<()> {
    if values.windows(2).any(|w| w[1] >= w[0]) || values.iter().any(|v| !(*v > 0.0)) {
        return Err(config_err(format!(
            "{name} must be positive and strictly decreasing"
        )));
    }
    Ok(())
}

/// Random Gaussian sums with the given member shape.
#[derive(Debug, Clone, Copy)]
struct BumpFamily {
    count: usize,
    bumps: usize,
    sigma: (f64, f64),
    spread: f64,
}

impl BumpFamily {
    fn read(
        p: &Params,
        count: usize,
        bumps: usize,
        sigma: (f64, f64),
        spread: f64,
    ) -> Result<Self> {
        let f = BumpFamily {
            count: p.count("family.count", count)?,
            bumps: p.count("family.bumps", bumps)?,
            sigma: p.window("family.sigma", sigma)?,
            spread: p.f64("family.spread", spread)?,
        };
        if !(f.sigma.0 > 0.0) || f.spread < 0.0 {
            return Err(config_err(
                "family.sigma must be positive and family.spread nonnegative",
            ));
        }
        Ok(f)
    }

    fn record(&self, r: &mut Report) {
        r.param("family.count", self.count);
        r.param("family.bumps", self.bumps);
        r.param("family.sigma", [self.sigma.0, self.sigma.1]);
        r.param("family.spread", self.spread);
    }

    fn members(&self, rng: &mut TestRng, scale: f64) -> Vec<Vec<Bump>> {
        (0..self.count)
            .map(|_| {
                random_bumps(
                    self.bumps,
                    (self.sigma.0 * scale, self.sigma.1 * scale),
                    self.spread,
                    rng,
                )
            })
            .collect()
    }

    fn fields(&self, grid: Grid3, rng: &mut TestRng) -> Vec<Field> {
        self.members(rng, 1.0)
            .iter()
            .map(|b| bump_field(grid, b))
            .collect()
    }

    /// `(-Delta - 1) g` for each member `g`.
    fn vanishing(&self, grid: Grid3, rng: &mut TestRng) -> Result<(Vec<Field>, Vec<Field>)> {
        let raw = self.fields(grid, rng);
        let van = raw
            .iter()
            .map(|g| vanishing_testfn(g).ctx(|| "vanishing family".into()))
            .collect::<Result<_>>()?;
        Ok((van, raw))
    }
}

fn random_in(rng: &mut TestRng, range: (f64, f64)) -> f64 {
    if range.0 == range.1 {
        range.0
    } else {
        rng.random_range(range.0..range.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ConfigFile;

    #[test]
    fn unknown_keys_rejected_before_work() {
        for id in ExperimentId::ALL {
            let p = ConfigFile::parse("bogus = 1\n").unwrap().without(&[]);
            let e = run_experiment(id, &p, &RunContext::new(1)).unwrap_err();
            assert_eq!(e.exit_code(), 2, "{id}: {e}");
            assert!(e.to_string().contains("bogus"), "{id}: {e}");
        }
    }

    #[test]
    fn empty_sweeps_rejected() {
        for (id, key) in [
            (ExperimentId::FreeScaling, "sweep.lambda"),
            (ExperimentId::Holder, "sweep.delta"),
            (ExperimentId::Jean, "sweep.r"),
            (ExperimentId::Bilinear, "sweep.v"),
            (ExperimentId::Endpoint, "sweep.eps"),
        ] {
            let p = ConfigFile::parse(&format!("{key} = []\n"))
                .unwrap()
                .without(&[]);
            let e = run_experiment(id, &p, &RunContext::new(1)).unwrap_err();
            assert!(e.to_string().contains("empty"), "{id}: {e}");
        }
    }

    #[test]
    fn wraparound_rule() {
        let g = make_grid(16, 16.0).unwrap();
        let ctx = RunContext::new(1);
        assert!(check_wraparound(&ctx, &g, 1.0, 0.25, &[], "x").is_ok());
        assert!(matches!(
            check_wraparound(&ctx, &g, 1.0, 0.1, &[], "x"),
            Err(CliError::Wraparound(_))
        ));
        let mid = resolvent_core::family::gaussian_bump(g, [0.0; 3], 0.5);
        assert!(check_wraparound(&ctx, &g, 1.0, 0.1, &[&mid], "x").is_ok());
        let wide = resolvent_core::family::gaussian_bump(g, [0.0; 3], 3.0);
        assert!(check_wraparound(&ctx, &g, 1.0, 0.1, &[&wide], "x").is_err());
        let allow = RunContext {
            allow_wraparound: true,
            ..ctx
        };
        assert!(check_wraparound(&allow, &g, 1.0, 0.1, &[&wide], "x").is_ok());
    }

    #[test]
    fn sub_seeds_differ_by_tag() {
        let c = RunContext::new(5);
        assert_ne!(c.sub_seed(1), c.sub_seed(2));
        assert_eq!(c.sub_seed(1), RunContext::new(5).sub_seed(1));
    }
}
