use resolvent_core::family::{mid_box_band_limited, seeded_rng};
use resolvent_core::free_resolvent::{
    DirectOptions, DirectOracle, FreeResolvent, SpectralParam, DIRECT_MAX_N,
};
use resolvent_core::grid::lp_norm;
use resolvent_core::numerics::{fit_power_law, max_min_ratio};
use resolvent_core::opnorm::estimate_opnorm;

use super::{check_range, check_wraparound, checked_grid, config_err, grid_param, RunContext};
use crate::config::Params;
use crate::error::{Context, Result};
use crate::report::{Fit, Report, Series};
use crate::row;

/// Multiplier vs direct kernel sum, then `4/3 -> 4` and `6/5 -> 6` norm
/// lower bounds of `R0(lambda^2 (1 + i eta))` over a lambda sweep.
pub fn free_scaling(p: &Params, ctx: &RunContext) -> Result<Report> {
    let on = p.usize("oracle.n", 16)?;
    let ol = p.positive("oracle.l", 16.0)?;
    let olambda = p.positive("oracle.lambda", 1.0)?;
    let oeps = p.positive("oracle.eps", 0.5)?;
    let ocount = p.count("oracle.count", 10)?;
    let otol = p.positive("window.oracle", 1e-3)?;
    let grid = grid_param(p, 64, 16.0)?;
    let lambdas = p.list("sweep.lambda", &[1.0, 2.0, 4.0, 8.0])?;
    let eta = p.positive("eps.eta", 0.25)?;
    let trials = p.count("trials", 2)?;
    let iters = p.count("iterations", 30)?;
    let window = p.window("window.exponent", (-0.65, -0.35))?;
    let hls = p.positive("window.hls_ratio", 2.0)?;
    p.finish()?;

    let ogrid = checked_grid(on, ol, "oracle grid")?;
    if on > DIRECT_MAX_N {
        return Err(config_err(format!(
            "oracle.n = {on} exceeds the direct-sum limit {DIRECT_MAX_N}"
        )));
    }
    let nyq = grid.nyquist();
    check_range(
        "sweep.lambda",
        &lambdas,
        |l| l > 0.0 && l < 0.9 * nyq,
        "in (0, 0.9 * Nyquist)",
    )?;
    if lambdas.len() < 3 {
        return Err(config_err(
            "sweep.lambda needs at least three values for a fit",
        ));
    }

    let mut r = Report::new("free-scaling", ctx.seed);
    r.axes("lambda", "norm lower bound");
    r.param("oracle.n", on);
    r.param("oracle.l", ol);
    r.param("oracle.lambda", olambda);
    r.param("oracle.eps", oeps);
    r.param("oracle.count", ocount);
    r.param("grid.n", grid.n());
    r.param("grid.l", grid.box_length());
    r.param("sweep.lambda", &lambdas);
    r.param("eps.eta", eta);
    r.param("trials", trials);
    r.param("iterations", iters);

    if ctx.wants("C1") {
        let mut rng = seeded_rng(ctx.sub_seed(1));
        let fields: Vec<_> = (0..ocount)
            .map(|_| mid_box_band_limited(ogrid, &mut rng))
            .collect();
        let refs: Vec<_> = fields.iter().collect();
        check_wraparound(ctx, &ogrid, olambda, oeps, &refs, "oracle")?;
        let z = SpectralParam::upper(olambda, oeps).ctx(|| "oracle energy".into())?;
        let errors = r.timed("oracle", || {
            let oracle = DirectOracle::new(ogrid, &z, DirectOptions::periodic_corrected())
                .ctx(|| "direct oracle".into())?;
            fields
                .iter()
                .map(|f| {
                    let a = resolvent_core::free_resolvent::apply_free_resolvent(f, &z)
                        .ctx(|| "multiplier".into())?;
                    let b = oracle.apply(f).ctx(|| "direct sum".into())?;
                    let d = a.sub(&b).ctx(|| "difference".into())?;
                    Ok(lp_norm(&d, 2.0).ctx(|| "norm".into())?
                        / lp_norm(&b, 2.0).ctx(|| "norm".into())?)
                })
                .collect::<Result<Vec<f64>>>()
        })?;
        for (i, e) in errors.iter().enumerate() {
            r.rows
                .push(row!["part" => "oracle", "member" => i, "relative_l2_error" => *e]);
        }
        let worst = errors.iter().cloned().fold(0.0, f64::max);
        r.verdict(
            "C1",
            "max relative L2 error, multiplier vs direct sum",
            worst,
            None,
            Some(otol),
        );
    }

    if ctx.wants("C2") {
        for &l in &lambdas {
            check_wraparound(ctx, &grid, l, eta * l * l, &[], &format!("lambda = {l}"))?;
        }
        let mut s43 = Vec::new();
        let mut s65 = Vec::new();
        for (k, &l) in lambdas.iter().enumerate() {
            let eps = eta * l * l;
            let z = SpectralParam::upper(l, eps).ctx(|| format!("lambda = {l}"))?;
            let op = FreeResolvent::new(grid, &z).ctx(|| format!("lambda = {l}"))?;
            let seed = ctx.sub_seed(100 + k as u64);
            let (a, b) = r.timed(&format!("lambda {l}"), || {
                let a = estimate_opnorm(&op, 4.0 / 3.0, 4.0, trials, iters, seed)
                    .ctx(|| "4/3 -> 4".into())?;
                let b = estimate_opnorm(&op, 1.2, 6.0, trials, iters, seed)
                    .ctx(|| "6/5 -> 6".into())?;
                Ok((a, b))
            })?;
            for (name, e) in [("4/3->4", &a), ("6/5->6", &b)] {
                r.rows.push(row![
                    "part" => "scaling", "norm" => name, "lambda" => l, "eps" => eps,
                    "lower_bound" => e.lower_bound, "iterations" => e.iterations,
                ]);
            }
            s43.push((l, a.lower_bound));
            s65.push((l, b.lower_bound));
        }
        let fit = fit_power_law(&s43).ctx(|| "power-law fit".into())?;
        r.fits.push(Fit::new("4/3->4 lower bound vs lambda", &fit));
        r.verdict(
            "C2",
            "fitted exponent of the 4/3->4 norm",
            fit.exponent,
            Some(window.0),
            Some(window.1),
        );
        let v65: Vec<f64> = s65.iter().map(|s| s.1).collect();
        let ratio = max_min_ratio(&v65);
        r.verdict(
            "C2",
            "max/min of the 6/5->6 norm over lambda",
            ratio,
            None,
            Some(hls),
        );
        let m = Series::new("4/3->4", s43.iter().map(|s| [s.0, s.1]).collect());
        let reference = Series::reference("reference slope -1/2", &m, -0.5);
        r.series.push(m);
        r.series.push(Series::new(
            "6/5->6",
            s65.iter().map(|s| [s.0, s.1]).collect(),
        ));
        r.series.push(reference);
    }
    Ok(r)
}
