use resolvent_core::family::seeded_rng;
use resolvent_core::free_resolvent::jump_constant as measure_jump;
use resolvent_core::sphere::{
    agmon_delta_limit, agmon_weighted_check, holder_check, holder_fit, holder_gamma,
    sphere_quadrature, weighted_resolvent_table,
};

use super::{
    check_decreasing, check_range, check_wraparound, config_err, grid_param, BumpFamily, RunContext,
};
use crate::config::Params;
use crate::error::{Context, Result};
use crate::report::{Fit, Report, Series};
use crate::row;

fn quadrature(p: &Params, m: usize) -> Result<resolvent_core::sphere::SphereQuadrature> {
    let m = p.usize("quad.nodes", m)?;
    sphere_quadrature(m).map_err(|e| config_err(format!("quad.nodes: {e}")))
}

pub fn holder(p: &Params, ctx: &RunContext) -> Result<Report> {
    let grid = grid_param(p, 32, 32.0)?;
    let fam = BumpFamily::read(p, 4, 1, (1.8, 2.2), 2.0)?;
    let ps = p.list("sweep.p", &[1.0, 1.2])?;
    let default_deltas: Vec<f64> = (0..6).map(|k| 0.1 * 0.5f64.powi(k)).collect();
    let deltas = p.list("sweep.delta", &default_deltas)?;
    let quad = quadrature(p, 256)?;
    let slack = p.f64("window.slack", 0.05)?;
    p.finish()?;
    check_range(
        "sweep.p",
        &ps,
        |x| (1.0..4.0 / 3.0).contains(&x),
        "in [1, 4/3)",
    )?;
    check_range(
        "sweep.delta",
        &deltas,
        |d| d != 0.0 && d.abs() < 0.5,
        "nonzero with |delta| < 1/2",
    )?;
    if deltas.len() < 3 {
        return Err(config_err(
            "sweep.delta needs at least three values for a fit",
        ));
    }

    let mut r = Report::new("holder", ctx.seed);
    r.axes("|delta|", "||f_hat((1+delta) .)||_{L2(S2)}");
    r.param("grid.n", grid.n());
    r.param("grid.l", grid.box_length());
    fam.record(&mut r);
    r.param("sweep.p", &ps);
    r.param("sweep.delta", &deltas);
    r.param("quad.nodes", quad.len());

    let mut rng = seeded_rng(ctx.sub_seed(3));
    let (fields, _) = fam.vanishing(grid, &mut rng)?;
    let tables = r.timed("restriction", || {
        fields
            .iter()
            .enumerate()
            .map(|(i, f)| holder_check(f, ps[0], &deltas, &quad).ctx(|| format!("member {i}")))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut min_slope = f64::INFINITY;
    for (i, t) in tables.iter().enumerate() {
        for (k, (d, v)) in t.rows.iter().enumerate() {
            let mut row = row!["member" => i, "delta" => *d, "norm" => *v];
            if k > 0 {
                row.insert("local_slope".into(), t.slopes[k - 1].into());
            }
            r.rows.push(row);
        }
        min_slope = min_slope.min(t.min_slope);
        let fit = holder_fit(t).ctx(|| format!("member {i} fit"))?;
        r.fits.push(Fit::new(&format!("member {i}"), &fit));
        r.series.push(Series::new(
            &format!("member {i}"),
            t.rows.iter().map(|(d, v)| [d.abs(), *v]).collect(),
        ));
    }
    for &pp in &ps {
        let gamma = holder_gamma(pp);
        r.verdict(
            "C3",
            &format!("min local slope, p = {pp} (gamma = {gamma:.4})"),
            min_slope,
            Some(gamma - slack),
            None,
        );
    }
    if let Some(first) = r.series.first().cloned() {
        for &pp in &ps {
            r.series.push(Series::reference(
                &format!("slope gamma(p = {pp})"),
                &first,
                holder_gamma(pp),
            ));
        }
    }
    Ok(r)
}

pub fn agmon_weighted(p: &Params, ctx: &RunContext) -> Result<Report> {
    let grid = grid_param(p, 64, 64.0)?;
    let fam = BumpFamily::read(p, 3, 1, (1.8, 2.2), 2.0)?;
    let pp = p.f64("p", 1.2)?;
    let delta = p.f64("delta", 0.1)?;
    let cdelta = p.f64("control.delta", 0.05)?;
    let default_ladder: Vec<f64> = (0..9).map(|k| 0.5 * 0.5f64.powi(k)).collect();
    let ladder = p.list("sweep.eps", &default_ladder)?;
    let quad = quadrature(p, 256)?;
    let stab = p.positive("window.stabilize", 0.05)?;
    let growth = p.positive("window.growth", 1.2)?;
    p.finish()?;
    check_decreasing("sweep.eps", &ladder)?;
    if ladder.len() < 2 {
        return Err(config_err("sweep.eps needs at least two values"));
    }
    if !(1.0..4.0 / 3.0).contains(&pp) {
        return Err(config_err(format!("p = {pp} must lie in [1, 4/3)")));
    }
    if !(delta < agmon_delta_limit(pp)) {
        return Err(config_err(format!(
            "delta = {delta} must be below 1/2 - 2/p' = {:.4}",
            agmon_delta_limit(pp)
        )));
    }

    let mut r = Report::new("agmon-weighted", ctx.seed);
    r.axes("eps", "||(1+|x|)^(delta-1/2) R0(1+i eps) f||_2");
    r.param("grid.n", grid.n());
    r.param("grid.l", grid.box_length());
    fam.record(&mut r);
    r.param("p", pp);
    r.param("delta", delta);
    r.param("control.delta", cdelta);
    r.param("sweep.eps", &ladder);

    let mut rng = seeded_rng(ctx.sub_seed(4));
    let (fields, raw) = fam.vanishing(grid, &mut rng)?;
    let min_eps = *ladder.last().expect("nonempty");
    let inputs: Vec<_> = fields.iter().chain(&raw).collect();
    check_wraparound(ctx, &grid, 1.0, min_eps, &inputs, "eps ladder")?;

    let mut worst_change = 0.0f64;
    let mut least_growth = f64::INFINITY;
    let tables = r.timed("tables", || {
        fields
            .iter()
            .zip(&raw)
            .enumerate()
            .map(|(i, (f, g))| {
                let t = agmon_weighted_check(f, pp, delta, &ladder, &quad)
                    .ctx(|| format!("member {i}"))?;
                let c =
                    weighted_resolvent_table(g, cdelta, &ladder).ctx(|| format!("control {i}"))?;
                Ok((t, c))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    for (i, (t, c)) in tables.iter().enumerate() {
        for (e, v) in &t.rows {
            r.rows.push(row!["member" => i, "input" => "vanishing", "delta" => delta, "eps" => *e, "weighted_norm" => *v]);
        }
        for (e, v) in &c.rows {
            r.rows.push(row!["member" => i, "input" => "control", "delta" => cdelta, "eps" => *e, "weighted_norm" => *v]);
        }
        worst_change = worst_change.max(t.last_change);
        least_growth = least_growth.min(c.growth);
        if i == 0 {
            r.series.push(Series::new(
                "vanishing",
                t.rows.iter().map(|(e, v)| [*e, *v]).collect(),
            ));
            r.series.push(Series::new(
                "control (not vanishing)",
                c.rows.iter().map(|(e, v)| [*e, *v]).collect(),
            ));
        }
    }
    r.verdict(
        "C4",
        "max change over the last halving, vanishing inputs",
        worst_change,
        None,
        Some(stab),
    );
    r.verdict(
        "C4",
        "min growth last/first, non-vanishing control",
        least_growth,
        Some(growth),
        None,
    );
    Ok(r)
}

/// `C(lambda)` in `jump f = C(lambda) extend(restrict f)`, measured by pairing.
pub fn jump_constant(p: &Params, ctx: &RunContext) -> Result<Report> {
    let grid = grid_param(p, 64, 64.0)?;
    let fam = BumpFamily::read(p, 3, 3, (0.8, 1.2), 3.0)?;
    let lambdas = p.list("sweep.lambda", &[1.0, 2.0])?;
    let ladder = p.list("sweep.eps", &[0.5, 0.25, 0.125, 0.0625])?;
    let quad = quadrature(p, 512)?;
    p.finish()?;
    check_decreasing("sweep.eps", &ladder)?;
    if ladder.len() < 3 {
        return Err(config_err("sweep.eps needs at least three values"));
    }
    let nyq = grid.nyquist();
    check_range(
        "sweep.lambda",
        &lambdas,
        |l| l > 0.0 && l < 0.9 * nyq,
        "in (0, 0.9 * Nyquist)",
    )?;

    let mut r = Report::new("jump-constant", ctx.seed);
    r.axes("lambda", "|C(lambda)|");
    r.param("grid.n", grid.n());
    r.param("grid.l", grid.box_length());
    fam.record(&mut r);
    r.param("sweep.lambda", &lambdas);
    r.param("sweep.eps", &ladder);
    r.note("continuum value C(lambda) = i lambda / (2 pi); eps enters as z = lambda^2 +- i eps");

    let mut rng = seeded_rng(ctx.sub_seed(12));
    let mut means = Vec::new();
    for &l in &lambdas {
        let members = fam.members(&mut rng, 1.0 / l);
        let fields: Vec<_> = members
            .iter()
            .map(|b| resolvent_core::family::bump_field(grid, b))
            .collect();
        let refs: Vec<_> = fields.iter().collect();
        check_wraparound(
            ctx,
            &grid,
            l,
            *ladder.last().expect("nonempty"),
            &refs,
            &format!("lambda = {l}"),
        )?;
        let mut sum = 0.0;
        for (i, f) in fields.iter().enumerate() {
            let c = r.timed(&format!("lambda {l} member {i}"), || {
                measure_jump(f, l, &ladder, &quad).ctx(|| format!("lambda = {l}, member {i}"))
            })?;
            let expected = l / (2.0 * std::f64::consts::PI);
            r.rows.push(row![
                "lambda" => l, "member" => i, "re" => c.re, "im" => c.im,
                "relative_deviation" => (c - resolvent_core::C64::new(0.0, expected)).norm() / expected,
            ]);
            sum += c.norm();
        }
        means.push([l, sum / fields.len() as f64]);
    }
    if means.len() >= 2 {
        let s = Series::new("mean |C(lambda)|", means.clone());
        let reference = Series::new(
            "lambda / (2 pi)",
            means
                .iter()
                .map(|m| [m[0], m[0] / (2.0 * std::f64::consts::PI)])
                .collect(),
        );
        r.series.push(s);
        r.series.push(reference);
    }
    Ok(r)
}
