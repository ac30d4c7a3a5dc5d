use resolvent_core::caps::{
    discrete_extension_check, knapp_field, local_bilinear_norm, local_extension_norm_check,
    localized_resolvent_norm, make_caps, random_phases, PacketSum,
};
use resolvent_core::family::{
    bump_field, gaussian_bump, mid_box_band_limited, random_bumps, seeded_rng,
};
use resolvent_core::grid::lp_norm;
use resolvent_core::numerics::{fit_power_law, max_min_ratio, normalize3};
use resolvent_core::C64;

use super::{check_range, checked_grid, config_err, grid_param, RunContext};
use crate::config::Params;
use crate::error::{Context, Result};
use crate::report::{Fit, Report, Series};
use crate::row;

fn scales(p: &Params, default: &[f64], min: f64) -> Result<Vec<f64>> {
    let rs = p.list("sweep.r", default)?;
    check_range(
        "sweep.r",
        &rs,
        |r| r >= min && r.is_finite(),
        &format!("a finite value >= {min}"),
    )?;
    if rs.len() < 2 {
        return Err(config_err("sweep.r needs at least two values"));
    }
    Ok(rs)
}

fn direction(p: &Params, key: &str, default: [f64; 3]) -> Result<[f64; 3]> {
    let d = p.list(key, &default)?;
    if d.len() != 3 || d.iter().all(|c| *c == 0.0) {
        return Err(config_err(format!("{key} must be a nonzero 3-vector")));
    }
    Ok(normalize3([d[0], d[1], d[2]]))
}

pub fn jean(p: &Params, ctx: &RunContext) -> Result<Report> {
    let rs = scales(p, &[16.0, 64.0, 256.0], 4.0)?;
    let trials = p.count("trials", 100)?;
    let stable = p.positive("window.stability", 2.0)?;
    let ones = p.positive("window.all_ones", 0.25)?;
    p.finish()?;

    let mut r = Report::new("jean", ctx.seed);
    r.axes("R", "||sum a e^{ix.xi}||_{L4(Q)} / (R^{1/2} |a|_2)");
    r.param("sweep.r", &rs);
    r.param("trials", trials);
    let mut maxes = Vec::new();
    let mut worst_ones = f64::INFINITY;
    let mut all_ones = Vec::new();
    for (k, &rr) in rs.iter().enumerate() {
        let seed = ctx.sub_seed(600 + k as u64);
        let d = r.timed(&format!("R {rr}"), || {
            discrete_extension_check(rr, trials, seed).ctx(|| format!("R = {rr}"))
        })?;
        let mean = d.trial_ratios.iter().sum::<f64>() / d.trial_ratios.len() as f64;
        r.rows.push(row![
            "r" => rr, "nodes" => d.nodes, "max_ratio" => d.max_ratio,
            "all_ones_ratio" => d.all_ones_ratio, "mean_trial_ratio" => mean,
        ]);
        maxes.push([rr, d.max_ratio]);
        all_ones.push([rr, d.all_ones_ratio]);
        worst_ones = worst_ones.min(d.all_ones_ratio / d.max_ratio);
    }
    let v: Vec<f64> = maxes.iter().map(|m| m[1]).collect();
    r.verdict(
        "C6",
        "max/min over R of the max ratio",
        max_min_ratio(&v),
        None,
        Some(stable),
    );
    r.verdict(
        "C6",
        "min over R of all-ones ratio / max ratio",
        worst_ones,
        Some(ones),
        None,
    );
    r.series.push(Series::new("max ratio", maxes));
    r.series.push(Series::new("all-ones", all_ones));
    Ok(r)
}

pub fn square_function(p: &Params, ctx: &RunContext) -> Result<Report> {
    let rs = scales(p, &[16.0, 64.0, 256.0], 1.0)?;
    let samples = p.count("samples", 4000)?;
    let kappa = p.positive("kappa", 0.5)?;
    let sets = p.usize("random_sets", 4)?;
    let stable = p.positive("window.stability", 2.0)?;
    p.finish()?;

    let mut r = Report::new("square-function", ctx.seed);
    r.axes("R", "measured constant");
    r.param("sweep.r", &rs);
    r.param("samples", samples);
    r.param("kappa", kappa);
    r.param("random_sets", sets);
    r.note("wave packets on every cap; all-ones coefficients plus random phases; Monte Carlo with a fixed seed");

    let mut rng = seeded_rng(ctx.sub_seed(7));
    let mut g2 = Vec::new();
    let mut f2 = Vec::new();
    for (k, &rr) in rs.iter().enumerate() {
        let caps = make_caps(rr).ctx(|| format!("caps at R = {rr}"))?;
        let mut coeff_sets = vec![("all-ones".to_string(), vec![C64::new(1.0, 0.0); caps.len()])];
        for s in 0..sets {
            coeff_sets.push((format!("random {s}"), random_phases(caps.len(), &mut rng)));
        }
        let (mut cg, mut cf) = (0.0f64, 0.0f64);
        for (j, (name, coeffs)) in coeff_sets.into_iter().enumerate() {
            let packets =
                PacketSum::new(&caps, coeffs, kappa).ctx(|| format!("packets at R = {rr}"))?;
            let seed = ctx.sub_seed(700 + 16 * k as u64 + j as u64);
            let sf = r.timed(&format!("R {rr} {name}"), || {
                Ok(packets.square_function(samples, seed))
            })?;
            r.rows.push(row![
                "r" => rr, "coefficients" => name, "caps" => caps.len(),
                "lhs_g2" => sf.lhs_g2, "rhs_g2" => sf.rhs_g2, "ratio_g2" => sf.ratio_g2(),
                "lhs_f2" => sf.lhs_f2, "rhs_f2" => sf.rhs_f2, "ratio_f2" => sf.ratio_f2(),
            ]);
            cg = cg.max(sf.ratio_g2());
            cf = cf.max(sf.ratio_f2());
        }
        g2.push([rr, cg]);
        f2.push([rr, cf]);
    }
    let vg: Vec<f64> = g2.iter().map(|x| x[1]).collect();
    let vf: Vec<f64> = f2.iter().map(|x| x[1]).collect();
    r.verdict(
        "C7",
        "max/min over R of the g2 constant",
        max_min_ratio(&vg),
        None,
        Some(stable),
    );
    r.verdict(
        "C7",
        "max/min over R of the f2 constant",
        max_min_ratio(&vf),
        None,
        Some(stable),
    );
    r.series.push(Series::new("g2 constant", g2));
    r.series.push(Series::new("f2 constant", f2));
    Ok(r)
}

/// `||1_{|x|<R} R0(1 + i eps) f||_2 / ||f||_{4/3}` on a box `L = box_factor R`
/// with fixed spacing, for Knapp tubes and random fields.
pub fn localized(p: &Params, ctx: &RunContext) -> Result<Report> {
    let rs = scales(p, &[8.0, 16.0, 32.0, 64.0], 1.0)?;
    let spacing = p.positive("grid.h", 1.0)?;
    let box_factor = p.positive("box_factor", 4.0)?;
    let eps_scale = p.positive("eps.scale", 4.0)?;
    let dir = direction(p, "knapp.direction", [1.0, 2.0, 3.0])?;
    let count = p.usize("random.count", 3)?;
    let knapp_window = p.window("window.knapp", (0.35, 0.675))?;
    let random_max = p.f64("window.random", 0.675)?;
    p.finish()?;
    if rs.len() < 3 {
        return Err(config_err("sweep.r needs at least three values for a fit"));
    }
    if box_factor < 4.0 {
        return Err(config_err(
            "box_factor must be at least 4 so the ball and tube fit",
        ));
    }
    if eps_scale < 4.0 {
        return Err(config_err("eps.scale below 4 violates eps >= 4/L"));
    }
    let grids = rs
        .iter()
        .map(|&rr| {
            let l = box_factor * rr;
            let n = (l / spacing).round() as usize;
            checked_grid(n, l, &format!("grid for R = {rr}"))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut r = Report::new("localized", ctx.seed);
    r.axes("R", "||1_{|x|<R} R0 f||_2 / ||f||_{4/3}");
    r.param("sweep.r", &rs);
    r.param("grid.h", spacing);
    r.param("box_factor", box_factor);
    r.param("eps.scale", eps_scale);
    r.param("knapp.direction", dir);
    r.param("random.count", count);

    let mut knapp = Vec::new();
    let mut random: Vec<Vec<[f64; 2]>> = vec![Vec::new(); count];
    for (k, (&rr, grid)) in rs.iter().zip(&grids).enumerate() {
        let eps = eps_scale / grid.box_length();
        let f = knapp_field(rr, dir, *grid).ctx(|| format!("Knapp field at R = {rr}"))?;
        let v = r.timed(&format!("R {rr} knapp"), || {
            Ok(
                localized_resolvent_norm(&f, rr, eps).ctx(|| format!("R = {rr}"))?
                    / lp_norm(&f, 4.0 / 3.0).ctx(|| "norm".into())?,
            )
        })?;
        drop(f);
        r.rows.push(
            row!["r" => rr, "n" => grid.n(), "eps" => eps, "family" => "knapp", "ratio" => v],
        );
        knapp.push([rr, v]);
        let mut rng = seeded_rng(ctx.sub_seed(800 + k as u64));
        for (j, s) in random.iter_mut().enumerate() {
            let f = mid_box_band_limited(*grid, &mut rng);
            let v = r.timed(&format!("R {rr} random {j}"), || {
                Ok(
                    localized_resolvent_norm(&f, rr, eps).ctx(|| format!("R = {rr}"))?
                        / lp_norm(&f, 4.0 / 3.0).ctx(|| "norm".into())?,
                )
            })?;
            r.rows.push(row!["r" => rr, "n" => grid.n(), "eps" => eps, "family" => format!("random {j}"), "ratio" => v]);
            s.push([rr, v]);
        }
    }
    let kfit = fit_power_law(&knapp.iter().map(|x| (x[0], x[1])).collect::<Vec<_>>())
        .ctx(|| "Knapp fit".into())?;
    r.fits.push(Fit::new("knapp", &kfit));
    r.verdict(
        "C8",
        "Knapp-family fitted exponent",
        kfit.exponent,
        Some(knapp_window.0),
        Some(knapp_window.1),
    );
    let mut worst = f64::NEG_INFINITY;
    for (j, s) in random.iter().enumerate() {
        let fit = fit_power_law(&s.iter().map(|x| (x[0], x[1])).collect::<Vec<_>>())
            .ctx(|| "random fit".into())?;
        r.fits.push(Fit::new(&format!("random {j}"), &fit));
        worst = worst.max(fit.exponent);
    }
    if count > 0 {
        r.verdict(
            "C8",
            "max random-family fitted exponent",
            worst,
            None,
            Some(random_max),
        );
    }
    let ks = Series::new("knapp", knapp);
    r.series.push(Series::reference("slope 1/2", &ks, 0.5));
    r.series.push(Series::reference("slope 5/8", &ks, 0.625));
    r.series.insert(0, ks);
    for (j, s) in random.into_iter().enumerate() {
        r.series.push(Series::new(&format!("random {j}"), s));
    }
    Ok(r)
}

pub fn bilinear(p: &Params, ctx: &RunContext) -> Result<Report> {
    let grid = grid_param(p, 32, 32.0)?;
    let rr = p.positive("r", grid.box_length() / 8.0)?;
    let multiples = p.list("sweep.v", &[0.0, 1.0, 2.0, 4.0])?;
    let dir = direction(p, "v.direction", [1.0, 1.0, 1.0])?;
    let eps = p.positive("eps", 4.0 / grid.box_length())?;
    let iters = p.count("iterations", 40)?;
    let window = p.window("window.exponent", (-1.3, -0.7))?;
    p.finish()?;
    check_range("sweep.v", &multiples, |m| m >= 0.0, "nonnegative")?;
    if multiples.len() < 3 {
        return Err(config_err("sweep.v needs at least three values for a fit"));
    }
    if eps < 4.0 / grid.box_length() * (1.0 - 1e-12) {
        return Err(config_err(format!("eps = {eps} is below 4/L")));
    }

    let mut r = Report::new("bilinear", ctx.seed);
    r.axes("1 + |v|/R", "||1_B(0) R0 1_B(v)||_{2->2}");
    r.param("grid.n", grid.n());
    r.param("grid.l", grid.box_length());
    r.param("r", rr);
    r.param("sweep.v", &multiples);
    r.param("v.direction", dir);
    r.param("eps", eps);
    r.param("iterations", iters);

    let mut pts = Vec::new();
    for (k, &m) in multiples.iter().enumerate() {
        let v = dir.map(|c| c * m * rr);
        let seed = ctx.sub_seed(900 + k as u64);
        let e = r.timed(&format!("|v| = {m} R"), || {
            local_bilinear_norm(rr, v, eps, grid, iters, seed).ctx(|| format!("|v| = {m} R"))
        })?;
        r.rows.push(row![
            "v_over_r" => m, "norm" => e.lower_bound, "norm_over_r" => e.lower_bound / rr,
            "iterations" => e.iterations,
        ]);
        pts.push([1.0 + m, e.lower_bound]);
    }
    let fit = fit_power_law(&pts.iter().map(|x| (x[0], x[1])).collect::<Vec<_>>())
        .ctx(|| "decay fit".into())?;
    r.fits.push(Fit::new("norm vs 1 + |v|/R", &fit));
    r.verdict(
        "C9",
        "decay exponent in 1 + |v|/R",
        fit.exponent,
        Some(window.0),
        Some(window.1),
    );
    let s = Series::new("measured", pts);
    let reference = Series::reference("slope -1", &s, -1.0);
    r.series.push(s);
    r.series.push(reference);
    Ok(r)
}

pub fn local_extension(p: &Params, ctx: &RunContext) -> Result<Report> {
    let grid = grid_param(p, 32, 32.0)?;
    let rs = scales(p, &[8.0, 16.0, 32.0], 1.0)?;
    let radial = p.positive("radial.sigma", 1.0)?;
    let count = p.usize("random.count", 4)?;
    let bumps = p.count("random.bumps", 3)?;
    let widths = p.window("random.sigma", (0.8, 1.2))?;
    let spread = p.f64("random.spread", 2.0)?;
    let stable = p.positive("window.stability", 2.0)?;
    p.finish()?;
    if !(widths.0 > 0.0) || spread < 0.0 {
        return Err(config_err(
            "random.sigma must be positive and random.spread nonnegative",
        ));
    }

    let mut r = Report::new("local-extension", ctx.seed);
    r.axes("R", "||1_{|x|<R} E(f_hat|S2)||_2 / (R^{1/2} ||f||_{4/3})");
    r.param("grid.n", grid.n());
    r.param("grid.l", grid.box_length());
    r.param("sweep.r", &rs);
    r.param("radial.sigma", radial);
    r.param("random.count", count);
    r.param("random.bumps", bumps);
    r.param("random.sigma", [widths.0, widths.1]);
    r.param("random.spread", spread);
    r.note("the ball integral of the extension is evaluated exactly, so R may exceed L/4");

    let mut rng = seeded_rng(ctx.sub_seed(10));
    let mut fields = vec![gaussian_bump(grid, [0.0; 3], radial)];
    for _ in 0..count {
        fields.push(bump_field(
            grid,
            &random_bumps(bumps, widths, spread, &mut rng),
        ));
    }
    let mut pts = Vec::new();
    for &rr in &rs {
        let m = r.timed(&format!("R {rr}"), || {
            local_extension_norm_check(&fields, rr).ctx(|| format!("R = {rr}"))
        })?;
        r.rows.push(row!["r" => rr, "max_ratio" => m]);
        pts.push([rr, m]);
    }
    let v: Vec<f64> = pts.iter().map(|x| x[1]).collect();
    r.verdict(
        "C9",
        "max/min over R of the local extension ratio",
        max_min_ratio(&v),
        None,
        Some(stable),
    );
    r.series.push(Series::new("max ratio", pts));
    Ok(r)
}
