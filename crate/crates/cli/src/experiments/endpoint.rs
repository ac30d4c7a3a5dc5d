use resolvent_core::endpoint::{
    endpoint_bound_check, endpoint_constant, g_identity_check, m_eps_hat, m_eps_hat_quadrature,
};
use resolvent_core::family::seeded_rng;
use resolvent_core::sphere::sphere_quadrature;
use resolvent_core::Field;

use super::{check_decreasing, checked_grid, config_err, grid_param, BumpFamily, RunContext};
use crate::config::Params;
use crate::error::{Context, Result};
use crate::report::{Report, Series};
use crate::row;

fn linspace(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![lo];
    }
    (0..k)
        .map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64)
        .collect()
}

fn geomspace(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), k)
        .into_iter()
        .map(f64::exp)
        .collect()
}

pub fn endpoint(p: &Params, ctx: &RunContext) -> Result<Report> {
    let grid = grid_param(p, 64, 64.0)?;
    let fam = BumpFamily::read(p, 20, 2, (1.8, 2.2), 2.0)?;
    let ladder = p.list("sweep.eps", &[0.5, 0.25, 0.125])?;
    let quad_m = p.usize("quad.nodes", 512)?;
    let tau = p.window("oracle.tau", (0.0, 4.0))?;
    let oeps = p.window("oracle.eps", (0.125, 2.0))?;
    let opoints = p.count("oracle.points", 5)?;
    let cell_n = p.usize("cell.n", 16)?;
    let cell_l = p.positive("cell.l", 16.0)?;
    let cell_eps = p.list("cell.eps", &[0.5, 0.25])?;
    let factor = p.positive("window.factor", 1.05)?;
    let otol = p.positive("window.oracle", 1e-4)?;
    let gtol = p.positive("window.g_identity", 1.1)?;
    p.finish()?;
    check_decreasing("sweep.eps", &ladder)?;
    check_decreasing("cell.eps", &cell_eps)?;
    if !(oeps.0 > 0.0) {
        return Err(config_err("oracle.eps must be positive"));
    }
    let quad = sphere_quadrature(quad_m).map_err(|e| config_err(format!("quad.nodes: {e}")))?;
    let cell_grid = checked_grid(cell_n, cell_l, "cell grid")?;

    let mut r = Report::new("endpoint", ctx.seed);
    r.axes("1/eps", "||R0(1 +- i eps) f||_2 / ||f||_1");
    r.param("grid.n", grid.n());
    r.param("grid.l", grid.box_length());
    fam.record(&mut r);
    r.param("sweep.eps", &ladder);
    r.param("quad.nodes", quad_m);
    r.param("oracle.tau", [tau.0, tau.1]);
    r.param("oracle.eps", [oeps.0, oeps.1]);
    r.param("oracle.points", opoints);
    r.param("cell.n", cell_n);
    r.param("cell.l", cell_l);
    r.param("cell.eps", &cell_eps);
    r.note("the 1 - i eps ratios equal the 1 + i eps ones: the multipliers have equal modulus");

    // closed form of the multiplier transform against adaptive quadrature
    let mut worst_oracle = 0.0f64;
    for &t in &linspace(tau.0, tau.1, opoints) {
        for &e in &geomspace(oeps.0, oeps.1, opoints) {
            let c = m_eps_hat(t, e).ctx(|| "closed form".into())?;
            let q = m_eps_hat_quadrature(t, e).ctx(|| "quadrature".into())?;
            let rel = (c.re - q).abs().hypot(c.im) / c.norm();
            r.rows.push(row!["part" => "transform", "tau" => t, "eps" => e, "closed_form" => c.re, "quadrature" => q, "relative_error" => rel]);
            worst_oracle = worst_oracle.max(rel);
        }
    }

    let mut rng = seeded_rng(ctx.sub_seed(5));
    let (fields, _) = fam.vanishing(grid, &mut rng)?;
    let checks = r.timed("family", || {
        fields
            .iter()
            .enumerate()
            .map(|(i, f)| endpoint_bound_check(f, &ladder, &quad).ctx(|| format!("member {i}")))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut worst = 0.0f64;
    let mut envelope = vec![0.0f64; ladder.len()];
    for (i, c) in checks.iter().enumerate() {
        for (k, (e, ratio)) in c.ratios.iter().enumerate() {
            r.rows
                .push(row!["part" => "family", "member" => i, "eps" => *e, "ratio" => *ratio]);
            envelope[k] = envelope[k].max(*ratio);
        }
        worst = worst.max(c.max_ratio);
    }

    let mut worst_g = 0.0f64;
    let cell = Field::delta(
        cell_grid,
        cell_grid.index(cell_n / 2, cell_n / 2, cell_n / 2),
    );
    for &e in &cell_eps {
        let g = g_identity_check(&cell, e, &quad).ctx(|| format!("single cell, eps = {e}"))?;
        r.rows.push(row!["part" => "g_identity", "input" => "single cell", "eps" => e, "g1" => g.g1, "residual" => g.residual]);
        worst_g = worst_g.max(g.residual);
    }
    for (i, f) in fields.iter().enumerate() {
        let e = ladder[0];
        let g = g_identity_check(f, e, &quad).ctx(|| format!("member {i}"))?;
        r.rows.push(row!["part" => "g_identity", "input" => format!("member {i}"), "eps" => e, "g1" => g.g1, "residual" => g.residual]);
        worst_g = worst_g.max(g.residual);
    }

    let bound = endpoint_constant();
    r.verdict(
        "C5",
        "max ratio over family and eps (bound (8 pi)^-1/2 x factor)",
        worst,
        None,
        Some(bound * factor),
    );
    r.verdict(
        "C5",
        "max relative error, closed-form transform vs quadrature",
        worst_oracle,
        None,
        Some(otol),
    );
    r.verdict("C5", "max G-identity residual", worst_g, None, Some(gtol));
    let pts: Vec<[f64; 2]> = ladder
        .iter()
        .zip(&envelope)
        .map(|(e, v)| [1.0 / e, *v])
        .collect();
    r.series.push(Series::new("family max", pts.clone()));
    r.series.push(Series::new(
        "(8 pi)^-1/2",
        pts.iter().map(|x| [x[0], bound]).collect(),
    ));
    Ok(r)
}
