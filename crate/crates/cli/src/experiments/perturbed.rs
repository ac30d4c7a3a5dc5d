use resolvent_core::family::{band_limited, bump_field, random_bumps, seeded_rng, Bump};
use resolvent_core::free_resolvent::SpectralParam;
use resolvent_core::numerics::relative_spread;
use resolvent_core::perturbed::{
    agmon_scaling_experiment, imag_pairing as measure_pairing, pairing_reference,
    resolvent_identity_residual, sample_potential, solve_resolvent, Potential, PotentialSpec,
};
use resolvent_core::sphere::sphere_quadrature;
use resolvent_core::{Grid3, C64};

use super::{
    check_decreasing, check_range, check_wraparound, checked_grid, config_err, grid_param,
    random_in, BumpFamily, RunContext,
};
use crate::config::Params;
use crate::error::{Context, Result};
use crate::report::{Fit, Report, Series};
use crate::row;

pub fn imag_pairing(p: &Params, ctx: &RunContext) -> Result<Report> {
    let grid = grid_param(p, 64, 64.0)?;
    let fam = BumpFamily::read(p, 6, 3, (0.8, 1.2), 3.0)?;
    let lambdas = p.list("sweep.lambda", &[1.0, 2.0])?;
    let ladder = p.list("sweep.eps", &[0.5, 0.25, 0.125, 0.0625])?;
    let quad_m = p.usize("quad.nodes", 512)?;
    let spread_max = p.positive("window.spread", 0.02)?;
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
    let quad = sphere_quadrature(quad_m).map_err(|e| config_err(format!("quad.nodes: {e}")))?;

    let mut r = Report::new("imag-pairing", ctx.seed);
    r.axes(
        "lambda",
        "c = lim Im <R0 g, g> / (lambda ||g_hat|S_lambda||^2)",
    );
    r.param("grid.n", grid.n());
    r.param("grid.l", grid.box_length());
    fam.record(&mut r);
    r.param("sweep.lambda", &lambdas);
    r.param("sweep.eps", &ladder);
    r.param("quad.nodes", quad_m);
    r.note(format!(
        "continuum constant 1/(4 pi) = {:.6}; bump widths scale as 1/lambda",
        pairing_reference()
    ));

    let mut rng = seeded_rng(ctx.sub_seed(11));
    let mut constants = Vec::new();
    let mut non_positive = 0usize;
    let mut means = Vec::new();
    for &l in &lambdas {
        let fields: Vec<_> = fam
            .members(&mut rng, 1.0 / l)
            .iter()
            .map(|b| bump_field(grid, b))
            .collect();
        let refs: Vec<_> = fields.iter().collect();
        // Im z = 2 lambda eps for z = (lambda + i eps)^2
        check_wraparound(
            ctx,
            &grid,
            l,
            2.0 * l * ladder[ladder.len() - 1],
            &refs,
            &format!("lambda = {l}"),
        )?;
        let pairs = r.timed(&format!("lambda {l}"), || {
            fields
                .iter()
                .enumerate()
                .map(|(i, g)| {
                    measure_pairing(g, l, &ladder, &quad)
                        .ctx(|| format!("lambda = {l}, member {i}"))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let mut sum = 0.0;
        for (i, pv) in pairs.iter().enumerate() {
            r.rows.push(row![
                "lambda" => l, "member" => i, "limit" => pv.limit,
                "restriction_value" => pv.restriction_value, "constant" => pv.constant,
                "positive" => if pv.positive { "yes" } else { "no" },
            ]);
            if !pv.positive {
                non_positive += 1;
            }
            constants.push(pv.constant);
            sum += pv.constant;
        }
        means.push([l, sum / pairs.len() as f64]);
    }
    r.verdict(
        "C10",
        "relative spread of the pairing constant across inputs",
        relative_spread(&constants),
        None,
        Some(spread_max),
    );
    r.verdict(
        "C10",
        "pairings with a non-positive imaginary part",
        non_positive as f64,
        None,
        Some(0.0),
    );
    if means.len() >= 2 {
        r.series.push(Series::new("mean constant", means.clone()));
        r.series.push(Series::new(
            "1/(4 pi)",
            means.iter().map(|m| [m[0], pairing_reference()]).collect(),
        ));
    }
    Ok(r)
}

fn potential(p: &Params, grid: Grid3, ctx: &RunContext) -> Result<(Potential, String)> {
    let kind = p.string("potential.kind", "gaussian_well")?;
    let spec = match kind.as_str() {
        "gaussian_well" => PotentialSpec::GaussianWell {
            depth: p.f64("potential.depth", -0.1)?,
            width: p.positive("potential.width", 2.0)?,
        },
        "multi_bump" => {
            let count = p.count("potential.count", 3)?;
            let depth = p.f64("potential.depth", -0.1)?;
            let widths = p.window("potential.sigma", (1.0, 2.0))?;
            let spread = p.f64("potential.spread", 3.0)?;
            let mut rng = seeded_rng(ctx.sub_seed(13));
            let bumps = random_bumps(count, widths, spread, &mut rng)
                .into_iter()
                .map(|b| Bump {
                    amplitude: C64::new(depth, 0.0),
                    ..b
                })
                .collect();
            PotentialSpec::MultiBump { bumps }
        }
        "anisotropic_slow" => PotentialSpec::AnisotropicSlow {
            amplitude: p.f64("potential.amplitude", 0.1)?,
        },
        other => {
            return Err(config_err(format!(
                "potential.kind '{other}' is not one of gaussian_well, multi_bump, anisotropic_slow"
            )))
        }
    };
    let v = sample_potential(spec, grid).map_err(|e| config_err(format!("potential: {e}")))?;
    Ok((v, kind))
}

pub fn perturbed_scaling(p: &Params, ctx: &RunContext) -> Result<Report> {
    let id_n = p.usize("identity.n", 32)?;
    let id_l = p.positive("identity.l", 32.0)?;
    let solves = p.usize("identity.solves", 20)?;
    let id_tol = p.positive("identity.tol", 1e-8)?;
    let id_lambda = p.window("identity.lambda", (0.5, 2.0))?;
    let id_eps = p.window("identity.eps", (0.1, 1.0))?;
    let grid = grid_param(p, 64, 16.0)?;
    let lambdas = p.list("sweep.lambda", &[1.0, 2.0, 4.0, 8.0])?;
    let eta = p.positive("eps.eta", 0.25)?;
    let trials = p.count("trials", 2)?;
    let iters = p.count("iterations", 30)?;
    let tol = p.positive("solver.tol", 1e-6)?;
    let window = p.window("window.exponent", (-0.65, -0.35))?;
    let id_factor = p.positive("window.identity", 10.0)?;
    let id_grid = checked_grid(id_n, id_l, "identity grid")?;
    let (v_id, kind) = potential(p, id_grid, ctx)?;
    let (v, _) = potential(p, grid, ctx)?;
    p.finish()?;
    if !(id_lambda.0 > 0.0 && id_eps.0 > 0.0) {
        return Err(config_err(
            "identity.lambda and identity.eps must be positive",
        ));
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
    for &l in &lambdas {
        check_wraparound(ctx, &grid, l, eta * l * l, &[], &format!("lambda = {l}"))?;
    }

    let mut r = Report::new("perturbed-scaling", ctx.seed);
    r.axes("lambda", "||R_V(lambda^2 + i eps)||_{4/3->4} lower bound");
    r.param("identity.n", id_n);
    r.param("identity.l", id_l);
    r.param("identity.solves", solves);
    r.param("identity.tol", id_tol);
    r.param("grid.n", grid.n());
    r.param("grid.l", grid.box_length());
    r.param("sweep.lambda", &lambdas);
    r.param("eps.eta", eta);
    r.param("trials", trials);
    r.param("iterations", iters);
    r.param("solver.tol", tol);
    r.param("potential.kind", &kind);
    r.param("potential.spec", format!("{:?}", v.spec()));
    if !v.model_in_lp(2.0) {
        r.note(format!(
            "the model potential is not in L2; it is treated with declared exponent p = {}",
            v.declared_p()
        ));
    }

    let mut rng = seeded_rng(ctx.sub_seed(14));
    let mut worst = 0.0f64;
    for i in 0..solves {
        let l = random_in(&mut rng, id_lambda);
        let e = random_in(&mut rng, id_eps);
        let f = band_limited(id_grid, &mut rng);
        let z = SpectralParam::upper(l, e).ctx(|| "identity energy".into())?;
        let s = r.timed(&format!("solve {i}"), || {
            solve_resolvent(&f, &v_id, &z, id_tol).ctx(|| format!("solve {i}"))
        })?;
        let res = resolvent_identity_residual(&s.u, &f, &v_id, z.z())
            .ctx(|| "identity residual".into())?;
        r.rows.push(row![
            "part" => "identity", "solve" => i, "lambda" => l, "eps" => e,
            "iterations" => s.iterations, "identity_residual" => res, "pde_residual" => s.pde_residual,
        ]);
        worst = worst.max(res);
    }
    if solves > 0 {
        r.verdict(
            "C10",
            "max resolvent-identity residual at the solver tolerance",
            worst,
            None,
            Some(id_factor * id_tol),
        );
    }

    let eps_of = |l: f64| eta * l * l;
    for (label, pot) in [("V = 0", Potential::zero(grid)), (kind.as_str(), v.clone())] {
        let seed = ctx.sub_seed(15);
        let res = r.timed(&format!("scaling {label}"), || {
            agmon_scaling_experiment(&pot, &lambdas, &eps_of, trials, iters, tol, seed)
                .ctx(|| format!("scaling, {label}"))
        })?;
        for row in &res.rows {
            r.rows.push(row![
                "part" => "scaling", "potential" => label, "lambda" => row.lambda, "eps" => row.eps,
                "lower_bound" => row.lower_bound, "solves" => row.solves,
            ]);
        }
        r.fits.push(Fit::new(label, &res.fit));
        r.verdict(
            "C10",
            &format!("fitted 4/3->4 exponent, {label}"),
            res.fit.exponent,
            Some(window.0),
            Some(window.1),
        );
        r.series.push(Series::new(
            label,
            res.rows.iter().map(|x| [x.lambda, x.lower_bound]).collect(),
        ));
    }
    if let Some(first) = r.series.first().cloned() {
        r.series.push(Series::reference("slope -1/2", &first, -0.5));
    }
    Ok(r)
}
