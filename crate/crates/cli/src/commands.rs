//! One function per subcommand. Each returns a table for CSV output and a
//! JSON document with the full results.

use corrdet_core::{
    default_alpha_grid, design_binary, design_classical, design_optimal, design_quantized,
    estimate_slope, fa_exponent, fa_exponent_extended, four_ask_curves, joint_md_exponent,
    md_exponent, md_exponent_extended, md_probability, stationary_levels, sweep_alpha_fixed_fa,
    ExtendedDetectorSpec, JointAtoms, NoiseModel, PowerBudget, SimConfig, DEFAULT_CAP_FACTOR,
};
use rayon::prelude::*;
use serde_json::json;

use crate::config::RunConfig;
use crate::output::{Output, Table};
use crate::CliError;

type Res<T> = Result<T, CliError>;

/// Evaluates `f` on every threshold in parallel, keeping grid order.
fn over_thetas<T: Send>(thetas: &[f64], f: impl Fn(f64) -> Res<T> + Sync) -> Res<Vec<T>> {
    thetas.par_iter().map(|&t| f(t)).collect()
}

pub fn cgf(cfg: &RunConfig) -> Res<Output> {
    let model = cfg.model()?;
    let vs = cfg.v.as_ref().ok_or_else(|| CliError::Config("config is missing 'v'".into()))?.values()?;
    let mut table = Table::new(vec!["v", "cgf", "cgf_deriv"]);
    let mut rows = Vec::new();
    for v in vs {
        let (c, d) = (model.cgf(v)?, model.cgf_deriv(v)?);
        table.push(vec![v.into(), c.into(), d.into()]);
        rows.push(json!({"v": v, "cgf": c, "cgf_deriv": d}));
    }
    Ok(Output { table, json: json!({"model": model, "values": rows}) })
}

pub fn fa(cfg: &RunConfig) -> Res<Output> {
    let budget = cfg.budget()?;
    let mut table = Table::new(vec!["theta", "e_fa"]);
    let mut rows = Vec::new();
    for theta in cfg.thetas()? {
        let e = fa_exponent(theta, &budget);
        table.push(vec![theta.into(), e.into()]);
        rows.push(json!({"theta": theta, "e_fa": e}));
    }
    Ok(Output { table, json: json!({"budget": budget, "values": rows}) })
}

pub fn md(cfg: &RunConfig) -> Res<Output> {
    let (model, budget, joint) = (cfg.model()?, cfg.budget()?, cfg.joint()?);
    let mut table = Table::new(vec!["theta", "e_md", "lambda_star"]);
    let mut rows = Vec::new();
    for theta in cfg.thetas()? {
        let e = md_exponent(joint, theta, &budget, model);
        table.push(vec![theta.into(), e.value.into(), e.lambda_star.into()]);
        rows.push(json!({"theta": theta, "e_md": e}));
    }
    Ok(Output { table, json: json!({"values": rows}) })
}

pub fn design(cfg: &RunConfig) -> Res<Output> {
    let (model, budget, signal) = (cfg.model()?, cfg.budget()?, cfg.signal()?);
    let classical = design_classical(&signal, &budget)?;
    let binary = design_binary(&signal, &budget);
    let results = over_thetas(&cfg.thetas()?, |theta| {
        let opt = design_optimal(model, &signal, theta, &budget)?;
        let c = md_exponent(&classical, theta, &budget, model);
        let b = md_exponent(&binary, theta, &budget, model);
        Ok((opt, c, b))
    })?;
    let mut table = Table::new(vec![
        "theta",
        "e_fa",
        "e_md_optimal",
        "e_md_classical",
        "e_md_binary",
        "lambda",
        "rho",
    ]);
    let mut rows = Vec::new();
    for (opt, c, b) in results {
        table.push(vec![
            opt.theta.into(),
            opt.e_fa.into(),
            opt.e_md.value.into(),
            c.value.into(),
            b.value.into(),
            opt.lambda_design.into(),
            opt.rho_star.into(),
        ]);
        rows.push(json!({"optimal": opt, "e_md_classical": c, "e_md_binary": b}));
    }
    Ok(Output { table, json: json!({"designs": rows}) })
}

pub fn quantize(cfg: &RunConfig) -> Res<Output> {
    let (model, budget, signal) = (cfg.model()?, cfg.budget()?, cfg.signal()?);
    let k = cfg.require(cfg.k, "k")?;
    let thetas = cfg.thetas()?;
    let designs = over_thetas(&thetas, |theta| Ok(design_quantized(model, &signal, k, theta, &budget)?))?;
    let mut table = Table::new(vec!["theta", "cell", "lower", "upper", "level", "e_md"]);
    let mut rows = Vec::new();
    for (theta, q) in thetas.iter().zip(&designs) {
        for (i, &level) in q.levels.iter().enumerate() {
            let lower = if i == 0 { f64::NEG_INFINITY } else { q.boundaries[i - 1] };
            let upper = q.boundaries.get(i).copied().unwrap_or(f64::INFINITY);
            table.push(vec![(*theta).into(), i.into(), lower.into(), upper.into(), level.into(), q.e_md.value.into()]);
        }
        rows.push(json!({"theta": theta, "design": q}));
    }
    Ok(Output { table, json: json!({"k": k, "designs": rows}) })
}

pub fn joint(cfg: &RunConfig) -> Res<Output> {
    let (model, budget) = (cfg.model()?, cfg.budget()?);
    let p_cap = cfg.p_cap.unwrap_or(DEFAULT_CAP_FACTOR * budget.p_w);
    let thetas = cfg.thetas()?;
    let results = over_thetas(&thetas, |theta| Ok(joint_md_exponent(model, &budget, theta, p_cap)?))?;
    let mut table = Table::new(vec![
        "theta",
        "e_md",
        "lambda_star",
        "p_star",
        "level_a",
        "level_b",
        "mix_alpha",
        "c_tilde",
        "curvature",
    ]);
    let mut rows = Vec::new();
    for (theta, r) in thetas.iter().zip(&results) {
        let curvature = serde_json::to_value(r.curvature).expect("curvature serializes");
        table.push(vec![
            (*theta).into(),
            r.e_md.into(),
            r.lambda_star.into(),
            r.p_star.into(),
            r.levels.a.into(),
            r.levels.b.into(),
            r.levels.mix_alpha.into(),
            r.c_tilde.into(),
            curvature.as_str().unwrap_or("").into(),
        ]);
        rows.push(json!({"theta": theta, "design": r}));
    }
    Ok(Output { table, json: json!({"p_cap": p_cap, "designs": rows}) })
}

fn roots_output(model: &NoiseModel, lambda: f64, kappa: f64, ws: &[f64]) -> Res<Output> {
    let levels = stationary_levels(model, lambda, kappa)?;
    let mut table = Table::new(vec!["w", "cdot", "linear"]);
    for &w in ws {
        table.push(vec![w.into(), model.cgf_deriv(lambda * w)?.into(), (kappa * w).into()]);
    }
    Ok(Output { table, json: json!({"model": model, "lambda": lambda, "levels": levels}) })
}

pub fn roots(cfg: &RunConfig) -> Res<Output> {
    let model = cfg.model()?;
    let lambda = cfg.require(cfg.lambda, "lambda")?;
    let kappa = cfg.require(cfg.kappa, "kappa")?;
    let ws = match &cfg.w {
        Some(g) => g.values()?,
        None => {
            let top = stationary_levels(model, lambda, kappa)?.roots.last().copied().unwrap_or(0.0);
            let pole = 0.99 * model.feasible_limit() / lambda;
            let hi = if top > 0.0 { (1.25 * top).min(pole) } else { pole.min(1.0) };
            (0..=400).map(|i| hi * i as f64 / 400.0).collect()
        }
    };
    roots_output(model, lambda, kappa, &ws)
}

pub fn extended(cfg: &RunConfig) -> Res<Output> {
    let (model, budget, joint) = (cfg.model()?, cfg.budget()?, cfg.joint()?);
    let kind = cfg.require(cfg.kind, "kind")?;
    let thetas = cfg.thetas()?;
    if let Some(sweep) = &cfg.sweep {
        let alphas = default_alpha_grid(sweep.alpha_max, sweep.points);
        let sweeps = over_thetas(&thetas, |theta| {
            Ok(sweep_alpha_fixed_fa(model, joint, sweep.e_fa_target, kind, theta, &budget, &alphas)?)
        })?;
        let mut table = Table::new(vec!["theta", "alpha", "p_w", "e_fa", "e_md", "best"]);
        let mut rows = Vec::new();
        for (theta, sw) in thetas.iter().zip(&sweeps) {
            for p in &sw.points {
                let best = usize::from(p.alpha == sw.best.alpha);
                table.push(vec![(*theta).into(), p.alpha.into(), p.p_w.into(), p.e_fa.into(), p.e_md.into(), best.into()]);
            }
            rows.push(json!({"theta": theta, "sweep": sw}));
        }
        return Ok(Output { table, json: json!({"kind": kind, "sweeps": rows}) });
    }
    let alpha = cfg.require(cfg.alpha, "alpha")?;
    let results = over_thetas(&thetas, |theta| {
        let spec = ExtendedDetectorSpec { joint: joint.clone(), alpha, theta, kind };
        spec.validate()?;
        let fa = fa_exponent_extended(kind, theta, &budget, alpha, joint);
        let md = md_exponent_extended(&spec, &budget, model)?;
        Ok((fa, md))
    })?;
    let mut table = Table::new(vec!["theta", "e_fa", "e_md", "lambda_star"]);
    let mut rows = Vec::new();
    for (theta, (fa, md)) in thetas.iter().zip(&results) {
        table.push(vec![(*theta).into(), fa.value.into(), md.value.into(), md.lambda_star.into()]);
        rows.push(json!({"theta": theta, "e_fa": fa, "e_md": md}));
    }
    Ok(Output { table, json: json!({"kind": kind, "alpha": alpha, "values": rows}) })
}

pub fn simulate(cfg: &RunConfig, seed: u64) -> Res<Output> {
    let (model, budget) = (cfg.model()?, cfg.budget()?);
    let sim = cfg.simulation.as_ref().ok_or_else(|| CliError::Config("config is missing 'simulation'".into()))?;
    let thetas = cfg.thetas()?;
    let [theta] = thetas[..] else {
        return Err(CliError::Config("simulate takes a single theta".into()));
    };
    let pattern = JointAtoms::from_vectors(&sim.w, &sim.s)?;
    let analytic = md_exponent(&pattern, theta, &budget, model);
    let defaults = SimConfig::default();
    let config = SimConfig {
        n_values: sim.n_values.clone().unwrap_or(defaults.n_values),
        trials: sim.trials.unwrap_or(defaults.trials),
        seed,
        tilt_lambda: sim.tilt_lambda.unwrap_or(analytic.lambda_star),
    };
    let per_n = md_probability(model, &sim.w, &sim.s, theta, &config, &budget)?;
    let fit = estimate_slope(&per_n).ok();
    let slope = fit.as_ref().map_or(f64::NAN, |f| f.slope);
    let mut table = Table::new(vec!["n", "prob", "stderr", "slope"]);
    for p in &per_n {
        table.push(vec![p.n.into(), p.prob_estimate.into(), p.stderr.into(), slope.into()]);
    }
    let json = json!({
        "config": config,
        "analytic_e_md": analytic,
        "per_n": per_n,
        "fit": fit,
    });
    Ok(Output { table, json })
}

/// Parameters shared by the 4-ASK comparison figures.
const FIGURE_A: f64 = 4.0;
const FIGURE_POINTS: usize = 200;

pub fn figure(id: u8) -> Res<Output> {
    let budget = PowerBudget::new(1.0, 1.0)?;
    let model = match id {
        1 => NoiseModel::BinarySymmetric { z0: 7.0 },
        2 => NoiseModel::Uniform { z0: 7.0 },
        3 => NoiseModel::Laplacian { q: 0.1 },
        4 => {
            let model = NoiseModel::MixtureBinaryLaplace { delta: 0.95, z0: 0.5, q: 5.0 };
            // the Laplacian component puts the pole at w = 5
            let ws: Vec<f64> = (0..=495).map(|i| 0.01 * i as f64).collect();
            return roots_output(&model, 1.0, 0.13, &ws).map(|mut out| {
                out.table.header = vec!["w", "cdot_curve", "linear_line"];
                out
            });
        }
        other => return Err(CliError::Config(format!("figure id must be 1-4, got {other}"))),
    };
    let points = four_ask_curves(&model, FIGURE_A, &budget, FIGURE_POINTS)?;
    let mut table = Table::new(vec!["theta", "e_md_classical", "e_md_optimal"]);
    for p in &points {
        table.push(vec![p.theta.into(), p.e_md_classical.into(), p.e_md_optimal.into()]);
    }
    let json = json!({"model": model, "a": FIGURE_A, "budget": budget, "points": points});
    Ok(Output { table, json })
}

