//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the lines are always
//! printed; exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use corrdet_core::correlator_design::design_quantized;
use corrdet_core::montecarlo::md_slope;
use corrdet_core::numeric::quad::{integrate, QuadOptions};
use corrdet_core::numeric::scalar::lin_space;
use corrdet_core::{
    c_alpha_abs, c_alpha_energy, design_binary, design_optimal, four_ask_curves, g_eval,
    joint_md_exponent, md_exponent, md_probability, stationary_levels, two_level_direct,
    FourAskCurvePoint, JointAtoms, NoiseModel, PowerBudget, SignalAtoms, SimConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use libm::erfc;

type Check = (bool, String);

fn budget(p_w: f64, var_n: f64) -> PowerBudget {
    PowerBudget::new(p_w, var_n).unwrap()
}

fn unit_budget_with_signal(p_s: f64) -> PowerBudget {
    budget(1.0, 1.0).with_signal_power(p_s).unwrap()
}

fn gaussian_closed_form() -> Check {
    let b = budget(1.0, 1.0);
    let m = NoiseModel::Gaussian { var_z: 1.0 };
    // 4-ASK with E[S²] = 5a² = 16
    let sig = SignalAtoms::four_ask((16.0f64 / 5.0).sqrt()).unwrap();
    let mut worst_err = 0.0f64;
    let mut worst_time = 0.0f64;
    for theta in [0.0, 1.0, 2.0, 3.0] {
        let t = Instant::now();
        let d = design_optimal(&m, &sig, theta, &b).unwrap();
        worst_time = worst_time.max(t.elapsed().as_secs_f64());
        let want = (4.0f64 - theta).powi(2) / 4.0;
        worst_err = worst_err.max((d.e_md.value - want).abs());
    }
    (
        worst_err < 1e-6 && worst_time < 1.0,
        format!("max |E_MD - closed form| = {worst_err:.3e} (< 1e-6), slowest theta {worst_time:.3} s (< 1 s)"),
    )
}

fn mixture_roots() -> Check {
    let m = NoiseModel::MixtureBinaryLaplace { delta: 0.95, z0: 0.5, q: 5.0 };
    let r = stationary_levels(&m, 1.0, 0.13).unwrap();
    let ok = r.roots.len() == 3
        && r.roots[0] == 0.0
        && (r.roots[1] - 3.71).abs() <= 0.02
        && (r.roots[2] - 4.58).abs() <= 0.02;
    (ok, format!("roots = {:?} (want 0, 3.71, 4.58 within 0.02)", r.roots))
}

struct CurveStats {
    min_margin: f64,
    max_rel_gap: f64,
    seconds: f64,
}

fn curve_stats(model: &NoiseModel) -> CurveStats {
    let t = Instant::now();
    let pts: Vec<FourAskCurvePoint> = four_ask_curves(model, 4.0, &budget(1.0, 1.0), 200).unwrap();
    let seconds = t.elapsed().as_secs_f64();
    let min_margin = pts.iter().map(|p| p.e_md_optimal - p.e_md_classical).fold(f64::INFINITY, f64::min);
    let max_rel_gap = pts
        .iter()
        .filter(|p| p.e_md_classical > 1e-9)
        .map(|p| (p.e_md_optimal - p.e_md_classical) / p.e_md_classical)
        .fold(0.0, f64::max);
    CurveStats { min_margin, max_rel_gap, seconds }
}

fn four_ask_dominance(binary: &CurveStats, uniform: &CurveStats) -> Check {
    let ok = |c: &CurveStats| c.min_margin >= -1e-9 && c.max_rel_gap > 0.05 && c.seconds < 30.0;
    (
        ok(binary) && ok(uniform),
        format!(
            "binary: min margin {:.3e}, max gain {:.1}%, {:.1} s; uniform: min margin {:.3e}, max gain {:.1}%, {:.1} s",
            binary.min_margin,
            100.0 * binary.max_rel_gap,
            binary.seconds,
            uniform.min_margin,
            100.0 * uniform.max_rel_gap,
            uniform.seconds
        ),
    )
}

fn laplacian_near_parity(binary: &CurveStats) -> Check {
    let lap = curve_stats(&NoiseModel::Laplacian { q: 0.1 });
    (
        lap.max_rel_gap < binary.max_rel_gap && lap.min_margin >= -1e-9,
        format!(
            "Laplacian q=0.1 max gain {:.3}% < binary max gain {:.1}%",
            100.0 * lap.max_rel_gap,
            100.0 * binary.max_rel_gap
        ),
    )
}

fn random_model(rng: &mut ChaCha8Rng) -> NoiseModel {
    match rng.random_range(0..5) {
        0 => NoiseModel::Gaussian { var_z: rng.random_range(0.2..2.0) },
        1 => NoiseModel::Laplacian { q: rng.random_range(0.5..3.0) },
        2 => NoiseModel::BinarySymmetric { z0: rng.random_range(0.5..3.0) },
        3 => NoiseModel::Uniform { z0: rng.random_range(0.5..3.0) },
        _ => NoiseModel::MixtureBinaryLaplace {
            delta: rng.random_range(0.5..0.99),
            z0: rng.random_range(0.3..2.0),
            q: rng.random_range(1.0..5.0),
        },
    }
}

fn stationarity_residuals() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_res = 0.0f64;
    let mut worst_pow = 0.0f64;
    for _ in 0..20 {
        let m = random_model(&mut rng);
        let values: Vec<f64> = (0..8).map(|_| rng.random_range(-4.0..4.0)).collect();
        let sig = SignalAtoms::from_values(&values).unwrap();
        let b = budget(rng.random_range(0.5..2.0), rng.random_range(0.5..1.5));
        let top = (b.p_w * sig.power()).sqrt();
        let theta = rng.random_range(0.0..0.8) * top;
        let d = design_optimal(&m, &sig, theta, &b).unwrap();
        for a in d.joint.atoms() {
            let g = g_eval(&m, a.w, d.rho_star, d.lambda_design, b.var_n).unwrap();
            worst_res = worst_res.max((g - a.s).abs());
        }
        worst_pow = worst_pow.max((d.joint.weight_power() - b.p_w).abs() / b.p_w);
    }
    (
        worst_res < 1e-8 && worst_pow < 1e-8,
        format!("max stationarity residual {worst_res:.3e}, max relative power error {worst_pow:.3e} (both < 1e-8)"),
    )
}

fn quantizer_uniform_signal() -> Check {
    let m = NoiseModel::Gaussian { var_z: 1.0 };
    let b = budget(1.0, 1.0);
    let sig = SignalAtoms::uniform(2.0, 400).unwrap();
    let q4 = design_quantized(&m, &sig, 4, 0.5, &b).unwrap();
    let want = [-1.0, 0.0, 1.0];
    let err = if q4.boundaries.len() == 3 {
        q4.boundaries.iter().zip(want).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let q2 = design_quantized(&m, &sig, 2, 0.5, &b).unwrap();
    let sign = design_binary(&sig, &b);
    // atom-by-atom agreement, up to rounding
    let level_err = q2.joint.atoms().iter().zip(sign.atoms()).map(|(x, y)| (x.w - y.w).abs()).fold(0.0, f64::max);
    let same = q2.joint.len() == sign.len()
        && level_err <= 1e-14 * b.p_w.sqrt();
    (
        err < 1e-6 && same,
        format!(
            "k=4 boundaries {:?} (max error {err:.3e}, < 1e-6); k=2 weights match the sign design atom by atom to {level_err:.1e}",
            q4.boundaries
        ),
    )
}

fn joint_concave_case() -> Check {
    let m = NoiseModel::BinarySymmetric { z0: 7.0 };
    let b = unit_budget_with_signal(1.0);
    let caps = [1e4, 1e6, 1e8];
    let mut worst_ct = 0.0f64;
    let mut worst_rel = 0.0f64;
    for cap in caps {
        let r = joint_md_exponent(&m, &b, 0.0, cap).unwrap();
        worst_ct = worst_ct.max(r.c_tilde.abs());
        worst_rel = worst_rel.max((r.e_md - 0.5).abs() / 0.5);
    }
    // At θ > 0 the envelope chord to the cap leaves C-tilde ≈ z0·λ·P/√p_cap,
    // so it only fades as the cap grows; reported for reference.
    let positive: Vec<String> = caps
        .iter()
        .map(|&cap| format!("{:.1e}", joint_md_exponent(&m, &b, 0.5, cap).unwrap().c_tilde))
        .collect();
    (
        worst_ct < 1e-3 && worst_rel < 0.02,
        format!(
            "theta=0: max C-tilde at optimizer {worst_ct:.3e} (< 1e-3), max gap to noise-free exponent {:.4}% (< 2%); \
             theta=0.5 C-tilde by cap: {}",
            100.0 * worst_rel,
            positive.join(", ")
        ),
    )
}

fn joint_cross_oracle() -> Check {
    let b = unit_budget_with_signal(2.0);
    let mut worst = 0.0f64;
    for m in [NoiseModel::Laplacian { q: 2.0 }, NoiseModel::Gaussian { var_z: 1.0 }] {
        for theta in [0.0, 0.3, 0.8] {
            let j = joint_md_exponent(&m, &b, theta, 1e6).unwrap();
            let d = two_level_direct(&m, &b, theta).unwrap();
            worst = worst.max((j.e_md - d.e_md).abs() / d.e_md.abs().max(1e-300));
        }
    }
    (worst < 1e-4, format!("max relative disagreement {worst:.3e} (< 1e-4)"))
}

// ---------------------------------------------------------------------------
// 2-D expectation oracles for the C_α functions
// ---------------------------------------------------------------------------

fn opts() -> QuadOptions {
    QuadOptions { abs_tol: 0.0, rel_tol: 1e-11, max_intervals: 20_000 }
}

/// `E_Z[g(Z)]`: exact sums for atoms, quadrature against the density otherwise.
fn expect_z(model: &NoiseModel, g: &dyn Fn(f64) -> f64) -> f64 {
    let lap = |q: f64| {
        let l = 80.0 / q;
        integrate(|z: f64| 0.5 * q * (-q * z.abs()).exp() * g(z), &[-l, -1.0 / q, 0.0, 1.0 / q, l], opts())
            .unwrap()
            .value
    };
    match *model {
        NoiseModel::Gaussian { var_z } => {
            let sd = var_z.sqrt();
            let pts: Vec<f64> = (-14..=14).map(|k| k as f64 * sd).collect();
            integrate(|z: f64| (-0.5 * z * z / var_z).exp() / (2.0 * PI * var_z).sqrt() * g(z), &pts, opts())
                .unwrap()
                .value
        }
        NoiseModel::Laplacian { q } => lap(q),
        NoiseModel::BinarySymmetric { z0 } => 0.5 * (g(z0) + g(-z0)),
        NoiseModel::Uniform { z0 } => integrate(|z: f64| g(z) / (2.0 * z0), &lin_space(-z0, z0, 9), opts())
            .unwrap()
            .value,
        NoiseModel::MixtureBinaryLaplace { delta, z0, q } => delta * 0.5 * (g(z0) + g(-z0)) + (1.0 - delta) * lap(q),
    }
}

/// `E_N[h(N)]` for `N ~ N(0, var_n)` by quadrature over a window covering
/// `[lo, hi]` with 16 standard deviations of margin, split at `kink`.
fn expect_n(h: &dyn Fn(f64) -> f64, lo: f64, hi: f64, var_n: f64, kink: Option<f64>) -> f64 {
    let sd = var_n.sqrt();
    let mut pts = lin_space(lo - 16.0 * sd, hi + 16.0 * sd, 17);
    if let Some(k) = kink {
        pts.push(k);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
    }
    let phi = |n: f64| (-0.5 * n * n / var_n).exp() / (2.0 * PI * var_n).sqrt();
    integrate(|n: f64| phi(n) * h(n), &pts, opts()).unwrap().value
}

fn oracle_energy(model: &NoiseModel, v: f64, c: f64, var_n: f64) -> f64 {
    let g = |z: f64| {
        // the N-integrand peaks where −v − 2c(z+n) − n/σ² = 0
        let center = (-v - 2.0 * c * z) / (2.0 * c + 1.0 / var_n);
        expect_n(&|n: f64| (-v * (z + n) - c * (z + n).powi(2)).exp(), center, center, var_n, None)
    };
    expect_z(model, &g).ln() - 0.5 * var_n * v * v
}

fn oracle_abs(model: &NoiseModel, v: f64, s: f64, c: f64, var_n: f64) -> f64 {
    let g = |z: f64| {
        let kink = -s - z;
        // the tilted mass sits near −vσ², shifted by at most cσ² towards the kink
        let peak = -v * var_n;
        let (lo, hi) = (peak.min(kink) - c * var_n, peak.max(kink) + c * var_n);
        expect_n(&|n: f64| (-v * (z + n) - c * (s + z + n).abs()).exp(), lo, hi, var_n, Some(kink))
    };
    expect_z(model, &g).ln() - 0.5 * var_n * v * v
}

fn c_alpha_identities() -> Check {
    let models = [
        NoiseModel::Gaussian { var_z: 0.8 },
        NoiseModel::Laplacian { q: 3.0 },
        NoiseModel::BinarySymmetric { z0: 1.5 },
        NoiseModel::Uniform { z0: 2.0 },
        NoiseModel::MixtureBinaryLaplace { delta: 0.95, z0: 0.5, q: 5.0 },
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst_err = 0.0f64;
    let mut worst_time = 0.0f64;
    for m in &models {
        for _ in 0..50 {
            let alpha = rng.random_range(0.05..0.5);
            let lambda = rng.random_range(0.1..2.0);
            let w = rng.random_range(-1.4..1.4);
            let s = rng.random_range(-2.0..2.0);
            let var_n = rng.random_range(0.5..1.5);
            let v = lambda * w;

            let t = Instant::now();
            let e = c_alpha_energy(m, v, alpha, lambda, var_n).unwrap();
            worst_time = worst_time.max(t.elapsed().as_secs_f64());
            let t = Instant::now();
            let a = c_alpha_abs(m, v, s, alpha, lambda, var_n).unwrap();
            worst_time = worst_time.max(t.elapsed().as_secs_f64());

            let de = (e - oracle_energy(m, v, alpha * lambda, var_n)).abs();
            let da = (a - oracle_abs(m, v, s, alpha * lambda, var_n)).abs();
            worst_err = worst_err.max(de).max(da);
        }
    }
    (
        worst_err < 1e-6 && worst_time < 0.05,
        format!("max |C_alpha - 2-D oracle| = {worst_err:.3e} (< 1e-6), slowest evaluation {:.2} ms (< 50 ms)", 1e3 * worst_time),
    )
}

// ---------------------------------------------------------------------------
// Monte Carlo
// ---------------------------------------------------------------------------

fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `P{Σ w(s + Z + N) <= θn}` for binary `Z`, enumerating all sign patterns.
fn exhaustive_binary(z0: f64, w: &[f64], s: &[f64], theta: f64, var_n: f64) -> f64 {
    let n = w.len();
    let norm = (var_n * w.iter().map(|x| x * x).sum::<f64>()).sqrt();
    let base: f64 = w.iter().zip(s).map(|(a, b)| a * b).sum();
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        let wz: f64 = (0..n).map(|t| if mask >> t & 1 == 1 { w[t] * z0 } else { -w[t] * z0 }).sum();
        total += normal_cdf((theta * n as f64 - base - wz) / norm);
    }
    total / (1u64 << n) as f64
}

fn monte_carlo() -> Check {
    let t = Instant::now();
    let b = budget(1.0, 1.0);

    let m = NoiseModel::Gaussian { var_z: 1.0 };
    let (w, s, theta) = ([1.0, -1.0], [1.0, -1.0], 0.4);
    let analytic = md_exponent(&JointAtoms::from_vectors(&w, &s).unwrap(), theta, &b, &m);
    let config = SimConfig { tilt_lambda: analytic.lambda_star, seed: 17, ..SimConfig::default() };
    let fit = md_slope(&m, &w, &s, theta, &config, &b).unwrap();
    let rel = (fit.slope - analytic.value).abs() / analytic.value;
    let smallest = fit.per_n.iter().map(|p| p.prob_estimate).fold(f64::INFINITY, f64::min);

    let z0 = 1.5;
    let bin = NoiseModel::BinarySymmetric { z0 };
    let w8 = [1.0, 0.5, -1.0, 2.0, 0.8, -0.3, 1.2, -1.5];
    let s8 = [0.8, 0.8, -0.8, 0.8, 0.8, -0.8, 0.8, -0.8];
    let theta8 = 0.3;
    let tilt = md_exponent(&JointAtoms::from_vectors(&w8, &s8).unwrap(), theta8, &b, &bin).lambda_star;
    let cfg8 = SimConfig { n_values: vec![8], trials: 100_000, seed: 5, tilt_lambda: tilt };
    let est = md_probability(&bin, &w8, &s8, theta8, &cfg8, &b).unwrap()[0];
    let exact = exhaustive_binary(z0, &w8, &s8, theta8, 1.0);
    let z = (est.prob_estimate - exact).abs() / est.stderr;

    let seconds = t.elapsed().as_secs_f64();
    (
        (0.05..=0.15).contains(&analytic.value) && smallest > 1e-20 && rel < 0.1 && z < 3.0 && seconds < 60.0,
        format!(
            "slope {:.5} vs analytic {:.5} ({:.2}% off, < 10%), smallest probability {smallest:.2e}; \
             n=8 binary estimate {:.6e} vs exhaustive {exact:.6e} ({z:.2} stderr, < 3); {seconds:.1} s",
            fit.slope,
            analytic.value,
            100.0 * rel,
            est.prob_estimate
        ),
    )
}

fn report(id: u32, (pass, detail): &Check) {
    println!("criterion {id:>2}: {} {detail}", if *pass { "PASS" } else { "FAIL" });
}

fn main() {
    let mut passed = Vec::new();
    let mut run = |id: u32, check: Check| {
        report(id, &check);
        passed.push((id, check.0));
    };

    run(1, gaussian_closed_form());
    run(2, mixture_roots());
    let binary = curve_stats(&NoiseModel::BinarySymmetric { z0: 7.0 });
    let uniform = curve_stats(&NoiseModel::Uniform { z0: 7.0 });
    run(3, four_ask_dominance(&binary, &uniform));
    run(4, laplacian_near_parity(&binary));
    run(5, stationarity_residuals());
    run(6, quantizer_uniform_signal());
    run(7, joint_concave_case());
    run(8, joint_cross_oracle());
    run(9, c_alpha_identities());
    run(10, monte_carlo());

    let anchors = [1, 2, 3, 4, 6, 7];
    let anchored = passed.iter().filter(|(id, _)| anchors.contains(id)).all(|(_, ok)| *ok);
    report(
        11,
        &(
            anchored,
            "exponent curves are validated qualitatively: published curves have no tables, so \
             reproduction rests on closed forms (1, 6), quoted roots (2) and orderings (3, 4, 7)"
                .to_string(),
        ),
    );
    passed.push((11, anchored));

    let failed: Vec<u32> = passed.iter().filter(|(_, ok)| !ok).map(|(id, _)| *id).collect();
    if failed.is_empty() {
        println!("acceptance: all 11 criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
