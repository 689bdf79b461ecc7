//! Detectors that add an energy term `α Σ Y_t²` or an absolute-value term
//! `α Σ |Y_t|` to the correlation `Σ w_t Y_t`.
//!
//! The MD exponents need the modified cumulant functions `C_α`, obtained by
//! writing `e^{-a x²}` (resp. `e^{-a|x|}`) as a Fourier integral so that the
//! expectations over `Z` and `N` factor. The inner expectation over `Z` is
//! the complex MGF, available in closed form for every noise model, and the
//! remaining integral over the frequency is done by adaptive quadrature.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cgf::NoiseModel;
use crate::error::{Error, Result};
use crate::exponents::{fa_exponent, md_exponent, sup_concave, ExponentResult, JointAtoms, PowerBudget};
use crate::numeric::quad::{integrate, QuadOptions};
use crate::numeric::scalar::{lin_space, log_space};
use crate::numeric::special::{ln_q, log_add_exp};

/// Below this coefficient the detectors are treated as plain correlators.
pub const ALPHA_EPS: f64 = 1e-8;
/// Tail mass (relative to the envelope) dropped when truncating the
/// frequency integrals: `e^{-TAIL_EXPONENT}`.
const TAIL_EXPONENT: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    Energy,
    Abs,
}

impl std::str::FromStr for DetectorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "energy" => Ok(Self::Energy),
            "abs" => Ok(Self::Abs),
            other => Err(Error::invalid(format!("unknown detector kind '{other}'"))),
        }
    }
}

/// A correlation+energy or correlation+|·| detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedDetectorSpec {
    pub joint: JointAtoms,
    pub alpha: f64,
    pub theta: f64,
    pub kind: DetectorKind,
}

impl ExtendedDetectorSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be finite and >= 0, got {}", self.alpha)));
        }
        if !self.theta.is_finite() {
            return Err(Error::invalid("theta must be finite"));
        }
        Ok(())
    }
}

fn quad_opts() -> QuadOptions {
    QuadOptions { abs_tol: 0.0, rel_tol: 1e-11, max_intervals: 4000 }
}

/// FA exponent of the correlation+energy detector:
/// `sup_{0 <= λ < 1/(2ασ²)} λθ − λ²σ²P_w / (2(1 − 2αλσ²)) + ½ ln(1 − 2αλσ²)`.
pub fn fa_exponent_energy(theta: f64, budget: &PowerBudget, alpha: f64) -> ExponentResult {
    let var_n = budget.var_n;
    if alpha < ALPHA_EPS {
        let value = fa_exponent(theta.max(0.0), budget);
        let lambda_star = if value > 0.0 { theta / (var_n * budget.p_w) } else { 0.0 };
        return ExponentResult { value, lambda_star, ..ExponentResult::zero() };
    }
    let limit = (1.0 - 1e-12) / (2.0 * alpha * var_n);
    sup_concave(theta - alpha * var_n, limit, |l| {
        let d = 1.0 - 2.0 * alpha * l * var_n;
        l * theta - l * l * var_n * budget.p_w / (2.0 * d) + 0.5 * d.ln()
    })
}

/// `C_α(v)` of the correlation+energy detector at tilt `λ`:
/// `ln E{exp(−v(Z+N) − αλ(Z+N)²)} − σ_N² v² / 2`, evaluated through its
/// frequency-domain form.
pub fn c_alpha_energy(model: &NoiseModel, v: f64, alpha: f64, lambda: f64, var_n: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::invalid("c_alpha needs lambda > 0"));
    }
    if alpha < ALPHA_EPS {
        return model.cgf(v);
    }
    let a = alpha * lambda;
    let c = 0.5 * var_n + 0.25 / a;
    let base = model.cgf(v)?;
    let integrand = |q: f64| {
        let m = Complex64::new(-v, q);
        let phase = Complex64::from_polar(1.0, -var_n * v * q);
        model
            .mgf_scaled(m)
            .map_or(f64::NAN, |z| (phase * z).re * (-c * q * q).exp())
    };
    let q_max = (TAIL_EXPONENT / c).sqrt();
    let points = lin_space(0.0, q_max, 9);
    let r = integrate(integrand, &points, quad_opts())?;
    let scaled = 2.0 * r.value / (4.0 * PI * a).sqrt();
    if !(scaled > 0.0) {
        return Err(Error::QuadratureFailure { estimate: scaled, error: r.error });
    }
    Ok(base + scaled.ln())
}

/// `C_α(v, s)` of the correlation+|·| detector at tilt `λ`, satisfying
/// `C_α(λw, s) = ln E{exp(−λw(Z+N) − αλ|s+Z+N|)} − ½λ²σ_N²w²`.
pub fn c_alpha_abs(model: &NoiseModel, v: f64, s: f64, alpha: f64, lambda: f64, var_n: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::invalid("c_alpha needs lambda > 0"));
    }
    if alpha < ALPHA_EPS {
        return model.cgf(v);
    }
    let a = alpha * lambda;
    let base = model.cgf(v)?;
    let shift = var_n * v - s;
    let integrand = |q: f64| {
        let m = Complex64::new(-v, q);
        let phase = Complex64::from_polar(1.0, -shift * q);
        model
            .mgf_scaled(m)
            .map_or(f64::NAN, |z| (phase * z).re * (-0.5 * var_n * q * q).exp() / (q * q + a * a))
    };
    let q_max = (2.0 * TAIL_EXPONENT / var_n).sqrt();
    // Resolve the Lorentzian peak of width `a` and the oscillation scale.
    let mut points = vec![0.0];
    let mut x = a;
    while x < q_max {
        points.push(x);
        x *= 4.0;
    }
    let period = 2.0 * PI / shift.abs().max(1e-300);
    if period < q_max {
        let extra = ((q_max / period).ceil() as usize).min(2000);
        points.extend(lin_space(0.0, q_max, extra + 1));
    }
    points.push(q_max);
    points.sort_by(f64::total_cmp);
    points.dedup();
    let r = integrate(integrand, &points, quad_opts())?;
    let scaled = 2.0 * a / PI * r.value;
    if !(scaled > 0.0) {
        return Err(Error::QuadratureFailure { estimate: scaled, error: r.error });
    }
    Ok(base + scaled.ln())
}

/// Largest admissible tilt for the atom weights `ws` (frequency forms
/// need `λ|w|` inside the CGF domain).
fn tilt_limit(model: &NoiseModel, max_abs: f64) -> f64 {
    if max_abs > 0.0 {
        model.feasible_limit() / max_abs
    } else {
        f64::INFINITY
    }
}

/// MD exponent of the correlation+energy detector,
/// `sup_λ λ(E{WS} + αP_s − θ) − ½λ²σ_N²E{U²} − E{C_α(λU)}` with `U = W + 2αS`.
pub fn md_exponent_energy(spec: &ExtendedDetectorSpec, budget: &PowerBudget, model: &NoiseModel) -> Result<ExponentResult> {
    spec.validate()?;
    if spec.kind != DetectorKind::Energy {
        return Err(Error::invalid("md_exponent_energy needs kind = energy"));
    }
    let alpha = spec.alpha;
    if alpha < ALPHA_EPS {
        return Ok(md_exponent(&spec.joint, spec.theta, budget, model));
    }
    let var_n = budget.var_n;
    let atoms = spec.joint.atoms();
    let p_s = spec.joint.signal_power();
    let a_term = spec.joint.correlation() + alpha * p_s;
    let us: Vec<(f64, f64)> = atoms.iter().map(|x| (x.w + 2.0 * alpha * x.s, x.weight)).collect();
    let u2: f64 = us.iter().map(|(u, p)| p * u * u).sum();
    let max_u = us.iter().map(|(u, _)| u.abs()).fold(0.0, f64::max);
    let slope = a_term + alpha * (model.variance() + var_n) - spec.theta;
    let mut failure = None;
    let result = sup_concave(slope, tilt_limit(model, max_u), |l| {
        if l == 0.0 {
            return 0.0;
        }
        let mut c_sum = 0.0;
        for &(u, p) in &us {
            match c_alpha_energy(model, l * u, alpha, l, var_n) {
                Ok(c) => c_sum += p * c,
                Err(e) => {
                    failure.get_or_insert(e);
                    return f64::NEG_INFINITY;
                }
            }
        }
        l * (a_term - spec.theta) - 0.5 * l * l * var_n * u2 - c_sum
    });
    match failure {
        Some(e @ Error::QuadratureFailure { .. }) if result.value == 0.0 => Err(e),
        _ => Ok(result),
    }
}

/// MD exponent of the correlation+|·| detector,
/// `sup_λ λ(E{WS} − θ) − ½λ²σ_N²E{W²} − E{C_α(λW, S)}`.
pub fn md_exponent_abs(spec: &ExtendedDetectorSpec, budget: &PowerBudget, model: &NoiseModel) -> Result<ExponentResult> {
    spec.validate()?;
    if spec.kind != DetectorKind::Abs {
        return Err(Error::invalid("md_exponent_abs needs kind = abs"));
    }
    let alpha = spec.alpha;
    if alpha < ALPHA_EPS {
        return Ok(md_exponent(&spec.joint, spec.theta, budget, model));
    }
    let var_n = budget.var_n;
    let joint = &spec.joint;
    let corr = joint.correlation();
    let w2 = joint.weight_power();
    let mut failure = None;
    // The slope at zero involves E|S + Z + N|; a positive placeholder lets the
    // search decide, and a non-positive maximum maps to zero.
    let result = sup_concave(1.0, tilt_limit(model, joint.max_abs_w()), |l| {
        if l == 0.0 {
            return 0.0;
        }
        let mut c_sum = 0.0;
        for x in joint.atoms() {
            match c_alpha_abs(model, l * x.w, x.s, alpha, l, var_n) {
                Ok(c) => c_sum += x.weight * c,
                Err(e) => {
                    failure.get_or_insert(e);
                    return f64::NEG_INFINITY;
                }
            }
        }
        l * (corr - spec.theta) - 0.5 * l * l * var_n * w2 - c_sum
    });
    match failure {
        Some(e @ Error::QuadratureFailure { .. }) if result.value == 0.0 => Err(e),
        _ => Ok(result),
    }
}

/// MD exponent for either kind.
pub fn md_exponent_extended(spec: &ExtendedDetectorSpec, budget: &PowerBudget, model: &NoiseModel) -> Result<ExponentResult> {
    match spec.kind {
        DetectorKind::Energy => md_exponent_energy(spec, budget, model),
        DetectorKind::Abs => md_exponent_abs(spec, budget, model),
    }
}

/// `ln E exp(λ(wN + α|N|))` for `N ~ N(0, σ²)`.
fn abs_fa_log_mgf(lambda: f64, w: f64, alpha: f64, sigma: f64) -> f64 {
    let var = sigma * sigma;
    let cross = lambda * lambda * var * alpha * w;
    0.5 * lambda * lambda * var * (w * w + alpha * alpha)
        + log_add_exp(
            cross + ln_q(-lambda * (w + alpha) * sigma),
            -cross + ln_q(lambda * (w - alpha) * sigma),
        )
}

/// FA exponent of the correlation+|·| detector; depends on the whole law
/// of `W`, given by the atoms' marginal.
pub fn fa_exponent_abs(theta: f64, budget: &PowerBudget, alpha: f64, w_atoms: &JointAtoms) -> ExponentResult {
    let w2 = w_atoms.weight_power();
    if alpha < ALPHA_EPS {
        let b = (*budget).with_p_w(w2.max(f64::MIN_POSITIVE));
        return fa_exponent_energy(theta, &b, 0.0);
    }
    let sigma = budget.var_n.sqrt();
    let mean_abs_n = sigma * (2.0 / PI).sqrt();
    sup_concave(theta - alpha * mean_abs_n, f64::INFINITY, |l| {
        l * theta - w_atoms.expect(|a| abs_fa_log_mgf(l, a.w, alpha, sigma))
    })
}

/// FA exponent for either kind with weights `joint`; for the energy kind
/// only `E{W²}` matters.
pub fn fa_exponent_extended(kind: DetectorKind, theta: f64, budget: &PowerBudget, alpha: f64, joint: &JointAtoms) -> ExponentResult {
    match kind {
        DetectorKind::Energy => {
            let b = (*budget).with_p_w(joint.weight_power().max(f64::MIN_POSITIVE));
            fa_exponent_energy(theta, &b, alpha)
        }
        DetectorKind::Abs => fa_exponent_abs(theta, budget, alpha, joint),
    }
}

/// One point of an α sweep at fixed FA exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub alpha: f64,
    pub p_w: f64,
    pub e_fa: f64,
    pub e_md: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSweep {
    pub best: SweepPoint,
    /// Every feasible α in grid order.
    pub points: Vec<SweepPoint>,
}

/// Rescales the weights of `pattern` so that the FA exponent at `theta`
/// equals `target` (bisection in `log P_w`, the exponent falling in `P_w`).
pub fn solve_power_for_fa(
    kind: DetectorKind,
    pattern: &JointAtoms,
    alpha: f64,
    theta: f64,
    target: f64,
    budget: &PowerBudget,
) -> Result<f64> {
    let p0 = pattern.weight_power();
    if !(p0 > 0.0) {
        return Err(Error::invalid("weight pattern has zero power"));
    }
    let fa_at = |p_w: f64| {
        let joint = pattern.scale_weights((p_w / p0).sqrt());
        fa_exponent_extended(kind, theta, budget, alpha, &joint).value
    };
    let (mut lo, mut hi) = (1e-12f64, 1e12f64);
    if fa_at(lo) < target || fa_at(hi) > target {
        return Err(Error::Infeasible);
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if fa_at(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-13 {
            break;
        }
    }
    let p = (lo * hi).sqrt();
    if (fa_at(p) - target).abs() > 1e-6 * target.max(1.0) {
        return Err(Error::Infeasible);
    }
    Ok(p)
}

/// Among `(α, P_w)` pairs with the same FA exponent `e_fa_target` at
/// threshold `theta`, finds the one with the largest MD exponent. The
/// correlator keeps the direction of `pattern`'s weights; α values for which
/// no `P_w` attains the target are skipped.
pub fn sweep_alpha_fixed_fa(
    model: &NoiseModel,
    pattern: &JointAtoms,
    e_fa_target: f64,
    kind: DetectorKind,
    theta: f64,
    budget: &PowerBudget,
    alphas: &[f64],
) -> Result<AlphaSweep> {
    if !(e_fa_target > 0.0) {
        return Err(Error::invalid("target FA exponent must be > 0"));
    }
    use rayon::prelude::*;
    let evaluated: Vec<Option<Result<SweepPoint>>> = alphas
        .par_iter()
        .map(|&alpha| {
            let p_w = match solve_power_for_fa(kind, pattern, alpha, theta, e_fa_target, budget) {
                Ok(p) => p,
                Err(Error::Infeasible) => return None,
                Err(e) => return Some(Err(e)),
            };
            let joint = pattern.scale_weights((p_w / pattern.weight_power()).sqrt());
            let b = (*budget).with_p_w(p_w);
            let spec = ExtendedDetectorSpec { joint: joint.clone(), alpha, theta, kind };
            let e_fa = fa_exponent_extended(kind, theta, &b, alpha, &joint).value;
            Some(md_exponent_extended(&spec, &b, model).map(|e| SweepPoint { alpha, p_w, e_fa, e_md: e.value }))
        })
        .collect();
    let mut points = Vec::new();
    for p in evaluated.into_iter().flatten() {
        points.push(p?);
    }
    let best = points
        .iter()
        .copied()
        .reduce(|a, b| if b.e_md > a.e_md { b } else { a })
        .ok_or(Error::Infeasible)?;
    Ok(AlphaSweep { best, points })
}

/// Default α grid: 0 plus log-spaced values.
pub fn default_alpha_grid(hi: f64, points: usize) -> Vec<f64> {
    let mut g = vec![0.0];
    g.extend(log_space(hi * 1e-3, hi, points.max(2) - 1));
    g
}
