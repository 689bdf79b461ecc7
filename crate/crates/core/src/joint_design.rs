//! Joint design of signal and correlator under power constraints.
//!
//! Every quantity here depends on the tilt `λ` and the power `p` only
//! through `u = λ² p`, so the lower convex envelope is built once, in `u`,
//! for the function `φ(u) = C(√u)`, and read off for any `(λ, p)`.

use serde::{Deserialize, Serialize};

use crate::cgf::NoiseModel;
use crate::error::{Error, Result};
use crate::exponents::{md_exponent, Atom, JointAtoms, PowerBudget};
use crate::numeric::hull::{hull_segment, lower_hull};
use crate::numeric::scalar::{golden_section_max, grid_then_golden, lin_space, log_space, Maximum};

/// Grid size used to classify the shape of `p ↦ C(λ√p)`.
pub const CURVATURE_GRID: usize = 10_000;
/// Samples per half of the mixed log/linear envelope grid.
pub const ENVELOPE_HALF_GRID: usize = 5_000;
/// Scan resolution for stationary levels.
pub const STATIONARY_SCAN: usize = 100_000;
/// Default cap on the power of a single level, as a multiple of `P_w`.
pub const DEFAULT_CAP_FACTOR: f64 = 1e6;

const JOINT_GRID: usize = 100;
const REFINE_ROUNDS: usize = 3;
const REFINE_POINTS: usize = 21;
const TWO_LEVEL_GRID: usize = 41;

/// Shape of `p ↦ C(λ√p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Curvature {
    Convex,
    Concave,
    Mixed,
}

/// Classifies `p ↦ C(λ√p)` on `[0, p_max]` from the signs of its second
/// differences. A linear function (Gaussian noise) counts as convex.
pub fn classify_curvature(model: &NoiseModel, lambda: f64, p_max: f64) -> Result<Curvature> {
    if !(lambda > 0.0 && p_max > 0.0) {
        return Err(Error::invalid("curvature needs lambda > 0 and p_max > 0"));
    }
    let ps = lin_space(0.0, p_max, CURVATURE_GRID);
    let values = ps
        .iter()
        .map(|&p| model.cgf(lambda * p.sqrt()))
        .collect::<Result<Vec<f64>>>()?;
    let (mut up, mut down) = (false, false);
    for w in values.windows(3) {
        let d2 = w[2] - 2.0 * w[1] + w[0];
        let tol = 1e-10 * (1.0 + w[1].abs());
        up |= d2 > tol;
        down |= d2 < -tol;
    }
    Ok(match (up, down) {
        (_, false) => Curvature::Convex,
        (false, true) => Curvature::Concave,
        (true, true) => Curvature::Mixed,
    })
}

/// Non-negative solutions of `C'(λw) = κ w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryLevels {
    pub slope_kappa: f64,
    /// Sorted, always starting with 0.
    pub roots: Vec<f64>,
    /// Set when every `w` solves the equation (Gaussian noise with
    /// `κ = σ_Z² λ`).
    pub continuum: bool,
}

/// Right end of the root scan: past it `C'(λw) < κw` (or the CGF ends).
fn stationary_scan_limit(model: &NoiseModel, lambda: f64, kappa: f64) -> f64 {
    match *model {
        NoiseModel::BinarySymmetric { z0 } | NoiseModel::Uniform { z0 } => 2.0 * z0 / kappa,
        NoiseModel::Gaussian { .. } => 0.0,
        _ => model.feasible_limit() / lambda,
    }
}

/// All roots of `C'(λw) − κw` on `w ≥ 0`, found by a sign-change scan and
/// bisection.
pub fn stationary_levels(model: &NoiseModel, lambda: f64, kappa: f64) -> Result<StationaryLevels> {
    if !(lambda > 0.0 && kappa > 0.0) {
        return Err(Error::invalid("stationary levels need lambda > 0 and kappa > 0"));
    }
    let mut out = StationaryLevels { slope_kappa: kappa, roots: vec![0.0], continuum: false };
    if let NoiseModel::Gaussian { var_z } = *model {
        out.continuum = (var_z * lambda - kappa).abs() <= 1e-12 * kappa;
        return Ok(out);
    }
    let h = |w: f64| model.cgf_deriv(lambda * w).map(|d| d - kappa * w);
    let w_max = stationary_scan_limit(model, lambda, kappa);
    let step = w_max / STATIONARY_SCAN as f64;
    let mut prev_w = step;
    let mut prev_h = h(prev_w)?;
    for i in 2..=STATIONARY_SCAN {
        let w = step * i as f64;
        let Ok(hw) = h(w) else { break };
        if hw == 0.0 {
            out.roots.push(w);
        } else if prev_h != 0.0 && (hw > 0.0) != (prev_h > 0.0) {
            let (mut lo, mut hi) = (prev_w, w);
            let rising = hw > 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let hm = h(mid)?;
                if (hm > 0.0) == rising {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let root = if h(lo)?.abs() <= h(hi)?.abs() { lo } else { hi };
            out.roots.push(root);
        }
        prev_w = w;
        prev_h = hw;
    }
    Ok(out)
}

/// A point of the lower convex envelope of `p ↦ C(λ√p)`, realized as the
/// mixture `(1 − α)·C(λ√p0) + α·C(λ√p1)` with `(1 − α)p0 + αp1 = p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeValue {
    pub value: f64,
    pub p0: f64,
    pub p1: f64,
    pub mix_alpha: f64,
}

/// Lower convex envelope of `φ(u) = C(√u)` on `[0, u_cap]`.
#[derive(Debug, Clone)]
pub struct Envelope {
    model: NoiseModel,
    us: Vec<f64>,
    hull: Vec<usize>,
    u_cap: f64,
}

/// Envelope point in `u` coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopePoint {
    pub value: f64,
    pub u0: f64,
    pub u1: f64,
    pub mix_alpha: f64,
}

impl Envelope {
    /// Samples `φ` on a merged log/linear grid over `[0, u_cap]`; `u_cap`
    /// is clipped to the CGF domain.
    pub fn new(model: &NoiseModel, u_cap: f64) -> Result<Self> {
        if !(u_cap > 0.0) {
            return Err(Error::invalid("envelope cap must be > 0"));
        }
        let u_cap = u_cap.min(model.feasible_limit().powi(2) * (1.0 - 1e-12));
        let mut us = lin_space(0.0, u_cap, ENVELOPE_HALF_GRID);
        us.extend(log_space(u_cap * 1e-12, u_cap, ENVELOPE_HALF_GRID));
        us.sort_by(f64::total_cmp);
        us.dedup();
        let phis = us
            .iter()
            .map(|&u| model.cgf(u.sqrt()))
            .collect::<Result<Vec<f64>>>()?;
        let hull = lower_hull(&us, &phis);
        Ok(Self { model: *model, us, hull, u_cap })
    }

    pub fn u_cap(&self) -> f64 {
        self.u_cap
    }

    fn phi(&self, u: f64) -> f64 {
        self.model.cgf(u.sqrt()).unwrap_or(f64::INFINITY)
    }

    /// Envelope value at `u`, with the two contact points refined off the
    /// sample grid by coordinate golden-section search.
    pub fn eval(&self, u: f64) -> Result<EnvelopePoint> {
        if !(u >= 0.0) || u > self.u_cap {
            return Err(Error::Domain { value: u, limit: self.u_cap });
        }
        let direct = self.phi(u);
        let point = EnvelopePoint { value: direct, u0: u, u1: u, mix_alpha: 0.0 };
        if u == 0.0 {
            return Ok(point);
        }
        let (l, r) = hull_segment(&self.us, &self.hull, u);
        if l == r || r == l + 1 {
            return Ok(point);
        }
        let chord = |u0: f64, u1: f64| {
            if u1 <= u0 {
                return self.phi(u0);
            }
            let f0 = self.phi(u0);
            f0 + (u - u0) * (self.phi(u1) - f0) / (u1 - u0)
        };
        let last = self.us.len() - 1;
        let lo0 = self.us[l.saturating_sub(1)];
        let hi0 = self.us[(l + 1).min(last)].min(u);
        let lo1 = self.us[r - 1].max(u);
        let hi1 = self.us[(r + 1).min(last)];
        let (mut u0, mut u1) = (self.us[l], self.us[r]);
        let mut best = chord(u0, u1);
        for _ in 0..4 {
            let m0 = golden_section_max(|x| -chord(x, u1), lo0, hi0, 1e-14, 200);
            if -m0.value < best {
                best = -m0.value;
                u0 = m0.x;
            }
            let m1 = golden_section_max(|x| -chord(u0, x), lo1, hi1, 1e-14, 200);
            if -m1.value < best {
                best = -m1.value;
                u1 = m1.x;
            }
        }
        if best >= direct {
            return Ok(point);
        }
        Ok(EnvelopePoint {
            value: best,
            u0,
            u1,
            mix_alpha: (u - u0) / (u1 - u0),
        })
    }
}

/// `C̃_λ(p)`: lower convex envelope of `x ↦ C(λ√x)` on `[0, p_cap]` at `p`.
/// For Laplacian-type noise the cap is clipped to the CGF pole.
pub fn c_tilde(model: &NoiseModel, lambda: f64, p: f64, p_cap: f64) -> Result<EnvelopeValue> {
    if !(lambda > 0.0) || !(p >= 0.0) || p > p_cap {
        return Err(Error::invalid(format!(
            "c_tilde needs lambda > 0 and 0 <= p <= p_cap (lambda={lambda}, p={p}, p_cap={p_cap})"
        )));
    }
    let l2 = lambda * lambda;
    let env = Envelope::new(model, l2 * p_cap)?;
    let e = env.eval(l2 * p)?;
    Ok(EnvelopeValue { value: e.value, p0: e.u0 / l2, p1: e.u1 / l2, mix_alpha: e.mix_alpha })
}

/// Two magnitude levels of a jointly designed correlator: `|w| = a` with
/// probability `1 − mix_alpha`, `|w| = b` with probability `mix_alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLevels {
    pub a: f64,
    pub b: f64,
    pub mix_alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDesignResult {
    pub e_md: f64,
    pub lambda_star: f64,
    pub p_star: f64,
    pub levels: TwoLevels,
    pub curvature: Curvature,
    /// Envelope term `C̃_λ*(P*)` at the optimizer.
    pub c_tilde: f64,
    /// Ratio `s / w` of the matched signal levels, `√(P_s / P*)`.
    pub signal_scale: f64,
}

impl JointDesignResult {
    fn zero(model: &NoiseModel, budget: &PowerBudget) -> Self {
        let a = budget.p_w.sqrt();
        Self {
            e_md: 0.0,
            lambda_star: 0.0,
            p_star: budget.p_w,
            levels: TwoLevels { a, b: a, mix_alpha: 0.0 },
            curvature: classify_curvature(model, 1.0, budget.p_w.min(0.5 * model.feasible_limit().powi(2)))
                .unwrap_or(Curvature::Convex),
            c_tilde: 0.0,
            signal_scale: budget.p_s.map_or(1.0, |p_s| (p_s / budget.p_w).sqrt()),
        }
    }

    /// Symmetric joint atoms `(±w, ±w·scale)` realizing the design.
    pub fn joint_atoms(&self) -> JointAtoms {
        let TwoLevels { a, b, mix_alpha } = self.levels;
        symmetric_two_level(a, b, mix_alpha, self.signal_scale)
    }
}

/// Log grid of tilts around the interference-free optimum.
fn joint_lambda_grid(top: f64, theta: f64, budget: &PowerBudget, points: usize) -> Vec<f64> {
    let lambda_ref = (top - theta) / (budget.var_n * budget.p_w);
    log_space(1e-4 * lambda_ref, 1e2 * lambda_ref, points)
}

/// Repeats a local log grid around the incumbent, then polishes by golden
/// section.
fn refine_rounds<F>(f: &F, grid: &[f64], first: Maximum) -> Maximum
where
    F: Fn(f64) -> f64 + Sync,
{
    let mut best = first;
    let idx = grid.partition_point(|&x| x < best.x);
    let mut lo = grid[idx.saturating_sub(1)];
    let mut hi = grid[(idx + 1).min(grid.len() - 1)];
    for _ in 0..REFINE_ROUNDS {
        if !(hi > lo && lo > 0.0) {
            break;
        }
        let local = log_space(lo, hi, REFINE_POINTS);
        let m = grid_then_golden(f, &local, 1e-12, 200);
        if m.value > best.value {
            best = m;
        }
        let step = (hi / lo).powf(1.0 / (REFINE_POINTS - 1) as f64);
        lo = best.x / step;
        hi = best.x * step;
    }
    best
}

/// Best power `P ∈ (0, P_w]` at fixed `λ` with the envelope prebuilt.
fn best_power(env: &Envelope, lambda: f64, theta: f64, budget: &PowerBudget, p_s: f64) -> (Maximum, f64) {
    let l2 = lambda * lambda;
    let p_max = budget.p_w.min(env.u_cap() / l2);
    let obj = |p: f64| {
        if !(p > 0.0) {
            return -lambda * theta;
        }
        match env.eval(l2 * p) {
            Ok(e) => lambda * ((p_s * p).sqrt() - theta) - e.value - 0.5 * l2 * budget.var_n * p,
            Err(_) => f64::NEG_INFINITY,
        }
    };
    // Concave in P for fixed λ, so grid + golden finds the maximum.
    let grid = lin_space(p_max / JOINT_GRID as f64, p_max, JOINT_GRID);
    let mut best = 0;
    let values: Vec<f64> = grid.iter().map(|&p| obj(p)).collect();
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    let lo = if best == 0 { 0.0 } else { grid[best - 1] };
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let m = golden_section_max(obj, lo, hi, 1e-13, 200);
    let m = if m.value >= values[best] {
        m
    } else {
        Maximum { x: grid[best], value: values[best], iterations: 0, bracket: (lo, hi) }
    };
    (m, p_max)
}

/// Optimal jointly designed MD exponent
/// `sup_{λ≥0, 0<P≤P_w} λ(√(P_s P) − θ) − C̃_λ(P) − λ²σ_N²P/2`.
///
/// `p_cap` bounds the power of a single level (the finite stand-in for
/// letting one level carry all the energy in the limit).
pub fn joint_md_exponent(
    model: &NoiseModel,
    budget: &PowerBudget,
    theta: f64,
    p_cap: f64,
) -> Result<JointDesignResult> {
    budget.validate()?;
    let p_s = budget.signal_power()?;
    if !(p_cap >= budget.p_w) {
        return Err(Error::invalid(format!("p_cap {p_cap} must be at least p_w {}", budget.p_w)));
    }
    let top = (p_s * budget.p_w).sqrt();
    if theta >= top {
        return Ok(JointDesignResult::zero(model, budget));
    }
    let outer = |lambda: f64| {
        Envelope::new(model, lambda * lambda * p_cap)
            .map(|env| best_power(&env, lambda, theta, budget, p_s).0.value)
            .unwrap_or(f64::NEG_INFINITY)
    };
    let grid = joint_lambda_grid(top, theta, budget, JOINT_GRID);
    let first = grid_then_golden(outer, &grid, 1e-12, 200);
    let best = refine_rounds(&outer, &grid, first);
    if !(best.value > 0.0) {
        return Ok(JointDesignResult::zero(model, budget));
    }
    let lambda = best.x;
    let l2 = lambda * lambda;
    let env = Envelope::new(model, l2 * p_cap)?;
    let (pm, _) = best_power(&env, lambda, theta, budget, p_s);
    let p_star = pm.x;
    let e = env.eval(l2 * p_star)?;
    let curvature = classify_curvature(model, lambda, env.u_cap() / l2)?;
    Ok(JointDesignResult {
        e_md: pm.value,
        lambda_star: lambda,
        p_star,
        levels: TwoLevels { a: (e.u0 / l2).sqrt(), b: (e.u1 / l2).sqrt(), mix_alpha: e.mix_alpha },
        curvature,
        c_tilde: e.value,
        signal_scale: (p_s / p_star).sqrt(),
    })
}

/// Change in the joint exponent when `p_cap` is doubled.
pub fn cap_sensitivity(model: &NoiseModel, budget: &PowerBudget, theta: f64, p_cap: f64) -> Result<f64> {
    let a = joint_md_exponent(model, budget, theta, p_cap)?;
    let b = joint_md_exponent(model, budget, theta, 2.0 * p_cap)?;
    Ok((b.e_md - a.e_md).abs())
}

/// Symmetric atoms `(±w, ±w·scale)` with `|w| = a` w.p. `1 − mix`, `b` w.p. `mix`.
fn symmetric_two_level(a: f64, b: f64, mix: f64, scale: f64) -> JointAtoms {
    let mut atoms = Vec::with_capacity(4);
    for (level, mass) in [(a, 1.0 - mix), (b, mix)] {
        if mass > 0.0 {
            atoms.push(Atom { w: level, s: level * scale, weight: 0.5 * mass });
            atoms.push(Atom { w: -level, s: -level * scale, weight: 0.5 * mass });
        }
    }
    JointAtoms::normalized(atoms).expect("positive total mass")
}

fn two_level_atoms(a: f64, mix: f64, budget: &PowerBudget, scale: f64) -> JointAtoms {
    let p_w = budget.p_w;
    if mix <= 0.0 {
        return symmetric_two_level(p_w.sqrt(), p_w.sqrt(), 0.0, scale);
    }
    let b = ((p_w - (1.0 - mix) * a * a) / mix).max(0.0).sqrt();
    symmetric_two_level(a, b, mix, scale)
}

/// Direct search over two-level designs at full power `P_w`: levels
/// `a <= √P_w <= b` with mass `mix_alpha` on `b`, signals matched at power
/// `P_s`, and the exact MD exponent of the resulting atoms.
pub fn two_level_direct(model: &NoiseModel, budget: &PowerBudget, theta: f64) -> Result<JointDesignResult> {
    budget.validate()?;
    let p_s = budget.signal_power()?;
    let scale = (p_s / budget.p_w).sqrt();
    let root = budget.p_w.sqrt();
    let value = |a: f64, mix: f64| md_exponent(&two_level_atoms(a, mix, budget, scale), theta, budget, model).value;
    let mixes = lin_space(0.0, 1.0, TWO_LEVEL_GRID);
    let amps = lin_space(0.0, root, TWO_LEVEL_GRID);
    let mut best = (root, 0.0, value(root, 0.0));
    let (mut ia, mut im) = (TWO_LEVEL_GRID - 1, 0);
    for (i, &mix) in mixes.iter().enumerate() {
        for (j, &a) in amps.iter().enumerate() {
            let v = value(a, mix);
            if v > best.2 {
                best = (a, mix, v);
                ia = j;
                im = i;
            }
        }
    }
    let step_a = root / (TWO_LEVEL_GRID - 1) as f64;
    let step_m = 1.0 / (TWO_LEVEL_GRID - 1) as f64;
    let a_rng = ((amps[ia] - step_a).max(0.0), (amps[ia] + step_a).min(root));
    let m_rng = ((mixes[im] - step_m).max(0.0), (mixes[im] + step_m).min(1.0));
    for _ in 0..REFINE_ROUNDS + 1 {
        let (_, mix, v) = best;
        let ma = golden_section_max(|x| value(x, mix), a_rng.0, a_rng.1, 1e-12, 200);
        if ma.value > v {
            best = (ma.x, mix, ma.value);
        }
        let (a, _, v) = best;
        let mm = golden_section_max(|x| value(a, x), m_rng.0, m_rng.1, 1e-12, 200);
        if mm.value > v {
            best = (a, mm.x, mm.value);
        }
    }
    let (a, mix, _) = best;
    let joint = two_level_atoms(a, mix, budget, scale);
    let e = md_exponent(&joint, theta, budget, model);
    let levels = {
        let ws: Vec<f64> = joint.atoms().iter().map(|x| x.w.abs()).collect();
        let lo = ws.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ws.iter().cloned().fold(0.0, f64::max);
        let mass_hi: f64 = joint.atoms().iter().filter(|x| x.w.abs() == hi && hi > lo).map(|x| x.weight).sum();
        TwoLevels { a: lo, b: hi, mix_alpha: mass_hi }
    };
    let lambda = e.lambda_star;
    let c_tilde = if lambda > 0.0 {
        joint.expect(|x| model.cgf(lambda * x.w).unwrap_or(f64::INFINITY))
    } else {
        0.0
    };
    let curvature = if lambda > 0.0 {
        let p_max = (levels.b * levels.b).max(budget.p_w).min(0.99 * (model.feasible_limit() / lambda).powi(2));
        classify_curvature(model, lambda, p_max)?
    } else {
        Curvature::Convex
    };
    Ok(JointDesignResult {
        e_md: e.value,
        lambda_star: lambda,
        p_star: budget.p_w,
        levels,
        curvature,
        c_tilde,
        signal_scale: scale,
    })
}
