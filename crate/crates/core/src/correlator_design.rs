//! Optimal correlator weights for a given signal.
//!
//! For a fixed tilt `λ` the optimal weight for signal level `s` is
//! `g⁻¹(s | ρ, λ)` with `g(w) = C'(λw) + (ρ/λ + σ_N² λ) w`, where `ρ ≥ 0`
//! is the multiplier that enforces the correlator power budget. The outer
//! search over `λ` is done on a log grid with golden-section polish, since
//! the envelope over designed weights need not be concave in `λ`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cgf::NoiseModel;
use crate::error::{Error, Result};
use crate::exponents::{
    fa_exponent, md_exponent, md_objective, Atom, ExponentResult, JointAtoms, PowerBudget,
};
use crate::numeric::scalar::{grid_then_golden, lin_space, log_space, Maximum};

/// Number of log-spaced points in the outer λ grid.
pub const LAMBDA_GRID_POINTS: usize = 200;
/// Number of α grid points in the 4-ASK search.
pub const FOUR_ASK_GRID_POINTS: usize = 2001;
/// Level/boundary change at which the quantizer iteration stops.
pub const QUANTIZER_TOL: f64 = 1e-9;
pub const QUANTIZER_MAX_SWEEPS: usize = 500;

const OUTER_REL_TOL: f64 = 1e-10;
const OUTER_MAX_ITER: usize = 200;

/// One signal level with its probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalAtom {
    pub s: f64,
    pub weight: f64,
}

/// Finite distribution of signal levels (the empirical law of `s_t`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<SignalAtom>", into = "Vec<SignalAtom>")]
pub struct SignalAtoms {
    atoms: Vec<SignalAtom>,
}

impl TryFrom<Vec<SignalAtom>> for SignalAtoms {
    type Error = Error;
    fn try_from(atoms: Vec<SignalAtom>) -> Result<Self> {
        SignalAtoms::normalized(atoms)
    }
}

impl From<SignalAtoms> for Vec<SignalAtom> {
    fn from(s: SignalAtoms) -> Self {
        s.atoms
    }
}

impl SignalAtoms {
    /// Rescales non-negative weights to sum to one.
    pub fn normalized(mut atoms: Vec<SignalAtom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::invalid("signal atom list is empty"));
        }
        if atoms
            .iter()
            .any(|a| !(a.s.is_finite() && a.weight.is_finite() && a.weight >= 0.0))
        {
            return Err(Error::invalid("signal atoms need finite levels and weights >= 0"));
        }
        let total: f64 = atoms.iter().map(|a| a.weight).sum();
        if total <= 0.0 {
            return Err(Error::invalid("signal atom weights sum to zero"));
        }
        for a in &mut atoms {
            a.weight /= total;
        }
        Ok(Self { atoms })
    }

    /// Equiprobable levels, e.g. the samples of a signal vector.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        Self::normalized(values.iter().map(|&s| SignalAtom { s, weight: 1.0 }).collect())
    }

    /// Midpoint-rule atoms for `S` uniform on `[-half_width, half_width]`.
    pub fn uniform(half_width: f64, n: usize) -> Result<Self> {
        let h = 2.0 * half_width / n as f64;
        Self::from_values(
            &(0..n)
                .map(|i| -half_width + (i as f64 + 0.5) * h)
                .collect::<Vec<_>>(),
        )
    }

    /// 4-ASK levels `±a, ±3a`, equiprobable.
    pub fn four_ask(a: f64) -> Result<Self> {
        Self::from_values(&[-3.0 * a, -a, a, 3.0 * a])
    }

    pub fn atoms(&self) -> &[SignalAtom] {
        &self.atoms
    }

    /// `E[S²]`.
    pub fn power(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight * a.s * a.s).sum()
    }

    /// `E[|S|]`.
    pub fn mean_abs(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight * a.s.abs()).sum()
    }

    /// Pairs each level with the weight returned by `f`.
    pub fn map_weights<F: FnMut(f64) -> f64>(&self, mut f: F) -> JointAtoms {
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom { w: f(a.s), s: a.s, weight: a.weight })
            .collect();
        JointAtoms::normalized(atoms).expect("signal atoms are validated")
    }

    fn require_power(&self) -> Result<f64> {
        let p = self.power();
        if p > 0.0 {
            Ok(p)
        } else {
            Err(Error::DegenerateSignal)
        }
    }
}

/// A designed detector with its achieved exponents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorDesign {
    pub joint: JointAtoms,
    pub theta: f64,
    /// Energy / absolute-value coefficient; 0 for a plain correlator.
    pub alpha: f64,
    pub e_fa: f64,
    pub e_md: ExponentResult,
    pub rho_star: f64,
    /// Tilt at which the weights were designed.
    pub lambda_design: f64,
}

/// A k-level correlator: `w = levels[i]` when `boundaries[i-1] <= s < boundaries[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizerDesign {
    pub boundaries: Vec<f64>,
    pub levels: Vec<f64>,
    pub rho: f64,
    pub lambda: f64,
    pub e_md: ExponentResult,
    pub joint: JointAtoms,
    pub sweeps: usize,
}

impl QuantizerDesign {
    /// Cell index of signal level `s`.
    pub fn cell_of(&self, s: f64) -> usize {
        self.boundaries.partition_point(|&b| b <= s)
    }

    /// Correlator weight assigned to `s`.
    pub fn weight_for(&self, s: f64) -> f64 {
        self.levels[self.cell_of(s)]
    }

    /// `Σ P(I_i) ω_i²` under the design's signal distribution.
    pub fn power(&self) -> f64 {
        self.joint.weight_power()
    }
}

/// Result of the direct 4-ASK level search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourAskDesign {
    /// Inner level (weight for `±a`).
    pub alpha_star: f64,
    /// Outer level (weight for `±3a`), `√(2P_w − α²)`.
    pub beta_star: f64,
    pub e_md: ExponentResult,
}

/// `g(w | ρ, λ) = C'(λw) + (ρ/λ + σ_N² λ) w`.
pub fn g_eval(model: &NoiseModel, w: f64, rho: f64, lambda: f64, var_n: f64) -> Result<f64> {
    Ok(model.cgf_deriv(lambda * w)? + (rho / lambda + var_n * lambda) * w)
}

/// Inverse of the strictly increasing `g(· | ρ, λ)`, by bisection.
///
/// `g(w) >= (ρ/λ + σ_N² λ) w` for `w >= 0` gives the upper end of the
/// bracket; for Laplacian-type noise it is also clipped at the pole.
pub fn g_inverse(model: &NoiseModel, s: f64, rho: f64, lambda: f64, var_n: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    let target = s.abs();
    let slope = rho / lambda + var_n * lambda;
    let mut hi = (target / slope).min(model.feasible_limit() / lambda);
    let mut lo = 0.0;
    let g = |w: f64| model.cgf_deriv(lambda * w).map_or(f64::INFINITY, |d| d + slope * w);
    if g(hi) <= target {
        return hi.copysign(s);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let w = if (g(lo) - target).abs() <= (g(hi) - target).abs() { lo } else { hi };
    w.copysign(s)
}

/// `E[g⁻¹(m|ρ,λ)²]` over `(level, probability)` pairs.
fn designed_power(model: &NoiseModel, levels: &[(f64, f64)], rho: f64, lambda: f64, var_n: f64) -> f64 {
    levels
        .iter()
        .map(|&(m, p)| {
            let w = g_inverse(model, m, rho, lambda, var_n);
            p * w * w
        })
        .sum()
}

fn tune_rho_levels(model: &NoiseModel, levels: &[(f64, f64)], lambda: f64, budget: &PowerBudget) -> f64 {
    let p_w = budget.p_w;
    if designed_power(model, levels, 0.0, lambda, budget.var_n) <= p_w {
        return 0.0;
    }
    // |g⁻¹(s|ρ,λ)| <= λ|s|/ρ, so this ρ already meets the budget.
    let es2: f64 = levels.iter().map(|&(m, p)| p * m * m).sum();
    let mut hi = lambda * (es2 / p_w).sqrt();
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-15 * hi {
            break;
        }
        if designed_power(model, levels, mid, lambda, budget.var_n) > p_w {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Smallest `ρ >= 0` with `E[g⁻¹(S|ρ,λ)²] <= P_w` (zero when the budget is
/// slack at `ρ = 0`). Each `|g⁻¹(s|ρ,λ)|` decreases in `ρ`, so bisection
/// applies; the returned `ρ` is on the feasible side.
pub fn tune_rho(model: &NoiseModel, signal: &SignalAtoms, lambda: f64, budget: &PowerBudget) -> f64 {
    let levels: Vec<(f64, f64)> = signal.atoms().iter().map(|a| (a.s, a.weight)).collect();
    tune_rho_levels(model, &levels, lambda, budget)
}

/// Weights `w(s) = g⁻¹(s | ρ(λ), λ)` at tilt `λ`, and the tuned `ρ`.
pub fn designed_weights(
    model: &NoiseModel,
    signal: &SignalAtoms,
    lambda: f64,
    budget: &PowerBudget,
) -> (JointAtoms, f64) {
    let rho = tune_rho(model, signal, lambda, budget);
    let joint = signal.map_weights(|s| g_inverse(model, s, rho, lambda, budget.var_n));
    (joint, rho)
}

/// Smallest tilt at which the budget is slack (`ρ = 0`). With `ρ = 0` the
/// product `λ·g⁻¹(s|0,λ)` does not depend on `λ`, which gives the closed form
/// `√(E[g⁻¹(S|0,1)²] / P_w)`.
pub fn slack_threshold(model: &NoiseModel, signal: &SignalAtoms, budget: &PowerBudget) -> f64 {
    let h2: f64 = signal
        .atoms()
        .iter()
        .map(|a| {
            let x = g_inverse(model, a.s, 0.0, 1.0, budget.var_n);
            a.weight * x * x
        })
        .sum();
    (h2 / budget.p_w).sqrt()
}

/// Outer λ grid for designed-weight searches.
///
/// `λ_ref` is the optimal tilt of the noise-free matched correlator; the
/// grid extends well below it (strong `Z` lowers the optimal tilt) and
/// past the point where the budget stops binding.
fn outer_lambda_grid(signal_power: f64, theta: f64, budget: &PowerBudget) -> Vec<f64> {
    let top = (budget.p_w * signal_power).sqrt();
    let lambda_ref = (top - theta).max(1e-12 * top) / (budget.var_n * budget.p_w);
    let lambda_slack = (signal_power / budget.p_w).sqrt() / budget.var_n;
    let lo = 1e-4 * lambda_ref;
    let hi = (1e2 * lambda_ref).max(10.0 * lambda_slack);
    log_space(lo, hi, LAMBDA_GRID_POINTS)
}

/// Scales weights up to use the whole power budget; this never lowers the
/// MD exponent at a fixed threshold.
fn fill_budget(joint: JointAtoms, budget: &PowerBudget) -> JointAtoms {
    let power = joint.weight_power();
    if power > 0.0 && power < budget.p_w {
        joint.scale_weights((budget.p_w / power).sqrt())
    } else {
        joint
    }
}

fn build_design(
    joint: JointAtoms,
    theta: f64,
    budget: &PowerBudget,
    model: &NoiseModel,
    rho: f64,
    lambda: f64,
) -> DetectorDesign {
    let e_md = md_exponent(&joint, theta, budget, model);
    DetectorDesign {
        joint,
        theta,
        alpha: 0.0,
        e_fa: fa_exponent(theta, budget),
        e_md,
        rho_star: rho,
        lambda_design: lambda,
    }
}

/// Optimal continuous-valued correlator for `signal` at threshold `theta`.
pub fn design_optimal(
    model: &NoiseModel,
    signal: &SignalAtoms,
    theta: f64,
    budget: &PowerBudget,
) -> Result<DetectorDesign> {
    let es2 = signal.require_power()?;
    if theta >= (budget.p_w * es2).sqrt() {
        // E[WS] <= √(P_w E[S²]) <= θ for every admissible correlator.
        let joint = design_classical(signal, budget)?;
        return Ok(build_design(joint, theta, budget, model, 0.0, 0.0));
    }
    let objective = |lambda: f64| {
        let (joint, _) = designed_weights(model, signal, lambda, budget);
        md_objective(&joint, lambda, theta, budget, model).unwrap_or(f64::NEG_INFINITY)
    };
    let grid = outer_lambda_grid(es2, theta, budget);
    let best: Maximum = grid_then_golden(objective, &grid, OUTER_REL_TOL, OUTER_MAX_ITER);
    // Past the slack threshold the objective is flat (θ = 0) or falling, so
    // the threshold itself is the smallest maximizer.
    let lambda = best.x.min(slack_threshold(model, signal, budget));
    let (joint, rho) = designed_weights(model, signal, lambda, budget);
    Ok(build_design(fill_budget(joint, budget), theta, budget, model, rho, lambda))
}

/// The matched ("classical") correlator `w = √(P_w / E[S²]) · s`.
pub fn design_classical(signal: &SignalAtoms, budget: &PowerBudget) -> Result<JointAtoms> {
    let es2 = signal.require_power()?;
    let c = (budget.p_w / es2).sqrt();
    Ok(signal.map_weights(|s| c * s))
}

/// Bipolar correlator `w = √P_w · sgn(s)`, with `sgn(0) = +1`.
pub fn design_binary(signal: &SignalAtoms, budget: &PowerBudget) -> JointAtoms {
    let a = budget.p_w.sqrt();
    signal.map_weights(|s| if s < 0.0 { -a } else { a })
}

// ---------------------------------------------------------------------------
// k-level quantized correlator
// ---------------------------------------------------------------------------

/// Distinct signal levels in increasing order with merged probabilities.
fn distinct_levels(signal: &SignalAtoms) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = signal.atoms().iter().map(|a| (a.s, a.weight)).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
    for (s, p) in v {
        match out.last_mut() {
            Some(last) if last.0 == s => last.1 += p,
            _ => out.push((s, p)),
        }
    }
    out
}

/// Cells as half-open index ranges into the distinct-level array.
fn cells_from_boundaries(levels: &[(f64, f64)], boundaries: &[f64]) -> Vec<(usize, usize)> {
    let mut cells = Vec::with_capacity(boundaries.len() + 1);
    let mut start = 0;
    for &b in boundaries {
        let end = levels.partition_point(|l| l.0 < b);
        cells.push((start, end.max(start)));
        start = end.max(start);
    }
    cells.push((start, levels.len()));
    cells
}

fn cell_mass(levels: &[(f64, f64)], cell: (usize, usize)) -> f64 {
    levels[cell.0..cell.1].iter().map(|l| l.1).sum()
}

fn cell_mean(levels: &[(f64, f64)], cell: (usize, usize)) -> f64 {
    let mass = cell_mass(levels, cell);
    levels[cell.0..cell.1].iter().map(|l| l.0 * l.1).sum::<f64>() / mass
}

/// Splits a cell at its probability median, keeping both halves non-empty.
fn split_cell(levels: &[(f64, f64)], cell: (usize, usize)) -> ((usize, usize), (usize, usize)) {
    let mass = cell_mass(levels, cell);
    let mut acc = 0.0;
    let mut cut = cell.0 + 1;
    for (i, level) in levels.iter().enumerate().take(cell.1 - 1).skip(cell.0) {
        acc += level.1;
        cut = i + 1;
        if acc >= 0.5 * mass {
            break;
        }
    }
    ((cell.0, cut), (cut, cell.1))
}

/// Drops empty cells and re-splits the widest occupied cell until every
/// cell has positive probability (or no cell can be split further).
fn repair_cells(levels: &[(f64, f64)], cells: Vec<(usize, usize)>, k: usize) -> Vec<(usize, usize)> {
    let mut cells: Vec<(usize, usize)> = cells
        .into_iter()
        .filter(|&c| c.1 > c.0 && cell_mass(levels, c) > 0.0)
        .collect();
    while cells.len() < k {
        let widest = cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.1 - c.0 >= 2)
            .max_by(|a, b| {
                let wa = levels[a.1 .1 - 1].0 - levels[a.1 .0].0;
                let wb = levels[b.1 .1 - 1].0 - levels[b.1 .0].0;
                wa.total_cmp(&wb).then(b.0.cmp(&a.0))
            })
            .map(|(i, _)| i);
        let Some(i) = widest else { break };
        let (left, right) = split_cell(levels, cells[i]);
        cells.splice(i..=i, [left, right]);
    }
    cells
}

/// Initial cells at the probability quantiles `i/k`.
fn quantile_cells(levels: &[(f64, f64)], k: usize) -> Vec<(usize, usize)> {
    let k = k.min(levels.len());
    let mut cuts = Vec::with_capacity(k + 1);
    cuts.push(0usize);
    let mut acc = 0.0;
    let mut i = 0;
    for j in 1..k {
        let target = j as f64 / k as f64;
        let min_cut = cuts[j - 1] + 1;
        let max_cut = levels.len() - (k - j);
        while i < levels.len() && acc + 0.5 * levels[i].1 < target {
            acc += levels[i].1;
            i += 1;
        }
        let _ = acc;
        cuts.push(i.clamp(min_cut, max_cut));
    }
    cuts.push(levels.len());
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

fn boundaries_from_cells(levels: &[(f64, f64)], cells: &[(usize, usize)]) -> Vec<f64> {
    cells[1..]
        .iter()
        .map(|c| 0.5 * (levels[c.0 - 1].0 + levels[c.0].0))
        .collect()
}

/// Nearest-neighbour boundary between adjacent levels: the signal value at
/// which both levels give the same per-sample Lagrangian.
fn tie_boundary(model: &NoiseModel, lo: f64, hi: f64, rho: f64, lambda: f64, var_n: f64) -> Option<f64> {
    if hi == lo {
        return None;
    }
    let c_hi = model.cgf(lambda * hi).ok()?;
    let c_lo = model.cgf(lambda * lo).ok()?;
    Some((c_hi - c_lo + 0.5 * (rho + lambda * lambda * var_n) * (hi * hi - lo * lo)) / (lambda * (hi - lo)))
}

#[derive(Debug, Clone)]
struct LloydState {
    boundaries: Vec<f64>,
    levels: Vec<f64>,
    rho: f64,
    sweeps: usize,
}

/// Alternates the centroid and nearest-neighbour conditions at fixed `λ`,
/// re-tuning `ρ` every sweep.
fn lloyd(
    model: &NoiseModel,
    levels: &[(f64, f64)],
    init: Vec<(usize, usize)>,
    k: usize,
    lambda: f64,
    budget: &PowerBudget,
) -> LloydState {
    let var_n = budget.var_n;
    let mut cells = repair_cells(levels, init, k);
    let mut boundaries = boundaries_from_cells(levels, &cells);
    let mut omega: Vec<f64> = Vec::new();
    let mut rho = 0.0;
    let mut sweeps = 0;
    while sweeps < QUANTIZER_MAX_SWEEPS {
        sweeps += 1;
        let centroids: Vec<(f64, f64)> = cells
            .iter()
            .map(|&c| (cell_mean(levels, c), cell_mass(levels, c)))
            .collect();
        rho = tune_rho_levels(model, &centroids, lambda, budget);
        let new_omega: Vec<f64> = centroids
            .iter()
            .map(|&(m, _)| g_inverse(model, m, rho, lambda, var_n))
            .collect();
        let mut new_bounds = Vec::with_capacity(new_omega.len().saturating_sub(1));
        for i in 1..new_omega.len() {
            let fallback = 0.5 * (centroids[i - 1].0 + centroids[i].0);
            let b = tie_boundary(model, new_omega[i - 1], new_omega[i], rho, lambda, var_n)
                .filter(|b| b.is_finite())
                .unwrap_or(fallback);
            new_bounds.push(b);
        }
        // keep boundaries sorted
        for i in 1..new_bounds.len() {
            if new_bounds[i] < new_bounds[i - 1] {
                new_bounds[i] = new_bounds[i - 1];
            }
        }
        let change = if omega.len() == new_omega.len() && boundaries.len() == new_bounds.len() {
            omega
                .iter()
                .zip(&new_omega)
                .chain(boundaries.iter().zip(&new_bounds))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        omega = new_omega;
        boundaries = new_bounds;
        if change < QUANTIZER_TOL {
            break;
        }
        let next = cells_from_boundaries(levels, &boundaries);
        let repaired = repair_cells(levels, next.clone(), k);
        if repaired != next {
            boundaries = boundaries_from_cells(levels, &repaired);
        }
        cells = repaired;
    }
    // Use the whole budget; at rho > 0 this only removes bisection slack.
    {
        let probs: Vec<f64> = cells.iter().map(|&c| cell_mass(levels, c)).collect();
        let power: f64 = omega.iter().zip(&probs).map(|(w, p)| p * w * w).sum();
        if power > 0.0 {
            let c = (budget.p_w / power).sqrt();
            omega.iter_mut().for_each(|w| *w *= c);
        }
    }
    LloydState { boundaries, levels: omega, rho, sweeps }
}

fn quantizer_joint(signal: &SignalAtoms, state: &LloydState) -> JointAtoms {
    signal.map_weights(|s| state.levels[state.boundaries.partition_point(|&b| b <= s)])
}

/// Warm-start cells: the boundaries of `prev` plus one median split of its
/// widest cell.
fn warm_cells(levels: &[(f64, f64)], prev: &QuantizerDesign, k: usize) -> Vec<(usize, usize)> {
    let cells = cells_from_boundaries(levels, &prev.boundaries);
    repair_cells(levels, cells, k)
}

/// k-level correlator by alternating the centroid and nearest-neighbour
/// conditions inside an outer λ search.
///
/// When `warm_start` is given, each inner iteration starts from its cells
/// (plus a split) and the warm design itself stays a candidate, so the
/// returned exponent never falls below it.
pub fn design_quantized_with(
    model: &NoiseModel,
    signal: &SignalAtoms,
    k: usize,
    theta: f64,
    budget: &PowerBudget,
    warm_start: Option<&QuantizerDesign>,
) -> Result<QuantizerDesign> {
    if k < 2 {
        return Err(Error::invalid(format!("quantizer needs k >= 2, got {k}")));
    }
    let es2 = signal.require_power()?;
    let levels = distinct_levels(signal);
    let init = |lambda: f64| {
        let cells = match warm_start {
            Some(prev) => warm_cells(&levels, prev, k),
            None => quantile_cells(&levels, k),
        };
        lloyd(model, &levels, cells, k, lambda, budget)
    };
    let objective = |lambda: f64| {
        let state = init(lambda);
        let joint = quantizer_joint(signal, &state);
        md_objective(&joint, lambda, theta, budget, model).unwrap_or(f64::NEG_INFINITY)
    };
    let top = (budget.p_w * es2).sqrt();
    let grid = outer_lambda_grid(es2, theta.min(top * (1.0 - 1e-9)), budget);
    let best = grid_then_golden(objective, &grid, OUTER_REL_TOL, OUTER_MAX_ITER);
    let state = init(best.x);
    let joint = quantizer_joint(signal, &state);
    let e_md = md_exponent(&joint, theta, budget, model);
    let design = QuantizerDesign {
        boundaries: state.boundaries,
        levels: state.levels,
        rho: state.rho,
        lambda: best.x,
        e_md,
        joint,
        sweeps: state.sweeps,
    };
    match warm_start {
        Some(prev) if prev.e_md.value > design.e_md.value => Ok(prev.clone()),
        _ => Ok(design),
    }
}

/// k-level correlator from quantile initialization.
pub fn design_quantized(
    model: &NoiseModel,
    signal: &SignalAtoms,
    k: usize,
    theta: f64,
    budget: &PowerBudget,
) -> Result<QuantizerDesign> {
    design_quantized_with(model, signal, k, theta, budget, None)
}

/// Residuals of both fixed-point equation sets of a quantizer at its own
/// `(ρ, λ)`: `(max centroid residual, max boundary residual)`.
pub fn quantizer_residuals(
    model: &NoiseModel,
    signal: &SignalAtoms,
    design: &QuantizerDesign,
    budget: &PowerBudget,
) -> (f64, f64) {
    let levels = distinct_levels(signal);
    let cells = cells_from_boundaries(&levels, &design.boundaries);
    let mut centroid = 0.0f64;
    for (i, &c) in cells.iter().enumerate() {
        if c.1 > c.0 {
            let m = cell_mean(&levels, c);
            let g = g_eval(model, design.levels[i], design.rho, design.lambda, budget.var_n)
                .unwrap_or(f64::INFINITY);
            centroid = centroid.max((g - m).abs());
        }
    }
    let mut boundary = 0.0f64;
    for i in 1..design.levels.len() {
        if let Some(b) = tie_boundary(
            model,
            design.levels[i - 1],
            design.levels[i],
            design.rho,
            design.lambda,
            budget.var_n,
        ) {
            boundary = boundary.max((b - design.boundaries[i - 1]).abs());
        }
    }
    (centroid, boundary)
}

// ---------------------------------------------------------------------------
// 4-ASK direct level search
// ---------------------------------------------------------------------------

/// MD exponent of the 4-ASK correlator with inner level `alpha` and outer
/// level `√(2P_w − α²)`.
pub fn md_exponent_4ask(
    model: &NoiseModel,
    a: f64,
    alpha: f64,
    theta: f64,
    budget: &PowerBudget,
) -> ExponentResult {
    let beta = (2.0 * budget.p_w - alpha * alpha).max(0.0).sqrt();
    let joint = JointAtoms::new(vec![
        Atom { w: alpha, s: a, weight: 0.5 },
        Atom { w: beta, s: 3.0 * a, weight: 0.5 },
    ])
    .expect("two half-weight atoms");
    md_exponent(&joint, theta, budget, model)
}

/// Inner level of the matched correlator for 4-ASK: `√(P_w / 5)`.
pub fn classical_4ask_alpha(budget: &PowerBudget) -> f64 {
    (budget.p_w / 5.0).sqrt()
}

/// Maximizes the 4-ASK MD exponent over the inner level `α ∈ [0, √(2P_w)]`.
pub fn design_4ask(model: &NoiseModel, a: f64, theta: f64, budget: &PowerBudget) -> Result<FourAskDesign> {
    if !(a > 0.0) {
        return Err(Error::invalid(format!("4-ASK amplitude must be > 0, got {a}")));
    }
    let alpha_max = (2.0 * budget.p_w).sqrt();
    let grid = lin_space(0.0, alpha_max, FOUR_ASK_GRID_POINTS);
    let best = grid_then_golden(
        |alpha| md_exponent_4ask(model, a, alpha, theta, budget).value,
        &grid,
        1e-12,
        OUTER_MAX_ITER,
    );
    let e_md = md_exponent_4ask(model, a, best.x, theta, budget);
    Ok(FourAskDesign {
        alpha_star: best.x,
        beta_star: (2.0 * budget.p_w - best.x * best.x).max(0.0).sqrt(),
        e_md,
    })
}

/// One threshold of a classical-versus-optimal 4-ASK comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourAskCurvePoint {
    pub theta: f64,
    pub e_md_classical: f64,
    pub e_md_optimal: f64,
}

/// `points` equally spaced thresholds on `[0, √(P_w E[S²]))`; every MD
/// exponent vanishes at the right end.
pub fn theta_grid(signal_power: f64, budget: &PowerBudget, points: usize) -> Vec<f64> {
    let top = (budget.p_w * signal_power).sqrt();
    (0..points).map(|i| top * i as f64 / points as f64).collect()
}

/// Classical and optimal 4-ASK MD exponents over [`theta_grid`].
pub fn four_ask_curves(
    model: &NoiseModel,
    a: f64,
    budget: &PowerBudget,
    points: usize,
) -> Result<Vec<FourAskCurvePoint>> {
    let alpha_c = classical_4ask_alpha(budget);
    theta_grid(5.0 * a * a, budget, points)
        .into_par_iter()
        .map(|theta| {
            let opt = design_4ask(model, a, theta, budget)?;
            Ok(FourAskCurvePoint {
                theta,
                e_md_classical: md_exponent_4ask(model, a, alpha_c, theta, budget).value,
                e_md_optimal: opt.e_md.value,
            })
        })
        .collect()
}
