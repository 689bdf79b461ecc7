//! Finite-n simulation of the error probabilities, with exponential-tilting
//! importance sampling, and exponent estimation from the decay in `n`.
//!
//! Each trial draws from its own ChaCha8 stream, selected by `(seed, n)`
//! and positioned by the trial index, so results do not depend on how the
//! trials are split across threads. Reductions use pairwise summation over
//! trial-ordered vectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cgf::NoiseModel;
use crate::error::{Error, Result};
use crate::exponents::PowerBudget;
use crate::numeric::special::{log_add_exp, pairwise_sum, q_function};

/// Minimum number of trials per sample size.
pub const MIN_TRIALS: usize = 1_000;
/// Default sample sizes.
pub const DEFAULT_N_VALUES: [usize; 4] = [50, 100, 200, 400];
pub const DEFAULT_TRIALS: usize = 100_000;
/// Largest relative standard error accepted by [`estimate_slope`].
pub const MAX_REL_STDERR: f64 = 0.2;

/// Words of the ChaCha stream reserved for one trial.
const TRIAL_STRIDE_BITS: u32 = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n_values: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Tilt of the sampling distribution; 0 is plain Monte Carlo.
    #[serde(default)]
    pub tilt_lambda: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_values: DEFAULT_N_VALUES.to_vec(),
            trials: DEFAULT_TRIALS,
            seed: 0,
            tilt_lambda: 0.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(Error::invalid("n_values must be non-empty and positive"));
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("n_values must be strictly ascending"));
        }
        if self.trials < MIN_TRIALS {
            return Err(Error::invalid(format!("trials must be >= {MIN_TRIALS}, got {}", self.trials)));
        }
        if !(self.tilt_lambda >= 0.0 && self.tilt_lambda.is_finite()) {
            return Err(Error::invalid("tilt_lambda must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Probability estimate at one sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerN {
    pub n: usize,
    pub prob_estimate: f64,
    pub stderr: f64,
    pub rel_stderr: f64,
}

/// Exponent estimate: slope of `−ln P` against `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimate {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub per_n: Vec<PerN>,
}

/// Repeats `pattern` cyclically to length `n`.
pub fn tile(pattern: &[f64], n: usize) -> Vec<f64> {
    pattern.iter().copied().cycle().take(n).collect()
}

/// Exact FA probability `Q(θn / (σ_N ‖w‖))` of the correlator obtained by
/// tiling `w` to length `n` (the statistic is Gaussian under noise only).
pub fn fa_probability_exact(w: &[f64], theta: f64, n: usize, var_n: f64) -> Result<f64> {
    if w.is_empty() || n == 0 {
        return Err(Error::invalid("need a non-empty weight pattern and n > 0"));
    }
    let norm = tile(w, n).iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok(if theta > 0.0 { 0.0 } else { 1.0 });
    }
    Ok(q_function(theta * n as f64 / (var_n.sqrt() * norm)))
}

/// Draws `Z` from the density proportional to `f_Z(z)·e^{−v z}`.
pub fn sample_tilted_z<R: Rng + ?Sized>(model: &NoiseModel, v: f64, rng: &mut R) -> f64 {
    match *model {
        NoiseModel::Gaussian { var_z } => -v * var_z + var_z.sqrt() * rng.sample::<f64, _>(StandardNormal),
        NoiseModel::BinarySymmetric { z0 } => binary_tilted(z0, v, rng),
        NoiseModel::Laplacian { q } => laplace_tilted(q, v, rng),
        NoiseModel::Uniform { z0 } => uniform_tilted(z0, v, rng),
        NoiseModel::MixtureBinaryLaplace { delta, z0, q } => {
            // tilted component masses δ·cosh(z0 v) and (1−δ)·q²/(q²−v²)
            let la = delta.ln() + crate::numeric::special::ln_cosh(z0 * v);
            let lb = (1.0 - delta).ln() - ((1.0 - v / q) * (1.0 + v / q)).ln();
            let p_binary = (la - log_add_exp(la, lb)).exp();
            if rng.random::<f64>() < p_binary {
                binary_tilted(z0, v, rng)
            } else {
                laplace_tilted(q, v, rng)
            }
        }
    }
}

fn binary_tilted<R: Rng + ?Sized>(z0: f64, v: f64, rng: &mut R) -> f64 {
    // P(+z0) = e^{−v z0} / (e^{−v z0} + e^{v z0})
    let p_plus = 0.5 * (1.0 - (v * z0).tanh());
    if rng.random::<f64>() < p_plus {
        z0
    } else {
        -z0
    }
}

fn laplace_tilted<R: Rng + ?Sized>(q: f64, v: f64, rng: &mut R) -> f64 {
    // rate q+v on the positive side, q−v on the negative side
    let p_pos = (q - v) / (2.0 * q);
    if rng.random::<f64>() < p_pos {
        Exp::new(q + v).expect("positive rate").sample(rng)
    } else {
        -Exp::new(q - v).expect("positive rate").sample(rng)
    }
}

fn uniform_tilted<R: Rng + ?Sized>(z0: f64, v: f64, rng: &mut R) -> f64 {
    let width = 2.0 * z0;
    let u: f64 = rng.random();
    let k = v.abs();
    if k * width < 1e-12 {
        return -z0 + u * width;
    }
    // distance from the favoured edge is a truncated exponential with rate k
    let d = -(u * (-k * width).exp_m1()).ln_1p() / k;
    if v > 0.0 {
        -z0 + d
    } else {
        z0 - d
    }
}

fn trial_rng(seed: u64, n: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(n as u64);
    rng.set_word_pos((trial as u128) << TRIAL_STRIDE_BITS);
    rng
}

/// Fixed quantities of one simulated sample size.
struct TrialSetup<'a> {
    model: &'a NoiseModel,
    w: &'a [f64],
    /// `Σ w_t s_t`.
    mean_term: f64,
    /// `θ n`.
    threshold: f64,
    /// `Σ C(λw_t) + λ²σ_N² Σ w_t² / 2`.
    log_norm: f64,
    lambda: f64,
    sigma_n: f64,
}

impl TrialSetup<'_> {
    /// One importance-sampled term: indicator of a miss times the
    /// likelihood ratio of the nominal to the tilted law.
    fn run(&self, rng: &mut ChaCha8Rng) -> f64 {
        let var_n = self.sigma_n * self.sigma_n;
        let mut noise_corr = 0.0;
        for &wt in self.w {
            let v = self.lambda * wt;
            let z = sample_tilted_z(self.model, v, rng);
            let x = -v * var_n + self.sigma_n * rng.sample::<f64, _>(StandardNormal);
            noise_corr += wt * (z + x);
        }
        if self.mean_term + noise_corr <= self.threshold {
            (self.log_norm + self.lambda * noise_corr).exp()
        } else {
            0.0
        }
    }
}

/// Estimates `P{Σ w_t(s_t + Z_t + N_t) <= θn}` for every `n` in `config`,
/// with `w` and `s` obtained by tiling the given patterns.
///
/// Under tilt `λ`, `Z_t` is drawn from `f_Z(z)e^{−λw_t z}` and `N_t` from
/// `N(−λw_tσ_N², σ_N²)`; each trial carries the weight
/// `exp(Σ C(λw_t) + λ²σ_N²Σw_t²/2 + λΣw_t(Z_t + N_t))`.
pub fn md_probability(
    model: &NoiseModel,
    w: &[f64],
    s: &[f64],
    theta: f64,
    config: &SimConfig,
    budget: &PowerBudget,
) -> Result<Vec<PerN>> {
    config.validate()?;
    if w.is_empty() || w.len() != s.len() {
        return Err(Error::invalid("weight and signal patterns must be non-empty and of equal length"));
    }
    let lambda = config.tilt_lambda;
    let max_w = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !model.in_domain(lambda * max_w) {
        return Err(Error::DegenerateTilt(lambda * max_w));
    }
    let sigma_n = budget.var_n.sqrt();
    config
        .n_values
        .iter()
        .map(|&n| {
            let wn = tile(w, n);
            let sn = tile(s, n);
            let mean_term: f64 = wn.iter().zip(&sn).map(|(a, b)| a * b).sum();
            let mut log_norm = 0.5 * lambda * lambda * budget.var_n * wn.iter().map(|x| x * x).sum::<f64>();
            for &wt in &wn {
                log_norm += model.cgf(lambda * wt)?;
            }
            let setup = TrialSetup {
                model,
                w: &wn,
                mean_term,
                threshold: theta * n as f64,
                log_norm,
                lambda,
                sigma_n,
            };
            let terms: Vec<f64> = (0..config.trials)
                .into_par_iter()
                .map(|i| setup.run(&mut trial_rng(config.seed, n, i)))
                .collect();
            Ok(summarize(n, &terms))
        })
        .collect()
}

fn summarize(n: usize, terms: &[f64]) -> PerN {
    let m = terms.len() as f64;
    let mean = pairwise_sum(terms) / m;
    let sq: Vec<f64> = terms.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (m - 1.0);
    let stderr = (var / m).sqrt();
    PerN {
        n,
        prob_estimate: mean,
        stderr,
        rel_stderr: if mean > 0.0 { stderr / mean } else { f64::INFINITY },
    }
}

/// Weighted least-squares slope of `−ln P` against `n`, weighting each
/// point by the inverse squared relative standard error. Points with
/// `rel_stderr >= 0.2` are ignored.
pub fn estimate_slope(per_n: &[PerN]) -> Result<SlopeEstimate> {
    let usable: Vec<&PerN> = per_n
        .iter()
        .filter(|p| p.prob_estimate > 0.0 && p.rel_stderr < MAX_REL_STDERR)
        .collect();
    if usable.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need 3 sample sizes with rel_stderr < {MAX_REL_STDERR}, have {}",
            usable.len()
        )));
    }
    let ws: Vec<f64> = usable.iter().map(|p| 1.0 / (p.rel_stderr * p.rel_stderr + 1e-12)).collect();
    let xs: Vec<f64> = usable.iter().map(|p| p.n as f64).collect();
    let ys: Vec<f64> = usable.iter().map(|p| -p.prob_estimate.ln()).collect();
    let sw: f64 = ws.iter().sum();
    let xbar = ws.iter().zip(&xs).map(|(w, x)| w * x).sum::<f64>() / sw;
    let ybar = ws.iter().zip(&ys).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = ws.iter().zip(&xs).map(|(w, x)| w * (x - xbar).powi(2)).sum();
    let sxy: f64 = ws.iter().zip(xs.iter().zip(&ys)).map(|(w, (x, y))| w * (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    // residual-scaled standard error, floored by the propagated one
    let k = usable.len() as f64;
    let rss: f64 = ws
        .iter()
        .zip(xs.iter().zip(&ys))
        .map(|(w, (x, y))| w * (y - intercept - slope * x).powi(2))
        .sum();
    let scale = (rss / (k - 2.0)).max(1.0);
    let stderr = if ws.iter().all(|&w| w >= 1e11) { 0.0 } else { (scale / sxx).sqrt() };
    Ok(SlopeEstimate { slope, stderr, intercept, per_n: per_n.to_vec() })
}

/// Simulates and fits the MD exponent in one go.
pub fn md_slope(
    model: &NoiseModel,
    w: &[f64],
    s: &[f64],
    theta: f64,
    config: &SimConfig,
    budget: &PowerBudget,
) -> Result<SlopeEstimate> {
    let per_n = md_probability(model, w, s, theta, config, budget)?;
    estimate_slope(&per_n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::{md_exponent, JointAtoms};

    fn per_n(n: usize, p: f64) -> PerN {
        PerN { n, prob_estimate: p, stderr: 0.0, rel_stderr: 0.0 }
    }

    #[test]
    fn fa_probability_values() {
        assert_eq!(fa_probability_exact(&[1.0, -1.0], 0.0, 10, 1.0).unwrap(), 0.5);
        let a = fa_probability_exact(&[1.0, -1.0], 0.5, 100, 1.0).unwrap();
        let b = fa_probability_exact(&[3.0, -3.0], 1.5, 100, 1.0).unwrap();
        assert!((a - b).abs() < 1e-15 * a.max(1e-300));
        // n = 100, θ = 0.5: the argument is 5; Q(5) = 2.866515718791939e-7
        let p = fa_probability_exact(&[1.0], 0.5, 100, 1.0).unwrap();
        assert!((p / 2.866515718791939e-7 - 1.0).abs() < 1e-12, "{p}");
        // the prefactor gap to the exponent closes as n grows
        let gap = |n: usize| {
            let p = fa_probability_exact(&[1.0], 0.5, n, 1.0).unwrap();
            (-p.ln() / n as f64 - 0.125).abs()
        };
        assert!(gap(100) > gap(1000) && gap(1000) > gap(4000) && gap(4000) < 0.02 * 0.125);
    }

    #[test]
    fn slope_of_synthetic_sequences() {
        let exact: Vec<PerN> = [50, 100, 200, 400].iter().map(|&n| per_n(n, (-0.3 * n as f64).exp())).collect();
        assert!((estimate_slope(&exact).unwrap().slope - 0.3).abs() < 1e-12);
        let pre: Vec<PerN> = [50, 100, 200, 400]
            .iter()
            .map(|&n| per_n(n, n as f64 * (-0.3 * n as f64).exp()))
            .collect();
        assert!((estimate_slope(&pre).unwrap().slope - 0.3).abs() < 0.02 * 0.3);
        let flat: Vec<PerN> = [50, 100, 200].iter().map(|&n| per_n(n, 0.2)).collect();
        assert!(estimate_slope(&flat).unwrap().slope.abs() < 1e-12);
        let few = vec![per_n(50, 0.1), per_n(100, 0.01)];
        assert!(matches!(estimate_slope(&few), Err(Error::InsufficientData(_))));
    }

    fn mean_var<F: FnMut(&mut ChaCha8Rng) -> f64>(mut f: F, m: usize) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<f64> = (0..m).map(|_| f(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / m as f64;
        (mean, xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m as f64)
    }

    #[test]
    fn tilted_samplers_have_tilted_means() {
        // the tilted mean is −C'(v)
        let v = 0.6;
        for m in [
            NoiseModel::Gaussian { var_z: 1.3 },
            NoiseModel::Laplacian { q: 2.0 },
            NoiseModel::BinarySymmetric { z0: 1.5 },
            NoiseModel::Uniform { z0: 2.0 },
            NoiseModel::MixtureBinaryLaplace { delta: 0.6, z0: 1.0, q: 2.0 },
        ] {
            let (mean, var) = mean_var(|r| sample_tilted_z(&m, v, r), 400_000);
            let want = -m.cgf_deriv(v).unwrap();
            assert!((mean - want).abs() < 5.0 * (var / 400_000.0).sqrt(), "{m:?}: {mean} vs {want}");
        }
        // strong tilt stays finite
        let m = NoiseModel::Uniform { z0: 3.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let z = sample_tilted_z(&m, 500.0, &mut rng);
            assert!((-3.0..=3.0).contains(&z));
        }
    }

    #[test]
    fn config_validation() {
        let mut c = SimConfig { trials: 999, ..SimConfig::default() };
        assert!(c.validate().is_err());
        c.trials = 1000;
        assert!(c.validate().is_ok());
        c.n_values = vec![100, 50];
        assert!(c.validate().is_err());
    }

    #[test]
    fn out_of_domain_tilt_is_rejected() {
        let m = NoiseModel::Laplacian { q: 1.0 };
        let b = PowerBudget::new(1.0, 1.0).unwrap();
        let c = SimConfig { n_values: vec![10], trials: 1000, seed: 1, tilt_lambda: 2.0 };
        assert!(matches!(md_probability(&m, &[1.0], &[1.0], 0.0, &c, &b), Err(Error::DegenerateTilt(_))));
    }

    #[test]
    fn seeded_runs_are_bit_identical() {
        let m = NoiseModel::Laplacian { q: 2.0 };
        let b = PowerBudget::new(1.0, 1.0).unwrap();
        let c = SimConfig { n_values: vec![20, 40], trials: 2000, seed: 42, tilt_lambda: 0.3 };
        let a = md_probability(&m, &[1.0, -0.5], &[1.0, -1.0], 0.2, &c, &b).unwrap();
        let d = md_probability(&m, &[1.0, -0.5], &[1.0, -1.0], 0.2, &c, &b).unwrap();
        assert_eq!(a, d);
    }

    #[test]
    fn tilted_and_plain_agree_and_bound_holds() {
        let m = NoiseModel::Uniform { z0: 1.5 };
        let b = PowerBudget::new(1.0, 1.0).unwrap();
        let (w, s, theta) = ([1.0, -1.0], [1.0, -1.0], 0.5);
        let joint = JointAtoms::from_vectors(&w, &s).unwrap();
        let e = md_exponent(&joint, theta, &b, &m);
        let plain = SimConfig { n_values: vec![20], trials: 200_000, seed: 3, tilt_lambda: 0.0 };
        let tilted = SimConfig { tilt_lambda: e.lambda_star, ..plain.clone() };
        let p = md_probability(&m, &w, &s, theta, &plain, &b).unwrap()[0];
        let t = md_probability(&m, &w, &s, theta, &tilted, &b).unwrap()[0];
        let tol = 3.0 * (p.stderr.powi(2) + t.stderr.powi(2)).sqrt();
        assert!((p.prob_estimate - t.prob_estimate).abs() < tol);
        assert!(t.stderr < p.stderr);
        // Chernoff: P <= e^{-nE}
        assert!(-t.prob_estimate.ln() / 20.0 >= e.value - 3.0 * t.rel_stderr / 20.0);
    }
}
