//! False-alarm and missed-detection exponents of a plain correlation
//! detector, as functionals of the joint weight/signal atom distribution.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::cgf::NoiseModel;
use crate::error::{Error, Result};
use crate::numeric::scalar::{golden_section_max, concave_bracket};

/// Relative bracket width at which the λ search stops.
pub const LAMBDA_REL_TOL: f64 = 1e-12;
/// Iteration cap for the λ search.
pub const LAMBDA_MAX_ITER: usize = 200;
/// Tolerance on the normalization of atom weights.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Power constraints: correlator power `P_w`, optional signal power `P_s`
/// and Gaussian noise variance `σ_N²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerBudget {
    pub p_w: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_s: Option<f64>,
    pub var_n: f64,
}

impl PowerBudget {
    pub fn new(p_w: f64, var_n: f64) -> Result<Self> {
        let b = Self { p_w, p_s: None, var_n };
        b.validate()?;
        Ok(b)
    }

    pub fn with_signal_power(mut self, p_s: f64) -> Result<Self> {
        self.p_s = Some(p_s);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.p_w) {
            return Err(Error::invalid(format!("p_w must be > 0, got {}", self.p_w)));
        }
        if !ok(self.var_n) {
            return Err(Error::invalid(format!("var_n must be > 0, got {}", self.var_n)));
        }
        if let Some(p_s) = self.p_s {
            if !ok(p_s) {
                return Err(Error::invalid(format!("p_s must be > 0, got {p_s}")));
            }
        }
        Ok(())
    }

    pub fn signal_power(&self) -> Result<f64> {
        self.p_s
            .ok_or_else(|| Error::invalid("signal power p_s is required for this operation"))
    }

    pub fn with_p_w(mut self, p_w: f64) -> Self {
        self.p_w = p_w;
        self
    }
}

/// One point mass of the joint weight/signal distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub w: f64,
    pub s: f64,
    pub weight: f64,
}

/// Finite joint distribution of correlator weight `W` and signal level `S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Atom>", into = "Vec<Atom>")]
pub struct JointAtoms {
    atoms: Vec<Atom>,
}

impl TryFrom<Vec<Atom>> for JointAtoms {
    type Error = Error;
    fn try_from(atoms: Vec<Atom>) -> Result<Self> {
        JointAtoms::new(atoms)
    }
}

impl From<JointAtoms> for Vec<Atom> {
    fn from(j: JointAtoms) -> Self {
        j.atoms
    }
}

impl JointAtoms {
    /// Atoms whose weights already sum to one.
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        validate_atoms(&atoms)?;
        let total: f64 = atoms.iter().map(|a| a.weight).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::invalid(format!("atom weights sum to {total}, not 1")));
        }
        Ok(Self { atoms })
    }

    /// Atoms with arbitrary non-negative weights, rescaled to sum to one.
    pub fn normalized(mut atoms: Vec<Atom>) -> Result<Self> {
        validate_atoms(&atoms)?;
        let total: f64 = atoms.iter().map(|a| a.weight).sum();
        if total <= 0.0 {
            return Err(Error::invalid("atom weights sum to zero"));
        }
        for a in &mut atoms {
            a.weight /= total;
        }
        Ok(Self { atoms })
    }

    /// Empirical distribution of the paired vectors `(w_t, s_t)`.
    pub fn from_vectors(w: &[f64], s: &[f64]) -> Result<Self> {
        if w.len() != s.len() {
            return Err(Error::invalid("weight and signal vectors differ in length"));
        }
        let p = 1.0 / w.len() as f64;
        Self::normalized(
            w.iter()
                .zip(s)
                .map(|(&w, &s)| Atom { w, s, weight: p })
                .collect(),
        )
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn expect<F: Fn(&Atom) -> f64>(&self, f: F) -> f64 {
        self.atoms.iter().map(|a| a.weight * f(a)).sum()
    }

    /// `E[W·S]`.
    pub fn correlation(&self) -> f64 {
        self.expect(|a| a.w * a.s)
    }

    /// `E[W²]`.
    pub fn weight_power(&self) -> f64 {
        self.expect(|a| a.w * a.w)
    }

    /// `E[S²]`.
    pub fn signal_power(&self) -> f64 {
        self.expect(|a| a.s * a.s)
    }

    /// Largest `|w|` among atoms of positive probability.
    pub fn max_abs_w(&self) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.weight > 0.0)
            .map(|a| a.w.abs())
            .fold(0.0, f64::max)
    }

    /// Copy with every weight multiplied by `c`.
    pub fn scale_weights(&self, c: f64) -> Self {
        Self {
            atoms: self.atoms.iter().map(|a| Atom { w: a.w * c, ..*a }).collect(),
        }
    }

    /// Reads CSV with header `w,s,weight`; weights are renormalized.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let atoms = rdr.deserialize().collect::<std::result::Result<Vec<Atom>, _>>()?;
        Self::normalized(atoms)
    }

    /// Writes CSV with header `w,s,weight`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for a in &self.atoms {
            wtr.serialize(a)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn validate_atoms(atoms: &[Atom]) -> Result<()> {
    if atoms.is_empty() {
        return Err(Error::invalid("atom list is empty"));
    }
    for a in atoms {
        if !(a.w.is_finite() && a.s.is_finite() && a.weight.is_finite() && a.weight >= 0.0) {
            return Err(Error::invalid(format!("bad atom {a:?}")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    pub iterations: usize,
    pub bracket: (f64, f64),
}

/// A Chernoff exponent together with its optimizing tilt `λ*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentResult {
    pub value: f64,
    pub lambda_star: f64,
    #[serde(skip)]
    pub diagnostics: Diagnostics,
}

impl ExponentResult {
    pub fn zero() -> Self {
        Self {
            value: 0.0,
            lambda_star: 0.0,
            diagnostics: Diagnostics::default(),
        }
    }
}

/// FA exponent `θ² / (2 σ_N² P_w)` of a correlator with power `P_w`.
pub fn fa_exponent(theta: f64, budget: &PowerBudget) -> f64 {
    theta * theta / (2.0 * budget.var_n * budget.p_w)
}

/// Threshold that yields FA exponent `e_fa`: `σ_N √(2 P_w e_fa)`.
pub fn theta_for_fa(e_fa: f64, budget: &PowerBudget) -> f64 {
    budget.var_n.sqrt() * (2.0 * budget.p_w * e_fa).sqrt()
}

/// The λ-function whose supremum is the MD exponent:
/// `λ(E[WS] − θ) − E[C(λW)] − (λ² σ_N² / 2) E[W²]`.
pub fn md_objective(
    joint: &JointAtoms,
    lambda: f64,
    theta: f64,
    budget: &PowerBudget,
    model: &NoiseModel,
) -> Result<f64> {
    let mut cgf_sum = 0.0;
    for a in joint.atoms().iter().filter(|a| a.weight > 0.0) {
        cgf_sum += a.weight * model.cgf(lambda * a.w)?;
    }
    Ok(lambda * (joint.correlation() - theta)
        - cgf_sum
        - 0.5 * lambda * lambda * budget.var_n * joint.weight_power())
}

/// Supremum over `λ ∈ [0, limit)` of a concave objective whose right
/// derivative at zero is `slope_at_zero`.
pub(crate) fn sup_concave<F>(slope_at_zero: f64, limit: f64, mut f: F) -> ExponentResult
where
    F: FnMut(f64) -> f64,
{
    if !(slope_at_zero > 0.0) || !(limit > 0.0) {
        return ExponentResult::zero();
    }
    let (lo, hi, expansions) = concave_bracket(&mut f, 1.0, limit);
    let m = golden_section_max(&mut f, lo, hi, LAMBDA_REL_TOL, LAMBDA_MAX_ITER);
    if !(m.value > 0.0) {
        return ExponentResult::zero();
    }
    ExponentResult {
        value: m.value,
        lambda_star: m.x,
        diagnostics: Diagnostics {
            iterations: m.iterations + expansions,
            bracket: (lo, hi),
        },
    }
}

/// MD exponent `sup_{λ≥0} md_objective(λ)`.
///
/// The objective is concave in λ, so a doubling bracket followed by
/// golden-section search suffices. For Laplacian-type models the bracket is
/// clipped where `λ·max|w|` reaches the CGF pole.
pub fn md_exponent(
    joint: &JointAtoms,
    theta: f64,
    budget: &PowerBudget,
    model: &NoiseModel,
) -> ExponentResult {
    let max_w = joint.max_abs_w();
    let limit = if max_w > 0.0 {
        model.feasible_limit() / max_w
    } else {
        f64::INFINITY
    };
    sup_concave(joint.correlation() - theta, limit, |l| {
        md_objective(joint, l, theta, budget, model).unwrap_or(f64::NEG_INFINITY)
    })
}
