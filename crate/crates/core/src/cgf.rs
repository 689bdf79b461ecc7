//! Symmetric zero-mean noise models for the signal-induced noise `Z` and
//! their cumulant generating functions `C(v) = ln E[e^{vZ}]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::special::{langevin, ln_cosh, ln_sinhc, log_add_exp};

/// Arguments closer than this fraction to a CGF pole are rejected.
pub const POLE_MARGIN: f64 = 1e-9;

/// Closed family of symmetric noise laws with analytic CGFs.
///
/// JSON form: `{"type": "gaussian", "var_z": 2.0}`, `{"type": "laplacian", "q": 2.0}`,
/// `{"type": "binary_symmetric", "z0": 7.0}`, `{"type": "uniform", "z0": 7.0}`,
/// `{"type": "mixture_binary_laplace", "delta": 0.95, "z0": 0.5, "q": 5.0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", try_from = "ModelRepr", into = "ModelRepr")]
pub enum NoiseModel {
    Gaussian { var_z: f64 },
    /// Density `(q/2) e^{-q|z|}`.
    Laplacian { q: f64 },
    /// `±z0` with equal probability.
    BinarySymmetric { z0: f64 },
    /// Uniform on `[-z0, z0]`.
    Uniform { z0: f64 },
    /// `delta` · binary(z0) + `(1 - delta)` · Laplacian(q).
    MixtureBinaryLaplace { delta: f64, z0: f64, q: f64 },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum ModelRepr {
    Gaussian { var_z: f64 },
    Laplacian { q: f64 },
    BinarySymmetric { z0: f64 },
    Uniform { z0: f64 },
    MixtureBinaryLaplace { delta: f64, z0: f64, q: f64 },
}

impl TryFrom<ModelRepr> for NoiseModel {
    type Error = Error;

    fn try_from(r: ModelRepr) -> Result<Self> {
        let m = match r {
            ModelRepr::Gaussian { var_z } => NoiseModel::Gaussian { var_z },
            ModelRepr::Laplacian { q } => NoiseModel::Laplacian { q },
            ModelRepr::BinarySymmetric { z0 } => NoiseModel::BinarySymmetric { z0 },
            ModelRepr::Uniform { z0 } => NoiseModel::Uniform { z0 },
            ModelRepr::MixtureBinaryLaplace { delta, z0, q } => {
                NoiseModel::MixtureBinaryLaplace { delta, z0, q }
            }
        };
        m.validate()?;
        Ok(m)
    }
}

impl From<NoiseModel> for ModelRepr {
    fn from(m: NoiseModel) -> Self {
        match m {
            NoiseModel::Gaussian { var_z } => ModelRepr::Gaussian { var_z },
            NoiseModel::Laplacian { q } => ModelRepr::Laplacian { q },
            NoiseModel::BinarySymmetric { z0 } => ModelRepr::BinarySymmetric { z0 },
            NoiseModel::Uniform { z0 } => ModelRepr::Uniform { z0 },
            NoiseModel::MixtureBinaryLaplace { delta, z0, q } => {
                ModelRepr::MixtureBinaryLaplace { delta, z0, q }
            }
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite and > 0, got {v}")))
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::Gaussian { var_z } => positive("var_z", var_z),
            NoiseModel::Laplacian { q } => positive("q", q),
            NoiseModel::BinarySymmetric { z0 } | NoiseModel::Uniform { z0 } => positive("z0", z0),
            NoiseModel::MixtureBinaryLaplace { delta, z0, q } => {
                if !(delta > 0.0 && delta < 1.0) {
                    return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
                }
                positive("z0", z0)?;
                positive("q", q)
            }
        }
    }

    /// Pole of the CGF (`q` for Laplacian-type models), if any.
    pub fn pole(&self) -> Option<f64> {
        match *self {
            NoiseModel::Laplacian { q } | NoiseModel::MixtureBinaryLaplace { q, .. } => Some(q),
            _ => None,
        }
    }

    /// Open interval on which the CGF is finite.
    pub fn domain(&self) -> (f64, f64) {
        match self.pole() {
            Some(q) => (-q, q),
            None => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Largest `|v|` accepted by [`NoiseModel::cgf`].
    pub fn feasible_limit(&self) -> f64 {
        self.pole().map_or(f64::INFINITY, |q| q * (1.0 - POLE_MARGIN))
    }

    pub fn in_domain(&self, v: f64) -> bool {
        v.abs() < self.feasible_limit()
    }

    fn check(&self, v: f64) -> Result<()> {
        if self.in_domain(v) {
            Ok(())
        } else {
            Err(Error::Domain { value: v, limit: self.pole().unwrap_or(f64::INFINITY) })
        }
    }

    /// Variance of `Z`, i.e. `C''(0)`.
    pub fn variance(&self) -> f64 {
        match *self {
            NoiseModel::Gaussian { var_z } => var_z,
            NoiseModel::Laplacian { q } => 2.0 / (q * q),
            NoiseModel::BinarySymmetric { z0 } => z0 * z0,
            NoiseModel::Uniform { z0 } => z0 * z0 / 3.0,
            NoiseModel::MixtureBinaryLaplace { delta, z0, q } => {
                delta * z0 * z0 + (1.0 - delta) * 2.0 / (q * q)
            }
        }
    }

    /// `C(v) = ln E[e^{vZ}]`.
    pub fn cgf(&self, v: f64) -> Result<f64> {
        self.check(v)?;
        Ok(match *self {
            NoiseModel::Gaussian { var_z } => 0.5 * var_z * v * v,
            NoiseModel::Laplacian { q } => -laplace_log_denominator(v, q),
            NoiseModel::BinarySymmetric { z0 } => ln_cosh(z0 * v),
            NoiseModel::Uniform { z0 } => ln_sinhc(z0 * v),
            NoiseModel::MixtureBinaryLaplace { delta, z0, q } => {
                let (a, b) = mixture_log_terms(v, delta, z0, q);
                log_add_exp(a, b)
            }
        })
    }

    /// `C'(v)`.
    pub fn cgf_deriv(&self, v: f64) -> Result<f64> {
        self.check(v)?;
        Ok(match *self {
            NoiseModel::Gaussian { var_z } => var_z * v,
            NoiseModel::Laplacian { q } => 2.0 * v / ((q - v) * (q + v)),
            NoiseModel::BinarySymmetric { z0 } => z0 * (z0 * v).tanh(),
            NoiseModel::Uniform { z0 } => z0 * langevin(z0 * v),
            NoiseModel::MixtureBinaryLaplace { delta, z0, q } => {
                // derivative of a log-sum is the posterior-weighted sum of
                // component derivatives
                let (a, b) = mixture_log_terms(v, delta, z0, q);
                let total = log_add_exp(a, b);
                let wa = (a - total).exp();
                let wb = (b - total).exp();
                wa * z0 * (z0 * v).tanh() + wb * 2.0 * v / ((q - v) * (q + v))
            }
        })
    }

    /// Moment generating function `E[e^{mZ}]` at complex `m`, valid for
    /// `|Re m|` inside the CGF domain.
    pub fn mgf_complex(&self, m: Complex64) -> Complex64 {
        match *self {
            NoiseModel::Gaussian { var_z } => (0.5 * var_z * m * m).exp(),
            NoiseModel::Laplacian { q } => q * q / (q * q - m * m),
            NoiseModel::BinarySymmetric { z0 } => (z0 * m).cosh(),
            NoiseModel::Uniform { z0 } => sinhc(z0 * m),
            NoiseModel::MixtureBinaryLaplace { delta, z0, q } => {
                delta * (z0 * m).cosh() + (1.0 - delta) * q * q / (q * q - m * m)
            }
        }
    }
}

impl NoiseModel {
    /// `E[e^{mZ}] · e^{-C(Re m)}`: the complex MGF normalized by its value on
    /// the real axis, so it stays bounded by 1 for large `|Re m|`.
    pub fn mgf_scaled(&self, m: Complex64) -> Result<Complex64> {
        let (x, y) = (m.re, m.im);
        self.check(x)?;
        // cosh(a + jb) / cosh(a) and sinh(a + jb) / sinh(a) in bounded form
        let cosh_ratio = |a: f64, b: f64| Complex64::new(b.cos(), a.tanh() * b.sin());
        Ok(match *self {
            NoiseModel::Gaussian { var_z } => Complex64::new(-0.5 * var_z * y * y, var_z * x * y).exp(),
            NoiseModel::Laplacian { q } => (q * q - x * x) / (q * q - m * m),
            NoiseModel::BinarySymmetric { z0 } => cosh_ratio(z0 * x, z0 * y),
            NoiseModel::Uniform { z0 } => {
                let a = z0 * x;
                if a.abs() < 1.0 {
                    sinhc(z0 * m) / ln_sinhc(a).exp()
                } else {
                    let ratio = Complex64::new((z0 * y).cos(), (z0 * y).sin() / a.tanh());
                    ratio * Complex64::new(a, 0.0) / (z0 * m)
                }
            }
            NoiseModel::MixtureBinaryLaplace { delta, z0, q } => {
                let (la, lb) = mixture_log_terms(x, delta, z0, q);
                let total = log_add_exp(la, lb);
                let (wa, wb) = ((la - total).exp(), (lb - total).exp());
                wa * cosh_ratio(z0 * x, z0 * y) + wb * (q * q - x * x) / (q * q - m * m)
            }
        })
    }
}

/// `ln(1 - v²/q²)`, factored for accuracy near the pole.
fn laplace_log_denominator(v: f64, q: f64) -> f64 {
    ((1.0 - v / q) * (1.0 + v / q)).ln()
}

fn mixture_log_terms(v: f64, delta: f64, z0: f64, q: f64) -> (f64, f64) {
    (
        delta.ln() + ln_cosh(z0 * v),
        (1.0 - delta).ln() - laplace_log_denominator(v, q),
    )
}

fn sinhc(x: Complex64) -> Complex64 {
    if x.norm() < 1e-4 {
        let x2 = x * x;
        Complex64::new(1.0, 0.0) + x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sinh() / x
    }
}
