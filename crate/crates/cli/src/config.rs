//! JSON run configuration.

use std::fs;
use std::path::Path;

use corrdet_core::{DetectorKind, JointAtoms, NoiseModel, PowerBudget, SignalAtom, SignalAtoms};
use serde::Deserialize;

use crate::CliError;

/// A list of values: a single number, an explicit list, or
/// `{start, stop, points}` (inclusive, evenly spaced).
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Single(f64),
    List(Vec<f64>),
    Range { start: f64, stop: f64, points: usize },
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        let v = match self {
            Grid::Single(x) => vec![*x],
            Grid::List(xs) => xs.clone(),
            Grid::Range { start, stop, points } => match points {
                0 => vec![],
                1 => vec![*start],
                n => (0..*n).map(|i| start + (stop - start) * i as f64 / (n - 1) as f64).collect(),
            },
        };
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Config("grid must be non-empty and finite".into()));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalSpec {
    /// Equally likely values.
    Values(Vec<f64>),
    Atoms(Vec<SignalAtom>),
    /// Midpoint atoms of the uniform law on `[-half_width, half_width]`.
    Uniform { half_width: f64, points: usize },
    FourAsk { a: f64 },
}

impl SignalSpec {
    pub fn build(&self) -> Result<SignalAtoms, CliError> {
        let r = match self {
            SignalSpec::Values(v) => SignalAtoms::from_values(v),
            SignalSpec::Atoms(a) => SignalAtoms::normalized(a.clone()),
            SignalSpec::Uniform { half_width, points } => SignalAtoms::uniform(*half_width, *points),
            SignalSpec::FourAsk { a } => SignalAtoms::four_ask(*a),
        };
        r.map_err(CliError::from)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub e_fa_target: f64,
    pub alpha_max: f64,
    #[serde(default = "default_sweep_points")]
    pub points: usize,
}

fn default_sweep_points() -> usize {
    40
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    /// Weight pattern, tiled to each length `n`.
    pub w: Vec<f64>,
    /// Signal pattern, tiled the same way.
    pub s: Vec<f64>,
    pub n_values: Option<Vec<usize>>,
    pub trials: Option<usize>,
    /// Sampling tilt; the analytic optimal tilt when absent.
    pub tilt_lambda: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<NoiseModel>,
    pub budget: Option<PowerBudget>,
    pub theta: Option<Grid>,
    pub signal: Option<SignalSpec>,
    pub joint: Option<JointAtoms>,
    pub k: Option<usize>,
    pub p_cap: Option<f64>,
    pub alpha: Option<f64>,
    pub kind: Option<DetectorKind>,
    pub sweep: Option<SweepSpec>,
    /// CGF arguments for the `cgf` subcommand.
    pub v: Option<Grid>,
    pub lambda: Option<f64>,
    pub kappa: Option<f64>,
    /// Abscissae for the `roots` curves.
    pub w: Option<Grid>,
    pub simulation: Option<SimulationSpec>,
}

fn missing(field: &str) -> CliError {
    CliError::Config(format!("config is missing '{field}'"))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn model(&self) -> Result<&NoiseModel, CliError> {
        self.model.as_ref().ok_or_else(|| missing("model"))
    }

    pub fn budget(&self) -> Result<PowerBudget, CliError> {
        let b = self.budget.ok_or_else(|| missing("budget"))?;
        b.validate()?;
        Ok(b)
    }

    pub fn thetas(&self) -> Result<Vec<f64>, CliError> {
        self.theta.as_ref().ok_or_else(|| missing("theta"))?.values()
    }

    pub fn signal(&self) -> Result<SignalAtoms, CliError> {
        self.signal.as_ref().ok_or_else(|| missing("signal"))?.build()
    }

    pub fn joint(&self) -> Result<&JointAtoms, CliError> {
        self.joint.as_ref().ok_or_else(|| missing("joint"))
    }

    pub fn require<T: Copy>(&self, value: Option<T>, field: &str) -> Result<T, CliError> {
        value.ok_or_else(|| missing(field))
    }
}
