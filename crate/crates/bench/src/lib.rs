//! Shared fixtures for the criterion benchmarks.

use corrdet_core::{JointAtoms, NoiseModel, PowerBudget, SignalAtoms};

pub fn unit_budget() -> PowerBudget {
    PowerBudget::new(1.0, 1.0).expect("valid budget")
}

pub fn models() -> Vec<(&'static str, NoiseModel)> {
    vec![
        ("gaussian", NoiseModel::Gaussian { var_z: 1.0 }),
        ("laplacian", NoiseModel::Laplacian { q: 2.0 }),
        ("binary", NoiseModel::BinarySymmetric { z0: 7.0 }),
        ("uniform", NoiseModel::Uniform { z0: 7.0 }),
        ("mixture", NoiseModel::MixtureBinaryLaplace { delta: 0.95, z0: 0.5, q: 5.0 }),
    ]
}

/// Sixteen-level signal with irregular spacing.
pub fn signal() -> SignalAtoms {
    let values: Vec<f64> = (0..16).map(|i| (i as f64 - 7.5) * (0.2 + 0.01 * i as f64)).collect();
    SignalAtoms::from_values(&values).expect("non-degenerate signal")
}

/// Matched weights for [`signal`] at unit power.
pub fn matched_joint() -> JointAtoms {
    corrdet_core::design_classical(&signal(), &unit_budget()).expect("non-degenerate signal")
}
