//! Design and evaluation of mismatched correlation detectors.
//!
//! A correlation detector compares `Σ w_t Y_t` to `θ n`, where under the
//! alternative `Y_t = s_t + Z_t + N_t` with Gaussian `N` and non-Gaussian,
//! symmetric signal-induced noise `Z`. This crate computes the false-alarm
//! and missed-detection error exponents of such detectors, designs optimal
//! correlator weights (continuous, binary, k-level), jointly optimizes the
//! signal and correlator, evaluates correlation+energy and
//! correlation+absolute-value detectors, and validates the exponents by
//! importance-sampled simulation.

// `!(x > 0.0)` is used deliberately so NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cgf;
pub mod correlator_design;
pub mod error;
pub mod exponents;
pub mod extended_detectors;
pub mod joint_design;
pub mod montecarlo;
pub mod numeric;

pub use cgf::NoiseModel;
pub use correlator_design::{
    design_4ask, design_binary, design_classical, design_optimal, design_quantized,
    design_quantized_with, four_ask_curves, g_eval, g_inverse, md_exponent_4ask, theta_grid,
    tune_rho, DetectorDesign, FourAskCurvePoint, FourAskDesign, QuantizerDesign, SignalAtom,
    SignalAtoms,
};
pub use error::{Error, Result};
pub use exponents::{
    fa_exponent, md_exponent, md_objective, theta_for_fa, Atom, ExponentResult, JointAtoms,
    PowerBudget,
};
pub use joint_design::{
    c_tilde, cap_sensitivity, classify_curvature, joint_md_exponent, stationary_levels,
    two_level_direct, Curvature, EnvelopeValue, JointDesignResult, StationaryLevels, TwoLevels,
    DEFAULT_CAP_FACTOR,
};
pub use extended_detectors::{
    c_alpha_abs, c_alpha_energy, default_alpha_grid, fa_exponent_abs, fa_exponent_energy,
    fa_exponent_extended, md_exponent_abs, md_exponent_energy, md_exponent_extended,
    sweep_alpha_fixed_fa, AlphaSweep, DetectorKind, ExtendedDetectorSpec, SweepPoint,
};
pub use montecarlo::{
    estimate_slope, fa_probability_exact, md_probability, md_slope, PerN, SimConfig,
    SlopeEstimate,
};
