//! Numeric thresholds shared by every module.

/// Amplitudes with modulus at or below this are treated as exactly zero.
pub const EPS_ZERO: f64 = 1e-12;

/// Allowed deviation of a squared norm (or a probability mass) from 1.
pub const EPS_NORM: f64 = 1e-9;

/// Amplitude-wise tolerance when comparing qubit constants inside terms.
pub const AMP_TOL: f64 = 1e-9;

/// Probability tolerance for term ensemble equivalence. Looser than
/// [`EPS_NORM`] because probabilities are products along reduction paths.
pub const ENSEMBLE_TOL: f64 = 1e-7;

/// Widest qubit constant the engine accepts.
pub const MAX_WIDTH: usize = 24;
