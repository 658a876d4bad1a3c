//! Named numerical tolerances and defaults used across the crate.

/// Largest `|M_ij − M_ji|` accepted as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Default derivative-norm threshold for declaring an equilibrium.
pub const EQUILIBRIUM_TOL: f64 = 1e-8;

/// Default integration step (time units).
pub const DEFAULT_DT: f64 = 0.01;

/// Default integration horizon (time units).
pub const DEFAULT_T_MAX: f64 = 200.0;

/// States with `‖x‖∞` above this are treated as diverged.
pub const DIVERGENCE_BOUND: f64 = 1e12;

/// Per-step slack when checking that a recorded energy is nonincreasing.
pub const ENERGY_STEP_TOL: f64 = 1e-9;

/// Default finite-difference step for gradients.
pub const FD_STEP: f64 = 1e-5;

/// Norm above which Oja's rule is declared divergent.
pub const OJA_DIVERGENCE_NORM: f64 = 1e6;

/// Unit-norm tolerance for dictionary columns.
pub const UNIT_COLUMN_TOL: f64 = 1e-8;

/// Tolerance for simplex membership (`Σw = 1`, `w ≥ 0`).
pub const SIMPLEX_TOL: f64 = 1e-8;

/// Standard-normal quantile giving a 1% bit-error budget in the capacity bound.
pub const CAPACITY_ALPHA: f64 = 2.576;
