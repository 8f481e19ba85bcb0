//! Numerical tolerances shared by the decompositions.

/// Sweep cap for the Jacobi iterations.
pub const MAX_JACOBI_SWEEPS: usize = 80;

/// Relative off-diagonal threshold at which a Jacobi pair counts as converged.
pub const JACOBI_TOL: f64 = 4.0 * f64::EPSILON;

/// Relative Hermitian residual accepted by [`super::eigh`].
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Default rank tolerance: `max(rows, cols) · ε · σ_max`.
pub fn rank_tol(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sigma_max
}
