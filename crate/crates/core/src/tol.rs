//! Numerical tolerances shared by every validating constructor.

/// Hermiticity, maximum entrywise deviation from the adjoint.
pub const HERM: f64 = 1e-10;
/// Trace normalization of density operators.
pub const TRACE: f64 = 1e-10;
/// Unit norm of pure states.
pub const NORM: f64 = 1e-10;
/// Allowed negative (or above-one) spectral excursion.
pub const PSD: f64 = 1e-10;
/// Completeness of POVMs and Kraus operations.
pub const POVM: f64 = 1e-9;
/// Probabilities at or below this are treated as zero.
pub const ZERO: f64 = 1e-12;
/// Multiply-back reconstructions (square root, polar).
pub const RECON: f64 = 1e-10;
/// Atom weights below this are pruned.
pub const WEIGHT_PRUNE: f64 = 1e-14;
/// Pseudo-probabilities below `-NEGATIVITY` count as negative.
pub const NEGATIVITY: f64 = 1e-10;
/// Eigenvalues closer than this are treated as degenerate when ordering.
pub(crate) const DEGENERATE: f64 = 1e-12;
/// Entries smaller than this are skipped when fixing phases.
pub(crate) const PHASE: f64 = 1e-10;
