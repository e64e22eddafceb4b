//! Error types shared across the crate.

use thiserror::Error;

/// Dense linear-algebra failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatError {
    #[error("matrix entries must be finite")]
    NotFinite,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("QR iteration did not converge within the sweep cap")]
    NoConvergence,
    #[error("matrix is numerically defective (eigenvector condition {cond:.3e})")]
    DefectiveMatrix { cond: f64 },
    #[error("matrix is singular at pivot {0}")]
    Singular(usize),
}

/// Momentum-sector solver failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SectorError {
    #[error("closed-form denominator vanished for level {level} (|d| = {magnitude:.3e})")]
    SingularDenominator { level: usize, magnitude: f64 },
    #[error("cluster Gram matrix is numerically singular (cond {cond:.3e})")]
    SingularGram { cond: f64 },
    #[error(transparent)]
    Mat(#[from] MatError),
}

/// Momentum-grid construction failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("momentum pair count N must be even, got {0}")]
    OddN(usize),
}

/// Fidelity-engine failures, tagged with the offending momentum when known.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FidelityError {
    #[error("sector k = {k}: {source}")]
    Sector { k: f64, source: SectorError },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Mat(#[from] MatError),
}

/// Post-processing (fit) failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("need at least {need} points, got {got}")]
    InsufficientData { need: usize, got: usize },
    #[error("all fidelity values are below the usable floor")]
    DegenerateWindow,
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("scan is flat: spread {spread:.3e} below detection threshold")]
    FlatScan { spread: f64 },
}

/// Brute-force oracle failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("dense oracle supports at most {cap} sites, got {got}")]
    SizeCap { cap: usize, got: usize },
    #[error(transparent)]
    Mat(#[from] MatError),
}
