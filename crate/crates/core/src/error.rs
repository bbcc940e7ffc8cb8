//! Crate-wide error type.
//!
//! All fallible operations in this crate return [`Result`]. Variants are
//! grouped by what the caller can do about them: `Domain` and `Config` are
//! programmer/input errors, `ImpossibleHerald` and `NoSignal` are legitimate
//! physical outcomes of a query (zero-probability conditioning, dark fringe
//! scans), and `InconsistentVisibilities` reports that a parameter-recovery
//! problem has no real solution.

use thiserror::Error;

/// Errors produced by simulator, analytics, and verification routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument lies outside its mathematically valid range
    /// (amplitudes outside [0, 1], negative time bins, photon budget
    /// exceeded, and similar).
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural configuration problem: duplicate detectors on one slot,
    /// detectors colliding with the kept mode, malformed grids, unknown
    /// configuration keys.
    #[error("configuration error: {0}")]
    Config(String),

    /// Conditioning on a detection record that has probability zero for the
    /// supplied state.
    #[error("herald pattern has zero probability for this state")]
    ImpossibleHerald,

    /// A fringe scan in which every sampled probability is numerically zero,
    /// so no visibility is defined.
    #[error("fringe scan produced no signal at any phase")]
    NoSignal,

    /// Four coincidence visibilities that admit no real beam-splitter
    /// parametrization (negative discriminant or out-of-range branch).
    #[error("visibilities admit no consistent parametrization: {0}")]
    InconsistentVisibilities(String),

    /// A least-squares fit whose result is outside its physical domain,
    /// e.g. a negative fitted intercept where a squared magnitude is needed.
    #[error("fit error: {0}")]
    Fit(String),

    /// A request the exact verification engine does not support (it is kept
    /// deliberately simple and rejects what it cannot model faithfully).
    #[error("unsupported verification request: {0}")]
    Unsupported(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand constructor for [`Error::Domain`].
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Shorthand constructor for [`Error::Config`].
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
