//! Deterministic plain-text number formatting shared by serializers and CSV
//! emitters. All numeric output in this crate goes through [`sig17`] so that
//! repeated runs produce byte-identical files on every platform.

/// Format with 17 significant digits in scientific notation — enough to
/// round-trip any `f64` exactly.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parse a float previously written by [`sig17`] (or any standard float
/// literal).
pub fn parse_f64(s: &str) -> Option<f64> {
    s.trim().parse().ok()
}
