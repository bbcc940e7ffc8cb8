//! Detector models and measurement post-processing.
//!
//! Detectors are gated on one `(spatial, time_bin)` slot and respond to the
//! *total* occupation of that slot, summed over internal labels (internal
//! structure is invisible to hardware). Two device models are supported:
//!
//! * **threshold** detectors report `Click`/`NoClick`, with
//!   `P(click | n photons) = 1 − (1 − η)^n`;
//! * **photon-number-resolving** detectors report an exact count, with each
//!   photon surviving to be counted independently with probability `η`
//!   (binomial thinning).
//!
//! Because all detector measurement operators are diagonal in the Fock basis,
//! outcome probabilities never involve cross terms between basis states, and
//! distributions can be computed exactly term by term.
//!
//! The module also supports two post-processing primitives used throughout
//! the protocol layer: heralded *conditioning* of one kept vacuum–one-photon
//! mode into a 2×2 density matrix, and an *efficiency-polynomial* evaluation
//! path that represents probabilities as polynomials in a formal global
//! efficiency scale, so that η → 0 limits are obtained exactly from leading
//! coefficients instead of by numerical extrapolation.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{Ensemble, FockBasisState, ModeLabel, PureState};

/// Detector device model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DetectorKind {
    /// Reports only "at least one photon detected".
    Threshold,
    /// Reports an exact photon count.
    PhotonNumberResolving,
}

/// One detector, gated on the `(spatial, time_bin)` slot of `mode`.
/// The internal label of `mode` is ignored: detectors see the summed slot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorSpec {
    /// Slot the detector is gated on (internal label ignored).
    pub mode: ModeLabel,
    /// Quantum efficiency in [0, 1]. In the efficiency-polynomial path the
    /// value is the *relative scale* of the formal small parameter, so equal
    /// efficiencies (including the default `1.0`) describe the uniform
    /// small-efficiency limit.
    pub efficiency: f64,
    /// Device model.
    pub kind: DetectorKind,
}

impl DetectorSpec {
    /// Threshold detector at a slot.
    pub fn threshold(spatial: u16, time_bin: i32, efficiency: f64) -> Self {
        DetectorSpec {
            mode: ModeLabel::principal(spatial, time_bin),
            efficiency,
            kind: DetectorKind::Threshold,
        }
    }

    /// Photon-number-resolving detector at a slot.
    pub fn pnr(spatial: u16, time_bin: i32, efficiency: f64) -> Self {
        DetectorSpec {
            mode: ModeLabel::principal(spatial, time_bin),
            efficiency,
            kind: DetectorKind::PhotonNumberResolving,
        }
    }

    fn slot(&self) -> (u16, i32) {
        (self.mode.spatial, self.mode.time_bin)
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) || !self.efficiency.is_finite() {
            return Err(Error::domain(format!(
                "detector efficiency {} outside [0, 1]",
                self.efficiency
            )));
        }
        Ok(())
    }
}

/// Reading of a single detector.
///
/// `Click`/`NoClick` are produced by threshold detectors; `Count` by
/// photon-number-resolving ones. In *herald* specifications the meaning is
/// device-independent: `Click` = "registered at least one photon",
/// `NoClick` = "registered none", `Count(k)` = "registered exactly k"
/// (number-resolving detectors only).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Outcome {
    NoClick,
    Click,
    Count(u8),
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::NoClick => write!(f, "none"),
            Outcome::Click => write!(f, "click"),
            Outcome::Count(k) => write!(f, "{k}"),
        }
    }
}

/// Joint reading of all detectors, ordered as in the detector list.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct DetectionPattern(pub Vec<Outcome>);

impl fmt::Display for DetectionPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, outcome) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ";")?;
            }
            write!(f, "d{i}={outcome}")?;
        }
        Ok(())
    }
}

/// Exact probability distribution over joint detector readings.
#[derive(Clone, Debug)]
pub struct OutcomeDistribution {
    n_detectors: usize,
    probs: BTreeMap<DetectionPattern, f64>,
}

impl OutcomeDistribution {
    /// Assemble a distribution from `(pattern, probability)` entries.
    /// Duplicate patterns accumulate; every pattern must have `n_detectors`
    /// outcomes and a finite non-negative probability.
    pub fn from_entries(
        n_detectors: usize,
        entries: impl IntoIterator<Item = (DetectionPattern, f64)>,
    ) -> Result<Self> {
        let mut probs: BTreeMap<DetectionPattern, f64> = BTreeMap::new();
        for (pattern, p) in entries {
            if pattern.0.len() != n_detectors {
                return Err(Error::config(format!(
                    "pattern {pattern} has {} outcomes, expected {n_detectors}",
                    pattern.0.len()
                )));
            }
            if !p.is_finite() || p < 0.0 {
                return Err(Error::domain(format!(
                    "probability {p} for pattern {pattern} is not a finite non-negative number"
                )));
            }
            *probs.entry(pattern).or_insert(0.0) += p;
        }
        Ok(OutcomeDistribution { n_detectors, probs })
    }

    /// Number of detectors the patterns refer to.
    pub fn n_detectors(&self) -> usize {
        self.n_detectors
    }

    /// Iterate `(pattern, probability)` in canonical pattern order.
    pub fn iter(&self) -> impl Iterator<Item = (&DetectionPattern, f64)> {
        self.probs.iter().map(|(p, &v)| (p, v))
    }

    /// Probability of one pattern (0 if absent).
    pub fn probability(&self, pattern: &DetectionPattern) -> f64 {
        self.probs.get(pattern).copied().unwrap_or(0.0)
    }

    /// Sum of all probabilities (should be 1 for normalized input states).
    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }

    /// Largest absolute probability difference against another distribution,
    /// over the union of patterns.
    pub fn max_abs_diff(&self, other: &OutcomeDistribution) -> f64 {
        let mut d: f64 = 0.0;
        for (pattern, p) in self.iter() {
            d = d.max((p - other.probability(pattern)).abs());
        }
        for (pattern, p) in other.iter() {
            d = d.max((self.probability(pattern) - p).abs());
        }
        d
    }

    /// CSV rendering: header `pattern,probability`, one row per pattern in
    /// canonical order, probabilities at 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("pattern,probability\n");
        for (pattern, p) in self.iter() {
            out.push_str(&format!("{pattern},{}\n", crate::textio::sig17(p)));
        }
        out
    }
}

/// Borrowed view of either a pure state or an ensemble, so measurement
/// routines accept both without copying.
#[derive(Clone, Copy)]
pub enum StateRef<'a> {
    Pure(&'a PureState),
    Mixture(&'a Ensemble),
}

impl<'a> From<&'a PureState> for StateRef<'a> {
    fn from(s: &'a PureState) -> Self {
        StateRef::Pure(s)
    }
}

impl<'a> From<&'a Ensemble> for StateRef<'a> {
    fn from(e: &'a Ensemble) -> Self {
        StateRef::Mixture(e)
    }
}

impl<'a> StateRef<'a> {
    /// Weighted pure components of the state.
    pub fn parts(&self) -> Vec<(f64, &'a PureState)> {
        match self {
            StateRef::Pure(s) => vec![(1.0, *s)],
            StateRef::Mixture(e) => e.components().iter().map(|(w, s)| (*w, s)).collect(),
        }
    }
}

fn validate_detectors(detectors: &[DetectorSpec]) -> Result<()> {
    let mut seen = BTreeMap::new();
    for (idx, det) in detectors.iter().enumerate() {
        det.validate()?;
        if let Some(prev) = seen.insert(det.slot(), idx) {
            return Err(Error::config(format!(
                "detectors {prev} and {idx} are gated on the same slot ({}, {})",
                det.mode.spatial, det.mode.time_bin
            )));
        }
    }
    Ok(())
}

fn validate_herald(detectors: &[DetectorSpec], herald: &[(usize, Outcome)]) -> Result<()> {
    let mut seen = vec![false; detectors.len()];
    for &(idx, outcome) in herald {
        let det = detectors
            .get(idx)
            .ok_or_else(|| Error::config(format!("herald references detector {idx} out of range")))?;
        if seen[idx] {
            return Err(Error::config(format!("herald references detector {idx} twice")));
        }
        seen[idx] = true;
        if matches!(outcome, Outcome::Count(_)) && det.kind == DetectorKind::Threshold {
            return Err(Error::config(format!(
                "herald demands an exact count from threshold detector {idx}"
            )));
        }
    }
    Ok(())
}

/// Probability factor for one detector reading given `n` photons at its slot.
fn outcome_factor(outcome: Outcome, eta: f64, n: u32) -> f64 {
    match outcome {
        Outcome::Click => 1.0 - (1.0 - eta).powi(n as i32),
        Outcome::NoClick => (1.0 - eta).powi(n as i32),
        Outcome::Count(k) => {
            let k = k as u32;
            if k > n {
                0.0
            } else {
                binom_u32(n, k) * eta.powi(k as i32) * (1.0 - eta).powi((n - k) as i32)
            }
        }
    }
}

fn binom_u32(n: u32, k: u32) -> f64 {
    // n ≤ 8 in this crate; exact in f64.
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// Exact joint outcome distribution of `detectors` for `state`.
///
/// Detectors must be gated on pairwise distinct slots. The distribution is
/// stored in a canonical (ordered) map so the result is deterministic.
pub fn outcome_distribution<'a>(
    state: impl Into<StateRef<'a>>,
    detectors: &[DetectorSpec],
) -> Result<OutcomeDistribution> {
    let state = state.into();
    validate_detectors(detectors)?;

    let mut probs: BTreeMap<DetectionPattern, f64> = BTreeMap::new();
    for (weight, pure) in state.parts() {
        for (basis, amp) in pure.terms() {
            let w = weight * amp.norm_sqr();
            if w == 0.0 {
                continue;
            }
            let counts: Vec<u32> = detectors
                .iter()
                .map(|d| basis.occupation_on_slot(d.mode.spatial, d.mode.time_bin))
                .collect();
            accumulate_patterns(detectors, &counts, w, &mut probs);
        }
    }
    Ok(OutcomeDistribution { n_detectors: detectors.len(), probs })
}

fn accumulate_patterns(
    detectors: &[DetectorSpec],
    counts: &[u32],
    weight: f64,
    probs: &mut BTreeMap<DetectionPattern, f64>,
) {
    // Depth-first enumeration of per-detector outcome alphabets; zero-
    // probability branches are skipped so the tree stays small.
    let mut pattern = Vec::with_capacity(detectors.len());
    recurse(detectors, counts, 0, weight, &mut pattern, probs);

    fn recurse(
        detectors: &[DetectorSpec],
        counts: &[u32],
        idx: usize,
        acc: f64,
        pattern: &mut Vec<Outcome>,
        probs: &mut BTreeMap<DetectionPattern, f64>,
    ) {
        if acc == 0.0 {
            return;
        }
        if idx == detectors.len() {
            *probs.entry(DetectionPattern(pattern.clone())).or_insert(0.0) += acc;
            return;
        }
        let det = &detectors[idx];
        let n = counts[idx];
        match det.kind {
            DetectorKind::Threshold => {
                for outcome in [Outcome::NoClick, Outcome::Click] {
                    let f = outcome_factor(outcome, det.efficiency, n);
                    if f > 0.0 {
                        pattern.push(outcome);
                        recurse(detectors, counts, idx + 1, acc * f, pattern, probs);
                        pattern.pop();
                    }
                }
            }
            DetectorKind::PhotonNumberResolving => {
                for k in 0..=n.min(u8::MAX as u32) {
                    let outcome = Outcome::Count(k as u8);
                    let f = outcome_factor(outcome, det.efficiency, n);
                    if f > 0.0 {
                        pattern.push(outcome);
                        recurse(detectors, counts, idx + 1, acc * f, pattern, probs);
                        pattern.pop();
                    }
                }
            }
        }
    }
}

/// Probability that the listed detectors produce the listed readings
/// (a partial pattern: unlisted detectors are marginalized over).
pub fn heralding_probability<'a>(
    state: impl Into<StateRef<'a>>,
    detectors: &[DetectorSpec],
    herald: &[(usize, Outcome)],
) -> Result<f64> {
    let state = state.into();
    validate_detectors(detectors)?;
    validate_herald(detectors, herald)?;

    let mut total = 0.0;
    for (weight, pure) in state.parts() {
        for (basis, amp) in pure.terms() {
            let w = weight * amp.norm_sqr();
            if w == 0.0 {
                continue;
            }
            let mut factor = 1.0;
            for &(idx, outcome) in herald {
                let det = &detectors[idx];
                let n = basis.occupation_on_slot(det.mode.spatial, det.mode.time_bin);
                factor *= outcome_factor(outcome, det.efficiency, n);
                if factor == 0.0 {
                    break;
                }
            }
            total += w * factor;
        }
    }
    Ok(total)
}

/// A 2×2 density matrix in the `{|0⟩, |1⟩}` (vacuum, one-photon) basis of a
/// single kept mode.
#[derive(Clone, Copy, Debug)]
pub struct QubitDensity {
    m: [[Complex64; 2]; 2],
}

impl QubitDensity {
    /// Build from matrix entries, checking hermiticity, unit trace, and
    /// positive semidefiniteness (within numerical slack).
    pub fn new(m: [[Complex64; 2]; 2]) -> Result<Self> {
        let rho = QubitDensity { m };
        rho.validate()?;
        Ok(rho)
    }

    fn validate(&self) -> Result<()> {
        let m = &self.m;
        if (m[0][1] - m[1][0].conj()).norm() > 1e-9
            || m[0][0].im.abs() > 1e-9
            || m[1][1].im.abs() > 1e-9
        {
            return Err(Error::domain("density matrix is not hermitian"));
        }
        if (self.trace() - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!(
                "density matrix trace {} differs from 1",
                self.trace()
            )));
        }
        let (lo, _hi) = self.eigenvalues();
        if lo < -1e-12 {
            return Err(Error::domain(format!(
                "density matrix has negative eigenvalue {lo}"
            )));
        }
        Ok(())
    }

    /// Matrix element `ρ[i][j]`.
    pub fn element(&self, i: usize, j: usize) -> Complex64 {
        self.m[i][j]
    }

    /// Trace (real part; imaginary part is checked to vanish).
    pub fn trace(&self) -> f64 {
        (self.m[0][0] + self.m[1][1]).re
    }

    /// Purity `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        let m = &self.m;
        (m[0][0] * m[0][0] + m[0][1] * m[1][0] + m[1][0] * m[0][1] + m[1][1] * m[1][1]).re
    }

    /// Eigenvalues `(min, max)` of the hermitian matrix.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let a = self.m[0][0].re;
        let d = self.m[1][1].re;
        let mean = 0.5 * (a + d);
        let radius = (0.25 * (a - d) * (a - d) + self.m[0][1].norm_sqr()).sqrt();
        (mean - radius, mean + radius)
    }

    /// Overlap `⟨ψ|ρ|ψ⟩` with the pure qubit `a0|0⟩ + a1|1⟩`.
    pub fn fidelity_with_pure(&self, a0: Complex64, a1: Complex64) -> f64 {
        let m = &self.m;
        let v = [a0, a1];
        let mut f = Complex64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                f += v[i].conj() * m[i][j] * v[j];
            }
        }
        f.re
    }

    /// Largest absolute entry difference against another density matrix.
    pub fn max_abs_diff(&self, other: &QubitDensity) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.m[i][j] - other.m[i][j]).norm());
            }
        }
        d
    }
}

impl fmt::Display for QubitDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "[{:+.6}{:+.6}i  {:+.6}{:+.6}i]",
            self.m[0][0].re, self.m[0][0].im, self.m[0][1].re, self.m[0][1].im
        )?;
        write!(
            f,
            "[{:+.6}{:+.6}i  {:+.6}{:+.6}i]",
            self.m[1][0].re, self.m[1][0].im, self.m[1][1].re, self.m[1][1].im
        )
    }
}

/// Condition the state on a heralding pattern and trace out everything except
/// one kept `(spatial, time_bin)` slot, which must carry at most one photon.
///
/// Returns `(herald probability, normalized 2×2 density matrix)` for the kept
/// slot in the `{vacuum, one photon}` basis. Coherences are taken between the
/// vacuum and the *principal* internal label of the kept slot; photons under
/// other internal labels contribute population but no coherence, which is
/// exactly how partially distinguishable photons decohere the kept qubit.
///
/// The herald must not reference a detector gated on the kept slot.
pub fn condition<'a>(
    state: impl Into<StateRef<'a>>,
    detectors: &[DetectorSpec],
    herald: &[(usize, Outcome)],
    keep: ModeLabel,
) -> Result<(f64, QubitDensity)> {
    let state = state.into();
    validate_detectors(detectors)?;
    validate_herald(detectors, herald)?;
    let keep_slot = (keep.spatial, keep.time_bin);
    for &(idx, _) in herald {
        if detectors[idx].slot() == keep_slot {
            return Err(Error::config(format!(
                "herald detector {idx} is gated on the kept slot ({}, {})",
                keep_slot.0, keep_slot.1
            )));
        }
    }

    let mut rho00 = 0.0f64;
    let mut rho11 = 0.0f64;
    let mut rho01 = Complex64::new(0.0, 0.0);

    for (weight, pure) in state.parts() {
        // Group terms by their "context": the basis state restricted to all
        // modes outside the kept slot. Within one context, vacuum and
        // one-photon amplitudes on the kept slot form the conditional qubit.
        #[derive(Default)]
        struct Group {
            vac: Complex64,
            principal: Complex64,
            other_pop: f64,
        }
        let mut groups: BTreeMap<FockBasisState, Group> = BTreeMap::new();

        for (basis, amp) in pure.terms() {
            let mut kept_photons = 0u32;
            let mut kept_internal: Option<u8> = None;
            let mut context_modes = Vec::new();
            for (mode, n) in basis.modes() {
                if (mode.spatial, mode.time_bin) == keep_slot {
                    kept_photons += n as u32;
                    kept_internal = Some(mode.internal);
                } else {
                    context_modes.push((*mode, n));
                }
            }
            if kept_photons > 1 {
                return Err(Error::domain(format!(
                    "kept slot ({}, {}) carries {kept_photons} photons; conditioning is defined \
                     for vacuum–one-photon content",
                    keep_slot.0, keep_slot.1
                )));
            }
            let context = FockBasisState::from_occupations(context_modes)?;
            let group = groups.entry(context).or_default();
            match (kept_photons, kept_internal) {
                (0, _) => group.vac += amp,
                (1, Some(internal)) if internal == keep.internal => group.principal += amp,
                (1, _) => group.other_pop += amp.norm_sqr(),
                _ => unreachable!(),
            }
        }

        for (context, group) in groups {
            let mut factor = 1.0;
            for &(idx, outcome) in herald {
                let det = &detectors[idx];
                let n = context.occupation_on_slot(det.mode.spatial, det.mode.time_bin);
                factor *= outcome_factor(outcome, det.efficiency, n);
                if factor == 0.0 {
                    break;
                }
            }
            if factor == 0.0 {
                continue;
            }
            let w = weight * factor;
            rho00 += w * group.vac.norm_sqr();
            rho11 += w * (group.principal.norm_sqr() + group.other_pop);
            rho01 += w * group.vac * group.principal.conj();
        }
    }

    let prob = rho00 + rho11;
    if prob < 1e-15 {
        return Err(Error::ImpossibleHerald);
    }
    let inv = 1.0 / prob;
    let density = QubitDensity::new([
        [Complex64::new(rho00 * inv, 0.0), rho01 * inv],
        [rho01.conj() * inv, Complex64::new(rho11 * inv, 0.0)],
    ])?;
    Ok((prob, density))
}

// ---------------------------------------------------------------------------
// Efficiency-polynomial path
// ---------------------------------------------------------------------------

/// Maximum degree of [`EtaPoly`]; bounded by the photon budget, since each
/// detected photon contributes at most one power of the efficiency scale.
pub const ETA_POLY_MAX_DEGREE: usize = crate::fock::MAX_TOTAL_PHOTONS as usize;

/// Dense polynomial in a formal global efficiency scale ε, used to evaluate
/// heralding probabilities exactly as functions of a uniform efficiency
/// rescaling `η_d = s_d·ε`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EtaPoly {
    c: [f64; ETA_POLY_MAX_DEGREE + 1],
}

impl EtaPoly {
    /// The zero polynomial.
    pub fn zero() -> Self {
        EtaPoly { c: [0.0; ETA_POLY_MAX_DEGREE + 1] }
    }

    /// Constant polynomial.
    pub fn constant(value: f64) -> Self {
        let mut p = EtaPoly::zero();
        p.c[0] = value;
        p
    }

    /// The multiplicative identity.
    pub fn one() -> Self {
        EtaPoly::constant(1.0)
    }

    /// Coefficient of ε^k.
    pub fn coeff(&self, k: usize) -> f64 {
        self.c[k]
    }

    /// All coefficients, constant term first.
    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    fn set(&mut self, k: usize, value: f64) -> Result<()> {
        if k > ETA_POLY_MAX_DEGREE {
            return Err(Error::domain("efficiency polynomial degree exceeds photon budget"));
        }
        self.c[k] = value;
        Ok(())
    }

    /// Polynomial product; degrees beyond the photon budget are an error
    /// (they cannot occur for physical heralds within the budget).
    pub fn mul(&self, other: &EtaPoly) -> Result<EtaPoly> {
        let mut out = EtaPoly::zero();
        for i in 0..=ETA_POLY_MAX_DEGREE {
            if self.c[i] == 0.0 {
                continue;
            }
            for j in 0..=ETA_POLY_MAX_DEGREE {
                if other.c[j] == 0.0 {
                    continue;
                }
                if i + j > ETA_POLY_MAX_DEGREE {
                    return Err(Error::domain(
                        "efficiency polynomial degree exceeds photon budget",
                    ));
                }
                out.c[i + j] += self.c[i] * other.c[j];
            }
        }
        Ok(out)
    }

    /// In-place sum.
    pub fn add_assign(&mut self, other: &EtaPoly) {
        for k in 0..=ETA_POLY_MAX_DEGREE {
            self.c[k] += other.c[k];
        }
    }

    /// Scalar multiple.
    pub fn scaled(&self, f: f64) -> EtaPoly {
        let mut out = *self;
        for c in &mut out.c {
            *c *= f;
        }
        out
    }

    /// Evaluate at a concrete ε.
    pub fn eval(&self, eps: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.c.iter().rev() {
            acc = acc * eps + c;
        }
        acc
    }

    /// Lowest order with a coefficient exceeding `abs_tol` in magnitude.
    pub fn leading(&self, abs_tol: f64) -> Option<(usize, f64)> {
        self.c
            .iter()
            .enumerate()
            .find(|(_, c)| c.abs() > abs_tol)
            .map(|(k, &c)| (k, c))
    }

    /// Largest coefficient magnitude.
    pub fn max_coeff(&self) -> f64 {
        self.c.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }
}

/// Per-detector outcome factor as a polynomial in the formal scale ε.
///
/// Every efficiency is interpreted as the relative scale `s` in `η = s·ε`,
/// so the default `1.0` simply means "same scale as everyone else" — the
/// natural uniform-efficiency limit. (Vacuum-demanding outcomes keep a
/// constant leading term, so at leading order they behave like exact
/// indicators anyway.)
fn outcome_factor_poly(outcome: Outcome, efficiency: f64, n: u32) -> Result<EtaPoly> {
    let s = efficiency;
    // (1 − s·ε)^n  =  Σ_k C(n,k) (−s)^k ε^k
    let mut silent = EtaPoly::zero();
    for k in 0..=n {
        silent.set(k as usize, binom_u32(n, k) * (-s).powi(k as i32))?;
    }
    match outcome {
        Outcome::NoClick => Ok(silent),
        Outcome::Click => {
            let mut click = silent.scaled(-1.0);
            click.c[0] += 1.0;
            Ok(click)
        }
        Outcome::Count(k) => {
            let k = k as u32;
            if k > n {
                return Ok(EtaPoly::zero());
            }
            // C(n,k)·(s·ε)^k·(1 − s·ε)^{n−k}
            let mut count = EtaPoly::zero();
            let lead = binom_u32(n, k) * s.powi(k as i32);
            for j in 0..=(n - k) {
                count.set((k + j) as usize, lead * binom_u32(n - k, j) * (-s).powi(j as i32))?;
            }
            Ok(count)
        }
    }
}

/// Heralding probability as a polynomial in the formal efficiency scale.
///
/// Every detector contributes an `η_d = s_d·ε` factor, with `s_d` its
/// configured efficiency. The leading coefficient of the result is the exact
/// small-efficiency limit of the heralding rate (up to the known power of ε).
pub fn herald_weight_poly<'a>(
    state: impl Into<StateRef<'a>>,
    detectors: &[DetectorSpec],
    herald: &[(usize, Outcome)],
) -> Result<EtaPoly> {
    let state = state.into();
    validate_detectors(detectors)?;
    validate_herald(detectors, herald)?;

    let mut total = EtaPoly::zero();
    for (weight, pure) in state.parts() {
        for (basis, amp) in pure.terms() {
            let w = weight * amp.norm_sqr();
            if w == 0.0 {
                continue;
            }
            let mut factor = EtaPoly::one();
            let mut vanished = false;
            for &(idx, outcome) in herald {
                let det = &detectors[idx];
                let n = basis.occupation_on_slot(det.mode.spatial, det.mode.time_bin);
                let poly = outcome_factor_poly(outcome, det.efficiency, n)?;
                if poly.max_coeff() == 0.0 {
                    vanished = true;
                    break;
                }
                factor = factor.mul(&poly)?;
            }
            if !vanished {
                total.add_assign(&factor.scaled(w));
            }
        }
    }
    Ok(total)
}

/// Extract, from a family of efficiency polynomials sampled over a phase
/// grid, the common leading order and its coefficients.
///
/// The leading order is the smallest ε-power whose coefficient is
/// non-negligible *somewhere* on the grid; the returned values are that
/// coefficient at every grid point (possibly 0 at isolated points, e.g. dark
/// fringes). Errors with [`Error::NoSignal`] when every polynomial vanishes.
pub fn leading_order_values(polys: &[EtaPoly]) -> Result<(usize, Vec<f64>)> {
    let global_max = polys.iter().fold(0.0f64, |m, p| m.max(p.max_coeff()));
    if global_max <= 0.0 {
        return Err(Error::NoSignal);
    }
    let abs_tol = 1e-12 * global_max;
    let order = polys
        .iter()
        .filter_map(|p| p.leading(abs_tol).map(|(k, _)| k))
        .min()
        .ok_or(Error::NoSignal)?;
    Ok((order, polys.iter().map(|p| p.coeff(order)).collect()))
}
