//! Sparse exact Fock-space algebra for few-photon optical circuits.
//!
//! States are stored as sparse superpositions of occupation-number basis
//! states over *modes*. A mode is labelled by a spatial index, a discrete
//! time bin, and an internal (e.g. spectral/polarization-like) label used to
//! model partial distinguishability. Circuits are ordered lists of passive
//! linear elements — beam splitters, phase shifts, and time-bin delays —
//! applied exactly on the sparse representation.
//!
//! Everything here is exact up to floating-point rounding: elements act by
//! closed-form bosonic mode transformations, so norms are preserved to
//! machine precision and no truncation beyond the explicit photon budget
//! ([`MAX_TOTAL_PHOTONS`]) ever occurs.

use std::collections::BTreeMap;
use std::fmt;

pub use num_complex::Complex64;

use crate::error::{Error, Result};

/// Hard upper bound on the total photon number of any represented state.
///
/// The protocols in this crate use at most three photons; the bound exists to
/// catch runaway constructions early rather than to save memory.
pub const MAX_TOTAL_PHOTONS: u32 = 8;

/// Default amplitude-magnitude threshold below which superposition terms are
/// dropped after each circuit element.
pub const DEFAULT_PRUNE_TOL: f64 = 1e-15;

/// Label of a single bosonic mode.
///
/// Ordering is lexicographic in `(spatial, time_bin, internal)`, which fixes
/// a canonical order for serialization and iteration.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ModeLabel {
    /// Spatial rail index. Circuit elements address this index and act on
    /// every time bin and internal label carried by it.
    pub spatial: u16,
    /// Discrete time bin (pulse slot). Must stay nonnegative.
    pub time_bin: i32,
    /// Internal degree of freedom used to model distinguishability; `0` is
    /// the principal label that detectors and interference "see" as one
    /// channel.
    pub internal: u8,
}

impl ModeLabel {
    /// New mode label.
    pub const fn new(spatial: u16, time_bin: i32, internal: u8) -> Self {
        ModeLabel { spatial, time_bin, internal }
    }

    /// Mode with internal label `0`.
    pub const fn principal(spatial: u16, time_bin: i32) -> Self {
        ModeLabel::new(spatial, time_bin, 0)
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.spatial, self.time_bin, self.internal)
    }
}

/// One occupation-number basis state, stored sparsely.
///
/// Canonical form: only modes with nonzero occupation are present. Both
/// `Eq`/`Ord` therefore agree with physical equality of basis states.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct FockBasisState {
    occ: BTreeMap<ModeLabel, u8>,
}

impl FockBasisState {
    /// The vacuum (no photons anywhere).
    pub fn vacuum() -> Self {
        FockBasisState::default()
    }

    /// Basis state with exactly one photon in `mode`.
    pub fn single(mode: ModeLabel) -> Self {
        let mut occ = BTreeMap::new();
        occ.insert(mode, 1);
        FockBasisState { occ }
    }

    /// Build from `(mode, occupation)` pairs. Duplicate modes accumulate,
    /// zero occupations are dropped, and the total photon budget is checked.
    pub fn from_occupations(pairs: impl IntoIterator<Item = (ModeLabel, u8)>) -> Result<Self> {
        let mut occ: BTreeMap<ModeLabel, u8> = BTreeMap::new();
        for (mode, n) in pairs {
            if n == 0 {
                continue;
            }
            let slot = occ.entry(mode).or_insert(0);
            *slot = slot.checked_add(n).ok_or_else(|| Error::domain("occupation overflow"))?;
        }
        let state = FockBasisState { occ };
        state.check_budget()?;
        Ok(state)
    }

    fn check_budget(&self) -> Result<()> {
        let total = self.total_photons();
        if total > MAX_TOTAL_PHOTONS {
            return Err(Error::domain(format!(
                "total photon number {total} exceeds the supported maximum {MAX_TOTAL_PHOTONS}"
            )));
        }
        Ok(())
    }

    /// Occupation of a single mode (0 if absent).
    pub fn occupation(&self, mode: &ModeLabel) -> u8 {
        self.occ.get(mode).copied().unwrap_or(0)
    }

    /// Total photon number.
    pub fn total_photons(&self) -> u32 {
        self.occ.values().map(|&n| n as u32).sum()
    }

    /// Iterate occupied modes in canonical order.
    pub fn modes(&self) -> impl Iterator<Item = (&ModeLabel, u8)> {
        self.occ.iter().map(|(m, &n)| (m, n))
    }

    /// Total occupation of one `(spatial, time_bin)` slot, summed over all
    /// internal labels. This is the quantity a detector gated on that slot
    /// responds to.
    pub fn occupation_on_slot(&self, spatial: u16, time_bin: i32) -> u32 {
        self.occ
            .range(ModeLabel::new(spatial, time_bin, 0)..=ModeLabel::new(spatial, time_bin, u8::MAX))
            .map(|(_, &n)| n as u32)
            .sum()
    }

    /// Total occupation on a spatial rail across all time bins and internals.
    pub fn occupation_on_spatial(&self, spatial: u16) -> u32 {
        self.occ
            .range(
                ModeLabel::new(spatial, i32::MIN, 0)..=ModeLabel::new(spatial, i32::MAX, u8::MAX),
            )
            .map(|(_, &n)| n as u32)
            .sum()
    }

    /// True if no occupied mode has this spatial index.
    pub fn is_spatial_empty(&self, spatial: u16) -> bool {
        self.occupation_on_spatial(spatial) == 0
    }

    /// Split into (modes on `spatial` a or b, everything else).
    fn split_spatial_pair(&self, a: u16, b: u16) -> (Vec<(ModeLabel, u8)>, BTreeMap<ModeLabel, u8>) {
        let mut on = Vec::new();
        let mut off = BTreeMap::new();
        for (&m, &n) in &self.occ {
            if m.spatial == a || m.spatial == b {
                on.push((m, n));
            } else {
                off.insert(m, n);
            }
        }
        (on, off)
    }
}

impl fmt::Display for FockBasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.occ.is_empty() {
            return write!(f, "|vac>");
        }
        write!(f, "|")?;
        for (i, (m, n)) in self.modes().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{m}:{n}")?;
        }
        write!(f, ">")
    }
}

/// Sparse pure state: a finite superposition of [`FockBasisState`] terms.
#[derive(Clone, Debug)]
pub struct PureState {
    terms: BTreeMap<FockBasisState, Complex64>,
    prune_tol: f64,
}

impl PureState {
    /// The vacuum state with amplitude 1.
    pub fn vacuum() -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(FockBasisState::vacuum(), Complex64::new(1.0, 0.0));
        PureState { terms, prune_tol: DEFAULT_PRUNE_TOL }
    }

    /// The zero vector (no terms). Useful as an accumulator.
    pub fn zero() -> Self {
        PureState { terms: BTreeMap::new(), prune_tol: DEFAULT_PRUNE_TOL }
    }

    /// Build from `(basis, amplitude)` pairs; duplicate basis states
    /// accumulate. Checks the photon budget of each term.
    pub fn from_terms(pairs: impl IntoIterator<Item = (FockBasisState, Complex64)>) -> Result<Self> {
        let mut terms: BTreeMap<FockBasisState, Complex64> = BTreeMap::new();
        for (basis, amp) in pairs {
            basis.check_budget()?;
            *terms.entry(basis).or_insert_with(|| Complex64::new(0.0, 0.0)) += amp;
        }
        let mut state = PureState { terms, prune_tol: DEFAULT_PRUNE_TOL };
        state.prune();
        Ok(state)
    }

    /// Amplitude-magnitude threshold used to drop negligible terms.
    pub fn prune_tol(&self) -> f64 {
        self.prune_tol
    }

    /// Replace the pruning threshold (propagated by circuit application).
    pub fn with_prune_tol(mut self, tol: f64) -> Self {
        self.prune_tol = tol.max(0.0);
        self
    }

    fn prune(&mut self) {
        let tol = self.prune_tol;
        self.terms.retain(|_, amp| amp.norm() > tol);
    }

    /// Iterate `(basis, amplitude)` terms in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = (&FockBasisState, &Complex64)> {
        self.terms.iter()
    }

    /// Number of stored terms.
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Amplitude of one basis state (0 if absent).
    pub fn amplitude(&self, basis: &FockBasisState) -> Complex64 {
        self.terms.get(basis).copied().unwrap_or_else(|| Complex64::new(0.0, 0.0))
    }

    /// Squared norm.
    pub fn norm_sq(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    /// Normalized copy. Errors on the zero vector.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sq();
        if n <= 0.0 {
            return Err(Error::domain("cannot normalize a zero state"));
        }
        Ok(self.scaled(Complex64::new(1.0 / n.sqrt(), 0.0)))
    }

    /// Scalar multiple.
    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        for amp in out.terms.values_mut() {
            *amp *= c;
        }
        out.prune();
        out
    }

    /// Vector sum (amplitudes add termwise).
    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (basis, amp) in &other.terms {
            *out.terms.entry(basis.clone()).or_insert_with(|| Complex64::new(0.0, 0.0)) += amp;
        }
        out.prune();
        out
    }

    /// Largest total photon number over all terms.
    pub fn max_total_photons(&self) -> u32 {
        self.terms.keys().map(|b| b.total_photons()).max().unwrap_or(0)
    }

    /// Tensor product. The two states must live on disjoint mode sets.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        // Disjointness at the level of individual mode labels: a shared label
        // would make the product ill-defined on this representation.
        for (basis_a, _) in self.terms() {
            for (mode, _) in basis_a.modes() {
                for (basis_b, _) in other.terms() {
                    if basis_b.occupation(mode) > 0 {
                        return Err(Error::domain(format!(
                            "tensor product requires disjoint mode sets; mode {mode} occupied on both sides"
                        )));
                    }
                }
            }
        }
        let mut terms: BTreeMap<FockBasisState, Complex64> = BTreeMap::new();
        for (basis_a, amp_a) in &self.terms {
            for (basis_b, amp_b) in &other.terms {
                let combined = FockBasisState::from_occupations(
                    basis_a
                        .modes()
                        .map(|(m, n)| (*m, n))
                        .chain(basis_b.modes().map(|(m, n)| (*m, n))),
                )?;
                *terms.entry(combined).or_insert_with(|| Complex64::new(0.0, 0.0)) +=
                    amp_a * amp_b;
            }
        }
        let mut out = PureState { terms, prune_tol: self.prune_tol.max(other.prune_tol) };
        out.prune();
        Ok(out)
    }

    /// Max absolute amplitude difference against another state (sup metric
    /// over the union of basis states). Ignores global sign/phase — callers
    /// that care about phase compare amplitudes directly.
    pub fn distance(&self, other: &Self) -> f64 {
        let mut d: f64 = 0.0;
        for (basis, amp) in &self.terms {
            d = d.max((amp - other.amplitude(basis)).norm());
        }
        for (basis, amp) in &other.terms {
            d = d.max((self.amplitude(basis) - amp).norm());
        }
        d
    }

    /// Canonical plain-text serialization: one term per line,
    /// `"<re> <im> | (spatial,time,internal):n ..."`, with amplitudes printed
    /// to 17 significant digits and modes in canonical order. The vacuum term
    /// has an empty mode list.
    pub fn to_canonical_text(&self) -> String {
        let mut out = String::new();
        for (basis, amp) in &self.terms {
            out.push_str(&crate::textio::sig17(amp.re));
            out.push(' ');
            out.push_str(&crate::textio::sig17(amp.im));
            out.push_str(" |");
            for (mode, n) in basis.modes() {
                out.push_str(&format!(" ({},{},{}):{}", mode.spatial, mode.time_bin, mode.internal, n));
            }
            out.push('\n');
        }
        out
    }

    /// Inverse of [`PureState::to_canonical_text`].
    pub fn from_canonical_text(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (head, tail) = line
                .split_once('|')
                .ok_or_else(|| Error::config(format!("line {}: missing '|' separator", lineno + 1)))?;
            let mut nums = head.split_whitespace();
            let re: f64 = nums
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::config(format!("line {}: bad real part", lineno + 1)))?;
            let im: f64 = nums
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::config(format!("line {}: bad imaginary part", lineno + 1)))?;
            if nums.next().is_some() {
                return Err(Error::config(format!("line {}: extra amplitude fields", lineno + 1)));
            }
            let mut occupations = Vec::new();
            for entry in tail.split_whitespace() {
                let (mode_part, n_part) = entry
                    .split_once("):")
                    .ok_or_else(|| Error::config(format!("line {}: bad mode entry '{entry}'", lineno + 1)))?;
                let mode_part = mode_part
                    .strip_prefix('(')
                    .ok_or_else(|| Error::config(format!("line {}: bad mode entry '{entry}'", lineno + 1)))?;
                let fields: Vec<&str> = mode_part.split(',').collect();
                if fields.len() != 3 {
                    return Err(Error::config(format!("line {}: bad mode entry '{entry}'", lineno + 1)));
                }
                let spatial: u16 = fields[0]
                    .parse()
                    .map_err(|_| Error::config(format!("line {}: bad spatial index", lineno + 1)))?;
                let time_bin: i32 = fields[1]
                    .parse()
                    .map_err(|_| Error::config(format!("line {}: bad time bin", lineno + 1)))?;
                let internal: u8 = fields[2]
                    .parse()
                    .map_err(|_| Error::config(format!("line {}: bad internal label", lineno + 1)))?;
                let n: u8 = n_part
                    .parse()
                    .map_err(|_| Error::config(format!("line {}: bad occupation", lineno + 1)))?;
                occupations.push((ModeLabel::new(spatial, time_bin, internal), n));
            }
            pairs.push((FockBasisState::from_occupations(occupations)?, Complex64::new(re, im)));
        }
        PureState::from_terms(pairs)
    }
}

/// A classical mixture of pure states: `(weight, state)` components with
/// nonnegative weights summing to 1 (within `1e-9`).
#[derive(Clone, Debug)]
pub struct Ensemble {
    components: Vec<(f64, PureState)>,
}

impl Ensemble {
    /// Single-component ensemble (weight 1).
    pub fn from_pure(state: PureState) -> Self {
        Ensemble { components: vec![(1.0, state)] }
    }

    /// Build from components, validating the weight invariants.
    pub fn new(components: Vec<(f64, PureState)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::domain("ensemble needs at least one component"));
        }
        let mut sum = 0.0;
        for (w, _) in &components {
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::domain(format!("ensemble weight {w} is not a probability")));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!("ensemble weights sum to {sum}, expected 1")));
        }
        Ok(Ensemble { components })
    }

    /// Component access in construction order.
    pub fn components(&self) -> &[(f64, PureState)] {
        &self.components
    }

    /// Tensor product of mixtures: the cartesian product of components with
    /// multiplied weights. Component states must live on disjoint modes.
    pub fn tensor(&self, other: &Ensemble) -> Result<Ensemble> {
        let mut components = Vec::with_capacity(self.components.len() * other.components.len());
        for (wa, sa) in &self.components {
            for (wb, sb) in &other.components {
                let w = wa * wb;
                if w == 0.0 {
                    continue;
                }
                components.push((w, sa.tensor(sb)?));
            }
        }
        Ensemble::new(components)
    }
}

/// One passive linear-optics element. Elements address *spatial* rail
/// indices and act uniformly on every time bin and internal label they carry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Element {
    /// Two-rail beam splitter with transmittance `T` and a sign convention
    /// `sign = ±1`. With `t = √T`, `r = √(1−T)` the creation operators map as
    ///
    /// ```text
    /// a†_a → t·a†_a + r·a†_b
    /// a†_b → sign·(r·a†_a − t·a†_b)
    /// ```
    ///
    /// which is unitary and, for `sign = +1`, its own inverse.
    BeamSplitter { mode_a: u16, mode_b: u16, transmittance: f64, sign: i8 },
    /// Phase shifter: each term gains `exp(i·n·phase)` where `n` is the total
    /// occupation of the addressed rail (all bins and internal labels).
    PhaseShift { mode: u16, phase: f64 },
    /// Time-bin delay: every photon on the rail moves `shift` bins later.
    /// Resulting bins must stay nonnegative.
    Delay { mode: u16, shift: i32 },
}

impl Element {
    fn validate(&self) -> Result<()> {
        match *self {
            Element::BeamSplitter { mode_a, mode_b, transmittance, sign } => {
                if mode_a == mode_b {
                    return Err(Error::config("beam splitter needs two distinct rails"));
                }
                if !(0.0..=1.0).contains(&transmittance) || !transmittance.is_finite() {
                    return Err(Error::domain(format!(
                        "beam-splitter transmittance {transmittance} outside [0, 1]"
                    )));
                }
                if sign != 1 && sign != -1 {
                    return Err(Error::config(format!("beam-splitter sign {sign} must be ±1")));
                }
                Ok(())
            }
            Element::PhaseShift { phase, .. } => {
                if !phase.is_finite() {
                    return Err(Error::domain("phase must be finite"));
                }
                Ok(())
            }
            Element::Delay { .. } => Ok(()),
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Element::BeamSplitter { mode_a, mode_b, transmittance, sign } => {
                write!(f, "BS(rails {mode_a},{mode_b}; T={transmittance}; sign={sign:+})")
            }
            Element::PhaseShift { mode, phase } => write!(f, "Phase(rail {mode}; {phase})"),
            Element::Delay { mode, shift } => write!(f, "Delay(rail {mode}; {shift:+} bins)"),
        }
    }
}

/// An ordered sequence of [`Element`]s.
#[derive(Clone, Debug, Default)]
pub struct Circuit {
    elements: Vec<Element>,
}

impl Circuit {
    /// Empty circuit.
    pub fn new() -> Self {
        Circuit::default()
    }

    /// Circuit from an element list.
    pub fn from_elements(elements: Vec<Element>) -> Self {
        Circuit { elements }
    }

    /// Append one element.
    pub fn push(&mut self, element: Element) {
        self.elements.push(element);
    }

    /// Element access in application order.
    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    /// Apply to a pure state.
    pub fn apply(&self, state: &PureState) -> Result<PureState> {
        let mut current = state.clone();
        for element in &self.elements {
            current = apply_element(&current, element)?;
        }
        Ok(current)
    }

    /// Apply component-wise to an ensemble.
    pub fn apply_ensemble(&self, ensemble: &Ensemble) -> Result<Ensemble> {
        let mut components = Vec::with_capacity(ensemble.components().len());
        for (w, state) in ensemble.components() {
            components.push((*w, self.apply(state)?));
        }
        Ensemble::new(components)
    }
}

/// Apply one element to a pure state.
pub fn apply_element(state: &PureState, element: &Element) -> Result<PureState> {
    element.validate()?;
    match *element {
        Element::BeamSplitter { mode_a, mode_b, transmittance, sign } => {
            apply_beam_splitter(state, mode_a, mode_b, transmittance, sign)
        }
        Element::PhaseShift { mode, phase } => apply_phase_shift(state, mode, phase),
        Element::Delay { mode, shift } => apply_delay(state, mode, shift),
    }
}

/// Run a full circuit on a pure state (same as [`Circuit::apply`]).
pub fn run_circuit(state: &PureState, circuit: &Circuit) -> Result<PureState> {
    circuit.apply(state)
}

/// Run a full circuit on an ensemble, component by component.
pub fn run_circuit_ensemble(ensemble: &Ensemble, circuit: &Circuit) -> Result<Ensemble> {
    circuit.apply_ensemble(ensemble)
}

const FACTORIALS: [f64; 17] = [
    1.0,
    1.0,
    2.0,
    6.0,
    24.0,
    120.0,
    720.0,
    5040.0,
    40320.0,
    362880.0,
    3628800.0,
    39916800.0,
    479001600.0,
    6227020800.0,
    87178291200.0,
    1307674368000.0,
    20922789888000.0,
];

fn factorial(n: u8) -> f64 {
    FACTORIALS[n as usize]
}

fn binomial(n: u8, k: u8) -> f64 {
    if k > n {
        return 0.0;
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Amplitudes for `(n_a, n_b) → (p, q)` under the beam-splitter map; exact
/// expansion of the transformed creation-operator monomial.
fn channel_expansion(n_a: u8, n_b: u8, t: f64, r: f64, s: f64) -> Vec<(u8, u8, f64)> {
    let n = n_a + n_b;
    let mut out = Vec::with_capacity(n as usize + 1);
    for p in 0..=n {
        let q = n - p;
        let mut coeff = 0.0;
        let k_min = p.saturating_sub(n_b);
        let k_max = p.min(n_a);
        for k in k_min..=k_max {
            let l = p - k; // photons routed a†_b → a†_a
            coeff += binomial(n_a, k)
                * binomial(n_b, l)
                * t.powi(k as i32)
                * r.powi((n_a - k) as i32)
                * (s * r).powi(l as i32)
                * (-s * t).powi((n_b - l) as i32);
        }
        coeff *= (factorial(p) * factorial(q) / (factorial(n_a) * factorial(n_b))).sqrt();
        out.push((p, q, coeff));
    }
    out
}

fn apply_beam_splitter(
    state: &PureState,
    rail_a: u16,
    rail_b: u16,
    transmittance: f64,
    sign: i8,
) -> Result<PureState> {
    let t = transmittance.sqrt();
    let r = (1.0 - transmittance).sqrt();
    let s = sign as f64;

    let mut terms: BTreeMap<FockBasisState, Complex64> = BTreeMap::new();
    for (basis, amp) in state.terms() {
        let (on_pair, off_pair) = basis.split_spatial_pair(rail_a, rail_b);
        if on_pair.is_empty() {
            *terms.entry(basis.clone()).or_insert_with(|| Complex64::new(0.0, 0.0)) += amp;
            continue;
        }

        // Group occupations by (time_bin, internal) channel; the splitter
        // factorizes across channels.
        let mut channels: BTreeMap<(i32, u8), (u8, u8)> = BTreeMap::new();
        for (mode, n) in on_pair {
            let entry = channels.entry((mode.time_bin, mode.internal)).or_insert((0, 0));
            if mode.spatial == rail_a {
                entry.0 = n;
            } else {
                entry.1 = n;
            }
        }
        let channel_keys: Vec<(i32, u8)> = channels.keys().copied().collect();
        let expansions: Vec<Vec<(u8, u8, f64)>> = channel_keys
            .iter()
            .map(|key| {
                let (n_a, n_b) = channels[key];
                channel_expansion(n_a, n_b, t, r, s)
            })
            .collect();

        // Cartesian product over per-channel expansions.
        let mut stack: Vec<(usize, Vec<(ModeLabel, u8)>, f64)> = vec![(0, Vec::new(), 1.0)];
        while let Some((idx, partial, coeff)) = stack.pop() {
            if coeff == 0.0 {
                continue;
            }
            if idx == channel_keys.len() {
                let combined = FockBasisState::from_occupations(
                    off_pair.iter().map(|(m, n)| (*m, *n)).chain(partial.iter().copied()),
                )?;
                *terms.entry(combined).or_insert_with(|| Complex64::new(0.0, 0.0)) +=
                    amp * coeff;
                continue;
            }
            let (time_bin, internal) = channel_keys[idx];
            for &(p, q, c) in &expansions[idx] {
                let mut next = partial.clone();
                if p > 0 {
                    next.push((ModeLabel::new(rail_a, time_bin, internal), p));
                }
                if q > 0 {
                    next.push((ModeLabel::new(rail_b, time_bin, internal), q));
                }
                stack.push((idx + 1, next, coeff * c));
            }
        }
    }

    let mut out = PureState { terms, prune_tol: state.prune_tol() };
    out.prune();
    Ok(out)
}

fn apply_phase_shift(state: &PureState, rail: u16, phase: f64) -> Result<PureState> {
    let mut terms: BTreeMap<FockBasisState, Complex64> = BTreeMap::new();
    for (basis, amp) in state.terms() {
        let n = basis.occupation_on_spatial(rail);
        let factor = Complex64::from_polar(1.0, n as f64 * phase);
        terms.insert(basis.clone(), amp * factor);
    }
    let mut out = PureState { terms, prune_tol: state.prune_tol() };
    out.prune();
    Ok(out)
}

fn apply_delay(state: &PureState, rail: u16, shift: i32) -> Result<PureState> {
    let mut terms: BTreeMap<FockBasisState, Complex64> = BTreeMap::new();
    for (basis, amp) in state.terms() {
        let mut occupations = Vec::new();
        for (mode, n) in basis.modes() {
            if mode.spatial == rail {
                let new_bin = mode
                    .time_bin
                    .checked_add(shift)
                    .ok_or_else(|| Error::domain("time-bin overflow in delay"))?;
                if new_bin < 0 {
                    return Err(Error::domain(format!(
                        "delay by {shift} bins moves rail {rail} to negative time bin {new_bin}"
                    )));
                }
                occupations.push((ModeLabel::new(mode.spatial, new_bin, mode.internal), n));
            } else {
                occupations.push((*mode, n));
            }
        }
        let shifted = FockBasisState::from_occupations(occupations)?;
        *terms.entry(shifted).or_insert_with(|| Complex64::new(0.0, 0.0)) += amp;
    }
    let mut out = PureState { terms, prune_tol: state.prune_tol() };
    out.prune();
    Ok(out)
}

/// Vacuum–one-photon qubit `α|0⟩ + √(1−α²)·e^{iδ}|1_mode⟩`.
///
/// `alpha` is the (real, nonnegative) vacuum amplitude; `delta` the relative
/// phase of the photon component.
pub fn make_qubit_state(alpha: f64, delta: f64, mode: ModeLabel) -> Result<PureState> {
    if !(0.0..=1.0).contains(&alpha) || !alpha.is_finite() {
        return Err(Error::domain(format!("vacuum amplitude {alpha} outside [0, 1]")));
    }
    if !delta.is_finite() {
        return Err(Error::domain("qubit phase must be finite"));
    }
    let beta = (1.0 - alpha * alpha).sqrt();
    PureState::from_terms([
        (FockBasisState::vacuum(), Complex64::new(alpha, 0.0)),
        (FockBasisState::single(mode), Complex64::from_polar(beta, delta)),
    ])
}

/// Vacuum–one-photon qubit whose photon is only partially indistinguishable
/// from a reference: the photon component is split between the principal
/// internal label of `mode` (weight `x`) and a fictitious internal label
/// (weight `1−x`) that never interferes with other sources.
///
/// `x = 1` reduces to [`make_qubit_state`]; `x = 0` is a fully
/// distinguishable photon.
pub fn make_distinguishable_qubit(
    alpha: f64,
    delta: f64,
    x: f64,
    mode: ModeLabel,
    fictitious_internal: u8,
) -> Result<PureState> {
    if !(0.0..=1.0).contains(&alpha) || !alpha.is_finite() {
        return Err(Error::domain(format!("vacuum amplitude {alpha} outside [0, 1]")));
    }
    if !(0.0..=1.0).contains(&x) || !x.is_finite() {
        return Err(Error::domain(format!("indistinguishability weight {x} outside [0, 1]")));
    }
    if !delta.is_finite() {
        return Err(Error::domain("qubit phase must be finite"));
    }
    if fictitious_internal == mode.internal {
        return Err(Error::config(
            "fictitious internal label must differ from the principal label",
        ));
    }
    let beta = (1.0 - alpha * alpha).sqrt();
    let photon_phase = Complex64::from_polar(1.0, delta);
    let fict_mode = ModeLabel::new(mode.spatial, mode.time_bin, fictitious_internal);
    PureState::from_terms([
        (FockBasisState::vacuum(), Complex64::new(alpha, 0.0)),
        (FockBasisState::single(mode), photon_phase * beta * x.sqrt()),
        (FockBasisState::single(fict_mode), photon_phase * beta * (1.0 - x).sqrt()),
    ])
}

/// Replace a vacuum–one-photon pure state `ψ` by the mixture
/// `λ·|ψ⟩⟨ψ| + (1−λ)·(α²·|0⟩⟨0| + (1−α²)·|1⟩⟨1|)`,
/// where `|1⟩` is the normalized one-photon part of `ψ`. This models a
/// source that with probability `1−λ` loses all phase coherence between the
/// vacuum and photon components while keeping their populations.
pub fn apply_purity(pure: &PureState, lambda: f64, alpha: f64) -> Result<Ensemble> {
    if !(0.0..=1.0).contains(&lambda) || !lambda.is_finite() {
        return Err(Error::domain(format!("purity parameter {lambda} outside [0, 1]")));
    }
    if !(0.0..=1.0).contains(&alpha) || !alpha.is_finite() {
        return Err(Error::domain(format!("vacuum amplitude {alpha} outside [0, 1]")));
    }

    let mut photon_terms = Vec::new();
    for (basis, amp) in pure.terms() {
        match basis.total_photons() {
            0 => {}
            1 => photon_terms.push((basis.clone(), *amp)),
            n => {
                return Err(Error::domain(format!(
                    "purity mixing is defined for vacuum–one-photon states; found a {n}-photon term"
                )))
            }
        }
    }

    let w_pure = lambda;
    let w_vac = (1.0 - lambda) * alpha * alpha;
    let w_photon = (1.0 - lambda) * (1.0 - alpha * alpha);

    let mut components = Vec::new();
    if w_pure > 0.0 {
        components.push((w_pure, pure.clone()));
    }
    if w_vac > 0.0 {
        components.push((w_vac, PureState::vacuum().with_prune_tol(pure.prune_tol())));
    }
    if w_photon > 0.0 {
        let photon_part = PureState::from_terms(photon_terms)?;
        if photon_part.norm_sq() <= 0.0 {
            return Err(Error::domain(
                "state has no one-photon component but the requested mixture needs one",
            ));
        }
        components.push((w_photon, photon_part.normalized()?.with_prune_tol(pure.prune_tol())));
    }
    Ensemble::new(components)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bs(a: u16, b: u16, t: f64) -> Element {
        Element::BeamSplitter { mode_a: a, mode_b: b, transmittance: t, sign: 1 }
    }

    #[test]
    fn balanced_splitter_cancels_coincidences() {
        // One photon on each input rail of a balanced splitter: the
        // coincidence term vanishes and the bunched terms carry ±1/√2.
        let input = PureState::from_terms([(
            FockBasisState::from_occupations([
                (ModeLabel::principal(1, 0), 1),
                (ModeLabel::principal(2, 0), 1),
            ])
            .unwrap(),
            Complex64::new(1.0, 0.0),
        )])
        .unwrap();
        let out = apply_element(&input, &bs(1, 2, 0.5)).unwrap();

        let coincidence = FockBasisState::from_occupations([
            (ModeLabel::principal(1, 0), 1),
            (ModeLabel::principal(2, 0), 1),
        ])
        .unwrap();
        let both_a = FockBasisState::from_occupations([(ModeLabel::principal(1, 0), 2)]).unwrap();
        let both_b = FockBasisState::from_occupations([(ModeLabel::principal(2, 0), 2)]).unwrap();

        assert_abs_diff_eq!(out.amplitude(&coincidence).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.amplitude(&both_a).re, 1.0 / 2f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(out.amplitude(&both_b).re, -1.0 / 2f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(out.norm_sq(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn distinguishable_photons_keep_coincidences() {
        // Different internal labels do not interfere: the coincidence
        // probability of two fully distinguishable photons stays 1/2.
        let input = PureState::from_terms([(
            FockBasisState::from_occupations([
                (ModeLabel::new(1, 0, 0), 1),
                (ModeLabel::new(2, 0, 1), 1),
            ])
            .unwrap(),
            Complex64::new(1.0, 0.0),
        )])
        .unwrap();
        let out = apply_element(&input, &bs(1, 2, 0.5)).unwrap();
        let p_coincidence: f64 = out
            .terms()
            .filter(|(b, _)| {
                b.occupation_on_spatial(1) == 1 && b.occupation_on_spatial(2) == 1
            })
            .map(|(_, a)| a.norm_sqr())
            .sum();
        assert_abs_diff_eq!(p_coincidence, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn positive_sign_splitter_is_an_involution() {
        let state = PureState::from_terms([
            (
                FockBasisState::from_occupations([(ModeLabel::principal(1, 0), 2)]).unwrap(),
                Complex64::new(0.6, 0.1),
            ),
            (
                FockBasisState::from_occupations([
                    (ModeLabel::principal(1, 0), 1),
                    (ModeLabel::principal(2, 3), 1),
                ])
                .unwrap(),
                Complex64::new(0.2, -0.5),
            ),
            (FockBasisState::vacuum(), Complex64::new(0.3, 0.2)),
        ])
        .unwrap();
        let element = bs(1, 2, 0.37);
        let once = apply_element(&state, &element).unwrap();
        let twice = apply_element(&once, &element).unwrap();
        assert!(state.distance(&twice) < 1e-12);
    }

    #[test]
    fn splitter_preserves_norm_and_photon_number() {
        let state = PureState::from_terms([
            (
                FockBasisState::from_occupations([
                    (ModeLabel::new(1, 0, 0), 2),
                    (ModeLabel::new(2, 0, 1), 1),
                    (ModeLabel::new(7, 4, 0), 1),
                ])
                .unwrap(),
                Complex64::new(0.8, -0.1),
            ),
            (
                FockBasisState::from_occupations([(ModeLabel::new(2, 2, 0), 3)]).unwrap(),
                Complex64::new(0.1, 0.55),
            ),
        ])
        .unwrap();
        let before_norm = state.norm_sq();
        let out = apply_element(&state, &bs(1, 2, 0.81)).unwrap();
        assert_abs_diff_eq!(out.norm_sq(), before_norm, epsilon = 1e-12);
        for (basis, _) in out.terms() {
            assert_eq!(basis.total_photons() % 4, basis.total_photons() % 4);
        }
        let max_photons: u32 = out.terms().map(|(b, _)| b.total_photons()).max().unwrap();
        assert_eq!(max_photons, 4);
    }

    #[test]
    fn phase_shift_counts_all_bins_on_a_rail() {
        let state = PureState::from_terms([(
            FockBasisState::from_occupations([
                (ModeLabel::principal(1, 0), 1),
                (ModeLabel::principal(1, 5), 1),
                (ModeLabel::principal(2, 0), 1),
            ])
            .unwrap(),
            Complex64::new(1.0, 0.0),
        )])
        .unwrap();
        let phi = 0.7;
        let out =
            apply_element(&state, &Element::PhaseShift { mode: 1, phase: phi }).unwrap();
        let (_, amp) = out.terms().next().unwrap();
        let expected = Complex64::from_polar(1.0, 2.0 * phi);
        assert!((amp - expected).norm() < 1e-12);
    }

    #[test]
    fn delay_shifts_bins_and_rejects_negative_results() {
        let state = PureState::from_terms([(
            FockBasisState::from_occupations([(ModeLabel::principal(4, 0), 1)]).unwrap(),
            Complex64::new(1.0, 0.0),
        )])
        .unwrap();
        let shifted = apply_element(&state, &Element::Delay { mode: 4, shift: 2 }).unwrap();
        let expect = FockBasisState::from_occupations([(ModeLabel::principal(4, 2), 1)]).unwrap();
        assert!((shifted.amplitude(&expect).re - 1.0).abs() < 1e-15);

        let err = apply_element(&state, &Element::Delay { mode: 4, shift: -1 });
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn qubit_constructors_have_expected_amplitudes() {
        let alpha = 0.6;
        let delta = 1.1;
        let mode = ModeLabel::principal(3, 0);
        let q = make_qubit_state(alpha, delta, mode).unwrap();
        assert_abs_diff_eq!(q.norm_sq(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q.amplitude(&FockBasisState::vacuum()).re, alpha, epsilon = 1e-15);
        let photon = q.amplitude(&FockBasisState::single(mode));
        assert_abs_diff_eq!(photon.norm(), 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(photon.arg(), delta, epsilon = 1e-12);

        let x = 0.9;
        let dq = make_distinguishable_qubit(alpha, 0.0, x, mode, 1).unwrap();
        assert_abs_diff_eq!(dq.norm_sq(), 1.0, epsilon = 1e-12);
        let principal = dq.amplitude(&FockBasisState::single(mode));
        let fict = dq.amplitude(&FockBasisState::single(ModeLabel::new(3, 0, 1)));
        assert_abs_diff_eq!(principal.re, 0.8 * x.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(fict.re, 0.8 * (1.0 - x).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn purity_mixture_weights_and_components() {
        let mode = ModeLabel::principal(3, 0);
        let alpha = 0.6f64;
        let psi = make_qubit_state(alpha, 0.3, mode).unwrap();
        let ens = apply_purity(&psi, 0.75, alpha).unwrap();
        let weights: Vec<f64> = ens.components().iter().map(|(w, _)| *w).collect();
        assert_eq!(weights.len(), 3);
        assert_abs_diff_eq!(weights[0], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(weights[1], 0.25 * 0.36, epsilon = 1e-15);
        assert_abs_diff_eq!(weights[2], 0.25 * 0.64, epsilon = 1e-15);
        // Third component is the normalized photon part.
        let photon_comp = &ens.components()[2].1;
        assert_abs_diff_eq!(photon_comp.norm_sq(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            photon_comp.amplitude(&FockBasisState::single(mode)).norm(),
            1.0,
            epsilon = 1e-12
        );

        // λ = 1 keeps the pure state as the only component.
        let pure_only = apply_purity(&psi, 1.0, alpha).unwrap();
        assert_eq!(pure_only.components().len(), 1);

        // α = 1 with λ < 1: no photon component is required.
        let vac = make_qubit_state(1.0, 0.0, mode).unwrap();
        let ens = apply_purity(&vac, 0.5, 1.0).unwrap();
        let total: f64 = ens.components().iter().map(|(w, _)| w).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn tensor_requires_disjoint_modes() {
        let mode = ModeLabel::principal(1, 0);
        let a = make_qubit_state(0.7, 0.0, mode).unwrap();
        let b = make_qubit_state(0.5, 0.0, mode).unwrap();
        assert!(matches!(a.tensor(&b), Err(Error::Domain(_))));

        let c = make_qubit_state(0.5, 0.0, ModeLabel::principal(2, 0)).unwrap();
        let ab = a.tensor(&c).unwrap();
        assert_abs_diff_eq!(ab.norm_sq(), 1.0, epsilon = 1e-12);
        assert_eq!(ab.term_count(), 4);
    }

    #[test]
    fn photon_budget_is_enforced() {
        let overfull = FockBasisState::from_occupations([(ModeLabel::principal(1, 0), 9)]);
        assert!(matches!(overfull, Err(Error::Domain(_))));

        let four_each = PureState::from_terms([(
            FockBasisState::from_occupations([
                (ModeLabel::principal(1, 0), 4),
                (ModeLabel::principal(2, 0), 4),
            ])
            .unwrap(),
            Complex64::new(1.0, 0.0),
        )])
        .unwrap();
        let one_more = PureState::from_terms([(
            FockBasisState::single(ModeLabel::principal(3, 0)),
            Complex64::new(1.0, 0.0),
        )])
        .unwrap();
        assert!(matches!(four_each.tensor(&one_more), Err(Error::Domain(_))));
    }

    #[test]
    fn canonical_text_round_trips() {
        let mode = ModeLabel::new(3, 2, 1);
        let state = PureState::from_terms([
            (FockBasisState::vacuum(), Complex64::new(0.25, -0.125)),
            (FockBasisState::single(mode), Complex64::new(-0.5, 1.0 / 3.0)),
            (
                FockBasisState::from_occupations([
                    (ModeLabel::principal(1, 0), 2),
                    (mode, 1),
                ])
                .unwrap(),
                Complex64::new(0.7071067811865476, 0.0),
            ),
        ])
        .unwrap();
        let text = state.to_canonical_text();
        let parsed = PureState::from_canonical_text(&text).unwrap();
        assert_eq!(state.term_count(), parsed.term_count());
        assert!(state.distance(&parsed) < 1e-16);
        // Canonical: re-serializing gives identical bytes.
        assert_eq!(text, parsed.to_canonical_text());
    }

    #[test]
    fn ensemble_weight_validation() {
        let s = PureState::vacuum();
        assert!(Ensemble::new(vec![(0.5, s.clone()), (0.5 - 1e-6, s.clone())]).is_err());
        assert!(Ensemble::new(vec![(-0.1, s.clone()), (1.1, s.clone())]).is_err());
        assert!(Ensemble::new(vec![(0.25, s.clone()), (0.75, s)]).is_ok());
    }
}
