//! Independent brute-force verification engine.
//!
//! The fast detection path treats detector inefficiency as binomial thinning
//! of photon counts. This module re-derives every observable a second way:
//! loss is modeled as an explicit beam splitter routing each detector rail
//! into a reserved *environment* rail (a unitary dilation), detection is the
//! exact photon count on the slot, and threshold readings are coarse-grained
//! from exact counts. None of the thinning or efficiency-polynomial code is
//! reused, so agreement between the two paths — and between either path and
//! the closed forms in [`crate::analytics`] — is evidence, not construction.
//!
//! [`verify_formula`] checks one closed-form prediction against this engine
//! on a small parameter grid and reports the largest deviation;
//! [`verify_all`] runs the whole registry.

use crate::analytics::{
    ideal_teleported_visibility, probe_click_probability, probe_visibility,
    swap_coincidence_probability, swap_visibilities, teleport_coincidence_probability,
    teleport_pair_visibility, teleported_visibility_model, SourceParams, SwapPair, SwapParams,
    TeleportPair,
};
use crate::detection::{
    DetectionPattern, DetectorKind, DetectorSpec, Outcome, OutcomeDistribution, QubitDensity,
};
use crate::error::{Error, Result};
use crate::fock::{run_circuit_ensemble, Circuit, Element, Ensemble, FockBasisState, ModeLabel};
use crate::protocols::{
    alice_herald, bell_analyzer_circuit, build_measurement_stage, build_protocol, AliceOutcome,
    NoiseParams, ProtocolSpec, Routing,
};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

/// First spatial index reserved for environment rails: the loss expansion
/// maps detector rail `r` onto environment rail `ENV_RAIL_BASE + r`.
pub const ENV_RAIL_BASE: u16 = 1000;

/// Append one loss beam splitter per lossy detector rail and return the
/// expanded circuit. Detectors sharing a spatial rail must share their
/// efficiency (one physical loss channel per rail); rails at or above
/// [`ENV_RAIL_BASE`] are reserved.
fn loss_expanded(circuit: &Circuit, detectors: &[DetectorSpec]) -> Result<Circuit> {
    let mut rail_eta: BTreeMap<u16, f64> = BTreeMap::new();
    for det in detectors {
        if det.mode.spatial >= ENV_RAIL_BASE {
            return Err(Error::config(format!(
                "detector rail {} collides with the reserved environment range (≥ {})",
                det.mode.spatial, ENV_RAIL_BASE
            )));
        }
        if !(0.0..=1.0).contains(&det.efficiency) || !det.efficiency.is_finite() {
            return Err(Error::domain(format!(
                "detector efficiency {} outside [0, 1]",
                det.efficiency
            )));
        }
        match rail_eta.get(&det.mode.spatial) {
            Some(&eta) if eta != det.efficiency => {
                return Err(Error::Unsupported(format!(
                    "detectors on rail {} have different efficiencies ({eta} vs {}); the \
                     explicit-loss model has one loss channel per rail",
                    det.mode.spatial, det.efficiency
                )));
            }
            Some(_) => {}
            None => {
                rail_eta.insert(det.mode.spatial, det.efficiency);
            }
        }
    }
    let mut full = circuit.clone();
    for (&rail, &eta) in &rail_eta {
        if eta < 1.0 {
            full.push(Element::BeamSplitter {
                mode_a: rail,
                mode_b: ENV_RAIL_BASE + rail,
                transmittance: eta,
                sign: 1,
            });
        }
    }
    Ok(full)
}

fn outcome_matches(outcome: Outcome, photons: u32) -> bool {
    match outcome {
        Outcome::NoClick => photons == 0,
        Outcome::Click => photons >= 1,
        Outcome::Count(k) => photons == k as u32,
    }
}

fn validate_herald_indices(detectors: &[DetectorSpec], herald: &[(usize, Outcome)]) -> Result<()> {
    for &(idx, _) in herald {
        if idx >= detectors.len() {
            return Err(Error::config(format!(
                "herald references detector {idx}, but only {} exist",
                detectors.len()
            )));
        }
    }
    Ok(())
}

/// Joint detector-outcome distribution computed through the explicit-loss
/// expansion: run the circuit followed by the per-rail loss splitters, read
/// exact photon counts on every detector slot, and coarse-grain threshold
/// detectors to click/no-click.
pub fn oracle_distribution(
    input: &Ensemble,
    circuit: &Circuit,
    detectors: &[DetectorSpec],
) -> Result<OutcomeDistribution> {
    let full = loss_expanded(circuit, detectors)?;
    let state = run_circuit_ensemble(input, &full)?;
    let mut entries: BTreeMap<DetectionPattern, f64> = BTreeMap::new();
    for (weight, pure) in state.components() {
        for (basis, amp) in pure.terms() {
            let mut outcomes = Vec::with_capacity(detectors.len());
            for det in detectors {
                let n = basis.occupation_on_slot(det.mode.spatial, det.mode.time_bin);
                outcomes.push(match det.kind {
                    DetectorKind::Threshold => {
                        if n > 0 {
                            Outcome::Click
                        } else {
                            Outcome::NoClick
                        }
                    }
                    DetectorKind::PhotonNumberResolving => Outcome::Count(n as u8),
                });
            }
            *entries.entry(DetectionPattern(outcomes)).or_insert(0.0) +=
                weight * amp.norm_sqr();
        }
    }
    OutcomeDistribution::from_entries(detectors.len(), entries)
}

/// Probability that every listed detector satisfies its outcome, computed
/// through the explicit-loss expansion. Outcome semantics are
/// device-independent: `Click` is "at least one photon arrived",
/// `Count(k)` "exactly k arrived".
pub fn oracle_herald_probability(
    input: &Ensemble,
    circuit: &Circuit,
    detectors: &[DetectorSpec],
    herald: &[(usize, Outcome)],
) -> Result<f64> {
    validate_herald_indices(detectors, herald)?;
    let full = loss_expanded(circuit, detectors)?;
    let state = run_circuit_ensemble(input, &full)?;
    let mut prob = 0.0;
    for (weight, pure) in state.components() {
        for (basis, amp) in pure.terms() {
            let matches = herald.iter().all(|&(idx, outcome)| {
                let det = &detectors[idx];
                let n = basis.occupation_on_slot(det.mode.spatial, det.mode.time_bin);
                outcome_matches(outcome, n)
            });
            if matches {
                prob += weight * amp.norm_sqr();
            }
        }
    }
    Ok(prob)
}

/// Condition on a herald and reduce to the kept slot's vacuum–one-photon
/// density matrix, all through the explicit-loss expansion.
///
/// Mirrors the contract of [`crate::detection::condition`]: coherence is
/// taken between vacuum and the principal internal label, photons under
/// other internal labels contribute population only, and a kept slot with
/// more than one photon is a domain error.
pub fn oracle_condition(
    input: &Ensemble,
    circuit: &Circuit,
    detectors: &[DetectorSpec],
    herald: &[(usize, Outcome)],
    keep: ModeLabel,
) -> Result<(f64, QubitDensity)> {
    validate_herald_indices(detectors, herald)?;
    let keep_slot = (keep.spatial, keep.time_bin);
    for &(idx, _) in herald {
        if (detectors[idx].mode.spatial, detectors[idx].mode.time_bin) == keep_slot {
            return Err(Error::config(format!(
                "herald detector {idx} is gated on the kept slot ({}, {})",
                keep_slot.0, keep_slot.1
            )));
        }
    }
    let full = loss_expanded(circuit, detectors)?;
    let state = run_circuit_ensemble(input, &full)?;

    let mut rho00 = 0.0f64;
    let mut rho11 = 0.0f64;
    let mut rho01 = Complex64::new(0.0, 0.0);

    for (weight, pure) in state.components() {
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
                    "kept slot ({}, {}) carries {kept_photons} photons; conditioning is \
                     defined for vacuum–one-photon content",
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
            let admitted = herald.iter().all(|&(idx, outcome)| {
                let det = &detectors[idx];
                let n = context.occupation_on_slot(det.mode.spatial, det.mode.time_bin);
                outcome_matches(outcome, n)
            });
            if !admitted {
                continue;
            }
            rho00 += weight * group.vac.norm_sqr();
            rho11 += weight * (group.principal.norm_sqr() + group.other_pop);
            rho01 += weight * group.vac * group.principal.conj();
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
// Fringe extraction and extrapolation helpers
// ---------------------------------------------------------------------------

/// Visibility of an exactly sinusoidal probability `p(φ) = a + b·cosφ + c·sinφ`
/// from its values at `φ ∈ {0, π/2, π}`.
fn fringe_from_three_points(p0: f64, pq: f64, pp: f64) -> Result<f64> {
    let a = 0.5 * (p0 + pp);
    if a <= 0.0 {
        return Err(Error::NoSignal);
    }
    let b = 0.5 * (p0 - pp);
    let c = pq - a;
    Ok((b * b + c * c).sqrt() / a)
}

/// Oracle fringe visibility of a joint detector pattern as the build phase
/// scans `{0, π/2, π}`.
///
/// Every probability is computed through the explicit-loss route, so this is
/// an independent cross-check of the fast path's fringe machinery.
pub fn oracle_pattern_fringe(spec: &ProtocolSpec, pattern: &[(usize, Outcome)]) -> Result<f64> {
    let p = |phi: f64| -> Result<f64> {
        let (input, circuit, detectors) = build_protocol(spec, phi)?;
        oracle_herald_probability(&input, &circuit, &detectors, pattern)
    };
    fringe_from_three_points(p(0.0)?, p(FRAC_PI_2)?, p(PI)?)
}

/// First-order Richardson extrapolation to zero efficiency from values at
/// `η = h` and `η = h/10`: cancels the linear term exactly, leaving `O(h²)`.
fn richardson(v_coarse: f64, v_fine: f64) -> f64 {
    v_fine + (v_fine - v_coarse) / 9.0
}

// ---------------------------------------------------------------------------
// Verification registry
// ---------------------------------------------------------------------------

/// Outcome of checking one closed-form prediction against the oracle.
#[derive(Clone, Debug)]
pub struct OracleReport {
    /// Registry identifier of the prediction.
    pub formula: &'static str,
    /// What was compared, in one sentence.
    pub description: &'static str,
    /// Number of grid points checked.
    pub points: usize,
    /// Largest absolute deviation found.
    pub max_abs_deviation: f64,
    /// Description of the worst grid point.
    pub worst_point: String,
    /// Pass threshold for the deviation.
    pub tolerance: f64,
    /// `max_abs_deviation <= tolerance`.
    pub passed: bool,
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} | {} points, max deviation {:.3e} (tol {:.1e}) at {} — {}",
            self.formula,
            self.description,
            self.points,
            self.max_abs_deviation,
            self.tolerance,
            self.worst_point,
            if self.passed { "PASS" } else { "FAIL" }
        )
    }
}

/// Accumulates per-point deviations for one report.
struct Checks {
    entries: Vec<(String, f64)>,
}

impl Checks {
    fn new() -> Self {
        Checks { entries: Vec::new() }
    }

    fn value(&mut self, label: String, got: f64, want: f64) {
        let dev = (got - want).abs();
        self.entries.push((format!("{label}: got {got:.12}, want {want:.12}"), dev));
    }

    fn matrix(&mut self, label: String, got: &QubitDensity, want: &QubitDensity) {
        self.entries.push((label, got.max_abs_diff(want)));
    }

    fn finish(
        self,
        formula: &'static str,
        description: &'static str,
        tolerance: f64,
    ) -> OracleReport {
        let points = self.entries.len();
        let (worst_point, max_abs_deviation) = self
            .entries
            .into_iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or_else(|| ("no points".into(), 0.0));
        OracleReport {
            formula,
            description,
            points,
            max_abs_deviation,
            worst_point,
            tolerance,
            passed: max_abs_deviation <= tolerance,
        }
    }
}

fn check_analyzer_reference() -> Result<OracleReport> {
    let mut checks = Checks::new();
    for &eta in &[1.0, 0.7] {
        for &phi in &[0.0, 0.7, FRAC_PI_2, 2.1, PI] {
            let (state, circuit, detectors) = bell_analyzer_circuit(phi);
            let detectors: Vec<DetectorSpec> = detectors
                .into_iter()
                .map(|d| DetectorSpec { efficiency: eta, ..d })
                .collect();
            let input = Ensemble::from_pure(state);
            let got =
                oracle_herald_probability(&input, &circuit, &detectors, &[(0, Outcome::Click)])?;
            let want = eta * (phi / 2.0).cos().powi(2);
            checks.value(format!("eta={eta}, phi={phi}"), got, want);
        }
    }
    Ok(checks.finish(
        "analyzer-reference",
        "single-photon two-splitter interferometer rate η·cos²(φ/2)",
        1e-12,
    ))
}

fn check_characterization_rate() -> Result<OracleReport> {
    let mut checks = Checks::new();
    for &alpha_sq in &[0.2, 0.5, 0.769] {
        let alpha = f64::sqrt(alpha_sq);
        for &eta in &[1.0, 0.7, 0.35] {
            for &phi in &[0.0, 1.1, PI] {
                let spec = ProtocolSpec::characterization(alpha).with_uniform_eta(eta);
                let (input, circuit, detectors) = build_protocol(&spec, phi)?;
                let got = oracle_herald_probability(
                    &input,
                    &circuit,
                    &detectors,
                    &[(0, Outcome::Click)],
                )?;
                let want = probe_click_probability(alpha, eta, phi)?;
                checks.value(format!("alpha²={alpha_sq}, eta={eta}, phi={phi}"), got, want);
            }
        }
    }
    Ok(checks.finish(
        "characterization-rate",
        "characterization port rate (η·β²/2)(2 − β²η + 2α²cosφ)",
        1e-12,
    ))
}

fn check_characterization_visibility_limit() -> Result<OracleReport> {
    let mut checks = Checks::new();
    let fringe_at = |spec: &ProtocolSpec, eta: f64| -> Result<f64> {
        let spec = spec.clone().with_uniform_eta(eta);
        oracle_pattern_fringe(&spec, &[(0, Outcome::Click)])
    };
    for &alpha_sq in &[0.1, 0.5, 0.9] {
        let spec = ProtocolSpec::characterization(f64::sqrt(alpha_sq));
        let got = richardson(fringe_at(&spec, 1e-3)?, fringe_at(&spec, 1e-4)?);
        checks.value(format!("ideal source, alpha²={alpha_sq}"), got, alpha_sq);
    }
    // Impure, partially distinguishable source copies.
    let noise = NoiseParams { lambda: 0.98, x_first: 0.9055, x_second: 1.0 };
    let spec = ProtocolSpec::characterization(f64::sqrt(0.769)).with_noise(noise);
    let got = richardson(fringe_at(&spec, 1e-3)?, fringe_at(&spec, 1e-4)?);
    let source = SourceParams { lambda: 0.98, v_hom_alice: 0.9055, v_hom_bob: 1.0 };
    let want = probe_visibility(f64::sqrt(0.769), &source)?;
    checks.value("noisy source, alpha²=0.769".into(), got, want);
    Ok(checks.finish(
        "characterization-visibility-limit",
        "small-efficiency characterization visibility λ²·√V_HOM·α²",
        2e-6,
    ))
}

/// Detector indices and rails of a teleport pair: `(analyzer detector,
/// measurement detector, analyzer rail, measurement rail)`. The protocol's
/// detector order is rail 2, rail 4, rail 1, rail 3.
fn teleport_pair_layout(pair: TeleportPair) -> (usize, usize, u16, u16) {
    match pair {
        TeleportPair::Bob1Alice2 => (2, 0, 1, 2),
        TeleportPair::Bob1Alice4 => (2, 1, 1, 4),
        TeleportPair::Bob3Alice2 => (3, 0, 3, 2),
        TeleportPair::Bob3Alice4 => (3, 1, 3, 4),
    }
}

fn check_teleport_rate() -> Result<OracleReport> {
    let mut checks = Checks::new();
    for pair in TeleportPair::all() {
        let (bob_idx, alice_idx, bob_rail, alice_rail) = teleport_pair_layout(pair);
        for &alpha_sq in &[0.5, 0.769] {
            let alpha = f64::sqrt(alpha_sq);
            for &delta in &[0.0, 0.9] {
                for &(eta_b, eta_a) in &[(1.0, 1.0), (0.75, 0.6)] {
                    let spec = ProtocolSpec::teleportation(alpha)
                        .with_delta(delta)
                        .with_eta(bob_rail, eta_b)
                        .with_eta(alice_rail, eta_a);
                    let (input, circuit, detectors) = build_protocol(&spec, 0.0)?;
                    let got = oracle_herald_probability(
                        &input,
                        &circuit,
                        &detectors,
                        &[(bob_idx, Outcome::Click), (alice_idx, Outcome::Click)],
                    )?;
                    let want =
                        teleport_coincidence_probability(pair, alpha, delta, eta_b, eta_a)?;
                    checks.value(
                        format!(
                            "{pair:?}, alpha²={alpha_sq}, delta={delta}, eta=({eta_b},{eta_a})"
                        ),
                        got,
                        want,
                    );
                }
            }
        }
    }
    Ok(checks.finish(
        "teleport-rate",
        "teleportation two-fold coincidence rate (β²ηᵢηⱼ/32)(6 − ηᵢ − ηⱼ − (2−ηᵢ−ηⱼ)α² ± 4α²cosδ)",
        1e-12,
    ))
}

fn check_teleport_visibility() -> Result<OracleReport> {
    let mut checks = Checks::new();
    for pair in TeleportPair::all() {
        let (bob_idx, alice_idx, bob_rail, alice_rail) = teleport_pair_layout(pair);
        for &alpha_sq in &[0.3, 0.769] {
            let alpha = f64::sqrt(alpha_sq);
            for &(eta_b, eta_a) in &[(1.0, 1.0), (0.9, 0.5)] {
                let spec = ProtocolSpec::teleportation(alpha)
                    .with_eta(bob_rail, eta_b)
                    .with_eta(alice_rail, eta_a);
                let got = oracle_pattern_fringe(
                    &spec,
                    &[(bob_idx, Outcome::Click), (alice_idx, Outcome::Click)],
                )?;
                let want = teleport_pair_visibility(alpha, eta_b, eta_a)?;
                checks.value(
                    format!("{pair:?}, alpha²={alpha_sq}, eta=({eta_b},{eta_a})"),
                    got,
                    want,
                );
            }
        }
    }
    Ok(checks.finish(
        "teleport-visibility",
        "teleportation fringe visibility 4α²/(6 − ηᵢ − ηⱼ − (2−ηᵢ−ηⱼ)α²) at finite efficiency",
        1e-12,
    ))
}

fn check_teleport_visibility_limit() -> Result<OracleReport> {
    let mut checks = Checks::new();
    let pattern = [(2usize, Outcome::Click), (0usize, Outcome::Click)];
    let fringe_at = |spec: &ProtocolSpec, eta: f64| -> Result<f64> {
        let spec = spec.clone().with_uniform_eta(eta);
        oracle_pattern_fringe(&spec, &pattern)
    };

    let alpha = f64::sqrt(0.5);
    let spec = ProtocolSpec::teleportation(alpha);
    let got = richardson(fringe_at(&spec, 1e-3)?, fringe_at(&spec, 1e-4)?);
    checks.value("ideal source, v=0.5".into(), got, ideal_teleported_visibility(0.5)?);

    let noise = NoiseParams { lambda: 0.98, x_first: 0.9055, x_second: 0.8987 };
    let spec = ProtocolSpec::teleportation(alpha).with_noise(noise);
    let got = richardson(fringe_at(&spec, 1e-3)?, fringe_at(&spec, 1e-4)?);
    let source =
        SourceParams { lambda: 0.98, v_hom_alice: 0.9055, v_hom_bob: 0.8987 };
    let v_in = probe_visibility(alpha, &source)?;
    let want = teleported_visibility_model(v_in, &source)?;
    checks.value("noisy source, alpha²=0.5".into(), got, want);

    Ok(checks.finish(
        "teleport-visibility-limit",
        "small-efficiency teleportation visibility vs the source-imperfection model",
        1e-5,
    ))
}

fn check_teleport_output_ideal() -> Result<OracleReport> {
    let mut checks = Checks::new();
    let (alpha, delta) = (0.6f64, 0.7f64);
    let beta = (1.0 - alpha * alpha).sqrt();
    let spec = ProtocolSpec::teleportation(alpha)
        .with_delta(delta)
        .with_routing(Routing::Deterministic)
        .with_detector_kind(DetectorKind::PhotonNumberResolving);
    let (input, circuit, detectors) = build_measurement_stage(&spec)?;
    for (outcome, sign) in [(AliceOutcome::Rail2, 1.0), (AliceOutcome::Rail4, -1.0)] {
        let herald = alice_herald(spec.detector_kind, outcome);
        let (prob, rho) = oracle_condition(
            &input,
            &circuit,
            &detectors,
            &herald,
            ModeLabel::principal(1, 2),
        )?;
        let a1 = sign * beta * Complex64::new(0.0, delta).exp();
        let expected = QubitDensity::new([
            [
                Complex64::new(alpha * alpha, 0.0),
                Complex64::new(alpha, 0.0) * a1.conj(),
            ],
            [Complex64::new(alpha, 0.0) * a1, Complex64::new(beta * beta, 0.0)],
        ])?;
        checks.value(format!("{outcome:?} herald probability"), prob, 0.25);
        checks.matrix(format!("{outcome:?} output state"), &rho, &expected);
    }
    Ok(checks.finish(
        "teleport-output-ideal",
        "number-resolved deterministic teleportation reproduces the input qubit at rate 1/4",
        1e-12,
    ))
}

fn check_teleport_output_mixed() -> Result<OracleReport> {
    let mut checks = Checks::new();
    let alpha = 0.6f64;
    let alpha_sq = alpha * alpha;
    let gamma_sq = 1.0 - alpha_sq;
    let spec = ProtocolSpec::teleportation(alpha);
    let (input, circuit, detectors) = build_measurement_stage(&spec)?;
    let herald = alice_herald(spec.detector_kind, AliceOutcome::Rail2);
    let (_, rho) =
        oracle_condition(&input, &circuit, &detectors, &herald, ModeLabel::principal(1, 2))?;
    let norm = alpha_sq + 1.5 * gamma_sq;
    let off = alpha * gamma_sq.sqrt() / f64::sqrt(2.0);
    let expected = QubitDensity::new([
        [
            Complex64::new((alpha_sq + gamma_sq) / norm, 0.0),
            Complex64::new(off / norm, 0.0),
        ],
        [Complex64::new(off / norm, 0.0), Complex64::new(gamma_sq / (2.0 * norm), 0.0)],
    ])?;
    checks.matrix("threshold herald output state, alpha=0.6".into(), &rho, &expected);
    Ok(checks.finish(
        "teleport-output-mixed",
        "threshold-heralded teleportation yields the known partially mixed output state",
        1e-12,
    ))
}

/// Detector indices and rails of a swap pair (detector order is rail 1..4).
fn swap_pair_layout(pair: SwapPair) -> (usize, usize, u16, u16) {
    match pair {
        SwapPair::Pair12 => (0, 1, 1, 2),
        SwapPair::Pair13 => (0, 2, 1, 3),
        SwapPair::Pair42 => (3, 1, 4, 2),
        SwapPair::Pair43 => (3, 2, 4, 3),
    }
}

/// Configure a swapping run for the given closed-form parameters.
fn swap_spec(r1: f64, p: &SwapParams) -> ProtocolSpec {
    ProtocolSpec::swapping()
        .with_transmittance(1, 1.0 - r1)
        .with_transmittance(2, 1.0 - p.r2)
        .with_transmittance(3, 1.0 - p.r3)
        .with_transmittance(4, 1.0 - p.r4)
        .with_transmittance(5, 1.0 - p.r5)
        .with_noise(NoiseParams { lambda: 1.0, x_first: p.m, x_second: 1.0 })
}

fn check_swap_rate() -> Result<OracleReport> {
    let mut checks = Checks::new();
    let sets: [(f64, SwapParams); 2] = [
        (0.5, SwapParams::balanced(1.0)),
        (0.3, SwapParams { r2: 0.4, r3: 0.55, r4: 0.44, r5: 0.38, m: 0.92 }),
    ];
    for (r1, params) in &sets {
        for pair in SwapPair::all() {
            let (i_idx, j_idx, i_rail, j_rail) = swap_pair_layout(pair);
            for &xi in &[0.0, 0.8, PI] {
                let spec = swap_spec(*r1, params);
                let (input, circuit, detectors) = build_protocol(&spec, xi)?;
                let got = oracle_herald_probability(
                    &input,
                    &circuit,
                    &detectors,
                    &[(i_idx, Outcome::Click), (j_idx, Outcome::Click)],
                )?;
                let want = swap_coincidence_probability(pair, 1.0, *r1, params, xi)?;
                checks.value(format!("r1={r1}, {pair:?}, xi={xi}"), got, want);
            }
            // Detector inefficiency only scales the rate by ηᵢηⱼ.
            let (eta_i, eta_j) = (0.8, 0.6);
            let spec = swap_spec(*r1, params)
                .with_eta(i_rail, eta_i)
                .with_eta(j_rail, eta_j);
            let (input, circuit, detectors) = build_protocol(&spec, 0.8)?;
            let got = oracle_herald_probability(
                &input,
                &circuit,
                &detectors,
                &[(i_idx, Outcome::Click), (j_idx, Outcome::Click)],
            )?;
            let want =
                eta_i * eta_j * swap_coincidence_probability(pair, 1.0, *r1, params, 0.8)?;
            checks.value(format!("r1={r1}, {pair:?}, lossy"), got, want);
        }
    }
    Ok(checks.finish(
        "swap-rate",
        "swapping two-fold coincidence rate R₁T₁(A + B ± 2m√(…)·cosξ)",
        1e-12,
    ))
}

fn check_swap_visibility() -> Result<OracleReport> {
    let mut checks = Checks::new();
    let sets: [SwapParams; 2] = [
        SwapParams::balanced(0.9),
        SwapParams { r2: 0.4, r3: 0.55, r4: 0.44, r5: 0.38, m: 0.92 },
    ];
    for params in &sets {
        let want_all = swap_visibilities(params)?;
        for (k, pair) in SwapPair::all().into_iter().enumerate() {
            let (i_idx, j_idx, _, _) = swap_pair_layout(pair);
            let spec = swap_spec(0.5, params);
            let got = oracle_pattern_fringe(
                &spec,
                &[(i_idx, Outcome::Click), (j_idx, Outcome::Click)],
            )?;
            checks.value(format!("{pair:?}, m={}", params.m), got, want_all[k]);
        }
    }
    Ok(checks.finish(
        "swap-visibility",
        "swapping fringe visibilities w/(xy+z), w/(xyz+1), w/(x+yz), w/(y+xz)",
        1e-12,
    ))
}

/// Registry identifiers accepted by [`verify_formula`], in execution order.
pub fn formula_ids() -> &'static [&'static str] {
    &[
        "analyzer-reference",
        "characterization-rate",
        "characterization-visibility-limit",
        "teleport-rate",
        "teleport-visibility",
        "teleport-visibility-limit",
        "teleport-output-ideal",
        "teleport-output-mixed",
        "swap-rate",
        "swap-visibility",
    ]
}

/// Check one registered closed-form prediction against the explicit-loss
/// engine on its parameter grid.
pub fn verify_formula(id: &str) -> Result<OracleReport> {
    match id {
        "analyzer-reference" => check_analyzer_reference(),
        "characterization-rate" => check_characterization_rate(),
        "characterization-visibility-limit" => check_characterization_visibility_limit(),
        "teleport-rate" => check_teleport_rate(),
        "teleport-visibility" => check_teleport_visibility(),
        "teleport-visibility-limit" => check_teleport_visibility_limit(),
        "teleport-output-ideal" => check_teleport_output_ideal(),
        "teleport-output-mixed" => check_teleport_output_mixed(),
        "swap-rate" => check_swap_rate(),
        "swap-visibility" => check_swap_visibility(),
        other => Err(Error::config(format!(
            "unknown formula id {other:?}; known ids: {}",
            formula_ids().join(", ")
        ))),
    }
}

/// Run the whole registry. Individual failures are reported in the returned
/// list, not as errors; an `Err` signals the engine itself could not run.
pub fn verify_all() -> Result<Vec<OracleReport>> {
    formula_ids().iter().map(|id| verify_formula(id)).collect()
}

/// Plain-text table of verification reports.
pub fn report_table(reports: &[OracleReport]) -> String {
    let mut out = String::new();
    for report in reports {
        out.push_str(&report.to_string());
        out.push('\n');
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    out.push_str(&format!(
        "{} of {} formula checks passed\n",
        reports.len() - failed,
        reports.len()
    ));
    out
}
