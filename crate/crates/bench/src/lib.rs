//! Shared fixtures for the pipeline benchmarks: representative states,
//! circuits, detector banks and protocol configurations sized like the
//! workloads the simulator sees in practice.

use singlerail::detection::DetectorSpec;
use singlerail::fock::{Circuit, Complex64, Element, FockBasisState, ModeLabel, PureState};
use singlerail::protocols::{NoiseParams, ProtocolSpec};
use singlerail::{swap_visibilities, SwapParams};

/// A normalized three-term superposition holding two photons on four rails.
pub fn two_photon_state() -> PureState {
    let m = |s: u16| ModeLabel::principal(s, 0);
    let term = |occs: &[(u16, u8)], re: f64| {
        let basis = FockBasisState::from_occupations(
            occs.iter().map(|&(s, n)| (m(s), n)),
        )
        .expect("valid occupations");
        (basis, Complex64::new(re, 0.15))
    };
    PureState::from_terms([
        term(&[(1, 1), (3, 1)], 0.6),
        term(&[(2, 2)], -0.4),
        term(&[(2, 1), (4, 1)], 0.3),
    ])
    .expect("valid state")
    .normalized()
    .expect("nonzero state")
}

/// A five-element splitter mesh mixing all four rails, with a phase and a
/// time-bin delay thrown in so every element kind is exercised.
pub fn splitter_mesh() -> Circuit {
    Circuit::from_elements(vec![
        Element::BeamSplitter { mode_a: 1, mode_b: 2, transmittance: 0.5, sign: 1 },
        Element::BeamSplitter { mode_a: 3, mode_b: 4, transmittance: 0.35, sign: -1 },
        Element::PhaseShift { mode: 2, phase: 0.7 },
        Element::BeamSplitter { mode_a: 2, mode_b: 3, transmittance: 0.62, sign: 1 },
        Element::Delay { mode: 4, shift: 1 },
    ])
}

/// Four detectors over the mesh outputs: three lossy threshold units and one
/// photon-number-resolving unit.
pub fn detector_bank() -> Vec<DetectorSpec> {
    vec![
        DetectorSpec::threshold(1, 0, 0.8),
        DetectorSpec::threshold(2, 0, 0.65),
        DetectorSpec::threshold(3, 0, 0.9),
        DetectorSpec::pnr(4, 1, 0.75),
    ]
}

/// Teleportation at `α² = 0.5` with realistic per-detector efficiencies,
/// evaluated on the exact numeric path.
pub fn teleport_spec_numeric() -> ProtocolSpec {
    ProtocolSpec::teleportation(0.5f64.sqrt())
        .with_uniform_eta(0.8)
        .with_noise(NoiseParams { lambda: 0.98, x_first: 0.9055, x_second: 0.8987 })
}

/// The same teleportation instance evaluated in the small-efficiency limit,
/// where detector scales factor out of the conditional fringe.
pub fn teleport_spec_limit() -> ProtocolSpec {
    teleport_spec_numeric().with_loss_limit(true)
}

/// Splitter/visibility parameters for an entanglement-swapping network with
/// unbalanced couplers, plus the four fringe visibilities they produce.
pub fn swap_instance() -> (SwapParams, [f64; 4]) {
    let params = SwapParams { r2: 0.4, r3: 0.55, r4: 0.44, r5: 0.38, m: 0.92 };
    let vis = swap_visibilities(&params).expect("physical parameters");
    (params, vis)
}
