//! # singlerail
//!
//! Exact simulator and analytics toolkit for single-rail (vacuum–one-photon)
//! optical quantum protocols: qubit characterization interferometry,
//! heralded teleportation, and entanglement swapping on time-bin circuits.
//!
//! The crate is organized in layers:
//!
//! * [`fock`] — sparse exact Fock-space states and passive linear circuits;
//! * [`detection`] — lossy threshold / photon-number-resolving detector
//!   models, joint outcome distributions, heralded conditioning to 2×2
//!   density matrices, and an exact small-efficiency polynomial path;
//! * [`protocols`] — builders for the three experiments and fringe scanning;
//! * [`analytics`] — closed-form predictions, classical baselines, and
//!   parameter recovery (purity fits, swap beam-splitter inversion);
//! * [`montecarlo`] — Poisson count-trace synthesis and fringe-visibility
//!   estimators with a bias benchmark;
//! * [`oracle`] — an independent brute-force verification engine that models
//!   loss with explicit beam splitters and checks the closed forms.
//!
//! Commonly used types are re-exported at the crate root.

pub mod analytics;
pub mod detection;
pub mod error;
pub mod fock;
pub mod montecarlo;
pub mod oracle;
pub mod protocols;
pub mod textio;

pub use analytics::{
    classical_bound, classical_teleport_visibility, estimate_purity_from_scan,
    fidelity_from_visibility, ideal_teleported_visibility, probe_click_probability,
    probe_visibility, swap_assignment_search, swap_inverse, swap_visibilities,
    teleported_visibility_model, SourceParams, SwapInverseResult, SwapPair, SwapParams,
    TeleportPair,
};
pub use detection::{
    condition, heralding_probability, outcome_distribution, DetectionPattern, DetectorKind,
    DetectorSpec, EtaPoly, Outcome, OutcomeDistribution, QubitDensity, StateRef,
};
pub use error::{Error, Result};
pub use fock::{
    apply_element, apply_purity, make_distinguishable_qubit, make_qubit_state, run_circuit,
    run_circuit_ensemble, Circuit, Element, Ensemble, FockBasisState, ModeLabel, PureState,
    DEFAULT_PRUNE_TOL, MAX_TOTAL_PHOTONS,
};
pub use montecarlo::{
    estimator_benchmark, generate_trace, minmax_visibility, variance_visibility, BenchmarkParams,
    PhaseProcess, TraceParams, VarianceEstimate,
};
pub use oracle::{
    oracle_condition, oracle_distribution, oracle_herald_probability, report_table,
    verify_all, verify_formula, OracleReport,
};
pub use protocols::{
    build_protocol, conditioning_contrast, fringe_scan, AliceOutcome, FringeScanResult, HeraldDef,
    HeraldFringe, NoiseParams, ProtocolKind, ProtocolSpec, Routing,
};
