//! Property-based invariants of the simulator: unitarity, conservation laws,
//! normalization, interference scaling, inversion round trips, and agreement
//! between the thinning-based fast path and the explicit-loss oracle.

use num_complex::Complex64;
use proptest::prelude::*;
use singlerail::detection::{outcome_distribution, DetectorSpec, Outcome};
use singlerail::fock::{run_circuit, Circuit, Element, Ensemble, FockBasisState, ModeLabel, PureState};
use singlerail::montecarlo::{minmax_visibility, variance_visibility};
use singlerail::oracle::oracle_distribution;
use singlerail::protocols::{
    default_phase_grid, fringe_scan, protocol_heralds, scan_herald, NoiseParams, ProtocolSpec,
};
use singlerail::analytics::{swap_inverse, swap_visibilities, swap_xyzw, SwapParams};
use singlerail::{build_protocol, DetectorKind};
use std::f64::consts::{PI, TAU};

// ---------------------------------------------------------------------------
// Strategies
// ---------------------------------------------------------------------------

fn arb_mode() -> impl Strategy<Value = ModeLabel> {
    (1u16..=4, 0i32..=3, 0u8..=2).prop_map(|(s, t, i)| ModeLabel::new(s, t, i))
}

fn arb_basis() -> impl Strategy<Value = FockBasisState> {
    proptest::collection::vec((arb_mode(), 1u8..=2), 1..=3)
        .prop_filter_map("within photon budget", |pairs| {
            FockBasisState::from_occupations(pairs).ok()
        })
}

fn arb_pure() -> impl Strategy<Value = PureState> {
    proptest::collection::vec((arb_basis(), -1.0f64..1.0, -1.0f64..1.0), 1..=4)
        .prop_filter_map("normalizable", |terms| {
            let state = PureState::from_terms(
                terms.into_iter().map(|(b, re, im)| (b, Complex64::new(re, im))),
            )
            .ok()?;
            state.normalized().ok()
        })
}

fn arb_element() -> impl Strategy<Value = Element> {
    prop_oneof![
        (1u16..=4, 1u16..=4, 0.0f64..=1.0, prop_oneof![Just(1i8), Just(-1i8)]).prop_filter_map(
            "distinct rails",
            |(a, b, t, s)| {
                (a != b).then_some(Element::BeamSplitter {
                    mode_a: a,
                    mode_b: b,
                    transmittance: t,
                    sign: s,
                })
            }
        ),
        (1u16..=4, 0.0f64..TAU).prop_map(|(m, p)| Element::PhaseShift { mode: m, phase: p }),
        (1u16..=4, 0i32..=1).prop_map(|(m, s)| Element::Delay { mode: m, shift: s }),
    ]
}

fn arb_circuit() -> impl Strategy<Value = Circuit> {
    proptest::collection::vec(arb_element(), 1..=5).prop_map(Circuit::from_elements)
}

fn arb_detectors() -> impl Strategy<Value = Vec<DetectorSpec>> {
    proptest::sample::subsequence(
        vec![(1u16, 0i32), (2, 0), (3, 0), (4, 0), (1, 1), (2, 1)],
        1..=4,
    )
    .prop_flat_map(|slots| {
        let n = slots.len();
        (
            Just(slots),
            proptest::collection::vec((0.0f64..=1.0, any::<bool>()), n),
        )
    })
    .prop_map(|(slots, cfg)| {
        slots
            .into_iter()
            .zip(cfg)
            .map(|((rail, bin), (eta, pnr))| {
                if pnr {
                    DetectorSpec::pnr(rail, bin, eta)
                } else {
                    DetectorSpec::threshold(rail, bin, eta)
                }
            })
            .collect()
    })
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

// ---------------------------------------------------------------------------
// Circuit algebra
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn circuits_preserve_norm(state in arb_pure(), circuit in arb_circuit()) {
        let out = run_circuit(&state, &circuit).unwrap();
        prop_assert!((out.norm_sq() - 1.0).abs() < 1e-9, "norm {}", out.norm_sq());
    }

    #[test]
    fn circuits_preserve_photon_number(basis in arb_basis(), circuit in arb_circuit()) {
        let total = basis.total_photons();
        let state = PureState::from_terms([(basis, Complex64::new(1.0, 0.0))]).unwrap();
        let out = run_circuit(&state, &circuit).unwrap();
        for (b, _) in out.terms() {
            prop_assert_eq!(b.total_photons(), total);
        }
    }

    #[test]
    fn serialization_round_trips(state in arb_pure()) {
        let text = state.to_canonical_text();
        let back = PureState::from_canonical_text(&text).unwrap();
        prop_assert_eq!(back.term_count(), state.term_count());
        prop_assert_eq!(state.distance(&back), 0.0);
    }
}

// ---------------------------------------------------------------------------
// Detection
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn outcome_distributions_normalize(state in arb_pure(), detectors in arb_detectors()) {
        let dist = outcome_distribution(&state, &detectors).unwrap();
        prop_assert!((dist.total() - 1.0).abs() < 1e-9, "total {}", dist.total());
    }

    #[test]
    fn mixtures_detect_linearly(
        a in arb_pure(),
        b in arb_pure(),
        w in 0.05f64..0.95,
        detectors in arb_detectors(),
    ) {
        let mixture = Ensemble::new(vec![(w, a.clone()), (1.0 - w, b.clone())]).unwrap();
        let dm = outcome_distribution(&mixture, &detectors).unwrap();
        let da = outcome_distribution(&a, &detectors).unwrap();
        let db = outcome_distribution(&b, &detectors).unwrap();
        for (pattern, p) in dm.iter() {
            let expected = w * da.probability(pattern) + (1.0 - w) * db.probability(pattern);
            prop_assert!((p - expected).abs() < 1e-12, "{pattern}: {p} vs {expected}");
        }
    }

    #[test]
    fn hom_coincidences_track_distinguishability(x in 0.0f64..=1.0) {
        // One photon on each input rail of a balanced splitter; their overlap
        // is √x. The coincidence rate interpolates the dip: (1 − x)/2.
        let same = FockBasisState::from_occupations([
            (ModeLabel::principal(1, 0), 1),
            (ModeLabel::principal(2, 0), 1),
        ])
        .unwrap();
        let other = FockBasisState::from_occupations([
            (ModeLabel::principal(1, 0), 1),
            (ModeLabel::new(2, 0, 1), 1),
        ])
        .unwrap();
        let state = PureState::from_terms([
            (same, Complex64::new(x.sqrt(), 0.0)),
            (other, Complex64::new((1.0 - x).sqrt(), 0.0)),
        ])
        .unwrap();
        let circuit = Circuit::from_elements(vec![Element::BeamSplitter {
            mode_a: 1,
            mode_b: 2,
            transmittance: 0.5,
            sign: 1,
        }]);
        let out = run_circuit(&state, &circuit).unwrap();
        let detectors =
            vec![DetectorSpec::threshold(1, 0, 1.0), DetectorSpec::threshold(2, 0, 1.0)];
        let dist = outcome_distribution(&out, &detectors).unwrap();
        let coincidence = dist.probability(&singlerail::DetectionPattern(vec![
            Outcome::Click,
            Outcome::Click,
        ]));
        prop_assert!(
            (coincidence - (1.0 - x) / 2.0).abs() < 1e-12,
            "x={x}: coincidence {coincidence}"
        );
    }

    #[test]
    fn estimators_stay_in_range(counts in proptest::collection::vec(0u32..200, 3..40)) {
        let counts: Vec<f64> = counts.into_iter().map(f64::from).collect();
        let mm = minmax_visibility(&counts).unwrap();
        prop_assert!((0.0..=1.0).contains(&mm));
        if counts.iter().sum::<f64>() > 0.0 {
            let est = variance_visibility(&counts).unwrap();
            prop_assert!(est.visibility.is_finite() && est.visibility >= 0.0);
            if est.clamped {
                prop_assert_eq!(est.visibility, 0.0);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Swap parameter inversion
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn swap_inversion_round_trips(
        r2 in 0.15f64..0.85,
        r3 in 0.15f64..0.85,
        r4 in 0.15f64..0.85,
        r5 in 0.15f64..0.85,
        m in 0.3f64..1.0,
    ) {
        let params = SwapParams { r2, r3, r4, r5, m };
        let (x, y, z, w) = swap_xyzw(&params).unwrap();
        // The inversion is singular where x ≈ 1 or y ≈ 1 (the four
        // visibilities become pairwise equal and no longer identify the
        // parameters); stay clear of that manifold.
        prop_assume!((x - 1.0).abs() > 0.05 && (y - 1.0).abs() > 0.05);

        let vis = swap_visibilities(&params).unwrap();
        let inv = swap_inverse(vis).unwrap();
        prop_assert!(!inv.degenerate);
        prop_assert!(rel_close(inv.v_hom, m, 1e-6), "m {} vs {}", inv.v_hom, m);
        prop_assert!(inv.residual < 1e-6, "residual {}", inv.residual);

        let matches = |bx: f64, by: f64, bz: f64, bw: f64| {
            rel_close(bx, x, 1e-6)
                && rel_close(by, y, 1e-6)
                && rel_close(bz, z, 1e-6)
                && rel_close(bw, w, 1e-6)
        };
        let b = &inv.branch;
        let mb = &inv.mirror;
        prop_assert!(
            matches(b.x, b.y, b.z, b.w) || matches(mb.x, mb.y, mb.z, mb.w),
            "neither branch matches: params ({x},{y},{z},{w}), got {inv:?}"
        );
    }
}

// ---------------------------------------------------------------------------
// Protocol-level invariants
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn swap_pair_fringes_are_pi_opposed(
        m in 0.5f64..=1.0,
        r4 in 0.3f64..0.7,
        r5 in 0.3f64..0.7,
    ) {
        let spec = ProtocolSpec::swapping()
            .with_transmittance(4, 1.0 - r4)
            .with_transmittance(5, 1.0 - r5)
            .with_noise(NoiseParams { lambda: 1.0, x_first: m, x_second: 1.0 });
        let scan = fringe_scan(&spec, &default_phase_grid(16)).unwrap();
        let a = scan.herald("pair_1_2").unwrap();
        let b = scan.herald("pair_1_3").unwrap();
        let diff = (a.phase_of_max - b.phase_of_max).rem_euclid(TAU);
        prop_assert!(
            (diff - PI).abs() < 1e-6,
            "phase difference {diff} is not π (visibilities {} / {})",
            a.visibility,
            b.visibility
        );
    }

    #[test]
    fn limit_visibility_ignores_detector_scales(
        s1 in 0.1f64..0.99,
        s2 in 0.1f64..0.99,
        s3 in 0.1f64..0.99,
        s4 in 0.1f64..0.99,
    ) {
        // In the small-efficiency limit the heralded visibility cannot depend
        // on the detectors' relative efficiency scales: they multiply every
        // point of the fringe equally.
        let grid = default_phase_grid(8);
        let base = ProtocolSpec::teleportation(0.6).with_loss_limit(true);
        let herald = protocol_heralds(&base)
            .into_iter()
            .find(|h| h.name == "alice_2")
            .unwrap();
        let reference = scan_herald(&base.clone().with_uniform_eta(0.5), &grid, &herald)
            .unwrap()
            .visibility;
        let scaled = base
            .with_eta(1, s1)
            .with_eta(2, s2)
            .with_eta(3, s3)
            .with_eta(4, s4);
        let v = scan_herald(&scaled, &grid, &herald).unwrap().visibility;
        prop_assert!((v - reference).abs() < 1e-9, "{v} vs {reference}");
    }
}

// ---------------------------------------------------------------------------
// Fast path vs explicit-loss oracle on random configurations
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
enum AnySpec {
    Mzi { alpha_sq: f64 },
    Teleport { alpha_sq: f64, delta: f64, pnr: bool, lambda: f64, x: f64 },
    Swap { t4: f64, t5: f64, x: f64 },
}

impl AnySpec {
    fn build(&self) -> ProtocolSpec {
        match *self {
            AnySpec::Mzi { alpha_sq } => ProtocolSpec::characterization(alpha_sq.sqrt()),
            AnySpec::Teleport { alpha_sq, delta, pnr, lambda, x } => {
                let kind = if pnr {
                    DetectorKind::PhotonNumberResolving
                } else {
                    DetectorKind::Threshold
                };
                ProtocolSpec::teleportation(alpha_sq.sqrt())
                    .with_delta(delta)
                    .with_detector_kind(kind)
                    .with_noise(NoiseParams { lambda, x_first: x, x_second: 1.0 })
            }
            AnySpec::Swap { t4, t5, x } => ProtocolSpec::swapping()
                .with_transmittance(4, t4)
                .with_transmittance(5, t5)
                .with_noise(NoiseParams { lambda: 1.0, x_first: x, x_second: 1.0 }),
        }
    }
}

fn arb_spec() -> impl Strategy<Value = AnySpec> {
    prop_oneof![
        (0.2f64..0.9).prop_map(|alpha_sq| AnySpec::Mzi { alpha_sq }),
        (0.2f64..0.9, 0.0f64..TAU, any::<bool>(), 0.8f64..=1.0, 0.7f64..=1.0).prop_map(
            |(alpha_sq, delta, pnr, lambda, x)| AnySpec::Teleport {
                alpha_sq,
                delta,
                pnr,
                lambda,
                x
            }
        ),
        (0.3f64..0.7, 0.3f64..0.7, 0.7f64..=1.0)
            .prop_map(|(t4, t5, x)| AnySpec::Swap { t4, t5, x }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(25))]

    #[test]
    fn oracle_agrees_with_fast_path(
        any_spec in arb_spec(),
        etas in proptest::collection::vec(0.3f64..=1.0, 4),
        phase in 0.0f64..TAU,
    ) {
        let mut spec = any_spec.build();
        for (rail, &eta) in (1u16..=4).zip(&etas) {
            spec = spec.with_eta(rail, eta);
        }
        let (input, circuit, detectors) = build_protocol(&spec, phase).unwrap();
        let state = circuit.apply_ensemble(&input).unwrap();
        let fast = outcome_distribution(&state, &detectors).unwrap();
        let slow = oracle_distribution(&input, &circuit, &detectors).unwrap();
        let diff = fast.max_abs_diff(&slow);
        prop_assert!(diff < 1e-12, "max deviation {diff} for {any_spec:?}");
    }
}
