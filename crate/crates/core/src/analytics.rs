//! Closed-form predictions, classical baselines, and parameter recovery.
//!
//! Every formula in this module is independently cross-checked against the
//! brute-force verification engine in [`crate::oracle`]; the simulator never
//! *uses* these expressions internally, so agreement between the two paths is
//! a real consistency test rather than a tautology.

use crate::error::{Error, Result};

/// Imperfection parameters of the qubit sources feeding an experiment.
///
/// `lambda` is the vacuum–photon coherence of each source (1 = pure).
/// `v_hom_alice` / `v_hom_bob` are the two-photon interference visibilities
/// at the measurement-side and analyzer-side splitters: the products of the
/// pairwise indistinguishability weights of the photons meeting there.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceParams {
    pub lambda: f64,
    pub v_hom_alice: f64,
    pub v_hom_bob: f64,
}

impl Default for SourceParams {
    fn default() -> Self {
        SourceParams { lambda: 1.0, v_hom_alice: 1.0, v_hom_bob: 1.0 }
    }
}

impl SourceParams {
    /// An ideal source (no impurity, full indistinguishability).
    pub fn ideal() -> Self {
        SourceParams::default()
    }

    /// Check that every parameter lies in `[0, 1]`.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda", self.lambda),
            ("v_hom_alice", self.v_hom_alice),
            ("v_hom_bob", self.v_hom_bob),
        ] {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(Error::domain(format!("source parameter {name}={v} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

fn check_unit_interval(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) || !v.is_finite() {
        return Err(Error::domain(format!("{name}={v} outside [0, 1]")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Characterization interferometer
// ---------------------------------------------------------------------------

/// Single-port click probability of the characterization interferometer for
/// two ideal copies of the qubit `α|0⟩ + √(1−α²)|1⟩` at detector efficiency
/// `eta` and analyzer phase `phi`:
///
/// `P(click) = (η·β²/2)·(2 − β²·η + 2α²·cos φ)` with `β² = 1 − α²`.
pub fn probe_click_probability(alpha: f64, eta: f64, phi: f64) -> Result<f64> {
    check_unit_interval("alpha", alpha)?;
    check_unit_interval("eta", eta)?;
    let beta_sq = 1.0 - alpha * alpha;
    Ok(eta * beta_sq / 2.0 * (2.0 - beta_sq * eta + 2.0 * alpha * alpha * phi.cos()))
}

/// Fringe visibility of the characterization interferometer at detector
/// efficiency `eta` (exact at every η): `V = 2α² / (2 − β²·η)`.
pub fn probe_visibility_at_eta(alpha: f64, eta: f64) -> Result<f64> {
    check_unit_interval("alpha", alpha)?;
    check_unit_interval("eta", eta)?;
    let alpha_sq = alpha * alpha;
    Ok(2.0 * alpha_sq / (2.0 - (1.0 - alpha_sq) * eta))
}

/// Small-efficiency limit of the characterization fringe visibility for an
/// imperfect source: `V = λ²·√V_HOM·α²`, where `V_HOM` is the two-photon
/// interference visibility of the two source copies
/// (`source.v_hom_alice` plays that role here).
pub fn probe_visibility(alpha: f64, source: &SourceParams) -> Result<f64> {
    check_unit_interval("alpha", alpha)?;
    source.validate()?;
    Ok(source.lambda * source.lambda * source.v_hom_alice.sqrt() * alpha * alpha)
}

// ---------------------------------------------------------------------------
// Teleportation
// ---------------------------------------------------------------------------

/// Coincidence pair between one analyzer detector (rails 1/3 at the late
/// analysis slot) and one measurement detector (rails 2/4 at the early slot).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TeleportPair {
    /// Analyzer rail 1 with measurement rail 2.
    Bob1Alice2,
    /// Analyzer rail 1 with measurement rail 4.
    Bob1Alice4,
    /// Analyzer rail 3 with measurement rail 2.
    Bob3Alice2,
    /// Analyzer rail 3 with measurement rail 4.
    Bob3Alice4,
}

impl TeleportPair {
    /// Sign of the `cos δ` fringe term for this pair.
    pub fn fringe_sign(self) -> f64 {
        match self {
            TeleportPair::Bob1Alice2 | TeleportPair::Bob3Alice4 => -1.0,
            TeleportPair::Bob1Alice4 | TeleportPair::Bob3Alice2 => 1.0,
        }
    }

    /// All four pairs.
    pub fn all() -> [TeleportPair; 4] {
        [
            TeleportPair::Bob1Alice2,
            TeleportPair::Bob1Alice4,
            TeleportPair::Bob3Alice2,
            TeleportPair::Bob3Alice4,
        ]
    }
}

/// Two-fold coincidence probability of a teleportation pair for ideal
/// sources, balanced splitters, input/probe vacuum amplitude `alpha`,
/// analyzer phase `delta`, and the two detectors' efficiencies:
///
/// `P = (β²·ηᵢ·ηⱼ/32)·(6 − ηᵢ − ηⱼ − (2 − ηᵢ − ηⱼ)·α² ± 4α²·cos δ)`.
pub fn teleport_coincidence_probability(
    pair: TeleportPair,
    alpha: f64,
    delta: f64,
    eta_i: f64,
    eta_j: f64,
) -> Result<f64> {
    check_unit_interval("alpha", alpha)?;
    check_unit_interval("eta_i", eta_i)?;
    check_unit_interval("eta_j", eta_j)?;
    let alpha_sq = alpha * alpha;
    let beta_sq = 1.0 - alpha_sq;
    let bracket = 6.0 - eta_i - eta_j - (2.0 - eta_i - eta_j) * alpha_sq
        + pair.fringe_sign() * 4.0 * alpha_sq * delta.cos();
    Ok(beta_sq * eta_i * eta_j / 32.0 * bracket)
}

/// Fringe visibility of a teleportation coincidence pair at the given
/// detector efficiencies (exact at every η):
/// `V = 4α² / (6 − ηᵢ − ηⱼ − (2 − ηᵢ − ηⱼ)·α²)`.
///
/// At unit efficiency this reduces to `α²`; in the small-efficiency limit it
/// becomes `2α²/(3 − α²)`.
pub fn teleport_pair_visibility(alpha: f64, eta_i: f64, eta_j: f64) -> Result<f64> {
    check_unit_interval("alpha", alpha)?;
    check_unit_interval("eta_i", eta_i)?;
    check_unit_interval("eta_j", eta_j)?;
    let alpha_sq = alpha * alpha;
    Ok(4.0 * alpha_sq / (6.0 - eta_i - eta_j - (2.0 - eta_i - eta_j) * alpha_sq))
}

/// Small-efficiency teleportation fringe visibility for an ideal source as a
/// function of the input-qubit visibility `v = α²`: `V_T = 2v/(3 − v)`.
pub fn ideal_teleported_visibility(v: f64) -> Result<f64> {
    check_unit_interval("v", v)?;
    Ok(2.0 * v / (3.0 - v))
}

/// Small-efficiency teleportation fringe visibility for an imperfect source,
/// as a function of the *measured* input-qubit visibility `v`:
///
/// `V_T = 2λ²·√(V_A·V_B)·v / (3λ²·√V_A − v)`
///
/// with `V_A = source.v_hom_alice`, `V_B = source.v_hom_bob`. Errors when the
/// denominator is not positive.
pub fn teleported_visibility_model(v: f64, source: &SourceParams) -> Result<f64> {
    check_unit_interval("v", v)?;
    source.validate()?;
    let lambda_sq = source.lambda * source.lambda;
    let denom = 3.0 * lambda_sq * source.v_hom_alice.sqrt() - v;
    if denom <= 0.0 {
        return Err(Error::domain(format!(
            "teleported-visibility denominator {denom} is not positive"
        )));
    }
    Ok(2.0 * lambda_sq * (source.v_hom_alice * source.v_hom_bob).sqrt() * v / denom)
}

/// Analyzer fringe visibility achievable by the best classical
/// measure-and-prepare strategy on a qubit of visibility `v`, when the
/// strategy's teleportation fidelity is `f ∈ [1/3, 2/3]`:
///
/// `V_c = 2v(1−v)·|2f−1| / (1 + f(1−2v))`.
pub fn classical_teleport_visibility(v: f64, f: f64) -> Result<f64> {
    check_unit_interval("v", v)?;
    if !(1.0 / 3.0 - 1e-12..=2.0 / 3.0 + 1e-12).contains(&f) || !f.is_finite() {
        return Err(Error::domain(format!("classical fidelity {f} outside [1/3, 2/3]")));
    }
    Ok(2.0 * v * (1.0 - v) * (2.0 * f - 1.0).abs() / (1.0 + f * (1.0 - 2.0 * v)))
}

/// Largest classically achievable analyzer visibility for a qubit of
/// visibility `v`: the maximum of [`classical_teleport_visibility`] over the
/// extremal fidelities 1/3 and 2/3.
pub fn classical_bound(v: f64) -> Result<f64> {
    let lo = classical_teleport_visibility(v, 1.0 / 3.0)?;
    let hi = classical_teleport_visibility(v, 2.0 / 3.0)?;
    Ok(lo.max(hi))
}

/// Average teleportation fidelity implied by an average analyzer visibility:
/// `F = (1 + V)/2`.
pub fn fidelity_from_visibility(v: f64) -> Result<f64> {
    check_unit_interval("v", v)?;
    Ok((1.0 + v) / 2.0)
}

// ---------------------------------------------------------------------------
// Entanglement swapping
// ---------------------------------------------------------------------------

/// Splitter reflectivities and interference visibility of the swapping
/// interferometer. `r1` is handled separately (it only scales rates), so the
/// four visibilities depend on `r2…r5` and the two-photon interference
/// visibility `m` alone.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwapParams {
    pub r2: f64,
    pub r3: f64,
    pub r4: f64,
    pub r5: f64,
    /// Two-photon interference visibility of the two swapped photons.
    pub m: f64,
}

impl SwapParams {
    /// Balanced splitters with interference visibility `m`.
    pub fn balanced(m: f64) -> Self {
        SwapParams { r2: 0.5, r3: 0.5, r4: 0.5, r5: 0.5, m }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("r2", self.r2), ("r3", self.r3), ("r4", self.r4), ("r5", self.r5)] {
            if !(v > 0.0 && v < 1.0) || !v.is_finite() {
                return Err(Error::domain(format!(
                    "reflectivity {name}={v} must lie strictly inside (0, 1)"
                )));
            }
        }
        check_unit_interval("m", self.m)
    }
}

/// The four swap coincidence pairs: early-group rail (1 or 4) × late-group
/// rail (2 or 3).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SwapPair {
    Pair12,
    Pair13,
    Pair42,
    Pair43,
}

impl SwapPair {
    /// Sign of the `cos ξ` fringe term for this pair.
    pub fn fringe_sign(self) -> f64 {
        match self {
            SwapPair::Pair12 | SwapPair::Pair43 => -1.0,
            SwapPair::Pair13 | SwapPair::Pair42 => 1.0,
        }
    }

    /// All four pairs in canonical order (12, 13, 42, 43).
    pub fn all() -> [SwapPair; 4] {
        [SwapPair::Pair12, SwapPair::Pair13, SwapPair::Pair42, SwapPair::Pair43]
    }

    /// Stable textual name, matching the swap protocol's herald names.
    pub fn label(self) -> &'static str {
        match self {
            SwapPair::Pair12 => "pair_1_2",
            SwapPair::Pair13 => "pair_1_3",
            SwapPair::Pair42 => "pair_4_2",
            SwapPair::Pair43 => "pair_4_3",
        }
    }
}

/// The reduced ratios `(x, y, z, w)` of a swap parametrization:
/// `x = T₂R₃/(R₂T₃)`, `y = T₄/R₄`, `z = T₅/R₅`, `w = 2m√(xyz)`.
pub fn swap_xyzw(p: &SwapParams) -> Result<(f64, f64, f64, f64)> {
    p.validate()?;
    let t = |r: f64| 1.0 - r;
    let x = t(p.r2) * p.r3 / (p.r2 * t(p.r3));
    let y = t(p.r4) / p.r4;
    let z = t(p.r5) / p.r5;
    let w = 2.0 * p.m * (x * y * z).sqrt();
    Ok((x, y, z, w))
}

/// Two-fold coincidence probability of one swap pair at phase `xi`.
///
/// `beta_sq` is an overall source-rate prefactor (1 for deterministic
/// single-photon inputs) and `r1` the reflectivity of the first splitter;
/// both only scale the rate. Detector efficiencies likewise multiply the rate
/// by `ηᵢηⱼ` without touching the fringe shape, so they are not parameters
/// here.
pub fn swap_coincidence_probability(
    pair: SwapPair,
    beta_sq: f64,
    r1: f64,
    p: &SwapParams,
    xi: f64,
) -> Result<f64> {
    p.validate()?;
    check_unit_interval("beta_sq", beta_sq)?;
    check_unit_interval("r1", r1)?;
    let t = |r: f64| 1.0 - r;
    let (r2, r3, r4, r5) = (p.r2, p.r3, p.r4, p.r5);
    let (a, b) = match pair {
        SwapPair::Pair12 => (r2 * t(r3) * r4 * t(r5), t(r2) * r3 * t(r4) * r5),
        SwapPair::Pair13 => (r2 * t(r3) * r4 * r5, t(r2) * r3 * t(r4) * t(r5)),
        SwapPair::Pair42 => (r2 * t(r3) * t(r4) * t(r5), t(r2) * r3 * r4 * r5),
        SwapPair::Pair43 => (r2 * t(r3) * t(r4) * r5, t(r2) * r3 * r4 * t(r5)),
    };
    let cross = 2.0
        * (r2 * t(r2) * r3 * t(r3) * r4 * t(r4) * r5 * t(r5)).sqrt()
        * p.m
        * pair.fringe_sign()
        * xi.cos();
    Ok(beta_sq * r1 * (1.0 - r1) * (a + b + cross))
}

/// The four swap fringe visibilities `[V12, V13, V42, V43]`:
///
/// `V12 = w/(xy + z)`, `V13 = w/(xyz + 1)`, `V42 = w/(x + yz)`,
/// `V43 = w/(y + xz)`.
pub fn swap_visibilities(p: &SwapParams) -> Result<[f64; 4]> {
    let (x, y, z, w) = swap_xyzw(p)?;
    Ok([w / (x * y + z), w / (x * y * z + 1.0), w / (x + y * z), w / (y + x * z)])
}

/// One branch of recovered swap parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwapBranch {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
    pub r4: f64,
    pub r5: f64,
}

/// Result of inverting four swap visibilities back to interferometer
/// parameters.
///
/// The forward map is exactly two-to-one: relabeling the output ports maps
/// `(x, y, z) ↦ (1/x, 1/y, 1/z)` while reproducing all four visibilities, so
/// the inverse returns a canonical branch (`z ≥ 1`) together with its
/// `mirror`. `v_hom` is branch-invariant.
#[derive(Clone, Copy, Debug)]
pub struct SwapInverseResult {
    /// The visibility ratios `t₁ = V12/V13`, `t₂ = V12/V42`, `t₃ = V12/V43`.
    pub t_ratios: [f64; 3],
    /// Canonical branch (z ≥ 1).
    pub branch: SwapBranch,
    /// The port-relabeled twin branch.
    pub mirror: SwapBranch,
    /// Recovered two-photon interference visibility `m = w/(2√(xyz))`.
    pub v_hom: f64,
    /// True when the branch quadratic collapsed (the visibility pattern sits
    /// on the balanced manifold, e.g. pairwise-equal inputs) and the fallback
    /// `x = y = z = 1` was reported instead of a unique recovery.
    pub degenerate: bool,
    /// Largest absolute mismatch when mapping the recovered parameters
    /// forward again.
    pub residual: f64,
}

fn mirror_of(x: f64, y: f64, z: f64, w: f64) -> SwapBranch {
    let (mx, my, mz) = (1.0 / x, 1.0 / y, 1.0 / z);
    let mw = w / (x * y * z);
    SwapBranch { x: mx, y: my, z: mz, w: mw, r4: 1.0 / (1.0 + my), r5: 1.0 / (1.0 + mz) }
}

/// Canonical splitter realization of recovered ratios: `R₂` is fixed at 1/2
/// (only the ratio `x` is observable) and `R₃ = x/(1+x)`.
pub fn swap_params_from_ratios(x: f64, y: f64, z: f64, m: f64) -> Result<SwapParams> {
    if x <= 0.0 || y <= 0.0 || z <= 0.0 {
        return Err(Error::domain("swap ratios must be positive"));
    }
    let params = SwapParams {
        r2: 0.5,
        r3: x / (1.0 + x),
        r4: 1.0 / (1.0 + y),
        r5: 1.0 / (1.0 + z),
        m,
    };
    params.validate()?;
    Ok(params)
}

/// Recover interferometer parameters from four measured swap visibilities
/// `[V12, V13, V42, V43]`.
///
/// Writing `t₁ = V12/V13`, `t₂ = V12/V42`, `t₃ = V12/V43`, the ratio `z`
/// satisfies the quadratic
///
/// `(t₂t₃ − t₁)·z² − (t₂² + t₃² − t₁² − 1)·z + (t₂t₃ − t₁) = 0`,
///
/// whose roots are reciprocal (`z` and `1/z` — the two port-relabeling
/// branches). Then `x = (t₂ − t₃z)/(t₁ − z)`, `y = (t₃ − t₂z)/(t₁ − z)`,
/// `w = V12(1 − z²)/(t₁ − z)`, and `m = w/(2√(xyz))`.
///
/// Errors with [`Error::InconsistentVisibilities`] when the discriminant is
/// negative or the recovered ratios are not positive — i.e. when no real
/// interferometer produces the given four numbers.
pub fn swap_inverse(vis: [f64; 4]) -> Result<SwapInverseResult> {
    for (i, v) in vis.iter().enumerate() {
        if !(*v > 0.0 && *v <= 1.0) || !v.is_finite() {
            return Err(Error::domain(format!(
                "visibility #{i} = {v} must lie in (0, 1]"
            )));
        }
    }
    let [v12, v13, v42, v43] = vis;
    let t1 = v12 / v13;
    let t2 = v12 / v42;
    let t3 = v12 / v43;
    let t_ratios = [t1, t2, t3];

    let a = t2 * t3 - t1;
    let b = t2 * t2 + t3 * t3 - t1 * t1 - 1.0;
    let scale = t1.abs().max(t2.abs()).max(t3.abs()).max(1.0);
    let degenerate_balanced = |residual: f64| SwapInverseResult {
        t_ratios,
        branch: SwapBranch { x: 1.0, y: 1.0, z: 1.0, w: 2.0 * v12, r4: 0.5, r5: 0.5 },
        mirror: SwapBranch { x: 1.0, y: 1.0, z: 1.0, w: 2.0 * v12, r4: 0.5, r5: 0.5 },
        v_hom: v12,
        degenerate: true,
        residual,
    };

    if a.abs() < 1e-12 * scale * scale {
        // Degenerate family: the quadratic collapses. Fall back to the
        // balanced point, reporting the forward mismatch honestly.
        let params = swap_params_from_ratios(1.0, 1.0, 1.0, v12.min(1.0))?;
        let forward = swap_visibilities(&params)?;
        let residual = forward
            .iter()
            .zip(&vis)
            .map(|(f, v)| (f - v).abs())
            .fold(0.0f64, f64::max);
        return Ok(degenerate_balanced(residual));
    }

    let mut disc = b * b - 4.0 * a * a;
    if disc < 0.0 {
        if disc > -1e-12 * (b * b + 4.0 * a * a) {
            disc = 0.0;
        } else {
            return Err(Error::InconsistentVisibilities(format!(
                "discriminant {disc:.6e} of the branch quadratic is negative for \
                 visibilities {vis:?}"
            )));
        }
    }
    let sqrt_disc = disc.sqrt();
    let z1 = (b + sqrt_disc) / (2.0 * a);
    let z2 = (b - sqrt_disc) / (2.0 * a);
    if z1 <= 0.0 && z2 <= 0.0 {
        return Err(Error::InconsistentVisibilities(format!(
            "both branch roots ({z1:.6}, {z2:.6}) are non-positive for visibilities {vis:?}"
        )));
    }
    // Roots are reciprocal; take the canonical one with z ≥ 1.
    let z = z1.max(z2);

    if (t1 - z).abs() < 1e-12 * scale {
        let params = swap_params_from_ratios(1.0, 1.0, 1.0, v12.min(1.0))?;
        let forward = swap_visibilities(&params)?;
        let residual = forward
            .iter()
            .zip(&vis)
            .map(|(f, v)| (f - v).abs())
            .fold(0.0f64, f64::max);
        return Ok(degenerate_balanced(residual));
    }

    let x = (t2 - t3 * z) / (t1 - z);
    let y = (t3 - t2 * z) / (t1 - z);
    let w = v12 * (1.0 - z * z) / (t1 - z);
    if x <= 0.0 || y <= 0.0 || w <= 0.0 {
        return Err(Error::InconsistentVisibilities(format!(
            "recovered ratios (x={x:.6}, y={y:.6}, w={w:.6}) are outside the physical \
             domain for visibilities {vis:?}"
        )));
    }
    let v_hom = w / (2.0 * (x * y * z).sqrt());

    let branch =
        SwapBranch { x, y, z, w, r4: 1.0 / (1.0 + y), r5: 1.0 / (1.0 + z) };
    let mirror = mirror_of(x, y, z, w);

    // Forward residual with the canonical realization (clamp m into [0,1]
    // just for the residual computation; v_hom itself is reported raw).
    let residual = match swap_params_from_ratios(x, y, z, v_hom.clamp(0.0, 1.0)) {
        Ok(params) => {
            let forward = swap_visibilities(&params)?;
            forward
                .iter()
                .zip(&vis)
                .map(|(f, v)| (f - v).abs())
                .fold(0.0f64, f64::max)
        }
        Err(_) => f64::INFINITY,
    };

    Ok(SwapInverseResult { t_ratios, branch, mirror, v_hom, degenerate: false, residual })
}

/// One admissible assignment found by [`swap_assignment_search`].
#[derive(Clone, Debug)]
pub struct SwapAssignment {
    /// `perm[k]` is the index into the measured array used for role `k`
    /// (roles ordered `V12, V13, V42, V43`).
    pub perm: [usize; 4],
    /// The inversion result for this assignment.
    pub result: SwapInverseResult,
}

/// Try all 24 assignments of four measured visibilities to the roles
/// `(V12, V13, V42, V43)` and return those whose inversion succeeds with
/// physical parameters (`x, y, z, w > 0` and `m ≤ 1 + 1e-9`).
///
/// Degenerate balanced fallbacks are excluded: they are flagged
/// approximations rather than exact recoveries, so listing them as
/// admissible assignments would overstate what the data supports.
pub fn swap_assignment_search(measured: [f64; 4]) -> Vec<SwapAssignment> {
    let mut found = Vec::new();
    let mut perm = [0usize, 1, 2, 3];
    permute(&mut perm, 0, &mut |p| {
        let assigned = [measured[p[0]], measured[p[1]], measured[p[2]], measured[p[3]]];
        if let Ok(result) = swap_inverse(assigned) {
            if !result.degenerate && result.v_hom <= 1.0 + 1e-9 {
                found.push(SwapAssignment { perm: *p, result });
            }
        }
    });
    found
}

fn permute(items: &mut [usize; 4], k: usize, visit: &mut impl FnMut(&[usize; 4])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

// ---------------------------------------------------------------------------
// Purity fit
// ---------------------------------------------------------------------------

/// Recover the source coherence `λ` from a characterization scan.
///
/// `points` are `(relative pump amplitude s, measured fringe visibility V)`
/// pairs; the model is linear in `s` with `V(s=0) = λ²·√v_hom`, so a linear
/// least-squares intercept gives `λ = √(intercept/√v_hom)`.
///
/// Errors when fewer than two distinct abscissas are supplied or the fitted
/// intercept is negative.
pub fn estimate_purity_from_scan(points: &[(f64, f64)], v_hom: f64) -> Result<f64> {
    if !(v_hom > 0.0 && v_hom <= 1.0) || !v_hom.is_finite() {
        return Err(Error::domain(format!("v_hom={v_hom} outside (0, 1]")));
    }
    if points.len() < 2 {
        return Err(Error::Fit("at least two scan points are required".into()));
    }
    let n = points.len() as f64;
    let sum_s: f64 = points.iter().map(|(s, _)| s).sum();
    let sum_v: f64 = points.iter().map(|(_, v)| v).sum();
    let sum_ss: f64 = points.iter().map(|(s, _)| s * s).sum();
    let sum_sv: f64 = points.iter().map(|(s, v)| s * v).sum();
    let det = n * sum_ss - sum_s * sum_s;
    if det.abs() < 1e-12 * (1.0 + sum_ss) {
        return Err(Error::Fit("scan points do not span distinct abscissas".into()));
    }
    let slope = (n * sum_sv - sum_s * sum_v) / det;
    let intercept = (sum_v - slope * sum_s) / n;
    if intercept < 0.0 {
        return Err(Error::Fit(format!("fitted intercept {intercept} is negative")));
    }
    Ok((intercept / v_hom.sqrt()).sqrt())
}
