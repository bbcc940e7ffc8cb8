//! Poisson count-trace synthesis and fringe-visibility estimators.
//!
//! A "trace" is a sequence of photon counts recorded while the analyzer
//! phase varies, one Poisson-distributed count per time bin with intensity
//! `n̄·(1 + V·cos φ)/2`. Two estimators recover `V` from a trace:
//!
//! * **min–max** — `(max − min)/(max + min)` of the raw counts. Simple but
//!   biased upward by shot noise: the extremes grow with the number of bins.
//! * **variance** — uses the second moment with the Poisson shot-noise term
//!   subtracted, `V̂ = √(2(m₂ − m² − m)/m²)`. Unbiased for uniformly
//!   sampled phases, at the cost of a small-signal clamp at zero.
//!
//! [`estimator_benchmark`] quantifies the bias of both across a grid of mean
//! intensities, with deterministic per-trial seeding that is independent of
//! the number of worker threads.

use crate::error::{Error, Result};
use crate::textio::sig17;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use std::f64::consts::TAU;

/// How the analyzer phase evolves from bin to bin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PhaseProcess {
    /// Brownian drift wrapped to `[0, 2π)`: a fresh uniform start, then
    /// Gaussian steps of the given standard deviation (radians).
    WrappedRandomWalk { step_sigma: f64 },
    /// Independent uniform phase in every bin.
    UniformIid,
}

impl PhaseProcess {
    fn validate(&self) -> Result<()> {
        if let PhaseProcess::WrappedRandomWalk { step_sigma } = self {
            if !step_sigma.is_finite() || *step_sigma < 0.0 {
                return Err(Error::domain(format!(
                    "random-walk step sigma {step_sigma} must be a finite non-negative number"
                )));
            }
        }
        Ok(())
    }
}

impl Default for PhaseProcess {
    fn default() -> Self {
        PhaseProcess::WrappedRandomWalk { step_sigma: 0.05 }
    }
}

/// Parameters of a synthetic count trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceParams {
    /// Peak-to-trough averaged intensity scale: the per-bin mean count is
    /// `n_mean·(1 + v_true·cos φ)/2`.
    pub n_mean: f64,
    /// True fringe visibility of the underlying intensity.
    pub v_true: f64,
    /// Number of time bins.
    pub bins: usize,
    /// Phase evolution model.
    pub phase_process: PhaseProcess,
    /// RNG seed; equal seeds give byte-identical traces.
    pub seed: u64,
}

impl TraceParams {
    fn validate(&self) -> Result<()> {
        if !(self.n_mean > 0.0) || !self.n_mean.is_finite() {
            return Err(Error::domain(format!(
                "n_mean={} must be a positive finite number",
                self.n_mean
            )));
        }
        if !(0.0..=1.0).contains(&self.v_true) || !self.v_true.is_finite() {
            return Err(Error::domain(format!("v_true={} outside [0, 1]", self.v_true)));
        }
        if self.bins < 3 {
            return Err(Error::domain(format!("bins={} must be at least 3", self.bins)));
        }
        self.phase_process.validate()
    }
}

/// Generate a Poisson count trace. Deterministic in `params.seed`.
pub fn generate_trace(params: &TraceParams) -> Result<Vec<u64>> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut counts = Vec::with_capacity(params.bins);
    let mut phase = rng.gen_range(0.0..TAU);
    let step = match params.phase_process {
        PhaseProcess::WrappedRandomWalk { step_sigma } if step_sigma > 0.0 => {
            Some(Normal::new(0.0, step_sigma).map_err(|e| Error::domain(e.to_string()))?)
        }
        _ => None,
    };
    for bin in 0..params.bins {
        match params.phase_process {
            PhaseProcess::WrappedRandomWalk { .. } => {
                if bin > 0 {
                    if let Some(n) = &step {
                        phase = (phase + n.sample(&mut rng)).rem_euclid(TAU);
                    }
                }
            }
            PhaseProcess::UniformIid => {
                if bin > 0 {
                    phase = rng.gen_range(0.0..TAU);
                }
            }
        }
        let intensity = params.n_mean * (1.0 + params.v_true * phase.cos()) / 2.0;
        let count = if intensity > f64::MIN_POSITIVE {
            let poisson =
                Poisson::new(intensity).map_err(|e| Error::domain(e.to_string()))?;
            poisson.sample(&mut rng) as u64
        } else {
            0
        };
        counts.push(count);
    }
    Ok(counts)
}

/// Noise-free intensity samples on an evenly spaced phase grid
/// `φ_t = 2π(t + ½)/bins` — the idealized trace the estimators should map
/// back to `v_true` (up to the shot-noise correction of the variance
/// estimator; see [`noiseless_variance_prediction`]).
pub fn synthetic_noiseless_trace(n_mean: f64, v_true: f64, bins: usize) -> Result<Vec<f64>> {
    TraceParams {
        n_mean,
        v_true,
        bins,
        phase_process: PhaseProcess::UniformIid,
        seed: 0,
    }
    .validate()?;
    Ok((0..bins)
        .map(|t| {
            let phi = TAU * (t as f64 + 0.5) / bins as f64;
            n_mean * (1.0 + v_true * phi.cos()) / 2.0
        })
        .collect())
}

/// What the variance estimator returns on a noise-free intensity trace:
/// `√(v² − 4/n̄)` — the shot-noise subtraction overshoots when the noise it
/// corrects for is absent. Errors when `v² < 4/n̄` (the estimator would
/// clamp).
pub fn noiseless_variance_prediction(n_mean: f64, v_true: f64) -> Result<f64> {
    if !(n_mean > 0.0) || !n_mean.is_finite() {
        return Err(Error::domain(format!("n_mean={n_mean} must be positive")));
    }
    let radicand = v_true * v_true - 4.0 / n_mean;
    if radicand < 0.0 {
        return Err(Error::domain(format!(
            "v_true²={} is below the shot-noise correction 4/n_mean={}",
            v_true * v_true,
            4.0 / n_mean
        )));
    }
    Ok(radicand.sqrt())
}

/// Min–max visibility estimate `(max − min)/(max + min)`; an all-zero trace
/// maps to 0.
pub fn minmax_visibility(counts: &[f64]) -> Result<f64> {
    if counts.is_empty() {
        return Err(Error::domain("cannot estimate visibility from an empty trace"));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &c in counts {
        if !c.is_finite() || c < 0.0 {
            return Err(Error::domain(format!("count {c} is not a non-negative number")));
        }
        lo = lo.min(c);
        hi = hi.max(c);
    }
    if hi + lo == 0.0 {
        return Ok(0.0);
    }
    Ok((hi - lo) / (hi + lo))
}

/// Variance-based visibility estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VarianceEstimate {
    /// The estimate, clamped into `[0, ∞)`.
    pub visibility: f64,
    /// True when the shot-noise-corrected second moment was negative and the
    /// estimate was clamped to zero.
    pub clamped: bool,
}

/// Shot-noise-corrected second-moment visibility estimate
/// `V̂ = √(2(m₂ − m² − m)/m²)` for uniformly sampled phases, where `m` is
/// the mean count and `m₂` the mean squared count. A negative radicand
/// (possible for weak signals) clamps to zero with a flag.
pub fn variance_visibility(counts: &[f64]) -> Result<VarianceEstimate> {
    if counts.is_empty() {
        return Err(Error::domain("cannot estimate visibility from an empty trace"));
    }
    let n = counts.len() as f64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for &c in counts {
        if !c.is_finite() || c < 0.0 {
            return Err(Error::domain(format!("count {c} is not a non-negative number")));
        }
        sum += c;
        sum_sq += c * c;
    }
    let mean = sum / n;
    if mean <= 0.0 {
        return Err(Error::domain("mean count is zero; visibility is undefined"));
    }
    let m2 = sum_sq / n;
    let radicand = 2.0 * (m2 - mean * mean - mean) / (mean * mean);
    if radicand < 0.0 {
        return Ok(VarianceEstimate { visibility: 0.0, clamped: true });
    }
    Ok(VarianceEstimate { visibility: radicand.sqrt(), clamped: false })
}

/// Parameters of the estimator-bias benchmark.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkParams {
    /// Mean-intensity grid to sweep.
    pub n_grid: Vec<f64>,
    /// True visibility of every synthetic trace.
    pub v_true: f64,
    /// Bins per trace.
    pub bins: usize,
    /// Independent traces per grid point.
    pub trials: u32,
    /// Master seed; trial seeds are derived deterministically from it.
    pub seed: u64,
    /// Phase model for the synthetic traces.
    pub phase_process: PhaseProcess,
}

/// Summary statistics of one estimator at one grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkRow {
    pub n_mean: f64,
    /// `"minmax"` or `"variance"`.
    pub estimator: &'static str,
    /// Mean estimate across trials.
    pub mean: f64,
    /// Sample standard deviation across trials.
    pub std: f64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Run both estimators over `trials` fresh traces at every grid point.
///
/// Trials run in parallel, but each trial's seed is a pure function of the
/// master seed and its `(grid index, trial index)` coordinates, and the
/// statistics are reduced in index order — results are byte-identical for
/// any number of worker threads.
pub fn estimator_benchmark(params: &BenchmarkParams) -> Result<Vec<BenchmarkRow>> {
    if params.n_grid.is_empty() {
        return Err(Error::domain("benchmark needs a non-empty intensity grid"));
    }
    if params.trials < 2 {
        return Err(Error::domain("benchmark needs at least two trials per grid point"));
    }
    let mut rows = Vec::with_capacity(params.n_grid.len() * 2);
    for (n_idx, &n_mean) in params.n_grid.iter().enumerate() {
        let estimates: Result<Vec<(f64, f64)>> = (0..params.trials)
            .into_par_iter()
            .map(|trial| {
                let trial_seed = splitmix64(
                    params
                        .seed
                        .wrapping_add(((n_idx as u64) << 32) | trial as u64),
                );
                let trace = generate_trace(&TraceParams {
                    n_mean,
                    v_true: params.v_true,
                    bins: params.bins,
                    phase_process: params.phase_process,
                    seed: trial_seed,
                })?;
                let counts: Vec<f64> = trace.iter().map(|&c| c as f64).collect();
                let mm = minmax_visibility(&counts)?;
                let var = variance_visibility(&counts)?.visibility;
                Ok((mm, var))
            })
            .collect();
        let estimates = estimates?;
        for (estimator, values) in [
            ("minmax", estimates.iter().map(|e| e.0).collect::<Vec<_>>()),
            ("variance", estimates.iter().map(|e| e.1).collect::<Vec<_>>()),
        ] {
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
            rows.push(BenchmarkRow { n_mean, estimator, mean, std: var.sqrt() });
        }
    }
    Ok(rows)
}

/// Render benchmark rows as CSV with the run parameters on every line.
pub fn benchmark_csv(rows: &[BenchmarkRow], params: &BenchmarkParams) -> String {
    let mut out = String::from("N,estimator,mean,std,trials,bins,v_true\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            sig17(row.n_mean),
            row.estimator,
            sig17(row.mean),
            sig17(row.std),
            params.trials,
            params.bins,
            sig17(params.v_true),
        ));
    }
    out
}

/// Render a count trace as CSV.
pub fn trace_csv(counts: &[u64]) -> String {
    let mut out = String::from("bin,count\n");
    for (bin, count) in counts.iter().enumerate() {
        out.push_str(&format!("{bin},{count}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn params(seed: u64) -> TraceParams {
        TraceParams {
            n_mean: 40.0,
            v_true: 0.8,
            bins: 500,
            phase_process: PhaseProcess::default(),
            seed,
        }
    }

    #[test]
    fn traces_are_deterministic_in_the_seed() {
        let a = generate_trace(&params(7)).unwrap();
        let b = generate_trace(&params(7)).unwrap();
        let c = generate_trace(&params(8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 500);
    }

    #[test]
    fn minmax_matches_the_noiseless_fringe() {
        let bins = 10_000;
        let trace = synthetic_noiseless_trace(1000.0, 0.73, bins).unwrap();
        let v = minmax_visibility(&trace).unwrap();
        // The grid never samples cos φ = ±1 exactly; the extremes sit at
        // cos(π/bins).
        let grid_factor = (PI / bins as f64).cos();
        assert_abs_diff_eq!(v, 0.73 * grid_factor, epsilon = 1e-12);
        assert_abs_diff_eq!(v, 0.73, epsilon = 1e-6);
    }

    #[test]
    fn variance_estimator_matches_its_noiseless_prediction() {
        let (n_mean, v_true, bins) = (1000.0, 0.9, 1000);
        let trace = synthetic_noiseless_trace(n_mean, v_true, bins).unwrap();
        let est = variance_visibility(&trace).unwrap();
        assert!(!est.clamped);
        let predicted = noiseless_variance_prediction(n_mean, v_true).unwrap();
        assert_abs_diff_eq!(est.visibility, predicted, epsilon = 1e-9);
        assert_abs_diff_eq!(predicted, (0.81f64 - 0.004).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn variance_estimator_is_nearly_unbiased_on_poisson_data() {
        let trace = generate_trace(&TraceParams {
            n_mean: 50.0,
            v_true: 0.9,
            bins: 20_000,
            phase_process: PhaseProcess::UniformIid,
            seed: 42,
        })
        .unwrap();
        let counts: Vec<f64> = trace.iter().map(|&c| c as f64).collect();
        let est = variance_visibility(&counts).unwrap();
        assert!(!est.clamped);
        assert_abs_diff_eq!(est.visibility, 0.9, epsilon = 0.03);
        // The min–max estimator overshoots badly on the same data.
        let mm = minmax_visibility(&counts).unwrap();
        assert!(mm > 0.95, "minmax should be biased upward, got {mm}");
    }

    #[test]
    fn weak_signals_clamp_with_a_flag() {
        let flat = vec![3.0; 64];
        let est = variance_visibility(&flat).unwrap();
        assert!(est.clamped);
        assert_eq!(est.visibility, 0.0);
    }

    #[test]
    fn zero_and_empty_traces_are_handled() {
        assert_eq!(minmax_visibility(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert!(variance_visibility(&[0.0, 0.0]).is_err());
        assert!(minmax_visibility(&[]).is_err());
        assert!(variance_visibility(&[]).is_err());
    }

    #[test]
    fn benchmark_is_deterministic_and_well_formed() {
        let params = BenchmarkParams {
            n_grid: vec![5.0, 20.0],
            v_true: 0.9,
            bins: 300,
            trials: 8,
            seed: 11,
            phase_process: PhaseProcess::UniformIid,
        };
        let rows = estimator_benchmark(&params).unwrap();
        let rows2 = estimator_benchmark(&params).unwrap();
        assert_eq!(rows, rows2);
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].estimator, "minmax");
        assert_eq!(rows[1].estimator, "variance");
        for row in &rows {
            assert!(row.mean.is_finite() && row.mean >= 0.0);
            assert!(row.std.is_finite() && row.std >= 0.0);
        }
        let csv = benchmark_csv(&rows, &params);
        assert!(csv.starts_with("N,estimator,mean,std,trials,bins,v_true\n"));
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(generate_trace(&TraceParams { n_mean: 0.0, ..params(1) }).is_err());
        assert!(generate_trace(&TraceParams { v_true: 1.5, ..params(1) }).is_err());
        assert!(generate_trace(&TraceParams { bins: 2, ..params(1) }).is_err());
        assert!(estimator_benchmark(&BenchmarkParams {
            n_grid: vec![],
            v_true: 0.9,
            bins: 100,
            trials: 10,
            seed: 0,
            phase_process: PhaseProcess::UniformIid,
        })
        .is_err());
    }
}
