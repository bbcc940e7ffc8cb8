//! Command-line front end for the `singlerail` toolkit.
//!
//! Commands emit CSV or plain-text data files (plot rendering is out of
//! scope). Every command is deterministic: a fixed seed and configuration
//! produce byte-identical output on repeat runs and for any worker count.
//!
//! Exit codes: `0` success, `1` verification failure, `2` usage or
//! configuration error.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use singlerail::montecarlo::{
    benchmark_csv, estimator_benchmark, generate_trace, minmax_visibility, trace_csv,
    variance_visibility, BenchmarkParams, PhaseProcess, TraceParams,
};
use singlerail::oracle::{formula_ids, report_table, verify_formula, OracleReport};
use singlerail::protocols::{default_phase_grid, protocol_heralds, scan_herald, HeraldFringe};
use singlerail::textio::sig17;
use singlerail::{
    classical_bound, estimate_purity_from_scan, ideal_teleported_visibility, swap_assignment_search,
    swap_inverse, swap_visibilities, teleported_visibility_model, Error, NoiseParams, ProtocolSpec,
    SourceParams, SwapPair, SwapParams,
};

/// Simulator and analytics toolkit for single-rail photonic teleportation
/// and entanglement swapping: data-file generation and formula verification.
#[derive(Parser)]
#[command(name = "singlerail", version, max_term_width = 100)]
struct Cli {
    /// Master random seed for stochastic commands [default: 1]
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Write output to this file instead of standard output
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Flat `key = value` configuration file; explicit flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for parallel commands [default: all cores]
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Self-interference characterization sweep: relative count rate and
    /// fringe visibility per vacuum population, plus a coherence fit
    Characterize(CharacterizeArgs),
    /// Teleported-visibility curves over an input-visibility grid
    Teleport(TeleportArgs),
    /// Swapping fringe visibilities, and optionally the inverse parameter
    /// recovery from four measured visibilities
    Swap(SwapArgs),
    /// One synthetic Poisson count trace with estimator summaries
    Trace(TraceArgs),
    /// Estimator-bias benchmark over a mean-intensity grid
    EstimatorBench(BenchArgs),
    /// Re-derive registered closed forms against the brute-force verifier;
    /// empty selection runs every registered formula
    Verify(VerifyArgs),
}

#[derive(Args)]
struct CharacterizeArgs {
    /// Grid points for the vacuum population, spanning [0, alpha-sq-max]
    /// [default: 21]
    #[arg(long)]
    alpha_sq_points: Option<usize>,
    /// Upper end of the vacuum-population grid [default: 1.0]
    #[arg(long)]
    alpha_sq_max: Option<f64>,
    /// Source coherence λ [default: 1.0]
    #[arg(long)]
    lambda: Option<f64>,
    /// Two-photon overlap visibility of the probe source pair [default: 1.0]
    #[arg(long)]
    v_hom: Option<f64>,
}

#[derive(Args)]
struct TeleportArgs {
    /// Grid points for the input visibility [default: 19]
    #[arg(long)]
    v_points: Option<usize>,
    /// Lower end of the input-visibility grid [default: 0.05]
    #[arg(long)]
    v_min: Option<f64>,
    /// Upper end of the input-visibility grid [default: 0.95]
    #[arg(long)]
    v_max: Option<f64>,
    /// Source coherence λ [default: 1.0]
    #[arg(long)]
    lambda: Option<f64>,
    /// Two-photon overlap visibility on the sender side [default: 1.0]
    #[arg(long)]
    v_hom_alice: Option<f64>,
    /// Two-photon overlap visibility on the receiver side [default: 1.0]
    #[arg(long)]
    v_hom_bob: Option<f64>,
}

#[derive(Args)]
struct SwapArgs {
    /// Reflectivity of early splitter 2 [default: 0.5]
    #[arg(long)]
    r2: Option<f64>,
    /// Reflectivity of early splitter 3 [default: 0.5]
    #[arg(long)]
    r3: Option<f64>,
    /// Reflectivity of late splitter 4 [default: 0.5]
    #[arg(long)]
    r4: Option<f64>,
    /// Reflectivity of late splitter 5 [default: 0.5]
    #[arg(long)]
    r5: Option<f64>,
    /// Two-photon overlap of the swapped photons [default: 1.0]
    #[arg(long)]
    m: Option<f64>,
    /// Measured visibility of the (1,2) coincidence; give all four `vis-*`
    /// values to run the inverse recovery
    #[arg(long)]
    vis_12: Option<f64>,
    /// Measured visibility of the (1,3) coincidence
    #[arg(long)]
    vis_13: Option<f64>,
    /// Measured visibility of the (4,2) coincidence
    #[arg(long)]
    vis_42: Option<f64>,
    /// Measured visibility of the (4,3) coincidence
    #[arg(long)]
    vis_43: Option<f64>,
}

#[derive(Args)]
struct TraceArgs {
    /// Mean photons per bin [default: 50]
    #[arg(long)]
    n_mean: Option<f64>,
    /// True fringe visibility [default: 0.9]
    #[arg(long)]
    v_true: Option<f64>,
    /// Number of time bins [default: 100000]
    #[arg(long)]
    bins: Option<usize>,
    /// Phase model: `walk` (wrapped random walk) or `uniform` [default: walk]
    #[arg(long)]
    phase: Option<String>,
    /// Step of the phase random walk, radians per bin [default: 0.05]
    #[arg(long)]
    step_sigma: Option<f64>,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated mean-intensity grid [default: 5,10,50,100]
    #[arg(long)]
    n_grid: Option<String>,
    /// True fringe visibility [default: 0.9]
    #[arg(long)]
    v_true: Option<f64>,
    /// Number of time bins per trace [default: 100000]
    #[arg(long)]
    bins: Option<usize>,
    /// Independent traces per grid point [default: 100]
    #[arg(long)]
    trials: Option<u32>,
    /// Phase model: `walk` or `uniform` [default: walk]
    #[arg(long)]
    phase: Option<String>,
    /// Step of the phase random walk, radians per bin [default: 0.05]
    #[arg(long)]
    step_sigma: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Formula ids to verify (see `--list`); empty means all
    ids: Vec<String>,
    /// List the registered formula ids and exit
    #[arg(long)]
    list: bool,
}

/// Non-usage outcomes bubble up as exit codes; usage/config problems carry a
/// message and exit 2.
enum Failure {
    Usage(String),
}

type CliResult<T> = Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Usage(msg.into()))
}

/// Convert a library error into a usage/config failure.
fn lib_err(e: Error) -> Failure {
    Failure::Usage(e.to_string())
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> CliResult<i32> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return usage("--workers must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("worker pool: {e}")))?;
    }
    let mut cfg = ConfigMap::load(cli.config.as_ref())?;

    let (output, code) = match &cli.command {
        Command::Characterize(args) => (cmd_characterize(args, &mut cfg)?, 0),
        Command::Teleport(args) => (cmd_teleport(args, &mut cfg)?, 0),
        Command::Swap(args) => (cmd_swap(args, &mut cfg)?, 0),
        Command::Trace(args) => (cmd_trace(args, &mut cfg, cli.seed)?, 0),
        Command::EstimatorBench(args) => (cmd_estimator_bench(args, &mut cfg, cli.seed)?, 0),
        Command::Verify(args) => cmd_verify(args, &mut cfg)?,
    };
    cfg.finish()?;

    match &cli.out {
        Some(path) => std::fs::write(path, output)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{output}"),
    }
    Ok(code)
}

// ---------------------------------------------------------------------------
// Configuration file
// ---------------------------------------------------------------------------

/// Flat `key = value` configuration with strict key checking: every key must
/// be consumed by the command, anything left over is rejected.
struct ConfigMap {
    entries: BTreeMap<String, String>,
}

impl ConfigMap {
    fn load(path: Option<&PathBuf>) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((key, value)) = line.split_once('=') else {
                    return usage(format!(
                        "{}:{}: expected `key = value`, got `{raw}`",
                        path.display(),
                        lineno + 1
                    ));
                };
                if entries.insert(key.trim().to_string(), value.trim().to_string()).is_some() {
                    return usage(format!(
                        "{}:{}: duplicate key `{}`",
                        path.display(),
                        lineno + 1,
                        key.trim()
                    ));
                }
            }
        }
        Ok(ConfigMap { entries })
    }

    fn take_parsed<T: std::str::FromStr>(&mut self, key: &str) -> CliResult<Option<T>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                Failure::Usage(format!("configuration key `{key}`: cannot parse `{raw}`"))
            }),
        }
    }

    fn take_string(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    /// Reject any key no command consumed.
    fn finish(self) -> CliResult<()> {
        if let Some(key) = self.entries.keys().next() {
            return usage(format!("unknown configuration key `{key}`"));
        }
        Ok(())
    }
}

/// Precedence: explicit flag, then configuration file, then default.
fn merge<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn phase_process(
    name: Option<String>,
    step_sigma: f64,
) -> CliResult<PhaseProcess> {
    match name.as_deref().unwrap_or("walk") {
        "walk" => Ok(PhaseProcess::WrappedRandomWalk { step_sigma }),
        "uniform" => Ok(PhaseProcess::UniformIid),
        other => usage(format!("phase model `{other}` is not `walk` or `uniform`")),
    }
}

// ---------------------------------------------------------------------------
// characterize
// ---------------------------------------------------------------------------

/// Scan one herald of a protocol on the small-efficiency path; `None` when
/// the configuration produces no signal at all (e.g. a pure-vacuum input).
fn scan_limit_herald(spec: &ProtocolSpec, name: &str) -> CliResult<Option<HeraldFringe>> {
    let herald = protocol_heralds(spec)
        .into_iter()
        .find(|h| h.name == name)
        .ok_or_else(|| Failure::Usage(format!("protocol has no herald `{name}`")))?;
    match scan_herald(spec, &default_phase_grid(16), &herald) {
        Ok(fringe) => Ok(Some(fringe)),
        Err(Error::NoSignal) => Ok(None),
        Err(e) => Err(lib_err(e)),
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn cmd_characterize(args: &CharacterizeArgs, cfg: &mut ConfigMap) -> CliResult<String> {
    let points = merge(args.alpha_sq_points, cfg.take_parsed("alpha_sq_points")?, 21);
    let max = merge(args.alpha_sq_max, cfg.take_parsed("alpha_sq_max")?, 1.0);
    let lambda = merge(args.lambda, cfg.take_parsed("lambda")?, 1.0);
    let v_hom = merge(args.v_hom, cfg.take_parsed("v_hom")?, 1.0);
    if points < 2 {
        return usage("alpha_sq_points must be at least 2");
    }
    if !(0.0..=1.0).contains(&max) {
        return usage(format!("alpha_sq_max={max} outside [0, 1]"));
    }

    let noise = NoiseParams { lambda, x_first: v_hom, x_second: 1.0 };
    let probe = |alpha_sq: f64| {
        ProtocolSpec::characterization(alpha_sq.sqrt()).with_loss_limit(true).with_noise(noise)
    };

    // Reference rate at full photon population, for the relative count
    // column.
    let reference = scan_limit_herald(&probe(0.0), "port_1")?
        .map(|f| mean(&f.values))
        .filter(|&r| r > 0.0)
        .ok_or_else(|| Failure::Usage("characterization reference run has no signal".into()))?;

    let mut csv = String::from("alpha_sq,S_c_rel,V\n");
    let mut fit_points = Vec::new();
    for k in 0..points {
        let alpha_sq = max * k as f64 / (points - 1) as f64;
        let (s_c_rel, vis) = match scan_limit_herald(&probe(alpha_sq), "port_1")? {
            Some(fringe) => {
                let rel = mean(&fringe.values) / reference;
                fit_points.push((rel, fringe.visibility));
                (rel, fringe.visibility)
            }
            // No photons ever reach the detector (pure vacuum input): zero
            // rate, no measurable fringe, excluded from the coherence fit.
            None => (0.0, 0.0),
        };
        let _ = writeln!(csv, "{},{},{}", sig17(alpha_sq), sig17(s_c_rel), sig17(vis));
    }

    match estimate_purity_from_scan(&fit_points, v_hom) {
        Ok(fitted) => {
            let _ = writeln!(csv, "# fitted_lambda={}", sig17(fitted));
        }
        Err(e) => {
            let _ = writeln!(csv, "# fitted_lambda_error={e}");
        }
    }
    Ok(csv)
}

// ---------------------------------------------------------------------------
// teleport
// ---------------------------------------------------------------------------

fn cmd_teleport(args: &TeleportArgs, cfg: &mut ConfigMap) -> CliResult<String> {
    let points = merge(args.v_points, cfg.take_parsed("v_points")?, 19);
    let v_min = merge(args.v_min, cfg.take_parsed("v_min")?, 0.05);
    let v_max = merge(args.v_max, cfg.take_parsed("v_max")?, 0.95);
    let lambda = merge(args.lambda, cfg.take_parsed("lambda")?, 1.0);
    let v_hom_alice = merge(args.v_hom_alice, cfg.take_parsed("v_hom_alice")?, 1.0);
    let v_hom_bob = merge(args.v_hom_bob, cfg.take_parsed("v_hom_bob")?, 1.0);
    if points < 2 {
        return usage("v_points must be at least 2");
    }
    if !(0.0..=1.0).contains(&v_min) || !(v_min..=1.0).contains(&v_max) {
        return usage(format!("visibility grid [{v_min}, {v_max}] outside 0 ≤ v_min ≤ v_max ≤ 1"));
    }

    let source = SourceParams { lambda, v_hom_alice, v_hom_bob };
    source.validate().map_err(lib_err)?;
    let noise = NoiseParams { lambda, x_first: v_hom_alice, x_second: v_hom_bob };
    // The largest input visibility this source can produce (at a pure
    // one-photon input).
    let v_ceiling = lambda * lambda * v_hom_alice.sqrt();

    let mut csv = String::from("V,V_T_ideal,V_T_model,V_T_simulated,classical_bound\n");
    for k in 0..points {
        let v = v_min + (v_max - v_min) * k as f64 / (points - 1) as f64;
        if v > v_ceiling + 1e-12 {
            return usage(format!(
                "input visibility {v} exceeds the source ceiling λ²√V_A = {v_ceiling}"
            ));
        }
        let alpha_sq = (v / v_ceiling).min(1.0);
        let spec = ProtocolSpec::teleportation(alpha_sq.sqrt())
            .with_loss_limit(true)
            .with_noise(noise);
        let simulated = scan_limit_herald(&spec, "alice_2")?
            .map(|f| f.visibility)
            .unwrap_or(0.0);
        let ideal = ideal_teleported_visibility(v).map_err(lib_err)?;
        let model = teleported_visibility_model(v, &source).map_err(lib_err)?;
        let bound = classical_bound(v).map_err(lib_err)?;
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            sig17(v),
            sig17(ideal),
            sig17(model),
            sig17(simulated),
            sig17(bound)
        );
    }
    let _ = writeln!(
        csv,
        "# source: lambda={} v_hom_alice={} v_hom_bob={}",
        sig17(lambda),
        sig17(v_hom_alice),
        sig17(v_hom_bob)
    );
    Ok(csv)
}

// ---------------------------------------------------------------------------
// swap
// ---------------------------------------------------------------------------

fn cmd_swap(args: &SwapArgs, cfg: &mut ConfigMap) -> CliResult<String> {
    let params = SwapParams {
        r2: merge(args.r2, cfg.take_parsed("r2")?, 0.5),
        r3: merge(args.r3, cfg.take_parsed("r3")?, 0.5),
        r4: merge(args.r4, cfg.take_parsed("r4")?, 0.5),
        r5: merge(args.r5, cfg.take_parsed("r5")?, 0.5),
        m: merge(args.m, cfg.take_parsed("m")?, 1.0),
    };
    let vis_in = [
        merge(args.vis_12, cfg.take_parsed("vis_12")?, f64::NAN),
        merge(args.vis_13, cfg.take_parsed("vis_13")?, f64::NAN),
        merge(args.vis_42, cfg.take_parsed("vis_42")?, f64::NAN),
        merge(args.vis_43, cfg.take_parsed("vis_43")?, f64::NAN),
    ];

    let forward = swap_visibilities(&params).map_err(lib_err)?;
    let mut out = String::from("pair,visibility\n");
    for (pair, vis) in SwapPair::all().iter().zip(forward) {
        let _ = writeln!(out, "{},{}", pair.label(), sig17(vis));
    }
    let _ = writeln!(
        out,
        "# forward: r2={} r3={} r4={} r5={} m={}",
        sig17(params.r2),
        sig17(params.r3),
        sig17(params.r4),
        sig17(params.r5),
        sig17(params.m)
    );

    let given = vis_in.iter().filter(|v| !v.is_nan()).count();
    if given == 0 {
        return Ok(out);
    }
    if given != 4 {
        return usage("inverse recovery needs all four of vis_12, vis_13, vis_42, vis_43");
    }

    let _ = writeln!(
        out,
        "# inverse input: vis_12={} vis_13={} vis_42={} vis_43={}",
        sig17(vis_in[0]),
        sig17(vis_in[1]),
        sig17(vis_in[2]),
        sig17(vis_in[3])
    );
    match swap_inverse(vis_in) {
        Ok(inv) => {
            for (tag, b) in [("branch", &inv.branch), ("mirror", &inv.mirror)] {
                let _ = writeln!(
                    out,
                    "# inverse {tag}: x={} y={} z={} w={} r4={} r5={}",
                    sig17(b.x),
                    sig17(b.y),
                    sig17(b.z),
                    sig17(b.w),
                    sig17(b.r4),
                    sig17(b.r5)
                );
            }
            let _ = writeln!(
                out,
                "# inverse: v_hom={} residual={} degenerate={}",
                sig17(inv.v_hom),
                sig17(inv.residual),
                inv.degenerate
            );
        }
        Err(e) => {
            let _ = writeln!(out, "# inverse error: {e}");
        }
    }

    let feasible = swap_assignment_search(vis_in);
    let _ = writeln!(out, "# assignment search: {} feasible of 24 orderings", feasible.len());
    for assignment in &feasible {
        let _ = writeln!(
            out,
            "# assignment perm={:?}: v_hom={} r4={} r5={} residual={}",
            assignment.perm,
            sig17(assignment.result.v_hom),
            sig17(assignment.result.branch.r4),
            sig17(assignment.result.branch.r5),
            sig17(assignment.result.residual)
        );
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// trace / estimator-bench
// ---------------------------------------------------------------------------

fn cmd_trace(args: &TraceArgs, cfg: &mut ConfigMap, seed_flag: Option<u64>) -> CliResult<String> {
    let params = TraceParams {
        n_mean: merge(args.n_mean, cfg.take_parsed("n_mean")?, 50.0),
        v_true: merge(args.v_true, cfg.take_parsed("v_true")?, 0.9),
        bins: merge(args.bins, cfg.take_parsed("bins")?, 100_000),
        phase_process: phase_process(
            args.phase.clone().or_else(|| cfg.take_string("phase")),
            merge(args.step_sigma, cfg.take_parsed("step_sigma")?, 0.05),
        )?,
        seed: merge(seed_flag, cfg.take_parsed("seed")?, 1),
    };
    let counts = generate_trace(&params).map_err(lib_err)?;
    let mut out = trace_csv(&counts);

    let as_f64: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let mm = minmax_visibility(&as_f64).map_err(lib_err)?;
    let var = variance_visibility(&as_f64).map_err(lib_err)?;
    let _ = writeln!(out, "# minmax_estimate={}", sig17(mm));
    let _ = writeln!(out, "# variance_estimate={}", sig17(var.visibility));
    let _ = writeln!(out, "# variance_clamped={}", var.clamped);
    let _ = writeln!(
        out,
        "# params: n_mean={} v_true={} bins={} seed={}",
        sig17(params.n_mean),
        sig17(params.v_true),
        params.bins,
        params.seed
    );
    Ok(out)
}

fn parse_grid(raw: &str) -> CliResult<Vec<f64>> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Failure::Usage(format!("cannot parse grid entry `{s}`")))
        })
        .collect()
}

fn cmd_estimator_bench(
    args: &BenchArgs,
    cfg: &mut ConfigMap,
    seed_flag: Option<u64>,
) -> CliResult<String> {
    let grid_raw = args
        .n_grid
        .clone()
        .or_else(|| cfg.take_string("n_grid"))
        .unwrap_or_else(|| "5,10,50,100".into());
    let params = BenchmarkParams {
        n_grid: parse_grid(&grid_raw)?,
        v_true: merge(args.v_true, cfg.take_parsed("v_true")?, 0.9),
        bins: merge(args.bins, cfg.take_parsed("bins")?, 100_000),
        trials: merge(args.trials, cfg.take_parsed("trials")?, 100),
        seed: merge(seed_flag, cfg.take_parsed("seed")?, 1),
        phase_process: phase_process(
            args.phase.clone().or_else(|| cfg.take_string("phase")),
            merge(args.step_sigma, cfg.take_parsed("step_sigma")?, 0.05),
        )?,
    };
    let rows = estimator_benchmark(&params).map_err(lib_err)?;
    Ok(benchmark_csv(&rows, &params))
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

fn cmd_verify(args: &VerifyArgs, _cfg: &mut ConfigMap) -> CliResult<(String, i32)> {
    if args.list {
        let mut out = String::new();
        for id in formula_ids() {
            let _ = writeln!(out, "{id}");
        }
        return Ok((out, 0));
    }
    let ids: Vec<String> = if args.ids.is_empty() {
        formula_ids().iter().map(|s| s.to_string()).collect()
    } else {
        args.ids.clone()
    };
    let mut reports: Vec<OracleReport> = Vec::with_capacity(ids.len());
    for id in &ids {
        match verify_formula(id) {
            Ok(report) => reports.push(report),
            // An unknown id is a usage error; anything else means the
            // verification itself could not be completed.
            Err(e @ Error::Config(_)) => return Err(lib_err(e)),
            Err(e) => {
                let mut out = report_table(&reports);
                let _ = writeln!(out, "{id}: verification aborted: {e}");
                return Ok((out, 1));
            }
        }
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    let mut out = report_table(&reports);
    let _ = writeln!(out, "# {} verified, {} failed", reports.len() - failed, failed);
    Ok((out, if failed > 0 { 1 } else { 0 }))
}
