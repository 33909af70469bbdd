//! Command line front end: dataset generation, exact solve, Monte Carlo
//! experiment and the verification suites.
//!
//! Exit codes: 0 success, 1 failed gate / failed suite / numeric failure,
//! 2 usage or config error. Every command is deterministic under fixed
//! flags and seed.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use rkhs_sgd::error::Error;
use rkhs_sgd::exact::solve_ball;
use rkhs_sgd::harness::{
    build_experiment, constant_bound_report, default_checkpoints, default_fit_window, fit_rate,
    format_f64_17, read_dataset_csv, synthesize_dataset, write_dataset_csv, DatasetSource,
    ExperimentConfig, SyntheticSpec, TargetFn, PLATEAU_GATE, SLOPE_GATE,
};
use rkhs_sgd::kernel::{KernelFamily, KernelSpec};
use rkhs_sgd::objective::Problem;
use rkhs_sgd::rkhs::Rkhs;
use rkhs_sgd::sgd::ScalingLaw;
use rkhs_sgd::verify::{run_all, VerifyOptions};

const WORKERS_ENV: &str = "RKHS_SGD_WORKERS";

#[derive(Parser)]
#[command(
    name = "rkhs-sgd",
    version,
    about = "Scattered-data approximation by projected stochastic gradient descent in an RKHS"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset CSV
    GenData(GenDataArgs),
    /// Solve for the exact minimizer and write coefficients + report
    SolveExact(SolveExactArgs),
    /// Estimate the expected squared error curve over many trials
    Experiment(ExperimentArgs),
    /// Run the seeded verification suites
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenDataArgs {
    /// Number of points
    #[arg(long, default_value_t = 40)]
    n: usize,
    /// Input dimension
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Output dimension
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Target function: zero | sine | sinmix
    #[arg(long = "fn", default_value = "sinmix")]
    target: String,
    /// Standard deviation of additive Gaussian noise
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveExactArgs {
    /// Dataset CSV (header x1..xd,y1..ym)
    #[arg(long)]
    data: PathBuf,
    /// Kernel family: gaussian | laplacian | matern32
    #[arg(long, default_value = "gaussian")]
    kernel: String,
    #[arg(long, default_value_t = 1.0)]
    bandwidth: f64,
    /// Mixing weight of the norm penalty, strictly between 0 and 1
    #[arg(long, default_value_t = 0.5)]
    q: f64,
    /// Ball radius; "inf" for unconstrained
    #[arg(long, default_value = "inf")]
    r: String,
    /// Output prefix; writes <prefix>.csv and <prefix>.json
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Dataset CSV; omit to synthesize one from the flags below
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = 40)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Target function for synthetic data: zero | sine | sinmix
    #[arg(long = "fn", default_value = "sinmix")]
    target: String,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    /// Seed of the synthetic dataset (independent of the trial seed)
    #[arg(long, default_value_t = 7)]
    data_seed: u64,
    /// Kernel family: gaussian | laplacian | matern32
    #[arg(long, default_value = "gaussian")]
    kernel: String,
    #[arg(long, default_value_t = 1.0)]
    bandwidth: f64,
    #[arg(long, default_value_t = 0.5)]
    q: f64,
    /// Ball radius; "inf" for unconstrained
    #[arg(long, default_value = "inf")]
    r: String,
    /// Step scale factor, must exceed 1
    #[arg(long, default_value_t = 2.0)]
    s: f64,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[arg(long, default_value_t = 16384)]
    kmax: u64,
    /// Comma-separated checkpoint list; default powers of two up to kmax
    #[arg(long)]
    checkpoints: Option<String>,
    /// Step scaling law, e.g. "0.5:0.5,1.5:0.5" (value:probability)
    #[arg(long)]
    scaling: Option<String>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Worker threads; overrides the RKHS_SGD_WORKERS env var
    #[arg(long)]
    workers: Option<usize>,
    /// Writes <prefix>_curve.csv, <prefix>_summary.json, <prefix>_manifest.json
    #[arg(long)]
    out_prefix: String,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Run ten times as many instances per suite
    #[arg(long)]
    heavy: bool,
    /// Negative control: corrupt one Gram entry and expect a failure
    #[arg(long, hide = true)]
    corrupt_gram: bool,
}

/// An error message bound to the exit code it should produce.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err {
            // Numeric trouble in an otherwise well-posed run.
            Error::GramNotPositiveDefinite
            | Error::BallSolveFailed { .. }
            | Error::DegenerateCurve(_)
            | Error::MismatchedSpace => 1,
            // Everything else means the inputs were wrong.
            _ => 2,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::GenData(args) => cmd_gen_data(args),
        Command::SolveExact(args) => cmd_solve_exact(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn parse_target(name: &str) -> Result<TargetFn, Failure> {
    TargetFn::from_name(name)
        .ok_or_else(|| Failure::config(format!("unknown target function \"{name}\"")))
}

fn parse_kernel(name: &str, bandwidth: f64) -> Result<KernelSpec<f64>, Failure> {
    let family = KernelFamily::from_name(name)
        .ok_or_else(|| Failure::config(format!("unknown kernel family \"{name}\"")))?;
    Ok(KernelSpec::new(family, bandwidth)?)
}

fn parse_radius(text: &str) -> Result<f64, Failure> {
    if text.eq_ignore_ascii_case("inf") || text.eq_ignore_ascii_case("infinity") {
        return Ok(f64::INFINITY);
    }
    text.parse::<f64>()
        .map_err(|_| Failure::config(format!("radius \"{text}\" is neither a number nor inf")))
}

fn parse_scaling(text: &str) -> Result<ScalingLaw<f64>, Failure> {
    let mut atoms = Vec::new();
    for part in text.split(',') {
        let (v, p) = part
            .split_once(':')
            .ok_or_else(|| Failure::config(format!("scaling atom \"{part}\" is not value:probability")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Failure::config(format!("bad scaling value \"{v}\"")))?;
        let p: f64 = p
            .trim()
            .parse()
            .map_err(|_| Failure::config(format!("bad scaling probability \"{p}\"")))?;
        atoms.push((v, p));
    }
    Ok(ScalingLaw::new(atoms)?)
}

fn parse_checkpoints(text: &str) -> Result<Vec<u64>, Failure> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<u64>()
                .map_err(|_| Failure::config(format!("bad checkpoint \"{part}\"")))
        })
        .collect()
}

fn resolve_workers(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(WORKERS_ENV) {
        Ok(text) => text
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Failure::config(format!("{WORKERS_ENV}=\"{text}\" is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn write_json(path: &PathBuf, value: &Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::config(format!("json: {e}")))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

fn cmd_gen_data(args: GenDataArgs) -> Result<u8, Failure> {
    let spec = SyntheticSpec::<f64> {
        n: args.n,
        d: args.d,
        m: args.m,
        target: parse_target(&args.target)?,
        noise: args.noise,
        seed: args.seed,
    };
    let ds = synthesize_dataset(&spec)?;
    write_dataset_csv(&ds, &args.out)?;
    println!("wrote {} ({} rows)", args.out.display(), ds.n());
    Ok(0)
}

fn cmd_solve_exact(args: SolveExactArgs) -> Result<u8, Failure> {
    let dataset = read_dataset_csv::<f64>(&args.data)?;
    let kernel = parse_kernel(&args.kernel, args.bandwidth)?;
    let radius = parse_radius(&args.r)?;
    let space = Rkhs::build(kernel, dataset)?;
    let problem = Problem::new(space, args.q, radius)?;
    let sol = solve_ball(&problem)?;

    let m = problem.space().m();
    let header: Vec<String> = (1..=m).map(|l| format!("c{l}")).collect();
    let mut csv = header.join(",");
    csv.push('\n');
    for row in sol.f_star.coeffs().chunks(m) {
        let cells: Vec<String> = row.iter().map(|c| format_f64_17(*c)).collect();
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    let csv_path = PathBuf::from(format!("{}.csv", args.out.display()));
    let json_path = PathBuf::from(format!("{}.json", args.out.display()));
    std::fs::write(&csv_path, csv)
        .map_err(|e| Failure::config(format!("{}: {e}", csv_path.display())))?;
    let report = json!({
        "norm_h": sol.f_star.norm(),
        "objective": problem.full_objective(&sol.f_star)?,
        "multiplier": sol.multiplier,
        "residual": sol.residual,
    });
    write_json(&json_path, &report)?;
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(0)
}

fn radius_json(radius: f64) -> Value {
    if radius.is_finite() {
        json!(radius)
    } else {
        json!("inf")
    }
}

fn config_json(config: &ExperimentConfig<f64>) -> Value {
    let dataset = match &config.source {
        DatasetSource::Synthetic(spec) => json!({
            "synthetic": {
                "n": spec.n,
                "d": spec.d,
                "m": spec.m,
                "fn": spec.target.name(),
                "noise": spec.noise,
                "seed": spec.seed,
            }
        }),
        DatasetSource::File(path) => json!({ "file": path.display().to_string() }),
    };
    json!({
        "dataset": dataset,
        "kernel": {
            "family": config.kernel.family().name(),
            "bandwidth": config.kernel.bandwidth(),
        },
        "q": config.q,
        "r": radius_json(config.radius),
        "s": config.s,
        "trials": config.trials,
        "kmax": config.k_max,
        "checkpoints": config.checkpoints,
        "scaling": config.law.as_ref().map(|law| {
            law.atoms().iter().map(|(v, p)| json!([v, p])).collect::<Vec<_>>()
        }),
        "seed": config.seed,
        "workers": config.workers,
    })
}

fn cmd_experiment(args: ExperimentArgs) -> Result<u8, Failure> {
    let started = Instant::now();
    let source = match &args.data {
        Some(path) => DatasetSource::File(path.clone()),
        None => DatasetSource::Synthetic(SyntheticSpec {
            n: args.n,
            d: args.d,
            m: args.m,
            target: parse_target(&args.target)?,
            noise: args.noise,
            seed: args.data_seed,
        }),
    };
    let checkpoints = match &args.checkpoints {
        Some(text) => parse_checkpoints(text)?,
        None => default_checkpoints(args.kmax),
    };
    let law = args.scaling.as_deref().map(parse_scaling).transpose()?;
    let config = ExperimentConfig {
        source,
        kernel: parse_kernel(&args.kernel, args.bandwidth)?,
        q: args.q,
        radius: parse_radius(&args.r)?,
        s: args.s,
        trials: args.trials,
        k_max: args.kmax,
        checkpoints,
        law,
        seed: args.seed,
        workers: resolve_workers(args.workers)?,
    };

    let experiment = build_experiment(config)?;
    let curve = experiment.error_curve()?;
    let fit = fit_rate(&curve, default_fit_window(&curve))?;
    let report = constant_bound_report(&experiment.problem, &experiment.solution, &curve)?;
    let slope = fit.slope;
    let plateau = report.plateau;
    let slope_pass = slope >= SLOPE_GATE.0 && slope <= SLOPE_GATE.1;
    let plateau_pass = plateau <= PLATEAU_GATE;

    let curve_path = PathBuf::from(format!("{}_curve.csv", args.out_prefix));
    let summary_path = PathBuf::from(format!("{}_summary.json", args.out_prefix));
    let manifest_path = PathBuf::from(format!("{}_manifest.json", args.out_prefix));
    curve.write_csv(&curve_path)?;

    let config_value = config_json(&experiment.config);
    let summary = json!({
        "config": config_value,
        "constants": {
            "lambda": experiment.constants.lambda,
            "lambda_sq": experiment.constants.lambda_sq,
            "M": experiment.constants.embedding,
            "rho": experiment.constants.rho,
            "b": experiment.schedule.b(),
            "s": experiment.schedule.s(),
        },
        "curve_file": curve_path.display().to_string(),
        "slope": slope,
        "plateau": plateau,
        "grad_norm_sq_at_fstar": report.grad_norm_sq_at_fstar,
        "gates": {
            "slope_pass": slope_pass,
            "plateau_pass": plateau_pass,
        },
    });
    write_json(&summary_path, &summary)?;

    let manifest = json!({
        "config": config_value,
        "seed": experiment.config.seed,
        "versions": {
            "rkhs-sgd-cli": env!("CARGO_PKG_VERSION"),
        },
        "outputs": [
            curve_path.display().to_string(),
            summary_path.display().to_string(),
            manifest_path.display().to_string(),
        ],
        "duration_seconds": started.elapsed().as_secs_f64(),
    });
    write_json(&manifest_path, &manifest)?;

    println!("curve:    {}", curve_path.display());
    println!("summary:  {}", summary_path.display());
    println!("manifest: {}", manifest_path.display());
    println!(
        "slope {:.4} (gate [{}, {}]), plateau {:.3} (gate <= {})",
        slope, SLOPE_GATE.0, SLOPE_GATE.1, plateau, PLATEAU_GATE
    );
    let mut failed = Vec::new();
    if !slope_pass {
        failed.push(format!(
            "slope gate: {:.4} outside [{}, {}]",
            slope, SLOPE_GATE.0, SLOPE_GATE.1
        ));
    }
    if !plateau_pass {
        failed.push(format!("plateau gate: {plateau:.3} exceeds {PLATEAU_GATE}"));
    }
    if failed.is_empty() {
        Ok(0)
    } else {
        for line in &failed {
            eprintln!("gate failed: {line}");
        }
        Ok(1)
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<u8, Failure> {
    let opts = VerifyOptions {
        seed: args.seed,
        heavy: args.heavy,
        corrupt_gram: args.corrupt_gram,
    };
    let report = run_all(&opts);
    for suite in &report.suites {
        println!(
            "{:<28} {}  worst {:9.3e} x tol  ({} checks)",
            suite.name,
            if suite.pass { "PASS" } else { "FAIL" },
            suite.worst,
            suite.cases
        );
    }
    let failed = report.suites.iter().filter(|s| !s.pass).count();
    if failed == 0 {
        println!("all {} suites passed", report.suites.len());
        Ok(0)
    } else {
        eprintln!("{failed} suite(s) failed");
        Ok(1)
    }
}
