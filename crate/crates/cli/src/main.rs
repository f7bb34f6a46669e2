mod output;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use fracac_core::assumptions::{check, AssumptionId, AssumptionReport, CheckOptions};
use fracac_core::config::RunFile;
use fracac_core::io::{self as fio, fmt_f64};
use fracac_core::kernels::kernel_distance;
use fracac_core::limit_lab::{self, fit_rate, LabError};
use fracac_core::special_fn::mittag_leffler;
use fracac_core::{Kernel, MLParams, Solver};

use output::{Manifest, RunDir};

#[derive(Parser)]
#[command(
    name = "fracac",
    version,
    about = "Fractionally damped nonlinear acoustics toolkit"
)]
struct Cli {
    /// Worker threads (default: all cores for `sweep`, 1 otherwise)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate E_{a,b}(z), or print a `z,value` table
    MlEval(MlEvalArgs),
    /// Tabulate a memory kernel
    Kernel(KernelArgs),
    /// Run assumption checks on a kernel
    Check(CheckArgs),
    /// Solve one problem from a run file
    Solve(SolveArgs),
    /// Run an ε sweep from a run file with a [sweep] section
    Sweep(SweepArgs),
    /// Refit the rate from an existing sweep.csv
    Rate(RateArgs),
}

#[derive(Args)]
struct OutArgs {
    /// Output directory (default ./runs/<timestamp>-<command>/)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MlEvalArgs {
    #[arg(allow_negative_numbers = true)]
    a: f64,
    #[arg(allow_negative_numbers = true)]
    b: f64,
    #[arg(allow_negative_numbers = true, required_unless_present = "table")]
    z: Option<f64>,
    /// zmin zmax n
    #[arg(long, num_args = 3, value_names = ["ZMIN", "ZMAX", "N"], allow_negative_numbers = true)]
    table: Option<Vec<f64>>,
}

#[derive(Args)]
struct KernelArgs {
    /// zero, dirac, abel, ml, harmonic, gfe, gfe1, gfe2, gfe3
    #[arg(long, required_unless_present = "kernel", conflicts_with = "kernel")]
    family: Option<String>,
    /// comma-separated parameters for --family
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    params: String,
    /// full kernel spec, e.g. abel:1,0.5
    #[arg(long)]
    kernel: Option<String>,
    /// tabulate the density at n points of (0, T]
    #[arg(long, num_args = 2, value_names = ["T", "N"], group = "mode")]
    eval: Option<Vec<String>>,
    /// tabulate ∫₀ᵗ K at n points of (0, T]
    #[arg(long, num_args = 2, value_names = ["T", "N"], group = "mode")]
    conv_one: Option<Vec<String>>,
    /// L¹(0,T) distance to another kernel
    #[arg(long, num_args = 2, value_names = ["OTHER", "T"], group = "mode", allow_hyphen_values = true)]
    distance: Option<Vec<String>>,
}

#[derive(Args)]
struct CheckArgs {
    /// a1, a2, a3k, a3b or all
    #[arg(long)]
    assumption: String,
    #[arg(long)]
    kernel: String,
    #[arg(long = "T", default_value_t = 1.0)]
    t_final: f64,
    #[arg(long, default_value_t = 256)]
    trials: usize,
    /// falls back to FRACAC_SEED, then 0
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 512)]
    steps: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    spec: PathBuf,
    /// also rerun at dt/2 and compare slopes
    #[arg(long)]
    stability: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct RateArgs {
    #[arg(long)]
    from: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    expected: Option<f64>,
    #[arg(long, default_value_t = 0.15)]
    tolerance: f64,
    #[command(flatten)]
    out: OutArgs,
}

/// A domain or validation failure; exits with 1.
#[derive(Debug)]
struct Invalid(String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

fn invalid(what: &str, e: impl fmt::Display) -> anyhow::Error {
    Invalid(format!("{what}: {e}")).into()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = if e.downcast_ref::<Invalid>().is_some() {
                1
            } else {
                2
            };
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let jobs = match cli.jobs {
        Some(0) => return Err(invalid("--jobs", "must be >= 1")),
        Some(n) => n,
        None if matches!(cli.command, Command::Sweep(_)) => {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        }
        None => 1,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build_global()
        .context("building the thread pool")?;
    match cli.command {
        Command::MlEval(a) => ml_eval(a),
        Command::Kernel(a) => kernel(a),
        Command::Check(a) => check_cmd(a, jobs),
        Command::Solve(a) => solve(a, jobs),
        Command::Sweep(a) => sweep(a, jobs),
        Command::Rate(a) => rate(a, jobs),
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<Option<u64>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("FRACAC_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|e| invalid("FRACAC_SEED", format!("{s:?}: {e}"))),
        Err(_) => Ok(None),
    }
}

fn parse_count(flag: &str, s: f64) -> Result<usize> {
    if s >= 1.0 && s.fract() == 0.0 && s < 1e9 {
        Ok(s as usize)
    } else {
        Err(invalid(
            flag,
            format!("n must be a positive integer, got {s}"),
        ))
    }
}

fn ml_eval(a: MlEvalArgs) -> Result<()> {
    let p = MLParams::new(a.a, a.b).map_err(|e| invalid("a, b", e))?;
    let Some(t) = a.table else {
        let z = a.z.expect("clap requires z without --table");
        let v = mittag_leffler(p, z).map_err(|e| invalid("z", e))?;
        println!("{v}");
        return Ok(());
    };
    let (lo, hi, n) = (t[0], t[1], parse_count("--table", t[2])?);
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(invalid("--table", "need finite zmin <= zmax"));
    }
    let mut w = csv::Writer::from_writer(std::io::stdout().lock());
    w.write_record(["z", "value"])?;
    for j in 0..n {
        let z = if n == 1 {
            lo
        } else {
            lo + (hi - lo) * j as f64 / (n - 1) as f64
        };
        let v = mittag_leffler(p, z).map_err(|e| invalid("--table", format!("z = {z}: {e}")))?;
        w.write_record([fmt_f64(z), fmt_f64(v)])?;
    }
    w.flush()?;
    Ok(())
}

fn parse_kernel(flag: &str, s: &str) -> Result<Kernel> {
    s.parse::<Kernel>().map_err(|e| invalid(flag, e))
}

fn parse_pair(flag: &str, v: &[String]) -> Result<(f64, usize)> {
    let t: f64 = v[0]
        .parse()
        .map_err(|e| invalid(flag, format!("T {:?}: {e}", v[0])))?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid(flag, "T must be finite and > 0"));
    }
    let n: f64 = v[1]
        .parse()
        .map_err(|e| invalid(flag, format!("n {:?}: {e}", v[1])))?;
    Ok((t, parse_count(flag, n)?))
}

fn kernel(a: KernelArgs) -> Result<()> {
    let k = match (&a.kernel, &a.family) {
        (Some(s), _) => parse_kernel("--kernel", s)?,
        (None, Some(f)) => {
            let spec = if a.params.is_empty() {
                f.clone()
            } else {
                format!("{f}:{}", a.params)
            };
            parse_kernel("--family/--params", &spec)?
        }
        (None, None) => unreachable!("clap requires --family or --kernel"),
    };
    let mut w = csv::Writer::from_writer(std::io::stdout().lock());
    if let Some(d) = &a.distance {
        let other = parse_kernel("--distance", &d[0])?;
        let t: f64 = d[1]
            .parse()
            .map_err(|e| invalid("--distance", format!("T {:?}: {e}", d[1])))?;
        let dist = kernel_distance(&k, &other, t).map_err(|e| invalid("--distance", e))?;
        w.write_record(["T", "distance"])?;
        w.write_record([fmt_f64(t), fmt_f64(dist)])?;
    } else {
        let (flag, head, pair) = match &a.conv_one {
            Some(v) => ("--conv-one", "conv_one", v.clone()),
            None => (
                "--eval",
                "value",
                a.eval
                    .clone()
                    .unwrap_or_else(|| vec!["1".into(), "10".into()]),
            ),
        };
        let (t, n) = parse_pair(flag, &pair)?;
        w.write_record(["t", head])?;
        for j in 1..=n {
            let tj = t * j as f64 / n as f64;
            let v = if a.conv_one.is_some() {
                k.conv_one(tj)
            } else {
                k.eval(tj)
            };
            w.write_record([fmt_f64(tj), fmt_f64(v.map_err(|e| invalid(flag, e))?)])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn check_cmd(a: CheckArgs, jobs: usize) -> Result<()> {
    let started = chrono::Local::now();
    let clock = Instant::now();
    let ids: Vec<AssumptionId> = if a.assumption.eq_ignore_ascii_case("all") {
        vec![
            AssumptionId::A1,
            AssumptionId::A2,
            AssumptionId::A3K,
            AssumptionId::A3B,
        ]
    } else {
        vec![a
            .assumption
            .parse()
            .map_err(|e| invalid("--assumption", e))?]
    };
    let k = parse_kernel("--kernel", &a.kernel)?;
    let seed = resolve_seed(a.seed)?.unwrap_or(0);
    let mut opts = CheckOptions::new(a.t_final, a.trials, seed);
    opts.steps = a.steps;
    let reports = ids
        .iter()
        .map(|&id| check(id, &k, &opts).map_err(|e| invalid("--kernel/--T/--trials/--steps", e)))
        .collect::<Result<Vec<AssumptionReport>>>()?;

    let mut dir = RunDir::create(a.out.out.as_deref(), "check", &started)?;
    for r in &reports {
        println!("{}", r.summary_line());
    }
    let json = if reports.len() == 1 {
        serde_json::to_value(&reports[0])?
    } else {
        serde_json::to_value(&reports)?
    };
    println!("{}", serde_json::to_string_pretty(&json)?);
    dir.write_json("report.json", &json)?;
    dir.write_with("reports.csv", |w| fio::write_reports_csv(&reports, w))?;
    let verdicts: serde_json::Map<_, _> = reports
        .iter()
        .map(|r| (r.assumption.to_string(), json!(r.pass)))
        .collect();
    let path = dir.finish(Manifest {
        command: "check",
        config: json!({ "assumption": a.assumption, "kernel": k.to_string(), "options": opts }),
        seed: Some(seed),
        started,
        wall_time_s: clock.elapsed().as_secs_f64(),
        jobs,
        monitors: serde_json::Value::Object(verdicts),
    })?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn read_run_file(flag: &str, path: &Path) -> Result<RunFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid(flag, format!("{}: {e}", path.display())))?;
    RunFile::parse(&text).map_err(|e| invalid(flag, format!("{}: {e}", path.display())))
}

fn solve(a: SolveArgs, jobs: usize) -> Result<()> {
    let started = chrono::Local::now();
    let clock = Instant::now();
    let file = read_run_file("--config", &a.config)?;
    let at = |e: &dyn fmt::Display| invalid("--config", format!("{}: {e}", a.config.display()));
    let config = file.solver_config().map_err(|e| at(&e))?;
    let k = file.kernel().map_err(|e| at(&e))?;
    let init = fracac_core::solver::initial_data_from_modes(
        &file.initial.psi0,
        &file.initial.psi1,
        &config,
    )
    .map_err(|e| at(&e))?;
    let sol = Solver::new(config, k)
        .and_then(|s| s.solve(&init.state))
        .map_err(|e| at(&e))?;

    let mut dir = RunDir::create(a.out.out.as_deref(), "solve", &started)?;
    dir.write_with("trace.csv", |w| fio::write_trace_csv(&sol.trace, w))?;
    dir.write_with("trajectory.bin", |w| {
        fio::write_trajectory(&sol.trajectory, w)
    })?;
    dir.write_text("energy.gp", output::energy_plot())?;
    let s = &sol.summary;
    println!(
        "solved {} steps: energy_norm={} coefficient=[{}, {}] ball={} max_fp_iters={}",
        s.steps,
        fmt_f64(s.energy_norm),
        fmt_f64(s.coefficient_min),
        fmt_f64(s.coefficient_max),
        fmt_f64(s.ball_value),
        s.max_fp_iters
    );
    let path = dir.finish(Manifest {
        command: "solve",
        config: json!({ "path": a.config, "file": file }),
        seed: resolve_seed(None)?,
        started,
        wall_time_s: clock.elapsed().as_secs_f64(),
        jobs,
        monitors: json!({ "summary": sol.summary, "data": init.norms }),
    })?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct RateReport {
    slope: Option<f64>,
    intercept: Option<f64>,
    r2: Option<f64>,
    points: usize,
    expected: Option<f64>,
    tolerance: f64,
    pass: Option<bool>,
    steeper_than_expected: Option<bool>,
    noise_floor: Option<f64>,
    spearman: Option<f64>,
    fit_error: Option<String>,
}

impl RateReport {
    fn line(&self) -> String {
        let verdict = match self.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "NOFIT",
        };
        let num = |x: Option<f64>| x.map_or("-".into(), |v| format!("{v:.4}"));
        format!(
            "{verdict} slope={} r2={} points={} expected={} tolerance={}",
            num(self.slope),
            num(self.r2),
            self.points,
            num(self.expected),
            self.tolerance
        )
    }
}

fn sweep(a: SweepArgs, jobs: usize) -> Result<()> {
    let started = chrono::Local::now();
    let clock = Instant::now();
    let file = read_run_file("--spec", &a.spec)?;
    let at = |e: &dyn fmt::Display| invalid("--spec", format!("{}: {e}", a.spec.display()));
    let spec = file.sweep_spec().map_err(|e| at(&e))?;
    let lab = |e: LabError| match e {
        LabError::InsufficientPoints { .. } => anyhow::Error::from(e),
        other => at(&other),
    };
    let result = limit_lab::run_sweep(&spec).map_err(lab)?;
    let stability = if a.stability {
        Some(limit_lab::slope_stability(&spec, &result).map_err(lab)?)
    } else {
        None
    };

    let fit = result.fit;
    let report = RateReport {
        slope: fit.map(|f| f.slope),
        intercept: fit.map(|f| f.intercept),
        r2: fit.map(|f| f.r2),
        points: fit.map_or(0, |f| f.points),
        expected: Some(result.expected_rate),
        tolerance: result.rate_tolerance,
        pass: result.pass,
        steeper_than_expected: fit.map(|_| result.steeper_than_expected),
        noise_floor: result.noise_floor,
        spearman: result.spearman,
        fit_error: result.fit_error.clone(),
    };

    let mut dir = RunDir::create(a.out.out.as_deref(), "sweep", &started)?;
    dir.write_with("sweep.csv", |w| fio::write_sweep_csv(&result, w))?;
    dir.write_with("continuity.csv", |w| {
        fio::write_continuity_csv(&result.continuity, w)
    })?;
    dir.write_json("rate.json", &report)?;
    dir.write_json(
        "sweep.json",
        &json!({ "result": result, "stability": stability }),
    )?;
    dir.write_text(
        "rate.gp",
        &output::rate_plot(report.slope, report.intercept),
    )?;
    println!("{}", report.line());
    if let Some(band) = result.continuity.band() {
        println!(
            "continuity band={band:.4} pairs={}",
            result.continuity.rows.len()
        );
    }
    if let Some(s) = stability {
        println!(
            "stability slope={:.4} refined={:.4} change={:.4} stable={}",
            s.slope, s.refined_slope, s.change, s.stable
        );
    }
    let violations: Vec<_> = result
        .entries
        .iter()
        .filter(|e| e.monitors.is_none())
        .map(|e| json!({ "eps": e.eps, "reason": e.reason }))
        .collect();
    let path = dir.finish(Manifest {
        command: "sweep",
        config: json!({ "path": a.spec, "file": file, "stability": a.stability }),
        seed: resolve_seed(None)?,
        started,
        wall_time_s: clock.elapsed().as_secs_f64(),
        jobs,
        monitors: json!({
            "limit": result.limit_monitors,
            "failed_runs": violations,
            "lower_order_spread": result.lower_order_spread(),
        }),
    })?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn rate(a: RateArgs, jobs: usize) -> Result<()> {
    let started = chrono::Local::now();
    let clock = Instant::now();
    if !(a.tolerance >= 0.0) {
        return Err(invalid("--tolerance", "must be >= 0"));
    }
    let file = std::fs::File::open(&a.from)
        .map_err(|e| invalid("--from", format!("{}: {e}", a.from.display())))?;
    let rows = fio::read_sweep_csv(file)
        .map_err(|e| invalid("--from", format!("{}: {e}", a.from.display())))?;
    let (x, y): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| !r.excluded)
        .filter_map(|r| r.energy_distance.map(|d| (r.eps, d)))
        .unzip();
    let (fit, fit_error) = match fit_rate(&x, &y) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let report = RateReport {
        slope: fit.map(|f| f.slope),
        intercept: fit.map(|f| f.intercept),
        r2: fit.map(|f| f.r2),
        points: fit.map_or(0, |f| f.points),
        expected: a.expected,
        tolerance: a.tolerance,
        pass: a.expected.zip(fit).map(|(e, f)| f.slope >= e - a.tolerance),
        steeper_than_expected: a.expected.zip(fit).map(|(e, f)| f.slope > e + a.tolerance),
        noise_floor: None,
        spearman: limit_lab::spearman(&x, &y),
        fit_error,
    };
    let mut dir = RunDir::create(a.out.out.as_deref(), "rate", &started)?;
    dir.write_json("rate.json", &report)?;
    println!("{}", report.line());
    let path = dir.finish(Manifest {
        command: "rate",
        config: json!({ "from": a.from, "expected": a.expected, "tolerance": a.tolerance }),
        seed: resolve_seed(None)?,
        started,
        wall_time_s: clock.elapsed().as_secs_f64(),
        jobs,
        monitors: json!({ "rows": rows.len(), "fitted": x.len() }),
    })?;
    eprintln!("wrote {}", path.display());
    Ok(())
}
