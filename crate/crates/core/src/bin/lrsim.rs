use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lrsim::causality::{readout_signature, CausalScenario};
use lrsim::estimators::{
    default_q_grid, estimate_bell, estimate_steering, exact_bell, exact_steering, min_copies, sweep_curve, Curve,
    CurveKind, CurvePoint, Estimation, Frontier, SweepSettings, MIN_SAMPLES,
};
use lrsim::models::{qubit_copies_joint, Copies, ModelConfig, ModelKind, DEFAULT_SEED};
use lrsim::output::{curve_csv, format_sig9, write_curve_csv, write_curve_svg};
use lrsim::quantum::{oracle_suite, sequential_qubit_probability, QubitAngles};

#[derive(Parser)]
#[command(name = "lrsim", version, about = "Local-realistic POVM models for steering and CHSH tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// CHSH statistics of one model configuration
    Bell(RunArgs),
    /// Steering statistics of one model configuration
    Steer(RunArgs),
    /// Sequential single-qubit readouts versus readouts on separate copies
    Qubit(QubitArgs),
    /// Efficiency-versus-violation curves of the tomography model
    Curves(CurveArgs),
    /// Conditioned variables of every readout in a scenario file
    Causality(CausalityArgs),
    /// Compare the quantum oracle with closed forms
    OracleCheck(OracleArgs),
    /// Fewest copies whose curve reaches an observed point
    MinCopies(MinCopiesArgs),
}

#[derive(Args)]
struct SamplingArgs {
    /// Monte Carlo rounds
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Enumerate exactly instead of sampling
    #[arg(long)]
    exact: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    model: ModelKind,
    /// Copy count, a positive integer or `inf`
    #[arg(long, default_value = "1")]
    n_copies: Copies,
    /// Deadzone threshold of the tomography readout
    #[arg(long, default_value_t = 0.0)]
    q: f64,
    #[arg(long)]
    m_choices: Option<usize>,
    #[command(flatten)]
    sampling: SamplingArgs,
    /// Also write the summary point as CSV
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QubitArgs {
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    #[arg(long)]
    t_a: f64,
    #[arg(long)]
    t_b: f64,
    #[arg(long, default_value = "2")]
    n_copies: Copies,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long, default_value = "ncopy-tomography")]
    model: ModelKind,
    /// bell (|S|) or steering (T)
    #[arg(long, default_value = "bell")]
    kind: CurveKind,
    /// Comma-separated copy counts; ranges like `1-10` and `inf` allowed
    #[arg(long, default_value = "1-10,inf")]
    n_copies: String,
    /// Comma-separated deadzone values (default 0, 0.03, ..., 0.96)
    #[arg(long, value_delimiter = ',')]
    q: Option<Vec<f64>>,
    #[command(flatten)]
    sampling: SamplingArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct CausalityArgs {
    /// Scenario file: lines `choice|readout <label> <t> <x> <y> <z>`
    scenario: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct MinCopiesArgs {
    #[arg(long)]
    kind: CurveKind,
    /// Observed |S| or T
    #[arg(long)]
    value: f64,
    /// Observed efficiency
    #[arg(long)]
    eta: f64,
    #[arg(long, default_value_t = 10)]
    n_max: u32,
    #[command(flatten)]
    sampling: SamplingArgs,
}

/// A failure and the exit status it maps to.
struct Failure {
    status: u8,
    message: String,
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure { status: 1, message: message.into() }
}

fn degenerate(message: impl Into<String>) -> Failure {
    Failure { status: 2, message: message.into() }
}

fn io_failure(err: impl std::fmt::Display) -> Failure {
    Failure { status: 1, message: err.to_string() }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.status)
        }
    }
}

fn run(command: Command) -> Result<String, Failure> {
    match command {
        Command::Bell(args) => run_bell(&args),
        Command::Steer(args) => run_steer(&args),
        Command::Qubit(args) => run_qubit(&args),
        Command::Curves(args) => run_curves(&args),
        Command::Causality(args) => run_causality(&args),
        Command::OracleCheck(args) => run_oracle(&args),
        Command::MinCopies(args) => run_min_copies(&args),
    }
}

fn check_sampling(s: &SamplingArgs) -> Result<(), Failure> {
    if !s.exact && s.samples < MIN_SAMPLES {
        return Err(invalid(format!("--samples must be at least {MIN_SAMPLES}, got {}", s.samples)));
    }
    if s.workers == 0 {
        return Err(invalid("--workers must be at least 1"));
    }
    Ok(())
}

fn check_q(q: f64) -> Result<(), Failure> {
    if !(0.0..1.0).contains(&q) {
        return Err(invalid(format!("--q must lie in [0, 1), got {q}")));
    }
    Ok(())
}

fn build_config(args: &RunArgs, steering: bool) -> Result<ModelConfig, Failure> {
    check_sampling(&args.sampling)?;
    check_q(args.q)?;
    let m = args.m_choices.unwrap_or(if steering { 3 } else { 2 });
    if !(2..=3).contains(&m) {
        return Err(invalid(format!("--m-choices must be 2 or 3, got {m}")));
    }
    let finite = |what: &str| match args.n_copies {
        Copies::Finite(n) => Ok(n),
        Copies::Infinite => Err(invalid(format!("--n-copies must be finite for {what}"))),
    };
    let config = match args.model {
        ModelKind::SimpleBell => ModelConfig::simple_bell(),
        ModelKind::TrustedSteeringM => ModelConfig::trusted_steering(m),
        ModelKind::NCopySteering => ModelConfig::ncopy_steering(finite("ncopy-steering")?, m),
        ModelKind::NCopyTomography | ModelKind::ChaoticBall => {
            let copies = if args.model == ModelKind::ChaoticBall { Copies::Infinite } else { args.n_copies };
            if steering {
                ModelConfig {
                    angles: QubitAngles::steering(m),
                    m_choices: m,
                    ..ModelConfig::tomography_steering(copies, args.q)
                }
            } else {
                ModelConfig::tomography_bell(copies, args.q)
            }
        }
        ModelKind::QubitCopies => return Err(invalid("--model qubit-copies is only available through `qubit`")),
    };
    let config = config.with_seed(args.sampling.seed);
    config.validate().map_err(|e| invalid(format!("--model {}: {e}", args.model)))?;
    Ok(config)
}

fn header(out: &mut String, config: &ModelConfig, sampling: &SamplingArgs, protocol: &str) {
    let _ = writeln!(out, "protocol: {protocol}");
    let _ = writeln!(out, "model: {}", config.kind);
    let _ = writeln!(out, "n_copies: {}", config.n_copies);
    let _ = writeln!(out, "q: {}", format_sig9(config.q));
    if sampling.exact {
        let _ = writeln!(out, "estimation: exact");
    } else {
        let _ = writeln!(out, "samples: {}", sampling.samples);
        let _ = writeln!(out, "seed: {}", sampling.seed);
        let _ = writeln!(out, "workers: {}", sampling.workers);
    }
}

fn pm(value: f64, stderr: f64) -> String {
    format!("{} +/- {}", format_sig9(value), format_sig9(stderr))
}

fn summary_csv(
    path: &Path,
    config: &ModelConfig,
    eta: f64,
    value: f64,
    stderr: f64,
    samples: u64,
) -> Result<(), Failure> {
    let point = CurvePoint { n_copies: config.n_copies, q: config.q, eta, value, stderr, samples };
    write_curve_csv(&[point], path).map_err(io_failure)
}

fn run_bell(args: &RunArgs) -> Result<String, Failure> {
    let config = build_config(args, false)?;
    let report = if args.sampling.exact {
        exact_bell(&config)
    } else {
        estimate_bell(&config, args.sampling.samples, args.sampling.workers)
    }
    .map_err(|e| invalid(e.to_string()))?;
    let mut out = String::new();
    header(&mut out, &config, &args.sampling, "bell");
    let eta = report.efficiency.ok_or_else(|| degenerate("Alice never detected; efficiency undefined"))?;
    let _ = writeln!(out, "efficiency: {}", format_sig9(eta));
    if let Some(w) = report.stats.preselection_weight() {
        let _ = writeln!(out, "preselection_weight: {}", format_sig9(w));
    }
    for i in 0..2 {
        for j in 0..2 {
            match report.stats.correlation(i, j) {
                Ok(e) => {
                    let _ = writeln!(out, "E(a{},b{}): {}", i + 1, j + 1, pm(e.value, e.stderr));
                }
                Err(e) => return Err(degenerate(e.to_string())),
            }
        }
    }
    let s = report.chsh.map_err(|e| degenerate(e.to_string()))?;
    let _ = writeln!(out, "S: {}", pm(s.value, s.stderr));
    let _ = writeln!(out, "|S|: {}", format_sig9(s.value.abs()));
    if let Some(path) = &args.out {
        summary_csv(path, &config, eta, s.value.abs(), s.stderr, report.stats.samples())?;
    }
    Ok(out)
}

fn run_steer(args: &RunArgs) -> Result<String, Failure> {
    let config = build_config(args, true)?;
    let report = if args.sampling.exact {
        exact_steering(&config)
    } else {
        estimate_steering(&config, args.sampling.samples, args.sampling.workers)
    }
    .map_err(|e| invalid(e.to_string()))?;
    let mut out = String::new();
    header(&mut out, &config, &args.sampling, "steering");
    let eta = report.efficiency.ok_or_else(|| degenerate("Alice never detected; efficiency undefined"))?;
    let _ = writeln!(out, "efficiency: {}", format_sig9(eta));
    if let Some(rate) = report.registration_rate {
        let _ = writeln!(out, "bob_registration_rate: {}", format_sig9(rate));
        if config.kind == ModelKind::NCopySteering {
            let unanimity = rate * config.angles.bob.len() as f64;
            let _ = writeln!(out, "unanimity_rate: {}", format_sig9(unanimity));
        }
    }
    if let Some(w) = report.stats.preselection_weight() {
        let _ = writeln!(out, "preselection_weight: {}", format_sig9(w));
    }
    for j in 0..config.angles.bob.len() {
        match report.stats.correlation(j, j) {
            Ok(e) => {
                let _ = writeln!(out, "E(a{0},b{0}): {1}", j + 1, pm(e.value, e.stderr));
            }
            Err(_) => {
                let _ = writeln!(out, "E(a{0},b{0}): undefined", j + 1);
            }
        }
    }
    let empty: Vec<String> =
        report.stats.empty_steering_bins().iter().map(|(j, a)| format!("a{}={}", j + 1, a.value())).collect();
    if !empty.is_empty() {
        let _ = writeln!(out, "empty_bins: {}", empty.join(","));
    }
    let t = report.steering_t.map_err(|e| degenerate(e.to_string()))?;
    let _ = writeln!(out, "T: {}", pm(t.value, t.stderr));
    if let Some(path) = &args.out {
        summary_csv(path, &config, eta, t.value, t.stderr, report.stats.samples())?;
    }
    Ok(out)
}

fn run_qubit(args: &QubitArgs) -> Result<String, Failure> {
    for (flag, v) in [("--omega", args.omega), ("--t-a", args.t_a), ("--t-b", args.t_b)] {
        if !v.is_finite() {
            return Err(invalid(format!("{flag} must be finite")));
        }
    }
    let n = match args.n_copies {
        Copies::Finite(n) => n,
        Copies::Infinite => return Err(invalid("--n-copies must be finite for qubit")),
    };
    let sequential = sequential_qubit_probability(args.t_a, args.t_b, args.omega)
        .map_err(|e| invalid(format!("--t-a/--t-b: {e}")))?;
    let copies =
        qubit_copies_joint(args.t_a, args.t_b, args.omega, n).map_err(|e| invalid(format!("--n-copies: {e}")))?;
    let mut out = String::new();
    let _ = writeln!(out, "beta gamma sequential copies");
    for beta in [1, 0] {
        for gamma in [1, 0] {
            let _ = writeln!(out, "{beta} {gamma} {:.9} {:.9}", sequential.p(beta, gamma), copies.p(beta, gamma));
        }
    }
    let _ = writeln!(
        out,
        "p(gamma=1): sequential {:.9} copies {:.9}",
        sequential.marginal_gamma(1),
        copies.marginal_gamma(1)
    );
    Ok(out)
}

fn parse_copies_list(text: &str) -> Result<Vec<Copies>, Failure> {
    let bad = || invalid(format!("--n-copies: invalid list `{text}`"));
    let mut list = Vec::new();
    for item in text.split(',').map(str::trim) {
        if let Some((lo, hi)) = item.split_once('-') {
            let lo: u32 = lo.trim().parse().map_err(|_| bad())?;
            let hi: u32 = hi.trim().parse().map_err(|_| bad())?;
            if lo == 0 || lo > hi {
                return Err(bad());
            }
            list.extend((lo..=hi).map(Copies::Finite));
        } else {
            list.push(item.parse().map_err(|_| bad())?);
        }
    }
    list.sort();
    list.dedup();
    Ok(list)
}

fn sweep_settings(sampling: &SamplingArgs, q_grid: Vec<f64>) -> SweepSettings {
    SweepSettings {
        q_grid,
        estimation: if sampling.exact {
            Estimation::Exact
        } else {
            Estimation::MonteCarlo { samples: sampling.samples }
        },
        seed: sampling.seed,
        workers: sampling.workers,
    }
}

fn run_curves(args: &CurveArgs) -> Result<String, Failure> {
    check_sampling(&args.sampling)?;
    let copies = match args.model {
        ModelKind::ChaoticBall => vec![Copies::Infinite],
        ModelKind::NCopyTomography => parse_copies_list(&args.n_copies)?,
        other => return Err(invalid(format!("--model {other} has no deadzone curve; use ncopy-tomography"))),
    };
    let q_grid = args.q.clone().unwrap_or_else(default_q_grid);
    if q_grid.is_empty() {
        return Err(invalid("--q needs at least one value"));
    }
    for &q in &q_grid {
        check_q(q)?;
    }
    let settings = sweep_settings(&args.sampling, q_grid);
    let mut curves: Vec<Curve> = Vec::with_capacity(copies.len());
    for n in copies {
        let curve = sweep_curve(args.kind, n, &settings).map_err(|e| invalid(e.to_string()))?;
        if curve.points.is_empty() {
            return Err(degenerate(format!("curve N={n} has no point with coincidences on every setting pair")));
        }
        for q in &curve.degenerate_q {
            eprintln!("warning: N={n} q={} skipped: a setting pair has no coincidences", format_sig9(*q));
        }
        curves.push(curve);
    }
    let points: Vec<CurvePoint> = curves.iter().flat_map(|c| c.points.iter().copied()).collect();
    if let Some(path) = &args.svg {
        write_curve_svg(&curves, path).map_err(io_failure)?;
    }
    match &args.out {
        Some(path) => {
            write_curve_csv(&points, path).map_err(io_failure)?;
            Ok(format!("wrote {} rows to {}\n", points.len(), path.display()))
        }
        None => curve_csv(&points).map_err(io_failure),
    }
}

fn run_causality(args: &CausalityArgs) -> Result<String, Failure> {
    let text =
        std::fs::read_to_string(&args.scenario).map_err(|e| invalid(format!("{}: {e}", args.scenario.display())))?;
    let scenario: CausalScenario = text.parse().map_err(|e| invalid(format!("{}: {e}", args.scenario.display())))?;
    let signature = readout_signature(&scenario).map_err(|e| invalid(e.to_string()))?;
    Ok(signature.to_string())
}

fn run_oracle(args: &OracleArgs) -> Result<String, Failure> {
    let mut out = String::new();
    let mut failed = 0;
    for check in oracle_suite(args.seed) {
        let status = if check.passed() { "PASS" } else { "FAIL" };
        failed += usize::from(!check.passed());
        let _ =
            writeln!(out, "{status} {} (max dev {:.3e}, tol {:.0e})", check.name, check.max_abs_dev, check.tolerance);
    }
    if failed > 0 {
        print!("{out}");
        return Err(Failure { status: 1, message: format!("{failed} oracle check(s) failed") });
    }
    Ok(out)
}

fn run_min_copies(args: &MinCopiesArgs) -> Result<String, Failure> {
    check_sampling(&args.sampling)?;
    if !args.value.is_finite() {
        return Err(invalid("--value must be finite"));
    }
    if !(args.eta > 0.0 && args.eta <= 1.0) {
        return Err(invalid(format!("--eta must lie in (0, 1], got {}", args.eta)));
    }
    if args.n_max == 0 {
        return Err(invalid("--n-max must be at least 1"));
    }
    let settings = sweep_settings(&args.sampling, default_q_grid());
    let frontier = Frontier::sweep(args.kind, args.n_max, &settings).map_err(|e| invalid(e.to_string()))?;
    Ok(match min_copies(args.value, args.eta, &frontier) {
        Some(n) => format!("{n}\n"),
        None => "none\n".to_string(),
    })
}
