use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use drbound::entropic::{one_shot_upper_bound, upper_bound_min, upsilon_a, upsilon_b, upsilon_bound, FwConfig};
use drbound::io::{bound_to_json, read_state};
use drbound::measures::{beta_a, beta_b, gamma_heuristic, BoundResult, GammaOptions};
use drbound::suite::run_suite;
use drbound::sweep::{sweep_isotropic, PGrid, SweepConfig, SweepMethod};
use drbound::{Error, Subsystem};

const EXIT_INPUT: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_VIOLATION: u8 = 3;

#[derive(Parser)]
#[command(name = "drbound", version, about = "Upper and lower bounds on the distillable randomness of bipartite states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bounds along the isotropic family (1-p) Phi + p I/d^2.
    SweepIsotropic(SweepArgs),
    /// One bound for a state read from a JSON file.
    Bound(BoundArgs),
    /// Run the randomized property suite.
    CheckProperties(CheckArgs),
}

#[derive(Args)]
struct FwArgs {
    /// Frank-Wolfe iteration cap.
    #[arg(long, default_value_t = 500)]
    fw_max_iters: usize,
    /// Stop once the Frank-Wolfe gap is below this many bits.
    #[arg(long, default_value_t = 1e-4)]
    fw_gap_tol: f64,
    /// Support guard: iterates satisfy sigma >= mu rho.
    #[arg(long, default_value_t = 1e-8)]
    mu: f64,
}

impl FwArgs {
    fn config(&self) -> FwConfig {
        FwConfig {
            max_iters: self.fw_max_iters,
            gap_tol_bits: self.fw_gap_tol,
            mu: self.mu,
            ..FwConfig::default()
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 0.0)]
    p_start: f64,
    #[arg(long, default_value_t = 1.0)]
    p_stop: f64,
    #[arg(long, default_value_t = 0.05)]
    p_step: f64,
    /// Comma-separated subset of upsilonA, upsilonB, holevo, betaDiag.
    #[arg(long, value_delimiter = ',', default_value = "upsilonA,upsilonB,holevo")]
    methods: Vec<String>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
    /// Worker threads over grid points; numbers do not depend on it.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Also write a gnuplot script plotting the CSV given by --out.
    #[arg(long)]
    gnuplot: Option<PathBuf>,
    #[command(flatten)]
    fw: FwArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundMethod {
    #[value(name = "upsilonA")]
    UpsilonA,
    #[value(name = "upsilonB")]
    UpsilonB,
    #[value(name = "min")]
    Min,
    #[value(name = "betaA")]
    BetaA,
    #[value(name = "betaB")]
    BetaB,
    #[value(name = "gamma")]
    Gamma,
    #[value(name = "oneshot")]
    OneShot,
}

#[derive(Args)]
struct BoundArgs {
    /// State file: {"dA": .., "dB": .., "matrix": [[[re, im], ..], ..]}.
    #[arg(long)]
    state: PathBuf,
    #[arg(long, value_enum)]
    method: BoundMethod,
    /// Error tolerance of the one-shot bound.
    #[arg(long)]
    eps: Option<f64>,
    /// Renyi order of the one-shot bound.
    #[arg(long)]
    alpha: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    fw: FwArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, value_enum, default_value = "text")]
    format: ReportFormat,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Append a deliberately corrupted certificate as a negative control.
    #[arg(long)]
    inject_corrupted: bool,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::SolverFailure { .. } | Error::SingularLog => EXIT_SOLVER,
            Error::ViolationDetected(_) => EXIT_VIOLATION,
            _ => EXIT_INPUT,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::input(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn sweep(args: &SweepArgs) -> Result<u8, Failure> {
    let methods = args
        .methods
        .iter()
        .map(|m| m.trim().parse::<SweepMethod>())
        .collect::<Result<BTreeSet<_>, _>>()?;
    let cfg = SweepConfig {
        d: args.d,
        grid: PGrid {
            start: args.p_start,
            stop: args.p_stop,
            step: args.p_step,
        },
        methods,
        fw: args.fw.config(),
        jobs: args.jobs,
    };
    let out = sweep_isotropic(&cfg)?;
    let text = match args.format {
        OutputFormat::Csv => out.to_csv(),
        OutputFormat::Json => out.to_json(),
    };
    emit(args.out.as_deref(), &text)?;
    if let Some(gp) = &args.gnuplot {
        let csv = args
            .out
            .as_ref()
            .filter(|_| matches!(args.format, OutputFormat::Csv))
            .ok_or_else(|| Failure::input("--gnuplot needs --out with --format csv"))?;
        emit(Some(gp), &out.gnuplot_script(&csv.display().to_string()))?;
    }
    for row in out.rows.iter().filter(|r| !r.errors.is_empty()) {
        eprintln!("p = {}: {}", row.p, row.errors.join("; "));
    }
    Ok(if out.any_failure() { EXIT_SOLVER } else { 0 })
}

fn compute_bound(args: &BoundArgs) -> Result<BoundResult, Failure> {
    let rho = read_state(&args.state)?;
    let fw = args.fw.config();
    let r = match args.method {
        BoundMethod::UpsilonA => upsilon_bound(&upsilon_a(&rho, &fw)?),
        BoundMethod::UpsilonB => upsilon_bound(&upsilon_b(&rho, &fw)?),
        BoundMethod::Min => upper_bound_min(&rho, &fw)?,
        BoundMethod::BetaA => beta_a(rho.bip(), rho.marginal(Subsystem::A).op())?,
        BoundMethod::BetaB => beta_b(rho.bip(), rho.marginal(Subsystem::B).op())?,
        BoundMethod::Gamma => gamma_heuristic(rho.bip(), &GammaOptions::default())?,
        BoundMethod::OneShot => {
            let (Some(eps), Some(alpha)) = (args.eps, args.alpha) else {
                return Err(Failure::input("method oneshot needs --eps and --alpha"));
            };
            one_shot_upper_bound(&rho, eps, alpha, &fw)?
        }
    };
    Ok(r)
}

fn bound(args: &BoundArgs) -> Result<u8, Failure> {
    let r = compute_bound(args)?;
    emit(args.out.as_deref(), &(bound_to_json(&r) + "\n"))?;
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    if !r.certified {
        eprintln!("certificate failed independent verification");
        return Ok(EXIT_SOLVER);
    }
    Ok(0)
}

fn check(args: &CheckArgs) -> Result<u8, Failure> {
    if args.trials == 0 {
        return Err(Failure::input("--trials must be at least 1"));
    }
    let report = run_suite(args.seed, args.trials, args.inject_corrupted);
    let text = match args.format {
        ReportFormat::Text => report.to_text(),
        ReportFormat::Json => report.to_json(),
    };
    emit(args.out.as_deref(), &text)?;
    if report.passed() {
        Ok(0)
    } else {
        eprintln!("property violations: {}", report.failing().join(", "));
        Ok(EXIT_VIOLATION)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage errors are input errors; clap's own default would be 2
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::SweepIsotropic(a) => sweep(a),
        Command::Bound(a) => bound(a),
        Command::CheckProperties(a) => check(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
