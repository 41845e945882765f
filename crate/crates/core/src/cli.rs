//! Command implementations behind the `coopdef` binary.
//!
//! Exit status: 0 on success, 1 on any input or configuration error, 2 when
//! `evaluate` finds the system penetration probability above the threshold.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analytic::{penetration_system_with, LoadModel, PenetrationReport, DEFAULT_THRESHOLD};
use crate::assignment::compute_assignment;
use crate::scenario::{load_scenario_file, ModeKind, Scenario};
use crate::simulator::{simulate, QueueMode, SimConfig, Spacing};
use crate::sweep::{preset, run_sweep, SweepSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_BREACHED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "coopdef", version, about = "Cooperative air-defense penetration evaluator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic penetration report for one scenario.
    Evaluate(EvaluateArgs),
    /// Monte-Carlo estimate of the same report.
    Simulate(SimulateArgs),
    /// Parameter sweep from a preset or a JSON spec.
    Sweep(SweepArgs),
    /// Cooperative and independent modes side by side.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QueueModeArg {
    PerStream,
    Shared,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Write output here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Penetration threshold in (0, 1).
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Recorded post-warmup arrivals per stream.
    #[arg(long, default_value_t = 100_000)]
    pub arrivals: u64,
    #[arg(long, default_value_t = 1_000)]
    pub warmup: u64,
    #[arg(long, default_value_t = 1)]
    pub replications: u32,
    #[arg(long, value_enum, default_value = "per-stream")]
    pub queue_mode: QueueModeArg,
    /// Simulated arrivals per recorded one: a positive integer or `auto`.
    #[arg(long, default_value = "1")]
    pub spacing: Spacing,
}

impl SimArgs {
    fn config(&self) -> SimConfig {
        SimConfig {
            seed: self.seed,
            arrivals_per_stream: self.arrivals,
            warmup_arrivals: self.warmup,
            replications: self.replications,
            queue_mode: match self.queue_mode {
                QueueModeArg::PerStream => QueueMode::PerStream,
                QueueModeArg::Shared => QueueMode::Shared,
            },
            spacing: self.spacing,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub mode: Option<ModeKind>,
    /// `shared` evaluates each ship as one queue fed by all its streams.
    #[arg(long, value_enum, default_value = "per-stream")]
    pub queue_mode: QueueModeArg,
    /// Also write the assignment matrix as CSV.
    #[arg(long)]
    pub assignment_out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub mode: Option<ModeKind>,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    pub preset: Option<String>,
    /// JSON sweep spec file.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub with_simulation: bool,
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sweeps emit CSV only.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

/// Result of one invocation, kept in memory so tests can inspect it.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: Vec<u8>,
    pub stderr: String,
}

impl Outcome {
    fn error(message: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_ERROR,
            stdout: Vec::new(),
            stderr: format!("error: {message}\n"),
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => dispatch(cli),
        Err(e) => {
            let rendered = e.render().to_string();
            if e.use_stderr() {
                Outcome {
                    code: EXIT_ERROR,
                    stdout: Vec::new(),
                    stderr: rendered,
                }
            } else {
                Outcome {
                    code: EXIT_OK,
                    stdout: rendered.into_bytes(),
                    stderr: String::new(),
                }
            }
        }
    }
}

pub fn dispatch(cli: Cli) -> Outcome {
    let (out, result) = match cli.command {
        Command::Evaluate(a) => (a.common.out.clone(), cmd_evaluate(&a)),
        Command::Simulate(a) => (a.common.out.clone(), cmd_simulate(&a)),
        Command::Sweep(a) => (a.out.clone(), cmd_sweep(&a)),
        Command::Compare(a) => (a.common.out.clone(), cmd_compare(&a)),
    };
    let mut outcome = match result {
        Ok(o) => o,
        Err(message) => return Outcome::error(message),
    };
    if let Some(path) = out {
        if let Err(e) = std::fs::write(&path, &outcome.stdout) {
            return Outcome::error(format!("cannot write {}: {e}", path.display()));
        }
        outcome.stdout.clear();
    }
    outcome
}

fn check_threshold(t: f64) -> Result<(), String> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(format!("--threshold must lie in (0, 1), got {t}"))
    }
}

fn load(path: &PathBuf, mode: Option<ModeKind>) -> Result<Scenario, String> {
    let s = load_scenario_file(path).map_err(|e| e.to_string())?;
    match mode {
        Some(kind) => s.with_mode(kind).map_err(|e| e.to_string()),
        None => Ok(s),
    }
}

fn report_csv(reports: &[&PenetrationReport]) -> String {
    let mut out = reports[0].csv_header();
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

fn diagnostics_text(report: &PenetrationReport) -> String {
    let mut s = String::new();
    for d in &report.diagnostics {
        writeln!(s, "warning: {d}").unwrap();
    }
    s
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<Outcome, String> {
    check_threshold(args.common.threshold)?;
    let scenario = load(&args.scenario, args.mode)?;
    let assignment = compute_assignment(&scenario);
    if let Some(path) = &args.assignment_out {
        std::fs::write(path, assignment.to_csv(&scenario))
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    let load_model = match args.queue_mode {
        QueueModeArg::PerStream => LoadModel::PerStream,
        QueueModeArg::Shared => LoadModel::SharedShip,
    };
    let report = penetration_system_with(&scenario, &assignment, load_model, args.common.threshold);
    let stdout = match args.common.format {
        Format::Json => report.to_json() + "\n",
        Format::Csv => report_csv(&[&report]),
    };
    Ok(Outcome {
        code: if report.breached { EXIT_BREACHED } else { EXIT_OK },
        stdout: stdout.into_bytes(),
        stderr: diagnostics_text(&report),
    })
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Outcome, String> {
    check_threshold(args.common.threshold)?;
    let scenario = load(&args.scenario, args.mode)?;
    let assignment = compute_assignment(&scenario);
    let config = args.sim.config();
    let report = simulate(&scenario, &assignment, &config).map_err(|e| e.to_string())?;
    let stdout = match args.common.format {
        Format::Json => report.to_json() + "\n",
        Format::Csv => {
            let mut s = String::new();
            writeln!(s, "# scenario_sha256: {}", scenario.canonical_hash()).unwrap();
            writeln!(s, "# seed: {}", config.seed).unwrap();
            writeln!(s, "# version: {}", crate::VERSION).unwrap();
            s + &report.to_csv()
        }
    };
    let mut stderr = String::new();
    for &(i, j) in &report.censored {
        writeln!(
            stderr,
            "warning: stream ({}, {}) is unstable; reported as certain penetration",
            report.direction_ids[i], report.ship_ids[j]
        )
        .unwrap();
    }
    Ok(Outcome {
        code: EXIT_OK,
        stdout: stdout.into_bytes(),
        stderr,
    })
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<Outcome, String> {
    if args.format != Format::Csv {
        return Err("sweep output is CSV only".into());
    }
    let mut spec: SweepSpec = match (&args.preset, &args.spec) {
        (Some(name), None) => preset(name).map_err(|e| e.to_string())?,
        (None, Some(path)) => SweepSpec::from_file(path).map_err(|e| e.to_string())?,
        _ => return Err("give exactly one of --preset or --spec".into()),
    };
    if let Some(t) = args.threshold {
        check_threshold(t)?;
        spec.threshold = t;
    }
    if args.with_simulation {
        spec.with_simulation = true;
        spec.sim = args.sim.config();
    }
    let table = run_sweep(&spec).map_err(|e| e.to_string())?;
    Ok(Outcome {
        code: EXIT_OK,
        stdout: table.to_csv().into_bytes(),
        stderr: String::new(),
    })
}

#[derive(Serialize)]
struct Comparison<'a> {
    cooperative: &'a PenetrationReport,
    independent: &'a PenetrationReport,
    /// `cooperative.p_system - independent.p_system`.
    gap: f64,
}

pub fn cmd_compare(args: &CompareArgs) -> Result<Outcome, String> {
    check_threshold(args.common.threshold)?;
    let base = load(&args.scenario, None)?;
    let evaluate = |kind: ModeKind| -> Result<PenetrationReport, String> {
        let s = base.with_mode(kind).map_err(|e| e.to_string())?;
        let a = compute_assignment(&s);
        Ok(penetration_system_with(&s, &a, LoadModel::PerStream, args.common.threshold))
    };
    let coop = evaluate(ModeKind::Cooperative)?;
    let indep = evaluate(ModeKind::Independent)?;
    let gap = coop.p_system - indep.p_system;
    let stdout = match args.common.format {
        Format::Json => {
            let doc = Comparison {
                cooperative: &coop,
                independent: &indep,
                gap,
            };
            serde_json::to_string_pretty(&doc).expect("comparison serializes") + "\n"
        }
        Format::Csv => format!("# gap: {gap}\n") + &report_csv(&[&coop, &indep]),
    };
    Ok(Outcome {
        code: EXIT_OK,
        stdout: stdout.into_bytes(),
        stderr: diagnostics_text(&coop) + &diagnostics_text(&indep),
    })
}
