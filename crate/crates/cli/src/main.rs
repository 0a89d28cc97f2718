use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use strata_alloc::tables;
use strata_core::allocator::{classical_sample_size, optimal_allocation, Method};
use strata_core::estimator::{estimate_report, EstimateReport};
use strata_core::montecarlo::{run_simulation, SimulationConfig, SimulationResult};
use strata_core::population::{Allocation, CostModel, StratifiedDesign, SurveyOutcome, TrueState};

#[derive(Parser)]
#[command(
    name = "strata-alloc",
    version,
    about = "Plan, estimate, and simulate two-stratum survey designs under a cost constraint"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find the minimax sample allocation for a budget.
    Plan(PlanArgs),
    /// Turn observed counts into estimates, variances, and the reduction.
    Estimate(EstimateArgs),
    /// Regenerate the reference tables as CSV or JSON.
    Tables(TablesArgs),
    /// Run a seeded sampling experiment and check it against the design
    /// variance.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct PlanArgs {
    /// Units in stratum 1.
    #[arg(long)]
    n1_pop: u64,
    /// Units in stratum 2.
    #[arg(long)]
    n2_pop: u64,
    /// Cost of sampling one stratum-1 unit.
    #[arg(long)]
    c1: f64,
    /// Cost of sampling one stratum-2 unit.
    #[arg(long)]
    c2: f64,
    /// Total sampling budget.
    #[arg(long)]
    budget: f64,
    /// Grid resolution of the worst-case search over the overall fraction.
    #[arg(long, default_value_t = 1000)]
    grid: u32,
    /// Write the report to this path instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Units in stratum 1.
    #[arg(long)]
    n1_pop: u64,
    /// Units in stratum 2.
    #[arg(long)]
    n2_pop: u64,
    /// Stratum-1 sample size.
    #[arg(long)]
    n1: u64,
    /// Stratum-2 sample size.
    #[arg(long)]
    n2: u64,
    /// Positive answers in the stratum-1 sample.
    #[arg(long)]
    xi1: u64,
    /// Positive answers in the stratum-2 sample.
    #[arg(long)]
    xi2: u64,
    /// Classical sample size, when a single-sample design is compared.
    #[arg(long, requires = "xi")]
    nc: Option<u64>,
    /// Positive answers in the classical sample.
    #[arg(long, requires = "nc")]
    xi: Option<u64>,
    /// Write the report to this path instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TablesArgs {
    /// Table numbers to regenerate.
    #[arg(long, value_delimiter = ',', default_values_t = [1u8, 2, 3, 4, 5, 6])]
    tables: Vec<u8>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Annotate each row with the printed reference values and deviations.
    #[arg(long)]
    compare_paper: bool,
    /// Write the output to this path instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Units in stratum 1.
    #[arg(long)]
    n1_pop: u64,
    /// Units in stratum 2.
    #[arg(long)]
    n2_pop: u64,
    /// Stratum-1 sample size.
    #[arg(long)]
    n1: u64,
    /// Stratum-2 sample size.
    #[arg(long)]
    n2: u64,
    /// True stratum-1 fraction; snapped to the nearest attribute count.
    #[arg(long)]
    theta1: f64,
    /// True stratum-2 fraction; snapped to the nearest attribute count.
    #[arg(long)]
    theta2: f64,
    /// Number of replicates.
    #[arg(long, default_value_t = 100_000)]
    replicates: u64,
    /// Seed of the replicate substreams.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also draw a classical sample of this size each replicate.
    #[arg(long)]
    nc: Option<u64>,
    /// Write the report to this path instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Failures split by exit code: invalid input or an infeasible request
/// exits 2, anything internal exits 1.
enum CliError {
    Invalid(String),
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(msg) | CliError::Internal(msg) => f.write_str(msg),
        }
    }
}

impl From<strata_core::Error> for CliError {
    fn from(e: strata_core::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

#[derive(Serialize)]
struct PlanReport {
    design: StratifiedDesign,
    cost: CostModel,
    /// Classical single-sample size the same budget buys.
    n_c: u64,
    n1: u64,
    n2: u64,
    worst_theta: f64,
    worst_variance: f64,
    method: Method,
    closed_form_value: Option<f64>,
    w1_star: f64,
}

#[derive(Serialize)]
struct EstimateOutput {
    design: StratifiedDesign,
    alloc: Allocation,
    #[serde(flatten)]
    report: EstimateReport,
}

#[derive(Serialize)]
struct TablesOutput<R> {
    tables: Vec<tables::TableReport<R>>,
}

#[derive(Serialize)]
struct SimChecks {
    /// Empirical mean within three standard errors of the truth.
    mean_within_3se: bool,
    /// Empirical variance within 3% of the exact design variance (equal to
    /// zero when the design variance is zero).
    var_within_3pct: bool,
}

#[derive(Serialize)]
struct SimulateOutput {
    config: SimulationConfig,
    result: SimulationResult,
    checks: SimChecks,
    verdict: &'static str,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Plan(args) => cmd_plan(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Tables(args) => cmd_tables(args),
        Command::Simulate(args) => cmd_simulate(args),
    }
}

fn cmd_plan(args: PlanArgs) -> Result<(), CliError> {
    let design = StratifiedDesign::new(args.n1_pop, args.n2_pop)?;
    let cost = CostModel::new(args.c1, args.c2, args.budget)?;
    let n_c = classical_sample_size(&design, &cost)?;
    let found = optimal_allocation(&design, &cost, args.grid)?;
    let report = PlanReport {
        design,
        cost,
        n_c,
        n1: found.alloc.n1,
        n2: found.alloc.n2,
        worst_theta: found.worst_theta,
        worst_variance: found.worst_variance,
        method: found.method,
        closed_form_value: found.closed_form_value,
        w1_star: found.w1_star,
    };
    emit(&to_json(&report)?, args.out.as_deref())
}

fn cmd_estimate(args: EstimateArgs) -> Result<(), CliError> {
    let design = StratifiedDesign::new(args.n1_pop, args.n2_pop)?;
    let alloc = Allocation::new(args.n1, args.n2)?;
    if alloc.n1 > design.n1_pop || alloc.n2 > design.n2_pop {
        return Err(CliError::Invalid(format!(
            "allocation ({}, {}) exceeds stratum sizes ({}, {})",
            alloc.n1, alloc.n2, design.n1_pop, design.n2_pop
        )));
    }
    let outcome = SurveyOutcome {
        xi1: args.xi1,
        xi2: args.xi2,
        xi: args.xi,
    };
    let report = estimate_report(outcome, alloc, &design, args.nc)?;
    let output = EstimateOutput {
        design,
        alloc,
        report,
    };
    emit(&to_json(&output)?, args.out.as_deref())
}

fn cmd_tables(args: TablesArgs) -> Result<(), CliError> {
    let mut numbers: Vec<u8> = Vec::new();
    for n in &args.tables {
        if tables::spec(*n).is_none() {
            return Err(CliError::Invalid(format!("no table {n}; choose from 1..6")));
        }
        if !numbers.contains(n) {
            numbers.push(*n);
        }
    }
    let text = if args.compare_paper {
        let reports = numbers
            .iter()
            .map(|n| tables::compared(tables::spec(*n).expect("validated above")))
            .collect::<Result<Vec<_>, _>>()?;
        match args.format {
            Format::Csv => tables::to_csv_compared(&reports),
            Format::Json => to_json(&TablesOutput { tables: reports })?,
        }
    } else {
        let reports = numbers
            .iter()
            .map(|n| tables::regenerate(tables::spec(*n).expect("validated above")))
            .collect::<Result<Vec<_>, _>>()?;
        match args.format {
            Format::Csv => tables::to_csv(&reports),
            Format::Json => to_json(&TablesOutput { tables: reports })?,
        }
    };
    emit(&text, args.out.as_deref())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let design = StratifiedDesign::new(args.n1_pop, args.n2_pop)?;
    let alloc = Allocation::new(args.n1, args.n2)?;
    let truth = TrueState::from_fractions(args.theta1, args.theta2, &design)?;
    let config = SimulationConfig::new(design, alloc, truth, args.replicates, args.seed, args.nc)?;
    let result = run_simulation(&config)?;
    let checks = SimChecks {
        mean_within_3se: (result.mean_w - config.truth.theta).abs() <= 3.0 * result.se_mean_w,
        var_within_3pct: if result.analytic_var_w > 0.0 {
            (result.var_w / result.analytic_var_w - 1.0).abs() <= 0.03
        } else {
            result.var_w == 0.0
        },
    };
    let verdict = if checks.mean_within_3se && checks.var_within_3pct {
        "pass"
    } else {
        "fail"
    };
    let output = SimulateOutput {
        config,
        result,
        checks,
        verdict,
    };
    emit(&to_json(&output)?, args.out.as_deref())
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => {
            std::fs::write(path, text)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}
