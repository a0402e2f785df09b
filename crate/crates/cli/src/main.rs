//! `waning` — command-line front end for the two-period waning tests.
//!
//! Machine-readable output only: TestResult JSON on stdout, CSV/SVG to files
//! or stdout. Every randomized subcommand takes `--seed` and defaults to 42,
//! so runs are reproducible by default. Exit codes: 0 success, 1 data error,
//! 2 usage error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use waning_core::{
    aggregate, bootstrap_ir_test, curve_to_csv, curve_to_svg, emit_plot, emit_table, hr_ratio_test,
    ir_ratio_test_opts, read_records_csv, run_hr_power_grid, run_power_grid, simulate_trial,
    stratified_report, ve2_bound_curve, write_records_csv, AdjustMethod, BootstrapOptions,
    BoundOptions, DeltaMethod, Mode, PowerGrid, SimConfig, StratifiedSummary, StratumDist,
    TestResult, TrialSummary, DEFAULT_SEED,
};

#[derive(Parser)]
#[command(
    name = "waning",
    about = "Tests of vaccine-efficacy waning from two-period trial data",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    DirectDelta,
    ConservativeDelta,
}

impl From<MethodArg> for DeltaMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::DirectDelta => DeltaMethod::Direct,
            MethodArg::ConservativeDelta => DeltaMethod::Conservative,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AdjustArg {
    BenjaminiHochberg,
    HochbergSimes,
}

impl From<AdjustArg> for AdjustMethod {
    fn from(m: AdjustArg) -> Self {
        match m {
            AdjustArg::BenjaminiHochberg => AdjustMethod::BenjaminiHochberg,
            AdjustArg::HochbergSimes => AdjustMethod::HochbergSimes,
        }
    }
}

#[derive(Args)]
struct TestArgs {
    /// Trial summary JSON
    #[arg(long, conflicts_with = "records")]
    summary: Option<PathBuf>,
    /// Individual records CSV (header `arm,outcome`)
    #[arg(long, required_unless_present = "summary")]
    records: Option<PathBuf>,
    /// Use the nonparametric bootstrap (requires --records)
    #[arg(long, requires = "records", conflicts_with = "method")]
    bootstrap: bool,
    /// Delta-method variance construction
    #[arg(long, value_enum, default_value = "direct-delta")]
    method: MethodArg,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Bootstrap resamples
    #[arg(long, default_value_t = 1000)]
    b: u32,
    /// RNG seed for randomized analyses (default 42)
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Resample within arms instead of the pooled record set
    #[arg(long, requires = "bootstrap")]
    stratified_bootstrap: bool,
    /// Add 0.5 to every event cell (lifts zero-cell errors)
    #[arg(long, conflicts_with = "bootstrap")]
    continuity: bool,
    /// Pretty-print the output JSON
    #[arg(long)]
    pretty: bool,
}

#[derive(Args)]
struct HrTestArgs {
    /// Individual records CSV
    #[arg(long)]
    records: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 1000)]
    b: u32,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    pretty: bool,
}

#[derive(Args)]
struct BoundArgs {
    /// Trial summary JSON
    #[arg(long)]
    summary: PathBuf,
    /// Comma-separated ascending p12 values in [0,1]
    #[arg(long, value_delimiter = ',', required = true)]
    p12_grid: Vec<f64>,
    /// Records CSV; switches the confidence band to the bootstrap
    #[arg(long)]
    records: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 1000)]
    b: u32,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Curve CSV destination (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write an SVG chart here
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Simulator config JSON
    #[arg(long)]
    config: PathBuf,
    /// Records CSV destination (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PowerArgs {
    /// Power grid JSON
    #[arg(long)]
    grid: PathBuf,
    /// Stratum distribution JSON
    #[arg(long)]
    dist: PathBuf,
    /// Table CSV destination (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write an SVG chart here
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct StratifiedArgs {
    /// Stratified summary JSON: {"strata": {"<label>": <summary>, ...}}
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "direct-delta")]
    method: MethodArg,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "benjamini-hochberg")]
    adjust: AdjustArg,
    /// Report CSV destination (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Test IR1 = IR2 on a summary (delta method) or records (bootstrap)
    Test(TestArgs),
    /// Bootstrap test of HR1 = HR2 — biased for waning, for comparison only
    HrTest(HrTestArgs),
    /// Upper bound on period-2 efficacy over a grid of p12 values
    Bound(BoundArgs),
    /// Simulate a principal-strata trial to records CSV
    Simulate(SimulateArgs),
    /// Rejection-rate grid for the incidence-ratio tests
    Power(PowerArgs),
    /// Rejection-rate grid for the hazard-ratio test
    HrPower(PowerArgs),
    /// Per-stratum tests with multiple-testing adjustment and a pooled row
    Stratified(StratifiedArgs),
}

type CliResult = Result<(), String>;

fn read_to_string(path: &PathBuf) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_output(path: &Option<PathBuf>, content: &str) -> CliResult {
    match path {
        Some(p) => fs::write(p, content).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn load_records(path: &PathBuf) -> Result<Vec<waning_core::IndividualRecord>, String> {
    let file = fs::File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    read_records_csv(file).map_err(|e| e.to_string())
}

fn print_result(result: &TestResult, pretty: bool) {
    let text = if pretty {
        serde_json::to_string_pretty(result)
    } else {
        serde_json::to_string(result)
    }
    .expect("result serializes");
    println!("{text}");
}

fn cmd_test(args: &TestArgs) -> CliResult {
    let result = if args.bootstrap {
        let records = load_records(args.records.as_ref().unwrap())?;
        let opts = BootstrapOptions {
            replicates: args.b,
            alpha: args.alpha,
            seed: args.seed,
            stratified: args.stratified_bootstrap,
        };
        bootstrap_ir_test(&records, &opts).map_err(|e| e.to_string())?
    } else {
        let summary = match (&args.summary, &args.records) {
            (Some(path), _) => {
                TrialSummary::parse_json(&read_to_string(path)?).map_err(|e| e.to_string())?
            }
            (None, Some(path)) => aggregate(&load_records(path)?).map_err(|e| e.to_string())?,
            (None, None) => unreachable!("clap enforces one input"),
        };
        ir_ratio_test_opts(&summary, args.method.into(), args.alpha, args.continuity)
            .map_err(|e| e.to_string())?
    };
    print_result(&result, args.pretty);
    Ok(())
}

fn cmd_hr_test(args: &HrTestArgs) -> CliResult {
    let records = load_records(&args.records)?;
    let opts = BootstrapOptions {
        replicates: args.b,
        alpha: args.alpha,
        seed: args.seed,
        stratified: false,
    };
    let result = hr_ratio_test(&records, &opts).map_err(|e| e.to_string())?;
    eprintln!(
        "warning: the hazard-ratio comparison is biased under differential \
         depletion and must not be used to conclude waning"
    );
    print_result(&result, args.pretty);
    Ok(())
}

fn cmd_bound(args: &BoundArgs) -> CliResult {
    let summary =
        TrialSummary::parse_json(&read_to_string(&args.summary)?).map_err(|e| e.to_string())?;
    let records = match &args.records {
        Some(path) => Some(load_records(path)?),
        None => None,
    };
    let opts = BoundOptions {
        alpha: args.alpha,
        replicates: args.b,
        seed: args.seed,
    };
    let curve = ve2_bound_curve(&summary, &args.p12_grid, &opts, records.as_deref())
        .map_err(|e| e.to_string())?;
    if summary.mode() == Mode::PersonTime {
        eprintln!(
            "note: person-time denominators; the bound algebra is exact for \
             proportions, so these values are approximate"
        );
    }
    write_output(&args.out, &curve_to_csv(&curve))?;
    if let Some(svg_path) = &args.svg {
        write_output(&Some(svg_path.clone()), &curve_to_svg(&curve))?;
    }
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> CliResult {
    let config: SimConfig =
        serde_json::from_str(&read_to_string(&args.config)?).map_err(|e| format!("config: {e}"))?;
    let records = simulate_trial(&config).map_err(|e| e.to_string())?;
    let mut buf = Vec::new();
    write_records_csv(&records, &mut buf).map_err(|e| e.to_string())?;
    write_output(&args.out, &String::from_utf8(buf).expect("csv is utf-8"))
}

fn cmd_power(args: &PowerArgs, hr: bool) -> CliResult {
    let grid: PowerGrid =
        serde_json::from_str(&read_to_string(&args.grid)?).map_err(|e| format!("grid: {e}"))?;
    let dist: StratumDist =
        serde_json::from_str(&read_to_string(&args.dist)?).map_err(|e| format!("dist: {e}"))?;
    let cells = if hr {
        run_hr_power_grid(&grid, &dist)
    } else {
        run_power_grid(&grid, &dist)
    }
    .map_err(|e| e.to_string())?;
    write_output(&args.out, &emit_table(&cells).map_err(|e| e.to_string())?)?;
    if let Some(svg_path) = &args.svg {
        let svg = emit_plot(&cells).map_err(|e| e.to_string())?;
        write_output(&Some(svg_path.clone()), &svg)?;
    }
    Ok(())
}

fn cmd_stratified(args: &StratifiedArgs) -> CliResult {
    let stratified =
        StratifiedSummary::parse_json(&read_to_string(&args.input)?).map_err(|e| e.to_string())?;
    let report = stratified_report(
        &stratified,
        args.method.into(),
        args.alpha,
        args.adjust.into(),
    )
    .map_err(|e| e.to_string())?;
    write_output(&args.out, &report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Test(args) => cmd_test(args),
        Command::HrTest(args) => cmd_hr_test(args),
        Command::Bound(args) => cmd_bound(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Power(args) => cmd_power(args, false),
        Command::HrPower(args) => cmd_power(args, true),
        Command::Stratified(args) => cmd_stratified(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
