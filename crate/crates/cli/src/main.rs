//! Batch front end for the screening solver.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 a mechanism
//! failed verification.

mod config;
mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use config::RunConfig;
use screening::{
    benchmark_profits, oracle_endo, oracle_exo, pool_values, quantile_trace,
    recommendation_table, solve_endogenous, solve_exogenous, structure_profit, verify_mechanism,
    CostSpec, Dist, Mechanism, QuantilePartition, SolveOptions, SolveReport,
};

#[derive(Parser)]
#[command(name = "screening", version, about = "Joint information and menu design solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve with a fixed quality distribution.
    SolveExogenous(SolveArgs),
    /// Solve with a constant-elasticity production cost.
    SolveEndogenous(SolveArgs),
    /// Exhaustively enumerate partitions on a tiny grid.
    Oracle(OracleArgs),
    /// Verify a mechanism file against the configured model.
    Verify(VerifyArgs),
    /// Sweep the cost elasticity and tabulate profits and menu sizes.
    SweepEta(OutArgs),
    /// Write the equal-mass discretization of the configured distributions.
    Discretize(OracleArgs),
    /// Solve and write only the quantile-trace table.
    ExportTrace(SolveArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Override the configured grid size.
    #[arg(long)]
    grid: Option<usize>,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Disable the continuous polish.
    #[arg(long)]
    no_polish: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Args)]
struct OutArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    config: PathBuf,
    /// Mechanism file produced by a solve command.
    #[arg(long)]
    mechanism: PathBuf,
}

#[derive(Serialize)]
struct ReportEnvelope<'a> {
    schema_version: u32,
    model: &'static str,
    seed: u64,
    report: &'a SolveReport,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::SolveExogenous(args) => solve_command(args, Model::Exogenous, Emit::Everything),
        Command::SolveEndogenous(args) => solve_command(args, Model::Endogenous, Emit::Everything),
        Command::ExportTrace(args) => {
            let model = detect_model(&load_config(&args.config)?);
            solve_command(args, model, Emit::TraceOnly)
        }
        Command::Oracle(args) => oracle_command(args),
        Command::Verify(args) => verify_command(args),
        Command::SweepEta(args) => sweep_command(args),
        Command::Discretize(args) => discretize_command(args),
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Model {
    Exogenous,
    Endogenous,
}

#[derive(Clone, Copy, PartialEq)]
enum Emit {
    Everything,
    TraceOnly,
}

fn detect_model(config: &RunConfig) -> Model {
    match config.cost {
        CostSpec::Exogenous { .. } => Model::Exogenous,
        CostSpec::Elasticity { .. } => Model::Endogenous,
    }
}

fn load_config(path: &Path) -> Result<RunConfig, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let config: RunConfig = serde_json::from_str(&text)
        .map_err(|e| format!("config error in {}: {e}", path.display()))?;
    config
        .validate()
        .map_err(|e| format!("config error in {}: {e}", path.display()))?;
    Ok(config)
}

fn ensure_out_dir(dir: &Path) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))
}

fn apply_overrides(config: &RunConfig, args: &SolveArgs) -> SolveOptions {
    let mut opts = config.solve_options();
    if let Some(grid) = args.grid {
        opts.grid_n = grid;
    }
    if let Some(seed) = args.seed {
        opts.seed = seed;
    }
    if args.no_polish {
        opts.polish = false;
    }
    opts
}

fn solve_command(args: SolveArgs, model: Model, emit: Emit) -> Result<ExitCode, String> {
    let config = load_config(&args.config)?;
    let opts = apply_overrides(&config, &args);
    let f = &config.value_dist;
    let (report, model_name, quality): (SolveReport, &'static str, Option<&Dist>) =
        match (&config.cost, model) {
            (CostSpec::Exogenous { quality_dist }, Model::Exogenous) => (
                solve_exogenous(f, quality_dist, &opts).map_err(|e| e.to_string())?,
                "exogenous",
                Some(quality_dist),
            ),
            (CostSpec::Elasticity { eta }, Model::Endogenous) => (
                solve_endogenous(f, *eta, &opts).map_err(|e| e.to_string())?,
                "endogenous",
                None,
            ),
            (CostSpec::Exogenous { .. }, Model::Endogenous) => {
                return Err("solve-endogenous needs an elasticity cost block".into())
            }
            (CostSpec::Elasticity { .. }, Model::Exogenous) => {
                return Err("solve-exogenous needs an exogenous quality distribution".into())
            }
        };

    ensure_out_dir(&args.out)?;
    let write =
        |name: &str, text: String| output::write_text(&args.out.join(name), &text).map_err(io_msg);

    let trace = quantile_trace(f, quality, &report.mechanism, 1e-3).map_err(|e| e.to_string())?;
    write("trace.tsv", output::trace_tsv(&trace))?;

    if emit == Emit::Everything {
        let envelope = ReportEnvelope {
            schema_version: config::SCHEMA_VERSION,
            model: model_name,
            seed: opts.seed,
            report: &report,
        };
        output::write_json(&args.out.join("report.json"), &envelope).map_err(io_msg)?;
        output::write_json(&args.out.join("mechanism.json"), &report.mechanism)
            .map_err(io_msg)?;
        let rows = recommendation_table(&report.mechanism, f).map_err(|e| e.to_string())?;
        write("recommendations.tsv", output::recommendations_tsv(&rows))?;
    }

    let verdict = if report.verify.all_passed { "pass" } else { "FAIL" };
    println!(
        "{} items (K+ = {}), profit {:.12}, checks {}",
        report.mechanism.cells.len(),
        report.mechanism.k_positive,
        report.mechanism.profit,
        verdict
    );
    if report.verify.all_passed {
        Ok(ExitCode::SUCCESS)
    } else {
        for c in report.verify.checks.iter().filter(|c| !c.passed) {
            eprintln!("failed check {}: {}", c.name, c.detail);
        }
        Ok(ExitCode::from(2))
    }
}

fn io_msg(e: std::io::Error) -> String {
    format!("write failed: {e}")
}

fn oracle_command(args: OracleArgs) -> Result<ExitCode, String> {
    let config = load_config(&args.config)?;
    let n = args.grid.unwrap_or(config.solver.grid);
    let f = &config.value_dist;
    let fg = f.discretize(n).map_err(|e| e.to_string())?;
    let result = match &config.cost {
        CostSpec::Exogenous { quality_dist } => {
            let qg = quality_dist.discretize(n).map_err(|e| e.to_string())?;
            oracle_exo(&fg, &qg, true).map_err(|e| e.to_string())?
        }
        CostSpec::Elasticity { eta } => oracle_endo(&fg, *eta, true).map_err(|e| e.to_string())?,
    };
    ensure_out_dir(&args.out)?;
    let table = result.table.clone().unwrap_or_default();
    output::write_text(&args.out.join("oracle_table.tsv"), &output::oracle_table_tsv(&table))
        .map_err(io_msg)?;
    output::write_json(&args.out.join("oracle.json"), &result).map_err(io_msg)?;
    println!(
        "oracle optimum {:.12} with breakpoints {:?} and exclusion index {}",
        result.profit, result.breakpoints, result.exclusion_index
    );
    Ok(ExitCode::SUCCESS)
}

fn verify_command(args: VerifyArgs) -> Result<ExitCode, String> {
    let config = load_config(&args.config)?;
    let text = fs::read_to_string(&args.mechanism)
        .map_err(|e| format!("cannot read mechanism {}: {e}", args.mechanism.display()))?;
    let mechanism: Mechanism = serde_json::from_str(&text)
        .map_err(|e| format!("mechanism error in {}: {e}", args.mechanism.display()))?;
    let report = verify_mechanism(&mechanism, &config.value_dist, config.quality_dist());
    for c in &report.checks {
        let kind = if c.hard { "hard" } else { "flag" };
        let verdict = if c.passed { "pass" } else { "FAIL" };
        println!("{verdict} [{kind}] {}: {}", c.name, c.detail);
    }
    if report.hard_passed {
        println!("mechanism verified");
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(2))
    }
}

fn sweep_command(args: OutArgs) -> Result<ExitCode, String> {
    let config = load_config(&args.config)?;
    if !matches!(&config.cost, CostSpec::Elasticity { .. }) {
        return Err("sweep-eta needs an elasticity cost block".into());
    }
    let sweep = config
        .sweep
        .as_ref()
        .ok_or("sweep-eta needs a sweep block in the config")?;
    let etas = sweep.etas().map_err(|e| format!("config error: {e}"))?;
    let f = &config.value_dist;

    // fixed structure cells (g_k, w_k) from pooling f over the breakpoints
    let partition = QuantilePartition::all_pooled(sweep.structure_breakpoints.clone(), 0.0)
        .map_err(|e| e.to_string())?;
    let pooled = pool_values(f, &partition).map_err(|e| e.to_string())?;
    let cells: Vec<(f64, f64)> = partition
        .cells()
        .zip(pooled.pooled_levels().expect("all pooled"))
        .map(|((lo, hi, _), w)| (hi - lo, w))
        .collect();
    let opts = config.solve_options();

    let rows: Vec<output::SweepRow> = etas
        .par_iter()
        .map(|&eta| -> Result<output::SweepRow, String> {
            let (pi_pool, pi_disclose) = benchmark_profits(f, eta).map_err(|e| e.to_string())?;
            let pi_structure = structure_profit(&cells, eta).map_err(|e| e.to_string())?;
            let solved = solve_endogenous(f, eta, &opts).map_err(|e| e.to_string())?;
            Ok(output::SweepRow {
                eta,
                pi_structure,
                pi_pool,
                pi_disclose,
                solver_k_positive: solved.mechanism.k_positive,
                solver_profit: solved.mechanism.profit,
            })
        })
        .collect::<Result<_, _>>()?;

    ensure_out_dir(&args.out)?;
    output::write_text(&args.out.join("sweep.tsv"), &output::sweep_tsv(&rows)).map_err(io_msg)?;
    println!("wrote {} sweep rows", rows.len());
    Ok(ExitCode::SUCCESS)
}

fn discretize_command(args: OracleArgs) -> Result<ExitCode, String> {
    let config = load_config(&args.config)?;
    let n = args.grid.unwrap_or(config.solver.grid);
    ensure_out_dir(&args.out)?;
    let fg = config.value_dist.discretize(n).map_err(|e| e.to_string())?;
    output::write_text(&args.out.join("value_grid.tsv"), &output::grid_tsv(&fg)).map_err(io_msg)?;
    if let Some(q) = config.quality_dist() {
        let qg = q.discretize(n).map_err(|e| e.to_string())?;
        output::write_text(&args.out.join("quality_grid.tsv"), &output::grid_tsv(&qg))
            .map_err(io_msg)?;
    }
    println!("wrote {n}-point grids");
    Ok(ExitCode::SUCCESS)
}
