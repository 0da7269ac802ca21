//! `qassign`: state assignment for coarse-grained quantum systems.

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod assign;
mod config;
mod figures;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Result;
use clap::{Parser, Subcommand};
use serde_json::json;

use qassign_core::validation::{self, Suite};
use qassign_core::Error as CoreError;

use config::{Format, RunConfig};
use output::{pretty, write_file, Table};

/// Bad input that the argument parser could not catch.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

#[derive(Debug, Parser)]
#[command(name = "qassign", version, about = "Assign microscopic states to coarse-grained quantum data")]
struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Acceptance half-width of the rejection sampler.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Convergence tolerance of the MEP solver.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Assign a global state from an effective state.
    Assign(assign::AssignArgs),
    /// Write the data behind one figure.
    Figure {
        #[arg(value_parser = clap::value_parser!(u32).range(2..=11))]
        n: u32,
        /// Rejection-sampling proposals (figures 10 and 11).
        #[arg(long)]
        proposals: Option<u64>,
    },
    /// Run the acceptance checks.
    Validate {
        #[arg(value_parser = ["fast", "full"], default_value = "fast")]
        suite: String,
    },
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(|e| Usage(format!("{e:#}")))?,
        None => RunConfig::default(),
    };
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.epsilon {
        cfg.epsilon = v;
    }
    if let Some(v) = cli.tol {
        cfg.solver_tol = v;
    }
    if let Some(v) = &cli.out {
        cfg.output_dir = v.clone();
    }
    if let Some(v) = cli.format {
        cfg.format = v;
    }
    if let Command::Figure { proposals: Some(p), .. } = cli.command {
        cfg.proposals = p;
    }
    cfg.validate().map_err(|e| Usage(e.to_string()))?;
    Ok(cfg)
}

fn run_figure(n: u32, cfg: &RunConfig) -> Result<()> {
    let start = Instant::now();
    let data = figures::build(n, cfg)?;
    let figure = [("figure".to_string(), n.to_string())];
    let mut files = Vec::new();
    for (name, table) in &data.tables {
        let file = format!("fig{n}_{name}.{}", Table::extension(cfg));
        let path = write_file(&cfg.output_dir, &file, &table.render(cfg, &figure))?;
        println!("wrote {}", path.display());
        files.push(json!({ "file": file, "columns": table.columns, "rows": table.rows.len() }));
    }
    let mut manifest = json!({
        "meta": output::meta(cfg, &figure),
        "config": cfg,
        "parameters": data.parameters,
        "files": files,
    });
    write_file(&cfg.output_dir, &format!("fig{n}_manifest.json"), &pretty(&mut manifest))?;
    // kept apart so reruns reproduce the data files and manifest exactly
    let mut timing = json!({ "figure": n, "runtime_s": start.elapsed().as_secs_f64() });
    write_file(&cfg.output_dir, &format!("fig{n}_runtime.json"), &pretty(&mut timing))?;
    Ok(())
}

fn run_validate(suite: &str, cfg: &RunConfig) -> Result<bool> {
    let suite: Suite = suite.parse().map_err(Usage)?;
    let mut ctx = validation::Context::new(suite, cfg.seed);
    ctx.epsilon = cfg.epsilon;
    ctx.quad_tol = cfg.quadrature_tol;
    let report = validation::run(&ctx);
    print!("{}", report.to_text());
    let passed = report.criteria.iter().filter(|c| c.passed).count();
    println!("{passed}/{} criteria passed", report.criteria.len());
    Ok(report.all_passed())
}

fn run(cli: Cli) -> Result<ExitCode> {
    let cfg = resolve_config(&cli)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Usage("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match &cli.command {
        Command::Assign(args) => {
            let mut doc = assign::run(args, &cfg)?;
            let text = pretty(&mut doc);
            let name = format!("assign_{}_{}.json", assign::label(&args.channel), assign::label(&args.method));
            write_file(&cfg.output_dir, &name, &text)?;
            print!("{text}");
        }
        Command::Figure { n, .. } => run_figure(*n, &cfg)?,
        Command::Validate { suite } => {
            if !run_validate(suite, &cfg)? {
                return Ok(ExitCode::from(3));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// 2 for bad input, 3 for numerical failures, 1 for anything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.is::<Usage>()) {
        return 2;
    }
    match err.chain().find_map(|e| e.downcast_ref::<CoreError>()) {
        Some(
            CoreError::DimensionMismatch { .. }
            | CoreError::NotHermitian(_)
            | CoreError::InvalidState(_)
            | CoreError::InvalidSpin(_)
            | CoreError::InvalidParameter(_)
            | CoreError::RadiusOutOfRange(_)
            | CoreError::DimensionCap { .. },
        ) => 2,
        Some(_) => 3,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
