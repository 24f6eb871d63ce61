//! Experiment CLI for p-Cheeger gradient flows.
//!
//! ```text
//! cheeger-flow run      --config cfg.json [--seed N] [--out DIR] [--p F] [--tau F] [--t-final F]
//! cheeger-flow generate --kind path --size 3 [--seed N] [...] --out space.json
//! cheeger-flow verify   --config cfg.json [--seed N] [--out DIR]
//! ```
//!
//! Exit codes: 0 all enabled verifications pass, 1 verification failure,
//! 2 parse/config error, 3 solver failure.

mod config;
mod emit;
mod tasks;

use anyhow::{anyhow, bail, Result};
use clap::{Args, Parser, Subcommand};
use config::{ExperimentConfig, Task};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use tasks::{RunContext, TaskFailure};

#[derive(Parser)]
#[command(name = "cheeger-flow", about = "Gradient flows of p-Cheeger energies on graphs and Finsler grids", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the experiment seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the flow exponent p.
    #[arg(long)]
    p: Option<f64>,
    /// Override the time step tau.
    #[arg(long)]
    tau: Option<f64>,
    /// Override the final time.
    #[arg(long, value_name = "T")]
    t_final: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the tasks of an experiment configuration.
    Run(RunArgs),
    /// Run only the verification tasks of a configuration.
    Verify(RunArgs),
    /// Generate a space file deterministically.
    Generate {
        /// path | cycle | star | random-geometric | grid
        #[arg(long)]
        kind: String,
        /// Node count (per axis for grids).
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// unit | uniform:LO,HI
        #[arg(long, default_value = "unit")]
        weights: String,
        /// unit | uniform:LO,HI
        #[arg(long, default_value = "unit")]
        measures: String,
        /// Gaussian kernel width for random-geometric graphs.
        #[arg(long, default_value_t = 0.35)]
        sigma: f64,
        /// Weight threshold for random-geometric graphs.
        #[arg(long, default_value_t = 0.25)]
        cutoff: f64,
        /// Grid dimension (1 or 2).
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Grid spacing.
        #[arg(long, default_value_t = 1.0)]
        h: f64,
        /// Grid norm exponent (number or "inf").
        #[arg(long, default_value = "2.0")]
        alpha: String,
        /// Per-axis norm scales, comma separated.
        #[arg(long)]
        scales: Option<String>,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args, false),
        Command::Verify(args) => run(args, true),
        Command::Generate { kind, size, seed, weights, measures, sigma, cutoff, dim, h, alpha, scales, out } => {
            generate_cmd(&kind, size, seed, &weights, &measures, sigma, cutoff, dim, h, &alpha, scales.as_deref(), out.as_deref())
                .map(|()| true)
                .map_err(TaskFailure::Config)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(TaskFailure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(TaskFailure::Solver(e)) => {
            eprintln!("solver error: {e:#}");
            ExitCode::from(3)
        }
    }
}

/// Returns whether all enabled verifications passed.
fn run(args: RunArgs, verify_only: bool) -> std::result::Result<bool, TaskFailure> {
    let mut cfg = ExperimentConfig::load(&args.config).map_err(TaskFailure::Config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(p) = args.p {
        cfg.flow.p = p;
    }
    if let Some(tau) = args.tau {
        cfg.flow.tau = tau;
    }
    if let Some(t) = args.t_final {
        cfg.flow.t_final = t;
    }
    if verify_only {
        cfg.tasks.retain(Task::is_verification);
        if cfg.tasks.is_empty() {
            cfg.tasks = vec![Task::VerifyCertificates, Task::VerifyPairing];
            if cfg.u0.is_some() {
                cfg.tasks.push(Task::VerifyAsymptotics);
            }
        }
    }
    let base = args.config.parent().unwrap_or(Path::new(".")).to_path_buf();
    let out = args
        .out
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out)
        .map_err(|e| TaskFailure::Config(anyhow!("creating {}: {e}", out.display())))?;

    let space = cfg.resolve_space(&base).map_err(TaskFailure::Config)?;
    let resolved = cfg.resolve_u0(&space, &base).map_err(TaskFailure::Config)?;
    let (u0, pgm_maxval) = match resolved {
        Some((u, m)) => (Some(u), m),
        None => (None, None),
    };
    println!(
        "space: {} nodes, {} field dofs, seed {}",
        space.node_count(),
        space.field_len(),
        cfg.seed
    );
    let ctx = RunContext { space, u0, pgm_maxval };
    let outcomes = tasks::run_all(&cfg, &ctx, &out)?;
    let all_pass = outcomes.iter().all(|o| o.verdict.unwrap_or(true));
    let verifications: Vec<&tasks::TaskOutcome> =
        outcomes.iter().filter(|o| o.verdict.is_some()).collect();
    if verifications.is_empty() {
        println!("done: no verification tasks enabled");
    } else {
        println!(
            "done: {}/{} verification tasks pass",
            verifications.iter().filter(|o| o.verdict == Some(true)).count(),
            verifications.len()
        );
    }
    Ok(all_pass)
}

fn parse_law(text: &str) -> Result<cheeger_flow::generate::ValueLaw> {
    use cheeger_flow::generate::ValueLaw;
    if text == "unit" {
        return Ok(ValueLaw::Unit);
    }
    if let Some(rest) = text.strip_prefix("uniform:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() == 2 {
            let lo: f64 = parts[0].parse()?;
            let hi: f64 = parts[1].parse()?;
            return Ok(ValueLaw::Uniform { lo, hi });
        }
    }
    bail!("value law {text:?} (expected \"unit\" or \"uniform:LO,HI\")")
}

#[allow(clippy::too_many_arguments)]
fn generate_cmd(
    kind: &str,
    size: usize,
    seed: u64,
    weights: &str,
    measures: &str,
    sigma: f64,
    cutoff: f64,
    dim: usize,
    h: f64,
    alpha: &str,
    scales: Option<&str>,
    out: Option<&Path>,
) -> Result<()> {
    use cheeger_flow::generate::{generate, is_connected, GeneratorKind, GeneratorSpec};
    use cheeger_flow::space::io::space_to_json;
    let kind = match kind {
        "path" => GeneratorKind::Path,
        "cycle" => GeneratorKind::Cycle,
        "star" => GeneratorKind::Star,
        "random-geometric" => GeneratorKind::RandomGeometric { sigma, cutoff },
        "grid" => {
            let alpha: f64 = if alpha == "inf" { f64::INFINITY } else { alpha.parse()? };
            let scales = match scales {
                Some(text) => text
                    .split(',')
                    .map(|s| s.parse::<f64>().map_err(|e| anyhow!("scale {s:?}: {e}")))
                    .collect::<Result<Vec<f64>>>()?,
                None => vec![1.0; dim],
            };
            GeneratorKind::Grid { dim, h, alpha, scales }
        }
        other => bail!("unknown generator kind {other:?}"),
    };
    let spec = GeneratorSpec { kind, size, weights: parse_law(weights)?, measures: parse_law(measures)? };
    let space = generate(&spec, seed)?;
    let text = space_to_json(&space);
    match out {
        Some(path) => {
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, &text)?;
            println!(
                "wrote {} ({} nodes, {} field dofs, connected: {})",
                path.display(),
                space.node_count(),
                space.field_len(),
                is_connected(&space)
            );
        }
        None => println!("{text}"),
    }
    Ok(())
}
