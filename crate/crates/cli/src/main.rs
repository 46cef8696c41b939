use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kirchhoff_core::experiment::{
    parse_config, resolve_output_dir, run_sweep, run_task, ExperimentConfig, RunReport, Task,
};
use kirchhoff_core::KirchhoffError;

/// Experiments for the nonlocal parabolic Kirchhoff equation.
///
/// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
/// 4 analysis check failed, 1 i/o error.
#[derive(Parser, Debug)]
#[command(name = "kirchhoff", version)]
struct Cli {
    /// Override the `seed` key of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory under which relative `output.dir` paths are resolved.
    #[arg(long, global = true, env = "KIRCHHOFF_OUTPUT_ROOT")]
    output_root: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ConfigArg {
    /// Path to a key = value configuration file.
    config: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the evolution problem and run the enabled analyses.
    Simulate(ConfigArg),
    /// Compute a ground state by Nehari-constrained minimization.
    GroundState(ConfigArg),
    /// Estimate the well depth with its lower bound and Sobolev constant.
    WellDepth(ConfigArg),
    /// Classify the configured initial datum relative to the well.
    Classify(ConfigArg),
    /// Level-set bounds on the L2 norm over sampled Nehari states.
    Bounds(ConfigArg),
    /// Repeat `simulate` over values of one numeric config key.
    Sweep {
        config: PathBuf,
        /// Config key to vary, e.g. init.amplitude.
        #[arg(long)]
        axis: String,
        /// Comma-separated values; may be empty.
        #[arg(long, allow_hyphen_values = true, default_value = "")]
        values: String,
    },
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, KirchhoffError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| KirchhoffError::Config(vec![format!("{}: {e}", path.display())]))?;
    let mut cfg = parse_config(&text).map_err(|e| match e {
        KirchhoffError::Config(errs) => KirchhoffError::Config(
            errs.into_iter()
                .map(|m| format!("{}: {m}", path.display()))
                .collect(),
        ),
        other => other,
    })?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn parse_values(text: &str) -> Result<Vec<f64>, KirchhoffError> {
    let mut values = Vec::new();
    let mut errs = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) => errs.push(format!("--values: '{item}' is not a number")),
        }
    }
    if errs.is_empty() {
        Ok(values)
    } else {
        Err(KirchhoffError::Config(errs))
    }
}

fn print_report(rep: &RunReport, dir: &Path) {
    println!("task: {:?}", rep.task);
    let c = &rep.constants;
    println!(
        "S = {:.10e}  d0 = {:.10e}  lambda1 = {:.10e}",
        c.sobolev, c.d0, c.lambda1
    );
    if let Some(d) = c.d_est {
        println!("d_est = {d:.10e}");
    }
    if let Some(i) = &rep.initial {
        println!(
            "u0: J = {:.6e}  I = {:.6e}  classification = {} (relative to {})",
            i.energy, i.nehari, i.classification, i.reference
        );
    }
    if let Some(s) = &rep.simulation {
        println!(
            "outcome: {:?}  steps = {} (+{} rejected)  energy identity = {:.3e}",
            s.outcome, s.accepted_steps, s.rejected_steps, s.energy_identity_residual
        );
        if let Some(n) = &s.note {
            println!("note: {n}");
        }
    }
    for a in &rep.analyses {
        println!("{}", a.status_line());
    }
    println!("report: {}", dir.join("report.json").display());
}

fn run(cli: Cli) -> Result<i32, KirchhoffError> {
    let root = cli.output_root.as_deref();
    let (path, task) = match &cli.command {
        Command::Simulate(c) => (&c.config, Task::Simulate),
        Command::GroundState(c) => (&c.config, Task::GroundState),
        Command::WellDepth(c) => (&c.config, Task::WellDepth),
        Command::Classify(c) => (&c.config, Task::Classify),
        Command::Bounds(c) => (&c.config, Task::Bounds),
        Command::Sweep {
            config,
            axis,
            values,
        } => {
            let values = parse_values(values)?;
            let cfg = load(config, cli.seed)?;
            let dir = resolve_output_dir(&cfg, root);
            let rep = run_sweep(&cfg, axis, &values, &dir)?;
            for r in &rep.rows {
                println!(
                    "{} = {}: {} (exit {})",
                    axis,
                    r.value,
                    r.outcome.as_deref().or(r.error.as_deref()).unwrap_or("-"),
                    r.exit_code
                );
            }
            println!("summary: {}", rep.summary.display());
            return Ok(0);
        }
    };
    let cfg = load(path, cli.seed)?;
    let dir = resolve_output_dir(&cfg, root);
    let rep = run_task(&cfg, task, &dir)?;
    print_report(&rep, &dir);
    Ok(rep.exit_code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
