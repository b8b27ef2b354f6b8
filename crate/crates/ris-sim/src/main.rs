//! Command-line front end: sweep, point, hybrid, and validate subcommands
//! over a shared config pipeline (defaults, TOML file, --set overrides).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ris_sim::config::{load_config, ConfigError};
use ris_sim::sim::{
    crossover_summary, format_crossover_summary, run_hybrid_sweep, run_point, run_sweep,
    write_csv, write_decision_csv, SimError, SweepMode, SweepResult, SweepRow,
};
use ris_sim::validate;

#[derive(Parser)]
#[command(
    name = "ris-sim",
    version,
    about = "Monte-Carlo link-level simulator of a reconfigurable-surface-assisted multi-user MISO downlink"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML config file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override one config key (repeatable), e.g. --set drops=20.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Results CSV path override.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Fall back to built-in defaults when no config file is given (or the
    /// given path does not exist).
    #[arg(long, global = true)]
    defaults: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sweep both scenarios over all configured modes and power points.
    Sweep,
    /// Evaluate one operating point: the first configured mode at the first
    /// power point, in the configured scenario.
    Point,
    /// Sweep with the adaptive controller; writes a decision log CSV next to
    /// the results.
    Hybrid,
    /// Run the built-in invariant and oracle checks.
    Validate,
}

enum AppError {
    Config(ConfigError),
    Sim(SimError),
}

impl From<ConfigError> for AppError {
    fn from(e: ConfigError) -> Self {
        AppError::Config(e)
    }
}

impl From<SimError> for AppError {
    fn from(e: SimError) -> Self {
        AppError::Sim(e)
    }
}

impl AppError {
    fn message(&self) -> String {
        match self {
            AppError::Config(e) => e.to_string(),
            AppError::Sim(e) => e.to_string(),
        }
    }

    /// 1 for config-level problems, 2 for I/O failures.
    fn exit_code(&self) -> ExitCode {
        match self {
            AppError::Sim(SimError::Io { .. }) => ExitCode::from(2),
            _ => ExitCode::from(1),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode, AppError> {
    if let Cmd::Validate = cli.command {
        return Ok(run_validate());
    }

    let mut cfg = load_config(
        cli.config.as_deref(),
        cli.defaults,
        &cli.set,
        cli.seed,
        cli.out.as_deref(),
    )?;

    match cli.command {
        Cmd::Sweep => {
            let res = run_sweep(&cfg)?;
            write_csv(&res, &cfg.output_path)?;
            println!(
                "wrote {} rows to {}",
                res.rows.len(),
                cfg.output_path.display()
            );
            print!("{}", format_crossover_summary(&crossover_summary(&res)));
        }
        Cmd::Point => {
            let mode = cfg.modes[0];
            let power = cfg.power_grid_dbm[0];
            let (mean_se, stderr) = run_point(
                &cfg.scene,
                mode,
                power,
                cfg.drops,
                cfg.master_seed,
                &cfg.optimizer,
                &cfg.thresholds,
            )?;
            println!(
                "scenario={} mode={} total_power_dbm={} mean_se={} stderr={} drops={} seed={}",
                cfg.scene.scenario.token(),
                mode.token(),
                power,
                mean_se,
                stderr,
                cfg.drops,
                cfg.master_seed
            );
            let res = SweepResult {
                rows: vec![SweepRow {
                    scenario: cfg.scene.scenario,
                    mode,
                    total_power_dbm: power,
                    mean_se,
                    stderr,
                    drops: cfg.drops,
                    seed: cfg.master_seed,
                }],
            };
            write_csv(&res, &cfg.output_path)?;
            println!("wrote 1 row to {}", cfg.output_path.display());
        }
        Cmd::Hybrid => {
            if !cfg.modes.contains(&SweepMode::Hybrid) {
                cfg.modes.push(SweepMode::Hybrid);
            }
            let (res, log) = run_hybrid_sweep(&cfg)?;
            write_csv(&res, &cfg.output_path)?;
            let dec_path = decision_path(&cfg.output_path);
            write_decision_csv(&log, &dec_path)?;
            println!(
                "wrote {} rows to {} and {} decisions to {}",
                res.rows.len(),
                cfg.output_path.display(),
                log.len(),
                dec_path.display()
            );
            print!("{}", format_crossover_summary(&crossover_summary(&res)));
        }
        Cmd::Validate => unreachable!("handled above"),
    }
    Ok(ExitCode::SUCCESS)
}

/// Sibling path for the decision log: `<stem>_decisions.csv` next to the
/// results CSV.
fn decision_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("out");
    out.with_file_name(format!("{stem}_decisions.csv"))
}

fn run_validate() -> ExitCode {
    let outcomes = validate::run_all();
    let mut failed = 0usize;
    for o in &outcomes {
        let tag = if o.passed { "ok  " } else { "FAIL" };
        println!("[{tag}] {:<24} {}", o.name, o.detail);
        if !o.passed {
            failed += 1;
        }
    }
    if failed == 0 {
        println!("all {} checks passed", outcomes.len());
        ExitCode::SUCCESS
    } else {
        println!("{failed} of {} checks failed", outcomes.len());
        ExitCode::from(1)
    }
}
