//! Evaluation harness and suite tools.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use sensemap_core::agents::{Agents, BackendConfig, BackendKind};
use sensemap_core::evaluation::{build_suite, load_cases, run_harness, write_suite, Mode};
use sensemap_core::perception::perceive;
use sensemap_core::workspace::{ModelConfig, WorkspaceSnapshot};

#[derive(Parser)]
#[command(name = "eval", version, about = "Run and maintain the refinement evaluation suite")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score every case in a directory and write results-<mode>.json and table-<mode>.txt.
    Run {
        #[arg(long)]
        cases: PathBuf,
        #[arg(long, default_value = "refinement")]
        mode: Mode,
        /// Overrides SENSEMAP_BACKEND; remote needs SENSEMAP_BASE_URL.
        #[arg(long)]
        backend: Option<Backend>,
        #[arg(long)]
        out: PathBuf,
        /// Run cases and inference batches one at a time.
        #[arg(long)]
        sequential: bool,
        /// Cut document bodies to this many characters in refinement requests.
        #[arg(long)]
        body_budget: Option<usize>,
    },
    /// Regenerate the synthetic suite into a directory.
    BuildSuite {
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the interaction delta between two snapshot files as JSON.
    Perceive { prev: PathBuf, curr: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Mock,
    Remote,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run {
            cases,
            mode,
            backend,
            out,
            sequential,
            body_budget,
        } => {
            let mut config = BackendConfig::from_env()?;
            if let Some(b) = backend {
                config.kind = match b {
                    Backend::Mock => BackendKind::Mock,
                    Backend::Remote => BackendKind::Remote,
                };
            }
            let cases = load_cases(&cases)?;
            let mut agents = Agents::new(config.build()?, config.model(&ModelConfig::default()));
            agents.concurrent = !sequential;
            agents.body_budget = body_budget;
            let report = run_harness(&cases, mode, &agents);
            report
                .write(&out)
                .with_context(|| format!("writing results to {}", out.display()))?;
            print!("{}", report.to_table());
            Ok(if report.failed > 0 { ExitCode::from(2) } else { ExitCode::SUCCESS })
        }
        Command::BuildSuite { out } => {
            let cases = build_suite();
            write_suite(&out, &cases).with_context(|| format!("writing {}", out.display()))?;
            println!("wrote {} cases to {}", cases.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Perceive { prev, curr } => {
            let delta = perceive(&read_snapshot(&prev)?, &read_snapshot(&curr)?)?;
            println!("{}", serde_json::to_string_pretty(&delta)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn read_snapshot(path: &Path) -> Result<WorkspaceSnapshot> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
