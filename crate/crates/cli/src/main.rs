use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kinetic_apnn_cli::{run, Command, ErrorRecord, ExperimentConfig, RunError};

#[derive(Parser)]
#[command(name = "kinetic-apnn", version, about = "Asymptotic-preserving networks for the stochastic linearized Boltzmann equation")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML experiment configuration; defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "runs/latest")]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// `dotted.key=value`, applied after the file; repeatable.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Train the network on the configured problem.
    Train,
    /// Run the reference micro-macro solver.
    Solve,
    /// Certify the collision operator.
    VerifyHypo,
    /// Fluid-limit study over decreasing eps.
    ApStudy,
    /// Loss-to-error study over training checkpoints.
    Theorem2Study,
    /// Velocity tail integrals of the reference solution.
    Tails,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Train => Command::Train,
            Cmd::Solve => Command::Solve,
            Cmd::VerifyHypo => Command::VerifyHypo,
            Cmd::ApStudy => Command::ApStudy,
            Cmd::Theorem2Study => Command::Theorem2Study,
            Cmd::Tails => Command::Tails,
        }
    }
}

fn emit(rec: &ErrorRecord) {
    eprintln!("{}", serde_json::to_string(rec).unwrap_or_else(|_| rec.message.clone()));
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let key = e.get(clap::error::ContextKind::InvalidArg).map(|v| v.to_string());
            emit(&ErrorRecord { kind: "config", key, message: e.to_string(), exit_code: 2 });
            return ExitCode::from(2);
        }
    };
    let mut overrides = cli.overrides.clone();
    if let Some(s) = cli.seed {
        overrides.push(format!("seed={s}"));
    }
    let result =
        ExperimentConfig::load(cli.config.as_deref(), &overrides).and_then(|cfg| run(cli.command.into(), &cfg, &cli.out));
    match result {
        Ok(outcome) => {
            for c in &outcome.checks {
                let mark = if c.passed { "ok  " } else { "FAIL" };
                println!("{mark} {} = {:.6e} ({} {:.3e})", c.name, c.value, c.relation, c.limit);
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                let failed: Vec<&str> = outcome.failed().iter().map(|c| c.name.as_str()).collect();
                let err = RunError::CheckFailed { check: failed.join(","), detail: "see report.json".into() };
                let rec = err.record();
                let _ = std::fs::write(cli.out.join("error.json"), serde_json::to_vec_pretty(&rec).unwrap_or_default());
                emit(&rec);
                ExitCode::from(1)
            }
        }
        Err(e) => {
            let rec = e.record();
            if e.is_config() {
                let _ = std::fs::create_dir_all(&cli.out);
                let _ = std::fs::write(cli.out.join("error.json"), serde_json::to_vec_pretty(&rec).unwrap_or_default());
            }
            emit(&rec);
            ExitCode::from(rec.exit_code as u8)
        }
    }
}
