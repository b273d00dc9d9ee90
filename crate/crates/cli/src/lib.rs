//! Command-line experiment runner for `kinetic-apnn`: configuration loading,
//! run directories with manifests, and the verification studies.

pub mod config;
pub mod error;
pub mod output;
pub mod report;
pub mod studies;

use std::path::Path;

pub use config::ExperimentConfig;
pub use error::{ErrorRecord, RunError, RunResult};
pub use output::{Manifest, RunDir};
pub use report::{Check, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Train,
    Solve,
    VerifyHypo,
    ApStudy,
    Theorem2Study,
    Tails,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Train => "train",
            Command::Solve => "solve",
            Command::VerifyHypo => "verify-hypo",
            Command::ApStudy => "ap-study",
            Command::Theorem2Study => "theorem2-study",
            Command::Tails => "tails",
        }
    }
}

/// Runs `command` into `out`: `config.toml`, the command's tables,
/// `report.json`, `events.jsonl` and `manifest.json`.
pub fn run(command: Command, cfg: &ExperimentConfig, out: &Path) -> RunResult<Outcome> {
    cfg.validate()?;
    let mut dir = RunDir::create(out)?;
    dir.write_text("config.toml", &cfg.to_toml())?;
    dir.event("start", serde_json::json!({ "command": command.name(), "config_hash": cfg.hash() }))?;
    let outcome = match command {
        Command::Train => studies::train::run(cfg, &mut dir),
        Command::Solve => studies::solve::run(cfg, &mut dir),
        Command::VerifyHypo => studies::hypo::run(cfg, &mut dir),
        Command::ApStudy => studies::ap::run(cfg, &mut dir),
        Command::Theorem2Study => studies::loss_error::run(cfg, &mut dir),
        Command::Tails => studies::tails::run(cfg, &mut dir),
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            let rec = e.record();
            dir.write_json("error.json", &rec)?;
            dir.event("error", serde_json::to_value(&rec)?)?;
            dir.finish(command.name(), cfg)?;
            return Err(e);
        }
    };
    dir.write_json("report.json", &outcome)?;
    for c in outcome.failed() {
        dir.event("check-failed", serde_json::to_value(c)?)?;
    }
    dir.finish(command.name(), cfg)?;
    Ok(outcome)
}
