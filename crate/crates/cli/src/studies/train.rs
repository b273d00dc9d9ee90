use std::path::PathBuf;

use kinetic_apnn::apnn::{
    assemble_loss, sample_collocation, train, Checkpoint, CollocationBatch, CollocationConfig, FileObserver,
    LogRecord, NetworkBundle, TrainObserver, TrainState, PART_NAMES,
};
use kinetic_apnn::phase_space::SpatialGrid;
use kinetic_apnn::problem::Problem;
use kinetic_apnn::reference::{error_ek, ModalExact, Trajectory};
use serde::Serialize;

use super::time_average;
use crate::config::ExperimentConfig;
use crate::error::RunResult;
use crate::output::{RunDir, Seeds};
use crate::report::{Check, Outcome};

/// Forwards to the file observer and keeps the logged losses for `loss.csv`.
struct Recorder {
    files: FileObserver,
    rows: Vec<Vec<f64>>,
}

impl TrainObserver for Recorder {
    fn on_log(&mut self, rec: &LogRecord<'_>) -> kinetic_apnn::Result<()> {
        let mut row = vec![rec.step as f64, rec.lr, rec.total];
        row.extend(PART_NAMES.iter().map(|n| rec.parts[n]));
        self.rows.push(row);
        self.files.on_log(rec)
    }

    fn on_checkpoint(&mut self, ck: &Checkpoint) -> kinetic_apnn::Result<()> {
        self.files.on_checkpoint(ck)
    }
}

pub(crate) struct Trained {
    pub bundle: NetworkBundle,
    pub state: TrainState,
    pub checkpoints: Vec<PathBuf>,
}

/// Trains the configured network, writing `train.jsonl`, `loss.csv` and checkpoints.
pub(crate) fn train_network(cfg: &ExperimentConfig, p: &Problem, dir: &mut RunDir) -> RunResult<Trained> {
    let seeds = Seeds::derive(cfg.seed);
    let mut bundle = NetworkBundle::new(&cfg.network, p, seeds.network)?;
    let files = FileObserver::new(&dir.path("train.jsonl"), &dir.path("checkpoints"))?;
    let mut rec = Recorder { files, rows: Vec::new() };
    dir.event("train-start", serde_json::json!({ "params": bundle.n_params(), "steps": cfg.training.steps }))?;
    let state = train(&mut bundle, p, &cfg.settings(), seeds.collocation, &cfg.hash(), None, &mut rec)?;
    let mut header = vec!["step", "lr", "total"];
    header.extend(PART_NAMES);
    dir.write_csv("loss.csv", &header, &rec.rows)?;
    dir.track("train.jsonl");
    let checkpoints = rec.files.checkpoints;
    for c in &checkpoints {
        if let Ok(rel) = c.strip_prefix(dir.root()) {
            dir.track(&rel.to_string_lossy());
        }
    }
    dir.event("train-end", serde_json::json!({ "step": state.step, "checkpoints": checkpoints.len() }))?;
    Ok(Trained { bundle, state, checkpoints })
}

/// Fixed batch used to score networks independently of the training batches.
pub(crate) fn eval_batch(cfg: &ExperimentConfig, p: &Problem) -> RunResult<CollocationBatch> {
    let ec = CollocationConfig {
        n_interior: cfg.studies.eval_interior,
        n_initial: cfg.studies.eval_initial,
        n_boundary: cfg.studies.eval_boundary,
        resample_every: 0,
        ..cfg.collocation.clone()
    };
    Ok(sample_collocation(&ec, &p.vgrid, p.config.t_end, Seeds::derive(cfg.seed).evaluation)?)
}

/// Exact modal solution at the solver's snapshot times.
pub(crate) fn exact_trajectory(cfg: &ExperimentConfig, p: &Problem) -> RunResult<Trajectory> {
    let grid = SpatialGrid::new(p.dim(), p.config.n_x)?;
    let n = cfg.solver.snapshots.max(2);
    let times: Vec<f64> = (0..n).map(|s| p.config.t_end * s as f64 / (n - 1) as f64).collect();
    Ok(ModalExact::new(p).trajectory(p, &grid, &times)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainReport {
    pub steps: usize,
    pub n_params: usize,
    /// Loss on the last training batch after the final update.
    pub final_loss: f64,
    pub eval_loss: f64,
    /// Loss of the exact solution on the evaluation batch.
    pub exact_loss: f64,
    pub target_loss: f64,
    pub target_met: bool,
    pub ek_mean: f64,
    pub ek_max: f64,
    pub checkpoints: usize,
}

pub fn run(cfg: &ExperimentConfig, dir: &mut RunDir) -> RunResult<Outcome> {
    let p = cfg.problem()?;
    let trained = train_network(cfg, &p, dir)?;
    let final_loss = trained.state.last.as_ref().map_or(f64::NAN, |l| l.total);
    let batch = eval_batch(cfg, &p)?;
    let eval_loss = assemble_loss(&trained.bundle, &p, &batch, &cfg.loss, p.eps())?.total;
    let exact = ModalExact::new(&p);
    let exact_loss = assemble_loss(&exact, &p, &batch, &cfg.loss, p.eps())?.total;
    let traj = exact_trajectory(cfg, &p)?;
    let ek = error_ek(&trained.bundle, &p, &traj, p.kernel.q_weight)?;
    let rows: Vec<Vec<f64>> = traj.times.iter().zip(&ek).map(|(t, e)| vec![*t, *e]).collect();
    dir.write_csv("ek.csv", &["t", "ek"], &rows)?;
    let target = cfg.studies.target_loss;
    let report = TrainReport {
        steps: trained.state.step,
        n_params: trained.bundle.n_params(),
        final_loss,
        eval_loss,
        exact_loss,
        target_loss: target,
        target_met: final_loss < target,
        ek_mean: time_average(&traj.times, &ek),
        ek_max: ek.iter().copied().fold(0.0, f64::max),
        checkpoints: trained.checkpoints.len(),
    };
    let checks = vec![
        Check::at_most("final_loss", final_loss, target),
        Check::at_most("exact_solution_loss", exact_loss, 1e-6),
    ];
    Ok(Outcome::new("train", checks, &report))
}
