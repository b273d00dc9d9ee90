use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::collocation::{sample_collocation, CollocationBatch};
use super::config::{CollocationConfig, LossConfig, TrainConfig};
use super::loss::{loss_and_gradient, LossBreakdown, PART_NAMES};
use super::network::NetworkBundle;
use crate::error::{Error, Result};
use crate::problem::Problem;

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: usize,
    pub m: Vec<Array2<f64>>,
    pub v: Vec<Array2<f64>>,
}

impl Adam {
    pub fn new(params: &[Array2<f64>], beta1: f64, beta2: f64, eps: f64) -> Self {
        let zeros: Vec<Array2<f64>> = params.iter().map(|p| Array2::zeros(p.dim())).collect();
        Self { beta1, beta2, eps, step: 0, m: zeros.clone(), v: zeros }
    }

    pub fn update(&mut self, params: &mut [Array2<f64>], grads: &[Array2<f64>], lr: f64) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step as i32);
        let c2 = 1.0 - self.beta2.powi(self.step as i32);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            m.zip_mut_with(g, |a, &b| *a = self.beta1 * *a + (1.0 - self.beta1) * b);
            v.zip_mut_with(g, |a, &b| *a = self.beta2 * *a + (1.0 - self.beta2) * b * b);
            ndarray::Zip::from(p).and(&*m).and(&*v).for_each(|p, &m, &v| {
                *p -= lr * (m / c1) / ((v / c2).sqrt() + self.eps);
            });
        }
    }
}

/// Optimizer state and history of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    pub step: usize,
    pub seed: u64,
    pub adam: Adam,
    /// Total loss before each update.
    pub history: Vec<f64>,
    pub last: Option<LossBreakdown>,
}

/// Parameters, optimizer state and loss at a given step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub step: usize,
    pub config_hash: String,
    pub seed: u64,
    pub params: Vec<Array2<f64>>,
    pub adam: Adam,
    pub loss: LossBreakdown,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let f = BufWriter::new(File::create(path)?);
        serde_json::to_writer(f, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::io::BufReader::new(File::open(path)?);
        Ok(serde_json::from_reader(f)?)
    }
}

/// One line of the training log.
#[derive(Debug, Clone, Serialize)]
pub struct LogRecord<'a> {
    pub step: usize,
    pub lr: f64,
    pub total: f64,
    #[serde(flatten)]
    pub parts: BTreeMap<&'static str, f64>,
    pub wall_time_s: f64,
    #[serde(skip)]
    pub loss: &'a LossBreakdown,
}

/// Receives logs and checkpoints during training.
pub trait TrainObserver {
    fn on_log(&mut self, _rec: &LogRecord<'_>) -> Result<()> {
        Ok(())
    }
    fn on_checkpoint(&mut self, _ck: &Checkpoint) -> Result<()> {
        Ok(())
    }
}

/// Discards everything.
pub struct NoObserver;

impl TrainObserver for NoObserver {}

/// Appends JSON lines to `log_path` and writes checkpoints into `dir`.
pub struct FileObserver {
    log: BufWriter<File>,
    dir: PathBuf,
    pub checkpoints: Vec<PathBuf>,
}

impl FileObserver {
    pub fn new(log_path: &Path, checkpoint_dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(checkpoint_dir)?;
        Ok(Self {
            log: BufWriter::new(File::create(log_path)?),
            dir: checkpoint_dir.to_path_buf(),
            checkpoints: Vec::new(),
        })
    }
}

impl TrainObserver for FileObserver {
    fn on_log(&mut self, rec: &LogRecord<'_>) -> Result<()> {
        serde_json::to_writer(&mut self.log, rec)?;
        self.log.write_all(b"\n")?;
        self.log.flush()?;
        Ok(())
    }

    fn on_checkpoint(&mut self, ck: &Checkpoint) -> Result<()> {
        let p = self.dir.join(format!("step_{:07}.json", ck.step));
        ck.save(&p)?;
        self.checkpoints.push(p);
        Ok(())
    }
}

/// Everything `train` needs besides the problem.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ApnnSettings {
    pub collocation: CollocationConfig,
    pub loss: LossConfig,
    pub training: TrainConfig,
}

impl ApnnSettings {
    pub fn validate(&self) -> Result<()> {
        self.collocation.validate()?;
        self.loss.validate()?;
        self.training.validate()
    }
}

fn batch_for(settings: &ApnnSettings, problem: &Problem, seed: u64, step: usize) -> Result<CollocationBatch> {
    let every = settings.collocation.resample_every;
    let round = if every == 0 { 0 } else { step / every };
    let s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(round as u64);
    sample_collocation(&settings.collocation, &problem.vgrid, problem.config.t_end, s)
}

/// Minimizes the loss with Adam, starting from `state` when resuming.
pub fn train(
    bundle: &mut NetworkBundle,
    problem: &Problem,
    settings: &ApnnSettings,
    seed: u64,
    config_hash: &str,
    state: Option<TrainState>,
    observer: &mut dyn TrainObserver,
) -> Result<TrainState> {
    settings.validate()?;
    let tc = &settings.training;
    let mut state = state.unwrap_or_else(|| TrainState {
        step: 0,
        seed,
        adam: Adam::new(&bundle.params, tc.beta1, tc.beta2, tc.adam_eps),
        history: Vec::new(),
        last: None,
    });
    let start = Instant::now();
    let eps = problem.eps();
    let mut batch = batch_for(settings, problem, seed, state.step)?;
    let mut batch_round = usize::MAX;
    while state.step < tc.steps {
        let every = settings.collocation.resample_every;
        let round = if every == 0 { 0 } else { state.step / every };
        if round != batch_round {
            batch = batch_for(settings, problem, seed, state.step)?;
            batch_round = round;
        }
        let (loss, grads) = loss_and_gradient(bundle, problem, &batch, &settings.loss, eps)?;
        debug_assert!(loss.check_additivity());
        if !loss.total.is_finite() {
            return Err(Error::NonFiniteOutput);
        }
        if loss.total > tc.diverge_at {
            return Err(Error::DivergedLoss { step: state.step, loss: loss.total });
        }
        let lr = tc.lr_at(state.step);
        if state.step % tc.log_every == 0 {
            let rec = LogRecord {
                step: state.step,
                lr,
                total: loss.total,
                parts: PART_NAMES.iter().map(|n| (*n, loss.part(n))).collect(),
                wall_time_s: start.elapsed().as_secs_f64(),
                loss: &loss,
            };
            observer.on_log(&rec)?;
        }
        if tc.checkpoint_every > 0 && state.step % tc.checkpoint_every == 0 {
            observer.on_checkpoint(&Checkpoint {
                step: state.step,
                config_hash: config_hash.to_string(),
                seed,
                params: bundle.params.clone(),
                adam: state.adam.clone(),
                loss: loss.clone(),
            })?;
        }
        state.history.push(loss.total);
        state.adam.update(&mut bundle.params, &grads, lr);
        state.last = Some(loss);
        state.step += 1;
    }
    // final evaluation on the last batch, after the last update
    let (loss, _) = loss_and_gradient(bundle, problem, &batch, &settings.loss, eps)?;
    if tc.checkpoint_every > 0 {
        observer.on_checkpoint(&Checkpoint {
            step: state.step,
            config_hash: config_hash.to_string(),
            seed,
            params: bundle.params.clone(),
            adam: state.adam.clone(),
            loss: loss.clone(),
        })?;
    }
    state.last = Some(loss);
    Ok(state)
}
