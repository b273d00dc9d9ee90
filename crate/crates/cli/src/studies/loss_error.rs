use kinetic_apnn::apnn::{assemble_loss, Checkpoint, FieldModel, NetworkBundle};
use kinetic_apnn::micromacro::FieldWithDerivatives;
use kinetic_apnn::problem::{Problem, ProblemConfig};
use kinetic_apnn::reference::{
    discrete_projection_constant, equivalence_study, error_ek, lyapunov_series, solve_sg_micromacro, spearman,
    EquivalenceReport, LyapunovReport, LyapunovWeights, ModalExact,
};
use ndarray::Array2;
use serde::Serialize;

use super::time_average;
use super::train::{eval_batch, exact_trajectory, train_network};
use crate::config::ExperimentConfig;
use crate::error::{RunError, RunResult};
use crate::output::{RunDir, Seeds};
use crate::report::{Check, Outcome};

/// `exact + eta * net`, a model whose loss is exactly quadratic in `eta`.
struct Perturbed<'a> {
    exact: &'a ModalExact,
    net: &'a NetworkBundle,
    eta: f64,
}

fn axpy(a: &Array2<f64>, eta: f64, b: &Array2<f64>) -> Array2<f64> {
    a + &(b * eta)
}

impl FieldModel for Perturbed<'_> {
    fn n_modes(&self) -> usize {
        self.exact.n_modes()
    }

    fn fields(
        &self,
        problem: &Problem,
        i: usize,
        t: &[f64],
        x: &Array2<f64>,
    ) -> kinetic_apnn::Result<FieldWithDerivatives<Array2<f64>>> {
        let e = self.exact.fields(problem, i, t, x)?;
        let n = self.net.fields(problem, i, t, x)?;
        let eta = self.eta;
        Ok(FieldWithDerivatives {
            m: axpy(&e.m, eta, &n.m),
            m_t: axpy(&e.m_t, eta, &n.m_t),
            m_x: e.m_x.iter().zip(&n.m_x).map(|(a, b)| axpy(a, eta, b)).collect(),
            g: axpy(&e.g, eta, &n.g),
            g_t: axpy(&e.g_t, eta, &n.g_t),
            g_x: e.g_x.iter().zip(&n.g_x).map(|(a, b)| axpy(a, eta, b)).collect(),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckpointScore {
    pub step: usize,
    pub loss: f64,
    pub ek_mean: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundedRow {
    pub eps: f64,
    pub eta: f64,
    pub loss: f64,
    pub ek_mean: f64,
    pub ek_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LossErrorReport {
    pub checkpoints: Vec<CheckpointScore>,
    pub spearman: f64,
    pub lyapunov: Vec<LyapunovReport>,
    pub equivalence: EquivalenceReport,
    pub bounded: Vec<BoundedRow>,
    /// `max_eps ek_mean / ek_mean` at the largest `eps`.
    pub bounded_growth: f64,
}

fn expected_checkpoints(cfg: &ExperimentConfig) -> usize {
    let every = cfg.training.checkpoint_every;
    if every == 0 {
        return 0;
    }
    cfg.training.steps.div_ceil(every) + 1
}

fn score_checkpoints(cfg: &ExperimentConfig, p: &Problem, dir: &mut RunDir) -> RunResult<Vec<CheckpointScore>> {
    let trained = train_network(cfg, p, dir)?;
    let batch = eval_batch(cfg, p)?;
    let traj = exact_trajectory(cfg, p)?;
    let mut bundle = trained.bundle;
    let mut scores = Vec::new();
    for path in &trained.checkpoints {
        let ck = Checkpoint::load(path)?;
        let flat: Vec<f64> = ck.params.iter().flat_map(|a| a.iter().copied()).collect();
        bundle.set_flat_params(&flat)?;
        let loss = assemble_loss(&bundle, p, &batch, &cfg.loss, p.eps())?.total;
        let ek = error_ek(&bundle, p, &traj, p.kernel.q_weight)?;
        scores.push(CheckpointScore { step: ck.step, loss, ek_mean: time_average(&traj.times, &ek) });
    }
    dir.event("checkpoints-scored", serde_json::json!({ "count": scores.len() }))?;
    Ok(scores)
}

fn bounded_row(cfg: &ExperimentConfig, pc: &ProblemConfig, seeds: &Seeds) -> RunResult<BoundedRow> {
    let p = cfg.problem_with(pc)?;
    let exact = ModalExact::new(&p);
    let net = NetworkBundle::new(&cfg.network, &p, seeds.network)?;
    let batch = eval_batch(cfg, &p)?;
    let unit = assemble_loss(&Perturbed { exact: &exact, net: &net, eta: 1.0 }, &p, &batch, &cfg.loss, p.eps())?.total;
    let eta = (cfg.studies.bounded_loss / unit).sqrt();
    let model = Perturbed { exact: &exact, net: &net, eta };
    let loss = assemble_loss(&model, &p, &batch, &cfg.loss, p.eps())?.total;
    let traj = exact_trajectory(cfg, &p)?;
    let ek = error_ek(&model, &p, &traj, p.kernel.q_weight)?;
    Ok(BoundedRow {
        eps: pc.eps,
        eta,
        loss,
        ek_mean: time_average(&traj.times, &ek),
        ek_max: ek.iter().copied().fold(0.0, f64::max),
    })
}

pub fn run(cfg: &ExperimentConfig, dir: &mut RunDir) -> RunResult<Outcome> {
    let st = &cfg.studies;
    let expected = expected_checkpoints(cfg);
    if expected < st.min_checkpoints {
        return Err(RunError::config(
            "training.checkpoint_every",
            format!("yields {expected} checkpoints, need at least {}", st.min_checkpoints),
        ));
    }
    let seeds = Seeds::derive(cfg.seed);
    let p = cfg.problem()?;

    let scores = score_checkpoints(cfg, &p, dir)?;
    let losses: Vec<f64> = scores.iter().map(|s| s.loss).collect();
    let errors: Vec<f64> = scores.iter().map(|s| s.ek_mean).collect();
    let rho = spearman(&losses, &errors);
    let rows: Vec<Vec<f64>> = scores.iter().map(|s| vec![s.step as f64, s.loss, s.ek_mean]).collect();
    dir.write_csv("checkpoints.csv", &["step", "loss", "ek_mean"], &rows)?;

    let weights = cfg.lyapunov.unwrap_or_else(|| LyapunovWeights::constructive(discrete_projection_constant(&p)));
    let mut eps_list = st.bounded_eps.clone();
    eps_list.sort_by(|a, b| b.total_cmp(a));
    let mut lyapunov = Vec::new();
    let mut lrows = Vec::new();
    for &eps in &eps_list {
        let pe = cfg.problem_with(&ProblemConfig { eps, ..cfg.problem.clone() })?;
        let traj = solve_sg_micromacro(&pe, &cfg.solver)?;
        let rep = lyapunov_series(&pe, &traj, &weights, cfg.solver.dt)?;
        lrows.extend(rep.times.iter().zip(&rep.values).zip(&rep.norms).map(|((t, v), n)| vec![eps, *t, *v, *n]));
        dir.event("lyapunov", serde_json::json!({ "eps": eps, "decay_rate": rep.decay_rate }))?;
        lyapunov.push(rep);
    }
    dir.write_csv("lyapunov.csv", &["eps", "t", "functional", "norm"], &lrows)?;

    let equivalence =
        equivalence_study(&p, &weights, &st.equivalence_eps, st.equivalence_fields, st.equivalence_n_x, seeds.fields)?;
    let erows: Vec<Vec<f64>> = equivalence.rows.iter().map(|r| vec![r.eps, r.min_ratio, r.max_ratio]).collect();
    dir.write_csv("equivalence.csv", &["eps", "min_ratio", "max_ratio"], &erows)?;

    let mut bounded = Vec::new();
    for &eps in &eps_list {
        bounded.push(bounded_row(cfg, &ProblemConfig { eps, ..cfg.problem.clone() }, &seeds)?);
    }
    let base = bounded.first().map_or(f64::NAN, |b| b.ek_mean);
    let growth = bounded.iter().map(|b| b.ek_mean / base).fold(0.0, f64::max);
    let brows: Vec<Vec<f64>> =
        bounded.iter().map(|b| vec![b.eps, b.eta, b.loss, b.ek_mean, b.ek_max]).collect();
    dir.write_csv("bounded.csv", &["eps", "eta", "loss", "ek_mean", "ek_max"], &brows)?;

    let checks = vec![
        Check::at_least("checkpoints", scores.len() as f64, st.min_checkpoints as f64),
        Check::at_least("spearman_loss_error", rho, st.spearman_threshold),
        Check::holds("lyapunov_non_increasing", lyapunov.iter().all(|r| r.non_increasing)),
        Check::holds("equivalence_within_bracket", equivalence.within),
        Check::at_most("error_growth_as_eps_decreases", growth, st.bounded_growth),
    ];
    let report = LossErrorReport { checkpoints: scores, spearman: rho, lyapunov, equivalence, bounded, bounded_growth: growth };
    Ok(Outcome::new("theorem2-study", checks, &report))
}
