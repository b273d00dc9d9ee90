use kinetic_apnn::reference::tail_report;

use super::reference_solution;
use crate::config::ExperimentConfig;
use crate::error::RunResult;
use crate::output::RunDir;
use crate::report::{Check, Outcome};

/// Velocity tails of the reference micro part outside growing boxes.
pub fn run(cfg: &ExperimentConfig, dir: &mut RunDir) -> RunResult<Outcome> {
    let p = cfg.problem()?;
    let traj = reference_solution(cfg, &p, dir)?;
    let report = tail_report(&p, &traj, &cfg.studies.tail_boxes)?;
    let mut rows = vec![vec![0.0, report.full.c_total, report.full.r_total]];
    rows.extend(report.boxes.iter().map(|e| vec![e.half_width, e.c_total, e.r_total]));
    dir.write_csv("tails.csv", &["half_width", "c_total", "r_total"], &rows)?;
    dir.write_json("tails.json", &report)?;
    let nonneg = report.boxes.iter().chain(std::iter::once(&report.full)).all(|e| e.c_total >= 0.0 && e.r_total >= 0.0);
    let checks = vec![Check::holds("tails_monotone", report.is_monotone()), Check::holds("tails_nonnegative", nonneg)];
    Ok(Outcome::new("tails", checks, &report))
}
