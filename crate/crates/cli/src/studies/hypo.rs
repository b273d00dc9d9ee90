use kinetic_apnn::collision::{
    assemble_bgk_surrogate, assemble_boltzmann_matrix, speed_weights, verify_hypocoercivity, Backend, CollisionMatrix,
    HypoReport,
};
use kinetic_apnn::phase_space::{FluidBasis, VelocityGrid};
use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{RunError, RunResult};
use crate::output::{RunDir, Seeds};
use crate::report::{Check, Outcome};

#[derive(Debug, Clone, Serialize)]
pub struct HypoEntry {
    pub n_v: usize,
    pub z: f64,
    pub report: HypoReport,
    pub fields: FieldChecks,
}

/// Worst margins over random profiles, each `<= 0` when the bound holds.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FieldChecks {
    pub fields: usize,
    /// `max (<L h, h> + lambda |h_perp|_Lambda^2) / |h_perp|_Lambda^2`.
    pub coercivity: f64,
    /// `max <L h, h> / |h|^2`.
    pub dissipation: f64,
    /// Largest relative violation of `nu0 |h|^2 <= nu1 |h|_Lambda^2 <= <nu h, h> <= nu2 |h|_Lambda^2`.
    pub sandwich: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HypoStudy {
    pub backend: Backend,
    pub dim: usize,
    pub gamma: f64,
    pub entries: Vec<HypoEntry>,
    /// Relative change of the gap between `n_v` and `2 n_v`, per `z`.
    pub gap_refinement: Vec<(f64, f64)>,
}

fn field_checks(l: &CollisionMatrix, basis: &FluidBasis, r: &HypoReport, n: usize, seed: u64) -> FieldChecks {
    let w = basis.weights();
    let q = basis.complement_projector();
    let speeds = speed_weights(basis, r.gamma);
    let [n0, n1, n2, _, _] = r.nu_constants;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let wsum = |a: &Array1<f64>, s: &Array1<f64>| -> f64 { a.iter().zip(w).zip(s).map(|((x, w), s)| x * x * w * s).sum() };
    let ones = Array1::ones(w.len());
    let mut out = FieldChecks {
        fields: n,
        coercivity: f64::NEG_INFINITY,
        dissipation: f64::NEG_INFINITY,
        sandwich: f64::NEG_INFINITY,
    };
    for _ in 0..n {
        let h = Array1::from_iter((0..w.len()).map(|_| rng.gen_range(-1.0..1.0)));
        let hp = h.view().insert_axis(ndarray::Axis(0)).dot(&q).row(0).to_owned();
        let l2 = wsum(&h, &ones);
        let form = l.quadratic_form(h.view());
        let lam_perp = wsum(&hp, &speeds);
        out.coercivity = out.coercivity.max((form + r.lambda_gap * lam_perp) / lam_perp);
        out.dissipation = out.dissipation.max(form / l2);
        let lam = wsum(&h, &speeds);
        let nu_form = wsum(&h, &l.nu);
        let viol = [
            (n0 * l2 - n1 * lam) / (n1 * lam),
            (n1 * lam - nu_form) / nu_form,
            (nu_form - n2 * lam) / (n2 * lam),
        ];
        out.sandwich = viol.iter().fold(out.sandwich, |m, v| m.max(*v));
    }
    out
}

fn entry(cfg: &ExperimentConfig, n_v: usize, z: f64, seed: u64) -> RunResult<HypoEntry> {
    let pc = &cfg.problem;
    let vg = VelocityGrid::new(pc.dim, n_v, pc.v_max).map_err(|e| RunError::config("problem.n_v", e.to_string()))?;
    let basis = FluidBasis::new(&vg).map_err(|e| RunError::config("problem.n_v", e.to_string()))?;
    let gamma = cfg.kernel.gamma;
    let l = match pc.backend {
        Backend::BgkSurrogate => assemble_bgk_surrogate(&basis),
        Backend::BoltzmannQuadrature => assemble_boltzmann_matrix(&cfg.kernel, &vg, z)?,
    };
    let report = verify_hypocoercivity(&l, &basis, gamma)?;
    let fields = field_checks(&l, &basis, &report, cfg.studies.hypo_fields, seed);
    Ok(HypoEntry { n_v, z, report, fields })
}

pub fn run(cfg: &ExperimentConfig, dir: &mut RunDir) -> RunResult<Outcome> {
    let pc = &cfg.problem;
    let seeds = Seeds::derive(cfg.seed);
    let d = pc.dim;
    let zs: Vec<f64> = match pc.backend {
        Backend::BgkSurrogate => vec![0.0],
        Backend::BoltzmannQuadrature if cfg.kernel.c_z > 0.0 => vec![-cfg.kernel.c_z, 0.0, cfg.kernel.c_z],
        Backend::BoltzmannQuadrature => vec![0.0],
    };
    let mut entries = Vec::new();
    for &z in &zs {
        entries.push(entry(cfg, pc.n_v, z, seeds.fields)?);
        dir.event("hypo", serde_json::json!({ "n_v": pc.n_v, "z": z }))?;
    }
    let mut gap_refinement = Vec::new();
    if pc.backend == Backend::BoltzmannQuadrature && d == 1 {
        for (k, &z) in zs.iter().enumerate() {
            let fine = entry(cfg, 2 * pc.n_v, z, seeds.fields)?;
            let (g1, g2) = (entries[k].report.lambda_gap, fine.report.lambda_gap);
            gap_refinement.push((z, (g2 - g1).abs() / g2));
            entries.push(fine);
        }
    }

    let mut checks = Vec::new();
    let base: Vec<&HypoEntry> = entries.iter().filter(|e| e.n_v == pc.n_v).collect();
    let worst = |f: &dyn Fn(&HypoEntry) -> f64| base.iter().map(|e| f(e)).fold(f64::NEG_INFINITY, f64::max);
    let all_dims = base.iter().all(|e| e.report.kernel_dim == d + 2);
    checks.push(Check::holds("kernel_dim", all_dims));
    checks.push(Check::at_most("sandwich_violation", worst(&|e| e.fields.sandwich), 1e-12));
    checks.push(Check::at_most("coercivity_violation", worst(&|e| e.fields.coercivity), 1e-9));
    match pc.backend {
        Backend::BgkSurrogate => {
            checks.push(Check::at_most("sym_defect", worst(&|e| e.report.sym_defect), 1e-12));
            checks.push(Check::at_most("lambda_gap_minus_one", worst(&|e| (e.report.lambda_gap - 1.0).abs()), 1e-10));
        }
        Backend::BoltzmannQuadrature => {
            checks.push(Check::at_most("kernel_residual", worst(&|e| e.report.kernel_residual), 1e-6));
            checks.push(Check::at_most("dissipation", worst(&|e| e.fields.dissipation), 1e-14));
            if !gap_refinement.is_empty() {
                let change = gap_refinement.iter().map(|g| g.1).fold(0.0, f64::max);
                checks.push(Check::at_most("gap_refinement_change", change, 0.05));
            }
        }
    }

    let rows: Vec<Vec<f64>> = entries
        .iter()
        .map(|e| {
            let r = &e.report;
            vec![
                e.n_v as f64,
                e.z,
                r.sym_defect,
                r.kernel_dim as f64,
                r.kernel_residual,
                r.lambda_gap,
                r.c_pi,
                r.c_pi1,
                e.fields.coercivity,
                e.fields.sandwich,
            ]
        })
        .collect();
    dir.write_csv(
        "hypo.csv",
        &["n_v", "z", "sym_defect", "kernel_dim", "kernel_residual", "lambda_gap", "c_pi", "c_pi1", "coercivity", "sandwich"],
        &rows,
    )?;
    let study = HypoStudy { backend: pc.backend, dim: d, gamma: cfg.kernel.gamma, entries, gap_refinement };
    Ok(Outcome::new("verify-hypo", checks, &study))
}
