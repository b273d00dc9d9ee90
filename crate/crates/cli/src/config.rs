use std::path::Path;

use kinetic_apnn::apnn::{ApnnSettings, CollocationConfig, LossConfig, NetworkSpec, TrainConfig};
use kinetic_apnn::collision::KernelSpec;
use kinetic_apnn::problem::{Problem, ProblemConfig};
use kinetic_apnn::reference::{AcousticConfig, LyapunovWeights, SolverConfig};
use kinetic_apnn::Error;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{RunError, RunResult};

/// Parameters of the verification studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudiesConfig {
    /// Random velocity profiles for the coercivity and sandwich checks.
    pub hypo_fields: usize,
    /// Knudsen numbers of the asymptotic-limit study, largest first.
    pub ap_eps: Vec<f64>,
    pub ap_n_x: usize,
    pub ap_dt: f64,
    /// Required agreement with the acoustic solver at the smallest `eps`.
    pub ap_tolerance: f64,
    /// Half-widths of the trial velocity boxes.
    pub tail_boxes: Vec<f64>,
    /// Seed offset and size of the fixed batch that scores checkpoints.
    pub eval_interior: usize,
    pub eval_initial: usize,
    pub eval_boundary: usize,
    pub min_checkpoints: usize,
    pub spearman_threshold: f64,
    /// Knudsen numbers at which the error is compared at a fixed loss.
    pub bounded_eps: Vec<f64>,
    pub bounded_loss: f64,
    /// Largest tolerated growth of the error over the `bounded_eps` sweep.
    pub bounded_growth: f64,
    pub equivalence_eps: Vec<f64>,
    pub equivalence_fields: usize,
    pub equivalence_n_x: usize,
    /// Loss the desk training should reach.
    pub target_loss: f64,
}

impl Default for StudiesConfig {
    fn default() -> Self {
        Self {
            hypo_fields: 1000,
            ap_eps: vec![1.0, 1e-2, 1e-4, 1e-6],
            ap_n_x: 128,
            ap_dt: 2e-4,
            ap_tolerance: 1e-3,
            tail_boxes: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            eval_interior: 256,
            eval_initial: 128,
            eval_boundary: 32,
            min_checkpoints: 10,
            spearman_threshold: 0.9,
            bounded_eps: vec![1.0, 0.1, 0.01],
            bounded_loss: 1e-3,
            bounded_growth: 10.0,
            equivalence_eps: vec![1.0, 0.1, 0.01],
            equivalence_fields: 1000,
            equivalence_n_x: 32,
            target_loss: 1e-3,
        }
    }
}

impl StudiesConfig {
    fn validate(&self) -> RunResult<()> {
        let positive_list = |key: &str, v: &[f64]| {
            if v.is_empty() || v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                Err(RunError::config(format!("studies.{key}"), "need a nonempty list of positive values"))
            } else {
                Ok(())
            }
        };
        positive_list("ap_eps", &self.ap_eps)?;
        positive_list("tail_boxes", &self.tail_boxes)?;
        positive_list("bounded_eps", &self.bounded_eps)?;
        positive_list("equivalence_eps", &self.equivalence_eps)?;
        for (key, v) in [
            ("hypo_fields", self.hypo_fields),
            ("eval_interior", self.eval_interior),
            ("eval_initial", self.eval_initial),
            ("eval_boundary", self.eval_boundary),
            ("equivalence_fields", self.equivalence_fields),
        ] {
            if v == 0 {
                return Err(RunError::config(format!("studies.{key}"), "must be positive"));
            }
        }
        if self.ap_n_x < 8 {
            return Err(RunError::config("studies.ap_n_x", "need at least 8 points"));
        }
        if self.equivalence_n_x < 8 {
            return Err(RunError::config("studies.equivalence_n_x", "need at least 8 points"));
        }
        for (key, v) in [
            ("ap_dt", self.ap_dt),
            ("ap_tolerance", self.ap_tolerance),
            ("bounded_loss", self.bounded_loss),
            ("target_loss", self.target_loss),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(RunError::config(format!("studies.{key}"), "must be positive"));
            }
        }
        if !(self.bounded_growth >= 1.0) {
            return Err(RunError::config("studies.bounded_growth", "must be at least 1"));
        }
        if !(-1.0..=1.0).contains(&self.spearman_threshold) {
            return Err(RunError::config("studies.spearman_threshold", "must lie in [-1, 1]"));
        }
        Ok(())
    }
}

/// Everything one run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub problem: ProblemConfig,
    pub kernel: KernelSpec,
    pub network: NetworkSpec,
    pub collocation: CollocationConfig,
    pub loss: LossConfig,
    pub training: TrainConfig,
    pub solver: SolverConfig,
    pub acoustic: AcousticConfig,
    /// Weights of the Lyapunov functional; derived from the projection
    /// constant when absent.
    pub lyapunov: Option<LyapunovWeights>,
    pub studies: StudiesConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            problem: ProblemConfig::default(),
            kernel: KernelSpec::default(),
            network: NetworkSpec { width: 24, ..Default::default() },
            collocation: CollocationConfig::default(),
            loss: LossConfig::default(),
            training: TrainConfig { steps: 20_000, lr: 3e-3, lr_final: Some(1e-5), ..Default::default() },
            solver: SolverConfig::default(),
            acoustic: AcousticConfig::default(),
            lyapunov: None,
            studies: StudiesConfig::default(),
        }
    }
}

fn parse_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Sets `key=value` in `table`, creating intermediate tables.
fn apply_override(table: &mut toml::Table, spec: &str) -> RunResult<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| RunError::config(spec.trim(), "override must look like key=value"))?;
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(RunError::config(key, "empty path segment"));
    }
    let mut cur = table;
    for (n, part) in parts[..parts.len() - 1].iter().enumerate() {
        let entry = cur.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match entry {
            toml::Value::Table(t) => t,
            _ => return Err(RunError::config(parts[..=n].join("."), "is not a table")),
        };
    }
    cur.insert(parts[parts.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

fn unknown_field(message: &str) -> Option<&str> {
    let rest = message.strip_prefix("unknown field `")?;
    rest.split('`').next()
}

fn deserialize(value: toml::Value) -> RunResult<ExperimentConfig> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let message = e.inner().to_string();
        let mut key = if path == "." { String::new() } else { path };
        if let Some(field) = unknown_field(&message) {
            if !key.ends_with(field) {
                key = if key.is_empty() { field.to_string() } else { format!("{key}.{field}") };
            }
        }
        RunError::config(if key.is_empty() { "<root>".to_string() } else { key }, message)
    })
}

impl ExperimentConfig {
    /// Reads an optional TOML file, applies `key=value` overrides and
    /// validates the result.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> RunResult<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| RunError::config("--config", format!("{}: {e}", p.display())))?;
                text.parse::<toml::Table>().map_err(|e| {
                    let key = e.span().map_or("<file>".to_string(), |s| locate_key(&text, s.start));
                    RunError::config(key, e.message().to_string())
                })?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg = deserialize(toml::Value::Table(table))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Cross-field checks, including assembly of the problem operators.
    pub fn validate(&self) -> RunResult<()> {
        self.network.validate()?;
        self.settings().validate()?;
        self.solver.validate()?;
        self.acoustic_validate()?;
        if let Some(w) = &self.lyapunov {
            w.validate()?;
        }
        self.studies.validate()?;
        self.problem()?;
        Ok(())
    }

    fn acoustic_validate(&self) -> RunResult<()> {
        if !(self.acoustic.dt.is_finite() && self.acoustic.dt > 0.0) {
            return Err(RunError::config("acoustic.dt", "must be positive"));
        }
        Ok(())
    }

    pub fn settings(&self) -> ApnnSettings {
        ApnnSettings {
            collocation: self.collocation.clone(),
            loss: self.loss.clone(),
            training: self.training.clone(),
        }
    }

    /// Assembles the problem, mapping assembly failures to config keys.
    pub fn problem(&self) -> RunResult<Problem> {
        self.problem_with(&self.problem)
    }

    pub fn problem_with(&self, pc: &ProblemConfig) -> RunResult<Problem> {
        Problem::new(pc, &self.kernel).map_err(|e| match e {
            Error::GramNotOrthonormal { defect, tol } => RunError::config(
                "problem.n_v",
                format!("velocity grid too coarse: Gram defect {defect:e} above {tol:e}"),
            ),
            Error::KernelMarginViolated { eta, b0, required } => RunError::config(
                "kernel.b1",
                format!("b0({eta}) = {b0} below the required margin {required}"),
            ),
            other => other.into(),
        })
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex(&Sha256::digest(json.as_bytes()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Dotted key of the assignment containing byte `offset` of a TOML file.
fn locate_key(text: &str, offset: usize) -> String {
    let mut section = String::new();
    let mut found = String::new();
    let mut pos = 0;
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.starts_with('[') {
            section = trimmed.trim_matches(|c| c == '[' || c == ']').trim().to_string();
        } else if let Some((k, _)) = trimmed.split_once('=') {
            let k = k.trim();
            found = if section.is_empty() { k.to_string() } else { format!("{section}.{k}") };
        }
        pos += line.len() + 1;
        if pos > offset {
            break;
        }
    }
    if found.is_empty() {
        "<file>".to_string()
    } else {
        found
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_build_nested_tables() {
        let mut t = toml::Table::new();
        apply_override(&mut t, "problem.eps=0.1").unwrap();
        apply_override(&mut t, "studies.ap_eps=[1.0, 0.5]").unwrap();
        apply_override(&mut t, "acoustic.scheme=upwind").unwrap();
        let cfg = deserialize(toml::Value::Table(t)).unwrap();
        assert_eq!(cfg.problem.eps, 0.1);
        assert_eq!(cfg.studies.ap_eps, vec![1.0, 0.5]);
    }

    #[test]
    fn unknown_keys_are_named() {
        let mut t = toml::Table::new();
        apply_override(&mut t, "problem.epsilon=0.1").unwrap();
        match deserialize(toml::Value::Table(t)) {
            Err(RunError::Config { key, .. }) => assert_eq!(key, "problem.epsilon"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn type_errors_are_named() {
        let mut t = toml::Table::new();
        apply_override(&mut t, "training.steps=\"many\"").unwrap();
        match deserialize(toml::Value::Table(t)) {
            Err(RunError::Config { key, .. }) => assert_eq!(key, "training.steps"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = ExperimentConfig::default();
        let back: ExperimentConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }
}
