use serde::Serialize;

/// One pass/fail criterion of a study.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    /// `"<="`, `">="` or `"holds"`.
    pub relation: &'static str,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, relation: "<=", passed: value <= limit }
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, relation: ">=", passed: value >= limit }
    }

    pub fn holds(name: &str, ok: bool) -> Self {
        Self { name: name.into(), value: f64::from(u8::from(ok)), limit: 1.0, relation: "holds", passed: ok }
    }
}

/// Checks of a run and the command-specific report.
#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub command: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub report: serde_json::Value,
}

impl Outcome {
    pub fn new<T: Serialize>(command: &str, checks: Vec<Check>, report: &T) -> Self {
        Self {
            command: command.into(),
            passed: checks.iter().all(|c| c.passed),
            checks,
            report: serde_json::to_value(report).expect("report serializes"),
        }
    }

    pub fn failed(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}
