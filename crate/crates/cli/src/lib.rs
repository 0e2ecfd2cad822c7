//! Batch harness: named checks with seeded parameters, JSON reports and
//! exit codes for CI.

pub mod checks;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use checks::CheckDef;

pub const DEFAULT_SEED: u64 = 42;

/// Built-in suite covering every acceptance check.
pub const DEFAULT_SUITE: &str = include_str!("../suites/default.toml");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("unknown check `{0}`")]
    UnknownCheck(String),
    #[error("{check}: {msg}")]
    Param { check: String, msg: String },
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// Process exit codes.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const FAIL: i32 = 1;
    pub const INCONCLUSIVE: i32 = 2;
    pub const IO: i32 = 3;
}

/// One requested check. Unset parameters take the check's defaults.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckSpec {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
}

impl CheckSpec {
    pub fn new(name: impl Into<String>) -> Self {
        CheckSpec {
            name: name.into(),
            params: BTreeMap::new(),
            seed: DEFAULT_SEED,
        }
    }

    pub fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Status {
    Pass,
    Fail,
    /// The numerical rank could not be decided.
    Inconclusive(String),
    /// The computation itself failed (pole, singular element, ...).
    Error(String),
}

/// One line of the JSON report. `residual_max` is null when no residual
/// could be computed.
#[derive(Clone, Debug, Serialize)]
pub struct ReportRecord {
    pub check: String,
    pub params: BTreeMap<String, Value>,
    pub residual_max: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub wall_time_ms: u64,
    pub seed: u64,
    #[serde(skip)]
    pub status: Status,
    #[serde(skip)]
    pub experimental: bool,
}

/// A validated check request ready to run.
pub struct Prepared {
    def: &'static CheckDef,
    params: checks::Params,
    seed: u64,
}

pub fn prepare(spec: &CheckSpec) -> Result<Prepared, CliError> {
    let def = checks::find(&spec.name).ok_or_else(|| CliError::UnknownCheck(spec.name.clone()))?;
    let params = def.resolve(&spec.params).map_err(|msg| CliError::Param {
        check: spec.name.clone(),
        msg,
    })?;
    Ok(Prepared {
        def,
        params,
        seed: spec.seed,
    })
}

fn json_params(p: &checks::Params) -> BTreeMap<String, Value> {
    p.values()
        .iter()
        .map(|(k, &v)| {
            let j = if p.is_integer(k) { Value::from(v as i64) } else { Value::from(v) };
            (k.clone(), j)
        })
        .collect()
}

impl Prepared {
    pub fn run(&self) -> ReportRecord {
        let start = Instant::now();
        let tolerance = self.params.get("tolerance");
        let mut worst = 0.0f64;
        let mut status = None;
        for k in 0..self.params.usize("seeds") as u64 {
            match self.def.run_seed(&self.params, self.seed.wrapping_add(k)) {
                Ok(r) => worst = worst.max(r),
                Err(e @ ellcomm_core::Error::RankAmbiguous { .. }) => {
                    status = Some(Status::Inconclusive(e.to_string()));
                    break;
                }
                Err(e) => {
                    status = Some(Status::Error(e.to_string()));
                    break;
                }
            }
        }
        let (residual_max, status) = match status {
            Some(s) => (None, s),
            None if worst <= tolerance => (Some(worst), Status::Pass),
            None => (Some(worst), Status::Fail),
        };
        ReportRecord {
            check: self.def.name.to_string(),
            params: json_params(&self.params),
            residual_max,
            tolerance,
            pass: status == Status::Pass,
            wall_time_ms: start.elapsed().as_millis() as u64,
            seed: self.seed,
            status,
            experimental: self.def.experimental,
        }
    }
}

pub fn run_check(spec: &CheckSpec) -> Result<ReportRecord, CliError> {
    Ok(prepare(spec)?.run())
}

/// Validates every request first, then runs them in parallel. The report
/// keeps the order of `specs`.
pub fn run_specs(specs: &[CheckSpec]) -> Result<Vec<ReportRecord>, CliError> {
    let prepared = specs.iter().map(prepare).collect::<Result<Vec<_>, _>>()?;
    Ok(prepared.par_iter().map(Prepared::run).collect())
}

/// Failures dominate inconclusive results; experimental checks are ignored.
pub fn exit_code(records: &[ReportRecord]) -> i32 {
    let gated = || records.iter().filter(|r| !r.experimental);
    if gated().any(|r| matches!(r.status, Status::Fail | Status::Error(_))) {
        exit::FAIL
    } else if gated().any(|r| matches!(r.status, Status::Inconclusive(_))) {
        exit::INCONCLUSIVE
    } else {
        exit::PASS
    }
}

/// Parses a suite: one `[[check]]` table per check with `name`, optional
/// `seed` and numeric parameters as the remaining keys.
pub fn parse_config(text: &str) -> Result<Vec<CheckSpec>, CliError> {
    let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    if let Some(k) = doc.keys().find(|k| k.as_str() != "check") {
        return Err(CliError::Config(format!("unexpected top-level key `{k}`")));
    }
    let entries = match doc.get("check") {
        None => return Ok(Vec::new()),
        Some(toml::Value::Array(a)) => a,
        Some(_) => return Err(CliError::Config("`check` must be an array of tables".into())),
    };
    entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let t = e
                .as_table()
                .ok_or_else(|| CliError::Config(format!("check #{} is not a table", i + 1)))?;
            let name = t
                .get("name")
                .and_then(|v| v.as_str())
                .ok_or_else(|| CliError::Config(format!("check #{} has no name", i + 1)))?;
            let mut spec = CheckSpec::new(name);
            for (k, v) in t {
                match (k.as_str(), v) {
                    ("name", _) => {}
                    ("seed", toml::Value::Integer(s)) if *s >= 0 => spec.seed = *s as u64,
                    ("seed", _) => return Err(CliError::Config(format!("{name}: seed must be a non-negative integer"))),
                    (_, toml::Value::Integer(x)) => {
                        spec.params.insert(k.clone(), *x as f64);
                    }
                    (_, toml::Value::Float(x)) => {
                        spec.params.insert(k.clone(), *x);
                    }
                    _ => return Err(CliError::Config(format!("{name}: `{k}` must be a number"))),
                }
            }
            Ok(spec)
        })
        .collect()
}

pub fn run_suite(path: &Path) -> Result<Vec<ReportRecord>, CliError> {
    let text = std::fs::read_to_string(path)?;
    run_specs(&parse_config(&text)?)
}

pub fn to_json(records: &[ReportRecord]) -> String {
    serde_json::to_string_pretty(records).expect("report records serialize")
}

/// One human-readable line per record.
pub fn summary_line(r: &ReportRecord) -> String {
    let verdict = match (&r.status, r.experimental) {
        (Status::Pass, _) => "PASS".to_string(),
        (Status::Fail, true) => "FAIL (experimental)".to_string(),
        (Status::Fail, false) => "FAIL".to_string(),
        (Status::Inconclusive(m), _) => format!("INCONCLUSIVE ({m})"),
        (Status::Error(m), _) => format!("ERROR ({m})"),
    };
    let residual = r.residual_max.map_or("-".to_string(), |x| format!("{x:.3e}"));
    format!(
        "{:<22} {:>10} <= {:<8.1e} {:>7} ms  {verdict}",
        r.check, residual, r.tolerance, r.wall_time_ms
    )
}
