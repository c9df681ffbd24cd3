//! Experiment configuration as a flat TOML table.
//!
//! Every key is optional. Command-line overrides are merged in before
//! validation, so a bad value is reported against its key either way.

use std::fmt;
use std::path::PathBuf;

use thiserror::Error;
use toml::{Table, Value};
use triproj::assembly::{initial_sizes, ToleranceSchedule};
use triproj::synthesis::required_dimension;

pub const DEFAULT_STAGES: i64 = 4;
pub const DEFAULT_RESERVE: i64 = 8;
pub const DEFAULT_EPS_SCALE: f64 = 1.0;
pub const DEFAULT_DIMENSION_CAP: i64 = 1024;
pub const DEFAULT_OUTPUT_DIR: &str = "out";
/// Beyond this the smallest tolerances leave the range where stage counts fit a machine word.
pub const MAX_STAGES: i64 = 16;

const KEYS: [&str; 7] = ["stages", "reserve", "eps_scale", "dimension_cap", "output_dir", "emit_trajectory", "seed"];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub stages: usize,
    pub reserve: usize,
    pub eps_scale: f64,
    pub dimension_cap: usize,
    pub output_dir: PathBuf,
    pub emit_trajectory: bool,
    /// Not used by the construction, which is deterministic; recorded in the report.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot parse configuration: {0}")]
    Syntax(String),
    #[error("invalid configuration: {}", join(.0))]
    Fields(Vec<FieldError>),
}

fn join(errors: &[FieldError]) -> String {
    errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

impl ConfigError {
    /// Names of the offending keys, empty for a syntax error.
    pub fn fields(&self) -> Vec<&str> {
        match self {
            ConfigError::Syntax(_) => Vec::new(),
            ConfigError::Fields(es) => es.iter().map(|e| e.field.as_str()).collect(),
        }
    }
}

/// Values given on the command line; they replace the file's.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub stages: Option<i64>,
    pub reserve: Option<i64>,
    pub eps_scale: Option<f64>,
    pub output_dir: Option<PathBuf>,
    pub emit_trajectory: bool,
}

impl Overrides {
    fn apply(&self, table: &mut Table) {
        if let Some(v) = self.stages {
            table.insert("stages".into(), Value::Integer(v));
        }
        if let Some(v) = self.reserve {
            table.insert("reserve".into(), Value::Integer(v));
        }
        if let Some(v) = self.eps_scale {
            table.insert("eps_scale".into(), Value::Float(v));
        }
        if let Some(v) = &self.output_dir {
            table.insert("output_dir".into(), Value::String(v.to_string_lossy().into_owned()));
        }
        if self.emit_trajectory {
            table.insert("emit_trajectory".into(), Value::Boolean(true));
        }
    }
}

pub fn validate_config(raw: &str) -> Result<ExperimentConfig, ConfigError> {
    validate_with(raw, &Overrides::default())
}

/// Parses, merges overrides, fills defaults and checks every field,
/// including that the dimension cap admits the smallest plan.
pub fn validate_with(raw: &str, overrides: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let mut table: Table = raw.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.message().to_string()))?;
    overrides.apply(&mut table);
    let mut errors = Vec::new();
    let mut fail = |field: &str, message: String| errors.push(FieldError { field: field.into(), message });

    let mut unknown: Vec<&String> = table.keys().filter(|k| !KEYS.contains(&k.as_str())).collect();
    unknown.sort();
    for k in unknown {
        fail(k, "unknown key".into());
    }

    let stages = integer(&table, "stages", DEFAULT_STAGES, &mut fail);
    let reserve = integer(&table, "reserve", DEFAULT_RESERVE, &mut fail);
    let cap = integer(&table, "dimension_cap", DEFAULT_DIMENSION_CAP, &mut fail);
    let seed = integer(&table, "seed", 0, &mut fail);
    let eps_scale = match table.get("eps_scale") {
        None => Some(DEFAULT_EPS_SCALE),
        Some(Value::Float(v)) => Some(*v),
        Some(Value::Integer(v)) => Some(*v as f64),
        Some(other) => {
            fail("eps_scale", format!("expected a number, got {}", other.type_str()));
            None
        }
    };
    let output_dir = match table.get("output_dir") {
        None => Some(PathBuf::from(DEFAULT_OUTPUT_DIR)),
        Some(Value::String(s)) if !s.is_empty() => Some(PathBuf::from(s)),
        Some(other) => {
            fail("output_dir", format!("expected a non-empty path, got {other}"));
            None
        }
    };
    let emit_trajectory = match table.get("emit_trajectory") {
        None => Some(false),
        Some(Value::Boolean(b)) => Some(*b),
        Some(other) => {
            fail("emit_trajectory", format!("expected true or false, got {other}"));
            None
        }
    };

    let stages = stages.filter(|&k| {
        let ok = (1..=MAX_STAGES).contains(&k);
        if !ok {
            fail("stages", format!("must lie in 1..={MAX_STAGES}, got {k}"));
        }
        ok
    });
    let reserve = reserve.filter(|&r| {
        let ok = r >= 1;
        if !ok {
            fail("reserve", format!("must be at least 1, got {r}"));
        }
        ok
    });
    let eps_scale = eps_scale.filter(|&s| {
        let ok = s > 0.0 && s <= 1.0;
        if !ok {
            fail("eps_scale", format!("must lie in (0, 1], got {s}"));
        }
        ok
    });
    let cap = cap.filter(|&c| {
        let ok = c >= 1;
        if !ok {
            fail("dimension_cap", format!("must be positive, got {c}"));
        }
        ok
    });
    let seed = seed.filter(|&s| {
        let ok = s >= 0;
        if !ok {
            fail("seed", format!("must be non-negative, got {s}"));
        }
        ok
    });

    if let (Some(k), Some(r), Some(s), Some(c)) = (stages, reserve, eps_scale, cap) {
        let needed = minimal_dimension(k as usize, r as usize, s);
        if needed > c as usize {
            fail("dimension_cap", format!("plan needs at least {needed} dimensions, cap is {c}"));
        }
    }

    match (stages, reserve, eps_scale, cap, output_dir, emit_trajectory, seed) {
        (
            Some(stages),
            Some(reserve),
            Some(eps_scale),
            Some(cap),
            Some(output_dir),
            Some(emit_trajectory),
            Some(seed),
        ) if errors.is_empty() => Ok(ExperimentConfig {
            stages: stages as usize,
            reserve: reserve as usize,
            eps_scale,
            dimension_cap: cap as usize,
            output_dir,
            emit_trajectory,
            seed: seed as u64,
        }),
        _ => Err(ConfigError::Fields(errors)),
    }
}

/// Total dimension of the plan before any ratchet is lengthened.
pub fn minimal_dimension(stages: usize, reserve: usize, eps_scale: f64) -> usize {
    let tol = ToleranceSchedule::new(stages, eps_scale).expect("validated stages and eps_scale");
    required_dimension(&initial_sizes(&tol), reserve)
}

fn integer(table: &Table, key: &str, default: i64, fail: &mut impl FnMut(&str, String)) -> Option<i64> {
    match table.get(key) {
        None => Some(default),
        Some(Value::Integer(v)) => Some(*v),
        Some(other) => {
            fail(key, format!("expected an integer, got {other}"));
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = validate_with("", &Overrides { stages: Some(1), ..Default::default() }).unwrap();
        assert_eq!((c.stages, c.reserve, c.eps_scale, c.dimension_cap), (1, 8, 1.0, 1024));
        assert_eq!(c.output_dir, PathBuf::from("out"));
        assert!(!c.emit_trajectory);
    }

    #[test]
    fn default_stage_count_does_not_fit_the_default_cap() {
        let err = validate_config("").unwrap_err();
        assert_eq!(err.fields(), vec!["dimension_cap"]);
        let c = validate_config("dimension_cap = 100000").unwrap();
        assert_eq!(c.stages, 4);
    }

    #[test]
    fn negative_stages_is_named() {
        let err = validate_config("stages = -1").unwrap_err();
        assert_eq!(err.fields(), vec!["stages"]);
    }

    #[test]
    fn errors_are_aggregated() {
        let err = validate_config("stages = 0\nreserve = 0\neps_scale = 2.0\ncolour = 1").unwrap_err();
        assert_eq!(err.fields(), vec!["colour", "stages", "reserve", "eps_scale"]);
    }

    #[test]
    fn overrides_win() {
        let o = Overrides { stages: Some(1), reserve: Some(3), emit_trajectory: true, ..Default::default() };
        let c = validate_with("stages = 2\nreserve = 9", &o).unwrap();
        assert_eq!((c.stages, c.reserve, c.emit_trajectory), (1, 3, true));
    }

    #[test]
    fn wrong_types_are_named() {
        let err = validate_config("stages = \"two\"\nemit_trajectory = 1").unwrap_err();
        assert_eq!(err.fields(), vec!["stages", "emit_trajectory"]);
    }

    #[test]
    fn syntax_errors_are_reported() {
        assert!(matches!(validate_config("stages = = 1"), Err(ConfigError::Syntax(_))));
    }

    #[test]
    fn one_stage_plan_size() {
        assert_eq!(minimal_dimension(1, 8, 1.0), 174);
    }
}
