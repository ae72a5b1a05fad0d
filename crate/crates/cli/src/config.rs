//! Run configuration: a TOML file with top-level run keys and one section of
//! scenario parameters named after the scenario.
//!
//! ```toml
//! scenario = "deloc"
//! seed = 7
//! output_dir = "results"   # optional
//! threads = 4              # optional
//!
//! [deloc]
//! d3_ns = [4, 5, 6]
//! ```

use rgibbs::experiments::{ScenarioConfig, SCENARIOS};
use std::fmt;
use std::path::{Path, PathBuf};
use thiserror::Error;
use toml::{Table, Value};

pub const DEFAULT_SEED: u64 = 20240601;

const RUN_KEYS: [&str; 4] = ["scenario", "seed", "output_dir", "threads"];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub threads: Option<usize>,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, message: String },
    #[error("invalid configuration:\n{}", .0.iter().map(|e| format!("  - {e}")).collect::<Vec<_>>().join("\n"))]
    Validation(Vec<String>),
}

/// Value kinds of the parameter schema.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Integer,
    Float,
    Boolean,
    String,
    IntegerList,
    FloatList,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Integer => "integer",
            Kind::Float => "float",
            Kind::Boolean => "boolean",
            Kind::String => "string",
            Kind::IntegerList => "integer list",
            Kind::FloatList => "float list",
        })
    }
}

fn kind_of(v: &Value) -> Option<Kind> {
    Some(match v {
        Value::Integer(_) => Kind::Integer,
        Value::Float(_) => Kind::Float,
        Value::Boolean(_) => Kind::Boolean,
        Value::String(_) => Kind::String,
        Value::Array(a) => match a.first() {
            Some(Value::Integer(_)) => Kind::IntegerList,
            Some(Value::Float(_)) => Kind::FloatList,
            _ => return None,
        },
        _ => return None,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamSpec {
    pub key: String,
    pub kind: Kind,
    pub default: Value,
}

/// Parameter table of a scenario config, without the tag.
fn params_table(cfg: &ScenarioConfig) -> Table {
    let mut t = Table::try_from(cfg).expect("scenario parameters serialize to a table");
    t.remove("scenario");
    t
}

/// Keys, kinds and defaults accepted in the section of scenario `id`.
pub fn schema(id: &str) -> Option<Vec<ParamSpec>> {
    let defaults = params_table(&ScenarioConfig::default_for(id)?);
    Some(
        defaults
            .into_iter()
            .map(|(key, default)| {
                let kind = kind_of(&default).expect("defaults use schema kinds");
                ParamSpec { key, kind, default }
            })
            .collect(),
    )
}

/// Check a value against its schema kind, widening integers where floats are expected.
fn coerce(value: &Value, kind: Kind) -> Option<Value> {
    let float = |v: &Value| match v {
        Value::Float(x) => Some(Value::Float(*x)),
        Value::Integer(i) => Some(Value::Float(*i as f64)),
        _ => None,
    };
    let integer = |v: &Value| match v {
        Value::Integer(i) if *i >= 0 => Some(v.clone()),
        _ => None,
    };
    match (kind, value) {
        (Kind::Integer, v) => integer(v),
        (Kind::Float, v) => float(v),
        (Kind::Boolean, Value::Boolean(_)) | (Kind::String, Value::String(_)) => Some(value.clone()),
        (Kind::IntegerList, Value::Array(a)) => a.iter().map(integer).collect::<Option<Vec<_>>>().map(Value::Array),
        (Kind::FloatList, Value::Array(a)) => a.iter().map(float).collect::<Option<Vec<_>>>().map(Value::Array),
        _ => None,
    }
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Integer(i) if *i < 0 => "negative integer",
        other => other.type_str(),
    }
}

pub fn parse_str(text: &str) -> Result<RunConfig, ConfigError> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| {
        let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1);
        ConfigError::Parse { line, message: e.message().to_string() }
    })?;
    from_table(table)
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse_str(&text)
}

fn from_table(mut table: Table) -> Result<RunConfig, ConfigError> {
    let mut errs = Vec::new();
    let id = match table.remove("scenario") {
        Some(Value::String(s)) if SCENARIOS.contains(&s.as_str()) => Some(s),
        Some(Value::String(s)) => {
            errs.push(format!("unknown scenario `{s}` (expected one of: {})", SCENARIOS.join(", ")));
            None
        }
        Some(v) => {
            errs.push(format!("`scenario` must be a string, found {}", type_name(&v)));
            None
        }
        None => {
            errs.push("missing key `scenario`".to_string());
            None
        }
    };
    let seed = match table.remove("seed") {
        None => DEFAULT_SEED,
        Some(Value::Integer(i)) if i >= 0 => i as u64,
        Some(v) => {
            errs.push(format!("`seed` must be a non-negative integer, found {}", type_name(&v)));
            DEFAULT_SEED
        }
    };
    let output_dir = match table.remove("output_dir") {
        None => None,
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(v) => {
            errs.push(format!("`output_dir` must be a string, found {}", type_name(&v)));
            None
        }
    };
    let threads = match table.remove("threads") {
        None => None,
        Some(Value::Integer(i)) if i >= 1 => Some(i as usize),
        Some(v) => {
            errs.push(format!("`threads` must be a positive integer, found {v}"));
            None
        }
    };
    let section = id.as_ref().and_then(|id| table.remove(id.as_str()));
    for (key, _) in table {
        if SCENARIOS.contains(&key.as_str()) {
            errs.push(format!("section `[{key}]` does not match scenario `{}`", id.as_deref().unwrap_or("?")));
        } else {
            errs.push(format!("unknown key `{key}` (top-level keys: {}, plus the scenario section)", RUN_KEYS.join(", ")));
        }
    }
    let Some(id) = id else {
        return Err(ConfigError::Validation(errs));
    };
    let mut params = Table::new();
    match section {
        None => {}
        Some(Value::Table(given)) => {
            let spec = schema(&id).expect("known scenario");
            for (key, value) in given {
                match spec.iter().find(|s| s.key == key) {
                    None => errs.push(format!("unknown key `{key}` in [{id}]")),
                    Some(s) => match coerce(&value, s.kind) {
                        Some(v) => {
                            params.insert(key, v);
                        }
                        None => errs.push(format!("`{id}.{key}` must be {}, found {}", s.kind, type_name(&value))),
                    },
                }
            }
        }
        Some(v) => errs.push(format!("`{id}` must be a table, found {}", type_name(&v))),
    }
    if !errs.is_empty() {
        return Err(ConfigError::Validation(errs));
    }
    params.insert("scenario".into(), Value::String(id));
    let scenario: ScenarioConfig =
        Value::Table(params).try_into().map_err(|e: toml::de::Error| ConfigError::Validation(vec![e.message().to_string()]))?;
    let semantic = scenario.validate();
    if !semantic.is_empty() {
        return Err(ConfigError::Validation(semantic.into_iter().map(|e| format!("[{}] {e}", scenario.id())).collect()));
    }
    Ok(RunConfig { scenario, seed, output_dir, threads })
}

impl RunConfig {
    pub fn new(scenario: ScenarioConfig, seed: u64) -> Self {
        RunConfig { scenario, seed, output_dir: None, threads: None }
    }

    /// Normalized TOML with every parameter written out.
    pub fn to_toml(&self) -> String {
        let mut top = Table::new();
        let id = self.scenario.id();
        top.insert("scenario".into(), Value::String(id.into()));
        top.insert("seed".into(), Value::Integer(self.seed as i64));
        if let Some(dir) = &self.output_dir {
            top.insert("output_dir".into(), Value::String(dir.display().to_string()));
        }
        if let Some(t) = self.threads {
            top.insert("threads".into(), Value::Integer(t as i64));
        }
        top.insert(id.into(), Value::Table(params_table(&self.scenario)));
        toml::to_string(&top).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_parameters() {
        let cfg = parse_str("scenario = \"deloc\"\n").unwrap();
        assert_eq!(cfg.scenario, ScenarioConfig::default_for("deloc").unwrap());
        assert_eq!(cfg.seed, DEFAULT_SEED);
    }

    #[test]
    fn integers_widen_to_floats() {
        let cfg = parse_str("scenario = \"free_energy_bound\"\n[free_energy_bound]\nbeta = 1\n").unwrap();
        match cfg.scenario {
            ScenarioConfig::FreeEnergyBound(p) => assert_eq!(p.beta, 1.0),
            _ => unreachable!(),
        }
    }

    #[test]
    fn all_errors_are_collected() {
        let err = parse_str("scenario = \"ward\"\nbogus = 1\n[ward]\nsweeps = \"many\"\npotental = 2\n").unwrap_err();
        let ConfigError::Validation(list) = err else { panic!("expected validation error") };
        assert_eq!(list.len(), 3, "{list:?}");
    }

    #[test]
    fn parse_errors_carry_a_line() {
        let err = parse_str("scenario = \"ward\"\n[ward\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: Some(2), .. }), "{err}");
    }

    #[test]
    fn every_scenario_has_a_schema() {
        for id in SCENARIOS {
            assert!(!schema(id).unwrap().is_empty());
        }
    }
}
