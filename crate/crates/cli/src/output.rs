use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use serde_json::{json, Map, Value};

use crate::config::{RunConfig, FORMAT_VERSION};

/// Everything that ends a run with a nonzero exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, config or parameters (exit 2).
    Invalid(String),
    /// Part of the mean-field profile is not covered by either branch (exit 3).
    Unresolved(Value),
    /// A wall was required and there is none (exit 4).
    NoWall(Value),
    /// The simulation failed its stationarity check (exit 5).
    NotStationary(Value),
    Other(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Invalid(_) => 2,
            Failure::Unresolved(_) => 3,
            Failure::NoWall(_) => 4,
            Failure::NotStationary(_) => 5,
            Failure::Other(_) => 1,
        })
    }

    pub fn report(&self) {
        match self {
            Failure::Invalid(msg) => eprintln!("error: {msg}"),
            Failure::Unresolved(v) | Failure::NoWall(v) | Failure::NotStationary(v) => {
                eprintln!("{}", serde_json::to_string_pretty(v).unwrap_or_default())
            }
            Failure::Other(e) => eprintln!("error: {e:#}"),
        }
    }
}

impl From<tasep_lk::Error> for Failure {
    fn from(e: tasep_lk::Error) -> Self {
        use tasep_lk::Error as E;
        match e {
            E::InvalidParameter { .. } | E::InvalidConfig(_) | E::ParameterMismatch => {
                Failure::Invalid(e.to_string())
            }
            E::NoWall => Failure::NoWall(json!({ "error": "no_wall", "message": e.to_string() })),
            other => Failure::Other(other.into()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.into())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Other(e.into())
    }
}

/// `format_version`, the resolved config and `K`, the common head of every
/// output record.
pub fn header(cfg: &RunConfig) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("format_version".into(), json!(FORMAT_VERSION));
    m.insert("command".into(), json!(cfg.command));
    m.insert(
        "config".into(),
        serde_json::to_value(cfg).unwrap_or(Value::Null),
    );
    m.insert("k".into(), json!(cfg.k()));
    m
}

/// Destination of a command: a file (with a `.meta.json` sidecar for
/// tabular output) or stdout (metadata on stderr).
pub struct Sink {
    path: Option<PathBuf>,
}

impl Sink {
    pub fn new(path: Option<PathBuf>) -> Self {
        Self { path }
    }

    pub fn write(&self, bytes: &[u8]) -> Result<(), Failure> {
        match &self.path {
            Some(p) => std::fs::write(p, bytes)?,
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(bytes)?;
                out.flush()?;
            }
        }
        Ok(())
    }

    pub fn write_json(&self, value: &Value) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Other(e.into()))?;
        text.push('\n');
        self.write(text.as_bytes())
    }

    pub fn write_meta(&self, value: &Value) -> Result<(), Failure> {
        let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Other(e.into()))?;
        match &self.path {
            Some(p) => std::fs::write(sidecar_path(p), text + "\n")?,
            None => eprintln!("{text}"),
        }
        Ok(())
    }
}

/// `out.csv` -> `out.csv.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Shortest decimal that parses back to the same value.
pub fn num(v: f64) -> String {
    format!("{v}")
}
