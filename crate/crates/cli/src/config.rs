//! Run configuration: flags layered over an optional JSON file.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use tasep_lk::kmc::{
    default_burn_in, InitialCondition, LatticeConfig, DEFAULT_STATIONARITY_THRESHOLD,
};
use tasep_lk::ModelParams;

use crate::output::Failure;

pub const FORMAT_VERSION: &str = "tasep-lk/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Every knob of every subcommand. Unset fields are omitted when the
/// resolved config is echoed, so the echo is also a valid `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fd_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parameter: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub from: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub to: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sites: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measure_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocks: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_density: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stationarity_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exclusion: Option<f64>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),*) => {
        RunConfig { $($field: $top.$field.or($base.$field)),* }
    };
}

impl RunConfig {
    /// Fields set in `top` win.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        overlay!(
            self,
            top,
            command,
            alpha,
            beta,
            omega_a,
            omega_d,
            format,
            points,
            fd_step,
            parameter,
            from,
            to,
            steps,
            sites,
            seed,
            burn_in,
            measure_time,
            blocks,
            initial,
            initial_density,
            stationarity_threshold,
            replicas,
            profile,
            exclusion
        )
    }

    /// Reads a config file. A file with a top-level `config` object (any
    /// output metadata) contributes that object.
    pub fn load(path: &Path) -> Result<RunConfig, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Invalid(format!("cannot read config {}: {e}", path.display())))?;
        let mut value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Failure::Invalid(format!("config {} is not JSON: {e}", path.display())))?;
        if let Some(inner) = value.get_mut("config") {
            value = inner.take();
        }
        serde_json::from_value(value)
            .map_err(|e| Failure::Invalid(format!("config {}: {e}", path.display())))
    }

    /// File values under flag values, tagged with `command`.
    pub fn resolve(
        command: &str,
        file: Option<&Path>,
        flags: RunConfig,
    ) -> Result<RunConfig, Failure> {
        let base = match file {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(c) = &base.command {
            if c != command {
                return Err(Failure::Invalid(format!(
                    "config was written by '{c}' but the command is '{command}'"
                )));
            }
        }
        let mut cfg = base.overlay(flags);
        cfg.command = Some(command.to_string());
        Ok(cfg)
    }

    pub fn require<T: Copy>(value: Option<T>, flag: &str) -> Result<T, Failure> {
        value.ok_or_else(|| Failure::Invalid(format!("missing --{flag}")))
    }

    pub fn rates(&self) -> Result<(f64, f64, f64, f64), Failure> {
        Ok((
            Self::require(self.alpha, "alpha")?,
            Self::require(self.beta, "beta")?,
            Self::require(self.omega_a, "omega-a")?,
            Self::require(self.omega_d, "omega-d")?,
        ))
    }

    pub fn model_params(&self) -> Result<ModelParams, Failure> {
        let (a, b, oa, od) = self.rates()?;
        Ok(ModelParams::new(a, b, oa, od)?)
    }

    /// `Omega_a / Omega_d` when both are known.
    pub fn k(&self) -> Option<f64> {
        match (self.omega_a, self.omega_d) {
            (Some(a), Some(d)) if d > 0.0 => Some(a / d),
            _ => None,
        }
    }

    pub fn format_or(&self, default: Format, allowed: &[Format]) -> Result<Format, Failure> {
        let f = self.format.unwrap_or(default);
        if allowed.contains(&f) {
            Ok(f)
        } else {
            Err(Failure::Invalid(format!(
                "format {f:?} is not available for {}",
                self.command.as_deref().unwrap_or("this command")
            )))
        }
    }

    /// Fills in the lattice defaults so the echoed config pins every value.
    pub fn fill_lattice_defaults(&mut self) -> Result<(), Failure> {
        let (_, _, oa, od) = self.rates()?;
        let n = Self::require(self.sites, "sites")?;
        self.seed.get_or_insert(0);
        self.burn_in
            .get_or_insert_with(|| default_burn_in(n, oa, od));
        self.measure_time.get_or_insert(200.0 * n as f64);
        self.blocks.get_or_insert(50);
        self.initial.get_or_insert_with(|| "empty".to_string());
        self.stationarity_threshold
            .get_or_insert(DEFAULT_STATIONARITY_THRESHOLD);
        self.replicas.get_or_insert(1);
        Ok(())
    }

    /// Lattice config of the first replica. Call after
    /// [`RunConfig::fill_lattice_defaults`].
    pub fn lattice(&self) -> Result<LatticeConfig, Failure> {
        let (alpha, beta, oa, od) = self.rates()?;
        let n_sites = Self::require(self.sites, "sites")?;
        let measure_time = Self::require(self.measure_time, "measure-time")?;
        let blocks = Self::require(self.blocks, "blocks")?;
        if blocks == 0 {
            return Err(Failure::Invalid("--blocks must be at least 1".into()));
        }
        let initial = match self.initial.as_deref().unwrap_or("empty") {
            "empty" => InitialCondition::Empty,
            "full" => InitialCondition::Full,
            "product" => InitialCondition::Product {
                density: Self::require(self.initial_density, "initial-density")?,
            },
            other => {
                return Err(Failure::Invalid(format!(
                    "unknown initial condition '{other}' (expected empty, full or product)"
                )))
            }
        };
        let config = LatticeConfig {
            n_sites,
            alpha,
            beta,
            omega_a_reduced: oa,
            omega_d_reduced: od,
            seed: Self::require(self.seed, "seed")?,
            burn_in_time: Self::require(self.burn_in, "burn-in")?,
            measure_time,
            sample_interval: measure_time / blocks as f64,
            initial,
            stationarity_threshold: Self::require(
                self.stationarity_threshold,
                "stationarity-threshold",
            )?,
        };
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file = RunConfig {
            alpha: Some(0.1),
            beta: Some(0.2),
            ..Default::default()
        };
        let flags = RunConfig {
            beta: Some(0.3),
            ..Default::default()
        };
        let merged = file.overlay(flags);
        assert_eq!(merged.alpha, Some(0.1));
        assert_eq!(merged.beta, Some(0.3));
    }

    #[test]
    fn echo_is_a_config() {
        let cfg = RunConfig {
            command: Some("wall".into()),
            alpha: Some(0.2),
            format: Some(Format::Json),
            ..Default::default()
        };
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(json, r#"{"command":"wall","alpha":0.2,"format":"json"}"#);
        assert_eq!(serde_json::from_str::<RunConfig>(&json).unwrap(), cfg);
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"alpha":0.2,"gamma":1}"#).is_err());
    }

    #[test]
    fn lattice_defaults() {
        let mut cfg = RunConfig {
            alpha: Some(0.2),
            beta: Some(0.2),
            omega_a: Some(0.3),
            omega_d: Some(0.3),
            sites: Some(100),
            ..Default::default()
        };
        cfg.fill_lattice_defaults().unwrap();
        let lattice = cfg.lattice().unwrap();
        assert_eq!(lattice.measure_time, 20000.0);
        assert_eq!(lattice.n_blocks(), 50);
        assert_eq!(lattice.initial, InitialCondition::Empty);
        let bad = RunConfig {
            initial: Some("half".into()),
            ..cfg
        };
        assert!(bad.lattice().is_err());
    }
}
