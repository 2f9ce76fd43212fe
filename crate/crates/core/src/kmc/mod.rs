//! Exact continuous-time simulation of the finite lattice.
//!
//! Particles hop from site `i` to `i+1` at rate 1 when the target is empty,
//! enter at site 1 at rate `alpha`, leave from site `N` at rate `beta`,
//! attach to empty sites at rate `omega_a = Omega_a/N` and detach from
//! occupied sites at rate `omega_d = Omega_d/N`. Trajectories are generated
//! with the Gillespie direct method; every event kind is kept in an indexed
//! set so one event costs O(1).

mod compare;
mod estimate;
mod lattice;

pub use compare::{compare_to_meanfield, locate_wall, Comparison};
pub use estimate::{
    format_significant, run, run_replicas, write_profile_csv, ProfileEstimate, SimulationMetadata,
    RNG_ALGORITHM,
};
pub use lattice::{enabled_events, Event, EventCounts, EventKind, LatticeState, Simulator};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Starting configuration of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitialCondition {
    #[default]
    Empty,
    Full,
    /// Independent Bernoulli occupations with the given density.
    Product {
        density: f64,
    },
}

/// Default largest tolerated half-window gap.
pub const DEFAULT_STATIONARITY_THRESHOLD: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub n_sites: usize,
    pub alpha: f64,
    pub beta: f64,
    pub omega_a_reduced: f64,
    pub omega_d_reduced: f64,
    pub seed: u64,
    pub burn_in_time: f64,
    pub measure_time: f64,
    /// Length of one averaging block; block means give the standard errors.
    pub sample_interval: f64,
    #[serde(default)]
    pub initial: InitialCondition,
    #[serde(default = "default_threshold")]
    pub stationarity_threshold: f64,
}

fn default_threshold() -> f64 {
    DEFAULT_STATIONARITY_THRESHOLD
}

/// `max(10 N, 5 N / min(Omega_a, Omega_d))`, or `10 N` without Langmuir
/// kinetics.
pub fn default_burn_in(n_sites: usize, omega_a: f64, omega_d: f64) -> f64 {
    let n = n_sites as f64;
    let slowest = omega_a.min(omega_d);
    if slowest > 0.0 {
        (10.0 * n).max(5.0 * n / slowest)
    } else {
        10.0 * n
    }
}

impl LatticeConfig {
    /// Config with the default burn-in, a measurement window of `200 N` time
    /// units split into 50 blocks, and an empty initial lattice.
    pub fn new(
        n_sites: usize,
        alpha: f64,
        beta: f64,
        omega_a: f64,
        omega_d: f64,
        seed: u64,
    ) -> Self {
        let measure_time = 200.0 * n_sites as f64;
        Self {
            n_sites,
            alpha,
            beta,
            omega_a_reduced: omega_a,
            omega_d_reduced: omega_d,
            seed,
            burn_in_time: default_burn_in(n_sites, omega_a, omega_d),
            measure_time,
            sample_interval: measure_time / 50.0,
            initial: InitialCondition::Empty,
            stationarity_threshold: DEFAULT_STATIONARITY_THRESHOLD,
        }
    }

    pub fn from_params(params: &ModelParams, n_sites: usize, seed: u64) -> Self {
        Self::new(
            n_sites,
            params.alpha(),
            params.beta(),
            params.omega_a(),
            params.omega_d(),
            seed,
        )
    }

    /// Sets the measurement window and splits it into `blocks` blocks.
    pub fn with_measurement(mut self, measure_time: f64, blocks: usize) -> Self {
        self.measure_time = measure_time;
        self.sample_interval = measure_time / blocks.max(1) as f64;
        self
    }

    pub fn omega_a(&self) -> f64 {
        self.omega_a_reduced / self.n_sites as f64
    }

    pub fn omega_d(&self) -> f64 {
        self.omega_d_reduced / self.n_sites as f64
    }

    pub fn n_blocks(&self) -> usize {
        (self.measure_time / self.sample_interval).round().max(1.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, value: f64, reason: &'static str| {
            Err(Error::InvalidParameter {
                name,
                value,
                reason,
            })
        };
        if self.n_sites < 2 {
            return bad(
                "n_sites",
                self.n_sites as f64,
                "the lattice needs at least two sites",
            );
        }
        for (name, value) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(0.0..=1.0).contains(&value) {
                return bad(name, value, "boundary rates must lie in [0, 1]");
            }
        }
        for (name, value) in [
            ("omega_a", self.omega_a_reduced),
            ("omega_d", self.omega_d_reduced),
        ] {
            if !value.is_finite() || value < 0.0 {
                return bad(
                    name,
                    value,
                    "Langmuir rates must be finite and non-negative",
                );
            }
        }
        for (name, value) in [
            ("burn_in_time", self.burn_in_time),
            ("measure_time", self.measure_time),
            ("sample_interval", self.sample_interval),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return bad(name, value, "times must be strictly positive");
            }
        }
        if self.sample_interval > self.measure_time {
            return bad(
                "sample_interval",
                self.sample_interval,
                "must not exceed measure_time",
            );
        }
        let blocks = self.measure_time / self.sample_interval;
        if (blocks - blocks.round()).abs() > 1e-9 * blocks.max(1.0) {
            return bad(
                "sample_interval",
                self.sample_interval,
                "must divide measure_time",
            );
        }
        if let InitialCondition::Product { density } = self.initial {
            if !(0.0..=1.0).contains(&density) {
                return bad("initial.density", density, "must lie in [0, 1]");
            }
        }
        if !(self.stationarity_threshold > 0.0) {
            return bad(
                "stationarity_threshold",
                self.stationarity_threshold,
                "must be positive",
            );
        }
        Ok(())
    }

    /// Whether the rates equal those of `params`.
    pub fn matches(&self, params: &ModelParams) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
        close(self.alpha, params.alpha())
            && close(self.beta, params.beta())
            && close(self.omega_a_reduced, params.omega_a())
            && close(self.omega_d_reduced, params.omega_d())
    }
}

/// Swaps particles and holes and reverses the lattice:
/// `(alpha, beta, Omega_a, Omega_d) -> (beta, alpha, Omega_d, Omega_a)`.
pub fn particle_hole_transform(config: &LatticeConfig) -> LatticeConfig {
    let initial = match config.initial {
        InitialCondition::Empty => InitialCondition::Full,
        InitialCondition::Full => InitialCondition::Empty,
        InitialCondition::Product { density } => InitialCondition::Product {
            density: 1.0 - density,
        },
    };
    LatticeConfig {
        alpha: config.beta,
        beta: config.alpha,
        omega_a_reduced: config.omega_d_reduced,
        omega_d_reduced: config.omega_a_reduced,
        initial,
        ..*config
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transform_swaps_rates() {
        let c = LatticeConfig::new(50, 0.2, 0.3, 0.3, 0.1, 1);
        let t = particle_hole_transform(&c);
        assert_eq!(
            (t.alpha, t.beta, t.omega_a_reduced, t.omega_d_reduced),
            (0.3, 0.2, 0.1, 0.3)
        );
        assert_eq!(t.n_sites, 50);
        assert_eq!(particle_hole_transform(&t), c);
    }

    #[test]
    fn burn_in_default() {
        assert_eq!(default_burn_in(100, 0.3, 0.1), 5000.0);
        assert_eq!(default_burn_in(100, 3.0, 1.0), 1000.0);
        assert_eq!(default_burn_in(100, 0.0, 0.0), 1000.0);
    }

    #[test]
    fn validation() {
        let c = LatticeConfig::new(10, 0.2, 0.2, 0.3, 0.3, 0);
        assert!(c.validate().is_ok());
        assert!(LatticeConfig { n_sites: 1, ..c }.validate().is_err());
        assert!(LatticeConfig {
            measure_time: 0.0,
            ..c
        }
        .validate()
        .is_err());
        assert!(LatticeConfig {
            sample_interval: 3.0,
            measure_time: 10.0,
            ..c
        }
        .validate()
        .is_err());
        assert!(LatticeConfig { alpha: 1.5, ..c }.validate().is_err());
        assert!(LatticeConfig {
            omega_d_reduced: -0.1,
            ..c
        }
        .validate()
        .is_err());
        assert_eq!(c.n_blocks(), 50);
        assert!((c.omega_a() - 0.03).abs() < 1e-15);
    }

    #[test]
    fn config_json_round_trip() {
        let c = LatticeConfig {
            initial: InitialCondition::Product { density: 0.25 },
            ..LatticeConfig::new(10, 0.2, 0.2, 0.3, 0.3, 9)
        };
        let json = serde_json::to_string(&c).unwrap();
        let back: LatticeConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }
}
