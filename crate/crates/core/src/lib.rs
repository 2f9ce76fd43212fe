//! Stationary density profiles and domain walls of the totally asymmetric
//! exclusion process with Langmuir kinetics (bulk attachment/detachment).
//!
//! The crate has two halves:
//!
//! * the continuum mean-field theory: [`meanfield`] evaluates the two
//!   implicit branch solutions, [`domain_wall`] decides whether a shock
//!   exists and locates it, and [`sensitivity`] provides the analytic
//!   parameter derivatives of the wall location and height together with a
//!   finite-difference harness;
//! * an exact continuous-time simulation of the finite lattice in [`kmc`],
//!   used to check the mean-field predictions.
//!
//! ```
//! use tasep_lk::{domain_wall, ModelParams};
//!
//! let params = ModelParams::new(0.2, 0.2, 0.3, 0.3).unwrap();
//! let wall = domain_wall::solve_wall(&params).unwrap();
//! assert!((wall.x_s - 0.5).abs() < 1e-12);
//! assert!((wall.height - 0.3).abs() < 1e-12);
//! ```

pub mod domain_wall;
pub mod error;
pub mod kmc;
pub mod meanfield;
pub mod params;
pub mod roots;
pub mod sensitivity;

pub use domain_wall::{CompositeProfile, ExistenceVerdict, Regime, WallSolution};
pub use error::{Error, Result};
pub use meanfield::{BranchPoint, BranchSide};
pub use params::{ModelParams, RawParams};
