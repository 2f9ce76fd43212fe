//! Reduced model parameters and their validation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance below which `K - 1` is treated as zero and the linear
/// closed-form branches are used.
pub const DEGENERATE_K_TOL: f64 = 1e-12;

/// Unvalidated parameter record, as read from flags or a config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawParams {
    pub alpha: f64,
    pub beta: f64,
    pub omega_a: f64,
    pub omega_d: f64,
}

impl RawParams {
    pub fn validate(self) -> Result<ModelParams> {
        ModelParams::new(self.alpha, self.beta, self.omega_a, self.omega_d)
    }
}

/// Validated reduced parameters `(alpha, beta, Omega_a, Omega_d)` with the
/// cached ratio `K = Omega_a / Omega_d >= 1`.
///
/// `alpha` is the entry rate at the left end, `beta` the exit rate at the
/// right end, and `Omega_a = N omega_a`, `Omega_d = N omega_d` the reduced
/// attachment and detachment rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    alpha: f64,
    beta: f64,
    omega_a: f64,
    omega_d: f64,
    k: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, beta: f64, omega_a: f64, omega_d: f64) -> Result<Self> {
        Self::build(alpha, beta, omega_a, omega_d, omega_a / omega_d)
    }

    /// Builds parameters from `(alpha, beta, K, Omega_d)`, setting
    /// `Omega_a = K * Omega_d` and keeping `K` bit-exact.
    pub fn from_k(alpha: f64, beta: f64, k: f64, omega_d: f64) -> Result<Self> {
        Self::build(alpha, beta, k * omega_d, omega_d, k)
    }

    fn build(alpha: f64, beta: f64, omega_a: f64, omega_d: f64, k: f64) -> Result<Self> {
        check_unit("alpha", alpha)?;
        check_unit("beta", beta)?;
        if !omega_d.is_finite() || omega_d <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "omega_d",
                value: omega_d,
                reason: "the reduced detachment rate must be strictly positive",
            });
        }
        if !omega_a.is_finite() || omega_a < 0.0 {
            return Err(Error::InvalidParameter {
                name: "omega_a",
                value: omega_a,
                reason: "the reduced attachment rate must be non-negative",
            });
        }
        if !(k >= 1.0) {
            return Err(Error::InvalidParameter {
                name: "omega_a",
                value: omega_a,
                reason: "K = omega_a/omega_d must be >= 1; map K < 1 onto K > 1 with the \
                         particle-hole transformation (alpha<->beta, omega_a<->omega_d)",
            });
        }
        Ok(Self {
            alpha,
            beta,
            omega_a,
            omega_d,
            k,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn omega_a(&self) -> f64 {
        self.omega_a
    }

    pub fn omega_d(&self) -> f64 {
        self.omega_d
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Langmuir density `K/(K+1)`, the fixed point of the profile equation.
    pub fn fixed_point(&self) -> f64 {
        self.k / (self.k + 1.0)
    }

    /// True when `K = 1` to within [`DEGENERATE_K_TOL`].
    pub fn is_degenerate(&self) -> bool {
        (self.k - 1.0).abs() < DEGENERATE_K_TOL
    }

    pub fn raw(&self) -> RawParams {
        RawParams {
            alpha: self.alpha,
            beta: self.beta,
            omega_a: self.omega_a,
            omega_d: self.omega_d,
        }
    }
}

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::InvalidParameter {
            name,
            value,
            reason: "boundary rates must lie in [0, 1]",
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_is_derived() {
        assert_eq!(ModelParams::new(0.2, 0.2, 0.3, 0.3).unwrap().k(), 1.0);
        let p = ModelParams::new(0.1, 0.3, 0.3, 0.1).unwrap();
        assert!((p.k() - 3.0).abs() < 1e-15);
        assert!((p.fixed_point() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn rejects_k_below_one() {
        let err = ModelParams::new(0.2, 0.2, 0.1, 0.3).unwrap_err();
        assert!(err.to_string().contains("particle-hole"));
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(ModelParams::new(-0.1, 0.2, 0.3, 0.3).is_err());
        assert!(ModelParams::new(0.1, 1.2, 0.3, 0.3).is_err());
        assert!(ModelParams::new(0.1, 0.2, 0.3, 0.0).is_err());
        assert!(ModelParams::new(0.1, 0.2, 0.3, -1.0).is_err());
        assert!(ModelParams::new(f64::NAN, 0.2, 0.3, 0.3).is_err());
    }

    #[test]
    fn from_k_keeps_k() {
        let p = ModelParams::from_k(0.1, 0.2, 3.7, 0.13).unwrap();
        assert_eq!(p.k(), 3.7);
        assert!((p.omega_a() - 3.7 * 0.13).abs() < 1e-15);
    }
}
