//! Analytic parameter derivatives of the wall location `x_s` and half-height
//! `eps`, a central finite-difference harness to check them, and monotonicity
//! scans.
//!
//! All formulas are written in the helper quantities
//!
//! ```text
//! A = 2eps + 2K eps - K + 1     B = 2eps + 2K eps + K - 1
//! C = K beta + beta - 1         D = K alpha + alpha - K
//! E = 1 - 2alpha - 2eps         F = 1 - 2beta - 2eps
//! ```
//!
//! `K` is varied at fixed `Omega_d`, so `Omega_a = K Omega_d` moves with it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain_wall::{check_existence, regime, solve_wall, Regime, WallSolution};
use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Distance from `C = 0`, `D = 0`, `eps = 0` below which the formulas are
/// treated as singular.
pub const SINGULAR_TOL: f64 = 1e-12;

/// Smallest `K - 1` accepted by the `K` derivatives.
pub const MIN_K_GAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HelperValues {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

pub fn helpers(params: &ModelParams, eps: f64) -> HelperValues {
    let k = params.k();
    let alpha = params.alpha();
    let beta = params.beta();
    HelperValues {
        a: 2.0 * eps + 2.0 * k * eps - k + 1.0,
        b: 2.0 * eps + 2.0 * k * eps + k - 1.0,
        c: k * beta + beta - 1.0,
        d: k * alpha + alpha - k,
        e: 1.0 - 2.0 * alpha - 2.0 * eps,
        f: 1.0 - 2.0 * beta - 2.0 * eps,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    OmegaD,
    K,
    Alpha,
    Beta,
}

impl Parameter {
    pub const ALL: [Parameter; 4] = [
        Parameter::OmegaD,
        Parameter::K,
        Parameter::Alpha,
        Parameter::Beta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Parameter::OmegaD => "omega_d",
            Parameter::K => "k",
            Parameter::Alpha => "alpha",
            Parameter::Beta => "beta",
        }
    }

    /// Default central-difference step.
    pub fn default_step(self) -> f64 {
        match self {
            Parameter::K => 1e-4,
            _ => 1e-5,
        }
    }

    pub fn value(self, params: &ModelParams) -> f64 {
        match self {
            Parameter::OmegaD => params.omega_d(),
            Parameter::K => params.k(),
            Parameter::Alpha => params.alpha(),
            Parameter::Beta => params.beta(),
        }
    }

    /// `params` with this parameter replaced; the others, including `K`
    /// when `Omega_d` moves, stay fixed.
    pub fn set(self, params: &ModelParams, value: f64) -> Result<ModelParams> {
        let (alpha, beta, k, od) = (params.alpha(), params.beta(), params.k(), params.omega_d());
        match self {
            Parameter::OmegaD => ModelParams::from_k(alpha, beta, k, value),
            Parameter::K => ModelParams::from_k(alpha, beta, value, od),
            Parameter::Alpha => ModelParams::from_k(value, beta, k, od),
            Parameter::Beta => ModelParams::from_k(alpha, value, k, od),
        }
    }
}

impl std::str::FromStr for Parameter {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "omega_d" | "omega-d" | "od" => Ok(Parameter::OmegaD),
            "k" => Ok(Parameter::K),
            "alpha" => Ok(Parameter::Alpha),
            "beta" => Ok(Parameter::Beta),
            other => Err(format!(
                "unknown parameter '{other}' (expected omega_d, k, alpha or beta)"
            )),
        }
    }
}

fn nonzero(value: f64, what: &'static str) -> Result<f64> {
    if value.abs() <= SINGULAR_TOL {
        Err(Error::Singular(what))
    } else {
        Ok(value)
    }
}

fn positive_eps(wall: &WallSolution) -> Result<f64> {
    let eps = wall.eps();
    if eps <= SINGULAR_TOL {
        Err(Error::Singular("eps = 0"))
    } else {
        Ok(eps)
    }
}

fn k_above_one(params: &ModelParams) -> Result<f64> {
    let k = params.k();
    if k <= 1.0 + MIN_K_GAP {
        Err(Error::Singular("K = 1 (the K derivatives divide by K - 1)"))
    } else {
        Ok(k)
    }
}

/// `dx_s/dOmega_d = [2eps(K+1)(1 - 2x_s) - (K-1)] / (4 eps Omega_d (K+1))`.
pub fn dxs_domega(params: &ModelParams, wall: &WallSolution) -> Result<f64> {
    let eps = positive_eps(wall)?;
    let k = params.k();
    let s = k + 1.0;
    Ok((2.0 * eps * s * (1.0 - 2.0 * wall.x_s) - (k - 1.0)) / (4.0 * eps * params.omega_d() * s))
}

/// Whether `dx_s/dOmega_d <= 0` is guaranteed, i.e.
/// `2eps(K+1)(1 - 2x_s) <= K - 1`.
pub fn dxs_domega_predicts_decrease(params: &ModelParams, wall: &WallSolution) -> bool {
    let k = params.k();
    wall.height * (k + 1.0) * (1.0 - 2.0 * wall.x_s) <= k - 1.0
}

/// `dx_s/dK`, evaluated term by term:
///
/// ```text
/// -1/(4(K+1)eps) * { (K-3)/(K^2-1) [(A+B)x_s - A]
///     + ([(K^2-1)(2alpha-1) + 4eps(K+1)D] C E - [4eps(K+1)C + (K^2-1)(1-2beta)] D F)
///       / (Omega_d (K+1)^2 (K-1) C D) }
/// ```
///
/// The bracket `4eps(K+1)C + (K^2-1)(1-2beta)` equals `(K-1)^2 + 2AC`, the
/// mirror image of the `alpha` bracket.
pub fn dxs_dk(params: &ModelParams, wall: &WallSolution) -> Result<f64> {
    dxs_dk_with(params, wall, |k| k * k - 1.0)
}

/// [`dxs_dk`] with `2(K+1)(1-2beta)` in place of `(K^2-1)(1-2beta)`. The
/// two agree only at `K = 3`; kept for comparison.
pub fn dxs_dk_linear_factor(params: &ModelParams, wall: &WallSolution) -> Result<f64> {
    dxs_dk_with(params, wall, |k| 2.0 * (k + 1.0))
}

fn dxs_dk_with(
    params: &ModelParams,
    wall: &WallSolution,
    beta_factor: impl Fn(f64) -> f64,
) -> Result<f64> {
    let eps = positive_eps(wall)?;
    let k = k_above_one(params)?;
    let h = helpers(params, eps);
    let c = nonzero(h.c, "C = 0 (beta = 1/(K+1))")?;
    let d = nonzero(h.d, "D = 0 (alpha = K/(K+1))")?;
    let (alpha, beta, od, x_s) = (params.alpha(), params.beta(), params.omega_d(), wall.x_s);
    let s = k + 1.0;
    let k2m1 = k * k - 1.0;

    let first = (k - 3.0) / k2m1 * ((h.a + h.b) * x_s - h.a);
    let left = (k2m1 * (2.0 * alpha - 1.0) + 4.0 * eps * s * d) * c * h.e;
    let right = (4.0 * eps * s * c + beta_factor(k) * (1.0 - 2.0 * beta)) * d * h.f;
    let second = (left - right) / (od * s * s * (k - 1.0) * c * d);
    Ok(-(first + second) / (4.0 * s * eps))
}

/// Right-hand side slack of the sufficient condition for `dx_s/dK <= 0`
/// when `beta < 1/(K+1)`:
///
/// ```text
/// (K-1) + [8eps(beta-alpha) + (K^2-1)(2alpha-1)CE + (K-1)(2beta-1)DF]/(K-3)
///     - 2eps(K+1)(1-2x_s)
/// ```
///
/// Non-negative values mean the condition holds. Requires `K != 3`.
pub fn dxs_dk_condition_slack(params: &ModelParams, wall: &WallSolution) -> Result<f64> {
    let eps = positive_eps(wall)?;
    let k = params.k();
    if (k - 3.0).abs() <= SINGULAR_TOL {
        return Err(Error::Singular("K = 3"));
    }
    let h = helpers(params, eps);
    let (alpha, beta) = (params.alpha(), params.beta());
    let num = 8.0 * eps * (beta - alpha)
        + (k * k - 1.0) * (2.0 * alpha - 1.0) * h.c * h.e
        + (k - 1.0) * (2.0 * beta - 1.0) * h.d * h.f;
    Ok((k - 1.0) + num / (k - 3.0) - 2.0 * eps * (k + 1.0) * (1.0 - 2.0 * wall.x_s))
}

/// `dx_s/dalpha = (1 - 2alpha) B / (4 eps Omega_d (K+1) D)`.
pub fn dxs_dalpha(params: &ModelParams, wall: &WallSolution) -> Result<f64> {
    let eps = positive_eps(wall)?;
    let h = helpers(params, eps);
    let d = nonzero(h.d, "D = 0 (alpha = K/(K+1))")?;
    Ok(
        (1.0 - 2.0 * params.alpha()) * h.b
            / (4.0 * eps * params.omega_d() * (params.k() + 1.0) * d),
    )
}

/// `dx_s/dbeta = (2beta - 1) A / (4 eps Omega_d (K+1) C)`.
pub fn dxs_dbeta(params: &ModelParams, wall: &WallSolution) -> Result<f64> {
    let eps = positive_eps(wall)?;
    let h = helpers(params, eps);
    let c = nonzero(h.c, "C = 0 (beta = 1/(K+1))")?;
    Ok((2.0 * params.beta() - 1.0) * h.a / (4.0 * eps * params.omega_d() * (params.k() + 1.0) * c))
}

/// `deps/dOmega_d = -A B / (16 (K+1) eps^2)`.
pub fn deps_domega(params: &ModelParams, wall: &WallSolution) -> Result<f64> {
    let eps = positive_eps(wall)?;
    let h = helpers(params, eps);
    Ok(-h.a * h.b / (16.0 * (params.k() + 1.0) * eps * eps))
}

/// `deps/dK`:
///
/// ```text
/// -{ ([(K-1)^2 + 2BD] A C E + [(K-1)^2 + 2AC] B D F) / ((K+1)^2 (K-1) C D)
///    + (K-3) A B Omega_d / (K^2-1) } / (16 (K+1) eps^2)
/// ```
pub fn deps_dk(params: &ModelParams, wall: &WallSolution) -> Result<f64> {
    let eps = positive_eps(wall)?;
    let k = k_above_one(params)?;
    let h = helpers(params, eps);
    let c = nonzero(h.c, "C = 0 (beta = 1/(K+1))")?;
    let d = nonzero(h.d, "D = 0 (alpha = K/(K+1))")?;
    let s = k + 1.0;
    let km1_sq = (k - 1.0) * (k - 1.0);
    let num = (km1_sq + 2.0 * h.b * d) * h.a * c * h.e + (km1_sq + 2.0 * h.a * c) * h.b * d * h.f;
    let bracket = num / (s * s * (k - 1.0) * c * d)
        + (k - 3.0) * h.a * h.b * params.omega_d() / (k * k - 1.0);
    Ok(-bracket / (16.0 * s * eps * eps))
}

/// `deps/dalpha = (1 - 2alpha) A B / (16 (K+1) eps^2 D)`.
///
/// This is the form consistent with implicit differentiation of the
/// matching condition and with finite differences.
pub fn deps_dalpha(params: &ModelParams, wall: &WallSolution) -> Result<f64> {
    let eps = positive_eps(wall)?;
    let h = helpers(params, eps);
    let d = nonzero(h.d, "D = 0 (alpha = K/(K+1))")?;
    Ok((1.0 - 2.0 * params.alpha()) * h.a * h.b / (16.0 * (params.k() + 1.0) * eps * eps * d))
}

/// `(1 - 2alpha) A B / (16 (K+1)^2 eps^2 D)`: the variant with a squared
/// `(K+1)` in the denominator. It is smaller than [`deps_dalpha`] by a factor
/// `K+1` (so it gives -1/4 instead of -1/2 at `K = 1`); kept for comparison
/// only.
pub fn deps_dalpha_squared_factor(params: &ModelParams, wall: &WallSolution) -> Result<f64> {
    Ok(deps_dalpha(params, wall)? / (params.k() + 1.0))
}

/// `deps/dbeta = (1 - 2beta) A B / (16 (K+1) eps^2 C)`.
pub fn deps_dbeta(params: &ModelParams, wall: &WallSolution) -> Result<f64> {
    let eps = positive_eps(wall)?;
    let h = helpers(params, eps);
    let c = nonzero(h.c, "C = 0 (beta = 1/(K+1))")?;
    Ok((1.0 - 2.0 * params.beta()) * h.a * h.b / (16.0 * (params.k() + 1.0) * eps * eps * c))
}

/// Analytic `(dx_s/dp, deps/dp)`.
pub fn analytic(
    params: &ModelParams,
    wall: &WallSolution,
    parameter: Parameter,
) -> Result<(f64, f64)> {
    Ok(match parameter {
        Parameter::OmegaD => (dxs_domega(params, wall)?, deps_domega(params, wall)?),
        Parameter::K => (dxs_dk(params, wall)?, deps_dk(params, wall)?),
        Parameter::Alpha => (dxs_dalpha(params, wall)?, deps_dalpha(params, wall)?),
        Parameter::Beta => (dxs_dbeta(params, wall)?, deps_dbeta(params, wall)?),
    })
}

/// Analytic derivatives next to central finite differences.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeReport {
    pub parameter: Parameter,
    pub analytic_xs: f64,
    pub analytic_eps: f64,
    /// Only for `K`: [`dxs_dk_linear_factor`].
    pub alt_analytic_xs: Option<f64>,
    /// Only for `alpha`: [`deps_dalpha_squared_factor`].
    pub alt_analytic_eps: Option<f64>,
    pub fd_xs: f64,
    pub fd_eps: f64,
    pub fd_step: f64,
    pub rel_gap_xs: f64,
    pub rel_gap_eps: f64,
}

/// `|a - b| / max(|a|, |b|, 1e-12)`.
pub fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}

fn wall_regime_signature(params: &ModelParams) -> (bool, Regime, bool) {
    let v = check_existence(params);
    let k = params.k();
    (v.exists, regime(params), params.beta() >= 1.0 / (k + 1.0))
}

/// Central differences of `x_s` and `eps` from two full wall re-solves at
/// `p +- step`.
pub fn finite_difference(
    params: &ModelParams,
    parameter: Parameter,
    step: f64,
) -> Result<DerivativeReport> {
    let wall = solve_wall(params)?;
    let value = parameter.value(params);
    let plus = parameter.set(params, value + step)?;
    let minus = parameter.set(params, value - step)?;

    let sig = wall_regime_signature(params);
    for side in [&plus, &minus] {
        let other = wall_regime_signature(side);
        if !other.0 {
            return Err(Error::RegimeCrossed("the wall disappears"));
        }
        if other.1 != sig.1 || other.2 != sig.2 {
            return Err(Error::RegimeCrossed("beta moves across 1/(K+1)"));
        }
    }
    let wp = solve_wall(&plus)?;
    let wm = solve_wall(&minus)?;
    let fd_xs = (wp.x_s - wm.x_s) / (2.0 * step);
    let fd_eps = (wp.eps() - wm.eps()) / (2.0 * step);

    let (analytic_xs, analytic_eps) = analytic(params, &wall, parameter)?;
    let alt_analytic_xs = match parameter {
        Parameter::K => Some(dxs_dk_linear_factor(params, &wall)?),
        _ => None,
    };
    let alt_analytic_eps = match parameter {
        Parameter::Alpha => Some(deps_dalpha_squared_factor(params, &wall)?),
        _ => None,
    };
    Ok(DerivativeReport {
        parameter,
        analytic_xs,
        analytic_eps,
        alt_analytic_xs,
        alt_analytic_eps,
        fd_xs,
        fd_eps,
        fd_step: step,
        rel_gap_xs: relative_gap(analytic_xs, fd_xs),
        rel_gap_eps: relative_gap(analytic_eps, fd_eps),
    })
}

/// One sample of a parameter scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    pub value: f64,
    /// `(x_s, 2eps)`, or `None` where no wall exists.
    pub wall: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Increasing,
    Decreasing,
    /// Rises then falls.
    Peak,
    /// Falls then rises.
    Valley,
    None,
}

impl Trend {
    pub fn is_monotone(self) -> bool {
        matches!(self, Trend::Increasing | Trend::Decreasing)
    }
}

/// Tolerance of the strict comparisons in [`classify`].
pub const TREND_TOL: f64 = 1e-9;

/// Labels a sampled curve. Consecutive differences must exceed
/// [`TREND_TOL`] in magnitude; one sign change gives a peak or valley.
pub fn classify(values: &[f64]) -> Trend {
    if values.len() < 2 {
        return Trend::None;
    }
    let mut signs = Vec::with_capacity(values.len() - 1);
    for w in values.windows(2) {
        let d = w[1] - w[0];
        if d > TREND_TOL {
            signs.push(1);
        } else if d < -TREND_TOL {
            signs.push(-1);
        } else {
            return Trend::None;
        }
    }
    let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
    match (changes, signs[0]) {
        (0, 1) => Trend::Increasing,
        (0, _) => Trend::Decreasing,
        (1, 1) => Trend::Peak,
        (1, _) => Trend::Valley,
        _ => Trend::None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub parameter: Parameter,
    pub points: Vec<ScanPoint>,
}

impl ScanResult {
    fn walls(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().filter_map(|p| p.wall)
    }

    pub fn wall_count(&self) -> usize {
        self.walls().count()
    }

    pub fn xs_trend(&self) -> Trend {
        classify(&self.walls().map(|w| w.0).collect::<Vec<_>>())
    }

    pub fn height_trend(&self) -> Trend {
        classify(&self.walls().map(|w| w.1).collect::<Vec<_>>())
    }
}

/// Samples `(x_s, 2eps)` at `n_steps` evenly spaced values of `parameter`
/// over `[from, to]`. Points are evaluated in parallel and returned in order.
pub fn monotonicity_scan(
    base: &ModelParams,
    parameter: Parameter,
    from: f64,
    to: f64,
    n_steps: usize,
) -> Result<ScanResult> {
    if n_steps < 2 {
        return Err(Error::InvalidParameter {
            name: "steps",
            value: n_steps as f64,
            reason: "a scan needs at least two samples",
        });
    }
    let values: Vec<f64> = (0..n_steps)
        .map(|i| from + (to - from) * i as f64 / (n_steps - 1) as f64)
        .collect();
    let points = values
        .par_iter()
        .map(|&value| {
            let p = parameter.set(base, value)?;
            let wall = match solve_wall(&p) {
                Ok(w) => Some((w.x_s, w.height)),
                Err(Error::NoWall) => None,
                Err(e) => return Err(e),
            };
            Ok(ScanPoint { value, wall })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanResult { parameter, points })
}
