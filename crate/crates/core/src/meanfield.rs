//! The two anchored solutions of the stationary mean-field profile equation
//!
//! ```text
//! (2 rho - 1) rho'(x) = (Omega_a + Omega_d) rho - Omega_a,   0 < x < 1
//! ```
//!
//! The left branch starts from `rho(0) = alpha`, the right branch from
//! `rho(1) = 1 - beta`. Both are known implicitly as `x = x(rho)`:
//!
//! ```text
//! left:  x     = 2(rho - a)/((K+1) Od) + (K-1)/((K+1)^2 Od) ln|(K - (K+1) rho)/(K - (K+1) a)|
//! right: 1 - x = 2(b' - rho)/((K+1) Od) + (K-1)/((K+1)^2 Od) ln|(K - (K+1) b')/(K - (K+1) rho)|
//! ```
//!
//! with `a = alpha`, `b' = 1 - beta`. Along a branch `x(rho)` is monotone
//! until the density reaches the characteristic value 1/2 (infinite slope),
//! the Langmuir fixed point `K/(K+1)` (approached only as `x -> -inf`), or the
//! edge of `[0, 1]`. Inversion is done by bisection over that interval.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ModelParams, DEGENERATE_K_TOL};
use crate::roots::bisect;

/// Singular ends of a branch interval are pulled in by this much before
/// bisection.
pub const SINGULAR_END_SHRINK: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchSide {
    /// Anchored by `rho(0) = alpha`.
    Left,
    /// Anchored by `rho(1) = 1 - beta`.
    Right,
}

impl fmt::Display for BranchSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BranchSide::Left => "left",
            BranchSide::Right => "right",
        })
    }
}

/// A point `(x, rho)` on one of the branches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchPoint {
    pub x: f64,
    pub rho: f64,
    pub side: BranchSide,
}

/// Right-hand side `K - (K+1) rho` is zero at the fixed point.
fn fixed_point_of(k: f64) -> f64 {
    k / (k + 1.0)
}

fn degenerate(k: f64) -> bool {
    (k - 1.0).abs() < DEGENERATE_K_TOL
}

/// The implicit branch formula evaluated with no domain checks.
///
/// `anchor` is the boundary density (`alpha` for [`BranchSide::Left`],
/// `1 - beta` for [`BranchSide::Right`]). Any `k > 0` is accepted, which is
/// what the particle-hole image of a `K >= 1` system needs. For `K = 1` the
/// exact linear forms are used.
pub fn implicit_position(side: BranchSide, anchor: f64, k: f64, omega_d: f64, rho: f64) -> f64 {
    let s = k + 1.0;
    if degenerate(k) {
        return match side {
            BranchSide::Left => (rho - anchor) / omega_d,
            BranchSide::Right => 1.0 - (anchor - rho) / omega_d,
        };
    }
    let log_coeff = (k - 1.0) / (s * s * omega_d);
    match side {
        BranchSide::Left => {
            2.0 * (rho - anchor) / (s * omega_d)
                + log_coeff * ((k - s * rho) / (k - s * anchor)).abs().ln()
        }
        BranchSide::Right => {
            1.0 - (2.0 * (anchor - rho) / (s * omega_d)
                + log_coeff * ((k - s * anchor) / (k - s * rho)).abs().ln())
        }
    }
}

/// `d rho / d x` of the profile equation, with no domain checks.
pub fn profile_slope(k: f64, omega_d: f64, rho: f64) -> f64 {
    if degenerate(k) {
        return omega_d;
    }
    omega_d * ((k + 1.0) * rho - k) / (2.0 * rho - 1.0)
}

/// `d rho / d x = ((Omega_a + Omega_d) rho - Omega_a) / (2 rho - 1)`.
pub fn ode_rhs(params: &ModelParams, rho: f64) -> Result<f64> {
    if rho == 0.5 {
        return Err(Error::CharacteristicSingularity);
    }
    Ok(profile_slope(params.k(), params.omega_d(), rho))
}

/// How a branch's density interval ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EndKind {
    /// Density 1/2, reached at a finite position; excluded.
    Characteristic,
    /// The fixed point `K/(K+1)`, approached asymptotically; excluded.
    FixedPoint,
    /// Density 0 or 1; included.
    DomainEdge,
    /// The anchor is the fixed point and the branch is constant.
    Constant,
}

/// The densities a branch sweeps as `x` moves from its anchor into the
/// domain: from `anchor` towards `end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub anchor: f64,
    pub end: f64,
    pub end_kind: EndKind,
}

impl Segment {
    /// Whether `rho` lies in the segment (closed at the anchor, open at a
    /// singular end).
    pub fn contains(&self, rho: f64) -> bool {
        let (lo, hi) = if self.anchor <= self.end {
            (self.anchor, self.end)
        } else {
            (self.end, self.anchor)
        };
        if rho < lo || rho > hi {
            return false;
        }
        match self.end_kind {
            EndKind::DomainEdge => true,
            EndKind::Constant => rho == self.anchor,
            EndKind::Characteristic | EndKind::FixedPoint => rho != self.end || rho == self.anchor,
        }
    }

    /// The last density bisection may use: the end itself when it is
    /// included, otherwise the end pulled towards the anchor.
    pub fn usable_end(&self) -> f64 {
        match self.end_kind {
            EndKind::DomainEdge | EndKind::Constant => self.end,
            EndKind::Characteristic | EndKind::FixedPoint => {
                if self.anchor == self.end {
                    self.anchor
                } else if self.end > self.anchor {
                    (self.end - SINGULAR_END_SHRINK).max(self.anchor)
                } else {
                    (self.end + SINGULAR_END_SHRINK).min(self.anchor)
                }
            }
        }
    }
}

/// One anchored branch of a parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    side: BranchSide,
    anchor: f64,
    k: f64,
    omega_d: f64,
}

impl Branch {
    pub fn new(params: &ModelParams, side: BranchSide) -> Self {
        let anchor = match side {
            BranchSide::Left => params.alpha(),
            BranchSide::Right => 1.0 - params.beta(),
        };
        Self::with_anchor(params, side, anchor)
    }

    /// A branch of `params`' profile equation anchored at an arbitrary
    /// boundary density (e.g. an effective exit density).
    pub fn with_anchor(params: &ModelParams, side: BranchSide, anchor: f64) -> Self {
        Self {
            side,
            anchor,
            k: params.k(),
            omega_d: params.omega_d(),
        }
    }

    pub fn side(&self) -> BranchSide {
        self.side
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    /// Position of the anchor: 0 for the left branch, 1 for the right.
    pub fn anchor_x(&self) -> f64 {
        match self.side {
            BranchSide::Left => 0.0,
            BranchSide::Right => 1.0,
        }
    }

    pub fn fixed_point(&self) -> f64 {
        fixed_point_of(self.k)
    }

    pub fn segment(&self) -> Segment {
        let a = self.anchor;
        let seg = |end, end_kind| Segment {
            anchor: a,
            end,
            end_kind,
        };

        if degenerate(self.k) {
            // rho' = Omega_d everywhere: the left branch rises with x, the
            // right one falls as x decreases. Neither may cross 1/2.
            return match self.side {
                BranchSide::Left if a < 0.5 => seg(0.5, EndKind::Characteristic),
                BranchSide::Left => seg(1.0, EndKind::DomainEdge),
                BranchSide::Right if a > 0.5 => seg(0.5, EndKind::Characteristic),
                BranchSide::Right => seg(0.0, EndKind::DomainEdge),
            };
        }

        let fp = self.fixed_point();
        if a == fp {
            return seg(fp, EndKind::Constant);
        }
        match self.side {
            BranchSide::Left => {
                if a > fp {
                    seg(1.0, EndKind::DomainEdge)
                } else {
                    // a <= 1/2 rises to 1/2; 1/2 < a < fp falls to 1/2; a == 1/2 is stuck
                    seg(0.5, EndKind::Characteristic)
                }
            }
            BranchSide::Right => {
                if a < 0.5 {
                    seg(0.0, EndKind::DomainEdge)
                } else {
                    seg(fp, EndKind::FixedPoint)
                }
            }
        }
    }

    /// Position at which the branch takes density `rho`.
    ///
    /// The value may lie outside `[0, 1]`. Densities separated from the
    /// anchor by the fixed point are never reached and are rejected.
    pub fn position(&self, rho: f64) -> Result<f64> {
        if !degenerate(self.k) {
            let fp = self.fixed_point();
            let s = self.k + 1.0;
            if self.k - s * rho == 0.0 || rho == fp {
                return Err(Error::FixedPointSingularity {
                    rho,
                    fixed_point: fp,
                });
            }
            if (rho - fp) * (self.anchor - fp) <= 0.0 {
                return Err(Error::AcrossFixedPoint {
                    side: self.side,
                    rho,
                    anchor: self.anchor,
                    fixed_point: fp,
                });
            }
        }
        Ok(implicit_position(
            self.side,
            self.anchor,
            self.k,
            self.omega_d,
            rho,
        ))
    }

    /// Furthest position (from the anchor, inwards) the branch is defined
    /// at; may be infinite or outside `[0, 1]`.
    pub fn reach(&self) -> f64 {
        let seg = self.segment();
        match seg.end_kind {
            EndKind::Constant => self.inward_infinity(),
            EndKind::FixedPoint => self.inward_infinity(),
            _ => {
                let end = seg.usable_end();
                if end == self.anchor {
                    self.anchor_x()
                } else {
                    implicit_position(self.side, self.anchor, self.k, self.omega_d, end)
                }
            }
        }
    }

    fn inward_infinity(&self) -> f64 {
        match self.side {
            BranchSide::Left => f64::INFINITY,
            BranchSide::Right => f64::NEG_INFINITY,
        }
    }

    /// Whether the branch is defined on all of `[0, 1]`.
    pub fn spans_domain(&self) -> bool {
        match self.side {
            BranchSide::Left => self.reach() >= 1.0,
            BranchSide::Right => self.reach() <= 0.0,
        }
    }

    /// Density of the branch at `x`, inverting the implicit formula by
    /// bisection over the branch's density interval.
    pub fn density(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::PositionOutOfRange(x));
        }
        if x == self.anchor_x() {
            return Ok(self.anchor);
        }
        let seg = self.segment();
        let exhausted = |reach| Error::BranchExhausted {
            side: self.side,
            x,
            reach,
        };

        if seg.end_kind == EndKind::Constant {
            return Ok(self.anchor);
        }

        if degenerate(self.k) {
            let rho = self.anchor + self.omega_d * (x - self.anchor_x());
            if !seg.contains(rho) {
                return Err(exhausted(self.reach()));
            }
            return Ok(rho);
        }

        let far = seg.usable_end();
        let reach = self.reach();
        let beyond = match self.side {
            BranchSide::Left => x > reach,
            BranchSide::Right => x < reach,
        };
        if beyond || far == self.anchor {
            return Err(exhausted(reach));
        }

        let g = |rho| implicit_position(self.side, self.anchor, self.k, self.omega_d, rho) - x;
        if seg.end_kind == EndKind::FixedPoint && g(far).signum() == g(self.anchor).signum() {
            // the logarithmic approach is too slow to resolve in floating
            // point: the density already equals the fixed point to 1e-14
            return Ok(far);
        }
        bisect(self.anchor, far, g)
    }

    pub fn point(&self, x: f64) -> Result<BranchPoint> {
        Ok(BranchPoint {
            x,
            rho: self.density(x)?,
            side: self.side,
        })
    }

    /// `|x(rho) - x|` for a point claimed to be on this branch.
    pub fn residual(&self, point: &BranchPoint) -> f64 {
        (implicit_position(self.side, self.anchor, self.k, self.omega_d, point.rho) - point.x).abs()
    }
}

/// Position at which the `side` branch of `params` takes density `rho`.
pub fn branch_position(params: &ModelParams, side: BranchSide, rho: f64) -> Result<f64> {
    Branch::new(params, side).position(rho)
}

/// Density of the `side` branch of `params` at `x`.
pub fn branch_density(params: &ModelParams, side: BranchSide, x: f64) -> Result<f64> {
    Branch::new(params, side).density(x)
}

/// Fourth-order Runge-Kutta integration of the profile equation, kept
/// independent of the implicit formulas so it can serve as a test oracle.
pub mod oracle {
    use super::*;

    pub const MAX_STEP: f64 = 1e-4;

    fn rk4(k: f64, omega_d: f64, rho: f64, h: f64) -> f64 {
        let f = |r| profile_slope(k, omega_d, r);
        let k1 = f(rho);
        let k2 = f(rho + 0.5 * h * k1);
        let k3 = f(rho + 0.5 * h * k2);
        let k4 = f(rho + h * k3);
        rho + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    }

    /// Integrates from `(x_start, rho_start)` to `x_target` with fixed steps
    /// of at most `step`, aborting if the density comes within `10 * step`
    /// of 1/2.
    pub fn integrate(
        k: f64,
        omega_d: f64,
        x_start: f64,
        rho_start: f64,
        x_target: f64,
        step: f64,
    ) -> Result<f64> {
        if !(step > 0.0 && step <= MAX_STEP) {
            return Err(Error::InvalidParameter {
                name: "step",
                value: step,
                reason: "integration step must lie in (0, 1e-4]",
            });
        }
        let span = x_target - x_start;
        let n = (span.abs() / step).ceil() as usize;
        let window = 10.0 * step;
        let mut rho = rho_start;
        for i in 0..n {
            let x = x_start + span * i as f64 / n as f64;
            if (rho - 0.5).abs() <= window {
                return Err(Error::OracleAborted { x, rho });
            }
            rho = rk4(k, omega_d, rho, span / n as f64);
        }
        if (rho - 0.5).abs() <= window {
            return Err(Error::OracleAborted { x: x_target, rho });
        }
        Ok(rho)
    }

    /// Integrates the `side` branch of `params` from its anchor to
    /// `x_target`.
    pub fn integrate_branch_oracle(
        params: &ModelParams,
        side: BranchSide,
        x_target: f64,
        step: f64,
    ) -> Result<f64> {
        let (x0, rho0) = match side {
            BranchSide::Left => (0.0, params.alpha()),
            BranchSide::Right => (1.0, 1.0 - params.beta()),
        };
        integrate(params.k(), params.omega_d(), x0, rho0, x_target, step)
    }

    /// A branch traced by quadrature of `dx/drho = 1/rho'(rho)` outward
    /// from its anchor.
    #[derive(Debug, Clone, PartialEq)]
    pub struct Trace {
        /// `(x, rho)` samples, ordered away from the anchor.
        pub samples: Vec<(f64, f64)>,
        /// The density settled at the fixed point before leaving `[0, 1]`,
        /// so it holds that value for every further `x`.
        pub settles: bool,
    }

    impl Trace {
        /// Linear interpolation of the density at `x`; `None` where the
        /// branch is not defined.
        pub fn density(&self, x: f64) -> Option<f64> {
            let s = &self.samples;
            let x0 = s[0].0;
            let forward = s.len() < 2 || s[1].0 >= x0;
            let key = |v: f64| if forward { v } else { -v };
            let target = key(x);
            if target < key(x0) {
                return None;
            }
            let idx = s.partition_point(|&(xs, _)| key(xs) <= target);
            if idx == s.len() {
                let (xl, rl) = s[s.len() - 1];
                return if self.settles || xl == x {
                    Some(rl)
                } else {
                    None
                };
            }
            let (xa, ra) = s[idx - 1];
            let (xb, rb) = s[idx];
            if xb == xa {
                return Some(rb);
            }
            Some(ra + (rb - ra) * (x - xa) / (xb - xa))
        }
    }

    /// Traces the `side` branch from `anchor` with density steps of at
    /// most `max_step`, refined geometrically near the fixed point and
    /// stopping at 1/2, at 0 or 1, or once `x` leaves `[0, 1]`.
    pub fn trace_branch(
        k: f64,
        omega_d: f64,
        side: BranchSide,
        anchor: f64,
        max_step: f64,
    ) -> Trace {
        let fp = fixed_point_of(k);
        let (x_start, sweep) = match side {
            BranchSide::Left => (0.0, 1.0),
            BranchSide::Right => (1.0, -1.0),
        };
        let mut samples = vec![(x_start, anchor)];
        let inverse_slope = |rho: f64| 1.0 / profile_slope(k, omega_d, rho);
        let slope = profile_slope(k, omega_d, anchor);
        if !degenerate(k) && slope == 0.0 {
            return Trace {
                samples,
                settles: true,
            };
        }
        if !slope.is_finite() {
            return Trace {
                samples,
                settles: false,
            };
        }
        // density moves in the direction of slope * sweep
        let dir = (slope * sweep).signum();
        let mut x = x_start;
        let mut rho = anchor;
        let mut settles = false;
        loop {
            let mut h = max_step;
            if !degenerate(k) {
                h = h.min((rho - fp).abs() / 4.0);
            }
            let to_half = (0.5 - rho) * dir;
            if to_half > 0.0 {
                h = h.min(to_half);
            }
            let to_edge = if dir > 0.0 { 1.0 - rho } else { rho };
            h = h.min(to_edge);
            if h <= 0.0 {
                break;
            }
            if !degenerate(k) && (rho - fp).abs() < 1e-14 {
                settles = true;
                break;
            }
            let dr = h * dir;
            let next_rho = rho + dr;
            let dx = dr / 6.0
                * (inverse_slope(rho)
                    + 4.0 * inverse_slope(rho + 0.5 * dr)
                    + inverse_slope(next_rho));
            x += dx;
            rho = next_rho;
            samples.push((x, rho));
            if !(0.0..=1.0).contains(&x) || rho == 0.5 {
                break;
            }
        }
        Trace { samples, settles }
    }

    /// First position in `(0, 1)` where the traced branches satisfy
    /// `rho_l(x) + rho_r(x) = 1`, scanning `n_grid + 1` uniform points on
    /// which both branches are defined. `right_anchor` is the exit-side
    /// boundary density.
    pub fn crossing_scan(params: &ModelParams, right_anchor: f64, n_grid: usize) -> Option<f64> {
        let (k, od) = (params.k(), params.omega_d());
        let left = trace_branch(k, od, BranchSide::Left, params.alpha(), 1e-4);
        let right = trace_branch(k, od, BranchSide::Right, right_anchor, 1e-4);
        let mut prev: Option<(f64, f64)> = None;
        for j in 0..=n_grid {
            let x = j as f64 / n_grid as f64;
            let g = match (left.density(x), right.density(x)) {
                (Some(l), Some(r)) => l + r - 1.0,
                _ => {
                    prev = None;
                    continue;
                }
            };
            if g == 0.0 && j > 0 && j < n_grid {
                return Some(x);
            }
            if let Some((xp, gp)) = prev {
                if gp * g < 0.0 {
                    return Some(xp + (x - xp) * gp / (gp - g));
                }
            }
            prev = Some((x, g));
        }
        None
    }
}

pub use oracle::integrate_branch_oracle;

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(alpha: f64, beta: f64, oa: f64, od: f64) -> ModelParams {
        ModelParams::new(alpha, beta, oa, od).unwrap()
    }

    #[test]
    fn degenerate_closed_form() {
        let params = p(0.2, 0.2, 0.3, 0.3);
        let x = branch_position(&params, BranchSide::Left, 0.35).unwrap();
        assert!((x - 0.5).abs() < 1e-15);
        let rho = branch_density(&params, BranchSide::Left, 0.5).unwrap();
        assert!((rho - 0.35).abs() < 1e-15);
        assert_eq!(
            branch_density(&params, BranchSide::Right, 1.0).unwrap(),
            0.8
        );
    }

    #[test]
    fn anchor_is_origin() {
        for params in [
            p(0.2, 0.2, 0.3, 0.3),
            p(0.1, 0.3, 0.3, 0.1),
            p(0.3, 0.05, 1.0, 0.1),
        ] {
            assert_eq!(
                branch_position(&params, BranchSide::Left, params.alpha()).unwrap(),
                0.0
            );
            assert_eq!(
                branch_position(&params, BranchSide::Right, 1.0 - params.beta()).unwrap(),
                1.0
            );
            assert_eq!(
                branch_density(&params, BranchSide::Left, 0.0).unwrap(),
                params.alpha()
            );
            assert_eq!(
                branch_density(&params, BranchSide::Right, 1.0).unwrap(),
                1.0 - params.beta()
            );
        }
    }

    #[test]
    fn k3_left_position() {
        // 2(0.2)/0.4 + 2/1.6 * ln(1.8/2.6)
        let params = p(0.1, 0.3, 0.3, 0.1);
        let x = branch_position(&params, BranchSide::Left, 0.3).unwrap();
        let expected = 1.0 + 1.25 * (1.8f64 / 2.6).ln();
        assert!((x - expected).abs() < 1e-14);
        assert!((x - 0.5404).abs() < 1e-4);
        let rho = branch_density(&params, BranchSide::Left, x).unwrap();
        assert!((rho - 0.3).abs() < 1e-12);
    }

    #[test]
    fn slope_values() {
        assert_eq!(ode_rhs(&p(0.1, 0.1, 0.3, 0.3), 0.25).unwrap(), 0.3);
        let params = p(0.1, 0.1, 0.3, 0.1);
        assert_eq!(ode_rhs(&params, 0.75).unwrap(), 0.0);
        assert!((ode_rhs(&params, 0.3).unwrap() - 0.45).abs() < 1e-15);
        assert_eq!(ode_rhs(&params, 0.5), Err(Error::CharacteristicSingularity));
    }

    #[test]
    fn fixed_point_is_rejected() {
        let params = p(0.1, 0.1, 0.3, 0.1);
        assert!(matches!(
            branch_position(&params, BranchSide::Right, 0.75),
            Err(Error::FixedPointSingularity { .. })
        ));
        // anchor 0.9 sits above the fixed point 0.75
        assert!(matches!(
            branch_position(&params, BranchSide::Right, 0.7),
            Err(Error::AcrossFixedPoint { .. })
        ));
    }

    #[test]
    fn left_branch_exhausts_at_half() {
        // K = 10: the left branch from 0.1 reaches 1/2 near x = 0.22
        let params = ModelParams::from_k(0.1, 0.1, 10.0, 0.1).unwrap();
        let branch = Branch::new(&params, BranchSide::Left);
        let reach = branch.reach();
        assert!(reach > 0.2 && reach < 0.25, "reach {reach}");
        assert!(!branch.spans_domain());
        match branch.density(0.5) {
            Err(Error::BranchExhausted { side, reach: r, .. }) => {
                assert_eq!(side, BranchSide::Left);
                assert_eq!(r, reach);
            }
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn right_branch_spans_towards_fixed_point() {
        let params = p(0.1, 0.05, 0.3, 0.1);
        let branch = Branch::new(&params, BranchSide::Right);
        assert!(branch.spans_domain());
        let rho0 = branch.density(0.0).unwrap();
        assert!(rho0 > 0.75 && rho0 < 0.95);
    }

    #[test]
    fn constant_branch_at_fixed_point() {
        let params = p(0.1, 0.25, 0.3, 0.1);
        let branch = Branch::new(&params, BranchSide::Right);
        assert_eq!(branch.segment().end_kind, EndKind::Constant);
        assert_eq!(branch.density(0.3).unwrap(), 0.75);
    }

    #[test]
    fn oracle_examples() {
        let params = p(0.2, 0.2, 0.3, 0.3);
        let rho = integrate_branch_oracle(&params, BranchSide::Left, 0.5, 1e-4).unwrap();
        assert!((rho - 0.35).abs() < 1e-7);

        let params = p(0.1, 0.3, 0.3, 0.1);
        let x = branch_position(&params, BranchSide::Left, 0.3).unwrap();
        let rho = integrate_branch_oracle(&params, BranchSide::Left, x, 1e-5).unwrap();
        assert!((rho - 0.3).abs() < 1e-6);

        let params = p(0.1, 0.05, 0.3, 0.1);
        let rho = integrate_branch_oracle(&params, BranchSide::Right, 0.9, 1e-5).unwrap();
        let exact = branch_density(&params, BranchSide::Right, 0.9).unwrap();
        assert!((rho - exact).abs() < 1e-6);
    }

    #[test]
    fn oracle_aborts_near_half() {
        let params = ModelParams::from_k(0.1, 0.1, 10.0, 0.1).unwrap();
        assert!(matches!(
            integrate_branch_oracle(&params, BranchSide::Left, 0.5, 1e-4),
            Err(Error::OracleAborted { .. })
        ));
        assert!(integrate_branch_oracle(&params, BranchSide::Left, 0.5, 1e-3).is_err());
    }

    #[test]
    fn particle_hole_identity_is_algebraic() {
        // x_left(rho; alpha, K, Od) + x_right'(1 - rho; 1 - beta' = 1 - alpha, 1/K, K Od) = 1
        for &(alpha, k, od) in &[(0.1, 3.0, 0.1), (0.3, 1.5, 0.4), (0.05, 10.0, 0.2)] {
            for i in 0..20 {
                let rho = alpha + (0.49 - alpha) * i as f64 / 20.0;
                let xl = implicit_position(BranchSide::Left, alpha, k, od, rho);
                let xr =
                    implicit_position(BranchSide::Right, 1.0 - alpha, 1.0 / k, k * od, 1.0 - rho);
                assert!(
                    (xl + xr - 1.0).abs() < 1e-10,
                    "{alpha} {k} {rho}: {xl} {xr}"
                );
            }
        }
    }

    proptest! {
        #[test]
        fn left_density_increases(alpha in 0.0f64..0.45, k in 1.0f64..10.0, od in 0.05f64..1.0) {
            let params = ModelParams::from_k(alpha, 0.3, k, od).unwrap();
            let branch = Branch::new(&params, BranchSide::Left);
            let top = branch.reach().min(1.0);
            let mut prev = branch.density(0.0).unwrap();
            for i in 1..=10 {
                let x = top * i as f64 / 10.5;
                let rho = branch.density(x).unwrap();
                prop_assert!(rho > prev);
                prev = rho;
            }
        }

        #[test]
        fn right_density_decreases_below_fixed_point(beta in 0.0f64..1.0, k in 1.05f64..10.0, od in 0.05f64..1.0) {
            let params = ModelParams::from_k(0.1, beta, k, od).unwrap();
            let anchor = 1.0 - beta;
            prop_assume!(anchor > 0.5 && anchor < params.fixed_point() - 1e-6);
            let branch = Branch::new(&params, BranchSide::Right);
            let mut prev = branch.density(0.0).unwrap();
            for i in 1..=10 {
                let rho = branch.density(i as f64 / 10.0).unwrap();
                // within 1e-12 of the fixed point the logarithmic approach
                // is below floating-point resolution
                if params.fixed_point() - rho > 1e-12 {
                    prop_assert!(rho < prev);
                } else {
                    prop_assert!(rho <= prev);
                }
                prev = rho;
            }
        }

        #[test]
        fn round_trip(alpha in 0.0f64..0.45, beta in 0.0f64..0.5, k in 1.0f64..10.0, od in 0.05f64..1.0, t in 0.0f64..1.0) {
            let params = ModelParams::from_k(alpha, beta, k, od).unwrap();
            for side in [BranchSide::Left, BranchSide::Right] {
                let branch = Branch::new(&params, side);
                let edge = match side { BranchSide::Left => 1.0, BranchSide::Right => 0.0 };
                let reach = branch.reach();
                let x_far = if branch.spans_domain() { edge } else { reach };
                let x = branch.anchor_x() + t * 0.999 * (x_far - branch.anchor_x());
                let rho = branch.density(x).unwrap();
                let back = branch.position(rho).unwrap();
                let again = branch.density(back.clamp(0.0, 1.0)).unwrap();
                prop_assert!((again - rho).abs() < 1e-9, "{side}: {rho} vs {again}");
            }
        }
    }
}
