//! Existence, location and height of the domain wall (shock) in the
//! stationary mean-field profile.
//!
//! Across a wall at `x_s` the current `rho (1 - rho)` is continuous, which
//! for a genuine jump means `rho_minus + rho_plus = 1`. The wall therefore
//! sits where the left branch meets the particle-hole mirror of the right
//! branch. With `gamma = min(1/2, beta)` and `rho_l^-1`, `rho_r^-1` the branch
//! positions:
//!
//! * Case I (`alpha <= 1/2`, `1 - beta <= K/(K+1)`): a wall exists iff
//!   `rho_l^-1(gamma) <= 1` and `rho_r^-1(1 - alpha) <= 0` (right branch
//!   anchored at `1 - gamma`);
//! * Case II (`alpha <= 1/2`, `1 - beta >= K/(K+1)`): iff
//!   `rho_l^-1(beta) <= 1` and `rho_r^-1(1 - alpha) >= 0`;
//! * Case III (`alpha >= 1/2`): never.
//!
//! Equalities put the wall on the boundary and are reported as "no interior
//! wall".

use serde::Serialize;

use crate::error::{Error, Result};
use crate::meanfield::{implicit_position, Branch, BranchSide};
use crate::params::ModelParams;
use crate::roots::bisect;

/// Crossings within this distance of `x = 0` or `x = 1` are not interior.
pub const INTERIOR_TOL: f64 = 1e-12;

/// Grid points this close to `x_s` are treated as sitting on the wall.
pub const ON_WALL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    CaseI,
    CaseII,
    CaseIII,
}

/// Outcome of the existence test together with the two inverse positions
/// it compared.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExistenceVerdict {
    pub exists: bool,
    pub regime: Regime,
    /// Effective exit parameter `min(1/2, beta)`.
    pub gamma: f64,
    /// `rho_l^-1(gamma)` (Case I) or `rho_l^-1(beta)` (Case II). Infinite
    /// values mean "never reached"; `None` in Case III.
    pub left_position: Option<f64>,
    /// `rho_r^-1(1 - alpha)` on the right branch used by the regime.
    pub right_position: Option<f64>,
    /// For `K = 1` only: positions at which the left and right branches
    /// reach density 1/2. A wall of positive height needs the left one to
    /// be the larger.
    pub half_density_positions: Option<(f64, f64)>,
    /// Set when a condition could not be evaluated.
    pub untestable: Option<String>,
}

impl ExistenceVerdict {
    /// Smallest distance of any tested quantity from its threshold; used to
    /// recognise parameter sets that sit on a regime boundary.
    pub fn boundary_margin(&self) -> f64 {
        let mut m = f64::INFINITY;
        if let Some(l) = self.left_position {
            m = m.min((l - 1.0).abs());
        }
        if let Some(r) = self.right_position {
            m = m.min(r.abs());
        }
        if let Some((l, r)) = self.half_density_positions {
            m = m.min((l - r).abs());
        }
        m
    }
}

/// Where the existence conditions place a branch's inverse when the branch
/// can never reach the requested density.
fn position_or_unreachable(branch: &Branch, rho: f64) -> Result<f64> {
    match branch.position(rho) {
        Ok(x) => Ok(x),
        // the left branch never reaches it for any x >= 0; the right branch
        // approaches the fixed point only as x -> -infinity
        Err(Error::AcrossFixedPoint { .. }) | Err(Error::FixedPointSingularity { .. }) => {
            Ok(match branch.side() {
                BranchSide::Left => f64::INFINITY,
                BranchSide::Right => f64::NEG_INFINITY,
            })
        }
        Err(e) => Err(e),
    }
}

pub fn regime(params: &ModelParams) -> Regime {
    if params.alpha() >= 0.5 {
        Regime::CaseIII
    } else if 1.0 - params.beta() <= params.fixed_point() {
        Regime::CaseI
    } else {
        Regime::CaseII
    }
}

pub fn check_existence(params: &ModelParams) -> ExistenceVerdict {
    let alpha = params.alpha();
    let beta = params.beta();
    let gamma = beta.min(0.5);
    let regime = regime(params);
    let mut verdict = ExistenceVerdict {
        exists: false,
        regime,
        gamma,
        left_position: None,
        right_position: None,
        half_density_positions: None,
        untestable: None,
    };
    if regime == Regime::CaseIII {
        return verdict;
    }

    let left = Branch::new(params, BranchSide::Left);
    let (left_target, right) = match regime {
        Regime::CaseI => (
            gamma,
            Branch::with_anchor(params, BranchSide::Right, 1.0 - gamma),
        ),
        _ => (beta, Branch::new(params, BranchSide::Right)),
    };

    let positions = position_or_unreachable(&left, left_target)
        .and_then(|l| Ok((l, position_or_unreachable(&right, 1.0 - alpha)?)));
    let (l, r) = match positions {
        Ok(pair) => pair,
        Err(e) => {
            verdict.untestable = Some(e.to_string());
            return verdict;
        }
    };
    verdict.left_position = Some(l);
    verdict.right_position = Some(r);

    let left_ok = l < 1.0 - INTERIOR_TOL;
    let right_ok = match regime {
        Regime::CaseI => r < -INTERIOR_TOL,
        _ => r > INTERIOR_TOL,
    };
    let mut exists = left_ok && right_ok;

    if params.is_degenerate() {
        // With K = 1 nothing stops the branches at 1/2 asymptotically, so
        // the matching density must be checked to stay below 1/2.
        let k = params.k();
        let od = params.omega_d();
        let lh = implicit_position(BranchSide::Left, alpha, k, od, 0.5);
        let rh = implicit_position(BranchSide::Right, right.anchor(), k, od, 0.5);
        verdict.half_density_positions = Some((lh, rh));
        exists = exists && lh > rh + INTERIOR_TOL;
    }

    verdict.exists = exists;
    verdict
}

/// A solved domain wall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WallSolution {
    pub x_s: f64,
    pub rho_minus: f64,
    pub rho_plus: f64,
    /// `2 eps = rho_plus - rho_minus`.
    pub height: f64,
    /// `|x_l(rho_minus) - x_r(1 - rho_minus)|`.
    pub residual: f64,
    /// Effective exit parameter of the right branch.
    pub gamma: f64,
}

impl WallSolution {
    /// Half-height `eps`.
    pub fn eps(&self) -> f64 {
        0.5 * self.height
    }
}

/// Locates the wall by bisection on
/// `h(rho) = x_l(rho) - x_r(1 - rho)` over the densities both branches can
/// take. `K = 1` uses the closed form.
pub fn solve_wall(params: &ModelParams) -> Result<WallSolution> {
    let verdict = check_existence(params);
    if !verdict.exists {
        return Err(Error::NoWall);
    }
    let alpha = params.alpha();
    let gamma = verdict.gamma;
    let k = params.k();
    let od = params.omega_d();
    let right_anchor = 1.0 - gamma;

    let x_left = |rho: f64| implicit_position(BranchSide::Left, alpha, k, od, rho);
    let x_right = |rho: f64| implicit_position(BranchSide::Right, right_anchor, k, od, rho);

    // right branch constant at the fixed point: it meets any x
    let constant_right = !params.is_degenerate() && right_anchor == params.fixed_point();
    let rho_minus = if params.is_degenerate() {
        0.5 * (alpha + gamma + od)
    } else if constant_right {
        1.0 - params.fixed_point()
    } else {
        // rho_minus in [alpha, 1/2) from the left branch; 1 - rho_minus
        // between 1 - gamma and K/(K+1) from the right branch.
        let mirror_fp = 1.0 / (k + 1.0);
        let mut lo = alpha.max(gamma.min(mirror_fp));
        let mut hi = 0.5f64.min(gamma.max(mirror_fp));
        if lo == mirror_fp {
            lo += crate::meanfield::SINGULAR_END_SHRINK;
        }
        if hi == mirror_fp || hi == 0.5 {
            hi -= crate::meanfield::SINGULAR_END_SHRINK;
        }
        bisect(lo, hi, |rho| x_left(rho) - x_right(1.0 - rho))?
    };

    let rho_plus = 1.0 - rho_minus;
    let x_s = if params.is_degenerate() {
        (gamma - alpha + od) / (2.0 * od)
    } else {
        x_left(rho_minus)
    };
    if !(x_s > INTERIOR_TOL && x_s < 1.0 - INTERIOR_TOL) {
        return Err(Error::NoWall);
    }
    Ok(WallSolution {
        x_s,
        rho_minus,
        rho_plus,
        height: rho_plus - rho_minus,
        residual: if constant_right {
            0.0
        } else {
            (x_left(rho_minus) - x_right(rho_plus)).abs()
        },
        gamma,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// Low-density left branch meets high-density right branch at a wall.
    Coexistence,
    /// The left branch alone.
    LowDensity,
    /// The right branch alone.
    HighDensity,
    /// Neither branch covers `[0, 1]`; the uncovered part is unresolved.
    Partial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileBranch {
    Left,
    Right,
    Unresolved,
}

impl From<BranchSide> for ProfileBranch {
    fn from(side: BranchSide) -> Self {
        match side {
            BranchSide::Left => ProfileBranch::Left,
            BranchSide::Right => ProfileBranch::Right,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfilePoint {
    pub x: f64,
    pub rho: Option<f64>,
    pub branch: ProfileBranch,
}

/// Stationary mean-field profile on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositeProfile {
    pub params: ModelParams,
    pub kind: ProfileKind,
    pub verdict: ExistenceVerdict,
    pub wall: Option<WallSolution>,
    /// Grid points in order; a wall contributes two rows at `x_s`.
    pub points: Vec<ProfilePoint>,
}

impl CompositeProfile {
    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.x).collect()
    }

    pub fn densities(&self) -> Vec<Option<f64>> {
        self.points.iter().map(|p| p.rho).collect()
    }

    pub fn is_resolved(&self) -> bool {
        self.points.iter().all(|p| p.rho.is_some())
    }

    fn left(&self) -> Branch {
        Branch::new(&self.params, BranchSide::Left)
    }

    fn right(&self) -> Branch {
        match self.wall {
            Some(w) => Branch::with_anchor(&self.params, BranchSide::Right, 1.0 - w.gamma),
            None => Branch::new(&self.params, BranchSide::Right),
        }
    }

    /// Mean-field density at an arbitrary `x` (`None` on the wall itself
    /// or where the profile is unresolved).
    pub fn density_at(&self, x: f64) -> Option<f64> {
        self.branch_at(x).and_then(|side| match side {
            BranchSide::Left => self.left().density(x).ok(),
            BranchSide::Right => self.right().density(x).ok(),
        })
    }

    fn branch_at(&self, x: f64) -> Option<BranchSide> {
        match self.kind {
            ProfileKind::Coexistence => {
                let x_s = self.wall.map(|w| w.x_s)?;
                if x < x_s {
                    Some(BranchSide::Left)
                } else if x > x_s {
                    Some(BranchSide::Right)
                } else {
                    None
                }
            }
            ProfileKind::LowDensity => Some(BranchSide::Left),
            ProfileKind::HighDensity => Some(BranchSide::Right),
            ProfileKind::Partial => {
                if x <= self.left().reach() {
                    Some(BranchSide::Left)
                } else if x >= self.right().reach() {
                    Some(BranchSide::Right)
                } else {
                    None
                }
            }
        }
    }
}

/// Mean-field profile on `n_points` uniformly spaced positions.
///
/// With a wall, the left branch is used below `x_s` and the right branch
/// above it, and two rows at `x_s` carry `rho_minus` and `rho_plus`; a grid
/// point that coincides with `x_s` is replaced by them. Without a wall the
/// single branch covering `[0, 1]` is used.
pub fn composite_profile(params: &ModelParams, n_points: usize) -> Result<CompositeProfile> {
    if n_points < 2 {
        return Err(Error::InvalidParameter {
            name: "n_points",
            value: n_points as f64,
            reason: "a profile needs at least two grid points",
        });
    }
    let verdict = check_existence(params);
    let wall = if verdict.exists {
        Some(solve_wall(params)?)
    } else {
        None
    };

    let left = Branch::new(params, BranchSide::Left);
    let right = Branch::new(params, BranchSide::Right);
    let kind = if wall.is_some() {
        ProfileKind::Coexistence
    } else {
        match (left.spans_domain(), right.spans_domain()) {
            (true, true) => {
                let sum = left.density(0.5)? + right.density(0.5)?;
                if sum < 1.0 {
                    ProfileKind::LowDensity
                } else {
                    ProfileKind::HighDensity
                }
            }
            (true, false) => ProfileKind::LowDensity,
            (false, true) => ProfileKind::HighDensity,
            (false, false) => ProfileKind::Partial,
        }
    };

    let mut profile = CompositeProfile {
        params: *params,
        kind,
        verdict,
        wall,
        points: Vec::with_capacity(n_points + 2),
    };

    let mut wall_rows_done = false;
    for i in 0..n_points {
        let x = i as f64 / (n_points - 1) as f64;
        if let Some(w) = wall {
            if !wall_rows_done && x >= w.x_s - ON_WALL_TOL {
                profile.points.push(ProfilePoint {
                    x: w.x_s,
                    rho: Some(w.rho_minus),
                    branch: ProfileBranch::Left,
                });
                profile.points.push(ProfilePoint {
                    x: w.x_s,
                    rho: Some(w.rho_plus),
                    branch: ProfileBranch::Right,
                });
                wall_rows_done = true;
                if (x - w.x_s).abs() <= ON_WALL_TOL {
                    continue;
                }
            }
        }
        let point = match profile.branch_at(x) {
            Some(side) => {
                let branch = match side {
                    BranchSide::Left => left,
                    BranchSide::Right => profile.right(),
                };
                ProfilePoint {
                    x,
                    rho: Some(branch.density(x)?),
                    branch: side.into(),
                }
            }
            None => ProfilePoint {
                x,
                rho: None,
                branch: ProfileBranch::Unresolved,
            },
        };
        profile.points.push(point);
    }
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(alpha: f64, beta: f64, oa: f64, od: f64) -> ModelParams {
        ModelParams::new(alpha, beta, oa, od).unwrap()
    }

    #[test]
    fn case_three_has_no_wall() {
        let v = check_existence(&p(0.6, 0.3, 0.3, 0.1));
        assert_eq!(v.regime, Regime::CaseIII);
        assert!(!v.exists);
        assert!(matches!(
            solve_wall(&p(0.6, 0.3, 0.3, 0.1)),
            Err(Error::NoWall)
        ));
        // alpha = 1/2 belongs to case III
        assert_eq!(regime(&p(0.5, 0.3, 0.3, 0.1)), Regime::CaseIII);
    }

    #[test]
    fn degenerate_symmetric_wall() {
        let params = p(0.2, 0.2, 0.3, 0.3);
        let v = check_existence(&params);
        assert!(v.exists);
        // K = 1 puts 1 - beta = 0.8 above K/(K+1) = 0.5
        assert_eq!(v.regime, Regime::CaseII);
        let w = solve_wall(&params).unwrap();
        assert_eq!(w.x_s, 0.5);
        assert!((w.rho_minus - 0.35).abs() < 1e-15);
        assert!((w.rho_plus - 0.65).abs() < 1e-15);
        assert!((w.height - 0.3).abs() < 1e-15);
    }

    #[test]
    fn degenerate_wall_outside_domain() {
        // x_s = (0.3 - 0.1 + 0.1)/0.2 = 1.5
        let v = check_existence(&p(0.1, 0.3, 0.1, 0.1));
        assert!(!v.exists);
    }

    #[test]
    fn degenerate_asymmetric_wall() {
        let w = solve_wall(&p(0.1, 0.3, 0.4, 0.4)).unwrap();
        assert!((w.x_s - 0.75).abs() < 1e-12);
        assert!((w.rho_minus - 0.4).abs() < 1e-12);
        assert!((w.rho_plus - 0.6).abs() < 1e-12);
        assert!((w.height - 0.2).abs() < 1e-12);
    }

    #[test]
    fn degenerate_without_positive_height() {
        // alpha + beta + Omega_d > 1: the branches meet 1/2 before matching
        let v = check_existence(&p(0.45, 0.45, 0.3, 0.3));
        assert!(!v.exists);
        let (l, r) = v.half_density_positions.unwrap();
        assert!(l < r);
    }

    #[test]
    fn k3_wall_matches() {
        let params = p(0.1, 0.1, 0.3, 0.1);
        let w = solve_wall(&params).unwrap();
        assert!(w.residual <= 1e-10);
        assert!(w.rho_minus < 0.5 && w.rho_plus > 0.5);
        let flux = |r: f64| r * r - r;
        assert!((flux(w.rho_minus) - flux(w.rho_plus)).abs() <= 1e-12);
        assert!(w.x_s > 0.0 && w.x_s < 1.0);
    }

    #[test]
    fn beta_above_half_uses_gamma() {
        let params = p(0.1, 0.8, 0.3, 0.1);
        let v = check_existence(&params);
        assert_eq!(v.regime, Regime::CaseI);
        assert_eq!(v.gamma, 0.5);
        if v.exists {
            let w = solve_wall(&params).unwrap();
            assert_eq!(w.gamma, 0.5);
            assert!(w.residual <= 1e-10);
        }
    }

    #[test]
    fn regime_boundary_uses_constant_right_branch() {
        // 1 - beta = K/(K+1) = 0.75: the right branch is the Langmuir density
        let params = p(0.1, 0.25, 0.3, 0.1);
        let v = check_existence(&params);
        assert_eq!(v.regime, Regime::CaseI);
        let x_quarter = Branch::new(&params, BranchSide::Left)
            .position(0.25)
            .unwrap();
        assert_eq!(v.exists, x_quarter < 1.0);
        if v.exists {
            let w = solve_wall(&params).unwrap();
            assert!((w.rho_minus - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn matching_function_is_monotone() {
        for &(alpha, beta, k, od) in &[
            (0.1, 0.1, 3.0, 0.1),
            (0.1, 0.3, 3.0, 0.1),
            (0.2, 0.3, 5.0, 0.1),
            (0.02, 0.05, 5.0, 0.2),
        ] {
            let params = ModelParams::from_k(alpha, beta, k, od).unwrap();
            let w = solve_wall(&params).unwrap();
            let h = |r: f64| {
                implicit_position(BranchSide::Left, alpha, k, od, r)
                    - implicit_position(BranchSide::Right, 1.0 - w.gamma, k, od, 1.0 - r)
            };
            let case_two = regime(&params) == Regime::CaseII;
            let (lo, hi) = if case_two {
                (alpha.max(beta), 1.0 / (k + 1.0) - 1e-9)
            } else {
                (alpha.max(1.0 / (k + 1.0)) + 1e-9, beta.min(0.5))
            };
            let mut prev = h(lo);
            for i in 1..=50 {
                let cur = h(lo + (hi - lo) * i as f64 / 50.0);
                if case_two {
                    assert!(cur > prev);
                } else {
                    assert!(cur < prev);
                }
                prev = cur;
            }
        }
    }

    #[test]
    fn profile_with_wall_on_grid() {
        let prof = composite_profile(&p(0.2, 0.2, 0.3, 0.3), 5).unwrap();
        assert_eq!(prof.kind, ProfileKind::Coexistence);
        let rho: Vec<f64> = prof.densities().into_iter().map(Option::unwrap).collect();
        let expected = [0.2, 0.275, 0.35, 0.65, 0.725, 0.8];
        assert_eq!(rho.len(), 6);
        for (a, b) in rho.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{rho:?}");
        }
        assert_eq!(prof.points[2].x, 0.5);
        assert_eq!(prof.points[3].x, 0.5);
    }

    #[test]
    fn profile_without_wall() {
        let prof = composite_profile(&p(0.6, 0.3, 0.3, 0.1), 11).unwrap();
        assert_eq!(prof.kind, ProfileKind::HighDensity);
        assert_eq!(prof.points.len(), 11);
        assert!(prof.is_resolved());
        assert!(prof
            .points
            .iter()
            .all(|pt| pt.branch == ProfileBranch::Right));
    }

    #[test]
    fn profile_one_jump() {
        let prof = composite_profile(&p(0.1, 0.1, 0.3, 0.1), 1001).unwrap();
        let rho: Vec<f64> = prof.densities().into_iter().map(Option::unwrap).collect();
        assert!(rho.iter().all(|r| (0.0..=1.0).contains(r)));
        let jumps = rho.windows(2).filter(|w| (w[1] - w[0]).abs() > 0.1).count();
        assert_eq!(jumps, 1);
        let x_s = prof.wall.unwrap().x_s;
        for pt in &prof.points {
            match pt.branch {
                ProfileBranch::Left => assert!(pt.x <= x_s),
                ProfileBranch::Right => assert!(pt.x >= x_s),
                ProfileBranch::Unresolved => panic!("unresolved point"),
            }
        }
    }

    #[test]
    fn low_density_profile() {
        // K = 1, x_s would be 1.5: pure left branch
        let prof = composite_profile(&p(0.1, 0.3, 0.1, 0.1), 11).unwrap();
        assert_eq!(prof.kind, ProfileKind::LowDensity);
        assert!((prof.points[10].rho.unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn partial_profile_marks_gap() {
        // K = 1, alpha = beta = 0.45: both branches stop at 1/2 in the bulk
        let prof = composite_profile(&p(0.45, 0.45, 0.3, 0.3), 21).unwrap();
        assert_eq!(prof.kind, ProfileKind::Partial);
        assert!(!prof.is_resolved());
        assert_eq!(prof.points[0].branch, ProfileBranch::Left);
        assert_eq!(prof.points[20].branch, ProfileBranch::Right);
    }
}
