use crate::meanfield::BranchSide;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("density {rho} is the fixed point K/(K+1) = {fixed_point} (logarithmic singularity)")]
    FixedPointSingularity { rho: f64, fixed_point: f64 },

    #[error(
        "density {rho} lies across the fixed point {fixed_point} from the {side} branch anchor {anchor}"
    )]
    AcrossFixedPoint {
        side: BranchSide,
        rho: f64,
        anchor: f64,
        fixed_point: f64,
    },

    #[error(
        "{side} branch exhausted: it covers positions up to {reach} but x = {x} was requested"
    )]
    BranchExhausted {
        side: BranchSide,
        x: f64,
        reach: f64,
    },

    #[error("density 1/2 is a characteristic singularity of the profile equation")]
    CharacteristicSingularity,

    #[error("position {0} is outside [0, 1]")]
    PositionOutOfRange(f64),

    #[error("no sign change on [{lo}, {hi}]: h(lo) = {h_lo}, h(hi) = {h_hi}")]
    NoSignChange {
        lo: f64,
        hi: f64,
        h_lo: f64,
        h_hi: f64,
    },

    #[error("no domain wall exists for these parameters")]
    NoWall,

    #[error("formula is singular here: {0}")]
    Singular(&'static str),

    #[error("regime crossed between p - step and p + step: {0}")]
    RegimeCrossed(&'static str),

    #[error("numerical integration hit the singular density 1/2 at x = {x} (rho = {rho})")]
    OracleAborted { x: f64, rho: f64 },

    #[error("absorbing configuration: total event rate is zero")]
    Absorbing,

    #[error("profile and mean-field prediction use different parameters")]
    ParameterMismatch,

    #[error("invalid lattice configuration: {0}")]
    InvalidConfig(String),
}
