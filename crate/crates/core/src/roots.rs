//! Bracketing root finder shared by the branch inversion and the wall solver.

use crate::error::{Error, Result};

/// Upper bound on bisection steps; more than the 64 bits of an `f64`.
pub const MAX_ITERATIONS: usize = 200;

/// Bisection between `lo` and `hi` (in either order) for a function with opposite signs at the ends.
///
/// Bisection continues until the bracket can no longer be split in floating
/// point (well below a width of 1e-13 for densities) or [`MAX_ITERATIONS`] is
/// reached. The returned point is whichever of the final bracket ends has the
/// smaller `|f|`.
pub fn bisect<F>(mut lo: f64, mut hi: f64, f: F) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.is_nan() || f_hi.is_nan() || f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSignChange {
            lo,
            hi,
            h_lo: f_lo,
            h_hi: f_hi,
        });
    }

    for _ in 0..MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }

    Ok(if f_lo.abs() <= f_hi.abs() { lo } else { hi })
}
