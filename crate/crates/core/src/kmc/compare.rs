use serde::Serialize;

use super::ProfileEstimate;
use crate::domain_wall::CompositeProfile;
use crate::error::{Error, Result};

/// Distance between a simulated profile and the mean-field profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub n_sites: usize,
    pub sup_norm: f64,
    /// `(1/N) sum |rho_sim - rho_mf|` over the compared sites.
    pub l1: f64,
    pub compared_sites: usize,
    /// Sites where the mean-field profile is undefined.
    pub unresolved_sites: usize,
    pub excluded_halfwidth: f64,
    pub x_s: Option<f64>,
    pub wall_site_x: Option<f64>,
    pub wall_gap: Option<f64>,
}

/// Location of the steepest rise of `density`: the boundary `j/N`
/// maximizing the difference between the means of the `w = ceil(sqrt(N))`
/// sites to its right and to its left.
pub fn locate_wall(density: &[f64]) -> Option<f64> {
    let n = density.len();
    let w = (n as f64).sqrt().ceil() as usize;
    if n < 2 * w {
        return None;
    }
    let mut prefix = vec![0.0; n + 1];
    for (i, d) in density.iter().enumerate() {
        prefix[i + 1] = prefix[i] + d;
    }
    let mut best = (f64::NEG_INFINITY, 0);
    for j in w..=n - w {
        let right = prefix[j + w] - prefix[j];
        let left = prefix[j] - prefix[j - w];
        let score = (right - left) / w as f64;
        if score > best.0 {
            best = (score, j);
        }
    }
    Some(best.1 as f64 / n as f64)
}

/// Compares site `i` (1-based) at `x = (i - 1/2)/N` with the mean-field
/// density there, skipping `|x - x_s| <= exclusion_halfwidth` when the
/// mean-field profile has a wall.
pub fn compare_to_meanfield(
    profile: &ProfileEstimate,
    composite: &CompositeProfile,
    exclusion_halfwidth: f64,
) -> Result<Comparison> {
    if !profile.config.matches(&composite.params) {
        return Err(Error::ParameterMismatch);
    }
    if !(exclusion_halfwidth >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "exclusion_halfwidth",
            value: exclusion_halfwidth,
            reason: "must be non-negative",
        });
    }
    let n = profile.n_sites();
    let x_s = composite.wall.map(|w| w.x_s);
    let mut sup: f64 = 0.0;
    let mut sum = 0.0;
    let mut compared = 0;
    let mut unresolved = 0;
    for (i, &rho) in profile.density.iter().enumerate() {
        let x = profile.site_x(i);
        if let Some(x_s) = x_s {
            if (x - x_s).abs() <= exclusion_halfwidth {
                continue;
            }
        }
        match composite.density_at(x) {
            Some(mf) => {
                let d = (rho - mf).abs();
                sup = sup.max(d);
                sum += d;
                compared += 1;
            }
            None => unresolved += 1,
        }
    }
    let wall_site_x = x_s.and_then(|_| locate_wall(&profile.density));
    Ok(Comparison {
        n_sites: n,
        sup_norm: sup,
        l1: sum / n as f64,
        compared_sites: compared,
        unresolved_sites: unresolved,
        excluded_halfwidth: exclusion_halfwidth,
        x_s,
        wall_site_x,
        wall_gap: x_s.zip(wall_site_x).map(|(a, b)| (a - b).abs()),
    })
}
