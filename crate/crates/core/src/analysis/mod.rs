//! Gaps between bounded solutions, their decay rates, and connection
//! certificates built from them.

mod certificate;
mod hyperbolic;

pub use certificate::{
    certify_connection, run_connection, stable_envelope_check, unstable_bound_check, CertificateConstants,
    CertifyOptions, ConnectionCertificate, ConnectionKind, ConnectionRun, DecayCertificate, StableEnvelopeCheck,
    UnstableBoundCheck, CERT_PICARD_TOL,
};
pub use hyperbolic::{verify_hyperbolic_transfer, CatalogReport, EntryReport};

use crate::error::{Error, Result};
use crate::linear::diff_norm;
use crate::system::SampledTrajectory;

/// Gaps at or below this are treated as exact zeros when fitting.
pub const GAP_FLOOR: f64 = 1e-14;
pub const MIN_FIT_POINTS: usize = 10;

/// `(t, ||a(t) - b(t)||)` on a shared grid.
pub fn difference_profile(a: &SampledTrajectory, b: &SampledTrajectory) -> Result<Vec<(f64, f64)>> {
    if !a.same_grid(b) {
        return Err(Error::GridMismatch);
    }
    Ok((0..a.len()).map(|i| (a.time(i), diff_norm(a.sample(i), b.sample(i)))).collect())
}

/// Least-squares decay rate of `ln gap` against the distance travelled from
/// the first point, over the last `tail_fraction` of the profile. Returns
/// `(rate, r_squared)`.
pub fn fit_decay_rate(profile: &[(f64, f64)], tail_fraction: f64) -> Result<(f64, f64)> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::BadFraction(tail_fraction));
    }
    let Some(&(t_first, _)) = profile.first() else {
        return Err(Error::DegenerateTail(0));
    };
    let take = ((profile.len() as f64 * tail_fraction).ceil() as usize).min(profile.len());
    let pts: Vec<(f64, f64)> = profile[profile.len() - take..]
        .iter()
        .filter(|(_, g)| *g > GAP_FLOOR && g.is_finite())
        .map(|&(t, g)| ((t - t_first).abs(), g.ln()))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::DegenerateTail(pts.len()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateTail(pts.len()));
    }
    let slope = sxy / sxx;
    let quality = if syy == 0.0 { 0.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok((-slope, quality))
}
