use serde::{Deserialize, Serialize};

use super::{mat_exp, SquareMatrix, MAX_EIGEN_DIM};
use crate::error::{Error, Result};
use crate::exec::Exec;

pub const DEFAULT_RATE_MARGIN: f64 = 0.02;

/// Multiplicative headroom applied to a sampled supremum.
const ESTIMATE_INFLATION: f64 = 1.01;
const ANALYTIC_SLACK: f64 = 1e-9;
const ESTIMATED_SLACK: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeOrigin {
    /// Supplied by the caller, e.g. from an eigenvector-conditioning argument.
    Analytic,
    /// Produced by [`estimate_decay_envelope`].
    Estimated,
}

/// Constants `(N, lambda)` with `||e^{At}|| <= N e^{-lambda t}` for `t >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayEnvelope {
    pub n_const: f64,
    pub rate: f64,
    pub validated_horizon: f64,
    pub sample_count: usize,
    pub origin: EnvelopeOrigin,
    /// Uninflated supremum of `||e^{At}|| e^{rate t}` seen while estimating.
    pub sampled_sup: Option<f64>,
}

impl DecayEnvelope {
    /// A caller-supplied envelope, to be checked on `[0, horizon]`.
    pub fn analytic(n_const: f64, rate: f64, horizon: f64) -> Result<Self> {
        if !(n_const.is_finite() && rate.is_finite() && horizon.is_finite()) {
            return Err(Error::NonFinite("envelope constant"));
        }
        if n_const < 1.0 {
            return Err(Error::validation("envelope.n_const", "must be >= 1"));
        }
        if rate <= 0.0 {
            return Err(Error::validation("envelope.rate", "must be > 0"));
        }
        if horizon <= 0.0 {
            return Err(Error::validation("envelope.horizon", "must be > 0"));
        }
        Ok(DecayEnvelope {
            n_const,
            rate,
            validated_horizon: horizon,
            sample_count: 0,
            origin: EnvelopeOrigin::Analytic,
            sampled_sup: None,
        })
    }

    /// Tolerance on the bound ratio used by [`validate_envelope`].
    pub fn slack(&self) -> f64 {
        match self.origin {
            EnvelopeOrigin::Analytic => ANALYTIC_SLACK,
            EnvelopeOrigin::Estimated => ESTIMATED_SLACK,
        }
    }

    /// `N e^{-lambda t}`.
    pub fn bound(&self, t: f64) -> f64 {
        self.n_const * (-self.rate * t).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// `max_t ||e^{At}|| e^{lambda t} / N` over the grid.
    pub max_ratio: f64,
    pub worst_t: f64,
    pub samples: usize,
    pub slack: f64,
    pub pass: bool,
}

fn require_hurwitz(a: &SquareMatrix) -> Result<Option<f64>> {
    if a.dim() > MAX_EIGEN_DIM {
        return Ok(None);
    }
    let sigma = a.spectral_abscissa()?;
    if sigma >= 0.0 {
        return Err(Error::NotHurwitz(sigma));
    }
    Ok(Some(sigma))
}

fn weighted_norm(a: &SquareMatrix, t: f64, rate: f64) -> Result<f64> {
    Ok(mat_exp(a, t)?.spectral_norm() * (rate * t).exp())
}

pub fn estimate_decay_envelope(
    a: &SquareMatrix,
    rate_margin: f64,
    horizon: f64,
    samples: usize,
) -> Result<DecayEnvelope> {
    estimate_decay_envelope_with(a, rate_margin, horizon, samples, Exec::default())
}

/// Samples `||e^{At}|| e^{rate t}` on `samples + 1` equispaced points of
/// `[0, horizon]`, where `rate = (1 - rate_margin) |sigma(A)|`.
pub fn estimate_decay_envelope_with(
    a: &SquareMatrix,
    rate_margin: f64,
    horizon: f64,
    samples: usize,
    exec: Exec,
) -> Result<DecayEnvelope> {
    if !(rate_margin > 0.0 && rate_margin < 1.0) {
        return Err(Error::validation("rate_margin", "must lie in (0, 1)"));
    }
    if samples == 0 {
        return Err(Error::validation("samples", "must be positive"));
    }
    let sigma = match require_hurwitz(a)? {
        Some(s) => s,
        None => return Err(Error::EnvelopeRequired(a.dim())),
    };
    let required = 10.0 / sigma.abs();
    if !(horizon >= required) {
        return Err(Error::HorizonTooShort { horizon, required });
    }
    let rate = (1.0 - rate_margin) * sigma.abs();
    let step = horizon / samples as f64;
    let values = exec.try_map(samples + 1, |i| weighted_norm(a, i as f64 * step, rate))?;
    let sup = values.into_iter().fold(0.0, f64::max);
    Ok(DecayEnvelope {
        n_const: (sup * ESTIMATE_INFLATION).max(1.0),
        rate,
        validated_horizon: horizon,
        sample_count: samples + 1,
        origin: EnvelopeOrigin::Estimated,
        sampled_sup: Some(sup),
    })
}

pub fn validate_envelope(a: &SquareMatrix, env: &DecayEnvelope, grid_step: f64) -> Result<ValidationReport> {
    validate_envelope_with(a, env, grid_step, Exec::default())
}

/// Checks the envelope on a uniform grid of `[0, env.validated_horizon]`.
pub fn validate_envelope_with(
    a: &SquareMatrix,
    env: &DecayEnvelope,
    grid_step: f64,
    exec: Exec,
) -> Result<ValidationReport> {
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(Error::validation("grid_step", "must be positive"));
    }
    require_hurwitz(a)?;
    let horizon = env.validated_horizon;
    let n = (horizon / grid_step).ceil() as usize;
    let ratios = exec.try_map(n + 1, |i| {
        let t = (i as f64 * grid_step).min(horizon);
        Ok::<_, Error>(weighted_norm(a, t, env.rate)? / env.n_const)
    })?;
    let (worst, max_ratio) =
        ratios
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, r)| if r > best.1 { (i, r) } else { best });
    let slack = env.slack();
    Ok(ValidationReport {
        max_ratio,
        worst_t: (worst as f64 * grid_step).min(horizon),
        samples: n + 1,
        slack,
        pass: max_ratio <= 1.0 + slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_a() -> SquareMatrix {
        SquareMatrix::from_rows(&[vec![2.0, -2.0], vec![5.0, -3.0]]).unwrap()
    }

    fn example_n() -> f64 {
        (7.0 + 34f64.sqrt()) / 15f64.sqrt()
    }

    #[test]
    fn normal_matrix_has_unit_constant() {
        let a = SquareMatrix::diagonal(&[-1.0, -1.0]).unwrap();
        for &m in &[0.02, 0.3, 0.7] {
            let env = estimate_decay_envelope(&a, m, 20.0, 400).unwrap();
            assert!((env.rate - (1.0 - m)).abs() < 1e-12);
            assert!((env.sampled_sup.unwrap() - 1.0).abs() < 1e-12);
            assert!(env.n_const >= 1.0 && env.n_const <= 1.01 + 1e-12);
        }
    }

    #[test]
    fn example_sampled_sup_is_below_analytic_constant() {
        let env = estimate_decay_envelope(&example_a(), DEFAULT_RATE_MARGIN, 60.0, 6000).unwrap();
        assert!((env.rate - 0.49).abs() < 1e-9);
        assert!(env.sampled_sup.unwrap() <= example_n());
        // the inflated constant still validates on a finer grid
        let report = validate_envelope(&example_a(), &env, 60.0 / 12000.0).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn non_normal_transient_growth_is_captured() {
        let a = SquareMatrix::from_rows(&[vec![-1.0, 100.0], vec![0.0, -1.0]]).unwrap();
        let env = estimate_decay_envelope(&a, 0.5, 20.0, 2000).unwrap();
        // brute-force oracle: ||e^{At}|| e^{t/2} at step 0.01 from the closed form
        let oracle = (0..=2000)
            .map(|i| {
                let t = i as f64 * 0.01;
                let m = nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 100.0 * t, 0.0, 1.0]);
                super::super::spectral_norm(&m) * (-0.5 * t).exp()
            })
            .fold(0.0, f64::max);
        assert!(oracle >= 50.0);
        assert!(env.n_const >= 50.0);
        assert!((env.sampled_sup.unwrap() - oracle).abs() / oracle < 1e-3);
    }

    #[test]
    fn estimation_errors() {
        let unstable = SquareMatrix::diagonal(&[0.1, -1.0]).unwrap();
        assert!(matches!(estimate_decay_envelope(&unstable, 0.02, 100.0, 100), Err(Error::NotHurwitz(_))));
        assert!(matches!(estimate_decay_envelope(&example_a(), 0.02, 5.0, 100), Err(Error::HorizonTooShort { .. })));
    }

    #[test]
    fn validation_examples() {
        let id = SquareMatrix::diagonal(&[-1.0, -1.0]).unwrap();
        let env = DecayEnvelope::analytic(1.0, 1.0, 10.0).unwrap();
        let r = validate_envelope(&id, &env, 0.01).unwrap();
        assert!(r.pass);
        assert!((r.max_ratio - 1.0).abs() < 1e-12);

        let env = DecayEnvelope::analytic(example_n(), 0.5, 60.0).unwrap();
        let r = validate_envelope(&example_a(), &env, 1e-3).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.max_ratio > 0.999, "supremum is attained up to grid resolution");

        let env = DecayEnvelope::analytic(1.0, 0.5, 60.0).unwrap();
        assert!(!validate_envelope(&example_a(), &env, 1e-2).unwrap().pass);
    }

    #[test]
    fn validation_requires_hurwitz() {
        let a = SquareMatrix::diagonal(&[0.0, -1.0]).unwrap();
        let env = DecayEnvelope::analytic(1.0, 0.5, 10.0).unwrap();
        assert!(matches!(validate_envelope(&a, &env, 0.1), Err(Error::NotHurwitz(_))));
    }
}
