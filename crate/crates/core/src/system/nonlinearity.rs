use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear::{diff_norm, vec_norm};

/// `f(t, x, y)` with `x = z(t)` and `y = z(gamma(t))`. Must be a pure function.
pub trait Nonlinearity: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64, x: &[f64], y: &[f64], out: &mut [f64]);
}

/// The two-dimensional perturbation of the worked logistic example:
///
/// `f1 = 0.03 cos x1 - 0.01 sin y2 + e^t/(1 + e^t)`,
/// `f2 = 0.02 sin x2 + 0.01 cos y1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Example4;

impl Nonlinearity for Example4 {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, t: f64, x: &[f64], y: &[f64], out: &mut [f64]) {
        out[0] = 0.03 * x[0].cos() - 0.01 * y[1].sin() + sigmoid(t);
        out[1] = 0.02 * x[1].sin() + 0.01 * y[0].cos();
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Zero {
    pub dim: usize,
}

impl Nonlinearity for Zero {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, _t: f64, _x: &[f64], _y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CatalogId {
    Example4,
    Zero,
    Custom,
}

/// A nonlinearity together with its declared bound `M_f` and Lipschitz
/// constants `L1` (in `x`) and `L2` (in `y`).
#[derive(Clone)]
pub struct NonlinearityContract {
    pub eval: Arc<dyn Nonlinearity>,
    pub bound_mf: f64,
    pub lip_x: f64,
    pub lip_y: f64,
    pub catalog_id: CatalogId,
}

impl fmt::Debug for NonlinearityContract {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonlinearityContract")
            .field("catalog_id", &self.catalog_id)
            .field("bound_mf", &self.bound_mf)
            .field("lip_x", &self.lip_x)
            .field("lip_y", &self.lip_y)
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractReport {
    pub samples: usize,
    pub max_norm: f64,
    pub max_quotient_x: f64,
    pub max_quotient_y: f64,
}

const LIP_RELATIVE_SLACK: f64 = 1e-6;
const LIP_ABSOLUTE_SLACK: f64 = 1e-12;
const SPOT_CHECK_TIME: f64 = 100.0;

impl NonlinearityContract {
    pub fn new(
        eval: Arc<dyn Nonlinearity>,
        bound_mf: f64,
        lip_x: f64,
        lip_y: f64,
        catalog_id: CatalogId,
    ) -> Result<Self> {
        if !(bound_mf > 0.0 && bound_mf.is_finite()) {
            return Err(Error::validation("nonlinearity.bound_mf", "must be positive"));
        }
        if !(lip_x >= 0.0 && lip_x.is_finite()) {
            return Err(Error::validation("nonlinearity.lip_x", "must be non-negative"));
        }
        if !(lip_y >= 0.0 && lip_y.is_finite()) {
            return Err(Error::validation("nonlinearity.lip_y", "must be non-negative"));
        }
        Ok(NonlinearityContract { eval, bound_mf, lip_x, lip_y, catalog_id })
    }

    /// The worked example with its declared constants `(1.07229, 0.03, 0.01)`.
    pub fn example4() -> Self {
        Self::example4_with(1.07229, 0.03, 0.01).expect("valid constants")
    }

    pub fn example4_with(bound_mf: f64, lip_x: f64, lip_y: f64) -> Result<Self> {
        Self::new(Arc::new(Example4), bound_mf, lip_x, lip_y, CatalogId::Example4)
    }

    /// `f = 0`; `bound_mf` only needs to be positive.
    pub fn zero(dim: usize, bound_mf: f64) -> Result<Self> {
        Self::new(Arc::new(Zero { dim }), bound_mf, 0.0, 0.0, CatalogId::Zero)
    }

    pub fn custom(eval: Arc<dyn Nonlinearity>, bound_mf: f64, lip_x: f64, lip_y: f64) -> Result<Self> {
        Self::new(eval, bound_mf, lip_x, lip_y, CatalogId::Custom)
    }

    pub fn dim(&self) -> usize {
        self.eval.dim()
    }

    /// Samples the declared bound and Lipschitz quotients on random points
    /// with `||x||, ||y|| <= radius`. Perturbations span four decades so that
    /// local slopes are seen as well as global ones.
    pub fn spot_check(&self, radius: f64, samples: usize, seed: u64) -> Result<ContractReport> {
        let m = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let point = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            let v: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n = vec_norm(&v).max(1e-300);
            let r = radius * rng.random::<f64>();
            v.into_iter().map(|c| c * r / n).collect()
        };
        let mut report = ContractReport { samples, max_norm: 0.0, max_quotient_x: 0.0, max_quotient_y: 0.0 };
        let (mut f1, mut f2) = (vec![0.0; m], vec![0.0; m]);
        for _ in 0..samples {
            let t = rng.random_range(-SPOT_CHECK_TIME..SPOT_CHECK_TIME);
            let x = point(&mut rng);
            let y = point(&mut rng);
            let scale = 10f64.powf(rng.random_range(-4.0..0.0));
            let dx: Vec<f64> = point(&mut rng).into_iter().map(|c| c * scale / radius.max(1e-300)).collect();
            let dy: Vec<f64> = point(&mut rng).into_iter().map(|c| c * scale / radius.max(1e-300)).collect();

            self.eval.eval(t, &x, &y, &mut f1);
            report.max_norm = report.max_norm.max(vec_norm(&f1));

            let x2: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
            let ndx = diff_norm(&x2, &x);
            if ndx > 0.0 {
                self.eval.eval(t, &x2, &y, &mut f2);
                report.max_quotient_x = report.max_quotient_x.max(diff_norm(&f1, &f2) / ndx);
            }
            let y2: Vec<f64> = y.iter().zip(&dy).map(|(a, b)| a + b).collect();
            let ndy = diff_norm(&y2, &y);
            if ndy > 0.0 {
                self.eval.eval(t, &x, &y2, &mut f2);
                report.max_quotient_y = report.max_quotient_y.max(diff_norm(&f1, &f2) / ndy);
            }
        }
        if report.max_norm > self.bound_mf {
            return Err(Error::ContractViolated(format!(
                "sampled |f| = {} exceeds M_f = {}",
                report.max_norm, self.bound_mf
            )));
        }
        let limit = |l: f64| l * (1.0 + LIP_RELATIVE_SLACK) + LIP_ABSOLUTE_SLACK;
        if report.max_quotient_x > limit(self.lip_x) {
            return Err(Error::ContractViolated(format!(
                "sampled Lipschitz quotient in x = {} exceeds L1 = {}",
                report.max_quotient_x, self.lip_x
            )));
        }
        if report.max_quotient_y > limit(self.lip_y) {
            return Err(Error::ContractViolated(format!(
                "sampled Lipschitz quotient in y = {} exceeds L2 = {}",
                report.max_quotient_y, self.lip_y
            )));
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_bound_is_respected() {
        let f = Example4;
        let mut out = [0.0; 2];
        f.eval(800.0, &[0.0, 0.0], &[-std::f64::consts::FRAC_PI_2, 0.0], &mut out);
        let sup = ((0.03f64 + 0.01 + 1.0).powi(2) + 0.03f64.powi(2)).sqrt();
        assert!(vec_norm(&out) <= sup + 1e-15);
        assert!(sup < 1.07229);
        f.eval(-800.0, &[0.0, 0.0], &[0.0, 0.0], &mut out);
        assert!(out.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn example_contract_passes() {
        let r = NonlinearityContract::example4().spot_check(33.0, 1000, 7).unwrap();
        assert!(r.max_quotient_x > 0.02 && r.max_quotient_x <= 0.03 + 1e-9);
        assert!(r.max_quotient_y > 0.005 && r.max_quotient_y <= 0.01 + 1e-9);
    }

    #[test]
    fn understated_lipschitz_constant_is_caught() {
        let c = NonlinearityContract::example4_with(1.07229, 0.001, 0.01).unwrap();
        assert!(matches!(c.spot_check(33.0, 1000, 7), Err(Error::ContractViolated(_))));
        let c = NonlinearityContract::example4_with(0.5, 0.03, 0.01).unwrap();
        assert!(matches!(c.spot_check(33.0, 1000, 7), Err(Error::ContractViolated(_))));
    }

    #[test]
    fn zero_contract() {
        let r = NonlinearityContract::zero(3, 1e-12).unwrap().spot_check(10.0, 100, 1).unwrap();
        assert_eq!(r.max_norm, 0.0);
        assert!(NonlinearityContract::zero(2, 0.0).is_err());
    }
}
