//! Node sequence `theta_k = origin + k omega`, argument points
//! `zeta_k = theta_k + c omega`, and the piecewise constant argument
//! `gamma(t) = zeta_k` on `[theta_k, theta_{k+1})`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for snapping `t` onto a node before taking the floor.
const NODE_SNAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    omega: f64,
    origin: f64,
    zeta_fraction: f64,
}

/// Result of [`Schedule::locate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub k: i64,
    pub theta_k: f64,
    pub zeta_k: f64,
    pub theta_next: f64,
}

impl Schedule {
    pub fn new(omega: f64, origin: f64, zeta_fraction: f64) -> Result<Self> {
        if !(omega.is_finite() && origin.is_finite() && zeta_fraction.is_finite()) {
            return Err(Error::NonFinite("schedule parameter"));
        }
        if omega <= 0.0 {
            return Err(Error::BadStep(omega));
        }
        if !(0.0..=1.0).contains(&zeta_fraction) {
            return Err(Error::BadFraction(zeta_fraction));
        }
        Ok(Schedule { omega, origin, zeta_fraction })
    }

    /// `theta_k = zeta_k = k`: the greatest-integer argument `z([t])`.
    pub fn integer() -> Self {
        Schedule { omega: 1.0, origin: 0.0, zeta_fraction: 0.0 }
    }

    /// `theta_k = m1 k - m2`, `zeta_k = m1 k`: the argument `m1 [(t + m2)/m1]`.
    pub fn shifted(m1: u32, m2: u32) -> Result<Self> {
        if m1 == 0 || m2 >= m1 {
            return Err(Error::validation("schedule", "shifted preset needs m1 > m2 >= 0"));
        }
        Self::new(m1 as f64, -(m2 as f64), m2 as f64 / m1 as f64)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn zeta_fraction(&self) -> f64 {
        self.zeta_fraction
    }

    pub fn theta(&self, k: i64) -> f64 {
        self.origin + k as f64 * self.omega
    }

    pub fn zeta(&self, k: i64) -> f64 {
        self.origin + (k as f64 + self.zeta_fraction) * self.omega
    }

    /// Interval index containing `t`; nodes belong to the interval on their right.
    pub fn interval_of(&self, t: f64) -> Result<i64> {
        if !t.is_finite() {
            return Err(Error::NonFinite("time"));
        }
        let x = (t - self.origin) / self.omega;
        let mut k = x.floor();
        if (x - (k + 1.0)).abs() <= NODE_SNAP * x.abs().max(1.0) {
            k += 1.0;
        }
        Ok(k as i64)
    }

    pub fn locate(&self, t: f64) -> Result<Location> {
        let k = self.interval_of(t)?;
        Ok(Location { k, theta_k: self.theta(k), zeta_k: self.zeta(k), theta_next: self.theta(k + 1) })
    }

    /// `gamma(t)`.
    pub fn gamma(&self, t: f64) -> Result<f64> {
        Ok(self.locate(t)?.zeta_k)
    }
}
