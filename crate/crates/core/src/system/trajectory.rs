use serde::{Deserialize, Serialize};

use super::Method;
use crate::schedule::Schedule;

/// `w_k = z(zeta_k)`, the value frozen into the deviating argument on interval `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrozenArg {
    pub k: i64,
    pub zeta: f64,
    pub w: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveMeta {
    pub method: Method,
    /// Intervals integrated before `k_lo` and discarded.
    pub pad: usize,
    pub picard_iterations: Option<usize>,
    /// Sup-norm distances between successive Picard iterates.
    pub picard_diffs: Vec<f64>,
    pub max_inner_iters: usize,
    pub transient_bound: f64,
    pub tail_bound: f64,
    pub error_budget: f64,
    pub sup_norm: f64,
    pub m_phi: f64,
}

/// A solution sampled on the uniform grid of `[theta_{k_lo}, theta_{k_hi}]`
/// with `substeps` points per interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTrajectory {
    pub dim: usize,
    pub k_lo: i64,
    pub k_hi: i64,
    pub substeps: usize,
    pub schedule: Schedule,
    pub t0: f64,
    pub t1: f64,
    pub step: f64,
    pub(crate) samples: Vec<f64>,
    pub frozen_args: Vec<FrozenArg>,
    pub meta: SolveMeta,
}

impl SampledTrajectory {
    pub fn len(&self) -> usize {
        self.samples.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.samples[i * self.dim..(i + 1) * self.dim]
    }

    /// Interval label of sample `i`; the final node belongs to `k_hi`.
    pub fn interval_of(&self, i: usize) -> i64 {
        self.k_lo + (i / self.substeps) as i64
    }

    pub fn time(&self, i: usize) -> f64 {
        let k = self.interval_of(i);
        self.schedule.theta(k) + (i % self.substeps) as f64 * self.step
    }

    /// Sample index of node `theta_k`.
    pub fn node_index(&self, k: i64) -> Option<usize> {
        (self.k_lo..=self.k_hi).contains(&k).then(|| (k - self.k_lo) as usize * self.substeps)
    }

    pub fn frozen(&self, k: i64) -> Option<&FrozenArg> {
        let i = k.checked_sub(self.k_lo)?;
        self.frozen_args.get(usize::try_from(i).ok()?).filter(|a| a.k == k)
    }

    pub fn same_grid(&self, other: &SampledTrajectory) -> bool {
        self.dim == other.dim
            && self.k_lo == other.k_lo
            && self.k_hi == other.k_hi
            && self.substeps == other.substeps
            && self.schedule == other.schedule
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.chunks(self.dim).map(crate::linear::vec_norm).fold(0.0, f64::max)
    }

    /// Builds a trajectory from explicit samples; `frozen_args` must list
    /// `k_lo..k_hi` in order.
    pub fn from_samples(
        schedule: Schedule,
        k_lo: i64,
        k_hi: i64,
        substeps: usize,
        samples: Vec<Vec<f64>>,
        frozen_args: Vec<FrozenArg>,
        meta: SolveMeta,
    ) -> Self {
        let dim = samples[0].len();
        assert_eq!(samples.len(), (k_hi - k_lo) as usize * substeps + 1);
        SampledTrajectory {
            dim,
            k_lo,
            k_hi,
            substeps,
            t0: schedule.theta(k_lo),
            t1: schedule.theta(k_hi),
            step: schedule.omega() / substeps as f64,
            schedule,
            samples: samples.concat(),
            frozen_args,
            meta,
        }
    }
}
