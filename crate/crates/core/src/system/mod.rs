//! The system `z' = Az + f(t, z(t), z(gamma(t))) + alpha_k` on
//! `[theta_k, theta_{k+1})`, its standing assumptions and derived constants,
//! and the bounded-solution solvers.

mod nonlinearity;
mod solver;
mod trajectory;

pub use nonlinearity::{CatalogId, ContractReport, Example4, Nonlinearity, NonlinearityContract, Zero};
pub use solver::{
    required_pad, residual_defect, residual_defect_with, solve_bounded, step_interval, IntervalSolution, Method,
    SolveOptions,
};
pub use trajectory::{FrozenArg, SampledTrajectory, SolveMeta};

use serde::{Deserialize, Serialize};

use crate::driver::{DriverDomain, DriverOrbit};
use crate::error::{Error, Result};
use crate::linear::{
    estimate_decay_envelope, validate_envelope, DecayEnvelope, SquareMatrix, DEFAULT_RATE_MARGIN, MAX_EIGEN_DIM,
};
use crate::schedule::Schedule;

const CONTRACT_SAMPLES: usize = 1000;
const CONTRACT_SEED: u64 = 0x5eed_e9ca;
/// Grid resolution used when validating a supplied envelope.
const ENVELOPE_VALIDATION_POINTS: f64 = 20_000.0;

#[derive(Debug, Clone)]
pub struct EpcagSystem {
    a: SquareMatrix,
    envelope: DecayEnvelope,
    schedule: Schedule,
    f: NonlinearityContract,
    driver: DriverOrbit,
}

/// Builds and validates a system. Without an envelope one is estimated.
pub fn assemble_system(
    a: SquareMatrix,
    schedule: Schedule,
    f: NonlinearityContract,
    driver: DriverOrbit,
    envelope: Option<DecayEnvelope>,
) -> Result<EpcagSystem> {
    let m = a.dim();
    if f.dim() != m {
        return Err(Error::DimensionMismatch { expected: m, found: f.dim() });
    }
    if driver.dim() != m {
        return Err(Error::DimensionMismatch { expected: m, found: driver.dim() });
    }
    if m <= MAX_EIGEN_DIM {
        let sigma = a.spectral_abscissa()?;
        if sigma >= 0.0 {
            return Err(Error::NotHurwitz(sigma));
        }
    }
    let envelope = match envelope {
        Some(mut env) => {
            let report = validate_envelope(&a, &env, env.validated_horizon / ENVELOPE_VALIDATION_POINTS)?;
            if !report.pass {
                return Err(Error::validation(
                    "envelope",
                    format!("bound exceeded by ratio {} at t = {}", report.max_ratio, report.worst_t),
                ));
            }
            env.sample_count = report.samples;
            env
        }
        None => {
            let sigma = a.spectral_abscissa()?.abs();
            estimate_decay_envelope(&a, DEFAULT_RATE_MARGIN, 40.0 / sigma, 8000)?
        }
    };
    let sys = EpcagSystem { a, envelope, schedule, f, driver };
    let radius = 2.0 * sys.m_phi();
    sys.f.spot_check(radius, CONTRACT_SAMPLES, CONTRACT_SEED)?;
    Ok(sys)
}

impl EpcagSystem {
    pub fn matrix(&self) -> &SquareMatrix {
        &self.a
    }

    pub fn envelope(&self) -> &DecayEnvelope {
        &self.envelope
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn nonlinearity(&self) -> &NonlinearityContract {
        &self.f
    }

    pub fn driver(&self) -> &DriverOrbit {
        &self.driver
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// Same linear part, schedule and nonlinearity with another driver.
    pub fn with_driver(&self, driver: DriverOrbit) -> Result<EpcagSystem> {
        if driver.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: driver.dim() });
        }
        Ok(EpcagSystem { driver, ..self.clone() })
    }

    pub fn m_f(&self) -> f64 {
        self.driver.map_sup_norm()
    }

    /// `M_phi = N (M_f + M_F) / lambda`, the a priori bound on bounded solutions.
    pub fn m_phi(&self) -> f64 {
        self.envelope.n_const * (self.f.bound_mf + self.m_f()) / self.envelope.rate
    }

    /// `lambda - N (L1 + L2)`: decay rate of differences between solutions.
    pub fn attraction_rate(&self) -> f64 {
        self.envelope.rate - self.envelope.n_const * (self.f.lip_x + self.f.lip_y)
    }

    /// Bound on the discarded transient after `pad` intervals of marching from 0.
    pub fn transient_bound(&self, pad: usize) -> f64 {
        2.0 * self.m_phi()
            * self.envelope.n_const
            * (-self.attraction_rate() * pad as f64 * self.schedule.omega()).exp()
    }

    /// Tail of the convolution integral cut off `pad` intervals back.
    pub fn tail_bound(&self, pad: usize) -> f64 {
        let env = &self.envelope;
        env.n_const * (-env.rate * pad as f64 * self.schedule.omega()).exp() * (self.f.bound_mf + self.m_f()) / env.rate
    }

    /// Intervals of burn-in needed for a transient below `accuracy`.
    pub fn burn_pad(&self, accuracy: f64) -> Result<usize> {
        let rate = self.attraction_rate();
        if rate <= 0.0 {
            return Err(Error::AssumptionFailure("N(L1 + L2) < lambda does not hold".into()));
        }
        let x = (2.0 * self.m_phi() * self.envelope.n_const / accuracy).ln() / (rate * self.schedule.omega());
        Ok(x.ceil().max(1.0) as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub a1_mf: f64,
    pub a4_lhs: f64,
    pub a4_rhs: f64,
    pub a4_pass: bool,
    pub a5_lhs: f64,
    pub a5_pass: bool,
    pub notes: String,
}

/// `e^{lambda omega/2} (e^{lambda omega} - 1) / (1 - e^{-lambda omega/2})`.
fn delay_factor(rate: f64, omega: f64) -> f64 {
    let lw = rate * omega;
    (lw / 2.0).exp() * lw.exp_m1() / -(-lw / 2.0).exp_m1()
}

/// Evaluates the contraction condition `N(L1 + L2) < lambda` and the
/// stronger condition needed for the stable-set estimate.
pub fn check_assumptions(sys: &EpcagSystem) -> AssumptionReport {
    let (n, rate) = (sys.envelope.n_const, sys.envelope.rate);
    let (l1, l2) = (sys.f.lip_x, sys.f.lip_y);
    let a4_lhs = n * (l1 + l2);
    let a5_lhs = n / rate * (2.0 * l1 + l2 * delay_factor(rate, sys.schedule.omega()));
    let mut notes = format!(
        "N = {n}, lambda = {rate}, omega = {}, L1 = {l1}, L2 = {l2}; M_f = {} is the declared contract bound",
        sys.schedule.omega(),
        sys.f.bound_mf
    );
    match sys.driver.domain() {
        DriverDomain::Logistic(_) => notes.push_str("; M_F is the closed-form sup of |F| over the unit cube"),
        DriverDomain::Custom { margin } => {
            notes.push_str(&format!("; M_F is the driver-window sup plus margin {margin}"))
        }
    }
    AssumptionReport {
        a1_mf: sys.f.bound_mf,
        a4_lhs,
        a4_rhs: rate,
        a4_pass: a4_lhs < rate,
        a5_lhs,
        a5_pass: a5_lhs < 1.0,
        notes,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofConstants {
    pub m_f: f64,
    pub m_phi: f64,
    /// Present only when the stable-set condition holds.
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    pub sigma_max: Option<f64>,
    pub h_bound: f64,
    pub kappa_pi: f64,
    pub eta_max: f64,
}

pub fn proof_constants(sys: &EpcagSystem) -> Result<ProofConstants> {
    let report = check_assumptions(sys);
    if !report.a4_pass {
        return Err(Error::AssumptionFailure(format!(
            "N(L1 + L2) = {} is not below lambda = {}",
            report.a4_lhs, report.a4_rhs
        )));
    }
    let (n, rate, omega) = (sys.envelope.n_const, sys.envelope.rate, sys.schedule.omega());
    let (mf, l1, l2) = (sys.f.bound_mf, sys.f.lip_x, sys.f.lip_y);
    let m_f = sys.m_f();
    let m_phi = sys.m_phi();
    let (r1, r2, sigma_max) = if report.a5_pass {
        let r1 = 2.0 * n * m_phi / (1.0 - report.a5_lhs);
        let r2 = n / rate / (1.0 - n * l1 / rate - n * l2 * (rate * omega).exp() / rate);
        (Some(r1), Some(r2), Some(1.0 / (r1 + r2)))
    } else {
        (None, None, None)
    };
    Ok(ProofConstants {
        m_f,
        m_phi,
        r1,
        r2,
        sigma_max,
        h_bound: 2.0 * n * (m_phi + (mf + m_f) / rate),
        kappa_pi: report.a4_lhs / rate,
        eta_max: (rate - report.a4_lhs) / n,
    })
}
