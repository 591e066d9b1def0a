use serde::{Deserialize, Serialize};

use super::{difference_profile, fit_decay_rate, GAP_FLOOR};
use crate::driver::{orbit_gap_profile, Direction, DriverOrbit};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::system::{
    check_assumptions, proof_constants, solve_bounded, EpcagSystem, ProofConstants, SampledTrajectory, SolveOptions,
};

/// Portion of a directional profile used for the rate fit.
pub const TAIL_FRACTION: f64 = 1.0 / 3.0;
pub const MIN_FIT_QUALITY: f64 = 0.9;
/// Connecting and target solutions must differ by this many `tol` somewhere.
pub const DISTINCTNESS_FACTOR: f64 = 10.0;
pub const BOUND_SLACK: f64 = 0.1;
/// Iterates are converged well below the gaps being fitted.
pub const CERT_PICARD_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectionKind {
    Homoclinic,
    Heteroclinic,
}

impl ConnectionKind {
    fn targets(self) -> usize {
        match self {
            ConnectionKind::Homoclinic => 1,
            ConnectionKind::Heteroclinic => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    /// Solutions are compared on `[theta_{-window}, theta_{window}]`.
    pub window: i64,
    pub tol: f64,
    pub solve: SolveOptions,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            window: 30,
            tol: 1e-4,
            solve: SolveOptions { picard_tol: CERT_PICARD_TOL, ..SolveOptions::default() },
        }
    }
}

impl CertifyOptions {
    fn validate(&self) -> Result<()> {
        if self.window < 3 {
            return Err(Error::validation("numeric.window", "must be at least 3"));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::validation("numeric.cert_tol", "must be positive"));
        }
        Ok(())
    }
}

/// Stable-side envelope `gap(t) <= R1 e^{-lambda (t - t_ref)/2} + R2 g_end (1 + slack)`
/// for `t >= t_ref`, where `t_ref` is the first node after which the sequence
/// gaps stay below `sigma_max * tol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableEnvelopeCheck {
    pub k_ref: Option<i64>,
    pub end_sequence_gap: f64,
    pub max_ratio: f64,
    pub pass: bool,
}

/// `sup_{t <= theta_k0} gap <= N g / (lambda - N(L1 + L2)) (1 + slack)` with
/// `g = sup_{k < k0} ||a_k - b_k||`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnstableBoundCheck {
    pub k0: i64,
    pub sequence_gap: f64,
    pub sup_gap: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCertificate {
    pub end_gap: f64,
    /// Absent when the tail sits entirely below the fitting floor.
    pub fitted_rate: Option<f64>,
    pub fit_quality: Option<f64>,
    pub bound_check: bool,
    pub direction: Direction,
    pub rate_evidence: bool,
    pub pass: bool,
    #[serde(skip)]
    pub gap_samples: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateConstants {
    #[serde(rename = "N")]
    pub n: f64,
    pub lambda: f64,
    #[serde(rename = "M_phi")]
    pub m_phi: f64,
    #[serde(rename = "R1")]
    pub r1: Option<f64>,
    #[serde(rename = "R2")]
    pub r2: Option<f64>,
    pub kappa_pi: f64,
}

impl CertificateConstants {
    fn new(sys: &EpcagSystem, c: &ProofConstants) -> Self {
        CertificateConstants {
            n: sys.envelope().n_const,
            lambda: sys.envelope().rate,
            m_phi: c.m_phi,
            r1: c.r1,
            r2: c.r2,
            kappa_pi: c.kappa_pi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionCertificate {
    pub kind: ConnectionKind,
    pub verdict: bool,
    pub forward: DecayCertificate,
    pub backward: DecayCertificate,
    pub distinctness: f64,
    pub constants: CertificateConstants,
    pub tol: f64,
    pub window: i64,
}

/// A certificate together with the solutions it was computed from.
#[derive(Debug, Clone)]
pub struct ConnectionRun {
    pub certificate: ConnectionCertificate,
    pub beta: SampledTrajectory,
    pub targets: Vec<SampledTrajectory>,
}

pub fn stable_envelope_check(
    sys: &EpcagSystem,
    consts: &ProofConstants,
    profile: &[(f64, f64)],
    sequence_gaps: &[(i64, f64)],
    tol: f64,
) -> Result<StableEnvelopeCheck> {
    let (Some(r1), Some(r2), Some(sigma)) = (consts.r1, consts.r2, consts.sigma_max) else {
        return Err(Error::AssumptionFailure("stable-direction constants need (A5)".into()));
    };
    let end_sequence_gap = sequence_gaps.last().map_or(0.0, |p| p.1);
    // first index of the suffix on which all gaps are small
    let mut k_ref = None;
    for &(k, g) in sequence_gaps.iter().rev() {
        if g > sigma * tol {
            break;
        }
        k_ref = Some(k);
    }
    let Some(k) = k_ref else {
        return Ok(StableEnvelopeCheck { k_ref, end_sequence_gap, max_ratio: f64::INFINITY, pass: false });
    };
    let t_ref = sys.schedule().theta(k);
    let lambda = sys.envelope().rate;
    let max_ratio = profile
        .iter()
        .filter(|(t, _)| *t >= t_ref)
        .map(|&(t, g)| g / (r1 * (-lambda * (t - t_ref) / 2.0).exp() + r2 * end_sequence_gap * (1.0 + BOUND_SLACK)))
        .fold(0.0, f64::max);
    Ok(StableEnvelopeCheck { k_ref, end_sequence_gap, max_ratio, pass: max_ratio <= 1.0 })
}

pub fn unstable_bound_check(
    sys: &EpcagSystem,
    traj_a: &SampledTrajectory,
    traj_b: &SampledTrajectory,
    drv_a: &DriverOrbit,
    drv_b: &DriverOrbit,
    k0: i64,
) -> Result<UnstableBoundCheck> {
    let rate = sys.attraction_rate();
    if rate <= 0.0 {
        return Err(Error::AssumptionFailure("unstable-direction bound needs (A4)".into()));
    }
    let sequence_gap = orbit_gap_profile(drv_a, drv_b, Direction::Backward)?
        .into_iter()
        .filter(|(k, _)| *k < k0)
        .map(|p| p.1)
        .fold(0.0, f64::max);
    let t0 = sys.schedule().theta(k0);
    let sup_gap =
        difference_profile(traj_a, traj_b)?.into_iter().filter(|(t, _)| *t <= t0).map(|p| p.1).fold(0.0, f64::max);
    let bound = sys.envelope().n_const * sequence_gap / rate * (1.0 + BOUND_SLACK);
    Ok(UnstableBoundCheck { k0, sequence_gap, sup_gap, bound, pass: sup_gap <= bound })
}

/// Directional profile starting at `theta_0`.
fn directional_profile(full: &[(f64, f64)], traj: &SampledTrajectory, direction: Direction) -> Vec<(f64, f64)> {
    let zero = traj.node_index(0).expect("window contains theta_0");
    match direction {
        Direction::Forward => full[zero..].to_vec(),
        Direction::Backward => full[..=zero].iter().rev().copied().collect(),
    }
}

fn rate_evidence(profile: &[(f64, f64)], end_gap: f64) -> Result<(Option<f64>, Option<f64>, bool)> {
    match fit_decay_rate(profile, TAIL_FRACTION) {
        Ok((r, q)) => Ok((Some(r), Some(q), r > 0.0 && q >= MIN_FIT_QUALITY)),
        Err(Error::DegenerateTail(_)) => Ok((None, None, end_gap <= GAP_FLOOR)),
        Err(e) => Err(e),
    }
}

pub(crate) struct Side<'a> {
    pub sys: &'a EpcagSystem,
    pub target: (&'a SampledTrajectory, &'a DriverOrbit),
    pub beta: (&'a SampledTrajectory, &'a DriverOrbit),
    pub consts: &'a ProofConstants,
    pub tol: f64,
}

impl Side<'_> {
    pub(crate) fn certificate(&self, direction: Direction) -> Result<DecayCertificate> {
        let (ta, da) = self.target;
        let (tb, db) = self.beta;
        let full = difference_profile(tb, ta)?;
        let profile = directional_profile(&full, ta, direction);
        let end_gap = profile.last().map_or(0.0, |p| p.1);
        let (fitted_rate, fit_quality, rate_ok) = rate_evidence(&profile, end_gap)?;
        let bound_check = match direction {
            Direction::Forward => {
                let seq = orbit_gap_profile(db, da, Direction::Forward)?;
                let seq: Vec<_> = seq.into_iter().filter(|(k, _)| *k <= ta.k_hi).collect();
                stable_envelope_check(self.sys, self.consts, &profile, &seq, self.tol)?.pass
            }
            Direction::Backward => unstable_bound_check(self.sys, ta, tb, da, db, ta.k_lo / 2)?.pass,
        };
        Ok(DecayCertificate {
            end_gap,
            fitted_rate,
            fit_quality,
            bound_check,
            direction,
            rate_evidence: rate_ok,
            pass: end_gap <= self.tol && rate_ok,
            gap_samples: profile,
        })
    }
}

/// Sup gap on `[theta_{k_lo/3}, theta_{k_hi/3}]`.
pub(crate) fn distinctness(a: &SampledTrajectory, b: &SampledTrajectory) -> Result<f64> {
    let full = difference_profile(a, b)?;
    let lo = a.node_index(a.k_lo / 3).ok_or(Error::GridMismatch)?;
    let hi = a.node_index(a.k_hi / 3).ok_or(Error::GridMismatch)?;
    Ok(full[lo..=hi].iter().map(|p| p.1).fold(0.0, f64::max))
}

pub(crate) fn sequence_premise(beta: &DriverOrbit, target: &DriverOrbit, k: i64, tol: f64) -> Result<()> {
    let (gb, gt) = (beta.get(k), target.get(k));
    let (Some(b), Some(t)) = (gb, gt) else {
        return Err(Error::PremiseFailure(format!("drivers do not cover k = {k}")));
    };
    let gap = crate::linear::diff_norm(b, t);
    if gap > tol {
        return Err(Error::PremiseFailure(format!("sequence gap {gap:.3e} at k = {k} exceeds {tol:e}")));
    }
    Ok(())
}

pub(crate) fn solve_all(
    sys: &EpcagSystem,
    drivers: &[&DriverOrbit],
    opts: &CertifyOptions,
    exec: Exec,
) -> Result<Vec<SampledTrajectory>> {
    exec.try_map(drivers.len(), |i| {
        let s = sys.with_driver(drivers[i].clone())?;
        solve_bounded(&s, -opts.window, opts.window, &opts.solve)
    })
}

/// Solves for the connecting driver `beta` and its targets (`[alpha]` or
/// `[alpha_1, alpha_2]`) and certifies forward decay toward the first target
/// and backward decay toward the last.
pub fn run_connection(
    sys: &EpcagSystem,
    targets: &[DriverOrbit],
    beta: &DriverOrbit,
    kind: ConnectionKind,
    opts: &CertifyOptions,
) -> Result<ConnectionRun> {
    opts.validate()?;
    if targets.len() != kind.targets() {
        return Err(Error::validation("targets", format!("{kind:?} needs {} target sequence(s)", kind.targets())));
    }
    let sys_beta = sys.with_driver(beta.clone())?;
    let report = check_assumptions(&sys_beta);
    if !report.a5_pass {
        return Err(Error::AssumptionFailure(format!("forward certificate needs (A5); lhs = {}", report.a5_lhs)));
    }
    let consts = proof_constants(&sys_beta)?;
    let (fwd, bwd) = (&targets[0], &targets[targets.len() - 1]);
    sequence_premise(beta, fwd, opts.window, opts.tol)?;
    sequence_premise(beta, bwd, -opts.window, opts.tol)?;

    let mut drivers: Vec<&DriverOrbit> = vec![beta];
    drivers.extend(targets.iter());
    let mut trajs = solve_all(sys, &drivers, opts, opts.solve.exec)?;
    let beta_traj = trajs.remove(0);
    let side = |i: usize| Side {
        sys: &sys_beta,
        target: (&trajs[i], &targets[i]),
        beta: (&beta_traj, beta),
        consts: &consts,
        tol: opts.tol,
    };
    let forward = side(0).certificate(Direction::Forward)?;
    let backward = side(trajs.len() - 1).certificate(Direction::Backward)?;
    let distinct = trajs
        .iter()
        .map(|t| distinctness(&beta_traj, t))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let mut d_all = distinct;
    if kind == ConnectionKind::Heteroclinic {
        d_all = d_all.min(distinctness(&trajs[0], &trajs[1])?);
    }
    let verdict = forward.pass && backward.pass && d_all > DISTINCTNESS_FACTOR * opts.tol;
    let certificate = ConnectionCertificate {
        kind,
        verdict,
        forward,
        backward,
        distinctness: d_all,
        constants: CertificateConstants::new(&sys_beta, &consts),
        tol: opts.tol,
        window: opts.window,
    };
    Ok(ConnectionRun { certificate, beta: beta_traj, targets: trajs })
}

pub fn certify_connection(
    sys: &EpcagSystem,
    targets: &[DriverOrbit],
    beta: &DriverOrbit,
    kind: ConnectionKind,
    opts: &CertifyOptions,
) -> Result<ConnectionCertificate> {
    run_connection(sys, targets, beta, kind, opts).map(|r| r.certificate)
}
