//! Bounded solutions on a window of intervals.
//!
//! Two independent routes are provided. Burn-in marches the interval problem
//! forward from `z = 0` far enough back that the transient has decayed.
//! Picard iterates the convolution operator
//! `psi -> int_{-inf}^t e^{A(t-s)} [f(s, psi(s), psi(gamma(s))) + alpha] ds`
//! discretized on the same grid, with the integral cut off at the same pad.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{EpcagSystem, FrozenArg, SampledTrajectory, SolveMeta};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linear::{diff_norm, mat_exp, mul_vec, mul_vec_add, SquareMatrix};

const MAX_INNER_ITERS: usize = 100;
const MIN_SUBSTEPS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Picard,
    BurnIn,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub substeps: usize,
    pub method: Method,
    /// Target for the truncation error budget; sets the default pad.
    pub accuracy: f64,
    /// Overrides the computed pad; rejected if its budget exceeds `accuracy`.
    pub pad: Option<usize>,
    pub picard_tol: f64,
    pub max_picard_iters: usize,
    pub inner_tol: f64,
    pub exec: Exec,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            substeps: 200,
            method: Method::Picard,
            accuracy: 1e-8,
            pad: None,
            picard_tol: 1e-10,
            max_picard_iters: 100,
            inner_tol: 1e-12,
            exec: Exec::default(),
        }
    }
}

/// Placement of `zeta_k` on the interval grid: `zeta_k = theta_k + j h + rem`.
#[derive(Debug, Clone)]
struct Geometry {
    substeps: usize,
    h: f64,
    delta: f64,
    j: usize,
    rem: f64,
    /// `e^{A delta}` and `int_0^delta e^{As} ds`, for the predictor.
    flow: DMatrix<f64>,
    flow_integral: DMatrix<f64>,
}

impl Geometry {
    fn new(sys: &EpcagSystem, substeps: usize) -> Result<Self> {
        let s = sys.schedule();
        let h = s.omega() / substeps as f64;
        let delta = s.zeta_fraction() * s.omega();
        let x = s.zeta_fraction() * substeps as f64;
        let (j, rem) = if (x - x.round()).abs() < 1e-9 {
            (x.round() as usize, 0.0)
        } else {
            (x.floor() as usize, delta - x.floor() * h)
        };
        // exp of [[A, I], [0, 0]] delta carries the integral in its upper-right block
        let m = sys.dim();
        let mut aug = DMatrix::zeros(2 * m, 2 * m);
        aug.view_mut((0, 0), (m, m)).copy_from(sys.matrix().as_matrix());
        aug.view_mut((0, m), (m, m)).fill_with_identity();
        let e = mat_exp(&SquareMatrix::new(aug)?, delta)?.into_matrix();
        let flow = e.view((0, 0), (m, m)).into_owned();
        let flow_integral = e.view((0, m), (m, m)).into_owned();
        Ok(Geometry { substeps, h, delta, j, rem, flow, flow_integral })
    }
}

/// `z' = Az + f(t, z, w) + alpha` with `w` and `alpha` frozen.
struct Field<'a> {
    a: &'a DMatrix<f64>,
    sys: &'a EpcagSystem,
    alpha: &'a [f64],
    w: &'a [f64],
}

impl Field<'_> {
    fn eval(&self, t: f64, z: &[f64], out: &mut [f64], tmp: &mut [f64]) {
        mul_vec(self.a, z, out);
        self.sys.nonlinearity().eval.eval(t, z, self.w, tmp);
        for ((o, f), a) in out.iter_mut().zip(tmp.iter()).zip(self.alpha) {
            *o += f + a;
        }
    }
}

struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    fn new(m: usize) -> Self {
        Rk4 {
            k1: vec![0.0; m],
            k2: vec![0.0; m],
            k3: vec![0.0; m],
            k4: vec![0.0; m],
            stage: vec![0.0; m],
            tmp: vec![0.0; m],
        }
    }

    fn step(&mut self, field: &Field<'_>, t: f64, z: &mut [f64], h: f64) {
        let Rk4 { k1, k2, k3, k4, stage, tmp } = self;
        field.eval(t, z, k1, tmp);
        for i in 0..z.len() {
            stage[i] = z[i] + 0.5 * h * k1[i];
        }
        field.eval(t + 0.5 * h, stage, k2, tmp);
        for i in 0..z.len() {
            stage[i] = z[i] + 0.5 * h * k2[i];
        }
        field.eval(t + 0.5 * h, stage, k3, tmp);
        for i in 0..z.len() {
            stage[i] = z[i] + h * k3[i];
        }
        field.eval(t + h, stage, k4, tmp);
        for i in 0..z.len() {
            z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

/// One interval `[theta_k, theta_{k+1}]` solved from `z(theta_k) = z0`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSolution {
    /// `substeps + 1` samples, flattened.
    pub samples: Vec<f64>,
    /// Converged `w_k = z(zeta_k)`.
    pub w: Vec<f64>,
    pub inner_iters: usize,
}

/// Solves one interval, resolving the (possibly advanced) argument by the
/// fixed point `w <- z(zeta_k; w)`.
pub fn step_interval(sys: &EpcagSystem, k: i64, z0: &[f64], tol: f64, substeps: usize) -> Result<IntervalSolution> {
    if z0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial value"));
    }
    if !(tol > 0.0) {
        return Err(Error::validation("tol", "must be positive"));
    }
    if substeps == 0 {
        return Err(Error::validation("substeps", "must be positive"));
    }
    let geo = Geometry::new(sys, substeps)?;
    step_interval_with(sys, &geo, k, z0, tol)
}

fn step_interval_with(sys: &EpcagSystem, geo: &Geometry, k: i64, z0: &[f64], tol: f64) -> Result<IntervalSolution> {
    let m = sys.dim();
    let driver = sys.driver();
    let alpha = driver.get(k).ok_or(Error::DriverTooShort {
        have_lo: driver.k_min(),
        have_hi: driver.k_max(),
        need_lo: k,
        need_hi: k,
    })?;
    let a = sys.matrix().as_matrix();
    let theta = sys.schedule().theta(k);
    let mut rk = Rk4::new(m);

    let zeta_value = |w: &[f64], rk: &mut Rk4| -> Vec<f64> {
        let field = Field { a, sys, alpha, w };
        let mut z = z0.to_vec();
        for j in 0..geo.j {
            rk.step(&field, theta + j as f64 * geo.h, &mut z, geo.h);
        }
        if geo.rem > 0.0 {
            rk.step(&field, theta + geo.j as f64 * geo.h, &mut z, geo.rem);
        }
        z
    };

    // exponential Euler predictor with the forcing frozen at theta_k
    let mut w = {
        let mut g = vec![0.0; m];
        sys.nonlinearity().eval.eval(theta, z0, z0, &mut g);
        g.iter_mut().zip(alpha).for_each(|(g, a)| *g += a);
        let mut w = vec![0.0; m];
        mul_vec(&geo.flow, z0, &mut w);
        mul_vec_add(&geo.flow_integral, &g, &mut w);
        w
    };
    let mut iters = 0;
    loop {
        iters += 1;
        let next = zeta_value(&w, &mut rk);
        let change = diff_norm(&next, &w);
        w = next;
        if change <= tol {
            break;
        }
        if iters >= MAX_INNER_ITERS || !change.is_finite() {
            return Err(Error::InnerDivergence { k, tol, iters });
        }
    }

    let field = Field { a, sys, alpha, w: &w };
    let mut samples = Vec::with_capacity((geo.substeps + 1) * m);
    let mut z = z0.to_vec();
    samples.extend_from_slice(&z);
    for j in 0..geo.substeps {
        rk.step(&field, theta + j as f64 * geo.h, &mut z, geo.h);
        samples.extend_from_slice(&z);
    }
    Ok(IntervalSolution { samples, w, inner_iters: iters })
}

fn error_budget(sys: &EpcagSystem, method: Method, pad: usize) -> f64 {
    match method {
        Method::BurnIn => sys.transient_bound(pad),
        Method::Picard => sys.transient_bound(pad) + sys.tail_bound(pad),
    }
}

/// Intervals solved ahead of `k_lo` and discarded.
pub fn required_pad(sys: &EpcagSystem, opts: &SolveOptions) -> Result<usize> {
    if let Some(pad) = opts.pad {
        let bound = error_budget(sys, opts.method, pad);
        if bound > opts.accuracy {
            return Err(Error::PadTooSmall { pad, bound, accuracy: opts.accuracy });
        }
        return Ok(pad);
    }
    let mut pad = sys.burn_pad(opts.accuracy)?;
    while error_budget(sys, opts.method, pad) > opts.accuracy {
        pad += 1;
    }
    Ok(pad)
}

/// Constructs the bounded solution on `[theta_{k_lo}, theta_{k_hi}]`.
pub fn solve_bounded(sys: &EpcagSystem, k_lo: i64, k_hi: i64, opts: &SolveOptions) -> Result<SampledTrajectory> {
    if k_lo >= k_hi {
        return Err(Error::BadWindow(format!("k_lo = {k_lo} must be below k_hi = {k_hi}")));
    }
    if opts.substeps < MIN_SUBSTEPS {
        return Err(Error::validation("substeps", format!("must be at least {MIN_SUBSTEPS}")));
    }
    if !(opts.accuracy > 0.0 && opts.picard_tol > 0.0 && opts.inner_tol > 0.0) {
        return Err(Error::validation("tol", "tolerances must be positive"));
    }
    let rate = sys.attraction_rate();
    if rate <= 0.0 {
        return Err(Error::AssumptionFailure(format!("N(L1 + L2) exceeds lambda by {}", -rate)));
    }
    let pad = required_pad(sys, opts)?;
    let k_start = k_lo - pad as i64;
    let driver = sys.driver();
    if !driver.covers(k_start, k_hi - 1) {
        return Err(Error::DriverTooShort {
            have_lo: driver.k_min(),
            have_hi: driver.k_max(),
            need_lo: k_start,
            need_hi: k_hi - 1,
        });
    }
    let geo = Geometry::new(sys, opts.substeps)?;
    let (intervals, w, picard_diffs, max_inner_iters) = match opts.method {
        Method::BurnIn => {
            let (iv, w, inner) = burn_in(sys, &geo, k_start, k_hi, opts.inner_tol)?;
            (iv, w, Vec::new(), inner)
        }
        Method::Picard => {
            let ((iv, w), diffs) = Picard::new(sys, geo.clone(), k_start, k_hi)?.solve(opts)?;
            (iv, w, diffs, 0)
        }
    };

    let m = sys.dim();
    let s = opts.substeps;
    let keep = pad..intervals.len();
    let mut samples = Vec::with_capacity(((k_hi - k_lo) as usize * s + 1) * m);
    for iv in &intervals[keep.clone()] {
        samples.extend_from_slice(&iv[..s * m]);
    }
    samples.extend_from_slice(&intervals[intervals.len() - 1][s * m..]);
    let frozen_args = keep
        .clone()
        .zip(k_lo..k_hi)
        .map(|(i, k)| FrozenArg { k, zeta: sys.schedule().zeta(k), w: w[i].clone() })
        .collect();
    let picard_iterations = (opts.method == Method::Picard).then_some(picard_diffs.len());
    let mut traj = SampledTrajectory {
        dim: m,
        k_lo,
        k_hi,
        substeps: s,
        schedule: *sys.schedule(),
        t0: sys.schedule().theta(k_lo),
        t1: sys.schedule().theta(k_hi),
        step: geo.h,
        samples,
        frozen_args,
        meta: SolveMeta {
            method: opts.method,
            pad,
            picard_iterations,
            picard_diffs,
            max_inner_iters,
            transient_bound: sys.transient_bound(pad),
            tail_bound: if opts.method == Method::Picard { sys.tail_bound(pad) } else { 0.0 },
            error_budget: error_budget(sys, opts.method, pad),
            sup_norm: 0.0,
            m_phi: sys.m_phi(),
        },
    };
    traj.meta.sup_norm = traj.sup_norm();
    Ok(traj)
}

type Intervals = (Vec<Vec<f64>>, Vec<Vec<f64>>, usize);

fn burn_in(sys: &EpcagSystem, geo: &Geometry, k_start: i64, k_hi: i64, tol: f64) -> Result<Intervals> {
    let mut z = vec![0.0; sys.dim()];
    let mut intervals = Vec::with_capacity((k_hi - k_start) as usize);
    let mut ws = Vec::with_capacity(intervals.capacity());
    let mut max_iters = 0;
    for k in k_start..k_hi {
        let sol = step_interval_with(sys, geo, k, &z, tol)?;
        z.copy_from_slice(&sol.samples[geo.substeps * sys.dim()..]);
        max_iters = max_iters.max(sol.inner_iters);
        intervals.push(sol.samples);
        ws.push(sol.w);
    }
    Ok((intervals, ws, max_iters))
}

/// Cubic Lagrange basis on nodes 0, 1, 2, 3.
fn lagrange4(u: f64) -> [f64; 4] {
    [
        -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0,
        u * (u - 2.0) * (u - 3.0) / 2.0,
        -u * (u - 1.0) * (u - 3.0) / 2.0,
        u * (u - 1.0) * (u - 2.0) / 6.0,
    ]
}

const GAUSS_X: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GAUSS_W: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

/// The discretized convolution operator on intervals `k_start..k_hi`.
///
/// Within an interval the integrand is smooth, so each step uses a
/// four-point Newton-Cotes rule whose stencil never crosses a node. The
/// value at an off-grid `zeta_k` adds a Gauss-Legendre piece with the
/// integrand interpolated cubically.
/// Grid samples and `w_k` per interval.
type Iterate = (Vec<Vec<f64>>, Vec<Vec<f64>>);

struct Picard<'a> {
    sys: &'a EpcagSystem,
    geo: Geometry,
    k_start: i64,
    count: usize,
    /// `e^{A i h}` for `i = 0..=substeps`.
    powers: Vec<DMatrix<f64>>,
    /// `e^{A d h}` for `d = -2..=3`, index `d + 2`.
    offsets: Vec<DMatrix<f64>>,
    exp_delta: DMatrix<f64>,
    exp_rem: DMatrix<f64>,
    gauss_exp: Vec<DMatrix<f64>>,
    gauss_lagrange: Vec<[f64; 4]>,
    stencil_base: usize,
}

impl<'a> Picard<'a> {
    fn new(sys: &'a EpcagSystem, geo: Geometry, k_start: i64, k_hi: i64) -> Result<Self> {
        let a = sys.matrix();
        let e = |t: f64| mat_exp(a, t).map(|m| m.into_matrix());
        let powers = (0..=geo.substeps).map(|i| e(i as f64 * geo.h)).collect::<Result<Vec<_>>>()?;
        let offsets = (-2..=3).map(|d| e(d as f64 * geo.h)).collect::<Result<Vec<_>>>()?;
        let stencil_base = geo.j.saturating_sub(1).min(geo.substeps - 3);
        let gauss_exp = GAUSS_X.iter().map(|x| e(geo.rem * (1.0 - x) / 2.0)).collect::<Result<Vec<_>>>()?;
        let gauss_lagrange = GAUSS_X
            .iter()
            .map(|x| lagrange4((geo.j - stencil_base) as f64 + geo.rem / geo.h * (1.0 + x) / 2.0))
            .collect();
        Ok(Picard {
            sys,
            k_start,
            count: (k_hi - k_start) as usize,
            powers,
            offsets,
            exp_delta: e(geo.delta)?,
            exp_rem: e(geo.rem)?,
            geo,
            gauss_exp,
            gauss_lagrange,
            stencil_base,
        })
    }

    /// Returns the particular integrals from `theta_k` (zero start) on the
    /// grid and at `zeta_k`, given the previous iterate on interval `idx`.
    fn local(&self, idx: usize, psi: &[f64], w: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let sys = self.sys;
        let m = sys.dim();
        let s = self.geo.substeps;
        let h = self.geo.h;
        let k = self.k_start + idx as i64;
        let alpha = sys.driver().alpha(k);
        let theta = sys.schedule().theta(k);
        let f = &sys.nonlinearity().eval;

        let mut q = vec![0.0; (s + 1) * m];
        for i in 0..=s {
            let out = &mut q[i * m..(i + 1) * m];
            f.eval(theta + i as f64 * h, &psi[i * m..(i + 1) * m], w, out);
            for (o, a) in out.iter_mut().zip(alpha) {
                *o += a;
            }
        }

        let mut l = vec![0.0; (s + 1) * m];
        let mut acc = vec![0.0; m];
        for i in 0..s {
            let (first, weights): (usize, [f64; 4]) = if i == 0 {
                (0, [9.0, 19.0, -5.0, 1.0])
            } else if i == s - 1 {
                (s - 3, [1.0, -5.0, 19.0, 9.0])
            } else {
                (i - 1, [-1.0, 13.0, 13.0, -1.0])
            };
            mul_vec(&self.powers[1], &l[i * m..(i + 1) * m], &mut acc);
            let mut term = vec![0.0; m];
            for (n, wgt) in weights.iter().enumerate() {
                let p = first + n;
                let d = (i + 1) as isize - p as isize;
                let qp: Vec<f64> = q[p * m..(p + 1) * m].iter().map(|v| v * wgt * h / 24.0).collect();
                mul_vec_add(&self.offsets[(d + 2) as usize], &qp, &mut term);
            }
            for (dst, (a, t)) in l[(i + 1) * m..(i + 2) * m].iter_mut().zip(acc.iter().zip(&term)) {
                *dst = a + t;
            }
        }

        let j = self.geo.j;
        let mut lz = l[j * m..(j + 1) * m].to_vec();
        if self.geo.rem > 0.0 {
            mul_vec(&self.exp_rem, &l[j * m..(j + 1) * m], &mut lz);
            let b = self.stencil_base;
            for ((wg, lag), eg) in GAUSS_W.iter().zip(&self.gauss_lagrange).zip(&self.gauss_exp) {
                let mut qg = vec![0.0; m];
                for (n, c) in lag.iter().enumerate() {
                    for (dst, v) in qg.iter_mut().zip(&q[(b + n) * m..(b + n + 1) * m]) {
                        *dst += c * v;
                    }
                }
                let scale = wg * self.geo.rem / 2.0;
                qg.iter_mut().for_each(|v| *v *= scale);
                mul_vec_add(eg, &qg, &mut lz);
            }
        }
        (l, lz)
    }

    fn apply(&self, psi: &[Vec<f64>], w: &[Vec<f64>], exec: Exec) -> Iterate {
        let m = self.sys.dim();
        let s = self.geo.substeps;
        let locals = exec.map(self.count, |idx| self.local(idx, &psi[idx], &w[idx]));
        // node values theta_k carried forward sequentially
        let mut nodes = Vec::with_capacity(self.count);
        let mut p = vec![0.0; m];
        for (l, _) in &locals {
            nodes.push(p.clone());
            let mut next = l[s * m..].to_vec();
            mul_vec_add(&self.powers[s], &p, &mut next);
            p = next;
        }
        let assembled = exec.map(self.count, |idx| {
            let (l, lz) = &locals[idx];
            let p = &nodes[idx];
            let mut out = l.clone();
            for i in 0..=s {
                mul_vec_add(&self.powers[i], p, &mut out[i * m..(i + 1) * m]);
            }
            let mut wz = lz.clone();
            mul_vec_add(&self.exp_delta, p, &mut wz);
            (out, wz)
        });
        assembled.into_iter().unzip()
    }

    fn solve(&self, opts: &SolveOptions) -> Result<(Iterate, Vec<f64>)> {
        let m = self.sys.dim();
        let s = self.geo.substeps;
        let mut psi = vec![vec![0.0; (s + 1) * m]; self.count];
        let mut w = vec![vec![0.0; m]; self.count];
        let mut diffs = Vec::new();
        loop {
            let (next_psi, next_w) = self.apply(&psi, &w, opts.exec);
            let d = opts.exec.max_by(self.count, |idx| {
                let grid =
                    next_psi[idx].chunks(m).zip(psi[idx].chunks(m)).map(|(a, b)| diff_norm(a, b)).fold(0.0, f64::max);
                grid.max(diff_norm(&next_w[idx], &w[idx]))
            });
            diffs.push(d);
            psi = next_psi;
            w = next_w;
            if d <= opts.picard_tol {
                break;
            }
            if diffs.len() >= opts.max_picard_iters || !d.is_finite() {
                return Err(Error::PicardDivergence { tol: opts.picard_tol, iters: diffs.len() });
            }
        }
        Ok(((psi, w), diffs))
    }
}

/// Max over interior grid points of `||z'_numeric - (Az + f(t, z, w_k) + alpha_k)||`,
/// with a five-point centered difference that never straddles a node.
pub fn residual_defect(sys: &EpcagSystem, traj: &SampledTrajectory) -> Result<f64> {
    residual_defect_with(sys, traj, Exec::default())
}

pub fn residual_defect_with(sys: &EpcagSystem, traj: &SampledTrajectory, exec: Exec) -> Result<f64> {
    let m = traj.dim;
    let s = traj.substeps;
    if m != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), found: m });
    }
    if s < MIN_SUBSTEPS {
        return Err(Error::validation("substeps", format!("need at least {MIN_SUBSTEPS} for the stencil")));
    }
    let a = sys.matrix().as_matrix();
    let h = traj.step;
    let count = (traj.k_hi - traj.k_lo) as usize;
    let per_interval = exec.try_map(count, |idx| {
        let k = traj.k_lo + idx as i64;
        let w = &traj.frozen(k).ok_or(Error::GridMismatch)?.w;
        let alpha = sys.driver().get(k).ok_or(Error::DriverTooShort {
            have_lo: sys.driver().k_min(),
            have_hi: sys.driver().k_max(),
            need_lo: k,
            need_hi: k,
        })?;
        let field = Field { a, sys, alpha, w };
        let (mut rhs, mut tmp) = (vec![0.0; m], vec![0.0; m]);
        let mut worst: f64 = 0.0;
        for i in 2..=s - 2 {
            let n = idx * s + i;
            let z = |j: usize| traj.sample(j);
            field.eval(traj.time(n), z(n), &mut rhs, &mut tmp);
            let err = (0..m)
                .map(|c| {
                    let d = (-z(n + 2)[c] + 8.0 * z(n + 1)[c] - 8.0 * z(n - 1)[c] + z(n - 2)[c]) / (12.0 * h);
                    (d - rhs[c]).powi(2)
                })
                .sum::<f64>()
                .sqrt();
            worst = worst.max(err);
        }
        Ok::<_, Error>(worst)
    })?;
    Ok(per_interval.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driver::DriverOrbit;
    use crate::scenario::{self, Mode};
    use crate::schedule::Schedule;
    use crate::system::{assemble_system, NonlinearityContract};
    use nalgebra::DVector;

    const A_STAR: [f64; 2] = [0.4, -0.7];

    fn linear_system(c: f64) -> EpcagSystem {
        let driver = DriverOrbit::from_values(-80, &vec![A_STAR.to_vec(); 101], 0.0).unwrap();
        assemble_system(
            scenario::example4_matrix(),
            Schedule::new(1.5, 0.0, c).unwrap(),
            NonlinearityContract::zero(2, 1e-9).unwrap(),
            driver,
            Some(scenario::example4_envelope()),
        )
        .unwrap()
    }

    /// `e^{At} z0 + A^{-1}(e^{At} - I) a`.
    fn linear_oracle(t: f64, z0: &[f64]) -> DVector<f64> {
        let a = scenario::example4_matrix().into_matrix();
        // eigenvalues -1/2 +- i b: e^{At} = e^{-t/2} (cos bt I + sin bt / b (A + I/2))
        let b = 15f64.sqrt() / 2.0;
        let half = DMatrix::identity(2, 2) * 0.5;
        let e = (DMatrix::identity(2, 2) * (b * t).cos() + (&a + half) * ((b * t).sin() / b)) * (-t / 2.0).exp();
        let a_inv = a.clone().try_inverse().unwrap();
        let id = DMatrix::identity(2, 2);
        &e * DVector::from_column_slice(z0) + a_inv * (e - id) * DVector::from_column_slice(&A_STAR)
    }

    #[test]
    fn zero_fraction_converges_immediately() {
        let sys = linear_system(0.0);
        let sol = step_interval(&sys, 0, &[0.3, 0.1], 1e-12, 200).unwrap();
        assert_eq!(sol.inner_iters, 1);
        assert_eq!(sol.w, vec![0.3, 0.1]);
    }

    #[test]
    fn linear_interval_matches_closed_form() {
        let sys = linear_system(1.0 / 3.0);
        let z0 = [0.3, 0.1];
        let sol = step_interval(&sys, 0, &z0, 1e-12, 200).unwrap();
        let want = linear_oracle(0.5, &z0);
        assert!((DVector::from_vec(sol.w.clone()) - want).norm() < 1e-9);
        let end = linear_oracle(1.5, &z0);
        assert!((DVector::from_column_slice(&sol.samples[400..]) - end).norm() < 1e-9);
    }

    #[test]
    fn example_inner_iterations() {
        let sys = scenario::example4_system(Mode::Heteroclinic, -80, 30).unwrap();
        let sol = step_interval(&sys, 0, &[0.0, 0.0], 1e-12, 200).unwrap();
        assert!(sol.inner_iters <= 6, "{}", sol.inner_iters);
    }

    #[test]
    fn bad_interval_inputs() {
        let sys = linear_system(0.5);
        assert!(matches!(step_interval(&sys, 0, &[f64::NAN, 0.0], 1e-12, 200), Err(Error::NonFinite(_))));
        assert!(step_interval(&sys, 0, &[0.0, 0.0], 0.0, 200).is_err());
        assert!(matches!(step_interval(&sys, 500, &[0.0, 0.0], 1e-12, 200), Err(Error::DriverTooShort { .. })));
    }

    #[test]
    fn constant_forcing_gives_equilibrium() {
        let sys = linear_system(1.0 / 3.0);
        let a_inv = scenario::example4_matrix().into_matrix().try_inverse().unwrap();
        let eq = -(a_inv * DVector::from_column_slice(&A_STAR));
        for method in [Method::Picard, Method::BurnIn] {
            let t = solve_bounded(&sys, -5, 5, &SolveOptions { method, ..Default::default() }).unwrap();
            for i in 0..t.len() {
                assert!((DVector::from_column_slice(t.sample(i)) - &eq).norm() < 1e-8, "{method:?}");
            }
            assert!(residual_defect(&sys, &t).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn corrupted_sample_is_detected() {
        let sys = scenario::example4_system(Mode::Homoclinic, -80, 30).unwrap();
        let mut t = solve_bounded(&sys, -3, 3, &SolveOptions::default()).unwrap();
        assert!(residual_defect(&sys, &t).unwrap() <= 1e-6);
        let i = t.node_index(1).unwrap() + 50;
        t.samples[2 * i] += 0.1;
        assert!(residual_defect(&sys, &t).unwrap() >= 0.01);
    }

    #[test]
    fn pad_and_coverage_errors() {
        let sys = linear_system(0.5);
        let opts = SolveOptions { pad: Some(1), ..Default::default() };
        assert!(matches!(solve_bounded(&sys, -5, 5, &opts), Err(Error::PadTooSmall { pad: 1, .. })));
        assert!(matches!(solve_bounded(&sys, -60, 5, &SolveOptions::default()), Err(Error::DriverTooShort { .. })));
        assert!(matches!(solve_bounded(&sys, 3, 3, &SolveOptions::default()), Err(Error::BadWindow(_))));
        let few = SolveOptions { substeps: 3, ..Default::default() };
        assert!(solve_bounded(&sys, -5, 5, &few).is_err());
    }

    #[test]
    fn picard_nodes_are_continuous() {
        let sys = scenario::example4_system(Mode::Heteroclinic, -80, 30).unwrap();
        let geo = Geometry::new(&sys, 40).unwrap();
        let p = Picard::new(&sys, geo, -50, 5).unwrap();
        let (psi, w) = p.apply(&vec![vec![0.3; 41 * 2]; 55], &vec![vec![0.1; 2]; 55], Exec::Sequential);
        for k in 0..54 {
            assert!(diff_norm(&psi[k][80..], &psi[k + 1][..2]) <= 1e-10);
        }
        assert_eq!(w.len(), 55);
    }

    #[test]
    fn policies_agree_bitwise() {
        let sys = scenario::example4_system(Mode::Heteroclinic, -80, 30).unwrap();
        let run =
            |exec| solve_bounded(&sys, -4, 4, &SolveOptions { exec, substeps: 40, ..Default::default() }).unwrap();
        let (a, b) = (run(Exec::Sequential), run(Exec::Parallel));
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.meta.picard_diffs, b.meta.picard_diffs);
    }
}
