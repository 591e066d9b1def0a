//! Discrete-time drivers `eta_{k+1} = F(eta_k)`: the logistic map, its two
//! inverse branches, and finite windows of fixed, homoclinic and heteroclinic
//! orbits used as the piecewise constant forcing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear::{diff_norm, vec_norm};

pub const DEFAULT_EDGE_GAP: f64 = 1e-8;
/// Backward windows are widened down to this index at most.
pub const MIN_BACKWARD_INDEX: i64 = -200;
/// Forward iterates this close to a fixed point are replaced by it.
const FIXED_POINT_SNAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Logistic,
}

/// `F_mu(s) = mu s (1 - s)` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarMap {
    pub kind: MapKind,
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `G_mu(s) = (1 - sqrt(1 - 4s/mu))/2`, values in `[0, 1/2]`.
    LowerG,
    /// `H_mu(s) = (1 + sqrt(1 - 4s/mu))/2`, values in `[1/2, 1]`.
    UpperH,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitKind {
    Fixed,
    Homoclinic,
    Heteroclinic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

impl ScalarMap {
    pub fn logistic(mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu <= 4.0) {
            return Err(Error::BadParameter(mu));
        }
        Ok(ScalarMap { kind: MapKind::Logistic, mu })
    }

    pub fn step(&self, s: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::OutOfDomain { value: s });
        }
        Ok(self.mu * s * (1.0 - s))
    }

    /// Preimage of `s` on the chosen branch.
    pub fn inverse(&self, s: f64, branch: Branch) -> Result<f64> {
        let max = self.mu / 4.0;
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::OutOfDomain { value: s });
        }
        if s > max {
            return Err(Error::OutOfRange { value: s, max });
        }
        let d = (1.0 - 4.0 * s / self.mu).max(0.0).sqrt();
        Ok(match branch {
            // rationalized to avoid cancellation for small s
            Branch::LowerG => (2.0 * s / self.mu) / (1.0 + d),
            Branch::UpperH => (1.0 + d) / 2.0,
        })
    }

    /// Fixed points in `[0, 1]`: `0` and, for `mu > 1`, `1 - 1/mu`.
    pub fn fixed_points(&self) -> Vec<f64> {
        if self.mu > 1.0 {
            vec![0.0, 1.0 - 1.0 / self.mu]
        } else {
            vec![0.0]
        }
    }

    /// `sup |F|` over `[0, 1]`.
    pub fn sup_abs(&self) -> f64 {
        self.mu / 4.0
    }

    fn snap(&self, x: f64) -> f64 {
        self.fixed_points().into_iter().find(|p| (x - p).abs() <= FIXED_POINT_SNAP).unwrap_or(x)
    }

    fn nearest_fixed_point(&self, x: f64) -> f64 {
        self.fixed_points().into_iter().fold(f64::NAN, |best, p| {
            if best.is_nan() || (x - p).abs() < (x - best).abs() {
                p
            } else {
                best
            }
        })
    }
}

pub fn logistic_step(m: &ScalarMap, s: f64) -> Result<f64> {
    m.step(s)
}

pub fn logistic_inverse(m: &ScalarMap, s: f64, branch: Branch) -> Result<f64> {
    m.inverse(s, branch)
}

/// What is known about the set `Gamma` the driver lives in.
#[derive(Debug, Clone, PartialEq)]
pub enum DriverDomain {
    /// Each component is an orbit of its own logistic map on `[0, 1]`.
    Logistic(Vec<ScalarMap>),
    /// Only the window values are known; `margin` is added to their sup.
    Custom { margin: f64 },
}

/// Finite window `{alpha_k}`, `k_min <= k <= k_max`, of a driver orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct DriverOrbit {
    k_min: i64,
    k_max: i64,
    dim: usize,
    values: Vec<f64>,
    left_limit: Option<Vec<f64>>,
    right_limit: Option<Vec<f64>>,
    edge_gap: f64,
    domain: DriverDomain,
}

impl DriverOrbit {
    /// A driver given by explicit values, one vector per index from `k_min`.
    pub fn from_values(k_min: i64, values: &[Vec<f64>], margin: f64) -> Result<Self> {
        let dim = values.first().map(Vec::len).unwrap_or(0);
        if dim == 0 {
            return Err(Error::validation("driver", "needs at least one value of positive dimension"));
        }
        if let Some(v) = values.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
        }
        if values.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("driver value"));
        }
        Ok(DriverOrbit {
            k_min,
            k_max: k_min + values.len() as i64 - 1,
            dim,
            values: values.concat(),
            left_limit: None,
            right_limit: None,
            edge_gap: DEFAULT_EDGE_GAP,
            domain: DriverDomain::Custom { margin },
        })
    }

    pub fn k_min(&self) -> i64 {
        self.k_min
    }

    pub fn k_max(&self) -> i64 {
        self.k_max
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        (self.k_max - self.k_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn edge_gap(&self) -> f64 {
        self.edge_gap
    }

    pub fn left_limit(&self) -> Option<&[f64]> {
        self.left_limit.as_deref()
    }

    pub fn right_limit(&self) -> Option<&[f64]> {
        self.right_limit.as_deref()
    }

    pub fn domain(&self) -> &DriverDomain {
        &self.domain
    }

    pub fn covers(&self, lo: i64, hi: i64) -> bool {
        self.k_min <= lo && hi <= self.k_max
    }

    /// `alpha_k`, or `None` outside the window.
    pub fn get(&self, k: i64) -> Option<&[f64]> {
        if k < self.k_min || k > self.k_max {
            return None;
        }
        let i = (k - self.k_min) as usize * self.dim;
        Some(&self.values[i..i + self.dim])
    }

    /// `alpha_k`; panics outside the window.
    pub fn alpha(&self, k: i64) -> &[f64] {
        self.get(k).unwrap_or_else(|| panic!("driver index {k} outside {}..={}", self.k_min, self.k_max))
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &[f64])> {
        (self.k_min..=self.k_max).zip(self.values.chunks(self.dim))
    }

    /// `M_F`: the supremum of `||F||` over `Gamma`.
    ///
    /// Closed form for logistic components; otherwise the window maximum of
    /// `||alpha_k||` plus the declared margin.
    pub fn map_sup_norm(&self) -> f64 {
        match &self.domain {
            DriverDomain::Logistic(maps) => maps.iter().map(|m| m.sup_abs().powi(2)).sum::<f64>().sqrt(),
            DriverDomain::Custom { margin } => self.values.chunks(self.dim).map(vec_norm).fold(0.0, f64::max) + margin,
        }
    }

    /// The same orbit restricted to `lo..=hi`.
    pub fn window(&self, lo: i64, hi: i64) -> Result<Self> {
        if !self.covers(lo, hi) || lo > hi {
            return Err(Error::DriverTooShort { have_lo: self.k_min, have_hi: self.k_max, need_lo: lo, need_hi: hi });
        }
        let a = (lo - self.k_min) as usize * self.dim;
        let b = (hi - self.k_min + 1) as usize * self.dim;
        Ok(DriverOrbit { k_min: lo, k_max: hi, values: self.values[a..b].to_vec(), ..self.clone() })
    }
}

pub fn build_orbit(
    m: &ScalarMap,
    kind: OrbitKind,
    seed: f64,
    backward_branch: Branch,
    k_min: i64,
    k_max: i64,
) -> Result<DriverOrbit> {
    build_orbit_with_gap(m, kind, seed, backward_branch, k_min, k_max, DEFAULT_EDGE_GAP)
}

/// Scalar orbit through `seed`: forward iterates of `F` for `k >= 0`, iterates
/// of one inverse branch for `k < 0`.
pub fn build_orbit_with_gap(
    m: &ScalarMap,
    kind: OrbitKind,
    seed: f64,
    backward_branch: Branch,
    k_min: i64,
    k_max: i64,
    edge_gap: f64,
) -> Result<DriverOrbit> {
    if !(0.0..=1.0).contains(&seed) {
        return Err(Error::OutOfDomain { value: seed });
    }
    if !(k_min < 0 && 0 < k_max) {
        return Err(Error::BadWindow(format!("need k_min < 0 < k_max, got {k_min}..={k_max}")));
    }
    let domain = DriverDomain::Logistic(vec![*m]);
    if kind == OrbitKind::Fixed {
        if (m.step(seed)? - seed).abs() > 1e-12 {
            return Err(Error::validation("seed", format!("{seed} is not a fixed point")));
        }
        let p = m.snap(seed);
        return Ok(DriverOrbit {
            k_min,
            k_max,
            dim: 1,
            values: vec![p; (k_max - k_min + 1) as usize],
            left_limit: Some(vec![p]),
            right_limit: Some(vec![p]),
            edge_gap,
            domain,
        });
    }

    // backward[i] = alpha_{-(i+1)}
    let mut backward: Vec<f64> = Vec::new();
    let mut s = seed;
    let mut k = -1;
    let left = loop {
        s = m.inverse(s, backward_branch).map_err(|_| Error::BranchEscape { k })?;
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::BranchEscape { k });
        }
        backward.push(s);
        if k <= k_min {
            let p = m.nearest_fixed_point(s);
            if (s - p).abs() <= edge_gap {
                break p;
            }
            if k <= MIN_BACKWARD_INDEX {
                return Err(Error::NoConvergence(format!(
                    "backward gap {:.3e} above {edge_gap:e} at k = {k}",
                    (s - p).abs()
                )));
            }
        }
        k -= 1;
    };

    let mut forward = vec![seed];
    for _ in 0..k_max {
        let next = m.step(*forward.last().expect("nonempty"))?;
        forward.push(m.snap(next));
    }
    let last = forward[forward.len() - 1];
    if (m.step(last)? - last).abs() > edge_gap {
        return Err(Error::NoConvergence(format!("forward orbit has not settled on a fixed point by k = {k_max}")));
    }
    let right = last;
    match kind {
        OrbitKind::Homoclinic if (left - right).abs() > edge_gap => {
            return Err(Error::NoConvergence(format!("limits {left} and {right} differ; orbit is not homoclinic")));
        }
        OrbitKind::Heteroclinic if (left - right).abs() <= edge_gap => {
            return Err(Error::NoConvergence(format!("both limits equal {left}; orbit is not heteroclinic")));
        }
        _ => {}
    }
    let k_min = -(backward.len() as i64);
    let mut values: Vec<f64> = backward.into_iter().rev().collect();
    values.extend(forward);
    Ok(DriverOrbit {
        k_min,
        k_max,
        dim: 1,
        values,
        left_limit: Some(vec![left]),
        right_limit: Some(vec![if kind == OrbitKind::Homoclinic { left } else { right }]),
        edge_gap,
        domain,
    })
}

/// Stacks two orbits componentwise: `alpha_k = (o1_k, o2_k)`.
pub fn pair_orbits(o1: &DriverOrbit, o2: &DriverOrbit) -> Result<DriverOrbit> {
    if o1.k_min != o2.k_min || o1.k_max != o2.k_max {
        return Err(Error::RangeMismatch(o1.k_min, o1.k_max, o2.k_min, o2.k_max));
    }
    let values =
        o1.values.chunks(o1.dim).zip(o2.values.chunks(o2.dim)).flat_map(|(a, b)| a.iter().chain(b).copied()).collect();
    let stack = |a: Option<&[f64]>, b: Option<&[f64]>| match (a, b) {
        (Some(a), Some(b)) => Some([a, b].concat()),
        _ => None,
    };
    let domain = match (&o1.domain, &o2.domain) {
        (DriverDomain::Logistic(a), DriverDomain::Logistic(b)) => DriverDomain::Logistic([a.as_slice(), b].concat()),
        (a, b) => {
            let margin = |d: &DriverDomain| match d {
                DriverDomain::Custom { margin } => *margin,
                DriverDomain::Logistic(_) => 0.0,
            };
            DriverDomain::Custom { margin: margin(a).max(margin(b)) }
        }
    };
    Ok(DriverOrbit {
        k_min: o1.k_min,
        k_max: o1.k_max,
        dim: o1.dim + o2.dim,
        values,
        left_limit: stack(o1.left_limit(), o2.left_limit()),
        right_limit: stack(o1.right_limit(), o2.right_limit()),
        edge_gap: o1.edge_gap.max(o2.edge_gap),
        domain,
    })
}

fn profile_indices(k_min: i64, k_max: i64, direction: Direction) -> Vec<i64> {
    match direction {
        Direction::Forward => (k_min.max(0)..=k_max).collect(),
        Direction::Backward => (k_min..=k_max.min(0)).rev().collect(),
    }
}

/// Gaps `||alpha_k - target||` walking from `k = 0` toward the window end.
pub fn sequence_gap_profile(o: &DriverOrbit, target: &[f64], direction: Direction) -> Result<Vec<(i64, f64)>> {
    if target.len() != o.dim {
        return Err(Error::DimensionMismatch { expected: o.dim, found: target.len() });
    }
    Ok(profile_indices(o.k_min, o.k_max, direction).into_iter().map(|k| (k, diff_norm(o.alpha(k), target))).collect())
}

/// Gaps `||a_k - b_k||` over the common window, in the given direction.
pub fn orbit_gap_profile(a: &DriverOrbit, b: &DriverOrbit, direction: Direction) -> Result<Vec<(i64, f64)>> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch { expected: a.dim, found: b.dim });
    }
    let (lo, hi) = (a.k_min.max(b.k_min), a.k_max.min(b.k_max));
    Ok(profile_indices(lo, hi, direction).into_iter().map(|k| (k, diff_norm(a.alpha(k), b.alpha(k)))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m39() -> ScalarMap {
        ScalarMap::logistic(3.9).unwrap()
    }

    fn m4() -> ScalarMap {
        ScalarMap::logistic(4.0).unwrap()
    }

    #[test]
    fn step_examples() {
        assert_eq!(m4().step(0.5).unwrap(), 1.0);
        assert!((m39().step(1.0 / 3.9).unwrap() - 2.9 / 3.9).abs() < 1e-15);
        assert_eq!(m4().step(0.25).unwrap(), 0.75);
        assert!(matches!(m4().step(1.5), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(m4().inverse(1.0, Branch::LowerG).unwrap(), 0.5);
        assert_eq!(m4().inverse(1.0, Branch::UpperH).unwrap(), 0.5);
        assert!((m4().inverse(0.25, Branch::LowerG).unwrap() - 0.066_987_298_107_780_68).abs() < 1e-15);
        let h = m39().inverse(1.0 / 3.9, Branch::UpperH).unwrap();
        assert!((h - (1.0 + (1.0 - 4.0 / (3.9f64 * 3.9)).sqrt()) / 2.0).abs() < 1e-15);
        assert!((h - 0.929_247_92).abs() < 5e-9);
        assert!(matches!(m39().inverse(0.99, Branch::UpperH), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn homoclinic_orbit_at_3_9() {
        let o = build_orbit(&m39(), OrbitKind::Homoclinic, 1.0 / 3.9, Branch::UpperH, -40, 40).unwrap();
        let p = 1.0 - 1.0 / 3.9;
        assert_eq!((o.k_min(), o.k_max()), (-40, 40));
        for k in 1..=40 {
            assert_eq!(o.alpha(k)[0], p);
        }
        assert!((p - 2.9 / 3.9).abs() < 1e-15);
        assert_eq!(o.left_limit(), Some(&[p][..]));
        assert_eq!(o.right_limit(), Some(&[p][..]));
        let gaps = sequence_gap_profile(&o, &[p], Direction::Backward).unwrap();
        for w in gaps.windows(2).filter(|w| w[1].0 <= -10) {
            let ratio = w[1].1 / w[0].1;
            assert!((ratio * 1.9 - 1.0).abs() < 0.05, "k={} ratio={ratio}", w[1].0);
        }
    }

    #[test]
    fn heteroclinic_orbit_at_4() {
        let o = build_orbit(&m4(), OrbitKind::Heteroclinic, 0.25, Branch::LowerG, -40, 40).unwrap();
        for k in 1..=40 {
            assert_eq!(o.alpha(k)[0], 0.75);
        }
        assert_eq!(o.left_limit(), Some(&[0.0][..]));
        assert_eq!(o.right_limit(), Some(&[0.75][..]));
        for k in -40..-10 {
            let ratio = o.alpha(k)[0] / o.alpha(k + 1)[0];
            assert!((ratio * 4.0 - 1.0).abs() < 0.05, "k={k}");
        }
    }

    #[test]
    fn fixed_orbit_is_constant() {
        let o = build_orbit(&m39(), OrbitKind::Fixed, 2.9 / 3.9, Branch::UpperH, -10, 10).unwrap();
        assert_eq!(o.len(), 21);
        assert!(o.iter().all(|(_, v)| v[0] == 1.0 - 1.0 / 3.9));
        let g = sequence_gap_profile(&o, &[1.0 - 1.0 / 3.9], Direction::Forward).unwrap();
        assert!(g.iter().all(|&(_, x)| x == 0.0));
        assert!(build_orbit(&m39(), OrbitKind::Fixed, 0.3, Branch::UpperH, -10, 10).is_err());
    }

    #[test]
    fn window_widens_until_edge_gap_met() {
        let o = build_orbit(&m39(), OrbitKind::Homoclinic, 1.0 / 3.9, Branch::UpperH, -5, 5).unwrap();
        assert!(o.k_min() < -5);
        let p = 1.0 - 1.0 / 3.9;
        assert!((o.alpha(o.k_min())[0] - p).abs() <= DEFAULT_EDGE_GAP);
        assert!((o.alpha(o.k_min() + 1)[0] - p).abs() > DEFAULT_EDGE_GAP);
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            build_orbit(&m39(), OrbitKind::Homoclinic, 0.99, Branch::UpperH, -10, 10),
            Err(Error::BranchEscape { k: -1 })
        ));
        // forward orbit of a generic seed never settles
        assert!(matches!(
            build_orbit(&m39(), OrbitKind::Homoclinic, 0.3, Branch::UpperH, -10, 10),
            Err(Error::NoConvergence(_))
        ));
        // 1/4 under H at mu = 4 is homoclinic to 3/4, not heteroclinic
        assert!(build_orbit(&m4(), OrbitKind::Heteroclinic, 0.25, Branch::UpperH, -40, 10).is_err());
        assert!(build_orbit(&m4(), OrbitKind::Homoclinic, 0.25, Branch::UpperH, -40, 10).is_ok());
    }

    #[test]
    fn pairing() {
        let a = build_orbit(&m39(), OrbitKind::Fixed, 2.9 / 3.9, Branch::UpperH, -10, 10).unwrap();
        let pa = pair_orbits(&a, &a).unwrap();
        assert_eq!(pa.dim(), 2);
        assert!(pa.iter().all(|(_, v)| v == [1.0 - 1.0 / 3.9; 2]));
        assert!((pa.map_sup_norm() - 2f64.sqrt() * 0.975).abs() < 1e-15);

        let b = build_orbit(&m39(), OrbitKind::Homoclinic, 1.0 / 3.9, Branch::UpperH, -40, 40).unwrap();
        let pb = pair_orbits(&b, &b).unwrap();
        assert_eq!(pb.alpha(0), &[1.0 / 3.9, 1.0 / 3.9]);
        assert_eq!(pb.left_limit().unwrap().len(), 2);

        let short = build_orbit(&m39(), OrbitKind::Fixed, 2.9 / 3.9, Branch::UpperH, -5, 5).unwrap();
        assert!(matches!(pair_orbits(&a, &short), Err(Error::RangeMismatch(..))));
    }

    #[test]
    fn paired_gap_profiles() {
        let p = 1.0 - 1.0 / 3.9;
        let b = build_orbit(&m39(), OrbitKind::Homoclinic, 1.0 / 3.9, Branch::UpperH, -40, 40).unwrap();
        let beta = pair_orbits(&b, &b).unwrap();
        let fwd = sequence_gap_profile(&beta, &[p, p], Direction::Forward).unwrap();
        assert!(fwd.iter().filter(|(k, _)| *k >= 1).all(|&(_, g)| g == 0.0));
        let bwd = sequence_gap_profile(&beta, &[p, p], Direction::Backward).unwrap();
        assert_eq!(bwd[0].0, 0);
        assert_eq!(bwd.last().unwrap().0, -40);
        for w in bwd.windows(2).filter(|w| w[1].0 <= -10) {
            assert!((w[1].1 / w[0].1 * 1.9 - 1.0).abs() < 0.05);
        }
        assert!(bwd.last().unwrap().1 <= beta.edge_gap());
    }

    #[test]
    fn custom_driver_sup_uses_window_and_margin() {
        let d = DriverOrbit::from_values(-1, &[vec![3.0, 4.0], vec![0.0, 1.0]], 0.5).unwrap();
        assert_eq!(d.map_sup_norm(), 5.5);
        assert_eq!(d.k_max(), 0);
    }

    proptest! {
        #[test]
        fn inverse_round_trip(mu in 0.1f64..=4.0, u in 0.0f64..=1.0, upper in any::<bool>()) {
            let m = ScalarMap::logistic(mu).unwrap();
            let s = u * mu / 4.0;
            let branch = if upper { Branch::UpperH } else { Branch::LowerG };
            let x = m.inverse(s, branch).unwrap();
            prop_assert!((m.step(x).unwrap() - s).abs() <= 1e-13);
            if upper { prop_assert!((0.5..=1.0).contains(&x)) } else { prop_assert!((0.0..=0.5).contains(&x)) }
        }

        #[test]
        fn built_orbits_are_genuine(het in any::<bool>()) {
            let (m, seed, branch, kind) = if het {
                (m4(), 0.25, Branch::LowerG, OrbitKind::Heteroclinic)
            } else {
                (m39(), 1.0 / 3.9, Branch::UpperH, OrbitKind::Homoclinic)
            };
            let o = build_orbit(&m, kind, seed, branch, -60, 60).unwrap();
            for k in o.k_min()..o.k_max() {
                prop_assert!((m.step(o.alpha(k)[0]).unwrap() - o.alpha(k + 1)[0]).abs() <= 1e-12);
            }
        }
    }
}
