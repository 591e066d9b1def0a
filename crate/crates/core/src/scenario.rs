//! The planar logistic-driven example: `A = [[2, -2], [5, -3]]`, `omega = 3/2`,
//! `c = 1/3`, and drivers built from the logistic map at `mu = 3.9` and `mu = 4`.

use serde::{Deserialize, Serialize};

use crate::driver::{build_orbit, pair_orbits, Branch, DriverOrbit, OrbitKind, ScalarMap};
use crate::error::Result;
use crate::linear::{DecayEnvelope, SquareMatrix};
use crate::schedule::Schedule;
use crate::system::{assemble_system, EpcagSystem, NonlinearityContract};

/// Horizon on which the closed-form envelope is validated.
pub const ENVELOPE_HORIZON: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Homoclinic,
    Heteroclinic,
}

impl Mode {
    pub fn mu(self) -> f64 {
        match self {
            Mode::Homoclinic => 3.9,
            Mode::Heteroclinic => 4.0,
        }
    }
}

/// `(7 + sqrt 34) / sqrt 15`.
pub fn example4_n() -> f64 {
    (7.0 + 34f64.sqrt()) / 15f64.sqrt()
}

pub fn example4_matrix() -> SquareMatrix {
    SquareMatrix::from_rows(&[vec![2.0, -2.0], vec![5.0, -3.0]]).expect("static matrix")
}

pub fn example4_schedule() -> Schedule {
    Schedule::new(1.5, 0.0, 1.0 / 3.0).expect("static schedule")
}

pub fn example4_envelope() -> DecayEnvelope {
    DecayEnvelope::analytic(example4_n(), 0.5, ENVELOPE_HORIZON).expect("static envelope")
}

/// The connecting driver and its target sequences: `[alpha]` for the
/// homoclinic mode, `[alpha_1, alpha_2]` (forward, backward) for the
/// heteroclinic one. All share one index range.
#[derive(Debug, Clone)]
pub struct ScenarioDrivers {
    pub mode: Mode,
    pub beta: DriverOrbit,
    pub targets: Vec<DriverOrbit>,
}

fn fixed_pair(m: &ScalarMap, p: f64, k_min: i64, k_max: i64) -> Result<DriverOrbit> {
    let o = build_orbit(m, OrbitKind::Fixed, p, Branch::LowerG, k_min, k_max)?;
    pair_orbits(&o, &o)
}

fn self_pair(o: &DriverOrbit) -> Result<DriverOrbit> {
    pair_orbits(o, o)
}

pub fn example4_drivers(mode: Mode, k_min: i64, k_max: i64) -> Result<ScenarioDrivers> {
    let m = ScalarMap::logistic(mode.mu())?;
    match mode {
        Mode::Homoclinic => {
            let b = build_orbit(&m, OrbitKind::Homoclinic, 1.0 / 3.9, Branch::UpperH, k_min, k_max)?;
            let alpha = fixed_pair(&m, 2.9 / 3.9, b.k_min(), k_max)?;
            Ok(ScenarioDrivers { mode, beta: self_pair(&b)?, targets: vec![alpha] })
        }
        Mode::Heteroclinic => {
            let b = build_orbit(&m, OrbitKind::Heteroclinic, 0.25, Branch::LowerG, k_min, k_max)?;
            let a1 = fixed_pair(&m, 0.75, b.k_min(), k_max)?;
            let a2 = fixed_pair(&m, 0.0, b.k_min(), k_max)?;
            Ok(ScenarioDrivers { mode, beta: self_pair(&b)?, targets: vec![a1, a2] })
        }
    }
}

pub fn example4_system_with(driver: DriverOrbit) -> Result<EpcagSystem> {
    assemble_system(
        example4_matrix(),
        example4_schedule(),
        NonlinearityContract::example4(),
        driver,
        Some(example4_envelope()),
    )
}

/// The example system driven by the connecting sequence of `mode`.
pub fn example4_system(mode: Mode, k_min: i64, k_max: i64) -> Result<EpcagSystem> {
    example4_system_with(example4_drivers(mode, k_min, k_max)?.beta)
}

/// One member of a hyperbolic catalog: `beta_s` approaches `alpha` forward,
/// `beta_u` backward.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub label: String,
    pub alpha: DriverOrbit,
    pub beta_s: DriverOrbit,
    pub beta_u: DriverOrbit,
}

/// Catalog over both logistic scenarios. At `mu = 4` each limit point gets
/// its own entry, with the heteroclinic orbit supplying one companion and a
/// homoclinic orbit the other.
pub fn example4_catalog(k_min: i64, k_max: i64) -> Result<Vec<CatalogEntry>> {
    let homo = example4_drivers(Mode::Homoclinic, k_min, k_max)?;
    let m4 = ScalarMap::logistic(4.0)?;
    let het = build_orbit(&m4, OrbitKind::Heteroclinic, 0.25, Branch::LowerG, k_min, k_max)?;
    // 1/4 -> 3/4 forward, H preimages -> 3/4 backward
    let into_three_quarters = build_orbit(&m4, OrbitKind::Homoclinic, 0.25, Branch::UpperH, k_min, k_max)?;
    // 1/2 -> 1 -> 0 forward, G preimages -> 0 backward
    let into_zero = build_orbit(&m4, OrbitKind::Homoclinic, 0.5, Branch::LowerG, k_min, k_max)?;
    let lo = het.k_min().max(into_three_quarters.k_min()).max(into_zero.k_min());
    let cut = |o: &DriverOrbit| o.window(lo, k_max).and_then(|o| self_pair(&o));
    let het = cut(&het)?;
    Ok(vec![
        CatalogEntry {
            label: "mu=3.9 fixed point".into(),
            alpha: homo.targets[0].clone(),
            beta_s: homo.beta.clone(),
            beta_u: homo.beta,
        },
        CatalogEntry {
            label: "mu=4 fixed point 3/4".into(),
            alpha: fixed_pair(&m4, 0.75, lo, k_max)?,
            beta_s: het.clone(),
            beta_u: cut(&into_three_quarters)?,
        },
        CatalogEntry {
            label: "mu=4 fixed point 0".into(),
            alpha: fixed_pair(&m4, 0.0, lo, k_max)?,
            beta_s: cut(&into_zero)?,
            beta_u: het,
        },
    ])
}
