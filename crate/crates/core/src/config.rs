//! Run specifications: JSON parsing, defaults, validation and presets.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::driver::{build_orbit, pair_orbits, Branch, DriverOrbit, MapKind, OrbitKind, ScalarMap};
use crate::error::{Error, Result};
use crate::linear::{DecayEnvelope, SquareMatrix};
use crate::scenario::{self, Mode};
use crate::schedule::Schedule;
use crate::system::{assemble_system, CatalogId, EpcagSystem, Method, NonlinearityContract};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Check,
    Constants,
    Orbit,
    Solve,
    Certify,
    Example4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySpec {
    pub catalog_id: CatalogId,
    pub bound_mf: f64,
    pub lip_x: f64,
    pub lip_y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeSpec {
    pub n_const: f64,
    pub rate: f64,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub matrix: Vec<Vec<f64>>,
    pub nonlinearity: NonlinearitySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope: Option<EnvelopeSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub omega: f64,
    #[serde(default)]
    pub origin: f64,
    pub zeta_fraction: f64,
}

fn default_branch() -> Branch {
    Branch::LowerG
}

/// One scalar component of a driver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitSpec {
    #[serde(default = "default_map")]
    pub map: MapKind,
    pub mu: f64,
    pub kind: OrbitKind,
    pub seed: f64,
    #[serde(default = "default_branch")]
    pub branch: Branch,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_min: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<i64>,
}

fn default_map() -> MapKind {
    MapKind::Logistic
}

/// Components stacked into a vector driver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriverSpec {
    pub components: Vec<OrbitSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericSpec {
    pub substeps: usize,
    /// Truncation accuracy of the bounded-solution solver.
    pub tol: f64,
    pub window: i64,
    pub method: Method,
    /// End-gap tolerance of connection certificates.
    pub cert_tol: f64,
}

impl Default for NumericSpec {
    fn default() -> Self {
        NumericSpec { substeps: 200, tol: 1e-8, window: 30, method: Method::Picard, cert_tol: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub command: Command,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub driver: Option<DriverSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub targets: Vec<DriverSpec>,
    #[serde(default)]
    pub numeric: NumericSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

fn fixed(mu: f64, p: f64) -> OrbitSpec {
    OrbitSpec {
        map: MapKind::Logistic,
        mu,
        kind: OrbitKind::Fixed,
        seed: p,
        branch: Branch::LowerG,
        k_min: None,
        k_max: None,
    }
}

fn doubled(o: OrbitSpec) -> DriverSpec {
    DriverSpec { components: vec![o, o] }
}

impl RunSpec {
    /// The worked example with every block filled in.
    pub fn example4(mode: Mode) -> Self {
        let s = scenario::example4_schedule();
        let (beta, targets) = match mode {
            Mode::Homoclinic => (
                OrbitSpec {
                    map: MapKind::Logistic,
                    mu: 3.9,
                    kind: OrbitKind::Homoclinic,
                    seed: 1.0 / 3.9,
                    branch: Branch::UpperH,
                    k_min: None,
                    k_max: None,
                },
                vec![doubled(fixed(3.9, 2.9 / 3.9))],
            ),
            Mode::Heteroclinic => (
                OrbitSpec {
                    map: MapKind::Logistic,
                    mu: 4.0,
                    kind: OrbitKind::Heteroclinic,
                    seed: 0.25,
                    branch: Branch::LowerG,
                    k_min: None,
                    k_max: None,
                },
                vec![doubled(fixed(4.0, 0.75)), doubled(fixed(4.0, 0.0))],
            ),
        };
        let f = NonlinearityContract::example4();
        let env = scenario::example4_envelope();
        RunSpec {
            command: Command::Example4,
            mode,
            system: Some(SystemSpec {
                matrix: scenario::example4_matrix().to_rows(),
                nonlinearity: NonlinearitySpec {
                    catalog_id: CatalogId::Example4,
                    bound_mf: f.bound_mf,
                    lip_x: f.lip_x,
                    lip_y: f.lip_y,
                },
                envelope: Some(EnvelopeSpec { n_const: env.n_const, rate: env.rate, horizon: env.validated_horizon }),
            }),
            schedule: Some(ScheduleSpec { omega: s.omega(), origin: s.origin(), zeta_fraction: s.zeta_fraction() }),
            driver: Some(doubled(beta)),
            targets,
            numeric: NumericSpec::default(),
            output: OutputSpec::default(),
        }
    }

    /// Fills absent blocks of an `example4` spec from the preset.
    fn apply_preset(&mut self) {
        if self.command != Command::Example4 {
            return;
        }
        let p = RunSpec::example4(self.mode);
        self.system.get_or_insert(p.system.expect("preset"));
        self.schedule.get_or_insert(p.schedule.expect("preset"));
        self.driver.get_or_insert(p.driver.expect("preset"));
        if self.targets.is_empty() {
            self.targets = p.targets;
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = &self.numeric;
        if n.substeps < 4 {
            return Err(Error::validation("numeric.substeps", "must be at least 4"));
        }
        for (field, v) in [("numeric.tol", n.tol), ("numeric.cert_tol", n.cert_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::validation(field, "must be positive"));
            }
        }
        if n.window < 3 {
            return Err(Error::validation("numeric.window", "must be at least 3"));
        }
        let needs_system = !matches!(self.command, Command::Orbit);
        if needs_system {
            let sys = self.system.as_ref().ok_or_else(|| Error::validation("system", "required"))?;
            if sys.matrix.is_empty() || sys.matrix.iter().any(|r| r.len() != sys.matrix.len()) {
                return Err(Error::validation("system.matrix", "must be square and non-empty"));
            }
            if sys.matrix.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::validation("system.matrix", "entries must be finite"));
            }
            let nl = &sys.nonlinearity;
            if nl.catalog_id == CatalogId::Custom {
                return Err(Error::validation(
                    "system.nonlinearity.catalog_id",
                    "custom needs a programmatic evaluator",
                ));
            }
            if !(nl.bound_mf > 0.0) {
                return Err(Error::validation("system.nonlinearity.bound_mf", "must be positive"));
            }
            if !(nl.lip_x >= 0.0 && nl.lip_y >= 0.0) {
                return Err(Error::validation("system.nonlinearity", "Lipschitz constants must be non-negative"));
            }
            let s = self.schedule.ok_or_else(|| Error::validation("schedule", "required"))?;
            if !(s.omega > 0.0 && s.omega.is_finite()) {
                return Err(Error::validation("schedule.omega", "must be positive"));
            }
            if !(0.0..=1.0).contains(&s.zeta_fraction) {
                return Err(Error::validation("schedule.zeta_fraction", "must lie in [0, 1]"));
            }
            if !s.origin.is_finite() {
                return Err(Error::validation("schedule.origin", "must be finite"));
            }
        }
        let driver = self.driver.as_ref().ok_or_else(|| Error::validation("driver", "required"))?;
        validate_driver(driver, "driver")?;
        for (i, t) in self.targets.iter().enumerate() {
            validate_driver(t, &format!("targets[{i}]"))?;
        }
        if matches!(self.command, Command::Certify | Command::Example4) {
            let want = match self.mode {
                Mode::Homoclinic => 1,
                Mode::Heteroclinic => 2,
            };
            if self.targets.len() != want {
                return Err(Error::validation("targets", format!("{:?} mode needs {want} target(s)", self.mode)));
            }
        }
        Ok(())
    }

    pub fn output_dir(&self) -> Option<&PathBuf> {
        self.output.dir.as_ref()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn build_system(&self, driver: DriverOrbit) -> Result<EpcagSystem> {
        let sys = self.system.as_ref().ok_or_else(|| Error::validation("system", "required"))?;
        let s = self.schedule.ok_or_else(|| Error::validation("schedule", "required"))?;
        let a = SquareMatrix::from_rows(&sys.matrix)?;
        let nl = &sys.nonlinearity;
        let f = match nl.catalog_id {
            CatalogId::Example4 => NonlinearityContract::example4_with(nl.bound_mf, nl.lip_x, nl.lip_y)?,
            CatalogId::Zero => NonlinearityContract::zero(a.dim(), nl.bound_mf)?,
            CatalogId::Custom => {
                return Err(Error::validation(
                    "system.nonlinearity.catalog_id",
                    "custom needs a programmatic evaluator",
                ))
            }
        };
        let env = sys.envelope.as_ref().map(|e| DecayEnvelope::analytic(e.n_const, e.rate, e.horizon)).transpose()?;
        assemble_system(a, Schedule::new(s.omega, s.origin, s.zeta_fraction)?, f, driver, env)
    }
}

fn validate_driver(d: &DriverSpec, field: &str) -> Result<()> {
    if d.components.is_empty() {
        return Err(Error::validation(&format!("{field}.components"), "must be non-empty"));
    }
    for (i, c) in d.components.iter().enumerate() {
        let at = |f: &str| format!("{field}.components[{i}].{f}");
        if !(c.mu > 0.0 && c.mu <= 4.0) {
            return Err(Error::validation(&at("mu"), "must lie in (0, 4]"));
        }
        if !(0.0..=1.0).contains(&c.seed) {
            return Err(Error::validation(&at("seed"), "must lie in [0, 1]"));
        }
        if let (Some(lo), Some(hi)) = (c.k_min, c.k_max) {
            if !(lo < 0 && 0 < hi) {
                return Err(Error::validation(&at("k_min"), "need k_min < 0 < k_max"));
            }
        }
    }
    Ok(())
}

/// Builds every component over a common range; backward widening of one
/// component extends all of them.
pub fn build_driver(d: &DriverSpec, k_min: i64, k_max: i64) -> Result<DriverOrbit> {
    let build = |c: &OrbitSpec, lo: i64| {
        let m = ScalarMap::logistic(c.mu)?;
        build_orbit(&m, c.kind, c.seed, c.branch, c.k_min.unwrap_or(lo).min(lo), c.k_max.unwrap_or(k_max).max(k_max))
    };
    let first: Vec<DriverOrbit> = d.components.iter().map(|c| build(c, k_min)).collect::<Result<_>>()?;
    let lo = first.iter().map(DriverOrbit::k_min).min().expect("non-empty");
    let hi = first.iter().map(DriverOrbit::k_max).min().expect("non-empty");
    let parts: Vec<DriverOrbit> = d
        .components
        .iter()
        .map(|c| build(c, lo).and_then(|o| if o.k_max() > hi { o.window(o.k_min(), hi) } else { Ok(o) }))
        .collect::<Result<_>>()?;
    let mut it = parts.into_iter();
    let mut acc = it.next().expect("non-empty");
    for p in it {
        acc = pair_orbits(&acc, &p)?;
    }
    Ok(acc)
}

/// Parses and validates a JSON run specification, applying defaults.
pub fn parse_config(text: &str) -> Result<RunSpec> {
    let mut spec: RunSpec = serde_json::from_str(text).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => Error::validation("document", e.to_string()),
        _ => Error::Parse { line: e.line(), column: e.column(), message: e.to_string() },
    })?;
    spec.apply_preset();
    spec.validate()?;
    Ok(spec)
}
