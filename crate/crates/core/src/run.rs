//! Command execution: builds the objects a [`RunSpec`] describes, runs the
//! requested computation and writes its artifacts.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analysis::{run_connection, CertifyOptions, ConnectionKind, CERT_PICARD_TOL};
use crate::config::{build_driver, Command, DriverSpec, RunSpec};
use crate::driver::DriverOrbit;
use crate::error::{Error, Result};
use crate::io::{export_frozen_csv, export_orbit_csv, export_trajectory_csv, write_json};
use crate::linear::DecayEnvelope;
use crate::scenario::Mode;
use crate::system::{
    check_assumptions, proof_constants, required_pad, residual_defect, solve_bounded, AssumptionReport, EpcagSystem,
    SolveMeta, SolveOptions,
};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_VERDICT_FAIL: u8 = 2;
pub const OUT_DIR_ENV: &str = "EPCAG_OUT_DIR";

/// Exit status and one summary line per artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub status: u8,
    pub lines: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { status: EXIT_PASS, lines: Vec::new(), artifacts: Vec::new() }
    }

    fn wrote(&mut self, path: PathBuf, what: &str) {
        self.lines.push(format!("wrote {} ({what})", path.display()));
        self.artifacts.push(path);
    }
}

/// `--out`, then the run config's output block, then the environment, then `.`.
pub fn resolve_out_dir(cli: Option<&Path>, spec: &RunSpec) -> PathBuf {
    cli.map(Path::to_path_buf)
        .or_else(|| spec.output_dir().cloned())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn solve_options(spec: &RunSpec) -> SolveOptions {
    let n = &spec.numeric;
    SolveOptions { substeps: n.substeps, method: n.method, accuracy: n.tol, ..SolveOptions::default() }
}

/// Drivers for `specs` over one common index range reaching `pad` intervals
/// below `-window`.
fn build_drivers(spec: &RunSpec, specs: &[&DriverSpec], pad: usize) -> Result<Vec<DriverOrbit>> {
    let window = spec.numeric.window;
    let mut lo = -window - pad as i64;
    loop {
        let built = specs.iter().map(|d| build_driver(d, lo, window)).collect::<Result<Vec<_>>>()?;
        let min = built.iter().map(DriverOrbit::k_min).min().expect("non-empty");
        if built.iter().all(|o| o.k_min() == min) {
            return Ok(built);
        }
        lo = min;
    }
}

/// Assembles the system on a short driver to learn the pad, then rebuilds the
/// drivers long enough for it.
fn prepare(spec: &RunSpec, specs: &[&DriverSpec]) -> Result<(EpcagSystem, Vec<DriverOrbit>)> {
    let driver = spec.driver.as_ref().ok_or_else(|| Error::validation("driver", "required"))?;
    let probe = spec.build_system(build_driver(driver, -1, 1)?)?;
    let pad = required_pad(&probe, &solve_options(spec))?;
    let drivers = build_drivers(spec, specs, pad)?;
    let sys = probe.with_driver(drivers[0].clone())?;
    Ok((sys, drivers))
}

#[derive(Serialize)]
struct CheckReport<'a> {
    assumptions: &'a AssumptionReport,
    envelope: &'a DecayEnvelope,
    m_f: f64,
}

#[derive(Serialize)]
struct SolveReport<'a> {
    k_lo: i64,
    k_hi: i64,
    samples: usize,
    residual_defect: f64,
    bounded: bool,
    meta: &'a SolveMeta,
}

pub fn run(spec: &RunSpec, out_dir: &Path) -> Result<Outcome> {
    spec.validate()?;
    let mut out = Outcome::new();
    let path = |name: &str| out_dir.join(name);
    let driver = spec.driver.as_ref().ok_or_else(|| Error::validation("driver", "required"))?;
    match spec.command {
        Command::Orbit => {
            let o = build_driver(driver, -spec.numeric.window, spec.numeric.window)?;
            export_orbit_csv(&o, &path("orbit.csv"))?;
            out.wrote(path("orbit.csv"), &format!("{} indices {}..={}", o.len(), o.k_min(), o.k_max()));
        }
        Command::Check => {
            let sys = spec.build_system(build_driver(driver, -1, 1)?)?;
            let report = check_assumptions(&sys);
            let body = CheckReport { assumptions: &report, envelope: sys.envelope(), m_f: sys.m_f() };
            write_json(&body, &path("report.json"))?;
            out.wrote(path("report.json"), &format!("a4 {} a5 {}", pass(report.a4_pass), pass(report.a5_pass)));
            if !(report.a4_pass && report.a5_pass) {
                out.status = EXIT_VERDICT_FAIL;
            }
        }
        Command::Constants => {
            let sys = spec.build_system(build_driver(driver, -1, 1)?)?;
            let c = proof_constants(&sys)?;
            write_json(&c, &path("constants.json"))?;
            out.wrote(path("constants.json"), &format!("M_phi {:.6} kappa_pi {:.6}", c.m_phi, c.kappa_pi));
        }
        Command::Solve => {
            let (sys, _) = prepare(spec, &[driver])?;
            let w = spec.numeric.window;
            let traj = solve_bounded(&sys, -w, w, &solve_options(spec))?;
            let defect = residual_defect(&sys, &traj)?;
            let bounded = traj.meta.sup_norm <= sys.m_phi() + 1e-9;
            export_trajectory_csv(&traj, &path("traj.csv"))?;
            out.wrote(path("traj.csv"), &format!("{} samples", traj.len()));
            export_frozen_csv(&traj, &path("frozen.csv"))?;
            out.wrote(path("frozen.csv"), &format!("{} argument values", traj.frozen_args.len()));
            let report = SolveReport {
                k_lo: -w,
                k_hi: w,
                samples: traj.len(),
                residual_defect: defect,
                bounded,
                meta: &traj.meta,
            };
            write_json(&report, &path("solve.json"))?;
            out.wrote(path("solve.json"), &format!("defect {defect:.3e} sup {:.6}", traj.meta.sup_norm));
            if !bounded {
                out.status = EXIT_VERDICT_FAIL;
            }
        }
        Command::Certify | Command::Example4 => {
            let mut specs = vec![driver];
            specs.extend(spec.targets.iter());
            let (sys, drivers) = prepare(spec, &specs)?;
            let (beta, targets) = drivers.split_first().expect("non-empty");
            let kind = match spec.mode {
                Mode::Homoclinic => ConnectionKind::Homoclinic,
                Mode::Heteroclinic => ConnectionKind::Heteroclinic,
            };
            let opts = CertifyOptions {
                window: spec.numeric.window,
                tol: spec.numeric.cert_tol,
                solve: SolveOptions { picard_tol: CERT_PICARD_TOL, ..solve_options(spec) },
            };
            let run = run_connection(&sys, targets, beta, kind, &opts)?;
            let names: &[&str] = match kind {
                ConnectionKind::Homoclinic => &["alpha"],
                ConnectionKind::Heteroclinic => &["alpha1", "alpha2"],
            };
            for ((name, orbit), traj) in names.iter().zip(targets).zip(&run.targets) {
                export_orbit_csv(orbit, &path(&format!("{name}.csv")))?;
                out.wrote(path(&format!("{name}.csv")), "target sequence");
                export_trajectory_csv(traj, &path(&format!("traj_{name}.csv")))?;
                out.wrote(path(&format!("traj_{name}.csv")), &format!("{} samples", traj.len()));
            }
            export_orbit_csv(beta, &path("beta.csv"))?;
            out.wrote(path("beta.csv"), "connecting sequence");
            export_trajectory_csv(&run.beta, &path("traj_beta.csv"))?;
            out.wrote(path("traj_beta.csv"), &format!("{} samples", run.beta.len()));
            let c = &run.certificate;
            write_json(c, &path("certificate.json"))?;
            out.wrote(
                path("certificate.json"),
                &format!(
                    "verdict {} forward gap {:.3e} backward gap {:.3e} distinctness {:.3e}",
                    pass(c.verdict),
                    c.forward.end_gap,
                    c.backward.end_gap,
                    c.distinctness
                ),
            );
            if !c.verdict {
                out.status = EXIT_VERDICT_FAIL;
            }
        }
    }
    Ok(out)
}

fn pass(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "fail"
    }
}
