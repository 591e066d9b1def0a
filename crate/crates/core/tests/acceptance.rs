//! Acceptance battery for the worked example. Prints one line per criterion
//! and exits non-zero if any criterion fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use epcag::analysis::{
    certify_connection, difference_profile, unstable_bound_check, verify_hyperbolic_transfer, CertifyOptions,
    ConnectionKind,
};
use epcag::driver::{build_orbit, sequence_gap_profile, Branch, Direction, DriverOrbit, OrbitKind, ScalarMap};
use epcag::linear::validate_envelope;
use epcag::scenario::{self, CatalogEntry, Mode};
use epcag::system::{
    check_assumptions, proof_constants, residual_defect, solve_bounded, EpcagSystem, Method, SampledTrajectory,
    SolveOptions,
};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn within(x: f64, want: f64, tol: f64) -> bool {
    (x - want).abs() <= tol
}

fn envelope_reproduction() -> Outcome {
    let start = Instant::now();
    let a = scenario::example4_matrix();
    let report = validate_envelope(&a, &scenario::example4_envelope(), 1e-3).map_err(err)?;
    let eig = a.eigenvalues().map_err(err)?;
    let b = 15f64.sqrt() / 2.0;
    let eig_ok = eig.len() == 2
        && eig.iter().all(|z| within(z.re, -0.5, 1e-10) && within(z.im.abs(), b, 1e-10))
        && eig[0].im * eig[1].im < 0.0;
    let elapsed = start.elapsed();
    ensure(
        report.pass && eig_ok && elapsed < Duration::from_secs(1),
        format!(
            "max ratio {:.12} over {} samples, eigenvalues {:.6} +- {:.6}i, timed {elapsed:.2?}",
            report.max_ratio,
            report.samples,
            eig[0].re,
            eig[0].im.abs()
        ),
    )
}

fn assumption_checker() -> Outcome {
    let sys = scenario::example4_system(Mode::Heteroclinic, -80, 30).map_err(err)?;
    let r = check_assumptions(&sys);
    ensure(
        within(r.a4_lhs, 0.13252, 1e-5) && r.a4_lhs < 0.5 && within(r.a5_lhs, 0.74192, 1e-4) && r.a4_pass && r.a5_pass,
        format!("a4_lhs {:.6} a5_lhs {:.6}", r.a4_lhs, r.a5_lhs),
    )
}

fn constants() -> Outcome {
    let sys = scenario::example4_system(Mode::Heteroclinic, -80, 30).map_err(err)?;
    let c = proof_constants(&sys).map_err(err)?;
    let (r1, r2) = (c.r1.unwrap_or(f64::NAN), c.r2.unwrap_or(f64::NAN));
    ensure(
        within(c.m_phi, 16.475, 1e-3) && within(c.kappa_pi, 0.26503, 1e-5) && within(r2, 10.025, 0.01) && r1 > 0.0,
        format!("m_phi {:.5} kappa_pi {:.6} r1 {r1:.3} r2 {r2:.4}", c.m_phi, c.kappa_pi),
    )
}

fn picard_contraction(trajs: &mut Vec<(EpcagSystem, SampledTrajectory)>) -> Outcome {
    let sys = scenario::example4_system(Mode::Heteroclinic, -80, 30).map_err(err)?;
    let t = solve_bounded(&sys, -20, 20, &SolveOptions::default()).map_err(err)?;
    let d = &t.meta.picard_diffs;
    let ratios: Vec<f64> = d.windows(2).map(|w| w[1] / w[0]).collect();
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    let n = d.len();
    let ok = worst <= 0.30 && n <= 12 && d.last().is_some_and(|x| *x <= 1e-10);
    let msg = format!("{n} iterates, worst ratio {worst:.4}, final diff {:.2e}", d.last().copied().unwrap_or(f64::NAN));
    trajs.push((sys, t));
    ensure(ok, msg)
}

fn oracle_equivalence(trajs: &mut Vec<(EpcagSystem, SampledTrajectory)>) -> Outcome {
    let start = Instant::now();
    let sys = scenario::example4_system(Mode::Heteroclinic, -80, 30).map_err(err)?;
    let p = solve_bounded(&sys, -20, 20, &SolveOptions::default()).map_err(err)?;
    let b =
        solve_bounded(&sys, -20, 20, &SolveOptions { method: Method::BurnIn, ..Default::default() }).map_err(err)?;
    let elapsed = start.elapsed();
    let prof = difference_profile(&p, &b).map_err(err)?;
    let (lo, hi) = (p.node_index(-10).unwrap(), p.node_index(10).unwrap());
    let gap = prof[lo..=hi].iter().map(|x| x.1).fold(0.0, f64::max);
    trajs.push((sys, b));
    ensure(gap <= 1e-6 && elapsed < Duration::from_secs(10), format!("interior sup gap {gap:.2e}, timed {elapsed:.2?}"))
}

fn scenario_certificate(mode: Mode, ratio: f64, trajs: &mut Vec<(EpcagSystem, SampledTrajectory)>) -> Outcome {
    let start = Instant::now();
    let m = ScalarMap::logistic(mode.mu()).map_err(err)?;
    let (kind, seed, branch, target, ckind) = match mode {
        Mode::Homoclinic => (OrbitKind::Homoclinic, 1.0 / 3.9, Branch::UpperH, 2.9 / 3.9, ConnectionKind::Homoclinic),
        Mode::Heteroclinic => (OrbitKind::Heteroclinic, 0.25, Branch::LowerG, 0.0, ConnectionKind::Heteroclinic),
    };
    let o = build_orbit(&m, kind, seed, branch, -40, 40).map_err(err)?;
    let gaps = sequence_gap_profile(&o, &[target], Direction::Backward).map_err(err)?;
    let seq_ok =
        gaps.windows(2).filter(|w| (-40..=-10).contains(&w[1].0)).all(|w| within(w[1].1 / w[0].1, ratio, 0.05 * ratio));

    let d = scenario::example4_drivers(mode, -80, 30).map_err(err)?;
    let sys = scenario::example4_system_with(d.beta.clone()).map_err(err)?;
    let opts = CertifyOptions::default();
    let cert = certify_connection(&sys, &d.targets, &d.beta, ckind, &opts).map_err(err)?;
    let elapsed = start.elapsed();
    let mut ok = seq_ok && cert.verdict && cert.forward.end_gap <= 1e-4 && cert.backward.end_gap <= 1e-4;
    if mode == Mode::Homoclinic {
        ok &= cert.forward.fitted_rate.is_some_and(|r| r >= 0.33) && elapsed < Duration::from_secs(30);
    }
    for t in &d.targets {
        let s = sys.with_driver(t.clone()).map_err(err)?;
        let t = solve_bounded(&s, -30, 30, &opts.solve).map_err(err)?;
        trajs.push((s, t));
    }
    let t = solve_bounded(&sys, -30, 30, &opts.solve).map_err(err)?;
    trajs.push((sys, t));
    ensure(
        ok,
        format!(
            "sequence ratio within 5% of {ratio:.4}: {seq_ok}; verdict {}; end gaps {:.2e} / {:.2e}; forward rate {:?}; timed {elapsed:.2?}",
            cert.verdict, cert.forward.end_gap, cert.backward.end_gap, cert.forward.fitted_rate
        ),
    )
}

fn boundedness_and_defect(trajs: &[(EpcagSystem, SampledTrajectory)]) -> Outcome {
    let mut worst_sup: f64 = 0.0;
    let mut worst_defect: f64 = 0.0;
    for (s, t) in trajs {
        worst_sup = worst_sup.max(t.sup_norm());
        worst_defect = worst_defect.max(residual_defect(s, t).map_err(err)?);
    }
    ensure(
        !trajs.is_empty() && worst_sup <= 16.476 && worst_defect <= 1e-6,
        format!("{} trajectories, sup {worst_sup:.4}, defect {worst_defect:.2e}", trajs.len()),
    )
}

fn unstable_bound() -> Outcome {
    let g = 1e-3;
    let k0 = -5;
    let (lo, hi) = (-120, 30);
    let p = 2.9 / 3.9;
    let alpha: Vec<Vec<f64>> = (lo..=hi).map(|_| vec![p, p]).collect();
    let shift = g / 2f64.sqrt();
    let beta: Vec<Vec<f64>> = (lo..=hi).map(|k| if k < k0 { vec![p + shift, p + shift] } else { vec![p, p] }).collect();
    let da = DriverOrbit::from_values(lo, &alpha, 0.0).map_err(err)?;
    let db = DriverOrbit::from_values(lo, &beta, 0.0).map_err(err)?;
    let sys = scenario::example4_system_with(da.clone()).map_err(err)?;
    let opts = SolveOptions::default();
    let ta = solve_bounded(&sys, -30, 30, &opts).map_err(err)?;
    let tb = solve_bounded(&sys.with_driver(db.clone()).map_err(err)?, -30, 30, &opts).map_err(err)?;
    let c = unstable_bound_check(&sys, &ta, &tb, &da, &db, k0).map_err(err)?;
    let rate = sys.attraction_rate();
    let bound = sys.envelope().n_const * g / rate * 1.1;
    ensure(
        c.pass && within(c.sequence_gap, g, 1e-15) && within(c.bound, bound, 1e-12) && bound < 9.92e-3,
        format!("sup gap {:.3e} <= bound {:.4e} (g = {:.1e})", c.sup_gap, c.bound, c.sequence_gap),
    )
}

fn hyperbolic_battery() -> Outcome {
    let catalog = scenario::example4_catalog(-80, 30).map_err(err)?;
    let template = scenario::example4_system_with(catalog[0].alpha.clone()).map_err(err)?;
    let opts = CertifyOptions::default();
    let report = verify_hyperbolic_transfer(&template, &catalog, &opts).map_err(err)?;
    let control = CatalogEntry {
        label: "beta_s = alpha".into(),
        alpha: catalog[0].alpha.clone(),
        beta_s: catalog[0].alpha.clone(),
        beta_u: catalog[0].beta_u.clone(),
    };
    let ctl = verify_hyperbolic_transfer(&template, &[control], &opts).map_err(err)?;
    ensure(
        report.pass && !ctl.pass && ctl.entries[0].distinctness_s == 0.0,
        format!(
            "{} entries pass: {}; control pass: {} with distinctness {:e}",
            report.entries.len(),
            report.pass,
            ctl.pass,
            ctl.entries[0].distinctness_s
        ),
    )
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(err)?;
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let dir = tmp.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_epcag"))
            .args(["example4", "--mode", "homoclinic", "--out"])
            .arg(&dir)
            .output()
            .map_err(err)?;
        if !status.status.success() {
            return Err(format!("run {run} exited with {}", status.status));
        }
        outputs.push(read_dir_sorted(&dir));
    }
    let names: Vec<&str> = outputs[0].iter().map(|f| f.0.as_str()).collect();
    ensure(
        outputs[0] == outputs[1] && names.len() == 5,
        format!("{} artifacts byte-identical: {}", names.len(), names.join(", ")),
    )
}

fn main() -> ExitCode {
    let mut trajs = Vec::new();
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut record = |n, name, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let r = f();
        let line = match &r {
            Ok(m) => format!("PASS  {n:>2}  {name}: {m} [{:.2?}]", start.elapsed()),
            Err(m) => format!("FAIL  {n:>2}  {name}: {m} [{:.2?}]", start.elapsed()),
        };
        println!("{line}");
        results.push((n, name, r));
    };
    record(1, "envelope reproduction", &mut envelope_reproduction);
    record(2, "assumption checker", &mut assumption_checker);
    record(3, "constants", &mut constants);
    record(4, "picard contraction", &mut || picard_contraction(&mut trajs));
    record(5, "picard and burn-in agree", &mut || oracle_equivalence(&mut trajs));
    record(7, "homoclinic scenario", &mut || scenario_certificate(Mode::Homoclinic, 1.0 / 1.9, &mut trajs));
    record(8, "heteroclinic scenario", &mut || scenario_certificate(Mode::Heteroclinic, 0.25, &mut trajs));
    record(6, "boundedness and defect", &mut || boundedness_and_defect(&trajs));
    record(9, "unstable-direction bound", &mut unstable_bound);
    record(10, "hyperbolicity battery", &mut hyperbolic_battery);
    record(11, "determinism", &mut determinism);
    let failed = results.iter().filter(|r| r.2.is_err()).count();
    println!("acceptance: {} of {} criteria pass", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
