//! Artifact emission. Files are written whole: a sibling temporary file is
//! filled and then renamed over the target.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::driver::DriverOrbit;
use crate::error::{Error, Result};
use crate::system::SampledTrajectory;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::validation("output", format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, bytes).map_err(io_err(path))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::Io { path: path.to_path_buf(), source: e }
    })
}

/// Seventeen significant digits, exponent form.
fn num(out: &mut String, v: f64) {
    write!(out, "{v:.16e}").expect("string write");
}

fn row(out: &mut String, lead: impl std::fmt::Display, values: &[f64]) {
    write!(out, "{lead}").expect("string write");
    for &v in values {
        out.push(',');
        num(out, v);
    }
}

fn header(first: &str, prefix: &str, m: usize) -> String {
    let mut h = first.to_string();
    for i in 1..=m {
        write!(h, ",{prefix}_{i}").expect("string write");
    }
    h
}

pub fn trajectory_csv(traj: &SampledTrajectory) -> String {
    let mut out = header("t", "z", traj.dim);
    out.push_str(",interval_k\n");
    for i in 0..traj.len() {
        let mut t = String::new();
        num(&mut t, traj.time(i));
        row(&mut out, t, traj.sample(i));
        writeln!(out, ",{}", traj.interval_of(i)).expect("string write");
    }
    out
}

pub fn frozen_csv(traj: &SampledTrajectory) -> String {
    let mut out = header("k,zeta_k", "w", traj.dim);
    out.push('\n');
    for a in &traj.frozen_args {
        let mut lead = format!("{},", a.k);
        num(&mut lead, a.zeta);
        row(&mut out, lead, &a.w);
        out.push('\n');
    }
    out
}

pub fn orbit_csv(orbit: &DriverOrbit) -> String {
    let mut out = header("k", "alpha", orbit.dim());
    out.push('\n');
    for (k, a) in orbit.iter() {
        row(&mut out, k, a);
        out.push('\n');
    }
    out
}

pub fn export_trajectory_csv(traj: &SampledTrajectory, path: &Path) -> Result<()> {
    write_atomic(path, trajectory_csv(traj).as_bytes())
}

pub fn export_orbit_csv(orbit: &DriverOrbit, path: &Path) -> Result<()> {
    write_atomic(path, orbit_csv(orbit).as_bytes())
}

pub fn export_frozen_csv(traj: &SampledTrajectory, path: &Path) -> Result<()> {
    write_atomic(path, frozen_csv(traj).as_bytes())
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::validation("json", e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}
