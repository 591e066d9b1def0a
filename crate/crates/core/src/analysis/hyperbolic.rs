use serde::{Deserialize, Serialize};

use super::certificate::{
    distinctness, sequence_premise, solve_all, CertifyOptions, DecayCertificate, Side, DISTINCTNESS_FACTOR,
};
use crate::driver::Direction;
use crate::error::{Error, Result};
use crate::scenario::CatalogEntry;
use crate::system::{check_assumptions, proof_constants, EpcagSystem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryReport {
    pub label: String,
    pub forward: DecayCertificate,
    pub backward: DecayCertificate,
    pub distinctness_s: f64,
    pub distinctness_u: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogReport {
    pub pass: bool,
    pub entries: Vec<EntryReport>,
    pub warnings: Vec<String>,
}

fn check_entry(template: &EpcagSystem, e: &CatalogEntry, opts: &CertifyOptions) -> Result<EntryReport> {
    let sys = template.with_driver(e.beta_s.clone())?;
    let report = check_assumptions(&sys);
    if !report.a5_pass {
        return Err(Error::AssumptionFailure(format!("{}: stable companion needs (A5)", e.label)));
    }
    let consts = proof_constants(&sys)?;
    sequence_premise(&e.beta_s, &e.alpha, opts.window, opts.tol)?;
    sequence_premise(&e.beta_u, &e.alpha, -opts.window, opts.tol)?;
    let t = solve_all(template, &[&e.alpha, &e.beta_s, &e.beta_u], opts, opts.solve.exec)?;
    let side = |b: usize| Side {
        sys: &sys,
        target: (&t[0], &e.alpha),
        beta: (&t[b], if b == 1 { &e.beta_s } else { &e.beta_u }),
        consts: &consts,
        tol: opts.tol,
    };
    let forward = side(1).certificate(Direction::Forward)?;
    let backward = side(2).certificate(Direction::Backward)?;
    let distinctness_s = distinctness(&t[1], &t[0])?;
    let distinctness_u = distinctness(&t[2], &t[0])?;
    let floor = DISTINCTNESS_FACTOR * opts.tol;
    let pass = forward.pass && backward.pass && distinctness_s > floor && distinctness_u > floor;
    Ok(EntryReport { label: e.label.clone(), forward, backward, distinctness_s, distinctness_u, pass })
}

/// Certifies, for every catalog member, a forward companion and a backward
/// companion at the level of bounded solutions. Entries run concurrently.
pub fn verify_hyperbolic_transfer(
    template: &EpcagSystem,
    catalog: &[CatalogEntry],
    opts: &CertifyOptions,
) -> Result<CatalogReport> {
    if catalog.is_empty() {
        return Ok(CatalogReport {
            pass: true,
            entries: Vec::new(),
            warnings: vec!["empty catalog; pass is vacuous".into()],
        });
    }
    let entries = opts.solve.exec.try_map(catalog.len(), |i| check_entry(template, &catalog[i], opts))?;
    Ok(CatalogReport { pass: entries.iter().all(|e| e.pass), entries, warnings: Vec::new() })
}
