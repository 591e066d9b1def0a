//! Scaling and squaring with diagonal Padé approximants of degree 3..13,
//! selected from the 1-norm of `At`.

use nalgebra::DMatrix;

use super::{log_norm, spectral_norm, SquareMatrix, MAX_EIGEN_DIM};
use crate::error::{Error, Result};

const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.53939833006323e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] =
    [17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0, 2162160.0, 110880.0, 3960.0, 90.0, 1.0];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// `e^{700}` is within two orders of magnitude of `f64::MAX`.
const OVERFLOW_NORM: f64 = 700.0;

/// Computes `e^{At}`. Negative `t` is allowed.
pub fn mat_exp(a: &SquareMatrix, t: f64) -> Result<SquareMatrix> {
    if !t.is_finite() {
        return Err(Error::NonFinite("time"));
    }
    let x = a.as_matrix() * t;
    if spectral_norm(&x) > OVERFLOW_NORM {
        // a large norm is harmless unless the spectrum itself grows
        let growth = if x.nrows() <= MAX_EIGEN_DIM {
            x.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
        } else {
            log_norm(&x)
        };
        if growth > OVERFLOW_NORM {
            return Err(Error::OverflowRisk(growth));
        }
    }
    let e = expm(&x);
    if e.iter().any(|v| !v.is_finite()) {
        return Err(Error::OverflowRisk(f64::INFINITY));
    }
    Ok(SquareMatrix(e))
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

pub(crate) fn expm(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let norm = one_norm(x);
    if norm == 0.0 {
        return DMatrix::identity(n, n);
    }
    if norm <= THETA_3 {
        return pade_low(x, &B3);
    }
    if norm <= THETA_5 {
        return pade_low(x, &B5);
    }
    if norm <= THETA_7 {
        return pade_low(x, &B7);
    }
    if norm <= THETA_9 {
        return pade_low(x, &B9);
    }
    let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
    let scaled = x * 2f64.powi(-s);
    let mut r = pade13(&scaled);
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

fn solve_pade(u: DMatrix<f64>, v: DMatrix<f64>) -> DMatrix<f64> {
    let p = &v + &u;
    let q = v - u;
    // q is well conditioned for the chosen degrees, so LU suffices.
    q.lu().solve(&p).expect("Padé denominator is nonsingular for ||X||_1 <= theta_m")
}

fn pade_low(x: &DMatrix<f64>, b: &[f64]) -> DMatrix<f64> {
    let n = x.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let x2 = x * x;
    let mut even = id.clone() * b[0];
    let mut odd = id * b[1];
    let mut pow = x2.clone();
    let mut j = 2;
    while j < b.len() {
        even += &pow * b[j];
        if j + 1 < b.len() {
            odd += &pow * b[j + 1];
        }
        pow = &pow * &x2;
        j += 2;
    }
    solve_pade(x * odd, even)
}

fn pade13(x: &DMatrix<f64>) -> DMatrix<f64> {
    let b = &B13;
    let n = x.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let x2 = x * x;
    let x4 = &x2 * &x2;
    let x6 = &x4 * &x2;
    let inner_u = &x6 * (&x6 * b[13] + &x4 * b[11] + &x2 * b[9]);
    let u = x * (inner_u + &x6 * b[7] + &x4 * b[5] + &x2 * b[3] + &id * b[1]);
    let inner_v = &x6 * (&x6 * b[12] + &x4 * b[10] + &x2 * b[8]);
    let v = inner_v + &x6 * b[6] + &x4 * b[4] + &x2 * b[2] + id * b[0];
    solve_pade(u, v)
}
