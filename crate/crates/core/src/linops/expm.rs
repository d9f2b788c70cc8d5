//! Scaling-and-squaring matrix exponential with the [13/13] Padé approximant.

use super::{is_finite, CMat};
use crate::error::{Error, Result};

const PADE13: [f64; 14] = [
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

// Largest 1-norm for which the degree-13 approximant meets unit roundoff.
const THETA_13: f64 = 5.371920351148152;

const MAX_SQUARINGS: i32 = 1000;

fn one_norm(a: &CMat) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(tA)`.
pub fn expm(a: &CMat, t: f64) -> Result<CMat> {
    super::require_square(a, "expm argument")?;
    if !t.is_finite() || t < 0.0 {
        return Err(Error::input(format!("expm time must be finite and >= 0, got {t}")));
    }
    if !is_finite(a) {
        return Err(Error::input("expm argument has non-finite entries"));
    }
    let n = a.nrows();
    let at = a.scale(t);
    let norm = one_norm(&at);
    if norm == 0.0 {
        return Ok(CMat::identity(n, n));
    }
    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    if squarings > MAX_SQUARINGS {
        return Err(Error::numeric(format!("expm scaling overflow (1-norm {norm:.3e})")));
    }
    let scaled = at.scale(0.5_f64.powi(squarings));

    let id = CMat::identity(n, n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;

    let u_inner = &a6 * (a6.scale(b[13]) + a4.scale(b[11]) + a2.scale(b[9]))
        + a6.scale(b[7])
        + a4.scale(b[5])
        + a2.scale(b[3])
        + id.scale(b[1]);
    let u = &scaled * u_inner;
    let v = &a6 * (a6.scale(b[12]) + a4.scale(b[10]) + a2.scale(b[8]))
        + a6.scale(b[6])
        + a4.scale(b[4])
        + a2.scale(b[2])
        + id.scale(b[0]);

    let denom = &v - &u;
    let numer = &v + &u;
    let mut result = denom
        .lu()
        .solve(&numer)
        .ok_or_else(|| Error::numeric("singular Padé denominator in expm"))?;
    for _ in 0..squarings {
        result = &result * &result;
    }
    if !is_finite(&result) {
        return Err(Error::numeric("expm overflow during squaring"));
    }
    Ok(result)
}
