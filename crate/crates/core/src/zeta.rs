//! Euler–Maclaurin tails of power sums.
//!
//! Evaluates `Σ_{n≥0} (q+n)^{-s}` for large `|q|` together with a rigorous
//! remainder bound. These tails let lattice-type pole generators complete
//! their kernel sums analytically instead of truncating.

use num_complex::Complex64;

use crate::{Error, Result};

/// Rising factorial s(s+1)···(s+k−1).
fn rising(s: f64, k: u32) -> f64 {
    let mut p = 1.0;
    for j in 0..k {
        p *= s + j as f64;
    }
    p
}

/// `Σ_{n≥0} (q+n)^{-s}` for s > 1 and Re(q) large, with an error bound.
///
/// Uses the Euler–Maclaurin expansion through the `q^{-s-7}` term; the bound
/// is four times the first omitted term. Requires `Re(q) ≥ max(4s, 8)` and
/// `|Im q| ≤ Re q` so the asymptotic remainder bound applies.
pub fn zeta_tail(s: f64, q: Complex64) -> Result<(Complex64, f64)> {
    if !(s > 1.0) {
        return Err(Error::invalid(format!("zeta_tail needs s > 1, got {s}")));
    }
    if q.re < (4.0 * s).max(8.0) || q.im.abs() > q.re {
        return Err(Error::invalid(format!(
            "zeta_tail outside asymptotic regime (q = {q}, s = {s})"
        )));
    }
    let qs = q.powf(-s); // q^{-s}
    let q1 = 1.0 / q;
    let mut val = q * qs / (s - 1.0); // q^{1-s}/(s-1)
    val += qs * 0.5;
    val += qs * q1 * (s / 12.0);
    val -= qs * q1.powu(3) * (rising(s, 3) / 720.0);
    val += qs * q1.powu(5) * (rising(s, 5) / 30240.0);
    val -= qs * q1.powu(7) * (rising(s, 7) / 1_209_600.0);
    let next = qs.norm() * q1.norm().powi(9) * (rising(s, 9) / 47_900_160.0);
    let bound = 4.0 * next + 4.0 * f64::EPSILON * val.norm();
    Ok((val, bound))
}

/// `Σ_{n > n0} n^{-p}` for real p > 1, with an error bound.
pub fn power_tail(p: f64, n0: usize) -> Result<(f64, f64)> {
    let q = Complex64::new(n0 as f64 + 1.0, 0.0);
    if q.re < (4.0 * p).max(8.0) {
        // Small offsets: sum explicitly up to a safe start point.
        let start = ((4.0 * p).max(8.0)).ceil() as usize;
        let mut s = 0.0;
        for n in (n0 + 1)..=start {
            s += (n as f64).powf(-p);
        }
        let (tail, bound) = zeta_tail(p, Complex64::new(start as f64 + 1.0, 0.0))?;
        return Ok((s + tail.re, bound));
    }
    let (v, b) = zeta_tail(p, q)?;
    Ok((v.re, b))
}
