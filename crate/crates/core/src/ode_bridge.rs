//! The bridge between zero-free kernel sums and second-order ODEs:
//! `f = P/g²` corresponds to `Pg″ − P′g′ + Qg = 0` with polynomial Q.
//!
//! Operations here verify the correspondence on constructive instances:
//! the per-zero residue condition `P′(tₙ)g′(tₙ) = P(tₙ)g″(tₙ)`, numerical
//! recovery of `Q = (P′g′ − Pg″)/g`, the critical-ray family attached to a
//! polynomial coefficient, and the hypothesis checks behind the sufficient
//! conditions for existence of zeros (convergence exponent outside
//! ℕ ∪ (ℕ+½), or failure of ray approach).
//!
//! The entire function g is always supplied as a handle (closed form or an
//! ODE-continued solution); extracting g from f by branch-tracked square
//! roots of truncated sums is numerically meaningless near truncation
//! artifacts and is deliberately not offered.

use num_complex::Complex64;

use crate::kernel_sum::KernelSum;
use crate::poly::{fit_polynomial, PolynomialC};
use crate::util::ols;
use crate::{Error, Result};

/// An entire function with simple zeros, evaluable with two derivatives.
pub trait EntireHandle: Sync {
    fn eval(&self, z: Complex64) -> Result<Complex64>;
    fn eval_deriv(&self, z: Complex64) -> Result<Complex64>;
    fn eval_second_deriv(&self, z: Complex64) -> Result<Complex64>;

    /// Zeros with |z| ≤ r, ordered by modulus (ties by argument).
    fn zeros_within(&self, r: f64) -> Result<Vec<Complex64>>;

    /// First `count` zeros by modulus.
    fn first_zeros(&self, count: usize) -> Result<Vec<Complex64>> {
        let mut r = 4.0;
        for _ in 0..44 {
            let zs = self.zeros_within(r)?;
            if zs.len() >= count {
                return Ok(zs.into_iter().take(count).collect());
            }
            r *= 2.0;
        }
        Err(Error::invalid(format!("could not collect {count} zeros")))
    }
}

/// The m+2 critical rays of `g″ + Qg = 0` with `deg Q = m`:
/// base −a_{m−1}/(m·a_m), angles (2πj − arg a_m)/(m+2).
#[derive(Debug, Clone)]
pub struct CriticalRayFamily {
    pub base: Complex64,
    /// Angles in (−π, π], sorted ascending.
    pub angles: Vec<f64>,
}

fn normalize_angle(mut th: f64) -> f64 {
    use std::f64::consts::PI;
    while th > PI {
        th -= 2.0 * PI;
    }
    while th <= -PI {
        th += 2.0 * PI;
    }
    th
}

impl CriticalRayFamily {
    /// Family from an explicit base and angle list.
    pub fn new(base: Complex64, angles: Vec<f64>) -> Self {
        let mut angles: Vec<f64> = angles.into_iter().map(normalize_angle).collect();
        angles.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        Self { base, angles }
    }

    /// Euclidean distance from a point to the nearest ray (half-line).
    pub fn distance(&self, p: Complex64) -> f64 {
        let d = p - self.base;
        let mut best = f64::INFINITY;
        for &th in &self.angles {
            let dir = Complex64::new(th.cos(), th.sin());
            let s = (d * dir.conj()).re.max(0.0);
            best = best.min((d - s * dir).norm());
        }
        best
    }

    /// Distance to one specific ray angle.
    pub fn distance_to_ray(&self, p: Complex64, angle: f64) -> f64 {
        let d = p - self.base;
        let dir = Complex64::new(angle.cos(), angle.sin());
        let s = (d * dir.conj()).re.max(0.0);
        (d - s * dir).norm()
    }
}

/// Critical rays of Q; deg Q must be ≥ 1.
pub fn critical_rays(q: &PolynomialC) -> Result<CriticalRayFamily> {
    use std::f64::consts::PI;
    let m = q.degree();
    if q.is_zero() || m == 0 {
        return Err(Error::NoRays);
    }
    let am = q.leading()?;
    let am1 = q.coeff(m - 1);
    let base = -am1 / (m as f64 * am);
    let angles = (0..m + 2)
        .map(|j| (2.0 * PI * j as f64 - am.arg()) / (m as f64 + 2.0))
        .collect();
    Ok(CriticalRayFamily::new(base, angles))
}

/// Distances of points (ordered by modulus) to the nearest ray of the family.
pub fn ray_distance_stats(points: &[Complex64], rays: &CriticalRayFamily) -> Vec<f64> {
    points.iter().map(|&p| rays.distance(p)).collect()
}

#[derive(Debug, Clone)]
pub struct SectorVerdict {
    /// Points outside {|arg z| < α} ∪ {|arg z − π| < α}.
    pub outside: usize,
    pub total: usize,
    /// Whether the top-modulus half of the points lies entirely inside
    /// (the finite-sample rendering of "all but finitely many").
    pub tail_inside: bool,
}

/// Test whether the points lie in the double sector of half-angle α < π/(m+2).
pub fn sector_test(points: &[Complex64], alpha: f64, m: u32) -> Result<SectorVerdict> {
    use std::f64::consts::PI;
    let max = PI / (m as f64 + 2.0);
    if !(alpha > 0.0 && alpha < max) {
        return Err(Error::AlphaOutOfRange { alpha, max });
    }
    let inside = |p: &Complex64| {
        let a = p.arg();
        a.abs() < alpha || (a - PI).abs() < alpha || (a + PI).abs() < alpha
    };
    let outside = points.iter().filter(|p| !inside(p)).count();
    let half = points.len() / 2;
    let tail_inside = points[half..].iter().all(inside);
    Ok(SectorVerdict { outside, total: points.len(), tail_inside })
}

/// Order (m+2)/2 of any nonzero solution of g″ + Qg = 0 with deg Q = m.
pub fn order_from_degree(m: i64) -> Result<f64> {
    if m < 0 {
        return Err(Error::invalid("degree must be nonnegative"));
    }
    Ok((m as f64 + 2.0) / 2.0)
}

#[derive(Debug, Clone)]
pub struct ResidueRow {
    pub zero: Complex64,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct ResidueReport {
    pub rows: Vec<ResidueRow>,
    pub pass: bool,
    pub tol: f64,
}

impl ResidueReport {
    pub fn to_json(&self) -> String {
        let rows: Vec<String> = self
            .rows
            .iter()
            .map(|r| {
                format!(
                    "{{\"re\":{},\"im\":{},\"residual\":{}}}",
                    r.zero.re, r.zero.im, r.residual
                )
            })
            .collect();
        format!(
            "{{\"pass\":{},\"tol\":{},\"rows\":[{}]}}",
            self.pass,
            self.tol,
            rows.join(",")
        )
    }
}

/// Check `P′(tₙ)g′(tₙ) − P(tₙ)g″(tₙ) = 0` at the first `count` zeros.
///
/// Residuals are scaled by |P′g′| + |Pg″| + |P||g′|²/(1+|t|), so exact
/// cancellations (e.g. sin with P = 1, where both products vanish) score 0.
pub fn verify_zero_residue_condition(
    g: &dyn EntireHandle,
    p: &PolynomialC,
    count: usize,
    tol: f64,
) -> Result<ResidueReport> {
    let dp = p.derivative();
    let zeros = g.first_zeros(count)?;
    let mut rows = Vec::with_capacity(zeros.len());
    for &t in &zeros {
        let g1 = g.eval_deriv(t)?;
        if g1.norm() < 1e-8 * (1.0 + t.norm()) {
            return Err(Error::NearMultipleZero { zero: t, mag: g1.norm() });
        }
        let g2 = g.eval_second_deriv(t)?;
        let lhs = dp.eval(t) * g1 - p.eval(t) * g2;
        let scale = dp.eval(t).norm() * g1.norm()
            + p.eval(t).norm() * g2.norm()
            + p.eval(t).norm() * g1.norm_sqr() / (1.0 + t.norm());
        let residual = if scale > 0.0 { lhs.norm() / scale } else { lhs.norm() };
        rows.push(ResidueRow { zero: t, residual });
    }
    let pass = rows.iter().all(|r| r.residual <= tol);
    Ok(ResidueReport { rows, pass, tol })
}

/// Default sample set for `recover_q`: two concentric circles of radius 2
/// and 3, 24 points each, nudged off zeros of g.
pub fn default_recovery_samples(g: &dyn EntireHandle) -> Result<Vec<Complex64>> {
    use std::f64::consts::PI;
    let mut out = Vec::with_capacity(48);
    for &r in &[2.0, 3.0] {
        for k in 0..24 {
            let mut th = 2.0 * PI * k as f64 / 24.0;
            let mut z = r * Complex64::new(th.cos(), th.sin());
            for _ in 0..8 {
                if g.eval(z)?.norm() > 1e-6 {
                    break;
                }
                th += PI / 48.0;
                z = r * Complex64::new(th.cos(), th.sin());
            }
            out.push(z);
        }
    }
    Ok(out)
}

/// Recover the polynomial Q = (P′g′ − Pg″)/g by least squares over samples.
///
/// Coefficients below 1e−8 of the largest are truncated. Returns Q and the
/// maximum fit discrepancy over the samples.
pub fn recover_q(
    g: &dyn EntireHandle,
    p: &PolynomialC,
    samples: &[Complex64],
    degree_cap: usize,
) -> Result<(PolynomialC, f64)> {
    let dp = p.derivative();
    let mut pts = Vec::with_capacity(samples.len());
    let mut vals = Vec::with_capacity(samples.len());
    for &z in samples {
        let gv = g.eval(z)?;
        if gv.norm() < 1e-10 {
            continue;
        }
        let rhs = (dp.eval(z) * g.eval_deriv(z)? - p.eval(z) * g.eval_second_deriv(z)?) / gv;
        pts.push(z);
        vals.push(rhs);
    }
    if pts.len() < 2 * (degree_cap + 1) {
        return Err(Error::invalid(format!(
            "only {} usable samples for degree cap {degree_cap}",
            pts.len()
        )));
    }
    let (fit, _cond) = fit_polynomial(&pts, &vals, degree_cap)?;
    let q = fit.truncate_small(1e-8);
    let residual = pts
        .iter()
        .zip(&vals)
        .map(|(&z, &v)| (fit.eval(z) - v).norm())
        .fold(0.0, f64::max);
    Ok((q, residual))
}

/// Max of |Pg″ − P′g′ + Qg| over the points, normalized by the largest of
/// the three term magnitudes.
pub fn ode_residual(
    g: &dyn EntireHandle,
    p: &PolynomialC,
    q: &PolynomialC,
    points: &[Complex64],
) -> Result<f64> {
    let dp = p.derivative();
    let mut worst = 0.0f64;
    for &z in points {
        let a = p.eval(z) * g.eval_second_deriv(z)?;
        let b = dp.eval(z) * g.eval_deriv(z)?;
        let c = q.eval(z) * g.eval(z)?;
        let scale = a.norm().max(b.norm()).max(c.norm()).max(1e-300);
        worst = worst.max((a - b + c).norm() / scale);
    }
    Ok(worst)
}

/// Finite-sample convergence-exponent estimate from a point set.
#[derive(Debug, Clone)]
pub struct ConvergenceExponent {
    pub exponent: f64,
    pub fit_residual: f64,
    /// Nearest element of ℕ ∪ (ℕ+½) and the distance to it, under the
    /// convention 0 ∈ ℕ.
    pub nearest_with_zero: (f64, f64),
    /// Same, under ℕ = {1, 2, …}.
    pub nearest_without_zero: (f64, f64),
}

fn nearest_half_integer_at_least(x: f64, min: f64) -> (f64, f64) {
    let snapped = (x * 2.0).round() / 2.0;
    let v = snapped.max(min);
    (v, (x - v).abs())
}

/// Log-log slope of count(r) against r over the top half of moduli.
pub fn convergence_exponent_estimate(points: &[Complex64]) -> Result<ConvergenceExponent> {
    if points.len() < 30 {
        return Err(Error::DegenerateFit(format!(
            "need ≥ 30 points, got {}",
            points.len()
        )));
    }
    let mut moduli: Vec<f64> = points.iter().map(|p| p.norm()).filter(|&m| m > 0.0).collect();
    moduli.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let span = moduli.last().unwrap() / moduli[0];
    if span < 100.0 {
        return Err(Error::DegenerateFit(format!(
            "moduli span only a factor {span:.2}, need ≥ 2 decades"
        )));
    }
    let n = moduli.len();
    let half = n / 2;
    let xs: Vec<f64> = (half..n).map(|k| moduli[k].ln()).collect();
    let ys: Vec<f64> = (half..n).map(|k| ((k + 1) as f64).ln()).collect();
    let (slope, _icpt, rms) = ols(&xs, &ys);
    Ok(ConvergenceExponent {
        exponent: slope,
        fit_residual: rms,
        nearest_with_zero: nearest_half_integer_at_least(slope, 0.0),
        nearest_without_zero: nearest_half_integer_at_least(slope, 1.0),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FerConclusion {
    /// At least one sufficient condition fired: f must have a zero.
    ZeroExists,
    /// Neither condition fired on the given evidence.
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct FerVerdict {
    pub exponent: Option<ConvergenceExponent>,
    /// Exponent measurably outside ℕ ∪ (ℕ+½) under both conventions.
    pub exponent_fires: bool,
    /// Every candidate ray family is violated by the pole tail.
    pub ray_fires: bool,
    pub conclusion: FerConclusion,
}

/// Advisory check of the sufficient conditions for existence of a zero:
/// convergence exponent off the half-integer lattice, or ray approach
/// failing for every candidate family. Inconclusive is a valid outcome.
pub fn corollary_fer_check(f: &KernelSum, candidates: &[CriticalRayFamily]) -> FerVerdict {
    let points: Vec<Complex64> = f.poles().entries().iter().map(|e| e.t).collect();
    let exponent = convergence_exponent_estimate(&points).ok();
    let exponent_fires = exponent
        .as_ref()
        .map(|e| e.nearest_with_zero.1 > 0.1 && e.nearest_without_zero.1 > 0.1)
        .unwrap_or(false);
    let ray_fires = !candidates.is_empty()
        && candidates.iter().all(|fam| {
            let tail = &points[points.len() * 3 / 4..];
            // Family is approached if every tail point is relatively close.
            let approached =
                tail.iter().all(|&p| fam.distance(p) / (1.0 + p.norm()) < 0.05);
            !approached
        });
    let conclusion = if exponent_fires || ray_fires {
        FerConclusion::ZeroExists
    } else {
        FerConclusion::Inconclusive
    };
    FerVerdict { exponent, exponent_fires, ray_fires, conclusion }
}
