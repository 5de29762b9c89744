//! Concrete entire and meromorphic instances: the sine family, z/cos²(z²),
//! Airy functions by Taylor-series ODE continuation, genus-0 canonical
//! products, regularized Cauchy-kernel sums, and the defect-½ construction.
//!
//! Bilateral and paired families truncate symmetrically by modulus. Airy
//! evaluation steps a local Taylor expansion of g″ = q(z)·g along the
//! segment from the origin, which stays accurate at moderate |z| where
//! Maclaurin summation cancels catastrophically and asymptotic series would
//! need Stokes-sector bookkeeping. Accuracy degrades in deep decay regions
//! (the recessive solution is eventually swamped by the dominant one); the
//! checks here stay on or near the oscillatory and growth directions.

use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;

use crate::kernel_sum::{CosSquarePairs, KernelSum, PoleSpec, SineLattice};
use crate::nevanlinna::MeromorphicParts;
use crate::ode_bridge::EntireHandle;
use crate::poly::PolynomialC;
use crate::util::{Accum, CAccum};
use crate::zeta::power_tail;
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Taylor-series ODE continuation
// ---------------------------------------------------------------------------

/// Step policy for the continuation of g″ = q(z)·g.
#[derive(Debug, Clone, Copy)]
pub struct StepPolicy {
    /// Order of the local Taylor expansion.
    pub order: usize,
    /// Relative tolerance per step.
    pub tol: f64,
    /// Step radius min(cap, scale·(1+|z|)^{−m/2}) with m = deg q.
    pub radius_cap: f64,
    pub radius_scale: f64,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self { order: 30, tol: 1e-12, radius_cap: 1.0, radius_scale: 0.5 }
    }
}

struct PathCache {
    dir: Complex64,
    /// (distance from z₀ along dir, g, g′) at completed step points.
    pts: Vec<(f64, Complex64, Complex64)>,
}

/// An entire function defined by g″ = q(z)·g and initial data at z₀,
/// evaluated anywhere by stepwise analytic continuation.
pub struct TaylorOdeSolution {
    q: PolynomialC,
    z0: Complex64,
    g0: Complex64,
    g1: Complex64,
    policy: StepPolicy,
    cache: Mutex<Option<PathCache>>,
}

impl TaylorOdeSolution {
    pub fn new(q: PolynomialC, z0: Complex64, g0: Complex64, g1: Complex64) -> Self {
        Self::with_policy(q, z0, g0, g1, StepPolicy::default())
    }

    pub fn with_policy(
        q: PolynomialC,
        z0: Complex64,
        g0: Complex64,
        g1: Complex64,
        policy: StepPolicy,
    ) -> Self {
        Self { q, z0, g0, g1, policy, cache: Mutex::new(None) }
    }

    pub fn equation(&self) -> &PolynomialC {
        &self.q
    }

    fn step_radius(&self, z: Complex64) -> f64 {
        let m = if self.q.is_zero() { 0.0 } else { self.q.degree() as f64 };
        self.policy
            .radius_cap
            .min(self.policy.radius_scale * (1.0 + z.norm()).powf(-m / 2.0))
    }

    /// Taylor coefficients of the solution at `center` from (g, g′) there:
    /// (k+2)(k+1)a_{k+2} = Σ_j q̃_j a_{k−j} with q̃ = q recentered.
    fn local_coeffs(&self, center: Complex64, g: Complex64, g1: Complex64) -> Vec<Complex64> {
        let qq = self.q.taylor_shift(center);
        let d = qq.coeffs().len();
        let n = self.policy.order;
        let mut a = vec![Complex64::new(0.0, 0.0); n + 1];
        a[0] = g;
        a[1] = g1;
        for k in 0..n - 1 {
            let mut conv = Complex64::new(0.0, 0.0);
            for j in 0..d.min(k + 1) {
                conv += qq.coeff(j) * a[k - j];
            }
            a[k + 2] = conv / ((k + 2) as f64 * (k + 1) as f64);
        }
        a
    }

    /// One step of length h from `center`; errors if the local remainder
    /// cannot meet the per-step tolerance even after shrinking.
    fn step(
        &self,
        center: Complex64,
        g: Complex64,
        g1: Complex64,
        h: Complex64,
    ) -> Result<(Complex64, Complex64)> {
        let a = self.local_coeffs(center, g, g1);
        let n = a.len() - 1;
        let hn = h.norm();
        // Horner for value and derivative.
        let mut val = Complex64::new(0.0, 0.0);
        let mut der = Complex64::new(0.0, 0.0);
        for k in (0..=n).rev() {
            val = val * h + a[k];
            if k >= 1 {
                der = der * h + a[k] * k as f64;
            }
        }
        let mut scale: f64 = 0.0;
        let mut p = 1.0;
        for ak in a.iter() {
            scale = scale.max(ak.norm() * p);
            p *= hn;
        }
        let rem: f64 = (n - 2..=n).map(|k| a[k].norm() * hn.powi(k as i32)).sum::<f64>() * 3.0;
        if rem > self.policy.tol * scale.max(val.norm()) {
            return Err(Error::StepTolerance { z: center, rem });
        }
        Ok((val, der))
    }

    fn walk(
        &self,
        mut center: Complex64,
        mut g: Complex64,
        mut g1: Complex64,
        target: Complex64,
        mut on_step: impl FnMut(Complex64, Complex64, Complex64),
    ) -> Result<(Complex64, Complex64)> {
        loop {
            let remaining = target - center;
            let dist = remaining.norm();
            if dist == 0.0 {
                return Ok((g, g1));
            }
            let dir = remaining / dist;
            let mut h_len = self.step_radius(center).min(dist);
            let mut advanced = false;
            for _ in 0..12 {
                match self.step(center, g, g1, dir * h_len) {
                    Ok((ng, ng1)) => {
                        center += dir * h_len;
                        g = ng;
                        g1 = ng1;
                        on_step(center, g, g1);
                        advanced = true;
                        break;
                    }
                    Err(_) => h_len *= 0.5,
                }
            }
            if !advanced {
                return Err(Error::StepTolerance { z: center, rem: f64::NAN });
            }
        }
    }

    /// Continue along a polyline; no caching (used for loop checks).
    pub fn continue_along(&self, path: &[Complex64]) -> Result<(Complex64, Complex64)> {
        if path.is_empty() || (path[0] - self.z0).norm() != 0.0 {
            return Err(Error::invalid("path must start at the initial point"));
        }
        let mut g = self.g0;
        let mut g1 = self.g1;
        let mut at = self.z0;
        for &next in &path[1..] {
            let (ng, ng1) = self.walk(at, g, g1, next, |_, _, _| {})?;
            g = ng;
            g1 = ng1;
            at = next;
        }
        Ok((g, g1))
    }

    /// (g, g′) at z by continuation from z₀ along the straight segment,
    /// reusing cached waypoints when the direction matches.
    pub fn eval_pair(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let d = z - self.z0;
        let dist = d.norm();
        if dist == 0.0 {
            return Ok((self.g0, self.g1));
        }
        let dir = d / dist;
        let mut guard = self.cache.lock().unwrap();
        let reusable = guard
            .as_ref()
            .map(|c| (c.dir - dir).norm() < 1e-13)
            .unwrap_or(false);
        if !reusable {
            *guard = Some(PathCache { dir, pts: Vec::new() });
        }
        let cache = guard.as_mut().unwrap();
        let (at, g, g1, cached_len) = {
            let idx = cache.pts.partition_point(|&(s, _, _)| s <= dist + 1e-300);
            if idx > 0 {
                let (s, cg, cg1) = cache.pts[idx - 1];
                (self.z0 + dir * s, cg, cg1, s)
            } else {
                (self.z0, self.g0, self.g1, 0.0)
            }
        };
        // Extend the cache only with full steps strictly inside [0, dist].
        let mut new_pts: Vec<(f64, Complex64, Complex64)> = Vec::new();
        let (vg, vg1) = self.walk(at, g, g1, z, |p, pg, pg1| {
            let s = (p - self.z0).norm();
            if s > cached_len && s < dist - 1e-12 * dist.max(1.0) {
                new_pts.push((s, pg, pg1));
            }
        })?;
        cache.pts.extend(new_pts);
        Ok((vg, vg1))
    }
}

// ---------------------------------------------------------------------------
// Airy functions
// ---------------------------------------------------------------------------

/// Initial values at 0, frozen from Γ(1/3), Γ(2/3) via
/// Ai(0) = 3^{−2/3}/Γ(2/3), Ai′(0) = −3^{−1/3}/Γ(1/3),
/// Bi(0) = 3^{−1/6}/Γ(2/3), Bi′(0) = 3^{1/6}/Γ(1/3);
/// cross-checked in tests by a tanh-sinh quadrature of the Γ integral and
/// the reflection identity Γ(1/3)Γ(2/3) = 2π/√3.
#[allow(clippy::excessive_precision)]
pub const AI_ZERO: f64 = 0.355_028_053_887_817_24;
#[allow(clippy::excessive_precision)]
pub const AI_PRIME_ZERO: f64 = -0.258_819_403_792_806_8;
#[allow(clippy::excessive_precision)]
pub const BI_ZERO: f64 = 0.614_926_627_446_000_7;
#[allow(clippy::excessive_precision)]
pub const BI_PRIME_ZERO: f64 = 0.448_288_357_353_826_36;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AiryKind {
    Ai,
    Bi,
}

/// Ai or Bi as an ODE-continued entire function (g″ = z·g).
pub struct AiryFunction {
    kind: AiryKind,
    sol: TaylorOdeSolution,
}

impl AiryFunction {
    pub fn new(kind: AiryKind) -> Self {
        let q = PolynomialC::from_real(&[0.0, 1.0]);
        let (g0, g1) = match kind {
            AiryKind::Ai => (AI_ZERO, AI_PRIME_ZERO),
            AiryKind::Bi => (BI_ZERO, BI_PRIME_ZERO),
        };
        Self {
            kind,
            sol: TaylorOdeSolution::new(
                q,
                Complex64::new(0.0, 0.0),
                Complex64::new(g0, 0.0),
                Complex64::new(g1, 0.0),
            ),
        }
    }

    pub fn kind(&self) -> AiryKind {
        self.kind
    }

    pub fn value_and_deriv(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        self.sol.eval_pair(z)
    }

    pub fn solution(&self) -> &TaylorOdeSolution {
        &self.sol
    }
}

/// Convenience evaluation of Ai or Bi at a point.
pub fn airy(kind: AiryKind, z: Complex64) -> Result<Complex64> {
    Ok(AiryFunction::new(kind).value_and_deriv(z)?.0)
}

/// Convenience evaluation of Ai′ or Bi′.
pub fn airy_deriv(kind: AiryKind, z: Complex64) -> Result<Complex64> {
    Ok(AiryFunction::new(kind).value_and_deriv(z)?.1)
}

/// The real negative zeros of Bi follow −T(3π(4n−3)/8) and the complex pair
/// families follow e^{±iπ/3}T(3π(4n−1)/8 + (3 ln 2/4)i), with
/// T(t) = t^{2/3}(1 + 5/(48t²)); these are internal Newton seeds only, and
/// every reported zero is certified by its Newton residual.
fn asymptotic_t(t: Complex64) -> Complex64 {
    t.powf(2.0 / 3.0) * (1.0 + 5.0 / (48.0 * t * t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiZeroFamily {
    /// bₙ on the negative real axis.
    Real,
    /// βₙ in the upper sector π/3 < arg z < π/2 (conjugates mirror below).
    UpperComplex,
}

#[derive(Debug, Clone, Copy)]
pub struct BiZero {
    pub index: usize,
    pub location: Complex64,
    /// Bi′ at the zero.
    pub deriv: Complex64,
    /// |Bi/Bi′| at the accepted point, relative to 1 + |z|.
    pub residual: f64,
}

impl AiryFunction {
    fn newton_zero(&self, guess: Complex64, index: usize) -> Result<BiZero> {
        let mut z = guess;
        let mut best: Option<(Complex64, Complex64, f64)> = None;
        for _ in 0..60 {
            let (g, g1) = self.value_and_deriv(z)?;
            if g1.norm() == 0.0 {
                break;
            }
            let step = g / g1;
            let res = step.norm() / (1.0 + z.norm());
            if best.map(|(_, _, b)| res < b).unwrap_or(true) {
                best = Some((z - step, g1, res));
            }
            z -= step;
            if res < 1e-13 {
                break;
            }
            if (z - guess).norm() > 2.0 + 0.5 * guess.norm() {
                return Err(Error::NewtonFailed { index });
            }
        }
        match best {
            Some((z, _g1, res)) if res <= 1e-10 => {
                // Recompute the derivative exactly at the accepted point.
                let (_, g1) = self.value_and_deriv(z)?;
                Ok(BiZero { index, location: z, deriv: g1, residual: res })
            }
            _ => Err(Error::NewtonFailed { index }),
        }
    }

    /// Real-axis zeros (negative) of this Airy function.
    pub fn real_zeros(&self, count: usize) -> Result<Vec<BiZero>> {
        let offset = match self.kind {
            AiryKind::Bi => -3.0, // zeros of Bi near −T(3π(4n−3)/8)
            AiryKind::Ai => -1.0, // zeros of Ai near −T(3π(4n−1)/8)
        };
        let mut out = Vec::with_capacity(count);
        for n in 1..=count {
            let t = Complex64::new(3.0 * PI * (4.0 * n as f64 + offset) / 8.0, 0.0);
            let guess = -asymptotic_t(t);
            let zero = self.newton_zero(guess, n)?;
            out.push(zero);
        }
        // Sanity: strictly decreasing along the negative axis, all real.
        for w in out.windows(2) {
            if w[1].location.re >= w[0].location.re {
                return Err(Error::invalid("real Airy zeros out of order"));
            }
        }
        Ok(out)
    }
}

/// Zeros of Bi: the real family or the upper complex family.
pub fn bi_zeros(family: BiZeroFamily, count: usize) -> Result<Vec<BiZero>> {
    let bi = AiryFunction::new(AiryKind::Bi);
    match family {
        BiZeroFamily::Real => bi.real_zeros(count),
        BiZeroFamily::UpperComplex => {
            let rot = Complex64::from_polar(1.0, PI / 3.0);
            let mut out = Vec::with_capacity(count);
            for n in 1..=count {
                let t = Complex64::new(
                    3.0 * PI * (4.0 * n as f64 - 1.0) / 8.0,
                    3.0 * (2f64).ln() / 4.0,
                );
                let guess = rot * asymptotic_t(t);
                out.push(bi.newton_zero(guess, n)?);
            }
            Ok(out)
        }
    }
}

impl EntireHandle for AiryFunction {
    fn eval(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.value_and_deriv(z)?.0)
    }

    fn eval_deriv(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.value_and_deriv(z)?.1)
    }

    fn eval_second_deriv(&self, z: Complex64) -> Result<Complex64> {
        Ok(z * self.value_and_deriv(z)?.0)
    }

    fn zeros_within(&self, r: f64) -> Result<Vec<Complex64>> {
        let mut zeros: Vec<Complex64> = Vec::new();
        let count_for = |offset: f64| {
            let mut n = 1usize;
            while asymptotic_t(Complex64::new(
                3.0 * PI * (4.0 * n as f64 + offset) / 8.0,
                0.0,
            ))
            .norm()
                <= r + 2.0
            {
                n += 1;
            }
            n
        };
        match self.kind {
            AiryKind::Ai => {
                for z in self.real_zeros(count_for(-1.0))? {
                    zeros.push(z.location);
                }
            }
            AiryKind::Bi => {
                for z in self.real_zeros(count_for(-3.0))? {
                    zeros.push(z.location);
                }
                for z in bi_zeros(BiZeroFamily::UpperComplex, count_for(-1.0))? {
                    zeros.push(z.location);
                    zeros.push(z.location.conj());
                }
            }
        }
        zeros.retain(|z| z.norm() <= r);
        zeros.sort_unstable_by(|a, b| {
            (a.norm(), a.arg()).partial_cmp(&(b.norm(), b.arg())).unwrap()
        });
        Ok(zeros)
    }
}

/// The three-family expansion kernel of 1/Bi²: poles bₙ, βₙ, β̄ₙ with
/// coefficients 1/Bi′(·)², truncated symmetrically at `count` per family.
pub fn bi_inverse_square_expansion(count: usize) -> Result<KernelSum> {
    let real = bi_zeros(BiZeroFamily::Real, count)?;
    let upper = bi_zeros(BiZeroFamily::UpperComplex, count)?;
    let mut entries = Vec::with_capacity(3 * count);
    for z in &real {
        entries.push((z.location, 1.0 / (z.deriv * z.deriv)));
    }
    for z in &upper {
        let c = 1.0 / (z.deriv * z.deriv);
        entries.push((z.location, c));
        entries.push((z.location.conj(), c.conj()));
    }
    KernelSum::new(2, PoleSpec::explicit(entries)?)
}

/// Residuals |Σ_trunc + tail − 1/Bi(0)²| at z = 0 for each truncation, the
/// tail being completed by a power-law fit A n^{−5/3}(1 + B/n) to the
/// computed per-index terms (the honest finite-range proxy for the
/// expansion having no entire remainder).
pub fn bi_expansion_residual_at_zero(counts: &[usize]) -> Result<Vec<f64>> {
    let max = counts.iter().copied().max().unwrap_or(0);
    if max < 8 {
        return Err(Error::invalid("need at least 8 zeros per family"));
    }
    let real = bi_zeros(BiZeroFamily::Real, max)?;
    let upper = bi_zeros(BiZeroFamily::UpperComplex, max)?;
    // Per-index combined term at z = 0.
    let term = |n: usize| -> f64 {
        let b = &real[n - 1];
        let beta = &upper[n - 1];
        let tb = (1.0 / (b.deriv * b.deriv * b.location * b.location)).re;
        let tbeta =
            2.0 * (1.0 / (beta.deriv * beta.deriv * beta.location * beta.location)).re;
        tb + tbeta
    };
    let target = 1.0 / (BI_ZERO * BI_ZERO);
    let mut out = Vec::with_capacity(counts.len());
    for &count in counts {
        let mut acc = Accum::new();
        for n in 1..=count {
            acc.add(term(n));
        }
        // Fit T(n) ≈ A n^{−5/3} + C n^{−8/3} on the top half of the range.
        let lo = (count / 2).max(4);
        let (mut s11, mut s12, mut s22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for n in lo..=count {
            let x1 = (n as f64).powf(-5.0 / 3.0);
            let x2 = (n as f64).powf(-8.0 / 3.0);
            let y = term(n);
            s11 += x1 * x1;
            s12 += x1 * x2;
            s22 += x2 * x2;
            b1 += x1 * y;
            b2 += x2 * y;
        }
        let det = s11 * s22 - s12 * s12;
        let a_coef = (b1 * s22 - b2 * s12) / det;
        let c_coef = (s11 * b2 - s12 * b1) / det;
        let (t53, _) = power_tail(5.0 / 3.0, count)?;
        let (t83, _) = power_tail(8.0 / 3.0, count)?;
        let tail = a_coef * t53 + c_coef * t83;
        out.push((acc.value() + tail - target).abs());
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Closed-form entire handles
// ---------------------------------------------------------------------------

/// sin z with its zero lattice πn.
pub struct SinEntire;

impl EntireHandle for SinEntire {
    fn eval(&self, z: Complex64) -> Result<Complex64> {
        Ok(z.sin())
    }

    fn eval_deriv(&self, z: Complex64) -> Result<Complex64> {
        Ok(z.cos())
    }

    fn eval_second_deriv(&self, z: Complex64) -> Result<Complex64> {
        Ok(-z.sin())
    }

    fn zeros_within(&self, r: f64) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0)];
        let mut n = 1.0;
        while n * PI <= r {
            out.push(Complex64::new(n * PI, 0.0));
            out.push(Complex64::new(-n * PI, 0.0));
            n += 1.0;
        }
        out.sort_unstable_by(|a, b| {
            (a.norm(), a.arg()).partial_cmp(&(b.norm(), b.arg())).unwrap()
        });
        Ok(out)
    }
}

/// cos(z²), satisfying z·g″ − g′ + 4z³·g = 0; zeros ±uₙ and ±i·vₘ.
pub struct CosSquareEntire;

impl EntireHandle for CosSquareEntire {
    fn eval(&self, z: Complex64) -> Result<Complex64> {
        Ok((z * z).cos())
    }

    fn eval_deriv(&self, z: Complex64) -> Result<Complex64> {
        Ok(-2.0 * z * (z * z).sin())
    }

    fn eval_second_deriv(&self, z: Complex64) -> Result<Complex64> {
        let w = z * z;
        Ok(-2.0 * w.sin() - 4.0 * w * w.cos())
    }

    fn zeros_within(&self, r: f64) -> Result<Vec<Complex64>> {
        let mut out = Vec::new();
        let r2 = r * r;
        let mut n = 0f64;
        while PI / 2.0 + PI * n <= r2 {
            let u = (PI / 2.0 + PI * n).sqrt();
            out.push(Complex64::new(u, 0.0));
            out.push(Complex64::new(-u, 0.0));
            n += 1.0;
        }
        let mut m = 1f64;
        while PI * m - PI / 2.0 <= r2 {
            let v = (PI * m - PI / 2.0).sqrt();
            out.push(Complex64::new(0.0, v));
            out.push(Complex64::new(0.0, -v));
            m += 1.0;
        }
        out.sort_unstable_by(|a, b| {
            (a.norm(), a.arg()).partial_cmp(&(b.norm(), b.arg())).unwrap()
        });
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Named meromorphic examples
// ---------------------------------------------------------------------------

/// A closed-form handle paired with its kernel expansion.
pub struct ExamplePair {
    pub handle: MeromorphicParts,
    pub kernel: KernelSum,
}

/// f(z) = a/sin²(bz−c) together with its lattice kernel
/// (a/b²) Σ 1/(z − (πn+c)/b)², materialized through lattice index
/// `horizon_n`.
pub fn sine_family(
    a: Complex64,
    b: Complex64,
    c: Complex64,
    horizon_n: usize,
) -> Result<ExamplePair> {
    if a.norm() == 0.0 || b.norm() == 0.0 {
        return Err(Error::invalid("sine family needs a, b ≠ 0"));
    }
    let rule = Arc::new(SineLattice { a, b, c });
    let horizon = (PI * horizon_n as f64 + c.norm() + 1.0) / b.norm();
    let kernel = KernelSum::new(2, PoleSpec::generated(rule, horizon)?)?;
    let (ah, bh, ch) = (a, b, c);
    let handle = MeromorphicParts {
        eval: Box::new(move |z| {
            let s = (bh * z - ch).sin();
            if s.norm() < 1e-280 {
                return Err(Error::PoleHit { z, pole: z, dist: 0.0 });
            }
            Ok(ah / (s * s))
        }),
        deriv: Box::new(move |z| {
            let w = bh * z - ch;
            let s = w.sin();
            if s.norm() < 1e-280 {
                return Err(Error::PoleHit { z, pole: z, dist: 0.0 });
            }
            Ok(-2.0 * ah * bh * w.cos() / (s * s * s))
        }),
        poles: Box::new(move |r| {
            let bound = ((r * bh.norm() + ch.norm()) / PI).ceil() as i64 + 2;
            let mut v: Vec<(Complex64, u32)> = (-bound..=bound)
                .filter_map(|n| {
                    let t = (Complex64::new(PI * n as f64, 0.0) + ch) / bh;
                    (t.norm() <= r).then_some((t, 2))
                })
                .collect();
            v.sort_unstable_by(|x, y| {
                (x.0.norm(), x.0.arg()).partial_cmp(&(y.0.norm(), y.0.arg())).unwrap()
            });
            v
        }),
        zeros: Some(Box::new(|_| Vec::new())),
    };
    Ok(ExamplePair { handle, kernel })
}

/// z/cos²(z²) with its paired kernel Σ (1/4uₙ)[(z−uₙ)^{−2} − (z+uₙ)^{−2}],
/// truncated at `pairs` pole pairs per flank.
pub fn cos_square_example(pairs: usize) -> Result<ExamplePair> {
    let horizon = (PI / 2.0 + PI * pairs as f64).sqrt();
    let kernel = KernelSum::new(2, PoleSpec::generated(Arc::new(CosSquarePairs), horizon)?)?;
    let handle = MeromorphicParts {
        eval: Box::new(|z| {
            let c = (z * z).cos();
            if c.norm() < 1e-280 {
                return Err(Error::PoleHit { z, pole: z, dist: 0.0 });
            }
            Ok(z / (c * c))
        }),
        deriv: Box::new(|z| {
            let w = z * z;
            let c = w.cos();
            if c.norm() < 1e-280 {
                return Err(Error::PoleHit { z, pole: z, dist: 0.0 });
            }
            Ok(1.0 / (c * c) + 4.0 * w * w.sin() / (c * c * c))
        }),
        poles: Box::new(|r| {
            let zeros = CosSquareEntire.zeros_within(r).unwrap_or_default();
            zeros.into_iter().map(|t| (t, 2)).collect()
        }),
        zeros: Some(Box::new(|_| vec![(Complex64::new(0.0, 0.0), 1)])),
    };
    Ok(ExamplePair { handle, kernel })
}

// ---------------------------------------------------------------------------
// Canonical products (genus 0)
// ---------------------------------------------------------------------------

/// Π (1 − z/tₙ) over positive real zeros with Σ1/tₙ < ∞, evaluated in log
/// space. Power-rule products carry Euler–Maclaurin corrections for the
/// un-materialized tail, so they model the infinite product; explicit zero
/// lists are exact truncated models.
pub struct CanonicalProduct {
    zeros: Vec<f64>,
    /// Tail moments Σ_{n>N} tₙ^{−k}, k = 1..4 (zero for truncated models).
    tails: [f64; 4],
}

impl CanonicalProduct {
    /// Product with zeros tₙ = n^alpha, alpha > 1, materialized to `count`.
    pub fn power(alpha: f64, count: usize) -> Result<Self> {
        if !(alpha > 1.0) {
            return Err(Error::invalid("genus 0 needs alpha > 1"));
        }
        if count < 4 {
            return Err(Error::invalid("need at least 4 zeros"));
        }
        let zeros: Vec<f64> = (1..=count).map(|n| (n as f64).powf(alpha)).collect();
        let mut tails = [0.0; 4];
        for (k, t) in tails.iter_mut().enumerate() {
            let (v, b) = power_tail(alpha * (k as f64 + 1.0), count)?;
            *t = v + b.min(v * 1e-6);
        }
        Ok(Self { zeros, tails })
    }

    /// Truncated model from an explicit ascending list of positive zeros.
    pub fn from_zeros(zeros: Vec<f64>) -> Result<Self> {
        if zeros.is_empty() || zeros.windows(2).any(|w| w[0] >= w[1]) || zeros[0] <= 0.0 {
            return Err(Error::invalid("zeros must be positive and ascending"));
        }
        Ok(Self { zeros, tails: [0.0; 4] })
    }

    pub fn zeros(&self) -> &[f64] {
        &self.zeros
    }

    fn tail_log(&self, z: Complex64) -> Complex64 {
        // Σ_{n>N} ln(1−z/tₙ) ≈ −(z T₁ + z²T₂/2 + z³T₃/3 + z⁴T₄/4).
        -(z * self.tails[0]
            + z.powu(2) * self.tails[1] / 2.0
            + z.powu(3) * self.tails[2] / 3.0
            + z.powu(4) * self.tails[3] / 4.0)
    }

    fn tail_logderiv(&self, z: Complex64) -> Complex64 {
        // Σ_{n>N} 1/(z−tₙ) ≈ −(T₁ + z T₂ + z²T₃ + z³T₄).
        -(Complex64::new(self.tails[0], 0.0)
            + z * self.tails[1]
            + z.powu(2) * self.tails[2]
            + z.powu(3) * self.tails[3])
    }

    fn tail_logderiv_prime(&self, z: Complex64) -> Complex64 {
        -(Complex64::new(self.tails[1], 0.0)
            + 2.0 * z * self.tails[2]
            + 3.0 * z.powu(2) * self.tails[3])
    }

    fn nearest_zero(&self, z: Complex64) -> Option<(usize, f64)> {
        if z.im != 0.0 {
            return None;
        }
        let idx = self.zeros.partition_point(|&t| t < z.re);
        let mut best: Option<(usize, f64)> = None;
        for i in [idx.wrapping_sub(1), idx] {
            if let Some(&t) = self.zeros.get(i) {
                let d = (z.re - t).abs();
                if best.map(|(_, bd)| d < bd).unwrap_or(true) {
                    best = Some((i, d));
                }
            }
        }
        best
    }

    /// Index of the zero within machine distance of z, if any.
    fn zero_hit(&self, z: Complex64) -> Option<usize> {
        self.nearest_zero(z)
            .filter(|&(i, d)| d < 1e-12 * self.zeros[i].max(1.0))
            .map(|(i, _)| i)
    }

    /// Log-derivative Σ 1/(z−tₙ) plus the tail correction.
    pub fn log_derivative(&self, z: Complex64) -> Result<Complex64> {
        if self.zero_hit(z).is_some() {
            return Err(Error::PoleHit { z, pole: z, dist: 0.0 });
        }
        let mut acc = CAccum::new();
        for &t in &self.zeros {
            acc.add(1.0 / (z - t));
        }
        Ok(acc.value() + self.tail_logderiv(z))
    }

    /// g′(tₘ) by the product formula (−1/tₘ)·Π_{n≠m}(1 − tₘ/tₙ), with the
    /// tail corrections of the infinite product.
    pub fn deriv_at_zero(&self, m: usize) -> Result<f64> {
        let v = self.deriv_at_zero_truncated(m)?;
        let tm = Complex64::new(self.zeros[m], 0.0);
        Ok(v * self.tail_log(tm).re.exp())
    }

    /// Same, for the bare truncated product (no tail corrections): the
    /// self-consistent finite model.
    pub fn deriv_at_zero_truncated(&self, m: usize) -> Result<f64> {
        let tm = self.zeros.get(m).copied().ok_or_else(|| Error::invalid("zero index"))?;
        let mut log_abs = Accum::new();
        let mut negative = false;
        for (n, &t) in self.zeros.iter().enumerate() {
            if n == m {
                continue;
            }
            let factor = 1.0 - tm / t;
            if factor < 0.0 {
                negative = !negative;
            }
            log_abs.add(factor.abs().ln());
        }
        let sign = if negative { -1.0 } else { 1.0 };
        Ok(-sign * log_abs.value().exp() / tm)
    }
}

impl EntireHandle for CanonicalProduct {
    fn eval(&self, z: Complex64) -> Result<Complex64> {
        if self.zero_hit(z).is_some() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let mut acc = CAccum::new();
        for &t in &self.zeros {
            acc.add((1.0 - z / t).ln());
        }
        Ok((acc.value() + self.tail_log(z)).exp())
    }

    fn eval_deriv(&self, z: Complex64) -> Result<Complex64> {
        if let Some(m) = self.zero_hit(z) {
            return Ok(Complex64::new(self.deriv_at_zero(m)?, 0.0));
        }
        Ok(self.eval(z)? * self.log_derivative(z)?)
    }

    fn eval_second_deriv(&self, z: Complex64) -> Result<Complex64> {
        if let Some(m) = self.zero_hit(z) {
            // g″(tₘ) = 2 g′(tₘ) · Σ_{n≠m} 1/(tₘ−tₙ) (+ tail), from the
            // local expansion of the log-derivative at a simple zero.
            let tm = self.zeros[m];
            let mut acc = CAccum::new();
            for (n, &t) in self.zeros.iter().enumerate() {
                if n != m {
                    acc.add(Complex64::new(1.0 / (tm - t), 0.0));
                }
            }
            let regular = acc.value() + self.tail_logderiv(Complex64::new(tm, 0.0));
            return Ok(2.0 * self.eval_deriv(z)? * regular);
        }
        let g = self.eval(z)?;
        let ld = self.log_derivative(z)?;
        let mut acc = CAccum::new();
        for &t in &self.zeros {
            let d = z - t;
            acc.add(-1.0 / (d * d));
        }
        let ld_prime = acc.value() + self.tail_logderiv_prime(z);
        Ok(g * (ld * ld + ld_prime))
    }

    fn zeros_within(&self, r: f64) -> Result<Vec<Complex64>> {
        Ok(self
            .zeros
            .iter()
            .take_while(|&&t| t <= r)
            .map(|&t| Complex64::new(t, 0.0))
            .collect())
    }
}

// ---------------------------------------------------------------------------
// Krein-class regularized sums
// ---------------------------------------------------------------------------

/// Data for the regularized expansion of 1/g over simple zeros:
/// 1/g(z) = Σ (1/g′(tₙ))·[1/(z−tₙ) + 1/tₙ + … + z^{k−1}/tₙ^k] + R(z).
pub struct KreinSumSpec {
    pub zeros: Vec<f64>,
    pub derivs: Vec<f64>,
    pub k: u32,
    pub r_poly: PolynomialC,
}

impl KreinSumSpec {
    pub fn new(zeros: Vec<f64>, derivs: Vec<f64>, k: u32, r_poly: PolynomialC) -> Result<Self> {
        if zeros.len() != derivs.len() || zeros.is_empty() {
            return Err(Error::invalid("zeros/derivs length mismatch"));
        }
        if derivs.contains(&0.0) {
            return Err(Error::invalid("derivative values must be nonzero"));
        }
        Ok(Self { zeros, derivs, k, r_poly })
    }

    /// Spec from a truncated product: derivative values come from the bare
    /// truncated product, so the model is self-consistent at its truncation
    /// (the reference product handle carries the tail corrections instead).
    pub fn from_truncated_product(product: &CanonicalProduct, k: u32) -> Result<Self> {
        let zeros = product.zeros().to_vec();
        let derivs: Vec<f64> = (0..zeros.len())
            .map(|m| product.deriv_at_zero_truncated(m))
            .collect::<Result<_>>()?;
        Self::new(zeros, derivs, k, PolynomialC::zero())
    }

    /// Σ 1/(|tₙ|^{k+1}|g′(tₙ)|) over the truncation.
    pub fn weight(&self) -> f64 {
        let mut acc = Accum::new();
        for (&t, &d) in self.zeros.iter().zip(&self.derivs) {
            acc.add(1.0 / (t.powi(self.k as i32 + 1) * d.abs()));
        }
        acc.value()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KreinEval {
    pub value: Complex64,
    /// Bound on the terms above the truncation actually summed
    /// (zero when the whole model was consumed).
    pub tail_bound: f64,
}

/// Evaluate the regularized sum at z. Terms are consumed in increasing
/// |tₙ|; once |tₙ| ≥ 2|z| the bracket z^k/(tₙ^k(z−tₙ)) is bounded by
/// 2|z|^k/(|tₙ|^{k+1}|g′|), giving a certified early stop at `tol`.
pub fn krein_regularized_sum(spec: &KreinSumSpec, z: Complex64, tol: f64) -> Result<KreinEval> {
    // Suffix weights for the early-stop certificate.
    let n = spec.zeros.len();
    let mut suffix = vec![0.0; n + 1];
    let mut acc = Accum::new();
    for i in (0..n).rev() {
        acc.add(1.0 / (spec.zeros[i].powi(spec.k as i32 + 1) * spec.derivs[i].abs()));
        suffix[i] = acc.value();
    }
    let zk = z.norm().powi(spec.k as i32);
    let mut sum = CAccum::new();
    for (i, (&t, &d)) in spec.zeros.iter().zip(&spec.derivs).enumerate() {
        if t >= 2.0 * z.norm() && 2.0 * zk * suffix[i] <= tol {
            return Ok(KreinEval {
                value: sum.value() + spec.r_poly.eval(z),
                tail_bound: 2.0 * zk * suffix[i],
            });
        }
        let dz = z - t;
        if dz.norm() < 1e-13 * t.max(1.0) {
            return Err(Error::PoleHit { z, pole: Complex64::new(t, 0.0), dist: dz.norm() });
        }
        let mut bracket = 1.0 / dz;
        let mut pw = Complex64::new(1.0, 0.0);
        for j in 1..=spec.k {
            bracket += pw / t.powi(j as i32);
            pw *= z;
        }
        sum.add(bracket / d);
    }
    Ok(KreinEval { value: sum.value() + spec.r_poly.eval(z), tail_bound: 0.0 })
}

// ---------------------------------------------------------------------------
// The defect-½ construction
// ---------------------------------------------------------------------------

/// f = (1/g)′ = −g′/g² for the canonical product with zeros n^α: a kernel
/// sum with cₙ = −1/g′(tₙ), Σ|cₙ| < ∞ but Σcₙ = 0.
pub struct DefectHalfExample {
    pub kernel: KernelSum,
    /// Closed-form −g′/g² for cross-checking.
    pub cross_check: MeromorphicParts,
    pub product: Arc<CanonicalProduct>,
}

pub fn defect_half_example(alpha: f64, truncation: usize) -> Result<DefectHalfExample> {
    if !(alpha > 2.0) {
        return Err(Error::invalid("defect-½ example needs alpha > 2"));
    }
    let product = Arc::new(CanonicalProduct::power(alpha, truncation)?);
    let mut entries = Vec::with_capacity(truncation);
    for m in 0..truncation {
        let d = product.deriv_at_zero(m)?;
        let c = -1.0 / d;
        // |g′| grows superexponentially; beyond the f64 floor the
        // coefficients are numerically zero and the entries stop.
        if !c.is_finite() || c.abs() < 1e-300 {
            break;
        }
        entries.push((Complex64::new(product.zeros()[m], 0.0), Complex64::new(c, 0.0)));
    }
    let kernel = KernelSum::new(2, PoleSpec::explicit(entries)?)?;
    let p_eval = Arc::clone(&product);
    let p_deriv = Arc::clone(&product);
    let p_poles = Arc::clone(&product);
    let cross_check = MeromorphicParts {
        eval: Box::new(move |z| {
            let g = p_eval.eval(z)?;
            if g.norm() < 1e-280 {
                return Err(Error::PoleHit { z, pole: z, dist: 0.0 });
            }
            Ok(-p_eval.eval_deriv(z)? / (g * g))
        }),
        deriv: Box::new(move |z| {
            let g = p_deriv.eval(z)?;
            if g.norm() < 1e-280 {
                return Err(Error::PoleHit { z, pole: z, dist: 0.0 });
            }
            let g1 = p_deriv.eval_deriv(z)?;
            let g2 = p_deriv.eval_second_deriv(z)?;
            Ok(-g2 / (g * g) + 2.0 * g1 * g1 / (g * g * g))
        }),
        poles: Box::new(move |r| {
            p_poles
                .zeros()
                .iter()
                .take_while(|&&t| t <= r)
                .map(|&t| (Complex64::new(t, 0.0), 2))
                .collect()
        }),
        zeros: None,
    };
    Ok(DefectHalfExample { kernel, cross_check, product })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel_sum::kernel_sum_from_entire;
    use crate::nevanlinna::FunctionHandle;
    use crate::zero_finder::{winding_number, Contour};

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Γ(s) by tanh-sinh style quadrature of ∫ exp(su − eᵘ) du on the line.
    fn gamma_oracle(s: f64) -> f64 {
        let h = 1.0 / 16.0;
        let mut acc = Accum::new();
        let mut u = -120.0;
        while u <= 6.0 {
            acc.add((s * u - u.exp()).exp());
            u += h;
        }
        acc.value() * h
    }

    #[test]
    fn frozen_airy_constants_match_gamma_oracle() {
        let g13 = gamma_oracle(1.0 / 3.0);
        let g23 = gamma_oracle(2.0 / 3.0);
        // Reflection identity Γ(1/3)Γ(2/3) = 2π/√3.
        assert!((g13 * g23 - 2.0 * PI / 3f64.sqrt()).abs() < 1e-13);
        let ai0 = 3f64.powf(-2.0 / 3.0) / g23;
        let aip0 = -(3f64.powf(-1.0 / 3.0)) / g13;
        let bi0 = 3f64.powf(-1.0 / 6.0) / g23;
        let bip0 = 3f64.powf(1.0 / 6.0) / g13;
        assert!((ai0 - AI_ZERO).abs() < 5e-14, "{ai0}");
        assert!((aip0 - AI_PRIME_ZERO).abs() < 5e-14, "{aip0}");
        assert!((bi0 - BI_ZERO).abs() < 5e-14, "{bi0}");
        assert!((bip0 - BI_PRIME_ZERO).abs() < 5e-14, "{bip0}");
    }

    #[test]
    fn airy_at_origin_is_initial_data() {
        let bi = AiryFunction::new(AiryKind::Bi);
        let (g, g1) = bi.value_and_deriv(c64(0.0, 0.0)).unwrap();
        assert_eq!(g.re, BI_ZERO);
        assert_eq!(g1.re, BI_PRIME_ZERO);
    }

    #[test]
    fn wronskian_of_airy_pair() {
        let ai = AiryFunction::new(AiryKind::Ai);
        let bi = AiryFunction::new(AiryKind::Bi);
        for &z in &[
            c64(0.0, 0.0),
            c64(2.0, 0.0),
            c64(-3.0, 0.0),
            c64(1.0, 1.0),
            c64(-2.0, 1.5),
            c64(0.5, -2.0),
        ] {
            let (a, ap) = ai.value_and_deriv(z).unwrap();
            let (b, bp) = bi.value_and_deriv(z).unwrap();
            let w = a * bp - ap * b;
            assert!(
                (w - 1.0 / PI).norm() < 1e-10,
                "Wronskian off at {z}: {w} vs {}",
                1.0 / PI
            );
        }
    }

    #[test]
    fn bi_grows_on_positive_axis() {
        let bi = AiryFunction::new(AiryKind::Bi);
        let v2 = bi.eval(c64(2.0, 0.0)).unwrap().re;
        let v4 = bi.eval(c64(4.0, 0.0)).unwrap().re;
        let v8 = bi.eval(c64(8.0, 0.0)).unwrap().re;
        assert!(v2 > BI_ZERO && v4 / v2 > 2.0 && v8 / v4 > v4 / v2);
    }

    #[test]
    fn loop_continuation_returns_initial_data() {
        let bi = AiryFunction::new(AiryKind::Bi);
        let path = [
            c64(0.0, 0.0),
            c64(2.0, 0.0),
            c64(2.0, 2.0),
            c64(0.0, 2.0),
            c64(0.0, 0.0),
        ];
        let (g, g1) = bi.solution().continue_along(&path).unwrap();
        let tol = 10.0 * 1e-12;
        assert!((g.re - BI_ZERO).abs() < tol && g.im.abs() < tol, "{g}");
        assert!((g1.re - BI_PRIME_ZERO).abs() < tol && g1.im.abs() < tol);
    }

    #[test]
    fn first_bi_zero_bracketed_by_sign_change_oracle() {
        // Bisection oracle: Bi changes sign on [−1.2, −1.1].
        let bi = AiryFunction::new(AiryKind::Bi);
        let mut lo = -1.2;
        let mut hi = -1.1;
        let f_lo = bi.eval(c64(lo, 0.0)).unwrap().re;
        assert!(f_lo * bi.eval(c64(hi, 0.0)).unwrap().re < 0.0);
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            let fm = bi.eval(c64(mid, 0.0)).unwrap().re;
            if fm * f_lo > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        let b1 = bi_zeros(BiZeroFamily::Real, 1).unwrap()[0];
        assert!((b1.location.re - oracle).abs() < 1e-9);
        assert!((b1.location.re + 1.17371).abs() < 1e-4);
    }

    #[test]
    fn bi_zero_modulus_and_slope_laws() {
        let zeros = bi_zeros(BiZeroFamily::Real, 40).unwrap();
        for (i, z) in zeros.iter().enumerate() {
            let n = (i + 1) as f64;
            let q = z.location.norm() / n.powf(2.0 / 3.0);
            assert!(q > 0.5 && q < 3.5, "|b_{}|/n^(2/3) = {q}", i + 1);
            let s = z.deriv.norm() / n.powf(1.0 / 6.0);
            assert!(s > 0.5 && s < 3.5, "|Bi'(b_{})|/n^(1/6) = {s}", i + 1);
            assert!(z.residual <= 1e-10);
        }
    }

    #[test]
    fn bi_zeros_confirmed_by_winding() {
        let bi = AiryFunction::new(AiryKind::Bi);
        let handle = MeromorphicParts {
            eval: Box::new(move |z| AiryFunction::new(AiryKind::Bi).eval(z)),
            deriv: Box::new(move |z| AiryFunction::new(AiryKind::Bi).eval_deriv(z)),
            poles: Box::new(|_| Vec::new()),
            zeros: None,
        };
        for z in bi_zeros(BiZeroFamily::Real, 3).unwrap() {
            let v = bi.eval(z.location).unwrap();
            assert!(v.norm() <= 1e-9 * (1.0 + z.location.norm()));
            let w = winding_number(
                &handle,
                &Contour::Circle { center: z.location, radius: 1e-3 },
            )
            .unwrap();
            assert_eq!(w.winding, 1);
        }
        for z in bi_zeros(BiZeroFamily::UpperComplex, 3).unwrap() {
            assert!(z.location.arg() > PI / 3.0 && z.location.arg() < PI / 2.0);
            let w = winding_number(
                &handle,
                &Contour::Circle { center: z.location, radius: 1e-3 },
            )
            .unwrap();
            assert_eq!(w.winding, 1);
        }
    }

    #[test]
    fn bi_expansion_is_real_and_converging() {
        let kernel = bi_inverse_square_expansion(24).unwrap();
        // Conjugation symmetry of the pole data makes the sum real on ℝ.
        let v = kernel.evaluate(c64(0.5, 0.0), 1e-9);
        let v = match v {
            Ok(r) => r.value,
            Err(_) => panic!("evaluation failed"),
        };
        assert!(v.im.abs() < 1e-10);
        // Σ|c|/|t|² finite and tails decreasing.
        let w10 = kernel.poles().tail_weight(10.0, 2);
        let w20 = kernel.poles().tail_weight(20.0, 2);
        assert!(w10.is_finite() && w20 <= w10);
        // Raw truncation gap at z = 0 decreases as the count doubles.
        let target = 1.0 / (BI_ZERO * BI_ZERO);
        let gap = |count: usize| {
            let k = bi_inverse_square_expansion(count).unwrap();
            (k.evaluate(c64(0.0, 0.0), 1e-12).unwrap().value.re - target).abs()
        };
        let (g6, g12, g24) = (gap(6), gap(12), gap(24));
        assert!(g12 < g6 && g24 < g12, "raw gaps {g6} {g12} {g24}");
    }

    #[test]
    fn kernel_from_sin_recovers_lattice() {
        let p = PolynomialC::from_real(&[1.0]);
        let k = kernel_sum_from_entire(&SinEntire, &p, 25).unwrap();
        // cₙ = 1/cos²(πn) = 1 at every lattice zero.
        for e in k.poles().entries() {
            assert!((e.c - c64(1.0, 0.0)).norm() < 1e-12);
            assert!((e.t.re / PI).round() * PI - e.t.re < 1e-12);
        }
        // Matches 1/sin² pointwise within certified bounds.
        let z = c64(1.3, 0.4);
        let direct = 1.0 / (z.sin() * z.sin());
        let via = k.evaluate(z, 1e-3).unwrap();
        // The 25-zero truncated model misses the far lattice tail (~0.02 here).
        assert!((via.value - direct).norm() <= via.tail_bound + 0.05);
    }

    #[test]
    fn kernel_from_cos_square_pairs_up() {
        let p = PolynomialC::new(vec![c64(0.0, 0.0), c64(1.0, 0.0)]);
        let k = kernel_sum_from_entire(&CosSquareEntire, &p, 8).unwrap();
        // Coefficients at ±u are ∓... odd: c(−u) = −c(u) (§ pairing).
        let entries = k.poles().entries();
        for e in entries {
            let partner = entries.iter().find(|p| (p.t + e.t).norm() < 1e-12).unwrap();
            assert!((partner.c + e.c).norm() < 1e-12);
        }
        // And the coefficient at a real zero u is P(u)/g′(u)² = 1/(4u).
        let first_real = entries
            .iter()
            .find(|e| e.t.im == 0.0 && e.t.re > 0.0)
            .unwrap();
        let expect = 1.0 / (4.0 * first_real.t.re);
        assert!((first_real.c.re - expect).abs() < 1e-12);
    }

    #[test]
    fn sine_family_handle_and_kernel_agree() {
        let pair = sine_family(c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), 2_000).unwrap();
        for &z in &[c64(PI / 2.0, 0.0), c64(0.0, 1.0), c64(1.2, -0.7)] {
            let h = pair.handle.eval(z, 1e-12).unwrap();
            let k = pair.kernel.evaluate(z, 1e-9).unwrap();
            assert!((h - k.value).norm() <= k.tail_bound + 1e-9, "z={z}");
        }
        // 1/sin²(i) = −1/sinh²(1).
        let v = pair.handle.eval(c64(0.0, 1.0), 1e-12).unwrap();
        let expect = -1.0 / (1f64.sinh() * 1f64.sinh());
        assert!((v - c64(expect, 0.0)).norm() < 1e-12);
        // b ↦ 2b: poles halve spacing, coefficients quarter.
        let pair2 = sine_family(c64(1.0, 0.0), c64(2.0, 0.0), c64(0.0, 0.0), 100).unwrap();
        let c1 = pair.kernel.poles().entries()[0].c;
        let c2 = pair2.kernel.poles().entries()[0].c;
        assert!((c2 - c1 / 4.0).norm() < 1e-15);
    }

    #[test]
    fn cos_square_handle_and_kernel_agree() {
        let pair = cos_square_example(10_000).unwrap();
        // Odd symmetry pins f(0) = 0.
        let v0 = pair.kernel.evaluate(c64(0.0, 0.0), 1e-10).unwrap();
        assert!(v0.value.norm() <= v0.tail_bound + 1e-12);
        let z = c64(1.0, 0.0);
        let h = pair.handle.eval(z, 1e-12).unwrap();
        let k = pair.kernel.evaluate(z, 1e-7).unwrap();
        let expect = 1.0 / (1f64.cos() * 1f64.cos());
        assert!((h - c64(expect, 0.0)).norm() < 1e-12);
        assert!((k.value - h).norm() <= 1e-6, "{} vs {h}", k.value);
    }

    #[test]
    fn canonical_product_oracles() {
        // Empty-argument normalization: g(0) = 1.
        let g = CanonicalProduct::power(3.0, 2_000).unwrap();
        assert!((g.eval(c64(0.0, 0.0)).unwrap() - c64(1.0, 0.0)).norm() < 1e-14);
        // Direct-product oracle at z = −1: Π(1 + n^{−3}) with a huge cutoff.
        let mut acc = Accum::new();
        for n in 1..=2_000_000u64 {
            acc.add((1.0 + (n as f64).powi(-3)).ln());
        }
        let oracle = acc.value().exp();
        let v = g.eval(c64(-1.0, 0.0)).unwrap();
        assert!((v.re - oracle).abs() < 1e-10, "{} vs {oracle}", v.re);
        // Finite-difference oracle for g′(t₁).
        let t1 = g.zeros()[0];
        let h = 1e-6;
        let fd = (g.eval(c64(t1 + h, 0.0)).unwrap().re
            - g.eval(c64(t1 - h, 0.0)).unwrap().re)
            / (2.0 * h);
        let exact = g.deriv_at_zero(0).unwrap();
        assert!((fd - exact).abs() < 1e-6 * exact.abs().max(1.0));
        // Log-derivative consistency away from zeros.
        let z = c64(-2.5, 0.4);
        let num = (g.eval(c64(-2.5 + 1e-6, 0.4)).unwrap() - g.eval(c64(-2.5 - 1e-6, 0.4)).unwrap())
            / (2e-6 * g.eval(z).unwrap());
        assert!((num - g.log_derivative(z).unwrap()).norm() < 1e-6);
    }

    #[test]
    fn krein_identity_for_cubic_zeros() {
        let g = CanonicalProduct::power(3.0, 2_000).unwrap();
        let spec = KreinSumSpec::from_truncated_product(&g, 0).unwrap();
        assert!(spec.weight().is_finite());
        for &z in &[c64(-2.0, 0.0), c64(0.0, 5.0), c64(10.0, 10.0)] {
            let sum = krein_regularized_sum(&spec, z, 1e-14).unwrap();
            let direct = 1.0 / g.eval(z).unwrap();
            assert!(
                (sum.value - direct).norm() < 1e-6,
                "z={z}: {} vs {direct}",
                sum.value
            );
        }
    }

    #[test]
    fn krein_single_zero_and_k0_reduction() {
        // Single zero t, derivative s: the k = 0 sum is exactly 1/(s(z−t)).
        let spec = KreinSumSpec::new(vec![2.0], vec![3.0], 0, PolynomialC::zero()).unwrap();
        let z = c64(1.0, 1.0);
        let v = krein_regularized_sum(&spec, z, 1e-12).unwrap();
        let expect = 1.0 / (3.0 * (z - 2.0));
        assert!((v.value - expect).norm() < 1e-15);
        // k = 0 bracket carries no regularizing polynomial terms: evaluating
        // with k = 1 at z = 0 agrees (the added term is z⁰/t ⇒ shifts by Σ1/(t g′)).
        let spec1 = KreinSumSpec::new(vec![2.0], vec![3.0], 1, PolynomialC::zero()).unwrap();
        let v1 = krein_regularized_sum(&spec1, z, 1e-12).unwrap();
        assert!((v1.value - (expect + 1.0 / 6.0)).norm() < 1e-15);
    }

    #[test]
    fn krein_pole_hit() {
        let spec = KreinSumSpec::new(vec![2.0], vec![3.0], 0, PolynomialC::zero()).unwrap();
        assert!(matches!(
            krein_regularized_sum(&spec, c64(2.0, 0.0), 1e-12),
            Err(Error::PoleHit { .. })
        ));
    }

    #[test]
    fn defect_half_matches_closed_form() {
        let ex = defect_half_example(3.0, 400).unwrap();
        let z = c64(-1.0, 0.0);
        let k = ex.kernel.evaluate(z, 1e-12).unwrap();
        let direct = ex.cross_check.eval(z, 1e-12).unwrap();
        assert!((k.value - direct).norm() < 1e-8, "{} vs {direct}", k.value);
        // Σcₙ → 0: partial coefficient sums shrink as truncation grows.
        // (|Σ_{n≤N} c| ≈ |c_{N+1}| ~ e^{−2.5N}, so modest truncations keep
        // the comparison above the f64 summation noise floor.)
        let (s6, _) = defect_half_example(3.0, 6).unwrap().kernel.poles().coefficient_sum();
        let (s12, _) = defect_half_example(3.0, 12).unwrap().kernel.poles().coefficient_sum();
        assert!(s12.norm() < 1e-2 * s6.norm(), "{} vs {}", s12.norm(), s6.norm());
        assert!(s12.norm() < 1e-4, "Σc = {s12}");
    }

    #[test]
    fn defect_half_rejects_small_alpha() {
        assert!(defect_half_example(2.0, 100).is_err());
    }
}
