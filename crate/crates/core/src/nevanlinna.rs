//! Nevanlinna characteristics: n(r), N(r), m(r), T(r), order and defect.
//!
//! Everything operates through [`FunctionHandle`], the uniform interface for
//! kernel sums, closed forms and ODE-defined functions. Counting follows the
//! standard convention: poles enter with multiplicity (double poles count 2),
//! and N(r) is the exact step integral Σ mult·log(r/|t|) under the
//! normalization n(0,f) = 0, which requires 0 outside the pole set.

use num_complex::Complex64;

use crate::kernel_sum::{KernelSum, POLE_HIT_REL};
use crate::quad::{integrate, QuadOptions};
use crate::util::{ols, Accum};
use crate::{Error, Result};

/// Uniform evaluable meromorphic function.
pub trait FunctionHandle: Sync {
    fn eval(&self, z: Complex64, tol: f64) -> Result<Complex64>;
    fn eval_deriv(&self, z: Complex64, tol: f64) -> Result<Complex64>;

    /// Poles with |z| ≤ r as (location, multiplicity), ordered by modulus.
    /// Must be monotone: the list at r is a prefix of the list at r' ≥ r.
    fn poles_within(&self, r: f64) -> Vec<(Complex64, u32)>;

    /// Closed-form zero oracle, when one exists.
    fn zeros_within(&self, _r: f64) -> Option<Vec<(Complex64, u32)>> {
        None
    }

    /// Value together with a rounding-noise floor below which the phase is
    /// meaningless; closed forms report zero noise.
    fn eval_noise(&self, z: Complex64, tol: f64) -> Result<(Complex64, f64)> {
        Ok((self.eval(z, tol)?, 0.0))
    }
}

impl FunctionHandle for KernelSum {
    fn eval(&self, z: Complex64, tol: f64) -> Result<Complex64> {
        Ok(self.evaluate(z, tol)?.value)
    }

    fn eval_deriv(&self, z: Complex64, tol: f64) -> Result<Complex64> {
        Ok(self.evaluate_derivative(z, tol)?.value)
    }

    fn poles_within(&self, r: f64) -> Vec<(Complex64, u32)> {
        self.poles()
            .entries()
            .iter()
            .take_while(|e| e.t.norm() <= r)
            .map(|e| (e.t, self.order()))
            .collect()
    }

    fn eval_noise(&self, z: Complex64, tol: f64) -> Result<(Complex64, f64)> {
        let (r, noise) = self.evaluate_with_noise(z, tol)?;
        Ok((r.value, noise))
    }
}

type EvalFn = Box<dyn Fn(Complex64) -> Result<Complex64> + Send + Sync>;
type PolesFn = Box<dyn Fn(f64) -> Vec<(Complex64, u32)> + Send + Sync>;

/// Meromorphic handle assembled from closures (closed forms, reciprocals,
/// cross-check models).
pub struct MeromorphicParts {
    pub eval: EvalFn,
    pub deriv: EvalFn,
    pub poles: PolesFn,
    pub zeros: Option<PolesFn>,
}

impl FunctionHandle for MeromorphicParts {
    fn eval(&self, z: Complex64, _tol: f64) -> Result<Complex64> {
        (self.eval)(z)
    }

    fn eval_deriv(&self, z: Complex64, _tol: f64) -> Result<Complex64> {
        (self.deriv)(z)
    }

    fn poles_within(&self, r: f64) -> Vec<(Complex64, u32)> {
        (self.poles)(r)
    }

    fn zeros_within(&self, r: f64) -> Option<Vec<(Complex64, u32)>> {
        self.zeros.as_ref().map(|f| f(r))
    }
}

/// Rational function from factor data; the bookkeeping oracle for winding
/// and zero-location self-tests.
pub struct RationalFunction {
    scale: Complex64,
    zero_factors: Vec<(Complex64, u32)>,
    pole_factors: Vec<(Complex64, u32)>,
    num: crate::poly::PolynomialC,
    den: crate::poly::PolynomialC,
    dnum: crate::poly::PolynomialC,
    dden: crate::poly::PolynomialC,
}

impl RationalFunction {
    pub fn from_factors(
        scale: Complex64,
        zeros: Vec<(Complex64, u32)>,
        poles: Vec<(Complex64, u32)>,
    ) -> Result<Self> {
        if scale.norm() == 0.0 {
            return Err(Error::invalid("rational scale must be nonzero"));
        }
        for (a, _) in &zeros {
            if poles.iter().any(|(b, _)| a == b) {
                return Err(Error::invalid("common zero/pole factor"));
            }
        }
        let expand = |factors: &[(Complex64, u32)]| {
            let mut roots = Vec::new();
            for &(a, m) in factors {
                for _ in 0..m {
                    roots.push(a);
                }
            }
            crate::poly::PolynomialC::from_roots(&roots)
        };
        let num = expand(&zeros).scale(scale);
        let den = expand(&poles);
        let dnum = num.derivative();
        let dden = den.derivative();
        Ok(Self { scale, zero_factors: zeros, pole_factors: poles, num, den, dnum, dden })
    }

    /// Seeded random instance: at most `max_factors` total factor
    /// multiplicity split between zeros and poles, all inside |z| ≤ radius.
    pub fn random_in_disk(
        rng: &mut crate::util::SplitMix64,
        max_factors: u32,
        radius: f64,
    ) -> Self {
        loop {
            let total = 1 + rng.below(max_factors as usize) as u32;
            let mut zeros: Vec<(Complex64, u32)> = Vec::new();
            let mut poles: Vec<(Complex64, u32)> = Vec::new();
            let mut budget = total;
            while budget > 0 {
                let mult = 1 + rng.below(budget.min(3) as usize) as u32;
                let loc = loop {
                    let p = Complex64::new(rng.uniform(-radius, radius), rng.uniform(-radius, radius));
                    if p.norm() <= radius
                        && zeros.iter().chain(&poles).all(|(q, _)| (p - *q).norm() > 0.05)
                    {
                        break p;
                    }
                };
                if rng.next_f64() < 0.5 {
                    zeros.push((loc, mult));
                } else {
                    poles.push((loc, mult));
                }
                budget -= mult;
            }
            let theta = rng.uniform(0.0, std::f64::consts::TAU);
            let mag = 10f64.powf(rng.uniform(-1.0, 1.0));
            let scale = Complex64::from_polar(mag, theta);
            if let Ok(r) = Self::from_factors(scale, zeros, poles) {
                return r;
            }
        }
    }

    pub fn scale(&self) -> Complex64 {
        self.scale
    }

    pub fn zero_factors(&self) -> &[(Complex64, u32)] {
        &self.zero_factors
    }

    pub fn pole_factors(&self) -> &[(Complex64, u32)] {
        &self.pole_factors
    }
}

impl FunctionHandle for RationalFunction {
    fn eval(&self, z: Complex64, _tol: f64) -> Result<Complex64> {
        for (b, _) in &self.pole_factors {
            if (z - b).norm() < POLE_HIT_REL * b.norm().max(1.0) {
                return Err(Error::PoleHit { z, pole: *b, dist: (z - b).norm() });
            }
        }
        Ok(self.num.eval(z) / self.den.eval(z))
    }

    fn eval_deriv(&self, z: Complex64, _tol: f64) -> Result<Complex64> {
        for (b, _) in &self.pole_factors {
            if (z - b).norm() < POLE_HIT_REL * b.norm().max(1.0) {
                return Err(Error::PoleHit { z, pole: *b, dist: (z - b).norm() });
            }
        }
        let d = self.den.eval(z);
        Ok((self.dnum.eval(z) * d - self.num.eval(z) * self.dden.eval(z)) / (d * d))
    }

    fn poles_within(&self, r: f64) -> Vec<(Complex64, u32)> {
        let mut v: Vec<(Complex64, u32)> =
            self.pole_factors.iter().filter(|(b, _)| b.norm() <= r).copied().collect();
        v.sort_unstable_by(|a, b| a.0.norm().partial_cmp(&b.0.norm()).unwrap());
        v
    }

    fn zeros_within(&self, r: f64) -> Option<Vec<(Complex64, u32)>> {
        let mut v: Vec<(Complex64, u32)> =
            self.zero_factors.iter().filter(|(a, _)| a.norm() <= r).copied().collect();
        v.sort_unstable_by(|a, b| a.0.norm().partial_cmp(&b.0.norm()).unwrap());
        Some(v)
    }
}

/// n(r, f): poles counted with multiplicity in |z| ≤ r.
pub fn pole_counting(h: &dyn FunctionHandle, r: f64) -> u64 {
    h.poles_within(r).iter().map(|&(_, m)| m as u64).sum()
}

/// N(r, f) as the exact step integral Σ mult·log(r/|t|); requires 0 ∉ T.
pub fn integrated_counting(h: &dyn FunctionHandle, r: f64) -> Result<f64> {
    integrated_from_moduli(
        h.poles_within(r).iter().map(|&(t, m)| (t.norm(), m)),
        r,
    )
}

/// Step integral from (modulus, multiplicity) data.
pub fn integrated_from_moduli(
    moduli: impl IntoIterator<Item = (f64, u32)>,
    r: f64,
) -> Result<f64> {
    let mut acc = Accum::new();
    for (t, m) in moduli {
        if t == 0.0 {
            return Err(Error::PoleAtOrigin);
        }
        if t <= r {
            acc.add(m as f64 * (r / t).ln());
        }
    }
    Ok(acc.value())
}

/// N(r, 1/f) from zero counts on a refinement grid: each count jump is
/// attributed to the geometric midpoint of its grid interval, so the
/// per-zero attribution error is at most half the grid's log-spacing.
pub fn integrated_from_step_counts(radii: &[f64], counts: &[u64], r: f64) -> Result<f64> {
    if radii.len() != counts.len() || radii.is_empty() {
        return Err(Error::invalid("radii/counts length mismatch"));
    }
    if counts[0] != 0 {
        return Err(Error::invalid(
            "count grid must start below the first zero (counts[0] = 0)",
        ));
    }
    let mut acc = Accum::new();
    for j in 1..radii.len() {
        if radii[j] <= radii[j - 1] {
            return Err(Error::invalid("count grid radii must increase"));
        }
        let jump = counts[j].saturating_sub(counts[j - 1]);
        if jump > 0 {
            let mid = (radii[j - 1] * radii[j]).sqrt();
            if mid <= r {
                acc.add(jump as f64 * (r / mid).ln());
            }
        }
    }
    Ok(acc.value())
}

/// m(r, f): circle mean of log⁺|f|, by adaptive quadrature to `tol`.
///
/// Radii at pole moduli are handled by resolution-limited refinement (the
/// log⁺ spike is integrable); the reported error covers the slivers.
pub fn proximity(h: &dyn FunctionHandle, r: f64, tol: f64) -> Result<(f64, f64)> {
    use std::f64::consts::TAU;
    let eval_tol = 1e-12;
    let q = integrate(
        |phi: f64| {
            let z = Complex64::from_polar(r, phi);
            let v = match h.eval(z, eval_tol) {
                Ok(v) => v,
                Err(Error::ToleranceUnreachable { best, .. }) if best < 1e-3 => {
                    h.eval(z, best * 4.0)?
                }
                Err(e) => return Err(e),
            };
            Ok(v.norm().ln().max(0.0))
        },
        0.0,
        TAU,
        QuadOptions { tol: tol * TAU, ..Default::default() },
    )?;
    let err = q.error / TAU;
    if err > 4.0 * tol {
        return Err(Error::QuadBudget { err, tol });
    }
    Ok((q.value / TAU, err))
}

/// One characteristic evaluation: (N, m, T) with the quadrature error.
#[derive(Debug, Clone, Copy)]
pub struct Characteristic {
    pub n_count: u64,
    pub n_integrated: f64,
    pub m_prox: f64,
    pub t: f64,
    pub quad_err: f64,
}

pub fn characteristic(h: &dyn FunctionHandle, r: f64, tol: f64) -> Result<Characteristic> {
    let n_count = pole_counting(h, r);
    let n_integrated = integrated_counting(h, r)?;
    let (m_prox, quad_err) = proximity(h, r, tol)?;
    Ok(Characteristic { n_count, n_integrated, m_prox, t: n_integrated + m_prox, quad_err })
}

#[derive(Debug, Clone)]
pub struct CharRow {
    pub r: f64,
    pub n_poles: u64,
    pub n_integrated: f64,
    pub m_prox: f64,
    pub t: f64,
    pub zero_count: Option<u64>,
    pub n_zeros: Option<f64>,
    pub quad_err: f64,
}

/// Table of characteristics over an increasing radius grid.
#[derive(Debug, Clone, Default)]
pub struct CharacteristicTable {
    pub rows: Vec<CharRow>,
}

/// Zero counts on a (finer) radius grid, as produced by the zero finder.
#[derive(Debug, Clone)]
pub struct ZeroCountData {
    pub radii: Vec<f64>,
    pub counts: Vec<u64>,
}

impl CharacteristicTable {
    pub fn compute(
        h: &dyn FunctionHandle,
        radii: &[f64],
        tol: f64,
        zero_data: Option<&ZeroCountData>,
    ) -> Result<Self> {
        if radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("radii must be strictly increasing"));
        }
        let mut rows = Vec::with_capacity(radii.len());
        for &r in radii {
            let ch = characteristic(h, r, tol)?;
            let (zero_count, n_zeros) = match zero_data {
                Some(zd) => {
                    let idx = zd.radii.partition_point(|&x| x <= r);
                    let count = if idx == 0 { 0 } else { zd.counts[idx - 1] };
                    let nz = integrated_from_step_counts(&zd.radii, &zd.counts, r)?;
                    (Some(count), Some(nz))
                }
                None => (None, None),
            };
            rows.push(CharRow {
                r,
                n_poles: ch.n_count,
                n_integrated: ch.n_integrated,
                m_prox: ch.m_prox,
                t: ch.t,
                zero_count,
                n_zeros,
                quad_err: ch.quad_err,
            });
        }
        Ok(Self { rows })
    }

    /// CSV body with the fixed header r,n,N,m,T,zero_count,N_zeros,quad_err.
    pub fn to_csv(&self) -> String {
        use crate::util::fmt_f64 as f;
        let mut s = String::from("r,n,N,m,T,zero_count,N_zeros,quad_err\n");
        for row in &self.rows {
            let zc = row.zero_count.map(|v| v.to_string()).unwrap_or_default();
            let nz = row.n_zeros.map(f).unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                f(row.r),
                row.n_poles,
                f(row.n_integrated),
                f(row.m_prox),
                f(row.t),
                zc,
                nz,
                f(row.quad_err)
            ));
        }
        s
    }
}

/// Which table column an order estimate fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableColumn {
    NPoles,
    NIntegrated,
    T,
    NZeros,
}

fn column_value(row: &CharRow, col: TableColumn) -> Option<f64> {
    match col {
        TableColumn::NPoles => Some(row.n_poles as f64),
        TableColumn::NIntegrated => Some(row.n_integrated),
        TableColumn::T => Some(row.t),
        TableColumn::NZeros => row.n_zeros,
    }
}

/// Least-squares slope of log(column) against log r over the top half of
/// the radii; returns (slope, rms residual).
pub fn order_estimate(table: &CharacteristicTable, col: TableColumn) -> Result<(f64, f64)> {
    if table.rows.len() < 6 {
        return Err(Error::DegenerateFit("need at least 6 rows".into()));
    }
    let r_lo = table.rows.first().unwrap().r;
    let r_hi = table.rows.last().unwrap().r;
    if r_hi / r_lo < 100.0 {
        return Err(Error::DegenerateFit("radii must span two decades".into()));
    }
    let half = table.rows.len() / 2;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for row in &table.rows[half..] {
        let v = column_value(row, col).ok_or(Error::MissingZeroCounts)?;
        if v <= 0.0 {
            return Err(Error::DegenerateFit(format!("nonpositive column value {v} at r={}", row.r)));
        }
        xs.push(row.r.ln());
        ys.push(v.ln());
    }
    let (slope, _icpt, rms) = ols(&xs, &ys);
    Ok((slope, rms))
}

#[derive(Debug, Clone)]
pub struct DefectEstimate {
    /// 1 − max over the top half of N(r,1/f)/T(r,f): a finite-range proxy
    /// for the defect's limsup, never the limit itself.
    pub delta_proxy: f64,
    /// The full ratio sequence (r, N(r,1/f)/T(r,f)).
    pub ratios: Vec<(f64, f64)>,
}

pub fn defect_estimate(table: &CharacteristicTable) -> Result<DefectEstimate> {
    let mut ratios = Vec::new();
    for row in &table.rows {
        let nz = row.n_zeros.ok_or(Error::MissingZeroCounts)?;
        if row.t > 0.0 {
            ratios.push((row.r, nz / row.t));
        }
    }
    if ratios.is_empty() {
        return Err(Error::MissingZeroCounts);
    }
    let half = ratios.len() / 2;
    let max_ratio = ratios[half..].iter().map(|&(_, q)| q).fold(f64::MIN, f64::max);
    Ok(DefectEstimate { delta_proxy: 1.0 - max_ratio, ratios })
}

/// Geometric radius grid r₀·q^k, snapped outside the exclusion set and away
/// from pole moduli (each radius moves to the geometric midpoint of its
/// modulus gap when too close to a pole circle for contour work).
pub fn geometric_radii(r0: f64, ratio: f64, count: usize) -> Result<Vec<f64>> {
    if !(r0 > 0.0 && ratio > 1.0) {
        return Err(Error::invalid("need r0 > 0 and ratio > 1"));
    }
    Ok((0..count).map(|k| r0 * ratio.powi(k as i32)).collect())
}

/// Full grid preparation: snap above the exclusion set, clear the pole
/// moduli by the relative margin, and enforce strict monotonicity.
pub fn prepare_radius_grid(
    radii: &[f64],
    pole_moduli: &[f64],
    exclusion: &crate::kernel_sum::ExclusionSet,
    rel: f64,
) -> Vec<f64> {
    let snapped: Vec<f64> = radii.iter().map(|&r| exclusion.snap_above(r)).collect();
    snap_radii_clear(&snapped, pole_moduli, rel)
}

/// Snap each radius to clear the pole moduli by at least `rel` · r,
/// moving to the geometric midpoint of the enclosing modulus gap when
/// violated, then enforce strict monotonicity.
pub fn snap_radii_clear(radii: &[f64], pole_moduli: &[f64], rel: f64) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(radii.len());
    let mut moduli = pole_moduli.to_vec();
    moduli.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    moduli.dedup();
    for &r in radii {
        let clearance = rel * r;
        let idx = moduli.partition_point(|&t| t < r);
        let below = if idx > 0 { Some(moduli[idx - 1]) } else { None };
        let above = moduli.get(idx).copied();
        let too_close = below.map(|t| r - t < clearance).unwrap_or(false)
            || above.map(|t| t - r < clearance).unwrap_or(false);
        let snapped = if too_close {
            let lo = below.unwrap_or(r / 4.0);
            let hi = above.unwrap_or(r * 4.0);
            (lo * hi).sqrt()
        } else {
            r
        };
        match out.last() {
            Some(&prev) if snapped <= prev => {}
            _ => out.push(snapped),
        }
    }
    out
}
