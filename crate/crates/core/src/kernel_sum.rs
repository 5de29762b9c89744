//! Kernel sums `f(z) = Σ cₙ/(z−tₙ)^m` with certified truncation error.
//!
//! Pole data is either an explicit finite list (a *truncated model*: the
//! represented object is exactly the finite sum, tail bound zero) or a named
//! generator rule materialized out to a horizon radius, shipping closed-form
//! bounds for everything beyond it. Evaluation sums every term with
//! `|tₙ| ≤ 2|z|`, then continues until the certified tail — via
//! `|z−tₙ| ≥ |tₙ|/2` for `|tₙ| ≥ 2|z|` — drops below the requested
//! tolerance. Lattice generators can instead complete the tail analytically
//! (Euler–Maclaurin), which is what makes 10⁻⁶-accurate bilateral sums
//! affordable at modest horizons.
//!
//! Terms are accumulated in order of increasing `|tₙ|` (ties broken by
//! argument) with compensated summation, so truncation is deterministic.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::ode_bridge::EntireHandle;
use crate::poly::PolynomialC;
use crate::util::{Accum, CAccum};
use crate::zeta::{power_tail, zeta_tail};
use crate::{Error, Result};

/// Relative pole-hit threshold: |z − tₙ| < this · max(1,|tₙ|) is an error.
pub const POLE_HIT_REL: f64 = 1e-13;

/// One pole with its coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleEntry {
    pub t: Complex64,
    pub c: Complex64,
}

/// A named, stateless pole generator `n ↦ (tₙ, cₙ)`.
///
/// `entries_up_to` and `tail_weight`/`tail_sum` must partition the same
/// infinite family consistently: everything with `|t| ≤ radius` is
/// materialized, everything beyond is covered by the tail methods.
pub trait PoleRule: Send + Sync {
    fn describe(&self) -> String;

    /// All entries with |t| ≤ radius, in any order.
    fn entries_up_to(&self, radius: f64) -> Vec<PoleEntry>;

    /// Upper bound on Σ_{|t| > radius} |c|/|t|^order; `f64::INFINITY` when
    /// divergent or not certifiable.
    fn tail_weight(&self, radius: f64, order: u32) -> f64;

    /// Analytic value of Σ_{|t| > radius} c/(z−t)^order with an error bound,
    /// when the rule supports completion and |z| is well inside the radius.
    fn tail_sum(&self, _z: Complex64, _radius: f64, _order: u32) -> Option<(Complex64, f64)> {
        None
    }

    /// Whether the rule legitimately places a pole at the origin
    /// (the sine lattice with c ≡ 0 mod π does).
    fn origin_is_pole(&self) -> bool {
        false
    }
}

enum PoleSource {
    Explicit,
    Generated { rule: Arc<dyn PoleRule>, horizon: f64 },
}

/// Sorted pole data with tail certification.
pub struct PoleSpec {
    entries: Vec<PoleEntry>,
    source: PoleSource,
}

fn sort_key(e: &PoleEntry) -> (f64, f64) {
    (e.t.norm(), e.t.arg())
}

fn validate_entries(entries: &[PoleEntry], allow_origin: bool) -> Result<()> {
    for w in entries.windows(2) {
        if w[0].t == w[1].t {
            return Err(Error::InvalidPoleData(format!("duplicate pole at {}", w[0].t)));
        }
    }
    for e in entries {
        if e.c.norm() == 0.0 {
            return Err(Error::InvalidPoleData(format!("zero coefficient at pole {}", e.t)));
        }
        if !allow_origin && e.t.norm() == 0.0 {
            return Err(Error::InvalidPoleData("pole at the origin".into()));
        }
    }
    Ok(())
}

impl PoleSpec {
    /// Explicit finite list; the represented object is this truncated model.
    pub fn explicit(entries: Vec<(Complex64, Complex64)>) -> Result<Self> {
        Self::explicit_inner(entries, false)
    }

    /// Explicit list permitting a pole at the origin (closed-form families
    /// like sin⁻² legitimately carry one; Nevanlinna counting will refuse it).
    pub fn explicit_allowing_origin(entries: Vec<(Complex64, Complex64)>) -> Result<Self> {
        Self::explicit_inner(entries, true)
    }

    fn explicit_inner(entries: Vec<(Complex64, Complex64)>, allow_origin: bool) -> Result<Self> {
        let mut entries: Vec<PoleEntry> =
            entries.into_iter().map(|(t, c)| PoleEntry { t, c }).collect();
        entries.sort_unstable_by(|a, b| sort_key(a).partial_cmp(&sort_key(b)).unwrap());
        validate_entries(&entries, allow_origin)?;
        Ok(Self { entries, source: PoleSource::Explicit })
    }

    /// Materialize a generator out to `horizon`; the rule certifies the rest.
    pub fn generated(rule: Arc<dyn PoleRule>, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::invalid("horizon must be positive"));
        }
        let mut entries = rule.entries_up_to(horizon);
        entries.sort_unstable_by(|a, b| sort_key(a).partial_cmp(&sort_key(b)).unwrap());
        validate_entries(&entries, rule.origin_is_pole())?;
        if entries.is_empty() {
            return Err(Error::InvalidPoleData("generator produced no poles within horizon".into()));
        }
        Ok(Self { entries, source: PoleSource::Generated { rule, horizon } })
    }

    pub fn entries(&self) -> &[PoleEntry] {
        &self.entries
    }

    pub fn horizon(&self) -> f64 {
        match &self.source {
            PoleSource::Explicit => self.entries.last().map(|e| e.t.norm()).unwrap_or(0.0),
            PoleSource::Generated { horizon, .. } => *horizon,
        }
    }

    pub fn rule(&self) -> Option<&Arc<dyn PoleRule>> {
        match &self.source {
            PoleSource::Explicit => None,
            PoleSource::Generated { rule, .. } => Some(rule),
        }
    }

    pub fn is_truncated_model(&self) -> bool {
        matches!(self.source, PoleSource::Explicit)
    }

    /// Upper bound on Σ_{|t| > r} |c|/|t|^order (materialized part exact,
    /// generator tail analytic).
    pub fn tail_weight(&self, r: f64, order: u32) -> f64 {
        let mut acc = Accum::new();
        for e in &self.entries {
            let tn = e.t.norm();
            if tn > r {
                acc.add(e.c.norm() / tn.powi(order as i32));
            }
        }
        let beyond = match &self.source {
            PoleSource::Explicit => 0.0,
            PoleSource::Generated { rule, horizon } => rule.tail_weight(r.max(*horizon), order),
        };
        acc.value() + beyond
    }

    /// Σcₙ over materialized entries, with a bound on the uncollected rest
    /// (infinite when the generator's coefficients are not absolutely summable).
    pub fn coefficient_sum(&self) -> (Complex64, f64) {
        let mut acc = CAccum::new();
        for e in &self.entries {
            acc.add(e.c);
        }
        let tail = match &self.source {
            PoleSource::Explicit => 0.0,
            PoleSource::Generated { rule, horizon } => rule.tail_weight(*horizon, 0),
        };
        (acc.value(), tail)
    }

    /// First index with |t| > r.
    fn partition_index(&self, r: f64) -> usize {
        self.entries.partition_point(|e| e.t.norm() <= r)
    }

    /// Pole nearest to z in the window of comparable modulus, if it is a hit.
    fn pole_hit(&self, z: Complex64) -> Option<PoleEntry> {
        let zn = z.norm();
        let slack = POLE_HIT_REL * (1.0 + zn) * 4.0 + 1e-300;
        let lo = self.entries.partition_point(|e| e.t.norm() < zn - slack);
        for e in &self.entries[lo..] {
            if e.t.norm() > zn + slack {
                break;
            }
            if (z - e.t).norm() < POLE_HIT_REL * e.t.norm().max(1.0) {
                return Some(*e);
            }
        }
        None
    }
}

/// Evaluation outcome with its certificate.
#[derive(Debug, Clone, Copy)]
pub struct EvalResult {
    pub value: Complex64,
    /// Bound on everything not explicitly summed (and on the analytic
    /// completion's remainder when one was used).
    pub tail_bound: f64,
    pub terms_used: usize,
}

/// The model `f(z) = Σ cₙ/(z−tₙ)^m`.
pub struct KernelSum {
    m: u32,
    poles: PoleSpec,
    /// Suffix sums of |c|/|t|^m and |c|/|t|^{m+1} over the sorted entries.
    suffix_m: Vec<f64>,
    suffix_m1: Vec<f64>,
}

fn suffix_weights(entries: &[PoleEntry], order: u32) -> Vec<f64> {
    let mut out = vec![0.0; entries.len() + 1];
    let mut acc = Accum::new();
    for (i, e) in entries.iter().enumerate().rev() {
        let tn = e.t.norm();
        // Origin poles are always in the explicit prefix, never in a tail.
        if tn > 0.0 {
            acc.add(e.c.norm() / tn.powi(order as i32));
        }
        out[i] = acc.value();
    }
    out
}

impl KernelSum {
    pub fn new(m: u32, poles: PoleSpec) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("kernel order m must be ≥ 1"));
        }
        let suffix_m = suffix_weights(&poles.entries, m);
        let suffix_m1 = suffix_weights(&poles.entries, m + 1);
        Ok(Self { m, poles, suffix_m, suffix_m1 })
    }

    pub fn order(&self) -> u32 {
        self.m
    }

    pub fn poles(&self) -> &PoleSpec {
        &self.poles
    }

    /// f(z) to absolute tolerance `tol`.
    pub fn evaluate(&self, z: Complex64, tol: f64) -> Result<EvalResult> {
        Ok(self.eval_order(z, tol, self.m, Complex64::new(1.0, 0.0), &self.suffix_m)?.0)
    }

    /// f(z) together with the summation rounding-noise floor (≈ 2ε·Σ|terms|):
    /// values below it have meaningless phase (heavy cancellation).
    pub fn evaluate_with_noise(&self, z: Complex64, tol: f64) -> Result<(EvalResult, f64)> {
        self.eval_order(z, tol, self.m, Complex64::new(1.0, 0.0), &self.suffix_m)
    }

    /// f′(z) (termwise −m·cₙ/(z−tₙ)^{m+1}) to absolute tolerance `tol`.
    pub fn evaluate_derivative(&self, z: Complex64, tol: f64) -> Result<EvalResult> {
        Ok(self
            .eval_order(
                z,
                tol,
                self.m + 1,
                Complex64::new(-(self.m as f64), 0.0),
                &self.suffix_m1,
            )?
            .0)
    }

    fn eval_order(
        &self,
        z: Complex64,
        tol: f64,
        order: u32,
        factor: Complex64,
        suffix: &[f64],
    ) -> Result<(EvalResult, f64)> {
        if !(tol > 0.0) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        if let Some(p) = self.poles.pole_hit(z) {
            return Err(Error::PoleHit { z, pole: p.t, dist: (z - p.t).norm() });
        }
        let entries = self.poles.entries();
        let zn = z.norm();
        let two_z = 2.0 * zn;
        let fac_n = factor.norm();
        let beyond_horizon = match &self.poles.source {
            PoleSource::Explicit => 0.0,
            PoleSource::Generated { rule, horizon } => {
                if *horizon < two_z {
                    return Err(Error::ToleranceUnreachable { tol, best: f64::INFINITY });
                }
                rule.tail_weight(*horizon, order)
            }
        };
        let prefix = self.poles.partition_index(two_z);
        let mut acc = CAccum::new();
        let mut abs = Accum::new();
        for e in &entries[..prefix] {
            let term = e.c / (z - e.t).powu(order);
            acc.add(term);
            abs.add(term.norm());
        }
        let pow2 = 2f64.powi(order as i32);
        let mut used = prefix;
        loop {
            let bound = fac_n * pow2 * (suffix[used] + beyond_horizon);
            if bound <= tol {
                return Ok((
                    EvalResult {
                        value: factor * acc.value(),
                        tail_bound: bound,
                        terms_used: used,
                    },
                    fac_n * 2.0 * f64::EPSILON * abs.value(),
                ));
            }
            if used == entries.len() {
                // Materialized part exhausted; try analytic completion.
                if let PoleSource::Generated { rule, horizon } = &self.poles.source {
                    if let Some((tv, tb)) = rule.tail_sum(z, *horizon, order) {
                        acc.add(tv);
                        abs.add(tv.norm());
                        let noise = 1e-13 * abs.value();
                        let bound = fac_n * (tb + noise);
                        let value = factor * acc.value();
                        if bound <= tol {
                            return Ok((
                                EvalResult { value, tail_bound: bound, terms_used: used },
                                fac_n * 2.0 * f64::EPSILON * abs.value(),
                            ));
                        }
                        return Err(Error::ToleranceUnreachable { tol, best: bound });
                    }
                }
                if let PoleSource::Explicit = &self.poles.source {
                    // A truncated model is exact once fully summed.
                    return Ok((
                        EvalResult {
                            value: factor * acc.value(),
                            tail_bound: 0.0,
                            terms_used: used,
                        },
                        fac_n * 2.0 * f64::EPSILON * abs.value(),
                    ));
                }
                return Err(Error::ToleranceUnreachable { tol, best: bound });
            }
            let e = &entries[used];
            let term = e.c / (z - e.t).powu(order);
            acc.add(term);
            abs.add(term.norm());
            used += 1;
        }
    }
}

/// Exclusion set `F = ∪ₙ [|tₙ| − |tₙ|^{−L}, |tₙ| + |tₙ|^{−L}]`, merged.
#[derive(Debug, Clone)]
pub struct ExclusionSet {
    exponent: f64,
    intervals: Vec<(f64, f64)>,
}

impl ExclusionSet {
    pub fn empty() -> Self {
        Self { exponent: 1.0, intervals: Vec::new() }
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn contains(&self, r: f64) -> bool {
        let i = self.intervals.partition_point(|&(_, hi)| hi < r);
        i < self.intervals.len() && self.intervals[i].0 <= r
    }

    /// Smallest non-excluded radius ≥ r (mirrors "for any r ∈ F there is r̃ > r").
    pub fn snap_above(&self, r: f64) -> f64 {
        let mut r = r;
        loop {
            let i = self.intervals.partition_point(|&(_, hi)| hi < r);
            if i < self.intervals.len() && self.intervals[i].0 <= r {
                let hi = self.intervals[i].1;
                r = hi + 1e-12 * hi.abs().max(1.0);
            } else {
                return r;
            }
        }
    }

    /// Lebesgue measure of F ∩ [0, r].
    pub fn total_length_up_to(&self, r: f64) -> f64 {
        let mut acc = 0.0;
        for &(lo, hi) in &self.intervals {
            let lo = lo.max(0.0);
            if lo >= r {
                break;
            }
            acc += hi.min(r) - lo;
        }
        acc
    }
}

/// Build F for the poles with |t| ≤ r_max + 1.
pub fn build_exclusion_set(poles: &PoleSpec, l: f64, r_max: f64) -> Result<ExclusionSet> {
    if !(l > 0.0) {
        return Err(Error::invalid("exclusion exponent L must be positive"));
    }
    let cover = r_max + 1.0;
    if poles.horizon() < cover && !poles.is_truncated_model() {
        return Err(Error::InsufficientCertification(format!(
            "exclusion set needs poles to radius {cover}, horizon is {}",
            poles.horizon()
        )));
    }
    let mut raw: Vec<(f64, f64)> = Vec::new();
    for e in poles.entries() {
        let tn = e.t.norm();
        if tn == 0.0 {
            return Err(Error::InvalidPoleData(
                "exclusion set requires the normalization 0 ∉ T".into(),
            ));
        }
        if tn > cover {
            break;
        }
        let w = tn.powf(-l);
        raw.push(((tn - w).max(0.0), tn + w));
    }
    raw.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in raw {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    Ok(ExclusionSet { exponent: l, intervals: merged })
}

/// Kernel sum for `P/g²` from the local data of an entire function with
/// simple zeros: tₙ = zeros of g, cₙ = P(tₙ)/g′(tₙ)².
pub fn kernel_sum_from_entire(
    g: &dyn EntireHandle,
    p: &PolynomialC,
    count: usize,
) -> Result<KernelSum> {
    let zeros = g.first_zeros(count)?;
    let mut entries = Vec::with_capacity(zeros.len());
    for &t in &zeros {
        let gp = g.eval_deriv(t)?;
        if gp.norm() < 1e-8 * (1.0 + t.norm()) {
            return Err(Error::NearMultipleZero { zero: t, mag: gp.norm() });
        }
        entries.push((t, p.eval(t) / (gp * gp)));
    }
    let has_origin = entries.iter().any(|(t, _)| t.norm() == 0.0);
    let spec = if has_origin {
        PoleSpec::explicit_allowing_origin(entries)?
    } else {
        PoleSpec::explicit(entries)?
    };
    KernelSum::new(2, spec)
}

// ---------------------------------------------------------------------------
// Generator rules
// ---------------------------------------------------------------------------

/// Poles (πn + c)/b over n ∈ ℤ with constant coefficient a/b²
/// (the partial-fraction lattice of a/sin²(bz − c)).
pub struct SineLattice {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
}

impl SineLattice {
    fn coeff(&self) -> Complex64 {
        self.a / (self.b * self.b)
    }

    /// Largest |n| worth scanning to cover |t| ≤ radius.
    fn scan_bound(&self, radius: f64) -> i64 {
        (((radius * self.b.norm() + self.c.norm()) / PI).ceil() as i64) + 2
    }

    /// Inclusive index range materialized at `radius`.
    fn index_range(&self, radius: f64) -> (i64, i64) {
        let w = radius * self.b.norm();
        let bound = self.scan_bound(radius);
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for n in -bound..=bound {
            let t = Complex64::new(PI * n as f64, 0.0) + self.c;
            if t.norm() <= w {
                lo = lo.min(n);
                hi = hi.max(n);
            }
        }
        (lo, hi)
    }
}

impl PoleRule for SineLattice {
    fn describe(&self) -> String {
        format!("sine lattice a={} b={} c={}", self.a, self.b, self.c)
    }

    fn entries_up_to(&self, radius: f64) -> Vec<PoleEntry> {
        let cst = self.coeff();
        let w = radius * self.b.norm();
        let bound = self.scan_bound(radius);
        let mut out = Vec::new();
        for n in -bound..=bound {
            let num = Complex64::new(PI * n as f64, 0.0) + self.c;
            if num.norm() <= w {
                out.push(PoleEntry { t: num / self.b, c: cst });
            }
        }
        out
    }

    fn tail_weight(&self, radius: f64, order: u32) -> f64 {
        if order <= 1 {
            return f64::INFINITY;
        }
        let w = radius * self.b.norm();
        let cn = self.c.norm();
        let n_min = ((w - cn) / PI).floor().max(1.0);
        let q = n_min - cn / PI;
        if q < 8.0 {
            return f64::INFINITY;
        }
        let s = order as f64;
        match zeta_tail(s, Complex64::new(q, 0.0)) {
            Ok((v, b)) => {
                self.coeff().norm() * self.b.norm().powi(order as i32) / PI.powi(order as i32)
                    * 2.0
                    * (v.re + b)
            }
            Err(_) => f64::INFINITY,
        }
    }

    fn tail_sum(&self, z: Complex64, radius: f64, order: u32) -> Option<(Complex64, f64)> {
        if order < 2 || z.norm() > radius / 2.5 {
            return None;
        }
        let (lo, hi) = self.index_range(radius);
        if lo == i64::MAX {
            return None;
        }
        let w = (self.b * z - self.c) / PI;
        let s = order as f64;
        // Positive flank n ≥ hi+1: Σ (w−n)^{−order} = (−1)^order ζt(order, hi+1−w).
        let (zp, bp) = zeta_tail(s, Complex64::new(hi as f64 + 1.0, 0.0) - w).ok()?;
        // Negative flank n ≤ lo−1: Σ (w−n)^{−order} = ζt(order, w + 1 − lo).
        let (zm, bm) = zeta_tail(s, w + Complex64::new(1.0 - lo as f64, 0.0)).ok()?;
        let sign = if order.is_multiple_of(2) { 1.0 } else { -1.0 };
        let scale = self.coeff() * (self.b / PI).powu(order);
        let value = scale * (sign * zp + zm);
        let bound = scale.norm() * (bp + bm);
        Some((value, bound))
    }

    fn origin_is_pole(&self) -> bool {
        let bound = self.scan_bound(1.0);
        (-bound..=bound).any(|n| (Complex64::new(PI * n as f64, 0.0) + self.c).norm() == 0.0)
    }
}

/// Coefficient law for power-lattice poles tₙ = n^α.
#[derive(Debug, Clone, Copy)]
pub enum CoeffLaw {
    /// cₙ = ratioⁿ, 0 < ratio < 1.
    Geometric { ratio: f64 },
    /// cₙ = n^{−beta}.
    Power { beta: f64 },
}

/// Poles tₙ = n^α on the positive axis, n ≥ 1.
pub struct PowerPoles {
    pub alpha: f64,
    pub law: CoeffLaw,
}

impl PowerPoles {
    pub fn new(alpha: f64, law: CoeffLaw) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::invalid("alpha must be positive"));
        }
        if let CoeffLaw::Geometric { ratio } = law {
            if !(ratio > 0.0 && ratio < 1.0) {
                return Err(Error::invalid("geometric ratio must lie in (0,1)"));
            }
        }
        Ok(Self { alpha, law })
    }

    fn coeff(&self, n: u64) -> f64 {
        match self.law {
            CoeffLaw::Geometric { ratio } => ratio.powi(n as i32),
            CoeffLaw::Power { beta } => (n as f64).powf(-beta),
        }
    }

    fn last_index(&self, radius: f64) -> u64 {
        let mut n = radius.powf(1.0 / self.alpha).floor().max(0.0) as u64;
        while (n as f64 + 1.0).powf(self.alpha) <= radius {
            n += 1;
        }
        while n > 0 && (n as f64).powf(self.alpha) > radius {
            n -= 1;
        }
        n
    }
}

impl PoleRule for PowerPoles {
    fn describe(&self) -> String {
        match self.law {
            CoeffLaw::Geometric { ratio } => {
                format!("power poles t_n = n^{}, c_n = {}^n", self.alpha, ratio)
            }
            CoeffLaw::Power { beta } => {
                format!("power poles t_n = n^{}, c_n = n^-{}", self.alpha, beta)
            }
        }
    }

    fn entries_up_to(&self, radius: f64) -> Vec<PoleEntry> {
        let last = self.last_index(radius);
        (1..=last)
            .map(|n| PoleEntry {
                t: Complex64::new((n as f64).powf(self.alpha), 0.0),
                c: Complex64::new(self.coeff(n), 0.0),
            })
            .collect()
    }

    fn tail_weight(&self, radius: f64, order: u32) -> f64 {
        let n0 = self.last_index(radius);
        match self.law {
            CoeffLaw::Geometric { ratio } => {
                let n1 = n0 as f64 + 1.0;
                ratio.powf(n1) / (1.0 - ratio) / n1.powf(self.alpha * order as f64)
            }
            CoeffLaw::Power { beta } => {
                let p = beta + self.alpha * order as f64;
                if p <= 1.0 {
                    return f64::INFINITY;
                }
                match power_tail(p, n0 as usize) {
                    Ok((v, b)) => v + b,
                    Err(_) => f64::INFINITY,
                }
            }
        }
    }
}

/// The ±uₙ pole pairs of z/cos²(z²), where uₙ² = π/2 + πn over n ∈ ℤ:
/// real pairs for n ≥ 0, imaginary pairs for n < 0, coefficients ±1/(4uₙ).
pub struct CosSquarePairs;

impl CosSquarePairs {
    /// Real-side u for n ≥ 0.
    fn u_real(n: u64) -> f64 {
        (PI / 2.0 + PI * n as f64).sqrt()
    }

    /// Imaginary-side magnitude for m ≥ 1 (index n = −m).
    fn u_imag(m: u64) -> f64 {
        (PI * m as f64 - PI / 2.0).sqrt()
    }

    fn last_real(radius: f64) -> Option<u64> {
        if radius * radius < PI / 2.0 {
            return None;
        }
        let mut n = ((radius * radius - PI / 2.0) / PI).floor() as u64;
        while Self::u_real(n + 1) <= radius {
            n += 1;
        }
        while n > 0 && Self::u_real(n) > radius {
            n -= 1;
        }
        if Self::u_real(n) > radius {
            None
        } else {
            Some(n)
        }
    }

    fn last_imag(radius: f64) -> Option<u64> {
        if radius * radius < PI / 2.0 {
            return None;
        }
        let mut m = ((radius * radius + PI / 2.0) / PI).floor().max(1.0) as u64;
        while Self::u_imag(m + 1) <= radius {
            m += 1;
        }
        while m > 1 && Self::u_imag(m) > radius {
            m -= 1;
        }
        if Self::u_imag(m) > radius {
            None
        } else {
            Some(m)
        }
    }

    /// Σ over the two flanks of u^{−p} beyond the horizon, p even ≥ 4.
    fn moment_tail(radius: f64, p: u32) -> Option<(Complex64, f64)> {
        let s = p as f64 / 2.0;
        let mut value = Complex64::new(0.0, 0.0);
        let mut bound = 0.0;
        let n0 = Self::last_real(radius)?;
        let (v, b) = zeta_tail(s, Complex64::new(n0 as f64 + 1.5, 0.0)).ok()?;
        value += v / PI.powf(s);
        bound += b / PI.powf(s);
        let m0 = Self::last_imag(radius)?;
        // u = i·σ ⇒ u^{−p} = (−1)^{p/2} (πm − π/2)^{−p/2}.
        let sign = if (p / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
        let (v, b) = zeta_tail(s, Complex64::new(m0 as f64 + 0.5, 0.0)).ok()?;
        value += sign * v / PI.powf(s);
        bound += b / PI.powf(s);
        Some((value, bound))
    }
}

impl PoleRule for CosSquarePairs {
    fn describe(&self) -> String {
        "pole pairs ±u_n of z/cos²(z²), u_n² = π/2 + πn".into()
    }

    fn entries_up_to(&self, radius: f64) -> Vec<PoleEntry> {
        let mut out = Vec::new();
        if let Some(last) = Self::last_real(radius) {
            for n in 0..=last {
                let u = Complex64::new(Self::u_real(n), 0.0);
                let c = 1.0 / (4.0 * u);
                out.push(PoleEntry { t: u, c });
                out.push(PoleEntry { t: -u, c: -c });
            }
        }
        if let Some(last) = Self::last_imag(radius) {
            for m in 1..=last {
                let u = Complex64::new(0.0, Self::u_imag(m));
                let c = 1.0 / (4.0 * u);
                out.push(PoleEntry { t: u, c });
                out.push(PoleEntry { t: -u, c: -c });
            }
        }
        out
    }

    fn tail_weight(&self, radius: f64, order: u32) -> f64 {
        // Each omitted pair contributes 2·(1/(4|u|))/|u|^order.
        let s = (order as f64 + 1.0) / 2.0;
        if s <= 1.0 {
            return f64::INFINITY;
        }
        let mut total = 0.0;
        if let Some(n0) = Self::last_real(radius) {
            match zeta_tail(s, Complex64::new(n0 as f64 + 1.5, 0.0)) {
                Ok((v, b)) => total += (v.re + b) / (2.0 * PI.powf(s)),
                Err(_) => return f64::INFINITY,
            }
        }
        if let Some(m0) = Self::last_imag(radius) {
            match zeta_tail(s, Complex64::new(m0 as f64 + 0.5, 0.0)) {
                Ok((v, b)) => total += (v.re + b) / (2.0 * PI.powf(s)),
                Err(_) => return f64::INFINITY,
            }
        }
        total
    }

    fn tail_sum(&self, z: Complex64, radius: f64, order: u32) -> Option<(Complex64, f64)> {
        if z.norm() > radius / 2.5 {
            return None;
        }
        // Pair expansion in powers of z/u. Order 2 keeps odd powers,
        // order 3 keeps even powers:
        //   Σ_pair c[(z−u)^{−2} − (z+u)^{−2}] = ½ Σ_{j odd}(j+1) z^j u^{−(j+3)}
        //   Σ_pair c[(z−u)^{−3} − (z+u)^{−3}] = −½ Σ_{j even}((j+1)(j+2)/2) z^j u^{−(j+4)}
        let (start, shift, outer): (u32, u32, f64) = match order {
            2 => (1, 3, 0.5),
            3 => (0, 4, -0.5),
            _ => return None,
        };
        let mut value = Complex64::new(0.0, 0.0);
        let mut bound = 0.0;
        let mut j = start;
        let last_term;
        loop {
            let p = j + shift;
            let coef = match order {
                2 => (j + 1) as f64,
                _ => ((j + 1) * (j + 2)) as f64 / 2.0,
            };
            let (mom, mom_b) = Self::moment_tail(radius, p)?;
            let term = outer * coef * z.powu(j) * mom;
            value += term;
            bound += outer.abs() * coef * z.norm().powi(j as i32) * mom_b;
            if term.norm() < 1e-18 * value.norm().max(1e-300) || j > 60 {
                last_term = term.norm();
                break;
            }
            j += 2;
        }
        // Geometric remainder of the truncated power series.
        bound += 2.0 * last_term;
        Some((value, bound))
    }
}
