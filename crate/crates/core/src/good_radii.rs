//! Good-radius machinery: octave tail sums, subsequence selection, circle
//! means, and the circle deviation diagnostic.
//!
//! A radius r is *good* when the circle mean ∫|f(re^{iφ})|dφ is small; such
//! radii exist in every octave whose coefficient tail sum a_k is small
//! relative to 1/k. The selection here makes the existence argument
//! concrete: pick half of each dyadic block of octave indices, greedily by
//! smallest a_k under the window constraint that keeps the enumeration
//! inside n ≤ k_n ≤ 2n, then search a 64-point geometric grid of each
//! selected octave for the smallest circle mean outside the exclusion set.

use num_complex::Complex64;

use crate::kernel_sum::{ExclusionSet, KernelSum, PoleSpec};
use crate::nevanlinna::{proximity, FunctionHandle};
use crate::quad::{arc_measure, integrate, QuadOptions};
use crate::util::Accum;
use crate::{Error, Result};

/// Octave sums a_k = Σ_{base^k < |tₙ| < base^{k+1}} |cₙ|/|tₙ|² (strict
/// inequalities; boundary poles belong to no octave).
#[derive(Debug, Clone)]
pub struct OctaveSums {
    pub base: f64,
    /// values[k] = a_k for k = 0..=k_max.
    pub values: Vec<f64>,
    /// Certified bound on Σ_{k > k_max} a_k.
    pub tail: f64,
}

impl OctaveSums {
    pub fn k_max(&self) -> usize {
        self.values.len().saturating_sub(1)
    }
}

pub fn octave_tail_sums(poles: &PoleSpec, base: f64, k_max: usize) -> Result<OctaveSums> {
    if !(base > 1.0) {
        return Err(Error::invalid("octave base must exceed 1"));
    }
    let needed = base.powi(k_max as i32 + 1);
    if poles.horizon() < needed && !poles.is_truncated_model() {
        return Err(Error::InsufficientCertification(format!(
            "octave sums to k={k_max} need poles out to {needed:.3e}, horizon {:.3e}",
            poles.horizon()
        )));
    }
    let mut sums = vec![Accum::new(); k_max + 1];
    for e in poles.entries() {
        let tn = e.t.norm();
        if tn <= 1.0 {
            continue;
        }
        let k = tn.ln() / base.ln();
        let k_lo = k.floor();
        // Strict annulus membership: skip boundary hits.
        if k == k_lo || k_lo < 0.0 {
            continue;
        }
        let idx = k_lo as usize;
        if idx <= k_max {
            sums[idx].add(e.c.norm() / (tn * tn));
        }
    }
    let tail = poles.tail_weight(needed, 2);
    if !tail.is_finite() {
        return Err(Error::InsufficientCertification(
            "coefficient tail Σ|c|/|t|² not certified finite".into(),
        ));
    }
    Ok(OctaveSums { base, values: sums.iter().map(|a| a.value()).collect(), tail })
}

/// Select `count` octave indices k₁ < k₂ < … with n ≤ k_n ≤ 2n and small
/// a_{k_n}: within each dyadic block [2^m+1, 2^{m+1}], half the indices are
/// chosen greedily by smallest value (ties by smaller index) under window
/// constraints that keep the sorted enumeration inside the bracket.
pub fn select_subsequence(a: &OctaveSums, count: usize) -> Result<Vec<usize>> {
    let vals = &a.values;
    let available = a.k_max();
    let mut out: Vec<usize> = Vec::with_capacity(count);
    if count == 0 {
        return Ok(out);
    }
    if available < 2 {
        return Err(Error::InsufficientCertification(
            "need octave sums through k = 2 for the first selection".into(),
        ));
    }
    out.push(2); // block m = 0 is the single index {2}
    let mut m = 1usize;
    while out.len() < count {
        let q = 1usize << (m - 1);
        let block_lo = (1usize << m) + 1;
        let block_hi = 1usize << (m + 1);
        let mut chosen: Vec<usize> = Vec::with_capacity(q);
        for j in 1..=q {
            if out.len() + chosen.len() >= count {
                break;
            }
            let window_hi = ((1usize << m) + 2 * j).min(block_hi);
            if window_hi > available {
                return Err(Error::InsufficientCertification(format!(
                    "selection needs octave index {window_hi}, have {available}"
                )));
            }
            let best = (block_lo..=window_hi)
                .filter(|k| !chosen.contains(k))
                .min_by(|&k1, &k2| {
                    (vals[k1], k1).partial_cmp(&(vals[k2], k2)).unwrap()
                })
                .expect("window always contains an unchosen index");
            chosen.push(best);
        }
        chosen.sort_unstable();
        out.extend_from_slice(&chosen);
        m += 1;
    }
    out.truncate(count);
    // The bracket n ≤ k_n ≤ 2n holds by construction; keep it checked.
    for (i, &k) in out.iter().enumerate() {
        let n = i + 1;
        debug_assert!(n <= k && k <= 2 * n, "bracket violated: n={n} k={k}");
    }
    Ok(out)
}

fn check_radius(exclusion: &ExclusionSet, r: f64) -> Result<()> {
    if exclusion.contains(r) {
        return Err(Error::ExcludedRadius { r });
    }
    Ok(())
}

fn eval_with_fallback(h: &dyn FunctionHandle, z: Complex64, tol: f64) -> Result<Complex64> {
    match h.eval(z, tol) {
        Ok(v) => Ok(v),
        Err(Error::ToleranceUnreachable { best, .. }) if best.is_finite() => {
            h.eval(z, best * 4.0)
        }
        Err(e) => Err(e),
    }
}

/// I(r) = ∫₀^{2π} |f(re^{iφ})| dφ by adaptive quadrature with error ≤ tol.
pub fn circle_l1(
    h: &dyn FunctionHandle,
    r: f64,
    tol: f64,
    exclusion: &ExclusionSet,
) -> Result<f64> {
    check_radius(exclusion, r)?;
    circle_lp_unchecked(h, r, 1.0, tol)
}

/// ∫₀^{2π} |f(re^{iφ})|^p dφ for 0 < p ≤ 1.
pub fn circle_lp(
    h: &dyn FunctionHandle,
    r: f64,
    p: f64,
    tol: f64,
    exclusion: &ExclusionSet,
) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid("exponent p must lie in (0, 1]"));
    }
    check_radius(exclusion, r)?;
    circle_lp_unchecked(h, r, p, tol)
}

fn circle_lp_unchecked(h: &dyn FunctionHandle, r: f64, p: f64, tol: f64) -> Result<f64> {
    use std::f64::consts::TAU;
    let eval_tol = (tol * 1e-2).clamp(1e-14, 1e-10);
    let q = integrate(
        |phi: f64| {
            let z = Complex64::from_polar(r, phi);
            let v = eval_with_fallback(h, z, eval_tol)?;
            Ok(if p == 1.0 { v.norm() } else { v.norm().powf(p) })
        },
        0.0,
        TAU,
        QuadOptions { tol, ..Default::default() },
    )?;
    if q.error > 4.0 * tol {
        return Err(Error::QuadBudget { err: q.error, tol });
    }
    Ok(q.value)
}

/// m(r, f)/log r; bounded along good radii.
pub fn log_circle_diagnostic(
    h: &dyn FunctionHandle,
    r: f64,
    tol: f64,
    exclusion: &ExclusionSet,
) -> Result<f64> {
    if r <= 1.0 {
        return Err(Error::invalid("diagnostic needs r > 1"));
    }
    check_radius(exclusion, r)?;
    let (m, _err) = proximity(h, r, tol)?;
    Ok(m / r.ln())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GoodRadiusMode {
    /// Dyadic annuli, base 8, windows [R_j, 2R_j].
    Octave,
    /// Refined annuli with base (1+δ)³ and windows [R_j, (1+δ)R_j].
    Delta(f64),
}

impl GoodRadiusMode {
    fn base(self) -> f64 {
        match self {
            GoodRadiusMode::Octave => 8.0,
            GoodRadiusMode::Delta(d) => (1.0 + d).powi(3),
        }
    }

    fn window(self) -> f64 {
        match self {
            GoodRadiusMode::Octave => 2.0,
            GoodRadiusMode::Delta(d) => 1.0 + d,
        }
    }

    fn spacing(self) -> f64 {
        match self {
            GoodRadiusMode::Octave => 4.0,
            GoodRadiusMode::Delta(d) => 1.0 + d,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GoodRadiusRow {
    pub j: usize,
    pub k_j: usize,
    pub big_r: f64,
    pub r: f64,
    pub l1: f64,
    /// Angular deviation measure, filled by the circle diagnostic when run.
    pub measure: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct GoodRadiusReport {
    pub mode: GoodRadiusMode,
    pub rows: Vec<GoodRadiusRow>,
}

impl GoodRadiusReport {
    /// CSV body with the fixed header j,k_j,R_j,r_j,I,measure.
    pub fn to_csv(&self) -> String {
        use crate::util::fmt_f64 as f;
        let mut s = String::from("j,k_j,R_j,r_j,I,measure\n");
        for row in &self.rows {
            let m = row.measure.map(f).unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.j,
                row.k_j,
                f(row.big_r),
                f(row.r),
                f(row.l1),
                m
            ));
        }
        s
    }
}

/// Largest octave index the selection of `count` radii can touch.
pub fn selection_horizon_index(count: usize) -> usize {
    let mut max_k = 2usize;
    let mut n = 1usize;
    let mut m = 1usize;
    while n < count {
        let q = 1usize << (m - 1);
        for j in 1..=q {
            if n >= count {
                break;
            }
            max_k = max_k.max(((1usize << m) + 2 * j).min(1 << (m + 1)));
            n += 1;
        }
        m += 1;
    }
    max_k
}

/// Good radii r_j = argmin of the circle L¹ mean over a 64-point geometric
/// grid of [R_j, w·R_j] ∖ F, where R_j = w·base^{k_j} over the selected
/// octaves k_j. Spacing r_{j+1} ≥ spacing·r_j is enforced.
pub fn good_radius_sequence(
    f: &KernelSum,
    exclusion: &ExclusionSet,
    mode: GoodRadiusMode,
    count: usize,
) -> Result<GoodRadiusReport> {
    if let GoodRadiusMode::Delta(d) = mode {
        if !(d > 0.0) {
            return Err(Error::invalid("delta must be positive"));
        }
    }
    let base = mode.base();
    let window = mode.window();
    let k_needed = selection_horizon_index(count);
    let sums = octave_tail_sums(f.poles(), base, k_needed)?;
    let ks = select_subsequence(&sums, count)?;
    let mut rows: Vec<GoodRadiusRow> = Vec::with_capacity(count);
    for (j, &k) in ks.iter().enumerate() {
        let big_r = window * base.powi(k as i32);
        let grid: Vec<f64> = (0..64)
            .map(|i| big_r * window.powf(i as f64 / 63.0))
            .filter(|&r| !exclusion.contains(r))
            .collect();
        if grid.is_empty() {
            // F has finite total length, so a fully excluded window means
            // the exclusion data is inconsistent with the pole set.
            return Err(Error::ExcludedRadius { r: big_r });
        }
        // Cheap certified pass to locate the argmin, then tighten on it.
        let mut best: Option<(f64, f64)> = None;
        for &r in &grid {
            let probe_tol = match &best {
                Some((_, v)) => (v * 0.05).max(1e-13),
                None => f64::INFINITY,
            };
            let value = match circle_l1_probe(f, r, probe_tol) {
                Ok(v) => v,
                Err(_) => continue,
            };
            if best.map(|(_, v)| value < v).unwrap_or(true) {
                best = Some((r, value));
            }
        }
        let (r_j, coarse) =
            best.ok_or_else(|| Error::invalid("no grid radius evaluable"))?;
        let l1 = circle_lp_unchecked(f, r_j, 1.0, (coarse * 1e-3).max(1e-12))?;
        if let Some(prev) = rows.last() {
            let need = mode.spacing() * prev.r;
            assert!(
                r_j >= need * (1.0 - 1e-12),
                "good-radius spacing violated: {r_j} after {}",
                prev.r
            );
        }
        rows.push(GoodRadiusRow { j: j + 1, k_j: k, big_r, r: r_j, l1, measure: None });
    }
    Ok(GoodRadiusReport { mode, rows })
}

/// L¹ probe used during the argmin scan: certified once a baseline exists.
fn circle_l1_probe(f: &KernelSum, r: f64, tol: f64) -> Result<f64> {
    let tol = if tol.is_finite() { tol } else { 1e-6 };
    circle_lp_unchecked(f, r, 1.0, tol)
}

/// Result of the circle deviation diagnostic.
#[derive(Debug, Clone, Copy)]
pub struct KeldyshMeasure {
    /// Lebesgue measure of {φ : |z²f(z)/S − 1| ≥ 1/2} on |z| = r.
    pub measure: f64,
    /// The certified normalizer S = Σcₙ.
    pub normalizer: Complex64,
    /// Width of arcs classified at the resolution floor.
    pub uncertainty: f64,
}

/// Angular measure of the set where z²f(z) deviates from its limit Σcₙ.
///
/// Requires Σ|cₙ| certified finite and Σcₙ bounded away from the certified
/// remainder (the Σcₙ = 0 regime is a normalization error).
pub fn keldysh_angular_measure(
    f: &KernelSum,
    r: f64,
    resolution: f64,
) -> Result<KeldyshMeasure> {
    use std::f64::consts::TAU;
    let (s, s_tail) = f.poles().coefficient_sum();
    if !s_tail.is_finite() || s.norm() < 10.0 * s_tail || s.norm() < 1e-12 {
        return Err(Error::Normalization { s_abs: s.norm() });
    }
    let eval_tol = 0.02 * s.norm() / (r * r);
    let m = arc_measure(
        |phi: f64| {
            let z = Complex64::from_polar(r, phi);
            let v = eval_with_fallback(f, z, eval_tol)?;
            Ok((z * z * v / s - 1.0).norm() >= 0.5)
        },
        0.0,
        TAU,
        resolution.max(TAU * 1e-7),
    )?;
    Ok(KeldyshMeasure { measure: m.measure, normalizer: s, uncertainty: m.uncertainty })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel_sum::{build_exclusion_set, CoeffLaw, PoleSpec, PowerPoles};
    use crate::nevanlinna::MeromorphicParts;
    use std::f64::consts::TAU;
    use std::sync::Arc;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn squares_cubed_kernel(horizon: f64) -> KernelSum {
        let rule = Arc::new(PowerPoles::new(2.0, CoeffLaw::Power { beta: 3.0 }).unwrap());
        KernelSum::new(2, PoleSpec::generated(rule, horizon).unwrap()).unwrap()
    }

    #[test]
    fn octave_sums_single_pole() {
        let spec = PoleSpec::explicit(vec![(c64(2.0, 0.0), c64(3.0, 0.0))]).unwrap();
        let sums = octave_tail_sums(&spec, 8.0, 4).unwrap();
        assert!((sums.values[0] - 3.0 / 4.0).abs() < 1e-15);
        for &v in &sums.values[1..] {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn octave_sums_match_direct_oracle() {
        let f = squares_cubed_kernel(1e7);
        let sums = octave_tail_sums(f.poles(), 8.0, 6).unwrap();
        for k in 0..=6usize {
            // Direct summation oracle over the annulus (8^k, 8^{k+1}).
            let lo = 8f64.powi(k as i32);
            let hi = 8f64.powi(k as i32 + 1);
            let mut acc = 0.0;
            let mut n = 1.0;
            while n * n < hi {
                let t = n * n;
                if t > lo && t < hi {
                    acc += n.powf(-3.0) / (t * t);
                }
                n += 1.0;
            }
            assert!(
                (sums.values[k] - acc).abs() < 1e-15 + 1e-12 * acc,
                "k={k}: {} vs {acc}",
                sums.values[k]
            );
        }
    }

    #[test]
    fn octave_sums_requires_certified_range() {
        let f = squares_cubed_kernel(100.0);
        assert!(octave_tail_sums(f.poles(), 8.0, 6).is_err());
    }

    #[test]
    fn selection_brackets_geometric_sequence() {
        // a_k = 4^{−k}: summable, strictly decreasing.
        let values: Vec<f64> = (0..=140).map(|k| 0.25f64.powi(k)).collect();
        let sums = OctaveSums { base: 8.0, values, tail: 1e-90 };
        let ks = select_subsequence(&sums, 64).unwrap();
        for (i, &k) in ks.iter().enumerate() {
            let n = i + 1;
            assert!(n <= k && k <= 2 * n, "n={n} k={k}");
        }
        // k·a_k → 0 along the selection.
        let first = ks[0] as f64 * 0.25f64.powi(ks[0] as i32);
        let last = *ks.last().unwrap() as f64 * 0.25f64.powi(*ks.last().unwrap() as i32);
        assert!(last < first * 1e-20);
    }

    #[test]
    fn selection_satisfies_block_inequality() {
        // a_k = 1/(k² log²(k+1)).
        let values: Vec<f64> = (0..=140)
            .map(|k| {
                if k == 0 {
                    1.0
                } else {
                    1.0 / ((k * k) as f64 * ((k + 1) as f64).ln().powi(2))
                }
            })
            .collect();
        let sums = OctaveSums { base: 8.0, values: values.clone(), tail: 0.01 };
        let ks = select_subsequence(&sums, 64).unwrap();
        for (i, &k) in ks.iter().enumerate() {
            let n = i + 1;
            assert!(n <= k && k <= 2 * n);
            // Enclosing dyadic block of k.
            let mut m = 0;
            while (1usize << (m + 1)) < k {
                m += 1;
            }
            let block: f64 = ((1usize << m) + 1..=(1usize << (m + 1)))
                .map(|i| values[i])
                .sum();
            assert!(
                values[k] <= block.sqrt() / k as f64 + 1e-18,
                "n={n} k={k}: a={} block={block}",
                values[k]
            );
        }
    }

    #[test]
    fn selection_tie_break_is_deterministic() {
        let values = vec![1.0; 40];
        let sums = OctaveSums { base: 8.0, values, tail: 0.0 };
        let ks = select_subsequence(&sums, 7).unwrap();
        assert_eq!(ks, vec![2, 3, 5, 6, 9, 10, 11]);
    }

    #[test]
    fn circle_l1_single_pole_closed_form() {
        // ∫ dφ/|re^{iφ} − t|² = 2π/(r² − |t|²) for |t| < r.
        let h = MeromorphicParts {
            eval: Box::new(|z: Complex64| {
                let d = z - 1.0;
                Ok(1.0 / (d * d))
            }),
            deriv: Box::new(|z: Complex64| {
                let d = z - 1.0;
                Ok(-2.0 / (d * d * d))
            }),
            poles: Box::new(|_| vec![(Complex64::new(1.0, 0.0), 2)]),
            zeros: None,
        };
        let empty = ExclusionSet::empty();
        let v = circle_l1(&h, 3.0, 1e-10, &empty).unwrap();
        assert!((v - TAU / 8.0).abs() < 1e-9, "{v} vs {}", TAU / 8.0);
        // p = 1 consistency through circle_lp.
        let vp = circle_lp(&h, 3.0, 1.0, 1e-10, &empty).unwrap();
        assert!((v - vp).abs() < 2e-10);
    }

    #[test]
    fn circle_lp_constant_and_range_checks() {
        let h = MeromorphicParts {
            eval: Box::new(|_| Ok(Complex64::new(0.0, -2.0))),
            deriv: Box::new(|_| Ok(Complex64::new(0.0, 0.0))),
            poles: Box::new(|_| Vec::new()),
            zeros: None,
        };
        let empty = ExclusionSet::empty();
        let v = circle_lp(&h, 5.0, 0.5, 1e-10, &empty).unwrap();
        assert!((v - TAU * 2f64.sqrt()).abs() < 1e-8);
        assert!(circle_lp(&h, 5.0, 0.0, 1e-10, &empty).is_err());
        assert!(circle_lp(&h, 5.0, 1.5, 1e-10, &empty).is_err());
        // h ≡ 0 integrates to 0.
        let zero = MeromorphicParts {
            eval: Box::new(|_| Ok(Complex64::new(0.0, 0.0))),
            deriv: Box::new(|_| Ok(Complex64::new(0.0, 0.0))),
            poles: Box::new(|_| Vec::new()),
            zeros: None,
        };
        assert_eq!(circle_l1(&zero, 2.0, 1e-10, &empty).unwrap(), 0.0);
    }

    #[test]
    fn log_diagnostic_monomial_and_exclusion() {
        let h = MeromorphicParts {
            eval: Box::new(|z: Complex64| Ok(z * z)),
            deriv: Box::new(|z: Complex64| Ok(2.0 * z)),
            poles: Box::new(|_| Vec::new()),
            zeros: None,
        };
        let empty = ExclusionSet::empty();
        for &r in &[3.0, 10.0, 100.0] {
            let d = log_circle_diagnostic(&h, r, 1e-9, &empty).unwrap();
            assert!((d - 2.0).abs() < 1e-7, "r={r}: {d}");
        }
        let f = squares_cubed_kernel(1e3);
        let excl = build_exclusion_set(f.poles(), 1.0, 100.0).unwrap();
        assert!(matches!(
            log_circle_diagnostic(&f, 4.0, 1e-9, &excl),
            Err(Error::ExcludedRadius { .. })
        ));
    }

    #[test]
    fn good_radius_rows_spaced_and_clear() {
        let f = squares_cubed_kernel(3e6);
        let excl = build_exclusion_set(f.poles(), 1.0, 3e6 - 2.0).unwrap();
        let report = good_radius_sequence(&f, &excl, GoodRadiusMode::Octave, 3).unwrap();
        assert_eq!(report.rows.len(), 3);
        for w in report.rows.windows(2) {
            assert!(w[1].r >= 4.0 * w[0].r);
        }
        for row in &report.rows {
            assert!(!excl.contains(row.r));
            assert!(row.r >= row.big_r && row.r <= 2.0 * row.big_r * (1.0 + 1e-12));
            assert!((row.big_r - 2.0 * 8f64.powi(row.k_j as i32)).abs() < 1e-9 * row.big_r);
        }
        // I(r_j) decreasing for this configuration.
        assert!(report.rows[2].l1 < report.rows[0].l1);
        let csv = report.to_csv();
        assert!(csv.starts_with("j,k_j,R_j,r_j,I,measure\n"));
    }

    #[test]
    fn keldysh_measure_single_kernel_far_out() {
        let spec = PoleSpec::explicit(vec![(c64(2.0, 0.0), c64(1.0, 0.0))]).unwrap();
        let f = KernelSum::new(2, spec).unwrap();
        let m = keldysh_angular_measure(&f, 200.0, TAU / 4096.0).unwrap();
        assert_eq!(m.measure, 0.0);
        assert!((m.normalizer - c64(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn keldysh_measure_rejects_cancelling_coefficients() {
        let spec = PoleSpec::explicit(vec![
            (c64(2.0, 0.0), c64(1.0, 0.0)),
            (c64(-2.0, 0.0), c64(-1.0, 0.0)),
        ])
        .unwrap();
        let f = KernelSum::new(2, spec).unwrap();
        assert!(matches!(
            keldysh_angular_measure(&f, 100.0, TAU / 1024.0),
            Err(Error::Normalization { .. })
        ));
    }

    #[test]
    fn keldysh_measure_positive_near_poles() {
        // At a radius comparable to the poles the deviation set is nonempty.
        let f = squares_cubed_kernel(1e4);
        let m = keldysh_angular_measure(&f, 10.5, TAU / 8192.0).unwrap();
        assert!(m.measure > 0.0 && m.measure < TAU);
        assert!(m.measure.is_finite());
    }
}
