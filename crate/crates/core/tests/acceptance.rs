//! Acceptance suite: one test per shipped criterion, each printing a
//! PASS line with its measured runtime (run with `--nocapture` to see them).

use std::f64::consts::{PI, TAU};
use std::sync::Arc;
use std::time::Instant;

use kslab_core::entire_zoo::{
    bi_expansion_residual_at_zero, bi_zeros, cos_square_example, defect_half_example,
    sine_family, AiryFunction, AiryKind, BiZeroFamily, CanonicalProduct, CosSquareEntire,
    KreinSumSpec, SinEntire,
};
use kslab_core::good_radii::{
    good_radius_sequence, keldysh_angular_measure, log_circle_diagnostic, select_subsequence,
    selection_horizon_index, GoodRadiusMode, OctaveSums,
};
use kslab_core::kernel_sum::{build_exclusion_set, CoeffLaw, KernelSum, PoleSpec, PowerPoles};
use kslab_core::nevanlinna::{
    defect_estimate, geometric_radii, order_estimate, prepare_radius_grid, CharacteristicTable,
    FunctionHandle, RationalFunction, TableColumn, ZeroCountData,
};
use kslab_core::ode_bridge::{
    critical_rays, default_recovery_samples, ode_residual, recover_q, sector_test, EntireHandle,
};
use kslab_core::poly::PolynomialC;
use kslab_core::util::SplitMix64;
use kslab_core::zero_finder::{
    locate_zeros, winding_number, zero_count_in, zero_counts_up_to, Contour,
};
use kslab_core::Complex64;

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn acceptance_01_sine_identity() {
    let t0 = Instant::now();
    // 2·10⁴ symmetric lattice terms (n ∈ [−10⁴, 10⁴]).
    let pair = sine_family(c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), 10_000).unwrap();
    let mut rng = SplitMix64::new(11);
    let mut checked = 0usize;
    let mut worst = 0f64;
    while checked < 20 {
        let z = c64(rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0));
        if z.norm() > 5.0 {
            continue;
        }
        let nearest_pole = (z.re / PI).round() * PI;
        if (z - c64(nearest_pole, 0.0)).norm() < 0.3 {
            continue;
        }
        checked += 1;
        let r = pair.kernel.evaluate(z, 1e-7).unwrap();
        let s = z.sin();
        let err = (r.value - 1.0 / (s * s)).norm();
        assert!(err <= r.tail_bound, "error {err:.3e} exceeds bound {:.3e} at {z}", r.tail_bound);
        assert!(err <= 1e-6, "error {err:.3e} > 1e-6 at {z}");
        worst = worst.max(err);
    }
    let dt = t0.elapsed();
    assert!(dt.as_secs_f64() < 2.0, "runtime {dt:?} over 2 s");
    println!("AC-01 PASS sine identity: max error {worst:.3e} over 20 points [{dt:?}]");
}

#[test]
fn acceptance_02_cos_square_identity() {
    let t0 = Instant::now();
    let pair = cos_square_example(10_000).unwrap();
    let mut worst = 0f64;
    for k in 0..10 {
        let z = Complex64::from_polar(0.4 + 0.25 * k as f64, 0.7 * k as f64);
        let truth = pair.handle.eval(z, 1e-14).unwrap();
        let r = pair.kernel.evaluate(z, 1e-9).unwrap();
        let rel = (r.value - truth).norm() / truth.norm();
        assert!(rel <= 1e-6, "relative error {rel:.3e} at {z}");
        worst = worst.max(rel);
    }
    let dt = t0.elapsed();
    assert!(dt.as_secs_f64() < 2.0, "runtime {dt:?} over 2 s");
    println!("AC-02 PASS cos(z²) identity: max relative error {worst:.3e} [{dt:?}]");
}

#[test]
fn acceptance_03_winding_oracle() {
    let t0 = Instant::now();
    let mut rng = SplitMix64::new(20_240_817);
    let disk = Contour::Circle { center: c64(0.0, 0.0), radius: 1.0 };
    for case in 0..200 {
        let f = RationalFunction::random_in_disk(&mut rng, 6, 0.8);
        let zsum: i64 = f.zero_factors().iter().map(|&(_, m)| m as i64).sum();
        let psum: i64 = f.pole_factors().iter().map(|&(_, m)| m as i64).sum();
        let w = winding_number(&f, &disk).unwrap();
        assert_eq!(w.winding, zsum - psum, "winding mismatch in case {case}");
        let count = zero_count_in(&f, &disk).unwrap();
        assert_eq!(count as i64, zsum, "count mismatch in case {case}");
    }
    let dt = t0.elapsed();
    assert!(dt.as_secs_f64() < 30.0, "runtime {dt:?} over 30 s");
    println!("AC-03 PASS winding oracle: 200/200 seeded rationals [{dt:?}]");
}

#[test]
fn acceptance_04_keldysh_experiment() {
    let t0 = Instant::now();
    let rule = Arc::new(PowerPoles::new(2.0, CoeffLaw::Geometric { ratio: 0.5 }).unwrap());
    let f = KernelSum::new(2, PoleSpec::generated(rule, 4e4).unwrap()).unwrap();
    let excl = build_exclusion_set(f.poles(), 1.0, 2e4).unwrap();
    let moduli: Vec<f64> = f.poles().entries().iter().map(|e| e.t.norm()).collect();

    // Zero counts on a fine grid, then the characteristic table over
    // ≥ 8 geometric radii bracketing [10², 10⁴] outside F.
    let fine_raw = geometric_radii(0.5, 10f64.powf(1.0 / 16.0), 70).unwrap();
    let fine = prepare_radius_grid(&fine_raw, &moduli, &excl, 2e-3);
    let counts = zero_counts_up_to(&f, &fine).unwrap();
    let zc = ZeroCountData { radii: fine, counts };

    let crit_raw = geometric_radii(95.0, (1.2e4f64 / 95.0).powf(1.0 / 9.0), 10).unwrap();
    let crits = prepare_radius_grid(&crit_raw, &moduli, &excl, 2e-3);
    assert!(crits.len() >= 8);
    for &r in &crits {
        assert!(!excl.contains(r));
    }
    let table = CharacteristicTable::compute(&f, &crits, 1e-6, Some(&zc)).unwrap();
    let (order_poles, _) = order_estimate(&table, TableColumn::NIntegrated).unwrap();
    let (order_zeros, _) = order_estimate(&table, TableColumn::NZeros).unwrap();
    assert!(
        (order_poles - order_zeros).abs() <= 0.15,
        "orders differ: {order_poles} vs {order_zeros}"
    );
    assert!((order_poles - 0.5).abs() <= 0.15, "N(r,f) order {order_poles}");
    assert!((order_zeros - 0.5).abs() <= 0.15, "N(r,1/f) order {order_zeros}");
    let defect = defect_estimate(&table).unwrap();
    let last_ratio = defect.ratios.last().unwrap().1;
    assert!(
        1.0 - last_ratio <= 0.25,
        "defect proxy at largest radius {:.4}",
        1.0 - last_ratio
    );
    let dt = t0.elapsed();
    assert!(dt.as_secs_f64() < 600.0, "runtime {dt:?} over 10 min");
    println!(
        "AC-04 PASS Keldysh: orders N {order_poles:.3} / N(1/f) {order_zeros:.3}, defect proxy {:.3} [{dt:?}]",
        1.0 - last_ratio
    );
}

#[test]
fn acceptance_05_defect_half() {
    let t0 = Instant::now();
    let ex = defect_half_example(3.0, 400).unwrap();
    let f = &ex.kernel;
    let excl = build_exclusion_set(f.poles(), 0.5, 4e3).unwrap();
    let moduli: Vec<f64> = f.poles().entries().iter().map(|e| e.t.norm()).collect();

    // Counting grid within the double-precision range of this example
    // (beyond r ≈ 3·10³ the kernel's cancellation noise swamps the phase).
    let fine_raw = geometric_radii(1.6, 10f64.powf(1.0 / 12.0), 39).unwrap();
    let fine = prepare_radius_grid(&fine_raw, &moduli, &excl, 2e-3);
    let counts = zero_counts_up_to(f, &fine).unwrap();
    let zc = ZeroCountData { radii: fine, counts };

    let crit_raw = [25.0, 60.0, 150.0, 400.0, 900.0, 1870.0, 2160.0, 2495.0];
    let crits = prepare_radius_grid(&crit_raw, &moduli, &excl, 2e-3);
    let table = CharacteristicTable::compute(f, &crits, 1e-6, Some(&zc)).unwrap();
    let n = table.rows.len();
    for row in &table.rows[n - 3..] {
        let ratio = row.n_zeros.unwrap() / row.n_integrated;
        assert!(
            (0.4..=0.6).contains(&ratio),
            "N(r,1/f)/N(r,f) = {ratio:.4} at r = {}",
            row.r
        );
    }

    // Exactly one zero in each of the first 10 inter-pole gaps.
    for n in 1..=10u64 {
        let a = (n as f64).powi(3);
        let b = ((n + 1) as f64).powi(3);
        let h = 0.25 * (b - a);
        let region = Contour::Rectangle {
            lo: c64(a + 1e-3 * (b - a), -h),
            hi: c64(b - 1e-3 * (b - a), h),
        };
        let set = locate_zeros(f, &region, 20).unwrap();
        assert!(set.unresolved.is_empty(), "gap {n}: unresolved cells");
        assert_eq!(set.zeros.len(), 1, "gap {n}: {} zeros", set.zeros.len());
        assert_eq!(set.zeros[0].multiplicity, 1);
    }
    let dt = t0.elapsed();
    assert!(dt.as_secs_f64() < 300.0, "runtime {dt:?} over 5 min");
    let last = table.rows.last().unwrap();
    println!(
        "AC-05 PASS defect-half: top ratio {:.4}, one zero per gap (10 gaps) [{dt:?}]",
        last.n_zeros.unwrap() / last.n_integrated
    );
}

#[test]
fn acceptance_06_and_12_good_radii() {
    let t0 = Instant::now();
    let count = 6usize;
    let k_need = selection_horizon_index(count);
    let horizon = 8f64.powi(k_need as i32 + 1) * 1.01;
    let rule = Arc::new(PowerPoles::new(2.0, CoeffLaw::Power { beta: 3.0 }).unwrap());
    let f = KernelSum::new(2, PoleSpec::generated(rule, horizon).unwrap()).unwrap();
    let excl = build_exclusion_set(f.poles(), 1.0, horizon - 2.0).unwrap();

    let report = good_radius_sequence(&f, &excl, GoodRadiusMode::Octave, count).unwrap();
    assert_eq!(report.rows.len(), 6);
    for w in report.rows.windows(2) {
        assert!(w[1].r >= 4.0 * w[0].r, "spacing violated");
    }
    for row in &report.rows {
        assert!(!excl.contains(row.r), "r_{} inside F", row.j);
    }
    let l1: Vec<f64> = report.rows.iter().map(|r| r.l1).collect();
    assert!(l1[5] < l1[0] / 2.0, "I(r6) = {} not < I(r1)/2 = {}", l1[5], l1[0] / 2.0);
    // Overall decreasing trend: each row beats the one two octaves back.
    for k in 2..6 {
        assert!(l1[k] < l1[k - 2]);
    }
    let m1 = keldysh_angular_measure(&f, report.rows[0].r, TAU / 4096.0).unwrap();
    let m6 = keldysh_angular_measure(&f, report.rows[5].r, TAU / 4096.0).unwrap();
    assert!(
        m6.measure < m1.measure,
        "measure at r6 {} not below r1 {}",
        m6.measure,
        m1.measure
    );

    // Criterion 12 (runtime included here): m(r_j, f)/log r_j bounded by 10.
    let mut worst_diag = 0f64;
    for row in &report.rows {
        let d = log_circle_diagnostic(&f, row.r, 1e-6, &excl).unwrap();
        assert!(d <= 10.0, "diagnostic {d} at r_{}", row.j);
        worst_diag = worst_diag.max(d);
    }

    let dt = t0.elapsed();
    assert!(dt.as_secs_f64() < 300.0, "runtime {dt:?} over 5 min");
    println!(
        "AC-06 PASS good radii: I(r1) {:.3e} → I(r6) {:.3e}, measures {:.4} → {:.4} [{dt:?}]",
        l1[0], l1[5], m1.measure, m6.measure
    );
    println!("AC-12 PASS circle diagnostic: max m(r_j)/log r_j = {worst_diag:.4} ≤ 10 [shared runtime]");
}

#[test]
fn acceptance_07_q_recovery() {
    let t0 = Instant::now();
    // sin ⇒ Q = 1 to 1e−8.
    let p1 = PolynomialC::from_real(&[1.0]);
    let samples = default_recovery_samples(&SinEntire).unwrap();
    let (q, _) = recover_q(&SinEntire, &p1, &samples, 5).unwrap();
    assert_eq!(q.degree(), 0);
    assert!((q.coeff(0) - c64(1.0, 0.0)).norm() <= 1e-8);
    assert!(ode_residual(&SinEntire, &p1, &q, &samples).unwrap() <= 1e-9);

    // cos(z²), P = z ⇒ Q = 4z³ to 1e−6 per coefficient.
    let pz = PolynomialC::from_real(&[0.0, 1.0]);
    let samples = default_recovery_samples(&CosSquareEntire).unwrap();
    let (q, _) = recover_q(&CosSquareEntire, &pz, &samples, 6).unwrap();
    assert_eq!(q.degree(), 3);
    let want = PolynomialC::from_real(&[0.0, 0.0, 0.0, 4.0]);
    for k in 0..=3 {
        assert!((q.coeff(k) - want.coeff(k)).norm() <= 1e-6, "coeff {k}");
    }
    assert!(ode_residual(&CosSquareEntire, &pz, &q, &samples).unwrap() <= 1e-9);

    // Bi ⇒ Q = −z to 1e−6.
    let bi = AiryFunction::new(AiryKind::Bi);
    let samples = default_recovery_samples(&bi).unwrap();
    let (q, _) = recover_q(&bi, &p1, &samples, 4).unwrap();
    assert_eq!(q.degree(), 1);
    assert!((q.coeff(1) - c64(-1.0, 0.0)).norm() <= 1e-6);
    assert!(q.coeff(0).norm() <= 1e-6);
    assert!(ode_residual(&bi, &p1, &q, &samples).unwrap() <= 1e-9);

    let dt = t0.elapsed();
    assert!(dt.as_secs_f64() < 10.0, "runtime {dt:?} over 10 s");
    println!("AC-07 PASS Q recovery: sin→1, cos(z²)→4z³, Bi→−z [{dt:?}]");
}

#[test]
fn acceptance_08_critical_rays() {
    let t0 = Instant::now();
    let q = PolynomialC::from_real(&[0.0, -1.0]);
    let fam = critical_rays(&q).unwrap();
    let expect = [-PI / 3.0, PI / 3.0, PI];
    assert_eq!(fam.angles.len(), 3);
    for (a, e) in fam.angles.iter().zip(expect) {
        assert!((a - e).abs() < 1e-14, "angle {a} vs {e}");
    }
    // β₁..β₁₀ distances to the ray arg = π/3 are decreasing.
    let betas = bi_zeros(BiZeroFamily::UpperComplex, 10).unwrap();
    let dists: Vec<f64> = betas
        .iter()
        .map(|z| fam.distance_to_ray(z.location, PI / 3.0))
        .collect();
    for w in dists.windows(2) {
        assert!(w[1] < w[0], "distances not decreasing: {dists:?}");
    }
    // Sector test with α = π/4 < π/3 reports the β family outside.
    let pts: Vec<Complex64> = betas.iter().map(|z| z.location).collect();
    let verdict = sector_test(&pts, PI / 4.0, 1).unwrap();
    assert_eq!(verdict.outside, pts.len());
    assert!(!verdict.tail_inside);
    let dt = t0.elapsed();
    assert!(dt.as_secs_f64() < 60.0, "runtime {dt:?} over 1 min");
    println!(
        "AC-08 PASS critical rays: angles exact, β distances {:.3} → {:.3} decreasing, sector outside {} / {} [{dt:?}]",
        dists[0], dists[9], verdict.outside, verdict.total
    );
}

#[test]
fn acceptance_09_bi_machinery() {
    let t0 = Instant::now();
    // Wronskian at 10 points to 1e−10.
    let ai = AiryFunction::new(AiryKind::Ai);
    let bi = AiryFunction::new(AiryKind::Bi);
    let points = [
        c64(0.0, 0.0),
        c64(2.0, 0.0),
        c64(-3.0, 0.0),
        c64(1.0, 1.0),
        c64(-2.0, 1.5),
        c64(0.5, -2.0),
        c64(-4.0, 0.5),
        c64(3.0, 1.0),
        c64(0.0, 3.0),
        c64(-1.0, -1.0),
    ];
    for &z in &points {
        let (a, ap) = ai.value_and_deriv(z).unwrap();
        let (b, bp) = bi.value_and_deriv(z).unwrap();
        assert!(
            (a * bp - ap * b - 1.0 / PI).norm() <= 1e-10,
            "Wronskian off at {z}"
        );
    }
    // Modulus and derivative laws for n ≤ 40 within [0.5, 3.5].
    let zeros = bi_zeros(BiZeroFamily::Real, 40).unwrap();
    for (i, z) in zeros.iter().enumerate() {
        let n = (i + 1) as f64;
        let q1 = z.location.norm() / n.powf(2.0 / 3.0);
        let q2 = z.deriv.norm() / n.powf(1.0 / 6.0);
        assert!((0.5..=3.5).contains(&q1), "|b_n|/n^(2/3) = {q1}");
        assert!((0.5..=3.5).contains(&q2), "|Bi'(b_n)|/n^(1/6) = {q2}");
    }
    // Expansion residual at 0 decreasing over 15 → 30 → 60, ≤ 1e−3 at 60.
    let res = bi_expansion_residual_at_zero(&[15, 30, 60]).unwrap();
    assert!(res[1] < res[0] && res[2] < res[1], "residuals not decreasing: {res:?}");
    assert!(res[2] <= 1e-3, "residual at 60 = {:.3e}", res[2]);
    let dt = t0.elapsed();
    assert!(dt.as_secs_f64() < 120.0, "runtime {dt:?} over 2 min");
    println!(
        "AC-09 PASS Bi machinery: Wronskian ≤ 1e−10, laws in [0.5, 3.5], residuals {:.2e} → {:.2e} → {:.2e} [{dt:?}]",
        res[0], res[1], res[2]
    );
}

#[test]
fn acceptance_10_krein_identity() {
    let t0 = Instant::now();
    let reference = CanonicalProduct::power(3.0, 100_000).unwrap();
    let points = [c64(-2.0, 0.0), c64(0.0, 5.0), c64(10.0, 10.0)];
    let mut errors = Vec::new();
    for &n in &[10_000usize, 20_000] {
        let g = CanonicalProduct::power(3.0, n).unwrap();
        let spec = KreinSumSpec::from_truncated_product(&g, 0).unwrap();
        let e: Vec<f64> = points
            .iter()
            .map(|&z| {
                let sum = krein_regularized_sum_shim(&spec, z);
                let direct = 1.0 / reference.eval(z).unwrap();
                (sum - direct).norm()
            })
            .collect();
        errors.push(e);
    }
    for (i, &z) in points.iter().enumerate() {
        assert!(errors[0][i] <= 1e-4, "error {:.3e} at {z} (N=10⁴)", errors[0][i]);
        assert!(
            errors[1][i] < errors[0][i],
            "no strict improvement at {z}: {:.3e} vs {:.3e}",
            errors[1][i],
            errors[0][i]
        );
    }
    let dt = t0.elapsed();
    assert!(dt.as_secs_f64() < 60.0, "runtime {dt:?} over 1 min");
    println!(
        "AC-10 PASS Krein identity: errors {:.2e}/{:.2e}/{:.2e} strictly improved at 2·10⁴ [{dt:?}]",
        errors[0][0], errors[0][1], errors[0][2]
    );
}

fn krein_regularized_sum_shim(spec: &KreinSumSpec, z: Complex64) -> Complex64 {
    kslab_core::entire_zoo::krein_regularized_sum(spec, z, 1e-16)
        .unwrap()
        .value
}

#[test]
fn acceptance_11_subsequence_selection() {
    let t0 = Instant::now();
    let count = 64usize;
    let len = 140usize;
    let mut rng = SplitMix64::new(40_407);
    let sequences: Vec<(String, Vec<f64>)> = vec![
        ("4^-k".into(), (0..=len).map(|k| 0.25f64.powi(k as i32)).collect()),
        (
            "1/(k² log²(k+1))".into(),
            (0..=len)
                .map(|k| {
                    if k == 0 {
                        1.0
                    } else {
                        1.0 / ((k * k) as f64 * ((k + 1) as f64).ln().powi(2))
                    }
                })
                .collect(),
        ),
        (
            "seeded u_k/k^2.2".into(),
            (0..=len)
                .map(|k| {
                    if k == 0 {
                        1.0
                    } else {
                        rng.uniform(0.1, 1.0) / (k as f64).powf(2.2)
                    }
                })
                .collect(),
        ),
    ];
    for (name, values) in &sequences {
        let sums = OctaveSums { base: 8.0, values: values.clone(), tail: 0.0 };
        let ks = select_subsequence(&sums, count).unwrap();
        assert_eq!(ks.len(), count);
        for (i, &k) in ks.iter().enumerate() {
            let n = i + 1;
            assert!(n <= k && k <= 2 * n, "{name}: bracket fails at n={n}, k={k}");
            // Enclosing dyadic block [2^m+1, 2^{m+1}] of k.
            let mut m = 0usize;
            while (1usize << (m + 1)) < k {
                m += 1;
            }
            let block_sum: f64 =
                ((1usize << m) + 1..=(1usize << (m + 1)).min(len)).map(|j| values[j]).sum();
            assert!(
                values[k] <= block_sum.sqrt() / k as f64 + 1e-18,
                "{name}: inequality fails at n={n}, k={k}"
            );
        }
    }
    let dt = t0.elapsed();
    assert!(dt.as_secs_f64() < 1.0, "runtime {dt:?} over 1 s");
    println!("AC-11 PASS subsequence selection: 3 sequences × 64 indices bracketed [{dt:?}]");
}
