//! Scenario execution: analyses, artifacts, expectations.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use kslab_core::entire_zoo::{
    bi_expansion_residual_at_zero, bi_zeros, AiryFunction, AiryKind, BiZeroFamily,
    CosSquareEntire, SinEntire,
};
use kslab_core::good_radii::{
    good_radius_sequence, keldysh_angular_measure, GoodRadiusMode,
};
use kslab_core::kernel_sum::{build_exclusion_set, ExclusionSet};
use kslab_core::nevanlinna::{
    defect_estimate, geometric_radii, order_estimate, prepare_radius_grid, CharacteristicTable,
    FunctionHandle, RationalFunction, TableColumn, ZeroCountData,
};
use kslab_core::ode_bridge::{
    default_recovery_samples, ode_residual, recover_q, verify_zero_residue_condition,
    EntireHandle,
};
use kslab_core::poly::PolynomialC;
use kslab_core::util::{fmt_f64, SplitMix64};
use kslab_core::zero_finder::{
    locate_zeros, winding_number, zero_counts_up_to, Contour,
};
use kslab_core::Complex64;

use crate::scenario::{Analysis, Expectation, ExpectationOp, Model, Scenario};

/// Failure modes map onto the exit-code contract.
pub enum RunFailure {
    /// Exit 2: a numeric computation could not meet its contract.
    Numeric(String),
    /// Exit 3: results computed but an expectation failed.
    Expectation(String),
}

#[derive(Serialize)]
pub struct ExpectationOutcome {
    pub id: String,
    pub criterion: String,
    pub metric: String,
    pub observed: f64,
    pub passed: bool,
}

#[derive(Serialize)]
pub struct AnalysisReport {
    pub kind: String,
    pub artifacts: Vec<String>,
    pub metrics: BTreeMap<String, f64>,
    pub expectations: Vec<ExpectationOutcome>,
    pub passed: bool,
}

#[derive(Serialize)]
pub struct Summary {
    pub scenario: String,
    pub seed: u64,
    pub analyses: Vec<AnalysisReport>,
    pub passed: bool,
}

/// Write-then-rename so partial files never appear under the final name.
fn write_atomic(path: &Path, contents: &str) -> Result<(), String> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| format!("write {}: {e}", tmp.display()))?;
    fs::rename(&tmp, path).map_err(|e| format!("rename {}: {e}", path.display()))?;
    Ok(())
}

fn eval_expectations(
    expectations: &[Expectation],
    metrics: &BTreeMap<String, f64>,
) -> Result<Vec<ExpectationOutcome>, String> {
    let mut out = Vec::with_capacity(expectations.len());
    for e in expectations {
        let observed = *metrics
            .get(&e.metric)
            .ok_or_else(|| format!("expectation '{}': unknown metric '{}'", e.id, e.metric))?;
        let passed = match e.op {
            ExpectationOp::Le => observed <= e.value,
            ExpectationOp::Ge => observed >= e.value,
            ExpectationOp::InRange => observed >= e.value && observed <= e.hi.unwrap(),
            ExpectationOp::EqInt => (observed - e.value).abs() < 0.5,
        };
        out.push(ExpectationOutcome {
            id: e.id.clone(),
            criterion: e.criterion.clone(),
            metric: e.metric.clone(),
            observed,
            passed,
        });
    }
    Ok(out)
}

struct AnalysisCtx<'a> {
    scenario: &'a Scenario,
    model: &'a Model,
    exclusion: &'a ExclusionSet,
    out_dir: &'a Path,
}

pub fn run_scenario(
    scenario: &Scenario,
    out_dir: &Path,
    seed_override: Option<u64>,
    threads: usize,
) -> Result<Summary, RunFailure> {
    let model = crate::scenario::build_model(&scenario.model).map_err(RunFailure::Numeric)?;
    let mut scenario = scenario.clone();
    if let Some(seed) = seed_override {
        scenario.seed = seed;
    }
    fs::create_dir_all(out_dir)
        .map_err(|e| RunFailure::Numeric(format!("create {}: {e}", out_dir.display())))?;
    // A best-effort exclusion set for the analyses that need one.
    let horizon = model.kernel.poles().horizon();
    let exclusion = build_exclusion_set(
        model.kernel.poles(),
        model.exclusion_l,
        (horizon - 2.0).max(10.0),
    )
    .unwrap_or_else(|_| ExclusionSet::empty());

    let ctx = AnalysisCtx {
        scenario: &scenario,
        model: &model,
        exclusion: &exclusion,
        out_dir,
    };

    let indexed: Vec<(usize, &Analysis)> = scenario.analyses.iter().enumerate().collect();
    let mut reports: Vec<Option<Result<AnalysisReport, String>>> =
        (0..indexed.len()).map(|_| None).collect();
    if threads <= 1 {
        for (i, analysis) in &indexed {
            reports[*i] = Some(run_analysis(&ctx, *i, analysis));
        }
    } else {
        // Deterministic regardless of scheduling: results keyed by index.
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for chunk in indexed.chunks(indexed.len().div_ceil(threads)) {
                let ctx_ref = &ctx;
                handles.push(scope.spawn(move || {
                    chunk
                        .iter()
                        .map(|(i, a)| (*i, run_analysis(ctx_ref, *i, a)))
                        .collect::<Vec<_>>()
                }));
            }
            for h in handles {
                for (i, r) in h.join().expect("analysis thread panicked") {
                    reports[i] = Some(r);
                }
            }
        });
    }

    let mut analyses = Vec::with_capacity(reports.len());
    for r in reports {
        match r.expect("analysis not run") {
            Ok(rep) => analyses.push(rep),
            Err(e) => return Err(RunFailure::Numeric(e)),
        }
    }
    let passed = analyses.iter().all(|a| a.passed);
    let summary = Summary { scenario: scenario.name.clone(), seed: scenario.seed, analyses, passed };
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_atomic(&out_dir.join("summary.json"), &text).map_err(RunFailure::Numeric)?;
    if !passed {
        let failed: Vec<String> = summary
            .analyses
            .iter()
            .flat_map(|a| a.expectations.iter())
            .filter(|e| !e.passed)
            .map(|e| format!("{} ({}: observed {})", e.id, e.criterion, e.observed))
            .collect();
        return Err(RunFailure::Expectation(failed.join("; ")));
    }
    Ok(summary)
}

fn artifact(ctx: &AnalysisCtx, index: usize, name: &str, contents: &str) -> Result<String, String> {
    let file = format!("{index:02}-{name}");
    write_atomic(&ctx.out_dir.join(&file), contents)?;
    Ok(file)
}

fn finish(
    analysis: &Analysis,
    artifacts: Vec<String>,
    metrics: BTreeMap<String, f64>,
) -> Result<AnalysisReport, String> {
    let expectations = eval_expectations(analysis.expectations(), &metrics)?;
    let passed = expectations.iter().all(|e| e.passed);
    Ok(AnalysisReport {
        kind: analysis.kind_name().to_string(),
        artifacts,
        metrics,
        expectations,
        passed,
    })
}

fn run_analysis(
    ctx: &AnalysisCtx,
    index: usize,
    analysis: &Analysis,
) -> Result<AnalysisReport, String> {
    match analysis {
        Analysis::Eval { points, tol, .. } => run_eval(ctx, index, analysis, points, *tol),
        Analysis::Zeros { region_radius, max_depth, selftest_cases, .. } => {
            run_zeros(ctx, index, analysis, *region_radius, *max_depth, *selftest_cases)
        }
        Analysis::Nevanlinna { radii, .. } => run_nevanlinna(ctx, index, analysis, radii, None),
        Analysis::Defect { radii, fine, .. } => {
            run_nevanlinna(ctx, index, analysis, radii, Some(fine))
        }
        Analysis::GoodRadii { count, delta, .. } => {
            run_good_radii(ctx, index, analysis, *count, *delta)
        }
        Analysis::Keldysh { radius, .. } => run_keldysh(ctx, index, analysis, *radius),
        Analysis::OdeCheck { entire, count, .. } => {
            run_ode_check(ctx, index, analysis, entire, *count)
        }
        Analysis::AiryDemo { zero_count, .. } => run_airy_demo(ctx, index, analysis, *zero_count),
    }
}

fn run_eval(
    ctx: &AnalysisCtx,
    index: usize,
    analysis: &Analysis,
    points: &[[f64; 2]],
    tol: Option<f64>,
) -> Result<AnalysisReport, String> {
    let tol = tol.unwrap_or(ctx.scenario.tolerances.eval);
    let mut csv = String::from("re_z,im_z,re_f,im_f,tail_bound,terms,re_closed,im_closed,abs_error\n");
    let mut max_bound = 0f64;
    let mut max_err = 0f64;
    let mut max_rel = 0f64;
    let mut bound_violations = 0usize;
    for &[re, im] in points {
        let z = Complex64::new(re, im);
        let r = ctx.model.kernel.evaluate(z, tol).map_err(|e| e.to_string())?;
        max_bound = max_bound.max(r.tail_bound);
        let closed = match &ctx.model.closed_form {
            Some(h) => h.eval(z, tol).ok(),
            None => None,
        };
        let (cr, ci, err) = match closed {
            Some(c) => {
                let err = (r.value - c).norm();
                max_err = max_err.max(err);
                if c.norm() > 0.0 {
                    max_rel = max_rel.max(err / c.norm());
                }
                if err > r.tail_bound {
                    bound_violations += 1;
                }
                (fmt_f64(c.re), fmt_f64(c.im), fmt_f64(err))
            }
            None => (String::new(), String::new(), String::new()),
        };
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            fmt_f64(z.re),
            fmt_f64(z.im),
            fmt_f64(r.value.re),
            fmt_f64(r.value.im),
            fmt_f64(r.tail_bound),
            r.terms_used,
            cr,
            ci,
            err
        ));
    }
    let file = artifact(ctx, index, "eval.csv", &csv)?;
    let mut metrics = BTreeMap::new();
    metrics.insert("points".into(), points.len() as f64);
    metrics.insert("max_tail_bound".into(), max_bound);
    if ctx.model.closed_form.is_some() {
        metrics.insert("max_closed_form_error".into(), max_err);
        metrics.insert("max_rel_closed_form_error".into(), max_rel);
        metrics.insert("bound_violations".into(), bound_violations as f64);
    }
    finish(analysis, vec![file], metrics)
}

fn run_zeros(
    ctx: &AnalysisCtx,
    index: usize,
    analysis: &Analysis,
    region_radius: f64,
    max_depth: Option<u32>,
    selftest_cases: usize,
) -> Result<AnalysisReport, String> {
    let mut metrics = BTreeMap::new();
    if selftest_cases > 0 {
        let mut rng = SplitMix64::new(ctx.scenario.seed);
        let mut failures = 0usize;
        for _ in 0..selftest_cases {
            let f = RationalFunction::random_in_disk(&mut rng, 6, 0.8);
            let expect: i64 = f.zero_factors().iter().map(|&(_, m)| m as i64).sum::<i64>()
                - f.pole_factors().iter().map(|&(_, m)| m as i64).sum::<i64>();
            match winding_number(
                &f,
                &Contour::Circle { center: Complex64::new(0.0, 0.0), radius: 1.0 },
            ) {
                Ok(w) if w.winding == expect => {}
                _ => failures += 1,
            }
        }
        metrics.insert("selftest_cases".into(), selftest_cases as f64);
        metrics.insert("selftest_failures".into(), failures as f64);
    }
    let region = Contour::Circle { center: Complex64::new(0.0, 0.0), radius: region_radius };
    let set =
        locate_zeros(&ctx.model.kernel, &region, max_depth.unwrap_or(18)).map_err(|e| e.to_string())?;
    let file = artifact(ctx, index, "zeros.csv", &set.to_csv())?;
    metrics.insert("zero_count".into(), set.zeros.len() as f64);
    metrics.insert("total_multiplicity".into(), set.total_multiplicity() as f64);
    metrics.insert("unresolved_cells".into(), set.unresolved.len() as f64);
    finish(analysis, vec![file], metrics)
}

fn run_nevanlinna(
    ctx: &AnalysisCtx,
    index: usize,
    analysis: &Analysis,
    radii: &crate::scenario::RadiiSpec,
    fine: Option<&crate::scenario::RadiiSpec>,
) -> Result<AnalysisReport, String> {
    let moduli: Vec<f64> = ctx
        .model
        .kernel
        .poles()
        .entries()
        .iter()
        .map(|e| e.t.norm())
        .collect();
    let raw = geometric_radii(radii.start, radii.ratio, radii.count).map_err(|e| e.to_string())?;
    let grid = prepare_radius_grid(&raw, &moduli, ctx.exclusion, 2e-3);
    let zero_data = match fine {
        Some(fs) => {
            let fraw = geometric_radii(fs.start, fs.ratio, fs.count).map_err(|e| e.to_string())?;
            let fgrid = prepare_radius_grid(&fraw, &moduli, ctx.exclusion, 2e-3);
            let counts = zero_counts_up_to(&ctx.model.kernel, &fgrid).map_err(|e| e.to_string())?;
            Some(ZeroCountData { radii: fgrid, counts })
        }
        None => None,
    };
    let table = CharacteristicTable::compute(
        &ctx.model.kernel,
        &grid,
        ctx.scenario.tolerances.quadrature,
        zero_data.as_ref(),
    )
    .map_err(|e| e.to_string())?;
    let file = artifact(ctx, index, "characteristic.csv", &table.to_csv())?;
    let mut metrics = BTreeMap::new();
    metrics.insert("rows".into(), table.rows.len() as f64);
    if let Ok((slope, res)) = order_estimate(&table, TableColumn::T) {
        metrics.insert("order_T".into(), slope);
        metrics.insert("order_T_residual".into(), res);
    }
    if let Ok((slope, _)) = order_estimate(&table, TableColumn::NIntegrated) {
        metrics.insert("order_N".into(), slope);
    }
    if zero_data.is_some() {
        if let Ok((slope, _)) = order_estimate(&table, TableColumn::NZeros) {
            metrics.insert("order_N_zeros".into(), slope);
        }
        let defect = defect_estimate(&table).map_err(|e| e.to_string())?;
        metrics.insert("defect_proxy".into(), defect.delta_proxy);
        if let Some(&(_, ratio)) = defect.ratios.last() {
            metrics.insert("last_ratio".into(), ratio);
        }
    }
    finish(analysis, vec![file], metrics)
}

fn run_good_radii(
    ctx: &AnalysisCtx,
    index: usize,
    analysis: &Analysis,
    count: usize,
    delta: Option<f64>,
) -> Result<AnalysisReport, String> {
    let mode = match delta {
        Some(d) => GoodRadiusMode::Delta(d),
        None => GoodRadiusMode::Octave,
    };
    let mut report = good_radius_sequence(&ctx.model.kernel, ctx.exclusion, mode, count)
        .map_err(|e| e.to_string())?;
    // Fill the deviation-measure column at the first and last good radii.
    let resolution = std::f64::consts::TAU / 4096.0;
    let idx_last = report.rows.len() - 1;
    for idx in [0usize, idx_last] {
        let r = report.rows[idx].r;
        if let Ok(m) = keldysh_angular_measure(&ctx.model.kernel, r, resolution) {
            report.rows[idx].measure = Some(m.measure);
        }
    }
    let file = artifact(ctx, index, "good-radii.csv", &report.to_csv())?;
    let mut metrics = BTreeMap::new();
    metrics.insert("rows".into(), report.rows.len() as f64);
    metrics.insert("i_first".into(), report.rows[0].l1);
    metrics.insert("i_last".into(), report.rows[idx_last].l1);
    metrics.insert("i_ratio".into(), report.rows[idx_last].l1 / report.rows[0].l1);
    let spacing_ok = report
        .rows
        .windows(2)
        .all(|w| w[1].r >= mode_spacing(mode) * w[0].r * (1.0 - 1e-12));
    metrics.insert("spacing_ok".into(), if spacing_ok { 1.0 } else { 0.0 });
    if let (Some(m0), Some(m1)) = (report.rows[0].measure, report.rows[idx_last].measure) {
        metrics.insert("measure_first".into(), m0);
        metrics.insert("measure_last".into(), m1);
    }
    finish(analysis, vec![file], metrics)
}

fn mode_spacing(mode: GoodRadiusMode) -> f64 {
    match mode {
        GoodRadiusMode::Octave => 4.0,
        GoodRadiusMode::Delta(d) => 1.0 + d,
    }
}

fn run_keldysh(
    ctx: &AnalysisCtx,
    index: usize,
    analysis: &Analysis,
    radius: f64,
) -> Result<AnalysisReport, String> {
    let resolution = std::f64::consts::TAU / 8192.0;
    let m = keldysh_angular_measure(&ctx.model.kernel, radius, resolution)
        .map_err(|e| e.to_string())?;
    let json = format!(
        "{{\"radius\":{},\"measure\":{},\"uncertainty\":{},\"normalizer_re\":{},\"normalizer_im\":{}}}",
        fmt_f64(radius),
        fmt_f64(m.measure),
        fmt_f64(m.uncertainty),
        fmt_f64(m.normalizer.re),
        fmt_f64(m.normalizer.im)
    );
    let file = artifact(ctx, index, "keldysh.json", &json)?;
    let mut metrics = BTreeMap::new();
    metrics.insert("measure".into(), m.measure);
    metrics.insert("uncertainty".into(), m.uncertainty);
    metrics.insert("normalizer_abs".into(), m.normalizer.norm());
    finish(analysis, vec![file], metrics)
}

fn run_ode_check(
    ctx: &AnalysisCtx,
    index: usize,
    analysis: &Analysis,
    entire: &str,
    count: usize,
) -> Result<AnalysisReport, String> {
    // Each named instance carries its polynomial P and the known Q.
    let (g, p, q_known): (Box<dyn EntireHandle>, PolynomialC, PolynomialC) = match entire {
        "sin" => (
            Box::new(SinEntire),
            PolynomialC::from_real(&[1.0]),
            PolynomialC::from_real(&[1.0]),
        ),
        "cos_square" => (
            Box::new(CosSquareEntire),
            PolynomialC::from_real(&[0.0, 1.0]),
            PolynomialC::from_real(&[0.0, 0.0, 0.0, 4.0]),
        ),
        "bi" => (
            Box::new(AiryFunction::new(AiryKind::Bi)),
            PolynomialC::from_real(&[1.0]),
            PolynomialC::from_real(&[0.0, -1.0]),
        ),
        other => return Err(format!("unknown entire function '{other}'")),
    };
    let residue = verify_zero_residue_condition(g.as_ref(), &p, count, 1e-6)
        .map_err(|e| e.to_string())?;
    let samples = default_recovery_samples(g.as_ref()).map_err(|e| e.to_string())?;
    let cap = q_known.degree() + 2;
    let (q, fit_residual) =
        recover_q(g.as_ref(), &p, &samples, cap).map_err(|e| e.to_string())?;
    let coeff_err = (0..=q.degree().max(q_known.degree()))
        .map(|k| (q.coeff(k) - q_known.coeff(k)).norm())
        .fold(0.0, f64::max);
    let res = ode_residual(g.as_ref(), &p, &q, &samples).map_err(|e| e.to_string())?;
    let file = artifact(ctx, index, "ode-check.json", &residue.to_json())?;
    let mut metrics = BTreeMap::new();
    metrics.insert("residue_max".into(), residue.rows.iter().map(|r| r.residual).fold(0.0, f64::max));
    metrics.insert("residue_pass".into(), if residue.pass { 1.0 } else { 0.0 });
    metrics.insert("q_degree".into(), q.degree() as f64);
    metrics.insert("q_coeff_error".into(), coeff_err);
    metrics.insert("fit_residual".into(), fit_residual);
    metrics.insert("ode_residual".into(), res);
    finish(analysis, vec![file], metrics)
}

fn run_airy_demo(
    ctx: &AnalysisCtx,
    index: usize,
    analysis: &Analysis,
    zero_count: usize,
) -> Result<AnalysisReport, String> {
    let ai = AiryFunction::new(AiryKind::Ai);
    let bi = AiryFunction::new(AiryKind::Bi);
    let mut wronskian_err = 0f64;
    for k in 0..10 {
        let z = Complex64::from_polar(0.5 + 0.35 * k as f64, 0.61 * k as f64);
        let (a, ap) = ai.value_and_deriv(z).map_err(|e| e.to_string())?;
        let (b, bp) = bi.value_and_deriv(z).map_err(|e| e.to_string())?;
        wronskian_err =
            wronskian_err.max((a * bp - ap * b - 1.0 / std::f64::consts::PI).norm());
    }
    let mut csv = String::from("family,index,re,im,deriv_re,deriv_im,residual\n");
    let real = bi_zeros(BiZeroFamily::Real, zero_count).map_err(|e| e.to_string())?;
    let upper = bi_zeros(BiZeroFamily::UpperComplex, zero_count).map_err(|e| e.to_string())?;
    let mut q_low = f64::INFINITY;
    let mut q_high = 0f64;
    for z in &real {
        let n = z.index as f64;
        let q = z.location.norm() / n.powf(2.0 / 3.0);
        q_low = q_low.min(q);
        q_high = q_high.max(q);
        csv.push_str(&format!(
            "b,{},{},{},{},{},{}\n",
            z.index,
            fmt_f64(z.location.re),
            fmt_f64(z.location.im),
            fmt_f64(z.deriv.re),
            fmt_f64(z.deriv.im),
            fmt_f64(z.residual)
        ));
    }
    for z in &upper {
        csv.push_str(&format!(
            "beta,{},{},{},{},{},{}\n",
            z.index,
            fmt_f64(z.location.re),
            fmt_f64(z.location.im),
            fmt_f64(z.deriv.re),
            fmt_f64(z.deriv.im),
            fmt_f64(z.residual)
        ));
        let c = z.location.conj();
        let d = z.deriv.conj();
        csv.push_str(&format!(
            "beta_conj,{},{},{},{},{},{}\n",
            z.index,
            fmt_f64(c.re),
            fmt_f64(c.im),
            fmt_f64(d.re),
            fmt_f64(d.im),
            fmt_f64(z.residual)
        ));
    }
    let file = artifact(ctx, index, "airy-zeros.csv", &csv)?;
    let residuals =
        bi_expansion_residual_at_zero(&[15, 30, 60]).map_err(|e| e.to_string())?;
    let mut metrics = BTreeMap::new();
    metrics.insert("wronskian_max_err".into(), wronskian_err);
    metrics.insert("bn_ratio_min".into(), q_low);
    metrics.insert("bn_ratio_max".into(), q_high);
    metrics.insert("expansion_residual_15".into(), residuals[0]);
    metrics.insert("expansion_residual_30".into(), residuals[1]);
    metrics.insert("expansion_residual_60".into(), residuals[2]);
    finish(analysis, vec![file], metrics)
}

/// Output directory default: kslab-out/<scenario-name>.
pub fn default_out_dir(scenario: &Scenario) -> PathBuf {
    match &scenario.out_dir {
        Some(d) => PathBuf::from(d),
        None => PathBuf::from("kslab-out").join(&scenario.name),
    }
}
