//! Scenario documents: schema, validation, and model construction.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use kslab_core::entire_zoo::{
    bi_inverse_square_expansion, cos_square_example, defect_half_example, sine_family,
    AiryFunction, AiryKind, CanonicalProduct, KreinSumSpec,
};
use kslab_core::kernel_sum::{CoeffLaw, KernelSum, PoleSpec, PowerPoles, SineLattice};
use kslab_core::nevanlinna::MeromorphicParts;
use kslab_core::ode_bridge::EntireHandle;
use kslab_core::Complex64;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub model: ModelSpec,
    pub analyses: Vec<Analysis>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_eval_tol")]
    pub eval: f64,
    #[serde(default = "default_quad_tol")]
    pub quadrature: f64,
}

fn default_eval_tol() -> f64 {
    1e-9
}

fn default_quad_tol() -> f64 {
    1e-6
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { eval: default_eval_tol(), quadrature: default_quad_tol() }
    }
}

/// Pole data interchange: explicit records, a named generator, or a named
/// bundled example.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Example {
        example: String,
        #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
        params: serde_json::Map<String, serde_json::Value>,
    },
    Generator {
        generator: String,
        #[serde(default)]
        params: serde_json::Map<String, serde_json::Value>,
        horizon: f64,
        #[serde(default = "default_kernel_order")]
        m: u32,
    },
    Poles {
        poles: Vec<PoleRecord>,
        #[serde(default = "default_kernel_order")]
        m: u32,
    },
}

fn default_kernel_order() -> u32 {
    2
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoleRecord {
    pub re_t: f64,
    pub im_t: f64,
    pub re_c: f64,
    pub im_c: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiiSpec {
    pub start: f64,
    pub ratio: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Analysis {
    /// Evaluate the kernel at explicit points, comparing against the
    /// model's closed form when one exists.
    Eval {
        points: Vec<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol: Option<f64>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        expect: Vec<Expectation>,
    },
    /// Locate zeros in |z| ≤ region_radius; optionally run the seeded
    /// rational winding self-test first.
    Zeros {
        region_radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_depth: Option<u32>,
        #[serde(default)]
        selftest_cases: usize,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        expect: Vec<Expectation>,
    },
    /// Characteristic table (n, N, m, T) over a radius grid.
    Nevanlinna {
        radii: RadiiSpec,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        expect: Vec<Expectation>,
    },
    /// Good-radius report with circle means and deviation measures.
    GoodRadii {
        count: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        expect: Vec<Expectation>,
    },
    /// Angular measure of {φ : |z²f/Σc − 1| ≥ ½} at one radius.
    Keldysh {
        radius: f64,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        expect: Vec<Expectation>,
    },
    /// Characteristic table with winding zero counts and the defect proxy.
    Defect {
        radii: RadiiSpec,
        fine: RadiiSpec,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        expect: Vec<Expectation>,
    },
    /// Residue condition + Q recovery for a named entire function.
    OdeCheck {
        entire: String,
        #[serde(default = "default_ode_count")]
        count: usize,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        expect: Vec<Expectation>,
    },
    /// Airy machinery: Wronskian table, Bi zeros, expansion residuals.
    AiryDemo {
        #[serde(default = "default_airy_zeros")]
        zero_count: usize,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        expect: Vec<Expectation>,
    },
}

fn default_ode_count() -> usize {
    20
}

fn default_airy_zeros() -> usize {
    40
}

impl Analysis {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Analysis::Eval { .. } => "eval",
            Analysis::Zeros { .. } => "zeros",
            Analysis::Nevanlinna { .. } => "nevanlinna",
            Analysis::GoodRadii { .. } => "good-radii",
            Analysis::Keldysh { .. } => "keldysh",
            Analysis::Defect { .. } => "defect",
            Analysis::OdeCheck { .. } => "ode-check",
            Analysis::AiryDemo { .. } => "airy-demo",
        }
    }

    pub fn expectations(&self) -> &[Expectation] {
        match self {
            Analysis::Eval { expect, .. }
            | Analysis::Zeros { expect, .. }
            | Analysis::Nevanlinna { expect, .. }
            | Analysis::GoodRadii { expect, .. }
            | Analysis::Keldysh { expect, .. }
            | Analysis::Defect { expect, .. }
            | Analysis::OdeCheck { expect, .. }
            | Analysis::AiryDemo { expect, .. } => expect,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub id: String,
    /// Acceptance-criterion ID this expectation enforces.
    pub criterion: String,
    pub metric: String,
    pub op: ExpectationOp,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ExpectationOp {
    Le,
    Ge,
    InRange,
    EqInt,
}

impl Scenario {
    /// Structural validation beyond what serde enforces.
    // `!(x > 0.0)` rejects NaN; `x <= 0.0` would accept it.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), String> {
        if self.name.is_empty() {
            return Err("scenario name must not be empty".into());
        }
        if self.analyses.is_empty() {
            return Err("scenario needs at least one analysis".into());
        }
        if !(self.tolerances.eval > 0.0 && self.tolerances.quadrature > 0.0) {
            return Err("tolerances must be positive".into());
        }
        match &self.model {
            ModelSpec::Example { example, .. } => {
                if !EXAMPLES.iter().any(|e| e.name == example) {
                    return Err(format!("unknown example '{example}'"));
                }
            }
            ModelSpec::Generator { generator, horizon, m, .. } => {
                if !["sine_lattice", "power_geometric", "power_power"].contains(&generator.as_str()) {
                    return Err(format!("unknown generator '{generator}'"));
                }
                if !(*horizon > 0.0) {
                    return Err("generator horizon must be positive".into());
                }
                if *m == 0 {
                    return Err("kernel order m must be ≥ 1".into());
                }
            }
            ModelSpec::Poles { poles, m } => {
                if poles.is_empty() {
                    return Err("explicit pole list must not be empty".into());
                }
                if *m == 0 {
                    return Err("kernel order m must be ≥ 1".into());
                }
            }
        }
        for a in &self.analyses {
            match a {
                Analysis::Nevanlinna { radii, .. } => validate_radii(radii)?,
                Analysis::Defect { radii, fine, .. } => {
                    validate_radii(radii)?;
                    validate_radii(fine)?;
                }
                Analysis::Zeros { region_radius, .. } => {
                    if !(*region_radius > 0.0) {
                        return Err("zeros region radius must be positive".into());
                    }
                }
                Analysis::GoodRadii { count, delta, .. } => {
                    if *count == 0 {
                        return Err("good-radii count must be ≥ 1".into());
                    }
                    if let Some(d) = delta {
                        if !(*d > 0.0) {
                            return Err("good-radii delta must be positive".into());
                        }
                    }
                }
                Analysis::Keldysh { radius, .. } => {
                    if !(*radius > 0.0) {
                        return Err("keldysh radius must be positive".into());
                    }
                }
                Analysis::OdeCheck { entire, .. } => {
                    if !["sin", "cos_square", "bi"].contains(&entire.as_str()) {
                        return Err(format!("unknown entire function '{entire}'"));
                    }
                }
                Analysis::Eval { points, .. } => {
                    if points.is_empty() {
                        return Err("eval analysis needs points".into());
                    }
                }
                Analysis::AiryDemo { zero_count, .. } => {
                    if *zero_count == 0 || *zero_count > 60 {
                        return Err("airy-demo zero_count must be in 1..=60".into());
                    }
                }
            }
            for e in a.expectations() {
                if e.op == ExpectationOp::InRange && e.hi.is_none() {
                    return Err(format!("expectation '{}' needs hi for in_range", e.id));
                }
            }
        }
        Ok(())
    }
}

#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn validate_radii(r: &RadiiSpec) -> Result<(), String> {
    if !(r.start > 0.0 && r.ratio > 1.0 && r.count >= 2) {
        return Err("radii spec needs start > 0, ratio > 1, count ≥ 2".into());
    }
    Ok(())
}

/// A constructed model: the kernel plus an optional closed-form companion.
pub struct Model {
    pub kernel: KernelSum,
    pub closed_form: Option<MeromorphicParts>,
    /// Exclusion exponent L appropriate for the pole family.
    pub exclusion_l: f64,
}

fn param_f64(
    params: &serde_json::Map<String, serde_json::Value>,
    key: &str,
    default: f64,
) -> Result<f64, String> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => v.as_f64().ok_or_else(|| format!("parameter '{key}' must be a number")),
    }
}

fn param_usize(
    params: &serde_json::Map<String, serde_json::Value>,
    key: &str,
    default: usize,
) -> Result<usize, String> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => v
            .as_u64()
            .map(|u| u as usize)
            .ok_or_else(|| format!("parameter '{key}' must be a nonnegative integer")),
    }
}

/// Catalog entry for a named bundled example.
pub struct ExampleInfo {
    pub name: &'static str,
    pub summary: &'static str,
    pub default_params: &'static str,
}

pub const EXAMPLES: [ExampleInfo; 7] = [
    ExampleInfo {
        name: "sine_family",
        summary: "a/sin²(bz−c) with its lattice kernel",
        default_params: "a=1, b=1, c=0, horizon_n=10000",
    },
    ExampleInfo {
        name: "cos_square",
        summary: "z/cos²(z²) with paired ±u_n kernel",
        default_params: "pairs=10000",
    },
    ExampleInfo {
        name: "bi_expansion",
        summary: "1/Bi² expansion over the three Airy zero families",
        default_params: "count=40",
    },
    ExampleInfo {
        name: "defect_half",
        summary: "f = −g′/g² for the canonical product with zeros n^α (defect ½)",
        default_params: "alpha=3, truncation=400",
    },
    ExampleInfo {
        name: "keldysh_n2",
        summary: "t_n = n², c_n = 2⁻ⁿ (Keldysh-type experiment)",
        default_params: "horizon=40000",
    },
    ExampleInfo {
        name: "krein_n3",
        summary: "first-order Cauchy sum Σ 1/(g′(t_n)(z−t_n)) for zeros n³",
        default_params: "truncation=2000",
    },
    ExampleInfo {
        name: "good_radii_n2",
        summary: "t_n = n², c_n = n⁻³ (good-radius configuration)",
        default_params: "horizon=1.4e8",
    },
];

/// Build the model named in the scenario.
pub fn build_model(spec: &ModelSpec) -> Result<Model, String> {
    match spec {
        ModelSpec::Example { example, params } => build_example(example, params),
        ModelSpec::Generator { generator, params, horizon, m } => {
            let rule: Arc<dyn kslab_core::kernel_sum::PoleRule> = match generator.as_str() {
                "sine_lattice" => Arc::new(SineLattice {
                    a: Complex64::new(param_f64(params, "a", 1.0)?, 0.0),
                    b: Complex64::new(param_f64(params, "b", 1.0)?, 0.0),
                    c: Complex64::new(param_f64(params, "c", 0.0)?, 0.0),
                }),
                "power_geometric" => Arc::new(
                    PowerPoles::new(
                        param_f64(params, "alpha", 2.0)?,
                        CoeffLaw::Geometric { ratio: param_f64(params, "ratio", 0.5)? },
                    )
                    .map_err(|e| e.to_string())?,
                ),
                "power_power" => Arc::new(
                    PowerPoles::new(
                        param_f64(params, "alpha", 2.0)?,
                        CoeffLaw::Power { beta: param_f64(params, "beta", 3.0)? },
                    )
                    .map_err(|e| e.to_string())?,
                ),
                other => return Err(format!("unknown generator '{other}'")),
            };
            let spec = PoleSpec::generated(rule, *horizon).map_err(|e| e.to_string())?;
            let kernel = KernelSum::new(*m, spec).map_err(|e| e.to_string())?;
            Ok(Model { kernel, closed_form: None, exclusion_l: 1.0 })
        }
        ModelSpec::Poles { poles, m } => {
            let entries: Vec<(Complex64, Complex64)> = poles
                .iter()
                .map(|p| {
                    (Complex64::new(p.re_t, p.im_t), Complex64::new(p.re_c, p.im_c))
                })
                .collect();
            let spec = PoleSpec::explicit(entries).map_err(|e| e.to_string())?;
            let kernel = KernelSum::new(*m, spec).map_err(|e| e.to_string())?;
            Ok(Model { kernel, closed_form: None, exclusion_l: 1.0 })
        }
    }
}

fn build_example(
    name: &str,
    params: &serde_json::Map<String, serde_json::Value>,
) -> Result<Model, String> {
    match name {
        "sine_family" => {
            let a = param_f64(params, "a", 1.0)?;
            let b = param_f64(params, "b", 1.0)?;
            let c = param_f64(params, "c", 0.0)?;
            let horizon_n = param_usize(params, "horizon_n", 10_000)?;
            let pair = sine_family(
                Complex64::new(a, 0.0),
                Complex64::new(b, 0.0),
                Complex64::new(c, 0.0),
                horizon_n,
            )
            .map_err(|e| e.to_string())?;
            Ok(Model { kernel: pair.kernel, closed_form: Some(pair.handle), exclusion_l: 1.0 })
        }
        "cos_square" => {
            let pairs = param_usize(params, "pairs", 10_000)?;
            let pair = cos_square_example(pairs).map_err(|e| e.to_string())?;
            Ok(Model { kernel: pair.kernel, closed_form: Some(pair.handle), exclusion_l: 1.0 })
        }
        "bi_expansion" => {
            let count = param_usize(params, "count", 40)?;
            let kernel = bi_inverse_square_expansion(count).map_err(|e| e.to_string())?;
            let closed = MeromorphicParts {
                eval: Box::new(|z| {
                    let v = AiryFunction::new(AiryKind::Bi).eval(z)?;
                    Ok(1.0 / (v * v))
                }),
                deriv: Box::new(|z| {
                    let bi = AiryFunction::new(AiryKind::Bi);
                    let (g, g1) = bi.value_and_deriv(z)?;
                    Ok(-2.0 * g1 / (g * g * g))
                }),
                poles: Box::new(|r| {
                    AiryFunction::new(AiryKind::Bi)
                        .zeros_within(r)
                        .map(|zs| zs.into_iter().map(|z| (z, 2)).collect())
                        .unwrap_or_default()
                }),
                zeros: Some(Box::new(|_| Vec::new())),
            };
            Ok(Model { kernel, closed_form: Some(closed), exclusion_l: 2.0 })
        }
        "defect_half" => {
            let alpha = param_f64(params, "alpha", 3.0)?;
            let truncation = param_usize(params, "truncation", 400)?;
            let ex = defect_half_example(alpha, truncation).map_err(|e| e.to_string())?;
            Ok(Model { kernel: ex.kernel, closed_form: Some(ex.cross_check), exclusion_l: 0.5 })
        }
        "keldysh_n2" => {
            let horizon = param_f64(params, "horizon", 4e4)?;
            let rule = Arc::new(
                PowerPoles::new(2.0, CoeffLaw::Geometric { ratio: 0.5 })
                    .map_err(|e| e.to_string())?,
            );
            let spec = PoleSpec::generated(rule, horizon).map_err(|e| e.to_string())?;
            let kernel = KernelSum::new(2, spec).map_err(|e| e.to_string())?;
            Ok(Model { kernel, closed_form: None, exclusion_l: 1.0 })
        }
        "krein_n3" => {
            let truncation = param_usize(params, "truncation", 2_000)?;
            let product = CanonicalProduct::power(3.0, truncation).map_err(|e| e.to_string())?;
            let spec =
                KreinSumSpec::from_truncated_product(&product, 0).map_err(|e| e.to_string())?;
            let entries: Vec<(Complex64, Complex64)> = spec
                .zeros
                .iter()
                .zip(&spec.derivs)
                .filter(|&(_, &d)| d.is_finite() && 1.0 / d != 0.0)
                .map(|(&t, &d)| (Complex64::new(t, 0.0), Complex64::new(1.0 / d, 0.0)))
                .collect();
            let kernel =
                KernelSum::new(1, PoleSpec::explicit(entries).map_err(|e| e.to_string())?)
                    .map_err(|e| e.to_string())?;
            let reference = Arc::new(product);
            let closed = MeromorphicParts {
                eval: Box::new(move |z| {
                    let g = reference.eval(z)?;
                    if g.norm() < 1e-280 {
                        return Err(kslab_core::Error::PoleHit { z, pole: z, dist: 0.0 });
                    }
                    Ok(1.0 / g)
                }),
                deriv: Box::new(|_| Err(kslab_core::Error::invalid("derivative not provided"))),
                poles: Box::new(|_| Vec::new()),
                zeros: None,
            };
            Ok(Model { kernel, closed_form: Some(closed), exclusion_l: 0.5 })
        }
        "good_radii_n2" => {
            let horizon = param_f64(params, "horizon", 1.4e8)?;
            let rule = Arc::new(
                PowerPoles::new(2.0, CoeffLaw::Power { beta: 3.0 }).map_err(|e| e.to_string())?,
            );
            let spec = PoleSpec::generated(rule, horizon).map_err(|e| e.to_string())?;
            let kernel = KernelSum::new(2, spec).map_err(|e| e.to_string())?;
            Ok(Model { kernel, closed_form: None, exclusion_l: 1.0 })
        }
        other => Err(format!("unknown example '{other}'")),
    }
}

/// Minimal runnable scenario for a catalog entry (used by `list --json`).
pub fn catalog_scenario(info: &ExampleInfo) -> Scenario {
    Scenario {
        name: format!("{}-demo", info.name),
        seed: 0,
        model: ModelSpec::Example {
            example: info.name.to_string(),
            params: serde_json::Map::new(),
        },
        analyses: vec![Analysis::Eval {
            points: vec![[0.4, 0.7]],
            tol: None,
            expect: Vec::new(),
        }],
        tolerances: Tolerances::default(),
        out_dir: None,
    }
}
