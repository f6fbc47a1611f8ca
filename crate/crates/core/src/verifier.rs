//! Configuration-driven batch verification of the calculus identities.
//!
//! A run assembles a list of tasks, evaluates each at sampled points with its
//! own deterministic RNG stream, and turns the per-point residuals into
//! [`CheckReport`]s sorted by check id.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::almost_einstein::{
    ae_residual, aesum_residuals, asc_scalar, classify, einstein_chart, einstein_residual, ext_residual,
    parallel_residual, quadric_ae, quadric_locus, scale_tractor_derivative, AEStructure, Locus, ScalarType,
};
use crate::curvature::{covariant_derivative, curvature_packet, riemann_tensor, unit_multi_index};
use crate::error::{Error, Result};
use crate::hypersurface::{
    boundary_chart, check_i_equals_n, intrinsic_vs_ambient, minimal_scale, normal_and_mean_curvature,
    normal_tractor, normal_tractor_derivative, project_tangential, restrict_tractor, second_fundamental_form,
    LevelSetHypersurface,
};
use crate::jet::{Jet, Scalar};
use crate::metric::{conformal_rescale, BoundarySchouten, MetricChart, Monomial, ScalarField};
use crate::sphere_model::{
    ambient_correspondence_check, cap_chart, flat_density, homogeneity_residual, interpolate,
    interpolation_root, section_metric, standard_pair, AmbientFlatSpace,
};
use crate::tractor::{
    change_scale, commutator_residual, divergence_residual, splitting_operator, tractor_curvature,
    tractor_metric, w_tractor, yang_mills_residual, TractorValue,
};

pub const SUITES: [&str; 11] = [
    "bianchi",
    "conformal_invariance",
    "prolongation",
    "classification",
    "hypersurface",
    "aesum",
    "ext",
    "yangmills_d4",
    "sphere_model",
    "fg_normal_form",
    "negative_controls",
];

/// One row of the anchor table.
#[derive(Debug, Clone, Copy)]
pub struct CheckSpec {
    pub id: &'static str,
    pub anchor: &'static str,
    pub tolerance: f64,
    /// Negative control: expected to exceed its tolerance.
    pub control: bool,
}

const fn check(id: &'static str, tolerance: f64, anchor: &'static str) -> CheckSpec {
    CheckSpec { id, anchor, tolerance, control: false }
}

const fn control(id: &'static str, tolerance: f64, anchor: &'static str) -> CheckSpec {
    CheckSpec { id, anchor, tolerance, control: true }
}

/// The reviewed anchor table: every check id with the statement it tests.
pub const CHECKS: &[CheckSpec] = &[
    check("aesum.bach_cotton", 1e-8, "almost Einstein integrability: σB_ab + (d−4) n^c A_acb = 0"),
    check("aesum.normal_bach", 1e-8, "almost Einstein integrability: n^a B_ab = 0"),
    check("aesum.normal_cotton", 1e-8, "almost Einstein integrability: n^c A_cab = 0"),
    check("aesum.weyl_cotton", 1e-8, "almost Einstein integrability: σA_cab + n^d C_abcd = 0"),
    check("bianchi.conformally_flat", 1e-10, "tractor curvature vanishes on conformally flat models"),
    check("bianchi.cotton_divergence", 1e-9, "Cotton tensor is divergence free: ∇^a A_abc = 0"),
    check("bianchi.schouten_divergence", 1e-9, "contracted Bianchi identity: ∇^a P_ab = ∇_b J"),
    check("bianchi.tractor_commutator", 1e-8, "tractor curvature formula equals the commutator [∇_a, ∇_b] on tractors"),
    check("bianchi.tractor_divergence", 1e-7, "divergence of tractor curvature in terms of Cotton and Bach"),
    check("bianchi.weyl_bianchi", 1e-9, "second Bianchi identity for the Weyl tensor: ∇_[a C_bc]de via Cotton"),
    check("bianchi.weyl_divergence", 1e-9, "Weyl divergence: ∇^e C_eabc = (d−3) A_abc"),
    check("classification.einstein", 1e-8, "off the zero locus ḡ = σ⁻²g has Ric = −(d−1)|I|² ḡ"),
    check("classification.null_jet", 1e-12, "scalar-flat zero points are isolated: σ = 0 and dσ = 0 there"),
    check("classification.null_laplacian", 1e-8, "at a scalar-flat zero point Δσ ≠ 0, with ρ = Δσ/d of conformal weight −1"),
    check("classification.space_form", 1e-8, "Einstein representatives of the model quadrics are the hyperbolic, round and flat metrics"),
    check("classification.types", 1e-12, "the sign of |I|² classifies the structure and its zero locus"),
    check("conformal_invariance.ae_operator", 1e-9, "trace-free (∇∇σ + Pσ) is conformally covariant of weight 1"),
    check("conformal_invariance.asc", 1e-9, "the scalar S(σ) is conformally invariant"),
    check("conformal_invariance.connection", 1e-9, "tractor connection commutes with change of scale"),
    check("conformal_invariance.normal_tractor", 1e-9, "normal tractor of a hypersurface is conformally invariant"),
    check("conformal_invariance.restriction", 1e-9, "restriction of tangential tractors commutes with change of scale"),
    check("conformal_invariance.splitting", 1e-9, "the splitting operator D is conformally invariant"),
    check("conformal_invariance.tractor_metric", 1e-9, "tractor metric is preserved by change of scale"),
    check("conformal_invariance.weyl", 1e-9, "Weyl tensor C_ab^c_d is conformally invariant"),
    check("ext.d_tilde", 1e-6, "I^A 𝔻̃_A W_BCEF = 0 for an Einstein scale in d ≥ 5"),
    check("ext.w_i", 1e-9, "W-tractor annihilated by a parallel scale tractor"),
    check("ext.w_x", 1e-10, "W-tractor annihilated by the canonical tractor X"),
    check("fg_normal_form.einstein", 1e-8, "Poincaré–Einstein normal form over conformally flat boundaries has Ric = −(d−1)g"),
    check("hypersurface.geodesic", 1e-8, "in a minimal scale the zero locus of an almost Einstein scale is totally geodesic"),
    check("hypersurface.i_equals_n", 1e-9, "the scale tractor restricts to the normal tractor along the zero locus"),
    check("hypersurface.intrinsic", 1e-8, "intrinsic and ambient tractor calculus agree on the boundary sphere"),
    check("hypersurface.minimal", 1e-8, "minimal scale sets the mean curvature to zero"),
    check("hypersurface.normal_parallel", 1e-9, "normal tractor is parallel along an umbilic hypersurface"),
    check("hypersurface.umbilic", 1e-9, "zero locus of a scalar-negative scale is totally umbilic"),
    check("hypersurface.unit_defining", 1e-10, "|ds|²_g = 1 along the zero locus for the normalized scale s = σ/|I|"),
    control("negative_controls.ellipsoid_intrinsic", 1e-8, "non-umbilic ellipsoid breaks the intrinsic/ambient agreement"),
    control("negative_controls.ellipsoid_umbilic", 1e-9, "non-umbilic ellipsoid has nonzero trace-free second fundamental form"),
    control("negative_controls.non_ae_normal", 1e-9, "a non-almost-Einstein scale does not restrict to the normal tractor"),
    control("negative_controls.non_ae_parallel", 1e-8, "a non-almost-Einstein scale has non-parallel Dσ"),
    control("negative_controls.non_einstein", 1e-8, "a generic metric is not Einstein"),
    check("prolongation.ae_operator", 1e-10, "quadric scales on flat space solve trace-free (∇∇σ + Pσ) = 0"),
    check("prolongation.asc", 1e-10, "S(σ) = −|I|² for almost Einstein scales"),
    check("prolongation.length", 1e-10, "|I|² = |b|² − 4ac for the quadric a + b·x + c|x|²"),
    check("prolongation.parallel", 1e-10, "almost Einstein scales have parallel Dσ"),
    check("sphere_model.basis_parallel", 1e-9, "every constant ambient vector gives a parallel tractor"),
    check("sphere_model.cap_curvature", 1e-8, "cap metrics have constant sectional curvature −ℋ(I, I)"),
    check("sphere_model.flat_curvature", 1e-10, "the model sphere has flat tractor connection"),
    check("sphere_model.homogeneity", 1e-12, "Euler homogeneity of ℋ on the null cone"),
    check("sphere_model.interpolation_length", 1e-10, "|I_t|² = −cos 2t along the standard interpolation"),
    check("sphere_model.lift_independence", 1e-11, "section metric is independent of the lift of tangent vectors"),
    check("sphere_model.roots", 1e-8, "every point lies on the zero locus of some interpolating structure"),
    check("sphere_model.tractor_metric", 1e-10, "tractor metric and X-pairing match the ambient form"),
    check("yangmills_d4.bach", 1e-8, "four-dimensional almost Einstein structures are Bach flat"),
    check("yangmills_d4.divergence", 1e-7, "four-dimensional almost Einstein tractor connections are Yang–Mills"),
    check("yangmills_d4.w_tractor", 1e-8, "the W-tractor vanishes for four-dimensional Einstein metrics"),
];

pub fn check_spec(id: &str) -> Option<&'static CheckSpec> {
    let base = id.split('[').next().unwrap_or(id);
    CHECKS.iter().find(|c| c.id == base)
}

/// A user model: a chart and an optional scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub chart: MetricChart,
    #[serde(default)]
    pub sigma: Option<ScalarField>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(default)]
    pub seed: u64,
    /// Sample points per check (per structure for the prolongation suite).
    #[serde(default = "default_points")]
    pub points: usize,
    /// Half-width of the coordinate sampling box.
    #[serde(default = "default_box", rename = "box")]
    pub sample_box: f64,
    /// Empty means every suite.
    #[serde(default)]
    pub suites: Vec<String>,
    /// Per-check overrides, keyed by check id (with or without model suffix).
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default = "default_tol_scale")]
    pub tol_scale: f64,
    #[serde(default)]
    pub models: Vec<ModelSpec>,
    /// Record wall time per check (breaks byte-identical output).
    #[serde(default)]
    pub timing: bool,
}

fn default_points() -> usize {
    20
}

fn default_box() -> f64 {
    0.5
}

fn default_tol_scale() -> f64 {
    1.0
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 0,
            points: default_points(),
            sample_box: default_box(),
            suites: Vec::new(),
            tolerances: BTreeMap::new(),
            tol_scale: default_tol_scale(),
            models: Vec::new(),
            timing: false,
        }
    }
}

pub const MAX_POINTS: usize = 10_000;

impl SuiteConfig {
    /// Parses and validates a JSON document; syntax errors carry line and
    /// column.
    pub fn from_json(text: &str) -> Result<Self> {
        let config: SuiteConfig = serde_json::from_str(text).map_err(|e| {
            Error::Config(format!("line {}, column {}: {}", e.line(), e.column(), strip_position(&e)))
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        for s in &self.suites {
            if !SUITES.contains(&s.as_str()) {
                return Err(Error::Config(format!("unknown suite {s:?} (known: {})", SUITES.join(", "))));
            }
        }
        if self.points == 0 || self.points > MAX_POINTS {
            return Err(Error::Config(format!("points must be in 1..={MAX_POINTS}, got {}", self.points)));
        }
        if !(self.sample_box.is_finite() && self.sample_box > 0.0) {
            return Err(Error::Config(format!("box must be positive, got {}", self.sample_box)));
        }
        if !(self.tol_scale.is_finite() && self.tol_scale > 0.0) {
            return Err(Error::Config(format!("tol_scale must be positive, got {}", self.tol_scale)));
        }
        for (id, tol) in &self.tolerances {
            if check_spec(id).is_none() {
                return Err(Error::Config(format!("tolerance for unknown check {id:?}")));
            }
            if !(tol.is_finite() && *tol > 0.0) {
                return Err(Error::Config(format!("tolerance for {id} must be positive, got {tol}")));
            }
        }
        let mut names = BTreeSet::new();
        for (k, m) in self.models.iter().enumerate() {
            let name = model_name(m, k);
            if !names.insert(name.clone()) {
                return Err(Error::Config(format!("duplicate model name {name:?}")));
            }
            m.chart
                .validate()
                .map_err(|e| Error::Config(format!("model {name}: {e}")))?;
            if m.chart.dim() < 3 {
                return Err(Error::Config(format!("model {name}: checks need dimension ≥ 3")));
            }
        }
        Ok(())
    }

    fn selected(&self, suite: &str) -> bool {
        self.suites.is_empty() || self.suites.iter().any(|s| s == suite)
    }

    fn tolerance(&self, id: &str, spec: &CheckSpec) -> f64 {
        let base = id.split('[').next().unwrap_or(id);
        let t = self
            .tolerances
            .get(id)
            .or_else(|| self.tolerances.get(base))
            .copied()
            .unwrap_or(spec.tolerance);
        t * self.tol_scale
    }
}

fn strip_position(e: &serde_json::Error) -> String {
    let s = e.to_string();
    match s.rfind(" at line ") {
        Some(i) => s[..i].to_string(),
        None => s,
    }
}

fn model_name(m: &ModelSpec, k: usize) -> String {
    m.name.clone().unwrap_or_else(|| format!("model{k}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// A negative control that failed as designed.
    ExpectedFail,
    /// A negative control that unexpectedly passed.
    UnexpectedPass,
}

impl Verdict {
    pub fn is_ok(self) -> bool {
        matches!(self, Verdict::Pass | Verdict::ExpectedFail)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::ExpectedFail => "XFAIL",
            Verdict::UnexpectedPass => "XPASS",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub id: String,
    pub anchor: String,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub model: String,
    pub points: usize,
    pub seed: u64,
    pub millis: u64,
}

/// 0 iff every verdict is pass or expected-fail.
pub fn exit_status(reports: &[CheckReport]) -> i32 {
    if reports.iter().all(|r| r.verdict.is_ok()) {
        0
    } else {
        1
    }
}

type Residuals = Vec<Vec<f64>>;
type Runner = Box<dyn Fn(&mut ChaCha8Rng, &Sampling) -> Result<Residuals> + Send + Sync>;

#[derive(Debug, Clone, Copy)]
struct Sampling {
    points: usize,
    half_width: f64,
}

/// A unit of work producing residuals for one or more checks on one model.
struct Task {
    ids: Vec<&'static str>,
    suffix: String,
    model: String,
    run: Runner,
}

fn task(ids: &[&'static str], model: impl Into<String>, run: Runner) -> Task {
    Task {
        ids: ids.to_vec(),
        suffix: String::new(),
        model: model.into(),
        run,
    }
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Runs the selected suites. Errors are configuration or model errors; check
/// failures are reported through verdicts.
pub fn run(config: &SuiteConfig) -> Result<Vec<CheckReport>> {
    config.validate()?;
    let tasks = build_tasks(config);
    let sampling = Sampling {
        points: config.points,
        half_width: config.sample_box,
    };
    let exec = |t: &Task| -> Result<Vec<CheckReport>> {
        let key = format!("{}{}", t.ids[0], t.suffix);
        let seed = config.seed ^ fnv1a(&key);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = Instant::now();
        let residuals = (t.run)(&mut rng, &sampling).map_err(|e| match e {
            Error::Config(m) => Error::Config(m),
            other => Error::Config(format!("{key} on {}: {other}", t.model)),
        })?;
        let millis = if config.timing { start.elapsed().as_millis() as u64 } else { 0 };
        t.ids
            .iter()
            .zip(residuals)
            .map(|(id, r)| {
                let full = format!("{id}{}", t.suffix);
                let spec = check_spec(id).expect("every task id is in the anchor table");
                if r.is_empty() {
                    return Err(Error::Config(format!("{full}: no admissible sample points on {}", t.model)));
                }
                let tolerance = config.tolerance(&full, spec);
                let max = r.iter().fold(0.0f64, |m, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(*v) });
                let mean = r.iter().sum::<f64>() / r.len() as f64;
                let within = max <= tolerance;
                let verdict = match (spec.control, within) {
                    (false, true) => Verdict::Pass,
                    (false, false) => Verdict::Fail,
                    (true, true) => Verdict::UnexpectedPass,
                    (true, false) => Verdict::ExpectedFail,
                };
                Ok(CheckReport {
                    id: full,
                    anchor: spec.anchor.to_string(),
                    max_residual: max,
                    mean_residual: mean,
                    tolerance,
                    verdict,
                    model: t.model.clone(),
                    points: r.len(),
                    seed,
                    millis,
                })
            })
            .collect()
    };
    #[cfg(feature = "parallel")]
    let results: Vec<Result<Vec<CheckReport>>> = tasks.par_iter().map(exec).collect();
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<Vec<CheckReport>>> = tasks.iter().map(exec).collect();
    let mut reports = Vec::new();
    for r in results {
        reports.extend(r?);
    }
    reports.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(reports)
}

/// Per-check table, one row per report, followed by a summary line.
pub fn render_text(reports: &[CheckReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<6} {:<46} {:>10} {:>10} {:>8} {:>6}  anchor [model]",
        "result", "check", "max", "mean", "tol", "points"
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{:<6} {:<46} {:>10.3e} {:>10.3e} {:>8.1e} {:>6}  {} [{}]",
            r.verdict.as_str(),
            r.id,
            r.max_residual,
            r.mean_residual,
            r.tolerance,
            r.points,
            r.anchor,
            r.model
        );
    }
    let count = |v: Verdict| reports.iter().filter(|r| r.verdict == v).count();
    let _ = writeln!(
        out,
        "{} checks: {} pass, {} expected fail, {} fail, {} unexpected pass",
        reports.len(),
        count(Verdict::Pass),
        count(Verdict::ExpectedFail),
        count(Verdict::Fail),
        count(Verdict::UnexpectedPass)
    );
    out
}

pub fn render_json(reports: &[CheckReport]) -> String {
    let mut s = serde_json::to_string_pretty(reports).expect("reports serialize");
    s.push('\n');
    s
}

/// Human-readable catalog of the chart and scale families.
pub fn list_models() -> String {
    let charts: &[(&str, &str)] = &[
        ("euclidean", "{dim}"),
        ("round_sphere_stereo", "{dim, radius = 1}  stereographic chart of the round sphere"),
        ("poincare_ball", "{dim}  hyperbolic metric on the unit ball"),
        ("product_spheres", "{d1, r1, d2, r2}  S^d1(r1) × S^d2(r2), Einstein when (d1−1)/r1² = (d2−1)/r2²"),
        (
            "fg_hyperbolic_normal_form",
            "{boundary: chart, schouten: {kind: zero | proportional {factor} | explicit {components}}}  s⁻²(ds² + g_s)",
        ),
        ("polynomial_perturbation", "{dim, terms: [{i, j, coeff (|coeff| ≤ 0.1), powers}]}  δ + polynomial"),
        ("cap_chart", "{ambient: [I⁰, I¹, …, I^(d+1)]}  section ℋ(I, X) = 1 of the null cone"),
        ("conformal_rescale", "{base: chart, omega: scale}  e^{2ω} g"),
        ("embedded_sphere", "{ambient: chart, center, semi_axes}  induced metric on an ellipsoid"),
    ];
    let scales: &[(&str, &str)] = &[
        ("constant(value)", "{kind: constant, value}"),
        ("coordinate(index)", "{kind: coordinate, index}"),
        ("quadric(a,b,c)", "{kind: quadric, a, b: [..], c}  a + b·x + c|x|²"),
        ("polynomial(terms)", "{kind: polynomial, terms: [{coeff, powers}]}"),
        ("sum(terms)", "{kind: sum, terms: [scale]}"),
        ("product(factors)", "{kind: product, factors: [scale]}"),
        ("scaled(factor, field)", "{kind: scaled, factor, field}"),
        ("exp(field) / log(field) / sin(field) / cos(field)", "{kind: exp | log | sin | cos, field}"),
        ("power(field, exponent)", "{kind: power, field, exponent}"),
    ];
    let mut out = String::from("Chart families (\"family\" tag):\n");
    for (n, s) in charts {
        let _ = writeln!(out, "  {n:<28} {s}");
    }
    out.push_str("Scale families (\"kind\" tag, weight-1 densities in the chart trivialization):\n");
    for (n, s) in scales {
        let _ = writeln!(out, "  {n:<28} {s}");
    }
    out.push_str("Suites: ");
    out.push_str(&SUITES.join(", "));
    out.push('\n');
    out
}

// ---------------------------------------------------------------- helpers

fn sample(
    rng: &mut ChaCha8Rng,
    d: usize,
    n: usize,
    half_width: f64,
    accept: impl Fn(&[f64]) -> bool,
) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    for _ in 0..10 * n {
        if out.len() == n {
            break;
        }
        let p: Vec<f64> = (0..d).map(|_| rng.gen_range(-half_width..=half_width)).collect();
        if accept(&p) {
            out.push(p);
        }
    }
    out
}

fn in_chart(rng: &mut ChaCha8Rng, chart: &MetricChart, s: &Sampling) -> Vec<Vec<f64>> {
    sample(rng, chart.dim(), s.points, s.half_width, |p| chart.contains(p))
}

fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 0.2 && r <= 1.0 {
            return v.iter().map(|x| x / r).collect();
        }
    }
}

fn random_omega(rng: &mut ChaCha8Rng, d: usize) -> ScalarField {
    let terms = (0..3)
        .map(|_| {
            let mut powers = vec![0u8; d];
            for _ in 0..rng.gen_range(1..=2) {
                powers[rng.gen_range(0..d)] += 1;
            }
            Monomial {
                coeff: rng.gen_range(-0.3..0.3),
                powers,
            }
        })
        .collect();
    ScalarField::Polynomial { terms }
}

fn gradient(f: &ScalarField, p: &[f64]) -> Result<Vec<f64>> {
    let j: Jet = f.jet_at(p, 1)?;
    (0..p.len()).map(|i| j.derivative(&unit_multi_index(p.len(), &[i]))).collect()
}

fn exp_of(omega: &ScalarField) -> ScalarField {
    ScalarField::Exp {
        field: Box::new(omega.clone()),
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn rescaled(ae: &AEStructure, omega: &ScalarField) -> AEStructure {
    AEStructure::new(conformal_rescale(&ae.chart, omega.clone()), exp_of(omega).times(ae.sigma.clone()))
}

fn fixed_omega(d: usize) -> ScalarField {
    let mut a = vec![0u8; d];
    a[0] = 1;
    let mut b = vec![0u8; d];
    b[1] = 1;
    b[d - 1] += 1;
    ScalarField::Polynomial {
        terms: vec![Monomial { coeff: 0.15, powers: a }, Monomial { coeff: -0.1, powers: b }],
    }
}

fn ellipsoid3() -> LevelSetHypersurface {
    // x²/4 + y² + z² − 1
    LevelSetHypersurface::new(
        MetricChart::euclidean(3),
        ScalarField::Polynomial {
            terms: vec![
                Monomial { coeff: 0.25, powers: vec![2, 0, 0] },
                Monomial { coeff: 1.0, powers: vec![0, 2, 0] },
                Monomial { coeff: 1.0, powers: vec![0, 0, 2] },
                Monomial { coeff: -1.0, powers: vec![0, 0, 0] },
            ],
        },
    )
}

/// Random unit ambient vector with `ℋ(v, v) = sign` (sign ∈ {−1, 1}), in
/// the past half when timelike so a cap chart exists.
fn ambient_unit(rng: &mut ChaCha8Rng, d: usize, sign: f64) -> Vec<f64> {
    let amb = AmbientFlatSpace::new(d);
    loop {
        let mut v: Vec<f64> = (0..d + 2).map(|_| rng.gen_range(-0.6..0.6)).collect();
        if sign < 0.0 {
            v[0] = -(1.0 + v[0].abs()) * 2.0;
        }
        let q = amb.form(&v, &v);
        if q * sign > 0.05 {
            let k = (q * sign).sqrt();
            return v.iter().map(|x| x / k).collect();
        }
    }
}

// ---------------------------------------------------------------- suites

type SuiteBuilder = fn(&mut Vec<Task>);

fn build_tasks(config: &SuiteConfig) -> Vec<Task> {
    let mut tasks = Vec::new();
    let suites: [(&str, SuiteBuilder); 11] = [
        ("bianchi", bianchi),
        ("conformal_invariance", conformal_invariance),
        ("prolongation", prolongation),
        ("classification", classification),
        ("hypersurface", hypersurface),
        ("aesum", aesum),
        ("ext", ext),
        ("yangmills_d4", yangmills_d4),
        ("sphere_model", sphere_model),
        ("fg_normal_form", fg_normal_form),
        ("negative_controls", negative_controls),
    ];
    for (name, build) in suites {
        if config.selected(name) {
            build(&mut tasks);
        }
    }
    for (k, m) in config.models.iter().enumerate() {
        user_model_tasks(config, &mut tasks, &model_name(m, k), m);
    }
    tasks
}

const BIANCHI_IDS: [&str; 6] = [
    "bianchi.weyl_bianchi",
    "bianchi.weyl_divergence",
    "bianchi.schouten_divergence",
    "bianchi.cotton_divergence",
    "bianchi.tractor_commutator",
    "bianchi.tractor_divergence",
];

fn bianchi_on(chart: &MetricChart, p: &[f64], r: &mut Residuals) -> Result<()> {
    let b = crate::curvature::bianchi_residuals(chart, p)?;
    r[0].push(b.weyl_bianchi);
    r[1].push(b.weyl_divergence);
    r[2].push(b.schouten_divergence);
    r[3].push(b.cotton_divergence);
    r[4].push(commutator_residual(chart, p)?);
    r[5].push(divergence_residual(chart, p)?);
    Ok(())
}

fn bianchi(tasks: &mut Vec<Task>) {
    tasks.push(task(
        &BIANCHI_IDS,
        "5 random polynomial_perturbation charts, d = 3, 4, 5",
        Box::new(|rng, s| {
            let mut r = vec![Vec::new(); 6];
            for (d, seed) in [(3, 101), (4, 102), (5, 103), (3, 104), (4, 105)] {
                let chart = MetricChart::random_perturbation(d, seed);
                for p in in_chart(rng, &chart, s) {
                    bianchi_on(&chart, &p, &mut r)?;
                }
            }
            Ok(r)
        }),
    ));
    tasks.push(task(
        &["bianchi.conformally_flat"],
        "round, Poincaré, Euclidean, cap and rescaled round charts, d = 3..5",
        Box::new(|rng, s| {
            let mut r = vec![Vec::new()];
            for d in 3..=5 {
                let spacelike = ambient_unit(rng, d, 1.0);
                let f = flat_density(&spacelike);
                let charts = [
                    MetricChart::round_sphere(d),
                    MetricChart::poincare_ball(d),
                    MetricChart::euclidean(d),
                    cap_chart(&spacelike)?,
                    conformal_rescale(&MetricChart::round_sphere(d), fixed_omega(d)),
                ];
                for (k, chart) in charts.iter().enumerate() {
                    let n = s.points.div_ceil(3);
                    // keep away from the cap boundary, where the metric blows up
                    let accept = |p: &[f64]| chart.contains(p) && (k != 3 || f.value_at(p).is_ok_and(|v| v > 0.2));
                    for p in sample(rng, d, n, s.half_width, accept) {
                        r[0].push(tractor_curvature(chart, &p)?.max_abs());
                    }
                }
            }
            Ok(r)
        }),
    ));
}

fn prolongation(tasks: &mut Vec<Task>) {
    tasks.push(task(
        &[
            "prolongation.ae_operator",
            "prolongation.parallel",
            "prolongation.length",
            "prolongation.asc",
        ],
        "50 random quadric scales on euclidean(d), d = 3..5",
        Box::new(|rng, s| {
            let mut r = vec![Vec::new(); 4];
            for k in 0..50 {
                let d = 3 + k % 3;
                let a = rng.gen_range(-1.0..1.0);
                let c = rng.gen_range(-1.0..1.0);
                let b: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let disc = b.iter().map(|v| v * v).sum::<f64>() - 4.0 * a * c;
                let ae = quadric_ae(a, b, c)?;
                for p in in_chart(rng, &ae.chart, s) {
                    r[0].push(ae_residual(&ae.chart, &ae.sigma, &p)?.max_abs());
                    r[1].push(parallel_residual(&ae, &p)?);
                    let i2 = ae.i_squared(&p)?;
                    r[2].push((i2 - disc).abs());
                    r[3].push((asc_scalar(&ae.chart, &ae.sigma, &p)? + i2).abs());
                }
            }
            Ok(r)
        }),
    ));
}

type LocusTest = fn(&Locus) -> bool;

fn classification(tasks: &mut Vec<Task>) {
    tasks.push(task(
        &["classification.types"],
        "quadrics (½,0,½), (0,0,1), (½,0,−½) and random quadrics of each type, d = 3..5",
        Box::new(|rng, s| {
            let mut r = vec![Vec::new()];
            for d in 3..=5 {
                let mut cases: Vec<(f64, Vec<f64>, f64)> = vec![
                    (0.5, vec![0.0; d], 0.5),
                    (0.0, vec![0.0; d], 1.0),
                    (0.5, vec![0.0; d], -0.5),
                ];
                for k in 0..3 {
                    // prescribe the discriminant sign
                    let target = [-1.0, 0.0, 1.0][k] * rng.gen_range(0.2..1.0);
                    let b: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let c = rng.gen_range(0.5..1.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    let a = (b.iter().map(|v| v * v).sum::<f64>() - target) / (4.0 * c);
                    cases.push((a, b, c));
                }
                for (a, b, c) in cases {
                    let disc = b.iter().map(|v| v * v).sum::<f64>() - 4.0 * a * c;
                    let ae = quadric_ae(a, b, c)?;
                    let (kind, locus_ok): (ScalarType, LocusTest) = if disc.abs() < 1e-9 {
                        (ScalarType::ScalarFlat, |l| matches!(l, Locus::Point { .. }))
                    } else if disc < 0.0 {
                        (ScalarType::ScalarPositive, |l| matches!(l, Locus::Empty))
                    } else {
                        (ScalarType::ScalarNegative, |l| matches!(l, Locus::Sphere { .. }))
                    };
                    for p in sample(rng, d, s.points.div_ceil(6), s.half_width, |_| true) {
                        let cl = classify(&ae, &p)?;
                        let ok = cl.kind == kind && cl.locus.as_ref().is_some_and(locus_ok);
                        r[0].push(if ok { 0.0 } else { 1.0 });
                    }
                }
            }
            Ok(r)
        }),
    ));
    tasks.push(task(
        &["classification.einstein", "classification.space_form"],
        "quadrics (½,0,−½), (½,0,½), (0,0,1) on euclidean(d), d = 3..5",
        Box::new(|rng, s| {
            let mut r = vec![Vec::new(); 2];
            for d in 3..=5 {
                for (a, c) in [(0.5, -0.5), (0.5, 0.5), (0.0, 1.0)] {
                    let ae = quadric_ae(a, vec![0.0; d], c)?;
                    let ec = einstein_chart(&ae);
                    let oracle = match (a, c) {
                        (_, x) if x < 0.0 => Some(MetricChart::poincare_ball(d)),
                        (x, _) if x > 0.0 => Some(MetricChart::round_sphere(d)),
                        _ => None,
                    };
                    let n = s.points.div_ceil(3);
                    let pts = sample(rng, d, n, s.half_width, |p| {
                        let sv = ae.sigma.value_at(p).unwrap_or(0.0);
                        sv.abs() > 0.05 && oracle.as_ref().is_none_or(|o| o.contains(p))
                    });
                    for p in pts {
                        r[0].push(einstein_residual(&ae, &p)?);
                        r[1].push(match &oracle {
                            Some(o) => crate::sphere_model::metric_jet_difference(&ec, o, &p, 2)?,
                            None => riemann_tensor(&ec, &p)?.riemann.max_abs(),
                        });
                    }
                }
            }
            Ok(r)
        }),
    ));
    tasks.push(task(
        &["classification.null_jet", "classification.null_laplacian"],
        "scalar-flat quadrics c|x − q|², rescaled by random conformal factors, d = 3..5",
        Box::new(|rng, s| {
            let mut r = vec![Vec::new(); 2];
            for k in 0..s.points.max(3) {
                let d = 3 + k % 3;
                let (q, c, omega) = if k < 3 {
                    (vec![0.0; d], 1.0, ScalarField::constant(0.0))
                } else {
                    let q: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.8..0.8) * s.half_width).collect();
                    let c = rng.gen_range(0.5..1.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    (q, c, random_omega(rng, d))
                };
                let a = c * q.iter().map(|v| v * v).sum::<f64>();
                let b: Vec<f64> = q.iter().map(|v| -2.0 * c * v).collect();
                let ae = rescaled(&quadric_ae(a, b, c)?, &omega);
                let sj: Jet = ae.sigma.jet_at(&q, 1)?;
                let grad = gradient(&ae.sigma, &q)?;
                r[0].push(sj.value().abs().max(grad.iter().fold(0.0f64, |m, v| m.max(v.abs()))));
                let hess = covariant_derivative(&ae.chart, &q, &[], 1, 2, |x| Ok(vec![ae.sigma.eval(x)?]))?;
                let ginv = ae.chart.inverse_metric(&q)?;
                let mut lap = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        lap -= ginv.get(&[i, j]) * hess.get(&[i, j]);
                    }
                }
                let expected = -2.0 * d as f64 * c * (-omega.value_at(&q)?).exp();
                r[1].push((lap - expected).abs());
            }
            Ok(r)
        }),
    ));
}

fn hypersurface(tasks: &mut Vec<Task>) {
    tasks.push(task(
        &[
            "hypersurface.umbilic",
            "hypersurface.normal_parallel",
            "hypersurface.i_equals_n",
            "hypersurface.minimal",
            "hypersurface.geodesic",
            "hypersurface.unit_defining",
        ],
        "scalar-negative quadrics (½,0,−½) and off-centre spheres, plain and rescaled, d = 3..5",
        Box::new(|rng, s| {
            let mut r = vec![Vec::new(); 6];
            for d in 3..=5 {
                let b: Vec<f64> = (0..d).map(|i| 0.3 - 0.2 * i as f64).collect();
                let unit = quadric_ae(0.5, vec![0.0; d], -0.5)?;
                let structures = [
                    (unit.clone(), quadric_locus(0.5, &vec![0.0; d], -0.5)),
                    (quadric_ae(-0.2, b.clone(), 0.8)?, quadric_locus(-0.2, &b, 0.8)),
                    (rescaled(&unit, &fixed_omega(d)), quadric_locus(0.5, &vec![0.0; d], -0.5)),
                ];
                for (ae, locus) in &structures {
                    let Locus::Sphere { center, radius } = locus else {
                        return Err(Error::UnsupportedModel("expected a sphere locus".into()));
                    };
                    let sigma = LevelSetHypersurface::new(ae.chart.clone(), ae.sigma.clone());
                    for _ in 0..s.points.div_ceil(3) {
                        let u = random_unit(rng, d);
                        let start: Vec<f64> = center.iter().zip(&u).map(|(c, v)| c + radius * v).collect();
                        let p = sigma.project(&start)?;
                        r[0].push(second_fundamental_form(&sigma, &p)?.umbilicity);
                        r[1].push(normal_tractor_derivative(&sigma, &p)?);
                        r[2].push(check_i_equals_n(ae, &p)?);
                        let m = minimal_scale(&sigma, &p)?;
                        r[3].push(normal_and_mean_curvature(&m, &p)?.h.abs());
                        r[4].push(second_fundamental_form(&m, &p)?.norm);
                        let g = gradient(&ae.sigma, &p)?;
                        let ginv = ae.chart.inverse_metric(&p)?;
                        let mut n2 = 0.0;
                        for i in 0..d {
                            for j in 0..d {
                                n2 += ginv.get(&[i, j]) * g[i] * g[j];
                            }
                        }
                        r[5].push((n2 / ae.i_squared(&p)? - 1.0).abs());
                    }
                }
            }
            Ok(r)
        }),
    ));
    tasks.push(task(
        &["hypersurface.intrinsic"],
        "boundary spheres of scalar-negative quadrics, d = 4, 5",
        Box::new(|rng, s| {
            let mut r = vec![Vec::new()];
            let structures = [
                quadric_ae(0.5, vec![0.0; 4], -0.5)?,
                quadric_ae(0.5, vec![0.0; 5], -0.5)?,
                quadric_ae(-0.2, vec![0.3, -0.4, 0.1, 0.0, 0.2], 0.8)?,
            ];
            for ae in &structures {
                let d = ae.dim();
                let sigma = LevelSetHypersurface::new(ae.chart.clone(), ae.sigma.clone());
                let boundary = boundary_chart(ae)?;
                for u in sample(rng, d - 1, s.points.div_ceil(3), s.half_width, |_| true) {
                    r[0].push(intrinsic_vs_ambient(&sigma, &boundary, &u)?.max());
                }
            }
            Ok(r)
        }),
    ));
}

fn conformal_invariance(tasks: &mut Vec<Task>) {
    tasks.push(task(
        &[
            "conformal_invariance.ae_operator",
            "conformal_invariance.asc",
            "conformal_invariance.weyl",
            "conformal_invariance.tractor_metric",
            "conformal_invariance.splitting",
            "conformal_invariance.connection",
            "conformal_invariance.normal_tractor",
            "conformal_invariance.restriction",
        ],
        "polynomial_perturbation(4) under 20 random rescalings",
        Box::new(|rng, s| {
            let d = 4;
            let chart = MetricChart::random_perturbation(d, 11);
            let sigma = ScalarField::quadric(0.4, vec![0.1, -0.2, 0.3, 0.1], 0.2).plus(ScalarField::Polynomial {
                terms: vec![Monomial { coeff: 0.1, powers: vec![1, 1, 0, 0] }],
            });
            let phi = ScalarField::quadric(-0.3, vec![0.1, 0.2, 0.0, -0.1], 1.0);
            let surface = LevelSetHypersurface::new(chart.clone(), phi.clone());
            let mut r = vec![Vec::new(); 8];
            let per = s.points.div_ceil(20);
            for _ in 0..20 {
                let omega = random_omega(rng, d);
                let hat = conformal_rescale(&chart, omega.clone());
                let sigma_hat = exp_of(&omega).times(sigma.clone());
                let hat_surface = LevelSetHypersurface::new(hat.clone(), phi.clone());
                for x in sample(rng, d, per, s.half_width, |p| chart.contains(p)) {
                    let w = omega.value_at(&x)?;
                    let ups = gradient(&omega, &x)?;
                    let ginv = chart.inverse_metric(&x)?;
                    let ginv_hat = hat.inverse_metric(&x)?;
                    let moved = |t: &TractorValue| change_scale(t, w, &ups, &ginv, hat.label());

                    let a0 = ae_residual(&chart, &sigma, &x)?;
                    let a1 = ae_residual(&hat, &sigma_hat, &x)?;
                    r[0].push(max_diff(&a1.comps, &a0.scale(w.exp()).comps));
                    r[1].push((asc_scalar(&hat, &sigma_hat, &x)? - asc_scalar(&chart, &sigma, &x)?).abs());
                    let c0 = curvature_packet(&chart, &x, 2)?.weyl;
                    let c1 = curvature_packet(&hat, &x, 2)?.weyl;
                    r[2].push(max_diff(&c1.comps, &c0.scale((2.0 * w).exp()).comps));

                    let raw1: Vec<f64> = (0..d + 2).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let raw2: Vec<f64> = (0..d + 2).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let t1 = TractorValue::from_raw(chart.label(), &raw1)?;
                    let t2 = TractorValue::from_raw(chart.label(), &raw2)?;
                    let h0 = tractor_metric(&t1, &t2, &ginv)?;
                    let h1 = tractor_metric(&moved(&t1)?, &moved(&t2)?, &ginv_hat)?;
                    r[3].push((h1 - h0).abs());

                    let ds = splitting_operator(&chart, &x, &sigma)?;
                    let ds_hat = splitting_operator(&hat, &x, &sigma_hat)?;
                    r[4].push(max_diff(&ds_hat.raw(), &moved(&ds)?.raw()));

                    let n0 = scale_tractor_derivative(&chart, &sigma, &x)?;
                    let n1 = scale_tractor_derivative(&hat, &sigma_hat, &x)?;
                    let mut worst = 0.0f64;
                    for a in 0..d {
                        let row = &n0.comps[a * (d + 2)..(a + 1) * (d + 2)];
                        let m = moved(&TractorValue::from_raw(chart.label(), row)?)?.raw();
                        worst = worst.max(max_diff(&n1.comps[a * (d + 2)..(a + 1) * (d + 2)], &m));
                    }
                    r[5].push(worst);

                    let Ok(p) = surface.project(&random_unit(rng, d)) else { continue };
                    let (wp, ups_p) = (omega.value_at(&p)?, gradient(&omega, &p)?);
                    let ginv_p = chart.inverse_metric(&p)?;
                    let n = normal_tractor(&surface, &p)?;
                    let nh = normal_tractor(&hat_surface, &p)?;
                    r[6].push(max_diff(&nh.raw(), &change_scale(&n, wp, &ups_p, &ginv_p, hat.label())?.raw()));

                    let raw: Vec<f64> = (0..d + 2).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let t = project_tangential(&surface, &p, &TractorValue::from_raw(chart.label(), &raw)?)?;
                    let th = change_scale(&t, wp, &ups_p, &ginv_p, hat.label())?;
                    let ra = restrict_tractor(&hat_surface, &p, &th)?;
                    // intrinsic rescale with the tangential part of Υ
                    let nn = normal_and_mean_curvature(&surface, &p)?.n;
                    let nu: f64 = (0..d)
                        .map(|i| (0..d).map(|j| ginv_p.get(&[i, j]) * nn[j]).sum::<f64>() * ups_p[i])
                        .sum();
                    let ups_t: Vec<f64> = ups_p.iter().zip(&nn).map(|(u, ni)| u - nu * ni).collect();
                    let rb = restrict_tractor(&surface, &p, &t)?;
                    let rb = change_scale(&rb, wp, &ups_t, &ginv_p, ra.scale.clone())?;
                    r[7].push(max_diff(&ra.raw(), &rb.raw()));
                }
            }
            Ok(r)
        }),
    ));
}

fn aesum_on(ae: &AEStructure, p: &[f64], r: &mut Residuals) -> Result<()> {
    let a = aesum_residuals(ae, p)?;
    r[0].push(a.weyl_cotton);
    r[1].push(a.normal_cotton);
    r[2].push(a.bach_cotton);
    r[3].push(a.normal_bach);
    Ok(())
}

const AESUM_IDS: [&str; 4] = [
    "aesum.weyl_cotton",
    "aesum.normal_cotton",
    "aesum.bach_cotton",
    "aesum.normal_bach",
];

fn aesum(tasks: &mut Vec<Task>) {
    tasks.push(task(
        &AESUM_IDS,
        "Einstein products S²×S² and S²×S³ in rescaled (non-Einstein) scales",
        Box::new(|rng, s| {
            let mut r = vec![Vec::new(); 4];
            let bases = [
                MetricChart::product_spheres(2, 1.0, 2, 1.0),
                MetricChart::product_spheres(2, 0.8, 3, 2f64.sqrt() * 0.8),
            ];
            for base in &bases {
                let d = base.dim();
                let ae = rescaled(&AEStructure::new(base.clone(), ScalarField::constant(1.0)), &random_omega(rng, d));
                for p in sample(rng, d, s.points.div_ceil(2), s.half_width, |p| ae.chart.contains(p)) {
                    aesum_on(&ae, &p, &mut r)?;
                }
            }
            Ok(r)
        }),
    ));
}

fn ext(tasks: &mut Vec<Task>) {
    tasks.push(task(
        &["ext.w_i", "ext.d_tilde", "ext.w_x"],
        "product_spheres(2, r, 3, √2·r), r ∈ {1, 0.8}, σ = 1, and a rescaled copy",
        Box::new(|rng, s| {
            let mut r = vec![Vec::new(); 3];
            let e = |r: f64| AEStructure::new(MetricChart::product_spheres(2, r, 3, 2f64.sqrt() * r), ScalarField::constant(1.0));
            let structures = [e(1.0), e(0.8), rescaled(&e(1.0), &fixed_omega(5))];
            for ae in &structures {
                for p in sample(rng, 5, s.points.div_ceil(3), s.half_width, |p| ae.chart.contains(p)) {
                    let x = ext_residual(ae, &p)?;
                    r[0].push(x.w_i);
                    r[1].push(x.ext);
                    r[2].push(x.w_x);
                }
            }
            Ok(r)
        }),
    ));
}

fn yangmills_d4(tasks: &mut Vec<Task>) {
    tasks.push(task(
        &["yangmills_d4.bach", "yangmills_d4.divergence", "yangmills_d4.w_tractor"],
        "product_spheres(2, 1, 2, 1) with σ ≡ 1",
        Box::new(|rng, s| {
            let mut r = vec![Vec::new(); 3];
            let chart = MetricChart::product_spheres(2, 1.0, 2, 1.0);
            for p in in_chart(rng, &chart, s) {
                r[0].push(crate::curvature::bach(&chart, &p)?.max_abs());
                r[1].push(yang_mills_residual(&chart, &p)?);
                r[2].push(w_tractor(&chart, &p)?.max_abs());
            }
            Ok(r)
        }),
    ));
}

fn sphere_model(tasks: &mut Vec<Task>) {
    tasks.push(task(
        &[
            "sphere_model.basis_parallel",
            "sphere_model.flat_curvature",
            "sphere_model.tractor_metric",
        ],
        "d + 2 basis vectors and random vectors on round, Euclidean and hyperbolic-cap charts, d = 3..5",
        Box::new(|rng, s| {
            let mut r = vec![Vec::new(); 3];
            for d in 3..=5 {
                let mut vectors: Vec<Vec<f64>> = (0..d + 2)
                    .map(|k| {
                        let mut v = vec![0.0; d + 2];
                        v[k] = 1.0;
                        v
                    })
                    .collect();
                vectors.push((0..d + 2).map(|_| rng.gen_range(-1.0..1.0)).collect());
                let spacelike = ambient_unit(rng, d, 1.0);
                let bases = [MetricChart::round_sphere(d), MetricChart::euclidean(d), cap_chart(&spacelike)?];
                for (k, base) in bases.iter().enumerate() {
                    let pts = sample(rng, d, s.points.div_ceil(3), s.half_width, |p| {
                        base.contains(p)
                            && (k < 2 || flat_density(&spacelike).value_at(p).is_ok_and(|f| f > 0.2))
                    });
                    for p in pts {
                        let rep = ambient_correspondence_check(&vectors, base, &[p])?;
                        r[0].push(rep.parallel);
                        r[1].push(rep.curvature);
                        r[2].push(rep.metric.max(rep.x_pairing));
                    }
                }
            }
            Ok(r)
        }),
    ));
    tasks.push(task(
        &["sphere_model.cap_curvature"],
        "cap charts of null, timelike and spacelike ambient vectors, d = 3..5",
        Box::new(|rng, s| {
            let mut r = vec![Vec::new()];
            let amb_form = |d: usize, v: &[f64]| AmbientFlatSpace::new(d).form(v, v);
            for d in 3..=5 {
                let mut null = vec![0.0; d + 2];
                null[0] = -1.0;
                null[1] = 1.0;
                for i in [null, ambient_unit(rng, d, -1.0), ambient_unit(rng, d, 1.0)] {
                    let cap = cap_chart(&i)?;
                    let k = -amb_form(d, &i);
                    let f = flat_density(&i);
                    let pts = sample(rng, d, s.points.div_ceil(3), 1.0, |p| {
                        cap.contains(p) && f.value_at(p).is_ok_and(|v| v > 0.2)
                    });
                    for p in pts {
                        r[0].push(crate::sphere_model::constant_curvature_residual(&cap, &p, k)?);
                    }
                }
            }
            Ok(r)
        }),
    ));
    tasks.push(task(
        &["sphere_model.interpolation_length", "sphere_model.roots"],
        "standard spacelike/timelike pair interpolated on euclidean(d), d = 3..5",
        Box::new(|rng, s| {
            let mut r = vec![Vec::new(); 2];
            for d in 3..=5 {
                let (i1, i2) = standard_pair(d);
                let base = MetricChart::euclidean(d);
                for p in sample(rng, d, s.points, s.half_width, |_| true) {
                    let t = rng.gen_range(0.0..PI);
                    let it = interpolate(&i1, &i2, t, &base)?;
                    r[0].push((it.i_squared(&p)? + (2.0 * t).cos()).abs());
                    let root = interpolation_root(&i1, &i2, &p)?;
                    r[1].push(interpolate(&i1, &i2, root, &base)?.sigma.value_at(&p)?.abs());
                }
            }
            Ok(r)
        }),
    ));
    tasks.push(task(
        &["sphere_model.lift_independence", "sphere_model.homogeneity"],
        "null-cone sections of random timelike vectors, d = 3..5",
        Box::new(|rng, s| {
            let mut r = vec![Vec::new(); 2];
            for d in 3..=5 {
                let amb = AmbientFlatSpace::new(d);
                let i = ambient_unit(rng, d, -1.0);
                let f = flat_density(&i);
                for p in sample(rng, d, s.points.div_ceil(3), 1.0, |p| f.value_at(p).is_ok_and(|v| v > 0.2)) {
                    let shift: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
                    let a = section_metric(&i, &p, &vec![0.0; d])?;
                    let b = section_metric(&i, &p, &shift)?;
                    r[0].push(max_diff(&a, &b));
                    let k = rng.gen_range(0.5..2.0);
                    let x: Vec<f64> = amb.flat_section(&p).iter().map(|v| v * k).collect();
                    let j: Vec<f64> = (0..d + 2).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    r[1].push(homogeneity_residual(&j, &x)?);
                }
            }
            Ok(r)
        }),
    ));
}

fn fg_normal_form(tasks: &mut Vec<Task>) {
    tasks.push(task(
        &["fg_normal_form.einstein"],
        "normal form over flat (P = 0) and round (P = ½g) boundaries, d = 3..5, s ∈ [0.1, 1]",
        Box::new(|rng, s| {
            let mut r = vec![Vec::new()];
            for d in 3..=5 {
                let charts = [
                    MetricChart::FgHyperbolicNormalForm {
                        boundary: Box::new(MetricChart::euclidean(d - 1)),
                        schouten: BoundarySchouten::Zero,
                    },
                    MetricChart::FgHyperbolicNormalForm {
                        boundary: Box::new(MetricChart::round_sphere(d - 1)),
                        schouten: BoundarySchouten::Proportional { factor: 0.5 },
                    },
                ];
                for chart in &charts {
                    for _ in 0..s.points.div_ceil(2) {
                        let mut p = vec![rng.gen_range(0.1..=1.0)];
                        p.extend((1..d).map(|_| rng.gen_range(-s.half_width..=s.half_width)));
                        r[0].push(einstein_norm(chart, &p)?);
                    }
                }
            }
            Ok(r)
        }),
    ));
}

/// `|Ric + (d−1) g|_g`.
fn einstein_norm(chart: &MetricChart, p: &[f64]) -> Result<f64> {
    let d = chart.dim();
    let pk = curvature_packet(chart, p, 2)?;
    let e: Vec<f64> = (0..d * d)
        .map(|k| pk.ricci.comps[k] + (d as f64 - 1.0) * pk.g.comps[k])
        .collect();
    let gi = &pk.ginv.comps;
    let mut acc = 0.0;
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                for f in 0..d {
                    acc += gi[a * d + c] * gi[b * d + f] * e[a * d + b] * e[c * d + f];
                }
            }
        }
    }
    Ok(acc.max(0.0).sqrt())
}

fn negative_controls(tasks: &mut Vec<Task>) {
    tasks.push(task(
        &["negative_controls.non_ae_parallel"],
        "coordinate scale on round_sphere_stereo(3); sphere quadric times (1 + 0.3x⁰)",
        Box::new(|rng, s| {
            let mut r = vec![Vec::new()];
            let structures = [
                AEStructure::new(MetricChart::round_sphere(3), ScalarField::Coordinate { index: 0 }),
                AEStructure::new(MetricChart::euclidean(3), distorted_sphere_scale()),
            ];
            for ae in &structures {
                for p in sample(rng, 3, s.points.div_ceil(2), s.half_width, |p| ae.chart.contains(p)) {
                    r[0].push(parallel_residual(ae, &p)?);
                }
            }
            Ok(r)
        }),
    ));
    tasks.push(task(
        &["negative_controls.non_ae_normal"],
        "sphere quadric times (1 + 0.3x⁰) on euclidean(3)",
        Box::new(|rng, s| {
            let ae = AEStructure::new(MetricChart::euclidean(3), distorted_sphere_scale());
            let r = (0..s.points)
                .map(|_| check_i_equals_n(&ae, &random_unit(rng, 3)))
                .collect::<Result<Vec<f64>>>()?;
            Ok(vec![r])
        }),
    ));
    tasks.push(task(
        &["negative_controls.ellipsoid_umbilic"],
        "ellipsoid x²/4 + y² + z² = 1 in euclidean(3)",
        Box::new(|rng, s| {
            let e = ellipsoid3();
            let mut r = Vec::new();
            for _ in 0..s.points {
                let u = random_unit(rng, 3);
                let p = e.project(&[2.0 * u[0], u[1], u[2]])?;
                r.push(second_fundamental_form(&e, &p)?.umbilicity);
            }
            Ok(vec![r])
        }),
    ));
    tasks.push(task(
        &["negative_controls.ellipsoid_intrinsic"],
        "ellipsoid with semi-axes (2, 1, 1.5, 1) in euclidean(4)",
        Box::new(|rng, s| {
            let phi = ScalarField::Polynomial {
                terms: vec![
                    Monomial { coeff: 0.25, powers: vec![2, 0, 0, 0] },
                    Monomial { coeff: 1.0, powers: vec![0, 2, 0, 0] },
                    Monomial { coeff: 1.0 / 2.25, powers: vec![0, 0, 2, 0] },
                    Monomial { coeff: 1.0, powers: vec![0, 0, 0, 2] },
                    Monomial { coeff: -1.0, powers: vec![0, 0, 0, 0] },
                ],
            };
            let surface = LevelSetHypersurface::new(MetricChart::euclidean(4), phi);
            let boundary = MetricChart::EmbeddedSphere {
                ambient: Box::new(MetricChart::euclidean(4)),
                center: vec![0.0; 4],
                semi_axes: vec![2.0, 1.0, 1.5, 1.0],
            };
            let mut r = Vec::new();
            for u in sample(rng, 3, s.points.div_ceil(2), s.half_width, |_| true) {
                r.push(intrinsic_vs_ambient(&surface, &boundary, &u)?.connection);
            }
            Ok(vec![r])
        }),
    ));
    tasks.push(task(
        &["negative_controls.non_einstein"],
        "polynomial_perturbation(4) with σ ≡ 1",
        Box::new(|rng, s| {
            let ae = AEStructure::new(MetricChart::random_perturbation(4, 5), ScalarField::constant(1.0));
            let r = in_chart(rng, &ae.chart, s)
                .iter()
                .map(|p| einstein_residual(&ae, p))
                .collect::<Result<Vec<f64>>>()?;
            Ok(vec![r])
        }),
    ));
}

fn distorted_sphere_scale() -> ScalarField {
    ScalarField::quadric(0.5, vec![0.0; 3], -0.5).times(ScalarField::quadric(1.0, vec![0.3, 0.0, 0.0], 0.0))
}

fn user_model_tasks(config: &SuiteConfig, tasks: &mut Vec<Task>, name: &str, m: &ModelSpec) {
    let suffix = format!("[{name}]");
    let label = format!("{name}: {}", m.chart.label());
    let mut push = |ids: &[&'static str], run: Runner| {
        let mut t = task(ids, label.clone(), run);
        t.suffix = suffix.clone();
        tasks.push(t);
    };
    if config.selected("bianchi") {
        let chart = m.chart.clone();
        push(
            &BIANCHI_IDS,
            Box::new(move |rng, s| {
                let mut r = vec![Vec::new(); 6];
                for p in in_chart(rng, &chart, s) {
                    bianchi_on(&chart, &p, &mut r)?;
                }
                Ok(r)
            }),
        );
    }
    let Some(sigma) = &m.sigma else { return };
    let ae = AEStructure::new(m.chart.clone(), sigma.clone());
    if config.selected("prolongation") {
        let ae = ae.clone();
        push(
            &["prolongation.ae_operator", "prolongation.parallel", "prolongation.asc"],
            Box::new(move |rng, s| {
                let mut r = vec![Vec::new(); 3];
                for p in in_chart(rng, &ae.chart, s) {
                    r[0].push(ae_residual(&ae.chart, &ae.sigma, &p)?.max_abs());
                    r[1].push(parallel_residual(&ae, &p)?);
                    r[2].push((asc_scalar(&ae.chart, &ae.sigma, &p)? + ae.i_squared(&p)?).abs());
                }
                Ok(r)
            }),
        );
    }
    if config.selected("classification") {
        let ae = ae.clone();
        push(
            &["classification.einstein"],
            Box::new(move |rng, s| {
                let pts = sample(rng, ae.dim(), s.points, s.half_width, |p| {
                    ae.chart.contains(p) && ae.sigma.value_at(p).is_ok_and(|v| v.abs() > 0.05)
                });
                let r = pts.iter().map(|p| einstein_residual(&ae, p)).collect::<Result<Vec<f64>>>()?;
                Ok(vec![r])
            }),
        );
    }
    if config.selected("aesum") {
        push(
            &AESUM_IDS,
            Box::new(move |rng, s| {
                let mut r = vec![Vec::new(); 4];
                for p in in_chart(rng, &ae.chart, s) {
                    aesum_on(&ae, &p, &mut r)?;
                }
                Ok(r)
            }),
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchor_table_is_sorted_and_unique() {
        for w in CHECKS.windows(2) {
            assert!(w[0].id < w[1].id, "{} !< {}", w[0].id, w[1].id);
        }
        for c in CHECKS {
            let suite = c.id.split('.').next().unwrap();
            assert!(SUITES.contains(&suite), "{}", c.id);
            assert!(c.tolerance > 0.0);
        }
    }

    #[test]
    fn every_task_id_has_an_anchor() {
        for t in build_tasks(&SuiteConfig::default()) {
            for id in &t.ids {
                assert!(check_spec(id).is_some(), "{id}");
            }
        }
    }

    #[test]
    fn syntax_errors_carry_position() {
        let e = SuiteConfig::from_json("{\n  \"seed\": 1,\n  \"points\": }").unwrap_err();
        let Error::Config(m) = e else { panic!() };
        assert!(m.starts_with("line 3, column"), "{m}");
    }

    #[test]
    fn validation() {
        assert!(SuiteConfig::from_json(r#"{"suites": ["nope"]}"#).is_err());
        assert!(SuiteConfig::from_json(r#"{"tolerances": {"bianchi.weyl_bianchi": -1}}"#).is_err());
        assert!(SuiteConfig::from_json(r#"{"tolerances": {"bianchi.nope": 1}}"#).is_err());
        assert!(SuiteConfig::from_json(r#"{"tol_scale": 0}"#).is_err());
        assert!(SuiteConfig::from_json(r#"{"models": [{"chart": {"family": "klein_bottle"}}]}"#).is_err());
        assert!(SuiteConfig::from_json(r#"{"colour": 1}"#).is_err());
        let c = SuiteConfig::from_json(r#"{"tolerances": {"ext.d_tilde[m]": 1e-3}, "box": 0.3}"#).unwrap();
        assert_eq!(c.sample_box, 0.3);
        assert_eq!(c.tolerance("ext.d_tilde[m]", check_spec("ext.d_tilde").unwrap()), 1e-3);
    }
}
