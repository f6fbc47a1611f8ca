//! Browser bindings for three small explorations: a quadric scale, the
//! interpolation between the sphere and hyperbolic structures, and
//! curvature of a model chart at a point. Each entry point returns a JSON
//! string; the plain-Rust versions are used by the tests.

use serde::Serialize;
use tractor_calculus::almost_einstein::{classify, einstein_residual, parallel_residual, quadric_ae, Locus, ScalarType};
use tractor_calculus::curvature::curvature_packet;
use tractor_calculus::sphere_model::{interpolate, interpolation_root, standard_pair};
use tractor_calculus::tractor::tractor_curvature;
use tractor_calculus::{MetricChart, Result};
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct QuadricSummary {
    pub kind: ScalarType,
    pub i_squared: f64,
    pub discriminant: f64,
    pub locus: Option<Locus>,
    pub sigma: f64,
    pub parallel_residual: f64,
    /// `None` on (or very near) the zero locus.
    pub einstein_residual: Option<f64>,
}

/// `σ = a + b·x + c|x|²` on flat space, examined at `point`.
pub fn quadric(a: f64, b: &[f64], c: f64, point: &[f64]) -> Result<QuadricSummary> {
    let ae = quadric_ae(a, b.to_vec(), c)?;
    let cl = classify(&ae, point)?;
    Ok(QuadricSummary {
        kind: cl.kind,
        i_squared: cl.i_squared,
        discriminant: b.iter().map(|v| v * v).sum::<f64>() - 4.0 * a * c,
        locus: cl.locus,
        sigma: ae.sigma.value_at(point)?,
        parallel_residual: parallel_residual(&ae, point)?,
        einstein_residual: einstein_residual(&ae, point).ok(),
    })
}

#[derive(Debug, Serialize)]
pub struct InterpolationSummary {
    pub t: f64,
    pub i_squared: f64,
    pub minus_cos_2t: f64,
    pub kind: ScalarType,
    pub locus: Option<Locus>,
    /// A parameter whose structure vanishes at `point`.
    pub root: f64,
}

/// `I_t = sin t · I₁ + cos t · I₂` for the standard spacelike/timelike pair.
pub fn interpolation(dim: usize, t: f64, point: &[f64]) -> Result<InterpolationSummary> {
    let (i1, i2) = standard_pair(dim);
    let ae = interpolate(&i1, &i2, t, &MetricChart::euclidean(dim))?;
    let cl = classify(&ae, point)?;
    Ok(InterpolationSummary {
        t,
        i_squared: cl.i_squared,
        minus_cos_2t: -(2.0 * t).cos(),
        kind: cl.kind,
        locus: cl.locus,
        root: interpolation_root(&i1, &i2, point)?,
    })
}

#[derive(Debug, Serialize)]
pub struct CurvatureSummary {
    pub chart: String,
    pub scalar: f64,
    pub j: f64,
    pub ricci_max: f64,
    pub weyl_max: f64,
    pub cotton_max: f64,
    pub bach_max: f64,
    pub tractor_curvature_max: f64,
}

/// Curvature of a built-in chart family (JSON parameters) at a point.
pub fn curvature(family: &str, params: &str, point: &[f64]) -> Result<CurvatureSummary> {
    let params: serde_json::Value = serde_json::from_str(params)
        .map_err(|e| tractor_calculus::Error::Argument(format!("parameters: {e}")))?;
    let chart = MetricChart::builtin(family, &params)?;
    if !chart.contains(point) {
        return Err(tractor_calculus::Error::Domain(format!("{point:?} is outside {}", chart.label())));
    }
    let p = curvature_packet(&chart, point, 4)?;
    Ok(CurvatureSummary {
        chart: chart.label(),
        scalar: p.scalar.comps[0],
        j: p.j.comps[0],
        ricci_max: p.ricci.max_abs(),
        weyl_max: p.weyl.max_abs(),
        cotton_max: p.cotton.as_ref().map_or(0.0, |t| t.max_abs()),
        bach_max: p.bach.as_ref().map_or(0.0, |t| t.max_abs()),
        tractor_curvature_max: tractor_curvature(&chart, point)?.max_abs(),
    })
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e.to_string()))
        .and_then(|v| serde_json::to_string(&v).map_err(|e| JsValue::from_str(&e.to_string())))
}

#[wasm_bindgen(js_name = quadric)]
pub fn quadric_js(a: f64, b: Vec<f64>, c: f64, point: Vec<f64>) -> std::result::Result<String, JsValue> {
    to_js(quadric(a, &b, c, &point))
}

#[wasm_bindgen(js_name = interpolation)]
pub fn interpolation_js(dim: usize, t: f64, point: Vec<f64>) -> std::result::Result<String, JsValue> {
    to_js(interpolation(dim, t, &point))
}

#[wasm_bindgen(js_name = curvature)]
pub fn curvature_js(family: &str, params: &str, point: Vec<f64>) -> std::result::Result<String, JsValue> {
    to_js(curvature(family, params, &point))
}
