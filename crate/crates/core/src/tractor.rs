//! The standard tractor bundle in a chosen scale.
//!
//! Tractors are stored in the splitting of the current scale as raw arrays
//! `[σ, μ_1, …, μ_d, ρ]`, i.e. the coefficients of `Y`, `Z` and `X`. The
//! middle block of an upper tractor slot holds the one-form `μ_a` (index
//! down); the middle block of a lower tractor slot holds a vector (index up).
//! An upper and a lower tractor slot therefore contract by a plain sum.

use serde::{Deserialize, Serialize};

use crate::curvature::{curvature_fields, values, Connection, CurvatureFields};
use crate::error::{Error, Result};
use crate::jet::{Jet, Scalar};
use crate::metric::{coordinate_jets, MetricChart, ScalarField};
use crate::tensor::{self, Slot, Tensor, TensorValue};

/// A tractor at a point, split with respect to the metric named by `scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TractorValue {
    pub scale: String,
    pub sigma: f64,
    pub mu: Vec<f64>,
    pub rho: f64,
}

impl TractorValue {
    pub fn new(scale: impl Into<String>, sigma: f64, mu: Vec<f64>, rho: f64) -> Self {
        TractorValue {
            scale: scale.into(),
            sigma,
            mu,
            rho,
        }
    }

    pub fn from_raw(scale: impl Into<String>, raw: &[f64]) -> Result<Self> {
        if raw.len() < 3 {
            return Err(Error::Argument(format!("a raw tractor needs ≥ 3 components, got {}", raw.len())));
        }
        let n = raw.len();
        Ok(TractorValue::new(scale, raw[0], raw[1..n - 1].to_vec(), raw[n - 1]))
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn raw(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.mu.len() + 2);
        v.push(self.sigma);
        v.extend(&self.mu);
        v.push(self.rho);
        v
    }
}

fn check_inverse_metric(d: usize, ginv: &TensorValue) -> Result<()> {
    if ginv.dim != d || ginv.slots != [Slot::Upper, Slot::Upper] {
        return Err(Error::Variance(format!(
            "expected an inverse metric in dimension {d}, got slots {:?} in dimension {}",
            ginv.slots, ginv.dim
        )));
    }
    Ok(())
}

fn quadratic(d: usize, ginv: &[f64], u: &[f64], v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for b in 0..d {
        for c in 0..d {
            acc += ginv[b * d + c] * u[b] * v[c];
        }
    }
    acc
}

/// Change of splitting under `ĝ = e^{2ω}g` with `Υ = dω`, with the result
/// still expressed in the density trivialization of `g`:
/// `(σ, μ + σΥ, ρ − Υ·μ − ½σ|Υ|²)`.
pub fn transform_tractor(t: &TractorValue, upsilon: &[f64], ginv: &TensorValue) -> Result<TractorValue> {
    let d = t.dim();
    check_inverse_metric(d, ginv)?;
    if upsilon.len() != d {
        return Err(Error::Argument(format!("Υ has {} components, expected {d}", upsilon.len())));
    }
    let mu: Vec<f64> = t.mu.iter().zip(upsilon).map(|(m, u)| m + t.sigma * u).collect();
    let rho = t.rho - quadratic(d, &ginv.comps, upsilon, &t.mu)
        - 0.5 * t.sigma * quadratic(d, &ginv.comps, upsilon, upsilon);
    Ok(TractorValue::new(t.scale.clone(), t.sigma, mu, rho))
}

/// Full scale change to `ĝ = e^{2ω}g`: the splitting transformation followed
/// by re-trivializing the weight-1, 1 and −1 slots in `ĝ`. `omega` is the
/// value of `ω` at the point, `ginv` the inverse of `g`.
pub fn change_scale(
    t: &TractorValue,
    omega: f64,
    upsilon: &[f64],
    ginv: &TensorValue,
    scale: impl Into<String>,
) -> Result<TractorValue> {
    let s = transform_tractor(t, upsilon, ginv)?;
    let (up, down) = (omega.exp(), (-omega).exp());
    Ok(TractorValue::new(
        scale,
        s.sigma * up,
        s.mu.iter().map(|m| m * up).collect(),
        s.rho * down,
    ))
}

/// `h(t1, t2) = g^{-1}(μ1, μ2) + σ1ρ2 + ρ1σ2`, with `ginv` the inverse of the
/// metric named by the tractors' scale.
pub fn tractor_metric(t1: &TractorValue, t2: &TractorValue, ginv: &TensorValue) -> Result<f64> {
    if t1.scale != t2.scale {
        return Err(Error::Scale(t1.scale.clone(), t2.scale.clone()));
    }
    let d = t1.dim();
    if t2.dim() != d {
        return Err(Error::Argument("tractors of different rank".into()));
    }
    check_inverse_metric(d, ginv)?;
    Ok(quadratic(d, &ginv.comps, &t1.mu, &t2.mu) + t1.sigma * t2.rho + t1.rho * t2.sigma)
}

/// `h_AB` on raw upper components.
pub fn tractor_metric_matrix<S: Scalar>(d: usize, ginv: &[S]) -> Vec<S> {
    let n = d + 2;
    let zero = ginv[0].zero_like();
    let mut h = vec![zero; n * n];
    h[n - 1] = ginv[0].constant_like(1.0);
    h[(n - 1) * n] = ginv[0].constant_like(1.0);
    for b in 0..d {
        for c in 0..d {
            h[(1 + b) * n + 1 + c] = ginv[b * d + c].clone();
        }
    }
    h
}

/// `h^AB`, the inverse of [`tractor_metric_matrix`].
pub fn inverse_tractor_metric_matrix<S: Scalar>(d: usize, g: &[S]) -> Vec<S> {
    tractor_metric_matrix(d, g)
}

fn pair_raw(h: &[f64], u: &[f64], v: &[f64]) -> f64 {
    let n = u.len();
    let mut acc = 0.0;
    for a in 0..n {
        for b in 0..n {
            acc += h[a * n + b] * u[a] * v[b];
        }
    }
    acc
}

/// Tractor connection matrices `𝒜_a^B_C` at `[a][B][C]`, so that
/// `∇_a V = ∂_a V + 𝒜_a V` on raw upper components.
pub fn connection_from<S: Scalar>(d: usize, g: &[S], ginv: &[S], gamma: &[S], p: &[S]) -> Vec<S> {
    let n = d + 2;
    let zero = p[0].zero_like();
    let mut m = vec![zero.clone(); d * n * n];
    let at = |a: usize, r: usize, c: usize| (a * n + r) * n + c;
    for a in 0..d {
        m[at(a, 0, 1 + a)] = zero.constant_like(-1.0);
        for b in 0..d {
            m[at(a, 1 + b, 0)] = p[a * d + b].clone();
            m[at(a, 1 + b, n - 1)] = g[a * d + b].clone();
            for c in 0..d {
                m[at(a, 1 + b, 1 + c)] = gamma[(c * d + a) * d + b].negate();
            }
        }
        for c in 0..d {
            let mut acc = zero.clone();
            for b in 0..d {
                acc.accumulate(&p[a * d + b], &ginv[b * d + c]);
            }
            m[at(a, n - 1, 1 + c)] = acc.negate();
        }
    }
    m
}

/// Curvature fields plus tractor connection matrices about one base point.
#[derive(Debug, Clone)]
pub struct TractorGeometry<T: Scalar = f64> {
    pub fields: CurvatureFields<T>,
    /// `𝒜_a^B_C` at `[a][B][C]`.
    pub conn: Vec<Jet<T>>,
}

impl<T: Scalar> TractorGeometry<T> {
    pub fn new(fields: CurvatureFields<T>) -> Result<Self> {
        let d = fields.dim;
        let p = fields.schouten.as_ref().ok_or(Error::Truncation {
            needed: 2,
            available: fields.g[0].order(),
        })?;
        let conn = connection_from(d, &fields.g, &fields.ginv, &fields.gamma, p);
        Ok(TractorGeometry { fields, conn })
    }

    pub fn dim(&self) -> usize {
        self.fields.dim
    }

    pub fn connection(&self) -> Connection<'_, T> {
        Connection {
            dim: self.fields.dim,
            gamma: &self.fields.gamma,
            tractor: Some(&self.conn),
        }
    }

    /// Coupled Levi-Civita–tractor derivative; the new index goes in front.
    pub fn derivative(&self, comps: &[Jet<T>], slots: &[Slot]) -> Result<Vec<Jet<T>>> {
        self.connection().covariant_derivative(comps, slots)
    }
}

impl TractorGeometry<f64> {
    /// Geometry from metric jets of `order` (≥ 2) about `point`.
    pub fn at(chart: &MetricChart, point: &[f64], order: usize) -> Result<Self> {
        if chart.dim() < 3 {
            return Err(Error::Dimension(format!("tractors need d ≥ 3, got {}", chart.dim())));
        }
        TractorGeometry::new(curvature_fields(chart.metric_jets(point, order.max(2))?, chart.dim())?)
    }
}

fn check_field(comps: &[Jet], d: usize, slots: &[Slot]) -> Result<()> {
    let n: usize = tensor::shape(d, slots).iter().product();
    if comps.len() != n {
        return Err(Error::Argument(format!(
            "field returned {} components, slots {slots:?} need {n}",
            comps.len()
        )));
    }
    Ok(())
}

/// Applies the coupled connection `times` (1 or 2) times to a field given by
/// component jets; tractor slots are raw. Returns the derivative tensor with
/// the new lower indices in front.
pub fn tractor_derivative(
    chart: &MetricChart,
    point: &[f64],
    slots: &[Slot],
    weight: i32,
    times: usize,
    field: impl Fn(&[Jet]) -> Result<Vec<Jet>>,
) -> Result<TensorValue> {
    if !(1..=2).contains(&times) {
        return Err(Error::Argument("times must be 1 or 2".into()));
    }
    let d = chart.dim();
    let geom = TractorGeometry::at(chart, point, times + 1)?;
    let mut comps = field(&coordinate_jets(point, times)?)?;
    check_field(&comps, d, slots)?;
    let mut current = slots.to_vec();
    for _ in 0..times {
        comps = geom.derivative(&comps, &current)?;
        current.insert(0, Slot::Lower);
    }
    Tensor::from_components(d, current, weight, values(&comps))
}

/// `∇_a V` for a weight-0 tractor field `V` given by raw component jets.
pub fn tractor_connection(
    chart: &MetricChart,
    point: &[f64],
    field: impl Fn(&[Jet]) -> Result<Vec<Jet>>,
) -> Result<TensorValue> {
    tractor_derivative(chart, point, &[Slot::TractorUpper], 0, 1, field)
}

/// The injectors `X`, `Y`, `Z_c` of the current splitting, as raw upper
/// tractors, with the tractor metric and its inverse.
#[derive(Debug, Clone, Serialize)]
pub struct Projectors {
    pub dim: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<Vec<f64>>,
    pub h: TensorValue,
    pub h_inv: TensorValue,
}

impl Projectors {
    /// `h(u, v)` on raw upper tractors.
    pub fn pair(&self, u: &[f64], v: &[f64]) -> f64 {
        pair_raw(&self.h.comps, u, v)
    }
}

pub fn projectors(chart: &MetricChart, point: &[f64]) -> Result<Projectors> {
    let d = chart.dim();
    let g = chart.metric(point)?;
    let ginv = tensor::invert_matrix(&g, d)?;
    let n = d + 2;
    let mut x = vec![0.0; n];
    x[n - 1] = 1.0;
    let mut y = vec![0.0; n];
    y[0] = 1.0;
    let z = (0..d)
        .map(|c| {
            let mut v = vec![0.0; n];
            for b in 0..d {
                v[1 + b] = g[b * d + c];
            }
            v
        })
        .collect();
    Ok(Projectors {
        dim: d,
        x,
        y,
        z,
        h: Tensor::from_components(d, vec![Slot::TractorLower; 2], 0, tractor_metric_matrix(d, &ginv))?,
        h_inv: Tensor::from_components(d, vec![Slot::TractorUpper; 2], 0, inverse_tractor_metric_matrix(d, &g))?,
    })
}

/// `−g^{ab} T_ab…` over the two leading indices of a second derivative.
fn laplacian(d: usize, ginv: &[f64], ddv: &[f64]) -> Vec<f64> {
    let n = ddv.len() / (d * d);
    let mut out = vec![0.0; n];
    for a in 0..d {
        for b in 0..d {
            let k = ginv[a * d + b];
            if k == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(&ddv[(a * d + b) * n..(a * d + b + 1) * n]) {
                *o -= k * v;
            }
        }
    }
    out
}

/// Stacks the three slices of a tractor-D type operator into a new leading
/// raw upper slot: `σ ↦ (d+2w−2)wV`, `μ_b ↦ (d+2w−2)∇_bV`, `ρ ↦ x_part`.
fn d_slices(d: usize, w: i32, v: &[f64], dv: &[f64], x_part: &[f64]) -> Vec<f64> {
    let k = d as f64 + 2.0 * w as f64 - 2.0;
    let mut out = Vec::with_capacity((d + 2) * v.len());
    out.extend(v.iter().map(|c| k * w as f64 * c));
    out.extend(dv.iter().map(|c| k * c));
    out.extend_from_slice(x_part);
    out
}

struct SecondOrder {
    geom: TractorGeometry,
    v: Vec<f64>,
    dv: Vec<f64>,
    ddv: Vec<f64>,
}

fn second_order(
    chart: &MetricChart,
    point: &[f64],
    slots: &[Slot],
    metric_order: usize,
    field: impl Fn(&[Jet]) -> Result<Vec<Jet>>,
) -> Result<SecondOrder> {
    let d = chart.dim();
    let geom = TractorGeometry::at(chart, point, metric_order)?;
    let comps = field(&coordinate_jets(point, 2)?)?;
    check_field(&comps, d, slots)?;
    let dv = geom.derivative(&comps, slots)?;
    let mut s1 = vec![Slot::Lower];
    s1.extend_from_slice(slots);
    let ddv = geom.derivative(&dv, &s1)?;
    Ok(SecondOrder {
        v: values(&comps),
        dv: values(&dv),
        ddv: values(&ddv),
        geom,
    })
}

/// The tractor-D operator `𝔻` on a weight-`w` field with any mix of tensor
/// and raw tractor slots. The result carries a new leading upper tractor
/// slot and weight `w − 1`.
pub fn tractor_d(
    chart: &MetricChart,
    point: &[f64],
    slots: &[Slot],
    weight: i32,
    field: impl Fn(&[Jet]) -> Result<Vec<Jet>>,
) -> Result<TensorValue> {
    let d = chart.dim();
    let order = if slots.iter().any(|s| s.is_tractor()) { 3 } else { 2 };
    let s = second_order(chart, point, slots, order, field)?;
    let ginv = values(&s.geom.fields.ginv);
    let j = s.geom.fields.j.as_ref().map(Scalar::value).unwrap_or(0.0);
    let x_part: Vec<f64> = laplacian(d, &ginv, &s.ddv)
        .iter()
        .zip(&s.v)
        .map(|(l, v)| l - weight as f64 * j * v)
        .collect();
    let mut out_slots = vec![Slot::TractorUpper];
    out_slots.extend_from_slice(slots);
    Tensor::from_components(d, out_slots, weight - 1, d_slices(d, weight, &s.v, &s.dv, &x_part))
}

/// The splitting operator `D σ = (1/d) 𝔻 σ` on a weight-1 density.
pub fn splitting_operator(chart: &MetricChart, point: &[f64], sigma: &ScalarField) -> Result<TractorValue> {
    let t = tractor_d(chart, point, &[], 1, |x| Ok(vec![sigma.eval(x)?]))?;
    let d = chart.dim() as f64;
    let raw: Vec<f64> = t.comps.iter().map(|c| c / d).collect();
    TractorValue::from_raw(chart.label(), &raw)
}

/// `Ω_ab^C_E` at `[a][b][C][E]` (C raw upper, E raw lower) from the Weyl and
/// Cotton tensors.
pub fn tractor_curvature_from<S: Scalar>(d: usize, ginv: &[S], weyl: &[S], cotton: &[S]) -> Vec<S> {
    let n = d + 2;
    let zero = weyl[0].zero_like();
    let mut out = vec![zero.clone(); d * d * n * n];
    let at = |a: usize, b: usize, r: usize, c: usize| ((a * d + b) * n + r) * n + c;
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                out[at(a, b, 1 + c, 0)] = cotton[(c * d + a) * d + b].clone();
                for k in 0..d {
                    let mut w = zero.clone();
                    for e in 0..d {
                        w.accumulate(&weyl[((a * d + b) * d + c) * d + e], &ginv[e * d + k]);
                    }
                    out[at(a, b, 1 + c, 1 + k)] = w;
                }
            }
            for k in 0..d {
                let mut acc = zero.clone();
                for e in 0..d {
                    acc.accumulate(&cotton[(e * d + a) * d + b], &ginv[e * d + k]);
                }
                out[at(a, b, n - 1, 1 + k)] = acc.negate();
            }
        }
    }
    out
}

fn omega_slots() -> Vec<Slot> {
    vec![Slot::Lower, Slot::Lower, Slot::TractorUpper, Slot::TractorLower]
}

/// Tractor curvature at a point (metric jets of order 3).
pub fn tractor_curvature(chart: &MetricChart, point: &[f64]) -> Result<TensorValue> {
    let geom = TractorGeometry::at(chart, point, 3)?;
    let f = &geom.fields;
    let om = tractor_curvature_from(
        f.dim,
        &values(&f.ginv),
        &values(f.weyl.as_ref().unwrap()),
        &values(f.cotton.as_ref().unwrap()),
    );
    Tensor::from_components(f.dim, omega_slots(), 0, om)
}

/// `∇^a Ω_ac^D_E` at `[c][D][E]`, computed by differentiating the curvature.
pub fn curvature_divergence(chart: &MetricChart, point: &[f64]) -> Result<TensorValue> {
    let geom = TractorGeometry::at(chart, point, 4)?;
    let f = &geom.fields;
    let d = f.dim;
    let n = d + 2;
    let om = tractor_curvature_from(d, &f.ginv, f.weyl.as_ref().unwrap(), f.cotton.as_ref().unwrap());
    let dom = values(&geom.derivative(&om, &omega_slots())?);
    let ginv = values(&f.ginv);
    let block = d * n * n;
    let mut out = vec![0.0; block];
    for e in 0..d {
        for a in 0..d {
            let k = ginv[e * d + a];
            if k == 0.0 {
                continue;
            }
            // [e][a][c][D][E] with the first two contracted
            let base = (e * d + a) * block;
            for (o, v) in out.iter_mut().zip(&dom[base..base + block]) {
                *o += k * v;
            }
        }
    }
    Tensor::from_components(d, vec![Slot::Lower, Slot::TractorUpper, Slot::TractorLower], 0, out)
}

/// Closed form of `∇^a Ω_ac^D_E` in terms of the Cotton and Bach tensors.
pub fn divergence_formula(d: usize, ginv: &[f64], cotton: &[f64], bach: &[f64]) -> Vec<f64> {
    let n = d + 2;
    let k = d as f64 - 4.0;
    let mut out = vec![0.0; d * n * n];
    let at = |c: usize, r: usize, s: usize| (c * n + r) * n + s;
    for c in 0..d {
        for i in 0..d {
            out[at(c, 1 + i, 0)] = bach[i * d + c];
            for m in 0..d {
                let mut acc = 0.0;
                for e in 0..d {
                    acc += cotton[(c * d + i) * d + e] * ginv[e * d + m];
                }
                out[at(c, 1 + i, 1 + m)] = k * acc;
            }
        }
        for m in 0..d {
            let mut acc = 0.0;
            for e in 0..d {
                acc += bach[e * d + c] * ginv[e * d + m];
            }
            out[at(c, n - 1, 1 + m)] = -acc;
        }
    }
    out
}

/// Max component of the tractor curvature divergence; zero exactly when the
/// tractor connection is Yang–Mills at the point.
pub fn yang_mills_residual(chart: &MetricChart, point: &[f64]) -> Result<f64> {
    Ok(curvature_divergence(chart, point)?.max_abs())
}

/// Max over components of `[∇_a, ∇_b] V − Ω_ab V` for a fixed polynomial
/// probe field `V`.
pub fn commutator_residual(chart: &MetricChart, point: &[f64]) -> Result<f64> {
    let d = chart.dim();
    let n = d + 2;
    let dd = tractor_derivative(chart, point, &[Slot::TractorUpper], 0, 2, |x| Ok(probe_field(x)))?;
    let om = tractor_curvature(chart, point)?;
    let v = probe_field(point);
    let mut worst = 0.0f64;
    for a in 0..d {
        for b in 0..d {
            for c in 0..n {
                let comm = dd.get(&[a, b, c]) - dd.get(&[b, a, c]);
                let ov: f64 = (0..n).map(|e| om.get(&[a, b, c, e]) * v[e]).sum();
                worst = worst.max((comm - ov).abs());
            }
        }
    }
    Ok(worst)
}

/// A generic tractor field, polynomial in the coordinates.
pub fn probe_field<S: Scalar>(x: &[S]) -> Vec<S> {
    let d = x.len();
    (0..d + 2)
        .map(|k| {
            let i = k % d;
            let j = (k + 1) % d;
            x[i].scale(0.3 + 0.1 * k as f64)
                .plus(&x[j].times(&x[i]).scale(0.2 - 0.05 * k as f64))
                .plus(&x[j].times(&x[j]).times(&x[i]).scale(0.1))
                .add_const(0.5 - 0.2 * k as f64)
        })
        .collect()
}

/// Max component of the difference between the differentiated tractor
/// curvature divergence and its Cotton/Bach closed form.
pub fn divergence_residual(chart: &MetricChart, point: &[f64]) -> Result<f64> {
    let p = crate::curvature::curvature_packet(chart, point, 4)?;
    let div = curvature_divergence(chart, point)?;
    let formula = divergence_formula(
        chart.dim(),
        &p.ginv.comps,
        &p.cotton.as_ref().expect("order 4").comps,
        &p.bach.as_ref().expect("order 4").comps,
    );
    Ok(div.comps.iter().zip(&formula).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// `W^ABCE` on raw upper slots from the Weyl, Cotton and Bach tensors.
pub fn w_tractor_from<S: Scalar>(d: usize, weyl: &[S], cotton: &[S], bach: &[S]) -> Vec<S> {
    let n = d + 2;
    let r = n - 1;
    let k = d as f64 - 4.0;
    let zero = weyl[0].zero_like();
    let mut w = vec![zero; n * n * n * n];
    let at = |a: usize, b: usize, c: usize, e: usize| ((a * n + b) * n + c) * n + e;
    let cot = |a: usize, b: usize, c: usize| &cotton[(a * d + b) * d + c];
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                for e in 0..d {
                    w[at(1 + a, 1 + b, 1 + c, 1 + e)] = weyl[((a * d + b) * d + c) * d + e].scale(k);
                }
                // (a, b, c) play the roles of the three free tensor indices
                w[at(1 + a, 1 + b, r, 1 + c)] = cot(c, a, b).scale(-k);
                w[at(1 + a, 1 + b, 1 + c, r)] = cot(c, a, b).scale(k);
                w[at(r, 1 + a, 1 + b, 1 + c)] = cot(a, b, c).scale(-k);
                w[at(1 + a, r, 1 + b, 1 + c)] = cot(a, b, c).scale(k);
            }
            w[at(r, 1 + a, r, 1 + b)] = bach[b * d + a].clone();
            w[at(r, 1 + a, 1 + b, r)] = bach[b * d + a].negate();
            w[at(1 + a, r, r, 1 + b)] = bach[b * d + a].negate();
            w[at(1 + a, r, 1 + b, r)] = bach[b * d + a].clone();
        }
    }
    w
}

/// `W^ABCE` at a point (metric jets of order 4), weight −2.
pub fn w_tractor(chart: &MetricChart, point: &[f64]) -> Result<TensorValue> {
    let geom = TractorGeometry::at(chart, point, 4)?;
    let f = &geom.fields;
    let w = w_tractor_from(
        f.dim,
        &values(f.weyl.as_ref().unwrap()),
        &values(f.cotton.as_ref().unwrap()),
        &values(f.bach.as_ref().unwrap()),
    );
    Tensor::from_components(f.dim, vec![Slot::TractorUpper; 4], -2, w)
}

fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * shape[k + 1];
    }
    s
}

/// `A#` on a single slot `k`; `endo` is `A^X_Y` at `[X][Y]`.
fn hash_slot(endo: &[f64], t: &[f64], shape: &[usize], slot: Slot, k: usize, out: &mut [f64]) {
    let n = shape[k];
    let st = strides(shape)[k];
    for (flat, idx) in tensor::all_indices(shape).enumerate() {
        let i = idx[k];
        let base = flat - i * st;
        let mut acc = 0.0;
        for j in 0..n {
            let m = if slot.is_upper() { endo[i * n + j] } else { -endo[j * n + i] };
            if m != 0.0 {
                acc += m * t[base + j * st];
            }
        }
        out[flat] += acc;
    }
}

fn hash_raw(endo: &[f64], t: &[f64], shape: &[usize], slots: &[Slot]) -> Vec<f64> {
    let mut out = vec![0.0; t.len()];
    for (k, s) in slots.iter().enumerate() {
        if s.is_tractor() {
            hash_slot(endo, t, shape, *s, k, &mut out);
        }
    }
    out
}

/// Natural action of an endomorphism `A^X_Y` (slots upper/lower tractor) on
/// every tractor slot of `t`: `+A^X_Y T^Y` on upper slots, `−A^Y_X T_Y` on
/// lower ones. Tensor slots are untouched.
pub fn hash_apply(endo: &TensorValue, t: &TensorValue) -> Result<TensorValue> {
    if endo.slots != [Slot::TractorUpper, Slot::TractorLower] || endo.dim != t.dim {
        return Err(Error::Variance("hash needs an endomorphism A^X_Y of matching dimension".into()));
    }
    let shape = t.shape();
    Tensor::from_components(t.dim, t.slots.clone(), t.weight, hash_raw(&endo.comps, &t.comps, &shape, &t.slots))
}

/// Mixed form `W^A_B^C_E` of an all-upper raw `W^ABCE`.
fn mixed_w(n: usize, w: &[f64], h: &[f64]) -> Vec<f64> {
    let mut half = vec![0.0; n * n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for e in 0..n {
                    let mut acc = 0.0;
                    for f in 0..n {
                        acc += w[((a * n + f) * n + c) * n + e] * h[f * n + b];
                    }
                    half[((a * n + b) * n + c) * n + e] = acc;
                }
            }
        }
    }
    let mut out = vec![0.0; n * n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for e in 0..n {
                    let mut acc = 0.0;
                    for f in 0..n {
                        acc += half[((a * n + b) * n + c) * n + f] * h[f * n + e];
                    }
                    out[((a * n + b) * n + c) * n + e] = acc;
                }
            }
        }
    }
    out
}

/// `W##T` for raw `W^ABCE` and lowering matrix `h_AB`.
fn double_hash_raw(n: usize, w: &[f64], h: &[f64], t: &[f64], shape: &[usize], slots: &[Slot]) -> Vec<f64> {
    let wm = mixed_w(n, w, h);
    let mut out = vec![0.0; t.len()];
    for c in 0..n {
        for e in 0..n {
            let alpha: Vec<f64> = (0..n * n).map(|ab| wm[ab * n * n + c * n + e]).collect();
            if alpha.iter().all(|v| *v == 0.0) {
                continue;
            }
            let mut elementary = vec![0.0; n * n];
            elementary[c * n + e] = 1.0;
            let inner = hash_raw(&elementary, t, shape, slots);
            for (o, v) in out.iter_mut().zip(hash_raw(&alpha, &inner, shape, slots)) {
                *o += v;
            }
        }
    }
    out
}

/// Double hash action `W##T` of an all-upper raw `W^ABCE`; `ginv` is the
/// inverse metric of the splitting scale (to lower tractor indices).
pub fn double_hash(w: &TensorValue, t: &TensorValue, ginv: &TensorValue) -> Result<TensorValue> {
    if w.slots != [Slot::TractorUpper; 4] || w.dim != t.dim {
        return Err(Error::Variance("double hash needs W with four upper tractor slots".into()));
    }
    check_inverse_metric(w.dim, ginv)?;
    let d = w.dim;
    let h = tractor_metric_matrix(d, &ginv.comps);
    let shape = t.shape();
    Tensor::from_components(
        d,
        t.slots.clone(),
        t.weight,
        double_hash_raw(d + 2, &w.comps, &h, &t.comps, &shape, &t.slots),
    )
}

fn check_box_dim(d: usize) -> Result<()> {
    if d == 4 {
        return Err(Error::Dimension("□̃ and 𝔻̃ are undefined in dimension 4".into()));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn box_tilde_raw(
    d: usize,
    weight: i32,
    ginv: &[f64],
    j: f64,
    w: &[f64],
    v: &[f64],
    ddv: &[f64],
    slots: &[Slot],
) -> Vec<f64> {
    let n = d + 2;
    let h = tractor_metric_matrix(d, ginv);
    let shape = tensor::shape(d, slots);
    let wh = double_hash_raw(n, w, &h, v, &shape, slots);
    let k = 1.0 / (2.0 * (d as f64 - 4.0));
    laplacian(d, ginv, ddv)
        .iter()
        .zip(v)
        .zip(&wh)
        .map(|((l, x), y)| l - weight as f64 * j * x - k * y)
        .collect()
}

/// `□̃T = (Δ − wJ)T − W##T / (2(d−4))` on a field with tractor slots.
pub fn box_tilde(
    chart: &MetricChart,
    point: &[f64],
    slots: &[Slot],
    weight: i32,
    field: impl Fn(&[Jet]) -> Result<Vec<Jet>>,
) -> Result<TensorValue> {
    let d = chart.dim();
    check_box_dim(d)?;
    let s = second_order(chart, point, slots, 4, field)?;
    let f = &s.geom.fields;
    let ginv = values(&f.ginv);
    let w = w_tractor_from(
        d,
        &values(f.weyl.as_ref().unwrap()),
        &values(f.cotton.as_ref().unwrap()),
        &values(f.bach.as_ref().unwrap()),
    );
    let j = f.j.as_ref().unwrap().value();
    let out = box_tilde_raw(d, weight, &ginv, j, &w, &s.v, &s.ddv, slots);
    Tensor::from_components(d, slots.to_vec(), weight - 2, out)
}

/// `𝔻̃T`: the tractor-D operator with `□̃` in the `X` slot.
pub fn d_tilde(
    chart: &MetricChart,
    point: &[f64],
    slots: &[Slot],
    weight: i32,
    field: impl Fn(&[Jet]) -> Result<Vec<Jet>>,
) -> Result<TensorValue> {
    let d = chart.dim();
    check_box_dim(d)?;
    let s = second_order(chart, point, slots, 4, field)?;
    let f = &s.geom.fields;
    let ginv = values(&f.ginv);
    let w = w_tractor_from(
        d,
        &values(f.weyl.as_ref().unwrap()),
        &values(f.cotton.as_ref().unwrap()),
        &values(f.bach.as_ref().unwrap()),
    );
    let j = f.j.as_ref().unwrap().value();
    let bx = box_tilde_raw(d, weight, &ginv, j, &w, &s.v, &s.ddv, slots);
    let mut out_slots = vec![Slot::TractorUpper];
    out_slots.extend_from_slice(slots);
    Tensor::from_components(d, out_slots, weight - 1, d_slices(d, weight, &s.v, &s.dv, &bx))
}

/// `W` together with its first and second coupled covariant derivatives at a
/// point. The derivatives come from a two-pass evaluation: the curvature
/// pipeline runs on metric jets whose coefficients are themselves jets in a
/// displacement of the base point, so `W` is known as a second-order jet
/// without needing metric jets beyond order 4.
#[derive(Debug, Clone)]
pub struct WJet {
    pub dim: usize,
    pub g: Vec<f64>,
    pub ginv: Vec<f64>,
    pub j: f64,
    /// `W^ABCE`
    pub w: Vec<f64>,
    /// `∇_a W^ABCE`
    pub dw: Vec<f64>,
    /// `∇_a ∇_b W^ABCE`
    pub ddw: Vec<f64>,
    /// `W^ABCE` as jets in the displacement, before differentiation.
    pub w_jets: Vec<Jet>,
}

pub fn w_jet(chart: &MetricChart, point: &[f64]) -> Result<WJet> {
    let d = chart.dim();
    if d < 3 {
        return Err(Error::Dimension(format!("W needs d ≥ 3, got {d}")));
    }
    if point.len() != d {
        return Err(Error::Argument(format!("point has {} coordinates, chart has {d}", point.len())));
    }
    let x: Vec<Jet<Jet>> = (0..d)
        .map(|i| Jet::variable_with(d, 4, i, Jet::variable_with(d, 2, i, point[i])?))
        .collect::<Result<_>>()?;
    let f = curvature_fields(chart.metric(&x)?, d)?;
    let strip = |v: &[Jet<Jet>]| -> Vec<Jet> { v.iter().map(|c| c.constant_term().clone()).collect() };
    let g = strip(&f.g);
    let ginv = strip(&f.ginv);
    let gamma = strip(&f.gamma);
    let p = strip(f.schouten.as_ref().unwrap());
    let w = w_tractor_from(
        d,
        &strip(f.weyl.as_ref().unwrap()),
        &strip(f.cotton.as_ref().unwrap()),
        &strip(f.bach.as_ref().unwrap()),
    );
    let conn = connection_from(d, &g, &ginv, &gamma, &p);
    let c = Connection {
        dim: d,
        gamma: &gamma,
        tractor: Some(&conn),
    };
    let slots = [Slot::TractorUpper; 4];
    let dw = c.covariant_derivative(&w, &slots)?;
    let mut s1 = vec![Slot::Lower];
    s1.extend_from_slice(&slots);
    let ddw = c.covariant_derivative(&dw, &s1)?;
    Ok(WJet {
        dim: d,
        g: values(&g),
        ginv: values(&ginv),
        j: f.j.as_ref().unwrap().value(),
        w: values(&w),
        dw: values(&dw),
        ddw: values(&ddw),
        w_jets: w,
    })
}

impl WJet {
    pub fn tensor(&self) -> Result<TensorValue> {
        Tensor::from_components(self.dim, vec![Slot::TractorUpper; 4], -2, self.w.clone())
    }

    /// `□̃W` (weight −2 field).
    pub fn box_tilde(&self) -> Result<Vec<f64>> {
        check_box_dim(self.dim)?;
        Ok(box_tilde_raw(
            self.dim,
            -2,
            &self.ginv,
            self.j,
            &self.w,
            &self.w,
            &self.ddw,
            &[Slot::TractorUpper; 4],
        ))
    }

    /// `𝔻̃W` with the new raw upper slot in front.
    pub fn d_tilde(&self) -> Result<Vec<f64>> {
        let bx = self.box_tilde()?;
        Ok(d_slices(self.dim, -2, &self.w, &self.dw, &bx))
    }

    /// `I^A 𝔻̃_A W` for a raw upper tractor `I`.
    pub fn contract_d_tilde(&self, i: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim + 2;
        if i.len() != n {
            return Err(Error::Argument(format!("tractor has {} components, expected {n}", i.len())));
        }
        let dt = self.d_tilde()?;
        let h = tractor_metric_matrix(self.dim, &self.ginv);
        let lowered: Vec<f64> = (0..n).map(|b| (0..n).map(|a| i[a] * h[a * n + b]).sum()).collect();
        let m = self.w.len();
        let mut out = vec![0.0; m];
        for (b, l) in lowered.iter().enumerate() {
            if *l == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(&dt[b * m..(b + 1) * m]) {
                *o += l * v;
            }
        }
        Ok(out)
    }

    /// `W^ABCE I_E` and `I_A W^ABCE` combined: the max absolute component.
    pub fn contraction_with(&self, i: &[f64]) -> f64 {
        let n = self.dim + 2;
        let h = tractor_metric_matrix(self.dim, &self.ginv);
        let lowered: Vec<f64> = (0..n).map(|b| (0..n).map(|a| i[a] * h[a * n + b]).sum()).collect();
        let mut worst = 0.0f64;
        for x in 0..n * n * n {
            let last: f64 = (0..n).map(|e| self.w[x * n + e] * lowered[e]).sum();
            let first: f64 = (0..n).map(|a| self.w[a * n * n * n + x] * lowered[a]).sum();
            worst = worst.max(last.abs()).max(first.abs());
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn flat(d: usize) -> TensorValue {
        MetricChart::euclidean(d).inverse_metric(&vec![0.0; d]).unwrap()
    }

    #[test]
    fn transform_examples() {
        let ginv = flat(3);
        let t = TractorValue::new("e", 1.0, vec![0.0; 3], 0.0);
        let s = transform_tractor(&t, &[1.0, 0.0, 0.0], &ginv).unwrap();
        assert_eq!(s.raw(), vec![1.0, 1.0, 0.0, 0.0, -0.5]);
        let t = TractorValue::new("e", 0.0, vec![0.3, -0.2, 1.0], 2.0);
        let s = transform_tractor(&t, &[0.5, 0.1, -0.4], &ginv).unwrap();
        assert_eq!(s.mu, t.mu);
        assert_abs_diff_eq!(s.rho, 2.0 - (0.15 - 0.02 - 0.4), epsilon = 1e-15);
    }

    #[test]
    fn metric_signature_and_scale_mismatch() {
        let ginv = flat(3);
        let x = TractorValue::new("e", 0.0, vec![0.0; 3], 1.0);
        assert_eq!(tractor_metric(&x, &x, &ginv).unwrap(), 0.0);
        let other = TractorValue::new("f", 0.0, vec![0.0; 3], 1.0);
        assert!(matches!(tractor_metric(&x, &other, &ginv), Err(Error::Scale(..))));
        let h = tractor_metric_matrix(3, &ginv.comps);
        let y_minus_x = [1.0, 0.0, 0.0, 0.0, -1.0];
        assert!(pair_raw(&h, &y_minus_x, &y_minus_x) < 0.0);
    }

    #[test]
    fn w_has_weyl_symmetries() {
        let chart = MetricChart::random_perturbation(5, 4);
        let w = w_tractor(&chart, &[0.1, 0.0, -0.1, 0.2, 0.05]).unwrap();
        let n = 7;
        let at = |a: usize, b: usize, c: usize, e: usize| w.comps[((a * n + b) * n + c) * n + e];
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for e in 0..n {
                        worst = worst
                            .max((at(a, b, c, e) + at(b, a, c, e)).abs())
                            .max((at(a, b, c, e) - at(c, e, a, b)).abs())
                            .max((at(a, b, c, e) + at(b, c, a, e) + at(c, a, b, e)).abs());
                    }
                }
            }
        }
        assert!(worst < 1e-10, "{worst}");
        assert!(w.max_abs() > 1e-3);
    }

    #[test]
    fn hash_of_identity_is_rank_times_t() {
        let d = 3;
        let n = d + 2;
        let id = Tensor::from_fn(d, vec![Slot::TractorUpper, Slot::TractorLower], 0, |i| {
            if i[0] == i[1] {
                1.0
            } else {
                0.0
            }
        });
        let t = Tensor::from_fn(d, vec![Slot::TractorUpper, Slot::TractorUpper], 0, |i| (i[0] * n + i[1]) as f64);
        let r = hash_apply(&id, &t).unwrap();
        assert_eq!(r.comps, t.scale(2.0).comps);
        // a mixed tensor is annihilated by the identity
        let m = Tensor::from_fn(d, vec![Slot::TractorUpper, Slot::TractorLower], 0, |i| (i[0] + 3 * i[1]) as f64);
        assert!(hash_apply(&id, &m).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn dimension_four_box_is_an_error() {
        let chart = MetricChart::euclidean(4);
        let r = box_tilde(&chart, &[0.0; 4], &[Slot::TractorUpper], 0, |x| {
            Ok((0..6).map(|_| x[0].clone()).collect())
        });
        assert!(matches!(r, Err(Error::Dimension(_))));
    }
}
