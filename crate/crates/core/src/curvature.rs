//! Riemannian and conformal curvature from metric jets.
//!
//! Conventions: `(∇_a∇_b − ∇_b∇_a)V^c = R_ab^c_d V^d`, `Ric_ab = R_ca^c_b`,
//! `J = Sc / (2(d−1))`, `P = (Ric − J g)/(d−2)`, Cotton
//! `A_abc = ∇_b P_ca − ∇_c P_ba`, Bach `B_ab = ∇^c A_acb + P^dc C_dacb`.
//! The Laplacian is `Δ = −∇^a∇_a`.
//!
//! The pipeline loses one jet order per derivative: metric jets of order
//! `K` give Γ to order `K−1`, Riemann/Schouten/Weyl to `K−2`, Cotton to
//! `K−3` and Bach to `K−4`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::{Jet, Scalar};
use crate::metric::{coordinate_jets, MetricChart};
use crate::tensor::{self, invert_matrix, Slot, Tensor, TensorValue};

/// Jet-valued curvature quantities over one base point.
#[derive(Debug, Clone)]
pub struct CurvatureFields<T: Scalar = f64> {
    pub dim: usize,
    pub g: Vec<Jet<T>>,
    pub ginv: Vec<Jet<T>>,
    /// `Γ^c_ab` at `[c][a][b]`.
    pub gamma: Vec<Jet<T>>,
    /// `R_ab^c_d` at `[a][b][c][d]`; present from metric order 2.
    pub riemann_mixed: Option<Vec<Jet<T>>>,
    /// `R_abcd`
    pub riemann: Option<Vec<Jet<T>>>,
    pub ricci: Option<Vec<Jet<T>>>,
    pub scalar: Option<Jet<T>>,
    /// Present for `d ≥ 3`.
    pub schouten: Option<Vec<Jet<T>>>,
    pub j: Option<Jet<T>>,
    pub weyl: Option<Vec<Jet<T>>>,
    /// `A_abc`; present from metric order 3.
    pub cotton: Option<Vec<Jet<T>>>,
    /// `B_ab`; present from metric order 4.
    pub bach: Option<Vec<Jet<T>>>,
}

fn idx2(d: usize, a: usize, b: usize) -> usize {
    a * d + b
}

fn idx3(d: usize, a: usize, b: usize, c: usize) -> usize {
    (a * d + b) * d + c
}

fn idx4(d: usize, a: usize, b: usize, c: usize, e: usize) -> usize {
    ((a * d + b) * d + c) * d + e
}

/// Sparse view of a connection matrix row: nonzero `(column, entry)` pairs.
type SparseRows<'a, T> = Vec<Vec<Vec<(usize, &'a Jet<T>)>>>;

/// Connection data for coupled covariant derivatives: Levi-Civita
/// Christoffel symbols and, optionally, tractor connection matrices
/// `𝒜_a^B_C` at `[a][B][C]` acting on raw upper tractor components.
pub struct Connection<'a, T: Scalar> {
    pub dim: usize,
    pub gamma: &'a [Jet<T>],
    pub tractor: Option<&'a [Jet<T>]>,
}

impl<'a, T: Scalar> Connection<'a, T> {
    fn sparse_gamma(&self) -> (SparseRows<'a, T>, SparseRows<'a, T>) {
        let d = self.dim;
        // upper[a][c] = [(e, Γ^c_ae)], lower[a][b] = [(e, Γ^e_ab)]
        let mut upper = vec![vec![Vec::new(); d]; d];
        let mut lower = vec![vec![Vec::new(); d]; d];
        for c in 0..d {
            for a in 0..d {
                for e in 0..d {
                    let g = &self.gamma[idx3(d, c, a, e)];
                    if !g.is_zero() {
                        upper[a][c].push((e, g));
                        lower[a][e].push((c, g));
                    }
                }
            }
        }
        (upper, lower)
    }

    fn sparse_tractor(&self) -> (SparseRows<'a, T>, SparseRows<'a, T>) {
        let d = self.dim;
        let n = d + 2;
        let mut upper = vec![vec![Vec::new(); n]; d];
        let mut lower = vec![vec![Vec::new(); n]; d];
        if let Some(m) = self.tractor {
            for a in 0..d {
                for b in 0..n {
                    for c in 0..n {
                        let v = &m[(a * n + b) * n + c];
                        if !v.is_zero() {
                            upper[a][b].push((c, v));
                            lower[a][c].push((b, v));
                        }
                    }
                }
            }
        }
        (upper, lower)
    }

    /// `∇_a T` with the new lower index in front.
    pub fn covariant_derivative(&self, comps: &[Jet<T>], slots: &[Slot]) -> Result<Vec<Jet<T>>> {
        let d = self.dim;
        let shape = tensor::shape(d, slots);
        let n: usize = shape.iter().product();
        if comps.len() != n {
            return Err(Error::Argument(format!(
                "field has {} components, shape {shape:?} needs {n}",
                comps.len()
            )));
        }
        if slots.iter().any(|s| s.is_tractor()) && self.tractor.is_none() {
            return Err(Error::Argument("tractor slots need a tractor connection".into()));
        }
        let (gu, gl) = self.sparse_gamma();
        let (tu, tl) = self.sparse_tractor();
        // strides of each slot in the flat layout
        let mut strides = vec![1; shape.len()];
        for k in (0..shape.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * shape[k + 1];
        }
        let mut out = Vec::with_capacity(d * n);
        for a in 0..d {
            for (flat, idx) in tensor::all_indices(&shape).enumerate() {
                let mut v = comps[flat].partial(a)?;
                for (k, slot) in slots.iter().enumerate() {
                    let i = idx[k];
                    let base = flat - i * strides[k];
                    match slot {
                        Slot::Upper => {
                            for &(e, g) in &gu[a][i] {
                                v.accumulate(g, &comps[base + e * strides[k]]);
                            }
                        }
                        Slot::Lower => {
                            for &(e, g) in &gl[a][i] {
                                v.accumulate(&g.negate(), &comps[base + e * strides[k]]);
                            }
                        }
                        Slot::TractorUpper => {
                            for &(e, m) in &tu[a][i] {
                                v.accumulate(m, &comps[base + e * strides[k]]);
                            }
                        }
                        Slot::TractorLower => {
                            for &(e, m) in &tl[a][i] {
                                v.accumulate(&m.negate(), &comps[base + e * strides[k]]);
                            }
                        }
                    }
                }
                out.push(v);
            }
        }
        Ok(out)
    }
}

/// Runs the curvature pipeline on metric component jets.
pub fn curvature_fields<T: Scalar>(g: Vec<Jet<T>>, dim: usize) -> Result<CurvatureFields<T>> {
    let d = dim;
    if g.len() != d * d {
        return Err(Error::Argument("metric needs d² components".into()));
    }
    let order = g[0].order();
    if order < 1 {
        return Err(Error::Truncation {
            needed: 1,
            available: order,
        });
    }
    let ginv = invert_matrix(&g, d)?;

    // ∂_e g_ab at [e][a][b]
    let mut dg = Vec::with_capacity(d * d * d);
    for e in 0..d {
        for c in &g {
            dg.push(c.partial(e)?);
        }
    }
    let mut gamma: Vec<Jet<T>> = Vec::with_capacity(d * d * d);
    let zero = dg[0].zero_like();
    for c in 0..d {
        for a in 0..d {
            for b in 0..d {
                if b < a {
                    let sym = gamma[idx3(d, c, b, a)].clone();
                    gamma.push(sym);
                    continue;
                }
                let mut acc = zero.clone();
                for e in 0..d {
                    let t = dg[idx3(d, a, e, b)]
                        .plus(&dg[idx3(d, b, e, a)])
                        .minus(&dg[idx3(d, e, a, b)]);
                    acc.accumulate(&ginv[idx2(d, c, e)], &t);
                }
                gamma.push(acc.scale(0.5));
            }
        }
    }

    let mut fields = CurvatureFields {
        dim: d,
        g,
        ginv,
        gamma,
        riemann_mixed: None,
        riemann: None,
        ricci: None,
        scalar: None,
        schouten: None,
        j: None,
        weyl: None,
        cotton: None,
        bach: None,
    };
    if order < 2 {
        return Ok(fields);
    }
    let gamma = &fields.gamma;
    let g = &fields.g;
    let ginv = &fields.ginv;

    // ∂_e Γ^c_ab at [e][c][a][b]
    let mut dgamma = Vec::with_capacity(d * d * d * d);
    for e in 0..d {
        for gm in gamma {
            dgamma.push(gm.partial(e)?);
        }
    }
    let zero = dgamma[0].zero_like();
    let mut rm = vec![zero.clone(); d * d * d * d];
    for a in 0..d {
        for b in a + 1..d {
            for c in 0..d {
                for e in 0..d {
                    let mut v = dgamma[idx4(d, a, c, b, e)].minus(&dgamma[idx4(d, b, c, a, e)]);
                    for f in 0..d {
                        v.accumulate(&gamma[idx3(d, c, a, f)], &gamma[idx3(d, f, b, e)]);
                        v.accumulate(&gamma[idx3(d, c, b, f)].negate(), &gamma[idx3(d, f, a, e)]);
                    }
                    rm[idx4(d, b, a, c, e)] = v.negate();
                    rm[idx4(d, a, b, c, e)] = v;
                }
            }
        }
    }
    let mut ricci = Vec::with_capacity(d * d);
    for b in 0..d {
        for e in 0..d {
            let mut acc = zero.clone();
            for c in 0..d {
                acc.add_assign_ref(&rm[idx4(d, c, b, c, e)]);
            }
            ricci.push(acc);
        }
    }
    let mut sc = zero.clone();
    for a in 0..d {
        for b in 0..d {
            sc.accumulate(&ginv[idx2(d, a, b)], &ricci[idx2(d, a, b)]);
        }
    }
    let mut rl = vec![zero.clone(); d * d * d * d];
    for a in 0..d {
        for b in a + 1..d {
            for c in 0..d {
                for e in 0..d {
                    let mut acc = zero.clone();
                    for f in 0..d {
                        acc.accumulate(&g[idx2(d, c, f)], &rm[idx4(d, a, b, f, e)]);
                    }
                    rl[idx4(d, b, a, c, e)] = acc.negate();
                    rl[idx4(d, a, b, c, e)] = acc;
                }
            }
        }
    }

    if d >= 3 {
        let j = sc.scale(1.0 / (2.0 * (d as f64 - 1.0)));
        let p: Vec<Jet<T>> = (0..d * d)
            .map(|k| ricci[k].minus(&g[k].times(&j)).scale(1.0 / (d as f64 - 2.0)))
            .collect();
        let weyl = weyl_from(d, g, &rl, &p);
        fields.j = Some(j);
        fields.schouten = Some(p);
        fields.weyl = Some(weyl);
    }
    fields.riemann_mixed = Some(rm);
    fields.riemann = Some(rl);
    fields.ricci = Some(ricci);
    fields.scalar = Some(sc);

    if d >= 3 && order >= 3 {
        let conn = Connection {
            dim: d,
            gamma: &fields.gamma,
            tractor: None,
        };
        let p = fields.schouten.as_ref().unwrap();
        let dp = conn.covariant_derivative(p, &[Slot::Lower, Slot::Lower])?;
        let mut cotton = Vec::with_capacity(d * d * d);
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    cotton.push(dp[idx3(d, b, c, a)].minus(&dp[idx3(d, c, b, a)]));
                }
            }
        }
        if order >= 4 {
            let da = conn.covariant_derivative(&cotton, &[Slot::Lower; 3])?;
            let weyl = fields.weyl.as_ref().unwrap();
            let ginv = &fields.ginv;
            let p_up = raise_both(d, ginv, p);
            let zero = da[0].zero_like();
            let mut bach = Vec::with_capacity(d * d);
            for a in 0..d {
                for b in 0..d {
                    let mut acc = zero.clone();
                    for c in 0..d {
                        for e in 0..d {
                            acc.accumulate(&ginv[idx2(d, c, e)], &da[idx4(d, e, a, c, b)]);
                            acc.accumulate(&p_up[idx2(d, e, c)], &weyl[idx4(d, e, a, c, b)]);
                        }
                    }
                    bach.push(acc);
                }
            }
            fields.bach = Some(bach);
        }
        fields.cotton = Some(cotton);
    }
    Ok(fields)
}

/// `t^ab = g^ac g^bd t_cd`
pub(crate) fn raise_both<S: Scalar>(d: usize, ginv: &[S], t: &[S]) -> Vec<S> {
    let zero = t[0].zero_like();
    let mut half = vec![zero.clone(); d * d];
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                half[a * d + b].accumulate(&ginv[a * d + c], &t[c * d + b]);
            }
        }
    }
    let mut out = vec![zero; d * d];
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                out[a * d + b].accumulate(&half[a * d + c], &ginv[c * d + b]);
            }
        }
    }
    out
}

/// `C = R − 2g_c[a P_b]d − 2g_d[b P_a]c` on lowered Riemann components.
pub(crate) fn weyl_from<S: Scalar>(d: usize, g: &[S], r: &[S], p: &[S]) -> Vec<S> {
    let mut out = Vec::with_capacity(r.len());
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                for e in 0..d {
                    let mut v = r[idx4(d, a, b, c, e)].clone();
                    v.accumulate(&g[idx2(d, c, a)].negate(), &p[idx2(d, b, e)]);
                    v.accumulate(&g[idx2(d, c, b)], &p[idx2(d, a, e)]);
                    v.accumulate(&g[idx2(d, e, b)].negate(), &p[idx2(d, a, c)]);
                    v.accumulate(&g[idx2(d, e, a)], &p[idx2(d, b, c)]);
                    out.push(v);
                }
            }
        }
    }
    out
}

/// Metric jets about `point` fed through [`curvature_fields`].
pub fn fields_at(chart: &MetricChart, point: &[f64], order: usize) -> Result<CurvatureFields> {
    curvature_fields(chart.metric_jets(point, order)?, chart.dim())
}

/// Curvature of `chart` at `point` as plain tensors.
#[derive(Debug, Clone, Serialize)]
pub struct CurvaturePacket {
    pub point: Vec<f64>,
    pub g: TensorValue,
    pub ginv: TensorValue,
    /// `Γ^c_ab`
    pub gamma: TensorValue,
    /// `∂_e Γ^c_ab` with `e` first.
    pub dgamma: Option<TensorValue>,
    /// `∂_e ∂_f Γ^c_ab`
    pub ddgamma: Option<TensorValue>,
    /// `R_abcd`
    pub riemann: TensorValue,
    pub ricci: TensorValue,
    pub scalar: TensorValue,
    pub schouten: TensorValue,
    pub j: TensorValue,
    pub weyl: TensorValue,
    pub cotton: Option<TensorValue>,
    pub bach: Option<TensorValue>,
}

pub(crate) fn lower(n: usize) -> Vec<Slot> {
    vec![Slot::Lower; n]
}

pub(crate) fn values<T: Scalar>(v: &[Jet<T>]) -> Vec<f64> {
    v.iter().map(Scalar::value).collect()
}

impl CurvatureFields<f64> {
    pub fn packet(&self, point: &[f64]) -> Result<CurvaturePacket> {
        let d = self.dim;
        let dimension_error = || Error::Dimension(format!("conformal curvature needs d ≥ 3, got {d}"));
        let truncated = || Error::Truncation {
            needed: 2,
            available: self.g[0].order(),
        };
        let t = |slots: Vec<Slot>, w: i32, comps: Vec<f64>| Tensor::from_components(d, slots, w, comps);
        let mut gamma_slots = vec![Slot::Upper, Slot::Lower, Slot::Lower];
        let gamma = t(gamma_slots.clone(), 0, values(&self.gamma))?;
        gamma_slots.insert(0, Slot::Lower);
        let mut dgamma = None;
        let mut ddgamma = None;
        if self.gamma[0].order() >= 1 {
            let mut comps = Vec::new();
            for e in 0..d {
                for gm in &self.gamma {
                    comps.push(gm.derivative(&unit_multi_index(d, &[e]))?);
                }
            }
            dgamma = Some(t(gamma_slots.clone(), 0, comps)?);
        }
        if self.gamma[0].order() >= 2 {
            let mut comps = Vec::new();
            for e in 0..d {
                for f in 0..d {
                    for gm in &self.gamma {
                        comps.push(gm.derivative(&unit_multi_index(d, &[e, f]))?);
                    }
                }
            }
            let mut slots = gamma_slots.clone();
            slots.insert(0, Slot::Lower);
            ddgamma = Some(t(slots, 0, comps)?);
        }
        Ok(CurvaturePacket {
            point: point.to_vec(),
            g: t(lower(2), 2, values(&self.g))?,
            ginv: t(vec![Slot::Upper; 2], -2, values(&self.ginv))?,
            gamma,
            dgamma,
            ddgamma,
            riemann: t(lower(4), 2, values(self.riemann.as_ref().ok_or_else(truncated)?))?,
            ricci: t(lower(2), 0, values(self.ricci.as_ref().unwrap()))?,
            scalar: TensorValue::scalar(d, -2, self.scalar.as_ref().unwrap().value()),
            schouten: t(lower(2), 0, values(self.schouten.as_ref().ok_or_else(dimension_error)?))?,
            j: TensorValue::scalar(d, -2, self.j.as_ref().unwrap().value()),
            weyl: t(lower(4), 2, values(self.weyl.as_ref().unwrap()))?,
            cotton: self
                .cotton
                .as_ref()
                .map(|c| t(lower(3), 0, values(c)))
                .transpose()?,
            bach: self
                .bach
                .as_ref()
                .map(|b| t(lower(2), -2, values(b)))
                .transpose()?,
        })
    }
}

/// Multi-index with one count per listed variable.
pub fn unit_multi_index(d: usize, vars: &[usize]) -> Vec<u8> {
    let mut alpha = vec![0u8; d];
    for &v in vars {
        alpha[v] += 1;
    }
    alpha
}

/// Full packet at `point` from metric jets of `order` (2, 3 or 4).
pub fn curvature_packet(chart: &MetricChart, point: &[f64], order: usize) -> Result<CurvaturePacket> {
    if chart.dim() < 3 {
        return Err(Error::Dimension(format!(
            "conformal curvature needs d ≥ 3, got {}",
            chart.dim()
        )));
    }
    fields_at(chart, point, order.max(2))?.packet(point)
}

/// Christoffel symbols and their coordinate derivatives up to `deriv_order`.
pub fn christoffel(chart: &MetricChart, point: &[f64], deriv_order: usize) -> Result<Vec<Jet>> {
    if deriv_order > 3 {
        return Err(Error::Truncation {
            needed: deriv_order + 1,
            available: crate::jet::MAX_ORDER,
        });
    }
    Ok(fields_at(chart, point, deriv_order + 1)?.gamma)
}

/// Riemann through Schouten at a point (metric jets of order 2).
pub fn riemann(chart: &MetricChart, point: &[f64]) -> Result<CurvaturePacket> {
    curvature_packet(chart, point, 2)
}

/// Riemann, Ricci and scalar curvature, valid in every dimension ≥ 2.
#[derive(Debug, Clone, Serialize)]
pub struct RiemannData {
    pub riemann: TensorValue,
    pub ricci: TensorValue,
    pub scalar: f64,
}

pub fn riemann_tensor(chart: &MetricChart, point: &[f64]) -> Result<RiemannData> {
    let d = chart.dim();
    if d < 2 {
        return Err(Error::Dimension("curvature needs d ≥ 2".into()));
    }
    let f = fields_at(chart, point, 2)?;
    Ok(RiemannData {
        riemann: Tensor::from_components(d, lower(4), 2, values(f.riemann.as_ref().unwrap()))?,
        ricci: Tensor::from_components(d, lower(2), 0, values(f.ricci.as_ref().unwrap()))?,
        scalar: f.scalar.as_ref().unwrap().value(),
    })
}

/// Weyl tensor from the Riemann, Schouten and metric of a packet.
pub fn weyl(packet: &CurvaturePacket) -> TensorValue {
    let d = packet.g.dim;
    Tensor {
        dim: d,
        slots: lower(4),
        weight: 2,
        comps: weyl_from(d, &packet.g.comps, &packet.riemann.comps, &packet.schouten.comps),
    }
}

pub fn cotton(chart: &MetricChart, point: &[f64]) -> Result<TensorValue> {
    Ok(curvature_packet(chart, point, 3)?.cotton.expect("order 3 yields Cotton"))
}

pub fn bach(chart: &MetricChart, point: &[f64]) -> Result<TensorValue> {
    Ok(curvature_packet(chart, point, 4)?.bach.expect("order 4 yields Bach"))
}

/// Applies the Levi-Civita covariant derivative `times` times to a tensor
/// field given by its component jets (the field closure receives coordinate
/// jets). Densities are differentiated in the chart metric's trivialization.
pub fn covariant_derivative(
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
    if slots.iter().any(|s| s.is_tractor()) {
        return Err(Error::Argument("use the tractor connection for tractor slots".into()));
    }
    let d = chart.dim();
    let f = fields_at(chart, point, times)?;
    let conn = Connection {
        dim: d,
        gamma: &f.gamma,
        tractor: None,
    };
    let mut comps = field(&coordinate_jets(point, times)?)?;
    let mut current = slots.to_vec();
    for _ in 0..times {
        comps = conn.covariant_derivative(&comps, &current)?;
        current.insert(0, Slot::Lower);
    }
    Tensor::from_components(d, current, weight, values(&comps))
}

/// Residual norms (max abs component) of the Bianchi-derived identities.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BianchiResiduals {
    /// `∇_[a C_bc]de − (g_d[a A_|e|bc] − g_e[a A_|d|bc])`
    pub weyl_bianchi: f64,
    /// `(d−3) A_abc − ∇^e C_eabc`
    pub weyl_divergence: f64,
    /// `∇^a P_ab − ∇_b J`
    pub schouten_divergence: f64,
    /// `∇^a A_abc`
    pub cotton_divergence: f64,
}

impl BianchiResiduals {
    pub fn max(&self) -> f64 {
        self.weyl_bianchi
            .max(self.weyl_divergence)
            .max(self.schouten_divergence)
            .max(self.cotton_divergence)
    }
}

pub fn bianchi_residuals(chart: &MetricChart, point: &[f64]) -> Result<BianchiResiduals> {
    let d = chart.dim();
    if d < 3 {
        return Err(Error::Dimension(format!("needs d ≥ 3, got {d}")));
    }
    let f = fields_at(chart, point, 4)?;
    let conn = Connection {
        dim: d,
        gamma: &f.gamma,
        tractor: None,
    };
    let weyl = f.weyl.as_ref().unwrap();
    let cotton = f.cotton.as_ref().unwrap();
    let p = f.schouten.as_ref().unwrap();
    let g = values(&f.g);
    let ginv = values(&f.ginv);
    let dc = values(&conn.covariant_derivative(weyl, &lower(4))?);
    let dp = values(&conn.covariant_derivative(p, &lower(2))?);
    let da = values(&conn.covariant_derivative(cotton, &lower(3))?);
    let a = values(cotton);
    let dj: Vec<f64> = (0..d)
        .map(|b| f.j.as_ref().unwrap().derivative(&unit_multi_index(d, &[b])))
        .collect::<Result<_>>()?;
    let i5 = |a1: usize, a2: usize, a3: usize, c: usize, e: usize| (((a1 * d + a2) * d + a3) * d + c) * d + e;

    let mut wb = 0.0f64;
    let perms: [([usize; 3], f64); 6] = [
        ([0, 1, 2], 1.0),
        ([1, 2, 0], 1.0),
        ([2, 0, 1], 1.0),
        ([1, 0, 2], -1.0),
        ([0, 2, 1], -1.0),
        ([2, 1, 0], -1.0),
    ];
    for a1 in 0..d {
        for a2 in 0..d {
            for a3 in 0..d {
                let idx = [a1, a2, a3];
                for c in 0..d {
                    for e in 0..d {
                        let mut r = 0.0;
                        for (p, sign) in &perms {
                            let (x, y, z) = (idx[p[0]], idx[p[1]], idx[p[2]]);
                            let term = dc[i5(x, y, z, c, e)] - g[c * d + x] * a[idx3(d, e, y, z)]
                                + g[e * d + x] * a[idx3(d, c, y, z)];
                            r += sign * term;
                        }
                        wb = wb.max((r / 6.0).abs());
                    }
                }
            }
        }
    }

    let mut wd = 0.0f64;
    let mut cd = 0.0f64;
    for x in 0..d {
        for y in 0..d {
            for z in 0..d {
                let mut div_c = 0.0;
                for e in 0..d {
                    for f2 in 0..d {
                        div_c += ginv[e * d + f2] * dc[i5(f2, e, x, y, z)];
                    }
                }
                wd = wd.max(((d as f64 - 3.0) * a[idx3(d, x, y, z)] - div_c).abs());
            }
        }
    }
    for x in 0..d {
        for y in 0..d {
            let mut div_a = 0.0;
            for e in 0..d {
                for f2 in 0..d {
                    div_a += ginv[e * d + f2] * da[idx4(d, f2, e, x, y)];
                }
            }
            cd = cd.max(div_a.abs());
        }
    }
    let mut sd = 0.0f64;
    for b in 0..d {
        let mut div_p = 0.0;
        for e in 0..d {
            for f2 in 0..d {
                div_p += ginv[e * d + f2] * dp[idx3(d, f2, e, b)];
            }
        }
        sd = sd.max((div_p - dj[b]).abs());
    }
    Ok(BianchiResiduals {
        weyl_bianchi: wb,
        weyl_divergence: wd,
        schouten_divergence: sd,
        cotton_divergence: cd,
    })
}
