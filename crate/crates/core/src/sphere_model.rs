//! The flat ambient model of the conformal sphere: the null cone in
//! `ℝ^{d+1,1}`, metrics from hyperplane sections, and the almost Einstein
//! structures cut out by constant ambient vectors.
//!
//! Ambient coordinates are `(X⁰, X¹, x)` with `ℋ = diag(−1, 1, …, 1)`. The
//! flat chart of the sphere is the section
//! `X_flat(x) = ((1 + |x|²)/2, (1 − |x|²)/2, x)`, so that
//! `ℋ(I, X_flat(x)) = a + b·x + c|x|²` with `a = (I¹ − I⁰)/2`, `b = (I²…)`,
//! `c = −(I⁰ + I¹)/2`.

use serde::Serialize;

use crate::almost_einstein::{parallel_residual, AEStructure};
use crate::curvature::curvature_packet;
use crate::error::{Error, Result};
use crate::jet::{Jet, Scalar};
use crate::metric::{ambient_quadric, coordinate_jets, MetricChart, ScalarField};
use crate::tractor::{self, TractorValue};

/// `ℝ^{d+2}` with the Lorentzian form `ℋ = diag(−1, 1, …, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AmbientFlatSpace {
    pub dim: usize,
}

impl AmbientFlatSpace {
    pub fn new(dim: usize) -> Self {
        AmbientFlatSpace { dim }
    }

    pub fn form<S: Scalar>(&self, u: &[S], v: &[S]) -> S {
        let mut acc = u[0].times(&v[0]).negate();
        for k in 1..u.len() {
            acc.accumulate(&u[k], &v[k]);
        }
        acc
    }

    /// Diagonal of `ℋ` in the fixed basis.
    pub fn signature(&self) -> Vec<f64> {
        let mut s = vec![1.0; self.dim + 2];
        s[0] = -1.0;
        s
    }

    /// `X_flat(x)`, a point of the forward null cone.
    pub fn flat_section<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let mut r2 = x[0].zero_like();
        for xi in x {
            r2.accumulate(xi, xi);
        }
        let mut out = vec![r2.add_const(1.0).scale(0.5), r2.negate().add_const(1.0).scale(0.5)];
        out.extend(x.iter().cloned());
        out
    }

    pub fn on_cone(&self, x: &[f64]) -> bool {
        self.form(x, x).abs() < 1e-12 && x[0] > 0.0
    }

    /// Matrix taking fixed-basis components to the null pair
    /// `(X₊, X₋, x)`, `X± = (X⁰ ± X¹)/√2`, in which `ℋ = −2X₊X₋ + |x|²`.
    pub fn null_pair_basis(&self) -> Vec<f64> {
        let n = self.dim + 2;
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut m = vec![0.0; n * n];
        m[0] = r;
        m[1] = r;
        m[n] = r;
        m[n + 1] = -r;
        for k in 2..n {
            m[k * n + k] = 1.0;
        }
        m
    }
}

fn check_vector(i: &[f64]) -> Result<usize> {
    if i.len() < 5 {
        return Err(Error::Argument(format!(
            "ambient vector needs d + 2 ≥ 5 components, got {}",
            i.len()
        )));
    }
    if i.iter().all(|v| *v == 0.0) {
        return Err(Error::Argument("ambient vector is zero".into()));
    }
    Ok(i.len() - 2)
}

/// Ambient vector whose flat-chart density is `a + b·x + c|x|²`.
pub fn ambient_vector(a: f64, b: &[f64], c: f64) -> Vec<f64> {
    let mut v = vec![-a - c, a - c];
    v.extend_from_slice(b);
    v
}

/// The density `ℋ(I, X_flat(x))` as a field on the flat chart.
pub fn flat_density(i: &[f64]) -> ScalarField {
    let (a, b, c) = ambient_quadric(i);
    ScalarField::quadric(a, b, c)
}

/// The metric of the section `{ℋ(I, X) = 1} ∩ 𝒩₊`, written over the flat
/// chart (defined where `ℋ(I, X_flat) > 0`).
pub fn cap_chart(i: &[f64]) -> Result<MetricChart> {
    check_vector(i)?;
    let h = AmbientFlatSpace::new(i.len() - 2);
    // the hyperplane misses 𝒩₊ exactly when I lies in the closed future cone
    if h.form(i, i) <= 0.0 && i[0] > 0.0 {
        return Err(Error::Argument(
            "the hyperplane ℋ(I, X) = 1 does not meet the forward null cone".into(),
        ));
    }
    Ok(MetricChart::CapChart { ambient: i.to_vec() })
}

/// The density `f = ℋ(J, X_flat)` with chart metric `f⁻² δ`, or `None` for
/// the flat chart itself.
fn chart_density(base: &MetricChart) -> Result<Option<ScalarField>> {
    match base {
        MetricChart::Euclidean { .. } => Ok(None),
        MetricChart::CapChart { ambient } => Ok(Some(flat_density(ambient))),
        MetricChart::RoundSphereStereo { radius, .. } => {
            // 4r²(1+|x|²)⁻² δ = (ℋ(J, X_flat))⁻² δ with J = −e₀/r
            Ok(Some(ScalarField::quadric(0.5 / radius, vec![0.0; base.dim()], 0.5 / radius)))
        }
        _ => Err(Error::UnsupportedModel(format!(
            "{} is not a section of the flat null cone",
            base.label()
        ))),
    }
}

/// The almost Einstein structure `σ = ℋ(I, X)` trivialized by `base`, which
/// must be a section of the null cone (flat, round or cap chart).
pub fn model_ae(i: &[f64], base: &MetricChart) -> Result<AEStructure> {
    let d = check_vector(i)?;
    if base.dim() != d {
        return Err(Error::Argument(format!(
            "ambient vector has dimension {d}, chart has {}",
            base.dim()
        )));
    }
    let flat = flat_density(i);
    let sigma = match chart_density(base)? {
        None => flat,
        Some(f) => flat.times(f.pow(-1.0)),
    };
    Ok(AEStructure::new(base.clone(), sigma))
}

/// `I_t = sin t · I₁ + cos t · I₂`.
pub fn interpolate(i1: &[f64], i2: &[f64], t: f64, base: &MetricChart) -> Result<AEStructure> {
    check_independent(i1, i2)?;
    let it: Vec<f64> = i1.iter().zip(i2).map(|(a, b)| t.sin() * a + t.cos() * b).collect();
    model_ae(&it, base)
}

fn check_independent(i1: &[f64], i2: &[f64]) -> Result<()> {
    check_vector(i1)?;
    check_vector(i2)?;
    if i1.len() != i2.len() {
        return Err(Error::Argument("ambient vectors of different dimension".into()));
    }
    let dot: f64 = i1.iter().zip(i2).map(|(a, b)| a * b).sum();
    let n1: f64 = i1.iter().map(|a| a * a).sum();
    let n2: f64 = i2.iter().map(|a| a * a).sum();
    if (n1 * n2 - dot * dot).abs() <= 1e-12 * n1 * n2 {
        return Err(Error::Argument("ambient vectors are linearly dependent".into()));
    }
    Ok(())
}

/// Orthogonal unit pair: `I₁` spacelike (the flat density `½ − ½|x|²`) and
/// `I₂` timelike (`½ + ½|x|²`), so that `|I_t|² = −cos 2t`.
pub fn standard_pair(d: usize) -> (Vec<f64>, Vec<f64>) {
    let zero = vec![0.0; d];
    (ambient_vector(0.5, &zero, -0.5), ambient_vector(0.5, &zero, 0.5))
}

/// The `t ∈ [0, π)` with `σ_t(p) = 0`, from `tan t = −σ₂(p)/σ₁(p)`.
pub fn interpolation_root(i1: &[f64], i2: &[f64], p: &[f64]) -> Result<f64> {
    check_independent(i1, i2)?;
    let s1 = flat_density(i1).value_at(p)?;
    let s2 = flat_density(i2).value_at(p)?;
    let t = (-s2).atan2(s1).rem_euclid(std::f64::consts::PI);
    Ok(t)
}

/// The metric of the section `s = X_flat / ℋ(I, X_flat)`, computed as the
/// pullback of `ℋ` along lifted tangent vectors `∂_i s + λ_i s`. Any `λ`
/// gives the same metric since `s` is null and orthogonal to the cone's
/// tangent space.
pub fn section_metric(i: &[f64], x: &[f64], lift_shift: &[f64]) -> Result<Vec<f64>> {
    let d = check_vector(i)?;
    let amb = AmbientFlatSpace::new(d);
    let xs = coordinate_jets(x, 1)?;
    let flat = amb.flat_section(&xs);
    let f = amb.form(&i.iter().map(|v| xs[0].constant_like(*v)).collect::<Vec<_>>(), &flat);
    if f.value() <= 0.0 {
        return Err(Error::Domain("point outside the cap ℋ(I, X) > 0".into()));
    }
    let inv = f.recip()?;
    let s: Vec<Jet> = flat.iter().map(|c| c.times(&inv)).collect();
    let lifts: Vec<Vec<f64>> = (0..d)
        .map(|k| {
            s.iter()
                .map(|c| Ok(c.partial(k)?.value() + lift_shift[k] * c.value()))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut g = vec![0.0; d * d];
    for a in 0..d {
        for b in 0..d {
            g[a * d + b] = amb.form(&lifts[a], &lifts[b]);
        }
    }
    Ok(g)
}

/// `max |R_abce − K (g_ac g_be − g_bc g_ae)|`.
pub fn constant_curvature_residual(chart: &MetricChart, point: &[f64], k: f64) -> Result<f64> {
    let p = curvature_packet(chart, point, 2)?;
    let d = chart.dim();
    let g = |a: usize, b: usize| *p.g.get(&[a, b]);
    let mut worst = 0.0f64;
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                for e in 0..d {
                    let model = k * (g(a, c) * g(b, e) - g(b, c) * g(a, e));
                    worst = worst.max((p.riemann.get(&[a, b, c, e]) - model).abs());
                }
            }
        }
    }
    Ok(worst)
}

/// Euler homogeneity on the cone: `X·∂ ℋ(I, X) = ℋ(I, X)`,
/// `X·∂ ℋ(X, X) = 2ℋ(X, X)` and `ℒ_X ℋ = 2ℋ` at an ambient point.
pub fn homogeneity_residual(i: &[f64], x: &[f64]) -> Result<f64> {
    let d = check_vector(i)?;
    let amb = AmbientFlatSpace::new(d);
    let n = d + 2;
    let xs = coordinate_jets(x, 1)?;
    let ij: Vec<Jet> = i.iter().map(|v| xs[0].constant_like(*v)).collect();
    let lin = amb.form(&ij, &xs);
    let quad = amb.form(&xs, &xs);
    let euler = |f: &Jet| -> Result<f64> {
        let mut acc = 0.0;
        for (a, xa) in x.iter().enumerate() {
            acc += xa * f.partial(a)?.value();
        }
        Ok(acc)
    };
    let mut worst = (euler(&lin)? - lin.value()).abs().max((euler(&quad)? - 2.0 * quad.value()).abs());
    // ℒ_X ℋ_AB = X^C ∂_C ℋ_AB + ℋ_CB ∂_A X^C + ℋ_AC ∂_B X^C, with ∂_A X^C = δ
    let sig = amb.signature();
    for a in 0..n {
        for b in 0..n {
            let hab = if a == b { sig[a] } else { 0.0 };
            let dx = |p: usize, q: usize| xs[q].partial(p).map(|j| j.value());
            let mut lie = 0.0;
            for c in 0..n {
                let hcb = if c == b { sig[c] } else { 0.0 };
                let hac = if a == c { sig[a] } else { 0.0 };
                lie += hcb * dx(a, c)? + hac * dx(b, c)?;
            }
            worst = worst.max((lie - 2.0 * hab).abs());
        }
    }
    Ok(worst)
}

/// Results of the ambient ↔ tractor correspondence on a null-cone section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrespondenceReport {
    /// max `|∇^𝒯 I|` over vectors and points
    pub parallel: f64,
    /// max `|Ω|`
    pub curvature: f64,
    /// max `|h(I_a, I_b) − ℋ(I_a, I_b)|`
    pub metric: f64,
    /// max `|h(X, I) − σ|`
    pub x_pairing: f64,
}

impl CorrespondenceReport {
    pub fn max(&self) -> f64 {
        self.parallel.max(self.curvature).max(self.metric).max(self.x_pairing)
    }
}

/// Reconstructs the tractors `Dσ` of constant ambient vectors on `base` and
/// compares them with the ambient data at each point.
pub fn ambient_correspondence_check(
    vectors: &[Vec<f64>],
    base: &MetricChart,
    points: &[Vec<f64>],
) -> Result<CorrespondenceReport> {
    if vectors.is_empty() {
        return Err(Error::Argument("no ambient vectors".into()));
    }
    let d = base.dim();
    let amb = AmbientFlatSpace::new(d);
    let structures: Vec<AEStructure> = vectors.iter().map(|v| model_ae(v, base)).collect::<Result<_>>()?;
    let mut rep = CorrespondenceReport {
        parallel: 0.0,
        curvature: 0.0,
        metric: 0.0,
        x_pairing: 0.0,
    };
    for p in points {
        let ginv = base.inverse_metric(p)?;
        rep.curvature = rep.curvature.max(tractor::tractor_curvature(base, p)?.max_abs());
        let tr: Vec<TractorValue> = structures.iter().map(|s| s.scale_tractor(p)).collect::<Result<_>>()?;
        let x = TractorValue::new(base.label(), 0.0, vec![0.0; d], 1.0);
        for (k, s) in structures.iter().enumerate() {
            rep.parallel = rep.parallel.max(parallel_residual(s, p)?);
            let sv = s.sigma.value_at(p)?;
            rep.x_pairing = rep.x_pairing.max((tractor::tractor_metric(&x, &tr[k], &ginv)? - sv).abs());
            for l in k..structures.len() {
                let h = tractor::tractor_metric(&tr[k], &tr[l], &ginv)?;
                rep.metric = rep.metric.max((h - amb.form(&vectors[k], &vectors[l])).abs());
            }
        }
    }
    Ok(rep)
}

/// The `d + 2` structures of the coordinate basis vectors.
pub fn basis_structures(base: &MetricChart) -> Result<Vec<AEStructure>> {
    let n = base.dim() + 2;
    (0..n)
        .map(|k| {
            let mut v = vec![0.0; n];
            v[k] = 1.0;
            model_ae(&v, base)
        })
        .collect()
}

/// Jet-level comparison of two charts' metrics at a point (max over all
/// stored Taylor coefficients up to `order`).
pub fn metric_jet_difference(a: &MetricChart, b: &MetricChart, point: &[f64], order: usize) -> Result<f64> {
    let ja = a.metric_jets(point, order)?;
    let jb = b.metric_jets(point, order)?;
    let mut worst = 0.0f64;
    for (x, y) in ja.iter().zip(&jb) {
        for (u, v) in x.coefficients().iter().zip(y.coefficients()) {
            worst = worst.max((u - v).abs());
        }
    }
    Ok(worst)
}
