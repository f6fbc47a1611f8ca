//! Almost Einstein structures: a scale density `σ` whose tractor `I = Dσ`
//! is parallel. Residual functionals, classification by the sign of `|I|²`,
//! and the integrability consequences checked pointwise.

use serde::Serialize;

use crate::curvature::{self, curvature_fields, curvature_packet, values, Connection, CurvatureFields};
use crate::error::{Error, Result};
use crate::jet::{Jet, Scalar};
use crate::metric::{conformal_rescale, MetricChart, ScalarField};
use crate::tensor::{Slot, Tensor, TensorValue};
use crate::tractor::{self, tractor_metric_matrix, TractorGeometry, TractorValue};

/// Parallel-residual threshold below which a structure counts as almost
/// Einstein.
pub const PARALLEL_TOLERANCE: f64 = 1e-8;
/// `|σ|` below which the Einstein rescaling is refused.
pub const SINGULARITY_GUARD: f64 = 1e-3;
/// `|I|²` within this of zero counts as null.
pub const NULL_TOLERANCE: f64 = 1e-10;

/// A chart together with a candidate scale density, trivialized by the
/// chart metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AEStructure {
    pub chart: MetricChart,
    pub sigma: ScalarField,
}

impl AEStructure {
    pub fn new(chart: MetricChart, sigma: ScalarField) -> Self {
        AEStructure { chart, sigma }
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    /// `α·self + β·other` on the same chart.
    pub fn combine(&self, alpha: f64, other: &AEStructure, beta: f64) -> Result<AEStructure> {
        if self.chart != other.chart {
            return Err(Error::Argument("structures live on different charts".into()));
        }
        Ok(AEStructure::new(
            self.chart.clone(),
            self.sigma.clone().scaled(alpha).plus(other.sigma.clone().scaled(beta)),
        ))
    }

    /// `I = Dσ` at a point.
    pub fn scale_tractor(&self, point: &[f64]) -> Result<TractorValue> {
        tractor::splitting_operator(&self.chart, point, &self.sigma)
    }

    /// `|I|² = h(I, I)` at a point.
    pub fn i_squared(&self, point: &[f64]) -> Result<f64> {
        let i = self.scale_tractor(point)?;
        let ginv = self.chart.inverse_metric(point)?;
        tractor::tractor_metric(&i, &i, &ginv)
    }
}

/// `σ + b·x + c|x|²` with `σ(0) = a` on flat space of dimension `b.len()`.
pub fn quadric_ae(a: f64, b: Vec<f64>, c: f64) -> Result<AEStructure> {
    if a == 0.0 && c == 0.0 && b.iter().all(|v| *v == 0.0) {
        return Err(Error::Argument("quadric parameters are all zero".into()));
    }
    if b.is_empty() {
        return Err(Error::Argument("quadric needs a dimension (b must be nonempty)".into()));
    }
    let d = b.len();
    Ok(AEStructure::new(MetricChart::euclidean(d), ScalarField::quadric(a, b, c)))
}

/// Trace-free part of `∇∇s + sP`, weight 1.
pub fn ae_residual(chart: &MetricChart, s: &ScalarField, point: &[f64]) -> Result<TensorValue> {
    let p = curvature_packet(chart, point, 2)?;
    let hess = curvature::covariant_derivative(chart, point, &[], 1, 2, |x| Ok(vec![s.eval(x)?]))?;
    let sv = s.value_at(point)?;
    // σP carries the weight of σ
    let mut sp = p.schouten.scale(sv);
    sp.weight = hess.weight;
    hess.add(&sp)?.trace_free_part(&p.g, &p.ginv)
}

/// `S(g, s) = (2/d) s (J − Δ) s − |ds|²`.
pub fn asc_scalar(chart: &MetricChart, s: &ScalarField, point: &[f64]) -> Result<f64> {
    let d = chart.dim();
    let p = curvature_packet(chart, point, 2)?;
    let hess = curvature::covariant_derivative(chart, point, &[], 1, 2, |x| Ok(vec![s.eval(x)?]))?;
    let jet: Jet = s.jet_at(point, 1)?;
    let grad: Vec<f64> = (0..d)
        .map(|a| jet.derivative(&curvature::unit_multi_index(d, &[a])))
        .collect::<Result<_>>()?;
    let sv = s.value_at(point)?;
    let mut trace = 0.0;
    let mut norm = 0.0;
    for a in 0..d {
        for b in 0..d {
            let gi = p.ginv.get(&[a, b]);
            trace += gi * hess.get(&[a, b]);
            norm += gi * grad[a] * grad[b];
        }
    }
    // (J − Δ)s = Js + ∇^a∇_a s
    Ok(2.0 / d as f64 * sv * (p.j.comps[0] * sv + trace) - norm)
}

/// Raw jets of `Dσ` from curvature fields and the jet of `σ`.
pub(crate) fn scale_tractor_jets<T: Scalar>(f: &CurvatureFields<T>, sigma: &Jet<T>) -> Result<Vec<Jet<T>>> {
    let d = f.dim;
    let conn = Connection {
        dim: d,
        gamma: &f.gamma,
        tractor: None,
    };
    let ds = conn.covariant_derivative(std::slice::from_ref(sigma), &[])?;
    let dds = conn.covariant_derivative(&ds, &[Slot::Lower])?;
    let j = f.j.as_ref().ok_or(Error::Truncation {
        needed: 2,
        available: f.g[0].order(),
    })?;
    let mut lap = dds[0].zero_like();
    for a in 0..d {
        for b in 0..d {
            lap.accumulate(&f.ginv[a * d + b], &dds[a * d + b]);
        }
    }
    // (1/d)(Δσ − Jσ) with Δ = −∇^a∇_a
    let rho = lap.negate().minus(&j.times(sigma)).scale(1.0 / d as f64);
    let mut out = vec![sigma.clone()];
    out.extend(ds);
    out.push(rho);
    Ok(out)
}

/// Max component of `∇^𝒯(Dσ)` at a point.
pub fn parallel_residual(ae: &AEStructure, point: &[f64]) -> Result<f64> {
    let d = ae.dim();
    if d < 3 {
        return Err(Error::Dimension(format!("tractors need d ≥ 3, got {d}")));
    }
    Ok(scale_tractor_derivative(&ae.chart, &ae.sigma, point)?.max_abs())
}

/// `∇_a (Dσ)^B` for an arbitrary weight-1 scale, laid out `[a][B]` (raw).
pub fn scale_tractor_derivative(chart: &MetricChart, sigma: &ScalarField, point: &[f64]) -> Result<TensorValue> {
    let d = chart.dim();
    if d < 3 {
        return Err(Error::Dimension(format!("tractors need d ≥ 3, got {d}")));
    }
    let geom = TractorGeometry::new(curvature_fields(chart.metric_jets(point, 3)?, d)?)?;
    let sigma: Jet = sigma.jet_at(point, 3)?;
    let i = scale_tractor_jets(&geom.fields, &sigma)?;
    let nabla = geom.derivative(&i, &[Slot::TractorUpper])?;
    Tensor::from_components(d, vec![Slot::Lower, Slot::TractorUpper], 0, values(&nabla))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarType {
    /// `|I|² < 0`: `Σ` is empty.
    ScalarPositive,
    /// `|I|² = 0`: `Σ` is empty or isolated points.
    ScalarFlat,
    /// `|I|² > 0`: `Σ` is empty or a totally umbilic hypersurface.
    ScalarNegative,
}

/// Zero set of a quadric scale on flat space.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Locus {
    Empty,
    /// Only the point at infinity of the conformal sphere.
    AtInfinity,
    Point { center: Vec<f64> },
    Sphere { center: Vec<f64>, radius: f64 },
    /// `offset + normal·x = 0`
    Hyperplane { normal: Vec<f64>, offset: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub kind: ScalarType,
    pub i_squared: f64,
    pub parallel_residual: f64,
    /// Present for quadric scales on flat space.
    pub locus: Option<Locus>,
}

pub fn quadric_locus(a: f64, b: &[f64], c: f64) -> Locus {
    let disc: f64 = b.iter().map(|v| v * v).sum::<f64>() - 4.0 * a * c;
    if c == 0.0 {
        if b.iter().all(|v| *v == 0.0) {
            return Locus::AtInfinity;
        }
        return Locus::Hyperplane {
            normal: b.to_vec(),
            offset: a,
        };
    }
    let center: Vec<f64> = b.iter().map(|v| -v / (2.0 * c)).collect();
    if disc.abs() <= NULL_TOLERANCE {
        Locus::Point { center }
    } else if disc < 0.0 {
        Locus::Empty
    } else {
        Locus::Sphere {
            center,
            radius: disc.sqrt() / (2.0 * c.abs()),
        }
    }
}

/// Classifies by the sign of `|I|²` at `point`, after checking parallelism.
pub fn classify(ae: &AEStructure, point: &[f64]) -> Result<Classification> {
    let residual = parallel_residual(ae, point)?;
    if residual > PARALLEL_TOLERANCE {
        return Err(Error::NotAlmostEinstein(residual));
    }
    let i2 = ae.i_squared(point)?;
    let kind = if i2.abs() <= NULL_TOLERANCE {
        ScalarType::ScalarFlat
    } else if i2 < 0.0 {
        ScalarType::ScalarPositive
    } else {
        ScalarType::ScalarNegative
    };
    let locus = match (&ae.chart, &ae.sigma) {
        (MetricChart::Euclidean { .. }, ScalarField::Quadric { a, b, c }) => Some(quadric_locus(*a, b, *c)),
        _ => None,
    };
    Ok(Classification {
        kind,
        i_squared: i2,
        parallel_residual: residual,
        locus,
    })
}

/// The Einstein representative `ḡ = σ^{-2} g` as a chart (valid off `Σ`).
pub fn einstein_chart(ae: &AEStructure) -> MetricChart {
    // ω = −½ ln σ², so that e^{2ω} = σ^{-2} for either sign of σ
    let omega = ae.sigma.clone().times(ae.sigma.clone()).log().scaled(-0.5);
    conformal_rescale(&ae.chart, omega)
}

/// `|Ric^ḡ + (d−1)|I|² ḡ|_ḡ` at a point off the singularity set.
pub fn einstein_residual(ae: &AEStructure, point: &[f64]) -> Result<f64> {
    let s = ae.sigma.value_at(point)?;
    if s.abs() < SINGULARITY_GUARD {
        return Err(Error::SingularityProximity(s.abs()));
    }
    let d = ae.dim();
    let i2 = ae.i_squared(point)?;
    let bar = einstein_chart(ae);
    let ric = curvature::riemann_tensor(&bar, point)?.ricci;
    let gb = bar.metric_at(point)?;
    let gbi = gb.inverse_metric()?;
    let mut lambda_g = gb.scale((d as f64 - 1.0) * i2);
    lambda_g.weight = ric.weight;
    let e = ric.add(&lambda_g)?;
    Ok(norm2(d, &gbi.comps, &e.comps).sqrt())
}

fn norm2(d: usize, ginv: &[f64], e: &[f64]) -> f64 {
    let mut acc = 0.0;
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                for f in 0..d {
                    acc += ginv[a * d + c] * ginv[b * d + f] * e[a * d + b] * e[c * d + f];
                }
            }
        }
    }
    acc
}

/// Residuals of the integrability identities satisfied by every almost
/// Einstein structure, with `n_a = ∇_a σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AESumResiduals {
    /// `σ A_cab + n^d C_abcd`
    pub weyl_cotton: f64,
    /// `n^c A_cab`
    pub normal_cotton: f64,
    /// `σ B_ac + (d−4) n^e A_cae`
    pub bach_cotton: f64,
    /// `n^a B_ab`
    pub normal_bach: f64,
}

impl AESumResiduals {
    pub fn max(&self) -> f64 {
        self.weyl_cotton
            .max(self.normal_cotton)
            .max(self.bach_cotton)
            .max(self.normal_bach)
    }
}

pub fn aesum_residuals(ae: &AEStructure, point: &[f64]) -> Result<AESumResiduals> {
    let d = ae.dim();
    let p = curvature_packet(&ae.chart, point, 4)?;
    let c = &p.weyl.comps;
    let a = &p.cotton.as_ref().expect("order 4").comps;
    let b = &p.bach.as_ref().expect("order 4").comps;
    let sj: Jet = ae.sigma.jet_at(point, 1)?;
    let s = sj.value();
    let nl: Vec<f64> = (0..d)
        .map(|i| sj.derivative(&curvature::unit_multi_index(d, &[i])))
        .collect::<Result<_>>()?;
    let nu: Vec<f64> = (0..d)
        .map(|i| (0..d).map(|j| p.ginv.get(&[i, j]) * nl[j]).sum())
        .collect();
    let i3 = |x: usize, y: usize, z: usize| (x * d + y) * d + z;
    let i4 = |x: usize, y: usize, z: usize, w: usize| ((x * d + y) * d + z) * d + w;
    let k = d as f64 - 4.0;
    let mut r = AESumResiduals {
        weyl_cotton: 0.0,
        normal_cotton: 0.0,
        bach_cotton: 0.0,
        normal_bach: 0.0,
    };
    for x in 0..d {
        for y in 0..d {
            for z in 0..d {
                let nc: f64 = (0..d).map(|w| nu[w] * c[i4(x, y, z, w)]).sum();
                r.weyl_cotton = r.weyl_cotton.max((s * a[i3(z, x, y)] + nc).abs());
                let na: f64 = (0..d).map(|w| nu[w] * a[i3(w, x, y)]).sum();
                r.normal_cotton = r.normal_cotton.max(na.abs());
            }
            let na: f64 = (0..d).map(|e| nu[e] * a[i3(y, x, e)]).sum();
            r.bach_cotton = r.bach_cotton.max((s * b[x * d + y] + k * na).abs());
            let nb: f64 = (0..d).map(|w| nu[w] * b[w * d + y]).sum();
            r.normal_bach = r.normal_bach.max(nb.abs());
        }
    }
    Ok(r)
}

/// Residuals of the `W` identities for an almost Einstein structure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtResiduals {
    /// `I^A 𝔻̃_A W_BCEF`
    pub ext: f64,
    /// `W_BCEF I^F` and `I^B W_BCEF`
    pub w_i: f64,
    /// `X^A W_ABCE`
    pub w_x: f64,
    /// Scale of `□̃W`, to show the identity is not vacuous.
    pub box_w: f64,
}

pub fn ext_residual(ae: &AEStructure, point: &[f64]) -> Result<ExtResiduals> {
    let d = ae.dim();
    if d < 5 {
        return Err(Error::Dimension(format!(
            "the W-tractor operator identity needs d ≥ 5 (d = 4 is the Yang–Mills case), got {d}"
        )));
    }
    let wj = tractor::w_jet(&ae.chart, point)?;
    let i = ae.scale_tractor(point)?.raw();
    let mut x = vec![0.0; d + 2];
    x[d + 1] = 1.0;
    let abs_max = |v: &[f64]| v.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    Ok(ExtResiduals {
        ext: abs_max(&wj.contract_d_tilde(&i)?),
        w_i: wj.contraction_with(&i),
        w_x: wj.contraction_with(&x),
        box_w: abs_max(&wj.box_tilde()?),
    })
}

/// `h(I, I)` with `I` given raw and `ginv` the chart's inverse metric.
pub fn raw_norm(i: &[f64], ginv: &[f64]) -> f64 {
    let d = i.len() - 2;
    let h = tractor_metric_matrix(d, ginv);
    let n = d + 2;
    let mut acc = 0.0;
    for a in 0..n {
        for b in 0..n {
            acc += h[a * n + b] * i[a] * i[b];
        }
    }
    acc
}

/// The raw `Dσ` as a tensor with a single upper tractor slot.
pub fn scale_tractor_tensor(ae: &AEStructure, point: &[f64]) -> Result<TensorValue> {
    let t = ae.scale_tractor(point)?;
    Tensor::from_components(ae.dim(), vec![Slot::TractorUpper], 0, t.raw())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_zero_quadric_is_rejected() {
        assert!(matches!(quadric_ae(0.0, vec![0.0; 3], 0.0), Err(Error::Argument(_))));
    }

    #[test]
    fn loci() {
        assert_eq!(quadric_locus(0.5, &[0.0; 3], 0.5), Locus::Empty);
        assert_eq!(quadric_locus(0.0, &[0.0; 3], 1.0), Locus::Point { center: vec![0.0; 3] });
        match quadric_locus(0.5, &[0.0; 3], -0.5) {
            Locus::Sphere { radius, .. } => assert!((radius - 1.0).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
        assert!(matches!(quadric_locus(1.0, &[0.0, 2.0, 0.0], 0.0), Locus::Hyperplane { .. }));
    }

    #[test]
    fn quadric_norm_is_discriminant() {
        let ae = quadric_ae(0.3, vec![0.2, -0.1, 0.4], -0.7).unwrap();
        let i2 = ae.i_squared(&[0.1, 0.5, -0.2]).unwrap();
        assert!((i2 - (0.04 + 0.01 + 0.16 + 4.0 * 0.3 * 0.7)).abs() < 1e-13);
    }
}
