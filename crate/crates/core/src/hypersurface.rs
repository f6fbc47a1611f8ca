//! Level-set hypersurfaces: unit conormal, mean curvature, second
//! fundamental form, the normal tractor, the minimal scale, and the
//! identification of `N^⊥` with the intrinsic tractor bundle.

use serde::Serialize;

use crate::curvature::{curvature_fields, values};
use crate::error::{Error, Result};
use crate::jet::{Jet, Scalar};
use crate::metric::{conformal_rescale, coordinate_jets, MetricChart, ScalarField};
use crate::tensor::Slot;
use crate::tractor::{self, TractorGeometry, TractorValue};
use crate::almost_einstein::AEStructure;

/// `|φ(p)|` below this counts as lying on the surface.
pub const LOCATOR_TOLERANCE: f64 = 1e-10;
/// Minimum `|dφ|_g` for a regular level set.
pub const DEGENERACY_GUARD: f64 = 1e-8;
/// Maximum `|h(N, t)|` accepted by [`restrict_tractor`].
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-9;

/// `Σ = {φ = 0}` in a chart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSetHypersurface {
    pub chart: MetricChart,
    pub phi: ScalarField,
}

/// How the unit conormal is continued off `Σ` before differentiating.
#[derive(Debug, Clone, PartialEq)]
pub enum NormalExtension {
    /// `n = dφ / |dφ|` everywhere.
    Normalized,
    /// `n = dφ / |dφ| + φ w` for a constant covector `w`; unit only on `Σ`.
    Perturbed(Vec<f64>),
}

/// Unit conormal data at a point, generic over the scalar so the same code
/// yields values, jets in the chart coordinates, or jets along an embedding.
#[derive(Debug, Clone)]
pub struct NormalGeometry<T: Scalar = f64> {
    pub dim: usize,
    /// `n_a`
    pub n: Vec<T>,
    /// `n^a`
    pub n_up: Vec<T>,
    /// `∇_a n_b` at `[a][b]`
    pub dn: Vec<T>,
    pub h: T,
    /// `|dφ|_g`
    pub grad_norm: T,
    pub phi: T,
    pub ginv: Vec<T>,
}

fn extension_jets<T: Scalar>(
    chart: &MetricChart,
    phi: &ScalarField,
    x: &[T],
    ext: &NormalExtension,
) -> Result<NormalGeometry<T>> {
    let d = chart.dim();
    if x.len() != d {
        return Err(Error::Argument(format!("point has {} coordinates, chart has {d}", x.len())));
    }
    let xj: Vec<Jet<T>> = (0..d)
        .map(|i| Jet::variable_with(d, 2, i, x[i].clone()))
        .collect::<Result<_>>()?;
    let f = phi.eval(&xj)?;
    let g: Vec<Jet<T>> = chart.metric(&xj)?.iter().map(|c| c.truncated(1)).collect();
    let fields = curvature_fields(g, d)?;
    let grad: Vec<Jet<T>> = (0..d).map(|a| f.partial(a)).collect::<Result<_>>()?;
    let mut norm2 = grad[0].zero_like();
    for a in 0..d {
        for b in 0..d {
            norm2.accumulate(&fields.ginv[a * d + b], &grad[a].times(&grad[b]));
        }
    }
    let gn = norm2.value().max(0.0).sqrt();
    if gn < DEGENERACY_GUARD {
        return Err(Error::DegenerateLevelSet(gn));
    }
    let norm = norm2.sqrt()?;
    let inv = norm.recip()?;
    let f1 = f.truncated(1);
    let n: Vec<Jet<T>> = grad
        .iter()
        .enumerate()
        .map(|(a, ga)| {
            let mut v = ga.times(&inv);
            if let NormalExtension::Perturbed(w) = ext {
                v.add_assign_ref(&f1.scale(w[a]));
            }
            v
        })
        .collect();
    let c = |j: &Jet<T>| j.constant_term().clone();
    let ginv: Vec<T> = fields.ginv.iter().map(c).collect();
    let nv: Vec<T> = n.iter().map(c).collect();
    let mut dn = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            let mut v = n[b].partial(a)?.into_constant_term();
            for e in 0..d {
                v = v.minus(&fields.gamma[(e * d + a) * d + b].constant_term().times(&nv[e]));
            }
            dn.push(v);
        }
    }
    let zero = nv[0].zero_like();
    let n_up: Vec<T> = (0..d)
        .map(|a| {
            let mut acc = zero.clone();
            for b in 0..d {
                acc.accumulate(&ginv[a * d + b], &nv[b]);
            }
            acc
        })
        .collect();
    // (d−1)H = ∇^a n_a − n^a n^b ∇_a n_b
    let mut div = zero.clone();
    let mut nn = zero.clone();
    for a in 0..d {
        for b in 0..d {
            div.accumulate(&ginv[a * d + b], &dn[a * d + b]);
            nn.accumulate(&n_up[a].times(&n_up[b]), &dn[a * d + b]);
        }
    }
    let h = div.minus(&nn).scale(1.0 / (d as f64 - 1.0));
    Ok(NormalGeometry {
        dim: d,
        n: nv,
        n_up,
        dn,
        h,
        grad_norm: c(&norm),
        phi: c(&f),
        ginv,
    })
}

/// Orthonormal frame adapted to `Σ`: unit normal vector and `d−1` tangent
/// vectors.
#[derive(Debug, Clone, Serialize)]
pub struct Frame {
    pub normal: Vec<f64>,
    pub tangent: Vec<Vec<f64>>,
}

impl LevelSetHypersurface {
    pub fn new(chart: MetricChart, phi: ScalarField) -> Self {
        LevelSetHypersurface { chart, phi }
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    /// Checks that `p` lies on `Σ`.
    pub fn locate(&self, p: &[f64]) -> Result<()> {
        let v = self.phi.value_at(p)?;
        if v.abs() > LOCATOR_TOLERANCE {
            return Err(Error::NotOnSurface(v.abs()));
        }
        Ok(())
    }

    /// Newton iteration along the coordinate gradient onto `Σ`.
    pub fn project(&self, p: &[f64]) -> Result<Vec<f64>> {
        let d = self.dim();
        let mut x = p.to_vec();
        for _ in 0..60 {
            let jet: Jet = self.phi.jet_at(&x, 1)?;
            let v = jet.value();
            if v.abs() < 1e-14 {
                break;
            }
            let grad: Vec<f64> = (0..d).map(|a| jet.partial(a).map(|j| j.value())).collect::<Result<_>>()?;
            let g2: f64 = grad.iter().map(|g| g * g).sum();
            if g2.sqrt() < DEGENERACY_GUARD {
                return Err(Error::DegenerateLevelSet(g2.sqrt()));
            }
            for (xi, gi) in x.iter_mut().zip(&grad) {
                *xi -= v * gi / g2;
            }
        }
        self.locate(&x)?;
        Ok(x)
    }

    /// Normal geometry with a chosen extension of `n` off `Σ`.
    pub fn normal_geometry(&self, p: &[f64], ext: &NormalExtension) -> Result<NormalGeometry> {
        if let NormalExtension::Perturbed(w) = ext {
            if w.len() != self.dim() {
                return Err(Error::Argument("extension covector has the wrong length".into()));
            }
        }
        extension_jets(&self.chart, &self.phi, p, ext)
    }

    /// Normal geometry at a generic scalar point (values, coordinate jets or
    /// jets along an embedding).
    pub fn normal_geometry_at<T: Scalar>(&self, x: &[T]) -> Result<NormalGeometry<T>> {
        extension_jets(&self.chart, &self.phi, x, &NormalExtension::Normalized)
    }

    pub fn frame(&self, p: &[f64]) -> Result<Frame> {
        let d = self.dim();
        let geo = self.normal_geometry(p, &NormalExtension::Normalized)?;
        let g = self.chart.metric(p)?;
        let ip = |u: &[f64], v: &[f64]| -> f64 {
            let mut acc = 0.0;
            for a in 0..d {
                for b in 0..d {
                    acc += g[a * d + b] * u[a] * v[b];
                }
            }
            acc
        };
        let mut basis: Vec<Vec<f64>> = vec![geo.n_up.clone()];
        for k in 0..d {
            let mut v = vec![0.0; d];
            v[k] = 1.0;
            for b in &basis {
                let c = ip(&v, b);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= c * bi;
                }
            }
            let len = ip(&v, &v).sqrt();
            if len > 1e-6 {
                basis.push(v.iter().map(|c| c / len).collect());
            }
            if basis.len() == d {
                break;
            }
        }
        let normal = basis.remove(0);
        Ok(Frame { normal, tangent: basis })
    }
}

/// Unit conormal and mean curvature at a point of `Σ`.
#[derive(Debug, Clone, Serialize)]
pub struct NormalData {
    pub n: Vec<f64>,
    /// Mean curvature, a weight −1 quantity in the chart's trivialization.
    pub h: f64,
}

pub fn normal_and_mean_curvature(sigma: &LevelSetHypersurface, p: &[f64]) -> Result<NormalData> {
    normal_and_mean_curvature_with(sigma, p, &NormalExtension::Normalized)
}

pub fn normal_and_mean_curvature_with(
    sigma: &LevelSetHypersurface,
    p: &[f64],
    ext: &NormalExtension,
) -> Result<NormalData> {
    sigma.locate(p)?;
    let geo = sigma.normal_geometry(p, ext)?;
    Ok(NormalData { n: geo.n, h: geo.h })
}

#[derive(Debug, Clone, Serialize)]
pub struct SecondFundamentalForm {
    /// `II_ij` in the orthonormal tangent frame.
    pub components: Vec<Vec<f64>>,
    pub mean_curvature: f64,
    /// `|II − (tr II/(d−1)) g_Σ|`
    pub umbilicity: f64,
    /// `|II|`
    pub norm: f64,
}

pub fn second_fundamental_form(sigma: &LevelSetHypersurface, p: &[f64]) -> Result<SecondFundamentalForm> {
    sigma.locate(p)?;
    let d = sigma.dim();
    let geo = sigma.normal_geometry(p, &NormalExtension::Normalized)?;
    let frame = sigma.frame(p)?;
    let m = frame.tangent.len();
    let mut ii = vec![vec![0.0; m]; m];
    for (i, ei) in frame.tangent.iter().enumerate() {
        for (j, ej) in frame.tangent.iter().enumerate() {
            let mut acc = 0.0;
            for a in 0..d {
                for b in 0..d {
                    acc += ei[a] * ej[b] * geo.dn[a * d + b];
                }
            }
            ii[i][j] = acc;
        }
    }
    let tr: f64 = (0..m).map(|i| ii[i][i]).sum();
    let mean = tr / m as f64;
    let mut tf = 0.0;
    let mut norm = 0.0;
    for i in 0..m {
        for j in 0..m {
            let t = ii[i][j] - if i == j { mean } else { 0.0 };
            tf += t * t;
            norm += ii[i][j] * ii[i][j];
        }
    }
    Ok(SecondFundamentalForm {
        components: ii,
        mean_curvature: mean,
        umbilicity: tf.sqrt(),
        norm: norm.sqrt(),
    })
}

/// `N = (0, n_a, −H)`.
pub fn normal_tractor(sigma: &LevelSetHypersurface, p: &[f64]) -> Result<TractorValue> {
    let nd = normal_and_mean_curvature(sigma, p)?;
    Ok(TractorValue::new(sigma.chart.label(), 0.0, nd.n, -nd.h))
}

fn raw_normal_tractor<T: Scalar>(geo: &NormalGeometry<T>) -> Vec<T> {
    let mut out = vec![geo.h.zero_like()];
    out.extend(geo.n.iter().cloned());
    out.push(geo.h.negate());
    out
}

/// `h(u, v)` on raw upper tractors with a generic scalar.
fn pair<T: Scalar>(d: usize, ginv: &[T], u: &[T], v: &[T]) -> T {
    let mut acc = u[0].times(&v[d + 1]).plus(&u[d + 1].times(&v[0]));
    for a in 0..d {
        for b in 0..d {
            acc.accumulate(&ginv[a * d + b], &u[1 + a].times(&v[1 + b]));
        }
    }
    acc
}

/// Max over tangent directions of `|∇_v N|` (raw components).
pub fn normal_tractor_derivative(sigma: &LevelSetHypersurface, p: &[f64]) -> Result<f64> {
    sigma.locate(p)?;
    let d = sigma.dim();
    let geo = sigma.normal_geometry_at(&coordinate_jets(p, 1)?)?;
    let n = raw_normal_tractor(&geo);
    let tg = TractorGeometry::at(&sigma.chart, p, 2)?;
    let dn = values(&tg.derivative(&n, &[Slot::TractorUpper])?);
    let frame = sigma.frame(p)?;
    let mut worst = 0.0f64;
    for e in &frame.tangent {
        for k in 0..d + 2 {
            let v: f64 = (0..d).map(|a| e[a] * dn[a * (d + 2) + k]).sum();
            worst = worst.max(v.abs());
        }
    }
    Ok(worst)
}

/// `|I/|I| − N|` at a point of `Σ = {σ = 0}` for a scalar-negative
/// structure (max over raw components).
pub fn check_i_equals_n(ae: &AEStructure, p: &[f64]) -> Result<f64> {
    let sigma = LevelSetHypersurface::new(ae.chart.clone(), ae.sigma.clone());
    sigma.locate(p)?;
    let i = ae.scale_tractor(p)?;
    let i2 = ae.i_squared(p)?;
    if i2 <= 0.0 {
        return Err(Error::Argument(format!("|I|² = {i2:e} is not positive")));
    }
    let n = normal_tractor(&sigma, p)?;
    let k = 1.0 / i2.sqrt();
    Ok(i.raw()
        .iter()
        .zip(n.raw())
        .fold(0.0, |m, (a, b)| m.max((a * k - b).abs())))
}

/// Rescales so that `Σ` is minimal at `p`: `ω = −sH` with `s = φ/|dφ|_g(p)`,
/// which agrees with the unit defining function to first order at `p`.
/// `H(p)` is used as a constant extension, so the new scale is exact along
/// `Σ` wherever `H` and `|dφ|` are constant (spheres and hyperplanes).
pub fn minimal_scale(sigma: &LevelSetHypersurface, p: &[f64]) -> Result<LevelSetHypersurface> {
    sigma.locate(p)?;
    let geo = sigma.normal_geometry(p, &NormalExtension::Normalized)?;
    let omega = sigma.phi.clone().scaled(-geo.h / geo.grad_norm);
    Ok(LevelSetHypersurface::new(conformal_rescale(&sigma.chart, omega), sigma.phi.clone()))
}

/// `t − h(N, t) N`.
pub fn project_tangential(sigma: &LevelSetHypersurface, p: &[f64], t: &TractorValue) -> Result<TractorValue> {
    let nd = normal_and_mean_curvature(sigma, p)?;
    let n = TractorValue::new(t.scale.clone(), 0.0, nd.n, -nd.h);
    let ginv = sigma.chart.inverse_metric(p)?;
    let k = tractor::tractor_metric(&n, t, &ginv)?;
    let raw: Vec<f64> = t.raw().iter().zip(n.raw()).map(|(a, b)| a - k * b).collect();
    TractorValue::from_raw(t.scale.clone(), &raw)
}

/// The isomorphism `N^⊥ → 𝒯_Σ`: `(σ, μ_b − Hn_bσ, ρ + ½H²σ)`. The result
/// keeps ambient covector components for `μ`, which are tangential.
pub fn restrict_tractor(sigma: &LevelSetHypersurface, p: &[f64], t: &TractorValue) -> Result<TractorValue> {
    let nd = normal_and_mean_curvature(sigma, p)?;
    let ginv = sigma.chart.inverse_metric(p)?;
    let n = TractorValue::new(t.scale.clone(), 0.0, nd.n.clone(), -nd.h);
    let k = tractor::tractor_metric(&n, t, &ginv)?;
    if k.abs() > ORTHOGONALITY_TOLERANCE {
        return Err(Error::NotOrthogonal(k));
    }
    let h = nd.h;
    Ok(TractorValue::new(
        format!("{}|Σ", t.scale),
        t.sigma,
        t.mu.iter().zip(&nd.n).map(|(m, n)| m - h * n * t.sigma).collect(),
        t.rho + 0.5 * h * h * t.sigma,
    ))
}

/// Matrix of `Proj_Σ` followed by the isomorphism into the raw intrinsic
/// tractors of a boundary chart with embedding Jacobian `jac` (`d × (d−1)`).
fn restriction_matrix<T: Scalar>(geo: &NormalGeometry<T>, jac: &[T]) -> Vec<T> {
    let d = geo.dim;
    let m = d - 1;
    let big = d + 2;
    let zero = geo.h.zero_like();
    let one = zero.constant_like(1.0);
    // xmap: rows of (m + 2) × (d + 2)
    let mut x = vec![zero.clone(); (m + 2) * big];
    x[0] = one.clone();
    for i in 0..m {
        let row = &mut x[(1 + i) * big..(2 + i) * big];
        let mut sig = zero.clone();
        for a in 0..d {
            row[1 + a] = jac[a * m + i].clone();
            sig.accumulate(&jac[a * m + i], &geo.n[a]);
        }
        row[0] = sig.times(&geo.h).negate();
    }
    x[(m + 1) * big] = geo.h.times(&geo.h).scale(0.5);
    x[(m + 1) * big + d + 1] = one.clone();
    // Proj = 1 − N (hN)^T
    let nraw = raw_normal_tractor(geo);
    let mut hn = vec![zero.clone(); big];
    hn[0] = nraw[d + 1].clone();
    hn[d + 1] = nraw[0].clone();
    for a in 0..d {
        let mut acc = zero.clone();
        for b in 0..d {
            acc.accumulate(&geo.ginv[a * d + b], &nraw[1 + b]);
        }
        hn[1 + a] = acc;
    }
    let mut out = vec![zero.clone(); (m + 2) * big];
    for r in 0..m + 2 {
        // (X N)_r
        let mut xn = zero.clone();
        for k in 0..big {
            xn.accumulate(&x[r * big + k], &nraw[k]);
        }
        for c in 0..big {
            out[r * big + c] = x[r * big + c].minus(&xn.times(&hn[c]));
        }
    }
    out
}

/// Residuals comparing intrinsic tractor objects of `Σ` with the restriction
/// of ambient ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntrinsicComparison {
    /// Parallel transport: `Proj ∇_v T` vs `∇^Σ_v T` for a generic `T ∈ N^⊥`.
    pub connection: f64,
    /// `Ω(u, v)` vs `Ω^Σ(u, v)` on `N^⊥`.
    pub curvature: f64,
    /// `(d−5) W|_Σ` vs `(d−4) W^Σ`.
    pub ww: f64,
}

impl IntrinsicComparison {
    pub fn max(&self) -> f64 {
        self.connection.max(self.curvature).max(self.ww)
    }
}

/// The round sphere `Σ` of a quadric structure on flat space, as an
/// embedded-sphere chart.
pub fn boundary_chart(ae: &AEStructure) -> Result<MetricChart> {
    use crate::almost_einstein::{quadric_locus, Locus};
    if let (MetricChart::Euclidean { dim }, ScalarField::Quadric { a, b, c }) = (&ae.chart, &ae.sigma) {
        if let Locus::Sphere { center, radius } = quadric_locus(*a, b, *c) {
            return Ok(MetricChart::EmbeddedSphere {
                ambient: Box::new(MetricChart::euclidean(*dim)),
                center,
                semi_axes: vec![radius; *dim],
            });
        }
    }
    Err(Error::UnsupportedModel(format!(
        "no intrinsic chart for the zero set of {:?} on {}",
        ae.sigma,
        ae.chart.label()
    )))
}

/// Generic test section `V_A(x) = c_A + l_A·x` (fixed coefficients).
fn probe_field<T: Scalar>(x: &[T]) -> Vec<T> {
    let d = x.len();
    (0..d + 2)
        .map(|k| {
            let mut v = x[0].constant_like(0.3 + 0.17 * k as f64 - 0.05 * (k * k) as f64);
            for (a, xa) in x.iter().enumerate() {
                let l = ((k * 7 + a * 3) % 5) as f64 * 0.11 - 0.2;
                v.add_assign_ref(&xa.scale(l));
            }
            v
        })
        .collect()
}

fn project_field<T: Scalar>(geo: &NormalGeometry<T>, v: &[T]) -> Vec<T> {
    let n = raw_normal_tractor(geo);
    let k = pair(geo.dim, &geo.ginv, &n, v);
    v.iter().zip(&n).map(|(vi, ni)| vi.minus(&k.times(ni))).collect()
}

fn apply(m: &[f64], rows: usize, v: &[f64]) -> Vec<f64> {
    let cols = v.len();
    (0..rows).map(|r| (0..cols).map(|c| m[r * cols + c] * v[c]).sum()).collect()
}

/// Compares intrinsic and ambient tractor calculus at the boundary point with
/// chart coordinates `u`. `boundary` must be an embedded-sphere chart over
/// `sigma.chart` whose image lies in `Σ`. Needs `d ≥ 4` so that the
/// intrinsic dimension is at least 3.
pub fn intrinsic_vs_ambient(
    sigma: &LevelSetHypersurface,
    boundary: &MetricChart,
    u: &[f64],
) -> Result<IntrinsicComparison> {
    let d = sigma.dim();
    if d < 4 {
        return Err(Error::Dimension(format!(
            "intrinsic tractor comparison needs d ≥ 4, got {d}"
        )));
    }
    match boundary {
        MetricChart::EmbeddedSphere { ambient, .. } if **ambient == sigma.chart => {}
        _ => {
            return Err(Error::UnsupportedModel(format!(
                "{} is not an embedded chart over {}",
                boundary.label(),
                sigma.chart.label()
            )))
        }
    }
    let m = d - 1;
    let big = d + 2;
    let p = boundary.embedding(u)?;
    sigma.locate(&p)?;
    let jac = boundary.embedding_jacobian(u)?;
    let geo = sigma.normal_geometry_at(&p)?;
    let k = restriction_matrix(&geo, &jac);

    // ambient: Proj ∇_i T for T = Proj V
    let xs = coordinate_jets(&p, 1)?;
    let geo_x = sigma.normal_geometry_at(&xs)?;
    let t = project_field(&geo_x, &probe_field(&xs));
    let amb = TractorGeometry::at(&sigma.chart, &p, 2)?;
    let dt = values(&amb.derivative(&t, &[Slot::TractorUpper])?);
    // intrinsic: ∇^Σ_i (K T)
    let us = coordinate_jets(u, 1)?;
    let xf = boundary.embedding(&us)?;
    let jf = boundary.embedding_jacobian(&us)?;
    let geo_u = sigma.normal_geometry_at(&xf)?;
    let ku = restriction_matrix(&geo_u, &jf);
    let tu = project_field(&geo_u, &probe_field(&xf));
    let ts: Vec<Jet> = (0..m + 2)
        .map(|r| {
            let mut acc = tu[0].zero_like();
            for c in 0..big {
                acc.accumulate(&ku[r * big + c], &tu[c]);
            }
            acc
        })
        .collect();
    let intr = TractorGeometry::at(boundary, u, 2)?;
    let dts = values(&intr.derivative(&ts, &[Slot::TractorUpper])?);
    let mut connection = 0.0f64;
    for i in 0..m {
        let along: Vec<f64> = (0..big)
            .map(|c| (0..d).map(|a| jac[a * m + i] * dt[a * big + c]).sum())
            .collect();
        let lhs = apply(&k, m + 2, &along);
        for r in 0..m + 2 {
            connection = connection.max((lhs[r] - dts[i * (m + 2) + r]).abs());
        }
    }

    // Ω(e_i, e_j) on N^⊥
    let om = tractor::tractor_curvature(&sigma.chart, &p)?.comps;
    let oms = tractor::tractor_curvature(boundary, u)?.comps;
    let mut curvature = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let mut o = vec![0.0; big * big];
            for a in 0..d {
                for b in 0..d {
                    let w = jac[a * m + i] * jac[b * m + j];
                    if w == 0.0 {
                        continue;
                    }
                    for (oc, v) in o.iter_mut().zip(&om[(a * d + b) * big * big..(a * d + b + 1) * big * big]) {
                        *oc += w * v;
                    }
                }
            }
            let os = &oms[(i * m + j) * (m + 2) * (m + 2)..(i * m + j + 1) * (m + 2) * (m + 2)];
            for e in 0..big {
                let mut basis = vec![0.0; big];
                basis[e] = 1.0;
                let v = project_field(&geo, &basis);
                let lhs = apply(&k, m + 2, &apply(&o, big, &v));
                let rhs = apply(os, m + 2, &apply(&k, m + 2, &v));
                for r in 0..m + 2 {
                    curvature = curvature.max((lhs[r] - rhs[r]).abs());
                }
            }
        }
    }

    // (d−5) W|_Σ = (d−4) W^Σ
    let w = tractor::w_tractor(&sigma.chart, &p)?.comps;
    let ws = tractor::w_tractor(boundary, u)?.comps;
    let mut pushed = w;
    let mut shape = vec![big; 4];
    for slot in 0..4 {
        pushed = push_slot(&pushed, &shape, slot, &k, m + 2);
        shape[slot] = m + 2;
    }
    let ww = pushed
        .iter()
        .zip(&ws)
        .fold(0.0f64, |acc, (a, b)| acc.max(((d as f64 - 5.0) * a - (d as f64 - 4.0) * b).abs()));
    Ok(IntrinsicComparison {
        connection,
        curvature,
        ww,
    })
}

/// Applies `k` (rows × shape[slot]) to one slot of a dense tensor.
fn push_slot(t: &[f64], shape: &[usize], slot: usize, k: &[f64], rows: usize) -> Vec<f64> {
    let cols = shape[slot];
    let outer: usize = shape[..slot].iter().product();
    let inner: usize = shape[slot + 1..].iter().product();
    let mut out = vec![0.0; outer * rows * inner];
    for o in 0..outer {
        for r in 0..rows {
            for c in 0..cols {
                let kv = k[r * cols + c];
                if kv == 0.0 {
                    continue;
                }
                let src = &t[(o * cols + c) * inner..(o * cols + c + 1) * inner];
                let dst = &mut out[(o * rows + r) * inner..(o * rows + r + 1) * inner];
                for (dv, sv) in dst.iter_mut().zip(src) {
                    *dv += kv * sv;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(d: usize, inward: bool) -> LevelSetHypersurface {
        let s = if inward { -1.0 } else { 1.0 };
        LevelSetHypersurface::new(
            MetricChart::euclidean(d),
            ScalarField::quadric(-s, vec![0.0; d], s),
        )
    }

    #[test]
    fn unit_sphere_mean_curvature() {
        let p = [0.6, 0.0, 0.8];
        let nd = normal_and_mean_curvature(&sphere(3, false), &p).unwrap();
        assert!((nd.h - 1.0).abs() < 1e-12);
        assert!((nd.n[0] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn off_surface_is_rejected() {
        let r = normal_and_mean_curvature(&sphere(3, false), &[0.5, 0.0, 0.0]);
        assert!(matches!(r, Err(Error::NotOnSurface(_))));
    }

    #[test]
    fn degenerate_level_set() {
        let s = LevelSetHypersurface::new(MetricChart::euclidean(3), ScalarField::quadric(0.0, vec![0.0; 3], 1.0));
        let r = normal_and_mean_curvature(&s, &[0.0, 0.0, 0.0]);
        assert!(matches!(r, Err(Error::DegenerateLevelSet(_))));
    }

    #[test]
    fn projection_lands_on_surface() {
        let s = sphere(4, false);
        let p = s.project(&[0.3, 0.9, -0.2, 0.4]).unwrap();
        let r: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((r - 1.0).abs() < 1e-12);
    }
}
