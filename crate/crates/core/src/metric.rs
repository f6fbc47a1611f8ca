//! Closed-form coordinate charts for the model metrics.
//!
//! Every chart evaluates its metric components through the [`Scalar`]
//! trait, so the same code yields plain values, jets, or jets of jets.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{Jet, Scalar, MAX_ORDER};
use crate::tensor::{Slot, Tensor, TensorValue};

/// Largest admissible coefficient in a polynomial perturbation.
pub const PERTURBATION_CAP: f64 = 0.1;

/// A scalar function of the chart coordinates. Densities (such as a scale
/// `σ` of weight 1) are represented by their function in the chart metric's
/// trivialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarField {
    Constant { value: f64 },
    Coordinate { index: usize },
    /// `a + b·x + c|x|²`
    Quadric { a: f64, b: Vec<f64>, c: f64 },
    Polynomial { terms: Vec<Monomial> },
    Sum { terms: Vec<ScalarField> },
    Product { factors: Vec<ScalarField> },
    Scaled { factor: f64, field: Box<ScalarField> },
    Exp { field: Box<ScalarField> },
    Log { field: Box<ScalarField> },
    Sin { field: Box<ScalarField> },
    Cos { field: Box<ScalarField> },
    Power { field: Box<ScalarField>, exponent: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: f64,
    pub powers: Vec<u8>,
}

impl ScalarField {
    pub fn constant(value: f64) -> Self {
        ScalarField::Constant { value }
    }

    pub fn quadric(a: f64, b: Vec<f64>, c: f64) -> Self {
        ScalarField::Quadric { a, b, c }
    }

    pub fn scaled(self, factor: f64) -> Self {
        ScalarField::Scaled {
            factor,
            field: Box::new(self),
        }
    }

    pub fn log(self) -> Self {
        ScalarField::Log {
            field: Box::new(self),
        }
    }

    pub fn pow(self, exponent: f64) -> Self {
        ScalarField::Power {
            field: Box::new(self),
            exponent,
        }
    }

    pub fn plus(self, other: ScalarField) -> Self {
        ScalarField::Sum {
            terms: vec![self, other],
        }
    }

    pub fn times(self, other: ScalarField) -> Self {
        ScalarField::Product {
            factors: vec![self, other],
        }
    }

    pub fn eval<S: Scalar>(&self, x: &[S]) -> Result<S> {
        let zero = x
            .first()
            .ok_or_else(|| Error::Argument("empty coordinate list".into()))?
            .zero_like();
        Ok(match self {
            ScalarField::Constant { value } => zero.add_const(*value),
            ScalarField::Coordinate { index } => x
                .get(*index)
                .ok_or_else(|| Error::Argument(format!("coordinate {index} out of range")))?
                .clone(),
            ScalarField::Quadric { a, b, c } => {
                if b.len() != x.len() {
                    return Err(Error::Argument(format!(
                        "quadric with {} linear coefficients on a {}-dimensional chart",
                        b.len(),
                        x.len()
                    )));
                }
                let mut acc = zero.add_const(*a);
                for (xi, bi) in x.iter().zip(b) {
                    acc.add_assign_ref(&xi.times(&xi.scale(*c).add_const(*bi)));
                }
                acc
            }
            ScalarField::Polynomial { terms } => {
                let mut acc = zero;
                for m in terms {
                    if m.powers.len() != x.len() {
                        return Err(Error::Argument("monomial of wrong arity".into()));
                    }
                    let mut term = x[0].constant_like(m.coeff);
                    for (xi, &p) in x.iter().zip(&m.powers) {
                        for _ in 0..p {
                            term = term.times(xi);
                        }
                    }
                    acc.add_assign_ref(&term);
                }
                acc
            }
            ScalarField::Sum { terms } => {
                let mut acc = zero;
                for t in terms {
                    acc.add_assign_ref(&t.eval(x)?);
                }
                acc
            }
            ScalarField::Product { factors } => {
                let mut acc = zero.add_const(1.0);
                for f in factors {
                    acc = acc.times(&f.eval(x)?);
                }
                acc
            }
            ScalarField::Scaled { factor, field } => field.eval(x)?.scale(*factor),
            ScalarField::Exp { field } => field.eval(x)?.exp(),
            ScalarField::Log { field } => field.eval(x)?.ln()?,
            ScalarField::Sin { field } => field.eval(x)?.sin(),
            ScalarField::Cos { field } => field.eval(x)?.cos(),
            ScalarField::Power { field, exponent } => field.eval(x)?.powf(*exponent)?,
        })
    }

    pub fn value_at(&self, point: &[f64]) -> Result<f64> {
        self.eval(point)
    }

    pub fn jet_at(&self, point: &[f64], order: usize) -> Result<Jet> {
        self.eval(&coordinate_jets(point, order)?)
    }
}

/// Coordinate jets `x^i` about `point`.
pub fn coordinate_jets(point: &[f64], order: usize) -> Result<Vec<Jet>> {
    (0..point.len())
        .map(|i| Jet::variable_with(point.len(), order, i, point[i]))
        .collect()
}

/// How the boundary Schouten tensor of a normal-form metric is supplied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundarySchouten {
    Zero,
    /// `P = factor · g_Σ` (the unit round sphere has factor ½).
    Proportional { factor: f64 },
    /// Row-major symmetric components.
    Explicit { components: Vec<ScalarField> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationTerm {
    pub i: usize,
    pub j: usize,
    pub coeff: f64,
    pub powers: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MetricChart {
    Euclidean {
        dim: usize,
    },
    /// `4 r² (1 + |x|²)⁻² δ`
    RoundSphereStereo {
        dim: usize,
        #[serde(default = "unit")]
        radius: f64,
    },
    /// `4 (1 - |x|²)⁻² δ` on the unit ball
    PoincareBall {
        dim: usize,
    },
    ProductSpheres {
        d1: usize,
        r1: f64,
        d2: usize,
        r2: f64,
    },
    /// `s⁻² (ds² + g_s)` with `g_s = g_Σ - P s² + ¼ P g_Σ⁻¹ P s⁴`, coordinates
    /// `(s, y)`, `s > 0`.
    FgHyperbolicNormalForm {
        boundary: Box<MetricChart>,
        schouten: BoundarySchouten,
    },
    /// `δ + Σ coeff · x^α` placed symmetrically at `(i, j)`.
    PolynomialPerturbation {
        dim: usize,
        terms: Vec<PerturbationTerm>,
    },
    /// Metric of the section of the null cone cut out by `ℋ(I, X) = 1`,
    /// written over the flat chart: `f⁻² δ` with `f = ℋ(I, X_flat(x))`.
    CapChart {
        ambient: Vec<f64>,
    },
    /// `e^{2ω} g`
    ConformalRescale {
        base: Box<MetricChart>,
        omega: ScalarField,
    },
    /// Induced metric on the ellipsoid `center + a ⊙ S(u)`, where `S` is
    /// inverse stereographic projection from the last-axis pole.
    EmbeddedSphere {
        ambient: Box<MetricChart>,
        center: Vec<f64>,
        semi_axes: Vec<f64>,
    },
}

fn unit() -> f64 {
    1.0
}

/// `(1 + |x|²)` style helper: `k + s |x|²`.
fn radial<S: Scalar>(x: &[S], k: f64, s: f64) -> S {
    let mut acc = x[0].constant_like(k);
    for xi in x {
        acc.add_assign_ref(&xi.times(xi).scale(s));
    }
    acc
}

fn conformally_flat<S: Scalar>(factor: S, n: usize) -> Vec<S> {
    let zero = factor.zero_like();
    (0..n * n)
        .map(|k| if k / n == k % n { factor.clone() } else { zero.clone() })
        .collect()
}

/// Inverse stereographic projection `S(u) = (2u, |u|² - 1) / (1 + |u|²)`.
pub fn inverse_stereographic<S: Scalar>(u: &[S]) -> Result<Vec<S>> {
    let denom = radial(u, 1.0, 1.0).recip()?;
    let mut out: Vec<S> = u.iter().map(|ui| ui.scale(2.0).times(&denom)).collect();
    out.push(radial(u, -1.0, 1.0).times(&denom));
    Ok(out)
}

/// Jacobian `∂S^A/∂u^i`, row-major `(n + 1) × n`.
fn inverse_stereographic_jacobian<S: Scalar>(u: &[S]) -> Result<Vec<S>> {
    let n = u.len();
    let inv = radial(u, 1.0, 1.0).recip()?;
    let inv2 = inv.times(&inv);
    let mut jac = Vec::with_capacity((n + 1) * n);
    for k in 0..n {
        for i in 0..n {
            let mut v = u[k].times(&u[i]).times(&inv2).scale(-4.0);
            if k == i {
                v.add_assign_ref(&inv.scale(2.0));
            }
            jac.push(v);
        }
    }
    for ui in u {
        jac.push(ui.times(&inv2).scale(4.0));
    }
    Ok(jac)
}

/// Pairing with the flat section of the null cone:
/// `ℋ(I, X_flat(x)) = a + b·x + c|x|²`.
pub fn ambient_quadric(ambient: &[f64]) -> (f64, Vec<f64>, f64) {
    let (i0, i1) = (ambient[0], ambient[1]);
    ((i1 - i0) / 2.0, ambient[2..].to_vec(), -(i0 + i1) / 2.0)
}

impl MetricChart {
    pub fn euclidean(dim: usize) -> Self {
        MetricChart::Euclidean { dim }
    }

    pub fn round_sphere(dim: usize) -> Self {
        MetricChart::RoundSphereStereo { dim, radius: 1.0 }
    }

    pub fn poincare_ball(dim: usize) -> Self {
        MetricChart::PoincareBall { dim }
    }

    pub fn product_spheres(d1: usize, r1: f64, d2: usize, r2: f64) -> Self {
        MetricChart::ProductSpheres { d1, r1, d2, r2 }
    }

    /// Construct a built-in family from its name and JSON parameters.
    pub fn builtin(family: &str, params: &serde_json::Value) -> Result<Self> {
        let mut obj = match params {
            serde_json::Value::Object(m) => m.clone(),
            serde_json::Value::Null => serde_json::Map::new(),
            _ => return Err(Error::Argument("chart parameters must be an object".into())),
        };
        obj.insert("family".into(), serde_json::Value::String(family.into()));
        let chart: MetricChart = serde_json::from_value(serde_json::Value::Object(obj))
            .map_err(|e| Error::Argument(format!("chart {family}: {e}")))?;
        chart.validate()?;
        Ok(chart)
    }

    /// Random unit-scaled perturbation of the flat metric.
    pub fn random_perturbation(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_terms = 3 * dim;
        let mut terms = Vec::with_capacity(n_terms);
        for _ in 0..n_terms {
            let i = rng.gen_range(0..dim);
            let j = rng.gen_range(i..dim);
            let degree = rng.gen_range(1..=MAX_ORDER);
            let mut powers = vec![0u8; dim];
            for _ in 0..degree {
                powers[rng.gen_range(0..dim)] += 1;
            }
            let coeff = rng.gen_range(-PERTURBATION_CAP..PERTURBATION_CAP);
            terms.push(PerturbationTerm { i, j, coeff, powers });
        }
        // keep the total perturbation small enough for positivity on the unit ball
        let total: f64 = terms.iter().map(|t| t.coeff.abs()).sum();
        if total > 0.5 {
            for t in &mut terms {
                t.coeff *= 0.5 / total;
            }
        }
        MetricChart::PolynomialPerturbation { dim, terms }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MetricChart::Euclidean { dim }
            | MetricChart::RoundSphereStereo { dim, .. }
            | MetricChart::PoincareBall { dim }
            | MetricChart::PolynomialPerturbation { dim, .. }
                if *dim == 0 =>
            {
                return Err(Error::Argument("chart dimension must be positive".into()));
            }
            _ => {}
        }
        match self {
            MetricChart::RoundSphereStereo { radius, .. } if !(*radius > 0.0) => {
                Err(Error::Domain(format!("nonpositive radius {radius}")))
            }
            MetricChart::ProductSpheres { d1, r1, d2, r2 } => {
                if !(*r1 > 0.0 && *r2 > 0.0) {
                    return Err(Error::Domain(format!("nonpositive radius ({r1}, {r2})")));
                }
                if *d1 == 0 || *d2 == 0 {
                    return Err(Error::Argument("factor dimensions must be positive".into()));
                }
                Ok(())
            }
            MetricChart::PolynomialPerturbation { dim, terms } => {
                for t in terms {
                    if t.i >= *dim || t.j >= *dim || t.powers.len() != *dim {
                        return Err(Error::Argument("perturbation term out of range".into()));
                    }
                    if t.coeff.abs() > PERTURBATION_CAP {
                        return Err(Error::Argument(format!(
                            "perturbation coefficient {} exceeds {PERTURBATION_CAP}",
                            t.coeff
                        )));
                    }
                    if t.powers.iter().map(|&p| p as usize).sum::<usize>() > MAX_ORDER {
                        return Err(Error::Argument("perturbation degree exceeds 4".into()));
                    }
                }
                Ok(())
            }
            MetricChart::CapChart { ambient } => {
                if ambient.len() < 3 {
                    return Err(Error::Argument("ambient vector needs at least 3 components".into()));
                }
                if ambient.iter().all(|&v| v == 0.0) {
                    return Err(Error::Argument("ambient vector is zero".into()));
                }
                Ok(())
            }
            MetricChart::FgHyperbolicNormalForm { boundary, schouten } => {
                boundary.validate()?;
                if let BoundarySchouten::Explicit { components } = schouten {
                    let n = boundary.dim();
                    if components.len() != n * n {
                        return Err(Error::Argument(format!(
                            "boundary Schouten needs {} components",
                            n * n
                        )));
                    }
                    for i in 0..n {
                        for j in 0..i {
                            if components[i * n + j] != components[j * n + i] {
                                return Err(Error::Argument(
                                    "boundary Schouten must be symmetric".into(),
                                ));
                            }
                        }
                    }
                }
                Ok(())
            }
            MetricChart::ConformalRescale { base, .. } => base.validate(),
            MetricChart::EmbeddedSphere {
                ambient,
                center,
                semi_axes,
            } => {
                ambient.validate()?;
                if semi_axes.len() != ambient.dim() || center.len() != ambient.dim() {
                    return Err(Error::Argument(
                        "embedding needs one centre coordinate and semi-axis per ambient dimension"
                            .into(),
                    ));
                }
                if semi_axes.len() < 2 {
                    return Err(Error::Argument("embedded sphere needs dimension ≥ 1".into()));
                }
                if semi_axes.iter().any(|&a| !(a > 0.0)) {
                    return Err(Error::Domain("nonpositive semi-axis".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            MetricChart::Euclidean { dim }
            | MetricChart::RoundSphereStereo { dim, .. }
            | MetricChart::PoincareBall { dim }
            | MetricChart::PolynomialPerturbation { dim, .. } => *dim,
            MetricChart::ProductSpheres { d1, d2, .. } => d1 + d2,
            MetricChart::FgHyperbolicNormalForm { boundary, .. } => boundary.dim() + 1,
            MetricChart::CapChart { ambient } => ambient.len() - 2,
            MetricChart::ConformalRescale { base, .. } => base.dim(),
            MetricChart::EmbeddedSphere { semi_axes, .. } => semi_axes.len() - 1,
        }
    }

    pub fn label(&self) -> String {
        match self {
            MetricChart::Euclidean { dim } => format!("euclidean({dim})"),
            MetricChart::RoundSphereStereo { dim, radius } => {
                format!("round_sphere_stereo({dim}, r={radius})")
            }
            MetricChart::PoincareBall { dim } => format!("poincare_ball({dim})"),
            MetricChart::ProductSpheres { d1, r1, d2, r2 } => {
                format!("product_spheres({d1},{r1},{d2},{r2})")
            }
            MetricChart::FgHyperbolicNormalForm { boundary, schouten } => {
                let p = match schouten {
                    BoundarySchouten::Zero => "0".to_string(),
                    BoundarySchouten::Proportional { factor } => format!("{factor}g"),
                    BoundarySchouten::Explicit { .. } => "explicit".to_string(),
                };
                format!("fg_hyperbolic_normal_form({}, P={p})", boundary.label())
            }
            MetricChart::PolynomialPerturbation { dim, terms } => {
                format!("polynomial_perturbation({dim}, {} terms)", terms.len())
            }
            MetricChart::CapChart { ambient } => format!("cap_chart({ambient:?})"),
            MetricChart::ConformalRescale { base, .. } => format!("rescaled({})", base.label()),
            MetricChart::EmbeddedSphere {
                ambient,
                center,
                semi_axes,
            } => format!(
                "embedded_sphere(center={center:?}, axes={semi_axes:?} in {})",
                ambient.label()
            ),
        }
    }

    /// Domain membership at plain coordinates.
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            MetricChart::PoincareBall { .. } => x.iter().map(|v| v * v).sum::<f64>() < 1.0,
            MetricChart::FgHyperbolicNormalForm { boundary, .. } => {
                x[0] > 0.0 && boundary.contains(&x[1..])
            }
            MetricChart::CapChart { ambient } => {
                let (a, b, c) = ambient_quadric(ambient);
                let f = a + b.iter().zip(x).map(|(bi, xi)| bi * xi).sum::<f64>()
                    + c * x.iter().map(|v| v * v).sum::<f64>();
                f > 0.0
            }
            MetricChart::ConformalRescale { base, omega } => {
                base.contains(x) && omega.value_at(x).map(f64::is_finite).unwrap_or(false)
            }
            MetricChart::EmbeddedSphere { ambient, .. } => self
                .embedding(x)
                .map(|p| ambient.contains(&p))
                .unwrap_or(false),
            MetricChart::ProductSpheres { .. }
            | MetricChart::Euclidean { .. }
            | MetricChart::RoundSphereStereo { .. }
            | MetricChart::PolynomialPerturbation { .. } => true,
        }
    }

    fn check_domain<S: Scalar>(&self, x: &[S]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Argument(format!(
                "{} coordinates for a {}-dimensional chart",
                x.len(),
                self.dim()
            )));
        }
        let values: Vec<f64> = x.iter().map(Scalar::value).collect();
        if !self.contains(&values) {
            return Err(Error::Domain(format!("{values:?} not in {}", self.label())));
        }
        Ok(())
    }

    /// Row-major metric components `g_ab(x)`.
    pub fn metric<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        self.check_domain(x)?;
        let d = self.dim();
        let g = match self {
            MetricChart::Euclidean { .. } => conformally_flat(x[0].constant_like(1.0), d),
            MetricChart::RoundSphereStereo { radius, .. } => {
                let f = radial(x, 1.0, 1.0).powf(-2.0)?.scale(4.0 * radius * radius);
                conformally_flat(f, d)
            }
            MetricChart::PoincareBall { .. } => {
                let f = radial(x, 1.0, -1.0).powf(-2.0)?.scale(4.0);
                conformally_flat(f, d)
            }
            MetricChart::ProductSpheres { d1, r1, r2, .. } => {
                let zero = x[0].zero_like();
                let f1 = radial(&x[..*d1], 1.0, 1.0).powf(-2.0)?.scale(4.0 * r1 * r1);
                let f2 = radial(&x[*d1..], 1.0, 1.0).powf(-2.0)?.scale(4.0 * r2 * r2);
                (0..d * d)
                    .map(|k| {
                        let (i, j) = (k / d, k % d);
                        if i != j {
                            zero.clone()
                        } else if i < *d1 {
                            f1.clone()
                        } else {
                            f2.clone()
                        }
                    })
                    .collect()
            }
            MetricChart::FgHyperbolicNormalForm { boundary, schouten } => {
                fg_metric(boundary, schouten, x)?
            }
            MetricChart::PolynomialPerturbation { terms, .. } => {
                let mut g = conformally_flat(x[0].constant_like(1.0), d);
                for t in terms {
                    if t.coeff.abs() > PERTURBATION_CAP {
                        return Err(Error::Argument(format!(
                            "perturbation coefficient {} exceeds {PERTURBATION_CAP}",
                            t.coeff
                        )));
                    }
                    let mut m = x[0].constant_like(t.coeff);
                    for (xi, &p) in x.iter().zip(&t.powers) {
                        for _ in 0..p {
                            m = m.times(xi);
                        }
                    }
                    g[t.i * d + t.j].add_assign_ref(&m);
                    if t.i != t.j {
                        g[t.j * d + t.i].add_assign_ref(&m);
                    }
                }
                g
            }
            MetricChart::CapChart { ambient } => {
                let (a, b, c) = ambient_quadric(ambient);
                let f = ScalarField::quadric(a, b, c).eval(x)?;
                conformally_flat(f.powf(-2.0)?, d)
            }
            MetricChart::ConformalRescale { base, omega } => {
                let factor = omega.eval(x)?.scale(2.0).exp();
                base.metric(x)?.iter().map(|c| c.times(&factor)).collect()
            }
            MetricChart::EmbeddedSphere { ambient, .. } => {
                let p = self.embedding(x)?;
                let jac = self.embedding_jacobian(x)?;
                let ga = ambient.metric(&p)?;
                let m = d + 1;
                let zero = x[0].zero_like();
                let mut g = vec![zero; d * d];
                for i in 0..d {
                    for j in i..d {
                        let mut acc = x[0].zero_like();
                        for a in 0..m {
                            for b in 0..m {
                                acc.accumulate(&jac[a * d + i], &jac[b * d + j].times(&ga[a * m + b]));
                            }
                        }
                        g[j * d + i] = acc.clone();
                        g[i * d + j] = acc;
                    }
                }
                g
            }
        };
        check_positive_definite(&g, d)?;
        Ok(g)
    }

    /// Point of the ambient chart for an embedded sphere.
    pub fn embedding<S: Scalar>(&self, u: &[S]) -> Result<Vec<S>> {
        match self {
            MetricChart::EmbeddedSphere {
                center, semi_axes, ..
            } => Ok(inverse_stereographic(u)?
                .into_iter()
                .zip(center.iter().zip(semi_axes))
                .map(|(s, (c, a))| s.scale(*a).add_const(*c))
                .collect()),
            _ => Err(Error::UnsupportedModel(format!(
                "{} is not an embedded hypersurface",
                self.label()
            ))),
        }
    }

    /// `∂F^A/∂u^i`, row-major `(n + 1) × n`.
    pub fn embedding_jacobian<S: Scalar>(&self, u: &[S]) -> Result<Vec<S>> {
        match self {
            MetricChart::EmbeddedSphere { semi_axes, .. } => {
                let n = u.len();
                let mut jac = inverse_stereographic_jacobian(u)?;
                for (k, a) in semi_axes.iter().enumerate() {
                    for i in 0..n {
                        jac[k * n + i] = jac[k * n + i].scale(*a);
                    }
                }
                Ok(jac)
            }
            _ => Err(Error::UnsupportedModel(format!(
                "{} is not an embedded hypersurface",
                self.label()
            ))),
        }
    }

    /// Chart coordinates of an ambient point on an embedded sphere.
    pub fn embedding_preimage(&self, p: &[f64]) -> Result<Vec<f64>> {
        match self {
            MetricChart::EmbeddedSphere {
                center, semi_axes, ..
            } => {
                let q: Vec<f64> = p
                    .iter()
                    .zip(center.iter().zip(semi_axes))
                    .map(|(x, (c, a))| (x - c) / a)
                    .collect();
                let n = q.len() - 1;
                let denom = 1.0 - q[n];
                if denom.abs() < 1e-8 {
                    return Err(Error::Domain("point at the projection pole".into()));
                }
                Ok(q[..n].iter().map(|v| v / denom).collect())
            }
            _ => Err(Error::UnsupportedModel(format!(
                "{} is not an embedded hypersurface",
                self.label()
            ))),
        }
    }

    /// Metric component jets about `point`.
    pub fn metric_jets(&self, point: &[f64], order: usize) -> Result<Vec<Jet>> {
        self.metric(&coordinate_jets(point, order)?)
    }

    pub fn metric_at(&self, point: &[f64]) -> Result<TensorValue> {
        let g = self.metric(point)?;
        Tensor::from_components(self.dim(), vec![Slot::Lower, Slot::Lower], 2, g)
    }

    pub fn inverse_metric(&self, point: &[f64]) -> Result<TensorValue> {
        self.metric_at(point)?.inverse_metric()
    }
}

fn fg_metric<S: Scalar>(boundary: &MetricChart, schouten: &BoundarySchouten, x: &[S]) -> Result<Vec<S>> {
    let d = x.len();
    let n = d - 1;
    let s = &x[0];
    let y = &x[1..];
    let gb = boundary.metric(y)?;
    let s2 = s.times(s);
    let s4 = s2.times(&s2);
    let gs: Vec<S> = match schouten {
        BoundarySchouten::Zero => gb,
        BoundarySchouten::Proportional { factor } => {
            // g (1 - f s²/2)²
            let k = s2.scale(-factor / 2.0).add_const(1.0);
            let k2 = k.times(&k);
            gb.iter().map(|c| c.times(&k2)).collect()
        }
        BoundarySchouten::Explicit { components } => {
            let p: Vec<S> = components
                .iter()
                .map(|c| c.eval(y))
                .collect::<Result<_>>()?;
            let ginv = crate::tensor::invert_matrix(&gb, n)?;
            let mut out = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    let mut quartic = s.zero_like();
                    for k in 0..n {
                        for l in 0..n {
                            quartic.accumulate(&p[i * n + k], &ginv[k * n + l].times(&p[l * n + j]));
                        }
                    }
                    let v = gb[i * n + j]
                        .minus(&p[i * n + j].times(&s2))
                        .plus(&quartic.times(&s4).scale(0.25));
                    out.push(v);
                }
            }
            out
        }
    };
    let inv_s2 = s2.recip()?;
    let zero = s.zero_like();
    let mut g = vec![zero; d * d];
    g[0] = inv_s2.clone();
    for i in 0..n {
        for j in 0..n {
            g[(i + 1) * d + j + 1] = gs[i * n + j].times(&inv_s2);
        }
    }
    Ok(g)
}

fn check_positive_definite<S: Scalar>(g: &[S], n: usize) -> Result<()> {
    // Cholesky on the constant terms
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = g[i * n + j].value();
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(sum > 0.0) {
                    return Err(Error::Domain("metric is not positive definite here".into()));
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Ok(())
}

/// `e^{2ω} g`
pub fn conformal_rescale(chart: &MetricChart, omega: ScalarField) -> MetricChart {
    MetricChart::ConformalRescale {
        base: Box::new(chart.clone()),
        omega,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn round_sphere_at_origin() {
        let g = MetricChart::round_sphere(2).metric_jets(&[0.0, 0.0], 1).unwrap();
        assert_eq!(g[0].coefficients()[0], 4.0);
        assert_eq!(g[1].coefficients()[0], 0.0);
        for c in &g {
            assert_eq!(c.derivative(&[1, 0]).unwrap(), 0.0);
            assert_eq!(c.derivative(&[0, 1]).unwrap(), 0.0);
        }
    }

    #[test]
    fn flat_boundary_normal_form_is_half_space() {
        let chart = MetricChart::FgHyperbolicNormalForm {
            boundary: Box::new(MetricChart::euclidean(2)),
            schouten: BoundarySchouten::Zero,
        };
        let g = chart.metric(&[0.5, 0.3, -0.2]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 4.0 } else { 0.0 };
                assert_abs_diff_eq!(g[i * 3 + j], expected, epsilon = 1e-14);
            }
        }
        assert!(matches!(chart.metric(&[-0.5, 0.0, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn product_of_unit_two_spheres() {
        let g = MetricChart::product_spheres(2, 1.0, 2, 1.0)
            .metric(&[0.0; 4])
            .unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(g[i * 4 + j], if i == j { 4.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn bad_parameters() {
        assert!(matches!(
            MetricChart::builtin("round_sphere_stereo", &serde_json::json!({"dim": 2, "radius": -1.0})),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            MetricChart::poincare_ball(2).metric(&[0.8, 0.8]),
            Err(Error::Domain(_))
        ));
        assert!(MetricChart::builtin("nope", &serde_json::json!({})).is_err());
    }

    #[test]
    fn builtin_from_json() {
        let chart = MetricChart::builtin("product_spheres", &serde_json::json!({"d1": 2, "r1": 1.0, "d2": 3, "r2": 1.5})).unwrap();
        assert_eq!(chart.dim(), 5);
    }

    #[test]
    fn explicit_schouten_matches_proportional() {
        let boundary = MetricChart::round_sphere(2);
        let a = MetricChart::FgHyperbolicNormalForm {
            boundary: Box::new(boundary.clone()),
            schouten: BoundarySchouten::Proportional { factor: 0.5 },
        };
        // P = ½ g_Σ written out explicitly
        let half_g = ScalarField::Quadric { a: 1.0, b: vec![0.0, 0.0], c: 1.0 }
            .pow(-2.0)
            .scaled(2.0);
        let zero = ScalarField::constant(0.0);
        let b = MetricChart::FgHyperbolicNormalForm {
            boundary: Box::new(boundary),
            schouten: BoundarySchouten::Explicit {
                components: vec![half_g.clone(), zero.clone(), zero, half_g],
            },
        };
        let x = [0.4, 0.2, -0.3];
        let ga = a.metric(&x).unwrap();
        let gb = b.metric(&x).unwrap();
        for (u, v) in ga.iter().zip(&gb) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-13);
        }
    }

    #[test]
    fn embedded_round_sphere_is_round() {
        let chart = MetricChart::EmbeddedSphere {
            ambient: Box::new(MetricChart::euclidean(3)),
            center: vec![0.0; 3],
            semi_axes: vec![1.0; 3],
        };
        let u = [0.3, -0.7];
        let g = chart.metric(&u).unwrap();
        let expected = MetricChart::round_sphere(2).metric(&u).unwrap();
        for (a, b) in g.iter().zip(&expected) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-13);
        }
        let p = chart.embedding(&u).unwrap();
        let back = chart.embedding_preimage(&p).unwrap();
        assert_abs_diff_eq!(back[0], u[0], epsilon = 1e-14);
        assert_abs_diff_eq!(back[1], u[1], epsilon = 1e-14);
    }

    #[test]
    fn cap_chart_families() {
        let x = [0.2, -0.1, 0.3];
        let round = MetricChart::CapChart { ambient: vec![-1.0, 0.0, 0.0, 0.0, 0.0] };
        let hyper = MetricChart::CapChart { ambient: vec![0.0, 1.0, 0.0, 0.0, 0.0] };
        let flat = MetricChart::CapChart { ambient: vec![-1.0, 1.0, 0.0, 0.0, 0.0] };
        let pairs = [
            (round, MetricChart::round_sphere(3)),
            (hyper, MetricChart::poincare_ball(3)),
            (flat, MetricChart::euclidean(3)),
        ];
        for (cap, model) in pairs {
            let a = cap.metric(&x).unwrap();
            let b = model.metric(&x).unwrap();
            for (u, v) in a.iter().zip(&b) {
                assert_abs_diff_eq!(u, v, epsilon = 1e-13);
            }
        }
    }
}
