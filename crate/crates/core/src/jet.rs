//! Truncated multivariate Taylor series ("jets").
//!
//! A [`Jet`] of order `k` in `d` variables stores the Taylor coefficients
//! `f_α = ∂^α f(p) / α!` for every multi-index `|α| ≤ k`, densely, in graded
//! lexicographic order. Because the storage is graded, truncating a jet to a
//! lower order is a prefix slice, and the product of two jets is a plain
//! convolution over a precomputed table of index triples.
//!
//! Coefficients are generic over [`Scalar`], so a jet can have jets as
//! coefficients. The nested form `Jet<Jet<f64>>` is how two independent sets
//! of derivatives are carried at once without raising the truncation order
//! of either.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Highest supported truncation order.
pub const MAX_ORDER: usize = 4;
/// Highest supported number of variables.
pub const MAX_DIM: usize = 8;

/// Ring operations plus the handful of elementary functions the geometry
/// needs. Implemented by `f64` and by `Jet<T>` for any `T: Scalar`.
pub trait Scalar: Clone + fmt::Debug + Send + Sync + 'static {
    /// Innermost constant term.
    fn value(&self) -> f64;
    /// A constant with the same shape as `self`.
    fn constant_like(&self, v: f64) -> Self;
    fn zero_like(&self) -> Self {
        self.constant_like(0.0)
    }
    fn plus(&self, other: &Self) -> Self;
    fn minus(&self, other: &Self) -> Self;
    fn times(&self, other: &Self) -> Self;
    fn negate(&self) -> Self;
    fn scale(&self, k: f64) -> Self;
    fn add_const(&self, k: f64) -> Self;
    /// `self += a * b`
    fn accumulate(&mut self, a: &Self, b: &Self);
    fn add_assign_ref(&mut self, other: &Self);
    fn recip(&self) -> Result<Self>;
    fn exp(&self) -> Self;
    fn ln(&self) -> Result<Self>;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn powf(&self, r: f64) -> Result<Self>;

    fn divide(&self, other: &Self) -> Result<Self> {
        Ok(self.times(&other.recip()?))
    }
    fn sqrt(&self) -> Result<Self> {
        self.powf(0.5)
    }
    fn square(&self) -> Self {
        self.times(self)
    }
    /// Exactly zero in every coefficient.
    fn is_zero(&self) -> bool;
}

impl Scalar for f64 {
    fn value(&self) -> f64 {
        *self
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn constant_like(&self, v: f64) -> Self {
        v
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
    fn negate(&self) -> Self {
        -self
    }
    fn scale(&self, k: f64) -> Self {
        self * k
    }
    fn add_const(&self, k: f64) -> Self {
        self + k
    }
    fn accumulate(&mut self, a: &Self, b: &Self) {
        *self += a * b;
    }
    fn add_assign_ref(&mut self, other: &Self) {
        *self += other;
    }
    fn recip(&self) -> Result<Self> {
        if *self == 0.0 || !self.is_finite() {
            return Err(Error::Singularity(format!("reciprocal of {self}")));
        }
        Ok(1.0 / self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Result<Self> {
        if *self <= 0.0 {
            return Err(Error::Singularity(format!("log of {self}")));
        }
        Ok(f64::ln(*self))
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn powf(&self, r: f64) -> Result<Self> {
        let integral = r.fract() == 0.0;
        if (*self < 0.0 && !integral) || (*self == 0.0 && r < 0.0) {
            return Err(Error::Singularity(format!("{self} raised to {r}")));
        }
        Ok(f64::powf(*self, r))
    }
}

/// Index tables for one variable count, shared by all jets of that count.
pub struct Layout {
    dim: usize,
    multi: Vec<Vec<u8>>,
    /// `degree_end[k]` = number of multi-indices with `|α| ≤ k`.
    degree_end: [usize; MAX_ORDER + 1],
    lookup: HashMap<Vec<u8>, usize>,
    /// `(i, j, k)` with `α_i + α_j = α_k`, sorted by `|α_k|`.
    products: Vec<(u32, u32, u32)>,
    product_end: [usize; MAX_ORDER + 1],
    /// `raise[v][i]` = index of `α_i + e_v`, for `|α_i| < MAX_ORDER`.
    raise: Vec<Vec<u32>>,
    factorial: Vec<f64>,
}

impl fmt::Debug for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Layout(dim={})", self.dim)
    }
}

fn multi_indices_of_degree(dim: usize, degree: usize) -> Vec<Vec<u8>> {
    if dim == 1 {
        return vec![vec![degree as u8]];
    }
    let mut out = Vec::new();
    for first in (0..=degree).rev() {
        for mut rest in multi_indices_of_degree(dim - 1, degree - first) {
            rest.insert(0, first as u8);
            out.push(rest);
        }
    }
    out
}

impl Layout {
    fn build(dim: usize) -> Layout {
        let mut multi = Vec::new();
        let mut degree_end = [0; MAX_ORDER + 1];
        for (k, end) in degree_end.iter_mut().enumerate() {
            multi.extend(multi_indices_of_degree(dim, k));
            *end = multi.len();
        }
        let lookup: HashMap<Vec<u8>, usize> = multi
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();

        let mut products = Vec::new();
        let mut product_end = [0; MAX_ORDER + 1];
        for (k, end) in product_end.iter_mut().enumerate() {
            let lo = if k == 0 { 0 } else { degree_end[k - 1] };
            for out in lo..degree_end[k] {
                let gamma = &multi[out];
                for (i, alpha) in multi[..=out].iter().enumerate() {
                    if alpha.iter().zip(gamma).all(|(a, g)| a <= g) {
                        let beta: Vec<u8> = gamma.iter().zip(alpha).map(|(g, a)| g - a).collect();
                        products.push((i as u32, lookup[&beta] as u32, out as u32));
                    }
                }
            }
            *end = products.len();
        }

        let raise = (0..dim)
            .map(|v| {
                multi
                    .iter()
                    .map(|alpha| {
                        let degree: usize = alpha.iter().map(|&a| a as usize).sum();
                        if degree >= MAX_ORDER {
                            return u32::MAX;
                        }
                        let mut up = alpha.clone();
                        up[v] += 1;
                        lookup[&up] as u32
                    })
                    .collect()
            })
            .collect();

        let factorial = multi
            .iter()
            .map(|alpha| {
                alpha
                    .iter()
                    .map(|&a| (1..=a as u32).map(f64::from).product::<f64>())
                    .product()
            })
            .collect();

        Layout {
            dim,
            multi,
            degree_end,
            lookup,
            products,
            product_end,
            raise,
            factorial,
        }
    }

    fn get(dim: usize) -> Result<&'static Layout> {
        static LAYOUTS: [OnceLock<Layout>; MAX_DIM + 1] = [const { OnceLock::new() }; MAX_DIM + 1];
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Argument(format!(
                "jet dimension {dim} outside 1..={MAX_DIM}"
            )));
        }
        Ok(LAYOUTS[dim].get_or_init(|| Layout::build(dim)))
    }

    fn len(&self, order: usize) -> usize {
        self.degree_end[order]
    }
}

/// Truncated Taylor expansion of a scalar about a base point.
#[derive(Clone)]
pub struct Jet<T = f64> {
    layout: &'static Layout,
    order: usize,
    coeffs: Vec<T>,
}

impl<T: Scalar> fmt::Debug for Jet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("dim", &self.layout.dim)
            .field("order", &self.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        return Err(Error::Argument(format!(
            "jet order {order} exceeds {MAX_ORDER}"
        )));
    }
    Ok(())
}

/// Jet of the coordinate function `x^index` about a point whose
/// `index`-th coordinate is `base_value`.
pub fn variable(dim: usize, order: usize, index: usize, base_value: f64) -> Result<Jet> {
    Jet::variable_with(dim, order, index, base_value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

/// Checked binary arithmetic: both operands must share dimension and order.
pub fn combine<T: Scalar>(a: &Jet<T>, b: &Jet<T>, op: Op) -> Result<Jet<T>> {
    if a.dim() != b.dim() || a.order != b.order {
        return Err(Error::Argument(format!(
            "jet shapes differ: (dim {}, order {}) vs (dim {}, order {})",
            a.dim(),
            a.order,
            b.dim(),
            b.order
        )));
    }
    Ok(match op {
        Op::Add => a.plus(b),
        Op::Sub => a.minus(b),
        Op::Mul => a.times(b),
        Op::Div => a.divide(b)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Elementary {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Pow(f64),
}

pub fn elementary<T: Scalar>(a: &Jet<T>, f: Elementary) -> Result<Jet<T>> {
    match f {
        Elementary::Exp => Ok(a.exp()),
        Elementary::Log => a.ln(),
        Elementary::Sqrt => {
            if a.value() <= 0.0 {
                return Err(Error::Singularity(format!(
                    "sqrt of jet with constant term {}",
                    a.value()
                )));
            }
            a.sqrt()
        }
        Elementary::Sin => Ok(a.sin()),
        Elementary::Cos => Ok(a.cos()),
        Elementary::Pow(r) => a.powf(r),
    }
}

impl<T: Scalar> Jet<T> {
    pub fn constant(dim: usize, order: usize, value: T) -> Result<Self> {
        check_order(order)?;
        let layout = Layout::get(dim)?;
        let zero = value.zero_like();
        let mut coeffs = vec![zero; layout.len(order)];
        coeffs[0] = value;
        Ok(Jet {
            layout,
            order,
            coeffs,
        })
    }

    /// Coordinate jet with a constant term of arbitrary scalar type.
    pub fn variable_with(dim: usize, order: usize, index: usize, base: T) -> Result<Self> {
        if index >= dim {
            return Err(Error::Argument(format!(
                "coordinate index {index} out of range for dimension {dim}"
            )));
        }
        let one = base.constant_like(1.0);
        let mut jet = Jet::constant(dim, order, base)?;
        if order >= 1 {
            jet.coeffs[1 + index] = one;
        }
        Ok(jet)
    }

    pub fn from_coefficients(dim: usize, order: usize, coeffs: Vec<T>) -> Result<Self> {
        check_order(order)?;
        let layout = Layout::get(dim)?;
        if coeffs.len() != layout.len(order) {
            return Err(Error::Argument(format!(
                "expected {} coefficients, got {}",
                layout.len(order),
                coeffs.len()
            )));
        }
        Ok(Jet {
            layout,
            order,
            coeffs,
        })
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coeffs
    }

    /// Multi-indices in storage order.
    pub fn multi_indices(&self) -> impl Iterator<Item = &[u8]> {
        self.layout.multi[..self.coeffs.len()]
            .iter()
            .map(Vec::as_slice)
    }

    pub fn constant_term(&self) -> &T {
        &self.coeffs[0]
    }

    pub fn into_constant_term(mut self) -> T {
        self.coeffs.swap_remove(0)
    }

    fn index_of(&self, alpha: &[u8]) -> Result<usize> {
        if alpha.len() != self.dim() {
            return Err(Error::Argument(format!(
                "multi-index of length {} for a jet in {} variables",
                alpha.len(),
                self.dim()
            )));
        }
        let degree: usize = alpha.iter().map(|&a| a as usize).sum();
        if degree > self.order {
            return Err(Error::Truncation {
                needed: degree,
                available: self.order,
            });
        }
        Ok(self.layout.lookup[alpha])
    }

    /// Stored Taylor coefficient `∂^α f / α!`.
    pub fn coefficient(&self, alpha: &[u8]) -> Result<&T> {
        Ok(&self.coeffs[self.index_of(alpha)?])
    }

    /// `∂^α f` at the base point: the stored coefficient times `α!`.
    pub fn derivative(&self, alpha: &[u8]) -> Result<T> {
        let i = self.index_of(alpha)?;
        Ok(self.coeffs[i].scale(self.layout.factorial[i]))
    }

    /// Jet of `∂f/∂x^v`, one order lower.
    pub fn partial(&self, v: usize) -> Result<Jet<T>> {
        if v >= self.dim() {
            return Err(Error::Argument(format!(
                "variable {v} out of range for dimension {}",
                self.dim()
            )));
        }
        if self.order == 0 {
            return Err(Error::Truncation {
                needed: 1,
                available: 0,
            });
        }
        let order = self.order - 1;
        let n = self.layout.len(order);
        let raise = &self.layout.raise[v];
        let coeffs = (0..n)
            .map(|i| {
                let up = raise[i] as usize;
                let factor = f64::from(self.layout.multi[up][v]);
                self.coeffs[up].scale(factor)
            })
            .collect();
        Ok(Jet {
            layout: self.layout,
            order,
            coeffs,
        })
    }

    pub fn truncated(&self, order: usize) -> Jet<T> {
        let order = order.min(self.order);
        Jet {
            layout: self.layout,
            order,
            coeffs: self.coeffs[..self.layout.len(order)].to_vec(),
        }
    }

    fn truncate_in_place(&mut self, order: usize) {
        if order < self.order {
            self.order = order;
            self.coeffs.truncate(self.layout.len(order));
        }
    }

    fn assert_same_dim(&self, other: &Jet<T>) {
        assert_eq!(
            self.layout.dim, other.layout.dim,
            "jets in different numbers of variables"
        );
    }

    /// Multiplies every coefficient by a scalar of the coefficient type.
    pub fn scale_by(&self, k: &T) -> Jet<T> {
        Jet {
            layout: self.layout,
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c.times(k)).collect(),
        }
    }

    /// `f ∘ self`, given `taylor[k] = f^(k)(c) / k!` at the constant term `c`.
    fn compose(&self, taylor: &[T]) -> Jet<T> {
        let mut shifted = self.clone();
        shifted.coeffs[0] = shifted.coeffs[0].zero_like();
        let mut out = Jet {
            layout: self.layout,
            order: self.order,
            coeffs: vec![shifted.coeffs[0].clone(); self.coeffs.len()],
        };
        out.coeffs[0] = taylor[self.order].clone();
        for k in (0..self.order).rev() {
            out = out.times(&shifted);
            out.coeffs[0].add_assign_ref(&taylor[k]);
        }
        out
    }

    fn integer_power(&self, n: u32) -> Jet<T> {
        let mut result = self.constant_like(1.0);
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = result.times(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.times(&base);
            }
        }
        result
    }
}

impl<T: Scalar> Scalar for Jet<T> {
    fn value(&self) -> f64 {
        self.coeffs[0].value()
    }

    fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Scalar::is_zero)
    }

    fn constant_like(&self, v: f64) -> Self {
        let zero = self.coeffs[0].zero_like();
        let mut coeffs = vec![zero; self.coeffs.len()];
        coeffs[0] = self.coeffs[0].constant_like(v);
        Jet {
            layout: self.layout,
            order: self.order,
            coeffs,
        }
    }

    fn plus(&self, other: &Self) -> Self {
        self.assert_same_dim(other);
        let order = self.order.min(other.order);
        let n = self.layout.len(order);
        Jet {
            layout: self.layout,
            order,
            coeffs: (0..n).map(|i| self.coeffs[i].plus(&other.coeffs[i])).collect(),
        }
    }

    fn minus(&self, other: &Self) -> Self {
        self.assert_same_dim(other);
        let order = self.order.min(other.order);
        let n = self.layout.len(order);
        Jet {
            layout: self.layout,
            order,
            coeffs: (0..n)
                .map(|i| self.coeffs[i].minus(&other.coeffs[i]))
                .collect(),
        }
    }

    fn times(&self, other: &Self) -> Self {
        let mut out = self.zero_like();
        out.accumulate(self, other);
        out
    }

    fn negate(&self) -> Self {
        Jet {
            layout: self.layout,
            order: self.order,
            coeffs: self.coeffs.iter().map(Scalar::negate).collect(),
        }
    }

    fn scale(&self, k: f64) -> Self {
        Jet {
            layout: self.layout,
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c.scale(k)).collect(),
        }
    }

    fn add_const(&self, k: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] = out.coeffs[0].add_const(k);
        out
    }

    fn accumulate(&mut self, a: &Self, b: &Self) {
        self.assert_same_dim(a);
        self.assert_same_dim(b);
        let order = self.order.min(a.order).min(b.order);
        self.truncate_in_place(order);
        let products = &self.layout.products[..self.layout.product_end[order]];
        for &(i, j, k) in products {
            self.coeffs[k as usize].accumulate(&a.coeffs[i as usize], &b.coeffs[j as usize]);
        }
    }

    fn add_assign_ref(&mut self, other: &Self) {
        self.assert_same_dim(other);
        self.truncate_in_place(other.order);
        for (c, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            c.add_assign_ref(o);
        }
    }

    fn recip(&self) -> Result<Self> {
        let inv = self.coeffs[0].recip()?;
        let mut taylor = Vec::with_capacity(self.order + 1);
        let mut term = inv.clone();
        for k in 0..=self.order {
            taylor.push(if k % 2 == 0 { term.clone() } else { term.negate() });
            term = term.times(&inv);
        }
        Ok(self.compose(&taylor))
    }

    fn exp(&self) -> Self {
        let e = self.coeffs[0].exp();
        let mut taylor = Vec::with_capacity(self.order + 1);
        let mut factorial = 1.0;
        for k in 0..=self.order {
            if k > 0 {
                factorial *= k as f64;
            }
            taylor.push(e.scale(1.0 / factorial));
        }
        self.compose(&taylor)
    }

    fn ln(&self) -> Result<Self> {
        let c = &self.coeffs[0];
        if c.value() <= 0.0 {
            return Err(Error::Singularity(format!(
                "log of jet with constant term {}",
                c.value()
            )));
        }
        let inv = c.recip()?;
        let mut taylor = vec![c.ln()?];
        let mut power = inv.clone();
        for k in 1..=self.order {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            taylor.push(power.scale(sign / k as f64));
            power = power.times(&inv);
        }
        Ok(self.compose(&taylor))
    }

    fn sin(&self) -> Self {
        let (s, c) = (self.coeffs[0].sin(), self.coeffs[0].cos());
        let cycle = [s.clone(), c.clone(), s.negate(), c.negate()];
        let mut taylor = Vec::with_capacity(self.order + 1);
        let mut factorial = 1.0;
        for k in 0..=self.order {
            if k > 0 {
                factorial *= k as f64;
            }
            taylor.push(cycle[k % 4].scale(1.0 / factorial));
        }
        self.compose(&taylor)
    }

    fn cos(&self) -> Self {
        let (s, c) = (self.coeffs[0].sin(), self.coeffs[0].cos());
        let cycle = [c.clone(), s.negate(), c.negate(), s.clone()];
        let mut taylor = Vec::with_capacity(self.order + 1);
        let mut factorial = 1.0;
        for k in 0..=self.order {
            if k > 0 {
                factorial *= k as f64;
            }
            taylor.push(cycle[k % 4].scale(1.0 / factorial));
        }
        self.compose(&taylor)
    }

    fn powf(&self, r: f64) -> Result<Self> {
        if r >= 0.0 && r.fract() == 0.0 && r <= 64.0 {
            return Ok(self.integer_power(r as u32));
        }
        let c = &self.coeffs[0];
        if c.value() == 0.0 {
            return Err(Error::Singularity(format!(
                "jet with zero constant term raised to {r}"
            )));
        }
        let base = c.powf(r)?;
        let inv = c.recip()?;
        let mut taylor = Vec::with_capacity(self.order + 1);
        let mut term = base;
        for k in 0..=self.order {
            taylor.push(term.clone());
            // binom(r, k+1) c^(r-k-1) = binom(r, k) c^(r-k) * (r - k) / (k + 1) / c
            term = term.times(&inv).scale((r - k as f64) / (k as f64 + 1.0));
        }
        Ok(self.compose(&taylor))
    }
}

macro_rules! jet_binop {
    ($tr:ident, $method:ident, $scalar_method:ident) => {
        impl<T: Scalar> $tr<&Jet<T>> for &Jet<T> {
            type Output = Jet<T>;
            fn $method(self, rhs: &Jet<T>) -> Jet<T> {
                self.$scalar_method(rhs)
            }
        }
        impl<T: Scalar> $tr<Jet<T>> for Jet<T> {
            type Output = Jet<T>;
            fn $method(self, rhs: Jet<T>) -> Jet<T> {
                self.$scalar_method(&rhs)
            }
        }
        impl<T: Scalar> $tr<&Jet<T>> for Jet<T> {
            type Output = Jet<T>;
            fn $method(self, rhs: &Jet<T>) -> Jet<T> {
                self.$scalar_method(rhs)
            }
        }
    };
}

jet_binop!(Add, add, plus);
jet_binop!(Sub, sub, minus);
jet_binop!(Mul, mul, times);

impl<T: Scalar> Neg for Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        self.negate()
    }
}

impl<T: Scalar> Add<f64> for Jet<T> {
    type Output = Jet<T>;
    fn add(self, rhs: f64) -> Jet<T> {
        self.add_const(rhs)
    }
}

impl<T: Scalar> Mul<f64> for Jet<T> {
    type Output = Jet<T>;
    fn mul(self, rhs: f64) -> Jet<T> {
        self.scale(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn coordinate_jet_layout() {
        let x = variable(2, 2, 0, 3.0).unwrap();
        assert_eq!(*x.coefficient(&[0, 0]).unwrap(), 3.0);
        assert_eq!(*x.coefficient(&[1, 0]).unwrap(), 1.0);
        assert_eq!(*x.coefficient(&[0, 1]).unwrap(), 0.0);
        assert_eq!(*x.coefficient(&[2, 0]).unwrap(), 0.0);
        assert_eq!(*x.coefficient(&[1, 1]).unwrap(), 0.0);
    }

    #[test]
    fn order_zero_is_constant() {
        let x = variable(1, 0, 0, 5.0).unwrap();
        assert_eq!(x.coefficients(), &[5.0]);
    }

    #[test]
    fn cube_of_third_coordinate() {
        let z = variable(3, 4, 2, 0.0).unwrap();
        let cube = z.times(&z).times(&z);
        for alpha in cube.multi_indices() {
            let expected = if alpha == [0, 0, 3] { 1.0 } else { 0.0 };
            assert_eq!(*cube.coefficient(alpha).unwrap(), expected, "{alpha:?}");
        }
    }

    #[test]
    fn index_out_of_range() {
        assert!(matches!(variable(2, 2, 2, 0.0), Err(Error::Argument(_))));
        assert!(matches!(variable(2, 5, 0, 0.0), Err(Error::Argument(_))));
    }

    #[test]
    fn product_of_coordinates() {
        let x = variable(1, 2, 0, 0.0).unwrap();
        let sq = combine(&x, &x, Op::Mul).unwrap();
        assert_eq!(sq.coefficients(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn geometric_series() {
        let one_plus_x = variable(1, 3, 0, 0.0).unwrap() + 1.0;
        let one = Jet::constant(1, 3, 1.0).unwrap();
        let q = combine(&one, &one_plus_x, Op::Div).unwrap();
        assert_eq!(q.coefficients(), &[1.0, -1.0, 1.0, -1.0]);
    }

    #[test]
    fn additive_inverse() {
        let x = variable(2, 3, 1, 0.4).unwrap();
        let f = x.sin().exp();
        let zero = combine(&f, &f.negate(), Op::Add).unwrap();
        assert!(zero.coefficients().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn shape_mismatch_and_zero_division() {
        let a = variable(2, 2, 0, 1.0).unwrap();
        let b = variable(2, 3, 0, 1.0).unwrap();
        assert!(combine(&a, &b, Op::Add).is_err());
        let x = variable(2, 2, 0, 0.0).unwrap();
        assert!(matches!(
            combine(&a, &x, Op::Div),
            Err(Error::Singularity(_))
        ));
    }

    #[test]
    fn exp_of_zero() {
        let z = Jet::constant(2, 3, 0.0).unwrap();
        let e = elementary(&z, Elementary::Exp).unwrap();
        assert_eq!(e.coefficients()[0], 1.0);
        assert!(e.coefficients()[1..].iter().all(|&c| c == 0.0));
    }

    #[test]
    fn binomial_series_sqrt() {
        let f = variable(1, 2, 0, 0.0).unwrap() + 1.0;
        let s = elementary(&f, Elementary::Sqrt).unwrap();
        assert_abs_diff_eq!(s.coefficients()[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.coefficients()[1], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.coefficients()[2], -0.125, epsilon = 1e-15);
    }

    #[test]
    fn negative_power_series() {
        let f = variable(1, 2, 0, 0.0).unwrap().negate() + 1.0;
        let p = elementary(&f, Elementary::Pow(-2.0)).unwrap();
        assert_abs_diff_eq!(p.coefficients()[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.coefficients()[1], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.coefficients()[2], 3.0, epsilon = 1e-15);
    }

    #[test]
    fn domain_violations() {
        let f = variable(1, 2, 0, -1.0).unwrap();
        assert!(matches!(
            elementary(&f, Elementary::Log),
            Err(Error::Singularity(_))
        ));
        assert!(matches!(
            elementary(&f, Elementary::Sqrt),
            Err(Error::Singularity(_))
        ));
        let zero = variable(1, 2, 0, 0.0).unwrap();
        assert!(elementary(&zero, Elementary::Sqrt).is_err());
        assert!(elementary(&zero, Elementary::Pow(-1.0)).is_err());
        assert!(elementary(&zero, Elementary::Pow(2.0)).is_ok());
    }

    #[test]
    fn derivative_normalization() {
        let x = variable(1, 2, 0, 0.0).unwrap();
        assert_eq!(x.times(&x).derivative(&[2]).unwrap(), 2.0);
        let c = Jet::constant(2, 3, 7.0).unwrap();
        assert_eq!(c.derivative(&[1, 2]).unwrap(), 0.0);
        let e = variable(1, 4, 0, 0.0).unwrap().exp();
        assert_abs_diff_eq!(e.derivative(&[3]).unwrap(), 1.0, epsilon = 1e-14);
        assert!(matches!(
            e.derivative(&[5]),
            Err(Error::Truncation { needed: 5, available: 4 })
        ));
    }

    #[test]
    fn partial_lowers_order() {
        // f = x^2 y + y^3 about (1, 2)
        let x = variable(2, 3, 0, 1.0).unwrap();
        let y = variable(2, 3, 1, 2.0).unwrap();
        let f = x.times(&x).times(&y).plus(&y.times(&y).times(&y));
        let fy = f.partial(1).unwrap();
        assert_eq!(fy.order(), 2);
        // ∂_y f = x^2 + 3 y^2 -> 13 at base, ∂_x = 2, ∂_y = 12
        assert_abs_diff_eq!(*fy.constant_term(), 13.0, epsilon = 1e-13);
        assert_abs_diff_eq!(fy.derivative(&[1, 0]).unwrap(), 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(fy.derivative(&[0, 1]).unwrap(), 12.0, epsilon = 1e-13);
        assert_abs_diff_eq!(fy.derivative(&[0, 2]).unwrap(), 6.0, epsilon = 1e-13);
    }

    #[test]
    fn nested_jets_carry_two_derivative_sets() {
        // f(x) = x^3 at x = 0.5 + e + y; inner order 2 in y, outer order 2 in e
        let outer = variable(1, 2, 0, 0.5).unwrap();
        let inner: Jet<Jet> = Jet::variable_with(1, 2, 0, outer).unwrap();
        let f = inner.times(&inner).times(&inner);
        // inner coefficient of y^1 is 3 (0.5 + e)^2 = 0.75 + 3 e + 3 e^2
        let c1 = &f.coefficients()[1];
        assert_abs_diff_eq!(c1.coefficients()[0], 0.75, epsilon = 1e-14);
        assert_abs_diff_eq!(c1.coefficients()[1], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c1.coefficients()[2], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn mixed_orders_truncate_to_the_lower() {
        let a = variable(2, 4, 0, 1.0).unwrap();
        let b = variable(2, 2, 1, 1.0).unwrap();
        assert_eq!(a.plus(&b).order(), 2);
        assert_eq!(a.times(&b).order(), 2);
    }
}
