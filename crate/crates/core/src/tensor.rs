//! Pointwise multilinear algebra with positional indices.
//!
//! A [`Tensor`] carries a variance marker per slot, an integer conformal
//! weight and dense row-major components (slot 0 varies slowest). Spacetime
//! slots have extent `d`; tractor slots have extent `d + 2` and use the raw
//! splitting order `(σ, μ_1 … μ_d, ρ)`.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{Jet, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Upper,
    Lower,
    TractorUpper,
    TractorLower,
}

impl Slot {
    pub fn is_tractor(self) -> bool {
        matches!(self, Slot::TractorUpper | Slot::TractorLower)
    }

    pub fn is_upper(self) -> bool {
        matches!(self, Slot::Upper | Slot::TractorUpper)
    }

    pub fn flipped(self) -> Slot {
        match self {
            Slot::Upper => Slot::Lower,
            Slot::Lower => Slot::Upper,
            Slot::TractorUpper => Slot::TractorLower,
            Slot::TractorLower => Slot::TractorUpper,
        }
    }

    pub fn extent(self, dim: usize) -> usize {
        if self.is_tractor() {
            dim + 2
        } else {
            dim
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryMode {
    Sym,
    Antisym,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor<S = f64> {
    pub dim: usize,
    pub slots: Vec<Slot>,
    pub weight: i32,
    pub comps: Vec<S>,
}

pub type TensorValue = Tensor<f64>;

pub(crate) fn shape(dim: usize, slots: &[Slot]) -> Vec<usize> {
    slots.iter().map(|s| s.extent(dim)).collect()
}

pub(crate) fn flat_index(shape: &[usize], idx: &[usize]) -> usize {
    idx.iter().zip(shape).fold(0, |acc, (&i, &n)| acc * n + i)
}

/// All multi-indices of a shape, in storage order.
pub(crate) fn all_indices(shape: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: usize = shape.iter().product();
    (0..total).map(move |mut k| {
        let mut idx = vec![0; shape.len()];
        for (slot, &n) in shape.iter().enumerate().rev() {
            idx[slot] = k % n;
            k /= n;
        }
        idx
    })
}

impl<S: Scalar> Tensor<S> {
    pub fn from_components(dim: usize, slots: Vec<Slot>, weight: i32, comps: Vec<S>) -> Result<Self> {
        let n: usize = shape(dim, &slots).iter().product();
        if comps.len() != n {
            return Err(Error::Argument(format!(
                "tensor of shape {:?} needs {n} components, got {}",
                shape(dim, &slots),
                comps.len()
            )));
        }
        Ok(Tensor {
            dim,
            slots,
            weight,
            comps,
        })
    }

    pub fn from_fn(
        dim: usize,
        slots: Vec<Slot>,
        weight: i32,
        mut f: impl FnMut(&[usize]) -> S,
    ) -> Self {
        let comps = all_indices(&shape(dim, &slots)).map(|i| f(&i)).collect();
        Tensor {
            dim,
            slots,
            weight,
            comps,
        }
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        shape(self.dim, &self.slots)
    }

    pub fn get(&self, idx: &[usize]) -> &S {
        &self.comps[flat_index(&self.shape(), idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: S) {
        let i = flat_index(&self.shape(), idx);
        self.comps[i] = value;
    }

    fn check_slot(&self, i: usize) -> Result<()> {
        if i >= self.rank() {
            return Err(Error::Argument(format!(
                "slot {i} out of range for rank {}",
                self.rank()
            )));
        }
        Ok(())
    }

    /// Diagonal sum over two slots of opposite variance.
    pub fn contract(&self, i: usize, j: usize) -> Result<Tensor<S>> {
        self.check_slot(i)?;
        self.check_slot(j)?;
        if i == j || self.slots[i] != self.slots[j].flipped() {
            return Err(Error::Variance(format!(
                "cannot contract slot {i} ({:?}) with slot {j} ({:?})",
                self.slots[i], self.slots[j]
            )));
        }
        let shp = self.shape();
        let n = shp[i];
        let rest: Vec<Slot> = self
            .slots
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i && k != j)
            .map(|(_, &s)| s)
            .collect();
        let zero = self.comps[0].zero_like();
        Ok(Tensor::from_fn(self.dim, rest, self.weight, |idx| {
            let mut full = Vec::with_capacity(shp.len());
            let mut it = idx.iter();
            for k in 0..shp.len() {
                full.push(if k == i || k == j { 0 } else { *it.next().unwrap() });
            }
            let mut acc = zero.clone();
            for e in 0..n {
                full[i] = e;
                full[j] = e;
                acc.add_assign_ref(&self.comps[flat_index(&shp, &full)]);
            }
            acc
        }))
    }

    /// Reorders slots: slot `k` of the result is slot `perm[k]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<Tensor<S>> {
        if perm.len() != self.rank() || !perm.iter().copied().sorted().eq(0..self.rank()) {
            return Err(Error::Argument(format!("{perm:?} is not a permutation")));
        }
        let shp = self.shape();
        let slots = perm.iter().map(|&p| self.slots[p]).collect();
        let mut src = vec![0; shp.len()];
        Ok(Tensor::from_fn(self.dim, slots, self.weight, |idx| {
            for (k, &p) in perm.iter().enumerate() {
                src[p] = idx[k];
            }
            self.comps[flat_index(&shp, &src)].clone()
        }))
    }

    /// Averages over permutations of the named slots (signed for
    /// [`SymmetryMode::Antisym`]).
    pub fn symmetrize(&self, slots: &[usize], mode: SymmetryMode) -> Result<Tensor<S>> {
        for &s in slots {
            self.check_slot(s)?;
        }
        if slots.iter().map(|&s| self.slots[s]).dedup().count() > 1 {
            return Err(Error::Variance(format!(
                "slots {slots:?} have mixed variance"
            )));
        }
        if slots.iter().duplicates().next().is_some() {
            return Err(Error::Argument(format!("repeated slot in {slots:?}")));
        }
        let identity: Vec<usize> = (0..self.rank()).collect();
        let mut acc: Option<Tensor<S>> = None;
        let mut count = 0.0;
        for p in slots.iter().copied().permutations(slots.len()) {
            let mut perm = identity.clone();
            for (k, &s) in slots.iter().enumerate() {
                perm[s] = p[k];
            }
            let sign = match mode {
                SymmetryMode::Sym => 1.0,
                SymmetryMode::Antisym => permutation_sign(&p, slots),
            };
            let term = self.permute(&perm)?.scale(sign);
            acc = Some(match acc {
                None => term,
                Some(a) => a.add(&term)?,
            });
            count += 1.0;
        }
        Ok(acc.expect("at least one permutation").scale(1.0 / count))
    }

    /// Flips the variance of one slot using `metric` (lowering) or
    /// `inverse` (raising). The weight shifts by the weight of whichever
    /// was used.
    pub fn raise_lower(
        &self,
        slot: usize,
        metric: &Tensor<S>,
        inverse: &Tensor<S>,
    ) -> Result<Tensor<S>> {
        self.check_slot(slot)?;
        let kind = self.slots[slot];
        let (lower_kind, upper_kind) = if kind.is_tractor() {
            (Slot::TractorLower, Slot::TractorUpper)
        } else {
            (Slot::Lower, Slot::Upper)
        };
        if metric.slots != [lower_kind, lower_kind] || inverse.slots != [upper_kind, upper_kind] {
            return Err(Error::Variance(
                "metric must be rank-2 lower and inverse rank-2 upper of the slot's kind".into(),
            ));
        }
        check_inverse_pair(metric, inverse)?;
        let m = if kind.is_upper() { metric } else { inverse };
        let mut out = m.outer(self).contract(1, 2 + slot)?;
        // the new index sits in front; move it back into place
        let mut perm: Vec<usize> = (1..=slot).collect();
        perm.push(0);
        perm.extend(slot + 1..self.rank());
        out = out.permute(&perm)?;
        Ok(out)
    }

    pub fn outer(&self, other: &Tensor<S>) -> Tensor<S> {
        assert_eq!(self.dim, other.dim, "outer product across dimensions");
        let comps = self
            .comps
            .iter()
            .flat_map(|a| other.comps.iter().map(move |b| a.times(b)))
            .collect();
        let mut slots = self.slots.clone();
        slots.extend(&other.slots);
        Tensor {
            dim: self.dim,
            slots,
            weight: self.weight + other.weight,
            comps,
        }
    }

    pub fn add(&self, other: &Tensor<S>) -> Result<Tensor<S>> {
        self.same_shape(other)?;
        Ok(Tensor {
            dim: self.dim,
            slots: self.slots.clone(),
            weight: self.weight,
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a.plus(b)).collect(),
        })
    }

    pub fn sub(&self, other: &Tensor<S>) -> Result<Tensor<S>> {
        self.same_shape(other)?;
        Ok(Tensor {
            dim: self.dim,
            slots: self.slots.clone(),
            weight: self.weight,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.minus(b))
                .collect(),
        })
    }

    pub fn scale(&self, k: f64) -> Tensor<S> {
        Tensor {
            dim: self.dim,
            slots: self.slots.clone(),
            weight: self.weight,
            comps: self.comps.iter().map(|c| c.scale(k)).collect(),
        }
    }

    fn same_shape(&self, other: &Tensor<S>) -> Result<()> {
        if self.dim != other.dim || self.slots != other.slots {
            return Err(Error::Variance(format!(
                "shape mismatch: {:?} vs {:?}",
                self.slots, other.slots
            )));
        }
        if self.weight != other.weight {
            return Err(Error::Argument(format!(
                "adding tensors of weight {} and {}",
                self.weight, other.weight
            )));
        }
        Ok(())
    }

    /// Constant terms of the components.
    pub fn values(&self) -> TensorValue {
        Tensor {
            dim: self.dim,
            slots: self.slots.clone(),
            weight: self.weight,
            comps: self.comps.iter().map(Scalar::value).collect(),
        }
    }

    /// `t - (tr t / d) metric` for a rank-2 lower tensor.
    pub fn trace_free_part(&self, metric: &Tensor<S>, inverse: &Tensor<S>) -> Result<Tensor<S>> {
        if self.slots != [Slot::Lower, Slot::Lower] {
            return Err(Error::Variance("trace-free part needs a rank-2 lower tensor".into()));
        }
        check_inverse_pair(metric, inverse)?;
        let trace = inverse.outer(self).contract(0, 2)?.contract(0, 1)?;
        let t = trace.comps[0].scale(1.0 / self.dim as f64);
        let mut out = self.clone();
        for (o, m) in out.comps.iter_mut().zip(&metric.comps) {
            *o = o.minus(&m.times(&t));
        }
        Ok(out)
    }
}

impl<T: Scalar> Tensor<Jet<T>> {
    /// Tensor of coefficient-level constant terms (strips one jet layer).
    pub fn constant_terms(&self) -> Tensor<T> {
        Tensor {
            dim: self.dim,
            slots: self.slots.clone(),
            weight: self.weight,
            comps: self.comps.iter().map(|c| c.constant_term().clone()).collect(),
        }
    }
}

impl TensorValue {
    pub fn zeros(dim: usize, slots: Vec<Slot>, weight: i32) -> Self {
        let n = shape(dim, &slots).iter().product();
        Tensor {
            dim,
            slots,
            weight,
            comps: vec![0.0; n],
        }
    }

    pub fn scalar(dim: usize, weight: i32, value: f64) -> Self {
        Tensor {
            dim,
            slots: Vec::new(),
            weight,
            comps: vec![value],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Tensor::from_fn(dim, vec![Slot::Upper, Slot::Lower], 0, |i| {
            if i[0] == i[1] {
                1.0
            } else {
                0.0
            }
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn norm(&self) -> f64 {
        self.comps.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Matrix inverse of a rank-2 lower metric, returned with upper slots.
    pub fn inverse_metric(&self) -> Result<TensorValue> {
        let (lower, upper) = match self.slots.as_slice() {
            [Slot::Lower, Slot::Lower] => (Slot::Lower, Slot::Upper),
            [Slot::TractorLower, Slot::TractorLower] => (Slot::TractorLower, Slot::TractorUpper),
            _ => return Err(Error::Variance("metric must be rank-2 lower".into())),
        };
        let n = lower.extent(self.dim);
        let inv = invert_matrix(&self.comps, n)?;
        Ok(Tensor {
            dim: self.dim,
            slots: vec![upper, upper],
            weight: -self.weight,
            comps: inv,
        })
    }
}

fn check_inverse_pair<S: Scalar>(metric: &Tensor<S>, inverse: &Tensor<S>) -> Result<()> {
    let n = metric.slots[0].extent(metric.dim);
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += metric.comps[i * n + k].value() * inverse.comps[k * n + j].value();
            }
            let target = if i == j { 1.0 } else { 0.0 };
            if !acc.is_finite() || (acc - target).abs() > 1e-8 {
                return Err(Error::Singularity(
                    "metric and inverse do not multiply to the identity".into(),
                ));
            }
        }
    }
    Ok(())
}

fn permutation_sign(p: &[usize], reference: &[usize]) -> f64 {
    let pos: Vec<usize> = p
        .iter()
        .map(|x| reference.iter().position(|r| r == x).unwrap())
        .collect();
    let mut inversions = 0;
    for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            if pos[i] > pos[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Gauss–Jordan inverse with partial pivoting (pivot chosen on constant
/// terms), valid for any [`Scalar`] entries.
pub fn invert_matrix<S: Scalar>(m: &[S], n: usize) -> Result<Vec<S>> {
    assert_eq!(m.len(), n * n);
    let scale = m.iter().fold(0.0f64, |acc, x| acc.max(x.value().abs()));
    let mut a = m.to_vec();
    let one = m[0].constant_like(1.0);
    let zero = m[0].zero_like();
    let mut inv: Vec<S> = (0..n * n)
        .map(|k| if k / n == k % n { one.clone() } else { zero.clone() })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                a[i * n + col]
                    .value()
                    .abs()
                    .total_cmp(&a[j * n + col].value().abs())
            })
            .unwrap();
        if !(a[pivot * n + col].value().abs() > 1e-14 * scale.max(1e-300)) {
            return Err(Error::Singularity("singular matrix".into()));
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
                inv.swap(pivot * n + k, col * n + k);
            }
        }
        let r = a[col * n + col].recip()?;
        for k in 0..n {
            a[col * n + k] = a[col * n + k].times(&r);
            inv[col * n + k] = inv[col * n + k].times(&r);
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row * n + col].clone();
            for k in 0..n {
                let da = f.times(&a[col * n + k]);
                a[row * n + k] = a[row * n + k].minus(&da);
                let di = f.times(&inv[col * n + k]);
                inv[row * n + k] = inv[row * n + k].minus(&di);
            }
        }
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn vector(values: &[f64], slot: Slot) -> TensorValue {
        Tensor::from_components(values.len(), vec![slot], 0, values.to_vec()).unwrap()
    }

    #[test]
    fn trace_of_identity() {
        let t = TensorValue::identity(4).contract(0, 1).unwrap();
        assert_eq!(t.comps, vec![4.0]);
    }

    #[test]
    fn dot_product_by_contraction() {
        let u = vector(&[1.0, 2.0, 3.0], Slot::Upper);
        let v = vector(&[4.0, -1.0, 0.5], Slot::Lower);
        let t = u.outer(&v).contract(0, 1).unwrap();
        assert_abs_diff_eq!(t.comps[0], 4.0 - 2.0 + 1.5);
    }

    #[test]
    fn same_variance_contraction_rejected() {
        let t = TensorValue::zeros(3, vec![Slot::Lower, Slot::Lower], 0);
        assert!(matches!(t.contract(0, 1), Err(Error::Variance(_))));
    }

    #[test]
    fn antisymmetrizing_a_symmetric_tensor() {
        let t = Tensor::from_fn(3, vec![Slot::Lower, Slot::Lower], 0, |i| (i[0] + i[1]) as f64);
        let a = t.symmetrize(&[0, 1], SymmetryMode::Antisym).unwrap();
        assert!(a.max_abs() < 1e-15);
    }

    #[test]
    fn symmetrize_is_idempotent() {
        let t = Tensor::from_fn(3, vec![Slot::Lower; 3], 0, |i| {
            (i[0] as f64 * 1.3 - i[1] as f64 * 0.7 + (i[2] * i[0]) as f64).sin()
        });
        let once = t.symmetrize(&[0, 1, 2], SymmetryMode::Sym).unwrap();
        let twice = once.symmetrize(&[0, 1, 2], SymmetryMode::Sym).unwrap();
        assert!(once.sub(&twice).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn mixed_variance_symmetrization_rejected() {
        let t = TensorValue::identity(2);
        assert!(matches!(
            t.symmetrize(&[0, 1], SymmetryMode::Sym),
            Err(Error::Variance(_))
        ));
    }

    #[test]
    fn lowering_scales_by_the_metric() {
        let g = Tensor::from_components(2, vec![Slot::Lower; 2], 2, vec![4.0, 0.0, 0.0, 4.0]).unwrap();
        let ginv = g.inverse_metric().unwrap();
        let u = vector(&[1.0, 0.0], Slot::Upper);
        let lowered = u.raise_lower(0, &g, &ginv).unwrap();
        assert_eq!(lowered.slots, vec![Slot::Lower]);
        assert_eq!(lowered.comps, vec![4.0, 0.0]);
        assert_eq!(lowered.weight, 2);
        let back = lowered.raise_lower(0, &g, &ginv).unwrap();
        assert_eq!(back.comps, vec![1.0, 0.0]);
        assert_eq!(back.weight, 0);
    }

    #[test]
    fn euclidean_raising_is_trivial() {
        let g = Tensor::from_fn(3, vec![Slot::Lower; 2], 2, |i| if i[0] == i[1] { 1.0 } else { 0.0 });
        let ginv = g.inverse_metric().unwrap();
        let t = Tensor::from_fn(3, vec![Slot::Lower, Slot::Upper], 0, |i| (i[0] * 3 + i[1]) as f64);
        let r = t.raise_lower(0, &g, &ginv).unwrap();
        assert_eq!(r.comps, t.comps);
        assert_eq!(r.slots, vec![Slot::Upper, Slot::Upper]);
    }

    #[test]
    fn raise_moves_the_right_slot() {
        let g = Tensor::from_components(2, vec![Slot::Lower; 2], 2, vec![2.0, 0.5, 0.5, 1.0]).unwrap();
        let ginv = g.inverse_metric().unwrap();
        let t = Tensor::from_components(2, vec![Slot::Lower; 2], 0, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let r = t.raise_lower(1, &g, &ginv).unwrap();
        // r_a^b = t_ac g^cb
        for a in 0..2 {
            for b in 0..2 {
                let expected: f64 = (0..2).map(|c| t.get(&[a, c]) * ginv.get(&[c, b])).sum();
                assert_abs_diff_eq!(*r.get(&[a, b]), expected, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn singular_metric() {
        let g = TensorValue::zeros(2, vec![Slot::Lower; 2], 2);
        assert!(matches!(g.inverse_metric(), Err(Error::Singularity(_))));
        let bad_inverse = TensorValue::zeros(2, vec![Slot::Upper; 2], -2);
        let u = vector(&[1.0, 0.0], Slot::Upper);
        assert!(matches!(
            u.raise_lower(0, &g, &bad_inverse),
            Err(Error::Singularity(_))
        ));
    }

    #[test]
    fn trace_free_projection() {
        let delta = Tensor::from_fn(3, vec![Slot::Lower; 2], 2, |i| if i[0] == i[1] { 1.0 } else { 0.0 });
        let inv = delta.inverse_metric().unwrap();
        assert!(delta.trace_free_part(&delta, &inv).unwrap().max_abs() < 1e-15);
        let mut t = TensorValue::zeros(3, vec![Slot::Lower; 2], 0);
        t.set(&[0, 0], 1.0);
        let tf = t.trace_free_part(&delta, &inv).unwrap();
        assert_abs_diff_eq!(*tf.get(&[0, 0]), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(*tf.get(&[1, 1]), -1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(*tf.get(&[2, 2]), -1.0 / 3.0, epsilon = 1e-15);
    }
}
