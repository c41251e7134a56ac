//! Dense moment tensors of order at most four and the expectation rules for
//! products of empirical moments.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};

pub const MAX_ORDER: usize = 4;

/// Dense tensor with `dim^order` entries stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    order: usize,
    dim: usize,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn zeros(order: usize, dim: usize) -> Self {
        Self {
            order,
            dim,
            data: vec![0.0; dim.pow(order as u32)],
        }
    }

    pub fn scalar(value: f64) -> Self {
        Self {
            order: 0,
            dim: 0,
            data: vec![value],
        }
    }

    pub fn from_vec(order: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim.pow(order as u32) {
            return Err(invalid(format!(
                "order-{order} tensor in dimension {dim} needs {} entries, got {}",
                dim.pow(order as u32),
                data.len()
            )));
        }
        Ok(Self { order, dim, data })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.flat(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let i = self.flat(idx);
        self.data[i] = value;
    }

    fn flat(&self, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.order, "index length must equal the tensor order");
        idx.iter().fold(0, |acc, &i| {
            assert!(i < self.dim, "index {i} out of range for dimension {}", self.dim);
            acc * self.dim + i
        })
    }

    /// `self ⊗ other`, indices of `self` first.
    pub fn outer(&self, other: &DenseTensor) -> DenseTensor {
        let dim = if self.order == 0 { other.dim } else { self.dim };
        let mut data = Vec::with_capacity(self.data.len() * other.data.len());
        for a in &self.data {
            for b in &other.data {
                data.push(a * b);
            }
        }
        DenseTensor {
            order: self.order + other.order,
            dim,
            data,
        }
    }

    pub fn scale(mut self, s: f64) -> Self {
        self.data.iter_mut().for_each(|x| *x *= s);
        self
    }

    pub fn add_scaled(&mut self, other: &DenseTensor, s: f64) {
        assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn max_abs_diff(&self, other: &DenseTensor) -> f64 {
        assert_eq!(self.data.len(), other.data.len());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Symmetric moment tensor `M_k` in an orthonormal tangent basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMomentTensor(DenseTensor);

impl SymMomentTensor {
    pub fn order(&self) -> usize {
        self.0.order
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.0.get(idx)
    }

    pub fn as_dense(&self) -> &DenseTensor {
        &self.0
    }

    pub fn as_vector(&self) -> Result<DVector<f64>> {
        if self.order() != 1 {
            return Err(invalid("not a first-order moment"));
        }
        Ok(DVector::from_column_slice(&self.0.data))
    }

    pub fn as_matrix(&self) -> Result<DMatrix<f64>> {
        if self.order() != 2 {
            return Err(invalid("not a second-order moment"));
        }
        let d = self.dim();
        Ok(DMatrix::from_row_slice(d, d, &self.0.data))
    }

    pub fn from_vector(v: &DVector<f64>) -> Self {
        Self(DenseTensor {
            order: 1,
            dim: v.len(),
            data: v.iter().copied().collect(),
        })
    }

    /// Accepts a matrix only if it is exactly symmetric.
    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        let d = m.nrows();
        if m.ncols() != d || m != &m.transpose() {
            return Err(invalid("second moment must be a symmetric square matrix"));
        }
        let data = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)])
            .collect();
        Ok(Self(DenseTensor { order: 2, dim: d, data }))
    }
}

/// `M_k = (1/n) sum_i log_i^{⊗k}`; each entry is a product over the index
/// tuple, so the result is symmetric by construction.
pub fn empirical_moment(logs: &[DVector<f64>], k: usize) -> Result<SymMomentTensor> {
    let first = logs
        .first()
        .ok_or_else(|| invalid("empirical moment of an empty sample"))?;
    if k > MAX_ORDER {
        return Err(invalid(format!("moment order {k} exceeds {MAX_ORDER}")));
    }
    let d = first.len();
    if logs.iter().any(|l| l.len() != d) {
        return Err(invalid("logs are expressed in bases of different dimension"));
    }
    if k == 0 {
        return Ok(SymMomentTensor(DenseTensor::scalar(1.0)));
    }
    let size = d.pow(k as u32);
    let mut data = vec![0.0; size];
    let mut idx = vec![0usize; k];
    for (flat, slot) in data.iter_mut().enumerate() {
        let mut rem = flat;
        for j in (0..k).rev() {
            idx[j] = rem % d;
            rem /= d;
        }
        let mut acc = 0.0;
        for l in logs {
            acc += idx.iter().map(|&a| l[a]).product::<f64>();
        }
        *slot = acc / logs.len() as f64;
    }
    Ok(SymMomentTensor(DenseTensor { order: k, dim: d, data }))
}

/// Expectation of the product of empirical moments of an `n`-sample.
///
/// `moments[k - 1]` must hold the population moment of order `k`, up to the
/// sum of `orders`. The result carries the factors' indices in order.
pub fn product_moment_expectation(orders: &[usize], n: usize, moments: &[SymMomentTensor]) -> Result<DenseTensor> {
    if n == 0 {
        return Err(invalid("sample size must be at least 1"));
    }
    if orders.iter().any(|&k| k == 0) {
        return Err(invalid("moment orders must be positive"));
    }
    let total: usize = orders.iter().sum();
    if total > MAX_ORDER {
        return Err(invalid(format!("total order {total} exceeds {MAX_ORDER}")));
    }
    if moments.len() < total {
        return Err(invalid(format!("need moments up to order {total}")));
    }
    for (i, m) in moments.iter().enumerate().take(total) {
        if m.order() != i + 1 {
            return Err(invalid(format!("moment slot {} holds order {}", i + 1, m.order())));
        }
    }
    let dim = moments[0].dim();
    if moments.iter().take(total).any(|m| m.dim() != dim) {
        return Err(invalid("moments are expressed in bases of different dimension"));
    }
    let m = |k: usize| &moments[k - 1].0;
    let nf = n as f64;
    match *orders {
        [p, q] => {
            let mut out = m(p).outer(m(q)).scale((nf - 1.0) / nf);
            out.add_scaled(m(p + q), 1.0 / nf);
            Ok(out)
        }
        [p, q, r] => {
            let n2 = nf * nf;
            let mut out = m(p).outer(m(q)).outer(m(r)).scale((nf - 1.0) * (nf - 2.0) / n2);
            out.add_scaled(m(p + q + r), 1.0 / n2);
            let pair = (nf - 1.0) / n2;
            out.add_scaled(&m(p + q).outer(m(r)), pair);
            out.add_scaled(&middle_pairing(m(p + r), p, m(q)), pair);
            out.add_scaled(&m(p).outer(m(q + r)), pair);
            Ok(out)
        }
        _ => Err(invalid(format!(
            "products of {} moments are not supported",
            orders.len()
        ))),
    }
}

/// `(• ⊗ inner ⊗ •) : outer`: the first `p` indices of `outer` come before the
/// block of `inner`, the remaining ones after it.
fn middle_pairing(outer: &DenseTensor, p: usize, inner: &DenseTensor) -> DenseTensor {
    let dim = outer.dim;
    let r = outer.order - p;
    let q = inner.order;
    let head = dim.pow(p as u32);
    let mid = dim.pow(q as u32);
    let tail = dim.pow(r as u32);
    let mut data = vec![0.0; head * mid * tail];
    for i in 0..head {
        for j in 0..mid {
            for k in 0..tail {
                data[(i * mid + j) * tail + k] = outer.data[i * tail + k] * inner.data[j];
            }
        }
    }
    DenseTensor {
        order: p + q + r,
        dim,
        data,
    }
}
