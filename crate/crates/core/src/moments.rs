//! Curvature contractions of tangent moments: the recentered mean map, the
//! mean field, the first two moments of the empirical mean, the expected
//! Hessian and the modulation factors.
//!
//! A bullet `•` marks a slot contracted against a moment tensor; every
//! contraction is evaluated by looping over basis vectors and calling the
//! curvature oracle.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::curvature::CurvatureOracle;
use crate::error::{invalid, Error, Result};
use crate::taylor::h_function;
use crate::tensor::{empirical_moment, SymMomentTensor};

/// Largest condition number accepted for the expected Hessian.
pub const MAX_HESSIAN_CONDITION: f64 = 1e12;

/// First three tangent moments at a development point.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMoments {
    m1: DVector<f64>,
    m2: DMatrix<f64>,
    m3: SymMomentTensor,
}

impl LocalMoments {
    pub fn new(m1: DVector<f64>, m2: DMatrix<f64>, m3: SymMomentTensor) -> Result<Self> {
        let d = m1.len();
        if m2.nrows() != d || m2.ncols() != d || m3.order() != 3 || m3.dim() != d {
            return Err(invalid("moments do not share a common basis"));
        }
        Ok(Self { m1, m2, m3 })
    }

    pub fn from_logs(logs: &[DVector<f64>]) -> Result<Self> {
        Ok(Self {
            m1: empirical_moment(logs, 1)?.as_vector()?,
            m2: empirical_moment(logs, 2)?.as_matrix()?,
            m3: empirical_moment(logs, 3)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.m1.len()
    }

    pub fn m1(&self) -> &DVector<f64> {
        &self.m1
    }

    pub fn m2(&self) -> &DMatrix<f64> {
        &self.m2
    }

    pub fn m3(&self) -> &SymMomentTensor {
        &self.m3
    }
}

/// Bias and covariance of the empirical mean of an `n`-sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeanMoments {
    pub bias: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub n: usize,
}

impl EmpiricalMeanMoments {
    pub fn at_mean(m2: &DMatrix<f64>, oracle: &dyn CurvatureOracle, n: usize) -> Result<Self> {
        Ok(Self {
            bias: bias_at_mean(m2, oracle, n)?,
            covariance: covariance_at_mean(m2, oracle, n)?,
            n,
        })
    }
}

fn basis(d: usize) -> Vec<DVector<f64>> {
    (0..d)
        .map(|i| {
            let mut e = DVector::zeros(d);
            e[i] = 1.0;
            e
        })
        .collect()
}

fn check(oracle: &dyn CurvatureOracle, d: usize) -> Result<()> {
    if oracle.dim() != d {
        return Err(invalid(format!(
            "curvature oracle has dimension {}, moments have {d}",
            oracle.dim()
        )));
    }
    Ok(())
}

fn check_m2(m2: &DMatrix<f64>, oracle: &dyn CurvatureOracle) -> Result<()> {
    if !m2.is_square() {
        return Err(invalid("second moment must be square"));
    }
    check(oracle, m2.nrows())
}

/// `R(•,v)• : M2`.
fn r_bullet(oracle: &dyn CurvatureOracle, v: &DVector<f64>, m2: &DMatrix<f64>) -> DVector<f64> {
    let e = basis(v.len());
    let mut out = DVector::zeros(v.len());
    for i in 0..e.len() {
        for j in 0..e.len() {
            if m2[(i, j)] != 0.0 {
                out.axpy(m2[(i, j)], &oracle.curvature(&e[i], v, &e[j]), 1.0);
            }
        }
    }
    out
}

/// `sum_ij M2^ij f(e_i, e_j)`.
fn contract2<F>(d: usize, m2: &DMatrix<f64>, f: F) -> DVector<f64>
where
    F: Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64>,
{
    let e = basis(d);
    let mut out = DVector::zeros(d);
    for i in 0..d {
        for j in 0..d {
            if m2[(i, j)] != 0.0 {
                out.axpy(m2[(i, j)], &f(&e[i], &e[j]), 1.0);
            }
        }
    }
    out
}

/// `(grad_• R)(•,v)• : M3 = sum_ijk M3^ijk (grad_{e_i} R)(e_j, v) e_k`.
fn grad_r_m3(oracle: &dyn CurvatureOracle, v: &DVector<f64>, m3: &SymMomentTensor) -> DVector<f64> {
    let d = v.len();
    let e = basis(d);
    let mut out = DVector::zeros(d);
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let w = m3.get(&[i, j, k]);
                if w != 0.0 {
                    out.axpy(w, &oracle.curvature_derivative(&e[i], &e[j], v, &e[k]), 1.0);
                }
            }
        }
    }
    out
}

/// `grad_∘ R(∘,•)• : M2 : M2`, the quadratic term behind the bias.
fn grad_r_m2_m2(oracle: &dyn CurvatureOracle, m2: &DMatrix<f64>) -> DVector<f64> {
    let d = m2.nrows();
    let e = basis(d);
    let mut out = DVector::zeros(d);
    for i in 0..d {
        for j in 0..d {
            if m2[(i, j)] == 0.0 {
                continue;
            }
            for k in 0..d {
                for l in 0..d {
                    let w = m2[(i, j)] * m2[(k, l)];
                    if w != 0.0 {
                        out.axpy(w, &oracle.curvature_derivative(&e[i], &e[j], &e[k], &e[l]), 1.0);
                    }
                }
            }
        }
    }
    out
}

/// Tangent mean of the logs at `exp_x(v)`, transported back to `x`, to order 5.
pub fn recentered_mean_map_expansion(
    moments: &LocalMoments,
    oracle: &dyn CurvatureOracle,
    v: &DVector<f64>,
) -> Result<DVector<f64>> {
    let d = moments.dim();
    if v.len() != d {
        return Err(invalid("tangent vector and moments use different bases"));
    }
    check(oracle, d)?;
    let (m1, m2) = (&moments.m1, &moments.m2);
    let mut out = m1 - v;
    out += oracle.curvature(m1, v, v) / 6.0;
    out -= r_bullet(oracle, v, m2) / 3.0;
    out += oracle.curvature_derivative(v, m1, v, v) / 12.0;
    out -= contract2(d, m2, |a, b| oracle.curvature_derivative(v, a, v, b)) / 8.0;
    out += contract2(d, m2, |a, b| oracle.curvature_derivative(a, b, v, v)) / 24.0;
    out -= grad_r_m3(oracle, v, &moments.m3) / 12.0;
    Ok(out)
}

/// Vector field pointing from the development point to the mean, to order 5.
pub fn mean_field_expansion(moments: &LocalMoments, oracle: &dyn CurvatureOracle) -> Result<DVector<f64>> {
    let d = moments.dim();
    check(oracle, d)?;
    let (m1, m2) = (&moments.m1, &moments.m2);
    let mut out = m1 - r_bullet(oracle, m1, m2) / 3.0;
    out += contract2(d, m2, |a, b| oracle.curvature_derivative(a, b, m1, m1)) / 24.0;
    out -= contract2(d, m2, |a, b| oracle.curvature_derivative(m1, a, m1, b)) / 8.0;
    out -= grad_r_m3(oracle, m1, &moments.m3) / 12.0;
    Ok(out)
}

/// Expected tangent field from the development point to the empirical mean
/// of an `n`-sample.
pub fn empirical_mean_first_moment_field(
    moments: &LocalMoments,
    oracle: &dyn CurvatureOracle,
    n: usize,
) -> Result<DVector<f64>> {
    if n == 0 {
        return Err(invalid("sample size must be at least 1"));
    }
    let d = moments.dim();
    check(oracle, d)?;
    let (m1, m2) = (&moments.m1, &moments.m2);
    let nf = n as f64;
    let a = contract2(d, m2, |x, y| oracle.curvature_derivative(x, y, m1, m1));
    let b = contract2(d, m2, |x, y| oracle.curvature_derivative(m1, x, m1, y));
    let c = grad_r_m2_m2(oracle, m2);
    let e = grad_r_m3(oracle, m1, &moments.m3);
    let mut out = m1 - r_bullet(oracle, m1, m2) * ((nf - 1.0) / (3.0 * nf));
    out += (a - b * 3.0) * ((nf - 1.0) * (nf - 2.0) / (24.0 * nf * nf));
    out += (c * 2.0 - e * (1.0 + nf)) * ((nf - 1.0) / (12.0 * nf * nf));
    Ok(out)
}

/// Bias of the empirical mean when the development point is the population mean.
pub fn bias_at_mean(m2: &DMatrix<f64>, oracle: &dyn CurvatureOracle, n: usize) -> Result<DVector<f64>> {
    if n == 0 {
        return Err(invalid("sample size must be at least 1"));
    }
    check_m2(m2, oracle)?;
    let nf = n as f64;
    Ok(grad_r_m2_m2(oracle, m2) * ((1.0 - 1.0 / nf) / (6.0 * nf)))
}

/// `Q` with columns `R(•,e_b)• : M2`.
fn q_matrix(oracle: &dyn CurvatureOracle, m2: &DMatrix<f64>) -> DMatrix<f64> {
    let d = m2.nrows();
    let mut q = DMatrix::zeros(d, d);
    for (b, eb) in basis(d).iter().enumerate() {
        q.set_column(b, &r_bullet(oracle, eb, m2));
    }
    q
}

/// Covariance of the empirical mean when the development point is the population mean.
pub fn covariance_at_mean(m2: &DMatrix<f64>, oracle: &dyn CurvatureOracle, n: usize) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(invalid("sample size must be at least 1"));
    }
    check_m2(m2, oracle)?;
    let nf = n as f64;
    let qm = q_matrix(oracle, m2) * m2;
    let sym = &qm + qm.transpose();
    Ok((m2 - sym * ((1.0 - 1.0 / nf) / 3.0)) / nf)
}

/// Expected Hessian of the squared distance at the mean, to order 3 in the moments.
pub fn expected_hessian(m2: &DMatrix<f64>, m3: &SymMomentTensor, oracle: &dyn CurvatureOracle) -> Result<DMatrix<f64>> {
    check_m2(m2, oracle)?;
    let d = m2.nrows();
    if m3.order() != 3 || m3.dim() != d {
        return Err(invalid("third moment does not match the second"));
    }
    let e = basis(d);
    let mut p = DMatrix::zeros(d, d);
    for (b, eb) in e.iter().enumerate() {
        let mut col = DVector::zeros(d);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    // M3^{ijk} (grad_{e_k} R)(e_j, e_b) e_i
                    let w = m3.get(&[i, j, k]);
                    if w != 0.0 {
                        col.axpy(w, &oracle.curvature_derivative(&e[k], &e[j], eb, &e[i]), 1.0);
                    }
                }
            }
        }
        p.set_column(b, &col);
    }
    let half = DMatrix::identity(d, d) + q_matrix(oracle, m2) / 3.0 + p / 12.0;
    Ok(half * 2.0)
}

/// Asymptotic covariance `4 H^-1 M2 H^-1` of the central limit theorem.
pub fn bp_clt_covariance(m2: &DMatrix<f64>, hbar: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !hbar.is_square() || hbar.shape() != m2.shape() {
        return Err(invalid("Hessian and second moment differ in shape"));
    }
    let sv = hbar.clone().singular_values();
    let (max, min) = (sv.max(), sv.min());
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition <= MAX_HESSIAN_CONDITION) {
        return Err(Error::DegenerateHessian { condition });
    }
    let inv = hbar
        .clone()
        .try_inverse()
        .ok_or(Error::DegenerateHessian { condition })?;
    let out = &inv * m2 * &inv * 4.0;
    Ok((&out + out.transpose()) * 0.5)
}

/// `alpha = 1 + (2/3) kappa sigma^2 (1 - 1/d)(1 - 1/n)`.
pub fn modulation_nonasymptotic(kappa: f64, sigma2: f64, d: usize, n: usize) -> f64 {
    let (df, nf) = (d as f64, n as f64);
    1.0 + 2.0 / 3.0 * kappa * sigma2 * (1.0 - 1.0 / df) * (1.0 - 1.0 / nf)
}

/// `alpha = (1/d + (1 - 1/d) hbar)^-2`.
pub fn modulation_asymptotic(hbar_mean: f64, d: usize) -> Result<f64> {
    let df = d as f64;
    let gamma = 1.0 / df + (1.0 - 1.0 / df) * hbar_mean;
    // gamma <= 0 means the expected Hessian is no longer positive
    if !(gamma > 1e-12) || !gamma.is_finite() {
        return Err(Error::Divergence("asymptotic modulation factor"));
    }
    Ok(gamma.powi(-2))
}

/// `tan^2(sqrt t) / t`, i.e. `h(t)^-2`, continued to `t <= 0`.
pub fn archetypal_modulation(t: f64) -> Result<f64> {
    if t >= PI * PI / 4.0 {
        return Err(Error::Divergence("archetypal modulation factor"));
    }
    let h = h_function(t)?;
    if h <= 0.0 {
        return Err(Error::Divergence("archetypal modulation factor"));
    }
    Ok(h.powi(-2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::ConstantCurvature;

    #[test]
    fn modulation_values() {
        assert_eq!(modulation_nonasymptotic(1.0, 0.25, 3, 1), 1.0);
        assert_eq!(modulation_nonasymptotic(1.0, 0.25, 1, 7), 1.0);
        assert!((modulation_nonasymptotic(1.0, 0.25, 2, 10) - 1.075).abs() < 1e-15);
        assert_eq!(modulation_asymptotic(1.0, 3).unwrap(), 1.0);
        let h = h_function(0.25).unwrap();
        assert!((h - 0.5 / 0.5f64.tan()).abs() < 1e-15);
        assert!((h - 0.91523).abs() < 1e-4);
        assert!((modulation_asymptotic(h, 2).unwrap() - 1.0904).abs() < 1e-4);
        assert!(matches!(modulation_asymptotic(-0.5, 3), Err(Error::Divergence(_))));
    }

    #[test]
    fn archetypal_values() {
        assert_eq!(archetypal_modulation(0.0).unwrap(), 1.0);
        assert!((archetypal_modulation(1.0).unwrap() - 1f64.tan().powi(2)).abs() < 1e-13);
        assert!((archetypal_modulation(-1.0).unwrap() - 1f64.tanh().powi(2)).abs() < 1e-14);
        assert!((archetypal_modulation(2.0).unwrap() - 2f64.sqrt().tan().powi(2) / 2.0).abs() < 1e-12);
        assert!(archetypal_modulation(PI * PI / 4.0).is_err());
        assert!(archetypal_modulation(3.0).is_err());
    }

    #[test]
    fn euclidean_reductions() {
        let flat = ConstantCurvature::new(2, 0.0);
        let m2 = DMatrix::from_row_slice(2, 2, &[0.3, 0.1, 0.1, 0.2]);
        assert_eq!(covariance_at_mean(&m2, &flat, 4).unwrap(), &m2 / 4.0);
        let m3 = empirical_moment(&[DVector::from_vec(vec![0.1, 0.2])], 3).unwrap();
        assert_eq!(
            expected_hessian(&m2, &m3, &flat).unwrap(),
            DMatrix::identity(2, 2) * 2.0
        );
        assert_eq!(bp_clt_covariance(&m2, &(DMatrix::identity(2, 2) * 2.0)).unwrap(), m2);
    }

    #[test]
    fn singular_hessian_is_rejected() {
        let m2 = DMatrix::identity(2, 2);
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-14]);
        assert!(matches!(
            bp_clt_covariance(&m2, &h),
            Err(Error::DegenerateHessian { .. })
        ));
    }

    #[test]
    fn mismatched_bases_are_rejected() {
        let logs = [DVector::from_vec(vec![0.1, 0.0])];
        let m = LocalMoments::from_logs(&logs).unwrap();
        let k = ConstantCurvature::new(3, 1.0);
        assert!(mean_field_expansion(&m, &k).is_err());
        let k2 = ConstantCurvature::new(2, 1.0);
        assert!(recentered_mean_map_expansion(&m, &k2, &DVector::zeros(3)).is_err());
    }
}
