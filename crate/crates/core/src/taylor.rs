//! Truncated Taylor expansions of geodesic compositions at a development point.
//!
//! All vectors are coordinates in an orthonormal basis of the tangent space at
//! the development point; the curvature is evaluated there through a
//! [`CurvatureOracle`].

use nalgebra::{DMatrix, DVector};

use crate::curvature::CurvatureOracle;
use crate::error::{Error, Result};

/// A truncated expansion together with the order of its first neglected terms.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionResult<T> {
    pub value: T,
    pub order: u32,
}

/// `log_x(exp_{exp_x(v)}(transport of u))`, accurate up to terms of order 5.
pub fn double_exp_expansion(
    oracle: &dyn CurvatureOracle,
    v: &DVector<f64>,
    u: &DVector<f64>,
) -> ExpansionResult<DVector<f64>> {
    let mut out = v + u;
    out += oracle.curvature(u, v, v) / 6.0;
    out += oracle.curvature(u, v, u) / 3.0;
    out += oracle.curvature_derivative(v, u, v, &(v * 2.0 + u * 5.0)) / 24.0;
    out += oracle.curvature_derivative(u, u, v, &(v + u * 2.0)) / 24.0;
    ExpansionResult { value: out, order: 5 }
}

/// `log` at `exp_x(v)` of `exp_x(w)`, transported back to `x`; order 5.
pub fn neighboring_log_expansion(
    oracle: &dyn CurvatureOracle,
    v: &DVector<f64>,
    w: &DVector<f64>,
) -> ExpansionResult<DVector<f64>> {
    let mut out = w - v;
    out += oracle.curvature(w, v, &(v - w * 2.0)) / 6.0;
    out += oracle.curvature_derivative(v, w, v, &(v * 2.0 - w * 3.0)) / 24.0;
    out += oracle.curvature_derivative(w, w, v, &(v - w * 2.0)) / 24.0;
    ExpansionResult { value: out, order: 5 }
}

/// `dist^2(exp_x(v), exp_x(w))`, accurate up to terms of order 6.
pub fn squared_distance_expansion(
    oracle: &dyn CurvatureOracle,
    v: &DVector<f64>,
    w: &DVector<f64>,
) -> ExpansionResult<f64> {
    let flat = (w - v).norm_squared();
    let quartic = oracle.curvature(w, v, w).dot(v) / 3.0;
    let quintic = oracle.curvature_derivative(&(v + w), w, v, w).dot(v) / 12.0;
    ExpansionResult {
        value: flat + quartic + quintic,
        order: 6,
    }
}

/// `h(t) = sqrt(t) cot(sqrt(t))`, continued analytically to `t < 0` as
/// `sqrt(-t) coth(sqrt(-t))`.
pub fn h_function(t: f64) -> Result<f64> {
    let pi2 = std::f64::consts::PI.powi(2);
    if t.is_nan() || t >= pi2 {
        return Err(Error::Domain {
            function: "h",
            value: t,
        });
    }
    if t.abs() < 1e-8 {
        return Ok(1.0 - t / 3.0 - t * t / 45.0);
    }
    if t > 0.0 {
        let s = t.sqrt();
        Ok(s / s.tan())
    } else if t == f64::NEG_INFINITY {
        Ok(f64::INFINITY)
    } else {
        let s = (-t).sqrt();
        Ok(s / s.tanh())
    }
}

/// Riemannian Hessian at `x` of `dist^2(., y)` in a space of curvature `kappa`,
/// given `log_x(y)` in orthonormal coordinates.
pub fn hessian_sqdist_space_form(kappa: f64, logvec: &DVector<f64>) -> Result<DMatrix<f64>> {
    let d = logvec.len();
    let theta = logvec.norm();
    if theta == 0.0 {
        return Ok(DMatrix::identity(d, d) * 2.0);
    }
    let h = h_function(kappa * theta * theta)?;
    let u = logvec / theta;
    let uu = &u * u.transpose();
    Ok((&uu + (DMatrix::identity(d, d) - &uu) * h) * 2.0)
}

/// Low-order expansion of the same Hessian from the curvature at `x`:
/// `(1/2) H = Id + (1/3) R(u, .) u + (1/12) (grad_u R)(u, .) u`.
pub fn truncated_hessian_sqdist(oracle: &dyn CurvatureOracle, logvec: &DVector<f64>) -> DMatrix<f64> {
    let d = logvec.len();
    let mut half = DMatrix::identity(d, d);
    for b in 0..d {
        let mut e = DVector::zeros(d);
        e[b] = 1.0;
        let col =
            oracle.curvature(logvec, &e, logvec) / 3.0 + oracle.curvature_derivative(logvec, logvec, &e, logvec) / 12.0;
        let mut target = half.column_mut(b);
        target += col;
    }
    half * 2.0
}
