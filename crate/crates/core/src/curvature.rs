//! Curvature operators at a development point, in an orthonormal tangent basis.
//!
//! Index convention: `[R(u,v)w]^a = R^a_{bcd} u^c v^d w^b` and
//! `[(grad_t R)(u,v)w]^a = R^a_{bcd;e} t^e u^c v^d w^b`.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};

/// Evaluates the curvature tensor and its covariant derivative on tangent coordinates.
pub trait CurvatureOracle {
    fn dim(&self) -> usize;

    /// `R(u,v)w`.
    fn curvature(&self, u: &DVector<f64>, v: &DVector<f64>, w: &DVector<f64>) -> DVector<f64>;

    /// `(grad_t R)(u,v)w`; identically zero for locally symmetric spaces.
    fn curvature_derivative(
        &self,
        _t: &DVector<f64>,
        _u: &DVector<f64>,
        _v: &DVector<f64>,
        _w: &DVector<f64>,
    ) -> DVector<f64> {
        DVector::zeros(self.dim())
    }
}

/// `R(u,v)w = kappa (<v,w> u - <u,w> v)` with a parallel curvature tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantCurvature {
    dim: usize,
    kappa: f64,
}

impl ConstantCurvature {
    pub fn new(dim: usize, kappa: f64) -> Self {
        Self { dim, kappa }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

impl CurvatureOracle for ConstantCurvature {
    fn dim(&self) -> usize {
        self.dim
    }

    fn curvature(&self, u: &DVector<f64>, v: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        let mut out = u * (self.kappa * v.dot(w));
        out.axpy(-self.kappa * u.dot(w), v, 1.0);
        out
    }
}

/// Curvature given by dense component arrays `R^a_{bcd}` and `R^a_{bcd;e}`.
///
/// Components are stored row-major as `r[a][b][c][d]` and `dr[e][a][b][c][d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorCurvature {
    dim: usize,
    r: Vec<f64>,
    dr: Vec<f64>,
}

impl TensorCurvature {
    pub fn new(dim: usize, r: Vec<f64>, dr: Vec<f64>) -> Result<Self> {
        if r.len() != dim.pow(4) {
            return Err(invalid(format!("curvature needs {} components", dim.pow(4))));
        }
        if dr.len() != dim.pow(5) {
            return Err(invalid(format!("curvature derivative needs {} components", dim.pow(5))));
        }
        Ok(Self { dim, r, dr })
    }

    /// Algebraic curvature tensor `R_{abcd} = S_ac S_db - S_ad S_cb` built from a
    /// symmetric form; it has every symmetry of a Riemannian curvature tensor.
    /// `S = sqrt(kappa) Id` recovers the space form.
    pub fn from_symmetric_form(s: &DMatrix<f64>) -> Result<Self> {
        let n = s.nrows();
        if s.ncols() != n {
            return Err(invalid("symmetric form must be square"));
        }
        if (s - s.transpose()).amax() > 0.0 {
            return Err(invalid("form is not symmetric"));
        }
        let mut r = vec![0.0; n.pow(4)];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        r[idx4(n, a, b, c, d)] = s[(a, c)] * s[(d, b)] - s[(a, d)] * s[(c, b)];
                    }
                }
            }
        }
        Ok(Self {
            dim: n,
            r,
            dr: vec![0.0; n.pow(5)],
        })
    }

    /// Reads every component off another oracle.
    pub fn from_oracle(oracle: &dyn CurvatureOracle) -> Self {
        let n = oracle.dim();
        let e: Vec<DVector<f64>> = (0..n)
            .map(|i| {
                let mut v = DVector::zeros(n);
                v[i] = 1.0;
                v
            })
            .collect();
        let mut r = vec![0.0; n.pow(4)];
        let mut dr = vec![0.0; n.pow(5)];
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let val = oracle.curvature(&e[c], &e[d], &e[b]);
                    for a in 0..n {
                        r[idx4(n, a, b, c, d)] = val[a];
                    }
                    for t in 0..n {
                        let val = oracle.curvature_derivative(&e[t], &e[c], &e[d], &e[b]);
                        for a in 0..n {
                            dr[t * n.pow(4) + idx4(n, a, b, c, d)] = val[a];
                        }
                    }
                }
            }
        }
        Self { dim: n, r, dr }
    }

    pub fn with_derivative(mut self, dr: Vec<f64>) -> Result<Self> {
        if dr.len() != self.dim.pow(5) {
            return Err(invalid(format!(
                "curvature derivative needs {} components",
                self.dim.pow(5)
            )));
        }
        self.dr = dr;
        Ok(self)
    }

    /// `R^a_{bcd}`.
    pub fn r(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.r[idx4(self.dim, a, b, c, d)]
    }

    /// `R^a_{bcd;e}` (derivative index last, as in `grad_e R^a_{bcd}`).
    pub fn dr(&self, a: usize, b: usize, c: usize, d: usize, e: usize) -> f64 {
        self.dr[e * self.dim.pow(4) + idx4(self.dim, a, b, c, d)]
    }
}

impl CurvatureOracle for TensorCurvature {
    fn dim(&self) -> usize {
        self.dim
    }

    fn curvature(&self, u: &DVector<f64>, v: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        let n = self.dim;
        let mut out = DVector::zeros(n);
        for a in 0..n {
            let mut acc = 0.0;
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        acc += self.r[idx4(n, a, b, c, d)] * w[b] * u[c] * v[d];
                    }
                }
            }
            out[a] = acc;
        }
        out
    }

    fn curvature_derivative(
        &self,
        t: &DVector<f64>,
        u: &DVector<f64>,
        v: &DVector<f64>,
        w: &DVector<f64>,
    ) -> DVector<f64> {
        let n = self.dim;
        let mut out = DVector::zeros(n);
        for e in 0..n {
            if t[e] == 0.0 {
                continue;
            }
            let block = e * n.pow(4);
            for a in 0..n {
                let mut acc = 0.0;
                for b in 0..n {
                    for c in 0..n {
                        for d in 0..n {
                            acc += self.dr[block + idx4(n, a, b, c, d)] * w[b] * u[c] * v[d];
                        }
                    }
                }
                out[a] += t[e] * acc;
            }
        }
        out
    }
}

fn idx4(n: usize, a: usize, b: usize, c: usize, d: usize) -> usize {
    ((a * n + b) * n + c) * n + d
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vec_strategy(d: usize) -> impl Strategy<Value = DVector<f64>> {
        proptest::collection::vec(-2.0..2.0f64, d).prop_map(DVector::from_vec)
    }

    fn oracles(kappa: f64, form: &[f64]) -> Vec<Box<dyn CurvatureOracle>> {
        let s = DMatrix::from_fn(3, 3, |i, j| form[i.min(j) * 3 + i.max(j)]);
        vec![
            Box::new(ConstantCurvature::new(3, kappa)),
            Box::new(TensorCurvature::from_symmetric_form(&s).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn curvature_symmetries(
            kappa in -3.0..3.0f64,
            form in proptest::collection::vec(-1.5..1.5f64, 9),
            u in vec_strategy(3), v in vec_strategy(3), w in vec_strategy(3), z in vec_strategy(3),
        ) {
            for oracle in oracles(kappa, &form) {
                let ruv = oracle.curvature(&u, &v, &w);
                let rvu = oracle.curvature(&v, &u, &w);
                prop_assert!((&ruv + &rvu).amax() < 1e-12);
                let bianchi = &ruv + oracle.curvature(&v, &w, &u) + oracle.curvature(&w, &u, &v);
                prop_assert!(bianchi.amax() < 1e-12);
                let metric = ruv.dot(&z) + oracle.curvature(&u, &v, &z).dot(&w);
                prop_assert!(metric.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn skew_symmetry_is_exact_for_constant_curvature() {
        let k = ConstantCurvature::new(3, 0.7);
        let u = DVector::from_vec(vec![0.3, -1.1, 2.0]);
        let v = DVector::from_vec(vec![1.7, 0.2, -0.4]);
        let w = DVector::from_vec(vec![-0.9, 0.5, 0.6]);
        assert_eq!(k.curvature(&u, &v, &w), -k.curvature(&v, &u, &w));
    }

    #[test]
    fn sectional_ratio_recovers_kappa() {
        let k = ConstantCurvature::new(4, -2.5);
        let u = DVector::from_vec(vec![1.0, 2.0, 0.0, -1.0]);
        let v = DVector::from_vec(vec![0.5, -1.0, 3.0, 0.25]);
        let num = k.curvature(&u, &v, &v).dot(&u);
        let den = u.norm_squared() * v.norm_squared() - u.dot(&v).powi(2);
        assert!((num / den + 2.5).abs() < 1e-12);
    }

    #[test]
    fn components_round_trip_through_oracle() {
        let k = ConstantCurvature::new(3, 2.0);
        let t = TensorCurvature::from_oracle(&k);
        let s = DMatrix::identity(3, 3) * 2f64.sqrt();
        let expected = TensorCurvature::from_symmetric_form(&s).unwrap();
        for i in 0..81 {
            assert!((t.r[i] - expected.r[i]).abs() < 1e-14);
        }
        let u = DVector::from_vec(vec![0.1, 0.2, 0.3]);
        let v = DVector::from_vec(vec![-1.0, 0.0, 2.0]);
        assert!((t.curvature(&u, &v, &u) - k.curvature(&u, &v, &u)).amax() < 1e-15);
    }

    #[test]
    fn rejects_wrong_component_counts() {
        assert!(TensorCurvature::new(2, vec![0.0; 15], vec![0.0; 32]).is_err());
        assert!(TensorCurvature::new(2, vec![0.0; 16], vec![0.0; 31]).is_err());
    }
}
