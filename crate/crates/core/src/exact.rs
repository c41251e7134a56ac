//! Exact space-form evaluations of the quantities approximated in
//! [`crate::taylor`] and [`crate::moments`], built from closed-form
//! exp/log/transport. These serve as ground truth for the order studies.

use nalgebra::DVector;

use crate::error::Result;
use crate::space_form::{ManifoldPoint, SpaceForm, TangentBasis};

/// A point of a space form with a fixed orthonormal tangent frame.
#[derive(Debug, Clone)]
pub struct DevelopmentPoint {
    space: SpaceForm,
    basis: TangentBasis,
}

impl DevelopmentPoint {
    pub fn new(space: SpaceForm, x: &ManifoldPoint) -> Self {
        Self {
            space,
            basis: space.tangent_basis(x),
        }
    }

    pub fn at_pole(space: SpaceForm) -> Self {
        Self::new(space, &space.pole())
    }

    pub fn space(&self) -> &SpaceForm {
        &self.space
    }

    pub fn basis(&self) -> &TangentBasis {
        &self.basis
    }

    pub fn point(&self) -> &ManifoldPoint {
        self.basis.foot()
    }

    pub fn exp(&self, v: &DVector<f64>) -> ManifoldPoint {
        self.basis.exp_coords(v)
    }

    pub fn log(&self, y: &ManifoldPoint) -> Result<DVector<f64>> {
        self.basis.log_coords(y)
    }

    /// `log_x(exp_{exp_x(v)}(transport of u along v))`.
    pub fn double_exp(&self, v: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        let x = self.point().coords();
        let va = self.basis.from_coords(v);
        let ua = self.basis.from_coords(u);
        let xv = self.space.exp_raw(x, &va);
        let moved = self.space.transport_raw(x, &va, &ua);
        let y = self.space.exp_raw(&xv, &moved);
        Ok(self.basis.to_coords(&self.space.log_raw(x, &y)?))
    }

    /// `log_{exp_x(v)}(exp_x(w))` transported back to `x`.
    pub fn neighboring_log(&self, v: &DVector<f64>, w: &DVector<f64>) -> Result<DVector<f64>> {
        let x = self.point().coords();
        let va = self.basis.from_coords(v);
        let xv = self.space.exp_raw(x, &va);
        let y = self.space.exp_raw(x, &self.basis.from_coords(w));
        let l = self.space.log_raw(&xv, &y)?;
        // velocity of the geodesic at exp_x(v), reversed to come back to x
        let back = -self.space.transport_raw(x, &va, &va);
        Ok(self.basis.to_coords(&self.space.transport_raw(&xv, &back, &l)))
    }

    pub fn squared_distance(&self, v: &DVector<f64>, w: &DVector<f64>) -> f64 {
        let x = self.point().coords();
        let a = self.space.exp_raw(x, &self.basis.from_coords(v));
        let b = self.space.exp_raw(x, &self.basis.from_coords(w));
        self.space.distance_raw(&a, &b).powi(2)
    }

    /// Recentered tangent mean map of an equally weighted sample given by its
    /// logs at `x`: the tangent mean at `exp_x(v)`, transported back to `x`.
    pub fn recentered_mean_map(&self, logs: &[DVector<f64>], v: &DVector<f64>) -> Result<DVector<f64>> {
        let mut acc = DVector::zeros(v.len());
        for w in logs {
            acc += self.neighboring_log(v, w)?;
        }
        Ok(acc / logs.len() as f64)
    }
}
