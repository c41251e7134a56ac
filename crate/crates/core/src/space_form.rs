//! Closed-form geometry of the constant-curvature spaces.
//!
//! Points live in ambient coordinates: `R^d` for the Euclidean space, the
//! sphere of radius `1/sqrt(kappa)` in `R^(d+1)`, and the positive sheet of
//! the hyperboloid `<x,x>_* = -1/|kappa|` in Minkowski space `R^(d,1)` (the
//! time coordinate is stored last). All closed forms are written for unit
//! curvature and rescaled by the radius.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::curvature::ConstantCurvature;
use crate::error::{invalid, Error, Result};

/// Tolerance on the distance to the antipode below which the sphere log refuses to answer.
pub const ANTIPODE_TOL: f64 = 1e-8;

/// Below this geodesic angle the `angle / sin(angle)` factors switch to their series.
const SMALL_ANGLE: f64 = 1e-6;

const POINT_TOL: f64 = 1e-12;
const TANGENT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Euclidean,
    Sphere,
    Hyperbolic,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Euclidean => "euclidean",
            Kind::Sphere => "sphere",
            Kind::Hyperbolic => "hyperbolic",
        }
    }
}

/// A complete simply connected space of constant sectional curvature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceForm {
    kind: Kind,
    dim: usize,
    kappa: f64,
}

/// A point in ambient coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldPoint(DVector<f64>);

impl ManifoldPoint {
    pub fn coords(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_coords(self) -> DVector<f64> {
        self.0
    }

    pub(crate) fn from_raw(c: DVector<f64>) -> Self {
        Self(c)
    }
}

/// A tangent vector stored with its foot point, both in ambient coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    foot: ManifoldPoint,
    vec: DVector<f64>,
}

impl TangentVector {
    pub fn foot(&self) -> &ManifoldPoint {
        &self.foot
    }

    pub fn vec(&self) -> &DVector<f64> {
        &self.vec
    }
}

impl SpaceForm {
    pub fn new(kind: Kind, dim: usize, kappa: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if !kappa.is_finite() {
            return Err(invalid("curvature must be finite"));
        }
        let consistent = match kind {
            Kind::Euclidean => kappa == 0.0,
            Kind::Sphere => kappa > 0.0,
            Kind::Hyperbolic => kappa < 0.0,
        };
        if !consistent {
            return Err(invalid(format!(
                "curvature {kappa} is inconsistent with a {} space",
                kind.name()
            )));
        }
        Ok(Self { kind, dim, kappa })
    }

    /// Picks the kind from the sign of `kappa`.
    pub fn with_curvature(dim: usize, kappa: f64) -> Result<Self> {
        let kind = if kappa > 0.0 {
            Kind::Sphere
        } else if kappa < 0.0 {
            Kind::Hyperbolic
        } else {
            Kind::Euclidean
        };
        Self::new(kind, dim, kappa)
    }

    pub fn euclidean(dim: usize) -> Self {
        Self {
            kind: Kind::Euclidean,
            dim,
            kappa: 0.0,
        }
    }

    pub fn unit_sphere(dim: usize) -> Self {
        Self {
            kind: Kind::Sphere,
            dim,
            kappa: 1.0,
        }
    }

    pub fn unit_hyperbolic(dim: usize) -> Self {
        Self {
            kind: Kind::Hyperbolic,
            dim,
            kappa: -1.0,
        }
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn ambient_dim(&self) -> usize {
        match self.kind {
            Kind::Euclidean => self.dim,
            _ => self.dim + 1,
        }
    }

    /// Radius `1/sqrt(|kappa|)` of the model; infinite for the flat space.
    pub fn radius(&self) -> f64 {
        match self.kind {
            Kind::Euclidean => f64::INFINITY,
            _ => 1.0 / self.kappa.abs().sqrt(),
        }
    }

    pub fn injectivity_radius(&self) -> f64 {
        match self.kind {
            Kind::Sphere => std::f64::consts::PI * self.radius(),
            _ => f64::INFINITY,
        }
    }

    /// Short label such as `s2`, `h3` or `e3` (unit curvature is implied by the label only).
    pub fn label(&self) -> String {
        let prefix = match self.kind {
            Kind::Euclidean => 'e',
            Kind::Sphere => 's',
            Kind::Hyperbolic => 'h',
        };
        format!("{prefix}{}", self.dim)
    }

    pub fn curvature_oracle(&self) -> ConstantCurvature {
        ConstantCurvature::new(self.dim, self.kappa)
    }

    /// The "north pole": origin of E^d, `(0,..,0,R)` on the sphere and hyperboloid.
    pub fn pole(&self) -> ManifoldPoint {
        let mut c = DVector::zeros(self.ambient_dim());
        if self.kind != Kind::Euclidean {
            c[self.dim] = self.radius();
        }
        ManifoldPoint(c)
    }

    /// Bilinear form of the ambient space restricted to tangent vectors.
    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        match self.kind {
            Kind::Hyperbolic => minkowski(u, v),
            _ => u.dot(v),
        }
    }

    pub fn norm(&self, v: &DVector<f64>) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }

    /// Validates ambient coordinates against the embedding equation.
    pub fn point(&self, coords: DVector<f64>) -> Result<ManifoldPoint> {
        self.check_coords(&coords)?;
        Ok(ManifoldPoint(coords))
    }

    pub fn point_from_slice(&self, coords: &[f64]) -> Result<ManifoldPoint> {
        self.point(DVector::from_column_slice(coords))
    }

    /// Pulls ambient coordinates onto the model (radial rescaling on the
    /// sphere, time-coordinate completion on the hyperboloid).
    pub fn project(&self, coords: &[f64]) -> Result<ManifoldPoint> {
        if coords.len() != self.ambient_dim() {
            return Err(invalid(format!(
                "expected {} ambient coordinates, got {}",
                self.ambient_dim(),
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid("non-finite coordinate"));
        }
        let mut c = DVector::from_column_slice(coords);
        match self.kind {
            Kind::Euclidean => {}
            Kind::Sphere => {
                let n = c.norm();
                if n == 0.0 {
                    return Err(invalid("cannot project the origin onto the sphere"));
                }
                c *= self.radius() / n;
            }
            Kind::Hyperbolic => normalize_hyperboloid(&mut c, self.radius()),
        }
        Ok(ManifoldPoint(c))
    }

    pub fn tangent(&self, foot: &ManifoldPoint, vec: DVector<f64>) -> Result<TangentVector> {
        self.check_coords(foot.coords())?;
        if vec.len() != self.ambient_dim() {
            return Err(invalid("tangent vector has the wrong ambient dimension"));
        }
        if vec.iter().any(|c| !c.is_finite()) {
            return Err(invalid("non-finite tangent coordinate"));
        }
        if self.kind != Kind::Euclidean {
            let scale = (vec.norm() * foot.0.norm()).max(1.0);
            let radial = self.inner(&vec, &foot.0);
            if radial.abs() > TANGENT_TOL * scale {
                return Err(invalid(format!(
                    "vector is not tangent at its foot point (radial component {radial:e})"
                )));
            }
        }
        Ok(TangentVector {
            foot: foot.clone(),
            vec,
        })
    }

    pub fn tangent_from_slice(&self, foot: &ManifoldPoint, vec: &[f64]) -> Result<TangentVector> {
        self.tangent(foot, DVector::from_column_slice(vec))
    }

    pub fn zero_tangent(&self, foot: &ManifoldPoint) -> TangentVector {
        TangentVector {
            foot: foot.clone(),
            vec: DVector::zeros(self.ambient_dim()),
        }
    }

    /// Riemannian norm of a tangent vector.
    pub fn tangent_norm(&self, v: &TangentVector) -> f64 {
        self.norm(&v.vec)
    }

    pub fn exp_map(&self, x: &ManifoldPoint, v: &TangentVector) -> Result<ManifoldPoint> {
        self.check_coords(&x.0)?;
        self.check_same_foot(x, &v.foot)?;
        if v.vec.iter().any(|c| !c.is_finite()) {
            return Err(invalid("non-finite tangent coordinate"));
        }
        Ok(ManifoldPoint(self.exp_raw(&x.0, &v.vec)))
    }

    pub fn log_map(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> Result<TangentVector> {
        self.check_coords(&x.0)?;
        self.check_coords(&y.0)?;
        let vec = self.log_raw(&x.0, &y.0)?;
        Ok(TangentVector { foot: x.clone(), vec })
    }

    pub fn distance(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> Result<f64> {
        self.check_coords(&x.0)?;
        self.check_coords(&y.0)?;
        Ok(self.distance_raw(&x.0, &y.0))
    }

    /// Transports `v` along the geodesic `t -> exp_x(t w)` from `t = 0` to `t = 1`.
    pub fn parallel_transport(&self, v: &TangentVector, w: &TangentVector) -> Result<TangentVector> {
        self.check_same_foot(&v.foot, &w.foot)?;
        let foot = ManifoldPoint(self.exp_raw(&w.foot.0, &w.vec));
        let vec = self.transport_raw(&w.foot.0, &w.vec, &v.vec);
        Ok(TangentVector { foot, vec })
    }

    /// Sectional curvature of the plane spanned by `u` and `v`.
    pub fn sectional_curvature(&self, u: &TangentVector, v: &TangentVector) -> Result<f64> {
        use crate::curvature::CurvatureOracle;
        self.check_same_foot(&u.foot, &v.foot)?;
        let basis = self.tangent_basis(&u.foot);
        let cu = basis.to_coords(&u.vec);
        let cv = basis.to_coords(&v.vec);
        let uu = cu.dot(&cu);
        let vv = cv.dot(&cv);
        let uv = cu.dot(&cv);
        let denom = uu * vv - uv * uv;
        if !(denom > 1e-12 * uu * vv) {
            return Err(Error::DegeneratePlane);
        }
        let r = self.curvature_oracle().curvature(&cu, &cv, &cv);
        Ok(r.dot(&cu) / denom)
    }

    /// Orthonormal basis of the tangent space obtained by a deterministic
    /// Gram-Schmidt completion of the foot point.
    pub fn tangent_basis(&self, x: &ManifoldPoint) -> TangentBasis {
        let n = self.ambient_dim();
        let vectors = match self.kind {
            Kind::Euclidean => (0..n).map(|i| unit(n, i)).collect(),
            Kind::Sphere => {
                let xh = &x.0 / x.0.norm();
                let drop = xh.iamax();
                let candidates = (0..n).filter(|&i| i != drop).map(|i| {
                    let mut e = unit(n, i);
                    e.axpy(-xh[i], &xh, 1.0);
                    e
                });
                gram_schmidt(candidates, |a, b| a.dot(b))
            }
            Kind::Hyperbolic => {
                let xh = &x.0 / self.radius();
                let candidates = (0..self.dim).map(|i| {
                    // Minkowski projection onto x^perp: e + <e,x>_* x.
                    let mut e = unit(n, i);
                    e.axpy(xh[i], &xh, 1.0);
                    e
                });
                gram_schmidt(candidates, minkowski)
            }
        };
        TangentBasis {
            space: *self,
            foot: x.clone(),
            vectors,
        }
    }

    /// Uniform draw on the geodesic sphere of radius `theta` about `center`.
    pub fn sample_geodesic_sphere<R: Rng + ?Sized>(
        &self,
        center: &ManifoldPoint,
        theta: f64,
        rng: &mut R,
    ) -> Result<ManifoldPoint> {
        GeodesicSphereSampler::new(self, center, theta)?.sample(rng)
    }

    // ---------------------------------------------------------------------
    // Unchecked ambient-coordinate kernels, shared with the estimator.

    pub(crate) fn exp_raw(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        match self.kind {
            Kind::Euclidean => x + v,
            Kind::Sphere => {
                let r = self.radius();
                let a = v.norm() / r;
                if a == 0.0 {
                    return x.clone();
                }
                let mut y = x * a.cos() + v * sinc(a);
                y *= r / y.norm();
                y
            }
            Kind::Hyperbolic => {
                let r = self.radius();
                let a = minkowski(v, v).max(0.0).sqrt() / r;
                if a == 0.0 {
                    return x.clone();
                }
                let mut y = x * a.cosh() + v * sinhc(a);
                normalize_hyperboloid(&mut y, r);
                y
            }
        }
    }

    pub(crate) fn log_raw(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
        match self.kind {
            Kind::Euclidean => Ok(y - x),
            Kind::Sphere => {
                let r = self.radius();
                let (a, w, s) = sphere_angle(x, y, r);
                let gap = r * (std::f64::consts::PI - a);
                if gap <= ANTIPODE_TOL {
                    return Err(Error::CutLocus { distance: r * a, gap });
                }
                if s == 0.0 {
                    return Ok(DVector::zeros(x.len()));
                }
                let factor = if a < SMALL_ANGLE { 1.0 + a * a / 6.0 } else { a / s };
                Ok(w * (r * factor))
            }
            Kind::Hyperbolic => {
                let r = self.radius();
                let (a, w, s) = hyperbolic_angle(x, y, r);
                if s == 0.0 {
                    return Ok(DVector::zeros(x.len()));
                }
                let factor = if a < SMALL_ANGLE { 1.0 - a * a / 6.0 } else { a / s };
                Ok(w * (r * factor))
            }
        }
    }

    pub(crate) fn distance_raw(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        match self.kind {
            Kind::Euclidean => (y - x).norm(),
            Kind::Sphere => {
                let r = self.radius();
                r * sphere_angle(x, y, r).0
            }
            Kind::Hyperbolic => {
                let r = self.radius();
                r * hyperbolic_angle(x, y, r).0
            }
        }
    }

    pub(crate) fn transport_raw(&self, x: &DVector<f64>, w: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let r = self.radius();
        match self.kind {
            Kind::Euclidean => v.clone(),
            Kind::Sphere => {
                let nw = w.norm();
                if nw == 0.0 {
                    return v.clone();
                }
                let u = w / nw;
                let a = nw / r;
                let half = (0.5 * a).sin();
                let coef = u.dot(v);
                let mut out = v.clone();
                out.axpy(-2.0 * half * half * coef, &u, 1.0);
                out.axpy(-a.sin() * coef / r, x, 1.0);
                out
            }
            Kind::Hyperbolic => {
                let nw = minkowski(w, w).max(0.0).sqrt();
                if nw == 0.0 {
                    return v.clone();
                }
                let u = w / nw;
                let a = nw / r;
                let half = (0.5 * a).sinh();
                let coef = minkowski(&u, v);
                let mut out = v.clone();
                out.axpy(2.0 * half * half * coef, &u, 1.0);
                out.axpy(a.sinh() * coef / r, x, 1.0);
                out
            }
        }
    }

    pub(crate) fn check_coords(&self, c: &DVector<f64>) -> Result<()> {
        if c.len() != self.ambient_dim() {
            return Err(invalid(format!(
                "expected {} ambient coordinates, got {}",
                self.ambient_dim(),
                c.len()
            )));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite coordinate"));
        }
        match self.kind {
            Kind::Euclidean => Ok(()),
            Kind::Sphere => {
                let r2 = self.radius().powi(2);
                let dev = (c.norm_squared() - r2).abs();
                if dev > POINT_TOL * r2 {
                    return Err(invalid(format!("point is off the sphere by {dev:e}")));
                }
                Ok(())
            }
            Kind::Hyperbolic => {
                let r2 = self.radius().powi(2);
                let dev = (minkowski(c, c) + r2).abs();
                if dev > POINT_TOL * c.norm_squared().max(r2) {
                    return Err(invalid(format!("point is off the hyperboloid by {dev:e}")));
                }
                if c[self.dim] <= 0.0 {
                    return Err(invalid("point lies on the negative sheet"));
                }
                Ok(())
            }
        }
    }

    fn check_same_foot(&self, a: &ManifoldPoint, b: &ManifoldPoint) -> Result<()> {
        let scale = a.0.norm().max(1.0);
        if a.0.len() != b.0.len() || (&a.0 - &b.0).norm() > 1e-12 * scale {
            return Err(invalid("tangent vectors do not share the expected foot point"));
        }
        Ok(())
    }
}

/// Orthonormal frame of a tangent space, used to express tangent vectors in
/// coordinates.
#[derive(Debug, Clone)]
pub struct TangentBasis {
    space: SpaceForm,
    foot: ManifoldPoint,
    vectors: Vec<DVector<f64>>,
}

impl TangentBasis {
    pub fn foot(&self) -> &ManifoldPoint {
        &self.foot
    }

    pub fn vectors(&self) -> &[DVector<f64>] {
        &self.vectors
    }

    pub fn to_coords(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.vectors.len(), self.vectors.iter().map(|b| self.space.inner(b, v)))
    }

    pub fn from_coords(&self, c: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.space.ambient_dim());
        for (ci, b) in c.iter().zip(&self.vectors) {
            out.axpy(*ci, b, 1.0);
        }
        out
    }

    pub fn tangent(&self, c: &DVector<f64>) -> TangentVector {
        TangentVector {
            foot: self.foot.clone(),
            vec: self.from_coords(c),
        }
    }

    /// `exp` of a coordinate vector.
    pub fn exp_coords(&self, c: &DVector<f64>) -> ManifoldPoint {
        ManifoldPoint(self.space.exp_raw(&self.foot.0, &self.from_coords(c)))
    }

    /// `log` of a point, in coordinates.
    pub fn log_coords(&self, y: &ManifoldPoint) -> Result<DVector<f64>> {
        Ok(self.to_coords(&self.space.log_raw(&self.foot.0, &y.0)?))
    }
}

/// Reusable sampler for the uniform law on a geodesic sphere.
#[derive(Debug, Clone)]
pub struct GeodesicSphereSampler {
    basis: TangentBasis,
    theta: f64,
}

impl GeodesicSphereSampler {
    pub fn new(space: &SpaceForm, center: &ManifoldPoint, theta: f64) -> Result<Self> {
        if !(theta.is_finite() && theta >= 0.0) {
            return Err(invalid(format!("radius {theta} must be finite and nonnegative")));
        }
        if theta >= space.injectivity_radius() {
            return Err(invalid(format!(
                "radius {theta} reaches the cut locus (injectivity radius {})",
                space.injectivity_radius()
            )));
        }
        space.check_coords(center.coords())?;
        Ok(Self {
            basis: space.tangent_basis(center),
            theta,
        })
    }

    pub fn basis(&self) -> &TangentBasis {
        &self.basis
    }

    /// Unit direction drawn uniformly, in basis coordinates.
    pub fn sample_direction<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let d = self.basis.vectors.len();
        loop {
            let z = DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
            let n = z.norm();
            if n > 1e-300 {
                return z / n;
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ManifoldPoint> {
        if self.theta == 0.0 {
            return Ok(self.basis.foot.clone());
        }
        let dir = self.sample_direction(rng);
        Ok(self.basis.exp_coords(&(dir * self.theta)))
    }
}

/// Minkowski product with the last coordinate timelike.
pub fn minkowski(u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let n = u.len();
    let spatial: f64 = u.rows(0, n - 1).dot(&v.rows(0, n - 1));
    spatial - u[n - 1] * v[n - 1]
}

fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut e = DVector::zeros(n);
    e[i] = 1.0;
    e
}

fn gram_schmidt<I, F>(candidates: I, inner: F) -> Vec<DVector<f64>>
where
    I: Iterator<Item = DVector<f64>>,
    F: Fn(&DVector<f64>, &DVector<f64>) -> f64,
{
    let mut out: Vec<DVector<f64>> = Vec::new();
    for mut v in candidates {
        // two passes keep the frame orthonormal to rounding
        for _ in 0..2 {
            for b in &out {
                let c = inner(b, &v);
                v.axpy(-c, b, 1.0);
            }
        }
        let n = inner(&v, &v).max(0.0).sqrt();
        out.push(v / n);
    }
    out
}

fn normalize_hyperboloid(c: &mut DVector<f64>, r: f64) {
    let n = c.len();
    let spatial = c.rows(0, n - 1).norm_squared();
    c[n - 1] = (r * r + spatial).sqrt();
}

/// Angle between two sphere points, the unnormalized direction `y - cos(a) x`
/// (unit radius) and its norm `sin(a)`.
fn sphere_angle(x: &DVector<f64>, y: &DVector<f64>, r: f64) -> (f64, DVector<f64>, f64) {
    let xh = x / r;
    let yh = y / r;
    let c = xh.dot(&yh).clamp(-1.0, 1.0);
    let w = &yh - &xh * c;
    let s = w.norm();
    (s.atan2(c), w, s)
}

/// Hyperbolic counterpart of [`sphere_angle`].
fn hyperbolic_angle(x: &DVector<f64>, y: &DVector<f64>, r: f64) -> (f64, DVector<f64>, f64) {
    let xh = x / r;
    let yh = y / r;
    let c = (-minkowski(&xh, &yh)).max(1.0);
    let w = &yh - &xh * c;
    let s = minkowski(&w, &w).max(0.0).sqrt();
    // acosh loses accuracy near 1, asinh of the chord loses it for far points
    let a = if c < 2.0 { s.asinh() } else { c.acosh() };
    (a, w, s)
}

fn sinc(a: f64) -> f64 {
    if a < SMALL_ANGLE {
        1.0 - a * a / 6.0
    } else {
        a.sin() / a
    }
}

fn sinhc(a: f64) -> f64 {
    if a < SMALL_ANGLE {
        1.0 + a * a / 6.0
    } else {
        a.sinh() / a
    }
}
