//! Fréchet means on constant-curvature spaces: closed-form geometry,
//! curvature-aware Taylor expansions of means and moments, a damped
//! fixed-point estimator, and the Monte Carlo experiments that measure how
//! curvature modulates the convergence of the empirical mean.

pub mod curvature;
pub mod error;
pub mod estimator;
pub mod exact;
pub mod experiments;
pub mod kkc;
pub mod moments;
pub mod numerics;
pub mod space_form;
pub mod taylor;
pub mod tensor;

pub use curvature::{ConstantCurvature, CurvatureOracle, TensorCurvature};
pub use error::{Error, Result};
pub use estimator::{covariance_at, frechet_mean, variance_at, EstimatorConfig, EstimatorReport, Init};
pub use exact::DevelopmentPoint;
pub use kkc::{kkc_check, KkcConstraint, KkcReport};
pub use space_form::{GeodesicSphereSampler, Kind, ManifoldPoint, SpaceForm, TangentBasis, TangentVector};
pub use tensor::{empirical_moment, product_moment_expectation, DenseTensor, SymMomentTensor};
