//! Fixed-point estimation of the Fréchet mean of a finite sample.
//!
//! Each iteration moves along the tangent mean of the logs,
//! `x <- exp_x(tau * mean_i log_x(x_i))`, halving `tau` whenever the
//! variance does not decrease enough. After an accepted step `tau` is reset
//! from a secant estimate of the Hessian along the step.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::kkc::kkc_check;
use crate::space_form::{ManifoldPoint, SpaceForm};

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    FirstSample,
    Point(ManifoldPoint),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    /// Upper bound on accepted steps.
    pub max_iters: usize,
    /// Threshold on the norm of the tangent mean of the logs.
    pub grad_tol: f64,
    pub initial_step: f64,
    pub step_shrink: f64,
    pub min_step: f64,
    pub init: Init,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            grad_tol: 1e-10,
            initial_step: 1.0,
            step_shrink: 0.5,
            min_step: 1e-4,
            init: Init::FirstSample,
        }
    }
}

impl EstimatorConfig {
    pub fn starting_at(point: ManifoldPoint) -> Self {
        Self {
            init: Init::Point(point),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_step > 0.0 && self.min_step <= self.initial_step && self.initial_step <= 1.0) {
            return Err(invalid("step sizes must satisfy 0 < min_step <= initial_step <= 1"));
        }
        if !(self.grad_tol > 0.0) {
            return Err(invalid("grad_tol must be positive"));
        }
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0) {
            return Err(invalid("step_shrink must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorReport {
    pub mean: ManifoldPoint,
    pub iterations: usize,
    pub final_grad_norm: f64,
    pub variance_at_mean: f64,
    pub converged: bool,
}

/// Relative size of rounding noise in the evaluated variance.
const VARIANCE_NOISE: f64 = 1e-12;

const SUFFICIENT_DECREASE: f64 = 0.1;

/// Largest step the secant rule may propose.
const MAX_SECANT_STEP: f64 = 4.0;

struct Evaluation {
    grad: DVector<f64>,
    grad_norm: f64,
    variance: f64,
}

fn evaluate(space: &SpaceForm, x: &DVector<f64>, points: &[ManifoldPoint]) -> Result<Evaluation> {
    let mut grad = DVector::zeros(x.len());
    let mut variance = 0.0;
    for p in points {
        let l = space.log_raw(x, p.coords())?;
        variance += space.inner(&l, &l);
        grad += l;
    }
    let n = points.len() as f64;
    grad /= n;
    let grad_norm = space.norm(&grad);
    Ok(Evaluation {
        grad,
        grad_norm,
        variance: variance / n,
    })
}

/// Step for the next iteration from the curvature of the variance along the
/// last accepted step, clamped to `[min_step, MAX_SECANT_STEP]`.
fn secant_step(
    space: &SpaceForm,
    x: &DVector<f64>,
    current: &Evaluation,
    next: &Evaluation,
    tau: f64,
    config: &EstimatorConfig,
) -> f64 {
    let g2 = current.grad_norm * current.grad_norm;
    let carried = space.transport_raw(x, &(&current.grad * tau), &current.grad);
    let rayleigh = (1.0 - space.inner(&next.grad, &carried) / g2) / tau;
    if rayleigh.is_finite() && rayleigh > 0.0 {
        (1.0 / rayleigh).clamp(config.min_step, MAX_SECANT_STEP)
    } else {
        config.initial_step
    }
}

/// Fréchet mean of `points` by damped fixed-point iteration.
///
/// Non-convergence is reported through `converged = false`. A trial step
/// onto a cut locus is rejected like any other; a cut locus at the starting
/// point is an error.
pub fn frechet_mean(space: &SpaceForm, points: &[ManifoldPoint], config: &EstimatorConfig) -> Result<EstimatorReport> {
    config.validate()?;
    let first = points
        .first()
        .ok_or_else(|| invalid("cannot average an empty sample"))?;
    for p in points {
        space.check_coords(p.coords())?;
    }
    let mut x = match &config.init {
        Init::FirstSample => first.coords().clone(),
        Init::Point(p) => {
            space.check_coords(p.coords())?;
            p.coords().clone()
        }
    };

    let start = x.clone();
    let mut current = evaluate(space, &x, points)?;
    let mut tau = config.initial_step;
    let mut iterations = 0;
    let mut converged = current.grad_norm <= config.grad_tol;
    while !converged && iterations < config.max_iters {
        let candidate = space.exp_raw(&x, &(&current.grad * tau));
        let next = match evaluate(space, &candidate, points) {
            Ok(next) => next,
            Err(Error::CutLocus { .. }) => {
                tau *= config.step_shrink;
                if tau < config.min_step {
                    break;
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        // Armijo test against the directional derivative `-2 tau |g|^2`;
        // below the rounding band the gradient decides.
        let band = VARIANCE_NOISE * current.variance;
        let predicted = 2.0 * tau * current.grad_norm * current.grad_norm;
        let actual = current.variance - next.variance;
        let decreased = if predicted > band {
            actual >= SUFFICIENT_DECREASE * predicted
        } else {
            actual >= -band && next.grad_norm < current.grad_norm
        };
        if decreased {
            tau = secant_step(space, &x, &current, &next, tau, config);
            x = candidate;
            current = next;
            iterations += 1;
            converged = current.grad_norm <= config.grad_tol;
        } else {
            tau *= config.step_shrink;
            if tau < config.min_step {
                break;
            }
        }
    }

    let mean = ManifoldPoint::from_raw(x);
    if converged {
        // any center bounds the support radius; try the start and the result
        let radius_about = |c: &DVector<f64>| {
            points
                .iter()
                .map(|p| space.distance_raw(c, p.coords()))
                .fold(0.0, f64::max)
        };
        let radius = radius_about(&start).min(radius_about(mean.coords()));
        let report = kkc_check(radius, space.kappa(), space.injectivity_radius());
        if !report.satisfied {
            log::warn!(
                "sample radius {radius} exceeds the concentration bound {}; the mean may not be unique",
                report.max_radius
            );
        }
    }
    Ok(EstimatorReport {
        mean,
        iterations,
        final_grad_norm: current.grad_norm,
        variance_at_mean: current.variance,
        converged,
    })
}

/// Empirical variance `(1/n) sum dist^2(x, x_i)`.
pub fn variance_at(space: &SpaceForm, x: &ManifoldPoint, points: &[ManifoldPoint]) -> Result<f64> {
    if points.is_empty() {
        return Err(invalid("cannot evaluate the variance of an empty sample"));
    }
    space.check_coords(x.coords())?;
    let mut acc = 0.0;
    for p in points {
        space.check_coords(p.coords())?;
        acc += space.distance_raw(x.coords(), p.coords()).powi(2);
    }
    Ok(acc / points.len() as f64)
}

/// Second moment of the logs at `x`, in the coordinates of `space.tangent_basis(x)`.
pub fn covariance_at(space: &SpaceForm, x: &ManifoldPoint, points: &[ManifoldPoint]) -> Result<DMatrix<f64>> {
    if points.is_empty() {
        return Err(invalid("cannot evaluate the covariance of an empty sample"));
    }
    space.check_coords(x.coords())?;
    let basis = space.tangent_basis(x);
    let d = space.dim();
    let mut acc = DMatrix::zeros(d, d);
    for p in points {
        space.check_coords(p.coords())?;
        let c = basis.log_coords(p)?;
        acc += &c * c.transpose();
    }
    Ok(acc / points.len() as f64)
}
