//! Karcher-Kendall concentration conditions for the uniqueness of the mean.

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KkcConstraint {
    /// `r < inj / 2`.
    Injectivity,
    /// `r < pi / (2 sqrt(kappa_max))`.
    Curvature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KkcReport {
    pub satisfied: bool,
    /// The tighter of the two radius bounds.
    pub binding: KkcConstraint,
    pub max_radius: f64,
    /// `max_radius - support_radius`; negative when violated.
    pub slack: f64,
}

/// Checks whether a support ball of the given radius satisfies the
/// concentration conditions.
pub fn kkc_check(support_radius: f64, kappa_max: f64, injection_radius: f64) -> KkcReport {
    let inj_bound = 0.5 * injection_radius;
    let curv_bound = if kappa_max > 0.0 {
        PI / (2.0 * kappa_max.sqrt())
    } else {
        f64::INFINITY
    };
    let (binding, max_radius) = if curv_bound < inj_bound {
        (KkcConstraint::Curvature, curv_bound)
    } else {
        (KkcConstraint::Injectivity, inj_bound)
    };
    KkcReport {
        satisfied: support_radius < max_radius,
        binding,
        max_radius,
        slack: max_radius - support_radius,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_sphere_radius() {
        let ok = kkc_check(0.7, 1.0, PI);
        assert!(ok.satisfied);
        assert!((ok.slack - (PI / 2.0 - 0.7)).abs() < 1e-15);

        let boundary = kkc_check(PI / 2.0, 1.0, PI);
        assert!(!boundary.satisfied);
        assert_eq!(boundary.slack, 0.0);
    }

    #[test]
    fn negative_curvature_only_needs_injectivity() {
        let r = kkc_check(1e6, -1.0, f64::INFINITY);
        assert!(r.satisfied);
        assert_eq!(r.binding, KkcConstraint::Injectivity);
        let r = kkc_check(2.9, -1.0, 6.0);
        assert!(r.satisfied);
        assert!(!kkc_check(3.0, -1.0, 6.0).satisfied);
    }

    #[test]
    fn binding_constraint_is_the_smaller_bound() {
        // a small injectivity radius binds even with positive curvature
        let r = kkc_check(0.1, 1.0, 0.4);
        assert_eq!(r.binding, KkcConstraint::Injectivity);
        assert!((r.max_radius - 0.2).abs() < 1e-15);
        let r = kkc_check(0.1, 4.0, 10.0);
        assert_eq!(r.binding, KkcConstraint::Curvature);
        assert!((r.max_radius - PI / 4.0).abs() < 1e-15);
    }
}
