use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spaceform_stats::moments::{mean_field_expansion, LocalMoments};
use spaceform_stats::numerics::fit_loglog_slope;
use spaceform_stats::{
    frechet_mean, DevelopmentPoint, EstimatorConfig, GeodesicSphereSampler, ManifoldPoint, SpaceForm,
};

fn sample(space: &SpaceForm, theta: f64, n: usize, seed: u64) -> Vec<ManifoldPoint> {
    let sampler = GeodesicSphereSampler::new(space, &space.pole(), theta).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sampler.sample(&mut rng).unwrap()).collect()
}

fn tangent_mean(space: &SpaceForm, x: &ManifoldPoint, points: &[ManifoldPoint]) -> f64 {
    let mut acc = DVector::zeros(space.ambient_dim());
    for p in points {
        acc += space.log_map(x, p).unwrap().vec();
    }
    space.norm(&(acc / points.len() as f64))
}

#[test]
fn result_is_an_exponential_barycenter() {
    let cases = [
        (SpaceForm::unit_sphere(2), 1.0),
        (SpaceForm::unit_sphere(3), 1.2),
        (SpaceForm::unit_hyperbolic(3), 4.0),
        (SpaceForm::euclidean(3), 2.0),
    ];
    for (space, theta) in cases {
        for seed in 0..20 {
            let points = sample(&space, theta, 10, seed);
            let config = EstimatorConfig::default();
            let report = frechet_mean(&space, &points, &config).unwrap();
            assert!(report.converged, "{} seed {seed}", space.label());
            let g = tangent_mean(&space, &report.mean, &points);
            assert!(g <= config.grad_tol, "{} seed {seed}: gradient {g:e}", space.label());
        }
    }
}

fn rotation(angles: [f64; 3]) -> DMatrix<f64> {
    let [a, b, c] = angles;
    let rz = |t: f64| DMatrix::from_row_slice(3, 3, &[t.cos(), -t.sin(), 0.0, t.sin(), t.cos(), 0.0, 0.0, 0.0, 1.0]);
    let rx = |t: f64| DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, t.cos(), -t.sin(), 0.0, t.sin(), t.cos()]);
    rz(a) * rx(b) * rz(c)
}

#[test]
fn rotating_the_sample_rotates_the_mean() {
    let s2 = SpaceForm::unit_sphere(2);
    let rot = rotation([0.7, -1.1, 2.3]);
    for seed in 0..20 {
        let points = sample(&s2, 0.9, 7, seed);
        let moved: Vec<ManifoldPoint> = points.iter().map(|p| s2.point(&rot * p.coords()).unwrap()).collect();
        let config = EstimatorConfig {
            grad_tol: 1e-13,
            ..EstimatorConfig::default()
        };
        let mean = frechet_mean(&s2, &points, &config).unwrap().mean;
        // start the rotated run from the image of the original start
        let start = EstimatorConfig::starting_at(s2.point(&rot * points[0].coords()).unwrap());
        let moved_mean = frechet_mean(
            &s2,
            &moved,
            &EstimatorConfig {
                grad_tol: 1e-13,
                ..start
            },
        )
        .unwrap()
        .mean;
        let gap = (&rot * mean.coords() - moved_mean.coords()).amax();
        assert!(gap <= 1e-9, "seed {seed}: {gap:e}");
    }
}

#[test]
fn repeated_runs_are_bit_identical() {
    let h3 = SpaceForm::unit_hyperbolic(3);
    let points = sample(&h3, 2.0, 12, 5);
    let config = EstimatorConfig::default();
    let a = frechet_mean(&h3, &points, &config).unwrap();
    let b = frechet_mean(&h3, &points, &config).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.mean.coords().as_slice(), b.mean.coords().as_slice());
}

#[test]
fn estimate_agrees_with_the_mean_field_expansion() {
    for space in [SpaceForm::unit_sphere(3), SpaceForm::unit_hyperbolic(3)] {
        let dev = DevelopmentPoint::at_pole(space);
        let oracle = space.curvature_oracle();
        let shape = [
            DVector::from_vec(vec![1.0, 0.2, -0.3]),
            DVector::from_vec(vec![-0.1, 0.9, 0.5]),
            DVector::from_vec(vec![0.3, -0.4, 0.8]),
            DVector::from_vec(vec![0.6, 0.7, 0.1]),
        ];
        let scales = [0.0125, 0.025, 0.05, 0.1];
        let residuals: Vec<f64> = scales
            .iter()
            .map(|&eps| {
                let logs: Vec<DVector<f64>> = shape.iter().map(|s| s * eps).collect();
                let points: Vec<ManifoldPoint> = logs.iter().map(|l| dev.exp(l)).collect();
                let config = EstimatorConfig {
                    grad_tol: 1e-15,
                    ..EstimatorConfig::starting_at(space.pole())
                };
                let report = frechet_mean(&space, &points, &config).unwrap();
                assert!(report.final_grad_norm < 1e-14);
                let predicted = mean_field_expansion(&LocalMoments::from_logs(&logs).unwrap(), &oracle).unwrap();
                (predicted - dev.log(&report.mean).unwrap()).norm()
            })
            .collect();
        let slope = fit_loglog_slope(&scales, &residuals).unwrap();
        assert!(
            slope >= 4.6,
            "{}: slope {slope}, residuals {residuals:?}",
            space.label()
        );
    }
}

#[test]
fn widely_spread_hyperbolic_samples_converge() {
    let h3 = SpaceForm::unit_hyperbolic(3);
    for seed in 0..50 {
        let points = sample(&h3, 6.0, 10, seed);
        let report = frechet_mean(&h3, &points, &EstimatorConfig::starting_at(h3.pole())).unwrap();
        assert!(report.converged, "seed {seed}: {report:?}");
        assert!(report.iterations <= 50, "seed {seed}: {} iterations", report.iterations);
    }
}

#[test]
fn non_convergence_is_reported_not_raised() {
    let s2 = SpaceForm::unit_sphere(2);
    let points = sample(&s2, 1.0, 10, 3);
    let config = EstimatorConfig {
        max_iters: 1,
        ..EstimatorConfig::default()
    };
    let report = frechet_mean(&s2, &points, &config).unwrap();
    assert!(!report.converged);
    assert_eq!(report.iterations, 1);
}
