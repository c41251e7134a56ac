use spaceform_stats::experiments::{
    run_modulation_experiment, write_modulation_csv, ExperimentConfig, ModulationRecord, MODULATION_HEADER,
};
use spaceform_stats::SpaceForm;

fn config(space: SpaceForm, thetas: &[f64], ns: &[usize], trials: usize) -> ExperimentConfig {
    ExperimentConfig {
        trials,
        seed: 11,
        ..ExperimentConfig::new(space, thetas.to_vec(), ns.to_vec())
    }
}

fn csv(records: &[ModulationRecord]) -> Vec<u8> {
    let mut out = Vec::new();
    write_modulation_csv(&mut out, records).unwrap();
    out
}

#[test]
fn output_does_not_depend_on_worker_count() {
    let cfg = config(SpaceForm::unit_hyperbolic(3), &[0.5, 2.0], &[3, 10], 400);
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        csv(&pool.install(|| run_modulation_experiment(&cfg).unwrap()))
    };
    let one = run(1);
    assert_eq!(one, run(3));
    let text = String::from_utf8(one).unwrap();
    assert_eq!(text.lines().next(), Some(MODULATION_HEADER));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn sphere_modulation_grows_with_the_radius() {
    let thetas = [0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4];
    let records = run_modulation_experiment(&config(SpaceForm::unit_sphere(2), &thetas, &[100], 2000)).unwrap();
    for pair in records.windows(2) {
        let slack = 2.0 * pair[0].alpha_stderr.hypot(pair[1].alpha_stderr);
        assert!(
            pair[1].alpha_mc >= pair[0].alpha_mc - slack,
            "theta {} -> {}: {} -> {}",
            pair[0].theta,
            pair[1].theta,
            pair[0].alpha_mc,
            pair[1].alpha_mc
        );
    }
}

#[test]
fn hyperbolic_modulation_stays_below_one() {
    let records = run_modulation_experiment(&config(
        SpaceForm::unit_hyperbolic(3),
        &[0.5, 1.0, 2.0, 4.0],
        &[2, 10, 100],
        2000,
    ))
    .unwrap();
    for r in &records {
        assert!(
            r.alpha_mc <= 1.0 + 3.0 * r.alpha_stderr,
            "theta {} n {}: {}",
            r.theta,
            r.n,
            r.alpha_mc
        );
    }
}

/// Sample size should barely matter from ten points on.
#[test]
fn hyperbolic_modulation_is_insensitive_to_large_samples() {
    let records = run_modulation_experiment(&config(
        SpaceForm::unit_hyperbolic(3),
        &[1.0, 2.0, 4.0],
        &[10, 100],
        5000,
    ))
    .unwrap();
    let mut failures = Vec::new();
    for pair in records.chunks(2) {
        let (small, large) = (&pair[0], &pair[1]);
        let gap = (small.alpha_mc - large.alpha_mc).abs();
        let tol = 3.0 * small.alpha_stderr.hypot(large.alpha_stderr);
        if gap > tol {
            failures.push(format!(
                "theta {}: n=10 {:.4} vs n=100 {:.4}, gap {gap:.4} > {tol:.4}",
                small.theta, small.alpha_mc, large.alpha_mc
            ));
        }
    }
    assert!(failures.is_empty(), "{failures:#?}");
}
