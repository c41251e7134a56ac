use std::fs;
use std::process::{Command, Output};

fn spaceform(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spaceform"))
        .args(args)
        .output()
        .expect("run spaceform")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn modulation_writes_the_csv_schema() {
    let out = spaceform(&[
        "modulation",
        "--manifold",
        "s2",
        "--theta-grid",
        "0.2,0.4",
        "--n-list",
        "2,5",
        "--trials",
        "50",
        "--seed",
        "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("manifold,d,kappa,theta,n,trials,alpha_mc,alpha_stderr,alpha_eq19,alpha_eq20,seed")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows
        .iter()
        .all(|r| r.starts_with("s2,2,") && r.ends_with(",3") && r.split(',').count() == 11));
}

#[test]
fn output_is_identical_across_thread_counts() {
    let args = [
        "modulation",
        "--manifold",
        "h3",
        "--theta-grid",
        "1,2",
        "--n-list",
        "3,10",
        "--trials",
        "300",
        "--seed",
        "9",
    ];
    let one = spaceform(&[&["--threads", "1"], &args[..]].concat());
    let two = spaceform(&[&["--threads", "2"], &args[..]].concat());
    assert!(one.status.success() && two.status.success());
    assert_eq!(one.stdout, two.stdout);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let csv = dir.path().join("out.csv");
    fs::write(
        &cfg,
        format!(
            "# small run\nmanifold = h3\ntheta = 1.5\nn_list = 4\ntrials = 10\nseed = 2\nout = {}\n",
            csv.display()
        ),
    )
    .unwrap();
    let out = spaceform(&["modulation", "--config", cfg.to_str().unwrap(), "--trials", "20"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let text = fs::read_to_string(&csv).unwrap();
    let row = text.lines().nth(1).unwrap();
    assert!(row.starts_with("h3,3,"), "{row}");
    assert_eq!(row.split(',').nth(5), Some("20"));
}

#[test]
fn invalid_configuration_exits_with_two() {
    for args in [
        &["modulation", "--manifold", "x3", "--theta", "1", "--n", "2"][..],
        &["modulation", "--manifold", "s2", "--n", "2"],
        &["modulation", "--manifold", "s2", "--theta", "3.5", "--n", "2"],
        &[
            "modulation",
            "--manifold",
            "s2",
            "--theta",
            "0.5",
            "--n",
            "2",
            "--trials",
            "many",
        ],
        &["variance-profile", "--phi-grid", "1:0:0.1"],
    ] {
        let out = spaceform(args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "colour = blue\n").unwrap();
    let out = spaceform(&["modulation", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mean_reports_and_fails_numerically() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("points.txt");
    fs::write(&pts, "1 0 0\n0 1 0  # second\n\n0,0,1\n").unwrap();
    let out = spaceform(&["mean", "--manifold", "s2", "--points", pts.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mean: Vec<f64> = text
        .lines()
        .next()
        .unwrap()
        .split(',')
        .skip(1)
        .map(|c| c.parse().unwrap())
        .collect();
    let third = 1.0 / 3f64.sqrt();
    assert!(mean.iter().all(|c| (c - third).abs() < 1e-9), "{mean:?}");
    assert!(text.contains("converged,true"));

    let out = spaceform(&[
        "mean",
        "--manifold",
        "s2",
        "--points",
        pts.to_str().unwrap(),
        "--max-iters",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout(&out).contains("converged,false"));

    let out = spaceform(&[
        "mean",
        "--manifold",
        "s2",
        "--points",
        dir.path().join("missing").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn variance_profile_and_expansion_check() {
    let out = spaceform(&["variance-profile", "--theta", "pi", "--phi-grid", "0,pi"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some("theta,phi,variance"));
    assert_eq!(text.lines().count(), 3);

    let out = spaceform(&["variance-profile"]);
    assert_eq!(stdout(&out).lines().count(), 92);

    let out = spaceform(&["expansion-check", "--manifold", "e3"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some("manifold,expansion,order,slope,max_residual"));
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn bias_check_passes_on_a_small_run() {
    let out = spaceform(&[
        "bias-check",
        "--manifold",
        "s3",
        "--theta",
        "0.3",
        "--n",
        "5",
        "--trials",
        "500",
        "--seed",
        "4",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert_eq!(
        text.lines().next(),
        Some("manifold,theta,n,trials,bias_norm,stderr,passed")
    );
    assert!(text.lines().nth(1).unwrap().ends_with(",true"));
}
