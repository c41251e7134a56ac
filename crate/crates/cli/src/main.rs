mod settings;

use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spaceform_stats::experiments::{
    bias_null_check, expansion_convergence_study, run_modulation_experiment, variance_profile_s2, write_bias_csv,
    write_modulation_csv, write_slopes_csv, write_variance_profile_csv, ExperimentConfig, DEFAULT_TRIALS, STUDY_SCALES,
};
use spaceform_stats::{frechet_mean, Error, EstimatorConfig, ManifoldPoint, SpaceForm};

use settings::{parse_grid, CommonArgs, ConfigError, Settings};

#[derive(Parser)]
#[command(
    name = "spaceform",
    version,
    about = "Fréchet mean experiments on constant-curvature spaces"
)]
struct Cli {
    /// Worker threads (defaults to the number of cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log progress to stderr
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo modulation factor of the empirical mean
    Modulation {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        max_iters: Option<String>,
    },
    /// Variance of a circle of the unit two-sphere against latitude
    VarianceProfile {
        #[command(flatten)]
        common: CommonArgs,
        /// Latitudes (colatitude from the pole), `start:stop:step` or a list
        #[arg(long)]
        phi_grid: Option<String>,
    },
    /// Fitted residual slopes of the Taylor expansions
    ExpansionCheck {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Monte Carlo bias of the empirical mean
    BiasCheck {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Fréchet mean of the points in a file (one point per line, ambient coordinates)
    Mean {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        points: Option<String>,
        #[arg(long)]
        max_iters: Option<String>,
    },
}

enum Failure {
    Config(String),
    Numerical(String),
    Io(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(msg) => Failure::Config(msg),
            other => Failure::Numerical(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose {
            log::LevelFilter::Info
        } else {
            log::LevelFilter::Warn
        })
        .parse_default_env()
        .init();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot configure {t} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("i/o error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn output(settings: &Settings) -> io::Result<Box<dyn Write>> {
    Ok(match &settings.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn estimator(settings: &Settings, base: EstimatorConfig) -> Result<EstimatorConfig, Failure> {
    let max_iters = settings.parse::<usize>("max-iters")?.unwrap_or(base.max_iters);
    Ok(EstimatorConfig { max_iters, ..base })
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Modulation { common, max_iters } => {
            let s = Settings::new(&common, &[("max-iters", max_iters)])?;
            let config = experiment_config(&s)?;
            let records = run_modulation_experiment(&config)?;
            let mut w = output(&s)?;
            write_modulation_csv(&mut w, &records)?;
            w.flush()?;
        }
        Command::VarianceProfile { common, phi_grid } => {
            let s = Settings::new(&common, &[("phi-grid", phi_grid)])?;
            let thetas = s.thetas()?.unwrap_or_else(|| vec![PI / 2.0]);
            let phis = match s.get("phi-grid") {
                Some(g) => parse_grid(g)?,
                None => (0..=90).map(|i| PI * i as f64 / 90.0).collect(),
            };
            let mut rows = Vec::with_capacity(thetas.len() * phis.len());
            for &theta in &thetas {
                for (phi, var) in variance_profile_s2(theta, &phis)? {
                    rows.push((theta, phi, var));
                }
            }
            let mut w = output(&s)?;
            write_variance_profile_csv(&mut w, &rows)?;
            w.flush()?;
        }
        Command::ExpansionCheck { common } => {
            let s = Settings::new(&common, &[])?;
            let spaces = if s.get("manifold").is_some() {
                vec![s.space()?]
            } else {
                vec![
                    SpaceForm::unit_sphere(3),
                    SpaceForm::unit_hyperbolic(3),
                    SpaceForm::euclidean(3),
                ]
            };
            let records = expansion_convergence_study(&spaces, &STUDY_SCALES)?;
            let mut w = output(&s)?;
            write_slopes_csv(&mut w, &records)?;
            w.flush()?;
        }
        Command::BiasCheck { common } => {
            let s = Settings::new(&common, &[])?;
            let config = experiment_config(&s)?;
            let mut records = Vec::new();
            for &theta in &config.theta_grid {
                for &n in &config.n_list {
                    records.push(bias_null_check(config.space, theta, n, config.trials, config.seed)?);
                }
            }
            let mut w = output(&s)?;
            write_bias_csv(&mut w, &records)?;
            w.flush()?;
            if let Some(r) = records.iter().find(|r| !r.passed()) {
                return Err(Failure::Numerical(format!(
                    "bias {:.3e} exceeds 4 standard errors ({:.3e}) at theta {}, n {}",
                    r.bias_norm, r.stderr, r.theta, r.n
                )));
            }
        }
        Command::Mean {
            common,
            points,
            max_iters,
        } => {
            let s = Settings::new(&common, &[("points", points), ("max-iters", max_iters)])?;
            let space = s.space()?;
            let path = s
                .get("points")
                .ok_or_else(|| ConfigError("mean needs --points FILE".into()))?;
            let pts = read_points(&space, Path::new(path))?;
            let report = frechet_mean(&space, &pts, &estimator(&s, EstimatorConfig::default())?)?;
            let mut w = output(&s)?;
            let coords: Vec<String> = report.mean.coords().iter().map(|c| format!("{c:.16e}")).collect();
            writeln!(w, "mean,{}", coords.join(","))?;
            writeln!(w, "iterations,{}", report.iterations)?;
            writeln!(w, "grad_norm,{:.16e}", report.final_grad_norm)?;
            writeln!(w, "variance,{:.16e}", report.variance_at_mean)?;
            writeln!(w, "converged,{}", report.converged)?;
            w.flush()?;
            if !report.converged {
                return Err(Failure::Numerical(format!(
                    "estimator stopped with gradient norm {:.3e}",
                    report.final_grad_norm
                )));
            }
        }
    }
    Ok(())
}

fn experiment_config(s: &Settings) -> Result<ExperimentConfig, Failure> {
    let space = s.space()?;
    let thetas = s
        .thetas()?
        .ok_or_else(|| ConfigError("missing --theta or --theta-grid".into()))?;
    let ns = s
        .sample_sizes()?
        .ok_or_else(|| ConfigError("missing --n or --n-list".into()))?;
    let mut config = ExperimentConfig::new(space, thetas, ns);
    config.trials = s.parse("trials")?.unwrap_or(DEFAULT_TRIALS);
    config.seed = s.parse("seed")?.unwrap_or(0);
    config.estimator = estimator(s, config.estimator)?;
    config.validate()?;
    Ok(config)
}

fn read_points(space: &SpaceForm, path: &Path) -> Result<Vec<ManifoldPoint>, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read points file {}: {e}", path.display())))?;
    let mut pts = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let coords = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| ConfigError(format!("{}:{}: {e}", path.display(), i + 1)))?;
        let p = space
            .point_from_slice(&coords)
            .map_err(|e| ConfigError(format!("{}:{}: {e}", path.display(), i + 1)))?;
        pts.push(p);
    }
    Ok(pts)
}
