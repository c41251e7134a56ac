//! Seeded Monte Carlo and quadrature experiments on the space forms, with
//! their CSV writers.
//!
//! Every trial draws from its own generator, seeded from the experiment seed
//! and the trial's grid coordinates, so results do not depend on how trials
//! are scheduled across threads.

use std::f64::consts::PI;
use std::io::{self, Write};

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::estimator::{frechet_mean, EstimatorConfig, Init};
use crate::exact::DevelopmentPoint;
use crate::moments::{
    mean_field_expansion, modulation_asymptotic, modulation_nonasymptotic, recentered_mean_map_expansion, LocalMoments,
};
use crate::numerics::{fit_loglog_slope, integrate, mean_and_stderr};
use crate::space_form::{GeodesicSphereSampler, Kind, ManifoldPoint, SpaceForm};
use crate::taylor::{double_exp_expansion, h_function, neighboring_log_expansion, squared_distance_expansion};

pub const DEFAULT_TRIALS: usize = 5000;

pub const MODULATION_HEADER: &str = "manifold,d,kappa,theta,n,trials,alpha_mc,alpha_stderr,alpha_eq19,alpha_eq20,seed";
pub const VARIANCE_PROFILE_HEADER: &str = "theta,phi,variance";

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub space: SpaceForm,
    pub theta_grid: Vec<f64>,
    pub n_list: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Estimator settings; the initial point is always the pole.
    pub estimator: EstimatorConfig,
}

impl ExperimentConfig {
    pub fn new(space: SpaceForm, theta_grid: Vec<f64>, n_list: Vec<usize>) -> Self {
        Self {
            space,
            theta_grid,
            n_list,
            trials: DEFAULT_TRIALS,
            seed: 0,
            estimator: EstimatorConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.theta_grid.is_empty() || self.n_list.is_empty() {
            return Err(invalid("theta grid and sample sizes must be nonempty"));
        }
        if self.n_list.contains(&0) {
            return Err(invalid("sample sizes must be at least 1"));
        }
        let inj = self.space.injectivity_radius();
        for &theta in &self.theta_grid {
            if !(theta > 0.0 && theta.is_finite()) {
                return Err(invalid(format!("theta {theta} must be positive and finite")));
            }
            if theta >= inj {
                return Err(invalid(format!("theta {theta} reaches the cut locus at {inj}")));
            }
            if 2.0 * theta >= inj {
                log::warn!("theta {theta} exceeds the concentration radius {}", inj / 2.0);
            }
        }
        self.estimator.validate()
    }
}

/// One `(theta, n)` cell of the modulation experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationRecord {
    pub manifold: String,
    pub d: usize,
    pub kappa: f64,
    pub theta: f64,
    pub n: usize,
    pub trials: usize,
    pub alpha_mc: f64,
    pub alpha_stderr: f64,
    pub alpha_eq19: f64,
    pub alpha_eq20: f64,
    pub seed: u64,
}

/// Deterministic per-trial seed.
pub fn trial_seed(seed: u64, theta_index: usize, n_index: usize, trial: usize) -> u64 {
    [theta_index as u64, n_index as u64, trial as u64]
        .iter()
        .fold(splitmix64(seed), |h, &k| splitmix64(h ^ splitmix64(k)))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

struct TrialOutcome {
    /// Log of the estimated mean at the pole, in the pole's tangent basis.
    log_mean: DVector<f64>,
    converged: bool,
}

fn run_cell(config: &ExperimentConfig, theta_index: usize, n_index: usize) -> Result<Vec<TrialOutcome>> {
    let space = config.space;
    let pole = space.pole();
    let theta = config.theta_grid[theta_index];
    let n = config.n_list[n_index];
    let sampler = GeodesicSphereSampler::new(&space, &pole, theta)?;
    let estimator = EstimatorConfig {
        init: Init::Point(pole.clone()),
        ..config.estimator.clone()
    };
    let outcomes: Vec<Result<TrialOutcome>> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(config.seed, theta_index, n_index, t));
            let points = (0..n)
                .map(|_| sampler.sample(&mut rng))
                .collect::<Result<Vec<ManifoldPoint>>>()?;
            let report = frechet_mean(&space, &points, &estimator)?;
            Ok(TrialOutcome {
                log_mean: sampler.basis().log_coords(&report.mean)?,
                converged: report.converged,
            })
        })
        .collect();
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let failed = outcomes.iter().filter(|o| !o.converged).count();
    if failed > 0 {
        log::error!(
            "{}: theta {theta}, n {n}: estimator did not converge in {failed} of {} trials",
            space.label(),
            config.trials
        );
        return Err(Error::NonConvergence {
            failed,
            total: config.trials,
        });
    }
    Ok(outcomes)
}

/// Normalized modulation factor `n Var(mean_n) / theta^2` for the uniform
/// law on the geodesic sphere of radius `theta` about the pole.
pub fn run_modulation_experiment(config: &ExperimentConfig) -> Result<Vec<ModulationRecord>> {
    config.validate()?;
    let space = config.space;
    let d = space.dim();
    let mut records = Vec::with_capacity(config.theta_grid.len() * config.n_list.len());
    for (it, &theta) in config.theta_grid.iter().enumerate() {
        let theta2 = theta * theta;
        let alpha_eq20 = h_function(space.kappa() * theta2)
            .and_then(|h| modulation_asymptotic(h, d))
            .unwrap_or(f64::NAN);
        for (ni, &n) in config.n_list.iter().enumerate() {
            let outcomes = run_cell(config, it, ni)?;
            let dist2: Vec<f64> = outcomes.iter().map(|o| o.log_mean.norm_squared()).collect();
            let (mean, stderr) = mean_and_stderr(&dist2);
            let scale = n as f64 / theta2;
            records.push(ModulationRecord {
                manifold: space.label(),
                d,
                kappa: space.kappa(),
                theta,
                n,
                trials: config.trials,
                alpha_mc: mean * scale,
                alpha_stderr: stderr * scale,
                alpha_eq19: modulation_nonasymptotic(space.kappa(), theta2, d, n),
                alpha_eq20,
                seed: config.seed,
            });
            log::info!("{} theta={theta} n={n}: alpha_mc={:.5}", space.label(), mean * scale);
        }
    }
    Ok(records)
}

/// Monte Carlo check that the empirical mean is unbiased.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasRecord {
    pub manifold: String,
    pub theta: f64,
    pub n: usize,
    pub trials: usize,
    pub bias: DVector<f64>,
    pub bias_norm: f64,
    pub stderr: f64,
}

impl BiasRecord {
    /// `|bias| <= 4 stderr`.
    pub fn passed(&self) -> bool {
        self.bias_norm <= 4.0 * self.stderr
    }
}

/// Averages `log_pole(mean_n)` over the trials of a single `(theta, n)` cell.
pub fn bias_null_check(space: SpaceForm, theta: f64, n: usize, trials: usize, seed: u64) -> Result<BiasRecord> {
    let config = ExperimentConfig {
        trials,
        seed,
        ..ExperimentConfig::new(space, vec![theta], vec![n])
    };
    config.validate()?;
    let outcomes = run_cell(&config, 0, 0)?;
    let d = space.dim();
    let mut bias = DVector::zeros(d);
    let mut var_total = 0.0;
    for a in 0..d {
        let comp: Vec<f64> = outcomes.iter().map(|o| o.log_mean[a]).collect();
        let (m, se) = mean_and_stderr(&comp);
        bias[a] = m;
        var_total += se * se;
    }
    Ok(BiasRecord {
        manifold: space.label(),
        theta,
        n,
        trials,
        bias_norm: bias.norm(),
        bias,
        stderr: var_total.sqrt(),
    })
}

/// Variance of the uniform law on the circle of colatitude `theta` of the unit
/// two-sphere, seen from a point at colatitude `phi`.
pub fn variance_profile_s2(theta: f64, phi_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if !(0.0..=PI).contains(&theta) {
        return Err(invalid(format!("theta {theta} must lie in [0, pi]")));
    }
    phi_grid
        .iter()
        .map(|&phi| {
            if !(0.0..=PI).contains(&phi) {
                return Err(invalid(format!("phi {phi} must lie in [0, pi]")));
            }
            let (st, ct, sp, cp) = (theta.sin(), theta.cos(), phi.sin(), phi.cos());
            // even in alpha: half the circle suffices
            let f = |a: f64| (st * sp * a.cos() + ct * cp).clamp(-1.0, 1.0).acos().powi(2);
            Ok((phi, integrate(f, 0.0, PI, 1e-11) / PI))
        })
        .collect()
}

/// Scales used by the expansion order study.
pub const STUDY_SCALES: [f64; 4] = [0.02, 0.04, 0.08, 0.16];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expansion {
    DoubleExp,
    NeighboringLog,
    SquaredDistance,
    RecenteredMeanMap,
    MeanField,
}

impl Expansion {
    pub const ALL: [Expansion; 5] = [
        Expansion::DoubleExp,
        Expansion::NeighboringLog,
        Expansion::SquaredDistance,
        Expansion::RecenteredMeanMap,
        Expansion::MeanField,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Expansion::DoubleExp => "double_exp",
            Expansion::NeighboringLog => "neighboring_log",
            Expansion::SquaredDistance => "squared_distance",
            Expansion::RecenteredMeanMap => "recentered_mean_map",
            Expansion::MeanField => "mean_field",
        }
    }

    /// Order of the first neglected terms.
    pub fn order(self) -> u32 {
        match self {
            Expansion::SquaredDistance => 6,
            _ => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeRecord {
    pub manifold: String,
    pub expansion: Expansion,
    /// Absent for flat spaces, where the expansions are exact.
    pub slope: Option<f64>,
    pub residuals: Vec<f64>,
}

fn dvec(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

/// Residual of one expansion at scale `eps` against exact space-form geometry.
pub fn expansion_residual(space: SpaceForm, expansion: Expansion, eps: f64) -> Result<f64> {
    if space.dim() != 3 {
        return Err(invalid("the expansion study uses three-dimensional space forms"));
    }
    let dev = DevelopmentPoint::at_pole(space);
    let oracle = space.curvature_oracle();
    let a = dvec(&[1.0, 0.5, -0.3]) * eps;
    let b = dvec(&[-0.4, 1.2, 0.7]) * eps;
    let sample = [
        dvec(&[1.1, 0.3, -0.2]),
        dvec(&[-0.5, 0.9, 0.4]),
        dvec(&[0.2, -0.6, 1.0]),
    ];
    let logs: Vec<DVector<f64>> = sample.iter().map(|s| s * eps).collect();
    Ok(match expansion {
        Expansion::DoubleExp => (double_exp_expansion(&oracle, &a, &b).value - dev.double_exp(&a, &b)?).norm(),
        Expansion::NeighboringLog => {
            (neighboring_log_expansion(&oracle, &a, &b).value - dev.neighboring_log(&a, &b)?).norm()
        }
        Expansion::SquaredDistance => {
            (squared_distance_expansion(&oracle, &a, &b).value - dev.squared_distance(&a, &b)).abs()
        }
        Expansion::RecenteredMeanMap => {
            let moments = LocalMoments::from_logs(&logs)?;
            let v = dvec(&[0.3, -0.8, 0.5]) * eps;
            (recentered_mean_map_expansion(&moments, &oracle, &v)? - dev.recentered_mean_map(&logs, &v)?).norm()
        }
        Expansion::MeanField => {
            let mut logs = logs;
            logs.push(dvec(&[0.7, 0.8, 0.6]) * eps);
            let moments = LocalMoments::from_logs(&logs)?;
            let points: Vec<ManifoldPoint> = logs.iter().map(|l| dev.exp(l)).collect();
            let config = EstimatorConfig {
                grad_tol: 1e-15,
                max_iters: 1000,
                ..EstimatorConfig::starting_at(dev.point().clone())
            };
            let report = frechet_mean(&space, &points, &config)?;
            if !report.converged && report.final_grad_norm > 1e-13 {
                return Err(Error::NonConvergence { failed: 1, total: 1 });
            }
            (mean_field_expansion(&moments, &oracle)? - dev.log(&report.mean)?).norm()
        }
    })
}

/// Fitted residual slopes of every expansion on the given space forms.
pub fn expansion_convergence_study(spaces: &[SpaceForm], scales: &[f64]) -> Result<Vec<SlopeRecord>> {
    let mut out = Vec::new();
    for &space in spaces {
        for expansion in Expansion::ALL {
            let residuals = scales
                .iter()
                .map(|&s| expansion_residual(space, expansion, s))
                .collect::<Result<Vec<f64>>>()?;
            let slope = if space.kind() == Kind::Euclidean {
                None
            } else {
                Some(fit_loglog_slope(scales, &residuals)?)
            };
            out.push(SlopeRecord {
                manifold: space.label(),
                expansion,
                slope,
                residuals,
            });
        }
    }
    Ok(out)
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_modulation_csv<W: Write>(mut w: W, records: &[ModulationRecord]) -> io::Result<()> {
    writeln!(w, "{MODULATION_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.manifold,
            r.d,
            fmt_f64(r.kappa),
            fmt_f64(r.theta),
            r.n,
            r.trials,
            fmt_f64(r.alpha_mc),
            fmt_f64(r.alpha_stderr),
            fmt_f64(r.alpha_eq19),
            fmt_f64(r.alpha_eq20),
            r.seed
        )?;
    }
    Ok(())
}

pub fn write_variance_profile_csv<W: Write>(mut w: W, rows: &[(f64, f64, f64)]) -> io::Result<()> {
    writeln!(w, "{VARIANCE_PROFILE_HEADER}")?;
    for (theta, phi, var) in rows {
        writeln!(w, "{},{},{}", fmt_f64(*theta), fmt_f64(*phi), fmt_f64(*var))?;
    }
    Ok(())
}

pub fn write_slopes_csv<W: Write>(mut w: W, records: &[SlopeRecord]) -> io::Result<()> {
    writeln!(w, "manifold,expansion,order,slope,max_residual")?;
    for r in records {
        let slope = r.slope.map(fmt_f64).unwrap_or_default();
        let max = r.residuals.iter().copied().fold(0.0, f64::max);
        writeln!(
            w,
            "{},{},{},{},{}",
            r.manifold,
            r.expansion.name(),
            r.expansion.order(),
            slope,
            fmt_f64(max)
        )?;
    }
    Ok(())
}

pub fn write_bias_csv<W: Write>(mut w: W, records: &[BiasRecord]) -> io::Result<()> {
    writeln!(w, "manifold,theta,n,trials,bias_norm,stderr,passed")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.manifold,
            fmt_f64(r.theta),
            r.n,
            r.trials,
            fmt_f64(r.bias_norm),
            fmt_f64(r.stderr),
            r.passed()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_differ_across_cells() {
        let a = trial_seed(7, 0, 0, 0);
        assert_ne!(a, trial_seed(7, 0, 0, 1));
        assert_ne!(a, trial_seed(7, 1, 0, 0));
        assert_ne!(a, trial_seed(7, 0, 1, 0));
        assert_ne!(a, trial_seed(8, 0, 0, 0));
        assert_eq!(a, trial_seed(7, 0, 0, 0));
    }

    #[test]
    fn variance_profile_fixed_points() {
        let rows = variance_profile_s2(0.7, &[0.0]).unwrap();
        assert!((rows[0].1 - 0.49).abs() < 1e-12);
        let rows = variance_profile_s2(PI / 2.0, &[0.0, PI / 2.0, PI]).unwrap();
        assert!((rows[0].1 - PI * PI / 4.0).abs() < 1e-9);
        assert!((rows[1].1 - PI * PI / 3.0).abs() < 1e-9);
        assert!((rows[2].1 - PI * PI / 4.0).abs() < 1e-9);
        assert!(variance_profile_s2(4.0, &[0.0]).is_err());
    }

    #[test]
    fn config_validation() {
        let s2 = SpaceForm::unit_sphere(2);
        let mut c = ExperimentConfig::new(s2, vec![0.4], vec![2]);
        assert!(c.validate().is_ok());
        c.theta_grid = vec![PI];
        assert!(c.validate().is_err());
        c.theta_grid = vec![0.4];
        c.trials = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn csv_header_and_precision() {
        let r = ModulationRecord {
            manifold: "s2".into(),
            d: 2,
            kappa: 1.0,
            theta: 0.4,
            n: 10,
            trials: 5,
            alpha_mc: 1.0 / 3.0,
            alpha_stderr: 0.0,
            alpha_eq19: 1.0,
            alpha_eq20: 1.0,
            seed: 3,
        };
        let mut buf = Vec::new();
        write_modulation_csv(&mut buf, &[r]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), MODULATION_HEADER);
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[6], "3.3333333333333331e-1");
        assert_eq!(row[6].parse::<f64>().unwrap(), 1.0 / 3.0);
    }
}
