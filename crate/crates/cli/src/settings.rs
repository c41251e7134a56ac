//! Command-line flags merged over an optional `key=value` config file.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::PathBuf;

use clap::Args;
use spaceform_stats::{Kind, SpaceForm};

/// Problems with the user's configuration; these map to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

pub type ConfigResult<T> = Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> ConfigResult<T> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// s2, s3, h3, e3 (or sphere, hyperbolic, euclidean together with --dim)
    #[arg(long)]
    pub manifold: Option<String>,
    /// Sectional curvature; defaults to +1, -1 or 0 according to the manifold
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<String>,
    #[arg(long)]
    pub dim: Option<String>,
    #[arg(long)]
    pub theta: Option<String>,
    /// `start:stop:step` (stop included) or a comma-separated list
    #[arg(long)]
    pub theta_grid: Option<String>,
    #[arg(long)]
    pub n: Option<String>,
    /// Comma-separated sample sizes
    #[arg(long)]
    pub n_list: Option<String>,
    #[arg(long)]
    pub trials: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Output CSV path; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// File of `key=value` lines using the long flag names; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Resolved view over flags and config-file entries.
pub struct Settings {
    flags: BTreeMap<&'static str, String>,
    file: BTreeMap<String, String>,
    pub out: Option<PathBuf>,
}

const KNOWN_KEYS: &[&str] = &[
    "manifold",
    "kappa",
    "dim",
    "theta",
    "theta-grid",
    "n",
    "n-list",
    "trials",
    "seed",
    "out",
    "phi-grid",
    "max-iters",
    "points",
];

impl Settings {
    pub fn new(args: &CommonArgs, extra: &[(&'static str, Option<String>)]) -> ConfigResult<Self> {
        let mut flags = BTreeMap::new();
        let pairs = [
            ("manifold", &args.manifold),
            ("kappa", &args.kappa),
            ("dim", &args.dim),
            ("theta", &args.theta),
            ("theta-grid", &args.theta_grid),
            ("n", &args.n),
            ("n-list", &args.n_list),
            ("trials", &args.trials),
            ("seed", &args.seed),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                flags.insert(k, v.clone());
            }
        }
        for (k, v) in extra {
            if let Some(v) = v {
                flags.insert(*k, v.clone());
            }
        }
        let file = match &args.config {
            Some(path) => parse_config_file(
                &fs::read_to_string(path)
                    .map_err(|e| ConfigError(format!("cannot read config file {}: {e}", path.display())))?,
            )?,
            None => BTreeMap::new(),
        };
        let out = args.out.clone().or_else(|| file.get("out").map(PathBuf::from));
        Ok(Self { flags, file, out })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.flags.get(key).or_else(|| self.file.get(key)).map(String::as_str)
    }

    pub fn parse<T: std::str::FromStr>(&self, key: &str) -> ConfigResult<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(s) => s
                .trim()
                .parse()
                .map(Some)
                .map_err(|_| ConfigError(format!("invalid value for {key}: {s:?}"))),
        }
    }

    pub fn space(&self) -> ConfigResult<SpaceForm> {
        let label = self.get("manifold").unwrap_or("s2").trim().to_ascii_lowercase();
        let dim: Option<usize> = self.parse("dim")?;
        let kappa: Option<f64> = self.parse("kappa")?;
        let (kind, label_dim) = match label.as_str() {
            "sphere" => (Kind::Sphere, None),
            "hyperbolic" => (Kind::Hyperbolic, None),
            "euclidean" => (Kind::Euclidean, None),
            other => {
                let kind = match other.chars().next() {
                    Some('s') => Kind::Sphere,
                    Some('h') => Kind::Hyperbolic,
                    Some('e') => Kind::Euclidean,
                    _ => return err(format!("unknown manifold {other:?}")),
                };
                let d = other[1..]
                    .parse::<usize>()
                    .map_err(|_| ConfigError(format!("unknown manifold {other:?}")))?;
                (kind, Some(d))
            }
        };
        let dim = match (label_dim, dim) {
            (Some(a), Some(b)) if a != b => return err(format!("--dim {b} contradicts manifold {label}")),
            (Some(a), _) => a,
            (None, Some(b)) => b,
            (None, None) => return err(format!("manifold {label} needs --dim")),
        };
        let kappa = kappa.unwrap_or(match kind {
            Kind::Sphere => 1.0,
            Kind::Hyperbolic => -1.0,
            Kind::Euclidean => 0.0,
        });
        SpaceForm::new(kind, dim, kappa).map_err(|e| ConfigError(e.to_string()))
    }

    /// `--theta-grid` if present, else `--theta`.
    pub fn thetas(&self) -> ConfigResult<Option<Vec<f64>>> {
        if let Some(grid) = self.get("theta-grid") {
            return parse_grid(grid).map(Some);
        }
        match self.get("theta") {
            None => Ok(None),
            Some(t) if t.contains([',', ':']) => err(format!("--theta takes one value, got {t:?}; use --theta-grid")),
            Some(t) => parse_grid(t).map(Some),
        }
    }

    /// `--n-list` if present, else `--n`.
    pub fn sample_sizes(&self) -> ConfigResult<Option<Vec<usize>>> {
        if let Some(list) = self.get("n-list") {
            return list
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| ConfigError(format!("invalid sample size {s:?}")))
                })
                .collect::<ConfigResult<Vec<usize>>>()
                .map(Some);
        }
        Ok(self.parse::<usize>("n")?.map(|n| vec![n]))
    }
}

fn parse_config_file(text: &str) -> ConfigResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return err(format!("config line {}: expected key=value", i + 1));
        };
        let key = k.trim().replace('_', "-");
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return err(format!("config line {}: unknown key {key:?}", i + 1));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

/// `a:b:step` with `b` included up to rounding, or a comma-separated list.
/// `pi` is accepted as a value.
pub fn parse_grid(s: &str) -> ConfigResult<Vec<f64>> {
    let num = |t: &str| -> ConfigResult<f64> {
        let t = t.trim();
        if t.eq_ignore_ascii_case("pi") {
            return Ok(PI);
        }
        t.parse()
            .map_err(|_| ConfigError(format!("invalid number {t:?} in grid {s:?}")))
    };
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if !(step > 0.0) || b < a {
                return err(format!("grid {s:?} needs start <= stop and a positive step"));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| a + i as f64 * step).collect())
        }
        [_] => s.split(',').map(num).collect(),
        _ => err(format!("grid {s:?} must be start:stop:step or a list")),
    }
}
