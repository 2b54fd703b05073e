//! Flat key-value experiment configuration with strict schema checking.
//!
//! Files are plain text: one `key = value` pair per line, `#` starts a
//! comment, blank lines are ignored. Unknown keys are errors — a typo in a
//! config must never silently fall back to a default. CLI flags are applied
//! on top of the file (or on top of the defaults when no file is given) and
//! the merged result is validated once.
//!
//! Schema:
//!
//! | key              | value                                   | default            |
//! |------------------|-----------------------------------------|--------------------|
//! | `degrees`        | comma-separated, strictly ascending     | `8,16,32,64,128`   |
//! | `samples`        | sections per degree, ≥ 1                | `200`              |
//! | `measure`        | `uniform` or `perturbed`                | `uniform`          |
//! | `potential`      | potential label (perturbed only)        | `softmax:0.1`      |
//! | `epsilon`        | perturbation scale ε ≥ 0                | `1e-8`             |
//! | `fd_step`        | Monge–Ampère stencil step > 0           | `1e-3`             |
//! | `burn_in`        | Metropolis burn-in steps                | `300`              |
//! | `thin`           | Metropolis thinning interval ≥ 1        | `10`               |
//! | `proposal_sigma` | Metropolis proposal scale > 0           | `0.35`             |
//! | `seed`           | master seed, u64                        | `20260814`         |
//! | `out`            | output directory for reports            | none (stdout only) |
//! | `workers`        | worker threads ≥ 1                      | `1`                |
//! | `alpha0`         | moderate-measure exponent α₀            | `0.5`              |
//! | `c0`             | moderate-measure constant c₀            | `4`                |
//! | `beta0`          | perturbation-threshold constant β₀      | `1`                |
//! | `c5`             | perturbed-measure constant c₅           | `4`                |
//! | `threshold_a`    | exceptional threshold A (else auto)     | auto-calibrated    |
//! | `battery`        | test-function battery name              | `default`          |

use std::path::{Path, PathBuf};

use thiserror::Error;
use zerolab_core::measures::{ChainParams, Constants};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config line {line}: expected `key = value`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {message}")]
    BadValue { key: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Which measure the sections' coefficient vectors are drawn from.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSpec {
    Uniform,
    /// Monge–Ampère measure of the potential scaled by ε, sampled by one
    /// Metropolis chain per degree.
    Perturbed { potential: String, epsilon: f64, fd_step: f64, chain: ChainParams },
}

impl MeasureSpec {
    pub fn label(&self) -> String {
        match self {
            MeasureSpec::Uniform => "uniform".into(),
            MeasureSpec::Perturbed { potential, epsilon, .. } => {
                format!("perturbed:{potential}:eps={epsilon}")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub degrees: Vec<usize>,
    pub samples: usize,
    pub measure: MeasureSpec,
    pub battery: String,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub workers: usize,
    pub constants: Constants,
    /// Exceptional-set threshold constant; `None` means auto-calibrate at the
    /// smallest degree.
    pub threshold_a: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            degrees: vec![8, 16, 32, 64, 128],
            samples: 200,
            measure: MeasureSpec::Uniform,
            battery: "default".into(),
            seed: 20260814,
            out: None,
            workers: 1,
            constants: Constants::default(),
            threshold_a: None,
        }
    }
}

/// Raw key-value pairs plus the perturbed-measure sub-keys, collected before
/// the measure kind is known (keys may appear in any order).
#[derive(Default)]
struct RawMeasure {
    kind: Option<String>,
    potential: Option<String>,
    epsilon: Option<f64>,
    fd_step: Option<f64>,
    burn_in: Option<usize>,
    thin: Option<usize>,
    proposal_sigma: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<ExperimentConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        ExperimentConfig::parse(&text)
    }

    pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        let mut raw = RawMeasure::default();
        for (idx, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Malformed {
                line: idx + 1,
                text: line.to_string(),
            })?;
            let key = key.trim();
            let value = value.trim();
            apply_key(&mut cfg, &mut raw, key, value)?;
        }
        finish_measure(&mut cfg, raw)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies CLI flag overrides on top of the parsed (or default) config,
    /// then re-validates.
    pub fn apply_overrides(
        &mut self,
        seed: Option<u64>,
        out: Option<PathBuf>,
        workers: Option<usize>,
        samples: Option<usize>,
        degrees: Option<&str>,
    ) -> Result<(), ConfigError> {
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(o) = out {
            self.out = Some(o);
        }
        if let Some(w) = workers {
            self.workers = w;
        }
        if let Some(m) = samples {
            self.samples = m;
        }
        if let Some(d) = degrees {
            self.degrees = parse_degrees(d)?;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.degrees.is_empty() {
            return Err(ConfigError::Invalid("degrees list is empty".into()));
        }
        if !self.degrees.windows(2).all(|w| w[0] < w[1]) {
            return Err(ConfigError::Invalid(format!(
                "degrees must be strictly ascending, got {:?}",
                self.degrees
            )));
        }
        if self.degrees[0] < 1 {
            return Err(ConfigError::Invalid("degrees must be at least 1".into()));
        }
        if self.samples < 1 {
            return Err(ConfigError::Invalid("samples must be at least 1".into()));
        }
        if self.samples as u64 >= crate::stream::CHAIN_SLOT {
            return Err(ConfigError::Invalid("samples exceeds the stream index space".into()));
        }
        if self.workers < 1 {
            return Err(ConfigError::Invalid("workers must be at least 1".into()));
        }
        if self.battery != "default" {
            return Err(ConfigError::Invalid(format!(
                "unknown battery `{}` (only `default` is defined)",
                self.battery
            )));
        }
        if let MeasureSpec::Perturbed { epsilon, fd_step, chain, .. } = &self.measure {
            if !(*epsilon >= 0.0) {
                return Err(ConfigError::Invalid(format!("epsilon must be ≥ 0, got {epsilon}")));
            }
            if !(*fd_step > 0.0) {
                return Err(ConfigError::Invalid(format!("fd_step must be > 0, got {fd_step}")));
            }
            if chain.thin < 1 {
                return Err(ConfigError::Invalid("thin must be at least 1".into()));
            }
            if !(chain.proposal_sigma > 0.0) {
                return Err(ConfigError::Invalid("proposal_sigma must be > 0".into()));
            }
        }
        if let Some(a) = self.threshold_a {
            if !(a > 0.0) {
                return Err(ConfigError::Invalid(format!("threshold_a must be > 0, got {a}")));
            }
        }
        self.constants
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("constants: {e}")))?;
        Ok(())
    }
}

fn apply_key(
    cfg: &mut ExperimentConfig,
    raw: &mut RawMeasure,
    key: &str,
    value: &str,
) -> Result<(), ConfigError> {
    let bad = |key: &str, message: String| ConfigError::BadValue { key: key.into(), message };
    match key {
        "degrees" => cfg.degrees = parse_degrees(value)?,
        "samples" => cfg.samples = parse_num(key, value)?,
        "measure" => match value {
            "uniform" | "perturbed" => raw.kind = Some(value.into()),
            other => return Err(bad(key, format!("expected uniform|perturbed, got `{other}`"))),
        },
        "potential" => raw.potential = Some(value.into()),
        "epsilon" => raw.epsilon = Some(parse_num(key, value)?),
        "fd_step" => raw.fd_step = Some(parse_num(key, value)?),
        "burn_in" => raw.burn_in = Some(parse_num(key, value)?),
        "thin" => raw.thin = Some(parse_num(key, value)?),
        "proposal_sigma" => raw.proposal_sigma = Some(parse_num(key, value)?),
        "seed" => cfg.seed = parse_num(key, value)?,
        "out" => cfg.out = Some(PathBuf::from(value)),
        "workers" => cfg.workers = parse_num(key, value)?,
        "alpha0" => cfg.constants.alpha0 = parse_num(key, value)?,
        "c0" => cfg.constants.c0 = parse_num(key, value)?,
        "beta0" => cfg.constants.beta0 = parse_num(key, value)?,
        "c5" => cfg.constants.c5 = parse_num(key, value)?,
        "threshold_a" => cfg.threshold_a = Some(parse_num(key, value)?),
        "battery" => cfg.battery = value.into(),
        other => return Err(ConfigError::UnknownKey(other.into())),
    }
    Ok(())
}

/// Folds the perturbed-measure sub-keys into the measure spec once all lines
/// are read, rejecting sub-keys given without `measure = perturbed`.
fn finish_measure(cfg: &mut ExperimentConfig, raw: RawMeasure) -> Result<(), ConfigError> {
    let perturbed = raw.kind.as_deref() == Some("perturbed");
    if !perturbed {
        let stray = [
            raw.potential.is_some().then_some("potential"),
            raw.epsilon.is_some().then_some("epsilon"),
            raw.fd_step.is_some().then_some("fd_step"),
            raw.burn_in.is_some().then_some("burn_in"),
            raw.thin.is_some().then_some("thin"),
            raw.proposal_sigma.is_some().then_some("proposal_sigma"),
        ]
        .into_iter()
        .flatten()
        .collect::<Vec<_>>();
        if let Some(first) = stray.first() {
            return Err(ConfigError::Invalid(format!(
                "`{first}` requires `measure = perturbed`"
            )));
        }
        cfg.measure = MeasureSpec::Uniform;
        return Ok(());
    }
    let defaults = ChainParams::default();
    cfg.measure = MeasureSpec::Perturbed {
        potential: raw.potential.unwrap_or_else(|| "softmax:0.1".into()),
        epsilon: raw.epsilon.unwrap_or(1e-8),
        fd_step: raw.fd_step.unwrap_or(1e-3),
        chain: ChainParams {
            burn_in: raw.burn_in.unwrap_or(defaults.burn_in),
            thin: raw.thin.unwrap_or(defaults.thin),
            proposal_sigma: raw.proposal_sigma.unwrap_or(defaults.proposal_sigma),
        },
    };
    Ok(())
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.into(),
        message: format!("cannot parse `{value}`"),
    })
}

/// Parses a comma-separated degree list (`8,16,32`); validation of ordering
/// happens in [`ExperimentConfig::validate`].
pub fn parse_degrees(text: &str) -> Result<Vec<usize>, ConfigError> {
    text.split(',')
        .map(|part| {
            let part = part.trim();
            part.parse::<usize>().map_err(|_| ConfigError::BadValue {
                key: "degrees".into(),
                message: format!("cannot parse `{part}` as a degree"),
            })
        })
        .collect()
}
