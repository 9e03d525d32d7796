//! Run configuration: defaults, flat key=value config files, and merging.
//!
//! Precedence is command-line flags over config file over built-in defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::channel::Convention;
use crate::error::{Error, Result};
use crate::montecarlo::Weighting;

pub const DB_PER_UNIT_R: f64 = 8.685_889_638_065_036;

/// Converts a squeezing parameter to decibels, `10 log10 e^{2r}`.
pub fn r_to_db(r: f64) -> f64 {
    DB_PER_UNIT_R * r
}

/// Inverse of [`r_to_db`].
pub fn db_to_r(db: f64) -> f64 {
    db / DB_PER_UNIT_R
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Table1,
    Sweep,
    Shot,
    OracleCheck,
    Asymptotic,
}

impl FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table1" => Ok(Self::Table1),
            "sweep" => Ok(Self::Sweep),
            "shot" => Ok(Self::Shot),
            "oracle-check" => Ok(Self::OracleCheck),
            "asymptotic" => Ok(Self::Asymptotic),
            other => Err(Error::Config(format!("unknown command `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Config(format!("unknown format `{other}`"))),
        }
    }
}

impl FromStr for Convention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Self::Paper),
            "derived" => Ok(Self::Derived),
            other => Err(Error::Config(format!("unknown convention `{other}`"))),
        }
    }
}

impl FromStr for Weighting {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unweighted" => Ok(Self::Unweighted),
            "heralded" => Ok(Self::Heralded),
            other => Err(Error::Config(format!("unknown weighting `{other}`"))),
        }
    }
}

/// Fully resolved run configuration.
///
/// `shots = 0` selects the analytic engine; any positive value selects the
/// Monte Carlo engine with that many shots.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub n: usize,
    pub r: f64,
    pub v: f64,
    pub shots: usize,
    pub seed: u64,
    pub convention: Convention,
    pub weighting: Weighting,
    pub cutoff: u8,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    /// Explicit per-rail phases for the `shot` command.
    pub phases: Option<Vec<f64>>,
    /// Grid axes for the `sweep` and `asymptotic` commands.
    pub n_list: Vec<usize>,
    pub v_list: Vec<f64>,
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        Self {
            command,
            n: 5,
            r: 1.2,
            v: 0.01,
            shots: 0,
            seed: 1,
            convention: Convention::Paper,
            weighting: Weighting::Unweighted,
            cutoff: 12,
            format: OutputFormat::Csv,
            out: None,
            phases: None,
            n_list: vec![1, 2, 3, 5, 10, 20],
            v_list: vec![0.0, 0.005, 0.01, 0.02, 0.05],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if !self.r.is_finite() || self.r <= 0.0 {
            return Err(Error::Config(format!("r must be positive, got {}", self.r)));
        }
        if !self.v.is_finite() || self.v < 0.0 {
            return Err(Error::Config(format!(
                "variance must be nonnegative, got {}",
                self.v
            )));
        }
        if let Some(phases) = &self.phases {
            if phases.len() != self.n {
                return Err(Error::Config(format!(
                    "expected {} phases, got {}",
                    self.n,
                    phases.len()
                )));
            }
        }
        if (self.command == Command::Sweep || self.command == Command::Asymptotic)
            && (self.v_list.is_empty() || self.n_list.is_empty())
        {
            return Err(Error::EmptyGrid);
        }
        Ok(())
    }
}

/// Parses a flat `key = value` config file. Blank lines and `#` comments are
/// ignored. Returns the raw key/value map; unknown keys are rejected when
/// applied.
pub fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("{}:{}: expected key=value", path.display(), lineno + 1))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("bad value for `{key}`: {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

/// Applies config-file entries onto `cfg`. Key names mirror the long CLI
/// flags without the leading dashes.
pub fn apply_config_map(cfg: &mut RunConfig, map: &BTreeMap<String, String>) -> Result<()> {
    for (key, value) in map {
        match key.as_str() {
            "n" => cfg.n = parse(key, value)?,
            "r" => cfg.r = parse(key, value)?,
            "input-db" => cfg.r = db_to_r(parse(key, value)?),
            "variance" => cfg.v = parse(key, value)?,
            "shots" => cfg.shots = parse(key, value)?,
            "seed" => cfg.seed = parse(key, value)?,
            "convention" => cfg.convention = parse(key, value)?,
            "weighting" => cfg.weighting = parse(key, value)?,
            "cutoff" => cfg.cutoff = parse(key, value)?,
            "format" => cfg.format = parse(key, value)?,
            "out" => cfg.out = Some(PathBuf::from(value)),
            "phases" => cfg.phases = Some(parse_list(key, value)?),
            "n-list" => cfg.n_list = parse_list(key, value)?,
            "v-list" => cfg.v_list = parse_list(key, value)?,
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
    }
    Ok(())
}
