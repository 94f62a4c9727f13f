use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::datasets::{SplitSpec, SynthConfig, TwinsOptions};
use crate::error::{Error, Result};
use crate::model::CevibConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cevib,
    Ols1,
    Ols2,
    /// Predicts the true effects; exercises the pipeline end to end.
    Oracle,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Cevib => "cevib",
            Method::Ols1 => "ols1",
            Method::Ols2 => "ols2",
            Method::Oracle => "oracle",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cevib" => Ok(Method::Cevib),
            "ols1" => Ok(Method::Ols1),
            "ols2" => Ok(Method::Ols2),
            "oracle" => Ok(Method::Oracle),
            other => Err(Error::Config(format!(
                "unknown method {other:?} (expected cevib, ols1, ols2 or oracle)"
            ))),
        }
    }
}

/// Parses a comma-separated method list such as `cevib,ols2`.
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

/// Parses `1-10`, `3` or `1-3,7,9-10` into an ascending, deduplicated list.
pub fn parse_range(spec: &str) -> Result<Vec<usize>> {
    let bad = || Error::Config(format!("invalid range {spec:?}"));
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Parses a comma-separated list of shift values.
pub fn parse_mu_list(list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("invalid shift value {s:?}")))
        })
        .collect()
}

fn default_twins_file() -> String {
    "twins.csv".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetSelector {
    /// Replicate files `ihdp_npci_{i}.csv` in the data directory.
    Ihdp { files: Vec<usize> },
    /// A single Twins table, relative to the data directory.
    Twins {
        #[serde(default = "default_twins_file")]
        file: String,
        #[serde(default)]
        options: TwinsOptions,
    },
    /// LBIDD-layout generating processes under the data directory.
    Acic { dgps: Vec<String> },
    /// Generated data, one instance per mean shift. `covariance_seed`,
    /// `outcome_seed` and `mu` in `generator` are overridden per replication.
    Synthetic {
        mu: Vec<f64>,
        #[serde(default)]
        generator: SynthConfig,
    },
}

impl DatasetSelector {
    pub fn name(&self) -> &'static str {
        match self {
            DatasetSelector::Ihdp { .. } => "ihdp",
            DatasetSelector::Twins { .. } => "twins",
            DatasetSelector::Acic { .. } => "acic",
            DatasetSelector::Synthetic { .. } => "synthetic",
        }
    }

    fn default_split(&self) -> SplitFractions {
        match self {
            DatasetSelector::Twins { .. } => SplitFractions {
                train: 0.56,
                validation: 0.24,
                test: 0.20,
            },
            _ => SplitFractions {
                train: 0.63,
                validation: 0.27,
                test: 0.10,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl SplitFractions {
    pub fn with_seed(self, seed: u64) -> SplitSpec {
        SplitSpec {
            train: self.train,
            validation: self.validation,
            test: self.test,
            seed,
        }
    }
}

fn default_data_dir() -> PathBuf {
    PathBuf::from("data")
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_replications() -> usize {
    1
}

fn default_methods() -> Vec<Method> {
    vec![Method::Cevib, Method::Ols1, Method::Ols2]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSelector,
    #[serde(default = "default_data_dir")]
    pub data_dir: PathBuf,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    /// Defaults to 56/24/20 for Twins and 63/27/10 otherwise.
    #[serde(default)]
    pub split: Option<SplitFractions>,
    #[serde(default)]
    pub model: CevibConfig,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Latent draws per subject when estimating effects; defaults to the
    /// model's `mc_samples_eval`.
    #[serde(default)]
    pub latent_samples: Option<usize>,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetSelector) -> Self {
        ExperimentConfig {
            dataset,
            data_dir: default_data_dir(),
            out_dir: default_out_dir(),
            replications: default_replications(),
            seed: 0,
            split: None,
            model: CevibConfig::default(),
            methods: default_methods(),
            latent_samples: None,
            workers: 0,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn split_fractions(&self) -> SplitFractions {
        self.split.unwrap_or_else(|| self.dataset.default_split())
    }

    pub fn latent_samples(&self) -> usize {
        self.latent_samples.unwrap_or(self.model.mc_samples_eval)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        let mut seen = self.methods.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return Err(Error::Config("methods must not repeat".into()));
        }
        if self.latent_samples == Some(0) {
            return Err(Error::Config("latent_samples must be at least 1".into()));
        }
        self.split_fractions().with_seed(0).validate()?;
        self.model.validate()?;
        match &self.dataset {
            DatasetSelector::Ihdp { files } if files.is_empty() || files.contains(&0) => {
                Err(Error::Config("IHDP file indices must be a non-empty list of positive integers".into()))
            }
            DatasetSelector::Acic { dgps } if dgps.is_empty() => Err(Error::Config("no ACIC generating processes listed".into())),
            DatasetSelector::Synthetic { mu, .. } if mu.is_empty() || mu.iter().any(|m| !m.is_finite()) => {
                Err(Error::Config("synthetic mu list must be non-empty and finite".into()))
            }
            _ => Ok(()),
        }
    }
}
