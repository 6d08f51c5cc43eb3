//! Flat `key=value` run configuration shared by the sweep and
//! complexity subcommands.
//!
//! Unknown keys are rejected so typos fail loudly. Blank lines and
//! lines starting with `#` are skipped. Every value has a default, so
//! an empty file is a valid CI-scale MNIST configuration.

use std::path::PathBuf;

use probekit::data::DatasetKind;
use probekit::mlp::TrainConfig;
use probekit::randomize::RandomizationKind;
use probekit::{Error, Result};

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dataset: DatasetKind,
    /// Class pair trained for the `easy`-labelled sweep variants.
    pub easy_classes: (u8, u8),
    /// Class pair trained for the `hard`-labelled sweep variants.
    pub hard_classes: (u8, u8),
    pub hidden_dim: usize,
    pub base_seed: u64,
    /// Models per sweep variant.
    pub replications: usize,
    /// Models per class pair in complexity matrices.
    pub realizations: usize,
    /// Grid for pruning and sign-flip sweeps.
    pub fraction_grid: Vec<f64>,
    /// Grid for noise sweeps.
    pub noise_grid: Vec<f64>,
    /// Kinds applied by randomization sweeps.
    pub randomizations: Vec<RandomizationKind>,
    pub output_dir: PathBuf,
    /// Dataset cache override; the environment variable and the `data`
    /// default apply when absent.
    pub data_dir: Option<PathBuf>,
    pub epochs: usize,
    pub batch_size: usize,
    pub peak_lr: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let dataset = DatasetKind::Mnist;
        let train = TrainConfig::default();
        RunConfig {
            dataset,
            easy_classes: dataset.default_easy_pair(),
            hard_classes: dataset.default_hard_pair(),
            hidden_dim: 64,
            base_seed: 0,
            replications: 10,
            realizations: 10,
            fraction_grid: probekit::harness::default_fraction_grid(),
            noise_grid: probekit::harness::default_noise_grid(),
            randomizations: RandomizationKind::ALL.to_vec(),
            output_dir: PathBuf::from("out"),
            data_dir: None,
            epochs: train.max_epochs,
            batch_size: train.batch_size,
            peak_lr: train.peak_lr,
        }
    }
}

pub fn parse_class_pair(s: &str) -> Result<(u8, u8)> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| Error::invalid(format!("expected a,b class pair, got {s:?}")))?;
    let parse = |t: &str| -> Result<u8> {
        t.trim()
            .parse::<u8>()
            .map_err(|_| Error::invalid(format!("bad class label {t:?} in {s:?}")))
    };
    Ok((parse(a)?, parse(b)?))
}

fn parse_float_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("bad number {t:?}")))
        })
        .collect()
}

fn parse_kinds(s: &str) -> Result<Vec<RandomizationKind>> {
    s.split(',').map(|t| t.trim().parse()).collect()
}

impl RunConfig {
    /// Parses file content, starting from defaults. The dataset key is
    /// applied first so pair defaults follow the chosen dataset even
    /// when keys arrive in any order.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::invalid(format!(
                    "line {}: expected key=value, got {line:?}",
                    lineno + 1
                ))
            })?;
            entries.push((key.trim().to_string(), value.trim().to_string(), lineno + 1));
        }

        let mut config = RunConfig::default();
        if let Some((_, value, lineno)) = entries.iter().find(|(k, _, _)| k == "dataset") {
            let dataset: DatasetKind = value
                .parse()
                .map_err(|e| Error::invalid(format!("line {lineno}: {e}")))?;
            config.dataset = dataset;
            config.easy_classes = dataset.default_easy_pair();
            config.hard_classes = dataset.default_hard_pair();
        }

        for (key, value, lineno) in &entries {
            let fail = |e: Error| Error::invalid(format!("line {lineno}: {e}"));
            match key.as_str() {
                "dataset" => {}
                "easy_classes" => config.easy_classes = parse_class_pair(value).map_err(fail)?,
                "hard_classes" => config.hard_classes = parse_class_pair(value).map_err(fail)?,
                "hidden_dim" => config.hidden_dim = parse_count(value, lineno)?,
                "base_seed" => {
                    config.base_seed = value.parse().map_err(|_| {
                        Error::invalid(format!("line {lineno}: bad integer {value:?}"))
                    })?
                }
                "replications" => config.replications = parse_count(value, lineno)?,
                "realizations" => config.realizations = parse_count(value, lineno)?,
                "fraction_grid" => config.fraction_grid = parse_float_list(value).map_err(fail)?,
                "noise_grid" => config.noise_grid = parse_float_list(value).map_err(fail)?,
                "randomizations" => config.randomizations = parse_kinds(value).map_err(fail)?,
                "output_dir" => config.output_dir = PathBuf::from(value),
                "data_dir" => config.data_dir = Some(PathBuf::from(value)),
                "epochs" => config.epochs = parse_count(value, lineno)?,
                "batch_size" => config.batch_size = parse_count(value, lineno)?,
                "peak_lr" => {
                    config.peak_lr = value.parse().map_err(|_| {
                        Error::invalid(format!("line {lineno}: bad number {value:?}"))
                    })?
                }
                other => {
                    return Err(Error::invalid(format!(
                        "line {lineno}: unknown configuration key {other:?}"
                    )))
                }
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::parse(&text)
    }

    fn validate(&self) -> Result<()> {
        for &(a, b) in [&self.easy_classes, &self.hard_classes] {
            if a == b || a > 9 || b > 9 {
                return Err(Error::InvalidClassPair { a, b });
            }
        }
        if self.fraction_grid.is_empty() || self.noise_grid.is_empty() {
            return Err(Error::invalid("grids must be nonempty"));
        }
        if self.randomizations.is_empty() {
            return Err(Error::invalid("randomizations must be nonempty"));
        }
        Ok(())
    }

    pub fn train_template(&self) -> TrainConfig {
        TrainConfig {
            max_epochs: self.epochs,
            batch_size: self.batch_size,
            peak_lr: self.peak_lr,
            ..TrainConfig::default()
        }
    }
}

fn parse_count(value: &str, lineno: &usize) -> Result<usize> {
    let n: usize = value
        .parse()
        .map_err(|_| Error::invalid(format!("line {lineno}: bad integer {value:?}")))?;
    if n == 0 {
        return Err(Error::invalid(format!(
            "line {lineno}: count must be positive"
        )));
    }
    Ok(n)
}
