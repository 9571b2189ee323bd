//! Settings for the experiment commands.
//!
//! Every setting can come from a TOML file (sections `[bench]`, `[train]` and
//! `[sweep]`) and be overridden on the command line. Unset values fall back to
//! the defaults below.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sparseness::soae::{SoaeConfig, Transfer};

use crate::error::{CliError, Result};

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub bench: BenchFile,
    #[serde(default)]
    pub train: TrainFile,
    #[serde(default)]
    pub sweep: SweepFile,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|source| CliError::Toml {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchFile {
    pub dims: Option<Vec<usize>>,
    pub input_sigma: Option<f64>,
    pub input_sigmas: Option<Vec<f64>>,
    pub target_sigma: Option<f64>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub min_cell_ms: Option<u64>,
    pub repeats: Option<usize>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainFile {
    pub train_images: Option<PathBuf>,
    pub train_labels: Option<PathBuf>,
    pub eval_images: Option<PathBuf>,
    pub eval_labels: Option<PathBuf>,
    pub train_samples: Option<usize>,
    pub eval_samples: Option<usize>,
    pub jitter: Option<bool>,
    pub eval_every: Option<usize>,
    pub n_hidden: Option<usize>,
    pub sigma_w: Option<f64>,
    pub transfer: Option<String>,
    pub sigma_h: Option<f64>,
    pub kappa: Option<usize>,
    pub step_size: Option<f64>,
    pub anneal_factor: Option<f64>,
    pub samples_per_epoch: Option<usize>,
    pub alpha_tau: Option<f64>,
    pub stop_rel_tol: Option<f64>,
    pub stop_window: Option<usize>,
    pub max_epochs: Option<usize>,
    pub seed: Option<u64>,
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub sigma_h: Option<Vec<f64>>,
}

/// Settings of the projection benchmarks.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub dims: Vec<usize>,
    /// Sparseness of the sampled inputs.
    pub input_sigma: f64,
    /// Input sparseness grid of the timing benchmark.
    pub input_sigmas: Vec<f64>,
    pub target_sigma: f64,
    pub trials: usize,
    pub seed: u64,
    /// Minimum wall-clock time of one timed batch.
    pub min_cell_ms: u64,
    /// Timed batches per cell; the median is reported.
    pub repeats: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            dims: vec![1000],
            input_sigma: 0.15,
            input_sigmas: vec![0.15, 0.35, 0.55, 0.75],
            target_sigma: 0.9,
            trials: 1000,
            seed: 0,
            min_cell_ms: 100,
            repeats: 5,
        }
    }
}

impl BenchConfig {
    /// Applies the file section on top of the defaults.
    pub fn from_file(f: &BenchFile) -> Self {
        let d = Self::default();
        Self {
            dims: f.dims.clone().unwrap_or(d.dims),
            input_sigma: f.input_sigma.unwrap_or(d.input_sigma),
            input_sigmas: f.input_sigmas.clone().unwrap_or(d.input_sigmas),
            target_sigma: f.target_sigma.unwrap_or(d.target_sigma),
            trials: f.trials.unwrap_or(d.trials),
            seed: f.seed.unwrap_or(d.seed),
            min_cell_ms: f.min_cell_ms.unwrap_or(d.min_cell_ms),
            repeats: f.repeats.unwrap_or(d.repeats),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if self.dims.is_empty() || self.dims.iter().any(|&n| n < 2) {
            return bad("dims must be nonempty with every n >= 2");
        }
        if self.trials == 0 || self.repeats == 0 {
            return bad("trials and repeats must be at least 1");
        }
        let open = |s: f64| s > 0.0 && s < 1.0;
        if !open(self.input_sigma) || !open(self.target_sigma) || !self.input_sigmas.iter().all(|s| open(*s)) {
            return bad("sparseness values must lie in (0, 1)");
        }
        if self.input_sigmas.is_empty() {
            return bad("input_sigmas must be nonempty");
        }
        Ok(())
    }
}

/// Settings of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub eval_images: PathBuf,
    pub eval_labels: PathBuf,
    pub train_samples: usize,
    pub eval_samples: usize,
    pub jitter: bool,
    /// Evaluate every this many epochs, and after the last one.
    pub eval_every: usize,
    pub soae: SoaeConfig,
    pub checkpoint: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            train_images: "data/digits-train-images-idx3-ubyte".into(),
            train_labels: "data/digits-train-labels-idx1-ubyte".into(),
            eval_images: "data/digits-eval-images-idx3-ubyte".into(),
            eval_labels: "data/digits-eval-labels-idx1-ubyte".into(),
            train_samples: 1000,
            eval_samples: 1000,
            jitter: false,
            eval_every: 10,
            soae: SoaeConfig {
                n_hidden: 64,
                sigma_w: 0.75,
                transfer: Transfer::Sigma(0.6),
                step_size: 0.05,
                samples_per_epoch: 1000,
                max_epochs: 100,
                ..SoaeConfig::default()
            },
            checkpoint: None,
        }
    }
}

impl TrainConfig {
    pub fn from_file(f: &TrainFile) -> Result<Self> {
        let d = Self::default();
        let s = d.soae.clone();
        let transfer = parse_transfer(
            f.transfer.as_deref(),
            f.sigma_h,
            f.kappa,
            s.transfer,
        )?;
        Ok(Self {
            train_images: f.train_images.clone().unwrap_or(d.train_images),
            train_labels: f.train_labels.clone().unwrap_or(d.train_labels),
            eval_images: f.eval_images.clone().unwrap_or(d.eval_images),
            eval_labels: f.eval_labels.clone().unwrap_or(d.eval_labels),
            train_samples: f.train_samples.unwrap_or(d.train_samples),
            eval_samples: f.eval_samples.unwrap_or(d.eval_samples),
            jitter: f.jitter.unwrap_or(d.jitter),
            eval_every: f.eval_every.unwrap_or(d.eval_every),
            soae: SoaeConfig {
                n_hidden: f.n_hidden.unwrap_or(s.n_hidden),
                sigma_w: f.sigma_w.unwrap_or(s.sigma_w),
                transfer,
                step_size: f.step_size.unwrap_or(s.step_size),
                anneal_factor: f.anneal_factor.unwrap_or(s.anneal_factor),
                samples_per_epoch: f.samples_per_epoch.unwrap_or(s.samples_per_epoch),
                alpha_tau: f.alpha_tau.unwrap_or(s.alpha_tau),
                stop_rel_tol: f.stop_rel_tol.unwrap_or(s.stop_rel_tol),
                stop_window: f.stop_window.unwrap_or(s.stop_window),
                max_epochs: f.max_epochs.unwrap_or(s.max_epochs),
                seed: f.seed.unwrap_or(s.seed),
            },
            checkpoint: f.checkpoint.clone().or(d.checkpoint),
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.soae.validate()?;
        if self.train_samples == 0 || self.eval_samples == 0 || self.eval_every == 0 {
            return Err(CliError::Config(
                "train_samples, eval_samples and eval_every must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Builds a transfer function from its name and parameters, keeping the
/// parameters of `current` where none are given.
pub fn parse_transfer(
    name: Option<&str>,
    sigma_h: Option<f64>,
    kappa: Option<usize>,
    current: Transfer,
) -> Result<Transfer> {
    let name = name.unwrap_or(match current {
        Transfer::Sigma(_) => "sigma",
        Transfer::L0(_) => "l0",
        Transfer::Tanh => "tanh",
    });
    match name {
        "sigma" => {
            let fallback = if let Transfer::Sigma(s) = current { s } else { 0.6 };
            Ok(Transfer::Sigma(sigma_h.unwrap_or(fallback)))
        }
        "l0" => {
            let fallback = if let Transfer::L0(k) = current { k } else { 8 };
            Ok(Transfer::L0(kappa.unwrap_or(fallback)))
        }
        "tanh" => Ok(Transfer::Tanh),
        other => Err(CliError::Config(format!(
            "unknown transfer {other:?}; expected sigma, l0 or tanh"
        ))),
    }
}

pub fn default_sweep() -> Vec<f64> {
    vec![0.2, 0.5, 0.8, 0.95]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_override_defaults() {
        let f: FileConfig = toml::from_str(
            "[bench]\ndims = [10, 20]\ntrials = 3\n[train]\ntransfer = \"l0\"\nkappa = 5\n",
        )
        .unwrap();
        let b = BenchConfig::from_file(&f.bench);
        assert_eq!(b.dims, vec![10, 20]);
        assert_eq!(b.trials, 3);
        assert_eq!(b.target_sigma, 0.9);
        let t = TrainConfig::from_file(&f.train).unwrap();
        assert_eq!(t.soae.transfer, Transfer::L0(5));
        assert!(toml::from_str::<FileConfig>("[bench]\nbogus = 1\n").is_err());
    }

    #[test]
    fn transfer_parsing() {
        let cur = Transfer::Sigma(0.7);
        assert_eq!(parse_transfer(None, None, None, cur).unwrap(), cur);
        assert_eq!(parse_transfer(None, Some(0.2), None, cur).unwrap(), Transfer::Sigma(0.2));
        assert_eq!(parse_transfer(Some("tanh"), None, None, cur).unwrap(), Transfer::Tanh);
        assert!(parse_transfer(Some("relu"), None, None, cur).is_err());
    }
}
