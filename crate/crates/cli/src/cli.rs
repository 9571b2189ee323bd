use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{default_sweep, parse_transfer, BenchConfig, FileConfig, TrainConfig};
use crate::error::{CliError, Result};
use crate::project::{project, read_vector, Target};
use crate::{bench, train};

/// Sparseness-enforcing projections: experiments and utilities.
///
/// Tables are written as CSV with `#` metadata lines. Set `SPARSENESS_LOG`
/// (e.g. `info` or `debug`) for progress output on stderr.
#[derive(Debug, Parser)]
#[command(name = "sparseness", version)]
pub struct Cli {
    /// TOML file with `[bench]`, `[train]` and `[sweep]` sections; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Iteration counts of the improved and the original algorithm.
    Iterations(BenchArgs),
    /// Mean working-set fraction per iteration for both algorithms.
    SupportDecay(BenchArgs),
    /// Wall-clock ratio original / improved over a dimension x input-sparseness grid.
    Speedup(BenchArgs),
    /// Train the sparse auto-encoder and write per-epoch metrics.
    Train(TrainArgs),
    /// Train one model per hidden sparseness and report hidden activity.
    ActivitySweep(SweepArgs),
    /// Project a single vector read from a file (`-` for stdin).
    Project(ProjectArgs),
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated dimensions.
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Sparseness of the sampled inputs.
    #[arg(long)]
    pub input_sigma: Option<f64>,
    /// Comma-separated input sparseness grid (speedup only).
    #[arg(long, value_delimiter = ',')]
    pub input_sigmas: Option<Vec<f64>>,
    #[arg(long)]
    pub target_sigma: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Minimum duration of one timed batch (speedup only).
    #[arg(long)]
    pub min_cell_ms: Option<u64>,
    /// Timed batches per cell (speedup only).
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Output CSV file; stdout when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

impl BenchArgs {
    pub fn resolve(&self, file: &FileConfig) -> BenchConfig {
        let mut c = BenchConfig::from_file(&file.bench);
        if let Some(v) = &self.dims {
            c.dims = v.clone();
        }
        if let Some(v) = &self.input_sigmas {
            c.input_sigmas = v.clone();
        }
        c.input_sigma = self.input_sigma.unwrap_or(c.input_sigma);
        c.target_sigma = self.target_sigma.unwrap_or(c.target_sigma);
        c.trials = self.trials.unwrap_or(c.trials);
        c.seed = self.seed.unwrap_or(c.seed);
        c.min_cell_ms = self.min_cell_ms.unwrap_or(c.min_cell_ms);
        c.repeats = self.repeats.unwrap_or(c.repeats);
        c
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub train_images: Option<PathBuf>,
    #[arg(long)]
    pub train_labels: Option<PathBuf>,
    #[arg(long)]
    pub eval_images: Option<PathBuf>,
    #[arg(long)]
    pub eval_labels: Option<PathBuf>,
    #[arg(long)]
    pub train_samples: Option<usize>,
    #[arg(long)]
    pub eval_samples: Option<usize>,
    /// Add the eight one-pixel shifts of every training image.
    #[arg(long)]
    pub jitter: bool,
    #[arg(long)]
    pub eval_every: Option<usize>,
    #[arg(long)]
    pub n_hidden: Option<usize>,
    #[arg(long)]
    pub sigma_w: Option<f64>,
    /// Hidden transfer function: sigma, l0 or tanh.
    #[arg(long)]
    pub transfer: Option<String>,
    #[arg(long)]
    pub sigma_h: Option<f64>,
    #[arg(long)]
    pub kappa: Option<usize>,
    #[arg(long)]
    pub step_size: Option<f64>,
    #[arg(long)]
    pub anneal_factor: Option<f64>,
    #[arg(long)]
    pub samples_per_epoch: Option<usize>,
    #[arg(long)]
    pub alpha_tau: Option<f64>,
    #[arg(long)]
    pub stop_rel_tol: Option<f64>,
    #[arg(long)]
    pub stop_window: Option<usize>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Where to write the trained parameters.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Output CSV file; stdout when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

impl TrainArgs {
    pub fn resolve(&self, file: &FileConfig) -> Result<TrainConfig> {
        let mut c = TrainConfig::from_file(&file.train)?;
        let set = |slot: &mut PathBuf, v: &Option<PathBuf>| {
            if let Some(v) = v {
                *slot = v.clone();
            }
        };
        set(&mut c.train_images, &self.train_images);
        set(&mut c.train_labels, &self.train_labels);
        set(&mut c.eval_images, &self.eval_images);
        set(&mut c.eval_labels, &self.eval_labels);
        c.train_samples = self.train_samples.unwrap_or(c.train_samples);
        c.eval_samples = self.eval_samples.unwrap_or(c.eval_samples);
        c.jitter |= self.jitter;
        c.eval_every = self.eval_every.unwrap_or(c.eval_every);
        c.checkpoint = self.checkpoint.clone().or(c.checkpoint);
        let s = &mut c.soae;
        s.n_hidden = self.n_hidden.unwrap_or(s.n_hidden);
        s.sigma_w = self.sigma_w.unwrap_or(s.sigma_w);
        s.transfer = parse_transfer(self.transfer.as_deref(), self.sigma_h, self.kappa, s.transfer)?;
        s.step_size = self.step_size.unwrap_or(s.step_size);
        s.anneal_factor = self.anneal_factor.unwrap_or(s.anneal_factor);
        s.samples_per_epoch = self.samples_per_epoch.unwrap_or(s.samples_per_epoch);
        s.alpha_tau = self.alpha_tau.unwrap_or(s.alpha_tau);
        s.stop_rel_tol = self.stop_rel_tol.unwrap_or(s.stop_rel_tol);
        s.stop_window = self.stop_window.unwrap_or(s.stop_window);
        s.max_epochs = self.max_epochs.unwrap_or(s.max_epochs);
        s.seed = self.seed.unwrap_or(s.seed);
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated hidden sparseness values.
    #[arg(long = "sigmas", value_delimiter = ',')]
    pub sigmas: Option<Vec<f64>>,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    /// File with the input vector (numbers separated by commas or whitespace), or `-`.
    pub input: PathBuf,
    /// Target sparseness; sets lambda2 = 1.
    #[arg(long, conflicts_with_all = ["lambda1", "l0"])]
    pub sigma: Option<f64>,
    #[arg(long, requires = "lambda2", conflicts_with = "l0")]
    pub lambda1: Option<f64>,
    #[arg(long, requires = "lambda1")]
    pub lambda2: Option<f64>,
    /// Project onto the non-negative set instead of the unrestricted one.
    #[arg(long, conflicts_with = "l0")]
    pub nonneg: bool,
    /// Keep the KAPPA largest-magnitude entries instead.
    #[arg(long, value_name = "KAPPA")]
    pub l0: Option<usize>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

impl ProjectArgs {
    pub fn target(&self) -> Result<Target> {
        match (self.sigma, self.lambda1, self.lambda2, self.l0) {
            (Some(s), None, None, None) => Ok(Target::Sigma(s)),
            (None, Some(lambda1), Some(lambda2), None) => Ok(Target::Norms { lambda1, lambda2 }),
            (None, None, None, Some(k)) => Ok(Target::L0(k)),
            _ => Err(CliError::Config(
                "give exactly one of --sigma, --lambda1/--lambda2 or --l0".into(),
            )),
        }
    }
}

fn load_file(path: Option<&Path>) -> Result<FileConfig> {
    path.map_or_else(|| Ok(FileConfig::default()), FileConfig::load)
}

pub fn run(cli: Cli) -> Result<()> {
    let file = load_file(cli.config.as_deref())?;
    match cli.command {
        Command::Iterations(a) => bench::iterations(&a.resolve(&file))?.emit(a.output.as_deref()),
        Command::SupportDecay(a) => bench::support_decay(&a.resolve(&file))?.emit(a.output.as_deref()),
        Command::Speedup(a) => bench::speedup(&a.resolve(&file))?.emit(a.output.as_deref()),
        Command::Train(a) => {
            let cfg = a.resolve(&file)?;
            let data = train::load_datasets(&cfg)?;
            train::run_training(&cfg, &data)?.table.emit(a.output.as_deref())
        }
        Command::ActivitySweep(a) => {
            let cfg = a.train.resolve(&file)?;
            let sigmas = a
                .sigmas
                .clone()
                .or_else(|| file.sweep.sigma_h.clone())
                .unwrap_or_else(default_sweep);
            let data = train::load_datasets(&cfg)?;
            let (_, table) = train::activity_sweep(&cfg, &data, &sigmas)?;
            table.emit(a.train.output.as_deref())
        }
        Command::Project(a) => {
            let x = read_vector(&a.input)?;
            project(&x, &a.target()?, a.nonneg)?.emit(a.output.as_deref())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_file() {
        let file: FileConfig = toml::from_str("[bench]\ntrials = 7\nseed = 3\n").unwrap();
        let cli = Cli::parse_from(["sparseness", "iterations", "--trials", "2", "--dims", "5,6"]);
        let Command::Iterations(a) = cli.command else { panic!() };
        let c = a.resolve(&file);
        assert_eq!((c.trials, c.seed, c.dims), (2, 3, vec![5, 6]));
    }

    #[test]
    fn project_targets() {
        let cli = Cli::parse_from(["sparseness", "project", "-", "--l0", "2"]);
        let Command::Project(a) = cli.command else { panic!() };
        assert_eq!(a.target().unwrap(), Target::L0(2));
        assert!(Cli::try_parse_from(["sparseness", "project", "-", "--sigma", "0.5", "--l0", "2"]).is_err());
        assert!(Cli::try_parse_from(["sparseness", "project", "-", "--lambda1", "1.5"]).is_err());
    }
}
