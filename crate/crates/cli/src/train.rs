//! Desk-scale auto-encoder training and the hidden-activity sweep.

use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sparseness::checkpoint::Checkpoint;
use sparseness::mnist::{jitter8, load_idx, subset, LabeledDataset, NUM_CLASSES};
use sparseness::soae::{
    error_rate, forward, init_params, mean_loss, train, EpochReport, SoaeParams, TrainOutcome,
    Transfer,
};

use crate::config::TrainConfig;
use crate::error::{CliError, Result};
use crate::table::{num, Table};

/// Training and evaluation subsets selected by a configuration.
pub struct Datasets {
    pub train: LabeledDataset,
    pub eval: LabeledDataset,
}

pub fn load_datasets(cfg: &TrainConfig) -> Result<Datasets> {
    let train_all = load_idx(&cfg.train_images, &cfg.train_labels)?;
    let eval_all = load_idx(&cfg.eval_images, &cfg.eval_labels)?;
    let seed = cfg.soae.seed;
    let mut train = subset(&train_all, cfg.train_samples, seed)?;
    if cfg.jitter {
        train = jitter8(&train)?;
    }
    let eval = subset(&eval_all, cfg.eval_samples, seed ^ 0x5eed)?;
    Ok(Datasets { train, eval })
}

pub struct TrainRun {
    pub initial: SoaeParams,
    pub outcome: TrainOutcome,
    /// Evaluation error after each epoch on which it was measured.
    pub eval_errors: Vec<Option<f64>>,
    /// Largest deviation of any column sparseness from `sigma_w` seen at an epoch boundary.
    pub max_column_deviation: f64,
    pub table: Table,
}

impl TrainRun {
    pub fn final_eval_error(&self) -> Option<f64> {
        self.eval_errors.iter().rev().flatten().next().copied()
    }
}

pub fn run_training(cfg: &TrainConfig, data: &Datasets) -> Result<TrainRun> {
    cfg.validate()?;
    let soae = &cfg.soae;
    let mut rng = ChaCha8Rng::seed_from_u64(soae.seed);
    let initial = init_params(&data.train, NUM_CLASSES, soae, &mut rng)?;
    let mut eval_errors = Vec::new();
    let mut max_dev: f64 = column_deviation(&initial, soae.sigma_w)?;
    let outcome = train(initial.clone(), &data.train, soae, &mut rng, |report, params| {
        max_dev = max_dev.max(column_deviation(params, soae.sigma_w)?);
        let due = report.epoch % cfg.eval_every == 0 || report.epoch == soae.max_epochs;
        let err = if due {
            Some(error_rate(params, &data.eval, soae)?)
        } else {
            None
        };
        info!(
            "epoch {} loss {:.5} alpha {:.4} eval {}",
            report.epoch,
            report.mean_loss,
            report.alpha,
            err.map_or("-".to_string(), |e| format!("{e:.4}"))
        );
        eval_errors.push(err);
        Ok(())
    })?;
    // Training can stop early on the loss criterion; always report a final error.
    if let Some(last @ None) = eval_errors.last_mut() {
        *last = Some(error_rate(&outcome.params, &data.eval, soae)?);
    }
    let table = metrics_table(cfg, data, &outcome.history, &eval_errors);
    if let Some(path) = &cfg.checkpoint {
        Checkpoint {
            params: outcome.params.clone(),
            config: soae.clone(),
        }
        .save(path)?;
    }
    Ok(TrainRun {
        initial,
        outcome,
        eval_errors,
        max_column_deviation: max_dev,
        table,
    })
}

fn column_deviation(params: &SoaeParams, sigma_w: f64) -> sparseness::Result<f64> {
    let mut worst: f64 = 0.0;
    for col in params.w.columns() {
        let v: Vec<f64> = col.to_vec();
        worst = worst.max((sparseness::sigma(&v)? - sigma_w).abs());
    }
    Ok(worst)
}

fn transfer_label(t: Transfer) -> String {
    match t {
        Transfer::Sigma(s) => format!("sigma({s})"),
        Transfer::L0(k) => format!("l0({k})"),
        Transfer::Tanh => "tanh".into(),
    }
}

fn metrics_table(
    cfg: &TrainConfig,
    data: &Datasets,
    history: &[EpochReport],
    eval_errors: &[Option<f64>],
) -> Table {
    let s = &cfg.soae;
    let mut t = Table::new(&[
        "epoch",
        "mean_loss",
        "alpha",
        "step",
        "eval_error",
        "mean_reconstruction",
        "mean_cross_entropy",
        "skipped",
    ]);
    t.meta("seed", s.seed)
        .meta("train_samples", data.train.len())
        .meta("eval_samples", data.eval.len())
        .meta("jitter", cfg.jitter)
        .meta("n_hidden", s.n_hidden)
        .meta("sigma_w", s.sigma_w)
        .meta("transfer", transfer_label(s.transfer))
        .meta("step_size", s.step_size)
        .meta("anneal_factor", s.anneal_factor)
        .meta("samples_per_epoch", s.samples_per_epoch)
        .meta("alpha_tau", s.alpha_tau)
        .meta("pixel_scaling", "bytes / 255");
    for (r, e) in history.iter().zip(eval_errors) {
        t.push(vec![
            r.epoch.to_string(),
            num(r.mean_loss),
            num(r.alpha),
            num(r.step),
            e.map(num).unwrap_or_default(),
            num(r.mean_reconstruction),
            num(r.mean_cross_entropy),
            r.skipped.to_string(),
        ]);
    }
    t
}

/// Mean and population standard deviation of the number of nonzero hidden
/// activities over `data`.
pub fn activity_stats(params: &SoaeParams, data: &LabeledDataset, cfg: &sparseness::soae::SoaeConfig) -> Result<(f64, f64)> {
    let counts: Vec<f64> = data
        .samples()
        .iter()
        .map(|x| {
            let rec = forward(params, x, cfg)?;
            Ok(rec.h.iter().filter(|v| **v != 0.0).count() as f64)
        })
        .collect::<Result<_>>()?;
    let n = counts.len().max(1) as f64;
    let mean = counts.iter().sum::<f64>() / n;
    let var = counts.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sigma_h: f64,
    pub mean_l0: f64,
    pub std_l0: f64,
    pub eval_error: f64,
}

/// Trains one model per hidden sparseness (in parallel, otherwise identical
/// settings) and measures hidden activity on the evaluation subset.
pub fn activity_sweep(cfg: &TrainConfig, data: &Datasets, sigmas: &[f64]) -> Result<(Vec<SweepRow>, Table)> {
    if sigmas.is_empty() {
        return Err(CliError::Config("sweep needs at least one sigma_h".into()));
    }
    let rows: Vec<SweepRow> = sigmas
        .par_iter()
        .map(|&s| {
            let mut c = cfg.clone();
            c.soae.transfer = Transfer::Sigma(s);
            c.checkpoint = None;
            c.eval_every = usize::MAX;
            let run = run_training(&c, data)?;
            let (mean_l0, std_l0) = activity_stats(&run.outcome.params, &data.eval, &c.soae)?;
            info!("sweep sigma_h {s}: mean l0 {mean_l0:.3}");
            Ok(SweepRow {
                sigma_h: s,
                mean_l0,
                std_l0,
                eval_error: error_rate(&run.outcome.params, &data.eval, &c.soae)?,
            })
        })
        .collect::<Result<_>>()?;
    let s = &cfg.soae;
    let mut t = Table::new(&["sigma_h", "mean_l0", "std_l0", "eval_error"]);
    t.meta("seed", s.seed)
        .meta("n_hidden", s.n_hidden)
        .meta("sigma_w", s.sigma_w)
        .meta("max_epochs", s.max_epochs)
        .meta("train_samples", data.train.len())
        .meta("activity_samples", data.eval.len());
    for r in &rows {
        t.push(vec![num(r.sigma_h), num(r.mean_l0), num(r.std_l0), num(r.eval_error)]);
    }
    Ok((rows, t))
}

/// Mean training objective of the initial and final parameters, both at the
/// trade-off of the final epoch.
pub fn loss_progress(run: &TrainRun, data: &Datasets, cfg: &TrainConfig) -> Result<(f64, f64)> {
    let alpha = run.outcome.history.last().map_or(0.0, |r| r.alpha);
    Ok((
        mean_loss(&run.initial, &data.train, &cfg.soae, alpha)?,
        mean_loss(&run.outcome.params, &data.train, &cfg.soae, alpha)?,
    ))
}
