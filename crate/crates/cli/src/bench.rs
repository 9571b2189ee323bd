//! Iteration counts, working-set decay and timings of the improved projection
//! against Hoyer's original scheme.
//!
//! Inputs are drawn entrywise from the uniform distribution on `[0, 1)` and
//! projected scale-free to the requested input sparseness. Trial `k` draws
//! from stream `k` of a ChaCha8 generator seeded with the configured seed, so
//! results do not depend on how trials are scheduled across threads.

use std::time::{Duration, Instant};

use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sparseness::baseline::hoyer_project;
use sparseness::projection::project_nonneg_counting;
use sparseness::{project_scale_free, SparseTarget};

use crate::config::BenchConfig;
use crate::error::Result;
use crate::table::{num, Table};

pub const SAMPLING: &str = "uniform[0,1) entries, scale-free projection to input sparseness";

/// Input vector of one trial.
pub fn sample_input(n: usize, input_sigma: f64, seed: u64, trial: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let t = SparseTarget::from_sigma(n, input_sigma)?;
    Ok(project_scale_free(&raw, &t)?)
}

/// Working-set sizes of both algorithms on one input; entry `i` is the
/// number of coordinates the `i`-th hypercircle projection acted on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialSupports {
    pub improved: Vec<usize>,
    pub original: Vec<usize>,
}

impl TrialSupports {
    pub fn improved_iterations(&self) -> usize {
        self.improved.len()
    }

    pub fn original_iterations(&self) -> usize {
        self.original.len()
    }
}

/// Runs both algorithms on the trials of dimension `n`, in trial order.
pub fn run_trials(n: usize, cfg: &BenchConfig) -> Result<Vec<TrialSupports>> {
    let target = SparseTarget::from_sigma(n, cfg.target_sigma)?;
    (0..cfg.trials as u64)
        .into_par_iter()
        .map(|k| {
            let x = sample_input(n, cfg.input_sigma, cfg.seed, k)?;
            let (_, improved) = project_nonneg_counting(&x, &target)?;
            let (_, trace) = hoyer_project(&x, &target)?;
            Ok(TrialSupports {
                improved,
                original: trace.support_per_iteration,
            })
        })
        .collect()
}

fn bench_meta(t: &mut Table, cfg: &BenchConfig) {
    t.meta("seed", cfg.seed)
        .meta("trials", cfg.trials)
        .meta("input_sigma", cfg.input_sigma)
        .meta("target_sigma", cfg.target_sigma)
        .meta("sampling", SAMPLING);
}

/// Rows `n, algo, mean_iters, min_iters, max_iters`, plus the number of trials
/// on which the improved algorithm needed more iterations than the original.
pub fn iterations(cfg: &BenchConfig) -> Result<Table> {
    cfg.validate()?;
    let mut table = Table::new(&["n", "algo", "mean_iters", "min_iters", "max_iters"]);
    bench_meta(&mut table, cfg);
    let mut violations = 0;
    for &n in &cfg.dims {
        info!("iterations: n = {n}");
        let trials = run_trials(n, cfg)?;
        violations += trials
            .iter()
            .filter(|t| t.improved_iterations() > t.original_iterations())
            .count();
        for (algo, counts) in [
            ("improved", trials.iter().map(TrialSupports::improved_iterations).collect::<Vec<_>>()),
            ("original", trials.iter().map(TrialSupports::original_iterations).collect()),
        ] {
            let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
            table.push(vec![
                n.to_string(),
                algo.to_string(),
                num(mean),
                counts.iter().min().unwrap().to_string(),
                counts.iter().max().unwrap().to_string(),
            ]);
        }
    }
    table.meta("dominance_violations", violations);
    Ok(table)
}

/// Mean fraction of the `n` coordinates still in the working set at each
/// iteration. A trial that has already finished contributes its final
/// working-set size.
pub fn mean_support_fractions(trials: &[TrialSupports], n: usize) -> (Vec<f64>, Vec<f64>) {
    let curve = |pick: fn(&TrialSupports) -> &Vec<usize>| {
        let len = trials.iter().map(|t| pick(t).len()).max().unwrap_or(0);
        (0..len)
            .map(|i| {
                let total: usize = trials
                    .iter()
                    .map(|t| {
                        let s = pick(t);
                        s[i.min(s.len() - 1)]
                    })
                    .sum();
                total as f64 / (trials.len() * n) as f64
            })
            .collect()
    };
    (curve(|t| &t.improved), curve(|t| &t.original))
}

/// Rows `n, iteration, algo, mean_support_fraction, active_trials`.
pub fn support_decay(cfg: &BenchConfig) -> Result<Table> {
    cfg.validate()?;
    let mut table = Table::new(&[
        "n",
        "iteration",
        "algo",
        "mean_support_fraction",
        "active_trials",
    ]);
    bench_meta(&mut table, cfg);
    for &n in &cfg.dims {
        info!("support decay: n = {n}");
        let trials = run_trials(n, cfg)?;
        let (improved, original) = mean_support_fractions(&trials, n);
        for (algo, curve, pick) in [
            ("improved", improved, (|t: &TrialSupports| t.improved.len()) as fn(&TrialSupports) -> usize),
            ("original", original, |t: &TrialSupports| t.original.len()),
        ] {
            for (i, frac) in curve.iter().enumerate() {
                let active = trials.iter().filter(|t| pick(t) > i).count();
                table.push(vec![
                    n.to_string(),
                    (i + 1).to_string(),
                    algo.to_string(),
                    num(*frac),
                    active.to_string(),
                ]);
            }
        }
    }
    Ok(table)
}

/// Median wall-clock time of `repeats` batches, each looping `f` often enough
/// to last at least `min` in total. Returns seconds per call of `f`.
fn time_per_call(mut f: impl FnMut(), min: Duration, repeats: usize) -> (f64, usize) {
    let mut reps = 1usize;
    loop {
        let start = Instant::now();
        for _ in 0..reps {
            f();
        }
        if start.elapsed() >= min || reps >= 1 << 30 {
            break;
        }
        reps *= 2;
    }
    let mut samples: Vec<f64> = (0..repeats)
        .map(|_| {
            let start = Instant::now();
            for _ in 0..reps {
                f();
            }
            start.elapsed().as_secs_f64() / reps as f64
        })
        .collect();
    samples.sort_by(f64::total_cmp);
    (samples[samples.len() / 2], reps)
}

/// Rows `n, sigma_in, trials, mean_iters_improved, mean_iters_original`
/// followed by the timing columns `reps_improved, reps_original,
/// secs_improved, secs_original, time_ratio`. Only the timing columns vary
/// between runs with the same seed.
pub fn speedup(cfg: &BenchConfig) -> Result<Table> {
    cfg.validate()?;
    let mut table = Table::new(&[
        "n",
        "sigma_in",
        "trials",
        "mean_iters_improved",
        "mean_iters_original",
        "reps_improved",
        "reps_original",
        "secs_improved",
        "secs_original",
        "time_ratio",
    ]);
    table
        .meta("seed", cfg.seed)
        .meta("trials", cfg.trials)
        .meta("target_sigma", cfg.target_sigma)
        .meta("sampling", SAMPLING)
        .meta("timing", format!(
            "median of {} batches, each >= {} ms; seconds are per batch of all trials",
            cfg.repeats, cfg.min_cell_ms
        ))
        .meta("timing_columns", "reps_improved,reps_original,secs_improved,secs_original,time_ratio");
    let min = Duration::from_millis(cfg.min_cell_ms);
    for &n in &cfg.dims {
        let target = SparseTarget::from_sigma(n, cfg.target_sigma)?;
        for &sigma_in in &cfg.input_sigmas {
            let inputs: Vec<Vec<f64>> = (0..cfg.trials as u64)
                .into_par_iter()
                .map(|k| sample_input(n, sigma_in, cfg.seed, k))
                .collect::<Result<_>>()?;
            let mut iters = (0usize, 0usize);
            for x in &inputs {
                iters.0 += project_nonneg_counting(x, &target)?.1.len();
                iters.1 += hoyer_project(x, &target)?.1.iterations;
            }
            let (secs_improved, reps_improved) = time_per_call(
                || {
                    for x in &inputs {
                        std::hint::black_box(project_nonneg_counting(x, &target).ok());
                    }
                },
                min,
                cfg.repeats,
            );
            let (secs_original, reps_original) = time_per_call(
                || {
                    for x in &inputs {
                        std::hint::black_box(hoyer_project(x, &target).ok());
                    }
                },
                min,
                cfg.repeats,
            );
            debug!("speedup n={n} sigma_in={sigma_in}: {secs_original} / {secs_improved}");
            let trials = inputs.len() as f64;
            table.push(vec![
                n.to_string(),
                num(sigma_in),
                inputs.len().to_string(),
                num(iters.0 as f64 / trials),
                num(iters.1 as f64 / trials),
                reps_improved.to_string(),
                reps_original.to_string(),
                format!("{secs_improved:.6e}"),
                format!("{secs_original:.6e}"),
                format!("{:.4}", secs_original / secs_improved),
            ]);
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inputs_have_requested_sparseness_and_are_reproducible() {
        let x = sample_input(200, 0.15, 3, 7).unwrap();
        assert!((sparseness::sigma(&x).unwrap() - 0.15).abs() < 1e-9);
        assert!(x.iter().all(|v| *v >= 0.0));
        assert_eq!(x, sample_input(200, 0.15, 3, 7).unwrap());
        assert_ne!(x, sample_input(200, 0.15, 3, 8).unwrap());
    }

    #[test]
    fn support_fractions_carry_final_value_forward() {
        let trials = vec![
            TrialSupports { improved: vec![4, 2], original: vec![4, 3, 2] },
            TrialSupports { improved: vec![4], original: vec![4, 2] },
        ];
        let (imp, orig) = mean_support_fractions(&trials, 4);
        assert_eq!(imp, vec![1.0, 0.75]);
        assert_eq!(orig, vec![1.0, 0.625, 0.5]);
    }
}
