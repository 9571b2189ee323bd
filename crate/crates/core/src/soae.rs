//! Supervised online auto-encoder with sparse activity and sparse connectivity.
//!
//! A sample `x` is encoded as `u = W' x`, passed through a transfer function
//! `h = f(u)`, reconstructed with the same weights as `x~ = W h` and classified
//! with `y = softmax(W_out' h + theta)`. The objective blends the negated
//! correlation coefficient of `x~` and `x` with the cross-entropy of `y`:
//!
//! ```text
//! E = (1 - alpha) * (-corr(x~, x)) + alpha * xent(y, t)
//! ```
//!
//! Training is projected stochastic gradient descent. `alpha` starts near zero
//! and grows with the epoch, and after each epoch every column of `W` is
//! projected back to the prescribed sparseness.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::gradient::{grad_l0, GradientOperator};
use crate::mnist::{one_hot, LabeledDataset};
use crate::projection::{project_l0, project_scale_free, project_unrestricted, ProjectionTrace};
use crate::sigma::SparseTarget;

/// Hidden-layer transfer function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transfer {
    /// Projection onto unit-norm vectors with sparseness `sigma_h`.
    Sigma(f64),
    /// Keep the `kappa` largest-magnitude entries.
    L0(usize),
    Tanh,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoaeConfig {
    pub n_hidden: usize,
    pub sigma_w: f64,
    pub transfer: Transfer,
    pub step_size: f64,
    pub anneal_factor: f64,
    pub samples_per_epoch: usize,
    /// Time constant of the trade-off schedule `alpha(nu) = 1 - exp(-nu / alpha_tau)`.
    pub alpha_tau: f64,
    pub stop_rel_tol: f64,
    pub stop_window: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for SoaeConfig {
    fn default() -> Self {
        Self {
            n_hidden: 1000,
            sigma_w: 0.75,
            transfer: Transfer::Sigma(0.8),
            step_size: 0.05,
            anneal_factor: 0.999,
            samples_per_epoch: 21_600,
            alpha_tau: 100.0,
            stop_rel_tol: 1e-4,
            stop_window: 10,
            max_epochs: 2000,
            seed: 0,
        }
    }
}

impl SoaeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n_hidden < 2 {
            return bad(format!("n_hidden must be at least 2, got {}", self.n_hidden));
        }
        if !(self.sigma_w > 0.0 && self.sigma_w < 1.0) {
            return Err(Error::SigmaOutOfRange(self.sigma_w));
        }
        match self.transfer {
            Transfer::Sigma(s) if !(s > 0.0 && s < 1.0) => return Err(Error::SigmaOutOfRange(s)),
            Transfer::L0(k) if k == 0 || k > self.n_hidden => {
                return Err(Error::KappaOutOfRange {
                    kappa: k,
                    n: self.n_hidden,
                })
            }
            _ => {}
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return bad(format!("step_size must be positive, got {}", self.step_size));
        }
        if !(self.anneal_factor > 0.0 && self.anneal_factor <= 1.0) {
            return bad(format!("anneal_factor must be in (0, 1], got {}", self.anneal_factor));
        }
        if self.samples_per_epoch == 0 || self.max_epochs == 0 || self.stop_window == 0 {
            return bad("samples_per_epoch, max_epochs and stop_window must be positive".into());
        }
        if !(self.alpha_tau > 0.0) || self.stop_rel_tol.is_nan() || self.stop_rel_tol < 0.0 {
            return bad("alpha_tau must be positive and stop_rel_tol non-negative".into());
        }
        Ok(())
    }

    /// Trade-off between reconstruction and classification at epoch `nu >= 1`.
    pub fn alpha(&self, nu: usize) -> f64 {
        1.0 - (-(nu as f64) / self.alpha_tau).exp()
    }

    /// Annealed step size at epoch `nu >= 1`.
    pub fn step(&self, nu: usize) -> f64 {
        self.step_size * self.anneal_factor.powi(nu as i32 - 1)
    }

    fn hidden_target(&self) -> Result<Option<SparseTarget>> {
        match self.transfer {
            Transfer::Sigma(s) => SparseTarget::from_sigma(self.n_hidden, s).map(Some),
            _ => Ok(None),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoaeParams {
    /// Bases, `d x n`.
    pub w: Array2<f64>,
    /// Classifier weights, `n x c`.
    pub w_out: Array2<f64>,
    pub theta: Array1<f64>,
}

impl SoaeParams {
    pub fn input_dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w.ncols()
    }

    pub fn classes(&self) -> usize {
        self.w_out.ncols()
    }

    /// Projects every column of `W` to sparseness `sigma_w`, keeping its best scale.
    pub fn project_columns(&mut self, sigma_w: f64) -> Result<()> {
        let t = SparseTarget::from_sigma(self.input_dim(), sigma_w)?;
        for mut col in self.w.axis_iter_mut(Axis(1)) {
            let v: Vec<f64> = col.iter().copied().collect();
            let p = project_scale_free(&v, &t)?;
            col.iter_mut().zip(p).for_each(|(c, p)| *c = p);
        }
        Ok(())
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardRecord {
    pub u: Vec<f64>,
    pub h: Vec<f64>,
    pub x_tilde: Vec<f64>,
    pub y: Vec<f64>,
    pub log_y: Vec<f64>,
    pub transfer_trace: Option<ProjectionTrace>,
    /// Whether the transfer function is differentiable at `u`.
    pub differentiable: bool,
}

pub fn forward(params: &SoaeParams, x: &[f64], cfg: &SoaeConfig) -> Result<ForwardRecord> {
    params.check(x)?;
    let u = params.w.t().dot(&ArrayView1::from(x)).to_vec();
    forward_from_u(params, u, cfg, cfg.hidden_target()?.as_ref())
}

fn forward_from_u(
    params: &SoaeParams,
    u: Vec<f64>,
    cfg: &SoaeConfig,
    target: Option<&SparseTarget>,
) -> Result<ForwardRecord> {
    let (h, transfer_trace, differentiable) = match (cfg.transfer, target) {
        (Transfer::Sigma(_), Some(t)) => {
            let out = project_unrestricted(&u, t)?;
            let ok = out.trace.is_differentiable();
            (out.point, Some(out.trace), ok)
        }
        (Transfer::Sigma(s), None) => {
            let t = SparseTarget::from_sigma(u.len(), s)?;
            return forward_from_u(params, u, cfg, Some(&t));
        }
        (Transfer::L0(k), _) => {
            let ok = grad_l0(&u, k).is_ok();
            (project_l0(&u, k)?, None, ok)
        }
        (Transfer::Tanh, _) => (u.iter().map(|v| v.tanh()).collect(), None, true),
    };
    let hv = ArrayView1::from(&h);
    let x_tilde = params.w.dot(&hv).to_vec();
    let z = params.w_out.t().dot(&hv) + &params.theta;
    let log_y = log_softmax(z.as_slice().expect("contiguous"));
    let y = log_y.iter().map(|v| v.exp()).collect();
    Ok(ForwardRecord {
        u,
        h,
        x_tilde,
        y,
        log_y,
        transfer_trace,
        differentiable,
    })
}

fn log_softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    z.iter().map(|v| v - lse).collect()
}

/// Correlation coefficient of `a` and `b` together with the gradient with
/// respect to `a`. `None` when either vector is constant.
pub fn correlation(a: &[f64], b: &[f64]) -> Option<(f64, Vec<f64>)> {
    let d = a.len() as f64;
    let ma = a.iter().sum::<f64>() / d;
    let mb = b.iter().sum::<f64>() / d;
    let mut lambda = 0.0;
    let mut mu = 0.0;
    let mut cross = 0.0;
    for (p, q) in a.iter().zip(b) {
        let (p, q) = (p - ma, q - mb);
        lambda += p * p;
        mu += q * q;
        cross += p * q;
    }
    if lambda <= f64::MIN_POSITIVE || mu <= f64::MIN_POSITIVE {
        return None;
    }
    let root = (lambda * mu).sqrt();
    let corr = cross / root;
    let grad = a
        .iter()
        .zip(b)
        .map(|(p, q)| (q - mb) / root - corr / lambda * (p - ma))
        .collect();
    Some((corr, grad))
}

/// Objective value of one sample.
pub fn loss(rec: &ForwardRecord, x: &[f64], t: &[f64], alpha: f64) -> f64 {
    let recon = if alpha < 1.0 {
        correlation(&rec.x_tilde, x).map_or(0.0, |(c, _)| -c)
    } else {
        0.0
    };
    let xent: f64 = -t
        .iter()
        .zip(&rec.log_y)
        .filter(|(t, _)| **t != 0.0)
        .map(|(t, l)| t * l)
        .sum::<f64>();
    (1.0 - alpha) * recon + alpha * xent
}

/// Gradient of [`loss`] with respect to all parameters.
///
/// The gradient with respect to `W` has rank at most two,
/// `x v' + r h'`, and is kept in that factored form.
#[derive(Debug, Clone, PartialEq)]
pub struct SoaeGradient {
    x: Array1<f64>,
    v: Array1<f64>,
    r: Array1<f64>,
    h: Array1<f64>,
    pub w_out: Array2<f64>,
    pub theta: Array1<f64>,
}

impl SoaeGradient {
    /// Dense gradient with respect to `W`.
    pub fn w(&self) -> Array2<f64> {
        outer(&self.x, &self.v) + outer(&self.r, &self.h)
    }

    /// Gradient descent step `params -= step * grad`.
    pub fn descend(&self, params: &mut SoaeParams, step: f64) {
        rank_one_update(&mut params.w, -step, &self.x, &self.v);
        rank_one_update(&mut params.w, -step, &self.r, &self.h);
        params.w_out.scaled_add(-step, &self.w_out);
        params.theta.scaled_add(-step, &self.theta);
    }
}

fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    Array2::from_shape_fn((a.len(), b.len()), |(i, j)| a[i] * b[j])
}

fn rank_one_update(m: &mut Array2<f64>, scale: f64, a: &Array1<f64>, b: &Array1<f64>) {
    for (mut row, ai) in m.axis_iter_mut(Axis(0)).zip(a) {
        let s = scale * ai;
        if s != 0.0 {
            row.scaled_add(s, b);
        }
    }
}

pub fn grad_params(
    params: &SoaeParams,
    rec: &ForwardRecord,
    x: &[f64],
    t: &[f64],
    alpha: f64,
    cfg: &SoaeConfig,
) -> Result<SoaeGradient> {
    params.check(x)?;
    if !rec.differentiable {
        return Err(Error::NonDifferentiable("transfer function"));
    }
    let n = params.hidden_dim();
    let c = params.classes();

    // Reconstruction path: dE/dx~ = -(1 - alpha) * dcorr/dx~.
    let r = match (alpha < 1.0).then(|| correlation(&rec.x_tilde, x)).flatten() {
        Some((_, g)) => Array1::from(g) * -(1.0 - alpha),
        None => Array1::zeros(x.len()),
    };
    let h = Array1::from(rec.h.clone());
    let mut dh = params.w.t().dot(&r);

    // Classification path: dE/dz = alpha * (y - t).
    let dz: Array1<f64> = rec.y.iter().zip(t).map(|(y, t)| alpha * (y - t)).collect();
    let (w_out, theta) = if alpha > 0.0 {
        dh += &params.w_out.dot(&dz);
        (outer(&h, &dz), dz)
    } else {
        (Array2::zeros((n, c)), Array1::zeros(c))
    };

    let v = match cfg.transfer {
        Transfer::Sigma(_) => {
            let trace = rec
                .transfer_trace
                .as_ref()
                .ok_or(Error::NonDifferentiable("missing projection trace"))?;
            let op = GradientOperator::from_trace(trace)?;
            Array1::from(op.apply_transpose(dh.as_slice().expect("contiguous")))
        }
        Transfer::L0(k) => {
            let mask = grad_l0(&rec.u, k)?;
            dh * &Array1::from(mask)
        }
        Transfer::Tanh => dh * &h.mapv(|v| 1.0 - v * v),
    };
    Ok(SoaeGradient {
        x: Array1::from(x.to_vec()),
        v,
        r,
        h,
        w_out,
        theta,
    })
}

/// Random initial parameters: columns of `W` are distinct training samples
/// (drawn with replacement when there are fewer samples than hidden units),
/// projected to `sigma_w`; classifier entries are `N(0, 0.01^2)`.
pub fn init_params<R: Rng + ?Sized>(
    data: &LabeledDataset,
    classes: usize,
    cfg: &SoaeConfig,
    rng: &mut R,
) -> Result<SoaeParams> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Config("learning set is empty".into()));
    }
    let (d, n) = (data.dim(), cfg.n_hidden);
    let picks: Vec<usize> = if data.len() >= n {
        index::sample(rng, data.len(), n).into_vec()
    } else {
        (0..n).map(|_| rng.random_range(0..data.len())).collect()
    };
    let mut w = Array2::zeros((d, n));
    for (j, &i) in picks.iter().enumerate() {
        w.column_mut(j).assign(&ArrayView1::from(&data.samples()[i][..]));
    }
    let normal = Normal::new(0.0, 0.01).expect("valid normal");
    let w_out = Array2::from_shape_simple_fn((n, classes), || normal.sample(rng));
    let theta = Array1::from_shape_simple_fn(classes, || normal.sample(rng));
    let mut params = SoaeParams { w, w_out, theta };
    params.project_columns(cfg.sigma_w)?;
    Ok(params)
}

/// Summary of one training epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochReport {
    pub epoch: usize,
    pub alpha: f64,
    pub step: f64,
    pub mean_loss: f64,
    /// Mean negated correlation of reconstruction and input.
    pub mean_reconstruction: f64,
    pub mean_cross_entropy: f64,
    /// Samples whose update was skipped after failed perturbation retries.
    pub skipped: usize,
    /// Forward passes whose hidden representation violated the activity constraint.
    pub activity_violations: usize,
}

const PERTURB_RETRIES: usize = 3;
const PERTURB_SCALE: f64 = 1e-9;

/// Checks the sparse-activity constraint on a hidden representation.
pub fn activity_ok(h: &[f64], transfer: Transfer) -> bool {
    match transfer {
        Transfer::Sigma(s) => {
            let norm = crate::linalg::norm(h);
            (norm - 1.0).abs() <= 1e-9
                && crate::sigma::sigma(h).is_ok_and(|v| (v - s).abs() <= 1e-6)
        }
        Transfer::L0(k) => h.iter().filter(|v| **v != 0.0).count() <= k,
        Transfer::Tanh => true,
    }
}

/// One epoch of projected stochastic gradient descent.
pub fn train_epoch<R: Rng + ?Sized>(
    params: &mut SoaeParams,
    data: &LabeledDataset,
    cfg: &SoaeConfig,
    nu: usize,
    rng: &mut R,
) -> Result<EpochReport> {
    if nu == 0 {
        return Err(Error::Config("epochs are numbered from 1".into()));
    }
    cfg.validate()?;
    let target = cfg.hidden_target()?;
    let alpha = cfg.alpha(nu);
    let step = cfg.step(nu);
    let order = epoch_order(data.len(), cfg.samples_per_epoch, rng);

    let mut report = EpochReport {
        epoch: nu,
        alpha,
        step,
        mean_loss: 0.0,
        mean_reconstruction: 0.0,
        mean_cross_entropy: 0.0,
        skipped: 0,
        activity_violations: 0,
    };
    for &i in &order {
        let (x, label) = data.sample(i);
        let t = one_hot(label, params.classes())?;
        let u0 = params.w.t().dot(&ArrayView1::from(x)).to_vec();
        let Some(rec) = differentiable_forward(params, u0, cfg, target.as_ref(), rng)? else {
            report.skipped += 1;
            continue;
        };
        if !activity_ok(&rec.h, cfg.transfer) {
            report.activity_violations += 1;
        }
        report.mean_reconstruction += loss(&rec, x, &t, 0.0);
        report.mean_cross_entropy += loss(&rec, x, &t, 1.0);
        report.mean_loss += loss(&rec, x, &t, alpha);
        grad_params(params, &rec, x, &t, alpha, cfg)?.descend(params, step);
    }
    let used = (order.len() - report.skipped).max(1) as f64;
    report.mean_loss /= used;
    report.mean_reconstruction /= used;
    report.mean_cross_entropy /= used;
    params.project_columns(cfg.sigma_w)?;
    Ok(report)
}

/// Forward pass that nudges `u` by tiny uniform noise until the transfer
/// function is differentiable. `None` when all retries fail.
fn differentiable_forward<R: Rng + ?Sized>(
    params: &SoaeParams,
    u0: Vec<f64>,
    cfg: &SoaeConfig,
    target: Option<&SparseTarget>,
    rng: &mut R,
) -> Result<Option<ForwardRecord>> {
    let scale = PERTURB_SCALE * crate::linalg::norm(&u0);
    let mut u = u0.clone();
    for attempt in 0..=PERTURB_RETRIES {
        if attempt > 0 {
            u.iter_mut()
                .zip(&u0)
                .for_each(|(v, v0)| *v = v0 + scale * rng.random_range(-1.0..=1.0));
        }
        match forward_from_u(params, u.clone(), cfg, target) {
            Ok(rec) if rec.differentiable => return Ok(Some(rec)),
            Ok(_) | Err(Error::ZeroVector) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

/// Sample indices for one epoch: fresh permutations, concatenated as needed.
fn epoch_order<R: Rng + ?Sized>(len: usize, count: usize, rng: &mut R) -> Vec<usize> {
    let mut order = Vec::with_capacity(count);
    while order.len() < count {
        let take = (count - order.len()).min(len);
        if take == len {
            let mut perm: Vec<usize> = (0..len).collect();
            perm.shuffle(rng);
            order.extend(perm);
        } else {
            order.extend(index::sample(rng, len, take));
        }
    }
    order
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: SoaeParams,
    pub history: Vec<EpochReport>,
}

/// Trains until the epoch loss settles or `max_epochs` is reached.
///
/// Training stops once the last `stop_window` epoch losses change by less
/// than `stop_rel_tol` relative to their mean. An infinite tolerance stops
/// after the first epoch. `on_epoch` sees every report and the parameters
/// right after the column projection.
pub fn train<R: Rng + ?Sized>(
    mut params: SoaeParams,
    data: &LabeledDataset,
    cfg: &SoaeConfig,
    rng: &mut R,
    mut on_epoch: impl FnMut(&EpochReport, &SoaeParams) -> Result<()>,
) -> Result<TrainOutcome> {
    let mut history: Vec<EpochReport> = Vec::new();
    for nu in 1..=cfg.max_epochs {
        let report = train_epoch(&mut params, data, cfg, nu, rng)?;
        on_epoch(&report, &params)?;
        history.push(report);
        if converged(&history, cfg) {
            break;
        }
    }
    Ok(TrainOutcome { params, history })
}

fn converged(history: &[EpochReport], cfg: &SoaeConfig) -> bool {
    if cfg.stop_rel_tol.is_infinite() {
        return true;
    }
    if history.len() < cfg.stop_window.max(2) {
        return false;
    }
    let window = &history[history.len() - cfg.stop_window.max(2)..];
    let mean = window.iter().map(|r| r.mean_loss).sum::<f64>() / window.len() as f64;
    let change = window[window.len() - 1].mean_loss - window[0].mean_loss;
    mean != 0.0 && (change / mean).abs() < cfg.stop_rel_tol
}

/// Most probable class, lowest index among ties.
pub fn classify(params: &SoaeParams, x: &[f64], cfg: &SoaeConfig) -> Result<usize> {
    let rec = forward(params, x, cfg)?;
    Ok(argmax(&rec.y))
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Fraction of misclassified samples.
pub fn error_rate(params: &SoaeParams, data: &LabeledDataset, cfg: &SoaeConfig) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut wrong = 0;
    for (x, &label) in data.samples().iter().zip(data.labels()) {
        if classify(params, x, cfg)? != label {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / data.len() as f64)
}

/// Mean objective over a dataset at a fixed `alpha`.
pub fn mean_loss(params: &SoaeParams, data: &LabeledDataset, cfg: &SoaeConfig, alpha: f64) -> Result<f64> {
    let mut total = 0.0;
    for (x, &label) in data.samples().iter().zip(data.labels()) {
        let rec = forward(params, x, cfg)?;
        total += loss(&rec, x, &one_hot(label, params.classes())?, alpha);
    }
    Ok(total / data.len().max(1) as f64)
}
