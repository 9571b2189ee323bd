//! Exact Euclidean projections onto the sparseness-constrained sets.
//!
//! [`project_nonneg`] projects onto `D = { s >= 0 : sum(s) = lambda1, |s|_2 = lambda2 }`
//! by sorting the input once, projecting onto the hyperplane and hypercircle,
//! and then alternating simplex and restricted-hypercircle projections on a
//! shrinking sorted prefix until no entry is negative. Every iteration discards
//! at least one coordinate, so at most `n` iterations run.
//!
//! [`project_unrestricted`] reuses it on `|x|` and restores the input signs,
//! which is exact because the unrestricted set is invariant under sign flips.

use crate::error::{Error, Result};
use crate::geometry::{self, hypercircle_in_place, simplex_separator, NEG_TOL};
use crate::linalg::{argsort_desc, dot};
use crate::sigma::SparseTarget;

/// A coordinate within `COLLISION_TOL * lambda2` of the simplex separator marks
/// the trace as non-differentiable.
pub const COLLISION_TOL: f64 = 1e-10;

/// Bookkeeping from one hypercircle projection.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// Working dimensionality `d_i`.
    pub d: usize,
    /// Scaling factor `sqrt(rho / phi)`; zero for the degenerate representative.
    pub delta: f64,
    /// First `N` entries of the centred working vector `y - m_I`, where `N` is
    /// the final support size.
    pub r_head: Vec<f64>,
    /// Squared norm of the full centred working vector (`phi`).
    pub r_norm_sq: f64,
    pub degenerate: bool,
}

impl IterationRecord {
    /// `delta / |r|^2`, the weight of the rank-one term in this iteration's Jacobian.
    pub fn alpha(&self) -> f64 {
        if self.r_norm_sq > 0.0 {
            self.delta / self.r_norm_sq
        } else {
            0.0
        }
    }
}

/// Everything needed to differentiate a projection after the fact.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionTrace {
    /// `permutation[k]` is the input index that landed at sorted position `k`.
    pub permutation: Vec<usize>,
    /// `+1` / `-1` per input coordinate (all `+1` for the non-negative variant).
    pub signs: Vec<f64>,
    pub iterations: Vec<IterationRecord>,
    /// Number of nonzero entries in the result.
    pub final_support: usize,
    /// Some simplex projection had a coordinate on top of the separator.
    pub separator_collision: bool,
}

impl ProjectionTrace {
    pub fn n(&self) -> usize {
        self.permutation.len()
    }

    pub fn degenerate(&self) -> bool {
        self.iterations.iter().any(|r| r.degenerate)
    }

    /// Whether the projection is (detectably) differentiable at the input.
    pub fn is_differentiable(&self) -> bool {
        !self.degenerate() && !self.separator_collision
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub point: Vec<f64>,
    pub trace: ProjectionTrace,
    /// False when a barycenter degeneracy forced an arbitrary representative.
    pub unique: bool,
}

impl ProjectionResult {
    pub fn iterations(&self) -> usize {
        self.trace.iterations.len()
    }
}

/// Projection onto the non-negative feasible set `D`.
///
/// ```
/// use sparseness::{project_nonneg, sigma, SparseTarget};
/// let t = SparseTarget::from_sigma(5, 0.8).unwrap();
/// let p = project_nonneg(&[0.9, 0.1, 0.4, 0.05, 0.3], &t).unwrap();
/// assert!((sigma(&p.point).unwrap() - 0.8).abs() < 1e-9);
/// assert!(p.point.iter().all(|v| *v >= 0.0));
/// ```
pub fn project_nonneg(x: &[f64], t: &SparseTarget) -> Result<ProjectionResult> {
    let signs = vec![1.0; x.len()];
    run(x, t, signs)
}

/// Projection onto the unrestricted set `{ s : |s|_1 = lambda1, |s|_2 = lambda2 }`.
///
/// Signs of the input are recorded (zero counts as positive), the non-negative
/// projection of `|x|` is computed, and the signs are restored.
pub fn project_unrestricted(x: &[f64], t: &SparseTarget) -> Result<ProjectionResult> {
    let signs: Vec<f64> = x
        .iter()
        .map(|v| if *v >= 0.0 { 1.0 } else { -1.0 })
        .collect();
    let abs: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let mut out = run(&abs, t, signs)?;
    for (p, s) in out.point.iter_mut().zip(&out.trace.signs) {
        *p *= s;
    }
    Ok(out)
}

/// Best approximation to `x` among all vectors with sparseness `t.sigma()`,
/// regardless of scale: the unrestricted projection `p` rescaled by
/// `<x, p> / |p|^2`.
pub fn project_scale_free(x: &[f64], t: &SparseTarget) -> Result<Vec<f64>> {
    if x.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroVector);
    }
    let p = project_unrestricted(x, t)?.point;
    let alpha = dot(x, &p) / dot(&p, &p);
    Ok(p.into_iter().map(|v| alpha * v).collect())
}

/// Keeps the `kappa` entries of largest magnitude and zeroes the rest.
/// Among equal magnitudes the lower index survives.
pub fn project_l0(x: &[f64], kappa: usize) -> Result<Vec<f64>> {
    let n = x.len();
    if kappa == 0 || kappa > n {
        return Err(Error::KappaOutOfRange { kappa, n });
    }
    let order = magnitude_order(x);
    let mut out = vec![0.0; n];
    for &i in &order[..kappa] {
        out[i] = x[i];
    }
    Ok(out)
}

/// Indices ordered by descending `|x_i|`, lower index first among ties.
pub(crate) fn magnitude_order(x: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()));
    idx
}

/// Non-negative projection that only reports the working dimensionality of
/// each iteration. Used where trace bookkeeping would distort timings.
pub fn project_nonneg_counting(x: &[f64], t: &SparseTarget) -> Result<(Vec<f64>, Vec<usize>)> {
    geometry::check_dimension(x, t)?;
    let mut supports = Vec::new();
    let (sorted, order) = sorted_copy(x);
    let (y, d) = iterate(sorted, t, |rec| supports.push(rec.d), false)?;
    Ok((scatter(&y, d, &order), supports))
}

struct StepInfo<'a> {
    d: usize,
    step: geometry::CircleStep,
    residual: &'a [f64],
}

fn sorted_copy(x: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let order = argsort_desc(x);
    let sorted = order.iter().map(|&i| x[i]).collect();
    (sorted, order)
}

fn scatter(y: &[f64], d: usize, order: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; order.len()];
    for (k, &i) in order[..d].iter().enumerate() {
        out[i] = y[k];
    }
    out
}

/// Core loop on a sorted working vector. Returns the working vector and the
/// final support size; `collision` is set when the separator hit a coordinate.
fn iterate(
    mut y: Vec<f64>,
    t: &SparseTarget,
    mut on_step: impl FnMut(&StepInfo),
    keep_residuals: bool,
) -> Result<(Vec<f64>, usize)> {
    iterate_inner(&mut y, t, &mut on_step, keep_residuals, &mut false).map(|d| (y, d))
}

fn iterate_inner(
    y: &mut [f64],
    t: &SparseTarget,
    on_step: &mut impl FnMut(&StepInfo),
    keep_residuals: bool,
    collision: &mut bool,
) -> Result<usize> {
    let (lambda1, lambda2) = (t.lambda1(), t.lambda2());
    let n = y.len();
    let shift = (lambda1 - y.iter().sum::<f64>()) / n as f64;
    y.iter_mut().for_each(|v| *v += shift);

    let mut residual = Vec::new();
    let mut d = n;
    let res = keep_residuals.then_some(&mut residual);
    let step = hypercircle_in_place(&mut y[..d], lambda1, lambda2, res)?;
    on_step(&StepInfo {
        d,
        step,
        residual: &residual,
    });

    let neg = -NEG_TOL * lambda2;
    while y[..d].iter().any(|v| *v < neg) {
        let (t_hat, next) = simplex_separator(&y[..d], lambda1);
        let near = COLLISION_TOL * lambda2;
        if y[..d].iter().any(|v| (v - t_hat).abs() <= near) {
            *collision = true;
        }
        if next >= d {
            break;
        }
        y[..next].iter_mut().for_each(|v| *v -= t_hat);
        y[next..d].iter_mut().for_each(|v| *v = 0.0);
        d = next;
        let res = keep_residuals.then_some(&mut residual);
        let step = hypercircle_in_place(&mut y[..d], lambda1, lambda2, res)?;
        on_step(&StepInfo {
            d,
            step,
            residual: &residual,
        });
    }
    y[..d].iter_mut().for_each(|v| *v = v.max(0.0));
    Ok(d)
}

fn run(x: &[f64], t: &SparseTarget, signs: Vec<f64>) -> Result<ProjectionResult> {
    geometry::check_dimension(x, t)?;
    let (mut y, order) = sorted_copy(x);
    let mut iterations: Vec<IterationRecord> = Vec::new();
    let mut collision = false;
    let d = iterate_inner(
        &mut y,
        t,
        &mut |info: &StepInfo| {
            iterations.push(IterationRecord {
                d: info.d,
                delta: info.step.delta,
                r_head: info.residual.to_vec(),
                r_norm_sq: info.step.phi,
                degenerate: info.step.degenerate,
            });
        },
        true,
        &mut collision,
    )?;
    for rec in &mut iterations {
        rec.r_head.truncate(d);
    }
    let point = scatter(&y, d, &order);
    let unique = !iterations.iter().any(|r| r.degenerate);
    Ok(ProjectionResult {
        point,
        trace: ProjectionTrace {
            permutation: order,
            signs,
            iterations,
            final_support: d,
            separator_collision: collision,
        },
        unique,
    })
}
