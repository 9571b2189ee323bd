//! Hoyer's original alternating projection scheme, kept for comparison.
//!
//! After the initial hyperplane and hypercircle projections, negative entries
//! are clamped to zero and fixed there for good, the lost L1 mass is spread
//! evenly over the remaining coordinates, and the result is projected back
//! onto the hypercircle of that support. The only structural difference to
//! [`crate::project_nonneg`] is the orthant clamp `max(y, 0)` in place of the
//! simplex projection `max(y - t_hat, 0)`, which discards fewer coordinates
//! per iteration.

use crate::error::Result;
use crate::geometry::{self, hypercircle_in_place, NEG_TOL};
use crate::sigma::SparseTarget;

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineTrace {
    pub iterations: usize,
    /// Nonzero count of the working vector after each iteration.
    pub support_per_iteration: Vec<usize>,
}

pub fn hoyer_project(x: &[f64], t: &SparseTarget) -> Result<(Vec<f64>, BaselineTrace)> {
    geometry::check_dimension(x, t)?;
    let (lambda1, lambda2) = (t.lambda1(), t.lambda2());
    let n = x.len();
    let shift = (lambda1 - x.iter().sum::<f64>()) / n as f64;
    let mut s: Vec<f64> = x.iter().map(|v| v + shift).collect();

    // Active coordinates are kept compact in `work`, `index` maps them back.
    let mut index: Vec<usize> = (0..n).collect();
    let mut work = s.clone();
    hypercircle_in_place(&mut work, lambda1, lambda2, None)?;
    let mut support = vec![n];

    let neg = -NEG_TOL * lambda2;
    while work.iter().any(|v| *v < neg) {
        let mut kept = 0;
        for k in 0..work.len() {
            if work[k] > 0.0 {
                work[kept] = work[k];
                index[kept] = index[k];
                kept += 1;
            }
        }
        if kept == work.len() {
            break;
        }
        work.truncate(kept);
        index.truncate(kept);
        let deficit = (lambda1 - work.iter().sum::<f64>()) / kept as f64;
        work.iter_mut().for_each(|v| *v += deficit);
        hypercircle_in_place(&mut work, lambda1, lambda2, None)?;
        support.push(kept);
    }

    s.iter_mut().for_each(|v| *v = 0.0);
    for (&i, v) in index.iter().zip(&work) {
        s[i] = v.max(0.0);
    }
    Ok((
        s,
        BaselineTrace {
            iterations: support.len(),
            support_per_iteration: support,
        },
    ))
}
