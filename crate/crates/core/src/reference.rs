//! Straightforward alternating projections in the full `n`-dimensional space.
//!
//! No sorting, no prefix bookkeeping: project onto `H`, then `L`, then repeat
//! "project onto the simplex `C`, then onto `L_I` for the surviving support"
//! until the working vector is non-negative. This is the slow path that
//! [`crate::project_nonneg`] must agree with.

use crate::error::{Error, Result};
use crate::geometry::{self, project_simplex, NEG_TOL};
use crate::sigma::SparseTarget;

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceResult {
    pub point: Vec<f64>,
    /// Support size after each hypercircle projection.
    pub supports: Vec<usize>,
    pub degenerate: bool,
}

/// Non-negative projection by plain alternating projections.
pub fn project_alternating(x: &[f64], t: &SparseTarget) -> Result<ReferenceResult> {
    let n = t.n();
    let mut s = geometry::proj_hyperplane(x, t)?;
    let mut support: Vec<usize> = (0..n).collect();
    let mut degenerate = restricted_circle(&mut s, &support, t)?;
    let mut supports = vec![n];
    let neg = -NEG_TOL * t.lambda2();
    while s.iter().any(|v| *v < neg) {
        let r = project_simplex(&s, t.lambda1());
        support = (0..n).filter(|&i| r[i] > 0.0).collect();
        if support.len() >= supports[supports.len() - 1] {
            break;
        }
        s = r;
        degenerate |= restricted_circle(&mut s, &support, t)?;
        supports.push(support.len());
    }
    s.iter_mut().for_each(|v| *v = v.max(0.0));
    Ok(ReferenceResult {
        point: s,
        supports,
        degenerate,
    })
}

/// Projects `s` (zero outside `support`, summing to `lambda1`) onto `L_I`.
fn restricted_circle(s: &mut [f64], support: &[usize], t: &SparseTarget) -> Result<bool> {
    let d = support.len();
    if d == 0 {
        return Err(Error::InvalidIndexSet("empty support".into()));
    }
    let mut values: Vec<f64> = support.iter().map(|&i| s[i]).collect();
    let out = geometry::proj_hypercircle(&values, t)?;
    values.copy_from_slice(&out.point);
    for (&i, v) in support.iter().zip(values) {
        s[i] = v;
    }
    Ok(out.degenerate)
}
