//! Projections onto the geometric pieces of the feasible set.
//!
//! With `e` the all-ones vector the non-negative feasible set factors as
//! `D = R^n_{>=0} ∩ H ∩ K` where `H = { a : e'a = lambda1 }` is the target
//! hyperplane and `K` the sphere of radius `lambda2`. Their intersection
//! `L = H ∩ K` is a hypercircle centred at `m = (lambda1 / n) e` with squared
//! radius `rho = lambda2^2 - lambda1^2 / n`. `C = R^n_{>=0} ∩ H` is a scaled
//! canonical simplex whose faces `C_I` fix the coordinates outside `I` at zero.

use crate::error::{Error, Result};
use crate::sigma::SparseTarget;

/// An entry of the working vector counts as negative below `-NEG_TOL * lambda2`.
pub const NEG_TOL: f64 = 1e-12;

/// `|y - m_I|^2` at or below `DEGENERATE_TOL * lambda2^2` means `y` sits on the
/// barycenter and the hypercircle projection is not unique.
pub const DEGENERATE_TOL: f64 = 1e-24;

/// Slack allowed when the squared radius comes out slightly negative from rounding.
const RHO_SLACK: f64 = 1e-12;

/// Euclidean projection onto the target hyperplane `H`.
///
/// ```
/// use sparseness::{geometry::proj_hyperplane, SparseTarget};
/// let t = SparseTarget::new(2, 1.0, 1.0).unwrap();
/// assert_eq!(proj_hyperplane(&[0.0, 0.0], &t).unwrap(), vec![0.5, 0.5]);
/// ```
pub fn proj_hyperplane(x: &[f64], t: &SparseTarget) -> Result<Vec<f64>> {
    check_len(x, t.n())?;
    let shift = (t.lambda1() - x.iter().sum::<f64>()) / x.len() as f64;
    Ok(x.iter().map(|v| v + shift).collect())
}

/// Outcome of projecting onto the hypercircle of a support.
#[derive(Debug, Clone, PartialEq)]
pub struct HypercircleProjection {
    pub point: Vec<f64>,
    /// Scaling factor `sqrt(rho / phi)` applied to the centred input.
    pub delta: f64,
    /// The input was the barycenter; `point` is one of infinitely many projections.
    pub degenerate: bool,
}

/// Projects the support entries `y` onto the hypercircle `L_I`, where `I` is
/// the support and `d = y.len()`. The entries of `y` must sum to `lambda1`.
///
/// When `y` is the barycenter every point of `L_I` is a projection; the sorted
/// representative with `d - 1` equal large entries followed by one small entry
/// is returned and `degenerate` is set.
pub fn proj_hypercircle(y: &[f64], t: &SparseTarget) -> Result<HypercircleProjection> {
    if y.is_empty() || y.len() > t.n() {
        return Err(Error::InvalidIndexSet(format!(
            "support size {} outside 1..={}",
            y.len(),
            t.n()
        )));
    }
    let mut point = y.to_vec();
    let step = hypercircle_in_place(&mut point, t.lambda1(), t.lambda2(), None)?;
    Ok(HypercircleProjection {
        point,
        delta: step.delta,
        degenerate: step.degenerate,
    })
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct CircleStep {
    pub delta: f64,
    pub phi: f64,
    pub degenerate: bool,
}

/// In-place hypercircle projection of a prefix. When `residual` is given it
/// receives `y - m_I` as it was before scaling.
pub(crate) fn hypercircle_in_place(
    y: &mut [f64],
    lambda1: f64,
    lambda2: f64,
    residual: Option<&mut Vec<f64>>,
) -> Result<CircleStep> {
    let d = y.len();
    let df = d as f64;
    let mut rho = lambda2 * lambda2 - lambda1 * lambda1 / df;
    if rho < -RHO_SLACK * lambda2 * lambda2 {
        return Err(Error::InfeasibleSupport { support: d, rho });
    }
    rho = rho.max(0.0);
    let center = lambda1 / df;
    let phi: f64 = y.iter().map(|v| (v - center) * (v - center)).sum();
    if let Some(r) = residual {
        r.clear();
        r.extend(y.iter().map(|v| v - center));
    }

    if d == 1 {
        y[0] = lambda1;
        return Ok(CircleStep {
            delta: 0.0,
            phi,
            degenerate: false,
        });
    }
    if phi <= DEGENERATE_TOL * lambda2 * lambda2 {
        let high = center + rho.sqrt() / (df * (df - 1.0)).sqrt();
        let low = center - (rho * (df - 1.0)).sqrt() / df.sqrt();
        y[..d - 1].iter_mut().for_each(|v| *v = high);
        y[d - 1] = low;
        return Ok(CircleStep {
            delta: 0.0,
            phi,
            degenerate: true,
        });
    }
    let delta = (rho / phi).sqrt();
    y.iter_mut().for_each(|v| *v = center + delta * (*v - center));
    Ok(CircleStep {
        delta,
        phi,
        degenerate: false,
    })
}

/// Separator and support size of the projection onto the scaled simplex.
///
/// `y` must be sorted in descending order. The projection onto `C` is then
/// `max(y - t_hat, 0)` and has exactly `d` nonzero entries.
///
/// ```
/// use sparseness::geometry::simplex_separator;
/// let (t_hat, d) = simplex_separator(&[2.0, 0.0, 0.0], 1.0);
/// assert_eq!((t_hat, d), (1.0, 1));
/// ```
pub fn simplex_separator(y: &[f64], lambda1: f64) -> (f64, usize) {
    let n = y.len();
    let mut partial = 0.0;
    for i in 0..n.saturating_sub(1) {
        partial += y[i];
        let t = (partial - lambda1) / (i + 1) as f64;
        if t >= y[i + 1] {
            return (t, i + 1);
        }
    }
    if n > 0 {
        partial += y[n - 1];
    }
    ((partial - lambda1) / n as f64, n)
}

/// Projection onto the scaled simplex `{ a >= 0 : sum(a) = lambda1 }` for an
/// arbitrary (unsorted) input.
pub fn project_simplex(x: &[f64], lambda1: f64) -> Vec<f64> {
    let order = crate::linalg::argsort_desc(x);
    let sorted: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let (t_hat, _) = simplex_separator(&sorted, lambda1);
    x.iter().map(|v| (v - t_hat).max(0.0)).collect()
}

/// The iterative construction of the projection of a simplex point onto one of
/// its faces.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceProjection {
    /// Projection of `q` onto the face `C_I`.
    pub point: Vec<f64>,
    /// `s^(0) = q, s^(1), ..., s^(h)`; `s^(h)` equals `point`.
    pub steps: Vec<Vec<f64>>,
    /// Coordinates outside `I` in the order they were zeroed (ascending entry value).
    pub zeroed: Vec<usize>,
}

/// Projects `q` from the simplex `{ a >= 0 : sum(a) = lambda1 }` onto the face
/// whose support is `support`.
///
/// Coordinates outside the support are zeroed one at a time, smallest first,
/// and the removed mass is spread evenly over the coordinates not yet zeroed.
pub fn face_projection_sequence(
    q: &[f64],
    support: &[usize],
    lambda1: f64,
) -> Result<FaceProjection> {
    let n = q.len();
    if support.is_empty() {
        return Err(Error::InvalidIndexSet("support is empty".into()));
    }
    let mut in_support = vec![false; n];
    for &i in support {
        if i >= n || in_support[i] {
            return Err(Error::InvalidIndexSet(format!(
                "index {i} is out of range or repeated"
            )));
        }
        in_support[i] = true;
    }
    let tol = 1e-9 * lambda1.max(1.0);
    if let Some(v) = q.iter().find(|v| **v < -tol) {
        return Err(Error::NotInSimplex(format!("negative entry {v}")));
    }
    let sum: f64 = q.iter().sum();
    if (sum - lambda1).abs() > tol {
        return Err(Error::NotInSimplex(format!(
            "entries sum to {sum}, expected {lambda1}"
        )));
    }

    let mut zeroed: Vec<usize> = (0..n).filter(|&i| !in_support[i]).collect();
    zeroed.sort_by(|&a, &b| q[a].total_cmp(&q[b]));

    let mut alive = vec![true; n];
    let mut current = q.to_vec();
    let mut steps = vec![current.clone()];
    for (k, &j) in zeroed.iter().enumerate() {
        let mass = current[j];
        current[j] = 0.0;
        alive[j] = false;
        let share = mass / (n - k - 1) as f64;
        for (v, _) in current.iter_mut().zip(&alive).filter(|(_, a)| **a) {
            *v += share;
        }
        steps.push(current.clone());
    }
    Ok(FaceProjection {
        point: current,
        steps,
        zeroed,
    })
}

fn check_len(x: &[f64], n: usize) -> Result<()> {
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: x.len(),
        });
    }
    Ok(())
}

pub(crate) fn check_dimension(x: &[f64], t: &SparseTarget) -> Result<()> {
    check_len(x, t.n())
}
