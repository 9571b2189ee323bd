//! Hoyer's sparseness measure and the norm targets it induces.
//!
//! For a nonzero `x` in `n` dimensions,
//!
//! ```text
//! sigma(x) = (sqrt(n) - |x|_1 / |x|_2) / (sqrt(n) - 1)
//! ```
//!
//! which is `1` for vectors with a single nonzero entry and `0` for vectors
//! whose entries all have the same magnitude. Fixing `|x|_2 = lambda2` turns a
//! prescribed sparseness into a prescribed L1 norm, so the feasible sets are
//! described by the triple `(n, lambda1, lambda2)` held in [`SparseTarget`].

use crate::error::{Error, Result};

/// Sparseness of `x` in `[0, 1]`.
///
/// ```
/// let s = sparseness::sigma(&[1.0, 1.0, 0.0, 0.0]).unwrap();
/// assert!((s - (2.0 - 2f64.sqrt())).abs() < 1e-12);
/// ```
pub fn sigma(x: &[f64]) -> Result<f64> {
    let n = x.len();
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    let l2 = crate::linalg::norm(x);
    if l2 == 0.0 {
        return Err(Error::ZeroVector);
    }
    let sqrt_n = (n as f64).sqrt();
    Ok((sqrt_n - l1 / l2) / (sqrt_n - 1.0))
}

/// Target L1 and L2 norms for vectors of dimension `n`.
///
/// The non-negative feasible set is `{ s >= 0 : sum(s) = lambda1, |s|_2 = lambda2 }`;
/// the unrestricted one drops the sign constraint and uses `|s|_1 = lambda1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseTarget {
    n: usize,
    lambda1: f64,
    lambda2: f64,
}

impl SparseTarget {
    /// Builds a target from explicit norms.
    ///
    /// Boundary values `lambda1 = lambda2` and `lambda1 = sqrt(n) * lambda2`
    /// are accepted; the feasible set then only contains trivial points.
    pub fn new(n: usize, lambda1: f64, lambda2: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::DimensionTooSmall(n));
        }
        let invalid = || Error::InvalidTarget { n, lambda1, lambda2 };
        if !(lambda1.is_finite() && lambda2.is_finite() && lambda1 > 0.0 && lambda2 > 0.0) {
            return Err(invalid());
        }
        let slack = 1e-12 * lambda1.max(lambda2);
        if lambda1 < lambda2 - slack || lambda1 > (n as f64).sqrt() * lambda2 + slack {
            return Err(invalid());
        }
        Ok(Self { n, lambda1, lambda2 })
    }

    /// Target whose feasible points all have sparseness `sigma_star`, with `lambda2 = 1`.
    pub fn from_sigma(n: usize, sigma_star: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::DimensionTooSmall(n));
        }
        if !(sigma_star > 0.0 && sigma_star < 1.0) {
            return Err(Error::SigmaOutOfRange(sigma_star));
        }
        let sqrt_n = (n as f64).sqrt();
        Self::new(n, sqrt_n - sigma_star * (sqrt_n - 1.0), 1.0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    /// Sparseness shared by every point of the feasible set.
    pub fn sigma(&self) -> f64 {
        let sqrt_n = (self.n as f64).sqrt();
        (sqrt_n - self.lambda1 / self.lambda2) / (sqrt_n - 1.0)
    }

    /// Common entry value `lambda1 / d` of the barycenter of the hypercircle
    /// restricted to a support of size `d`.
    pub fn barycenter_entry(&self, d: usize) -> f64 {
        self.lambda1 / d as f64
    }

    /// Squared radius `lambda2^2 - lambda1^2 / d` of the hypercircle restricted
    /// to a support of size `d`. Negative when `d` is too small to carry the norms.
    pub fn radius_sq(&self, d: usize) -> f64 {
        self.lambda2 * self.lambda2 - self.lambda1 * self.lambda1 / d as f64
    }

    /// Smallest support size whose restricted hypercircle is nonempty.
    pub fn min_support(&self) -> usize {
        let ratio = self.lambda1 / self.lambda2;
        ((ratio * ratio - 1e-9).ceil().max(1.0) as usize).min(self.n)
    }
}

/// Alias kept for callers that think in terms of the inversion of `sigma`.
pub fn target_for_sigma(n: usize, sigma_star: f64) -> Result<SparseTarget> {
    SparseTarget::from_sigma(n, sigma_star)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_extremes() {
        assert_eq!(sigma(&[1.0, 0.0, 0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(sigma(&[1.0, 1.0, 1.0, 1.0]).unwrap(), 0.0);
        let s = sigma(&[1.0, 1.0, 0.0, 0.0]).unwrap();
        assert!((s - 0.585_786_437_626_905).abs() < 1e-12);
    }

    #[test]
    fn sigma_is_scale_invariant() {
        let x = [0.3, -2.0, 0.7, 0.0, 1.1];
        let s = sigma(&x).unwrap();
        for alpha in [-3.0, 1e-3, 42.0] {
            let y: Vec<f64> = x.iter().map(|v| alpha * v).collect();
            assert!((sigma(&y).unwrap() - s).abs() < 1e-12);
        }
    }

    #[test]
    fn sigma_rejects_zero() {
        assert!(matches!(sigma(&[0.0, 0.0]), Err(Error::ZeroVector)));
    }

    #[test]
    fn target_for_sigma_examples() {
        let t = target_for_sigma(3, 0.5).unwrap();
        assert!((t.lambda1() - 1.366_025_403_784_438_6).abs() < 1e-12);
        assert_eq!(t.lambda2(), 1.0);

        let t = target_for_sigma(4, 0.999).unwrap();
        assert!((t.lambda1() - 1.001).abs() < 1e-12);

        let t = target_for_sigma(1000, 0.9).unwrap();
        let expected = 1000f64.sqrt() - 0.9 * (1000f64.sqrt() - 1.0);
        assert!((t.lambda1() - expected).abs() < 1e-12);
        assert!((t.lambda1() - 4.062_277_660_168_38).abs() < 1e-12);
        assert!((t.sigma() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn target_rejects_bad_input() {
        assert!(target_for_sigma(4, 0.0).is_err());
        assert!(target_for_sigma(4, 1.0).is_err());
        assert!(target_for_sigma(1, 0.5).is_err());
        assert!(SparseTarget::new(4, 0.5, 1.0).is_err());
        assert!(SparseTarget::new(4, 2.5, 1.0).is_err());
        assert!(SparseTarget::new(4, 2.0, 1.0).is_ok());
        assert!(SparseTarget::new(4, 1.0, 1.0).is_ok());
    }

    #[test]
    fn derived_quantities() {
        let t = SparseTarget::new(4, 1.5, 1.0).unwrap();
        assert!((t.radius_sq(4) - (1.0 - 2.25 / 4.0)).abs() < 1e-15);
        assert!(t.radius_sq(2) < 0.0);
        assert_eq!(t.min_support(), 3);
        assert_eq!(t.barycenter_entry(3), 0.5);
    }
}
