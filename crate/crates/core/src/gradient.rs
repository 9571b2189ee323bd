//! Derivatives of the sparseness projection, reconstructed from its trace.
//!
//! Each hypercircle projection of the sorted working vector contributes a
//! factor whose nonzero block, restricted to the `N` coordinates that survive
//! to the end, is
//!
//! ```text
//! A_i = delta_i E - delta_i / d_i J - alpha_i s s' + alpha_i / d_i s s' J
//! ```
//!
//! with `s` the head of the centred working vector, `alpha_i = delta_i / |r|^2`
//! and `J` the all-ones matrix. The derivative of the sorted projection is the
//! product `A_h ... A_1` padded with zeros; sorting and sign flips conjugate it
//! by the permutation and by `diag(signs)`.
//!
//! [`GradientOperator::apply`] evaluates the product with a vector in
//! `O(h N)` without forming any matrix; [`grad_full`] builds the dense matrix
//! and exists for testing and small problems.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::projection::ProjectionTrace;

#[derive(Debug, Clone, PartialEq)]
struct Factor {
    d: f64,
    delta: f64,
    alpha: f64,
    head: Vec<f64>,
    head_sum: f64,
}

impl Factor {
    /// `z <- A z`.
    fn apply(&self, z: &mut [f64]) {
        let z_sum: f64 = z.iter().sum();
        let s_dot_z: f64 = self.head.iter().zip(z.iter()).map(|(a, b)| a * b).sum();
        let mean = z_sum / self.d;
        let coef = self.alpha * (self.head_sum * z_sum / self.d - s_dot_z);
        for (zi, si) in z.iter_mut().zip(&self.head) {
            *zi = self.delta * (*zi - mean) + coef * si;
        }
    }

    /// `z <- A' z`.
    fn apply_transpose(&self, z: &mut [f64]) {
        let z_sum: f64 = z.iter().sum();
        let s_dot_z: f64 = self.head.iter().zip(z.iter()).map(|(a, b)| a * b).sum();
        let shift = self.delta * z_sum / self.d - self.alpha * self.head_sum * s_dot_z / self.d;
        let coef = self.alpha * s_dot_z;
        for (zi, si) in z.iter_mut().zip(&self.head) {
            *zi = self.delta * *zi - shift - coef * si;
        }
    }

    fn block(&self, n: usize) -> Array2<f64> {
        Array2::from_shape_fn((n, n), |(i, j)| {
            let eye = if i == j { self.delta } else { 0.0 };
            eye - self.delta / self.d - self.alpha * self.head[i] * self.head[j]
                + self.alpha / self.d * self.head[i] * self.head_sum
        })
    }
}

/// Linear map given by the derivative of a projection at a differentiable point.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientOperator {
    n: usize,
    support: usize,
    factors: Vec<Factor>,
    /// Input index of each of the first `support` sorted positions.
    positions: Vec<usize>,
    signs: Vec<f64>,
}

impl GradientOperator {
    pub fn from_trace(trace: &ProjectionTrace) -> Result<Self> {
        if trace.degenerate() {
            return Err(Error::NonDifferentiable("barycenter degeneracy"));
        }
        if trace.separator_collision {
            return Err(Error::NonDifferentiable(
                "coordinate collides with the simplex separator",
            ));
        }
        let support = trace.final_support;
        let factors = trace
            .iterations
            .iter()
            .map(|rec| Factor {
                d: rec.d as f64,
                delta: rec.delta,
                alpha: rec.alpha(),
                head_sum: rec.r_head.iter().sum(),
                head: rec.r_head.clone(),
            })
            .collect();
        Ok(Self {
            n: trace.n(),
            support,
            factors,
            positions: trace.permutation[..support].to_vec(),
            signs: trace.signs.clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of coordinates on which the derivative is nonzero.
    pub fn support(&self) -> usize {
        self.support
    }

    /// Derivative times `y`.
    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        let mut z = self.gather(y);
        for f in &self.factors {
            f.apply(&mut z);
        }
        self.scatter(&z)
    }

    /// Transposed derivative times `y`, the product needed for backpropagation.
    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        let mut z = self.gather(y);
        for f in self.factors.iter().rev() {
            f.apply_transpose(&mut z);
        }
        self.scatter(&z)
    }

    /// Dense `n x n` derivative.
    pub fn to_matrix(&self) -> Array2<f64> {
        let k = self.support;
        let mut block = Array2::eye(k);
        for f in &self.factors {
            block = f.block(k).dot(&block);
        }
        let mut full = Array2::zeros((self.n, self.n));
        for (a, &i) in self.positions.iter().enumerate() {
            for (b, &j) in self.positions.iter().enumerate() {
                full[[i, j]] = self.signs[i] * block[[a, b]] * self.signs[j];
            }
        }
        full
    }

    fn gather(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.n, "vector length must match the projection");
        self.positions
            .iter()
            .map(|&i| self.signs[i] * y[i])
            .collect()
    }

    fn scatter(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (&i, v) in self.positions.iter().zip(z) {
            out[i] = self.signs[i] * v;
        }
        out
    }
}

/// Dense derivative of the projection that produced `trace`.
pub fn grad_full(trace: &ProjectionTrace) -> Result<Array2<f64>> {
    Ok(GradientOperator::from_trace(trace)?.to_matrix())
}

/// Derivative of the projection that produced `trace`, applied to `y`.
pub fn grad_vjp(trace: &ProjectionTrace, y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != trace.n() {
        return Err(Error::DimensionMismatch {
            expected: trace.n(),
            actual: y.len(),
        });
    }
    Ok(GradientOperator::from_trace(trace)?.apply(y))
}

/// Diagonal of the derivative of the L0 projection: ones on the `kappa`
/// largest-magnitude coordinates. Fails when the `kappa`-th and
/// `(kappa + 1)`-th magnitudes tie.
pub fn grad_l0(x: &[f64], kappa: usize) -> Result<Vec<f64>> {
    let n = x.len();
    if kappa == 0 || kappa > n {
        return Err(Error::KappaOutOfRange { kappa, n });
    }
    let order = crate::projection::magnitude_order(x);
    if kappa < n && x[order[kappa - 1]].abs() == x[order[kappa]].abs() {
        return Err(Error::NonDifferentiable("tie at the L0 threshold"));
    }
    let mut mask = vec![0.0; n];
    for &i in &order[..kappa] {
        mask[i] = 1.0;
    }
    Ok(mask)
}

/// Maximum entrywise error between `jacobian` and central differences of `f`
/// at `x`, each relative to `max(1, |jacobian entry|)`.
pub fn check_gradient<F>(f: F, jacobian: &Array2<f64>, x: &[f64], step: f64) -> f64
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut worst: f64 = 0.0;
    let mut probe = x.to_vec();
    for j in 0..x.len() {
        probe[j] = x[j] + step;
        let plus = f(&probe);
        probe[j] = x[j] - step;
        let minus = f(&probe);
        probe[j] = x[j];
        for (i, (a, b)) in plus.iter().zip(&minus).enumerate() {
            let numeric = (a - b) / (2.0 * step);
            let analytic = jacobian[[i, j]];
            worst = worst.max((numeric - analytic).abs() / analytic.abs().max(1.0));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::proj_hyperplane;
    use crate::projection::{project_nonneg, project_unrestricted};
    use crate::SparseTarget;

    #[test]
    fn l0_mask_examples() {
        assert_eq!(grad_l0(&[3.0, -1.0, 2.0], 2).unwrap(), vec![1.0, 0.0, 1.0]);
        assert_eq!(grad_l0(&[3.0, -1.0, 2.0], 3).unwrap(), vec![1.0; 3]);
        assert!(matches!(
            grad_l0(&[1.0, 1.0, 0.0], 1),
            Err(Error::NonDifferentiable(_))
        ));
        assert!(grad_l0(&[1.0], 2).is_err());
    }

    #[test]
    fn check_gradient_on_linear_maps() {
        let x = [0.3, -0.7, 1.1];
        let eye = Array2::eye(3);
        assert!(check_gradient(|v| v.to_vec(), &eye, &x, 1e-6) < 1e-9);

        let t = SparseTarget::new(3, 1.0, 1.0).unwrap();
        let jac = Array2::from_shape_fn((3, 3), |(i, j)| if i == j { 1.0 } else { 0.0 } - 1.0 / 3.0);
        let err = check_gradient(|v| proj_hyperplane(v, &t).unwrap(), &jac, &x, 1e-6);
        assert!(err <= 1e-9, "{err}");
    }

    #[test]
    fn degenerate_trace_is_rejected() {
        let t = SparseTarget::from_sigma(4, 0.5).unwrap();
        let out = project_nonneg(&[1.0; 4], &t).unwrap();
        assert!(grad_full(&out.trace).is_err());
        assert!(grad_vjp(&out.trace, &[0.0; 4]).is_err());
    }

    #[test]
    fn zero_maps_to_zero_and_shift_direction_vanishes() {
        let t = SparseTarget::from_sigma(7, 0.6).unwrap();
        let x = [0.2, 1.4, -0.3, 0.9, 0.05, 0.6, 1.0];
        let out = project_nonneg(&x, &t).unwrap();
        let op = GradientOperator::from_trace(&out.trace).unwrap();
        assert!(op.apply(&[0.0; 7]).iter().all(|v| *v == 0.0));
        let image = op.apply(&[1.0; 7]);
        assert!(image.iter().all(|v| v.abs() < 1e-10), "{image:?}");
    }

    #[test]
    fn transpose_product_matches_matrix() {
        let t = SparseTarget::from_sigma(9, 0.7).unwrap();
        let x = [0.2, -1.4, -0.3, 0.9, 0.05, 0.6, -1.0, 0.33, 0.71];
        let out = project_unrestricted(&x, &t).unwrap();
        let op = GradientOperator::from_trace(&out.trace).unwrap();
        let m = op.to_matrix();
        let y = [0.5, -0.1, 0.3, 0.8, -0.6, 0.2, 0.1, -0.9, 0.4];
        let expected = m.t().dot(&ndarray::arr1(&y));
        let got = op.apply_transpose(&y);
        for (a, b) in got.iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
