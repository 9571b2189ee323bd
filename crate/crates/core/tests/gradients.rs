mod common;

use common::{dense_jacobian, soae_gradient_error, uniform_vec};
use ndarray::arr1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparseness::gradient::{check_gradient, grad_full, grad_vjp, GradientOperator};
use sparseness::soae::Transfer;
use sparseness::{project_nonneg, project_unrestricted, SparseTarget};

fn differentiable_point(rng: &mut ChaCha8Rng, n: usize, t: &SparseTarget, signed: bool) -> Vec<f64> {
    loop {
        let x = uniform_vec(rng, n, if signed { -1.0 } else { 0.0 }, 1.0);
        let out = project_unrestricted(&x, t).unwrap();
        if out.trace.is_differentiable() {
            return x;
        }
    }
}

#[test]
fn matrix_and_product_paths_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for n in [5, 20] {
        let mut multi_iteration = 0;
        for k in 0..100 {
            let signed = k % 2 == 0;
            let t = SparseTarget::from_sigma(n, rng.random_range(0.2..0.9)).unwrap();
            let x = differentiable_point(&mut rng, n, &t, signed);
            let out = project_unrestricted(&x, &t).unwrap();
            if out.iterations() > 1 {
                multi_iteration += 1;
            }
            let jac = grad_full(&out.trace).unwrap();
            let y = uniform_vec(&mut rng, n, -1.0, 1.0);
            let dense = jac.dot(&arr1(&y));
            let product = grad_vjp(&out.trace, &y).unwrap();
            for (a, b) in dense.iter().zip(&product) {
                assert!((a - b).abs() <= 1e-10);
            }
            let err = check_gradient(|v| project_unrestricted(v, &t).unwrap().point, &jac, &x, 1e-6);
            assert!(err <= 1e-5, "n={n} err={err}");
        }
        assert!(multi_iteration > 10, "too few points exercise the loop");
    }
}

#[test]
fn factored_gradient_matches_dense_chain_rule() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut compared = 0;
    while compared < 300 {
        let n = rng.random_range(3..30);
        let t = SparseTarget::from_sigma(n, rng.random_range(0.3..0.9)).unwrap();
        let signed = rng.random_bool(0.5);
        let x = uniform_vec(&mut rng, n, if signed { -1.0 } else { 0.0 }, 1.0);
        let out = project_unrestricted(&x, &t).unwrap();
        let Some((point, dense)) = dense_jacobian(&x, t.lambda1(), t.lambda2(), true) else {
            continue;
        };
        if !out.trace.is_differentiable() {
            continue;
        }
        for (a, b) in point.iter().zip(&out.point) {
            assert!((a - b).abs() < 1e-10);
        }
        let jac = grad_full(&out.trace).unwrap();
        let diff = (&jac - &dense).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(diff <= 1e-10, "n={n} diff={diff}");
        compared += 1;
    }
}

#[test]
fn derivative_vanishes_outside_support_block() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let t = SparseTarget::from_sigma(12, 0.8).unwrap();
    for _ in 0..100 {
        let x = differentiable_point(&mut rng, 12, &t, true);
        let out = project_unrestricted(&x, &t).unwrap();
        let jac = grad_full(&out.trace).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                if out.point[i] == 0.0 || out.point[j] == 0.0 {
                    assert_eq!(jac[[i, j]], 0.0);
                }
            }
        }
        let op = GradientOperator::from_trace(&out.trace).unwrap();
        assert_eq!(op.support(), out.point.iter().filter(|v| **v != 0.0).count());
    }
}

#[test]
fn shift_direction_is_in_the_kernel() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let t = SparseTarget::from_sigma(50, 0.7).unwrap();
    for _ in 0..50 {
        let x = differentiable_point(&mut rng, 50, &t, false);
        let out = project_nonneg(&x, &t).unwrap();
        let image = grad_vjp(&out.trace, &[1.0; 50]).unwrap();
        assert!(image.iter().all(|v| v.abs() <= 1e-10));
        assert!(grad_vjp(&out.trace, &[0.0; 50]).unwrap().iter().all(|v| *v == 0.0));
    }
}

#[test]
fn support_is_locally_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let t = SparseTarget::from_sigma(30, 0.85).unwrap();
    for _ in 0..20 {
        let x = differentiable_point(&mut rng, 30, &t, true);
        let base = project_unrestricted(&x, &t).unwrap();
        let pattern = |p: &[f64]| -> Vec<i8> { p.iter().map(|v| v.partial_cmp(&0.0).unwrap() as i8).collect() };
        let reference = pattern(&base.point);
        for _ in 0..100 {
            let dir = uniform_vec(&mut rng, 30, -1.0, 1.0);
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            let y: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + 1e-8 * b / norm).collect();
            let out = project_unrestricted(&y, &t).unwrap();
            assert_eq!(pattern(&out.point), reference);
            assert_eq!(out.trace.final_support, base.trace.final_support);
        }
    }
}

#[test]
fn perturbation_escapes_non_smooth_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let eps = 1e-6;
    let escapes = |x: &[f64], t: &SparseTarget, rng: &mut ChaCha8Rng| {
        (0..10).any(|_| {
            let dir = uniform_vec(rng, x.len(), -1.0, 1.0);
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            let y: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + eps * b / norm).collect();
            project_nonneg(&y, t).unwrap().trace.is_differentiable()
        })
    };

    let t = SparseTarget::from_sigma(4, 0.5).unwrap();
    let equal = [0.5; 4];
    let out = project_nonneg(&equal, &t).unwrap();
    assert!(!out.unique && !out.trace.is_differentiable());
    assert!(escapes(&equal, &t, &mut rng));

    // A point of L whose third entry equals the separator (a + b - lambda1) / 2.
    let c = 1.0 / 6.0;
    let y = [2.0, 1.2, c, -0.5];
    let lambda1: f64 = y.iter().sum();
    let lambda2 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let t = SparseTarget::new(4, lambda1, lambda2).unwrap();
    let out = project_nonneg(&y, &t).unwrap();
    assert!(out.trace.separator_collision);
    assert!(grad_full(&out.trace).is_err());
    assert!(escapes(&y, &t, &mut rng));
}

#[test]
fn soae_parameter_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    for transfer in [Transfer::Sigma(0.5), Transfer::L0(3), Transfer::Tanh] {
        for alpha in [0.0, 0.5, 1.0] {
            let mut done = 0;
            while done < 5 {
                let Some(err) = soae_gradient_error(&mut rng, transfer, alpha) else {
                    continue;
                };
                assert!(err <= 1e-5, "{transfer:?} alpha={alpha} err={err}");
                done += 1;
            }
        }
    }
}
