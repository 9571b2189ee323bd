//! Independent oracles shared by the integration tests. Nothing in here calls
//! the projection algorithms under test.
#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand::Rng;
use sparseness::soae::{self, SoaeConfig, SoaeParams, Transfer};

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

pub fn uniform_vec<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// Closest point to `x` on `{ s : supp(s) = I, sum(s) = lambda1, |s| = lambda2 }`
/// for every nonempty `I`, keeping non-negative candidates. Returns the best
/// candidate and its distance.
pub fn brute_force_nonneg(x: &[f64], lambda1: f64, lambda2: f64) -> (Vec<f64>, f64) {
    let n = x.len();
    let mut best = (Vec::new(), f64::INFINITY);
    for mask in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let d = idx.len() as f64;
        let rho = lambda2 * lambda2 - lambda1 * lambda1 / d;
        if rho < -1e-12 {
            continue;
        }
        let rho = rho.max(0.0);
        let m = lambda1 / d;
        let shift = (lambda1 - idx.iter().map(|&i| x[i]).sum::<f64>()) / d;
        let r: Vec<f64> = idx.iter().map(|&i| x[i] + shift - m).collect();
        let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rn < 1e-12 && rho > 0.0 {
            continue;
        }
        let mut cand = vec![0.0; n];
        for (k, &i) in idx.iter().enumerate() {
            cand[i] = if rho == 0.0 { m } else { m + rho.sqrt() * r[k] / rn };
        }
        if cand.iter().any(|v| *v < -1e-12) {
            continue;
        }
        let dd = dist(x, &cand);
        if dd < best.1 {
            best = (cand, dd);
        }
    }
    best
}

/// Smallest distance from `x` to any vector with at most `kappa` nonzeros,
/// by enumerating every support of size `kappa`.
pub fn brute_force_l0(x: &[f64], kappa: usize) -> f64 {
    let n = x.len();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != kappa {
            continue;
        }
        let dropped: f64 = (0..n)
            .filter(|i| mask >> i & 1 == 0)
            .map(|i| x[i] * x[i])
            .sum();
        best = best.min(dropped.sqrt());
    }
    best
}

/// Euclidean projection onto `{ s >= 0 : sum(s) = lambda1 }` by sorting.
fn simplex(y: &[f64], lambda1: f64) -> (Vec<f64>, f64) {
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut t = 0.0;
    for (i, v) in sorted.iter().enumerate() {
        acc += v;
        let cand = (acc - lambda1) / (i + 1) as f64;
        if i + 1 == sorted.len() || cand >= sorted[i + 1] {
            t = cand;
            break;
        }
    }
    (y.iter().map(|v| (v - t).max(0.0)).collect(), t)
}

/// Projection of `y` (sum `lambda1` over `support`) onto the circle on that
/// support, with its Jacobian as an `n x n` matrix.
fn circle_step(y: &mut [f64], support: &[usize], lambda1: f64, lambda2: f64) -> Array2<f64> {
    let n = y.len();
    let d = support.len() as f64;
    let m = lambda1 / d;
    let rho = lambda2 * lambda2 - lambda1 * lambda1 / d;
    let r: Vec<f64> = support.iter().map(|&i| y[i] - m).collect();
    let rn2: f64 = r.iter().map(|v| v * v).sum();
    let rn = rn2.sqrt();
    let scale = rho.sqrt() / rn;
    let mut jac = Array2::zeros((n, n));
    for (a, &i) in support.iter().enumerate() {
        for (b, &j) in support.iter().enumerate() {
            let eye = if a == b { 1.0 } else { 0.0 };
            jac[[i, j]] = scale * (eye - 1.0 / d - r[a] * r[b] / rn2);
        }
    }
    for (a, &i) in support.iter().enumerate() {
        y[i] = m + scale * r[a];
    }
    jac
}

/// Derivative of the non-negative projection at `x` (or of the unrestricted
/// projection when `signed`), as the product of the Jacobians of every
/// full-dimensional alternating step. `None` near non-smooth points.
pub fn dense_jacobian(x: &[f64], lambda1: f64, lambda2: f64, signed: bool) -> Option<(Vec<f64>, Array2<f64>)> {
    let n = x.len();
    let signs: Vec<f64> = x
        .iter()
        .map(|v| if signed && *v < 0.0 { -1.0 } else { 1.0 })
        .collect();
    let xs: Vec<f64> = x.iter().zip(&signs).map(|(v, s)| v * s).collect();
    let nf = n as f64;
    let shift = (lambda1 - xs.iter().sum::<f64>()) / nf;
    let mut y: Vec<f64> = xs.iter().map(|v| v + shift).collect();
    let mut jac = Array2::from_shape_fn((n, n), |(i, j)| if i == j { 1.0 } else { 0.0 } - 1.0 / nf);
    let all: Vec<usize> = (0..n).collect();
    jac = circle_step(&mut y, &all, lambda1, lambda2).dot(&jac);
    while y.iter().any(|v| *v < -1e-12 * lambda2) {
        let (p, t) = simplex(&y, lambda1);
        if y.iter().any(|v| (v - t).abs() < 1e-7) {
            return None;
        }
        let support: Vec<usize> = (0..n).filter(|&i| p[i] > 0.0).collect();
        let d = support.len() as f64;
        let mut sj = Array2::zeros((n, n));
        for &i in &support {
            for &j in &support {
                sj[[i, j]] = if i == j { 1.0 } else { 0.0 } - 1.0 / d;
            }
        }
        y = p;
        jac = sj.dot(&jac);
        jac = circle_step(&mut y, &support, lambda1, lambda2).dot(&jac);
    }
    let point = y.iter().zip(&signs).map(|(v, s)| v.max(0.0) * s).collect();
    let jac = Array2::from_shape_fn((n, n), |(i, j)| signs[i] * jac[[i, j]] * signs[j]);
    Some((point, jac))
}

pub fn random_network<R: Rng>(rng: &mut R, d: usize, n: usize, c: usize) -> SoaeParams {
    SoaeParams {
        w: Array2::from_shape_simple_fn((d, n), || rng.random_range(-1.0..1.0)),
        w_out: Array2::from_shape_simple_fn((n, c), || rng.random_range(-1.0..1.0)),
        theta: Array1::from_shape_simple_fn(c, || rng.random_range(-1.0..1.0)),
    }
}

/// Largest relative deviation, `|fd - a| / max(1, |a|)`, between the analytic
/// parameter gradient and central differences of the loss over all entries.
/// `None` when the drawn point is not differentiable.
pub fn soae_gradient_error<R: Rng>(rng: &mut R, transfer: Transfer, alpha: f64) -> Option<f64> {
    let (d, n, c) = (6, 8, 3);
    let cfg = SoaeConfig {
        n_hidden: n,
        transfer,
        ..SoaeConfig::default()
    };
    let params = random_network(rng, d, n, c);
    let x = uniform_vec(rng, d, 0.0, 1.0);
    let label = rng.random_range(0..c);
    let t: Vec<f64> = (0..c).map(|k| if k == label { 1.0 } else { 0.0 }).collect();
    let rec = soae::forward(&params, &x, &cfg).ok()?;
    let grad = soae::grad_params(&params, &rec, &x, &t, alpha, &cfg).ok()?;
    let f = |p: &SoaeParams| {
        let rec = soae::forward(p, &x, &cfg).unwrap();
        soae::loss(&rec, &x, &t, alpha)
    };
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut check = |numeric: f64, analytic: f64| {
        worst = worst.max((numeric - analytic).abs() / analytic.abs().max(1.0));
    };
    let dw = grad.w();
    for i in 0..d {
        for j in 0..n {
            let mut p = params.clone();
            p.w[[i, j]] += h;
            let plus = f(&p);
            p.w[[i, j]] -= 2.0 * h;
            check((plus - f(&p)) / (2.0 * h), dw[[i, j]]);
        }
    }
    for i in 0..n {
        for j in 0..c {
            let mut p = params.clone();
            p.w_out[[i, j]] += h;
            let plus = f(&p);
            p.w_out[[i, j]] -= 2.0 * h;
            check((plus - f(&p)) / (2.0 * h), grad.w_out[[i, j]]);
        }
    }
    for k in 0..c {
        let mut p = params.clone();
        p.theta[k] += h;
        let plus = f(&p);
        p.theta[k] -= 2.0 * h;
        check((plus - f(&p)) / (2.0 * h), grad.theta[k]);
    }
    Some(worst)
}
