use nalgebra::DVector;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ridge::spd_solve;
use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};

/// Largest training set used before subsampling.
pub const DEFAULT_KRR_CAP: usize = 40_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrrConfig {
    pub degree: usize,
    pub lambda: f64,
    pub cap: usize,
    /// Drives the subsample when `n > cap`.
    pub seed: u64,
}

impl KrrConfig {
    pub fn new(degree: usize, lambda: f64) -> Self {
        Self {
            degree,
            lambda,
            cap: DEFAULT_KRR_CAP,
            seed: 0,
        }
    }
}

/// `(x·z + 1)^q`
pub fn poly_kernel(x: &[f64], z: &[f64], q: usize) -> f64 {
    (dot(x, z) + 1.0).powi(q as i32)
}

/// Gram matrix of the rows of `x`.
pub fn poly_kernel_matrix(x: &Matrix, q: usize) -> Matrix {
    let n = x.rows();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = poly_kernel(x.row(i), x.row(j), q);
            k.set(i, j, v);
            k.set(j, i, v);
        }
    }
    k
}

/// Kernel ridge regression with the inhomogeneous polynomial kernel: solves
/// `(K + λ'I) α = y` on (a seeded subsample of at most `cap`) training rows
/// and returns `k(x_test, ·)ᵀ α` for each test row.
pub fn krr_poly(x_train: &Matrix, y: &[f64], x_test: &Matrix, cfg: &KrrConfig) -> Result<Vec<f64>> {
    Error::check_dim(x_train.rows(), y.len())?;
    Error::check_dim(x_train.cols(), x_test.cols())?;
    if !(cfg.lambda > 0.0 && cfg.lambda.is_finite()) {
        return Err(Error::invalid(format!(
            "ridge parameter must be > 0, got {}",
            cfg.lambda
        )));
    }
    if cfg.cap == 0 {
        return Err(Error::invalid("krr cap must be positive"));
    }
    if x_train.rows() == 0 {
        return Err(Error::EmptyInput);
    }
    let (xs, ys) = if x_train.rows() > cfg.cap {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut idx = index::sample(&mut rng, x_train.rows(), cfg.cap).into_vec();
        idx.sort_unstable();
        log::info!(
            "krr: subsampling {} of {} training rows",
            cfg.cap,
            x_train.rows()
        );
        (
            x_train.select_rows(&idx),
            idx.iter().map(|&i| y[i]).collect(),
        )
    } else {
        (x_train.clone(), y.to_vec())
    };

    let n = xs.rows();
    let k = poly_kernel_matrix(&xs, cfg.degree);
    let mut a = k.to_nalgebra();
    for i in 0..n {
        a[(i, i)] += cfg.lambda;
    }
    let alpha = spd_solve(a, DVector::from_vec(ys))?;
    Ok(x_test
        .iter_rows()
        .map(|t| {
            xs.iter_rows()
                .zip(&alpha)
                .map(|(s, a)| a * poly_kernel(t, s, cfg.degree))
                .sum()
        })
        .collect())
}
