use nalgebra::{DMatrix, DVector};

use crate::data::Task;
use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};
use crate::objective::{Loss, ObjectiveConfig};
use crate::solvers::lbfgs::{self, LbfgsConfig};

/// Solves `A w = b` for symmetric positive-definite `A` by Cholesky. On
/// failure the error carries the ratio of the largest to the smallest
/// diagonal entry as a conditioning hint.
pub(crate) fn spd_solve(a: DMatrix<f64>, b: DVector<f64>) -> Result<Vec<f64>> {
    let diag = a.diagonal();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    match a.cholesky() {
        Some(c) => {
            let w = c.solve(&b);
            if w.iter().all(|v| v.is_finite()) {
                Ok(w.iter().copied().collect())
            } else {
                Err(Error::Factorization(format!(
                    "non-finite solution; diagonal range [{lo:e}, {hi:e}]"
                )))
            }
        }
        None => Err(Error::Factorization(format!(
            "matrix is not numerically positive definite; diagonal range [{lo:e}, {hi:e}], ratio {:e}",
            hi / lo
        ))),
    }
}

/// Ridge weights on a feature matrix `Z`.
///
/// Regression solves `(ZᵀZ + λ'I) w = Zᵀy`. Classification minimizes
/// `(1/n) Σ log(1 + exp(−y zᵀw)) + λ'‖w‖²` with L-BFGS from `w = 0`.
pub fn ridge_on_features(z: &Matrix, y: &[f64], lambda: f64, task: Task) -> Result<Vec<f64>> {
    Error::check_dim(z.rows(), y.len())?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!(
            "ridge parameter must be > 0, got {lambda}"
        )));
    }
    if !z.is_finite() {
        return Err(Error::NonFinite("feature matrix"));
    }
    if z.rows() == 0 {
        return Err(Error::EmptyInput);
    }
    match task {
        Task::Regression => ridge_regression(z, y, lambda),
        Task::Binary => logistic_ridge(z, y, lambda),
    }
}

fn ridge_regression(z: &Matrix, y: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let k = z.cols();
    let mut gram = DMatrix::<f64>::zeros(k, k);
    let mut rhs = DVector::<f64>::zeros(k);
    for (row, &yi) in z.iter_rows().zip(y) {
        for a in 0..k {
            let za = row[a];
            if za == 0.0 {
                continue;
            }
            rhs[a] += za * yi;
            for b in a..k {
                gram[(a, b)] += za * row[b];
            }
        }
    }
    for a in 0..k {
        gram[(a, a)] += lambda;
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }
    spd_solve(gram, rhs)
}

fn logistic_ridge(z: &Matrix, y: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let loss = ObjectiveConfig::new(lambda, Loss::Logistic)?.loss;
    let inv_n = 1.0 / z.rows() as f64;
    let f = |w: &[f64], g: &mut [f64]| -> Result<f64> {
        g.iter_mut()
            .zip(w)
            .for_each(|(gk, wk)| *gk = 2.0 * lambda * wk);
        let mut total = 0.0;
        for (row, &yi) in z.iter_rows().zip(y) {
            let (l, dl) = loss.value_grad(dot(row, w), yi)?;
            total += l;
            let s = dl * inv_n;
            g.iter_mut().zip(row).for_each(|(gk, zk)| *gk += s * zk);
        }
        Ok(total * inv_n + lambda * dot(w, w))
    };
    let out = lbfgs::minimize(vec![0.0; z.cols()], f, &LbfgsConfig::default())?;
    Ok(out.x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_case() {
        let z = Matrix::from_rows(&[vec![1.0]]).unwrap();
        let w = ridge_on_features(&z, &[2.0], 1.0, Task::Regression).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identity_features_small_lambda() {
        let z = Matrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let y = [0.5, -1.5, 3.0];
        let w = ridge_on_features(&z, &y, 1e-12, Task::Regression).unwrap();
        for (a, b) in w.iter().zip(&y) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let z = Matrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(ridge_on_features(&z, &[1.0], 0.0, Task::Regression).is_err());
        assert!(ridge_on_features(&z, &[1.0, 2.0], 1.0, Task::Regression).is_err());
        let nan = Matrix::from_rows(&[vec![f64::NAN]]).unwrap();
        assert!(matches!(
            ridge_on_features(&nan, &[1.0], 1.0, Task::Regression),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn logistic_separates() {
        let z = Matrix::from_rows(&[
            vec![1.0, 1.0],
            vec![-1.0, 1.0],
            vec![2.0, 1.0],
            vec![-2.0, 1.0],
        ])
        .unwrap();
        let y = [1.0, -1.0, 1.0, -1.0];
        let w = ridge_on_features(&z, &y, 1e-3, Task::Binary).unwrap();
        for (row, yi) in z.iter_rows().zip(y) {
            assert!(dot(row, &w) * yi > 0.0);
        }
    }
}
