use super::Task;
use crate::error::{Error, Result};
use crate::matrix::norm2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    /// `‖ŷ − y‖₂ / ‖y‖₂`
    RelErr(f64),
    /// Fraction of sign mismatches.
    ErrorRate(f64),
}

impl Metric {
    pub fn value(&self) -> f64 {
        match *self {
            Metric::RelErr(v) | Metric::ErrorRate(v) => v,
        }
    }
}

/// Test error: relative ℓ2 error for regression, misclassification rate for
/// binary tasks (a score of exactly zero predicts +1).
pub fn metric(pred: &[f64], truth: &[f64], task: Task) -> Result<Metric> {
    Error::check_dim(truth.len(), pred.len())?;
    if truth.is_empty() {
        return Err(Error::EmptyInput);
    }
    match task {
        Task::Regression => {
            let denom = norm2(truth);
            if denom == 0.0 {
                return Err(Error::invalid(
                    "relative error is undefined for an all-zero truth",
                ));
            }
            let num = pred
                .iter()
                .zip(truth)
                .map(|(p, t)| (p - t) * (p - t))
                .sum::<f64>()
                .sqrt();
            Ok(Metric::RelErr(num / denom))
        }
        Task::Binary => {
            let wrong = pred
                .iter()
                .zip(truth)
                .filter(|(&p, &t)| {
                    let s = if p >= 0.0 { 1.0 } else { -1.0 };
                    s != t
                })
                .count();
            Ok(Metric::ErrorRate(wrong as f64 / truth.len() as f64))
        }
    }
}
