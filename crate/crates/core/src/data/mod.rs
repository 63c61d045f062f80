//! Datasets, preprocessing, splits, metrics and synthetic tasks.

mod io;
mod metrics;
mod preprocess;
mod split;
mod synth;

pub use io::{parse_csv, parse_sparse_text, write_sparse_text, LabelColumn};
pub use metrics::{metric, Metric};
pub use preprocess::{preprocess, preprocess_train, preprocess_with_norms};
pub use split::kfold;
pub use synth::{synth_tm_task, SynthTask};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Regression,
    /// Labels in {-1, +1}.
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreprocessState {
    Raw,
    ColumnNormalized,
    RowNormalized,
}

/// Dense features with targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Matrix,
    y: Vec<f64>,
    task: Task,
    state: PreprocessState,
    column_norms: Option<Vec<f64>>,
}

impl Dataset {
    /// Validates shapes and labels. For binary tasks, {0, 1} labels are
    /// remapped to {-1, +1} with a warning; anything else is rejected.
    pub fn new(x: Matrix, mut y: Vec<f64>, task: Task) -> Result<Self> {
        Error::check_dim(x.rows(), y.len())?;
        if !x.is_finite() {
            return Err(Error::NonFinite("features"));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("targets"));
        }
        if task == Task::Binary {
            let pm_one = y.iter().all(|&v| v == 1.0 || v == -1.0);
            if !pm_one {
                if let Some(&bad) = y.iter().find(|&&v| v != 0.0 && v != 1.0 && v != -1.0) {
                    return Err(Error::InvalidLabel { label: bad });
                }
                if y.iter().any(|&v| v == -1.0) {
                    return Err(Error::InvalidLabel { label: 0.0 });
                }
                log::warn!("binary labels given as {{0, 1}}; remapping 0 to -1");
                y.iter_mut().filter(|v| **v == 0.0).for_each(|v| *v = -1.0);
            }
        }
        Ok(Self {
            x,
            y,
            task,
            state: PreprocessState::Raw,
            column_norms: None,
        })
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn state(&self) -> PreprocessState {
        self.state
    }

    /// Train-set column divisors recorded by preprocessing.
    pub fn column_norms(&self) -> Option<&[f64]> {
        self.column_norms.as_deref()
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.x.row(i)
    }

    /// Rows by index, keeping task and preprocessing state.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            task: self.task,
            state: self.state,
            column_norms: self.column_norms.clone(),
        }
    }

    /// Same features with a different feature dimension padding: grows the
    /// matrix to `d` columns with zeros. Used to align a test file whose
    /// highest index is below the training dimension.
    pub fn pad_to_dim(&self, d: usize) -> Result<Dataset> {
        if d < self.dim() {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: self.dim(),
            });
        }
        let mut x = Matrix::zeros(self.len(), d);
        for i in 0..self.len() {
            x.row_mut(i)[..self.dim()].copy_from_slice(self.row(i));
        }
        Ok(Dataset { x, ..self.clone() })
    }
}
