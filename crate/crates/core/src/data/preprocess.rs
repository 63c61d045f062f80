use super::{Dataset, PreprocessState};
use crate::error::{Error, Result};
use crate::matrix::norm2;

fn column_norms(data: &Dataset) -> Vec<f64> {
    let d = data.dim();
    let mut sq = vec![0.0; d];
    for row in data.x.iter_rows() {
        for (s, v) in sq.iter_mut().zip(row) {
            *s += v * v;
        }
    }
    sq.into_iter().map(f64::sqrt).collect()
}

fn scale_columns(data: &mut Dataset, norms: &[f64]) {
    for i in 0..data.len() {
        for (v, &n) in data.x.row_mut(i).iter_mut().zip(norms) {
            if n > 0.0 {
                *v /= n;
            }
        }
    }
    data.column_norms = Some(norms.to_vec());
    data.state = PreprocessState::ColumnNormalized;
}

fn scale_rows(data: &mut Dataset) {
    for i in 0..data.len() {
        let row = data.x.row_mut(i);
        let n = norm2(row);
        if n > 0.0 {
            row.iter_mut().for_each(|v| *v /= n);
        }
    }
    data.state = PreprocessState::RowNormalized;
}

fn finish(data: &Dataset, norms: &[f64]) -> Dataset {
    let mut out = data.clone();
    match out.state {
        PreprocessState::Raw => {
            scale_columns(&mut out, norms);
            scale_rows(&mut out);
        }
        PreprocessState::ColumnNormalized => scale_rows(&mut out),
        PreprocessState::RowNormalized => {}
    }
    out
}

/// Two-stage normalization: divide every column by its training-set norm,
/// then scale every row to unit norm. Zero columns and zero rows are left
/// as they are. The test set reuses the training divisors.
///
/// A dataset already in the row-normalized state passes through unchanged,
/// which makes the operation an exact fixed point on its own output.
pub fn preprocess(train: &Dataset, test: &Dataset) -> Result<(Dataset, Dataset)> {
    Error::check_dim(train.dim(), test.dim())?;
    let norms = match train.column_norms() {
        Some(n) => n.to_vec(),
        None => column_norms(train),
    };
    Ok((finish(train, &norms), finish(test, &norms)))
}

/// [`preprocess`] on a training set alone; the returned dataset records the
/// column norms for later reuse.
pub fn preprocess_train(train: &Dataset) -> Dataset {
    let norms = match train.column_norms() {
        Some(n) => n.to_vec(),
        None => column_norms(train),
    };
    finish(train, &norms)
}

/// Applies previously recorded training column norms to a raw dataset.
pub fn preprocess_with_norms(data: &Dataset, norms: &[f64]) -> Result<Dataset> {
    Error::check_dim(norms.len(), data.dim())?;
    Ok(finish(data, norms))
}
