use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::{Dataset, Task};
use crate::error::{Error, Result};
use crate::matrix::{norm2, Matrix};
use crate::model::{TmParams, TmShape};

/// A generated regression problem with a known Tensor Machine target.
#[derive(Debug, Clone)]
pub struct SynthTask {
    pub train: Dataset,
    pub test: Dataset,
    pub truth: TmParams,
}

fn sphere_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Matrix {
    let mut x = Matrix::zeros(n, d);
    for i in 0..n {
        let row = x.row_mut(i);
        loop {
            for v in row.iter_mut() {
                *v = StandardNormal.sample(rng);
            }
            let nrm = norm2(row);
            if nrm > 0.0 {
                row.iter_mut().for_each(|v| *v /= nrm);
                break;
            }
        }
    }
    x
}

/// Ground truth from `init_random(alpha = 1)`, rows uniform on the unit
/// sphere, training targets with `Normal(0, noise_sd²)` noise and noiseless
/// test targets.
pub fn synth_tm_task(
    seed: u64,
    d: usize,
    q: usize,
    r_true: usize,
    n_train: usize,
    n_test: usize,
    noise_sd: f64,
) -> Result<SynthTask> {
    if r_true == 0 || n_train == 0 || n_test == 0 {
        return Err(Error::invalid("rank and sample sizes must be positive"));
    }
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(Error::invalid(
            "noise_sd must be a finite non-negative number",
        ));
    }
    let truth = TmParams::init_random(TmShape::new(d, q, r_true)?, 1.0, seed)?;

    let mut rows = ChaCha8Rng::seed_from_u64(seed);
    rows.set_stream(1);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(seed);
    noise_rng.set_stream(2);
    let noise = Normal::new(0.0, noise_sd.max(f64::MIN_POSITIVE)).expect("valid sd");

    let xtr = sphere_rows(&mut rows, n_train, d);
    let xte = sphere_rows(&mut rows, n_test, d);
    let ytr = xtr
        .iter_rows()
        .map(|x| {
            let f = truth.evaluate_unchecked(x);
            if noise_sd > 0.0 {
                f + noise.sample(&mut noise_rng)
            } else {
                f
            }
        })
        .collect();
    let yte = xte
        .iter_rows()
        .map(|x| truth.evaluate_unchecked(x))
        .collect();
    Ok(SynthTask {
        train: Dataset::new(xtr, ytr, Task::Regression)?,
        test: Dataset::new(xte, yte, Task::Regression)?,
        truth,
    })
}
