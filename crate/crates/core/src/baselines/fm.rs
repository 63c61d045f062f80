//! Second-order Factorization Machines.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};
use crate::objective::{Loss, ObjectiveConfig};
use crate::solvers::lbfgs::{self, LbfgsConfig, LbfgsOutcome};

#[derive(Debug, Clone, PartialEq)]
pub struct FmParams {
    pub w0: f64,
    pub w: Vec<f64>,
    /// `d × m`, row `i` is the factor vector `v_i`.
    pub v: Matrix,
}

impl FmParams {
    pub fn new(w0: f64, w: Vec<f64>, v: Matrix) -> Result<Self> {
        Error::check_dim(w.len(), v.rows())?;
        if v.cols() == 0 {
            return Err(Error::invalid("factor count m must be at least 1"));
        }
        Ok(Self { w0, w, v })
    }

    pub fn zeros(d: usize, m: usize) -> Result<Self> {
        Self::new(0.0, vec![0.0; d], Matrix::zeros(d, m))
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn factors(&self) -> usize {
        self.v.cols()
    }

    /// `[w0, w, V row-major]`
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(1 + self.w.len() + self.v.as_slice().len());
        out.push(self.w0);
        out.extend_from_slice(&self.w);
        out.extend_from_slice(self.v.as_slice());
        out
    }

    pub fn unflatten(values: &[f64], d: usize, m: usize) -> Result<Self> {
        Error::check_dim(1 + d + d * m, values.len())?;
        Self::new(
            values[0],
            values[1..=d].to_vec(),
            Matrix::from_vec(d, m, values[1 + d..].to_vec())?,
        )
    }
}

/// `w0 + w·x + ½ Σ_f [(Σ_i V_if x_i)² − Σ_i V_if² x_i²]`
pub fn fm2_eval(params: &FmParams, x: &[f64]) -> Result<f64> {
    Error::check_dim(params.dim(), x.len())?;
    Ok(eval_with_sums(params, x, &mut Vec::new()))
}

/// Fills `sums[f] = Σ_i V_if x_i`.
fn eval_with_sums(params: &FmParams, x: &[f64], sums: &mut Vec<f64>) -> f64 {
    let m = params.factors();
    sums.clear();
    sums.resize(m, 0.0);
    let mut sq = vec![0.0; m];
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        for (f, &vif) in params.v.row(i).iter().enumerate() {
            let t = vif * xi;
            sums[f] += t;
            sq[f] += t * t;
        }
    }
    let pair: f64 = sums.iter().zip(&sq).map(|(s, q)| s * s - q).sum();
    params.w0 + dot(&params.w, x) + 0.5 * pair
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FmFitConfig {
    pub factors: usize,
    /// Applied to `‖w‖² + ‖V‖_F²`; `w0` is not regularized.
    pub lambda: f64,
    pub loss: Loss,
    /// Standard deviation of the initial factor entries.
    pub init_scale: f64,
    pub seed: u64,
    pub lbfgs: LbfgsConfig,
}

impl FmFitConfig {
    pub fn new(factors: usize, lambda: f64, loss: Loss) -> Self {
        Self {
            factors,
            lambda,
            loss,
            init_scale: 0.1,
            seed: 0,
            lbfgs: LbfgsConfig::default(),
        }
    }
}

/// Fits by L-BFGS on the regularized empirical risk, starting from
/// `w0 = 0, w = 0` and seeded Gaussian factors.
pub fn fm2_fit(data: &Dataset, cfg: &FmFitConfig) -> Result<(FmParams, LbfgsOutcome)> {
    let (d, m) = (data.dim(), cfg.factors);
    if m == 0 {
        return Err(Error::invalid("factor count m must be at least 1"));
    }
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    let lambda = ObjectiveConfig::new(cfg.lambda, cfg.loss)?.lambda;
    if !(cfg.init_scale >= 0.0 && cfg.init_scale.is_finite()) {
        return Err(Error::invalid("init_scale must be finite and >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(0.0, cfg.init_scale).expect("valid sd");
    let v0 = Matrix::from_vec(d, m, (0..d * m).map(|_| normal.sample(&mut rng)).collect())?;
    let x0 = FmParams::new(0.0, vec![0.0; d], v0)?.flatten();

    let inv_n = 1.0 / data.len() as f64;
    let mut sums = Vec::with_capacity(m);
    let f = |theta: &[f64], g: &mut [f64]| -> Result<f64> {
        let p = FmParams::unflatten(theta, d, m)?;
        g[0] = 0.0;
        for k in 1..theta.len() {
            g[k] = 2.0 * lambda * theta[k];
        }
        let mut total = 0.0;
        for (i, &yi) in data.y().iter().enumerate() {
            let x = data.row(i);
            let fx = eval_with_sums(&p, x, &mut sums);
            let (l, dl) = cfg.loss.value_grad(fx, yi)?;
            total += l;
            let s = dl * inv_n;
            g[0] += s;
            for (j, &xj) in x.iter().enumerate() {
                if xj == 0.0 {
                    continue;
                }
                g[1 + j] += s * xj;
                let base = 1 + d + j * m;
                for (f, &vjf) in p.v.row(j).iter().enumerate() {
                    g[base + f] += s * xj * (sums[f] - vjf * xj);
                }
            }
        }
        Ok(total * inv_n + lambda * theta[1..].iter().map(|v| v * v).sum::<f64>())
    };
    let out = lbfgs::minimize(x0, f, &cfg.lbfgs)?;
    Ok((FmParams::unflatten(&out.x, d, m)?, out))
}
