//! Mini-batch solver with per-coordinate adaptive step sizes.
//!
//! Each epoch draws a fresh permutation, cuts it into contiguous blocks and
//! takes one step per block on the mini-batch objective. With adaptive
//! scaling on, the step for coordinate `k` is divided by the square root of
//! the accumulated squared gradients of that coordinate (AdaGrad).

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::report::{FitReport, FitStatus};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::TmParams;
use crate::objective::{objective_value_grad_into, ObjectiveConfig, Workspace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepDecay {
    Constant,
    /// `base_step / sqrt(1 + epoch)`
    InverseSqrt,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StochasticSolverConfig {
    pub epochs: usize,
    /// `None` means `⌈√n⌉`.
    pub minibatch_count: Option<usize>,
    pub base_step: f64,
    pub decay: StepDecay,
    pub adaptive: bool,
    pub seed: u64,
}

impl Default for StochasticSolverConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            minibatch_count: None,
            base_step: 0.01,
            decay: StepDecay::Constant,
            adaptive: true,
            seed: 0,
        }
    }
}

const ADAPTIVE_EPS: f64 = 1e-8;
const DIVERGENCE_FACTOR: f64 = 10.0;
const MAX_DIVERGENCE_RESTARTS: usize = 3;

impl StochasticSolverConfig {
    /// Number of blocks per epoch for `n` rows.
    pub fn resolved_minibatches(&self, n: usize) -> Result<usize> {
        match self.minibatch_count {
            Some(m) if m >= 1 && m <= n => Ok(m),
            Some(m) => Err(Error::invalid(format!(
                "minibatch count {m} outside [1, {n}]"
            ))),
            None => Ok(((n as f64).sqrt().ceil() as usize).clamp(1, n.max(1))),
        }
    }

    fn step_at(&self, epoch: usize, base: f64) -> f64 {
        match self.decay {
            StepDecay::Constant => base,
            StepDecay::InverseSqrt => base / ((1 + epoch) as f64).sqrt(),
        }
    }
}

fn blocks(perm: &[usize], count: usize) -> Vec<Vec<usize>> {
    let n = perm.len();
    let (base, extra) = (n / count, n % count);
    let mut out = Vec::with_capacity(count);
    let mut start = 0;
    for b in 0..count {
        let len = base + usize::from(b < extra);
        let mut block = perm[start..start + len].to_vec();
        // ascending order inside a block fixes the summation order
        block.sort_unstable();
        out.push(block);
        start += len;
    }
    out
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Runs `cfg.epochs` epochs and returns the last iterate.
///
/// If an epoch ends with a non-finite objective or one above ten times the
/// initial objective, the step size is halved and the epoch is repeated from
/// the best iterate so far. A fourth divergence is an error.
pub fn fit_stochastic(
    init: &TmParams,
    data: &Dataset,
    obj: &ObjectiveConfig,
    cfg: &StochasticSolverConfig,
) -> Result<(TmParams, FitReport)> {
    Error::check_dim(init.shape().dim, data.dim())?;
    if cfg.epochs == 0 {
        return Err(Error::invalid("epochs must be at least 1"));
    }
    if !(cfg.base_step > 0.0 && cfg.base_step.is_finite()) {
        return Err(Error::invalid("base_step must be positive"));
    }
    let n = data.len();
    let mb = cfg.resolved_minibatches(n)?;
    let started = Instant::now();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut ws = Workspace::new(init);
    let mut params = init.clone();
    let f0 = objective_value_grad_into(&params, data, obj, None, &mut ws)?;
    let mut objective = vec![f0];
    let mut grad_norm = vec![inf_norm(ws.gradient().as_slice())];
    let mut seconds = vec![started.elapsed().as_secs_f64()];

    let mut best = (f0, params.clone());
    let mut accum = vec![0.0; params.as_slice().len()];
    let mut base = cfg.base_step;
    let mut restarts = 0;
    let limit = DIVERGENCE_FACTOR * f0.max(f64::MIN_POSITIVE);
    let mut perm: Vec<usize> = (0..n).collect();

    let mut epoch = 0;
    while epoch < cfg.epochs {
        perm.shuffle(&mut rng);
        let step = cfg.step_at(epoch, base);
        let mut blew_up = false;
        for block in blocks(&perm, mb) {
            match objective_value_grad_into(&params, data, obj, Some(&block), &mut ws) {
                Ok(_) => {}
                Err(Error::NonFinite(_)) => {
                    blew_up = true;
                    break;
                }
                Err(e) => return Err(e),
            }
            let g = ws.gradient().as_slice();
            let w = params.as_mut_slice();
            if cfg.adaptive {
                for ((wk, gk), ak) in w.iter_mut().zip(g).zip(accum.iter_mut()) {
                    *ak += gk * gk;
                    *wk -= step * gk / (ak.sqrt() + ADAPTIVE_EPS);
                }
            } else {
                for (wk, gk) in w.iter_mut().zip(g) {
                    *wk -= step * gk;
                }
            }
        }

        let full = if blew_up {
            None
        } else {
            match objective_value_grad_into(&params, data, obj, None, &mut ws) {
                Ok(v) => Some(v),
                Err(Error::NonFinite(_)) => None,
                Err(e) => return Err(e),
            }
        };
        match full {
            Some(v) if v <= limit => {
                if v < best.0 {
                    best = (v, params.clone());
                }
                objective.push(v);
                grad_norm.push(inf_norm(ws.gradient().as_slice()));
                seconds.push(started.elapsed().as_secs_f64());
                epoch += 1;
            }
            _ => {
                restarts += 1;
                if restarts > MAX_DIVERGENCE_RESTARTS {
                    return Err(Error::Diverged(format!(
                        "objective exceeded {DIVERGENCE_FACTOR}x its initial value {f0:e} at epoch {epoch} \
                         after {MAX_DIVERGENCE_RESTARTS} step halvings (last base step {base:e})"
                    )));
                }
                log::warn!(
                    "epoch {epoch} diverged; halving base step to {:e}",
                    base / 2.0
                );
                base /= 2.0;
                params = best.1.clone();
                accum.iter_mut().for_each(|a| *a = 0.0);
            }
        }
    }

    let report = FitReport {
        solver: "stochastic",
        objective,
        grad_norm,
        seconds,
        wall_seconds: started.elapsed().as_secs_f64(),
        iterations: cfg.epochs,
        status: FitStatus::EpochsCompleted,
        steps: Vec::new(),
        final_params: params.clone(),
        seed: cfg.seed,
        config: vec![
            ("lambda".into(), format!("{:?}", obj.lambda)),
            ("loss".into(), format!("{:?}", obj.loss).to_lowercase()),
            ("epochs".into(), cfg.epochs.to_string()),
            ("minibatches".into(), mb.to_string()),
            ("base_step".into(), format!("{:?}", cfg.base_step)),
            ("decay".into(), format!("{:?}", cfg.decay).to_lowercase()),
            ("adaptive".into(), cfg.adaptive.to_string()),
        ],
        divergence_restarts: restarts,
    };
    Ok((params, report))
}
