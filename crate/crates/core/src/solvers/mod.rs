//! Fitting Tensor Machines: a batch quasi-Newton solver and a mini-batch
//! adaptive stochastic solver.

pub mod lbfgs;
mod report;
mod stochastic;

pub use lbfgs::{LbfgsConfig, StepRecord, Termination};
pub use report::{FitReport, FitStatus};
pub use stochastic::{fit_stochastic, StepDecay, StochasticSolverConfig};

use std::time::Instant;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::TmParams;
use crate::objective::{objective_value_grad_into, ObjectiveConfig, Workspace};

/// Batch solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchSolverConfig {
    pub lbfgs: LbfgsConfig,
    /// Root seed used for the initial point; recorded in the report.
    pub seed: u64,
}

impl Default for BatchSolverConfig {
    fn default() -> Self {
        Self {
            lbfgs: LbfgsConfig::default(),
            seed: 0,
        }
    }
}

/// Full-batch L-BFGS on the flattened parameter vector.
pub fn fit_batch(
    init: &TmParams,
    data: &Dataset,
    obj: &ObjectiveConfig,
    cfg: &BatchSolverConfig,
) -> Result<(TmParams, FitReport)> {
    Error::check_dim(init.shape().dim, data.dim())?;
    let started = Instant::now();
    let shape = init.shape();
    let mut scratch = init.clone();
    let mut ws = Workspace::new(init);
    let f = |x: &[f64], g: &mut [f64]| -> Result<f64> {
        scratch.as_mut_slice().copy_from_slice(x);
        let v = objective_value_grad_into(&scratch, data, obj, None, &mut ws)?;
        g.copy_from_slice(ws_grad(&ws));
        Ok(v)
    };
    let out = lbfgs::minimize(init.flatten(), f, &cfg.lbfgs)?;
    let params = TmParams::unflatten(out.x, shape)?;
    let l = &cfg.lbfgs;
    let report = FitReport {
        solver: "batch",
        objective: out.objective_trace,
        grad_norm: out.grad_norm_trace,
        seconds: out.seconds_trace,
        wall_seconds: started.elapsed().as_secs_f64(),
        iterations: out.iterations,
        status: FitStatus::Batch(out.termination),
        steps: out.steps,
        final_params: params.clone(),
        seed: cfg.seed,
        config: vec![
            ("lambda".into(), format!("{:?}", obj.lambda)),
            ("loss".into(), format!("{:?}", obj.loss).to_lowercase()),
            ("max_iters".into(), l.max_iters.to_string()),
            ("memory".into(), l.memory.to_string()),
            ("c1".into(), format!("{:?}", l.c1)),
            ("c2".into(), format!("{:?}", l.c2)),
            ("grad_tol".into(), format!("{:?}", l.grad_tol)),
            (
                "objective_rel_tol".into(),
                format!("{:?}", l.objective_rel_tol),
            ),
        ],
        divergence_restarts: 0,
    };
    Ok((params, report))
}

fn ws_grad(ws: &Workspace) -> &[f64] {
    ws.gradient().as_slice()
}
