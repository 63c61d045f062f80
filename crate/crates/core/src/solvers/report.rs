use std::fmt::Write as _;

use super::lbfgs::{StepRecord, Termination};
use crate::model::TmParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitStatus {
    Batch(Termination),
    /// Stochastic runs stop after the configured number of epochs.
    EpochsCompleted,
}

impl FitStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            FitStatus::Batch(t) => t.as_str(),
            FitStatus::EpochsCompleted => "epochs_completed",
        }
    }

    pub fn line_search_failed(&self) -> bool {
        matches!(self, FitStatus::Batch(Termination::LineSearchFailed))
    }
}

/// Solver trace. Index `k` of the traces is the state after `k` iterations
/// (batch) or epochs (stochastic); index 0 is the initial point.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub solver: &'static str,
    pub objective: Vec<f64>,
    pub grad_norm: Vec<f64>,
    /// Seconds since the solver started, per trace point.
    pub seconds: Vec<f64>,
    pub wall_seconds: f64,
    pub iterations: usize,
    pub status: FitStatus,
    /// Accepted line-search steps (batch solver only).
    pub steps: Vec<StepRecord>,
    pub final_params: TmParams,
    pub seed: u64,
    pub config: Vec<(String, String)>,
    pub divergence_restarts: usize,
}

impl FitReport {
    /// `iter,objective,grad_norm,seconds`
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iter,objective,grad_norm,seconds\n");
        for k in 0..self.objective.len() {
            writeln!(
                s,
                "{k},{:?},{:?},{:.6}",
                self.objective[k], self.grad_norm[k], self.seconds[k]
            )
            .unwrap();
        }
        s
    }

    /// Trace without per-row timings: wall time goes into a leading `#`
    /// comment so that everything below it is identical across repeated
    /// runs with the same seed.
    pub fn to_csv_reproducible(&self) -> String {
        let mut s = format!(
            "# wall_seconds={:.6}\niter,objective,grad_norm\n",
            self.wall_seconds
        );
        for k in 0..self.objective.len() {
            writeln!(s, "{k},{:?},{:?}", self.objective[k], self.grad_norm[k]).unwrap();
        }
        s
    }

    /// Human-readable line-oriented summary.
    pub fn to_log(&self) -> String {
        let mut s = String::new();
        writeln!(s, "solver {}", self.solver).unwrap();
        writeln!(s, "seed {}", self.seed).unwrap();
        for (k, v) in &self.config {
            writeln!(s, "config {k} {v}").unwrap();
        }
        writeln!(s, "iterations {}", self.iterations).unwrap();
        writeln!(s, "status {}", self.status.as_str()).unwrap();
        if self.divergence_restarts > 0 {
            writeln!(s, "divergence_restarts {}", self.divergence_restarts).unwrap();
        }
        if let Some(f) = self.objective.last() {
            writeln!(s, "final_objective {f:?}").unwrap();
        }
        if let Some(g) = self.grad_norm.last() {
            writeln!(s, "final_grad_norm {g:?}").unwrap();
        }
        writeln!(s, "wall_seconds {:.6}", self.wall_seconds).unwrap();
        s
    }
}
