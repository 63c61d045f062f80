//! Tensor Machines: polynomial predictors built from low-rank tensors,
//! their solvers, comparison baselines, a data pipeline and numerical checks
//! of their generalization bounds.
//!
//! A Tensor Machine of degree `q` and rank `r` on `d` inputs is
//!
//! ```text
//! f(x) = w0 + w1·x + Σ_{p=2..q} Σ_{i=1..r} Π_{j=1..p} ⟨w_j^{p,i}, x⟩
//! ```

pub mod baselines;
pub mod cli;
pub mod data;
pub mod error;
pub mod generalization;
pub mod matrix;
pub mod model;
pub mod objective;
pub mod solvers;
pub mod tensor;

pub use data::{Dataset, Task};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use model::{ModelMeta, TmGradient, TmParams, TmShape};
pub use objective::{objective_value, objective_value_grad, Loss, ObjectiveConfig};
pub use solvers::{
    fit_batch, fit_stochastic, BatchSolverConfig, FitReport, StochasticSolverConfig,
};
