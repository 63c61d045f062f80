mod common;

use common::{dense_solve, max_abs_diff, rng, uniform_vec};
use tensor_machines::data::{metric, synth_tm_task, Dataset, Task};
use tensor_machines::objective::{objective_value_grad, Loss, ObjectiveConfig};
use tensor_machines::solvers::lbfgs::LbfgsConfig;
use tensor_machines::solvers::{
    fit_batch, fit_stochastic, BatchSolverConfig, FitStatus, StochasticSolverConfig, Termination,
};
use tensor_machines::{Error, Matrix, TmParams, TmShape};

fn regression_data(seed: u64, n: usize, d: usize) -> Dataset {
    let mut r = rng(seed);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| uniform_vec(&mut r, d)).collect();
    let y = uniform_vec(&mut r, n);
    Dataset::new(Matrix::from_rows(&rows).unwrap(), y, Task::Regression).unwrap()
}

fn tight() -> BatchSolverConfig {
    BatchSolverConfig {
        lbfgs: LbfgsConfig {
            max_iters: 1000,
            grad_tol: 1e-12,
            objective_rel_tol: 0.0,
            ..LbfgsConfig::default()
        },
        seed: 0,
    }
}

#[test]
fn affine_model_reaches_ridge_solution() {
    let (n, d, lambda) = (30, 4, 0.01);
    let data = regression_data(1, n, d);
    let init = TmParams::init_random(TmShape::new(d, 3, 0).unwrap(), 0.1, 2).unwrap();
    let obj = ObjectiveConfig::new(lambda, Loss::Squared).unwrap();
    let (p, _) = fit_batch(&init, &data, &obj, &tight()).unwrap();

    // (X̃ᵀX̃/n + 2λ diag(0, 1, …, 1)) θ = X̃ᵀy/n with X̃ = [1, X]
    let k = d + 1;
    let mut a = vec![0.0; k * k];
    let mut b = vec![0.0; k];
    for i in 0..n {
        let mut xt = vec![1.0];
        xt.extend_from_slice(data.row(i));
        for r in 0..k {
            b[r] += xt[r] * data.y()[i] / n as f64;
            for c in 0..k {
                a[r * k + c] += xt[r] * xt[c] / n as f64;
            }
        }
    }
    for r in 1..k {
        a[r * k + r] += 2.0 * lambda;
    }
    let theta = dense_solve(a, b);
    assert!(max_abs_diff(&p.flatten(), &theta) <= 1e-6);
}

#[test]
fn stationary_start_returns_immediately() {
    let x = Matrix::from_rows(&[vec![0.3, 0.1], vec![-0.2, 0.5]]).unwrap();
    let data = Dataset::new(x, vec![0.0, 0.0], Task::Regression).unwrap();
    let init = TmParams::zeros(TmShape::new(2, 3, 2).unwrap());
    let obj = ObjectiveConfig::new(1e-3, Loss::Squared).unwrap();
    let (p, rep) = fit_batch(&init, &data, &obj, &BatchSolverConfig::default()).unwrap();
    assert_eq!(rep.iterations, 0);
    assert_eq!(rep.status, FitStatus::Batch(Termination::GradTol));
    assert_eq!(p, init);
    assert_eq!(rep.objective.len(), 1);
}

#[test]
fn batch_trace_satisfies_sufficient_decrease() {
    let data = regression_data(3, 50, 3);
    let init = TmParams::init_random(TmShape::new(3, 3, 2).unwrap(), 0.5, 3).unwrap();
    let obj = ObjectiveConfig::new(1e-4, Loss::Squared).unwrap();
    let cfg = BatchSolverConfig::default();
    let (_, rep) = fit_batch(&init, &data, &obj, &cfg).unwrap();
    assert!(rep.iterations > 0);
    assert_eq!(rep.objective.len(), rep.iterations + 1);
    assert_eq!(rep.grad_norm.len(), rep.iterations + 1);
    assert_eq!(rep.steps.len(), rep.iterations);
    for (k, s) in rep.steps.iter().enumerate() {
        let (f0, f1) = (rep.objective[k], rep.objective[k + 1]);
        assert!(s.dir_deriv < 0.0);
        assert!(f1 <= f0 + cfg.lbfgs.c1 * s.alpha * s.dir_deriv, "step {k}");
        assert!(f1 <= f0);
    }
}

#[test]
fn batch_is_deterministic() {
    let data = regression_data(4, 40, 3);
    let init = TmParams::init_random(TmShape::new(3, 2, 2).unwrap(), 0.5, 4).unwrap();
    let obj = ObjectiveConfig::new(1e-4, Loss::Squared).unwrap();
    let (a, ra) = fit_batch(&init, &data, &obj, &BatchSolverConfig::default()).unwrap();
    let (b, rb) = fit_batch(&init, &data, &obj, &BatchSolverConfig::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(ra.objective, rb.objective);
}

fn test_relerr(p: &TmParams, test: &Dataset) -> f64 {
    let pred: Vec<f64> = (0..test.len())
        .map(|i| p.evaluate(test.row(i)).unwrap())
        .collect();
    metric(&pred, test.y(), Task::Regression).unwrap().value()
}

#[test]
fn batch_recovers_low_rank_quadratic() {
    for seed in 1..=3 {
        let task = synth_tm_task(seed, 10, 2, 1, 2000, 500, 0.0).unwrap();
        let init = TmParams::init_random(TmShape::new(10, 2, 2).unwrap(), 0.1, seed).unwrap();
        let obj = ObjectiveConfig::new(1e-7, Loss::Squared).unwrap();
        let (p, _) = fit_batch(&init, &task.train, &obj, &BatchSolverConfig::default()).unwrap();
        let e = test_relerr(&p, &task.test);
        assert!(e <= 0.05, "seed {seed}: relerr {e}");
    }
}

#[test]
fn stochastic_recovers_low_rank_quadratic() {
    for seed in 1..=3 {
        let task = synth_tm_task(seed, 10, 2, 1, 2000, 500, 0.0).unwrap();
        let init = TmParams::init_random(TmShape::new(10, 2, 2).unwrap(), 0.1, seed).unwrap();
        let obj = ObjectiveConfig::new(1e-7, Loss::Squared).unwrap();
        let cfg = StochasticSolverConfig {
            epochs: 50,
            base_step: 0.1,
            seed,
            ..Default::default()
        };
        let (p, rep) = fit_stochastic(&init, &task.train, &obj, &cfg).unwrap();
        assert_eq!(rep.objective.len(), 51);
        let e = test_relerr(&p, &task.test);
        assert!(e <= 0.08, "seed {seed}: relerr {e}");
    }
}

#[test]
fn single_block_without_scaling_is_gradient_descent() {
    let data = regression_data(6, 25, 3);
    let init = TmParams::init_random(TmShape::new(3, 3, 2).unwrap(), 0.4, 6).unwrap();
    let obj = ObjectiveConfig::new(1e-3, Loss::Squared).unwrap();
    let step = 0.05;
    let cfg = StochasticSolverConfig {
        epochs: 5,
        minibatch_count: Some(1),
        base_step: step,
        adaptive: false,
        seed: 9,
        ..Default::default()
    };
    let (p, rep) = fit_stochastic(&init, &data, &obj, &cfg).unwrap();

    let mut w = init.flatten();
    let shape = init.shape();
    let mut values = Vec::new();
    for _ in 0..5 {
        let cur = TmParams::unflatten(w.clone(), shape).unwrap();
        let (v, g) = objective_value_grad(&cur, &data, &obj, None).unwrap();
        values.push(v);
        for (wk, gk) in w.iter_mut().zip(g.as_slice()) {
            *wk -= step * gk;
        }
    }
    assert_eq!(p.flatten(), w);
    assert_eq!(&rep.objective[..5], &values[..]);
}

#[test]
fn stochastic_is_deterministic_and_seed_sensitive() {
    let data = regression_data(7, 60, 3);
    let init = TmParams::init_random(TmShape::new(3, 2, 2).unwrap(), 0.4, 7).unwrap();
    let obj = ObjectiveConfig::new(1e-4, Loss::Squared).unwrap();
    let cfg = StochasticSolverConfig {
        epochs: 4,
        seed: 1,
        ..Default::default()
    };
    let (a, _) = fit_stochastic(&init, &data, &obj, &cfg).unwrap();
    let (b, _) = fit_stochastic(&init, &data, &obj, &cfg).unwrap();
    assert_eq!(a, b);
    let (c, _) = fit_stochastic(
        &init,
        &data,
        &obj,
        &StochasticSolverConfig { seed: 2, ..cfg },
    )
    .unwrap();
    assert_ne!(a, c);
}

#[test]
fn stochastic_rejects_zero_epochs() {
    let data = regression_data(8, 10, 2);
    let init = TmParams::zeros(TmShape::new(2, 2, 1).unwrap());
    let obj = ObjectiveConfig::new(0.0, Loss::Squared).unwrap();
    let cfg = StochasticSolverConfig {
        epochs: 0,
        ..Default::default()
    };
    assert!(matches!(
        fit_stochastic(&init, &data, &obj, &cfg),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn divergence_halves_the_step_then_gives_up() {
    let data = regression_data(9, 40, 3);
    let init = TmParams::zeros(TmShape::new(3, 1, 0).unwrap());
    let obj = ObjectiveConfig::new(0.0, Loss::Squared).unwrap();
    let base = StochasticSolverConfig {
        epochs: 20,
        minibatch_count: Some(1),
        adaptive: false,
        ..Default::default()
    };
    let (_, rep) = fit_stochastic(
        &init,
        &data,
        &obj,
        &StochasticSolverConfig {
            base_step: 6.0,
            ..base
        },
    )
    .unwrap();
    assert!(rep.divergence_restarts >= 1 && rep.divergence_restarts <= 3);
    assert!(rep.objective.last().unwrap() <= &rep.objective[0]);

    let err = fit_stochastic(
        &init,
        &data,
        &obj,
        &StochasticSolverConfig {
            base_step: 1e4,
            ..base
        },
    );
    assert!(matches!(err, Err(Error::Diverged(_))));
}

#[test]
fn logistic_fit_classifies_a_separable_task() {
    let mut r = rng(10);
    let rows: Vec<Vec<f64>> = (0..200).map(|_| uniform_vec(&mut r, 2)).collect();
    let y: Vec<f64> = rows
        .iter()
        .map(|x| if x[0] * x[1] >= 0.0 { 1.0 } else { -1.0 })
        .collect();
    let data = Dataset::new(Matrix::from_rows(&rows).unwrap(), y, Task::Binary).unwrap();
    let init = TmParams::init_random(TmShape::new(2, 2, 2).unwrap(), 0.5, 1).unwrap();
    let obj = ObjectiveConfig::new(1e-6, Loss::Logistic).unwrap();
    let (p, _) = fit_batch(&init, &data, &obj, &BatchSolverConfig::default()).unwrap();
    let pred: Vec<f64> = (0..data.len())
        .map(|i| p.evaluate(data.row(i)).unwrap())
        .collect();
    let e = metric(&pred, data.y(), Task::Binary).unwrap().value();
    assert!(e <= 0.05, "training error {e}");
}
