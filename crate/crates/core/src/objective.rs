//! Losses and the regularized empirical risk
//!
//! ```text
//! (1/m) Σ_{i∈S} ℓ(f(x_i), y_i) + λ‖w1‖² + λ Σ_{p,i,j} ‖w_j^{p,i}‖²
//! ```
//!
//! The bias is not regularized. Mini-batch evaluations keep the full
//! regularizer so the stochastic gradient stays unbiased.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{TmGradient, TmParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    /// `½(f − y)²`
    Squared,
    /// `log(1 + exp(−y f))` with `y ∈ {−1, +1}`
    Logistic,
}

/// `log(1 + exp(z))` without overflow.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Loss {
    /// Loss value and its derivative with respect to the prediction `f`.
    pub fn value_grad(self, f: f64, y: f64) -> Result<(f64, f64)> {
        match self {
            Loss::Squared => {
                let r = f - y;
                Ok((0.5 * r * r, r))
            }
            Loss::Logistic => {
                if y != 1.0 && y != -1.0 {
                    return Err(Error::InvalidLabel { label: y });
                }
                let z = -y * f;
                Ok((softplus(z), -y * sigmoid(z)))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveConfig {
    pub lambda: f64,
    pub loss: Loss,
}

impl ObjectiveConfig {
    pub fn new(lambda: f64, loss: Loss) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be >= 0, got {lambda}")));
        }
        Ok(Self { lambda, loss })
    }
}

fn check_inputs(params: &TmParams, data: &Dataset, subset: Option<&[usize]>) -> Result<usize> {
    Error::check_dim(params.shape().dim, data.dim())?;
    let m = match subset {
        Some(s) => {
            if let Some(&bad) = s.iter().find(|&&i| i >= data.len()) {
                return Err(Error::invalid(format!("row index {bad} out of range")));
            }
            s.len()
        }
        None => data.len(),
    };
    if m == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(m)
}

fn regularizer(params: &TmParams, lambda: f64) -> f64 {
    lambda * params.regularized().iter().map(|v| v * v).sum::<f64>()
}

/// Reusable buffers for repeated objective evaluations.
#[derive(Debug)]
pub struct Workspace {
    dots: Vec<f64>,
    grad: TmGradient,
}

impl Workspace {
    pub fn new(params: &TmParams) -> Self {
        Self {
            dots: Vec::new(),
            grad: TmGradient::zeros(params.shape()),
        }
    }

    /// Gradient left by the last call to [`objective_value_grad_into`].
    pub fn gradient(&self) -> &TmGradient {
        &self.grad
    }
}

/// Objective value and gradient over `subset` (all rows when `None`).
/// Points are accumulated in the order given, single-threaded.
pub fn objective_value_grad(
    params: &TmParams,
    data: &Dataset,
    cfg: &ObjectiveConfig,
    subset: Option<&[usize]>,
) -> Result<(f64, TmGradient)> {
    let mut ws = Workspace::new(params);
    let v = objective_value_grad_into(params, data, cfg, subset, &mut ws)?;
    Ok((v, ws.grad))
}

/// Same as [`objective_value_grad`], leaving the gradient in `ws`.
pub fn objective_value_grad_into(
    params: &TmParams,
    data: &Dataset,
    cfg: &ObjectiveConfig,
    subset: Option<&[usize]>,
    ws: &mut Workspace,
) -> Result<f64> {
    let m = check_inputs(params, data, subset)?;
    if ws.grad.shape() != params.shape() {
        ws.grad = TmGradient::zeros(params.shape());
    }
    ws.grad.clear();
    let inv_m = 1.0 / m as f64;
    let mut loss_sum = 0.0;
    let mut visit = |i: usize| -> Result<()> {
        let x = data.row(i);
        let f = params.forward(x, &mut ws.dots);
        let (l, dl) = cfg.loss.value_grad(f, data.y()[i])?;
        loss_sum += l;
        params.backward(x, &ws.dots, dl * inv_m, &mut ws.grad);
        Ok(())
    };
    match subset {
        Some(s) => s.iter().try_for_each(|&i| visit(i))?,
        None => (0..data.len()).try_for_each(&mut visit)?,
    }
    let g = ws.grad.as_mut_slice();
    for (gv, pv) in g[1..].iter_mut().zip(params.regularized()) {
        *gv += 2.0 * cfg.lambda * pv;
    }
    let value = loss_sum * inv_m + regularizer(params, cfg.lambda);
    if !value.is_finite() {
        return Err(Error::NonFinite("objective value"));
    }
    Ok(value)
}

/// Objective value only.
pub fn objective_value(
    params: &TmParams,
    data: &Dataset,
    cfg: &ObjectiveConfig,
    subset: Option<&[usize]>,
) -> Result<f64> {
    let m = check_inputs(params, data, subset)?;
    let mut loss_sum = 0.0;
    let mut visit = |i: usize| -> Result<()> {
        let f = params.evaluate_unchecked(data.row(i));
        loss_sum += cfg.loss.value_grad(f, data.y()[i])?.0;
        Ok(())
    };
    match subset {
        Some(s) => s.iter().try_for_each(|&i| visit(i))?,
        None => (0..data.len()).try_for_each(&mut visit)?,
    }
    Ok(loss_sum / m as f64 + regularizer(params, cfg.lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Task;
    use crate::matrix::Matrix;
    use crate::model::TmShape;

    #[test]
    fn loss_cases() {
        assert_eq!(Loss::Squared.value_grad(1.5, 1.5).unwrap(), (0.0, 0.0));
        let (v, g) = Loss::Logistic.value_grad(0.0, 1.0).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((g + 0.5).abs() < 1e-15);
        assert!(matches!(
            Loss::Logistic.value_grad(0.0, 0.0),
            Err(Error::InvalidLabel { .. })
        ));
    }

    #[test]
    fn logistic_large_margin_is_stable() {
        let (v, g) = Loss::Logistic.value_grad(50.0, -1.0).unwrap();
        assert!((v - 50.0).abs() < 1e-12);
        let h = 1e-6;
        let fd = (Loss::Logistic.value_grad(50.0 + h, -1.0).unwrap().0
            - Loss::Logistic.value_grad(50.0 - h, -1.0).unwrap().0)
            / (2.0 * h);
        assert!((g - fd).abs() < 1e-6);
        assert!(g > 0.99);

        let (v, _) = Loss::Logistic.value_grad(1000.0, -1.0).unwrap();
        assert_eq!(v, 1000.0);
        let (v, g) = Loss::Logistic.value_grad(1000.0, 1.0).unwrap();
        assert_eq!((v, g), (0.0, -0.0));
    }

    fn small_data() -> Dataset {
        let x = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.5, -1.0], vec![0.2, 0.3]]).unwrap();
        Dataset::new(x, vec![1.0, -2.0, 0.5], Task::Regression).unwrap()
    }

    #[test]
    fn zero_params_value() {
        let data = small_data();
        let p = TmParams::zeros(TmShape::new(2, 3, 2).unwrap());
        let cfg = ObjectiveConfig::new(0.3, Loss::Squared).unwrap();
        let (v, _) = objective_value_grad(&p, &data, &cfg, None).unwrap();
        let expected = (0.5 + 2.0 + 0.125) / 3.0;
        assert!((v - expected).abs() < 1e-15);
    }

    #[test]
    fn single_point_chain_rule() {
        let data = small_data();
        let p = TmParams::init_random(TmShape::new(2, 3, 2).unwrap(), 0.5, 1).unwrap();
        let cfg = ObjectiveConfig::new(0.0, Loss::Squared).unwrap();
        let (v, g) = objective_value_grad(&p, &data, &cfg, Some(&[1])).unwrap();
        let f = p.evaluate(data.row(1)).unwrap();
        let (l, dl) = Loss::Squared.value_grad(f, data.y()[1]).unwrap();
        assert_eq!(v, l);
        assert_eq!(g, p.grad_point(data.row(1), dl).unwrap());
    }

    #[test]
    fn errors() {
        let data = small_data();
        let p = TmParams::zeros(TmShape::new(2, 2, 1).unwrap());
        let cfg = ObjectiveConfig::new(0.0, Loss::Squared).unwrap();
        assert!(matches!(
            objective_value_grad(&p, &data, &cfg, Some(&[])),
            Err(Error::EmptyInput)
        ));
        assert!(objective_value_grad(&p, &data, &cfg, Some(&[7])).is_err());
        let wrong = TmParams::zeros(TmShape::new(3, 2, 1).unwrap());
        assert!(objective_value_grad(&wrong, &data, &cfg, None).is_err());
        assert!(ObjectiveConfig::new(-1.0, Loss::Squared).is_err());
        let logistic = ObjectiveConfig::new(0.0, Loss::Logistic).unwrap();
        assert!(matches!(
            objective_value_grad(&p, &data, &logistic, None),
            Err(Error::InvalidLabel { .. })
        ));
    }

    #[test]
    fn regularizer_gradient() {
        let data = small_data();
        let p = TmParams::init_random(TmShape::new(2, 3, 2).unwrap(), 0.5, 2).unwrap();
        let lambda = 0.7;
        let (_, g0) = objective_value_grad(
            &p,
            &data,
            &ObjectiveConfig::new(0.0, Loss::Squared).unwrap(),
            None,
        )
        .unwrap();
        let (_, g1) = objective_value_grad(
            &p,
            &data,
            &ObjectiveConfig::new(lambda, Loss::Squared).unwrap(),
            None,
        )
        .unwrap();
        assert_eq!(g0.bias(), g1.bias());
        for ((a, b), w) in g1
            .regularized()
            .iter()
            .zip(g0.regularized())
            .zip(p.regularized())
        {
            assert!((a - b - 2.0 * lambda * w).abs() < 1e-14);
        }
    }

    #[test]
    fn value_only_matches() {
        let data = small_data();
        let p = TmParams::init_random(TmShape::new(2, 2, 3).unwrap(), 0.5, 3).unwrap();
        let cfg = ObjectiveConfig::new(0.01, Loss::Squared).unwrap();
        let (v, _) = objective_value_grad(&p, &data, &cfg, None).unwrap();
        assert!((objective_value(&p, &data, &cfg, None).unwrap() - v).abs() < 1e-15);
    }
}
