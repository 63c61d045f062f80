//! Rademacher-complexity bounds for Tensor Machines and Monte-Carlo
//! estimates of the empirical complexity of the rank-one class
//! `{x ↦ Π_j ⟨ω_j, x⟩ : ‖ω_j‖ ≤ B}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::{norm2, Matrix};
use crate::model::{TmParams, TmShape};
use crate::tensor::{rademacher_sum, spectral_norm, PowerIteration};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub d: usize,
    pub q: usize,
    pub r: usize,
    /// Norm cap on every factor vector.
    pub b: f64,
    /// Norm cap on the data points.
    pub b_x: f64,
    pub n: usize,
    pub c: f64,
}

impl BoundInputs {
    /// Inputs with `c = 1`.
    pub fn new(d: usize, q: usize, r: usize, b: f64, b_x: f64, n: usize) -> Result<Self> {
        let out = Self {
            d,
            q,
            r,
            b,
            b_x,
            n,
            c: 1.0,
        };
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.q == 0 || self.r == 0 || self.n == 0 {
            return Err(Error::invalid("d, q, r and n must be positive"));
        }
        for (name, v) in [("B", self.b), ("B_x", self.b_x), ("c", self.c)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!(
                    "{name} must be positive and finite"
                )));
            }
        }
        Ok(())
    }
}

/// `√(q d ln d) + √d`
fn dimension_term(d: usize, q: usize) -> f64 {
    let d = d as f64;
    (q as f64 * d * d.ln()).sqrt() + d.sqrt()
}

/// `c r (1 + 8 B B_x)^q q² (√(q d ln d) + √d) / √n` for rank-`r`, degree-`q`
/// Tensor Machines.
pub fn bound_rank_r(inp: &BoundInputs) -> Result<f64> {
    inp.validate()?;
    let q = inp.q as f64;
    Ok(inp.c
        * inp.r as f64
        * (1.0 + 8.0 * inp.b * inp.b_x).powi(inp.q as i32)
        * q
        * q
        * dimension_term(inp.d, inp.q)
        / (inp.n as f64).sqrt())
}

/// `c (8 B B_x)^q q (√(q d ln d) + √d) / √n` for the degree-`q` rank-one
/// class; `r` is ignored.
pub fn bound_rank_one(inp: &BoundInputs) -> Result<f64> {
    inp.validate()?;
    Ok(inp.c
        * (8.0 * inp.b * inp.b_x).powi(inp.q as i32)
        * inp.q as f64
        * dimension_term(inp.d, inp.q)
        / (inp.n as f64).sqrt())
}

/// `draws` independent vectors of `n` uniform ±1 signs.
pub fn draw_signs(n: usize, draws: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..draws)
        .map(|_| {
            (0..n)
                .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                .collect()
        })
        .collect()
}

/// Per-draw values with their mean and standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub per_draw: Vec<f64>,
    pub mean: f64,
    pub std_error: f64,
}

impl McEstimate {
    pub fn from_draws(per_draw: Vec<f64>) -> Self {
        let k = per_draw.len() as f64;
        let mean = per_draw.iter().sum::<f64>() / k;
        let std_error = if per_draw.len() > 1 {
            let var = per_draw.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
            (var / k).sqrt()
        } else {
            0.0
        };
        Self {
            per_draw,
            mean,
            std_error,
        }
    }
}

fn check_signs(points: &Matrix, signs: &[Vec<f64>]) -> Result<()> {
    if signs.is_empty() || points.rows() == 0 {
        return Err(Error::EmptyInput);
    }
    for s in signs {
        Error::check_dim(points.rows(), s.len())?;
    }
    Ok(())
}

fn check_radius(b: f64) -> Result<()> {
    if b > 0.0 && b.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("B must be positive and finite"))
    }
}

fn rows(points: &Matrix) -> Vec<&[f64]> {
    points.iter_rows().collect()
}

/// `(B^q / n) ‖T_σ‖` per sign draw, where `T_σ = Σ_i σ_i x_i^(q)`.
pub fn empirical_rademacher_upper(
    points: &Matrix,
    q: usize,
    b: f64,
    signs: &[Vec<f64>],
    norm_cfg: &PowerIteration,
) -> Result<McEstimate> {
    check_signs(points, signs)?;
    check_radius(b)?;
    let pts = rows(points);
    let scale = b.powi(q as i32) / points.rows() as f64;
    let per_draw = signs
        .iter()
        .map(|s| Ok(scale * spectral_norm(&rademacher_sum(&pts, s, q)?, norm_cfg)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(McEstimate::from_draws(per_draw))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentConfig {
    pub restarts: usize,
    /// Maximum sweeps over the `q` factor vectors per restart.
    pub sweeps: usize,
    /// Stop when a sweep improves the value by at most `tol` relative.
    pub tol: f64,
    pub seed: u64,
}

impl Default for AscentConfig {
    fn default() -> Self {
        Self {
            restarts: 20,
            sweeps: 500,
            tol: 1e-13,
            seed: 0,
        }
    }
}

/// Rank-one Tensor Machine whose only nonzero part is the degree-`q` term.
struct RankOne {
    params: TmParams,
    q: usize,
}

impl RankOne {
    fn new(d: usize, q: usize) -> Result<Self> {
        Ok(Self {
            params: TmParams::zeros(TmShape::new(d, q, 1)?),
            q,
        })
    }

    fn factor(&self, j: usize) -> &[f64] {
        if self.q == 1 {
            self.params.linear()
        } else {
            self.params.factor(self.q, 0, j)
        }
    }

    fn factor_mut(&mut self, j: usize) -> &mut [f64] {
        if self.q == 1 {
            self.params.linear_mut()
        } else {
            self.params.factor_mut(self.q, 0, j)
        }
    }

    /// `(1/n) Σ σ_i f(x_i)` and its gradient with respect to factor `j`.
    fn value_and_block_grad(
        &self,
        pts: &[&[f64]],
        signs: &[f64],
        j: usize,
    ) -> Result<(f64, Vec<f64>)> {
        let inv_n = 1.0 / pts.len() as f64;
        let mut value = 0.0;
        let mut grad = vec![0.0; self.factor(j).len()];
        for (x, &s) in pts.iter().zip(signs) {
            value += s * inv_n * self.params.evaluate(x)?;
            let g = self.params.grad_point(x, s * inv_n)?;
            let block = if self.q == 1 {
                g.linear()
            } else {
                g.factor(self.q, 0, j)
            };
            grad.iter_mut().zip(block).for_each(|(a, b)| *a += b);
        }
        Ok((value, grad))
    }

    fn value(&self, pts: &[&[f64]], signs: &[f64]) -> Result<f64> {
        let inv_n = 1.0 / pts.len() as f64;
        let mut v = 0.0;
        for (x, &s) in pts.iter().zip(signs) {
            v += s * inv_n * self.params.evaluate(x)?;
        }
        Ok(v)
    }
}

/// Best value of `(1/n) Σ σ_i Π_j ⟨ω_j, x_i⟩` over `‖ω_j‖ ≤ B` found by
/// projected block ascent, per sign draw.
///
/// The objective is linear in each block, so each block update takes a
/// gradient step long enough to reach the boundary and projects onto the
/// `B`-ball, i.e. `ω_j ← B g_j / ‖g_j‖`. Every value reported is attained by
/// feasible factors, so this is a lower estimate of the supremum.
pub fn empirical_rademacher_lower(
    points: &Matrix,
    q: usize,
    b: f64,
    signs: &[Vec<f64>],
    cfg: &AscentConfig,
) -> Result<McEstimate> {
    check_signs(points, signs)?;
    check_radius(b)?;
    if cfg.restarts == 0 || cfg.sweeps == 0 {
        return Err(Error::invalid("ascent needs restarts >= 1 and sweeps >= 1"));
    }
    let pts = rows(points);
    let d = points.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = RankOne::new(d, q)?;
    let mut per_draw = Vec::with_capacity(signs.len());
    for s in signs {
        let mut best = 0.0_f64;
        for _ in 0..cfg.restarts {
            for j in 0..q {
                let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                let n = norm2(&v);
                v.iter_mut().for_each(|x| *x *= b / n);
                model.factor_mut(j).copy_from_slice(&v);
            }
            let mut value = model.value(&pts, s)?;
            for _ in 0..cfg.sweeps {
                let before = value;
                for j in 0..q {
                    let (_, g) = model.value_and_block_grad(&pts, s, j)?;
                    let gn = norm2(&g);
                    if gn == 0.0 {
                        continue;
                    }
                    model
                        .factor_mut(j)
                        .iter_mut()
                        .zip(&g)
                        .for_each(|(w, gk)| *w = b * gk / gn);
                }
                value = model.value(&pts, s)?;
                if (value - before).abs() <= cfg.tol * value.abs() {
                    break;
                }
            }
            best = best.max(value);
        }
        per_draw.push(best);
    }
    Ok(McEstimate::from_draws(per_draw))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxEntryCheck {
    /// `max |T_σ entry|` per sign draw, with mean and standard error.
    pub lhs: McEstimate,
    /// `√n (max_i ‖x_i‖)^q`
    pub rhs: f64,
}

pub fn max_entry_check(points: &Matrix, q: usize, signs: &[Vec<f64>]) -> Result<MaxEntryCheck> {
    check_signs(points, signs)?;
    let pts = rows(points);
    let per_draw = signs
        .iter()
        .map(|s| Ok(rademacher_sum(&pts, s, q)?.max_abs_entry()))
        .collect::<Result<Vec<_>>>()?;
    let b_x = pts.iter().map(|x| norm2(x)).fold(0.0_f64, f64::max);
    Ok(MaxEntryCheck {
        lhs: McEstimate::from_draws(per_draw),
        rhs: (pts.len() as f64).sqrt() * b_x.powi(q as i32),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_arithmetic() {
        let inp = BoundInputs::new(1, 2, 1, 1.0, 1.0, 1).unwrap();
        assert_eq!(bound_rank_r(&inp).unwrap(), 324.0);
        let inp = BoundInputs::new(1, 1, 1, 1.0, 1.0, 1).unwrap();
        assert_eq!(bound_rank_one(&inp).unwrap(), 8.0);
        assert!(BoundInputs::new(0, 1, 1, 1.0, 1.0, 1).is_err());
        assert!(BoundInputs::new(1, 1, 1, -1.0, 1.0, 1).is_err());
    }

    #[test]
    fn signs_are_seeded() {
        let a = draw_signs(7, 3, 1);
        assert_eq!(a, draw_signs(7, 3, 1));
        assert!(a.iter().flatten().all(|&s| s == 1.0 || s == -1.0));
    }

    #[test]
    fn zero_points() {
        let x = Matrix::zeros(4, 3);
        let s = draw_signs(4, 5, 2);
        let up = empirical_rademacher_upper(&x, 2, 1.0, &s, &PowerIteration::default()).unwrap();
        assert!(up.per_draw.iter().all(|&v| v == 0.0));
        let lo = empirical_rademacher_lower(&x, 2, 1.0, &s, &AscentConfig::default()).unwrap();
        assert!(lo.per_draw.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mc_estimate_stats() {
        let e = McEstimate::from_draws(vec![1.0, 3.0]);
        assert_eq!(e.mean, 2.0);
        assert!((e.std_error - 1.0).abs() < 1e-15);
    }
}
