//! Limited-memory BFGS with a strong Wolfe line search.
//!
//! The line search is the bracketing/zoom scheme from Nocedal & Wright
//! (Algorithms 3.5 and 3.6) with safeguarded cubic interpolation.

use std::collections::VecDeque;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::matrix::dot;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsConfig {
    pub max_iters: usize,
    pub memory: usize,
    pub c1: f64,
    pub c2: f64,
    /// Stop when `‖g‖∞` falls to this value.
    pub grad_tol: f64,
    /// Stop when the relative objective decrease falls to this value.
    pub objective_rel_tol: f64,
    /// Function evaluations allowed inside one zoom phase.
    pub max_zoom: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            memory: 10,
            c1: 1e-4,
            c2: 0.9,
            grad_tol: 1e-6,
            objective_rel_tol: 1e-9,
            max_zoom: 50,
        }
    }
}

impl LbfgsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(Error::invalid("Wolfe constants need 0 < c1 < c2 < 1"));
        }
        if self.memory == 0 {
            return Err(Error::invalid("L-BFGS memory must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradTol,
    ObjectiveTol,
    MaxIters,
    /// The line search could not satisfy the Wolfe conditions; the best
    /// iterate found is returned.
    LineSearchFailed,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::GradTol => "grad_tol",
            Termination::ObjectiveTol => "objective_tol",
            Termination::MaxIters => "max_iters",
            Termination::LineSearchFailed => "line_search_failed",
        }
    }
}

/// One accepted step: `f(x_k + α d) ≤ f(x_k) + c1 α gᵀd` must hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub alpha: f64,
    pub dir_deriv: f64,
}

#[derive(Debug, Clone)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad: Vec<f64>,
    pub iterations: usize,
    pub termination: Termination,
    /// Objective at x_0, x_1, …
    pub objective_trace: Vec<f64>,
    pub grad_norm_trace: Vec<f64>,
    /// Seconds since start at each trace point.
    pub seconds_trace: Vec<f64>,
    pub steps: Vec<StepRecord>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

struct Probe {
    alpha: f64,
    value: f64,
    deriv: f64,
    x: Vec<f64>,
    grad: Vec<f64>,
}

/// Minimizer of the cubic through `(a, fa, da)` and `(b, fb, db)`, or `None`
/// when it is not well defined.
fn cubic_min(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> Option<f64> {
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    if disc < 0.0 {
        return None;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    t.is_finite().then_some(t)
}

struct LineSearch<'a, F> {
    f: &'a mut F,
    x: &'a [f64],
    dir: &'a [f64],
    f0: f64,
    d0: f64,
    cfg: &'a LbfgsConfig,
    /// Lowest-value probe satisfying sufficient decrease.
    best: Option<Probe>,
}

enum Search {
    Accepted(Probe),
    Failed(Option<Probe>),
}

impl<F> LineSearch<'_, F>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<f64>,
{
    fn probe(&mut self, alpha: f64) -> Result<Probe> {
        let x: Vec<f64> = self
            .x
            .iter()
            .zip(self.dir)
            .map(|(xi, di)| xi + alpha * di)
            .collect();
        let mut grad = vec![0.0; x.len()];
        let value = (self.f)(&x, &mut grad)?;
        let deriv = dot(&grad, self.dir);
        Ok(Probe {
            alpha,
            value,
            deriv,
            x,
            grad,
        })
    }

    fn armijo(&self, p: &Probe) -> bool {
        p.value <= self.f0 + self.cfg.c1 * p.alpha * self.d0
    }

    fn curvature(&self, p: &Probe) -> bool {
        p.deriv.abs() <= -self.cfg.c2 * self.d0
    }

    fn remember(&mut self, p: &Probe) {
        if self.armijo(p) && self.best.as_ref().is_none_or(|b| p.value < b.value) {
            self.best = Some(Probe {
                x: p.x.clone(),
                grad: p.grad.clone(),
                ..*p
            });
        }
    }

    fn run(mut self, alpha0: f64) -> Result<Search> {
        let mut prev = Probe {
            alpha: 0.0,
            value: self.f0,
            deriv: self.d0,
            x: Vec::new(),
            grad: Vec::new(),
        };
        let mut alpha = alpha0;
        for i in 0..self.cfg.max_zoom {
            let cur = match self.probe(alpha) {
                Ok(p) if p.value.is_finite() => p,
                // shrink into the finite region
                Ok(_) | Err(Error::NonFinite(_)) => {
                    alpha = 0.5 * (prev.alpha + alpha);
                    continue;
                }
                Err(e) => return Err(e),
            };
            self.remember(&cur);
            if !self.armijo(&cur) || (i > 0 && cur.value >= prev.value) {
                return self.zoom(prev, cur);
            }
            if self.curvature(&cur) {
                return Ok(Search::Accepted(cur));
            }
            if cur.deriv >= 0.0 {
                return self.zoom(cur, prev);
            }
            prev = cur;
            alpha *= 2.0;
        }
        Ok(Search::Failed(self.best))
    }

    fn zoom(mut self, mut lo: Probe, mut hi: Probe) -> Result<Search> {
        for _ in 0..self.cfg.max_zoom {
            let (a, b) = (lo.alpha.min(hi.alpha), lo.alpha.max(hi.alpha));
            let width = b - a;
            if width <= f64::EPSILON * b.max(1.0) {
                break;
            }
            let mut t = cubic_min(lo.alpha, lo.value, lo.deriv, hi.alpha, hi.value, hi.deriv)
                .unwrap_or(0.5 * (a + b));
            // keep the trial away from the interval ends
            let margin = 0.1 * width;
            if !(t > a + margin && t < b - margin) {
                t = 0.5 * (a + b);
            }
            let cur = match self.probe(t) {
                Ok(p) if p.value.is_finite() => p,
                Ok(_) | Err(Error::NonFinite(_)) => {
                    hi = Probe {
                        alpha: t,
                        value: f64::INFINITY,
                        deriv: f64::NAN,
                        x: Vec::new(),
                        grad: Vec::new(),
                    };
                    continue;
                }
                Err(e) => return Err(e),
            };
            self.remember(&cur);
            if !self.armijo(&cur) || cur.value >= lo.value {
                hi = cur;
            } else {
                if self.curvature(&cur) {
                    return Ok(Search::Accepted(cur));
                }
                if cur.deriv * (hi.alpha - lo.alpha) >= 0.0 {
                    hi = lo;
                }
                lo = cur;
            }
        }
        Ok(Search::Failed(self.best))
    }
}

/// Minimizes `f`, which writes the gradient into its second argument and
/// returns the value.
pub fn minimize<F>(x0: Vec<f64>, mut f: F, cfg: &LbfgsConfig) -> Result<LbfgsOutcome>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<f64>,
{
    cfg.validate()?;
    let start = Instant::now();
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g)?;
    if !fx.is_finite() {
        return Err(Error::NonFinite("objective at the initial point"));
    }

    let mut out = LbfgsOutcome {
        x: Vec::new(),
        value: fx,
        grad: Vec::new(),
        iterations: 0,
        termination: Termination::MaxIters,
        objective_trace: vec![fx],
        grad_norm_trace: vec![inf_norm(&g)],
        seconds_trace: vec![start.elapsed().as_secs_f64()],
        steps: Vec::new(),
    };
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.memory);

    let termination = loop {
        if inf_norm(&g) <= cfg.grad_tol {
            break Termination::GradTol;
        }
        if out.iterations >= cfg.max_iters {
            break Termination::MaxIters;
        }

        let mut dir = two_loop(&g, &pairs);
        let mut d0 = dot(&g, &dir);
        if !(d0 < 0.0) {
            pairs.clear();
            dir = g.iter().map(|v| -v).collect();
            d0 = dot(&g, &dir);
        }
        let alpha0 = if pairs.is_empty() {
            (1.0 / crate::matrix::norm2(&g)).min(1.0)
        } else {
            1.0
        };

        let search = LineSearch {
            f: &mut f,
            x: &x,
            dir: &dir,
            f0: fx,
            d0,
            cfg,
            best: None,
        }
        .run(alpha0)?;

        let (probe, failed) = match search {
            Search::Accepted(p) => (p, false),
            Search::Failed(Some(p)) if p.value < fx => (p, true),
            Search::Failed(_) => break Termination::LineSearchFailed,
        };

        out.steps.push(StepRecord {
            alpha: probe.alpha,
            dir_deriv: d0,
        });
        let s: Vec<f64> = probe.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = probe.grad.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * crate::matrix::norm2(&s) * crate::matrix::norm2(&y) && sy > 0.0 {
            if pairs.len() == cfg.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }

        let prev = fx;
        x = probe.x;
        g = probe.grad;
        fx = probe.value;
        out.iterations += 1;
        out.objective_trace.push(fx);
        out.grad_norm_trace.push(inf_norm(&g));
        out.seconds_trace.push(start.elapsed().as_secs_f64());

        if failed {
            break Termination::LineSearchFailed;
        }
        if (prev - fx).abs() <= cfg.objective_rel_tol * prev.abs().max(fx.abs()).max(1.0) {
            break Termination::ObjectiveTol;
        }
    };

    out.termination = termination;
    out.value = fx;
    out.x = x;
    out.grad = g;
    Ok(out)
}

/// `−H g` with the implicit inverse-Hessian approximation.
fn two_loop(g: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}
