//! Explicit dense tensors for small instances.
//!
//! Entries of a degree-`q`, dimension-`d` tensor are stored flat in row-major
//! order: the first index varies slowest. Every operation here touches all
//! `d^q` entries, so the module is only meant for desk-scale checks of the
//! factored model code and of the Rademacher-complexity inequalities.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::{dot, norm2};

/// Default upper limit on `d^q`.
pub const DEFAULT_ENTRY_CAP: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    degree: usize,
    dim: usize,
    entries: Vec<f64>,
}

fn entry_count(degree: usize, dim: usize, cap: usize) -> Result<usize> {
    if degree == 0 || dim == 0 {
        return Err(Error::invalid(
            "tensor degree and dimension must be positive",
        ));
    }
    let mut n: u128 = 1;
    for _ in 0..degree {
        n = n.saturating_mul(dim as u128);
        if n > cap as u128 {
            return Err(Error::SizeCap { entries: n, cap });
        }
    }
    Ok(n as usize)
}

impl DenseTensor {
    pub fn zeros(degree: usize, dim: usize) -> Result<Self> {
        Self::zeros_with_cap(degree, dim, DEFAULT_ENTRY_CAP)
    }

    pub fn zeros_with_cap(degree: usize, dim: usize, cap: usize) -> Result<Self> {
        let n = entry_count(degree, dim, cap)?;
        Ok(Self {
            degree,
            dim,
            entries: vec![0.0; n],
        })
    }

    pub fn from_entries(degree: usize, dim: usize, entries: Vec<f64>) -> Result<Self> {
        let n = entry_count(degree, dim, DEFAULT_ENTRY_CAP)?;
        Error::check_dim(n, entries.len())?;
        Ok(Self {
            degree,
            dim,
            entries,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Entry at a multi-index (0-based).
    pub fn get(&self, index: &[usize]) -> f64 {
        assert_eq!(index.len(), self.degree);
        let flat = index.iter().fold(0, |acc, &i| {
            assert!(i < self.dim);
            acc * self.dim + i
        });
        self.entries[flat]
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            entries: self.entries.iter().map(|v| c * v).collect(),
            ..self.clone()
        }
    }

    pub fn frobenius(&self) -> f64 {
        norm2(&self.entries)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    fn add_assign_scaled(&mut self, other: &DenseTensor, c: f64) {
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += c * b;
        }
    }

    /// Contracts every mode except `skip` against the matching vector.
    fn contract_except(&self, vectors: &[Vec<f64>], skip: usize) -> Vec<f64> {
        let (q, d) = (self.degree, self.dim);
        let mut out = vec![0.0; d];
        let mut index = vec![0usize; q];
        for &t in &self.entries {
            if t != 0.0 {
                let mut w = t;
                for (mode, &i) in index.iter().enumerate() {
                    if mode != skip {
                        w *= vectors[mode][i];
                    }
                }
                out[index[skip]] += w;
            }
            // odometer increment, last index fastest
            for slot in index.iter_mut().rev() {
                *slot += 1;
                if *slot < d {
                    break;
                }
                *slot = 0;
            }
        }
        out
    }
}

/// Segre outer product `v_1 • … • v_q`.
pub fn segre<V: AsRef<[f64]>>(vectors: &[V]) -> Result<DenseTensor> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::invalid("segre needs at least one vector"))?;
    let d = first.as_ref().len();
    for v in vectors {
        Error::check_dim(d, v.as_ref().len())?;
    }
    let mut t = DenseTensor::zeros(vectors.len(), d)?;
    // Build by repeated Kronecker expansion: the slowest index is expanded first.
    let mut cur = vec![1.0];
    for v in vectors {
        let v = v.as_ref();
        let mut next = Vec::with_capacity(cur.len() * d);
        for &c in &cur {
            next.extend(v.iter().map(|&x| c * x));
        }
        cur = next;
    }
    t.entries = cur;
    Ok(t)
}

/// Self outer power `x^(q)`, holding every degree-`q` monomial of `x`.
pub fn self_power(x: &[f64], q: usize) -> Result<DenseTensor> {
    if q == 0 {
        return Err(Error::invalid("self_power degree must be at least 1"));
    }
    entry_count(q, x.len(), DEFAULT_ENTRY_CAP)?;
    let copies = vec![x; q];
    segre(&copies)
}

pub fn inner(a: &DenseTensor, b: &DenseTensor) -> Result<f64> {
    Error::check_dim(a.degree, b.degree)?;
    Error::check_dim(a.dim, b.dim)?;
    Ok(dot(&a.entries, &b.entries))
}

/// `Σ_i σ_i x_i^(q)`.
pub fn rademacher_sum<P: AsRef<[f64]>>(
    points: &[P],
    signs: &[f64],
    q: usize,
) -> Result<DenseTensor> {
    Error::check_dim(points.len(), signs.len())?;
    let first = points.first().ok_or(Error::EmptyInput)?;
    let d = first.as_ref().len();
    let mut t = DenseTensor::zeros(q, d)?;
    for (x, &s) in points.iter().zip(signs) {
        Error::check_dim(d, x.as_ref().len())?;
        t.add_assign_scaled(&self_power(x.as_ref(), q)?, s);
    }
    Ok(t)
}

/// Settings for the higher-order power method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIteration {
    pub restarts: usize,
    pub iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for PowerIteration {
    fn default() -> Self {
        Self {
            restarts: 10,
            iters: 200,
            tol: 1e-10,
            seed: 0x5eed,
        }
    }
}

/// Best value of `|<T, v_1 • … • v_q>|` over unit vectors found by alternating
/// rank-one updates from several random starts.
///
/// For `q >= 3` the result is attained by some unit vectors, so it never
/// exceeds the true spectral norm. For `q = 2` the norm is the largest
/// singular value, computed directly.
pub fn spectral_norm(t: &DenseTensor, cfg: &PowerIteration) -> Result<f64> {
    if cfg.restarts == 0 || cfg.iters == 0 {
        return Err(Error::invalid(
            "power iteration needs restarts >= 1 and iters >= 1",
        ));
    }
    if t.entries.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("tensor entries"));
    }
    if t.degree == 1 {
        return Ok(t.frobenius());
    }
    if t.entries.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }

    let (q, d) = (t.degree, t.dim);
    if q == 2 {
        let m = nalgebra::DMatrix::from_row_slice(d, d, &t.entries);
        return Ok(m.singular_values().max());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best = 0.0_f64;
    for _ in 0..cfg.restarts {
        let mut vs: Vec<Vec<f64>> = (0..q)
            .map(|_| {
                let mut v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                let n = norm2(&v);
                v.iter_mut().for_each(|x| *x /= n);
                v
            })
            .collect();
        let mut value = 0.0_f64;
        for _ in 0..cfg.iters {
            let mut shift = 0.0_f64;
            let mut sweep_value = 0.0;
            for mode in 0..q {
                let c = t.contract_except(&vs, mode);
                let n = norm2(&c);
                if n == 0.0 {
                    sweep_value = 0.0;
                    break;
                }
                let delta: f64 = c
                    .iter()
                    .zip(&vs[mode])
                    .map(|(a, b)| (a / n - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                shift = shift.max(delta);
                vs[mode] = c.into_iter().map(|a| a / n).collect();
                sweep_value = n;
            }
            let change = (sweep_value - value).abs();
            value = sweep_value;
            if value == 0.0 || (change <= cfg.tol * value && shift <= cfg.tol.sqrt()) {
                break;
            }
        }
        best = best.max(value);
    }
    Ok(best)
}
