//! The Tensor Machine hypothesis
//!
//! ```text
//! f(x) = w0 + <w1, x> + Σ_{p=2..q} Σ_{i=1..r} Π_{j=1..p} <w_j^{p,i}, x>
//! ```
//!
//! Parameters live in one flat vector with a fixed order: bias, linear
//! weights, then the factor vectors sorted by degree, then rank slot, then
//! position within the product. Solvers work on that vector directly.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::matrix::dot;

/// Dimension, degree and rank of a Tensor Machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TmShape {
    pub dim: usize,
    pub degree: usize,
    pub rank: usize,
}

impl TmShape {
    pub fn new(dim: usize, degree: usize, rank: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if degree == 0 {
            return Err(Error::invalid("degree must be at least 1"));
        }
        Ok(Self { dim, degree, rank })
    }

    /// `1 + d + Σ_{p=2}^q p·r·d`.
    pub fn param_count(&self) -> usize {
        1 + self.dim + self.factor_len()
    }

    fn factor_len(&self) -> usize {
        (2..=self.degree).map(|p| p * self.rank * self.dim).sum()
    }

    /// Number of `(p, i)` rank-one terms.
    pub fn term_count(&self) -> usize {
        self.degree.saturating_sub(1) * self.rank
    }

    fn factor_offset(&self, p: usize, i: usize, j: usize) -> usize {
        debug_assert!(p >= 2 && p <= self.degree && i < self.rank && j < p);
        let before: usize = (2..p).map(|pp| pp * self.rank * self.dim).sum();
        1 + self.dim + before + (i * p + j) * self.dim
    }
}

macro_rules! block_accessors {
    ($t:ty) => {
        impl $t {
            pub fn shape(&self) -> TmShape {
                self.shape
            }

            pub fn bias(&self) -> f64 {
                self.values[0]
            }

            pub fn set_bias(&mut self, v: f64) {
                self.values[0] = v;
            }

            pub fn linear(&self) -> &[f64] {
                &self.values[1..1 + self.shape.dim]
            }

            pub fn linear_mut(&mut self) -> &mut [f64] {
                &mut self.values[1..1 + self.shape.dim]
            }

            /// Factor vector `w_j^{p,i}`, with `i` and `j` 0-based.
            pub fn factor(&self, p: usize, i: usize, j: usize) -> &[f64] {
                let o = self.shape.factor_offset(p, i, j);
                &self.values[o..o + self.shape.dim]
            }

            pub fn factor_mut(&mut self, p: usize, i: usize, j: usize) -> &mut [f64] {
                let o = self.shape.factor_offset(p, i, j);
                &mut self.values[o..o + self.shape.dim]
            }

            /// Everything after the bias: the regularized coordinates.
            pub fn regularized(&self) -> &[f64] {
                &self.values[1..]
            }

            /// Flat vector in the documented order.
            pub fn as_slice(&self) -> &[f64] {
                &self.values
            }

            pub fn as_mut_slice(&mut self) -> &mut [f64] {
                &mut self.values
            }
        }
    };
}

/// All learnable weights of a Tensor Machine.
#[derive(Debug, Clone, PartialEq)]
pub struct TmParams {
    shape: TmShape,
    values: Vec<f64>,
}

/// Partial derivatives with the same layout as [`TmParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct TmGradient {
    shape: TmShape,
    values: Vec<f64>,
}

block_accessors!(TmParams);
block_accessors!(TmGradient);

impl TmParams {
    pub fn zeros(shape: TmShape) -> Self {
        Self {
            shape,
            values: vec![0.0; shape.param_count()],
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.values.clone()
    }

    pub fn unflatten(values: Vec<f64>, shape: TmShape) -> Result<Self> {
        Error::check_dim(shape.param_count(), values.len())?;
        Ok(Self { shape, values })
    }

    /// Bias zero; every other coordinate i.i.d. `Normal(0, alpha²)`.
    pub fn init_random(shape: TmShape, alpha: f64, seed: u64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        let normal = Normal::new(0.0, alpha).map_err(|e| Error::invalid(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::zeros(shape);
        for v in &mut p.values[1..] {
            *v = normal.sample(&mut rng);
        }
        Ok(p)
    }

    /// Contribution of the single rank-one term `(p, i)` at `x`.
    pub fn term(&self, p: usize, i: usize, x: &[f64]) -> f64 {
        (0..p).map(|j| dot(self.factor(p, i, j), x)).product()
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        Error::check_dim(self.shape.dim, x.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("input point"));
        }
        Ok(self.evaluate_unchecked(x))
    }

    pub(crate) fn evaluate_unchecked(&self, x: &[f64]) -> f64 {
        let mut f = self.bias() + dot(self.linear(), x);
        for p in 2..=self.shape.degree {
            for i in 0..self.shape.rank {
                f += self.term(p, i, x);
            }
        }
        f
    }

    /// Evaluates `f(x)` and records every factor inner product in `dots`
    /// (flatten order) so the backward pass can reuse them.
    pub(crate) fn forward(&self, x: &[f64], dots: &mut Vec<f64>) -> f64 {
        dots.clear();
        let d = self.shape.dim;
        let mut f = self.bias() + dot(self.linear(), x);
        let mut o = 1 + d;
        for p in 2..=self.shape.degree {
            for _ in 0..self.shape.rank {
                let mut prod = 1.0;
                for _ in 0..p {
                    let s = dot(&self.values[o..o + d], x);
                    dots.push(s);
                    prod *= s;
                    o += d;
                }
                f += prod;
            }
        }
        f
    }

    /// Adds `dloss · ∂f/∂θ` at `x` into `grad`, given the inner products
    /// recorded by [`forward`](Self::forward).
    ///
    /// Leave-one-out products come from prefix and suffix products, so zero
    /// inner products are handled without division.
    pub(crate) fn backward(&self, x: &[f64], dots: &[f64], dloss: f64, grad: &mut TmGradient) {
        let d = self.shape.dim;
        grad.values[0] += dloss;
        for (g, xi) in grad.values[1..1 + d].iter_mut().zip(x) {
            *g += dloss * xi;
        }
        let mut o = 1 + d;
        let mut k = 0;
        let mut prefix = Vec::with_capacity(self.shape.degree);
        for p in 2..=self.shape.degree {
            for _ in 0..self.shape.rank {
                let s = &dots[k..k + p];
                prefix.clear();
                let mut acc = 1.0;
                for &v in s {
                    prefix.push(acc);
                    acc *= v;
                }
                let mut suffix = 1.0;
                for j in (0..p).rev() {
                    let c = dloss * prefix[j] * suffix;
                    suffix *= s[j];
                    if c != 0.0 {
                        let start = o + j * d;
                        for (g, xi) in grad.values[start..start + d].iter_mut().zip(x) {
                            *g += c * xi;
                        }
                    }
                }
                o += p * d;
                k += p;
            }
        }
    }

    /// Gradient of `dloss · f` at a single point.
    pub fn grad_point(&self, x: &[f64], dloss: f64) -> Result<TmGradient> {
        Error::check_dim(self.shape.dim, x.len())?;
        let mut dots = Vec::new();
        self.forward(x, &mut dots);
        let mut g = TmGradient::zeros(self.shape);
        self.backward(x, &dots, dloss, &mut g);
        Ok(g)
    }

    /// Writes the `tm v1` text format.
    pub fn write_model<W: Write>(&self, meta: &ModelMeta, mut w: W) -> Result<()> {
        let s = self.shape;
        let mut out = format!(
            "tm v1 {} {} {} {:?} {}\n",
            s.dim, s.degree, s.rank, meta.alpha, meta.seed
        );
        for v in &self.values {
            writeln!(out, "{v:?}").expect("writing to a String cannot fail");
        }
        w.write_all(out.as_bytes())?;
        Ok(())
    }

    pub fn read_model<R: BufRead>(r: R) -> Result<(Self, ModelMeta)> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::ModelFormat("missing header".into()))??;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 7 || fields[0] != "tm" || fields[1] != "v1" {
            return Err(Error::ModelFormat(format!("bad header `{header}`")));
        }
        let int = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::ModelFormat(format!("bad integer `{s}` in header")))
        };
        let shape = TmShape::new(int(fields[2])?, int(fields[3])?, int(fields[4])?)?;
        let alpha = fields[5]
            .parse::<f64>()
            .map_err(|_| Error::ModelFormat(format!("bad alpha `{}`", fields[5])))?;
        let seed = fields[6]
            .parse::<u64>()
            .map_err(|_| Error::ModelFormat(format!("bad seed `{}`", fields[6])))?;
        let mut values = Vec::with_capacity(shape.param_count());
        for (n, line) in lines.enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let v = t
                .parse::<f64>()
                .map_err(|_| Error::ModelFormat(format!("bad value `{t}` on line {}", n + 2)))?;
            values.push(v);
        }
        if values.len() != shape.param_count() {
            return Err(Error::ModelFormat(format!(
                "expected {} values, found {}",
                shape.param_count(),
                values.len()
            )));
        }
        Ok((Self { shape, values }, ModelMeta { alpha, seed }))
    }
}

impl TmGradient {
    pub fn zeros(shape: TmShape) -> Self {
        Self {
            shape,
            values: vec![0.0; shape.param_count()],
        }
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub(crate) fn clear(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// Header metadata carried by a saved model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelMeta {
    pub alpha: f64,
    pub seed: u64,
}
