#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use tensor_machines::tensor::{inner, segre, self_power, DenseTensor};
use tensor_machines::TmParams;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn unit_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let v = gaussian_vec(rng, n);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
/// `a` is row-major `n × n`.
pub fn dense_solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    assert_eq!(a.len(), n * n);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .unwrap();
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let p = a[col * n + col];
        assert!(p != 0.0, "singular system");
        for i in col + 1..n {
            let f = a[i * n + col] / p;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[i * n + k] -= f * a[col * n + k];
            }
            b[i] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i * n + k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i * n + i];
    }
    x
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Pair of unit vectors with the given inner product.
pub fn unit_pair(d: usize, cos: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let x = unit_vec(&mut r, d);
    let g = gaussian_vec(&mut r, d);
    let proj: f64 = g.iter().zip(&x).map(|(a, b)| a * b).sum();
    let u: Vec<f64> = g.iter().zip(&x).map(|(a, b)| a - proj * b).collect();
    let n = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    let s = (1.0 - cos * cos).sqrt();
    let y = x.iter().zip(&u).map(|(a, b)| cos * a + s * b / n).collect();
    (x, y)
}

/// `w0 + w1·x + Σ_p ⟨Σ_i segre(w^{p,i}), x^(p)⟩` on explicit tensors.
pub fn oracle_eval(p: &TmParams, x: &[f64]) -> f64 {
    let s = p.shape();
    let mut total = p.bias() + x.iter().zip(p.linear()).map(|(a, b)| a * b).sum::<f64>();
    if s.rank == 0 {
        return total;
    }
    for deg in 2..=s.degree {
        let mut acc = DenseTensor::zeros(deg, s.dim).unwrap();
        for i in 0..s.rank {
            let vs: Vec<&[f64]> = (0..deg).map(|j| p.factor(deg, i, j)).collect();
            let t = segre(&vs).unwrap();
            let summed: Vec<f64> = acc
                .entries()
                .iter()
                .zip(t.entries())
                .map(|(a, b)| a + b)
                .collect();
            acc = DenseTensor::from_entries(deg, s.dim, summed).unwrap();
        }
        total += inner(&acc, &self_power(x, deg).unwrap()).unwrap();
    }
    total
}
