use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Seeded permutation of `0..n` cut into `k` near-equal disjoint folds; the
/// first `n % k` folds get one extra index.
pub fn kfold(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k == 0 || k > n {
        return Err(Error::invalid(format!(
            "need 1 <= k <= n, got k={k}, n={n}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(idx[start..start + len].to_vec());
        start += len;
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_folds() {
        let folds = kfold(10, 10, 1).unwrap();
        assert!(folds.iter().all(|f| f.len() == 1));
    }

    #[test]
    fn disjoint_cover() {
        let folds = kfold(23, 10, 3).unwrap();
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![3, 3, 3, 2, 2, 2, 2, 2, 2, 2]);
    }

    #[test]
    fn reproducible() {
        assert_eq!(kfold(50, 10, 9).unwrap(), kfold(50, 10, 9).unwrap());
        assert_ne!(kfold(50, 10, 9).unwrap(), kfold(50, 10, 10).unwrap());
    }

    #[test]
    fn k_larger_than_n() {
        assert!(kfold(3, 10, 0).is_err());
        assert!(kfold(3, 0, 0).is_err());
    }
}
