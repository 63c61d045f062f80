//! Kar–Karnick random polynomial features and a Gaussian down-projection
//! in the style of CRAFTMaps.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegreePolicy {
    /// Every feature has the full degree `q`.
    Homogeneous,
    /// Features split evenly over degrees `1..=q` (remainder to the lowest
    /// degrees) plus one constant feature.
    Stratified,
}

impl DegreePolicy {
    pub fn as_str(&self) -> &'static str {
        match self {
            DegreePolicy::Homogeneous => "homogeneous",
            DegreePolicy::Stratified => "stratified",
        }
    }
}

impl FromStr for DegreePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "homogeneous" => Ok(DegreePolicy::Homogeneous),
            "stratified" => Ok(DegreePolicy::Stratified),
            _ => Err(Error::invalid(format!("unknown degree policy `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct RandomFeature {
    degree: usize,
    /// `degree` sign vectors of length d, concatenated.
    signs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub seed: u64,
    /// `up × down`, row-major.
    pub matrix: Matrix,
}

/// A realized random feature map.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    dim: usize,
    degree: usize,
    seed: u64,
    policy: DegreePolicy,
    features: Vec<RandomFeature>,
    constant: bool,
    scale: f64,
    projection: Option<Projection>,
}

/// Draws `r` sign-vector features for inputs of dimension `d`.
pub fn kk_map(seed: u64, d: usize, q: usize, r: usize, policy: DegreePolicy) -> Result<FeatureMap> {
    if r == 0 || d == 0 || q == 0 {
        return Err(Error::invalid("kk_map needs d, q, r >= 1"));
    }
    let degrees: Vec<usize> = match policy {
        DegreePolicy::Homogeneous => vec![q; r],
        DegreePolicy::Stratified => {
            let (base, extra) = (r / q, r % q);
            (1..=q)
                .flat_map(|p| std::iter::repeat_n(p, base + usize::from(p <= extra)))
                .collect()
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features = degrees
        .into_iter()
        .map(|p| RandomFeature {
            degree: p,
            signs: (0..p * d)
                .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                .collect(),
        })
        .collect();
    Ok(FeatureMap {
        dim: d,
        degree: q,
        seed,
        policy,
        features,
        constant: policy == DegreePolicy::Stratified,
        scale: 1.0 / (r as f64).sqrt(),
        projection: None,
    })
}

impl FeatureMap {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of random (non-constant) features `r`.
    pub fn feature_count(&self) -> usize {
        self.features.len()
    }

    pub fn feature_degrees(&self) -> Vec<usize> {
        self.features.iter().map(|f| f.degree).collect()
    }

    pub fn has_constant(&self) -> bool {
        self.constant
    }

    pub fn projection(&self) -> Option<&Projection> {
        self.projection.as_ref()
    }

    /// Columns produced by [`apply_map`].
    pub fn output_dim(&self) -> usize {
        let random = self
            .projection
            .as_ref()
            .map_or(self.features.len(), |p| p.matrix.cols());
        random + usize::from(self.constant)
    }

    /// Sign vector `j` of feature `f`.
    pub fn signs(&self, f: usize, j: usize) -> &[f64] {
        &self.features[f].signs[j * self.dim..(j + 1) * self.dim]
    }

    /// Unprojected random features of one point, scaled by `1/√r`.
    fn raw_features(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for feat in &self.features {
            let prod: f64 = feat
                .signs
                .chunks_exact(self.dim)
                .map(|w| dot(w, x))
                .product();
            out.push(self.scale * prod);
        }
    }

    pub fn descriptor(&self) -> FeatureMapDescriptor {
        FeatureMapDescriptor {
            seed: self.seed,
            dim: self.dim,
            degree: self.degree,
            features: self.features.len(),
            policy: self.policy,
            projection: self
                .projection
                .as_ref()
                .map(|p| (p.seed, p.matrix.rows(), p.matrix.cols())),
        }
    }
}

/// Row `i` holds the scaled features of `x_i`; with a projection the random
/// features are multiplied by it. A constant feature, when present, is the
/// last column and equals `1/√r`.
pub fn apply_map(map: &FeatureMap, x: &Matrix) -> Result<Matrix> {
    Error::check_dim(map.dim, x.cols())?;
    let mut raw = Matrix::zeros(x.rows(), map.features.len());
    let mut buf = Vec::with_capacity(map.features.len());
    for i in 0..x.rows() {
        map.raw_features(x.row(i), &mut buf);
        raw.row_mut(i).copy_from_slice(&buf);
    }
    let random = match &map.projection {
        Some(p) => raw.matmul(&p.matrix)?,
        None => raw,
    };
    if !map.constant {
        return Ok(random);
    }
    let k = random.cols();
    let mut out = Matrix::zeros(x.rows(), k + 1);
    for i in 0..x.rows() {
        let row = out.row_mut(i);
        row[..k].copy_from_slice(random.row(i));
        row[k] = map.scale;
    }
    Ok(out)
}

/// Attaches an `R_up × R_up/4` projection with i.i.d. `Normal(0, 1/R_down)`
/// entries, where `R_up` is the map's random feature count.
pub fn craftmaps_project(map_up: &FeatureMap, seed: u64) -> Result<FeatureMap> {
    let up = map_up.features.len();
    if up % 4 != 0 {
        return Err(Error::invalid(format!(
            "up-projection size {up} is not divisible by 4"
        )));
    }
    if map_up.projection.is_some() {
        return Err(Error::invalid("feature map is already projected"));
    }
    let down = up / 4;
    let normal = Normal::new(0.0, 1.0 / (down as f64).sqrt()).expect("positive sd");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..up * down).map(|_| normal.sample(&mut rng)).collect();
    let mut out = map_up.clone();
    out.projection = Some(Projection {
        seed,
        matrix: Matrix::from_vec(up, down, data)?,
    });
    Ok(out)
}

/// Everything needed to regenerate a [`FeatureMap`]:
/// `kk v1 <seed> <d> <q> <r> <policy> [proj <seed> <up> <down>]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureMapDescriptor {
    pub seed: u64,
    pub dim: usize,
    pub degree: usize,
    pub features: usize,
    pub policy: DegreePolicy,
    pub projection: Option<(u64, usize, usize)>,
}

impl FeatureMapDescriptor {
    pub fn build(&self) -> Result<FeatureMap> {
        let map = kk_map(self.seed, self.dim, self.degree, self.features, self.policy)?;
        match self.projection {
            None => Ok(map),
            Some((seed, up, down)) => {
                if up != self.features || down * 4 != up {
                    return Err(Error::invalid("projection dimensions do not match the map"));
                }
                craftmaps_project(&map, seed)
            }
        }
    }
}

impl fmt::Display for FeatureMapDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "kk v1 {} {} {} {} {}",
            self.seed,
            self.dim,
            self.degree,
            self.features,
            self.policy.as_str()
        )?;
        if let Some((s, u, d)) = self.projection {
            write!(f, " proj {s} {u} {d}")?;
        }
        Ok(())
    }
}

impl FromStr for FeatureMapDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t: Vec<&str> = s.split_whitespace().collect();
        let bad = || Error::invalid(format!("bad feature map descriptor `{s}`"));
        if !(t.len() == 7 || t.len() == 11) || t[0] != "kk" || t[1] != "v1" {
            return Err(bad());
        }
        let num = |i: usize| t[i].parse::<u64>().map_err(|_| bad());
        let projection = if t.len() == 11 {
            if t[7] != "proj" {
                return Err(bad());
            }
            Some((num(8)?, num(9)? as usize, num(10)? as usize))
        } else {
            None
        };
        Ok(Self {
            seed: num(2)?,
            dim: num(3)? as usize,
            degree: num(4)? as usize,
            features: num(5)? as usize,
            policy: t[6].parse()?,
            projection,
        })
    }
}
