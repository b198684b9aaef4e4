//! Input distributions for the vector-balancing settings.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm2, outer};
use crate::potential::{AtomTag, TestAtom, TestDistribution};
use crate::rng::{stream_rng, Stream};

/// A mean-zero input distribution supported in the unit ball. Every draw is
/// multiplied by an independent fair sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InputSpec {
    /// `s` random coordinates set to `+-1/sqrt(s)`.
    Sparse(usize),
    /// Uniform on `{+-1/sqrt(n)}^n`.
    Hypercube,
    /// Uniform on the unit sphere.
    Sphere,
    /// Uniform over a fixed list of vectors.
    Finite(Vec<Vec<f64>>),
}

impl InputSpec {
    /// `sparse:S`, `hypercube`, `sphere`, `e1`, or `finite:PATH` (one
    /// whitespace- or comma-separated vector per line).
    pub fn parse(spec: &str, n: usize) -> Result<Self> {
        let spec = spec.trim();
        if let Some(s) = spec.strip_prefix("sparse:") {
            let s: usize = s.parse().map_err(|_| Error::Config(format!("bad sparsity in `{spec}`")))?;
            if s == 0 || s > n {
                return Err(Error::Config(format!("sparsity {s} must lie in 1..={n}")));
            }
            return Ok(Self::Sparse(s));
        }
        if let Some(path) = spec.strip_prefix("finite:") {
            let text = std::fs::read_to_string(path)?;
            let vectors = text
                .lines()
                .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
                .map(|l| {
                    l.split(|c: char| c == ',' || c.is_whitespace())
                        .filter(|c| !c.is_empty())
                        .map(|c| c.parse::<f64>().map_err(|_| Error::Config(format!("bad number `{c}`"))))
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            return Self::finite(vectors, n);
        }
        match spec {
            "hypercube" => Ok(Self::Hypercube),
            "sphere" => Ok(Self::Sphere),
            "e1" => {
                let mut e = vec![0.0; n];
                e[0] = 1.0;
                Ok(Self::Finite(vec![e]))
            }
            other => Err(Error::Config(format!("unknown input distribution `{other}`"))),
        }
    }

    pub fn finite(vectors: Vec<Vec<f64>>, n: usize) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::Config("finite input list is empty".into()));
        }
        for v in &vectors {
            if v.len() != n {
                return Err(Error::Config(format!("input vector of length {} (expected {n})", v.len())));
            }
            if norm2(v) > 1.0 + 1e-9 {
                return Err(Error::InvalidInput(format!("input vector of norm {} exceeds 1", norm2(v))));
            }
        }
        Ok(Self::Finite(vectors))
    }

    pub fn name(&self) -> String {
        match self {
            Self::Sparse(s) => format!("sparse:{s}"),
            Self::Hypercube => "hypercube".into(),
            Self::Sphere => "sphere".into(),
            Self::Finite(v) => format!("finite[{}]", v.len()),
        }
    }

    /// One draw, including the symmetrizing sign.
    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Vec<f64> {
        let mut v = match self {
            Self::Sparse(s) => {
                let mut v = vec![0.0; n];
                let val = 1.0 / (*s as f64).sqrt();
                for i in sample(rng, n, *s) {
                    v[i] = if rng.random::<bool>() { val } else { -val };
                }
                v
            }
            Self::Hypercube => {
                let val = 1.0 / (n as f64).sqrt();
                (0..n).map(|_| if rng.random::<bool>() { val } else { -val }).collect()
            }
            Self::Sphere => loop {
                let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                let r = norm2(&g);
                if r > 0.0 {
                    break g.into_iter().map(|x| x / r).collect();
                }
            },
            Self::Finite(list) => list[rng.random_range(0..list.len())].clone(),
        };
        if rng.random::<bool>() {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        v
    }

    /// `E[v v^T]` where it is known in closed form.
    pub fn covariance(&self, n: usize) -> DMatrix<f64> {
        match self {
            Self::Sparse(_) | Self::Hypercube | Self::Sphere => DMatrix::identity(n, n) / n as f64,
            Self::Finite(list) => {
                let mut s = DMatrix::zeros(n, n);
                for v in list {
                    s += outer(v, v);
                }
                s / list.len() as f64
            }
        }
    }

    /// Atoms standing in for the input distribution in the potential: exact
    /// (sign-symmetrized) support for finite inputs, otherwise `m` frozen
    /// draws from the pool stream.
    pub fn pool(&self, n: usize, m: usize, seed: u64) -> Result<TestDistribution> {
        match self {
            Self::Finite(list) => {
                let w = 0.5 / list.len() as f64;
                let atoms = list
                    .iter()
                    .flat_map(|v| {
                        [
                            TestAtom { vector: v.clone(), weight: w, tag: AtomTag::InputSurrogate },
                            TestAtom {
                                vector: v.iter().map(|x| -x).collect(),
                                weight: w,
                                tag: AtomTag::InputSurrogate,
                            },
                        ]
                    })
                    .collect();
                TestDistribution::new(atoms)
            }
            _ => {
                let mut rng = stream_rng(seed, Stream::Pool);
                let vectors = (0..m.max(1)).map(|_| self.sample(n, &mut rng)).collect();
                TestDistribution::uniform(vectors, AtomTag::InputSurrogate)
            }
        }
    }
}

/// Seeded i.i.d. sampler on the input stream.
#[derive(Debug, Clone)]
pub struct InputSampler {
    spec: InputSpec,
    n: usize,
    rng: ChaCha8Rng,
}

impl InputSampler {
    pub fn new(spec: InputSpec, n: usize, seed: u64) -> Self {
        Self::with_rng(spec, n, stream_rng(seed, Stream::Input))
    }

    pub fn with_rng(spec: InputSpec, n: usize, rng: ChaCha8Rng) -> Self {
        Self { spec, n, rng }
    }

    pub fn next_vector(&mut self) -> Vec<f64> {
        self.spec.sample(self.n, &mut self.rng)
    }

    pub fn spec(&self) -> &InputSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.n
    }
}

impl Iterator for InputSampler {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        Some(self.next_vector())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hypercube_and_sparse_shapes() {
        let mut s = InputSampler::new(InputSpec::Hypercube, 4, 1);
        for _ in 0..20 {
            let v = s.next_vector();
            assert!(v.iter().all(|x| (x.abs() - 0.5).abs() < 1e-15));
            assert!((norm2(&v) - 1.0).abs() < 1e-12);
        }
        let mut s = InputSampler::new(InputSpec::Sparse(4), 64, 2);
        for _ in 0..20 {
            let v = s.next_vector();
            let nz: Vec<f64> = v.iter().copied().filter(|x| *x != 0.0).collect();
            assert_eq!(nz.len(), 4);
            assert!(nz.iter().all(|x| (x.abs() - 0.5).abs() < 1e-15));
        }
    }

    #[test]
    fn empirical_mean_is_small() {
        for spec in [InputSpec::Sparse(4), InputSpec::Hypercube, InputSpec::Sphere] {
            let mut s = InputSampler::new(spec.clone(), 16, 3);
            let mut mean = vec![0.0; 16];
            let m = 100_000;
            for _ in 0..m {
                crate::linalg::axpy(&mut mean, 1.0 / m as f64, &s.next_vector());
            }
            assert!(norm2(&mean) <= 0.02, "{spec:?}: {}", norm2(&mean));
        }
    }

    #[test]
    fn parse_specs() {
        assert_eq!(InputSpec::parse("sparse:4", 16).unwrap(), InputSpec::Sparse(4));
        assert!(InputSpec::parse("sparse:40", 16).is_err());
        assert!(InputSpec::parse("gauss", 16).is_err());
        assert_eq!(InputSpec::parse("e1", 2).unwrap(), InputSpec::Finite(vec![vec![1.0, 0.0]]));
    }

    #[test]
    fn finite_pool_is_exact() {
        let spec = InputSpec::finite(vec![vec![0.6, 0.8], vec![1.0, 0.0]], 2).unwrap();
        let pool = spec.pool(2, 512, 0).unwrap();
        assert_eq!(pool.len(), 4);
        assert!((pool.total_weight() - 1.0).abs() < 1e-12);
    }
}
