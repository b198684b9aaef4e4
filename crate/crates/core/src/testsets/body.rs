//! Symmetric convex bodies described through a finite cloud of polar points.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2};
use crate::rng::{stream_rng, Stream};

pub const POLAR_TOL: f64 = 1e-9;
pub const DEFAULT_GAMMA_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BodyKind {
    /// `rho * B_2` with `rho = sqrt(n)`.
    EuclideanBall,
    /// `rho * [-1, 1]^n` with `rho = sqrt(2 ln 2n)`.
    ScaledCube,
    /// `K = {x : |<x, y>| <= 1 for every cloud point y}`.
    CustomPolarCloud,
    /// All of `R^n`; the polar is the origin.
    WholeSpace,
}

impl BodyKind {
    pub fn name(self) -> &'static str {
        match self {
            BodyKind::EuclideanBall => "ball",
            BodyKind::ScaledCube => "cube",
            BodyKind::CustomPolarCloud => "custom",
            BodyKind::WholeSpace => "whole",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ball" => Ok(BodyKind::EuclideanBall),
            "cube" => Ok(BodyKind::ScaledCube),
            "custom" => Ok(BodyKind::CustomPolarCloud),
            "whole" => Ok(BodyKind::WholeSpace),
            other => Err(Error::InvalidInput(format!("unknown body kind `{other}`"))),
        }
    }
}

/// Monte Carlo estimate of the standard Gaussian measure of a body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMeasure {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl GaussianMeasure {
    pub fn exact(value: f64) -> Self {
        Self { estimate: value, stderr: 0.0, samples: 0 }
    }

    /// Whether the estimate is compatible with measure at least 1/2.
    pub fn admits_half(&self) -> bool {
        self.estimate >= 0.5 - 2.0 * self.stderr
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BodyOptions {
    pub cloud_size: Option<usize>,
    pub gamma_samples: usize,
    pub seed: u64,
}

impl Default for BodyOptions {
    fn default() -> Self {
        Self { cloud_size: None, gamma_samples: DEFAULT_GAMMA_SAMPLES, seed: 0 }
    }
}

/// Cloud size used when none is given: dense enough that the best cloud
/// direction is within a few percent of any target direction up to n = 8.
pub fn default_cloud_size(n: usize) -> usize {
    (2048 * n).clamp(4096, 32_768)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexBodyRep {
    pub kind: BodyKind,
    pub n: usize,
    /// Scale of the body; 1 for custom clouds and the whole space.
    pub rho: f64,
    /// Points of `K°`, closed under negation.
    pub polar_cloud: Vec<Vec<f64>>,
    pub gamma: GaussianMeasure,
}

/// Builds a body, estimates its Gaussian measure, and rejects it when the
/// measure is clearly below 1/2.
pub fn build_body(kind: BodyKind, n: usize, opts: &BodyOptions) -> Result<ConvexBodyRep> {
    if n == 0 {
        return Err(Error::InvalidInput("body dimension must be positive".into()));
    }
    let mut rng = stream_rng(opts.seed, Stream::Body);
    let m = opts.cloud_size.unwrap_or_else(|| default_cloud_size(n));
    let (rho, cloud) = match kind {
        BodyKind::EuclideanBall => {
            let rho = (n as f64).sqrt();
            let mut cloud = Vec::with_capacity(m + 2 * n);
            for i in 0..n {
                for s in [1.0, -1.0] {
                    let mut e = vec![0.0; n];
                    e[i] = s / rho;
                    cloud.push(e);
                }
            }
            while cloud.len() < m.max(2 * n) {
                let g = gaussian_vec(&mut rng, n);
                let r = norm2(&g);
                if r > 0.0 {
                    cloud.push(g.iter().map(|x| x / (r * rho)).collect());
                }
            }
            (rho, cloud)
        }
        BodyKind::ScaledCube => {
            let rho = (2.0 * (2.0 * n as f64).ln()).sqrt().max(1.0);
            let mut cloud = Vec::with_capacity(m.max(2 * n));
            for i in 0..n {
                for s in [1.0, -1.0] {
                    let mut e = vec![0.0; n];
                    e[i] = s / rho;
                    cloud.push(e);
                }
            }
            // Uniform points on the boundary of the cross-polytope.
            while cloud.len() < m.max(2 * n) {
                let w: Vec<f64> = (0..n).map(|_| Exp1.sample(&mut rng)).collect();
                let total: f64 = w.iter().sum();
                let y = w
                    .iter()
                    .map(|x| {
                        let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
                        s * x / (total * rho)
                    })
                    .collect();
                cloud.push(y);
            }
            (rho, cloud)
        }
        BodyKind::WholeSpace => (1.0, vec![vec![0.0; n]]),
        BodyKind::CustomPolarCloud => {
            return Err(Error::InvalidInput(
                "custom bodies are built from a cloud with `custom_body`".into(),
            ))
        }
    };
    let mut body = ConvexBodyRep { kind, n, rho, polar_cloud: cloud, gamma: GaussianMeasure::exact(1.0) };
    body.gamma = if kind == BodyKind::WholeSpace {
        GaussianMeasure::exact(1.0)
    } else {
        body.estimate_gamma(opts.gamma_samples, opts.seed)
    };
    body.validate()?;
    Ok(body)
}

/// A body given by its polar cloud; the cloud is closed under negation.
pub fn custom_body(cloud: Vec<Vec<f64>>, opts: &BodyOptions) -> Result<ConvexBodyRep> {
    let n = cloud.first().map(|c| c.len()).ok_or(Error::EmptyAtoms)?;
    if cloud.iter().any(|c| c.len() != n || c.iter().any(|x| !x.is_finite())) {
        return Err(Error::InvalidInput("polar cloud points must share a finite dimension".into()));
    }
    let mut sym = Vec::with_capacity(2 * cloud.len());
    for y in cloud {
        sym.push(y.iter().map(|x| -x).collect());
        sym.push(y);
    }
    let mut body = ConvexBodyRep {
        kind: BodyKind::CustomPolarCloud,
        n,
        rho: 1.0,
        polar_cloud: sym,
        gamma: GaussianMeasure::exact(1.0),
    };
    body.gamma = body.estimate_gamma(opts.gamma_samples, opts.seed);
    body.validate()?;
    Ok(body)
}

fn gaussian_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

impl ConvexBodyRep {
    fn validate(&self) -> Result<()> {
        if !self.gamma.admits_half() {
            return Err(Error::BodyRejected(format!(
                "Gaussian measure {:.4} (stderr {:.1e}) is below 1/2",
                self.gamma.estimate, self.gamma.stderr
            )));
        }
        let diam = self.polar_diameter();
        if diam > 4.0 + POLAR_TOL {
            return Err(Error::BodyRejected(format!("polar diameter {diam:.4} exceeds 4")));
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.norm(x) <= 1.0 + POLAR_TOL
    }

    /// `||x||_K = sup_{y in K°} <x, y>`, closed form where available.
    pub fn norm(&self, x: &[f64]) -> f64 {
        match self.kind {
            BodyKind::EuclideanBall => norm2(x) / self.rho,
            BodyKind::ScaledCube => crate::linalg::norm_inf(x) / self.rho,
            BodyKind::WholeSpace => 0.0,
            BodyKind::CustomPolarCloud => self.cloud_support(x),
        }
    }

    /// `max_{y in cloud} <x, y>`.
    pub fn cloud_support(&self, x: &[f64]) -> f64 {
        self.polar_cloud.iter().map(|y| dot(x, y)).fold(0.0, f64::max)
    }

    /// Extreme points of `K` where they are finite in number, otherwise
    /// `count` boundary samples. Used for duality spot checks.
    pub fn sample_boundary(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = crate::rng::child_rng(seed, Stream::Body, 1);
        (0..count)
            .map(|_| match self.kind {
                BodyKind::ScaledCube => (0..self.n)
                    .map(|_| if rng.random::<bool>() { self.rho } else { -self.rho })
                    .collect(),
                _ => {
                    let g = gaussian_vec(&mut rng, self.n);
                    let s = self.norm(&g);
                    if s > 0.0 {
                        g.iter().map(|x| x / s).collect()
                    } else {
                        g
                    }
                }
            })
            .collect()
    }

    /// `max ||y - y'||` over the cloud; twice the largest norm since the
    /// cloud is symmetric.
    pub fn polar_diameter(&self) -> f64 {
        2.0 * self.polar_cloud.iter().map(|y| norm2(y)).fold(0.0, f64::max)
    }

    /// Monte Carlo Gaussian measure with its standard error.
    pub fn estimate_gamma(&self, samples: usize, seed: u64) -> GaussianMeasure {
        let samples = samples.max(1);
        let mut rng = crate::rng::child_rng(seed, Stream::Body, 2);
        let mut hits = 0usize;
        for _ in 0..samples {
            let g = gaussian_vec(&mut rng, self.n);
            if self.contains(&g) {
                hits += 1;
            }
        }
        let p = hits as f64 / samples as f64;
        GaussianMeasure { estimate: p, stderr: (p * (1.0 - p) / samples as f64).sqrt(), samples }
    }

    /// Monte Carlo estimate of `E sup_{y in cloud} <g, y>`.
    pub fn gaussian_width(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = crate::rng::child_rng(seed, Stream::Body, 3);
        let samples = samples.max(1);
        (0..samples)
            .map(|_| self.cloud_support(&gaussian_vec(&mut rng, self.n)))
            .sum::<f64>()
            / samples as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn opts(cloud: usize) -> BodyOptions {
        BodyOptions { cloud_size: Some(cloud), gamma_samples: DEFAULT_GAMMA_SAMPLES, seed: 11 }
    }

    #[test]
    fn ball_gaussian_measure_matches_chi_square() {
        let b1 = build_body(BodyKind::EuclideanBall, 1, &opts(64)).unwrap();
        let exact1 = ChiSquared::new(1.0).unwrap().cdf(1.0);
        assert!((exact1 - 0.6827).abs() < 1e-4);
        assert!((b1.gamma.estimate - exact1).abs() < 4.0 * b1.gamma.stderr + 1e-3);
        let b4 = build_body(BodyKind::EuclideanBall, 4, &opts(64)).unwrap();
        let exact4 = ChiSquared::new(4.0).unwrap().cdf(4.0);
        assert!((exact4 - (1.0 - 3.0 * (-2f64).exp())).abs() < 1e-12);
        assert!((b4.gamma.estimate - exact4).abs() < 4.0 * b4.gamma.stderr + 1e-3);
    }

    #[test]
    fn whole_space_has_full_measure() {
        let w = build_body(BodyKind::WholeSpace, 3, &opts(8)).unwrap();
        assert_eq!(w.gamma.estimate, 1.0);
        assert_eq!(w.norm(&[5.0, 1.0, 2.0]), 0.0);
    }

    #[test]
    fn small_body_is_rejected() {
        let cloud = vec![vec![3.0, 0.0], vec![0.0, 3.0]];
        assert!(matches!(custom_body(cloud, &opts(0)), Err(Error::BodyRejected(_))));
    }

    #[test]
    fn polar_duality_spot_check() {
        for kind in [BodyKind::EuclideanBall, BodyKind::ScaledCube] {
            for n in [2, 5] {
                let body = build_body(kind, n, &opts(200)).unwrap();
                let xs = body.sample_boundary(50, 3);
                let mut worst: f64 = 0.0;
                for x in &xs {
                    for y in &body.polar_cloud {
                        worst = worst.max(dot(x, y).abs());
                    }
                }
                assert!(worst <= 1.0 + POLAR_TOL, "{kind:?} n={n}: {worst}");
                assert!(body.polar_diameter() <= 4.0 + POLAR_TOL);
            }
        }
    }
}
