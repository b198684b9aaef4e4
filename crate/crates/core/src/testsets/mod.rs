//! Test distributions: standard basis, covariance eigenvectors, chaining
//! nets over a convex body, and the mixtures fed to the potential.

mod body;
mod chaining;

pub use body::{
    build_body, custom_body, default_cloud_size, BodyKind, BodyOptions, ConvexBodyRep,
    GaussianMeasure, DEFAULT_GAMMA_SAMPLES, POLAR_TOL,
};
pub use chaining::{
    build_chaining_net, covering_check, knorm, level_range, load_or_build, sudakov_bound,
    ChainingNet, EdgeLayer, GreedyOrder, KNorm, NetLayer, NetOptions, SliceNet,
    DEFAULT_EDGE_LIMIT, DEFAULT_SHARE_FLOOR, NET_CACHE_VERSION,
};

use crate::covariance::ScaleDecomposition;
use crate::error::{Error, Result};
use crate::potential::{AtomTag, TestDistribution};

const NORM_TOL: f64 = 1e-9;

/// `{e_1, ..., e_n}` with uniform weights.
pub fn basis_testset(n: usize) -> Result<TestDistribution> {
    if n == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    let vectors = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    TestDistribution::uniform(vectors, AtomTag::Basis)
}

/// Uniform over the eigenvectors of the covariance behind `dec`.
pub fn eigen_testset(dec: &ScaleDecomposition) -> Result<TestDistribution> {
    let u = dec.eigvecs();
    let vectors = (0..u.ncols()).map(|j| u.column(j).iter().copied().collect()).collect();
    TestDistribution::uniform(vectors, AtomTag::Eigen)
}

/// Half input pool, half test set. Every atom must have norm at most one.
pub fn komlos_mixture(pool: &TestDistribution, testset: &TestDistribution) -> Result<TestDistribution> {
    for (name, dist) in [("input pool", pool), ("test set", testset)] {
        if dist.is_empty() {
            return Err(Error::EmptyAtoms);
        }
        let norm = dist.max_norm();
        if norm > 1.0 + NORM_TOL {
            return Err(Error::InvalidInput(format!("{name} contains an atom of norm {norm}")));
        }
    }
    TestDistribution::mixture(&[(0.5, pool), (0.5, testset)])
}

/// Input pool, eigenvectors and chaining atoms with weights 1/2, 1/4, 1/4,
/// closed under negation.
pub fn banaszczyk_mixture(
    pool: &TestDistribution,
    eigen: &TestDistribution,
    chaining: &TestDistribution,
) -> Result<TestDistribution> {
    Ok(TestDistribution::mixture(&[(0.5, pool), (0.25, eigen), (0.25, chaining)])?.symmetrized())
}
