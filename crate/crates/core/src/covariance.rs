//! Covariance models and their reduction to dyadic form.
//!
//! An input distribution supported in the unit ball has a covariance
//! `Sigma` with eigenvalues in `[0, 1]`. The balancing algorithms want every
//! nonzero eigenvalue to be an exact power `2^-k`, so each eigenvector `u`
//! with eigenvalue `sigma` in scale `k` is rescaled by `(2^k sigma)^-1/2`.
//! Directions whose eigenvalue falls below `2^-kappa` are dropped into an
//! error subspace.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{frobenius, mat_vec, max_abs_diff, norm2, outer, sym_op_norm};

/// Tolerance used by every matrix invariant in this module.
pub const INVARIANT_TOL: f64 = 1e-9;

/// Relative band around a dyadic boundary that is treated as the boundary
/// itself.
const BOUNDARY_TOL: f64 = 1e-12;

const KAPPA_MIN: usize = 8;
const KAPPA_MAX: usize = 64;

/// Second-moment matrix of an input distribution with its spectral
/// decomposition.
#[derive(Debug, Clone)]
pub struct CovarianceModel {
    sigma: DMatrix<f64>,
    /// Nonincreasing.
    eigvals: Vec<f64>,
    /// Column `i` is the eigenvector of `eigvals[i]`.
    eigvecs: DMatrix<f64>,
}

impl CovarianceModel {
    /// Decomposes a symmetric PSD matrix. Small negative eigenvalues from
    /// round-off are clamped to zero.
    pub fn from_matrix(sigma: DMatrix<f64>) -> Result<Self> {
        let n = sigma.nrows();
        if n == 0 || sigma.ncols() != n {
            return Err(Error::InvalidModel(format!(
                "covariance must be square and nonempty, got {}x{}",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        if sigma.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidModel("non-finite covariance entry".into()));
        }
        let asym = max_abs_diff(&sigma, &sigma.transpose());
        if asym > INVARIANT_TOL {
            return Err(Error::InvalidModel(format!("covariance not symmetric ({asym:.3e})")));
        }
        let sym = (&sigma + sigma.transpose()) * 0.5;
        let eig = nalgebra::SymmetricEigen::try_new(sym, 1e-14, 0)
            .ok_or_else(|| Error::InvalidModel("eigendecomposition did not converge".into()))?;

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mut eigvals = Vec::with_capacity(n);
        let mut eigvecs = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            let val = eig.eigenvalues[src];
            if val < -INVARIANT_TOL {
                return Err(Error::InvalidModel(format!("negative eigenvalue {val:.3e}")));
            }
            eigvals.push(val.max(0.0));
            eigvecs.set_column(dst, &eig.eigenvectors.column(src));
        }
        Ok(Self { sigma, eigvals, eigvecs })
    }

    /// Covariance of the uniform distribution over a finite support.
    pub fn from_support(points: &[Vec<f64>]) -> Result<Self> {
        estimate_covariance(points)
    }

    pub fn dim(&self) -> usize {
        self.eigvals.len()
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn eigvals(&self) -> &[f64] {
        &self.eigvals
    }

    pub fn eigvecs(&self) -> &DMatrix<f64> {
        &self.eigvecs
    }

    pub fn eigvec(&self, i: usize) -> Vec<f64> {
        self.eigvecs.column(i).iter().copied().collect()
    }

    /// Frobenius error of `sum_i sigma_i u_i u_i^T` against `Sigma`.
    pub fn reconstruction_error(&self) -> f64 {
        let n = self.dim();
        let mut rebuilt = DMatrix::zeros(n, n);
        for i in 0..n {
            let u = self.eigvec(i);
            rebuilt += outer(&u, &u) * self.eigvals[i];
        }
        frobenius(&(rebuilt - &self.sigma))
    }

    /// `max |V^T V - I|`.
    pub fn orthogonality_error(&self) -> f64 {
        let n = self.dim();
        max_abs_diff(&(self.eigvecs.transpose() * &self.eigvecs), &DMatrix::identity(n, n))
    }
}

/// Empirical second moment `(1/m) sum v v^T` of a sample.
pub fn estimate_covariance(samples: &[Vec<f64>]) -> Result<CovarianceModel> {
    let first = samples
        .first()
        .ok_or_else(|| Error::InvalidInput("empty sample list".into()))?;
    let n = first.len();
    if n == 0 {
        return Err(Error::InvalidInput("zero-dimensional samples".into()));
    }
    let mut sigma = DMatrix::<f64>::zeros(n, n);
    for (idx, v) in samples.iter().enumerate() {
        if v.len() != n {
            return Err(Error::InvalidInput(format!(
                "sample {idx} has dimension {} (expected {n})",
                v.len()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("sample {idx} has a non-finite entry")));
        }
        let norm = norm2(v);
        if norm > 1.0 + INVARIANT_TOL {
            return Err(Error::InvalidInput(format!(
                "sample {idx} has Euclidean norm {norm:.6} > 1"
            )));
        }
        for i in 0..n {
            if v[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                sigma[(i, j)] += v[i] * v[j];
            }
        }
    }
    sigma /= samples.len() as f64;
    CovarianceModel::from_matrix(sigma)
}

/// Number of dyadic scales: `8 * ceil(ln(nT))`, clamped to `[8, 64]`.
pub fn default_kappa(n: usize, horizon: usize) -> usize {
    let nt = (n.max(1) as f64) * (horizon.max(1) as f64);
    let raw = 8.0 * nt.ln().ceil();
    if !raw.is_finite() {
        return KAPPA_MAX;
    }
    (raw as usize).clamp(KAPPA_MIN, KAPPA_MAX)
}

/// Which block of the decomposition a direction belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleIndex {
    /// Scale `k` in `1..=kappa`.
    Scale(usize),
    /// The discarded small-eigenvalue subspace.
    Err,
}

/// Scale assigned to an eigenvalue: `k` with `sigma` in `(2^-k, 2^-k+1]`,
/// where values within a relative `1e-12` of a boundary `2^-k` count as
/// lying just above it. Returns `None` below `2^-kappa`.
pub fn scale_of(sigma: f64, kappa: usize) -> Option<usize> {
    if sigma <= 0.0 {
        return None;
    }
    let mut k = (-sigma.log2()).ceil().max(1.0) as usize;
    // Snap onto the boundary from either side.
    let boundary_above = (-(k as f64 - 1.0)).exp2();
    if k > 1 && (sigma / boundary_above - 1.0).abs() <= BOUNDARY_TOL {
        k -= 1;
    }
    let boundary = (-(k as f64)).exp2();
    if sigma < boundary * (1.0 - BOUNDARY_TOL) {
        k += 1;
    }
    (k <= kappa).then_some(k)
}

/// The dyadic reduction of a covariance model.
#[derive(Debug, Clone)]
pub struct ScaleDecomposition {
    kappa: usize,
    dim: usize,
    /// PSD map `M` that makes the covariance dyadic.
    rescale: DMatrix<f64>,
    /// `M^+ / 2`, applied to test vectors.
    test_map: DMatrix<f64>,
    /// `projectors[k - 1] = Pi_k`.
    projectors: Vec<DMatrix<f64>>,
    err_projector: DMatrix<f64>,
    /// Sum of all scale projectors.
    support: DMatrix<f64>,
    subspace_dims: Vec<usize>,
    /// Scale per eigenvector of the source model (column order).
    assignment: Vec<ScaleIndex>,
    eigvecs: DMatrix<f64>,
}

/// Builds `M`, the scale projectors, and the error projector for `model`.
pub fn dyadic_reduce(model: &CovarianceModel, kappa: usize) -> Result<ScaleDecomposition> {
    if kappa == 0 {
        return Err(Error::InvalidInput("kappa must be at least 1".into()));
    }
    let n = model.dim();
    let mut rescale = DMatrix::zeros(n, n);
    let mut test_map = DMatrix::zeros(n, n);
    let mut projectors = vec![DMatrix::zeros(n, n); kappa];
    let mut err_projector = DMatrix::zeros(n, n);
    let mut subspace_dims = vec![0; kappa];
    let mut assignment = Vec::with_capacity(n);

    for (i, &sigma) in model.eigvals().iter().enumerate() {
        if sigma > 1.0 + INVARIANT_TOL {
            return Err(Error::InvalidModel(format!(
                "eigenvalue {sigma:.6} exceeds 1; inputs must lie in the unit ball"
            )));
        }
        let u = model.eigvec(i);
        let uu = outer(&u, &u);
        match scale_of(sigma, kappa) {
            Some(k) => {
                let factor = ((k as f64).exp2() * sigma).powf(-0.5);
                rescale += &uu * factor;
                test_map += &uu * (0.5 / factor);
                projectors[k - 1] += &uu;
                subspace_dims[k - 1] += 1;
                assignment.push(ScaleIndex::Scale(k));
            }
            None => {
                err_projector += &uu;
                assignment.push(ScaleIndex::Err);
            }
        }
    }
    let support = projectors.iter().fold(DMatrix::zeros(n, n), |acc, p| acc + p);

    Ok(ScaleDecomposition {
        kappa,
        dim: n,
        rescale,
        test_map,
        projectors,
        err_projector,
        support,
        subspace_dims,
        assignment,
        eigvecs: model.eigvecs().clone(),
    })
}

impl ScaleDecomposition {
    /// Single-scale decomposition with `Pi_1 = I` and `M = I`, used where the
    /// ambient dimension makes a spectral decomposition impractical.
    pub fn identity(dim: usize, kappa: usize) -> Self {
        let id = DMatrix::identity(dim, dim);
        let mut projectors = vec![DMatrix::zeros(dim, dim); kappa.max(1)];
        projectors[0] = id.clone();
        let mut subspace_dims = vec![0; kappa.max(1)];
        subspace_dims[0] = dim;
        Self {
            kappa: kappa.max(1),
            dim,
            rescale: id.clone(),
            test_map: &id * 0.5,
            projectors,
            err_projector: DMatrix::zeros(dim, dim),
            support: id.clone(),
            subspace_dims,
            assignment: vec![ScaleIndex::Scale(1); dim],
            eigvecs: id,
        }
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rescale_matrix(&self) -> &DMatrix<f64> {
        &self.rescale
    }

    pub fn test_map_matrix(&self) -> &DMatrix<f64> {
        &self.test_map
    }

    pub fn projector(&self, k: ScaleIndex) -> Result<&DMatrix<f64>> {
        match k {
            ScaleIndex::Err => Ok(&self.err_projector),
            ScaleIndex::Scale(k) if (1..=self.kappa).contains(&k) => Ok(&self.projectors[k - 1]),
            ScaleIndex::Scale(k) => Err(Error::ScaleOutOfRange { index: k, kappa: self.kappa }),
        }
    }

    /// `Pi = sum_k Pi_k`.
    pub fn support_projector(&self) -> &DMatrix<f64> {
        &self.support
    }

    pub fn subspace_dim(&self, k: usize) -> usize {
        self.subspace_dims.get(k.wrapping_sub(1)).copied().unwrap_or(0)
    }

    pub fn err_rank(&self) -> usize {
        self.assignment.iter().filter(|s| **s == ScaleIndex::Err).count()
    }

    /// Scales with a nonempty subspace, ascending.
    pub fn nonempty_scales(&self) -> Vec<usize> {
        (1..=self.kappa).filter(|&k| self.subspace_dims[k - 1] > 0).collect()
    }

    pub fn assignment(&self) -> &[ScaleIndex] {
        &self.assignment
    }

    /// Eigenvectors of the source covariance, as columns.
    pub fn eigvecs(&self) -> &DMatrix<f64> {
        &self.eigvecs
    }

    /// `Pi_k x`.
    pub fn project(&self, k: ScaleIndex, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "vector of dimension {} for a {}-dimensional decomposition",
                x.len(),
                self.dim
            )));
        }
        Ok(mat_vec(self.projector(k)?, x))
    }

    /// `M v`, the input as seen by the balancing potential.
    pub fn rescale(&self, v: &[f64]) -> Vec<f64> {
        mat_vec(&self.rescale, v)
    }

    /// `M^+ z / 2`, a test vector in the rescaled coordinates.
    pub fn map_test(&self, z: &[f64]) -> Vec<f64> {
        mat_vec(&self.test_map, z)
    }

    /// `M Sigma M`.
    pub fn reduced_covariance(&self, sigma: &DMatrix<f64>) -> DMatrix<f64> {
        &self.rescale * sigma * &self.rescale
    }

    /// Measures every structural invariant against the source covariance.
    pub fn verify(&self, sigma: &DMatrix<f64>) -> DecompositionReport {
        let n = self.dim;
        let id = DMatrix::<f64>::identity(n, n);
        let mut idempotence: f64 = 0.0;
        let mut orthogonality: f64 = 0.0;
        let mut sum = self.err_projector.clone();
        for (a, pa) in self.projectors.iter().enumerate() {
            idempotence = idempotence.max(max_abs_diff(&(pa * pa), pa));
            sum += pa;
            for pb in self.projectors.iter().skip(a + 1) {
                orthogonality = orthogonality.max((pa * pb).abs().max());
            }
            orthogonality = orthogonality.max((pa * &self.err_projector).abs().max());
        }
        idempotence = idempotence.max(max_abs_diff(
            &(&self.err_projector * &self.err_projector),
            &self.err_projector,
        ));
        let completeness = max_abs_diff(&sum, &id);

        // Every nonzero eigenvalue of M Sigma M restricted to H_k must be 2^-k.
        let reduced = self.reduced_covariance(sigma);
        let mut dyadic: f64 = 0.0;
        for (i, scale) in self.assignment.iter().enumerate() {
            let u: Vec<f64> = self.eigvecs.column(i).iter().copied().collect();
            let ru = mat_vec(&reduced, &u);
            let target = match scale {
                ScaleIndex::Scale(k) => (-(*k as f64)).exp2(),
                ScaleIndex::Err => 0.0,
            };
            let err = ru.iter().zip(&u).map(|(r, x)| (r - target * x).abs()).fold(0.0, f64::max);
            dyadic = dyadic.max(err);
        }
        let rank_total = self.subspace_dims.iter().sum::<usize>() + self.err_rank();

        DecompositionReport {
            idempotence,
            orthogonality,
            completeness,
            dyadic_eigen_error: dyadic,
            rescale_op_norm: sym_op_norm(&self.rescale),
            rank_total,
        }
    }
}

/// Worst-case invariant deviations of a [`ScaleDecomposition`].
#[derive(Debug, Clone, Copy)]
pub struct DecompositionReport {
    pub idempotence: f64,
    pub orthogonality: f64,
    pub completeness: f64,
    pub dyadic_eigen_error: f64,
    pub rescale_op_norm: f64,
    pub rank_total: usize,
}

impl DecompositionReport {
    pub fn holds(&self, dim: usize) -> bool {
        self.idempotence <= INVARIANT_TOL
            && self.orthogonality <= INVARIANT_TOL
            && self.completeness <= INVARIANT_TOL
            && self.dyadic_eigen_error <= INVARIANT_TOL
            && self.rescale_op_norm <= 1.0 + INVARIANT_TOL
            && self.rank_total == dim
    }
}
