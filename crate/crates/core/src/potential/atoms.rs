//! Test distributions and their precomputed per-scale projections.
//!
//! A [`TestDistribution`] is a finite weighted list of atoms. An [`AtomSet`]
//! is the same distribution after projection onto every scale: one *entry*
//! per `(atom, scale)` pair whose projection is nonzero. Entries whose
//! projection vanishes never change, so they are folded into a constant.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::covariance::{ScaleDecomposition, ScaleIndex};
use crate::error::{Error, Result};
use crate::linalg::{dot, mat_vec, norm2};

pub const WEIGHT_TOL: f64 = 1e-9;

/// Where an atom came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AtomTag {
    InputSurrogate,
    Basis,
    Eigen,
    ChainingEdge,
    TestVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestAtom {
    pub vector: Vec<f64>,
    pub weight: f64,
    pub tag: AtomTag,
}

/// A finite distribution over test atoms; weights sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestDistribution {
    atoms: Vec<TestAtom>,
}

impl TestDistribution {
    pub fn new(atoms: Vec<TestAtom>) -> Result<Self> {
        let dim = atoms.first().ok_or(Error::EmptyAtoms)?.vector.len();
        let mut total = 0.0;
        for (i, atom) in atoms.iter().enumerate() {
            if atom.vector.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "atom {i} has dimension {} (expected {dim})",
                    atom.vector.len()
                )));
            }
            if atom.vector.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!("atom {i} has a non-finite entry")));
            }
            if !(atom.weight > 0.0 && atom.weight <= 1.0 + WEIGHT_TOL) {
                return Err(Error::InvalidInput(format!(
                    "atom {i} has weight {} outside (0, 1]",
                    atom.weight
                )));
            }
            total += atom.weight;
        }
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidInput(format!("atom weights sum to {total}, not 1")));
        }
        Ok(Self { atoms })
    }

    /// Uniform weights over `vectors`.
    pub fn uniform(vectors: Vec<Vec<f64>>, tag: AtomTag) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::EmptyAtoms);
        }
        let w = 1.0 / vectors.len() as f64;
        Self::new(vectors.into_iter().map(|vector| TestAtom { vector, weight: w, tag }).collect())
    }

    /// Convex combination `sum_i share_i * dist_i`. Shares must sum to one.
    pub fn mixture(parts: &[(f64, &TestDistribution)]) -> Result<Self> {
        let mut atoms = Vec::new();
        for (share, dist) in parts {
            for atom in &dist.atoms {
                atoms.push(TestAtom { weight: atom.weight * share, ..atom.clone() });
            }
        }
        Self::new(atoms)
    }

    /// Each atom `x` split into `x` and `-x` with half the weight.
    pub fn symmetrized(&self) -> Self {
        let atoms = self
            .atoms
            .iter()
            .flat_map(|a| {
                let neg = TestAtom {
                    vector: a.vector.iter().map(|x| -x).collect(),
                    weight: a.weight / 2.0,
                    tag: a.tag,
                };
                [TestAtom { weight: a.weight / 2.0, ..a.clone() }, neg]
            })
            .collect();
        Self { atoms }
    }

    /// Applies `f` to every atom vector.
    pub fn map_vectors(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        Self::new(
            self.atoms
                .iter()
                .map(|a| TestAtom { vector: f(&a.vector), ..a.clone() })
                .collect(),
        )
    }

    pub fn atoms(&self) -> &[TestAtom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].vector.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    pub fn max_norm(&self) -> f64 {
        self.atoms.iter().map(|a| norm2(&a.vector)).fold(0.0, f64::max)
    }

    pub fn count_tag(&self, tag: AtomTag) -> usize {
        self.atoms.iter().filter(|a| a.tag == tag).count()
    }
}

/// Bookkeeping shared by every atom-set backend.
#[derive(Debug, Clone, Default)]
pub struct EntryTable {
    /// Weight of the owning atom, per entry.
    pub weights: Vec<f64>,
    pub atom: Vec<u32>,
    pub scale: Vec<u16>,
    /// `atom_offsets[i]..atom_offsets[i + 1]` are the entries of atom `i`.
    pub atom_offsets: Vec<usize>,
    pub tags: Vec<AtomTag>,
    /// Total weight of entries that are identically zero, including empty
    /// scales; contributes `term(0) = 1` per unit weight.
    pub constant: f64,
    pub kappa: usize,
}

impl EntryTable {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn atom_count(&self) -> usize {
        self.atom_offsets.len().saturating_sub(1)
    }

    pub fn entries_of(&self, atom: usize) -> std::ops::Range<usize> {
        self.atom_offsets[atom]..self.atom_offsets[atom + 1]
    }
}

/// A test distribution prepared for fast potential updates.
pub trait AtomSet: Send + Sync {
    /// An arriving vector.
    type Input;
    /// The running discrepancy vector.
    type Accum: Clone + std::fmt::Debug + Send + Sync;

    fn table(&self) -> &EntryTable;

    /// `out[e] = v^T y_e` for every entry `e`.
    fn inner_products(&self, v: &Self::Input, out: &mut [f64]);

    fn zero_accum(&self) -> Self::Accum;

    /// `d += alpha * v`.
    fn accumulate(&self, d: &mut Self::Accum, alpha: f64, v: &Self::Input);

    /// `out[e] = d^T y_e`, computed from scratch.
    fn accum_inner_products(&self, d: &Self::Accum, out: &mut [f64]);

    /// `d^T Pi v` with `Pi` the sum of the scale projectors.
    fn support_dot(&self, d: &Self::Accum, v: &Self::Input) -> f64;
}

/// Dense atoms in `R^n`, projected through the scale projectors of a
/// decomposition.
#[derive(Debug, Clone)]
pub struct DenseAtoms {
    table: EntryTable,
    dim: usize,
    /// Row-major, `table.len() x dim`.
    rows: Vec<f64>,
    support: DMatrix<f64>,
}

impl DenseAtoms {
    pub fn new(dec: &ScaleDecomposition, dist: &TestDistribution) -> Result<Self> {
        let scales: Vec<(usize, &DMatrix<f64>)> = dec
            .nonempty_scales()
            .into_iter()
            .map(|k| Ok((k, dec.projector(ScaleIndex::Scale(k))?)))
            .collect::<Result<_>>()?;
        Self::with_projectors(&scales, dec.kappa(), dec.support_projector().clone(), dist)
    }

    /// Single scale with `Pi_1 = I`.
    pub fn single_scale(dist: &TestDistribution, kappa: usize) -> Result<Self> {
        let n = dist.dim();
        let id = DMatrix::identity(n, n);
        Self::with_projectors(&[(1, &id)], kappa.max(1), id.clone(), dist)
    }

    fn with_projectors(
        scales: &[(usize, &DMatrix<f64>)],
        kappa: usize,
        support: DMatrix<f64>,
        dist: &TestDistribution,
    ) -> Result<Self> {
        if dist.is_empty() {
            return Err(Error::EmptyAtoms);
        }
        let dim = dist.dim();
        if support.nrows() != dim {
            return Err(Error::InvalidInput(format!(
                "atoms of dimension {dim} for a {}-dimensional decomposition",
                support.nrows()
            )));
        }
        let mut table = EntryTable { kappa, ..Default::default() };
        let mut rows = Vec::new();
        // Empty scales contribute cosh(0) = 1 for the full unit of weight.
        table.constant = (kappa - scales.len()) as f64 * dist.total_weight();
        table.atom_offsets.push(0);
        for (i, atom) in dist.atoms().iter().enumerate() {
            for &(k, proj) in scales {
                let y = mat_vec(proj, &atom.vector);
                if y.iter().all(|v| v.abs() <= 1e-15) {
                    table.constant += atom.weight;
                    continue;
                }
                table.weights.push(atom.weight);
                table.atom.push(i as u32);
                table.scale.push(k as u16);
                rows.extend_from_slice(&y);
            }
            table.tags.push(atom.tag);
            table.atom_offsets.push(table.weights.len());
        }
        Ok(Self { table, dim, rows, support })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Projection `y_e` of entry `e`.
    pub fn entry_vector(&self, e: usize) -> &[f64] {
        &self.rows[e * self.dim..(e + 1) * self.dim]
    }
}

impl AtomSet for DenseAtoms {
    type Input = Vec<f64>;
    type Accum = Vec<f64>;

    fn table(&self) -> &EntryTable {
        &self.table
    }

    fn inner_products(&self, v: &Vec<f64>, out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.dim);
        for (o, row) in out.iter_mut().zip(self.rows.chunks_exact(self.dim)) {
            *o = dot(row, v);
        }
    }

    fn zero_accum(&self) -> Vec<f64> {
        vec![0.0; self.dim]
    }

    fn accumulate(&self, d: &mut Vec<f64>, alpha: f64, v: &Vec<f64>) {
        crate::linalg::axpy(d, alpha, v);
    }

    fn accum_inner_products(&self, d: &Vec<f64>, out: &mut [f64]) {
        self.inner_products(d, out);
    }

    fn support_dot(&self, d: &Vec<f64>, v: &Vec<f64>) -> f64 {
        dot(d, &mat_vec(&self.support, v))
    }
}

/// A sparse vector with sorted, distinct coordinates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    pub idx: Vec<u64>,
    pub val: Vec<f64>,
}

impl SparseVector {
    /// Builds from unsorted pairs; duplicate coordinates are summed.
    pub fn from_pairs(mut pairs: Vec<(u64, f64)>) -> Self {
        pairs.sort_by_key(|p| p.0);
        let mut out = Self::default();
        for (i, v) in pairs {
            if out.idx.last() == Some(&i) {
                *out.val.last_mut().unwrap() += v;
            } else {
                out.idx.push(i);
                out.val.push(v);
            }
        }
        out
    }

    /// All coordinates set to `value`.
    pub fn indicator(mut idx: Vec<u64>, value: f64) -> Self {
        idx.sort_unstable();
        idx.dedup();
        let val = vec![value; idx.len()];
        Self { idx, val }
    }

    pub fn nnz(&self) -> usize {
        self.idx.len()
    }

    pub fn norm2(&self) -> f64 {
        self.val.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self { idx: self.idx.clone(), val: self.val.iter().map(|v| v * alpha).collect() }
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.idx.len() && j < other.idx.len() {
            match self.idx[i].cmp(&other.idx[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.val[i] * other.val[j];
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.idx.iter().copied().zip(self.val.iter().copied())
    }
}

/// Sparse atoms over a huge implicit coordinate space with a single scale
/// (`Pi_1 = I`). Inner products go through an inverted index, so their cost
/// is proportional to the number of shared coordinates.
#[derive(Debug, Clone)]
pub struct SparseAtoms {
    table: EntryTable,
    atoms: Vec<SparseVector>,
    postings: HashMap<u64, Vec<(u32, f64)>>,
}

impl SparseAtoms {
    /// `atoms` carry `(vector, weight, tag)`; weights must sum to one.
    pub fn new(atoms: Vec<(SparseVector, f64, AtomTag)>, kappa: usize) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyAtoms);
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidInput(format!("atom weights sum to {total}, not 1")));
        }
        let kappa = kappa.max(1);
        let mut table = EntryTable { kappa, ..Default::default() };
        table.constant = (kappa - 1) as f64;
        table.atom_offsets.push(0);
        let mut postings: HashMap<u64, Vec<(u32, f64)>> = HashMap::new();
        let mut kept = Vec::with_capacity(atoms.len());
        for (vector, weight, tag) in atoms {
            if !(weight > 0.0) || vector.val.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput("sparse atom with bad weight or entry".into()));
            }
            if vector.val.iter().all(|v| *v == 0.0) {
                table.constant += weight;
            } else {
                let e = table.weights.len() as u32;
                for (i, v) in vector.iter() {
                    postings.entry(i).or_default().push((e, v));
                }
                table.weights.push(weight);
                table.atom.push(table.tags.len() as u32);
                table.scale.push(1);
                kept.push(vector);
            }
            table.tags.push(tag);
            table.atom_offsets.push(table.weights.len());
        }
        Ok(Self { table, atoms: kept, postings })
    }

    pub fn entry_vector(&self, e: usize) -> &SparseVector {
        &self.atoms[e]
    }
}

impl AtomSet for SparseAtoms {
    type Input = SparseVector;
    type Accum = HashMap<u64, f64>;

    fn table(&self) -> &EntryTable {
        &self.table
    }

    fn inner_products(&self, v: &SparseVector, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, x) in v.iter() {
            if let Some(list) = self.postings.get(&i) {
                for &(e, y) in list {
                    out[e as usize] += x * y;
                }
            }
        }
    }

    fn zero_accum(&self) -> HashMap<u64, f64> {
        HashMap::new()
    }

    fn accumulate(&self, d: &mut HashMap<u64, f64>, alpha: f64, v: &SparseVector) {
        for (i, x) in v.iter() {
            *d.entry(i).or_insert(0.0) += alpha * x;
        }
    }

    fn accum_inner_products(&self, d: &HashMap<u64, f64>, out: &mut [f64]) {
        for (o, atom) in out.iter_mut().zip(&self.atoms) {
            *o = atom.iter().map(|(i, y)| d.get(&i).copied().unwrap_or(0.0) * y).sum();
        }
    }

    fn support_dot(&self, d: &HashMap<u64, f64>, v: &SparseVector) -> f64 {
        v.iter().map(|(i, x)| d.get(&i).copied().unwrap_or(0.0) * x).sum()
    }
}
