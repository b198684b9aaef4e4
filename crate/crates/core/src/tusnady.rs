//! Online coloring of points in `[0,1)^d` against axis-parallel boxes,
//! reduced to sparse vector balancing over dyadic boxes.
//!
//! A point becomes the indicator of the `(log2 T + 1)^d` dyadic boxes that
//! contain it. A box with endpoints on the `1/T` grid is a disjoint union of
//! dyadic boxes, so its discrepancy is an inner product with the indicator
//! of that union. Boxes off the grid split into a grid box plus at most `2d`
//! pieces, each inside a width-`1/T` stripe.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::metrics::{geometric_checkpoints, slope_fit, SlopeFit};
use crate::harness::trace::StepRecord;
use crate::potential::{
    default_lambda, AtomTag, PotentialState, Sign, SparseAtoms, SparseVector, Variant,
};
use crate::rng::{child_rng, stream_rng, Stream};

/// Dyadic grid of resolution `1/T` in `[0,1)^d`, `T = 2^log_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicGrid {
    pub log_t: u32,
    pub d: usize,
}

impl DyadicGrid {
    pub fn new(t: u64, d: usize) -> Result<Self> {
        if t < 2 || !t.is_power_of_two() {
            return Err(Error::InvalidInput(format!("T must be a power of two >= 2, got {t}")));
        }
        if d == 0 || d > 3 {
            return Err(Error::InvalidInput(format!("dimension must be 1..=3, got {d}")));
        }
        Ok(Self { log_t: t.trailing_zeros(), d })
    }

    pub fn t(&self) -> u64 {
        1 << self.log_t
    }

    /// Number of dyadic levels per axis, `log2 T + 1`.
    pub fn levels(&self) -> usize {
        self.log_t as usize + 1
    }

    /// `|D| = (2T - 1)^d`.
    pub fn box_count(&self) -> u64 {
        (2 * self.t() - 1).pow(self.d as u32)
    }

    /// Finest-level cell of coordinate `x`; `x = 1` goes to the last cell.
    pub fn cell(&self, x: f64) -> u64 {
        let t = self.t();
        ((x * t as f64).floor() as u64).min(t - 1)
    }

    pub fn cells(&self, x: &[f64]) -> Vec<u64> {
        x.iter().map(|&v| self.cell(v)).collect()
    }

    fn encode(&self, heap: &[u64]) -> u64 {
        let base = 2 * self.t();
        heap.iter().rev().fold(0, |acc, &h| acc * base + h)
    }
}

/// `I_{j(1),k(1)} x ... x I_{j(d),k(d)}` with `I_{j,k} = [k 2^-j, (k+1) 2^-j)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicBox {
    pub levels: Vec<u32>,
    pub offsets: Vec<u64>,
}

impl DyadicBox {
    /// Unique id: per-axis heap index `2^j + k`, combined in base `2T`.
    pub fn id(&self, grid: &DyadicGrid) -> u64 {
        let heap: Vec<u64> = self.levels.iter().zip(&self.offsets).map(|(&j, &k)| (1u64 << j) + k).collect();
        grid.encode(&heap)
    }

    pub fn from_id(mut id: u64, grid: &DyadicGrid) -> Self {
        let base = 2 * grid.t();
        let (mut levels, mut offsets) = (Vec::new(), Vec::new());
        for _ in 0..grid.d {
            let h = id % base;
            id /= base;
            let j = 63 - h.leading_zeros();
            levels.push(j);
            offsets.push(h - (1u64 << j));
        }
        Self { levels, offsets }
    }

    pub fn lo(&self, i: usize) -> f64 {
        self.offsets[i] as f64 / (1u64 << self.levels[i]) as f64
    }

    pub fn hi(&self, i: usize) -> f64 {
        (self.offsets[i] + 1) as f64 / (1u64 << self.levels[i]) as f64
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.levels.len()).all(|i| self.lo(i) <= x[i] && x[i] < self.hi(i))
    }

    pub fn volume(&self) -> f64 {
        self.levels.iter().map(|&j| 0.5f64.powi(j as i32)).product()
    }
}

/// Ids of the dyadic boxes containing a point (all entries are 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsePointVector {
    pub ids: Vec<u64>,
}

impl SparsePointVector {
    pub fn nnz(&self) -> usize {
        self.ids.len()
    }

    pub fn to_sparse(&self, value: f64) -> SparseVector {
        SparseVector::indicator(self.ids.clone(), value)
    }
}

/// Every dyadic box containing `x`.
pub fn dyadic_boxes_for_point(x: &[f64], grid: &DyadicGrid) -> Result<SparsePointVector> {
    if x.len() != grid.d {
        return Err(Error::InvalidInput(format!("point of dimension {} on a {}-d grid", x.len(), grid.d)));
    }
    if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidInput("point outside [0,1]^d".into()));
    }
    let cells = grid.cells(x);
    Ok(point_vector_from_cells(&cells, grid))
}

fn point_vector_from_cells(cells: &[u64], grid: &DyadicGrid) -> SparsePointVector {
    let l = grid.log_t;
    let per_axis: Vec<Vec<u64>> = cells
        .iter()
        .map(|&c| (0..=l).map(|j| (1u64 << j) + (c >> (l - j))).collect())
        .collect();
    let mut ids = vec![0u64];
    let base = 2 * grid.t();
    let mut scale = 1u64;
    for axis in &per_axis {
        let mut next = Vec::with_capacity(ids.len() * axis.len());
        for &id in &ids {
            for &h in axis {
                next.push(id + h * scale);
            }
        }
        ids = next;
        scale *= base;
    }
    ids.sort_unstable();
    SparsePointVector { ids }
}

/// Minimal disjoint dyadic cover of the grid interval `[a, b)` (grid units),
/// as `(level, offset)` pairs from left to right.
pub fn interval_cover(a: u64, b: u64, log_t: u32) -> Vec<(u32, u64)> {
    let mut out = Vec::new();
    let mut pos = a;
    while pos < b {
        // Largest aligned block starting at `pos` that fits in `[pos, b)`.
        let mut size = if pos == 0 { 1u64 << log_t } else { 1u64 << pos.trailing_zeros().min(log_t) };
        while size > b - pos {
            size >>= 1;
        }
        let level = log_t - size.trailing_zeros();
        out.push((level, pos / size));
        pos += size;
    }
    out
}

/// Axis-parallel box with endpoints on the `1/T` grid: `[lo_i/T, hi_i/T)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridBox {
    pub lo: Vec<u64>,
    pub hi: Vec<u64>,
}

impl GridBox {
    pub fn contains_cells(&self, cells: &[u64]) -> bool {
        cells.iter().zip(self.lo.iter().zip(&self.hi)).all(|(&c, (&a, &b))| a <= c && c < b)
    }

    /// Product of the per-axis minimal covers.
    pub fn cover(&self, grid: &DyadicGrid) -> Vec<DyadicBox> {
        let axes: Vec<Vec<(u32, u64)>> =
            self.lo.iter().zip(&self.hi).map(|(&a, &b)| interval_cover(a, b, grid.log_t)).collect();
        let mut out = vec![DyadicBox { levels: vec![], offsets: vec![] }];
        for axis in &axes {
            let mut next = Vec::with_capacity(out.len() * axis.len());
            for bx in &out {
                for &(j, k) in axis {
                    let mut b = bx.clone();
                    b.levels.push(j);
                    b.offsets.push(k);
                    next.push(b);
                }
            }
            out = next;
        }
        out
    }

    pub fn label(&self) -> String {
        self.lo.iter().zip(&self.hi).map(|(a, b)| format!("{a}:{b}")).collect::<Vec<_>>().join(";")
    }
}

/// A tracked test box with the ids of its dyadic cover.
#[derive(Debug, Clone, PartialEq)]
pub struct TestBox {
    pub grid_box: GridBox,
    pub cover: Vec<u64>,
}

/// Every grid box when there are at most `budget` of them, otherwise
/// `budget` distinct boxes drawn uniformly.
pub fn dyadic_generated_testset(grid: &DyadicGrid, budget: usize, seed: u64) -> Result<Vec<TestBox>> {
    if budget == 0 {
        return Err(Error::InvalidInput("test-box budget must be positive".into()));
    }
    let t = grid.t();
    let per_axis = t * (t + 1) / 2;
    let total = (per_axis as f64).powi(grid.d as i32);
    let boxes: Vec<GridBox> = if total <= budget as f64 {
        let intervals: Vec<(u64, u64)> = (0..t).flat_map(|a| (a + 1..=t).map(move |b| (a, b))).collect();
        let mut out = vec![GridBox { lo: vec![], hi: vec![] }];
        for _ in 0..grid.d {
            out = out
                .into_iter()
                .flat_map(|bx| {
                    intervals.iter().map(move |&(a, b)| {
                        let mut n = bx.clone();
                        n.lo.push(a);
                        n.hi.push(b);
                        n
                    })
                })
                .collect();
        }
        out
    } else {
        let mut rng = stream_rng(seed, Stream::Tests);
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::with_capacity(budget);
        while out.len() < budget {
            let mut bx = GridBox { lo: vec![], hi: vec![] };
            for _ in 0..grid.d {
                let a = rng.random_range(0..=t);
                let mut b = rng.random_range(0..=t);
                while b == a {
                    b = rng.random_range(0..=t);
                }
                bx.lo.push(a.min(b));
                bx.hi.push(a.max(b));
            }
            if seen.insert(bx.clone()) {
                out.push(bx);
            }
        }
        out
    };
    Ok(boxes
        .into_iter()
        .map(|grid_box| {
            let mut cover: Vec<u64> = grid_box.cover(grid).iter().map(|b| b.id(grid)).collect();
            cover.sort_unstable();
            TestBox { grid_box, cover }
        })
        .collect())
}

/// Half-open real box `[lo_i, hi_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl RealBox {
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(&v, (&a, &b))| a <= v && v < b)
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a).max(0.0)).product()
    }
}

/// A remainder piece lying inside the stripe `[cell/T, (cell+1)/T)` of `axis`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripePiece {
    pub piece: RealBox,
    pub axis: usize,
    pub cell: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDecomposition {
    pub core: Option<GridBox>,
    pub pieces: Vec<StripePiece>,
}

/// Splits a box into a grid-aligned core and at most `2d` stripe pieces.
pub fn box_decompose(bx: &RealBox, grid: &DyadicGrid) -> Result<BoxDecomposition> {
    let d = grid.d;
    if bx.lo.len() != d || bx.hi.len() != d {
        return Err(Error::InvalidInput("box dimension does not match grid".into()));
    }
    if (0..d).any(|i| !(0.0 <= bx.lo[i] && bx.lo[i] <= bx.hi[i] && bx.hi[i] <= 1.0)) {
        return Err(Error::InvalidInput("box outside [0,1]^d".into()));
    }
    let t = grid.t() as f64;
    let mut rest = bx.clone();
    let mut pieces = Vec::new();
    let mut core_lo = Vec::with_capacity(d);
    let mut core_hi = Vec::with_capacity(d);
    for i in 0..d {
        if rest.volume() == 0.0 {
            return Ok(BoxDecomposition { core: None, pieces });
        }
        let (lo, hi) = (rest.lo[i], rest.hi[i]);
        let a = (lo * t).ceil();
        let b = (hi * t).floor();
        if a > b {
            // Both ends inside one cell.
            pieces.push(StripePiece { piece: rest.clone(), axis: i, cell: (lo * t).floor() as u64 });
            return Ok(BoxDecomposition { core: None, pieces });
        }
        if a / t > lo {
            let mut p = rest.clone();
            p.hi[i] = a / t;
            pieces.push(StripePiece { piece: p, axis: i, cell: a as u64 - 1 });
        }
        if b / t < hi {
            let mut p = rest.clone();
            p.lo[i] = b / t;
            pieces.push(StripePiece { piece: p, axis: i, cell: b as u64 });
        }
        rest.lo[i] = a / t;
        rest.hi[i] = b / t;
        core_lo.push(a as u64);
        core_hi.push(b as u64);
    }
    let core = (rest.volume() > 0.0).then_some(GridBox { lo: core_lo, hi: core_hi });
    Ok(BoxDecomposition { core, pieces })
}

/// `|sum_{s <= t} chi_s 1_B(x_s)|` for every prefix `t = 1..=len`.
pub fn box_discrepancy(points: &[Vec<f64>], signs: &[i8], bx: &RealBox) -> Vec<i64> {
    let mut acc = 0i64;
    points
        .iter()
        .zip(signs)
        .map(|(x, &s)| {
            if bx.contains(x) {
                acc += s as i64;
            }
            acc.abs()
        })
        .collect()
}

/// Right-continuous step CDF `F(x) = p_i` for `x_i <= x < x_{i+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfTable {
    xs: Vec<f64>,
    ps: Vec<f64>,
}

impl CdfTable {
    pub fn new(xs: Vec<f64>, ps: Vec<f64>) -> Result<Self> {
        if xs.is_empty() || xs.len() != ps.len() {
            return Err(Error::InvalidInput("CDF table needs matching, nonempty knots".into()));
        }
        let monotone = xs.windows(2).all(|w| w[0] <= w[1]) && ps.windows(2).all(|w| w[0] <= w[1]);
        if !monotone || ps[0] < 0.0 || (ps[ps.len() - 1] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput("CDF table is not a nondecreasing map onto [0,1]".into()));
        }
        Ok(Self { xs, ps })
    }

    /// Empirical CDF of `samples`.
    pub fn empirical(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("empirical CDF needs samples".into()));
        }
        let mut xs = samples.to_vec();
        xs.sort_by(f64::total_cmp);
        let m = xs.len() as f64;
        let ps = (1..=xs.len()).map(|i| i as f64 / m).collect();
        Self::new(xs, ps)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.xs.partition_point(|&k| k <= x);
        if i == 0 {
            0.0
        } else {
            self.ps[i - 1]
        }
    }
}

/// Marginal CDF of one coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Marginal {
    Uniform,
    /// `F(x) = x^p`.
    Power(f64),
    Table(CdfTable),
}

impl Marginal {
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self {
            Marginal::Uniform => x,
            Marginal::Power(p) => x.powf(*p),
            Marginal::Table(t) => t.eval(x),
        }
    }
}

/// Componentwise probability integral transform.
pub fn cdf_transform(x: &[f64], marginals: &[Marginal]) -> Result<Vec<f64>> {
    if x.len() != marginals.len() {
        return Err(Error::InvalidInput("one marginal per coordinate required".into()));
    }
    Ok(x.iter().zip(marginals).map(|(&v, m)| m.eval(v)).collect())
}

/// Kolmogorov-Smirnov distance of a sample from the uniform distribution.
pub fn ks_uniform(sample: &[f64]) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let m = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / m).abs().max(((i + 1) as f64 / m - x).abs()))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PointDistribution {
    Uniform,
    /// Density `p x^(p-1)` on each axis independently.
    Power(f64),
    /// Half `Beta(2,5) x Beta(5,2)`, half `Beta(5,2) x Beta(2,5)` (for
    /// `d = 2`; further axes repeat the pattern).
    BetaMixture,
    /// The same point every time.
    Repeated(Vec<f64>),
}

impl PointDistribution {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "mixture" | "beta-mixture" => Ok(Self::BetaMixture),
            other => match other.strip_prefix("power:") {
                Some(p) => p
                    .parse::<f64>()
                    .ok()
                    .filter(|p| *p > 0.0)
                    .map(Self::Power)
                    .ok_or_else(|| Error::InvalidInput(format!("bad power `{p}`"))),
                None => Err(Error::InvalidInput(format!("unknown point distribution `{other}`"))),
            },
        }
    }

    pub fn sample(&self, rng: &mut impl Rng, d: usize) -> Vec<f64> {
        match self {
            Self::Uniform => (0..d).map(|_| rng.random::<f64>()).collect(),
            Self::Power(p) => (0..d).map(|_| rng.random::<f64>().powf(1.0 / p)).collect(),
            Self::BetaMixture => {
                let a = Beta::new(2.0, 5.0).expect("valid beta");
                let b = Beta::new(5.0, 2.0).expect("valid beta");
                let flip = rng.random::<bool>();
                (0..d)
                    .map(|i| {
                        let first = (i % 2 == 0) ^ flip;
                        if first {
                            a.sample(rng)
                        } else {
                            b.sample(rng)
                        }
                    })
                    .collect()
            }
            Self::Repeated(x) => x.clone(),
        }
    }

    /// Known marginals, or `None` when they must be estimated.
    pub fn marginals(&self, d: usize) -> Option<Vec<Marginal>> {
        match self {
            Self::Uniform => Some(vec![Marginal::Uniform; d]),
            Self::Power(p) => Some(vec![Marginal::Power(*p); d]),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TusnadyAlgorithm {
    Potential,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TusnadyConfig {
    pub t: u64,
    pub d: usize,
    pub distribution: PointDistribution,
    pub seed: u64,
    pub algorithm: TusnadyAlgorithm,
    pub budget: usize,
    pub pool_size: usize,
    pub warmup: usize,
    pub kappa: Option<usize>,
    pub lambda: Option<f64>,
}

impl TusnadyConfig {
    pub fn new(t: u64, d: usize, distribution: PointDistribution, seed: u64) -> Self {
        Self {
            t,
            d,
            distribution,
            seed,
            algorithm: TusnadyAlgorithm::Potential,
            budget: 2048,
            pool_size: 512,
            warmup: 4096,
            kappa: None,
            lambda: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TusnadyCheckpoint {
    pub t: usize,
    /// Max over tracked boxes of `|disc_t(B)|`.
    pub max_box_disc: i64,
    pub max_stripe_count: u64,
    pub max_stripe_disc: i64,
    pub phi: f64,
    /// Vector-trace discrepancy equals the direct count for every box.
    pub recount_ok: bool,
}

#[derive(Debug, Clone)]
pub struct TusnadyReport {
    pub config: TusnadyConfig,
    pub kappa: usize,
    pub lambda: f64,
    pub boxes: Vec<GridBox>,
    pub checkpoints: Vec<TusnadyCheckpoint>,
    /// `box_disc[c][b]`: signed discrepancy of box `b` at checkpoint `c`.
    pub box_disc: Vec<Vec<i64>>,
    pub steps: Vec<StepRecord>,
    pub points: Vec<Vec<f64>>,
    pub max_box_disc: i64,
    pub slope: Option<SlopeFit>,
    pub recount_ok: bool,
}

/// Runs the online coloring for `config.t` arrivals.
pub fn run_tusnady(config: &TusnadyConfig) -> Result<TusnadyReport> {
    let grid = DyadicGrid::new(config.t, config.d)?;
    let horizon = config.t as usize;
    let mut input_rng = stream_rng(config.seed, Stream::Input);
    let marginals = match config.distribution.marginals(config.d) {
        Some(m) => m,
        None => {
            let mut warm = child_rng(config.seed, Stream::Input, 1);
            let sample: Vec<Vec<f64>> =
                (0..config.warmup.max(1)).map(|_| config.distribution.sample(&mut warm, config.d)).collect();
            (0..config.d)
                .map(|i| Ok(Marginal::Table(CdfTable::empirical(&sample.iter().map(|x| x[i]).collect::<Vec<_>>())?)))
                .collect::<Result<_>>()?
        }
    };
    let tests = dyadic_generated_testset(&grid, config.budget, config.seed)?;
    let l = grid.log_t as f64;
    let point_scale = (l + 1.0).powf(-(config.d as f64) / 2.0);
    let test_scale = (2.0 * l).powf(-(config.d as f64) / 2.0);
    let n_boxes = grid.box_count() as usize;
    let kappa = config.kappa.unwrap_or_else(|| crate::covariance::default_kappa(n_boxes, horizon));
    let lambda = config.lambda.unwrap_or_else(|| default_lambda(kappa, n_boxes, horizon));

    let mut state = if config.algorithm == TusnadyAlgorithm::Potential {
        let mut pool_rng = stream_rng(config.seed, Stream::Pool);
        let pool_w = 0.5 / config.pool_size.max(1) as f64;
        let test_w = 0.5 / tests.len() as f64;
        let mut atoms = Vec::with_capacity(config.pool_size + tests.len());
        for _ in 0..config.pool_size.max(1) {
            let x = cdf_transform(&config.distribution.sample(&mut pool_rng, config.d), &marginals)?;
            let v = dyadic_boxes_for_point(&x, &grid)?;
            atoms.push((v.to_sparse(point_scale), pool_w, AtomTag::InputSurrogate));
        }
        for tb in &tests {
            atoms.push((SparseVector::indicator(tb.cover.clone(), test_scale), test_w, AtomTag::TestVector));
        }
        Some(PotentialState::new(Arc::new(SparseAtoms::new(atoms, kappa)?), lambda, Variant::Cosh)?)
    } else {
        None
    };
    let mut sign_rng = stream_rng(config.seed, Stream::Algorithm);

    let checkpoints = geometric_checkpoints(horizon, 1.25);
    let mut next_cp = 0;
    let mut exact_d: HashMap<u64, i64> = HashMap::new();
    let mut box_disc = vec![0i64; tests.len()];
    let t = grid.t() as usize;
    let mut stripe_count = vec![vec![0u64; t]; config.d];
    let mut stripe_disc = vec![vec![0i64; t]; config.d];
    let mut report = TusnadyReport {
        config: config.clone(),
        kappa,
        lambda,
        boxes: tests.iter().map(|b| b.grid_box.clone()).collect(),
        checkpoints: Vec::new(),
        box_disc: Vec::new(),
        steps: Vec::with_capacity(horizon),
        points: Vec::with_capacity(horizon),
        max_box_disc: 0,
        slope: None,
        recount_ok: true,
    };
    let mut max_so_far = 0i64;
    for step in 1..=horizon {
        let x = cdf_transform(&config.distribution.sample(&mut input_rng, config.d), &marginals)?;
        let cells = grid.cells(&x);
        let pv = point_vector_from_cells(&cells, &grid);
        let (sign, phi, delta) = match state.as_mut() {
            Some(st) => {
                let v = pv.to_sparse(point_scale);
                let proj = st.project(&v);
                let pair = st.delta_pair(&proj, 1.0)?;
                let s = pair.best();
                st.apply_projected(&v, &proj, s.value())?;
                (s, st.phi(), pair.for_sign(s))
            }
            None => (if sign_rng.random::<bool>() { Sign::Plus } else { Sign::Minus }, f64::NAN, f64::NAN),
        };
        let chi = sign.as_i8() as i64;
        for &id in &pv.ids {
            *exact_d.entry(id).or_insert(0) += chi;
        }
        for (b, tb) in tests.iter().enumerate() {
            if tb.grid_box.contains_cells(&cells) {
                box_disc[b] += chi;
                max_so_far = max_so_far.max(box_disc[b].abs());
            }
        }
        for (i, &c) in cells.iter().enumerate() {
            stripe_count[i][c as usize] += 1;
            stripe_disc[i][c as usize] += chi;
        }
        report.steps.push(StepRecord::new(step, sign, phi, delta));
        report.points.push(x);
        if next_cp < checkpoints.len() && checkpoints[next_cp] == step {
            next_cp += 1;
            let recount_ok = tests.iter().zip(&box_disc).all(|(tb, &disc)| {
                tb.cover.iter().map(|id| exact_d.get(id).copied().unwrap_or(0)).sum::<i64>() == disc
            });
            report.recount_ok &= recount_ok;
            report.checkpoints.push(TusnadyCheckpoint {
                t: step,
                max_box_disc: max_so_far,
                max_stripe_count: stripe_count.iter().flatten().copied().max().unwrap_or(0),
                max_stripe_disc: stripe_disc.iter().flatten().map(|v| v.abs()).max().unwrap_or(0),
                phi,
                recount_ok,
            });
            report.box_disc.push(box_disc.clone());
        }
    }
    report.max_box_disc = max_so_far;
    let series: Vec<(f64, f64)> =
        report.checkpoints.iter().map(|c| (c.t as f64, c.max_box_disc as f64)).collect();
    report.slope = slope_fit(&series, horizon as f64 / 100.0, horizon as f64);
    Ok(report)
}

impl TusnadyReport {
    /// Per-box CSV: `box,bounds,t,disc` for every checkpoint.
    pub fn write_box_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "box,bounds,t,disc")?;
        for (cp, discs) in self.checkpoints.iter().zip(&self.box_disc) {
            for (b, (bx, disc)) in self.boxes.iter().zip(discs).enumerate() {
                writeln!(w, "{b},{},{},{disc}", bx.label(), cp.t)?;
            }
        }
        Ok(())
    }

    pub fn signs(&self) -> Vec<i8> {
        self.steps.iter().map(|s| s.sign).collect()
    }
}
