//! Multi-resolution nets over the polar body and the chaining edges between
//! consecutive resolutions.
//!
//! Nets come from one greedy farthest-point ordering per slice: the net at
//! resolution `eps` is the prefix of the ordering whose insertion radii
//! exceed `eps`. Prefixes are nested, and the first point is always the
//! origin, so the coarsest net is `{0}`.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::body::{BodyKind, ConvexBodyRep};
use crate::covariance::{ScaleDecomposition, ScaleIndex};
use crate::error::{Error, Result};
use crate::linalg::{dist2, dot, norm2, scaled, sub};
use crate::potential::{AtomTag, TestAtom, TestDistribution};
use crate::rng::{child_rng, Stream};

pub const NET_CACHE_VERSION: u32 = 1;
/// Layers whose share of the chaining mixture falls below this are not
/// turned into atoms.
pub const DEFAULT_SHARE_FLOOR: f64 = 1e-6;
pub const DEFAULT_EDGE_LIMIT: usize = 4_000_000;
const COVER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct NetOptions {
    /// Cap on the number of net layers per slice; finer layers are dropped.
    pub max_layers: Option<usize>,
    pub seed: u64,
    pub edge_limit: usize,
}

impl Default for NetOptions {
    fn default() -> Self {
        Self { max_layers: None, seed: 0, edge_limit: DEFAULT_EDGE_LIMIT }
    }
}

impl NetOptions {
    /// Layer cap `2 log2(nT)` for a run of `horizon` steps in dimension `n`.
    pub fn for_run(n: usize, horizon: usize, seed: u64) -> Self {
        let cap = (2.0 * ((n.max(1) * horizon.max(1)) as f64).log2()).ceil() as usize;
        Self { max_layers: Some(cap.max(2)), seed, ..Default::default() }
    }
}

/// `e^(4 w^2 / eps^2)`: upper bound on the covering number of a set of
/// Gaussian width `w`.
pub fn sudakov_bound(width: f64, eps: f64) -> f64 {
    (4.0 * width * width / (eps * eps)).exp()
}

/// Greedy farthest-point ordering starting from a fixed first point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyOrder {
    pub order: Vec<u32>,
    /// `radii[i]`: distance of `order[i]` to the earlier points when it was
    /// chosen. Nonincreasing; `radii[0] = f64::MAX`.
    pub radii: Vec<f64>,
}

impl GreedyOrder {
    /// Orders `points` starting at `points[first]`, stopping once every
    /// remaining point is within `stop_eps` of the chosen ones.
    pub fn build(points: &[Vec<f64>], first: usize, stop_eps: f64) -> Self {
        let mut mind: Vec<f64> = points.iter().map(|p| dist2(p, &points[first])).collect();
        mind[first] = -1.0;
        let mut order = vec![first as u32];
        let mut radii = vec![f64::MAX];
        loop {
            let mut best = usize::MAX;
            let mut best_d = stop_eps;
            for (i, &d) in mind.iter().enumerate() {
                if d > best_d {
                    best_d = d;
                    best = i;
                }
            }
            if best == usize::MAX {
                break;
            }
            order.push(best as u32);
            radii.push(best_d);
            mind[best] = -1.0;
            let p = &points[best];
            for (i, q) in points.iter().enumerate() {
                if mind[i] > 0.0 {
                    let d = dist2(p, q);
                    if d < mind[i] {
                        mind[i] = d;
                    }
                }
            }
        }
        Self { order, radii }
    }

    /// Size of the net at resolution `eps`.
    pub fn prefix_len(&self, eps: f64) -> usize {
        self.radii.partition_point(|&r| r > eps).max(1)
    }
}

/// True iff every cloud point is within `eps` of some net point.
pub fn covering_check(net: &[Vec<f64>], cloud: &[Vec<f64>], eps: f64) -> bool {
    if cloud.is_empty() {
        return true;
    }
    if net.is_empty() {
        return false;
    }
    let dir = sweep_direction(net[0].len(), 0, None);
    let index = SweepIndex::new(net, &dir);
    cloud.iter().all(|y| index.any_within(net, y, &dir, eps + COVER_TOL, false))
}

/// Points sorted by their coordinate along a fixed direction, for range
/// queries `|<dir, x - y>| <= r`, which every pair with `|x - y| <= r`
/// satisfies.
struct SweepIndex {
    keys: Vec<f64>,
    ids: Vec<u32>,
}

impl SweepIndex {
    fn new(points: &[Vec<f64>], dir: &[f64]) -> Self {
        let mut pairs: Vec<(f64, u32)> =
            points.iter().enumerate().map(|(i, p)| (dot(p, dir), i as u32)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Self { keys: pairs.iter().map(|p| p.0).collect(), ids: pairs.iter().map(|p| p.1).collect() }
    }

    fn window(&self, key: f64, r: f64) -> std::ops::Range<usize> {
        let lo = self.keys.partition_point(|&k| k < key - r);
        let hi = self.keys.partition_point(|&k| k <= key + r);
        lo..hi
    }

    fn any_within(&self, points: &[Vec<f64>], y: &[f64], dir: &[f64], r: f64, strict_pos: bool) -> bool {
        let key = dot(y, dir);
        self.window(key, r).any(|j| {
            let d = dist2(&points[self.ids[j] as usize], y);
            d <= r && (!strict_pos || d > 0.0)
        })
    }
}

fn sweep_direction(n: usize, seed: u64, within: Option<(&ScaleDecomposition, usize)>) -> Vec<f64> {
    let mut rng = child_rng(seed, Stream::Body, 7);
    for _ in 0..16 {
        let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let g = match within {
            Some((dec, k)) => dec.project(ScaleIndex::Scale(k), &g).unwrap_or(g),
            None => g,
        };
        let r = norm2(&g);
        if r > 1e-12 {
            return scaled(&g, 1.0 / r);
        }
    }
    let mut e = vec![0.0; n];
    e[0] = 1.0;
    e
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetLayer {
    /// Resolution `eps = 2^-level`.
    pub level: i32,
    pub eps: f64,
    /// The net is the first `size` points of the greedy order.
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeLayer {
    pub level: i32,
    pub eps: f64,
    /// `(u, v)` cloud indices with `u` in this layer's net, `v` in the next,
    /// and `0 < |v - u| <= eps`.
    pub pairs: Vec<(u32, u32)>,
}

impl EdgeLayer {
    /// `ln |S| <= (16 / eps^2) ln 2`.
    pub fn within_edge_bound(&self) -> bool {
        self.pairs.is_empty()
            || (self.pairs.len() as f64).ln() <= 16.0 / (self.eps * self.eps) * std::f64::consts::LN_2
    }
}

/// Nets and edges for one scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceNet {
    pub scale: usize,
    pub subspace_dim: usize,
    /// Projected polar cloud; index 0 is the origin.
    pub cloud: Vec<Vec<f64>>,
    pub greedy: GreedyOrder,
    pub layers: Vec<NetLayer>,
    /// `edges[i]` joins `layers[i]` to `layers[i + 1]`.
    pub edges: Vec<EdgeLayer>,
    pub diameter: f64,
    /// Whether finer layers were dropped by the layer cap.
    pub truncated: bool,
}

impl SliceNet {
    pub fn net(&self, layer: usize) -> Vec<Vec<f64>> {
        self.greedy.order[..self.layers[layer].size]
            .iter()
            .map(|&i| self.cloud[i as usize].clone())
            .collect()
    }

    pub fn finest(&self) -> &NetLayer {
        self.layers.last().expect("slice has at least one layer")
    }

    pub fn eps_min(&self) -> f64 {
        self.finest().eps
    }

    pub fn edge_vector(&self, layer: usize, edge: usize) -> Vec<f64> {
        let (u, v) = self.edges[layer].pairs[edge];
        sub(&self.cloud[v as usize], &self.cloud[u as usize])
    }

    pub fn covering_ok(&self, layer: usize) -> bool {
        covering_check(&self.net(layer), &self.cloud, self.layers[layer].eps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainingNet {
    pub version: u32,
    pub kind: BodyKind,
    pub n: usize,
    pub lambda: f64,
    pub seed: u64,
    pub slices: Vec<SliceNet>,
}

/// Coarsest and finest levels for a slice of diameter `diam` and dimension
/// `dim`. Slices wider than 2 get one extra level (`eps = 2`) so that the
/// origin still covers them.
pub fn level_range(diam: f64, dim: usize, lambda: f64) -> (i32, i32) {
    let coarse = if diam > 2.0 {
        -1
    } else {
        (1.0 / diam).ceil().log2().floor() as i32
    };
    let fine = ((dim.max(1) as f64).sqrt() / (10.0 * lambda)).log2().ceil() as i32;
    (coarse, fine.max(coarse))
}

/// Builds the nets of every nonempty scale of `dec` on `body`'s polar cloud.
pub fn build_chaining_net(
    body: &ConvexBodyRep,
    dec: &ScaleDecomposition,
    lambda: f64,
    opts: &NetOptions,
) -> Result<ChainingNet> {
    if dec.dim() != body.n {
        return Err(Error::InvalidInput(format!(
            "body dimension {} does not match decomposition dimension {}",
            body.n,
            dec.dim()
        )));
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput("lambda must be positive".into()));
    }
    let scales = dec.nonempty_scales();
    let slices = scales
        .par_iter()
        .map(|&k| build_slice(body, dec, k, lambda, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(ChainingNet {
        version: NET_CACHE_VERSION,
        kind: body.kind,
        n: body.n,
        lambda,
        seed: opts.seed,
        slices: slices.into_iter().flatten().collect(),
    })
}

fn build_slice(
    body: &ConvexBodyRep,
    dec: &ScaleDecomposition,
    k: usize,
    lambda: f64,
    opts: &NetOptions,
) -> Result<Option<SliceNet>> {
    let mut cloud = vec![vec![0.0; body.n]];
    for y in &body.polar_cloud {
        cloud.push(dec.project(ScaleIndex::Scale(k), y)?);
    }
    let diameter = 2.0 * cloud.iter().map(|y| norm2(y)).fold(0.0, f64::max);
    if diameter <= 0.0 {
        return Ok(None);
    }
    let dim = dec.subspace_dim(k);
    let (coarse, mut fine) = level_range(diameter, dim, lambda);
    let mut truncated = false;
    if let Some(cap) = opts.max_layers {
        let cap = cap.max(1) as i32;
        if fine - coarse + 1 > cap {
            fine = coarse + cap - 1;
            truncated = true;
        }
    }
    let eps_of = |l: i32| 2f64.powi(-l);
    let greedy = GreedyOrder::build(&cloud, 0, eps_of(fine));
    let layers: Vec<NetLayer> = (coarse..=fine)
        .map(|level| {
            let eps = eps_of(level);
            NetLayer { level, eps, size: greedy.prefix_len(eps) }
        })
        .collect();
    if layers[0].size != 1 {
        return Err(Error::NetConstruction(format!(
            "scale {k}: coarsest layer eps {} does not reduce to the origin",
            layers[0].eps
        )));
    }
    let dir = sweep_direction(body.n, opts.seed ^ k as u64, Some((dec, k)));
    let mut edges = Vec::with_capacity(layers.len().saturating_sub(1));
    let mut total = 0usize;
    for w in layers.windows(2) {
        let (from, to) = (w[0], w[1]);
        let targets: Vec<Vec<f64>> =
            greedy.order[..to.size].iter().map(|&i| cloud[i as usize].clone()).collect();
        let index = SweepIndex::new(&targets, &dir);
        let mut pairs = Vec::new();
        for &u in &greedy.order[..from.size] {
            let pu = &cloud[u as usize];
            for j in index.window(dot(pu, &dir), from.eps) {
                let local = index.ids[j] as usize;
                let dist = dist2(&targets[local], pu);
                if dist > 0.0 && dist <= from.eps {
                    pairs.push((u, greedy.order[local]));
                }
            }
        }
        pairs.sort_unstable();
        total += pairs.len();
        if total > opts.edge_limit {
            return Err(Error::NetConstruction(format!(
                "scale {k}: more than {} edges; the cloud is too dense for this layer range",
                opts.edge_limit
            )));
        }
        let layer = EdgeLayer { level: from.level, eps: from.eps, pairs };
        if !layer.within_edge_bound() {
            return Err(Error::NetConstruction(format!(
                "scale {k}: {} edges at eps {} exceed 2^(16/eps^2)",
                layer.pairs.len(),
                layer.eps
            )));
        }
        edges.push(layer);
    }
    Ok(Some(SliceNet {
        scale: k,
        subspace_dim: dim,
        cloud,
        greedy,
        layers,
        edges,
        diameter,
        truncated,
    }))
}

impl ChainingNet {
    pub fn warnings(&self) -> Vec<String> {
        self.slices
            .iter()
            .filter(|s| s.truncated)
            .map(|s| {
                format!(
                    "scale {}: layer count capped, finest eps {:.3e}",
                    s.scale,
                    s.eps_min()
                )
            })
            .collect()
    }

    /// Every layer of every slice covers its cloud at its own resolution.
    pub fn all_layers_cover(&self) -> bool {
        self.slices.iter().all(|s| (0..s.layers.len()).all(|l| s.covering_ok(l)))
    }

    pub fn all_edges_within_bound(&self) -> bool {
        self.slices.iter().all(|s| s.edges.iter().all(EdgeLayer::within_edge_bound))
    }

    /// `(eps, share)` of each edge layer of `slice` with nonempty edges;
    /// shares proportional to `2^(-2/eps^2)`, summing to one.
    pub fn layer_shares(&self, slice: usize) -> Vec<(usize, f64)> {
        let s = &self.slices[slice];
        let logs: Vec<(usize, f64)> = s
            .edges
            .iter()
            .enumerate()
            .filter(|(_, e)| !e.pairs.is_empty())
            .map(|(i, e)| (i, -2.0 / (e.eps * e.eps) * std::f64::consts::LN_2))
            .collect();
        normalize_log_weights(&logs)
    }

    /// Chaining test atoms: a uniform scale, a layer by share, a uniform
    /// edge, scaled by `r^2 = eps^-2` and mapped through the test map of
    /// `dec`. Layers below `share_floor` are skipped.
    pub fn distribution(&self, dec: &ScaleDecomposition, share_floor: f64) -> Result<TestDistribution> {
        let usable: Vec<usize> =
            (0..self.slices.len()).filter(|&i| !self.layer_shares(i).is_empty()).collect();
        if usable.is_empty() {
            return Err(Error::EmptyAtoms);
        }
        let slice_share = 1.0 / usable.len() as f64;
        let mut atoms = Vec::new();
        for &si in &usable {
            let s = &self.slices[si];
            let kept: Vec<(usize, f64)> = self
                .layer_shares(si)
                .into_iter()
                .filter(|&(_, share)| share >= share_floor)
                .collect();
            let kept_total: f64 = kept.iter().map(|p| p.1).sum();
            for (li, share) in kept {
                let layer = &s.edges[li];
                let r2 = 1.0 / (layer.eps * layer.eps);
                let w = slice_share * share / kept_total / layer.pairs.len() as f64;
                for e in 0..layer.pairs.len() {
                    let v = scaled(&s.edge_vector(li, e), r2);
                    atoms.push(TestAtom { vector: dec.map_test(&v), weight: w, tag: AtomTag::ChainingEdge });
                }
            }
        }
        TestDistribution::new(atoms)
    }

    /// Number of chaining atoms [`Self::distribution`] would produce.
    pub fn atom_count(&self, share_floor: f64) -> usize {
        (0..self.slices.len())
            .map(|si| {
                self.layer_shares(si)
                    .into_iter()
                    .filter(|&(_, share)| share >= share_floor)
                    .map(|(li, _)| self.slices[si].edges[li].pairs.len())
                    .sum::<usize>()
            })
            .sum()
    }

    pub fn cache_file_name(kind: BodyKind, n: usize, lambda: f64, seed: u64, cloud: usize) -> String {
        format!(
            "net-v{NET_CACHE_VERSION}-{}-n{n}-lambda{lambda:.6e}-seed{seed}-cloud{cloud}.json",
            kind.name()
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(f, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        let net: Self = serde_json::from_reader(f)?;
        if net.version != NET_CACHE_VERSION {
            return Err(Error::NetConstruction(format!(
                "cache version {} (expected {NET_CACHE_VERSION})",
                net.version
            )));
        }
        Ok(net)
    }
}

/// Loads a cached net for `(kind, n, lambda, seed)` from `dir` or builds and
/// stores it. A cached net whose scales disagree with `dec` is rebuilt.
pub fn load_or_build(
    dir: &Path,
    body: &ConvexBodyRep,
    dec: &ScaleDecomposition,
    lambda: f64,
    opts: &NetOptions,
) -> Result<(ChainingNet, PathBuf)> {
    let path = dir.join(ChainingNet::cache_file_name(
        body.kind,
        body.n,
        lambda,
        opts.seed,
        body.polar_cloud.len(),
    ));
    if let Ok(net) = ChainingNet::load(&path) {
        let scales: Vec<(usize, usize)> = net.slices.iter().map(|s| (s.scale, s.subspace_dim)).collect();
        let expected: Vec<(usize, usize)> =
            dec.nonempty_scales().into_iter().map(|k| (k, dec.subspace_dim(k))).collect();
        if scales == expected && net.lambda == lambda {
            return Ok((net, path));
        }
    }
    let net = build_chaining_net(body, dec, lambda, opts)?;
    std::fs::create_dir_all(dir)?;
    net.save(&path)?;
    Ok((net, path))
}

fn normalize_log_weights(logs: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let max = logs.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = logs.iter().map(|p| (p.1 - max).exp()).sum();
    logs.iter().map(|&(i, l)| (i, (l - max).exp() / total)).collect()
}

/// Chaining estimate of `||d||_K` and, when known, the closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KNorm {
    pub net_value: f64,
    pub closed_form: Option<f64>,
}

/// `sum_k [max_{z in finest net} d^T z + eps_min(k) |Pi_k d|]`.
pub fn knorm(body: &ConvexBodyRep, net: &ChainingNet, dec: &ScaleDecomposition, d: &[f64]) -> Result<KNorm> {
    let mut total = 0.0;
    for s in &net.slices {
        let finest = s.finest().size;
        let best = s.greedy.order[..finest]
            .iter()
            .map(|&i| dot(d, &s.cloud[i as usize]))
            .fold(0.0, f64::max);
        let pd = dec.project(ScaleIndex::Scale(s.scale), d)?;
        total += best + s.eps_min() * norm2(&pd);
    }
    let closed_form = match body.kind {
        BodyKind::EuclideanBall | BodyKind::ScaledCube | BodyKind::WholeSpace => Some(body.norm(d)),
        BodyKind::CustomPolarCloud => None,
    };
    Ok(KNorm { net_value: total, closed_form })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::{dyadic_reduce, CovarianceModel};
    use crate::testsets::body::{build_body, BodyOptions};
    use nalgebra::DMatrix;

    fn isotropic_dec(n: usize) -> ScaleDecomposition {
        let model = CovarianceModel::from_matrix(DMatrix::identity(n, n) / n as f64).unwrap();
        dyadic_reduce(&model, 16).unwrap()
    }

    #[test]
    fn greedy_net_on_an_interval() {
        let mut cloud = vec![vec![0.0]];
        cloud.extend((0..1000).map(|i| vec![-4.0 + 8.0 * i as f64 / 999.0]));
        let g = GreedyOrder::build(&cloud, 0, 1.0);
        let size = g.prefix_len(1.0);
        assert!(size <= 9, "{size}");
        let net: Vec<Vec<f64>> = g.order[..size].iter().map(|&i| cloud[i as usize].clone()).collect();
        assert!(covering_check(&net, &cloud, 1.0));
        // Exhaustive oracle.
        let worst = cloud
            .iter()
            .map(|y| net.iter().map(|z| (y[0] - z[0]).abs()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
        assert!(worst <= 1.0 + 1e-12);
    }

    #[test]
    fn covering_examples() {
        let cloud = vec![vec![0.3, 0.1], vec![-0.2, 0.5]];
        assert!(covering_check(&cloud, &cloud, 1e-6));
        assert!(!covering_check(&[vec![0.0]], &[vec![2.0 * 0.3]], 0.3));
        let grid: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64 / 99.0]).collect();
        assert!(covering_check(&[vec![0.0], vec![0.9]], &grid, 1.0));
        assert!(!covering_check(&[vec![0.0]], &grid, 0.5));
    }

    #[test]
    fn sudakov_examples() {
        assert!((sudakov_bound(1.5, 1.0) - 8103.083927575384).abs() < 1e-6);
        assert!((sudakov_bound(1.5, 3.0) - std::f64::consts::E).abs() < 1e-12);
        assert!((sudakov_bound(1.5, 1e6) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn layer_range_follows_diameter() {
        assert_eq!(level_range(0.7, 8, 0.01).0, 1);
        assert_eq!(level_range(1.5, 8, 0.01).0, 0);
        assert_eq!(level_range(3.0, 8, 0.01).0, -1);
        assert_eq!(level_range(0.2, 1, 0.05).0, 2);
        assert_eq!(level_range(0.2, 4, 0.01).1, 5);
    }

    #[test]
    fn two_layer_shares() {
        let shares = normalize_log_weights(&[
            (0, -2.0 * std::f64::consts::LN_2),
            (1, -8.0 * std::f64::consts::LN_2),
        ]);
        assert!((shares[0].1 - 0.25 / (0.25 + 2f64.powi(-8))).abs() < 1e-12);
        assert!((shares[0].1 - 0.98462).abs() < 1e-5);
        assert!((shares[1].1 - 0.01538).abs() < 1e-5);
    }

    #[test]
    fn ball_net_is_valid_and_tracks_the_norm() {
        let n = 3;
        let body = build_body(
            BodyKind::EuclideanBall,
            n,
            &BodyOptions { cloud_size: Some(600), gamma_samples: 2000, seed: 5 },
        )
        .unwrap();
        let dec = isotropic_dec(n);
        let net = build_chaining_net(&body, &dec, 1e-3, &NetOptions::default()).unwrap();
        assert_eq!(net.slices.len(), 1);
        let s = &net.slices[0];
        assert_eq!(s.layers[0].size, 1);
        assert!(s.cloud[s.greedy.order[0] as usize].iter().all(|x| *x == 0.0));
        assert!(net.all_layers_cover());
        assert!(net.all_edges_within_bound());
        for (li, layer) in s.edges.iter().enumerate() {
            for e in 0..layer.pairs.len() {
                let len = norm2(&s.edge_vector(li, e));
                assert!(len > 0.0 && len <= layer.eps + 1e-12);
            }
        }
        let k = knorm(&body, &net, &dec, &[0.0; 3]).unwrap();
        assert_eq!(k.net_value, 0.0);
        let d = [3.0, -4.0, 1.0];
        let k = knorm(&body, &net, &dec, &d).unwrap();
        let exact = k.closed_form.unwrap();
        assert!((k.net_value - exact).abs() <= 0.1 * exact, "{k:?}");
        let dist = net.distribution(&dec, DEFAULT_SHARE_FLOOR).unwrap();
        assert!((dist.total_weight() - 1.0).abs() < 1e-9);
        assert_eq!(dist.len(), net.atom_count(DEFAULT_SHARE_FLOOR));
    }

    #[test]
    fn net_cache_round_trip() {
        let body = build_body(
            BodyKind::ScaledCube,
            2,
            &BodyOptions { cloud_size: Some(100), gamma_samples: 2000, seed: 1 },
        )
        .unwrap();
        let dec = isotropic_dec(2);
        let dir = tempfile::tempdir().unwrap();
        let (a, path) = load_or_build(dir.path(), &body, &dec, 0.05, &NetOptions::default()).unwrap();
        assert!(path.exists());
        let (b, _) = load_or_build(dir.path(), &body, &dec, 0.05, &NetOptions::default()).unwrap();
        assert_eq!(a, b);
    }
}
