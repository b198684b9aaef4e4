//! Weighted multi-color balancing through a balanced binary tree.
//!
//! Color `c` of weight `w_c` owns `floor(w_c)` consecutive leaves. Every
//! branching node keeps a potential over `beta * d^-`, where
//! `d^- = q^r d_left - q^l d_right` is the weighted difference of its
//! children's sums, and an arriving vector goes to the leaf whose root path
//! raises the total potential `Psi` the least.

use std::sync::Arc;

use serde::Serialize;

use crate::covariance::ScaleDecomposition;
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm_inf, scaled};
use crate::potential::{strictly_less, AtomSet, AtomTag, DenseAtoms, PotentialState, Projection, Variant};
use crate::testsets::ConvexBodyRep;

const WEIGHT_TOL: f64 = 1e-9;
pub const Q_MIN: f64 = 1.0 / 20.0;
pub const Q_MAX: f64 = 19.0 / 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Leaf {
    pub color: usize,
    pub weight: f64,
}

/// Heap-indexed tree: node `(j, k)` is `2^j + k`, leaves sit at level `h`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColorTree {
    weights: Vec<f64>,
    eta: f64,
    h: usize,
    /// Bottom-level slots; `None` marks a removed leaf.
    slots: Vec<Option<Leaf>>,
    /// Subtree weight per heap index (index 0 unused).
    node_weight: Vec<f64>,
    /// Heap indices of the maximal single-color nodes of each color.
    maximal: Vec<Vec<usize>>,
    beta: f64,
}

/// Builds the tree; `eta` bounds the weights from above.
pub fn build_tree(weights: &[f64], eta: f64) -> Result<ColorTree> {
    if weights.len() < 2 {
        return Err(Error::InvalidTree("at least two colors are required".into()));
    }
    for (c, &w) in weights.iter().enumerate() {
        if !(w >= 1.0 && w <= eta && w.is_finite()) {
            return Err(Error::InvalidTree(format!("weight {w} of color {c} outside [1, {eta}]")));
        }
    }
    let mut leaves = Vec::new();
    for (c, &w) in weights.iter().enumerate() {
        let count = w.floor() as usize;
        for _ in 0..count {
            leaves.push(Leaf { color: c, weight: w / count as f64 });
        }
    }
    let m = leaves.len();
    let h = m.next_power_of_two().trailing_zeros() as usize;
    let width = 1usize << h;
    let removed = width - m;
    // Every second slot from the right: 2^h - 1, 2^h - 3, ...
    let mut slots = Vec::with_capacity(width);
    let mut next = leaves.into_iter();
    for pos in 0..width {
        let is_removed = pos % 2 == 1 && (width - 1 - pos) / 2 < removed;
        slots.push(if is_removed { None } else { next.next() });
    }
    let mut node_weight = vec![0.0; 2 * width];
    for (pos, slot) in slots.iter().enumerate() {
        node_weight[width + pos] = slot.map_or(0.0, |l| l.weight);
    }
    for i in (1..width).rev() {
        node_weight[i] = node_weight[2 * i] + node_weight[2 * i + 1];
    }
    let mut tree = ColorTree {
        weights: weights.to_vec(),
        eta,
        h,
        slots,
        node_weight,
        maximal: vec![Vec::new(); weights.len()],
        beta: 1.0 / (400.0 * h.max(1) as f64),
    };
    tree.maximal = tree.compute_maximal();
    Ok(tree)
}

impl ColorTree {
    pub fn colors(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn set_beta(&mut self, beta: f64) {
        self.beta = beta;
    }

    pub fn width(&self) -> usize {
        1 << self.h
    }

    pub fn slots(&self) -> &[Option<Leaf>] {
        &self.slots
    }

    pub fn leaf_count(&self) -> usize {
        self.slots.iter().flatten().count()
    }

    /// Subtree weight of heap node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        self.node_weight[i]
    }

    pub fn level_of(i: usize) -> usize {
        (usize::BITS - 1 - i.leading_zeros()) as usize
    }

    pub fn is_leaf(&self, i: usize) -> bool {
        i >= self.width()
    }

    /// Internal node with two nonempty children.
    pub fn is_branching(&self, i: usize) -> bool {
        !self.is_leaf(i) && self.node_weight[2 * i] > 0.0 && self.node_weight[2 * i + 1] > 0.0
    }

    pub fn q_left(&self, i: usize) -> f64 {
        self.node_weight[2 * i] / self.node_weight[i]
    }

    pub fn q_right(&self, i: usize) -> f64 {
        self.node_weight[2 * i + 1] / self.node_weight[i]
    }

    /// Heap index of bottom slot `pos`.
    pub fn slot_node(&self, pos: usize) -> usize {
        self.width() + pos
    }

    /// Color of every leaf below `i`, if they share one.
    fn single_color(&self, i: usize) -> Option<usize> {
        let level = Self::level_of(i);
        let span = 1usize << (self.h - level);
        let first = (i - (1 << level)) * span;
        let mut color = None;
        for slot in &self.slots[first..first + span] {
            if let Some(l) = slot {
                match color {
                    None => color = Some(l.color),
                    Some(c) if c != l.color => return None,
                    _ => {}
                }
            }
        }
        color
    }

    fn compute_maximal(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.colors()];
        let mut stack = vec![1usize];
        while let Some(i) = stack.pop() {
            if self.node_weight[i] == 0.0 {
                continue;
            }
            match self.single_color(i) {
                Some(c) => out[c].push(i),
                None => {
                    stack.push(2 * i + 1);
                    stack.push(2 * i);
                }
            }
        }
        for m in &mut out {
            m.sort_unstable();
        }
        out
    }

    /// Maximal nodes whose leaves all have color `c`.
    pub fn maximal_nodes(&self, c: usize) -> &[usize] {
        &self.maximal[c]
    }

    /// Checks every structural invariant.
    pub fn verify(&self) -> TreeReport {
        let width = self.width();
        let m = self.leaf_count();
        let expected: usize = self.weights.iter().map(|w| w.floor() as usize).sum();
        let removed_positions: Vec<usize> =
            (0..width).filter(|&p| self.slots[p].is_none()).collect();
        let removal_ok = m == expected
            && width >= m
            && (self.h == 0 || (1usize << (self.h - 1)) < m)
            && removed_positions.len() == width - m
            && removed_positions.iter().all(|&p| self.slots[p ^ 1].is_some());
        let leaf_weights_ok = self.slots.iter().flatten().all(|l| (1.0..=2.0 + WEIGHT_TOL).contains(&l.weight));
        let colors: Vec<usize> = self.slots.iter().flatten().map(|l| l.color).collect();
        let consecutive_ok = colors.windows(2).all(|w| w[0] <= w[1]);
        let mut max_ratio: f64 = 1.0;
        for level in 0..=self.h {
            let ws: Vec<f64> =
                (1 << level..2 << level).map(|i| self.node_weight[i]).filter(|&w| w > 0.0).collect();
            let (lo, hi) = ws.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &w| (a.min(w), b.max(w)));
            if !ws.is_empty() {
                max_ratio = max_ratio.max(hi / lo);
            }
        }
        let (mut q_min, mut q_max) = (1.0f64, 0.0f64);
        let mut q_sum_err: f64 = 0.0;
        for i in (1..width).filter(|&i| self.is_branching(i)) {
            let (l, r) = (self.q_left(i), self.q_right(i));
            q_min = q_min.min(l.min(r));
            q_max = q_max.max(l.max(r));
            q_sum_err = q_sum_err.max((l + r - 1.0).abs());
        }
        let total: f64 = self.weights.iter().sum();
        let maximal_ok = self.maximal.iter().all(|ms| !ms.is_empty() && ms.len() <= 2 * self.h.max(1));
        TreeReport {
            removal_ok,
            leaf_weights_ok,
            consecutive_ok,
            max_level_ratio: max_ratio,
            q_min,
            q_max,
            q_sum_err,
            root_weight_err: (self.node_weight[1] - total).abs(),
            maximal_ok,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TreeReport {
    pub removal_ok: bool,
    pub leaf_weights_ok: bool,
    pub consecutive_ok: bool,
    pub max_level_ratio: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub q_sum_err: f64,
    pub root_weight_err: f64,
    pub maximal_ok: bool,
}

impl TreeReport {
    pub fn balance_ok(&self) -> bool {
        self.max_level_ratio <= 4.0 + WEIGHT_TOL
    }

    pub fn walk_ok(&self) -> bool {
        self.q_min >= Q_MIN && self.q_max <= Q_MAX && self.q_sum_err <= 1e-12
    }

    pub fn holds(&self) -> bool {
        self.removal_ok
            && self.leaf_weights_ok
            && self.consecutive_ok
            && self.balance_ok()
            && self.walk_ok()
            && self.root_weight_err <= WEIGHT_TOL
            && self.maximal_ok
    }
}

/// A norm used to measure color discrepancy.
pub trait Norm {
    fn eval(&self, x: &[f64]) -> f64;
}

pub struct LInf;

impl Norm for LInf {
    fn eval(&self, x: &[f64]) -> f64 {
        norm_inf(x)
    }
}

/// `max_z |<z, x>|` over a finite test set.
pub struct TestSetNorm(pub Vec<Vec<f64>>);

impl Norm for TestSetNorm {
    fn eval(&self, x: &[f64]) -> f64 {
        self.0.iter().map(|z| dot(z, x).abs()).fold(0.0, f64::max)
    }
}

/// `||x||_K` of a convex body.
pub struct BodyNorm<'a>(pub &'a ConvexBodyRep);

impl Norm for BodyNorm<'_> {
    fn eval(&self, x: &[f64]) -> f64 {
        self.0.norm(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Assignment {
    pub color: usize,
    pub slot: usize,
    pub delta_psi: f64,
}

/// Greedy versus randomized-path potential change over fresh draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultiDrift {
    pub trials: usize,
    pub greedy_mean: f64,
    pub greedy_stderr: f64,
    pub randomized_mean: f64,
    pub randomized_stderr: f64,
}

/// The chain `measured <= tree bound <= potential bound`, with the
/// closed-form headline bound `h kappa ln(...) / (beta lambda)` and the
/// constant that multiplies it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscrepancyChain {
    pub measured: f64,
    /// Same combination of node differences, with the measured `|d^-|`.
    pub tree_bound: f64,
    /// Node differences replaced by what each node's potential allows.
    pub potential_bound: f64,
    pub headline: f64,
    /// `potential_bound / headline`.
    pub constant: f64,
}

impl DiscrepancyChain {
    pub fn holds(&self) -> bool {
        let tol = 1e-9 * self.potential_bound.max(1.0);
        self.measured <= self.tree_bound + tol && self.tree_bound <= self.potential_bound + tol
    }
}

/// Online multi-color balancer over a [`ColorTree`].
#[derive(Debug, Clone)]
pub struct MulticolorBalancer {
    tree: ColorTree,
    dec: Arc<ScaleDecomposition>,
    atoms: Arc<DenseAtoms>,
    lambda: f64,
    /// One state per branching node (heap indexed).
    nodes: Vec<Option<PotentialState<DenseAtoms>>>,
    /// Sum of assigned vectors below each heap node, original coordinates.
    node_sum: Vec<Vec<f64>>,
    total: Vec<f64>,
    t: usize,
}

impl MulticolorBalancer {
    pub fn new(tree: ColorTree, dec: Arc<ScaleDecomposition>, atoms: Arc<DenseAtoms>, lambda: f64) -> Result<Self> {
        let n = dec.dim();
        if atoms.dim() != n {
            return Err(Error::InvalidInput("atom dimension does not match the decomposition".into()));
        }
        let width = tree.width();
        let mut nodes = Vec::with_capacity(width);
        nodes.push(None);
        for i in 1..width {
            nodes.push(if tree.is_branching(i) {
                Some(PotentialState::new(atoms.clone(), lambda, Variant::Cosh)?)
            } else {
                None
            });
        }
        Ok(Self {
            node_sum: vec![vec![0.0; n]; 2 * width],
            total: vec![0.0; n],
            tree,
            dec,
            atoms,
            lambda,
            nodes,
            t: 0,
        })
    }

    pub fn tree(&self) -> &ColorTree {
        &self.tree
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn node_state(&self, i: usize) -> Option<&PotentialState<DenseAtoms>> {
        self.nodes.get(i).and_then(|s| s.as_ref())
    }

    /// `Psi = sum over branching nodes of Phi(beta d^-)`.
    pub fn psi(&self) -> f64 {
        self.nodes.iter().flatten().map(|s| s.phi()).sum()
    }

    fn project(&self, mv: &Vec<f64>) -> Projection {
        self.nodes
            .iter()
            .flatten()
            .next()
            .expect("a tree with two colors has a branching root")
            .project(mv)
    }

    /// `(left, right)` potential change of each branching node.
    fn node_deltas(&self, proj: &Projection) -> Result<Vec<(f64, f64)>> {
        let beta = self.tree.beta;
        let mut out = vec![(0.0, 0.0); self.tree.width()];
        for (i, st) in self.nodes.iter().enumerate() {
            if let Some(st) = st {
                let (ql, qr) = (self.tree.q_left(i), self.tree.q_right(i));
                let left = st.delta_pair(proj, beta * qr)?.plus;
                let right = st.delta_pair(proj, beta * ql)?.minus;
                out[i] = (left, right);
            }
        }
        Ok(out)
    }

    /// `Delta Psi` of sending `v` to each bottom slot (`None` when removed).
    pub fn slot_costs(&self, v: &[f64]) -> Result<Vec<Option<f64>>> {
        let mv = self.dec.rescale(v);
        let proj = self.project(&mv);
        self.slot_costs_projected(&proj)
    }

    fn slot_costs_projected(&self, proj: &Projection) -> Result<Vec<Option<f64>>> {
        let deltas = self.node_deltas(proj)?;
        let width = self.tree.width();
        let mut cost = vec![0.0; 2 * width];
        for i in 2..2 * width {
            let parent = i / 2;
            let step = if self.tree.is_branching(parent) {
                if i % 2 == 0 {
                    deltas[parent].0
                } else {
                    deltas[parent].1
                }
            } else {
                0.0
            };
            cost[i] = cost[parent] + step;
        }
        Ok((0..width)
            .map(|pos| self.tree.slots[pos].map(|_| cost[width + pos]))
            .collect())
    }

    /// Assigns `v` to the slot of least `Delta Psi` (smallest index on ties).
    pub fn assign(&mut self, v: &[f64]) -> Result<Assignment> {
        let mv = self.dec.rescale(v);
        let proj = self.project(&mv);
        let costs = self.slot_costs_projected(&proj)?;
        let mut best: Option<(usize, f64)> = None;
        for (pos, c) in costs.iter().enumerate() {
            if let Some(c) = *c {
                match best {
                    None => best = Some((pos, c)),
                    Some((_, b)) if strictly_less(c, b) => best = Some((pos, c)),
                    _ => {}
                }
            }
        }
        let (slot, delta_psi) = best.ok_or_else(|| Error::InvalidTree("tree has no leaves".into()))?;
        let beta = self.tree.beta;
        let mut node = self.tree.slot_node(slot);
        axpy(&mut self.node_sum[node], 1.0, v);
        while node > 1 {
            let parent = node / 2;
            if let Some(st) = self.nodes[parent].as_mut() {
                let alpha = if node % 2 == 0 {
                    beta * self.tree.q_right(parent)
                } else {
                    -beta * self.tree.q_left(parent)
                };
                st.apply_projected(&mv, &proj, alpha)?;
            }
            axpy(&mut self.node_sum[parent], 1.0, v);
            node = parent;
        }
        axpy(&mut self.total, 1.0, v);
        self.t += 1;
        let color = self.tree.slots[slot].expect("chosen slot holds a leaf").color;
        Ok(Assignment { color, slot, delta_psi })
    }

    /// Sum of the vectors given to color `c`.
    pub fn color_sum(&self, c: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.total.len()];
        for &m in self.tree.maximal_nodes(c) {
            axpy(&mut out, 1.0, &self.node_sum[m]);
        }
        out
    }

    pub fn total(&self) -> &[f64] {
        &self.total
    }

    /// `|(d_c/w_c - d_c'/w_c') / (1/w_c + 1/w_c')|`.
    pub fn pairwise_disc(&self, c: usize, c2: usize, norm: &dyn Norm) -> f64 {
        let (wc, wc2) = (self.tree.weights[c], self.tree.weights[c2]);
        let (dc, dc2) = (self.color_sum(c), self.color_sum(c2));
        let denom = 1.0 / wc + 1.0 / wc2;
        let diff: Vec<f64> = dc.iter().zip(&dc2).map(|(a, b)| (a / wc - b / wc2) / denom).collect();
        norm.eval(&diff)
    }

    pub fn max_disc(&self, norm: &dyn Norm) -> f64 {
        let r = self.tree.colors();
        let mut best: f64 = 0.0;
        for c in 0..r {
            for c2 in 0..r {
                if c != c2 {
                    best = best.max(self.pairwise_disc(c, c2, norm));
                }
            }
        }
        best
    }

    /// `d^-` of branching node `i` recomputed from the child sums.
    pub fn recomputed_dminus(&self, i: usize) -> Vec<f64> {
        let (ql, qr) = (self.tree.q_left(i), self.tree.q_right(i));
        self.node_sum[2 * i]
            .iter()
            .zip(&self.node_sum[2 * i + 1])
            .map(|(l, r)| qr * l - ql * r)
            .collect()
    }

    /// Largest gap between each node's tracked `beta M d^-` and the value
    /// recomputed from leaf sums.
    pub fn dminus_consistency_error(&self) -> f64 {
        let beta = self.tree.beta;
        let mut worst: f64 = 0.0;
        for (i, st) in self.nodes.iter().enumerate() {
            if let Some(st) = st {
                let expect = scaled(&self.dec.rescale(&self.recomputed_dminus(i)), beta);
                for (a, b) in st.d().iter().zip(&expect) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
        worst
    }

    /// Largest gap between the sum over leaves and the total input.
    pub fn conservation_error(&self) -> f64 {
        let width = self.tree.width();
        let mut sum = vec![0.0; self.total.len()];
        for pos in 0..width {
            axpy(&mut sum, 1.0, &self.node_sum[width + pos]);
        }
        sum.iter().zip(&self.total).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Expected `Delta Psi` of the randomized path: a uniform level `j*`
    /// where the walk follows the sign of the node's linear term, and
    /// `q`-weighted steps elsewhere.
    fn randomized_path_delta(&self, proj: &Projection, deltas: &[(f64, f64)]) -> f64 {
        let width = self.tree.width();
        let h = self.tree.h.max(1);
        let mut total = 0.0;
        for j_star in 0..self.tree.h {
            let mut reach = vec![0.0; 2 * width];
            reach[1] = 1.0;
            let mut expected = 0.0;
            for i in 1..width {
                if reach[i] == 0.0 {
                    continue;
                }
                if !self.tree.is_branching(i) {
                    let child = if self.tree.weight(2 * i) > 0.0 { 2 * i } else { 2 * i + 1 };
                    reach[child] += reach[i];
                    continue;
                }
                let (pl, pr) = if ColorTree::level_of(i) == j_star {
                    let st = self.nodes[i].as_ref().expect("branching node has a state");
                    if st.linear_quadratic(proj).linear <= 0.0 {
                        (1.0, 0.0)
                    } else {
                        (0.0, 1.0)
                    }
                } else {
                    (self.tree.q_left(i), self.tree.q_right(i))
                };
                expected += reach[i] * (pl * deltas[i].0 + pr * deltas[i].1);
                reach[2 * i] += reach[i] * pl;
                reach[2 * i + 1] += reach[i] * pr;
            }
            total += expected;
        }
        total / h as f64
    }

    /// Paired greedy and randomized-path `Delta Psi` over `m` draws.
    pub fn drift_probe(&self, mut sampler: impl FnMut() -> Vec<f64>, m: usize) -> Result<MultiDrift> {
        let m = m.max(1);
        let mut greedy = Vec::with_capacity(m);
        let mut randomized = Vec::with_capacity(m);
        for _ in 0..m {
            let v = sampler();
            let mv = self.dec.rescale(&v);
            let proj = self.project(&mv);
            let deltas = self.node_deltas(&proj)?;
            let costs = self.slot_costs_projected(&proj)?;
            greedy.push(costs.iter().flatten().copied().fold(f64::INFINITY, f64::min));
            randomized.push(self.randomized_path_delta(&proj, &deltas));
        }
        let (gm, gs) = crate::harness::metrics::mean_stderr(&greedy);
        let (rm, rs) = crate::harness::metrics::mean_stderr(&randomized);
        Ok(MultiDrift { trials: m, greedy_mean: gm, greedy_stderr: gs, randomized_mean: rm, randomized_stderr: rs })
    }

    /// Bound chain for the discrepancy in the norm `max_z |<z, x>|` over the
    /// test atoms of the node potentials.
    pub fn discrepancy_chain(&self, tests: &[Vec<f64>]) -> DiscrepancyChain {
        let norm = TestSetNorm(tests.to_vec());
        let measured = self.max_disc(&norm);
        let width = self.tree.width();
        let table = self.atoms.table();
        let test_atoms: Vec<usize> =
            (0..table.atom_count()).filter(|&a| table.tags[a] == AtomTag::Basis || table.tags[a] == AtomTag::TestVector).collect();
        let min_w = test_atoms
            .iter()
            .flat_map(|&a| table.entries_of(a).map(|e| table.weights[e]))
            .fold(f64::INFINITY, f64::min);
        let kappa = table.kappa as f64;
        let beta = self.tree.beta;
        // Per node: measured |d^-| and the bound implied by its potential.
        let mut measured_node = vec![0.0; width];
        let mut allowed_node = vec![0.0; width];
        let mut phi_max: f64 = 0.0;
        for i in 1..width {
            if let Some(st) = &self.nodes[i] {
                measured_node[i] = norm.eval(&self.recomputed_dminus(i));
                phi_max = phi_max.max(st.phi());
                // w_e cosh(a_e) <= Phi, and each test atom contributes
                // half its projection through the test map.
                let per_atom = test_atoms
                    .iter()
                    .map(|&a| {
                        table.entries_of(a).map(|e| (st.phi() / table.weights[e]).acosh()).sum::<f64>()
                    })
                    .fold(0.0, f64::max);
                allowed_node[i] = 2.0 * per_atom / (self.lambda * beta);
            }
        }
        let bound_for = |node_bound: &[f64], c: usize| -> f64 {
            let wc: f64 = self.tree.maximal_nodes(c).iter().map(|&m| self.tree.weight(m)).sum();
            self.tree
                .maximal_nodes(c)
                .iter()
                .map(|&m| {
                    let mut acc = 0.0;
                    let mut node = m;
                    while node > 1 {
                        let parent = node / 2;
                        if self.tree.is_branching(parent) {
                            acc += node_bound[parent] / self.tree.weight(node);
                        }
                        node = parent;
                    }
                    self.tree.weight(m) / wc * acc
                })
                .sum()
        };
        let r = self.tree.colors();
        let pair_max = |node_bound: &[f64]| -> f64 {
            let per: Vec<f64> = (0..r).map(|c| bound_for(node_bound, c)).collect();
            let mut best: f64 = 0.0;
            for c in 0..r {
                for c2 in 0..r {
                    if c != c2 {
                        let denom = 1.0 / self.tree.weights[c] + 1.0 / self.tree.weights[c2];
                        best = best.max((per[c] + per[c2]) / denom);
                    }
                }
            }
            best
        };
        let tree_bound = pair_max(&measured_node);
        let potential_bound = pair_max(&allowed_node);
        let headline = self.tree.h.max(1) as f64 * kappa * (2.0 * phi_max.max(1.0) / min_w).ln()
            / (beta * self.lambda);
        DiscrepancyChain {
            measured,
            tree_bound,
            potential_bound,
            headline,
            constant: potential_bound / headline,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::{dyadic_reduce, CovarianceModel};
    use crate::harness::inputs::{InputSampler, InputSpec};
    use crate::potential::{default_lambda, Sign};
    use crate::testsets::{basis_testset, komlos_mixture};
    use nalgebra::DMatrix;

    fn setup(n: usize, weights: &[f64], seed: u64) -> MulticolorBalancer {
        let model = CovarianceModel::from_matrix(DMatrix::identity(n, n) / n as f64).unwrap();
        let dec = Arc::new(dyadic_reduce(&model, 16).unwrap());
        let pool = InputSpec::Sparse(2).pool(n, 64, seed).unwrap();
        let pool = pool.map_vectors(|v| dec.rescale(v)).unwrap();
        let tests = basis_testset(n).unwrap().map_vectors(|z| dec.map_test(z)).unwrap();
        let atoms = Arc::new(DenseAtoms::new(&dec, &komlos_mixture(&pool, &tests).unwrap()).unwrap());
        let tree = build_tree(weights, 8.0).unwrap();
        MulticolorBalancer::new(tree, dec, atoms, default_lambda(16, n, 1000)).unwrap()
    }

    #[test]
    fn two_unit_colors() {
        let t = build_tree(&[1.0, 1.0], 1.0).unwrap();
        assert_eq!(t.height(), 1);
        assert_eq!(t.leaf_count(), 2);
        assert_eq!((t.q_left(1), t.q_right(1)), (0.5, 0.5));
        assert!(t.verify().holds());
    }

    #[test]
    fn three_unit_colors() {
        let t = build_tree(&[1.0, 1.0, 1.0], 1.0).unwrap();
        assert_eq!(t.height(), 2);
        assert_eq!(t.slots().iter().filter(|s| s.is_none()).count(), 1);
        assert_eq!((t.weight(2), t.weight(3)), (2.0, 1.0));
        assert!((t.q_left(1) - 2.0 / 3.0).abs() < 1e-15);
        assert!(t.verify().holds());
    }

    #[test]
    fn unequal_weights() {
        let t = build_tree(&[1.0, 5.0], 5.0).unwrap();
        assert_eq!(t.leaf_count(), 6);
        assert_eq!(t.height(), 3);
        let removed: Vec<usize> = (0..8).filter(|&p| t.slots()[p].is_none()).collect();
        assert_eq!(removed, vec![5, 7]);
        assert!(t.slots().iter().flatten().filter(|l| l.color == 1).all(|l| l.weight == 1.0));
        assert!(t.verify().holds());
        assert!(build_tree(&[1.0, 9.0], 8.0).is_err());
        assert!(build_tree(&[2.0], 8.0).is_err());
    }

    #[test]
    fn fresh_tree_picks_leftmost_leaf() {
        let mut b = setup(4, &[1.0, 1.0, 1.0, 1.0], 1);
        let a = b.assign(&[0.5, 0.5, 0.5, -0.5]).unwrap();
        assert_eq!((a.slot, a.color), (0, 0));
    }

    #[test]
    fn two_colors_match_the_signing_greedy() {
        let n = 4;
        let mut b = setup(n, &[1.0, 1.0], 2);
        let beta = b.tree().beta();
        let mut single = PotentialState::new(b.atoms.clone(), b.lambda(), Variant::Cosh).unwrap();
        let mut inputs = InputSampler::new(InputSpec::Sparse(2), n, 9);
        for _ in 0..100 {
            let v = inputs.next_vector();
            let a = b.assign(&v).unwrap();
            let sv = scaled(&b.dec.rescale(&v), beta / 2.0);
            let s = single.choose_sign(&sv).unwrap();
            single.apply(&sv, s).unwrap();
            assert_eq!(a.color, if s == Sign::Plus { 0 } else { 1 });
            assert!((b.psi() - single.phi()).abs() <= 1e-12 * single.phi());
        }
    }

    #[test]
    fn bookkeeping_is_consistent() {
        let n = 6;
        let mut b = setup(n, &[1.0, 2.5, 3.0, 1.5], 3);
        let mut inputs = InputSampler::new(InputSpec::Sparse(3), n, 4);
        let mut direct = vec![vec![0.0; n]; 4];
        for _ in 0..1000 {
            let v = inputs.next_vector();
            let a = b.assign(&v).unwrap();
            axpy(&mut direct[a.color], 1.0, &v);
        }
        assert!(b.conservation_error() <= 1e-9);
        assert!(b.dminus_consistency_error() <= 1e-9);
        for (c, d) in direct.iter().enumerate() {
            let s = b.color_sum(c);
            assert!(s.iter().zip(d).all(|(x, y)| (x - y).abs() <= 1e-9));
        }
        let chain = b.discrepancy_chain(basis_testset(n).unwrap().atoms().iter().map(|a| a.vector.clone()).collect::<Vec<_>>().as_slice());
        assert!(chain.holds(), "{chain:?}");
        assert!((chain.measured - b.max_disc(&LInf)).abs() < 1e-12);
    }

    #[test]
    fn drift_greedy_below_randomized() {
        let n = 4;
        let mut b = setup(n, &[1.0, 2.0, 3.0], 5);
        let mut inputs = InputSampler::new(InputSpec::Sparse(2), n, 6);
        for _ in 0..200 {
            b.assign(&inputs.next_vector()).unwrap();
        }
        let mut probe = InputSampler::new(InputSpec::Sparse(2), n, 7);
        let drift = b.drift_probe(|| probe.next_vector(), 500).unwrap();
        assert!(drift.greedy_mean <= drift.randomized_mean + 3.0 * drift.randomized_stderr.max(drift.greedy_stderr));
        let zero = b.drift_probe(|| vec![0.0; n], 10).unwrap();
        assert_eq!(zero.greedy_mean, 0.0);
    }

    #[test]
    fn empty_colors_have_zero_discrepancy() {
        let b = setup(3, &[1.0, 1.0, 2.0], 1);
        assert_eq!(b.max_disc(&LInf), 0.0);
    }
}
