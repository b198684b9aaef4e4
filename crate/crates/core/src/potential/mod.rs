//! The hyperbolic-cosine (or exponential) potential over a weighted set of
//! test atoms, and the greedy signing rule built on it.
//!
//! For a discrepancy vector `d` the potential is
//!
//! ```text
//! Phi(d) = sum_k E_{x ~ p_x} term(lambda * d^T Pi_k x),   term = cosh | exp
//! ```
//!
//! Every `(atom, scale)` entry caches its exponent `a = lambda d^T Pi_k x`
//! together with `cosh(a)`/`sinh(a)` (or `exp(a)` twice), so the effect of a
//! candidate step is one inner product per entry plus one `expm1`.

mod atoms;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use atoms::{
    AtomSet, AtomTag, DenseAtoms, EntryTable, SparseAtoms, SparseVector, TestAtom,
    TestDistribution, WEIGHT_TOL,
};

use crate::error::{Error, Result};

/// `|a| > EXPONENT_GUARD` is reported as overflow; `ln(f64::MAX) ~ 709.8`.
pub const EXPONENT_GUARD: f64 = 700.0;

/// Relative band inside which the two sign choices count as a tie.
pub const TIE_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    Cosh,
    Exp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn from_value(x: f64) -> Self {
        if x < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }
}

/// `lambda = 1 / (100 kappa ln(nT))`, floored at `1e-9`.
pub fn default_lambda(kappa: usize, n: usize, horizon: usize) -> f64 {
    let log_nt = ((n.max(1) as f64) * (horizon.max(1) as f64)).ln().max(1.0);
    (1.0 / (100.0 * kappa.max(1) as f64 * log_nt)).max(1e-9)
}

/// Whether `a` beats `b` by more than the tie band.
pub fn strictly_less(a: f64, b: f64) -> bool {
    a < b && (b - a) > TIE_REL_TOL * a.abs().max(b.abs())
}

/// Raw inner products `v^T y_e` of one input against every entry.
#[derive(Debug, Clone)]
pub struct Projection(Vec<f64>);

impl Projection {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|p| *p == 0.0)
    }
}

/// Potential change for a step `+alpha v` (`plus`) and `-alpha v` (`minus`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaPair {
    pub plus: f64,
    pub minus: f64,
}

impl DeltaPair {
    /// The minimizing sign; `+` unless `-` is strictly smaller.
    pub fn best(&self) -> Sign {
        if strictly_less(self.minus, self.plus) {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn for_sign(&self, s: Sign) -> f64 {
        match s {
            Sign::Plus => self.plus,
            Sign::Minus => self.minus,
        }
    }
}

/// Result of the good-set test `lambda |d^T Pi v| <= kappa ln(4 Phi / delta)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GoodSet {
    pub good: bool,
    pub lhs: f64,
    pub threshold: f64,
}

/// `sum_k |d^T Pi_k z|` for one test atom with the per-scale tail bound.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DirectionBound {
    pub sum: f64,
    pub max_term: f64,
    pub bound: f64,
    pub within: bool,
}

/// First- and second-order terms of the potential change for one input:
/// `L = lambda E[s(x) v^T Pi_k x]`, `Q = lambda^2 E[|s(x)| (v^T Pi_k x)^2]`,
/// `Q* = lambda^2 E[(v^T Pi_k x)^2]`, summed over scales.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct LinearQuadratic {
    pub linear: f64,
    pub quadratic: f64,
    pub quadratic_star: f64,
}

/// Empirical drift of the greedy step at a frozen state.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DriftStats {
    pub trials: usize,
    pub mean_delta: f64,
    pub stderr: f64,
    pub mean_abs_linear: f64,
    pub mean_quadratic: f64,
    pub mean_quadratic_star: f64,
}

/// Potential, discrepancy vector, and exponent cache for one run.
#[derive(Debug, Clone)]
pub struct PotentialState<A: AtomSet> {
    atoms: Arc<A>,
    lambda: f64,
    variant: Variant,
    d: A::Accum,
    exponents: Vec<f64>,
    /// `cosh(a)` or `exp(a)`.
    even: Vec<f64>,
    /// `sinh(a)` or `exp(a)`.
    odd: Vec<f64>,
    phi: f64,
    t: usize,
}

impl<A: AtomSet> PotentialState<A> {
    pub fn new(atoms: Arc<A>, lambda: f64, variant: Variant) -> Result<Self> {
        if atoms.table().atom_count() == 0 {
            return Err(Error::EmptyAtoms);
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!("lambda must be positive, got {lambda}")));
        }
        let table = atoms.table();
        let m = table.len();
        let phi = table.constant + table.weights.iter().sum::<f64>();
        let d = atoms.zero_accum();
        Ok(Self {
            lambda,
            variant,
            d,
            exponents: vec![0.0; m],
            even: vec![1.0; m],
            odd: vec![if variant == Variant::Cosh { 0.0 } else { 1.0 }; m],
            phi,
            t: 0,
            atoms,
        })
    }

    pub fn atoms(&self) -> &Arc<A> {
        &self.atoms
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn kappa(&self) -> usize {
        self.atoms.table().kappa
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn d(&self) -> &A::Accum {
        &self.d
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    pub fn project(&self, v: &A::Input) -> Projection {
        let mut out = vec![0.0; self.atoms.table().len()];
        self.atoms.inner_products(v, &mut out);
        Projection(out)
    }

    /// Potential change for the steps `+alpha v` and `-alpha v`.
    pub fn delta_pair(&self, proj: &Projection, alpha: f64) -> Result<DeltaPair> {
        let weights = &self.atoms.table().weights;
        let scale = alpha * self.lambda;
        let mut common = 0.0;
        let mut odd_sum = 0.0;
        for (e, &p) in proj.0.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let step = scale * p;
            let reach = self.exponents[e].abs() + step.abs();
            if reach > EXPONENT_GUARD || !reach.is_finite() {
                return Err(Error::Overflow { exponent: reach, guard: EXPONENT_GUARD });
            }
            let (sinh_step, coshm1_step) = sinh_coshm1(step);
            common += weights[e] * self.even[e] * coshm1_step;
            odd_sum += weights[e] * self.odd[e] * sinh_step;
        }
        let pair = DeltaPair { plus: common + odd_sum, minus: common - odd_sum };
        if !(pair.plus.is_finite() && pair.minus.is_finite()) {
            return Err(Error::Overflow { exponent: f64::INFINITY, guard: EXPONENT_GUARD });
        }
        Ok(pair)
    }

    /// `Phi(d + chi v) - Phi(d)` without mutating the state.
    pub fn delta_for_sign(&self, v: &A::Input, chi: Sign) -> Result<f64> {
        Ok(self.delta_pair(&self.project(v), 1.0)?.for_sign(chi))
    }

    /// The sign minimizing the potential increase (ties go to `+`).
    pub fn choose_sign(&self, v: &A::Input) -> Result<Sign> {
        Ok(self.delta_pair(&self.project(v), 1.0)?.best())
    }

    /// `d <- d + chi v`.
    pub fn apply(&mut self, v: &A::Input, chi: Sign) -> Result<()> {
        let proj = self.project(v);
        self.apply_projected(v, &proj, chi.value())
    }

    /// `d <- d + alpha v` given the projection of `v`.
    pub fn apply_projected(&mut self, v: &A::Input, proj: &Projection, alpha: f64) -> Result<()> {
        let scale = alpha * self.lambda;
        for (e, &p) in proj.0.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let a = self.exponents[e] + scale * p;
            if a.abs() > EXPONENT_GUARD || !a.is_finite() {
                return Err(Error::Overflow { exponent: a, guard: EXPONENT_GUARD });
            }
            self.exponents[e] = a;
            let (even, odd) = self.terms(a);
            self.even[e] = even;
            self.odd[e] = odd;
        }
        self.atoms.accumulate(&mut self.d, alpha, v);
        let table = self.atoms.table();
        self.phi = table.constant + table.weights.iter().zip(&self.even).map(|(w, c)| w * c).sum::<f64>();
        self.t += 1;
        Ok(())
    }

    fn terms(&self, a: f64) -> (f64, f64) {
        match self.variant {
            Variant::Cosh => {
                let (s, cm1) = sinh_coshm1(a);
                (1.0 + cm1, s)
            }
            Variant::Exp => {
                let e = a.exp();
                (e, e)
            }
        }
    }

    fn term(&self, a: f64) -> f64 {
        match self.variant {
            Variant::Cosh => a.cosh(),
            Variant::Exp => a.exp(),
        }
    }

    /// Exponents recomputed from `d`.
    pub fn fresh_exponents(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.atoms.table().len()];
        self.atoms.accum_inner_products(&self.d, &mut out);
        out.iter_mut().for_each(|x| *x *= self.lambda);
        out
    }

    /// `Phi(d)` evaluated from scratch.
    pub fn recompute_phi(&self) -> f64 {
        let table = self.atoms.table();
        let fresh = self.fresh_exponents();
        table.constant + table.weights.iter().zip(&fresh).map(|(w, a)| w * self.term(*a)).sum::<f64>()
    }

    /// `max_e |a_e - lambda d^T y_e|`.
    pub fn cache_error(&self) -> f64 {
        self.fresh_exponents()
            .iter()
            .zip(&self.exponents)
            .map(|(f, a)| (f - a).abs())
            .fold(0.0, f64::max)
    }

    /// Tail test for an input `v` at failure probability `delta`.
    pub fn good_set_check(&self, v: &A::Input, delta: f64) -> GoodSet {
        let lhs = self.lambda * self.atoms.support_dot(&self.d, v).abs();
        let threshold = self.kappa() as f64 * (4.0 * self.phi / delta).ln();
        GoodSet { good: lhs <= threshold, lhs, threshold }
    }

    /// `sum_k |d^T Pi_k z|` for test atom `atom`, with each term checked
    /// against `lambda^-1 ln(4 |S| Phi)`.
    pub fn test_direction_bound(&self, atom: usize, test_count: usize) -> DirectionBound {
        let table = self.atoms.table();
        let mut sum = 0.0;
        let mut max_term: f64 = 0.0;
        for e in table.entries_of(atom) {
            let term = self.exponents[e].abs() / self.lambda;
            sum += term;
            max_term = max_term.max(term);
        }
        let bound = (4.0 * test_count.max(1) as f64 * self.phi).ln() / self.lambda;
        DirectionBound { sum, max_term, bound, within: !self.phi.is_finite() || max_term <= bound }
    }

    /// Linear and quadratic terms of the potential change for `proj`.
    pub fn linear_quadratic(&self, proj: &Projection) -> LinearQuadratic {
        let weights = &self.atoms.table().weights;
        let mut out = LinearQuadratic::default();
        for (e, &p) in proj.0.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let w = weights[e];
            out.linear += w * self.odd[e] * p;
            out.quadratic += w * self.odd[e].abs() * p * p;
            out.quadratic_star += w * p * p;
        }
        let l2 = self.lambda * self.lambda;
        out.linear *= self.lambda;
        out.quadratic *= l2;
        out.quadratic_star *= l2;
        out
    }

    /// Draws `m` inputs and averages the greedy (minimum-sign) potential
    /// change without mutating the state.
    pub fn drift_probe(
        &self,
        mut sampler: impl FnMut() -> A::Input,
        m: usize,
    ) -> Result<DriftStats> {
        let m = m.max(1);
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        let (mut lin, mut quad, mut quad_star) = (0.0, 0.0, 0.0);
        for _ in 0..m {
            let v = sampler();
            let proj = self.project(&v);
            let pair = self.delta_pair(&proj, 1.0)?;
            let delta = pair.for_sign(pair.best());
            sum += delta;
            sum_sq += delta * delta;
            let lq = self.linear_quadratic(&proj);
            lin += lq.linear.abs();
            quad += lq.quadratic;
            quad_star += lq.quadratic_star;
        }
        let mf = m as f64;
        let mean = sum / mf;
        let var = if m > 1 { ((sum_sq - mf * mean * mean) / (mf - 1.0)).max(0.0) } else { 0.0 };
        Ok(DriftStats {
            trials: m,
            mean_delta: mean,
            stderr: (var / mf).sqrt(),
            mean_abs_linear: lin / mf,
            mean_quadratic: quad / mf,
            mean_quadratic_star: quad_star / mf,
        })
    }
}

/// `(sinh x, cosh x - 1)` from a single `expm1`, accurate for tiny `x`.
#[inline]
pub fn sinh_coshm1(x: f64) -> (f64, f64) {
    if x.abs() > 20.0 {
        return (x.sinh(), x.cosh() - 1.0);
    }
    let em = x.exp_m1();
    let den = 1.0 + em;
    ((em + em / den) * 0.5, em * em / (2.0 * den))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_dim_state(d0: f64, variant: Variant) -> PotentialState<DenseAtoms> {
        let dist = TestDistribution::uniform(vec![vec![1.0]], AtomTag::Basis).unwrap();
        let atoms = Arc::new(DenseAtoms::single_scale(&dist, 1).unwrap());
        let mut st = PotentialState::new(atoms, 1.0, variant).unwrap();
        if d0 != 0.0 {
            st.apply_projected(&vec![d0], &st.project(&vec![d0]), 1.0).unwrap();
        }
        st
    }

    #[test]
    fn lambda_examples() {
        let l = default_lambda(16, 2, 2);
        assert!((l - 1.0 / (1600.0 * 4f64.ln())).abs() < 1e-15);
        assert!((l - 4.508e-4).abs() < 1e-7);
        let l2 = default_lambda(8, 16, 10_000);
        assert!((l2 - 1.043e-4).abs() < 1e-7);
        assert!(default_lambda(8, 16, 100_000) < l2);
    }

    #[test]
    fn fresh_potential_equals_kappa() {
        let dist = TestDistribution::uniform(vec![vec![1.0, 0.0], vec![0.6, 0.8]], AtomTag::Basis)
            .unwrap();
        let atoms = Arc::new(DenseAtoms::single_scale(&dist, 5).unwrap());
        let st = PotentialState::new(atoms.clone(), 0.1, Variant::Cosh).unwrap();
        assert!((st.phi() - 5.0).abs() < 1e-12);
        assert!(st.exponents().iter().all(|a| *a == 0.0));
        let single = TestDistribution::uniform(vec![vec![1.0]], AtomTag::Basis).unwrap();
        let st = PotentialState::new(
            Arc::new(DenseAtoms::single_scale(&single, 1).unwrap()),
            1.0,
            Variant::Exp,
        )
        .unwrap();
        assert!((st.phi() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_dimensional_deltas() {
        let st = one_dim_state(3.0, Variant::Cosh);
        let minus = st.delta_for_sign(&vec![1.0], Sign::Minus).unwrap();
        let plus = st.delta_for_sign(&vec![1.0], Sign::Plus).unwrap();
        // Oracle: direct cosh evaluation.
        assert!((minus - (2f64.cosh() - 3f64.cosh())).abs() < 1e-12);
        assert!((plus - (4f64.cosh() - 3f64.cosh())).abs() < 1e-12);
        assert!((minus + 6.3055).abs() < 1e-3 && (plus - 17.2406).abs() < 1e-3);
        assert_eq!(st.choose_sign(&vec![1.0]).unwrap(), Sign::Minus);
    }

    #[test]
    fn zero_state_is_a_tie() {
        let st = one_dim_state(0.0, Variant::Cosh);
        let p = st.delta_for_sign(&vec![0.7], Sign::Plus).unwrap();
        let m = st.delta_for_sign(&vec![0.7], Sign::Minus).unwrap();
        assert_eq!(p, m);
        assert_eq!(st.choose_sign(&vec![0.7]).unwrap(), Sign::Plus);
        assert_eq!(st.choose_sign(&vec![0.0]).unwrap(), Sign::Plus);
        assert_eq!(st.delta_for_sign(&vec![0.0], Sign::Minus).unwrap(), 0.0);
    }

    #[test]
    fn orthogonal_input_has_zero_delta() {
        let dist = TestDistribution::uniform(vec![vec![1.0, 0.0]], AtomTag::Basis).unwrap();
        let atoms = Arc::new(DenseAtoms::single_scale(&dist, 1).unwrap());
        let mut st = PotentialState::new(atoms, 0.5, Variant::Cosh).unwrap();
        st.apply(&vec![1.0, 0.0], Sign::Plus).unwrap();
        assert_eq!(st.delta_for_sign(&vec![0.0, 1.0], Sign::Plus).unwrap(), 0.0);
        assert_eq!(st.delta_for_sign(&vec![0.0, 1.0], Sign::Minus).unwrap(), 0.0);
    }

    #[test]
    fn apply_inverse_and_counter() {
        let mut st = one_dim_state(0.0, Variant::Cosh);
        st.apply(&vec![0.4], Sign::Plus).unwrap();
        assert_eq!(st.t(), 1);
        st.apply(&vec![0.4], Sign::Minus).unwrap();
        assert_eq!(st.t(), 2);
        assert!(st.d()[0].abs() < 1e-12);
        assert!((st.phi() - st.recompute_phi()).abs() < 1e-12);
    }

    #[test]
    fn overflow_is_reported() {
        let dist = TestDistribution::uniform(vec![vec![1.0]], AtomTag::Basis).unwrap();
        let atoms = Arc::new(DenseAtoms::single_scale(&dist, 1).unwrap());
        let mut st = PotentialState::new(atoms, 400.0, Variant::Cosh).unwrap();
        st.apply(&vec![1.0], Sign::Plus).unwrap();
        assert!(matches!(st.delta_for_sign(&vec![1.0], Sign::Plus), Err(Error::Overflow { .. })));
        assert!(matches!(st.apply(&vec![1.0], Sign::Plus), Err(Error::Overflow { .. })));
    }

    #[test]
    fn good_set_threshold_at_fresh_state() {
        let dist = TestDistribution::uniform(vec![vec![1.0]], AtomTag::Basis).unwrap();
        let atoms = Arc::new(DenseAtoms::single_scale(&dist, 8).unwrap());
        let st = PotentialState::new(atoms, 0.01, Variant::Cosh).unwrap();
        let g = st.good_set_check(&vec![1.0], 0.5);
        assert!(g.good);
        assert_eq!(g.lhs, 0.0);
        assert!((g.threshold - 8.0 * 64f64.ln()).abs() < 1e-12);
        assert!((g.threshold - 33.27).abs() < 0.01);
    }

    #[test]
    fn direction_bound_single_scale() {
        let dist = TestDistribution::uniform(vec![vec![0.6, 0.8]], AtomTag::Basis).unwrap();
        let atoms = Arc::new(DenseAtoms::single_scale(&dist, 1).unwrap());
        let mut st = PotentialState::new(atoms, 0.01, Variant::Cosh).unwrap();
        assert_eq!(st.test_direction_bound(0, 1).sum, 0.0);
        st.apply(&vec![1.0, -0.5], Sign::Plus).unwrap();
        let b = st.test_direction_bound(0, 1);
        assert!((b.sum - (0.6 - 0.4f64)).abs() < 1e-12);
        assert!(b.within);
    }

    #[test]
    fn sinh_coshm1_accuracy() {
        for &x in &[1e-9, -3e-7, 1e-3, 0.5, -2.0, 15.0, -30.0] {
            let (s, c) = sinh_coshm1(x);
            assert!((s - f64::sinh(x)).abs() <= 1e-14 * f64::sinh(x).abs().max(1e-300));
            let exact = 2.0 * f64::sinh(x / 2.0).powi(2);
            assert!((c - exact).abs() <= 1e-13 * exact.max(1e-300), "x={x}");
        }
    }
}
