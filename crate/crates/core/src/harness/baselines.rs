//! Reference signing rules and the exhaustive offline optimum.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm_inf};
use crate::potential::Sign;

/// Independent fair signs.
pub fn random_signs(len: usize, rng: &mut impl Rng) -> Vec<Sign> {
    (0..len).map(|_| if rng.random::<bool>() { Sign::Plus } else { Sign::Minus }).collect()
}

/// `chi = -sign(<d, v>)`, `+` on ties.
pub fn l2_greedy_sign(d: &[f64], v: &[f64]) -> Sign {
    if dot(d, v) > 0.0 {
        Sign::Minus
    } else {
        Sign::Plus
    }
}

/// Signs chosen online by the l2-greedy rule.
pub fn l2_greedy(vectors: &[Vec<f64>]) -> Vec<Sign> {
    let n = vectors.first().map_or(0, |v| v.len());
    let mut d = vec![0.0; n];
    vectors
        .iter()
        .map(|v| {
            let s = l2_greedy_sign(&d, v);
            axpy(&mut d, s.value(), v);
            s
        })
        .collect()
}

/// `max_t norm(d_t)` for the given signs.
pub fn max_prefix_norm(vectors: &[Vec<f64>], signs: &[Sign], norm: impl Fn(&[f64]) -> f64) -> f64 {
    let n = vectors.first().map_or(0, |v| v.len());
    let mut d = vec![0.0; n];
    let mut best: f64 = 0.0;
    for (v, s) in vectors.iter().zip(signs) {
        axpy(&mut d, s.value(), v);
        best = best.max(norm(&d));
    }
    best
}

pub const ORACLE_MAX_LEN: usize = 22;

/// Optimal offline signing: minimizes `max_t norm(d_t)` over all `2^T`
/// sign vectors (the first sign fixed to `+` by symmetry of the norm).
/// Returns the optimum and one optimal signing.
pub fn offline_oracle(vectors: &[Vec<f64>], norm: impl Fn(&[f64]) -> f64) -> Result<(f64, Vec<Sign>)> {
    if vectors.len() > ORACLE_MAX_LEN {
        return Err(Error::InvalidInput(format!(
            "offline oracle limited to {ORACLE_MAX_LEN} vectors, got {}",
            vectors.len()
        )));
    }
    if vectors.is_empty() {
        return Ok((0.0, Vec::new()));
    }
    // Start from the greedy value as an upper bound.
    let greedy = l2_greedy(vectors);
    let mut best = max_prefix_norm(vectors, &greedy, &norm);
    let mut best_signs = greedy;
    let n = vectors[0].len();
    let mut stack_d = vec![vec![0.0; n]; vectors.len() + 1];
    let mut signs = vec![Sign::Plus; vectors.len()];
    search(vectors, &norm, 0, 0.0, &mut stack_d, &mut signs, &mut best, &mut best_signs);
    Ok((best, best_signs))
}

#[allow(clippy::too_many_arguments)]
fn search(
    vectors: &[Vec<f64>],
    norm: &impl Fn(&[f64]) -> f64,
    depth: usize,
    current: f64,
    stack_d: &mut Vec<Vec<f64>>,
    signs: &mut Vec<Sign>,
    best: &mut f64,
    best_signs: &mut Vec<Sign>,
) {
    if depth == vectors.len() {
        if current < *best {
            *best = current;
            best_signs.clone_from(signs);
        }
        return;
    }
    let choices: &[Sign] = if depth == 0 { &[Sign::Plus] } else { &[Sign::Plus, Sign::Minus] };
    // Explore the locally better sign first.
    let mut order = choices.to_vec();
    if order.len() == 2 && l2_greedy_sign(&stack_d[depth], &vectors[depth]) == Sign::Minus {
        order.swap(0, 1);
    }
    for s in order {
        let mut next = stack_d[depth].clone();
        axpy(&mut next, s.value(), &vectors[depth]);
        let value = current.max(norm(&next));
        if value >= *best {
            continue;
        }
        stack_d[depth + 1] = next;
        signs[depth] = s;
        search(vectors, norm, depth + 1, value, stack_d, signs, best, best_signs);
    }
}

/// `l_inf` norm, the default target.
pub fn linf(d: &[f64]) -> f64 {
    norm_inf(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};

    fn brute_force(vectors: &[Vec<f64>]) -> f64 {
        let t = vectors.len();
        (0..1u32 << t)
            .map(|mask| {
                let signs: Vec<Sign> =
                    (0..t).map(|i| if mask >> i & 1 == 1 { Sign::Minus } else { Sign::Plus }).collect();
                max_prefix_norm(vectors, &signs, linf)
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn oracle_small_cases() {
        let e1 = vec![1.0, 0.0];
        assert_eq!(offline_oracle(&[e1.clone(), e1.clone()], linf).unwrap().0, 1.0);
        assert_eq!(offline_oracle(&[e1.clone(), e1.clone(), e1.clone()], linf).unwrap().0, 1.0);
    }

    #[test]
    fn oracle_matches_brute_force() {
        let mut rng = stream_rng(5, Stream::Tests);
        for _ in 0..20 {
            let vectors: Vec<Vec<f64>> =
                (0..10).map(|_| (0..3).map(|_| rng.random_range(-0.5..0.5)).collect()).collect();
            let (opt, signs) = offline_oracle(&vectors, linf).unwrap();
            assert!((opt - brute_force(&vectors)).abs() < 1e-12);
            assert!((max_prefix_norm(&vectors, &signs, linf) - opt).abs() < 1e-12);
            assert!(opt <= max_prefix_norm(&vectors, &l2_greedy(&vectors), linf));
        }
    }

    #[test]
    fn greedy_on_repeated_basis_vector() {
        let vectors = vec![vec![1.0, 0.0]; 50];
        assert!(max_prefix_norm(&vectors, &l2_greedy(&vectors), linf) <= 1.0);
    }

    #[test]
    fn oracle_rejects_long_input() {
        assert!(offline_oracle(&vec![vec![1.0]; 23], linf).is_err());
    }
}
