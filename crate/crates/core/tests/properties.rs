use std::sync::Arc;

use balancer_core::harness::baselines::{l2_greedy, linf, max_prefix_norm, offline_oracle};
use balancer_core::harness::metrics::{geometric_checkpoints, slope_fit};
use balancer_core::multicolor::build_tree;
use balancer_core::tusnady::{box_decompose, dyadic_boxes_for_point, interval_cover, DyadicGrid, GridBox, RealBox};
use balancer_core::{
    dyadic_reduce, AtomTag, CovarianceModel, DenseAtoms, PotentialState, Sign, SparseVector,
    TestDistribution, Variant,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn unit_vectors(n: usize, count: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, n), count).prop_map(|vs| {
        vs.into_iter()
            .map(|v| {
                let s = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-9);
                v.iter().map(|x| x / s).collect()
            })
            .collect()
    })
}

fn dense_state(tests: Vec<Vec<f64>>, lambda: f64) -> PotentialState<DenseAtoms> {
    let dist = TestDistribution::uniform(tests, AtomTag::TestVector).unwrap();
    let atoms = DenseAtoms::single_scale(&dist, 8).unwrap();
    PotentialState::new(Arc::new(atoms), lambda, Variant::Cosh).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dyadic_reduction_holds_for_random_psd(rows in prop::collection::vec(-1.0f64..1.0, 16), kappa in 8usize..20) {
        let a = DMatrix::from_row_slice(4, 4, &rows);
        let mut sigma = &a * a.transpose();
        let tr = sigma.trace().max(1e-9);
        sigma /= tr;
        let model = CovarianceModel::from_matrix(sigma.clone()).unwrap();
        let dec = dyadic_reduce(&model, kappa).unwrap();
        prop_assert!(dec.verify(&sigma).holds(4));
    }

    #[test]
    fn chosen_sign_never_worse(tests in unit_vectors(3, 6), steps in unit_vectors(3, 20), lambda in 0.01f64..0.5) {
        let mut st = dense_state(tests, lambda);
        for v in &steps {
            let s = st.choose_sign(v).unwrap();
            let chosen = st.delta_for_sign(v, s).unwrap();
            let other = st.delta_for_sign(v, s.flip()).unwrap();
            prop_assert!(chosen <= other + 1e-12 * other.abs().max(1.0));
            let before = st.phi();
            st.apply(v, s).unwrap();
            let tol = 1e-9 * st.phi().max(1.0);
            prop_assert!((st.phi() - before - chosen).abs() <= tol);
        }
        prop_assert!(st.cache_error() <= 1e-9 * st.phi().max(1.0));
    }

    #[test]
    fn opposite_step_restores_potential(tests in unit_vectors(3, 5), v in unit_vectors(3, 1), lambda in 0.01f64..0.5) {
        let mut st = dense_state(tests, lambda);
        let phi0 = st.phi();
        st.apply(&v[0], Sign::Plus).unwrap();
        st.apply(&v[0], Sign::Minus).unwrap();
        prop_assert!((st.phi() - phi0).abs() <= 1e-9 * phi0);
        prop_assert!(st.d().iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn interval_cover_is_minimal_partition(log_t in 1u32..9, a in 0u64..512, len in 1u64..512) {
        let t = 1u64 << log_t;
        let a = a % t;
        let b = (a + len).min(t);
        let cover = interval_cover(a, b, log_t);
        let mut pos = a;
        for &(level, offset) in &cover {
            let size = t >> level;
            prop_assert_eq!(offset * size, pos);
            pos += size;
        }
        prop_assert_eq!(pos, b);
        // No two adjacent blocks of equal size merge into an aligned parent.
        for w in cover.windows(2) {
            let ((l0, o0), (l1, _)) = (w[0], w[1]);
            prop_assert!(!(l0 == l1 && l0 > 0 && o0 % 2 == 0));
        }
        prop_assert!(cover.len() <= 2 * log_t as usize);
    }

    #[test]
    fn grid_box_cover_counts_each_cell_once(lo in prop::collection::vec(0u64..16, 2), len in prop::collection::vec(1u64..16, 2), x in prop::collection::vec(0.0f64..1.0, 2)) {
        let grid = DyadicGrid::new(16, 2).unwrap();
        let hi: Vec<u64> = lo.iter().zip(&len).map(|(a, l)| (a + l).min(16)).collect();
        let gb = GridBox { lo, hi };
        let hits = gb.cover(&grid).iter().filter(|b| b.contains(&x)).count();
        let inside = gb.contains_cells(&grid.cells(&x));
        prop_assert_eq!(hits, usize::from(inside));
        let point = dyadic_boxes_for_point(&x, &grid).unwrap();
        prop_assert_eq!(point.nnz(), 5 * 5);
    }

    #[test]
    fn box_decomposition_conserves_volume(a in prop::collection::vec(0.0f64..1.0, 2), b in prop::collection::vec(0.0f64..1.0, 2)) {
        let grid = DyadicGrid::new(8, 2).unwrap();
        let lo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect();
        let hi: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect();
        let bx = RealBox { lo, hi };
        let dec = box_decompose(&bx, &grid).unwrap();
        prop_assert!(dec.pieces.len() <= 4);
        let core = dec.core.as_ref().map_or(0.0, |c| {
            c.lo.iter().zip(&c.hi).map(|(l, h)| (h - l) as f64 / 8.0).product::<f64>()
        });
        let pieces: f64 = dec.pieces.iter().map(|p| p.piece.volume()).sum();
        prop_assert!((core + pieces - bx.volume()).abs() < 1e-12);
        for p in &dec.pieces {
            let c = p.cell as f64 / 8.0;
            prop_assert!(p.piece.lo[p.axis] >= c - 1e-15 && p.piece.hi[p.axis] <= c + 0.125 + 1e-15);
        }
    }

    #[test]
    fn color_tree_invariants(ws in prop::collection::vec(1.0f64..6.0, 2..7)) {
        let tree = build_tree(&ws, 6.0).unwrap();
        let report = tree.verify();
        prop_assert!(report.holds(), "{:?}", report);
        let floors: usize = ws.iter().map(|w| w.floor() as usize).sum();
        prop_assert!(tree.leaf_count() <= floors);
    }

    #[test]
    fn sparse_dot_matches_dense(a in prop::collection::vec((0u64..20, -1.0f64..1.0), 0..12), b in prop::collection::vec((0u64..20, -1.0f64..1.0), 0..12)) {
        let dense = |pairs: &[(u64, f64)]| {
            let mut d = [0.0; 20];
            for &(i, x) in pairs {
                d[i as usize] += x;
            }
            d
        };
        let (da, db) = (dense(&a), dense(&b));
        let expect: f64 = da.iter().zip(&db).map(|(x, y)| x * y).sum();
        let got = SparseVector::from_pairs(a).dot(&SparseVector::from_pairs(b));
        prop_assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn slope_fit_recovers_power_law(c in 0.1f64..10.0, p in 0.0f64..1.0) {
        let series: Vec<(f64, f64)> = geometric_checkpoints(100_000, 1.25)
            .into_iter()
            .map(|t| (t as f64, c * (t as f64).powf(p)))
            .collect();
        let fit = slope_fit(&series, 1_000.0, 100_000.0).unwrap();
        prop_assert!((fit.slope - p).abs() < 1e-9);
    }

    #[test]
    fn oracle_dominates_greedy(vs in unit_vectors(3, 10)) {
        let (opt, signs) = offline_oracle(&vs, linf).unwrap();
        prop_assert!((max_prefix_norm(&vs, &signs, linf) - opt).abs() < 1e-12);
        prop_assert!(opt <= max_prefix_norm(&vs, &l2_greedy(&vs), linf) + 1e-12);
    }
}
