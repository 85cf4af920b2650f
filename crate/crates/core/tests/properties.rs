mod common;

use common::{exhaustive_qvar, outer_table, path_strategy};
use proptest::prelude::*;
use roughlab::domains::{in_b, in_o, in_section, in_u, in_uab};
use roughlab::io::{read_path_csv, write_path_csv};
use roughlab::variation::TwoParamTable;
use roughlab::{
    cross, lift, max_qvar, pvar_norm, qvar, qvar_naive, qvar_pruned, rough_distance, DiscretePath, VarParams,
};

const SLACK: f64 = 1e-9;

fn params() -> VarParams {
    VarParams::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pruned_dp_matches_naive(w in path_strategy(2, 6), q in prop::sample::select(vec![1.0, 1.25, 2.0, 2.5, 2.9])) {
        let l = lift(&w);
        for table in [l.level1_table(), l.level2_table()] {
            for c in 0..table.num_components() {
                prop_assert_eq!(qvar_pruned(&table, c, q).unwrap(), qvar_naive(&table, c, q).unwrap());
            }
        }
    }

    #[test]
    fn dp_matches_enumeration_on_small_grids(w in path_strategy(1, 3), q in 1.0f64..3.0) {
        let l = lift(&w);
        for table in [l.level1_table(), l.level2_table()] {
            let dp = qvar(&table, 0, q).unwrap();
            let pruned = qvar_pruned(&table, 0, q).unwrap();
            prop_assert_eq!(dp.to_bits(), pruned.to_bits());
            let brute = exhaustive_qvar(&table, 0, q);
            prop_assert!((dp - brute).abs() <= 1e-12 * brute.max(1.0), "{} vs {}", dp, brute);
        }
    }

    #[test]
    fn pvar_is_homogeneous(w in path_strategy(2, 5), c in -5.0f64..5.0) {
        let base = pvar_norm(&w, 2.5).unwrap();
        let scaled = pvar_norm(&w.scale(c), 2.5).unwrap();
        prop_assert!((scaled - c.abs() * base).abs() <= 1e-12 * (1.0 + c.abs() * base));
    }

    #[test]
    fn pvar_decreases_in_exponent_and_is_below_length(w in path_strategy(2, 5)) {
        let mut last = f64::INFINITY;
        for q in [1.0, 1.5, 2.0, 2.5, 2.9] {
            let v = pvar_norm(&w, q).unwrap();
            prop_assert!(v <= last * (1.0 + 1e-12));
            last = v;
        }
        prop_assert!(pvar_norm(&w, 2.5).unwrap() <= w.length() * (1.0 + 1e-12));
    }

    #[test]
    fn projection_does_not_increase_pvar(w in path_strategy(1, 6), n in 0u32..6) {
        let pn = w.dyadic_project(n).unwrap();
        prop_assert!(pvar_norm(&pn, 2.5).unwrap() <= pvar_norm(&w, 2.5).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn chen_identity_all_triples(w in path_strategy(2, 4)) {
        let l = lift(&w);
        let n = w.num_points();
        for s in 0..n {
            for t in s..n {
                for u in t..n {
                    let su = l.level2(s, u).unwrap();
                    let st = l.level2(s, t).unwrap();
                    let tu = l.level2(t, u).unwrap();
                    let a = l.level1(s, t).unwrap();
                    let b = l.level1(t, u).unwrap();
                    for i in 0..2 {
                        for j in 0..2 {
                            let r = su[i * 2 + j] - st[i * 2 + j] - tu[i * 2 + j] - a[i] * b[j];
                            prop_assert!(r.abs() < 1e-12 * (1.0 + su[i * 2 + j].abs()));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn lift_scaling(w in path_strategy(2, 5), c in -3.0f64..3.0) {
        let (l, lc) = (lift(&w), lift(&w.scale(c)));
        let n = w.num_points();
        for (i, j) in [(0, n - 1), (3, 17), (5, 5), (10, 30)] {
            let (a, ac) = (l.level2(i, j).unwrap(), lc.level2(i, j).unwrap());
            for k in 0..4 {
                prop_assert!((ac[k] - c * c * a[k]).abs() <= 1e-12 * (1.0 + (c * c * a[k]).abs()));
            }
        }
    }

    #[test]
    fn cross_is_additive(w in path_strategy(2, 5), h in path_strategy(2, 5), z in path_strategy(1, 5)) {
        let sum = cross(&w.add(&h).unwrap(), &z).unwrap();
        let (cw, ch) = (cross(&w, &z).unwrap(), cross(&h, &z).unwrap());
        let n = w.num_points();
        for (i, j) in [(0, n - 1), (2, 9), (7, 31), (4, 4)] {
            let (a, b, c) = (sum.at(i, j).unwrap(), cw.at(i, j).unwrap(), ch.at(i, j).unwrap());
            for k in 0..a.len() {
                prop_assert!((a[k] - b[k] - c[k]).abs() <= 1e-12 * (1.0 + b[k].abs() + c[k].abs()));
            }
        }
    }

    #[test]
    fn cross_norm_bounds(h1 in path_strategy(2, 5), h2 in path_strategy(2, 5)) {
        let half = params().half_p();
        let c12 = cross(&h1, &h2).unwrap().norm(half).unwrap();
        let (p1, p2) = (pvar_norm(&h1, 2.5).unwrap(), pvar_norm(&h2, 2.5).unwrap());
        prop_assert!(c12 <= p1 * h2.cm_norm() + SLACK);
        prop_assert!(c12 <= (h1.cm_norm() + p1) * p2 + SLACK);
        let outer = max_qvar(&outer_table(&h1, &h2), half).unwrap();
        prop_assert!(outer <= p1 * p2 + SLACK);
        prop_assert!(p1 <= h1.length() + SLACK);
    }

    #[test]
    fn dyadic_norm_is_dominated(h in path_strategy(2, 6)) {
        let p = params();
        let c = roughlab::dyadic_domination_constant(p);
        prop_assert!(roughlab::dyadic_norm(&h, p) <= c * h.cm_norm() * (1.0 + 1e-12));
    }

    #[test]
    fn rough_distance_triangle_bound(w in path_strategy(2, 5), h in path_strategy(2, 5)) {
        let half = params().half_p();
        let g = w.sub(&h).unwrap();
        let lhs = max_qvar(&lift(&w).level2_table().difference(&lift(&h).level2_table()).unwrap(), half).unwrap();
        let rhs = max_qvar(&lift(&g).level2_table(), half).unwrap()
            + 2.0 * cross(&g, &h).unwrap().norm(half).unwrap()
            + pvar_norm(&h, 2.5).unwrap() * pvar_norm(&g, 2.5).unwrap();
        prop_assert!(lhs <= rhs + SLACK);
    }

    #[test]
    fn predicates_monotone_in_radius(w in path_strategy(2, 4), z in path_strategy(1, 4), a in 0.0f64..3.0, da in 0.0f64..1.0) {
        let b = a + da;
        if in_u(&w, &z, a, params()).unwrap() {
            prop_assert!(in_u(&w, &z, b, params()).unwrap());
        }
        let h = z.concat(&z).unwrap();
        if in_b(&w, &h, a, params()).unwrap() {
            prop_assert!(in_b(&w, &h, b, params()).unwrap());
        }
        if in_o(&w, &h, a, params()).unwrap() {
            prop_assert!(in_o(&w, &h, b, params()).unwrap());
        }
        let w1 = w.coordinate(0);
        if in_section(&w1, Some(&w.coordinate(1)), &z, a, params()).unwrap() {
            prop_assert!(in_section(&w1, Some(&w.coordinate(1)), &z, b, params()).unwrap());
        }
        let bb = 2.0;
        if a > 0.0 && b < bb * bb && in_uab(&w1, &w.coordinate(1), a, bb, params()).unwrap() {
            prop_assert!(in_uab(&w1, &w.coordinate(1), b, bb, params()).unwrap());
        }
    }

    #[test]
    fn b_is_translated_u(w in path_strategy(2, 4), h in path_strategy(2, 4), a in 0.01f64..3.0) {
        let g = w.sub(&h).unwrap();
        prop_assert_eq!(in_b(&w, &h, a, params()).unwrap(), in_u(&g, &h, a, params()).unwrap());
    }

    #[test]
    fn u_splits_into_first_coordinate_and_section(w in path_strategy(2, 4), z in path_strategy(1, 4), a in 0.01f64..2.0) {
        // valid for a <= 2, where ||w_2||_p < a forces the diagonal level-two bound
        let (w1, w2) = (w.coordinate(0), w.coordinate(1));
        let left = in_u(&w, &z, a, params()).unwrap();
        let right = in_u(&w1, &z, a, params()).unwrap() && in_section(&w2, Some(&w1), &z, a, params()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn ball_inclusion(h in path_strategy(2, 4), noise in path_strategy(2, 4), eps in 0.01f64..2.0) {
        let w = h.add(&noise).unwrap();
        let radius = eps / (3.0 + pvar_norm(&h, 2.5).unwrap());
        if in_b(&w, &h, radius, params()).unwrap() {
            prop_assert!(in_o(&w, &h, eps, params()).unwrap());
        }
    }

    #[test]
    fn predicates_survive_csv_round_trip(w in path_strategy(2, 4), z in path_strategy(1, 4), a in 0.01f64..3.0) {
        let mut buf = Vec::new();
        write_path_csv(&w, &mut buf).unwrap();
        let back = read_path_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(&back, &w);
        prop_assert_eq!(in_u(&back, &z, a, params()).unwrap(), in_u(&w, &z, a, params()).unwrap());
    }

    #[test]
    fn rough_distance_is_a_symmetric_nonnegative_gap(w in path_strategy(2, 4), h in path_strategy(2, 4)) {
        let (lw, lh) = (lift(&w), lift(&h));
        let d1 = rough_distance(&lw, &lh, 2.5).unwrap();
        let d2 = rough_distance(&lh, &lw, 2.5).unwrap();
        prop_assert!(d1 >= 0.0);
        prop_assert!((d1 - d2).abs() <= 1e-12 * (1.0 + d1));
        prop_assert_eq!(rough_distance(&lw, &lw, 2.5).unwrap(), 0.0);
    }
}

#[test]
fn table_difference_with_mismatched_shapes_errors() {
    let a = TwoParamTable::increments(&DiscretePath::zeros(2, 3));
    let b = TwoParamTable::increments(&DiscretePath::zeros(1, 3));
    let c = TwoParamTable::increments(&DiscretePath::zeros(2, 4));
    assert!(a.difference(&b).is_err());
    assert!(a.difference(&c).is_err());
}
