mod common;

use approx::assert_abs_diff_eq;
use common::from_increments;
use roughlab::{
    cp_norm, cross, dyadic_norm, level1_norm, level2_norm, lift, qvar, sample_brownian, DiscretePath, RngStream,
    TwoParamTable, VarParams,
};

fn parabola(level: u32) -> DiscretePath {
    DiscretePath::from_fn(2, level, |t| vec![t, t * t]).unwrap()
}

/// Segment sum of `int (x - x(t_i)) ⊗ dz` over `[t_i, t_j]`, no prefix sums.
fn direct(x: &DiscretePath, z: &DiscretePath, i: usize, j: usize) -> Vec<f64> {
    let (d, m) = (x.dim(), z.dim());
    let mut out = vec![0.0; d * m];
    for k in i..j {
        for a in 0..d {
            let x0 = x.at(k, a) - x.at(i, a);
            let dx = x.at(k + 1, a) - x.at(k, a);
            for b in 0..m {
                let dz = z.at(k + 1, b) - z.at(k, b);
                out[a * m + b] += x0 * dz + 0.5 * dx * dz;
            }
        }
    }
    out
}

#[test]
fn parabola_lift_matches_midpoint_rule() {
    // int t d(t^2) over the interpolant is the midpoint rule for 2t^2: 2/3 - h^2/6
    for level in [2, 6, 10] {
        let h = 1.0 / (1u64 << level) as f64;
        let l = lift(&parabola(level));
        let m = l.level2(0, l.base().num_points() - 1).unwrap();
        let upper = 2.0 / 3.0 - h * h / 6.0;
        assert_abs_diff_eq!(m[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(m[1], upper, epsilon = 1e-13);
        assert_abs_diff_eq!(m[2], 1.0 - upper, epsilon = 1e-13);
        assert_abs_diff_eq!(m[3], 0.5, epsilon = 1e-14);
    }
    let fine = lift(&parabola(12));
    let m = fine.level2(0, fine.base().num_points() - 1).unwrap();
    for (got, want) in m.iter().zip([0.5, 2.0 / 3.0, 1.0 / 3.0, 0.5]) {
        assert_abs_diff_eq!(*got, want, epsilon = 1e-7);
    }
}

#[test]
fn cross_integral_closed_forms() {
    let line = DiscretePath::from_fn(1, 10, |t| vec![t]).unwrap();
    let square = DiscretePath::from_fn(1, 10, |t| vec![t * t]).unwrap();
    let last = line.num_points() - 1;
    assert_abs_diff_eq!(cross(&line, &line).unwrap().at(0, last).unwrap()[0], 0.5, epsilon = 1e-14);
    let c = cross(&line, &square).unwrap().at(0, last).unwrap()[0];
    assert_abs_diff_eq!(c, 2.0 / 3.0, epsilon = 1e-6);
    let h = 1.0 / 1024.0;
    assert_abs_diff_eq!(c, 2.0 / 3.0 - h * h / 6.0, epsilon = 1e-13);
}

#[test]
fn prefix_recombination_matches_direct_integration() {
    let root = RngStream::new(11, 0);
    for k in 0..20 {
        let x = sample_brownian(2, 7, &root.substream(1, k)).unwrap();
        let z = sample_brownian(3, 7, &root.substream(2, k)).unwrap();
        let (c, l) = (cross(&x, &z).unwrap(), lift(&x));
        let n = x.num_points();
        for (i, j) in [(0, n - 1), (5, 6), (17, 100), (64, 127), (3, 3)] {
            for (got, want) in c.at(i, j).unwrap().iter().zip(direct(&x, &z, i, j)) {
                assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
            }
            for (got, want) in l.level2(i, j).unwrap().iter().zip(direct(&x, &x, i, j)) {
                assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
            }
        }
    }
}

#[test]
fn transpose_and_symmetric_part_identities() {
    let root = RngStream::new(12, 0);
    let x = sample_brownian(2, 6, &root.substream(1, 0)).unwrap();
    let z = sample_brownian(2, 6, &root.substream(1, 1)).unwrap();
    let (cxz, czx, l) = (cross(&x, &z).unwrap(), cross(&z, &x).unwrap(), lift(&x));
    let n = x.num_points();
    for i in 0..n {
        for j in i..n {
            let (a, b) = (cxz.at(i, j).unwrap(), czx.at(i, j).unwrap());
            let l2 = l.level2(i, j).unwrap();
            for p in 0..2 {
                for q in 0..2 {
                    let dxp = x.at(j, p) - x.at(i, p);
                    let dzq = z.at(j, q) - z.at(i, q);
                    assert_abs_diff_eq!(a[p * 2 + q] + b[q * 2 + p], dxp * dzq, epsilon = 1e-12);
                    let dxq = x.at(j, q) - x.at(i, q);
                    assert_abs_diff_eq!(l2[p * 2 + q] + l2[q * 2 + p], dxp * dxq, epsilon = 1e-12);
                }
            }
        }
    }
}

#[test]
fn translation_identity_residual() {
    // w2 - h2 = g2 + C_{g,h} - C_{g,h}^T + dh ⊗ dg with g = w - h
    let root = RngStream::new(13, 0);
    for k in 0..10 {
        let w = sample_brownian(2, 8, &root.substream(1, k)).unwrap();
        let h = sample_brownian(2, 8, &root.substream(2, k)).unwrap().scale(0.5);
        let g = lift(&w).subtract(&h).unwrap();
        let (lw, lh, cgh) = (lift(&w), lift(&h), cross(g.base(), &h).unwrap());
        let n = w.num_points();
        let mut worst = 0.0f64;
        for i in (0..n).step_by(7) {
            for j in (i..n).step_by(5) {
                let (a, b, c, e) = (
                    lw.level2(i, j).unwrap(),
                    lh.level2(i, j).unwrap(),
                    g.level2(i, j).unwrap(),
                    cgh.at(i, j).unwrap(),
                );
                for p in 0..2 {
                    for q in 0..2 {
                        let dh = h.at(j, p) - h.at(i, p);
                        let dg = g.base().at(j, q) - g.base().at(i, q);
                        let rhs = c[p * 2 + q] + e[p * 2 + q] - e[q * 2 + p] + dh * dg;
                        worst = worst.max((a[p * 2 + q] - b[p * 2 + q] - rhs).abs());
                    }
                }
            }
        }
        assert!(worst < 1e-10, "residual {worst}");
    }
}

#[test]
fn chen_identity_on_sampled_triples_at_fine_level() {
    use rand::Rng;
    let root = RngStream::new(14, 0);
    let w = sample_brownian(3, 12, &root.substream(1, 0)).unwrap();
    let l = lift(&w);
    let n = w.num_points();
    let mut rng = root.substream(2, 0).rng();
    for _ in 0..5000 {
        let mut idx = [rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n)];
        idx.sort_unstable();
        let [s, t, u] = idx;
        let (su, st, tu) = (l.level2(s, u).unwrap(), l.level2(s, t).unwrap(), l.level2(t, u).unwrap());
        let (a, b) = (l.level1(s, t).unwrap(), l.level1(t, u).unwrap());
        for p in 0..3 {
            for q in 0..3 {
                let r = su[p * 3 + q] - st[p * 3 + q] - tu[p * 3 + q] - a[p] * b[q];
                assert!(r.abs() < 1e-10, "{s} {t} {u}: {r}");
            }
        }
    }
}

#[test]
fn small_variation_examples() {
    let tent = DiscretePath::new(1, 1, vec![0.0, 1.0, 0.0]).unwrap();
    let v = qvar(&TwoParamTable::increments(&tent), 0, 2.5).unwrap();
    assert_abs_diff_eq!(v, 2f64.powf(0.4), epsilon = 1e-14);

    let diag = DiscretePath::from_fn(2, 6, |t| vec![t, t]).unwrap();
    let l = lift(&diag);
    assert_abs_diff_eq!(level1_norm(&l, 2.5).unwrap(), 1.0, epsilon = 1e-14);
    assert_abs_diff_eq!(level2_norm(&l, 2.5).unwrap(), 0.5, epsilon = 1e-14);
    assert_abs_diff_eq!(cp_norm(&l, 2.5).unwrap(), 1.0, epsilon = 1e-14);

    let steep = DiscretePath::from_fn(2, 5, |t| vec![t, 2.0 * t]).unwrap();
    assert_abs_diff_eq!(level1_norm(&lift(&steep), 2.5).unwrap(), 2.0, epsilon = 1e-14);
}

#[test]
fn dyadic_norm_of_the_line_against_its_series() {
    let params = VarParams::new(2.5, 2.0).unwrap();
    let x = 2f64.powf(-1.5);
    let closed = (x * (1.0 + x) / (1.0 - x).powi(3)).powf(0.4);
    let line = DiscretePath::from_fn(1, 16, |t| vec![t]).unwrap();
    assert_abs_diff_eq!(dyadic_norm(&line, params), closed, epsilon = 1e-4);
    assert_abs_diff_eq!(closed, 1.257, epsilon = 1e-3);
    // exact truncation at the path's own level
    let short = DiscretePath::from_fn(1, 3, |t| vec![t]).unwrap();
    let partial: f64 = (1..=3).map(|n| (n * n) as f64 * x.powi(n)).sum();
    assert_abs_diff_eq!(dyadic_norm(&short, params), partial.powf(0.4), epsilon = 1e-14);
}

#[test]
fn projection_and_cameron_martin_examples() {
    let w = DiscretePath::new(1, 2, vec![0.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
    assert!(w.dyadic_project(1).unwrap().is_zero());
    assert_eq!(w.dyadic_project(2).unwrap(), w);
    let h = DiscretePath::new(1, 1, vec![0.0, 1.0, 1.0]).unwrap();
    assert_abs_diff_eq!(h.cm_norm(), 2f64.sqrt(), epsilon = 1e-15);
    let line = from_increments(1, 4, &[1.0 / 16.0; 16]);
    assert_abs_diff_eq!(line.cm_norm(), 1.0, epsilon = 1e-14);
}
