#![allow(dead_code)]

use proptest::prelude::*;
use roughlab::{DiscretePath, TableComponent, TwoParamTable};

/// Piecewise-linear path from raw increments (row-major, `dim` per step).
pub fn from_increments(dim: usize, level: u32, incs: &[f64]) -> DiscretePath {
    let n = 1usize << level;
    let mut values = vec![0.0; (n + 1) * dim];
    for k in 0..n {
        for i in 0..dim {
            values[(k + 1) * dim + i] = values[k * dim + i] + incs[k * dim + i];
        }
    }
    DiscretePath::new(dim, level, values).unwrap()
}

/// Random piecewise-linear path with increments in `[-s, s]`, `s` itself
/// drawn from a few decades.
pub fn path_strategy(dim: usize, level: u32) -> impl Strategy<Value = DiscretePath> {
    let n = (1usize << level) * dim;
    (prop::collection::vec(-1.0f64..1.0, n), -3i32..2).prop_map(move |(incs, e)| {
        let s = 10f64.powi(e);
        let scaled: Vec<f64> = incs.iter().map(|x| x * s).collect();
        from_increments(dim, level, &scaled)
    })
}

/// `(w(t_j) - w(t_i))_a (z(t_j) - z(t_i))_b` as a Chen-form table.
pub fn outer_table(w: &DiscretePath, z: &DiscretePath) -> TwoParamTable {
    let mut comps = Vec::new();
    for a in 0..w.dim() {
        for b in 0..z.dim() {
            let wa = w.coordinate_values(a);
            let zb = z.coordinate_values(b);
            let prod: Vec<f64> = wa.iter().zip(&zb).map(|(x, y)| x * y).collect();
            let neg: Vec<f64> = prod.iter().map(|x| -x).collect();
            comps.push(TableComponent::new(prod, neg, vec![(wa.clone(), zb.clone()), (zb, wa)]).unwrap());
        }
    }
    TwoParamTable::new(w.level(), comps).unwrap()
}

/// Brute force over all partitions of `0..n` (`2^(n-2)` of them).
pub fn exhaustive_qvar(table: &TwoParamTable, c: usize, q: f64) -> f64 {
    let n = table.num_points();
    let inner = n.saturating_sub(2);
    let mut best = 0.0f64;
    for mask in 0u64..(1u64 << inner) {
        let mut prev = 0;
        let mut s = 0.0;
        for k in 1..n {
            if k == n - 1 || mask >> (k - 1) & 1 == 1 {
                s += table.eval(c, prev, k).abs().powf(q);
                prev = k;
            }
        }
        best = best.max(s);
    }
    best.powf(1.0 / q)
}
