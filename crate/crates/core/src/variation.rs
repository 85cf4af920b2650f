//! q-variation of two-parameter tables by dynamic programming over grid
//! partitions, the composite `C^p` norm, and the dyadic `(p, kappa)` norm.
//!
//! Every table handled here has the form
//!
//! ```text
//! eta(i, j) = end[j] - start[i] - sum_r left_r[i] * right_r[j]
//! ```
//!
//! which covers path increments (no terms), second levels and cross integrals
//! in prefix-sum form (one term), and differences of those (several terms).
//! Queries are O(1), and because `start`/`left_r` only depend on `i`, a block
//! of start indices admits a cheap interval bound on `|eta(., j)|`.
//! [`qvar_pruned`] uses that bound to discard whole blocks that cannot improve
//! the running maximum; [`qvar_naive`] is the plain quadratic recursion. Both
//! take the maximum over the same candidate values, so they agree bit for
//! bit, and [`qvar`] picks whichever is faster for the grid size.

use std::sync::atomic::{AtomicU32, Ordering};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lift::RoughLift;
use crate::path::{num_points, DiscretePath};

/// Default cap on the grid level accepted by the partition DP.
pub const DEFAULT_MAX_DP_LEVEL: u32 = 14;

static MAX_DP_LEVEL: AtomicU32 = AtomicU32::new(DEFAULT_MAX_DP_LEVEL);

/// Raises (or lowers) the grid level accepted by the partition DP.
pub fn set_max_dp_level(level: u32) {
    MAX_DP_LEVEL.store(level, Ordering::Relaxed);
}

pub fn max_dp_level() -> u32 {
    MAX_DP_LEVEL.load(Ordering::Relaxed)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VarParams {
    p: f64,
    kappa: f64,
}

impl VarParams {
    pub fn new(p: f64, kappa: f64) -> Result<Self> {
        if !(p > 2.0 && p < 3.0) {
            return Err(Error::InvalidParameter(format!("p must satisfy 2 < p < 3, got {p}")));
        }
        if !(kappa > p - 1.0) || !kappa.is_finite() {
            return Err(Error::InvalidParameter(format!("kappa must exceed p - 1 = {}, got {kappa}", p - 1.0)));
        }
        Ok(Self { p, kappa })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Exponent used for second-level objects.
    pub fn half_p(&self) -> f64 {
        self.p / 2.0
    }
}

impl Default for VarParams {
    fn default() -> Self {
        Self { p: 2.5, kappa: 2.0 }
    }
}

/// One scalar component `eta(i, j)` of a two-parameter table.
#[derive(Clone, Debug, PartialEq)]
pub struct TableComponent {
    end: Vec<f64>,
    start: Vec<f64>,
    terms: Vec<(Vec<f64>, Vec<f64>)>,
}

impl TableComponent {
    pub fn new(end: Vec<f64>, start: Vec<f64>, terms: Vec<(Vec<f64>, Vec<f64>)>) -> Result<Self> {
        let n = end.len();
        let ok = start.len() == n && terms.iter().all(|(l, r)| l.len() == n && r.len() == n);
        if !ok {
            return Err(Error::InvalidParameter("table component vectors differ in length".into()));
        }
        Ok(Self { end, start, terms })
    }

    /// Increments `x[j] - x[i]` of a scalar sequence.
    pub fn increments(x: Vec<f64>) -> Self {
        Self { end: x.clone(), start: x, terms: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.end.len()
    }

    pub fn is_empty(&self) -> bool {
        self.end.is_empty()
    }

    #[inline]
    pub fn eval(&self, i: usize, j: usize) -> f64 {
        let mut v = self.end[j] - self.start[i];
        for (l, r) in &self.terms {
            v -= l[i] * r[j];
        }
        v
    }

    fn scaled(&self, c: f64) -> Self {
        let s = |v: &Vec<f64>| v.iter().map(|x| c * x).collect::<Vec<_>>();
        Self {
            end: s(&self.end),
            start: s(&self.start),
            terms: self.terms.iter().map(|(l, r)| (s(l), r.clone())).collect(),
        }
    }

    fn difference(&self, other: &Self) -> Self {
        let d = |a: &Vec<f64>, b: &Vec<f64>| a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>();
        // l1 r1 - l2 r2 = (l1 - l2) r1 + l2 (r1 - r2): both factors stay small
        // when the tables are close, which keeps the pruning bounds tight.
        let terms = if self.terms.len() == other.terms.len() {
            self.terms
                .iter()
                .zip(&other.terms)
                .flat_map(|((l1, r1), (l2, r2))| [(d(l1, l2), r1.clone()), (l2.clone(), d(r1, r2))])
                .collect()
        } else {
            let mut terms = self.terms.clone();
            for (l, r) in &other.terms {
                terms.push((l.iter().map(|x| -x).collect(), r.clone()));
            }
            terms
        };
        Self { end: d(&self.end, &other.end), start: d(&self.start, &other.start), terms }
    }
}

/// Two-parameter function on the grid simplex `{(t_i, t_j) : i <= j}` with
/// one or more scalar components.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoParamTable {
    level: u32,
    components: Vec<TableComponent>,
}

impl TwoParamTable {
    pub fn new(level: u32, components: Vec<TableComponent>) -> Result<Self> {
        let n = num_points(level);
        if let Some(c) = components.iter().find(|c| c.len() != n) {
            return Err(Error::BadLength { expected: n, got: c.len() });
        }
        Ok(Self { level, components })
    }

    /// Level-one table `x(t_j) - x(t_i)`, one component per coordinate.
    pub fn increments(path: &DiscretePath) -> Self {
        let components = (0..path.dim()).map(|i| TableComponent::increments(path.coordinate_values(i))).collect();
        Self { level: path.level(), components }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn num_points(&self) -> usize {
        num_points(self.level)
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, c: usize) -> &TableComponent {
        &self.components[c]
    }

    pub fn components(&self) -> &[TableComponent] {
        &self.components
    }

    pub fn eval(&self, c: usize, i: usize, j: usize) -> f64 {
        self.components[c].eval(i, j)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { level: self.level, components: self.components.iter().map(|x| x.scaled(c)).collect() }
    }

    /// Componentwise `self - other`.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        if self.level != other.level {
            return Err(Error::LevelMismatch { left: self.level, right: other.level });
        }
        if self.components.len() != other.components.len() {
            return Err(Error::DimensionMismatch { expected: self.components.len(), got: other.components.len() });
        }
        let components = self.components.iter().zip(&other.components).map(|(a, b)| a.difference(b)).collect();
        Ok(Self { level: self.level, components })
    }
}

/// `x -> x^q` for `x >= 0`, with a sqrt-based fast path when `4q` is an
/// integer (covers `p = 2.5` and `p/2 = 1.25`). Nondecreasing in `x`.
#[derive(Clone, Copy, Debug)]
enum Power {
    Quarters { whole: i32, rem: u8 },
    General(f64),
}

impl Power {
    fn new(q: f64) -> Self {
        let k = q * 4.0;
        if k.fract() == 0.0 && k <= 64.0 {
            let k = k as i32;
            Power::Quarters { whole: k / 4, rem: (k % 4) as u8 }
        } else {
            Power::General(q)
        }
    }

    #[inline(always)]
    fn apply(self, x: f64) -> f64 {
        match self {
            Power::Quarters { whole, rem } => {
                let base = x.powi(whole);
                match rem {
                    0 => base,
                    1 => base * x.sqrt().sqrt(),
                    2 => base * x.sqrt(),
                    _ => {
                        let s = x.sqrt();
                        base * s * s.sqrt()
                    }
                }
            }
            Power::General(q) => x.powf(q),
        }
    }
}

fn check_exponent(q: f64) -> Result<()> {
    if !(q >= 1.0) || !q.is_finite() {
        return Err(Error::ExponentBelowOne(q));
    }
    Ok(())
}

fn check_level(level: u32) -> Result<()> {
    let cap = max_dp_level();
    if level > cap {
        return Err(Error::LevelCap { level, cap });
    }
    Ok(())
}

/// Running (min, max) over aligned blocks of size `2^l`, plus prefix extents.
struct Extents {
    blocks: Vec<Vec<(f64, f64)>>,
    prefix: Vec<(f64, f64)>,
}

impl Extents {
    fn new(v: &[f64]) -> Self {
        let mut blocks = vec![v.iter().map(|&x| (x, x)).collect::<Vec<_>>()];
        while blocks.last().unwrap().len() > 1 {
            let prev = blocks.last().unwrap();
            let next = prev
                .chunks(2)
                .map(|c| if c.len() == 2 { (c[0].0.min(c[1].0), c[0].1.max(c[1].1)) } else { c[0] })
                .collect();
            blocks.push(next);
        }
        let mut prefix = Vec::with_capacity(v.len());
        let mut acc = (f64::INFINITY, f64::NEG_INFINITY);
        for &x in v {
            acc = (acc.0.min(x), acc.1.max(x));
            prefix.push(acc);
        }
        Self { blocks, prefix }
    }
}

/// Enclosures of `eta(i, j)` over blocks of start indices. Two equivalent
/// forms are bounded and intersected:
/// `end[j] - start[i] - sum l[i] r[j]` and
/// `end[j] - u[i] - sum l[i] (r[j] - r[i])` with `u = start + sum l r`.
/// The second keeps the cancellation that makes `eta(i, i) = 0`.
struct BoundedComponent<'a> {
    comp: &'a TableComponent,
    start: Extents,
    lefts: Vec<Extents>,
    shifted: Extents,
    rights: Vec<Extents>,
    pad: f64,
}

/// Slack applied to block bounds so that last-ulp effects of `powf` can never
/// prune a candidate that would have won.
const PRUNE_SLACK: f64 = 1.0 + 1e-12;

impl<'a> BoundedComponent<'a> {
    fn new(comp: &'a TableComponent) -> Self {
        let n = comp.len();
        let mut shifted = comp.start.clone();
        let mut scale = 0.0f64;
        for i in 0..n {
            let mut m = comp.end[i].abs() + comp.start[i].abs();
            for (l, r) in &comp.terms {
                shifted[i] += l[i] * r[i];
                m += (l[i] * r[i]).abs() + l[i].abs() * r[i].abs();
            }
            scale = scale.max(m + shifted[i].abs());
        }
        Self {
            comp,
            start: Extents::new(&comp.start),
            lefts: comp.terms.iter().map(|(l, _)| Extents::new(l)).collect(),
            shifted: Extents::new(&shifted),
            rights: comp.terms.iter().map(|(_, r)| Extents::new(r)).collect(),
            // absolute rounding allowance for the interval arithmetic
            pad: 1e-13 * scale * (comp.terms.len() + 2) as f64,
        }
    }

    /// Whether no start index summarised by `pick` (a block or a prefix)
    /// whose value is at most `v_max` can beat `best` at end point `j`.
    #[inline]
    fn prunable<F>(&self, j: usize, pick: F, v_max: f64, pw: Power, best: f64) -> bool
    where
        F: Fn(&Extents) -> (f64, f64),
    {
        let beaten = |lo: f64, hi: f64| (v_max + pw.apply(hi.abs().max(lo.abs()) + self.pad)) * PRUNE_SLACK <= best;
        let e = self.comp.end[j];
        let (slo, shi) = pick(&self.start);
        let mut hi = e - slo;
        let mut lo = e - shi;
        for (ext, (_, r)) in self.lefts.iter().zip(&self.comp.terms) {
            let c = r[j];
            let (llo, lhi) = pick(ext);
            let p1 = llo * c;
            let p2 = lhi * c;
            hi -= p1.min(p2);
            lo -= p1.max(p2);
        }
        if beaten(lo, hi) {
            return true;
        }
        if self.comp.terms.is_empty() {
            return false;
        }
        let (ulo, uhi) = pick(&self.shifted);
        let mut hi2 = e - ulo;
        let mut lo2 = e - uhi;
        for ((lext, rext), (_, r)) in self.lefts.iter().zip(&self.rights).zip(&self.comp.terms) {
            let (llo, lhi) = pick(lext);
            let (rlo, rhi) = pick(rext);
            let (d1, d2) = (r[j] - rhi, r[j] - rlo);
            let (a, b, c, d) = (llo * d1, llo * d2, lhi * d1, lhi * d2);
            hi2 -= a.min(b).min(c.min(d));
            lo2 -= a.max(b).max(c.max(d));
        }
        beaten(lo.max(lo2), hi.min(hi2))
    }
}

fn dp_pruned(comp: &TableComponent, pw: Power, mut parents: Option<&mut Vec<usize>>) -> f64 {
    let n = comp.len();
    if n < 2 {
        return 0.0;
    }
    let bc = BoundedComponent::new(comp);
    let top = bc.start.blocks.len() - 1;
    let mut v = vec![0.0f64; n];
    let mut stack: Vec<(usize, usize)> = Vec::with_capacity(64);
    let mut prev_arg = 0usize;
    for j in 1..n {
        let mut best = v[j - 1] + pw.apply(comp.eval(j - 1, j).abs());
        let mut arg = j - 1;
        // the previous maximiser is usually competitive and raises the bar early
        if prev_arg + 1 < j - 1 {
            let cand = v[prev_arg] + pw.apply(comp.eval(prev_arg, j).abs());
            if cand > best {
                best = cand;
                arg = prev_arg;
            }
        }
        if j >= 2 {
            let mut hi_idx = j - 2;
            loop {
                if bc.prunable(j, |e| e.prefix[hi_idx], v[hi_idx], pw, best) {
                    break;
                }
                let l = ((hi_idx + 1).trailing_zeros() as usize).min(top);
                let block_start = hi_idx + 1 - (1usize << l);
                stack.push((l, block_start >> l));
                while let Some((l, k)) = stack.pop() {
                    let lo_i = k << l;
                    let hi_i = lo_i + (1usize << l) - 1;
                    if l == 0 {
                        let cand = v[lo_i] + pw.apply(comp.eval(lo_i, j).abs());
                        if cand > best {
                            best = cand;
                            arg = lo_i;
                        }
                        continue;
                    }
                    if bc.prunable(j, |e| e.blocks[l][k], v[hi_i], pw, best) {
                        continue;
                    }
                    // right child popped first: nearer start points tend to win
                    stack.push((l - 1, 2 * k));
                    stack.push((l - 1, 2 * k + 1));
                }
                if block_start == 0 {
                    break;
                }
                hi_idx = block_start - 1;
            }
        }
        v[j] = best;
        prev_arg = arg;
        if let Some(p) = parents.as_deref_mut() {
            p[j] = arg;
        }
    }
    v[n - 1]
}

fn dp_naive(comp: &TableComponent, pw: Power, mut parents: Option<&mut Vec<usize>>) -> f64 {
    let n = comp.len();
    if n < 2 {
        return 0.0;
    }
    let mut v = vec![0.0f64; n];
    for j in 1..n {
        let mut best = v[j - 1] + pw.apply(comp.eval(j - 1, j).abs());
        let mut arg = j - 1;
        for i in (0..j - 1).rev() {
            let cand = v[i] + pw.apply(comp.eval(i, j).abs());
            if cand > best {
                best = cand;
                arg = i;
            }
        }
        v[j] = best;
        if let Some(p) = parents.as_deref_mut() {
            p[j] = arg;
        }
    }
    v[n - 1]
}

/// Below these sizes the bound bookkeeping costs more than it prunes.
const NAIVE_MAX_POINTS: usize = 129;
const NAIVE_MAX_POINTS_WITH_TERMS: usize = 257;

/// Both recursions take the maximum over the same candidate values, so they
/// agree bit for bit; the choice is purely about speed.
fn dp(comp: &TableComponent, pw: Power, parents: Option<&mut Vec<usize>>) -> f64 {
    let n = comp.len();
    let cutoff = if comp.terms.is_empty() { NAIVE_MAX_POINTS } else { NAIVE_MAX_POINTS_WITH_TERMS };
    if n <= cutoff {
        dp_naive(comp, pw, parents)
    } else {
        dp_pruned(comp, pw, parents)
    }
}

/// Grid q-variation `sup_D (sum |eta(t_i, t_{i+1})|^q)^{1/q}` of one
/// component, over partitions `D` made of grid points.
pub fn qvar(table: &TwoParamTable, component: usize, q: f64) -> Result<f64> {
    check_exponent(q)?;
    check_level(table.level)?;
    Ok(dp(&table.components[component], Power::new(q), None).powf(1.0 / q))
}

/// [`qvar`] forced through the block-pruned recursion.
pub fn qvar_pruned(table: &TwoParamTable, component: usize, q: f64) -> Result<f64> {
    check_exponent(q)?;
    check_level(table.level)?;
    Ok(dp_pruned(&table.components[component], Power::new(q), None).powf(1.0 / q))
}

/// [`qvar`] forced through the unpruned quadratic recursion.
pub fn qvar_naive(table: &TwoParamTable, component: usize, q: f64) -> Result<f64> {
    check_exponent(q)?;
    check_level(table.level)?;
    Ok(dp_naive(&table.components[component], Power::new(q), None).powf(1.0 / q))
}

/// [`qvar`] together with one maximising partition (grid indices, starting
/// at 0 and ending at the last point).
pub fn qvar_with_partition(table: &TwoParamTable, component: usize, q: f64) -> Result<(f64, Vec<usize>)> {
    check_exponent(q)?;
    check_level(table.level)?;
    let n = table.num_points();
    let mut parents = vec![0usize; n];
    let value = dp(&table.components[component], Power::new(q), Some(&mut parents));
    let mut partition = vec![n - 1];
    let mut j = n - 1;
    while j > 0 {
        j = parents[j];
        partition.push(j);
    }
    partition.reverse();
    Ok((value.powf(1.0 / q), partition))
}

/// Maximum over components of the grid q-variation (coordinatewise norm).
/// Zero for a table with no components.
pub fn max_qvar(table: &TwoParamTable, q: f64) -> Result<f64> {
    check_exponent(q)?;
    check_level(table.level)?;
    let pw = Power::new(q);
    let best = if table.num_points() >= 1025 && table.components.len() > 1 {
        table.components.par_iter().map(|c| dp(c, pw, None)).reduce(|| 0.0, f64::max)
    } else {
        table.components.iter().map(|c| dp(c, pw, None)).fold(0.0, f64::max)
    };
    Ok(best.powf(1.0 / q))
}

/// `||x||_p`: coordinatewise maximum of the grid p-variation of the path.
pub fn pvar_norm(path: &DiscretePath, p: f64) -> Result<f64> {
    max_qvar(&TwoParamTable::increments(path), p)
}

pub fn level1_norm(lift: &RoughLift, p: f64) -> Result<f64> {
    pvar_norm(lift.base(), p)
}

pub fn level2_norm(lift: &RoughLift, p: f64) -> Result<f64> {
    max_qvar(&lift.level2_table(), p / 2.0)
}

/// Composite norm `max{||eta_1||_p, ||eta_2||_{p/2}}` of a lift.
pub fn cp_norm(lift: &RoughLift, p: f64) -> Result<f64> {
    Ok(level1_norm(lift, p)?.max(level2_norm(lift, p)?))
}

/// Dyadic `(p, kappa)` norm, truncated at the path's own level:
/// `[sum_{n=1}^{N} n^kappa sum_k |z(t_k^n) - z(t_{k-1}^n)|^p]^{1/p}`.
pub fn dyadic_norm(z: &DiscretePath, params: VarParams) -> f64 {
    let pw = Power::new(params.p);
    let top = z.level();
    let mut total = 0.0;
    for n in 1..=top {
        let step = 1usize << (top - n);
        let mut inner = 0.0;
        for k in 1..=(1usize << n) {
            inner += pw.apply(z.displacement((k - 1) * step, k * step));
        }
        total += (n as f64).powf(params.kappa) * inner;
    }
    total.powf(1.0 / params.p)
}

/// `C(p, kappa) = (sum_{n>=1} n^kappa 2^{-np/2})^{1/p}`, the constant with
/// `||h||_{p,kappa} <= C(p, kappa) ||h||_H` for Cameron–Martin `h`.
pub fn dyadic_domination_constant(params: VarParams) -> f64 {
    let mut sum = 0.0;
    let mut n = 1u32;
    loop {
        let term = (n as f64).powf(params.kappa) * (-(n as f64) * params.p / 2.0).exp2();
        sum += term;
        if term < 1e-18 * sum && n > 10 {
            break;
        }
        n += 1;
    }
    sum.powf(1.0 / params.p)
}
