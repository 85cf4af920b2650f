//! Finite-state checks of the functional inequalities.
//!
//! A [`FiniteProductSpace`] is a subset `U` of a product of two weighted
//! graphs. Square field operators act on one factor at a time and only see
//! edges whose endpoints both stay inside the relevant section of `U`:
//! `Gamma_2(g)(y) = 1/2 sum_{y'} c(y, y') (g(y) - g(y'))^2`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Largest factor size accepted by [`FiniteProductSpace`].
pub const MAX_FACTOR_SIZE: usize = 512;

const PHASE_CORPUS: u16 = 20;
const PHASE_LSI: u16 = 21;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteProductSpace {
    pub weights1: Vec<f64>,
    pub weights2: Vec<f64>,
    /// `members[x][y]` is true iff `(x, y)` lies in `U`.
    pub members: Vec<Vec<bool>>,
    /// Undirected edges `(a, b, conductance)` of the first factor.
    pub edges1: Vec<(usize, usize, f64)>,
    pub edges2: Vec<(usize, usize, f64)>,
}

/// Which factor a section lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    /// `U_x`, a subset of the second factor, indexed by `x`.
    First,
    /// `U^y`, a subset of the first factor, indexed by `y`.
    Second,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SectionConstant {
    pub factor: Factor,
    pub index: usize,
    /// Measure of the section under the other factor's weights.
    pub mass: f64,
    pub size: usize,
    /// Poincaré constant against the normalised section measure.
    pub constant: f64,
}

fn check_weights(w: &[f64], name: &str) -> Result<()> {
    if w.is_empty() || w.len() > MAX_FACTOR_SIZE {
        return Err(Error::InvalidParameter(format!("{name} must have 1..={MAX_FACTOR_SIZE} points")));
    }
    if w.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
        return Err(Error::InvalidParameter(format!("{name} must be positive")));
    }
    let s: f64 = w.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("{name} sum to {s}, expected 1")));
    }
    Ok(())
}

fn check_edges(edges: &[(usize, usize, f64)], n: usize, name: &str) -> Result<()> {
    for &(a, b, c) in edges {
        if a >= n || b >= n || a == b {
            return Err(Error::InvalidParameter(format!("{name}: bad edge ({a}, {b})")));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!("{name}: conductance must be positive")));
        }
    }
    Ok(())
}

impl FiniteProductSpace {
    pub fn new(
        weights1: Vec<f64>,
        weights2: Vec<f64>,
        members: Vec<Vec<bool>>,
        edges1: Vec<(usize, usize, f64)>,
        edges2: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        let s = Self { weights1, weights2, members, edges1, edges2 };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        check_weights(&self.weights1, "weights1")?;
        check_weights(&self.weights2, "weights2")?;
        let (n1, n2) = (self.n1(), self.n2());
        if self.members.len() != n1 || self.members.iter().any(|r| r.len() != n2) {
            return Err(Error::InvalidParameter(format!("membership table must be {n1} x {n2}")));
        }
        if !self.members.iter().flatten().any(|&b| b) {
            return Err(Error::InvalidParameter("U is empty".into()));
        }
        check_edges(&self.edges1, n1, "edges1")?;
        check_edges(&self.edges2, n2, "edges2")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serialises")
    }

    /// Uniform `n1 x n2` grid with path-graph edges of unit conductance and
    /// `U` the union of the closed index rectangles `(x0, x1, y0, y1)`.
    pub fn grid_union(n1: usize, n2: usize, rects: &[(usize, usize, usize, usize)]) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidParameter("grid sides must be positive".into()));
        }
        let mut members = vec![vec![false; n2]; n1];
        for &(x0, x1, y0, y1) in rects {
            if x0 > x1 || y0 > y1 || x1 >= n1 || y1 >= n2 {
                return Err(Error::InvalidParameter(format!("rectangle ({x0}, {x1}, {y0}, {y1}) out of range")));
            }
            for row in &mut members[x0..=x1] {
                row[y0..=y1].iter_mut().for_each(|b| *b = true);
            }
        }
        let path = |n: usize| (0..n.saturating_sub(1)).map(|k| (k, k + 1, 1.0)).collect();
        Self::new(vec![1.0 / n1 as f64; n1], vec![1.0 / n2 as f64; n2], members, path(n1), path(n2))
    }

    pub fn n1(&self) -> usize {
        self.weights1.len()
    }

    pub fn n2(&self) -> usize {
        self.weights2.len()
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.members[x][y]
    }

    /// `m(U)` under the product weights.
    pub fn mass(&self) -> f64 {
        let mut s = 0.0;
        for (x, row) in self.members.iter().enumerate() {
            for (y, &b) in row.iter().enumerate() {
                if b {
                    s += self.weights1[x] * self.weights2[y];
                }
            }
        }
        s
    }

    /// Indices of the section `U_x` or `U^y`.
    pub fn section(&self, factor: Factor, index: usize) -> Vec<usize> {
        match factor {
            Factor::First => (0..self.n2()).filter(|&y| self.members[index][y]).collect(),
            Factor::Second => (0..self.n1()).filter(|&x| self.members[x][index]).collect(),
        }
    }

    fn factor_data(&self, factor: Factor) -> (&[f64], &[(usize, usize, f64)], usize) {
        match factor {
            Factor::First => (&self.weights2, &self.edges2, self.n1()),
            Factor::Second => (&self.weights1, &self.edges1, self.n2()),
        }
    }

    /// Poincaré constant of one section; `Ok(None)` for an empty section.
    pub fn section_constant(&self, factor: Factor, index: usize) -> Result<Option<SectionConstant>> {
        let nodes = self.section(factor, index);
        if nodes.is_empty() {
            return Ok(None);
        }
        let (weights, edges, _) = self.factor_data(factor);
        let mass: f64 = nodes.iter().map(|&k| weights[k]).sum();
        let constant = if nodes.len() == 1 {
            0.0
        } else {
            let local: Vec<Option<usize>> = {
                let mut v = vec![None; weights.len()];
                nodes.iter().enumerate().for_each(|(i, &k)| v[k] = Some(i));
                v
            };
            let m: Vec<f64> = nodes.iter().map(|&k| weights[k] / mass).collect();
            let inner: Vec<(usize, usize, f64)> =
                edges.iter().filter_map(|&(a, b, c)| Some((local[a]?, local[b]?, c))).collect();
            if !connected(nodes.len(), &inner) {
                let name = match factor {
                    Factor::First => format!("U_x at x = {index}"),
                    Factor::Second => format!("U^y at y = {index}"),
                };
                return Err(Error::DisconnectedSection(name));
            }
            poincare_constant(&m, &inner)?
        };
        Ok(Some(SectionConstant { factor, index, mass, size: nodes.len(), constant }))
    }

    /// Poincaré constants of every nonempty section of both factors.
    pub fn section_pi_constants(&self) -> Result<Vec<SectionConstant>> {
        let mut out = Vec::new();
        for factor in [Factor::First, Factor::Second] {
            let count = self.factor_data(factor).2;
            for index in 0..count {
                if let Some(c) = self.section_constant(factor, index)? {
                    out.push(c);
                }
            }
        }
        Ok(out)
    }

    /// `sum_U m Gamma(f, f)` with `f` given on the full grid (row-major
    /// `x * n2 + y`; values off `U` are ignored).
    pub fn energy(&self, f: &[f64]) -> f64 {
        let n2 = self.n2();
        let mut e = 0.0;
        // each undirected edge inside a section contributes
        // 1/2 (m(p) + m(q)) c (f(p) - f(q))^2
        for x in 0..self.n1() {
            for &(a, b, c) in &self.edges2 {
                if self.members[x][a] && self.members[x][b] {
                    let w = 0.5 * self.weights1[x] * (self.weights2[a] + self.weights2[b]);
                    e += w * c * (f[x * n2 + a] - f[x * n2 + b]).powi(2);
                }
            }
        }
        for y in 0..n2 {
            for &(a, b, c) in &self.edges1 {
                if self.members[a][y] && self.members[b][y] {
                    let w = 0.5 * self.weights2[y] * (self.weights1[a] + self.weights1[b]);
                    e += w * c * (f[a * n2 + y] - f[b * n2 + y]).powi(2);
                }
            }
        }
        e
    }

    /// `iint_{U x U} (f(p) - f(q))^2 dm dm = 2 [m(U) sum m f^2 - (sum m f)^2]`.
    pub fn doubled_variance(&self, f: &[f64]) -> f64 {
        let n2 = self.n2();
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for x in 0..self.n1() {
            for y in 0..n2 {
                if self.members[x][y] {
                    let m = self.weights1[x] * self.weights2[y];
                    let v = f[x * n2 + y];
                    s0 += m;
                    s1 += m * v;
                    s2 += m * v * v;
                }
            }
        }
        (2.0 * (s0 * s2 - s1 * s1)).max(0.0)
    }

    fn sup_norm(&self, f: &[f64]) -> f64 {
        let n2 = self.n2();
        let mut s = 0.0f64;
        for x in 0..self.n1() {
            for y in 0..n2 {
                if self.members[x][y] {
                    s = s.max(f[x * n2 + y].abs());
                }
            }
        }
        s
    }
}

fn connected(n: usize, edges: &[(usize, usize, f64)]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut comps = n;
    for &(a, b, _) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            comps -= 1;
        }
    }
    comps == 1
}

/// `1 / lambda_1` for the form `sum_edges 1/2 (m_a + m_b) c (g_a - g_b)^2`
/// against the probability weights `m`, via the symmetric matrix
/// `M^{-1/2} L M^{-1/2}`.
fn poincare_constant(m: &[f64], edges: &[(usize, usize, f64)]) -> Result<f64> {
    let n = m.len();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for &(a, b, c) in edges {
        let w = 0.5 * (m[a] + m[b]) * c;
        l[(a, a)] += w;
        l[(b, b)] += w;
        l[(a, b)] -= w;
        l[(b, a)] -= w;
    }
    let s: Vec<f64> = m.iter().map(|x| 1.0 / x.sqrt()).collect();
    for i in 0..n {
        for j in 0..n {
            l[(i, j)] *= s[i] * s[j];
        }
    }
    let mut ev: Vec<f64> = SymmetricEigen::try_new(l, 1e-14, 10_000)
        .ok_or_else(|| Error::Eigen("symmetric eigen-solve did not converge".into()))?
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    let lambda1 = ev[1];
    if !(lambda1 > 0.0) {
        return Err(Error::Eigen(format!("non-positive spectral gap {lambda1}")));
    }
    Ok(1.0 / lambda1)
}

/// Greedy witness for the overlap assumption: starting from `U_1`, drop an
/// endpoint of the least-overlapping pair while the dropped mass stays
/// within `eps`. Returns the kept indices and their minimum pairwise overlap
/// (pairs `x = x'` included).
pub fn overlap_witness(space: &FiniteProductSpace, eps: f64) -> Result<(Vec<usize>, f64)> {
    let n1 = space.n1();
    let mut kept: Vec<usize> = (0..n1).filter(|&x| space.members[x].iter().any(|&b| b)).collect();
    let mut overlap = vec![0.0; n1 * n1];
    for &x in &kept {
        for &x2 in &kept {
            overlap[x * n1 + x2] = (0..space.n2())
                .filter(|&y| space.members[x][y] && space.members[x2][y])
                .map(|y| space.weights2[y])
                .sum();
        }
    }
    let mut dropped = 0.0;
    loop {
        // worst overlap per kept index
        let worst: Vec<(f64, usize)> = kept
            .iter()
            .map(|&x| {
                kept.iter().map(|&x2| (overlap[x * n1 + x2], x2)).fold((f64::INFINITY, x), |a, b| {
                    if b.0 < a.0 {
                        b
                    } else {
                        a
                    }
                })
            })
            .collect();
        let (pos, &(delta, partner)) =
            worst.iter().enumerate().min_by(|a, b| a.1 .0.total_cmp(&b.1 .0)).expect("U_1 is nonempty");
        let x = kept[pos];
        // prefer dropping the lighter endpoint
        let mut options = vec![x, partner];
        options.sort_by(|a, b| space.weights1[*a].total_cmp(&space.weights1[*b]));
        options.dedup();
        let choice = options.into_iter().find(|&c| dropped + space.weights1[c] <= eps && kept.len() > 1);
        match choice {
            Some(c) => {
                dropped += space.weights1[c];
                kept.retain(|&k| k != c);
            }
            None => {
                if !(delta > 0.0) {
                    return Err(Error::OverlapUnsatisfiable(format!(
                        "sections {x} and {partner} are disjoint and cannot be dropped within eps = {eps}"
                    )));
                }
                return Ok((kept, delta));
            }
        }
    }
}

/// Largest Poincaré constant over sections left after dropping the worst
/// ones within mass `eps_prime` per factor.
pub fn trimmed_section_constant(constants: &[SectionConstant], space: &FiniteProductSpace, eps_prime: f64) -> f64 {
    let mut xi = 0.0f64;
    for factor in [Factor::First, Factor::Second] {
        let weights = match factor {
            Factor::First => &space.weights1,
            Factor::Second => &space.weights2,
        };
        let mut cs: Vec<&SectionConstant> = constants.iter().filter(|c| c.factor == factor).collect();
        cs.sort_by(|a, b| b.constant.total_cmp(&a.constant).then(a.index.cmp(&b.index)));
        let mut budget = eps_prime;
        let mut iter = cs.into_iter().peekable();
        while let Some(c) = iter.peek() {
            if weights[c.index] <= budget {
                budget -= weights[c.index];
                iter.next();
            } else {
                break;
            }
        }
        if let Some(c) = iter.next() {
            xi = xi.max(c.constant);
        }
    }
    xi
}

#[derive(Clone, Debug, Serialize)]
pub struct WpiCertificate {
    pub eps: f64,
    pub eps_prime: f64,
    pub delta: f64,
    /// Section coefficient `xi(delta, eps')`.
    pub xi: f64,
    /// Overlap floor `delta(eps)`.
    pub overlap_floor: f64,
    pub kept_first_factor: Vec<usize>,
    pub mass_u: f64,
    pub energy_constant: f64,
    pub sup_constant: f64,
    pub functions: usize,
    /// `max (lhs - rhs)` over the corpus.
    pub max_violation: f64,
    pub violations: usize,
    pub verdict: bool,
}

/// Test-function corpus on the full grid: `random` uniform fields in
/// `[-1, 1]`, then cut and section indicators with values `+-1`.
pub fn wpi_corpus(space: &FiniteProductSpace, random: usize, root: RngStream) -> Vec<Vec<f64>> {
    let (n1, n2) = (space.n1(), space.n2());
    let mut out: Vec<Vec<f64>> = (0..random as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = root.substream(PHASE_CORPUS, k).rng();
            (0..n1 * n2).map(|_| rng.random_range(-1.0..=1.0)).collect()
        })
        .collect();
    let field = |g: &dyn Fn(usize, usize) -> bool| -> Vec<f64> {
        (0..n1 * n2).map(|i| if g(i / n2, i % n2) { 1.0 } else { -1.0 }).collect()
    };
    for k in 0..n1 {
        out.push(field(&|x, _| x <= k));
        out.push(field(&|x, _| x == k));
    }
    for k in 0..n2 {
        out.push(field(&|_, y| y <= k));
        out.push(field(&|_, y| y == k));
    }
    out
}

/// Checks the product-space inequality
/// `iint (f - f')^2 <= [18 xi / delta(eps)] E(f) + [8 eps + 36 eps' / delta(eps) + 18 delta m(U) / delta(eps)] ||f||^2`
/// over a random and adversarial corpus.
pub fn verify_product_wpi(
    space: &FiniteProductSpace,
    eps: f64,
    eps_prime: f64,
    delta: f64,
    corpus_size: usize,
    root: RngStream,
) -> Result<WpiCertificate> {
    space.validate()?;
    for (name, v) in [("eps", eps), ("eps_prime", eps_prime), ("delta", delta)] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::InvalidParameter(format!("{name} must be finite and non-negative")));
        }
    }
    let constants = space.section_pi_constants()?;
    let xi = trimmed_section_constant(&constants, space, eps_prime);
    let (kept, floor) = overlap_witness(space, eps)?;
    let mass_u = space.mass();
    let energy_constant = 18.0 * xi / floor;
    let sup_constant = 8.0 * eps + 36.0 * eps_prime / floor + 18.0 * delta * mass_u / floor;
    let corpus = wpi_corpus(space, corpus_size, root);
    let gaps: Vec<f64> = corpus
        .par_iter()
        .map(|f| {
            let lhs = space.doubled_variance(f);
            let rhs = energy_constant * space.energy(f) + sup_constant * space.sup_norm(f).powi(2);
            lhs - rhs
        })
        .collect();
    let max_violation = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let violations = gaps.iter().filter(|&&g| g > 1e-9).count();
    Ok(WpiCertificate {
        eps,
        eps_prime,
        delta,
        xi,
        overlap_floor: floor,
        kept_first_factor: kept,
        mass_u,
        energy_constant,
        sup_constant,
        functions: corpus.len(),
        max_violation,
        violations,
        verdict: violations == 0,
    })
}

fn normal_cdf_diff(a: f64, b: f64) -> f64 {
    // P(a < X < b) from the tail that keeps precision
    let s = std::f64::consts::SQRT_2;
    if a >= 0.0 {
        0.5 * (erfc(a / s) - erfc(b / s))
    } else if b <= 0.0 {
        0.5 * (erfc(-b / s) - erfc(-a / s))
    } else {
        1.0 - 0.5 * (erfc(-a / s) + erfc(b / s))
    }
}

fn normal_density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Finite-volume generator of the standard Gaussian restricted to `[l, u]`
/// with reflecting ends: cells of width `h`, cell masses `pi_k` and edge
/// conductances `phi(b_k) / (Z h)` at the interior cell boundaries `b_k`.
#[derive(Clone, Debug)]
pub struct RestrictedGaussian {
    pub lower: f64,
    pub upper: f64,
    /// Normalising mass `mu([l, u])`.
    pub mass: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub conductances: Vec<f64>,
}

impl RestrictedGaussian {
    pub fn new(lower: f64, upper: f64, cells: usize) -> Result<Self> {
        if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
            return Err(Error::InvalidParameter(format!("need a finite interval l < u, got [{lower}, {upper}]")));
        }
        if cells < 2 {
            return Err(Error::InvalidParameter("need at least two cells".into()));
        }
        let h = (upper - lower) / cells as f64;
        let edge = |k: usize| if k == cells { upper } else { lower + k as f64 * h };
        let mass = normal_cdf_diff(lower, upper);
        let weights: Vec<f64> = (0..cells).map(|k| normal_cdf_diff(edge(k), edge(k + 1)) / mass).collect();
        let nodes = (0..cells).map(|k| lower + (k as f64 + 0.5) * h).collect();
        let conductances = (1..cells).map(|k| normal_density(edge(k)) / (mass * h)).collect();
        Ok(Self { lower, upper, mass, nodes, weights, conductances })
    }

    /// Discrete `int |f'|^2 dmu_W`.
    pub fn energy(&self, f: &[f64]) -> f64 {
        self.conductances.iter().enumerate().map(|(k, c)| c * (f[k + 1] - f[k]).powi(2)).sum()
    }

    /// `Ent(f^2) = sum pi f^2 log(f^2 / sum pi f^2)`.
    pub fn entropy(&self, f: &[f64]) -> f64 {
        let norm: f64 = self.weights.iter().zip(f).map(|(p, v)| p * v * v).sum();
        if norm == 0.0 {
            return 0.0;
        }
        self.weights
            .iter()
            .zip(f)
            .map(|(p, v)| {
                let s = v * v;
                if s == 0.0 {
                    0.0
                } else {
                    p * s * (s / norm).ln()
                }
            })
            .sum()
    }

    /// Smallest positive eigenvalue of the generator, by Sturm bisection on
    /// the symmetrised tridiagonal matrix.
    pub fn spectral_gap(&self) -> Result<f64> {
        let n = self.weights.len();
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n - 1];
        for (k, &c) in self.conductances.iter().enumerate() {
            diag[k] += c / self.weights[k];
            diag[k + 1] += c / self.weights[k + 1];
            off[k] = -c / (self.weights[k] * self.weights[k + 1]).sqrt();
        }
        let bound = (0..n)
            .map(|k| diag[k] + if k > 0 { off[k - 1].abs() } else { 0.0 } + if k + 1 < n { off[k].abs() } else { 0.0 })
            .fold(0.0, f64::max);
        let count_below = |x: f64| -> usize {
            let mut count = 0;
            let mut q = 1.0;
            for k in 0..n {
                let e2 = if k > 0 { off[k - 1] * off[k - 1] } else { 0.0 };
                q = diag[k] - x - if k > 0 { e2 / q } else { 0.0 };
                if q == 0.0 {
                    q = -f64::EPSILON * (diag[k].abs() + x.abs()).max(f64::MIN_POSITIVE);
                }
                if q < 0.0 {
                    count += 1;
                }
            }
            count
        };
        // second eigenvalue: smallest x with at least two eigenvalues below
        let (mut lo, mut hi) = (0.0f64, bound * (1.0 + 1e-12) + 1e-300);
        if count_below(hi) < 2 {
            return Err(Error::Eigen("Sturm count found fewer than two eigenvalues".into()));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if count_below(mid) >= 2 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-13 * hi {
                break;
            }
        }
        let gap = 0.5 * (lo + hi);
        if !gap.is_finite() || gap <= 0.0 {
            return Err(Error::Eigen(format!("bisection produced {gap}")));
        }
        Ok(gap)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GaussianReport {
    pub lower: f64,
    pub upper: f64,
    pub cells: usize,
    pub mass: f64,
    /// `1 / mu(W)`, informational.
    pub inverse_mass: f64,
    pub lambda1: f64,
    /// `1 / lambda1`.
    pub pi_constant: f64,
    pub functions: usize,
    /// `max (Ent(f^2) - 2 E(f))` over the corpus.
    pub lsi_max_gap: f64,
    pub lsi_violations: usize,
}

/// Random smooth function on the nodes: a constant plus a trigonometric
/// polynomial with `1/k` decay in `s = (x - l) / (u - l)`.
fn smooth_function(g: &RestrictedGaussian, stream: RngStream) -> Vec<f64> {
    let mut rng = stream.rng();
    let amp: f64 = rng.random_range(0.05..2.0);
    let c0: f64 = rng.random_range(-1.0..1.0);
    let coeffs: Vec<(f64, f64)> = (1..=6)
        .map(|k| {
            let s = amp / k as f64;
            (s * rng.random_range(-1.0..1.0), s * rng.random_range(-1.0..1.0))
        })
        .collect();
    let span = g.upper - g.lower;
    g.nodes
        .iter()
        .map(|&x| {
            let s = (x - g.lower) / span;
            c0 + coeffs
                .iter()
                .enumerate()
                .map(|(k, (a, b))| {
                    let t = (k + 1) as f64 * std::f64::consts::PI * s;
                    a * t.cos() + b * t.sin()
                })
                .sum::<f64>()
        })
        .collect()
}

/// Spectral gap and log-Sobolev check for the standard Gaussian restricted
/// to `[lower, upper]`.
pub fn gaussian_convex_check(
    lower: f64,
    upper: f64,
    cells: usize,
    corpus_size: usize,
    root: RngStream,
) -> Result<GaussianReport> {
    if cells < 100 {
        return Err(Error::InvalidParameter(format!("grid size must be at least 100, got {cells}")));
    }
    let g = RestrictedGaussian::new(lower, upper, cells)?;
    let lambda1 = g.spectral_gap()?;
    let gaps: Vec<f64> = (0..corpus_size as u64)
        .into_par_iter()
        .map(|k| {
            let f = smooth_function(&g, root.substream(PHASE_LSI, k));
            g.entropy(&f) - 2.0 * g.energy(&f)
        })
        .collect();
    let lsi_max_gap = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(GaussianReport {
        lower,
        upper,
        cells,
        mass: g.mass,
        inverse_mass: 1.0 / g.mass,
        lambda1,
        pi_constant: 1.0 / lambda1,
        functions: corpus_size,
        lsi_max_gap,
        lsi_violations: gaps.iter().filter(|&&x| x > 1e-6).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point(c: f64) -> FiniteProductSpace {
        FiniteProductSpace::new(vec![1.0], vec![0.5, 0.5], vec![vec![true, true]], vec![], vec![(0, 1, c)]).unwrap()
    }

    #[test]
    fn two_point_section_constant() {
        let s = two_point(1.0);
        let c = s.section_constant(Factor::First, 0).unwrap().unwrap();
        // 2x2 oracle: form 1/2 (g1 - g2)^2, variance 1/4 (g1 - g2)^2
        let l = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let eig = SymmetricEigen::new(l).eigenvalues;
        let lam = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!((lam - 2.0).abs() < 1e-12);
        assert!((c.constant - 1.0 / lam).abs() < 1e-12);
        assert!((c.constant - 0.5).abs() < 1e-12);
        let scaled = two_point(4.0).section_constant(Factor::First, 0).unwrap().unwrap();
        assert!((scaled.constant - 0.125).abs() < 1e-12);
    }

    #[test]
    fn singleton_and_disconnected_sections() {
        let s = FiniteProductSpace::new(vec![1.0], vec![0.5, 0.5], vec![vec![true, false]], vec![], vec![(0, 1, 1.0)])
            .unwrap();
        assert_eq!(s.section_constant(Factor::First, 0).unwrap().unwrap().constant, 0.0);
        let s = FiniteProductSpace::new(vec![1.0], vec![0.5, 0.5], vec![vec![true, true]], vec![], vec![]).unwrap();
        assert!(matches!(s.section_constant(Factor::First, 0), Err(Error::DisconnectedSection(_))));
    }

    #[test]
    fn validation_rejects_bad_spaces() {
        assert!(FiniteProductSpace::new(vec![0.5], vec![1.0], vec![vec![true]], vec![], vec![]).is_err());
        assert!(FiniteProductSpace::new(vec![1.0], vec![1.0], vec![vec![false]], vec![], vec![]).is_err());
        assert!(FiniteProductSpace::new(vec![1.0], vec![1.0], vec![vec![true]], vec![(0, 0, 1.0)], vec![]).is_err());
        assert!(FiniteProductSpace::grid_union(3, 3, &[(0, 3, 0, 0)]).is_err());
        assert!(FiniteProductSpace::from_json("{").is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = FiniteProductSpace::grid_union(4, 3, &[(0, 2, 0, 1), (2, 3, 1, 2)]).unwrap();
        assert_eq!(FiniteProductSpace::from_json(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn path_graph_constant_matches_closed_form() {
        // uniform path on n points: lambda_1 = 2 (1 - cos(pi / n)) in the
        // normalised form with edge weight 1/n
        let n = 7;
        let s = FiniteProductSpace::grid_union(1, n, &[(0, 0, 0, n - 1)]).unwrap();
        let c = s.section_constant(Factor::First, 0).unwrap().unwrap();
        let lam = 2.0 * (1.0 - (std::f64::consts::PI / n as f64).cos());
        assert!((c.constant - 1.0 / lam).abs() < 1e-10, "{} vs {}", c.constant, 1.0 / lam);
    }

    #[test]
    fn constant_function_has_zero_sides() {
        let s = FiniteProductSpace::grid_union(5, 5, &[(0, 2, 0, 2), (1, 4, 1, 4)]).unwrap();
        let f = vec![0.7; 25];
        assert!(s.doubled_variance(&f).abs() < 1e-15);
        assert_eq!(s.energy(&f), 0.0);
    }

    #[test]
    fn full_product_holds() {
        let s = FiniteProductSpace::grid_union(6, 5, &[(0, 5, 0, 4)]).unwrap();
        let cert = verify_product_wpi(&s, 1e-3, 1e-3, 1e-3, 200, RngStream::new(1, 0)).unwrap();
        assert!((cert.overlap_floor - 1.0).abs() < 1e-12);
        assert!(cert.verdict && cert.max_violation < 0.0, "{cert:?}");
    }

    #[test]
    fn disjoint_sections_are_unsatisfiable() {
        // two blocks with no common second coordinate
        let s = FiniteProductSpace::grid_union(4, 4, &[(0, 1, 0, 1), (2, 3, 2, 3)]).unwrap();
        assert!(matches!(overlap_witness(&s, 0.1), Err(Error::OverlapUnsatisfiable(_))));
        // a budget covering one block restores overlap
        let (kept, floor) = overlap_witness(&s, 0.5).unwrap();
        assert_eq!(kept.len(), 2);
        assert!((floor - 0.5).abs() < 1e-12);
    }

    #[test]
    fn trimming_drops_worst_sections() {
        let s = FiniteProductSpace::grid_union(4, 6, &[(0, 3, 0, 2), (0, 0, 0, 5)]).unwrap();
        let cs = s.section_pi_constants().unwrap();
        let all = cs.iter().map(|c| c.constant).fold(0.0, f64::max);
        assert_eq!(trimmed_section_constant(&cs, &s, 0.0), all);
        assert!(trimmed_section_constant(&cs, &s, 0.3) < all);
    }

    #[test]
    fn gaussian_weights_and_constant_function() {
        let g = RestrictedGaussian::new(-1.0, 2.0, 300).unwrap();
        assert!((g.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let f = vec![1.3; 300];
        assert_eq!(g.energy(&f), 0.0);
        assert!(g.entropy(&f).abs() < 1e-14);
        assert!(RestrictedGaussian::new(1.0, 1.0, 10).is_err());
        assert!(gaussian_convex_check(-1.0, 1.0, 50, 1, RngStream::new(1, 0)).is_err());
    }

    #[test]
    fn uniform_limit_of_short_interval() {
        // on a tiny interval the measure is nearly uniform: gap ~ (pi / len)^2
        let g = RestrictedGaussian::new(0.0, 0.01, 400).unwrap();
        let gap = g.spectral_gap().unwrap();
        let expected = (std::f64::consts::PI / 0.01).powi(2);
        assert!((gap / expected - 1.0).abs() < 1e-3, "{gap} vs {expected}");
    }

    #[test]
    fn gap_grows_as_the_interval_shrinks() {
        let nested = [(-8.0, 8.0), (-3.0, 4.0), (-1.0, 2.0), (-0.5, 1.0), (0.0, 0.5)];
        let gaps: Vec<f64> =
            nested.iter().map(|&(l, u)| RestrictedGaussian::new(l, u, 800).unwrap().spectral_gap().unwrap()).collect();
        assert!((gaps[0] - 1.0).abs() < 1e-3, "{gaps:?}");
        assert!(gaps.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{gaps:?}");
    }
}
