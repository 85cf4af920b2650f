//! Closed-form second levels of piecewise-linear paths.
//!
//! For paths `x` (d-dim) and `z` (m-dim) on a common grid, the prefix matrix
//! `A(t_j) = int_0^{t_j} x(u) ⊗ dz(u)` is accumulated segment by segment:
//! on `[t_k, t_{k+1}]` both paths are affine, so the integral is
//! `x(t_k) ⊗ dz_k + 1/2 dx_k ⊗ dz_k`. Any pair query is recovered in O(1) by
//!
//! ```text
//! C(s, t) = A(t) - A(s) - x(s) ⊗ (z(t) - z(s)).
//! ```
//!
//! The lift of `w` is the special case `x = z = w`.

use crate::error::{Error, Result};
use crate::path::DiscretePath;
use crate::variation::{max_qvar, TableComponent, TwoParamTable};

/// Row-major `rows x cols` matrices, one per grid point.
#[derive(Clone, Debug, PartialEq)]
struct PrefixMatrices {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl PrefixMatrices {
    fn accumulate(x: &DiscretePath, z: &DiscretePath) -> Self {
        let (rows, cols) = (x.dim(), z.dim());
        let stride = rows * cols;
        let n = x.num_points();
        let mut data = vec![0.0; n * stride];
        for k in 1..n {
            let (x0, x1) = (x.point(k - 1), x.point(k));
            let (z0, z1) = (z.point(k - 1), z.point(k));
            let (prev, cur) = data.split_at_mut(k * stride);
            let prev = &prev[(k - 1) * stride..];
            let cur = &mut cur[..stride];
            for a in 0..rows {
                let dx = x1[a] - x0[a];
                for b in 0..cols {
                    let dz = z1[b] - z0[b];
                    cur[a * cols + b] = prev[a * cols + b] + x0[a] * dz + 0.5 * dx * dz;
                }
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    fn at(&self, k: usize, a: usize, b: usize) -> f64 {
        self.data[k * self.rows * self.cols + a * self.cols + b]
    }

    fn matrix(&self, k: usize) -> &[f64] {
        let s = self.rows * self.cols;
        &self.data[k * s..(k + 1) * s]
    }

    fn column(&self, a: usize, b: usize) -> Vec<f64> {
        let n = self.data.len() / (self.rows * self.cols);
        (0..n).map(|k| self.at(k, a, b)).collect()
    }
}

/// Recombined value `A(j) - A(i) - x(t_i) ⊗ (z(t_j) - z(t_i))`, row-major.
fn recombine(prefix: &PrefixMatrices, x: &DiscretePath, z: &DiscretePath, i: usize, j: usize) -> Vec<f64> {
    let (rows, cols) = (prefix.rows, prefix.cols);
    let (ai, aj) = (prefix.matrix(i), prefix.matrix(j));
    let (xi, zi, zj) = (x.point(i), z.point(i), z.point(j));
    let mut out = vec![0.0; rows * cols];
    for a in 0..rows {
        for b in 0..cols {
            let idx = a * cols + b;
            out[idx] = aj[idx] - ai[idx] - xi[a] * (zj[b] - zi[b]);
        }
    }
    out
}

/// Chen-form table of `C(s, t)`, component `(a, b)` at index `a * cols + b`.
fn chen_table(prefix: &PrefixMatrices, x: &DiscretePath, z: &DiscretePath) -> TwoParamTable {
    let mut components = Vec::with_capacity(prefix.rows * prefix.cols);
    for a in 0..prefix.rows {
        let xa = x.coordinate_values(a);
        for b in 0..prefix.cols {
            let zb = z.coordinate_values(b);
            let end = prefix.column(a, b);
            let start = end.iter().zip(xa.iter().zip(&zb)).map(|(e, (xv, zv))| e - xv * zv).collect();
            components.push(TableComponent::new(end, start, vec![(xa.clone(), zb)]).expect("lengths agree"));
        }
    }
    TwoParamTable::new(x.level(), components).expect("lengths agree")
}

/// Cross integral `C_{x,z}(s, t) = int_s^t (x(u) - x(s)) ⊗ dz(u)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossIntegral {
    x: DiscretePath,
    z: DiscretePath,
    prefix: PrefixMatrices,
}

impl CrossIntegral {
    pub fn new(x: &DiscretePath, z: &DiscretePath) -> Result<Self> {
        x.ensure_same_level(z)?;
        Ok(Self { x: x.clone(), z: z.clone(), prefix: PrefixMatrices::accumulate(x, z) })
    }

    pub fn rows(&self) -> usize {
        self.prefix.rows
    }

    pub fn cols(&self) -> usize {
        self.prefix.cols
    }

    pub fn level(&self) -> u32 {
        self.x.level()
    }

    /// `A(t_k) = C(0, t_k)`, row-major.
    pub fn prefix(&self, k: usize) -> &[f64] {
        self.prefix.matrix(k)
    }

    pub fn at(&self, i: usize, j: usize) -> Result<Vec<f64>> {
        if i > j {
            return Err(Error::IndexOrder { i, j });
        }
        Ok(recombine(&self.prefix, &self.x, &self.z, i, j))
    }

    pub fn table(&self) -> TwoParamTable {
        chen_table(&self.prefix, &self.x, &self.z)
    }

    /// `||C_{x,z}||_{q}` with the coordinatewise maximum.
    pub fn norm(&self, q: f64) -> Result<f64> {
        max_qvar(&self.table(), q)
    }
}

pub fn cross(x: &DiscretePath, z: &DiscretePath) -> Result<CrossIntegral> {
    CrossIntegral::new(x, z)
}

/// Level-one and level-two increments of a piecewise-linear path.
#[derive(Clone, Debug, PartialEq)]
pub struct RoughLift {
    base: DiscretePath,
    prefix2: PrefixMatrices,
}

impl RoughLift {
    pub fn new(w: &DiscretePath) -> Self {
        Self { base: w.clone(), prefix2: PrefixMatrices::accumulate(w, w) }
    }

    pub fn base(&self) -> &DiscretePath {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn level(&self) -> u32 {
        self.base.level()
    }

    /// `int_0^{t_k} w(u) ⊗ dw(u)`, row-major.
    pub fn prefix2(&self, k: usize) -> &[f64] {
        self.prefix2.matrix(k)
    }

    pub fn level1(&self, i: usize, j: usize) -> Result<Vec<f64>> {
        if i > j {
            return Err(Error::IndexOrder { i, j });
        }
        Ok(self.base.point(j).iter().zip(self.base.point(i)).map(|(b, a)| b - a).collect())
    }

    /// Second level over `[t_i, t_j]` by Chen recombination of the prefixes.
    pub fn level2(&self, i: usize, j: usize) -> Result<Vec<f64>> {
        if i > j {
            return Err(Error::IndexOrder { i, j });
        }
        Ok(recombine(&self.prefix2, &self.base, &self.base, i, j))
    }

    pub fn level1_table(&self) -> TwoParamTable {
        TwoParamTable::increments(&self.base)
    }

    pub fn level2_table(&self) -> TwoParamTable {
        chen_table(&self.prefix2, &self.base, &self.base)
    }

    /// Lift of `w - h`, built directly from the difference path.
    pub fn subtract(&self, h: &DiscretePath) -> Result<RoughLift> {
        Ok(RoughLift::new(&self.base.sub(h)?))
    }

    /// Writes the full `(i, j)` table as CSV rows
    /// `i,j,l1_1..l1_d,l2_11..l2_dd`. Quadratic in the grid size.
    pub fn write_table_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        let d = self.dim();
        let mut header = vec!["i".to_string(), "j".to_string()];
        header.extend((1..=d).map(|a| format!("l1_{a}")));
        for a in 1..=d {
            for b in 1..=d {
                header.push(format!("l2_{a}{b}"));
            }
        }
        writeln!(out, "{}", header.join(","))?;
        let n = self.base.num_points();
        for i in 0..n {
            for j in i..n {
                let mut row = vec![i.to_string(), j.to_string()];
                row.extend(self.level1(i, j)?.iter().map(|v| v.to_string()));
                row.extend(self.level2(i, j)?.iter().map(|v| v.to_string()));
                writeln!(out, "{}", row.join(","))?;
            }
        }
        Ok(())
    }
}

pub fn lift(w: &DiscretePath) -> RoughLift {
    RoughLift::new(w)
}

/// `||a - b||_{C^p}`: composite norm of the two-parameter difference
/// `(a_1 - b_1, a_2 - b_2)`. Differs from the norm of the lift of the
/// difference path.
pub fn rough_distance(a: &RoughLift, b: &RoughLift, p: f64) -> Result<f64> {
    a.base.ensure_same_level(&b.base)?;
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    let first = a.level1_table().difference(&b.level1_table())?;
    let second = a.level2_table().difference(&b.level2_table())?;
    Ok(max_qvar(&first, p)?.max(max_qvar(&second, p / 2.0)?))
}
