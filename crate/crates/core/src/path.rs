//! Paths sampled on a dyadic grid `{k 2^-N : 0 <= k <= 2^N}`.
//!
//! Between grid points a path is the linear interpolant, so every
//! `DiscretePath` is also a Cameron–Martin element and all integrals against
//! it are evaluated segment by segment in closed form.

use crate::error::{Error, Result};
use crate::rng::{standard_normal, RngStream};

/// Largest grid level a path may carry (2^30 + 1 points).
pub const MAX_PATH_LEVEL: u32 = 30;

#[derive(Clone, Debug, PartialEq)]
pub struct DiscretePath {
    dim: usize,
    level: u32,
    /// Row-major: point `k`, coordinate `i` lives at `k * dim + i`.
    values: Vec<f64>,
}

pub fn num_points(level: u32) -> usize {
    (1usize << level) + 1
}

impl DiscretePath {
    pub fn new(dim: usize, level: u32, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("path dimension must be positive".into()));
        }
        if level > MAX_PATH_LEVEL {
            return Err(Error::InvalidParameter(format!("grid level {level} exceeds {MAX_PATH_LEVEL}")));
        }
        let expected = num_points(level) * dim;
        if values.len() != expected {
            return Err(Error::BadLength { expected, got: values.len() });
        }
        if values[..dim].iter().any(|&v| v != 0.0) {
            return Err(Error::NotAnchored(values[..dim].to_vec()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("path values must be finite".into()));
        }
        Ok(Self { dim, level, values })
    }

    pub fn zeros(dim: usize, level: u32) -> Self {
        assert!(dim > 0 && level <= MAX_PATH_LEVEL);
        Self { dim, level, values: vec![0.0; num_points(level) * dim] }
    }

    /// Samples `f` on the grid. `f(0)` must vanish.
    pub fn from_fn<F>(dim: usize, level: u32, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Vec<f64>,
    {
        let n = num_points(level);
        let mut values = Vec::with_capacity(n * dim);
        for k in 0..n {
            let v = f(grid_time(level, k));
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
            }
            values.extend_from_slice(&v);
        }
        Self::new(dim, level, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn num_points(&self) -> usize {
        num_points(self.level)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time(&self, k: usize) -> f64 {
        grid_time(self.level, k)
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    #[inline]
    pub fn at(&self, k: usize, i: usize) -> f64 {
        self.values[k * self.dim + i]
    }

    /// Values of coordinate `i` over the grid.
    pub fn coordinate_values(&self, i: usize) -> Vec<f64> {
        (0..self.num_points()).map(|k| self.at(k, i)).collect()
    }

    /// Coordinate `i` as a one-dimensional path.
    pub fn coordinate(&self, i: usize) -> DiscretePath {
        Self { dim: 1, level: self.level, values: self.coordinate_values(i) }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn ensure_same_level(&self, other: &DiscretePath) -> Result<()> {
        if self.level != other.level {
            return Err(Error::LevelMismatch { left: self.level, right: other.level });
        }
        Ok(())
    }

    fn ensure_same_shape(&self, other: &DiscretePath) -> Result<()> {
        self.ensure_same_level(other)?;
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        Ok(())
    }

    pub fn sub(&self, other: &DiscretePath) -> Result<DiscretePath> {
        self.ensure_same_shape(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Self { dim: self.dim, level: self.level, values })
    }

    pub fn add(&self, other: &DiscretePath) -> Result<DiscretePath> {
        self.ensure_same_shape(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(Self { dim: self.dim, level: self.level, values })
    }

    pub fn scale(&self, c: f64) -> DiscretePath {
        Self { dim: self.dim, level: self.level, values: self.values.iter().map(|v| c * v).collect() }
    }

    /// Stacks coordinates: the result has `self.dim() + other.dim()` coordinates,
    /// `self`'s first.
    pub fn concat(&self, other: &DiscretePath) -> Result<DiscretePath> {
        self.ensure_same_level(other)?;
        let dim = self.dim + other.dim;
        let mut values = Vec::with_capacity(self.num_points() * dim);
        for k in 0..self.num_points() {
            values.extend_from_slice(self.point(k));
            values.extend_from_slice(other.point(k));
        }
        Ok(Self { dim, level: self.level, values })
    }

    /// Euclidean increment norms `|x(t_{k+1}) - x(t_k)|`.
    fn increment_norm(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.point(i), self.point(j));
        a.iter().zip(b).map(|(x, y)| (y - x) * (y - x)).sum::<f64>().sqrt()
    }

    /// Dyadic polygonal projection onto the level-`n` grid, expressed on this
    /// path's own grid.
    pub fn dyadic_project(&self, n: u32) -> Result<DiscretePath> {
        if n > self.level {
            return Err(Error::ProjectionLevel { requested: n, level: self.level });
        }
        if n == self.level {
            return Ok(self.clone());
        }
        let step = 1usize << (self.level - n);
        let mut values = vec![0.0; self.values.len()];
        for k in 0..self.num_points() {
            let left = (k / step) * step;
            let dst = &mut values[k * self.dim..(k + 1) * self.dim];
            if left == k {
                dst.copy_from_slice(self.point(k));
                continue;
            }
            let frac = (k - left) as f64 / step as f64;
            let (a, b) = (self.point(left), self.point(left + step));
            for i in 0..self.dim {
                dst[i] = a[i] + (b[i] - a[i]) * frac;
            }
        }
        Ok(Self { dim: self.dim, level: self.level, values })
    }

    /// Cameron–Martin norm of the piecewise-linear interpolant,
    /// `(sum_k |dh_k|^2 2^N)^{1/2}`.
    pub fn cm_norm(&self) -> f64 {
        let scale = (1u64 << self.level) as f64;
        let mut s = 0.0;
        for k in 1..self.num_points() {
            let d = self.increment_norm(k - 1, k);
            s += d * d;
        }
        (s * scale).sqrt()
    }

    /// Length `int_0^1 |h'(t)| dt` of the piecewise-linear interpolant.
    pub fn length(&self) -> f64 {
        (1..self.num_points()).map(|k| self.increment_norm(k - 1, k)).sum()
    }

    /// `|x(t_j) - x(t_i)|` in the Euclidean norm.
    pub fn displacement(&self, i: usize, j: usize) -> f64 {
        self.increment_norm(i, j)
    }
}

pub fn grid_time(level: u32, k: usize) -> f64 {
    k as f64 / (1u64 << level) as f64
}

/// Standard `d`-dimensional Brownian motion on the level-`level` grid:
/// i.i.d. `N(0, 2^-level I_d)` increments.
pub fn sample_brownian(dim: usize, level: u32, stream: &RngStream) -> Result<DiscretePath> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    if level > MAX_PATH_LEVEL {
        return Err(Error::InvalidParameter(format!("grid level {level} exceeds {MAX_PATH_LEVEL}")));
    }
    let mut rng = stream.rng();
    let sd = (-(level as f64) / 2.0).exp2();
    let n = num_points(level);
    let mut values = vec![0.0; n * dim];
    for k in 1..n {
        for i in 0..dim {
            values[k * dim + i] = values[(k - 1) * dim + i] + sd * standard_normal(&mut rng);
        }
    }
    Ok(DiscretePath { dim, level, values })
}
