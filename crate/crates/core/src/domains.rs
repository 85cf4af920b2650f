//! Membership predicates for the sets built from lifts and cross integrals.
//!
//! All inequalities are strict. Predicates evaluate the cheap level-one
//! constraint first and stop at the first violated constraint.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lift::{cross, rough_distance, RoughLift};
use crate::path::DiscretePath;
use crate::variation::{level2_norm, pvar_norm, VarParams};

/// `||C_{x,z}||_{p/2}`, exactly zero when either path vanishes.
fn cross_norm(x: &DiscretePath, z: &DiscretePath, params: VarParams) -> Result<f64> {
    if x.is_zero() || z.is_zero() {
        x.ensure_same_level(z)?;
        return Ok(0.0);
    }
    cross(x, z)?.norm(params.half_p())
}

/// `w` in `U_{a,z}`: `||lift(w)||_{C^p} < a`, `||C_{w,z}||_{p/2} < a` and
/// `||C_{z,w}||_{p/2} < a`.
pub fn in_u(w: &DiscretePath, z: &DiscretePath, a: f64, params: VarParams) -> Result<bool> {
    w.ensure_same_level(z)?;
    if !(a > 0.0) {
        return Ok(false);
    }
    let p = params.p();
    Ok(pvar_norm(w, p)? < a
        && level2_norm(&RoughLift::new(w), p)? < a
        && cross_norm(w, z, params)? < a
        && cross_norm(z, w, params)? < a)
}

/// `w` in `B_{a,h}`, stated through `g = w - h`: `||g_2||_{p/2}`,
/// `||C_{g,h}||_{p/2}`, `||C_{h,g}||_{p/2}` and `||g||_p` all below `a`.
pub fn in_b(w: &DiscretePath, h: &DiscretePath, a: f64, params: VarParams) -> Result<bool> {
    let g = w.sub(h)?;
    if !(a > 0.0) {
        return Ok(false);
    }
    let p = params.p();
    Ok(pvar_norm(&g, p)? < a
        && level2_norm(&RoughLift::new(&g), p)? < a
        && cross_norm(&g, h, params)? < a
        && cross_norm(h, &g, params)? < a)
}

/// `w` in `O_a(h)`: `||lift(w) - lift(h)||_{C^p} < a`.
pub fn in_o(w: &DiscretePath, h: &DiscretePath, a: f64, params: VarParams) -> Result<bool> {
    w.ensure_same_level(h)?;
    if w.dim() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), got: w.dim() });
    }
    if !(a > 0.0) {
        return Ok(false);
    }
    Ok(rough_distance(&RoughLift::new(w), &RoughLift::new(h), params.p())? < a)
}

/// `(w1, w2)` in `U_{a,b}`: `||w1||_p ||w2||_p < a`, `||w1||_p < b`,
/// `||w2||_p < b`, for one-dimensional `w1`, `w2`.
pub fn in_uab(w1: &DiscretePath, w2: &DiscretePath, a: f64, b: f64, params: VarParams) -> Result<bool> {
    for w in [w1, w2] {
        if w.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: w.dim() });
        }
    }
    w1.ensure_same_level(w2)?;
    check_uab(a, b)?;
    let n1 = pvar_norm(w1, params.p())?;
    if !(n1 < b) {
        return Ok(false);
    }
    let n2 = pvar_norm(w2, params.p())?;
    Ok(n2 < b && n1 * n2 < a)
}

fn check_uab(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && b > 0.0 && a < b * b) {
        return Err(Error::InvalidParameter(format!("U_ab needs 0 < a < b^2, got a = {a}, b = {b}")));
    }
    Ok(())
}

/// Section of `U_{a,z}` over a fixed prefix `w'`: with the reference
/// `r = (w', z)` (prefix coordinates first), `||C_{r,w_last}||_{p/2} < a`,
/// `||C_{w_last,r}||_{p/2} < a` and `||w_last||_p < a`.
pub fn in_section(
    w_last: &DiscretePath,
    prefix: Option<&DiscretePath>,
    z: &DiscretePath,
    a: f64,
    params: VarParams,
) -> Result<bool> {
    if w_last.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: w_last.dim() });
    }
    let reference = section_reference(prefix, z)?;
    w_last.ensure_same_level(&reference)?;
    if !(a > 0.0) {
        return Ok(false);
    }
    Ok(pvar_norm(w_last, params.p())? < a
        && cross_norm(&reference, w_last, params)? < a
        && cross_norm(w_last, &reference, params)? < a)
}

/// Concatenation `(w', z)` used as the section reference.
pub fn section_reference(prefix: Option<&DiscretePath>, z: &DiscretePath) -> Result<DiscretePath> {
    match prefix {
        Some(w) => w.concat(z),
        None => Ok(z.clone()),
    }
}

/// Parametrised set, as consumed by the CLI and the Monte Carlo studies.
#[derive(Clone, Debug, PartialEq)]
pub enum DomainKind {
    /// `U_{a,z}` for `dim`-dimensional `w`.
    U {
        z: DiscretePath,
        dim: usize,
    },
    B {
        h: DiscretePath,
    },
    O {
        h: DiscretePath,
    },
    /// `U_{a,b}` on pairs of one-dimensional paths (sampled as a 2-d path).
    Uab {
        b: f64,
        level: u32,
    },
    /// Section over a fixed prefix (sampled variable is one-dimensional).
    Section {
        prefix: Option<DiscretePath>,
        z: DiscretePath,
    },
}

impl DomainKind {
    pub fn name(&self) -> &'static str {
        match self {
            DomainKind::U { .. } => "U",
            DomainKind::B { .. } => "B",
            DomainKind::O { .. } => "O",
            DomainKind::Uab { .. } => "Uab",
            DomainKind::Section { .. } => "Section",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub a: f64,
    pub params: VarParams,
}

/// Flat description of a spec for JSON summaries.
#[derive(Clone, Debug, Serialize)]
pub struct DomainEcho {
    pub kind: String,
    pub a: f64,
    pub b: Option<f64>,
    pub p: f64,
    pub kappa: f64,
    pub sample_dim: usize,
    pub level: u32,
    pub reference_zero: bool,
}

impl DomainSpec {
    /// Radius `a = 0` is accepted and describes the empty set.
    pub fn new(kind: DomainKind, a: f64, params: VarParams) -> Result<Self> {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::InvalidParameter(format!("radius must be finite and non-negative, got {a}")));
        }
        match &kind {
            DomainKind::U { dim, .. } if *dim == 0 => {
                return Err(Error::InvalidParameter("U needs a positive sample dimension".into()))
            }
            DomainKind::Uab { b, .. } => {
                if a > 0.0 {
                    check_uab(a, *b)?;
                } else if !(*b > 0.0) {
                    return Err(Error::InvalidParameter("U_ab needs b > 0".into()));
                }
            }
            DomainKind::Section { prefix: Some(w), z } => w.ensure_same_level(z)?,
            _ => {}
        }
        Ok(Self { kind, a, params })
    }

    /// Dimension of the sampled path `w`.
    pub fn sample_dim(&self) -> usize {
        match &self.kind {
            DomainKind::U { dim, .. } => *dim,
            DomainKind::B { h } | DomainKind::O { h } => h.dim(),
            DomainKind::Uab { .. } => 2,
            DomainKind::Section { .. } => 1,
        }
    }

    pub fn level(&self) -> u32 {
        match &self.kind {
            DomainKind::U { z, .. } => z.level(),
            DomainKind::B { h } | DomainKind::O { h } => h.level(),
            DomainKind::Uab { level, .. } => *level,
            DomainKind::Section { z, .. } => z.level(),
        }
    }

    pub fn reference(&self) -> Option<&DiscretePath> {
        match &self.kind {
            DomainKind::U { z, .. } | DomainKind::Section { z, .. } => Some(z),
            DomainKind::B { h } | DomainKind::O { h } => Some(h),
            DomainKind::Uab { .. } => None,
        }
    }

    pub fn contains(&self, w: &DiscretePath) -> Result<bool> {
        let params = self.params;
        match &self.kind {
            DomainKind::U { z, dim } => {
                if w.dim() != *dim {
                    return Err(Error::DimensionMismatch { expected: *dim, got: w.dim() });
                }
                in_u(w, z, self.a, params)
            }
            DomainKind::B { h } => in_b(w, h, self.a, params),
            DomainKind::O { h } => in_o(w, h, self.a, params),
            DomainKind::Uab { b, .. } => {
                if w.dim() != 2 {
                    return Err(Error::DimensionMismatch { expected: 2, got: w.dim() });
                }
                if self.a == 0.0 {
                    return Ok(false);
                }
                in_uab(&w.coordinate(0), &w.coordinate(1), self.a, *b, params)
            }
            DomainKind::Section { prefix, z } => in_section(w, prefix.as_ref(), z, self.a, params),
        }
    }

    pub fn echo(&self) -> DomainEcho {
        DomainEcho {
            kind: self.kind.name().to_string(),
            a: self.a,
            b: match self.kind {
                DomainKind::Uab { b, .. } => Some(b),
                _ => None,
            },
            p: self.params.p(),
            kappa: self.params.kappa(),
            sample_dim: self.sample_dim(),
            level: self.level(),
            reference_zero: self.reference().is_none_or(|r| r.is_zero()),
        }
    }
}
