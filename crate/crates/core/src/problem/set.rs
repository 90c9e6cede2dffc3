use std::sync::Arc;

use nalgebra::linalg::Cholesky;
use nalgebra::Dyn;
use serde::{Deserialize, Serialize};

use crate::{Error, Matrix, Result, Vector};

/// Absolute tolerance used for set membership tests.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Relative singular-value cutoff for the affine rank test.
const RANK_TOL: f64 = 1e-10;

/// A closed convex set with an exact Euclidean projection.
#[derive(Clone, Debug)]
pub enum ConvexSet {
    FreeSpace,
    Box { lower: Vector, upper: Vector },
    Ball { center: Vector, radius: f64 },
    Affine(AffineSubspace),
}

/// `{x : A x = b}` with a cached Cholesky factor of `A Aᵀ`.
#[derive(Clone, Debug)]
pub struct AffineSubspace {
    a: Matrix,
    b: Vector,
    gram: Arc<Cholesky<f64, Dyn>>,
}

impl AffineSubspace {
    pub fn new(a: Matrix, b: Vector) -> Result<Self> {
        let (p, n) = a.shape();
        if p == 0 || n == 0 {
            return Err(Error::InvalidInput("affine constraint matrix is empty".into()));
        }
        if b.len() != p {
            return Err(Error::InvalidInput(format!(
                "affine right-hand side has length {}, expected {p}",
                b.len()
            )));
        }
        if !all_finite(a.as_slice()) || !all_finite(b.as_slice()) {
            return Err(Error::InvalidInput("affine data must be finite".into()));
        }
        if p > n {
            return Err(Error::IllConditionedSet(format!(
                "{p} equality rows cannot have full row rank in dimension {n}"
            )));
        }
        let sv = a.clone().svd(false, false).singular_values;
        let largest = sv.max();
        let rank = sv.iter().filter(|&&s| s > RANK_TOL * largest).count();
        if largest == 0.0 || rank < p {
            return Err(Error::IllConditionedSet(format!(
                "constraint matrix has rank {rank} < {p} rows"
            )));
        }
        let gram = Cholesky::new(&a * a.transpose()).ok_or_else(|| {
            Error::IllConditionedSet("A Aᵀ is not positive definite".into())
        })?;
        Ok(Self {
            a,
            b,
            gram: Arc::new(gram),
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn rhs(&self) -> &Vector {
        &self.b
    }

    pub fn residual(&self, x: &Vector) -> Vector {
        &self.a * x - &self.b
    }

    /// Solves `(A Aᵀ) y = r` with the cached factor.
    pub fn solve_gram(&self, r: &Vector) -> Vector {
        self.gram.solve(r)
    }

    fn project(&self, v: &Vector) -> Vector {
        let correction = self.solve_gram(&self.residual(v));
        v - self.a.transpose() * correction
    }
}

impl ConvexSet {
    pub fn boxed(lower: Vector, upper: Vector) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::InvalidInput(format!(
                "box bounds have lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (l, u)) in lower.iter().zip(upper.iter()).enumerate() {
            if l.is_nan() || u.is_nan() {
                return Err(Error::InvalidInput(format!("box bound {i} is NaN")));
            }
            if l > u {
                return Err(Error::InvalidInput(format!(
                    "box lower bound {l} exceeds upper bound {u} at index {i}"
                )));
            }
        }
        Ok(ConvexSet::Box { lower, upper })
    }

    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidInput(format!(
                "ball radius must be positive and finite, got {radius}"
            )));
        }
        if !all_finite(center.as_slice()) {
            return Err(Error::InvalidInput("ball center must be finite".into()));
        }
        Ok(ConvexSet::Ball { center, radius })
    }

    pub fn affine(a: Matrix, b: Vector) -> Result<Self> {
        AffineSubspace::new(a, b).map(ConvexSet::Affine)
    }

    /// Dimension fixed by the set data, `None` for free space.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            ConvexSet::FreeSpace => None,
            ConvexSet::Box { lower, .. } => Some(lower.len()),
            ConvexSet::Ball { center, .. } => Some(center.len()),
            ConvexSet::Affine(s) => Some(s.a.ncols()),
        }
    }

    pub fn is_free(&self) -> bool {
        matches!(self, ConvexSet::FreeSpace)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ConvexSet::FreeSpace => "free",
            ConvexSet::Box { .. } => "box",
            ConvexSet::Ball { .. } => "ball",
            ConvexSet::Affine(_) => "affine",
        }
    }

    /// Euclidean projection of `v` onto the set.
    pub fn project(&self, v: &Vector) -> Result<Vector> {
        if !all_finite(v.as_slice()) {
            return Err(Error::InvalidInput("cannot project a non-finite point".into()));
        }
        if let Some(n) = self.dimension() {
            if n != v.len() {
                return Err(Error::InvalidInput(format!(
                    "point has dimension {}, set has dimension {n}",
                    v.len()
                )));
            }
        }
        Ok(match self {
            ConvexSet::FreeSpace => v.clone(),
            ConvexSet::Box { lower, upper } => {
                Vector::from_fn(v.len(), |i, _| v[i].max(lower[i]).min(upper[i]))
            }
            ConvexSet::Ball { center, radius } => {
                let offset = v - center;
                let norm = offset.norm();
                if norm <= *radius {
                    v.clone()
                } else {
                    center + offset * (*radius / norm)
                }
            }
            ConvexSet::Affine(s) => s.project(v),
        })
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        match self {
            ConvexSet::FreeSpace => all_finite(x.as_slice()),
            ConvexSet::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper.iter()))
                .all(|(xi, (l, u))| *xi >= l - tol && *xi <= u + tol),
            ConvexSet::Ball { center, radius } => (x - center).norm() <= radius + tol,
            ConvexSet::Affine(s) => s.residual(x).amax() <= tol,
        }
    }

    /// Euclidean diameter; `None` for unbounded sets.
    pub fn diameter(&self) -> Option<f64> {
        match self {
            ConvexSet::Box { lower, upper } => {
                let d = (upper - lower).norm();
                d.is_finite().then_some(d)
            }
            ConvexSet::Ball { radius, .. } => Some(2.0 * radius),
            ConvexSet::FreeSpace | ConvexSet::Affine(_) => None,
        }
    }

    pub fn describe(&self) -> SetDescription {
        match self {
            ConvexSet::FreeSpace => SetDescription::Free,
            ConvexSet::Box { lower, upper } => SetDescription::Box {
                lower: lower.iter().copied().collect(),
                upper: upper.iter().copied().collect(),
            },
            ConvexSet::Ball { center, radius } => SetDescription::Ball {
                center: center.iter().copied().collect(),
                radius: *radius,
            },
            ConvexSet::Affine(s) => SetDescription::Affine {
                a: s.a.row_iter().map(|r| r.iter().copied().collect()).collect(),
                b: s.b.iter().copied().collect(),
            },
        }
    }
}

/// Plain-data form of a [`ConvexSet`], used in config files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SetDescription {
    Free,
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Affine { a: Vec<Vec<f64>>, b: Vec<f64> },
}

impl SetDescription {
    pub fn build(&self) -> Result<ConvexSet> {
        match self {
            SetDescription::Free => Ok(ConvexSet::FreeSpace),
            SetDescription::Box { lower, upper } => {
                ConvexSet::boxed(Vector::from_vec(lower.clone()), Vector::from_vec(upper.clone()))
            }
            SetDescription::Ball { center, radius } => {
                ConvexSet::ball(Vector::from_vec(center.clone()), *radius)
            }
            SetDescription::Affine { a, b } => {
                let rows = a.len();
                let cols = a.first().map_or(0, Vec::len);
                if a.iter().any(|r| r.len() != cols) {
                    return Err(Error::InvalidInput("affine matrix rows differ in length".into()));
                }
                let m = Matrix::from_fn(rows, cols, |i, j| a[i][j]);
                ConvexSet::affine(m, Vector::from_vec(b.clone()))
            }
        }
    }
}

pub(crate) fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}
