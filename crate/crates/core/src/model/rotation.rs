use crate::error::{Error, Result};

/// Orthonormality tolerance for user-supplied matrices.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// An orthonormal `d x d` matrix `U`; observations are `x = U z` for a
/// latent grid point `z`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rotation {
    dim: usize,
    // row-major
    m: Vec<f64>,
}

impl Rotation {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::ShapeMismatch("rotation matrix must be square".into()));
        }
        let r = Rotation {
            dim: d,
            m: rows.into_iter().flatten().collect(),
        };
        let dev = r.orthonormality_error();
        if !(dev <= ORTHONORMAL_TOL) {
            return Err(Error::NotOrthonormal { deviation: dev });
        }
        Ok(r)
    }

    pub fn identity(d: usize) -> Self {
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            m[i * d + i] = 1.0;
        }
        Rotation { dim: d, m }
    }

    /// Plane rotation by `theta` radians in coordinates `(i, j)`.
    pub fn givens(d: usize, i: usize, j: usize, theta: f64) -> Self {
        let mut r = Self::identity(d);
        let (s, c) = theta.sin_cos();
        r.m[i * d + i] = c;
        r.m[j * d + j] = c;
        r.m[i * d + j] = -s;
        r.m[j * d + i] = s;
        r
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.m.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    /// `max |U^T U - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                let dot: f64 = (0..d).map(|k| self.get(k, a) * self.get(k, b)).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// `U z`.
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        self.m
            .chunks(self.dim)
            .map(|row| row.iter().zip(z).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `U^T x`.
    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|j| (0..d).map(|i| self.get(i, j) * x[i]).sum())
            .collect()
    }

    /// `self * other`.
    pub fn compose(&self, other: &Rotation) -> Rotation {
        let d = self.dim;
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                m[i * d + j] = (0..d).map(|k| self.get(i, k) * other.get(k, j)).sum();
            }
        }
        Rotation { dim: d, m }
    }

    pub fn approx_eq(&self, other: &Rotation, tol: f64) -> bool {
        self.dim == other.dim && self.m.iter().zip(&other.m).all(|(a, b)| (a - b).abs() <= tol)
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.approx_eq(&Rotation::identity(self.dim), tol)
    }
}
