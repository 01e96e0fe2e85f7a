//! 4x4 voxel-to-world affine maps.
//!
//! The bottom row is always `[0, 0, 0, 1]`: these are affine maps of 3-space,
//! never projective ones, so the inverse can be computed from the upper 3x3
//! block alone (adjugate over determinant) plus the translation column.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    m: [[f64; 4]; 4],
}

impl Affine {
    pub fn identity() -> Self {
        Self::scaling(1.0, 1.0, 1.0)
    }

    /// Diagonal scaling map (voxel index -> world mm with the given spacing).
    pub fn scaling(sx: f64, sy: f64, sz: f64) -> Self {
        Affine {
            m: [
                [sx, 0.0, 0.0, 0.0],
                [0.0, sy, 0.0, 0.0],
                [0.0, 0.0, sz, 0.0],
                [0.0, 0.0, 0.0, 1.0],
            ],
        }
    }

    pub fn translation(t: [f64; 3]) -> Self {
        let mut a = Self::identity();
        a.m[0][3] = t[0];
        a.m[1][3] = t[1];
        a.m[2][3] = t[2];
        a
    }

    /// Build from the three upper rows; the projective row is implied.
    pub fn from_rows(rx: [f64; 4], ry: [f64; 4], rz: [f64; 4]) -> Self {
        Affine {
            m: [rx, ry, rz, [0.0, 0.0, 0.0, 1.0]],
        }
    }

    /// Build from a 3x3 linear part and a translation column.
    pub fn from_linear_translation(lin: [[f64; 3]; 3], t: [f64; 3]) -> Self {
        Self::from_rows(
            [lin[0][0], lin[0][1], lin[0][2], t[0]],
            [lin[1][0], lin[1][1], lin[1][2], t[1]],
            [lin[2][0], lin[2][1], lin[2][2], t[2]],
        )
    }

    pub fn rows(&self) -> [[f64; 4]; 4] {
        self.m
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.m[row][col]
    }

    pub fn translation_part(&self) -> [f64; 3] {
        [self.m[0][3], self.m[1][3], self.m[2][3]]
    }

    pub fn linear_part(&self) -> [[f64; 3]; 3] {
        let m = &self.m;
        [
            [m[0][0], m[0][1], m[0][2]],
            [m[1][0], m[1][1], m[1][2]],
            [m[2][0], m[2][1], m[2][2]],
        ]
    }

    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let m = &self.m;
        [
            m[0][0] * p[0] + m[0][1] * p[1] + m[0][2] * p[2] + m[0][3],
            m[1][0] * p[0] + m[1][1] * p[1] + m[1][2] * p[2] + m[1][3],
            m[2][0] * p[0] + m[2][1] * p[1] + m[2][2] * p[2] + m[2][3],
        ]
    }

    /// Composition: `(self.mul(other)).apply(p) == self.apply(other.apply(p))`.
    pub fn mul(&self, other: &Affine) -> Affine {
        let mut out = [[0.0; 4]; 4];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..4).map(|k| self.m[i][k] * other.m[k][j]).sum();
            }
        }
        out[3] = [0.0, 0.0, 0.0, 1.0];
        Affine { m: out }
    }

    /// Determinant of the upper-left 3x3 block.
    pub fn det3(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Inverse via the 3x3 adjugate. `[A | t]⁻¹ = [A⁻¹ | -A⁻¹ t]`.
    pub fn try_inverse(&self) -> Result<Affine> {
        let det = self.det3();
        if !det.is_finite() || det.abs() < 1e-12 {
            return Err(Error::SingularAffine);
        }
        let m = &self.m;
        let adj = [
            [
                m[1][1] * m[2][2] - m[1][2] * m[2][1],
                m[0][2] * m[2][1] - m[0][1] * m[2][2],
                m[0][1] * m[1][2] - m[0][2] * m[1][1],
            ],
            [
                m[1][2] * m[2][0] - m[1][0] * m[2][2],
                m[0][0] * m[2][2] - m[0][2] * m[2][0],
                m[0][2] * m[1][0] - m[0][0] * m[1][2],
            ],
            [
                m[1][0] * m[2][1] - m[1][1] * m[2][0],
                m[0][1] * m[2][0] - m[0][0] * m[2][1],
                m[0][0] * m[1][1] - m[0][1] * m[1][0],
            ],
        ];
        let mut inv = [[0.0; 3]; 3];
        for (i, row) in inv.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = adj[i][j] / det;
            }
        }
        let t = self.translation_part();
        let neg_inv_t = [
            -(inv[0][0] * t[0] + inv[0][1] * t[1] + inv[0][2] * t[2]),
            -(inv[1][0] * t[0] + inv[1][1] * t[1] + inv[1][2] * t[2]),
            -(inv[2][0] * t[0] + inv[2][1] * t[1] + inv[2][2] * t[2]),
        ];
        Ok(Affine::from_linear_translation(inv, neg_inv_t))
    }

    /// Euclidean norms of the three linear columns (the voxel spacing implied
    /// by a voxel-to-world map).
    pub fn column_norms(&self) -> [f64; 3] {
        let m = &self.m;
        let norm = |j: usize| (m[0][j] * m[0][j] + m[1][j] * m[1][j] + m[2][j] * m[2][j]).sqrt();
        [norm(0), norm(1), norm(2)]
    }

    pub fn max_abs_diff(&self, other: &Affine) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((self.m[i][j] - other.m[i][j]).abs());
            }
        }
        worst
    }

    pub fn approx_eq(&self, other: &Affine, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }
}
