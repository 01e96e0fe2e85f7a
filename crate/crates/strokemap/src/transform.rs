//! Six-parameter rigid-body transforms in world (mm) space.
//!
//! Rotations are intrinsic Euler angles applied as `Rz * Ry * Rx`, and the
//! rotation pivots about a caller-supplied fixed point (in practice the
//! moving volume's bounding-box centroid) so that rotation and translation
//! parameters stay decoupled during optimization:
//!
//! `T(p) = R * (p - center) + center + t`

use crate::affine::Affine;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    /// Rotations about x, y, z in radians.
    #[serde(rename = "rotations_rad")]
    pub rotations: [f64; 3],
    /// Translations along x, y, z in millimetres.
    #[serde(rename = "translations_mm")]
    pub translations: [f64; 3],
}

fn mat_mul(a: [[f64; 3]; 3], b: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn mat_vec(a: [[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        a[0][0] * v[0] + a[0][1] * v[1] + a[0][2] * v[2],
        a[1][0] * v[0] + a[1][1] * v[1] + a[1][2] * v[2],
        a[2][0] * v[0] + a[2][1] * v[1] + a[2][2] * v[2],
    ]
}

fn transpose(a: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    [
        [a[0][0], a[1][0], a[2][0]],
        [a[0][1], a[1][1], a[2][1]],
        [a[0][2], a[1][2], a[2][2]],
    ]
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotations: [0.0; 3],
            translations: [0.0; 3],
        }
    }

    pub fn new(rotations: [f64; 3], translations: [f64; 3]) -> Self {
        RigidTransform {
            rotations,
            translations,
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    /// The 3x3 rotation `Rz(rz) * Ry(ry) * Rx(rx)`.
    pub fn rotation_matrix(&self) -> [[f64; 3]; 3] {
        let [rx, ry, rz] = self.rotations;
        let (sa, ca) = rx.sin_cos();
        let (sb, cb) = ry.sin_cos();
        let (sg, cg) = rz.sin_cos();
        let rot_x = [[1.0, 0.0, 0.0], [0.0, ca, -sa], [0.0, sa, ca]];
        let rot_y = [[cb, 0.0, sb], [0.0, 1.0, 0.0], [-sb, 0.0, cb]];
        let rot_z = [[cg, -sg, 0.0], [sg, cg, 0.0], [0.0, 0.0, 1.0]];
        mat_mul(rot_z, mat_mul(rot_y, rot_x))
    }

    /// World-to-world affine with rotation about `center`:
    /// linear part `R`, translation `t + center - R * center`.
    pub fn to_matrix(&self, center: [f64; 3]) -> Affine {
        let r = self.rotation_matrix();
        let rc = mat_vec(r, center);
        let t = [
            self.translations[0] + center[0] - rc[0],
            self.translations[1] + center[1] - rc[1],
            self.translations[2] + center[2] - rc[2],
        ];
        Affine::from_linear_translation(r, t)
    }

    /// Recover Euler angles from `R = Rz * Ry * Rx`. At gimbal lock
    /// (|cos ry| ~ 0) the x-rotation is folded into z and reported as zero.
    fn euler_from_rotation(r: [[f64; 3]; 3]) -> [f64; 3] {
        let sy = -r[2][0];
        let cy = (r[0][0] * r[0][0] + r[1][0] * r[1][0]).sqrt();
        if cy > 1e-9 {
            [
                r[2][1].atan2(r[2][2]),
                sy.clamp(-1.0, 1.0).asin(),
                r[1][0].atan2(r[0][0]),
            ]
        } else {
            [
                0.0,
                if sy > 0.0 {
                    std::f64::consts::FRAC_PI_2
                } else {
                    -std::f64::consts::FRAC_PI_2
                },
                (-r[0][1]).atan2(r[1][1]),
            ]
        }
    }

    /// Parameters of the inverse map. Because the rotation center cancels,
    /// the inverse has rotation `Rᵀ` and translation `-Rᵀ t` about the same
    /// center.
    pub fn inverse(&self) -> Self {
        let rt = transpose(self.rotation_matrix());
        let t = mat_vec(rt, self.translations);
        RigidTransform {
            rotations: Self::euler_from_rotation(rt),
            translations: [-t[0], -t[1], -t[2]],
        }
    }

    /// Composition about a shared center: apply `self` first, then `after`.
    pub fn then(&self, after: &RigidTransform) -> Self {
        let r1 = self.rotation_matrix();
        let r2 = after.rotation_matrix();
        let t1 = self.translations;
        let r2t1 = mat_vec(r2, t1);
        RigidTransform {
            rotations: Self::euler_from_rotation(mat_mul(r2, r1)),
            translations: [
                r2t1[0] + after.translations[0],
                r2t1[1] + after.translations[1],
                r2t1[2] + after.translations[2],
            ],
        }
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).map_err(Error::io(path))
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Write the folded 4x4 world matrix (see [`RigidTransform::to_matrix`])
    /// as four whitespace-separated text rows.
    pub fn write_matrix_file(&self, center: [f64; 3], path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let rows = self.to_matrix(center).rows();
        let mut text = String::new();
        for row in rows {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.12e}")).collect();
            text.push_str(&line.join(" "));
            text.push('\n');
        }
        std::fs::write(path, text).map_err(Error::io(path))
    }

    /// Parse a 4x4 matrix file written by [`RigidTransform::write_matrix_file`]
    /// (or any whitespace-separated 16-number layout) back into parameters,
    /// given the rotation center it was folded with.
    pub fn read_matrix_file(path: impl AsRef<Path>, center: [f64; 3]) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        let nums: Vec<f64> = text
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| {
                    Error::InvalidParameter(format!("bad number {tok:?} in matrix file"))
                })
            })
            .collect::<Result<_>>()?;
        if nums.len() != 16 {
            return Err(Error::InvalidParameter(format!(
                "matrix file holds {} numbers, expected 16",
                nums.len()
            )));
        }
        let r = [
            [nums[0], nums[1], nums[2]],
            [nums[4], nums[5], nums[6]],
            [nums[8], nums[9], nums[10]],
        ];
        let rotations = Self::euler_from_rotation(r);
        let rc = mat_vec(r, center);
        // t_folded = t + center - R center  =>  t = t_folded - center + R center
        let translations = [
            nums[3] - center[0] + rc[0],
            nums[7] - center[1] + rc[1],
            nums[11] - center[2] + rc[2],
        ];
        Ok(RigidTransform {
            rotations,
            translations,
        })
    }

    /// Largest absolute translation component, in mm.
    pub fn max_abs_translation(&self) -> f64 {
        self.translations.iter().fold(0.0, |m: f64, &t| m.max(t.abs()))
    }

    /// Largest absolute rotation component, in radians.
    pub fn max_abs_rotation(&self) -> f64 {
        self.rotations.iter().fold(0.0, |m: f64, &r| m.max(r.abs()))
    }
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_params_close(a: &RigidTransform, b: &RigidTransform, tol: f64) {
        for i in 0..3 {
            assert!(
                (a.rotations[i] - b.rotations[i]).abs() <= tol,
                "rotations differ: {a:?} vs {b:?}"
            );
            assert!(
                (a.translations[i] - b.translations[i]).abs() <= tol,
                "translations differ: {a:?} vs {b:?}"
            );
        }
    }

    #[test]
    fn identity_maps_to_identity_matrix() {
        let t = RigidTransform::identity();
        assert!(t
            .to_matrix([12.0, -3.0, 40.0])
            .approx_eq(&Affine::identity(), 0.0));
    }

    #[test]
    fn pure_translation_moves_points() {
        let t = RigidTransform::new([0.0; 3], [4.0, -2.0, 3.0]);
        let m = t.to_matrix([50.0, 50.0, 50.0]);
        assert_eq!(m.apply([1.0, 2.0, 3.0]), [5.0, 0.0, 6.0]);
    }

    #[test]
    fn rotation_pivots_about_the_center() {
        let center = [10.0, 20.0, 5.0];
        let t = RigidTransform::new([0.0, 0.0, std::f64::consts::FRAC_PI_2], [0.0; 3]);
        let m = t.to_matrix(center);
        // The center itself is a fixed point.
        let c2 = m.apply(center);
        for i in 0..3 {
            assert!((c2[i] - center[i]).abs() < 1e-12);
        }
        // A point 1mm along +x from the center rotates to 1mm along +y.
        let p = m.apply([11.0, 20.0, 5.0]);
        assert!((p[0] - 10.0).abs() < 1e-12);
        assert!((p[1] - 21.0).abs() < 1e-12);
        assert!((p[2] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn euler_angles_round_trip_through_the_matrix() {
        let cases = [
            [0.3, -0.2, 0.9],
            [-1.2, 0.4, 0.05],
            [0.0, 0.0, -2.9],
            [1.5, -1.4, 1.3],
        ];
        for rot in cases {
            let t = RigidTransform::new(rot, [0.0; 3]);
            let back = RigidTransform::euler_from_rotation(t.rotation_matrix());
            let t2 = RigidTransform::new(back, [0.0; 3]);
            // Compare matrices, not angles: Euler triples are not unique.
            let d = t
                .to_matrix([0.0; 3])
                .max_abs_diff(&t2.to_matrix([0.0; 3]));
            assert!(d < 1e-12, "rotation {rot:?} reconstruction off by {d}");
        }
    }

    #[test]
    fn inverse_composes_to_identity() {
        let t = RigidTransform::new([0.2, -0.1, 0.35], [6.0, -2.5, 1.0]);
        let round = t.then(&t.inverse());
        assert_params_close(&round, &RigidTransform::identity(), 1e-12);
        let round = t.inverse().then(&t);
        assert_params_close(&round, &RigidTransform::identity(), 1e-12);
    }

    #[test]
    fn inverse_matrix_matches_matrix_inverse() {
        let center = [7.0, -4.0, 11.0];
        let t = RigidTransform::new([0.4, 0.1, -0.3], [2.0, 9.0, -5.0]);
        let a = t.to_matrix(center).try_inverse().unwrap();
        let b = t.inverse().to_matrix(center);
        assert!(a.approx_eq(&b, 1e-12), "{:?} vs {:?}", a.rows(), b.rows());
    }

    #[test]
    fn composition_matches_sequential_matrices() {
        let center = [3.0, 3.0, 3.0];
        let t1 = RigidTransform::new([0.1, 0.0, 0.2], [1.0, 2.0, 3.0]);
        let t2 = RigidTransform::new([-0.05, 0.3, 0.0], [-4.0, 0.5, 2.0]);
        let seq = t2.to_matrix(center).mul(&t1.to_matrix(center));
        let composed = t1.then(&t2).to_matrix(center);
        assert!(composed.approx_eq(&seq, 1e-12));
    }

    #[test]
    fn json_round_trip_preserves_field_names_and_values() {
        let t = RigidTransform::new([0.01, 0.02, 0.03], [1.5, -2.5, 3.5]);
        let text = serde_json::to_string(&t).unwrap();
        assert!(text.contains("rotations_rad"));
        assert!(text.contains("translations_mm"));
        let back: RigidTransform = serde_json::from_str(&text).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn matrix_file_round_trips_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("transform.mat");
        let center = [15.5, 15.5, 15.5];
        let t = RigidTransform::new([0.05, -0.1, 0.2], [4.0, -2.0, 3.0]);
        t.write_matrix_file(center, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 4);
        let last = text.lines().last().unwrap();
        let tail: Vec<f64> = last
            .split_whitespace()
            .map(|s| s.parse().unwrap())
            .collect();
        assert_eq!(tail, vec![0.0, 0.0, 0.0, 1.0]);
        let back = RigidTransform::read_matrix_file(&path, center).unwrap();
        assert_params_close(&t, &back, 1e-9);
    }

    #[test]
    fn matrix_file_with_wrong_shape_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.mat");
        std::fs::write(&path, "1 0 0 0\n0 1 0 0\n").unwrap();
        assert!(matches!(
            RigidTransform::read_matrix_file(&path, [0.0; 3]),
            Err(Error::InvalidParameter(_))
        ));
    }
}
