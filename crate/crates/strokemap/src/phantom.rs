//! Deterministic synthetic volumes for tests, examples, and demos.
//!
//! Everything here is an analytic function of world position, so a phantom
//! can be sampled on any grid — or through any rigid transform — without
//! interpolation error. That makes these the ground-truth generators for
//! registration and territory-mapping checks.

use crate::affine::Affine;
use crate::territory::{AtlasVolume, TerritoryLabel};
use crate::transform::RigidTransform;
use crate::volume::{GridSpec, Volume3D};

/// An isotropic Gaussian bump in world space.
#[derive(Debug, Clone, Copy)]
pub struct GaussianBlob {
    pub center: [f64; 3],
    pub sigma: f64,
    pub amplitude: f64,
}

impl GaussianBlob {
    pub fn value_at(&self, p: [f64; 3]) -> f64 {
        let d2 = (p[0] - self.center[0]).powi(2)
            + (p[1] - self.center[1]).powi(2)
            + (p[2] - self.center[2]).powi(2);
        self.amplitude * (-d2 / (2.0 * self.sigma * self.sigma)).exp()
    }
}

/// Sum of blob intensities at a world point.
pub fn blob_value(blobs: &[GaussianBlob], p: [f64; 3]) -> f64 {
    blobs.iter().map(|b| b.value_at(p)).sum()
}

/// Sample a blob mixture on a grid.
pub fn blob_phantom(grid: &GridSpec, blobs: &[GaussianBlob]) -> Volume3D {
    Volume3D::from_world_fn(grid, |p| blob_value(blobs, p))
}

/// Sample the mixture as seen through a world map: voxel u gets
/// `value(map(world(u)))`. Registering this volume back onto the plain
/// phantom recovers the map's rigid parameters — analytically, with no
/// resampling error in the ground truth.
pub fn blob_phantom_through(grid: &GridSpec, blobs: &[GaussianBlob], map: &Affine) -> Volume3D {
    Volume3D::from_world_fn(grid, |p| blob_value(blobs, map.apply(p)))
}

/// Convenience wrapper: the phantom as seen by a patient whose anatomy sits
/// at `t` relative to the reference, pivoting about the grid's centroid.
pub fn blob_phantom_moved(
    grid: &GridSpec,
    blobs: &[GaussianBlob],
    t: &RigidTransform,
) -> Volume3D {
    blob_phantom_through(grid, blobs, &t.to_matrix(grid.center_world()))
}

/// Five asymmetric blobs filling a cube of side `extent_mm` anchored at the
/// world origin. Deliberately without any rotational symmetry, so rigid
/// registration against it has a unique optimum.
pub fn default_blobs(extent_mm: f64) -> Vec<GaussianBlob> {
    let s = extent_mm;
    vec![
        GaussianBlob {
            center: [0.30 * s, 0.40 * s, 0.45 * s],
            sigma: 0.12 * s,
            amplitude: 1.0,
        },
        GaussianBlob {
            center: [0.65 * s, 0.55 * s, 0.40 * s],
            sigma: 0.15 * s,
            amplitude: 0.8,
        },
        GaussianBlob {
            center: [0.50 * s, 0.70 * s, 0.60 * s],
            sigma: 0.10 * s,
            amplitude: 1.2,
        },
        GaussianBlob {
            center: [0.40 * s, 0.60 * s, 0.75 * s],
            sigma: 0.18 * s,
            amplitude: 0.6,
        },
        GaussianBlob {
            center: [0.70 * s, 0.30 * s, 0.70 * s],
            sigma: 0.13 * s,
            amplitude: 0.9,
        },
    ]
}

/// A miniature ten-territory atlas on an `n`-cubed unit-spacing grid.
///
/// An ellipsoidal "brain" is carved into left/right halves (right is low x
/// here — a grid convention, not a radiological claim) and front-to-back
/// bands: an anterior band (ACA), a middle band (MCA), and a posterior band
/// split into an upper PCA part and a lower vertebrobasilar part, plus a
/// central ventricle box overriding the bands. With `n >= 16`, every label
/// gets at least one voxel. Codes follow the canonical numbering.
pub fn micro_atlas(n: usize) -> AtlasVolume {
    let grid = GridSpec::new([n, n, n], Affine::identity()).expect("positive extents");
    let nf = n as f64;
    let labels = Volume3D::from_voxel_fn(&grid, |x, y, z| {
        let u = (x as f64 + 0.5) / nf;
        let v = (y as f64 + 0.5) / nf;
        let w = (z as f64 + 0.5) / nf;
        let r2 = ((u - 0.5) / 0.45).powi(2) + ((v - 0.5) / 0.45).powi(2)
            + ((w - 0.5) / 0.45).powi(2);
        if r2 > 1.0 {
            return 0.0;
        }
        let right = u < 0.5;
        let label = if (u - 0.5).abs() <= 0.12 && (v - 0.5).abs() <= 0.12 && (w - 0.5).abs() <= 0.12
        {
            if right {
                TerritoryLabel::Lvr
            } else {
                TerritoryLabel::Lvl
            }
        } else if v < 0.35 && w < 0.3 {
            if right {
                TerritoryLabel::Vbr
            } else {
                TerritoryLabel::Vbl
            }
        } else if v >= 0.65 {
            if right {
                TerritoryLabel::Acar
            } else {
                TerritoryLabel::Acal
            }
        } else if v < 0.35 {
            if right {
                TerritoryLabel::Pcar
            } else {
                TerritoryLabel::Pcal
            }
        } else if right {
            TerritoryLabel::Mcar
        } else {
            TerritoryLabel::Mcal
        };
        f64::from(label.code())
    });
    AtlasVolume::with_default_names(labels).expect("generated labels are valid")
}

/// World centroid of one territory's voxels (None if the label is absent).
pub fn label_centroid_world(atlas: &AtlasVolume, label: TerritoryLabel) -> Option<[f64; 3]> {
    let labels = atlas.labels();
    let [nx, ny, nz] = labels.extents();
    let mut sum = [0.0f64; 3];
    let mut count = 0usize;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if atlas.territory_of(labels.at(x, y, z)) == Some(label) {
                    sum[0] += x as f64;
                    sum[1] += y as f64;
                    sum[2] += z as f64;
                    count += 1;
                }
            }
        }
    }
    if count == 0 {
        return None;
    }
    let c = count as f64;
    Some(
        labels
            .affine()
            .apply([sum[0] / c, sum[1] / c, sum[2] / c]),
    )
}

/// Binary ball mask around a world point.
pub fn ball_mask(grid: &GridSpec, center_world: [f64; 3], radius_mm: f64) -> Volume3D {
    Volume3D::from_world_fn(grid, |p| {
        let d2 = (p[0] - center_world[0]).powi(2)
            + (p[1] - center_world[1]).powi(2)
            + (p[2] - center_world[2]).powi(2);
        if d2 <= radius_mm * radius_mm {
            1.0
        } else {
            0.0
        }
    })
}
