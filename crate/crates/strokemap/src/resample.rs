//! Pull-style resampling of volumes onto target grids.
//!
//! Every resample walks the *target* grid and pulls values from the source
//! through a composed target-voxel -> source-voxel affine, so no holes can
//! appear. Source coordinates within 1e-9 of an integer lattice point are
//! snapped to it, which makes resampling a volume onto its own grid an exact
//! copy instead of a float-fuzzed one.

use crate::affine::Affine;
use crate::transform::RigidTransform;
use crate::volume::{GridSpec, Volume3D};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    NearestNeighbor,
    Trilinear,
}

/// World point -> continuous voxel coordinates of `v`.
pub fn world_to_voxel(v: &Volume3D, p: [f64; 3]) -> Result<[f64; 3]> {
    Ok(v.affine().try_inverse()?.apply(p))
}

/// Voxel coordinates (possibly fractional) -> world point.
pub fn voxel_to_world(v: &Volume3D, c: [f64; 3]) -> [f64; 3] {
    v.affine().apply(c)
}

fn snap(c: f64) -> f64 {
    let r = c.round();
    if (c - r).abs() <= 1e-9 {
        r
    } else {
        c
    }
}

/// Interpolation support along one axis: indices straddling `c` and the
/// fractional weight, or `None` when `c` lies outside `[0, n-1]`.
fn axis_support(c: f64, n: usize) -> Option<(usize, usize, f64)> {
    if c < 0.0 || c > (n - 1) as f64 {
        return None;
    }
    if n == 1 {
        return Some((0, 0, 0.0));
    }
    let i0 = (c.floor() as usize).min(n - 2);
    Some((i0, i0 + 1, c - i0 as f64))
}

fn sample(src: &Volume3D, c: [f64; 3], interp: Interpolation, fill: f64) -> f64 {
    let [nx, ny, nz] = src.extents();
    let c = [snap(c[0]), snap(c[1]), snap(c[2])];
    match interp {
        Interpolation::NearestNeighbor => {
            let r = [c[0].round(), c[1].round(), c[2].round()];
            if r[0] < 0.0
                || r[1] < 0.0
                || r[2] < 0.0
                || r[0] > (nx - 1) as f64
                || r[1] > (ny - 1) as f64
                || r[2] > (nz - 1) as f64
            {
                fill
            } else {
                src.at(r[0] as usize, r[1] as usize, r[2] as usize)
            }
        }
        Interpolation::Trilinear => {
            let (v, inside) = sample_trilinear_flag(src, c);
            if inside {
                v
            } else {
                fill
            }
        }
    }
}

/// Trilinear sample with an explicit in-bounds flag (value is 0 outside).
/// Registration cost functions need the flag to build their overlap domain.
pub(crate) fn sample_trilinear_flag(src: &Volume3D, c: [f64; 3]) -> (f64, bool) {
    let [nx, ny, nz] = src.extents();
    let c = [snap(c[0]), snap(c[1]), snap(c[2])];
    let (Some((x0, x1, tx)), Some((y0, y1, ty)), Some((z0, z1, tz))) = (
        axis_support(c[0], nx),
        axis_support(c[1], ny),
        axis_support(c[2], nz),
    ) else {
        return (0.0, false);
    };
    let f = |x: usize, y: usize, z: usize| src.at(x, y, z);
    let (ux, uy, uz) = (1.0 - tx, 1.0 - ty, 1.0 - tz);
    let v = ux * uy * uz * f(x0, y0, z0)
        + tx * uy * uz * f(x1, y0, z0)
        + ux * ty * uz * f(x0, y1, z0)
        + tx * ty * uz * f(x1, y1, z0)
        + ux * uy * tz * f(x0, y0, z1)
        + tx * uy * tz * f(x1, y0, z1)
        + ux * ty * tz * f(x0, y1, z1)
        + tx * ty * tz * f(x1, y1, z1);
    (v, true)
}

/// Walk `target`, pulling source values through `vox_map`
/// (target voxel -> source voxel).
pub(crate) fn resample_by_voxel_map(
    src: &Volume3D,
    target: &GridSpec,
    vox_map: &Affine,
    interp: Interpolation,
    fill: f64,
) -> Volume3D {
    Volume3D::from_voxel_fn(target, |x, y, z| {
        let c = vox_map.apply([x as f64, y as f64, z as f64]);
        sample(src, c, interp, fill)
    })
}

/// Resample `src` onto `target` with no geometric change: the two grids are
/// simply different samplings of the same world space.
pub fn resample(
    src: &Volume3D,
    target: &GridSpec,
    interp: Interpolation,
    fill: f64,
) -> Result<Volume3D> {
    let vox_map = src.affine().try_inverse()?.mul(&target.affine);
    Ok(resample_by_voxel_map(src, target, &vox_map, interp, fill))
}

/// Resample `src` onto `target` through a rigid world transform `t`
/// (moving world -> fixed world, pivoting about `src`'s bbox centroid).
pub fn resample_rigid(
    src: &Volume3D,
    t: &RigidTransform,
    target: &GridSpec,
    interp: Interpolation,
    fill: f64,
) -> Result<Volume3D> {
    let world = t.to_matrix(src.world_center());
    let vox_map = src
        .affine()
        .try_inverse()?
        .mul(&world.try_inverse()?)
        .mul(&target.affine);
    Ok(resample_by_voxel_map(src, target, &vox_map, interp, fill))
}

/// Carry a binary mask through a rigid transform: nearest-neighbour sampling
/// (no invented labels), zero fill, re-binarized at 0.5.
pub fn apply_transform(
    mask: &Volume3D,
    t: &RigidTransform,
    target: &GridSpec,
) -> Result<Volume3D> {
    let moved = resample_rigid(mask, t, target, Interpolation::NearestNeighbor, 0.0)?;
    Ok(moved.map_values(|v| if v > 0.5 { 1.0 } else { 0.0 }))
}
