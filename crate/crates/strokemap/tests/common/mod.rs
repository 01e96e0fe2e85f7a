//! Fixture builders and process helpers shared by the binary-level tests.
#![allow(dead_code)] // each test binary uses a different subset

use std::path::{Path, PathBuf};
use std::process::Command;
use strokemap::affine::Affine;
use strokemap::phantom::{blob_phantom, blob_phantom_moved, default_blobs, micro_atlas};
use strokemap::territory::{AtlasVolume, TerritoryLabel};
use strokemap::volume::{GridSpec, Volume3D};
use strokemap::{write_nifti, RigidTransform};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_strokemap"))
}

/// Run the binary, returning (exit code, stdout, stderr).
pub fn run(cmd: &mut Command) -> (i32, String, String) {
    let output = cmd.output().expect("failed to spawn the strokemap binary");
    (
        output.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&output.stdout).into_owned(),
        String::from_utf8_lossy(&output.stderr).into_owned(),
    )
}

pub fn last_line(stdout: &str) -> &str {
    stdout.lines().last().unwrap_or("")
}

pub fn unit_grid(n: usize) -> GridSpec {
    GridSpec::new([n, n, n], Affine::identity()).unwrap()
}

pub fn write(dir: &Path, name: &str, v: &Volume3D) -> PathBuf {
    let path = dir.join(name);
    write_nifti(v, &path).unwrap();
    path
}

/// A binary mask covering every voxel of `label` within `radius` of the
/// label's centroid — guaranteed to sit entirely inside that territory.
pub fn lesion_inside(atlas: &AtlasVolume, label: TerritoryLabel, radius: f64) -> Volume3D {
    let centroid = strokemap::phantom::label_centroid_world(atlas, label)
        .expect("label missing from the atlas");
    let labels = atlas.labels();
    let affine = *labels.affine();
    Volume3D::from_voxel_fn(&atlas.grid(), |x, y, z| {
        let code = labels.at(x, y, z).round() as u8;
        let p = affine.apply([x as f64, y as f64, z as f64]);
        let d2 = (0..3).map(|i| (p[i] - centroid[i]).powi(2)).sum::<f64>();
        f64::from(code == label.code() && d2 <= radius * radius)
    })
}

/// Paths for one synthetic patient case written into `dir`.
pub struct Case {
    pub atlas: PathBuf,
    pub template: PathBuf,
    pub patient: PathBuf,
    pub lesion: PathBuf,
}

/// A patient already in atlas space (identity truth transform) with a lesion
/// inside `label`.
pub fn aligned_case(dir: &Path, n: usize, label: TerritoryLabel) -> Case {
    let atlas = micro_atlas(n);
    let grid = unit_grid(n);
    let template = blob_phantom(&grid, &default_blobs(n as f64));
    let lesion = lesion_inside(&atlas, label, n as f64 * 0.16);
    Case {
        atlas: write(dir, "atlas.nii.gz", atlas.labels()),
        template: write(dir, "template.nii.gz", &template),
        patient: write(dir, "patient.nii.gz", &template),
        lesion: write(dir, "lesion.nii.gz", &lesion),
    }
}

/// A patient moved off the template by a known rigid transform; the lesion
/// is drawn inside `label` in atlas space and carried into patient space
/// through the inverse truth transform.
pub fn shifted_case(dir: &Path, n: usize, label: TerritoryLabel, truth: RigidTransform) -> Case {
    let atlas = micro_atlas(n);
    let grid = unit_grid(n);
    let template = blob_phantom(&grid, &default_blobs(n as f64));
    let patient = blob_phantom_moved(&grid, &default_blobs(n as f64), &truth);
    let lesion_atlas = lesion_inside(&atlas, label, n as f64 * 0.16);
    let lesion_native =
        strokemap::apply_transform(&lesion_atlas, &truth.inverse(), &grid).unwrap();
    Case {
        atlas: write(dir, "atlas.nii.gz", atlas.labels()),
        template: write(dir, "template.nii.gz", &template),
        patient: write(dir, "patient.nii.gz", &patient),
        lesion: write(dir, "lesion.nii.gz", &lesion_native),
    }
}
