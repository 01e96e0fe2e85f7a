//! Write a synthetic volume to a gzipped NIfTI-1 file and read it back.
//!
//! Run with: cargo run --example nifti_roundtrip

use strokemap::affine::Affine;
use strokemap::phantom::{blob_phantom, default_blobs};
use strokemap::volume::GridSpec;
use strokemap::{read_header, read_nifti, write_nifti_described, Result};

fn main() -> Result<()> {
    let out_dir = std::env::temp_dir().join("strokemap-examples/nifti_roundtrip");
    std::fs::create_dir_all(&out_dir).unwrap();

    // A 24-cube phantom on a 2 mm anisotropic grid, offset from the origin.
    let affine = Affine::from_linear_translation(
        [[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.5]],
        [-24.0, -24.0, -30.0],
    );
    let grid = GridSpec::new([24, 24, 24], affine)?;
    let volume = blob_phantom(&grid, &default_blobs(48.0));

    let path = out_dir.join("phantom.nii.gz");
    write_nifti_described(&volume, &path, "synthetic blob phantom")?;
    println!("wrote {}", path.display());

    let header = read_header(&path)?;
    println!(
        "header: dims {:?}, datatype {}, descrip {:?}",
        header.dim, header.datatype, header.descrip_str()
    );

    let back = read_nifti(&path)?;
    let worst = volume
        .data()
        .iter()
        .zip(back.data())
        .map(|(&a, &b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    println!(
        "round-trip: extents {:?}, spacing {:?}, max voxel error {worst:.2e}",
        back.extents(),
        back.spacing()
    );
    assert!(back.affine().max_abs_diff(volume.affine()) < 1e-5);
    Ok(())
}
