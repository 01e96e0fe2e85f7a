//! End-to-end run through the library API: register a patient scan to the
//! template, carry the lesion onto the atlas, tally territories, fuse the
//! modalities, and render the montage.
//!
//! Run with: cargo run --example full_pipeline

use strokemap::phantom::{
    blob_phantom, blob_phantom_moved, default_blobs, label_centroid_world, micro_atlas,
};
use strokemap::volume::Volume3D;
use strokemap::{
    analyze_lesion, apply_transform, fuse, map_territory, render_overlay, resample_rigid,
    save_png, write_nifti, FusionConfig, Interpolation, OverlaySpec, RegistrationConfig, Result,
    RigidTransform, TerritoryLabel,
};

fn main() -> Result<()> {
    let out_dir = std::env::temp_dir().join("strokemap-examples/full_pipeline");
    std::fs::create_dir_all(&out_dir).unwrap();

    // Atlas space: synthetic territories plus a registration template.
    let atlas = micro_atlas(24);
    let atlas_grid = atlas.grid();
    let blobs = default_blobs(24.0);
    let template = blob_phantom(&atlas_grid, &blobs);

    // Patient space: the same anatomy, shifted and tilted. The lesion is
    // drawn in atlas space inside the left-ACA territory, then carried to
    // patient space with the inverse motion, as if outlined on the scan.
    let truth = RigidTransform::new([0.0, 0.0, 0.03], [1.5, -1.0, 0.5]);
    let patient_mri = blob_phantom_moved(&atlas_grid, &blobs, &truth);
    let center = label_centroid_world(&atlas, TerritoryLabel::Acal).unwrap();
    let lesion_atlas = Volume3D::from_world_fn(&atlas_grid, |p| {
        let d2 = (p[0] - center[0]).powi(2)
            + (p[1] - center[1]).powi(2)
            + (p[2] - center[2]).powi(2);
        if d2 <= 6.0 {
            1.0
        } else {
            0.0
        }
    });
    let lesion = apply_transform(&lesion_atlas, &truth.inverse(), &atlas_grid)?;
    let mra = patient_mri.map_values(|v| (v * 1.4).min(1.0));

    // Registration + territory tally in one call.
    let report = analyze_lesion(
        &lesion,
        &patient_mri,
        &atlas,
        &template,
        &RegistrationConfig::default(),
    )?;
    let dominant = report.dominant.expect("lesion lands on the atlas");
    println!(
        "recovered motion: rot {:+.4?} rad, t {:+.2?} mm",
        report.transform_used.rotations, report.transform_used.translations
    );
    println!(
        "{} of {} lesion voxels in {}, vessel {}",
        report.territories[dominant.code() as usize - 1].voxel_count,
        report.total_lesion_voxels,
        dominant.name(),
        map_territory(dominant)
    );

    // Derived artefacts, same as the command-line pipeline writes.
    let fused = fuse(&patient_mri, &mra, &FusionConfig::default())?;
    write_nifti(&fused, out_dir.join("fused.nii.gz"))?;

    let transform = &report.transform_used;
    let mri_on_atlas = resample_rigid(
        &patient_mri,
        transform,
        &atlas_grid,
        Interpolation::Trilinear,
        0.0,
    )?;
    let lesion_on_atlas = apply_transform(&lesion, transform, &atlas_grid)?;
    let spec = OverlaySpec::new(&mri_on_atlas)
        .with_atlas(&atlas)
        .with_lesion(&lesion_on_atlas);
    save_png(&render_overlay(&spec)?, &out_dir.join("overlay.png"))?;

    println!("artefacts in {}", out_dir.display());
    assert_eq!(dominant, TerritoryLabel::Acal);
    Ok(())
}
