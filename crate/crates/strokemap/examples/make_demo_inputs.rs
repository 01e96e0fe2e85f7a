//! Synthesize a complete demo dataset for the command-line tool: patient MRI,
//! lesion mask, MRA, atlas labels, and registration template.
//!
//! Run with: cargo run --example make_demo_inputs [out_dir]

use strokemap::phantom::{
    blob_phantom, blob_phantom_moved, default_blobs, label_centroid_world, micro_atlas,
};
use strokemap::volume::Volume3D;
use strokemap::{apply_transform, write_nifti, Result, RigidTransform, TerritoryLabel};

fn main() -> Result<()> {
    let out_dir = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("strokemap-examples/demo_inputs"));
    std::fs::create_dir_all(&out_dir).unwrap();

    let atlas = micro_atlas(24);
    let grid = atlas.grid();
    let blobs = default_blobs(24.0);
    let template = blob_phantom(&grid, &blobs);

    // The patient sits a little tilted and shifted relative to the template.
    let truth = RigidTransform::new([0.0, 0.0, 0.03], [1.5, -1.0, 0.5]);
    let patient = blob_phantom_moved(&grid, &blobs, &truth);
    let mra = patient.map_values(|v| (v * 1.4).min(1.0));

    // Lesion: a ball inside the left-ACA territory, drawn in atlas space and
    // carried to patient space with the inverse motion.
    let center = label_centroid_world(&atlas, TerritoryLabel::Acal).unwrap();
    let lesion_atlas = Volume3D::from_world_fn(&grid, |p| {
        let d2 = (p[0] - center[0]).powi(2)
            + (p[1] - center[1]).powi(2)
            + (p[2] - center[2]).powi(2);
        if d2 <= 6.0 {
            1.0
        } else {
            0.0
        }
    });
    let lesion = apply_transform(&lesion_atlas, &truth.inverse(), &grid)?;

    for (name, v) in [
        ("patient_mri.nii.gz", &patient),
        ("lesion_mask.nii.gz", &lesion),
        ("mra.nii.gz", &mra),
        ("atlas_labels.nii.gz", atlas.labels()),
        ("template.nii.gz", &template),
    ] {
        write_nifti(v, out_dir.join(name))?;
        println!("wrote {}", out_dir.join(name).display());
    }

    println!("\ntry it:");
    println!(
        "  strokemap pipeline --fixed {d}/patient_mri.nii.gz --lesion {d}/lesion_mask.nii.gz \\",
        d = out_dir.display()
    );
    println!(
        "    --atlas {d}/atlas_labels.nii.gz --template {d}/template.nii.gz --mra {d}/mra.nii.gz \\",
        d = out_dir.display()
    );
    println!("    --out-dir {d}/out", d = out_dir.display());
    Ok(())
}
