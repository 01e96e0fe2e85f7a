//! Pixel-wise fusion of two co-registered volumes in every supported mode.
//!
//! Run with: cargo run --example fuse_modalities

use strokemap::affine::Affine;
use strokemap::volume::{GridSpec, Volume3D};
use strokemap::{fuse, write_nifti_described, FusionConfig, FusionMode, Result};

fn main() -> Result<()> {
    let out_dir = std::env::temp_dir().join("strokemap-examples/fuse_modalities");
    std::fs::create_dir_all(&out_dir).unwrap();

    let grid = GridSpec::new([24, 24, 24], Affine::scaling(1.0, 1.0, 1.0))?;
    // Tissue-like field and a vessel-like field: a soft gradient and a
    // bright tube, so the modes disagree visibly.
    let mri = Volume3D::from_voxel_fn(&grid, |x, y, z| (x + y + z) as f64 / 69.0);
    let mra = Volume3D::from_world_fn(&grid, |p| {
        let d2 = (p[0] - 12.0).powi(2) + (p[1] - 12.0).powi(2);
        if d2 < 4.0 {
            1.0
        } else {
            0.05
        }
    });

    for mode in FusionMode::ALL {
        let fused = fuse(
            &mri,
            &mra,
            &FusionConfig {
                mode,
                ..FusionConfig::default()
            },
        )?;
        let (lo, hi) = fused
            .data()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let path = out_dir.join(format!("fused_{mode}.nii.gz"));
        write_nifti_described(&fused, &path, &format!("fusion mode={mode}"))?;
        println!("{mode:>4}: range [{lo:.3}, {hi:.3}] -> {}", path.display());
    }
    Ok(())
}
