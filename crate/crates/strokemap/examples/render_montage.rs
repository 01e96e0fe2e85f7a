//! Render a multi-slice PNG montage: grayscale base, colour-washed
//! territories, lesion in pure red.
//!
//! Run with: cargo run --example render_montage

use strokemap::phantom::{blob_phantom, default_blobs, label_centroid_world, micro_atlas};
use strokemap::volume::Volume3D;
use strokemap::{
    render_overlay, save_png, OverlaySpec, Result, SliceSelection, TerritoryLabel,
};

fn main() -> Result<()> {
    let out_dir = std::env::temp_dir().join("strokemap-examples/render_montage");
    std::fs::create_dir_all(&out_dir).unwrap();

    let atlas = micro_atlas(32);
    let grid = atlas.grid();
    let base = blob_phantom(&grid, &default_blobs(32.0));

    let center = label_centroid_world(&atlas, TerritoryLabel::Pcal).unwrap();
    let lesion = Volume3D::from_world_fn(&grid, |p| {
        let d2 = (p[0] - center[0]).powi(2)
            + (p[1] - center[1]).powi(2)
            + (p[2] - center[2]).powi(2);
        if d2 <= 16.0 {
            1.0
        } else {
            0.0
        }
    });

    // Auto selection picks the slices with the most lesion coverage.
    let spec = OverlaySpec::new(&base)
        .with_atlas(&atlas)
        .with_lesion(&lesion)
        .with_slices(SliceSelection::Auto(6))
        .with_columns(3)
        .with_atlas_alpha(0.3);
    let image = render_overlay(&spec)?;
    let path = out_dir.join("overlay.png");
    save_png(&image, &path)?;

    let red = image
        .pixels()
        .filter(|p| p.0 == [255, 0, 0])
        .count();
    println!(
        "montage {}x{} px, {red} lesion pixels -> {}",
        image.width(),
        image.height(),
        path.display()
    );
    assert!(red > 0);
    Ok(())
}
