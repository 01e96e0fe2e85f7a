//! Tally a lesion mask against the arterial territory atlas and print the
//! per-territory report as JSON.
//!
//! Run with: cargo run --example territory_report

use strokemap::phantom::{label_centroid_world, micro_atlas};
use strokemap::volume::Volume3D;
use strokemap::{compute_overlap, map_territory, Result, TerritoryLabel};

fn main() -> Result<()> {
    let atlas = micro_atlas(20);

    // A small ball centred in the right-MCA territory; every territory code
    // owns a compact region of the synthetic atlas, so the ball stays inside.
    let center = label_centroid_world(&atlas, TerritoryLabel::Mcar).unwrap();
    let grid = atlas.grid();
    let lesion = Volume3D::from_world_fn(&grid, |p| {
        let d2 = (p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2) + (p[2] - center[2]).powi(2);
        if d2 <= 9.0 {
            1.0
        } else {
            0.0
        }
    });

    let report = compute_overlap(&lesion, &atlas)?;
    println!("{}", serde_json::to_string_pretty(&report).unwrap());

    let dominant = report.dominant.expect("lesion touches the atlas");
    println!(
        "\ndominant territory {} feeds the {} vessel",
        dominant.name(),
        map_territory(dominant)
    );
    assert_eq!(dominant, TerritoryLabel::Mcar);
    Ok(())
}
