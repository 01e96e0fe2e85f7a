//! Map stroke lesions to arterial territories.
//!
//! The crate takes a patient MRI, a lesion mask drawn on it, and a labelled
//! arterial-territory atlas; registers the patient to the atlas's template
//! with a 6-DOF rigid transform; carries the lesion across; and reports which
//! territory — and hence which feeding vessel — the lesion occupies. Around
//! that core sit NIfTI-1 I/O, grid resampling, MRI/MRA fusion, image-quality
//! metrics, and a PNG montage renderer.
//!
//! Everything is driven through the library API; the `strokemap` binary is a
//! thin subcommand wrapper over the same calls. The fastest way in is the
//! examples directory — each one is a small, self-verifying program built on
//! synthetic data, so they run without any input files.
//!
//! ## Directory Structure
//!
//! ```text
//! examples/
//! ├── nifti_roundtrip.rs   # write + re-read a gzipped NIfTI-1 volume
//! ├── reslice_grids.rs     # resample between grids, trilinear vs nearest
//! ├── register_phantom.rs  # recover a known rigid motion
//! ├── territory_report.rs  # lesion -> per-territory overlap JSON
//! ├── fuse_modalities.rs   # MRI/MRA fusion in every mode
//! ├── quality_metrics.rs   # PSNR / SSIM / composite GAN loss
//! ├── render_montage.rs    # multi-slice PNG overlay
//! ├── full_pipeline.rs     # all of the above, end to end
//! └── make_demo_inputs.rs  # synthesize a dataset to feed the CLI
//! ```
//!
//! ## Volumes and geometry
//!
//! - **`nifti_roundtrip`** - Write a synthetic volume to `.nii.gz` with a
//!   custom description, read the header and data back, and check the affine
//!   and voxel values survive.
//!
//! ```bash
//! cargo run -p strokemap --example nifti_roundtrip
//! ```
//!
//! - **`reslice_grids`** - Resample a coarse volume onto a finer grid
//!   covering the same world space, comparing trilinear against
//!   nearest-neighbour interpolation.
//!
//! ```bash
//! cargo run -p strokemap --example reslice_grids
//! ```
//!
//! ## Registration and territory mapping
//!
//! - **`register_phantom`** - Perturb a blob phantom by a known rotation and
//!   translation, then recover the motion with the multi-resolution rigid
//!   registration.
//!
//! ```bash
//! cargo run -p strokemap --example register_phantom
//! ```
//!
//! - **`territory_report`** - Drop a ball lesion into one territory of the
//!   synthetic atlas and print the per-territory overlap report as JSON,
//!   including the dominant territory's feeding vessel.
//!
//! ```bash
//! cargo run -p strokemap --example territory_report
//! ```
//!
//! ## Fusion and metrics
//!
//! - **`fuse_modalities`** - Fuse a tissue-like and a vessel-like volume in
//!   mean, sum, and max mode and write each result to disk.
//!
//! ```bash
//! cargo run -p strokemap --example fuse_modalities
//! ```
//!
//! - **`quality_metrics`** - Score increasingly noisy images with PSNR and
//!   SSIM, then evaluate the composite GAN loss (adversarial + weighted L1 +
//!   weighted perceptual) on toy discriminator outputs.
//!
//! ```bash
//! cargo run -p strokemap --example quality_metrics
//! ```
//!
//! ## Rendering
//!
//! - **`render_montage`** - Render the slices with the most lesion coverage
//!   as a tiled PNG: grayscale base, colour-washed territories, lesion in
//!   pure red.
//!
//! ```bash
//! cargo run -p strokemap --example render_montage
//! ```
//!
//! ## End to end
//!
//! - **`full_pipeline`** - The whole flow through the library API: register
//!   patient to template, carry the lesion onto the atlas, tally territories,
//!   fuse MRI with MRA, and render the montage — the same artefacts the
//!   `strokemap pipeline` subcommand writes.
//!
//! ```bash
//! cargo run -p strokemap --example full_pipeline
//! ```
//!
//! - **`make_demo_inputs`** - Synthesize a complete demo dataset (patient
//!   MRI, lesion mask, MRA, atlas labels, template) as `.nii.gz` files and
//!   print a ready-to-paste `strokemap pipeline` invocation for it.
//!
//! ```bash
//! cargo run -p strokemap --example make_demo_inputs /tmp/demo
//! ```

pub mod affine;
pub mod cli;
pub mod error;
pub mod fusion;
pub mod metrics;
pub mod nifti;
pub mod phantom;
pub mod registration;
pub mod render;
pub mod resample;
pub mod territory;
pub mod transform;
pub mod volume;

pub use affine::Affine;
pub use error::{Error, Result};
pub use fusion::{fuse, FusionConfig, FusionMode};
pub use metrics::{
    adversarial_loss, l1_loss, mean_std, perceptual_loss, pgan_loss, psnr, ssim, LossBreakdown,
    SlicePair,
};
pub use nifti::{read_header, read_nifti, write_nifti, write_nifti_described, NiftiHeader};
pub use render::{render_overlay, save_png, ColorMap, OverlaySpec, SliceSelection};
pub use registration::{
    downsample_by_two, register_rigid, registration_cost, CostFunction, LevelTrace,
    RegistrationConfig, RegistrationResult,
};
pub use resample::{
    apply_transform, resample, resample_rigid, voxel_to_world, world_to_voxel, Interpolation,
};
pub use territory::{
    analyze_lesion, compute_overlap, load_atlas_names, map_territory, AtlasOverlapReport,
    AtlasVolume, TerritoryLabel, TerritoryOverlap, VesselClass,
};
pub use transform::RigidTransform;
pub use volume::{DataType, GridSpec, Volume3D};
