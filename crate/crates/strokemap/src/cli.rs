//! Command-line front end: `register`, `analyze`, `fuse`, `metrics`,
//! `render`, and the end-to-end `pipeline`, sharing one flag vocabulary.
//!
//! Every option can also come from a TOML config file (`--config`); explicit
//! flags win over file values. Progress and diagnostics go to standard
//! error; files land in `--out-dir`; the machine-readable result is the
//! final line on standard output.
//!
//! Exit codes: 0 success, 2 input/format error, 3 registration degeneracy,
//! 4 empty lesion, 1 unexpected internal error.

use crate::fusion::{fuse, FusionConfig, FusionMode};
use crate::metrics::{mean_std, pgan_loss, LossBreakdown, SlicePair};
use crate::nifti::{read_nifti, write_nifti_described};
use crate::registration::{register_rigid, CostFunction, RegistrationConfig, RegistrationResult};
use crate::render::{render_overlay, save_png, OverlaySpec, SliceSelection};
use crate::resample::{apply_transform, resample, resample_rigid, Interpolation};
use crate::territory::{
    compute_overlap, default_names, load_atlas_names, AtlasOverlapReport, AtlasVolume, GRID_TOL,
};
use crate::volume::GridSpec;
use crate::{Error, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "strokemap",
    version,
    about = "Map stroke lesions to arterial territories: rigid registration, \
             atlas overlap reports, image fusion, quality metrics, overlays"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the 6-DOF rigid transform aligning --moving to --fixed
    Register(RegisterArgs),
    /// Register a patient MRI to the atlas template and tally lesion overlap
    Analyze(AnalyzeArgs),
    /// Fuse two co-registered volumes pixel-wise
    Fuse(FuseArgs),
    /// Score a test volume against a reference slice-by-slice
    Metrics(MetricsArgs),
    /// Draw a multi-slice overlay montage PNG
    Render(RenderArgs),
    /// Register, analyze, optionally fuse, and render in one run
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct RegisterArgs {
    /// Reference volume the moving volume is aligned to
    #[arg(long)]
    fixed: Option<PathBuf>,
    /// Volume being aligned
    #[arg(long)]
    moving: Option<PathBuf>,
    /// Cost function: normalized-correlation (default) or mean-squares
    #[arg(long)]
    cost: Option<String>,
    /// Pyramid depth (default 3; reduced automatically on small volumes)
    #[arg(long)]
    levels: Option<usize>,
    /// Output directory (default .)
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// TOML config file supplying defaults for any option
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Patient MRI (native space)
    #[arg(long)]
    fixed: Option<PathBuf>,
    /// Binary lesion mask on the MRI grid
    #[arg(long)]
    lesion: Option<PathBuf>,
    /// Territory label volume (codes 0-10)
    #[arg(long)]
    atlas: Option<PathBuf>,
    /// Optional JSON sidecar remapping label codes to territory names
    #[arg(long)]
    atlas_names: Option<PathBuf>,
    /// Registration template on the atlas grid
    #[arg(long)]
    template: Option<PathBuf>,
    /// Cost function: normalized-correlation (default) or mean-squares
    #[arg(long)]
    cost: Option<String>,
    /// Pyramid depth (default 3; reduced automatically on small volumes)
    #[arg(long)]
    levels: Option<usize>,
    /// Output directory (default .)
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// TOML config file supplying defaults for any option
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct FuseArgs {
    /// First input (typically the MRI)
    #[arg(long)]
    fixed: Option<PathBuf>,
    /// Second input (typically the MRA), already on the same grid
    #[arg(long)]
    mra: Option<PathBuf>,
    /// Fusion mode: mean (default), sum, or max
    #[arg(long)]
    mode: Option<String>,
    /// Output directory (default .)
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// TOML config file supplying defaults for any option
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    /// Reference volume
    #[arg(long)]
    fixed: Option<PathBuf>,
    /// Test volume scored against the reference
    #[arg(long)]
    moving: Option<PathBuf>,
    /// Peak intensity / dynamic range L (default 1.0)
    #[arg(long)]
    peak: Option<f64>,
    /// JSON array of discriminator scores on real slices (GAN loss path)
    #[arg(long)]
    d_real: Option<PathBuf>,
    /// JSON array of discriminator scores on synthesized slices
    #[arg(long)]
    d_fake: Option<PathBuf>,
    /// JSON array: feature embedding of the reference
    #[arg(long)]
    feat_ref: Option<PathBuf>,
    /// JSON array: feature embedding of the test volume
    #[arg(long)]
    feat_test: Option<PathBuf>,
    /// L1 weight (required with the GAN loss inputs)
    #[arg(long)]
    lambda_l1: Option<f64>,
    /// Perceptual weight (required with the GAN loss inputs)
    #[arg(long)]
    lambda_perc: Option<f64>,
    /// Output directory (default .)
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// TOML config file supplying defaults for any option
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    /// Grayscale base volume
    #[arg(long)]
    fixed: Option<PathBuf>,
    /// Optional territory label volume on the base grid
    #[arg(long)]
    atlas: Option<PathBuf>,
    /// Optional JSON sidecar remapping label codes to territory names
    #[arg(long)]
    atlas_names: Option<PathBuf>,
    /// Optional binary lesion mask on the base grid
    #[arg(long)]
    lesion: Option<PathBuf>,
    /// "auto" (6 largest-lesion slices) or comma-separated z indices
    #[arg(long)]
    slices: Option<String>,
    /// Montage grid width in tiles (default 3)
    #[arg(long)]
    columns: Option<usize>,
    /// Atlas blend weight in [0, 1] (default 0.35)
    #[arg(long)]
    atlas_alpha: Option<f64>,
    /// Output directory (default .)
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// TOML config file supplying defaults for any option
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Patient MRI (native space)
    #[arg(long)]
    fixed: Option<PathBuf>,
    /// Binary lesion mask on the MRI grid
    #[arg(long)]
    lesion: Option<PathBuf>,
    /// Territory label volume (codes 0-10)
    #[arg(long)]
    atlas: Option<PathBuf>,
    /// Optional JSON sidecar remapping label codes to territory names
    #[arg(long)]
    atlas_names: Option<PathBuf>,
    /// Registration template on the atlas grid
    #[arg(long)]
    template: Option<PathBuf>,
    /// Optional MRA; enables the fusion stage
    #[arg(long)]
    mra: Option<PathBuf>,
    /// Fusion mode: mean (default), sum, or max
    #[arg(long)]
    mode: Option<String>,
    /// Cost function: normalized-correlation (default) or mean-squares
    #[arg(long)]
    cost: Option<String>,
    /// Pyramid depth (default 3; reduced automatically on small volumes)
    #[arg(long)]
    levels: Option<usize>,
    /// "auto" (6 largest-lesion slices) or comma-separated z indices
    #[arg(long)]
    slices: Option<String>,
    /// Montage grid width in tiles (default 3)
    #[arg(long)]
    columns: Option<usize>,
    /// Atlas blend weight in [0, 1] (default 0.35)
    #[arg(long)]
    atlas_alpha: Option<f64>,
    /// Output directory (default .)
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// TOML config file supplying defaults for any option
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Union of every option a config file may supply; unknown keys are errors.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    fixed: Option<PathBuf>,
    moving: Option<PathBuf>,
    lesion: Option<PathBuf>,
    atlas: Option<PathBuf>,
    atlas_names: Option<PathBuf>,
    template: Option<PathBuf>,
    mra: Option<PathBuf>,
    mode: Option<String>,
    cost: Option<String>,
    levels: Option<usize>,
    lambda_l1: Option<f64>,
    lambda_perc: Option<f64>,
    peak: Option<f64>,
    out_dir: Option<PathBuf>,
    slices: Option<String>,
    columns: Option<usize>,
    atlas_alpha: Option<f64>,
    d_real: Option<PathBuf>,
    d_fake: Option<PathBuf>,
    feat_ref: Option<PathBuf>,
    feat_test: Option<PathBuf>,
}

fn load_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    toml::from_str(&text).map_err(|e| {
        Error::InvalidParameter(format!("config file {}: {e}", path.display()))
    })
}

fn need<T>(flag: Option<T>, file: Option<T>, name: &str) -> Result<T> {
    flag.or(file).ok_or_else(|| {
        Error::InvalidParameter(format!(
            "missing required option --{name} (set it as a flag or in the config file)"
        ))
    })
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn out_dir_of(flag: Option<PathBuf>, file: Option<PathBuf>) -> Result<PathBuf> {
    let dir = pick(flag, file, PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(Error::io(&dir))?;
    Ok(dir)
}

fn registration_config(
    cost_flag: Option<String>,
    cost_file: Option<String>,
    levels_flag: Option<usize>,
    levels_file: Option<usize>,
) -> Result<RegistrationConfig> {
    let mut cfg = RegistrationConfig::default();
    if let Some(cost) = cost_flag.or(cost_file) {
        cfg.cost = cost.parse::<CostFunction>()?;
    }
    if let Some(levels) = levels_flag.or(levels_file) {
        cfg.pyramid_levels = levels;
    }
    Ok(cfg)
}

fn load_atlas(labels_path: &Path, names_path: Option<&Path>) -> Result<AtlasVolume> {
    let labels = read_nifti(labels_path)?;
    let names = match names_path {
        Some(p) => load_atlas_names(p)?,
        None => default_names(),
    };
    AtlasVolume::new(labels, names)
}

fn parse_slices(text: &str) -> Result<SliceSelection> {
    if text == "auto" {
        return Ok(SliceSelection::default());
    }
    let indices = text
        .split(',')
        .map(|part| {
            part.trim().parse::<usize>().map_err(|_| {
                Error::InvalidParameter(format!(
                    "--slices expects \"auto\" or comma-separated z indices, got {text:?}"
                ))
            })
        })
        .collect::<Result<Vec<usize>>>()?;
    Ok(SliceSelection::Explicit(indices))
}

fn log_registration(result: &RegistrationResult) {
    for level in &result.levels {
        eprintln!(
            "level {}: cost {:.6} -> {:.6} in {} sweeps",
            level.level, level.start_cost, level.end_cost, level.iterations
        );
    }
    eprintln!(
        "registration finished: cost {:.6}, converged {}",
        result.final_cost, result.converged
    );
}

fn write_transform_files(
    result: &RegistrationResult,
    moving_center: [f64; 3],
    out_dir: &Path,
) -> Result<()> {
    result.transform.write_json(out_dir.join("transform.json"))?;
    result
        .transform
        .write_matrix_file(moving_center, out_dir.join("transform.mat"))?;
    Ok(())
}

fn dominant_line(report: &AtlasOverlapReport) -> String {
    match (report.dominant, report.dominant_vessel) {
        (Some(label), Some(vessel)) => {
            format!("DOMINANT={} VESSEL={}", label.name(), vessel.name())
        }
        _ => "DOMINANT=NONE VESSEL=NONE".to_string(),
    }
}

fn cmd_register(args: RegisterArgs) -> Result<()> {
    let file = load_config(args.config.as_deref())?;
    let fixed_path = need(args.fixed, file.fixed, "fixed")?;
    let moving_path = need(args.moving, file.moving, "moving")?;
    let cfg = registration_config(args.cost, file.cost, args.levels, file.levels)?;
    let out_dir = out_dir_of(args.out_dir, file.out_dir)?;

    let fixed = read_nifti(&fixed_path)?;
    let moving = read_nifti(&moving_path)?;
    eprintln!(
        "registering {} onto {} ({})",
        moving_path.display(),
        fixed_path.display(),
        cfg.cost
    );
    let result = register_rigid(&fixed, &moving, &cfg)?;
    log_registration(&result);
    write_transform_files(&result, moving.world_center(), &out_dir)?;
    println!(
        "COST={:.6} CONVERGED={}",
        result.final_cost, result.converged
    );
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    let file = load_config(args.config.as_deref())?;
    let mri_path = need(args.fixed, file.fixed, "fixed")?;
    let lesion_path = need(args.lesion, file.lesion, "lesion")?;
    let atlas_path = need(args.atlas, file.atlas, "atlas")?;
    let template_path = need(args.template, file.template, "template")?;
    let names_path = args.atlas_names.or(file.atlas_names);
    let cfg = registration_config(args.cost, file.cost, args.levels, file.levels)?;
    let out_dir = out_dir_of(args.out_dir, file.out_dir)?;

    let mri = read_nifti(&mri_path)?;
    let lesion = read_nifti(&lesion_path)?;
    let atlas = load_atlas(&atlas_path, names_path.as_deref())?;
    let template = read_nifti(&template_path)?;

    eprintln!("registering patient MRI to the atlas template");
    let report = crate::territory::analyze_lesion(&lesion, &mri, &atlas, &template, &cfg)?;
    report.write_json(out_dir.join("report.json"))?;
    eprintln!(
        "report written: {} lesion voxels, {} outside the atlas",
        report.total_lesion_voxels, report.outside_atlas_voxels
    );
    println!("{}", dominant_line(&report));
    Ok(())
}

fn cmd_fuse(args: FuseArgs) -> Result<()> {
    let file = load_config(args.config.as_deref())?;
    let first_path = need(args.fixed, file.fixed, "fixed")?;
    let second_path = need(args.mra, file.mra, "mra")?;
    let mode: FusionMode = pick(args.mode, file.mode, "mean".into()).parse()?;
    let out_dir = out_dir_of(args.out_dir, file.out_dir)?;

    let first = read_nifti(&first_path)?;
    let second = read_nifti(&second_path)?;
    let cfg = FusionConfig {
        mode,
        ..Default::default()
    };
    let fused = fuse(&first, &second, &cfg)?;
    let out_path = out_dir.join("fused.nii.gz");
    write_nifti_described(&fused, &out_path, &format!("fusion mode={mode}"))?;
    eprintln!("fused {} voxels in {mode} mode", fused.data().len());
    println!("FUSED={}", out_path.display());
    Ok(())
}

#[derive(Serialize)]
struct MetricsReport {
    peak: f64,
    psnr_per_slice: Vec<f64>,
    ssim_per_slice: Vec<f64>,
    psnr_mean: f64,
    psnr_std: f64,
    ssim_mean: f64,
    ssim_std: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pgan: Option<LossBreakdown>,
}

fn read_number_array(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    Ok(serde_json::from_str(&text)?)
}

fn cmd_metrics(args: MetricsArgs) -> Result<()> {
    let file = load_config(args.config.as_deref())?;
    let reference_path = need(args.fixed, file.fixed, "fixed")?;
    let test_path = need(args.moving, file.moving, "moving")?;
    let peak = pick(args.peak, file.peak, 1.0);
    let out_dir = out_dir_of(args.out_dir, file.out_dir)?;

    let reference = read_nifti(&reference_path)?;
    let test = read_nifti(&test_path)?;
    if !reference.same_grid(&test, GRID_TOL) {
        return Err(Error::GridMismatch(
            "reference and test volumes are on different grids".into(),
        ));
    }

    let [nx, ny, nz] = reference.extents();
    let slice_len = nx * ny;
    let mut psnr_per_slice = Vec::with_capacity(nz);
    let mut ssim_per_slice = Vec::with_capacity(nz);
    for z in 0..nz {
        let range = z * slice_len..(z + 1) * slice_len;
        let pair = SlicePair::new(
            &reference.data()[range.clone()],
            &test.data()[range],
            nx,
            ny,
        )?;
        psnr_per_slice.push(pair.psnr(peak)?);
        ssim_per_slice.push(pair.ssim(peak)?);
    }
    let (psnr_mean, psnr_std) = mean_std(&psnr_per_slice)?;
    let (ssim_mean, ssim_std) = mean_std(&ssim_per_slice)?;

    let loss_inputs = [
        args.d_real.or(file.d_real),
        args.d_fake.or(file.d_fake),
        args.feat_ref.or(file.feat_ref),
        args.feat_test.or(file.feat_test),
    ];
    let pgan = if loss_inputs.iter().any(Option::is_some) {
        let [d_real_p, d_fake_p, feat_ref_p, feat_test_p] = loss_inputs;
        let d_real = read_number_array(&need(d_real_p, None, "d-real")?)?;
        let d_fake = read_number_array(&need(d_fake_p, None, "d-fake")?)?;
        let feat_ref = read_number_array(&need(feat_ref_p, None, "feat-ref")?)?;
        let feat_test = read_number_array(&need(feat_test_p, None, "feat-test")?)?;
        let lambda_l1 = need(args.lambda_l1, file.lambda_l1, "lambda-l1")?;
        let lambda_perc = need(args.lambda_perc, file.lambda_perc, "lambda-perc")?;
        Some(pgan_loss(
            &d_real,
            &d_fake,
            test.data(),
            reference.data(),
            &feat_test,
            &feat_ref,
            lambda_l1,
            lambda_perc,
        )?)
    } else {
        None
    };

    let report = MetricsReport {
        peak,
        psnr_per_slice,
        ssim_per_slice,
        psnr_mean,
        psnr_std,
        ssim_mean,
        ssim_std,
        pgan,
    };
    let json_path = out_dir.join("metrics.json");
    let text = serde_json::to_string_pretty(&report)?;
    fs::write(&json_path, text + "\n").map_err(Error::io(&json_path))?;
    eprintln!("scored {nz} slices; metrics written to {}", json_path.display());

    if psnr_mean.is_finite() {
        println!("PSNR {psnr_mean:.2} ± {psnr_std:.2}");
    } else {
        println!("PSNR inf");
    }
    println!("SSIM {ssim_mean:.2} ± {ssim_std:.2}");
    if let Some(b) = report.pgan {
        println!(
            "PGAN total={:.6} adversarial={:.6} l1={:.6} perceptual={:.6}",
            b.total, b.adversarial, b.l1, b.perceptual
        );
    }
    Ok(())
}

struct RenderOptions {
    slices: SliceSelection,
    columns: usize,
    atlas_alpha: f64,
}

fn render_options(
    slices_flag: Option<String>,
    slices_file: Option<String>,
    columns_flag: Option<usize>,
    columns_file: Option<usize>,
    alpha_flag: Option<f64>,
    alpha_file: Option<f64>,
) -> Result<RenderOptions> {
    let slices = match slices_flag.or(slices_file) {
        Some(text) => parse_slices(&text)?,
        None => SliceSelection::default(),
    };
    Ok(RenderOptions {
        slices,
        columns: pick(columns_flag, columns_file, 3),
        atlas_alpha: pick(alpha_flag, alpha_file, 0.35),
    })
}

fn cmd_render(args: RenderArgs) -> Result<()> {
    let file = load_config(args.config.as_deref())?;
    let base_path = need(args.fixed, file.fixed, "fixed")?;
    let atlas_path = args.atlas.or(file.atlas);
    let names_path = args.atlas_names.or(file.atlas_names);
    let lesion_path = args.lesion.or(file.lesion);
    let options = render_options(
        args.slices,
        file.slices,
        args.columns,
        file.columns,
        args.atlas_alpha,
        file.atlas_alpha,
    )?;
    let out_dir = out_dir_of(args.out_dir, file.out_dir)?;

    let base = read_nifti(&base_path)?;
    let atlas = atlas_path
        .map(|p| load_atlas(&p, names_path.as_deref()))
        .transpose()?;
    let lesion = lesion_path.map(read_nifti).transpose()?;

    let mut spec = OverlaySpec::new(&base)
        .with_slices(options.slices)
        .with_columns(options.columns)
        .with_atlas_alpha(options.atlas_alpha);
    if let Some(atlas) = &atlas {
        spec = spec.with_atlas(atlas);
    }
    if let Some(lesion) = &lesion {
        spec = spec.with_lesion(lesion);
    }
    let image = render_overlay(&spec)?;
    let out_path = out_dir.join("overlay.png");
    save_png(&image, &out_path)?;
    eprintln!("montage is {}x{} pixels", image.width(), image.height());
    println!("OVERLAY={}", out_path.display());
    Ok(())
}

fn cmd_pipeline(args: PipelineArgs) -> Result<()> {
    let file = load_config(args.config.as_deref())?;
    let mri_path = need(args.fixed, file.fixed, "fixed")?;
    let lesion_path = need(args.lesion, file.lesion, "lesion")?;
    let atlas_path = need(args.atlas, file.atlas, "atlas")?;
    let template_path = need(args.template, file.template, "template")?;
    let names_path = args.atlas_names.or(file.atlas_names);
    let mra_path = args.mra.or(file.mra);
    let mode: FusionMode = pick(args.mode, file.mode, "mean".into()).parse()?;
    let reg_cfg = registration_config(args.cost, file.cost, args.levels, file.levels)?;
    let options = render_options(
        args.slices,
        file.slices,
        args.columns,
        file.columns,
        args.atlas_alpha,
        file.atlas_alpha,
    )?;
    let out_dir = out_dir_of(args.out_dir, file.out_dir)?;

    let mri = read_nifti(&mri_path)?;
    let lesion = read_nifti(&lesion_path)?;
    let atlas = load_atlas(&atlas_path, names_path.as_deref())?;
    let template = read_nifti(&template_path)?;
    if !lesion.same_grid(&mri, GRID_TOL) {
        return Err(Error::GridMismatch(
            "lesion mask and patient MRI are on different grids".into(),
        ));
    }
    if !template.same_grid(atlas.labels(), GRID_TOL) {
        return Err(Error::GridMismatch(
            "registration template and atlas labels are on different grids".into(),
        ));
    }

    // Optional MRA joins the pipeline on the MRI grid.
    let mra = match mra_path {
        Some(p) => {
            let raw = read_nifti(&p)?;
            if raw.same_grid(&mri, GRID_TOL) {
                Some(raw)
            } else {
                eprintln!("reslicing the MRA onto the MRI grid");
                let grid = GridSpec::new(mri.extents(), *mri.affine())?;
                Some(resample(&raw, &grid, Interpolation::Trilinear, 0.0)?)
            }
        }
        None => None,
    };

    eprintln!("stage 1/4: registering patient MRI to the atlas template");
    let result = register_rigid(&template, &mri, &reg_cfg)?;
    log_registration(&result);
    write_transform_files(&result, mri.world_center(), &out_dir)?;

    eprintln!("stage 2/4: carrying the lesion into atlas space");
    let atlas_grid = atlas.grid();
    let lesion_on_atlas = apply_transform(&lesion, &result.transform, &atlas_grid)?;
    let mut report = compute_overlap(&lesion_on_atlas, &atlas)?;
    report.transform_used = result.transform;
    report.write_json(out_dir.join("report.json"))?;

    if let Some(mra) = &mra {
        eprintln!("stage 3/4: fusing MRI and MRA ({mode} mode)");
        let fused = fuse(
            &mri,
            mra,
            &FusionConfig {
                mode,
                ..Default::default()
            },
        )?;
        write_nifti_described(
            &fused,
            out_dir.join("fused.nii.gz"),
            &format!("fusion mode={mode}"),
        )?;
    } else {
        eprintln!("stage 3/4: no MRA given, skipping fusion");
    }

    eprintln!("stage 4/4: rendering the overlay montage");
    let base = resample_rigid(
        &mri,
        &result.transform,
        &atlas_grid,
        Interpolation::Trilinear,
        0.0,
    )?;
    let spec = OverlaySpec::new(&base)
        .with_atlas(&atlas)
        .with_lesion(&lesion_on_atlas)
        .with_slices(options.slices)
        .with_columns(options.columns)
        .with_atlas_alpha(options.atlas_alpha);
    let image = render_overlay(&spec)?;
    save_png(&image, &out_dir.join("overlay.png"))?;

    println!("{}", dominant_line(&report));
    Ok(())
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::DegenerateOverlap(_) => 3,
        Error::EmptyLesion => 4,
        _ => 2,
    }
}

/// Parse and dispatch. Returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Register(a) => cmd_register(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Fuse(a) => cmd_fuse(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Render(a) => cmd_render(a),
        Command::Pipeline(a) => cmd_pipeline(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}
