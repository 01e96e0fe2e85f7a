//! Pixel-wise fusion of co-registered volumes (MRI + MRA).
//!
//! Inputs must already share a grid — fusion is arithmetic, not geometry.
//! Each input is min-max normalized to [0, 1] by default so the modalities
//! contribute on equal footing; mean and sum modes then produce the
//! composite (sum is clamped back to [0, 1] unless clipping is disabled),
//! and max keeps the brighter of the two, which favours vessels from the
//! angiogram.

use crate::volume::Volume3D;
use crate::{Error, Result};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionMode {
    Mean,
    Sum,
    Max,
}

impl FusionMode {
    pub const ALL: [FusionMode; 3] = [FusionMode::Mean, FusionMode::Sum, FusionMode::Max];

    pub fn name(self) -> &'static str {
        match self {
            FusionMode::Mean => "mean",
            FusionMode::Sum => "sum",
            FusionMode::Max => "max",
        }
    }
}

impl fmt::Display for FusionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FusionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(FusionMode::Mean),
            "sum" => Ok(FusionMode::Sum),
            "max" => Ok(FusionMode::Max),
            other => Err(Error::InvalidParameter(format!(
                "unknown fusion mode {other:?} (expected mean, sum, or max)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FusionConfig {
    pub mode: FusionMode,
    /// Min-max normalize each input to [0, 1] before combining.
    pub normalize_inputs: bool,
    /// Clamp sum-mode output back to [0, 1].
    pub clip_output: bool,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            mode: FusionMode::Mean,
            normalize_inputs: true,
            clip_output: true,
        }
    }
}

fn normalized(v: &Volume3D, which: &str) -> Result<Volume3D> {
    let (lo, hi) = v.min_max();
    if !(hi - lo).is_normal() || hi <= lo {
        return Err(Error::DegenerateRange(format!(
            "{which} input has no intensity range (min {lo}, max {hi}), cannot normalize"
        )));
    }
    let scale = 1.0 / (hi - lo);
    Ok(v.map_values(|x| (x - lo) * scale))
}

/// Fuse two volumes on the same grid into one composite.
pub fn fuse(mri: &Volume3D, mra: &Volume3D, cfg: &FusionConfig) -> Result<Volume3D> {
    if !mri.same_grid(mra, crate::territory::GRID_TOL) {
        return Err(Error::GridMismatch(format!(
            "fusion inputs differ: {:?} vs {:?} (affine mismatch counts too)",
            mri.extents(),
            mra.extents()
        )));
    }
    let (a, b);
    let (first, second) = if cfg.normalize_inputs {
        a = normalized(mri, "first")?;
        b = normalized(mra, "second")?;
        (&a, &b)
    } else {
        (mri, mra)
    };

    let combine: fn(f64, f64) -> f64 = match cfg.mode {
        FusionMode::Mean => |x, y| (x + y) / 2.0,
        FusionMode::Sum => |x, y| x + y,
        FusionMode::Max => f64::max,
    };
    let clip = cfg.clip_output && cfg.mode == FusionMode::Sum;
    let data: Vec<f64> = first
        .data()
        .iter()
        .zip(second.data())
        .map(|(&x, &y)| {
            let v = combine(x, y);
            if clip {
                v.clamp(0.0, 1.0)
            } else {
                v
            }
        })
        .collect();
    Volume3D::new(mri.extents(), *mri.affine(), data)
}
