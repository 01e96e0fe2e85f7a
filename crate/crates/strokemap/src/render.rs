//! Multi-slice overlay montages: windowed grayscale base, semi-transparent
//! territory colors, and an opaque red lesion mask painted last. Output is
//! an 8-bit RGB PNG laid out as a tile grid with 1-pixel white separators.

use crate::territory::{AtlasVolume, TerritoryLabel, GRID_TOL};
use crate::volume::Volume3D;
use crate::{Error, Result};
use image::{Rgb, RgbImage};
use std::cmp::Reverse;
use std::path::Path;

pub const LESION_RED: [u8; 3] = [255, 0, 0];

/// Fixed territory palette. Every entry keeps a Euclidean RGB distance of
/// at least 60 from pure red, which stays reserved for the lesion mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColorMap {
    colors: [[u8; 3]; 10],
}

impl Default for ColorMap {
    fn default() -> Self {
        ColorMap {
            colors: [
                [66, 135, 245],  // MCAR: blue
                [52, 168, 83],   // MCAL: green
                [255, 193, 7],   // ACAR: amber
                [156, 39, 176],  // ACAL: purple
                [0, 188, 212],   // PCAR: cyan
                [255, 152, 0],   // PCAL: orange
                [121, 85, 72],   // VBR: brown
                [233, 30, 99],   // VBL: pink
                [158, 158, 158], // LVR: gray
                [255, 255, 102], // LVL: light yellow
            ],
        }
    }
}

impl ColorMap {
    pub fn color(&self, label: TerritoryLabel) -> [u8; 3] {
        self.colors[label.code() as usize - 1]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SliceSelection {
    /// The N slices with the largest lesion area (ties resolve toward lower
    /// z), presented in ascending z order. Requires a lesion.
    Auto(usize),
    /// Exact z indices, rendered in the order given.
    Explicit(Vec<usize>),
}

impl Default for SliceSelection {
    fn default() -> Self {
        SliceSelection::Auto(6)
    }
}

/// What to draw: a base volume plus optional atlas wash and lesion paint.
pub struct OverlaySpec<'a> {
    base: &'a Volume3D,
    atlas: Option<&'a AtlasVolume>,
    lesion: Option<&'a Volume3D>,
    slices: SliceSelection,
    columns: usize,
    atlas_alpha: f64,
    colors: ColorMap,
}

impl<'a> OverlaySpec<'a> {
    pub fn new(base: &'a Volume3D) -> Self {
        OverlaySpec {
            base,
            atlas: None,
            lesion: None,
            slices: SliceSelection::default(),
            columns: 3,
            atlas_alpha: 0.35,
            colors: ColorMap::default(),
        }
    }

    pub fn with_atlas(mut self, atlas: &'a AtlasVolume) -> Self {
        self.atlas = Some(atlas);
        self
    }

    pub fn with_lesion(mut self, lesion: &'a Volume3D) -> Self {
        self.lesion = Some(lesion);
        self
    }

    pub fn with_slices(mut self, slices: SliceSelection) -> Self {
        self.slices = slices;
        self
    }

    pub fn with_columns(mut self, columns: usize) -> Self {
        self.columns = columns;
        self
    }

    pub fn with_atlas_alpha(mut self, alpha: f64) -> Self {
        self.atlas_alpha = alpha;
        self
    }

    pub fn with_colors(mut self, colors: ColorMap) -> Self {
        self.colors = colors;
        self
    }
}

/// Robust display window: 1st to 99th percentile, linearly interpolated.
fn window_bounds(data: &[f64]) -> (f64, f64) {
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pick = |q: f64| -> f64 {
        let rank = q / 100.0 * (sorted.len() - 1) as f64;
        let lo = rank.floor() as usize;
        let hi = rank.ceil() as usize;
        let frac = rank - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    };
    (pick(1.0), pick(99.0))
}

fn choose_slices(spec: &OverlaySpec) -> Result<Vec<usize>> {
    let nz = spec.base.extents()[2];
    match &spec.slices {
        SliceSelection::Explicit(zs) => {
            if zs.is_empty() {
                return Err(Error::NoSlicesSelected);
            }
            for &z in zs {
                if z >= nz {
                    return Err(Error::InvalidParameter(format!(
                        "slice index {z} out of range (volume has {nz} slices)"
                    )));
                }
            }
            Ok(zs.clone())
        }
        SliceSelection::Auto(n) => {
            let lesion = spec.lesion.ok_or(Error::NoSlicesSelected)?;
            let [nx, ny, _] = lesion.extents();
            let mut areas: Vec<(usize, usize)> = (0..nz)
                .map(|z| {
                    let count = (0..ny)
                        .flat_map(|y| (0..nx).map(move |x| (x, y)))
                        .filter(|&(x, y)| lesion.at(x, y, z) > 0.5)
                        .count();
                    (z, count)
                })
                .filter(|&(_, count)| count > 0)
                .collect();
            if areas.is_empty() || *n == 0 {
                return Err(Error::NoSlicesSelected);
            }
            areas.sort_by_key(|&(z, count)| (Reverse(count), z));
            let mut chosen: Vec<usize> = areas.iter().take(*n).map(|&(z, _)| z).collect();
            chosen.sort_unstable();
            Ok(chosen)
        }
    }
}

/// Render the montage. Tile (x, y) pixels for the tile at grid position
/// (row, col) land at (col*(nx+1) + x, row*(ny+1) + y); the rows and
/// columns between tiles stay white, unused trailing cells are black.
pub fn render_overlay(spec: &OverlaySpec) -> Result<RgbImage> {
    if spec.columns == 0 {
        return Err(Error::InvalidParameter(
            "montage needs at least one column".into(),
        ));
    }
    if !(0.0..=1.0).contains(&spec.atlas_alpha) {
        return Err(Error::InvalidParameter(format!(
            "atlas alpha must be within [0, 1], got {}",
            spec.atlas_alpha
        )));
    }
    if let Some(atlas) = spec.atlas {
        if !atlas.labels().same_grid(spec.base, GRID_TOL) {
            return Err(Error::GridMismatch(
                "atlas labels are not on the base volume's grid".into(),
            ));
        }
    }
    if let Some(lesion) = spec.lesion {
        if !lesion.same_grid(spec.base, GRID_TOL) {
            return Err(Error::GridMismatch(
                "lesion mask is not on the base volume's grid".into(),
            ));
        }
    }

    let slices = choose_slices(spec)?;
    let [nx, ny, _] = spec.base.extents();
    let columns = spec.columns;
    let rows = slices.len().div_ceil(columns);
    let width = (columns * (nx + 1) - 1) as u32;
    let height = (rows * (ny + 1) - 1) as u32;

    let (w_lo, w_hi) = window_bounds(spec.base.data());
    let span = w_hi - w_lo;
    let gray = |v: f64| -> u8 {
        if span <= 0.0 {
            return 0;
        }
        (((v - w_lo) / span).clamp(0.0, 1.0) * 255.0).round() as u8
    };

    let mut img = RgbImage::from_pixel(width, height, Rgb([255, 255, 255]));
    for cell in 0..rows * columns {
        let (row, col) = (cell / columns, cell % columns);
        for y in 0..ny {
            for x in 0..nx {
                let px = (col * (nx + 1) + x) as u32;
                let py = (row * (ny + 1) + y) as u32;
                let Some(&z) = slices.get(cell) else {
                    img.put_pixel(px, py, Rgb([0, 0, 0]));
                    continue;
                };
                let g = gray(spec.base.at(x, y, z));
                let mut rgb = [g, g, g];
                if let Some(atlas) = spec.atlas {
                    if spec.atlas_alpha > 0.0 {
                        if let Some(label) = atlas.territory_of(atlas.labels().at(x, y, z)) {
                            let tint = spec.colors.color(label);
                            for (channel, &t) in rgb.iter_mut().zip(&tint) {
                                let blended = f64::from(*channel) * (1.0 - spec.atlas_alpha)
                                    + f64::from(t) * spec.atlas_alpha;
                                *channel = blended.round().clamp(0.0, 255.0) as u8;
                            }
                        }
                    }
                }
                if let Some(lesion) = spec.lesion {
                    if lesion.at(x, y, z) > 0.5 {
                        rgb = LESION_RED;
                    }
                }
                img.put_pixel(px, py, Rgb(rgb));
            }
        }
    }
    Ok(img)
}

pub fn save_png(image: &RgbImage, path: &Path) -> Result<()> {
    image
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: std::io::Error::other(e),
        })
}
