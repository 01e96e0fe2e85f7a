//! In-memory 3-D volumes and the grids they live on.
//!
//! Voxel data is stored as `f64` regardless of on-disk datatype, in x-fastest
//! order: `index = x + nx * (y + ny * z)`. Every volume carries a
//! voxel-to-world affine; the cached spacing is always the column norms of
//! that affine, so the two can never disagree.

use crate::affine::Affine;
use crate::{Error, Result};

/// On-disk sample types supported by the NIfTI reader/writer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataType {
    U8,
    I16,
    I32,
    F32,
    F64,
}

impl DataType {
    pub fn code(self) -> i16 {
        match self {
            DataType::U8 => 2,
            DataType::I16 => 4,
            DataType::I32 => 8,
            DataType::F32 => 16,
            DataType::F64 => 64,
        }
    }

    pub fn from_code(code: i16) -> Option<DataType> {
        Some(match code {
            2 => DataType::U8,
            4 => DataType::I16,
            8 => DataType::I32,
            16 => DataType::F32,
            64 => DataType::F64,
            _ => return None,
        })
    }

    pub fn size_bytes(self) -> usize {
        match self {
            DataType::U8 => 1,
            DataType::I16 => 2,
            DataType::I32 => 4,
            DataType::F32 => 4,
            DataType::F64 => 8,
        }
    }

    pub fn bitpix(self) -> i16 {
        (self.size_bytes() * 8) as i16
    }
}

/// A sampling grid: extents plus voxel-to-world affine, no data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub extents: [usize; 3],
    pub affine: Affine,
}

impl GridSpec {
    pub fn new(extents: [usize; 3], affine: Affine) -> Result<Self> {
        if extents.iter().any(|&n| n == 0) {
            return Err(Error::InvalidParameter(format!(
                "grid extents must be positive, got {extents:?}"
            )));
        }
        if !affine.det3().is_finite() || affine.det3().abs() < 1e-12 {
            return Err(Error::SingularAffine);
        }
        Ok(GridSpec { extents, affine })
    }

    pub fn num_voxels(&self) -> usize {
        self.extents[0] * self.extents[1] * self.extents[2]
    }

    /// World coordinates of the grid's bounding-box centroid,
    /// i.e. the image of voxel ((nx-1)/2, (ny-1)/2, (nz-1)/2).
    pub fn center_world(&self) -> [f64; 3] {
        self.affine.apply([
            (self.extents[0] as f64 - 1.0) / 2.0,
            (self.extents[1] as f64 - 1.0) / 2.0,
            (self.extents[2] as f64 - 1.0) / 2.0,
        ])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Volume3D {
    extents: [usize; 3],
    spacing: [f64; 3],
    affine: Affine,
    datatype: DataType,
    data: Vec<f64>,
}

impl Volume3D {
    /// Construct from raw samples in x-fastest order. Rejects zero extents,
    /// singular affines, and data whose length disagrees with the extents.
    pub fn new(extents: [usize; 3], affine: Affine, data: Vec<f64>) -> Result<Self> {
        let grid = GridSpec::new(extents, affine)?;
        if data.len() != grid.num_voxels() {
            return Err(Error::InvalidParameter(format!(
                "data length {} does not match extents {:?} ({} voxels)",
                data.len(),
                extents,
                grid.num_voxels()
            )));
        }
        Ok(Volume3D {
            extents,
            spacing: affine.column_norms(),
            affine,
            datatype: DataType::F64,
            data,
        })
    }

    /// Evaluate `f(x, y, z)` at every voxel of the grid.
    pub fn from_voxel_fn(grid: &GridSpec, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let [nx, ny, nz] = grid.extents;
        let mut data = Vec::with_capacity(grid.num_voxels());
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    data.push(f(x, y, z));
                }
            }
        }
        Volume3D::new(grid.extents, grid.affine, data)
            .expect("grid was already validated")
    }

    /// Evaluate `f(world_point)` at every voxel center of the grid.
    pub fn from_world_fn(grid: &GridSpec, mut f: impl FnMut([f64; 3]) -> f64) -> Self {
        let affine = grid.affine;
        Self::from_voxel_fn(grid, |x, y, z| {
            f(affine.apply([x as f64, y as f64, z as f64]))
        })
    }

    pub fn with_datatype(mut self, datatype: DataType) -> Self {
        self.datatype = datatype;
        self
    }

    pub fn extents(&self) -> [usize; 3] {
        self.extents
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn affine(&self) -> &Affine {
        &self.affine
    }

    pub fn datatype(&self) -> DataType {
        self.datatype
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            extents: self.extents,
            affine: self.affine,
        }
    }

    pub fn num_voxels(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        debug_assert!(x < self.extents[0] && y < self.extents[1] && z < self.extents[2]);
        x + self.extents[0] * (y + self.extents[1] * z)
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, z: usize) -> f64 {
        self.data[self.index(x, y, z)]
    }

    pub fn world_center(&self) -> [f64; 3] {
        self.grid().center_world()
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.data {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Same grid, values transformed.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Volume3D {
        Volume3D {
            extents: self.extents,
            spacing: self.spacing,
            affine: self.affine,
            datatype: DataType::F64,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// True when extents match and affines agree entrywise within `tol`.
    pub fn same_grid(&self, other: &Volume3D, tol: f64) -> bool {
        self.extents == other.extents && self.affine.approx_eq(&other.affine, tol)
    }
}
