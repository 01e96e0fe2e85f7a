//! NIfTI-1 single-file reader and writer.
//!
//! Scope is deliberately narrow: little-endian single files (`.nii`, with
//! transparent gzip for `.nii.gz`), 3-D volumes (higher-dimensional files are
//! accepted only when every trailing extent is 1 and are squeezed to 3-D),
//! and the five sample types U8 / I16 / I32 / F32 / F64. Header/data pairs
//! (`.hdr` + `.img`, magic "ni1\0") and big-endian files are rejected rather
//! than half-supported.
//!
//! On read, samples are promoted to `f64` and the `scl_slope` / `scl_inter`
//! scaling is applied (when the slope is nonzero and finite). The
//! voxel-to-world affine is taken from the sform when `sform_code > 0`, else
//! from the qform quaternion when `qform_code > 0`, else from `pixdim` as a
//! diagonal scaling. The writer always emits float32 with an sform.

use crate::affine::Affine;
use crate::volume::{DataType, Volume3D};
use crate::{Error, Result};
use flate2::write::GzEncoder;
use flate2::Compression;
use std::borrow::Cow;
use std::io::Read;
use std::path::Path;

pub const HEADER_SIZE: usize = 348;
/// Data offset the writer uses: header plus the 4-byte extender flag.
pub const WRITER_VOX_OFFSET: usize = 352;

const MAGIC_SINGLE: &[u8; 4] = b"n+1\0";
const MAGIC_PAIR: &[u8; 4] = b"ni1\0";

/// The header fields this toolkit reads. Everything else in the 348 bytes is
/// ANALYZE-compatibility filler or metadata we neither use nor preserve.
#[derive(Debug, Clone)]
pub struct NiftiHeader {
    pub dim: [i16; 8],
    pub datatype: i16,
    pub bitpix: i16,
    pub pixdim: [f32; 8],
    pub vox_offset: f32,
    pub scl_slope: f32,
    pub scl_inter: f32,
    pub descrip: [u8; 80],
    pub qform_code: i16,
    pub sform_code: i16,
    /// quatern_b, quatern_c, quatern_d.
    pub quatern: [f32; 3],
    pub qoffset: [f32; 3],
    pub srow: [[f32; 4]; 3],
}

impl NiftiHeader {
    /// `descrip` up to the first NUL, lossily decoded.
    pub fn descrip_str(&self) -> String {
        let end = self.descrip.iter().position(|&b| b == 0).unwrap_or(80);
        String::from_utf8_lossy(&self.descrip[..end]).into_owned()
    }
}

fn get_i16(bytes: &[u8], at: usize) -> i16 {
    i16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn get_i32(bytes: &[u8], at: usize) -> i32 {
    i32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

fn get_f32(bytes: &[u8], at: usize) -> f32 {
    f32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

fn is_gzip(bytes: &[u8]) -> bool {
    bytes.len() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b
}

fn gunzip(bytes: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    flate2::read::GzDecoder::new(bytes)
        .read_to_end(&mut out)
        .map_err(|e| Error::BadHeader(format!("gzip stream: {e}")))?;
    Ok(out)
}

/// Parse the fixed 348-byte header. Checks identity (magic) and endianness
/// only; semantic validation happens when the volume is assembled.
pub fn parse_header(bytes: &[u8]) -> Result<NiftiHeader> {
    if bytes.len() < HEADER_SIZE {
        return Err(Error::TruncatedData {
            expected: HEADER_SIZE as u64,
            actual: bytes.len() as u64,
        });
    }
    let magic: [u8; 4] = bytes[344..348].try_into().unwrap();
    if &magic != MAGIC_SINGLE {
        // "ni1\0" header/data pairs land here deliberately.
        let _ = MAGIC_PAIR;
        return Err(Error::BadMagic);
    }
    let sizeof_hdr = get_i32(bytes, 0);
    if sizeof_hdr != HEADER_SIZE as i32 {
        if sizeof_hdr.swap_bytes() == HEADER_SIZE as i32 {
            return Err(Error::BigEndianUnsupported);
        }
        return Err(Error::BadHeader(format!(
            "sizeof_hdr is {sizeof_hdr}, expected 348"
        )));
    }

    let mut dim = [0i16; 8];
    for (k, d) in dim.iter_mut().enumerate() {
        *d = get_i16(bytes, 40 + 2 * k);
    }
    let mut pixdim = [0f32; 8];
    for (k, p) in pixdim.iter_mut().enumerate() {
        *p = get_f32(bytes, 76 + 4 * k);
    }
    let mut descrip = [0u8; 80];
    descrip.copy_from_slice(&bytes[148..228]);
    let mut srow = [[0f32; 4]; 3];
    for (r, row) in srow.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            *cell = get_f32(bytes, 280 + 16 * r + 4 * c);
        }
    }

    Ok(NiftiHeader {
        dim,
        datatype: get_i16(bytes, 70),
        bitpix: get_i16(bytes, 72),
        pixdim,
        vox_offset: get_f32(bytes, 108),
        scl_slope: get_f32(bytes, 112),
        scl_inter: get_f32(bytes, 116),
        descrip,
        qform_code: get_i16(bytes, 252),
        sform_code: get_i16(bytes, 254),
        quatern: [
            get_f32(bytes, 256),
            get_f32(bytes, 260),
            get_f32(bytes, 264),
        ],
        qoffset: [
            get_f32(bytes, 268),
            get_f32(bytes, 272),
            get_f32(bytes, 276),
        ],
        srow,
    })
}

/// Squeeze the dim array to 3-D extents, rejecting real higher-dimensional
/// data. Files with fewer than 3 dimensions get trailing extents of 1.
fn extents_from_dim(dim: &[i16; 8]) -> Result<[usize; 3]> {
    let ndim = dim[0];
    if !(1..=7).contains(&ndim) {
        return Err(Error::BadHeader(format!("dim[0] is {ndim}, expected 1..=7")));
    }
    let mut extents = [1usize; 3];
    for axis in 0..3 {
        if (axis as i16) < ndim {
            let n = dim[axis + 1];
            if n < 1 {
                return Err(Error::BadHeader(format!(
                    "dim[{}] is {n}, expected >= 1",
                    axis + 1
                )));
            }
            extents[axis] = n as usize;
        }
    }
    for k in 4..=(ndim as usize) {
        if dim[k] > 1 {
            return Err(Error::BadHeader(format!(
                "{ndim}-D file with dim[{k}] = {} cannot be squeezed to 3-D",
                dim[k]
            )));
        }
    }
    Ok(extents)
}

/// Rotation matrix of the qform quaternion (b, c, d with a reconstructed).
fn quaternion_rotation(q: [f32; 3]) -> [[f64; 3]; 3] {
    let (b, c, d) = (q[0] as f64, q[1] as f64, q[2] as f64);
    let a = (1.0 - b * b - c * c - d * d).max(0.0).sqrt();
    [
        [
            a * a + b * b - c * c - d * d,
            2.0 * (b * c - a * d),
            2.0 * (b * d + a * c),
        ],
        [
            2.0 * (b * c + a * d),
            a * a + c * c - b * b - d * d,
            2.0 * (c * d - a * b),
        ],
        [
            2.0 * (b * d - a * c),
            2.0 * (c * d + a * b),
            a * a + d * d - b * b - c * c,
        ],
    ]
}

fn positive_pixdim(header: &NiftiHeader) -> Result<[f64; 3]> {
    let mut out = [0.0; 3];
    for axis in 0..3 {
        let p = header.pixdim[axis + 1];
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::BadHeader(format!(
                "pixdim[{}] is {p}, expected positive",
                axis + 1
            )));
        }
        out[axis] = p as f64;
    }
    Ok(out)
}

/// Affine precedence: sform, then qform, then a pixdim diagonal.
fn affine_from_header(header: &NiftiHeader) -> Result<Affine> {
    if header.sform_code > 0 {
        let s = &header.srow;
        let row = |r: usize| {
            [
                s[r][0] as f64,
                s[r][1] as f64,
                s[r][2] as f64,
                s[r][3] as f64,
            ]
        };
        return Ok(Affine::from_rows(row(0), row(1), row(2)));
    }
    if header.qform_code > 0 {
        let spacing = positive_pixdim(header)?;
        let qfac = if header.pixdim[0] < 0.0 { -1.0 } else { 1.0 };
        let r = quaternion_rotation(header.quatern);
        let mut lin = [[0.0; 3]; 3];
        for i in 0..3 {
            lin[i][0] = r[i][0] * spacing[0];
            lin[i][1] = r[i][1] * spacing[1];
            lin[i][2] = r[i][2] * spacing[2] * qfac;
        }
        let t = [
            header.qoffset[0] as f64,
            header.qoffset[1] as f64,
            header.qoffset[2] as f64,
        ];
        return Ok(Affine::from_linear_translation(lin, t));
    }
    let spacing = positive_pixdim(header)?;
    Ok(Affine::scaling(spacing[0], spacing[1], spacing[2]))
}

fn decode_samples(raw: &[u8], dt: DataType, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    match dt {
        DataType::U8 => out.extend(raw[..count].iter().map(|&b| f64::from(b))),
        DataType::I16 => {
            for i in 0..count {
                out.push(f64::from(get_i16(raw, 2 * i)));
            }
        }
        DataType::I32 => {
            for i in 0..count {
                out.push(f64::from(get_i32(raw, 4 * i)));
            }
        }
        DataType::F32 => {
            for i in 0..count {
                out.push(f64::from(get_f32(raw, 4 * i)));
            }
        }
        DataType::F64 => {
            for i in 0..count {
                out.push(f64::from_le_bytes(
                    raw[8 * i..8 * i + 8].try_into().unwrap(),
                ));
            }
        }
    }
    out
}

/// Decode an in-memory NIfTI-1 file (gzip detected by its two magic bytes).
pub fn read_nifti_bytes(bytes: &[u8]) -> Result<Volume3D> {
    let plain: Cow<[u8]> = if is_gzip(bytes) {
        Cow::Owned(gunzip(bytes)?)
    } else {
        Cow::Borrowed(bytes)
    };
    let bytes = plain.as_ref();
    let header = parse_header(bytes)?;

    let extents = extents_from_dim(&header.dim)?;
    let dt = DataType::from_code(header.datatype)
        .ok_or(Error::UnsupportedDatatype(header.datatype))?;
    if header.bitpix != dt.bitpix() {
        return Err(Error::BadHeader(format!(
            "bitpix {} does not match datatype code {} (expected {})",
            header.bitpix,
            header.datatype,
            dt.bitpix()
        )));
    }
    let off = header.vox_offset;
    if !(off.is_finite() && off >= HEADER_SIZE as f32 && off.fract() == 0.0) {
        return Err(Error::BadHeader(format!(
            "vox_offset {off} is not an integer >= 348"
        )));
    }
    let start = off as u64;
    let count = extents[0] as u64 * extents[1] as u64 * extents[2] as u64;
    let need = start + count * dt.size_bytes() as u64;
    if (bytes.len() as u64) < need {
        return Err(Error::TruncatedData {
            expected: need,
            actual: bytes.len() as u64,
        });
    }

    let mut data = decode_samples(&bytes[start as usize..], dt, count as usize);
    let slope = header.scl_slope;
    if slope != 0.0 && slope.is_finite() {
        let inter = if header.scl_inter.is_finite() {
            header.scl_inter as f64
        } else {
            0.0
        };
        let slope = slope as f64;
        for v in &mut data {
            *v = *v * slope + inter;
        }
    }

    let affine = affine_from_header(&header)?;
    Ok(Volume3D::new(extents, affine, data)?.with_datatype(dt))
}

pub fn read_nifti(path: impl AsRef<Path>) -> Result<Volume3D> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(Error::io(path))?;
    read_nifti_bytes(&bytes)
}

/// Read just the header (for inspecting `descrip` and friends).
pub fn read_header(path: impl AsRef<Path>) -> Result<NiftiHeader> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(Error::io(path))?;
    if is_gzip(&bytes) {
        parse_header(&gunzip(&bytes)?)
    } else {
        parse_header(&bytes)
    }
}

fn put_i16(buf: &mut [u8], at: usize, v: i16) {
    buf[at..at + 2].copy_from_slice(&v.to_le_bytes());
}

fn put_i32(buf: &mut [u8], at: usize, v: i32) {
    buf[at..at + 4].copy_from_slice(&v.to_le_bytes());
}

fn put_f32(buf: &mut [u8], at: usize, v: f32) {
    buf[at..at + 4].copy_from_slice(&v.to_le_bytes());
}

/// Serialize a volume as an uncompressed single-file NIfTI-1 image:
/// float32 samples, identity scaling, sform only, `vox_offset` 352.
pub fn encode_nifti(v: &Volume3D, descrip: &str) -> Result<Vec<u8>> {
    let extents = v.extents();
    for &n in &extents {
        if n > i16::MAX as usize {
            return Err(Error::InvalidParameter(format!(
                "extent {n} exceeds the NIfTI-1 dim limit of 32767"
            )));
        }
    }

    let count = v.num_voxels();
    let mut out = vec![0u8; WRITER_VOX_OFFSET + 4 * count];
    {
        let h = &mut out[..HEADER_SIZE];
        put_i32(h, 0, HEADER_SIZE as i32);
        put_i16(h, 40, 3);
        for axis in 0..3 {
            put_i16(h, 42 + 2 * axis, extents[axis] as i16);
        }
        for k in 4..8 {
            put_i16(h, 40 + 2 * k, 1);
        }
        put_i16(h, 70, DataType::F32.code());
        put_i16(h, 72, DataType::F32.bitpix());
        put_f32(h, 76, 1.0); // qfac, unused with sform-only output
        let spacing = v.spacing();
        for axis in 0..3 {
            put_f32(h, 80 + 4 * axis, spacing[axis] as f32);
        }
        put_f32(h, 108, WRITER_VOX_OFFSET as f32);
        put_f32(h, 112, 1.0); // scl_slope
        put_f32(h, 116, 0.0); // scl_inter
        h[123] = 2; // xyzt_units: millimetres
        let desc = descrip.as_bytes();
        let len = desc.len().min(79);
        h[148..148 + len].copy_from_slice(&desc[..len]);
        put_i16(h, 252, 0); // qform_code
        put_i16(h, 254, 1); // sform_code
        let rows = v.affine().rows();
        for r in 0..3 {
            for c in 0..4 {
                put_f32(h, 280 + 16 * r + 4 * c, rows[r][c] as f32);
            }
        }
        h[344..348].copy_from_slice(MAGIC_SINGLE);
    }
    // Bytes 348..352 stay zero: the "no extensions" extender flag.
    for (i, &val) in v.data().iter().enumerate() {
        put_f32(&mut out, WRITER_VOX_OFFSET + 4 * i, val as f32);
    }
    Ok(out)
}

/// Write a volume, gzip-compressed when `path` ends in `.gz`.
pub fn write_nifti_described(
    v: &Volume3D,
    path: impl AsRef<Path>,
    descrip: &str,
) -> Result<()> {
    let path = path.as_ref();
    let plain = encode_nifti(v, descrip)?;
    let bytes = if path.extension().is_some_and(|e| e == "gz") {
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        std::io::Write::write_all(&mut enc, &plain).map_err(Error::io(path))?;
        enc.finish().map_err(Error::io(path))?
    } else {
        plain
    };
    std::fs::write(path, bytes).map_err(Error::io(path))
}

pub fn write_nifti(v: &Volume3D, path: impl AsRef<Path>) -> Result<()> {
    write_nifti_described(v, path, "")
}
