//! NIfTI-1 single-file images (`.nii`, `.nii.gz`).
//!
//! Reading accepts either byte order and the common integer and float
//! datatypes. The grid comes from the sform when its code is set, else from
//! the qform, else the file is rejected. Writing is little-endian with both
//! sform and qform filled in, a fixed description string and a gzip header
//! without timestamp, so equal volumes always produce equal bytes.

use std::fs::File;
use std::io::{BufWriter, Cursor, Read, Write};
use std::path::Path;

use byteorder::{BigEndian, ByteOrder, LittleEndian, WriteBytesExt};
use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use crate::error::{Error, Result};
use crate::volume::{BinaryMask, Grid, LabelVolume, ScalarVolume};

const HEADER_SIZE: usize = 348;
const VOX_OFFSET: usize = 352;
const DESCRIPTION: &[u8] = b"resectsim";

const DT_UINT8: i16 = 2;
const DT_INT16: i16 = 4;
const DT_INT32: i16 = 8;
const DT_FLOAT32: i16 = 16;
const DT_FLOAT64: i16 = 64;
const DT_INT8: i16 = 256;
const DT_UINT16: i16 = 512;
const DT_UINT32: i16 = 768;

fn nifti_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Nifti {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Decoded image: grid plus voxel values after intensity scaling.
struct Decoded {
    grid: Grid,
    datatype: i16,
    values: Vec<f64>,
}

struct Header {
    dims: [usize; 3],
    datatype: i16,
    vox_offset: usize,
    slope: f64,
    inter: f64,
    affine: [[f64; 4]; 4],
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let mut raw = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut raw))
        .map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        MultiGzDecoder::new(&raw[..])
            .read_to_end(&mut out)
            .map_err(|e| nifti_err(path, format!("gzip stream: {e}")))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn quaternion_affine(b: f64, c: f64, d: f64, qfac: f64, pixdim: [f64; 3], offset: [f64; 3]) -> [[f64; 4]; 4] {
    let a = (1.0 - (b * b + c * c + d * d)).max(0.0).sqrt();
    let r = [
        [a * a + b * b - c * c - d * d, 2.0 * (b * c - a * d), 2.0 * (b * d + a * c)],
        [2.0 * (b * c + a * d), a * a + c * c - b * b - d * d, 2.0 * (c * d - a * b)],
        [2.0 * (b * d - a * c), 2.0 * (c * d + a * b), a * a + d * d - c * c - b * b],
    ];
    let scale = [pixdim[0], pixdim[1], pixdim[2] * qfac];
    let mut m = [[0.0; 4]; 4];
    for row in 0..3 {
        for col in 0..3 {
            m[row][col] = r[row][col] * scale[col];
        }
        m[row][3] = offset[row];
    }
    m[3][3] = 1.0;
    m
}

fn parse_header<B: ByteOrder>(h: &[u8], path: &Path) -> Result<Header> {
    let i16_at = |o: usize| B::read_i16(&h[o..o + 2]);
    let f32_at = |o: usize| B::read_f32(&h[o..o + 4]) as f64;

    if &h[344..347] != b"n+1" {
        return Err(nifti_err(path, "missing `n+1` magic (only single-file NIfTI-1 is supported)"));
    }
    let ndim = i16_at(40);
    if !(1..=7).contains(&ndim) {
        return Err(nifti_err(path, format!("dim[0] = {ndim} is out of range")));
    }
    let mut dims = [1usize; 3];
    for a in 0..7 {
        let n = if (a as i16) < ndim { i16_at(42 + 2 * a) } else { 1 };
        if n < 1 {
            return Err(nifti_err(path, format!("dim[{}] = {n} must be positive", a + 1)));
        }
        if a < 3 {
            dims[a] = n as usize;
        } else if n != 1 {
            return Err(nifti_err(path, format!("expected a 3D volume, dim[{}] = {n}", a + 1)));
        }
    }
    let datatype = i16_at(70);
    let vox_offset = f32_at(108);
    if !(vox_offset >= HEADER_SIZE as f64) || vox_offset.fract() != 0.0 {
        return Err(nifti_err(path, format!("invalid vox_offset {vox_offset}")));
    }
    let slope = f32_at(112);
    let inter = f32_at(116);
    let (slope, inter) = if slope == 0.0 || !slope.is_finite() || !inter.is_finite() {
        (1.0, 0.0)
    } else {
        (slope, inter)
    };

    let qform_code = i16_at(252);
    let sform_code = i16_at(254);
    let affine = if sform_code > 0 {
        let mut m = [[0.0; 4]; 4];
        for (row, base) in [280usize, 296, 312].into_iter().enumerate() {
            for col in 0..4 {
                m[row][col] = f32_at(base + 4 * col);
            }
        }
        m[3][3] = 1.0;
        m
    } else if qform_code > 0 {
        let qfac = if f32_at(76) < 0.0 { -1.0 } else { 1.0 };
        quaternion_affine(
            f32_at(256),
            f32_at(260),
            f32_at(264),
            qfac,
            [f32_at(80), f32_at(84), f32_at(88)],
            [f32_at(268), f32_at(272), f32_at(276)],
        )
    } else {
        return Err(nifti_err(path, "neither sform nor qform is set; cannot place the volume"));
    };

    Ok(Header {
        dims,
        datatype,
        vox_offset: vox_offset as usize,
        slope,
        inter,
        affine,
    })
}

fn decode_values<B: ByteOrder>(data: &[u8], datatype: i16, n: usize, path: &Path) -> Result<Vec<f64>> {
    let width = match datatype {
        DT_UINT8 | DT_INT8 => 1,
        DT_INT16 | DT_UINT16 => 2,
        DT_INT32 | DT_UINT32 | DT_FLOAT32 => 4,
        DT_FLOAT64 => 8,
        other => return Err(nifti_err(path, format!("unsupported datatype code {other}"))),
    };
    if data.len() < n * width {
        return Err(nifti_err(
            path,
            format!("truncated data: expected {} bytes, found {}", n * width, data.len()),
        ));
    }
    let data = &data[..n * width];
    let values = match datatype {
        DT_UINT8 => data.iter().map(|&v| v as f64).collect(),
        DT_INT8 => data.iter().map(|&v| v as i8 as f64).collect(),
        DT_INT16 => data.chunks_exact(2).map(|c| B::read_i16(c) as f64).collect(),
        DT_UINT16 => data.chunks_exact(2).map(|c| B::read_u16(c) as f64).collect(),
        DT_INT32 => data.chunks_exact(4).map(|c| B::read_i32(c) as f64).collect(),
        DT_UINT32 => data.chunks_exact(4).map(|c| B::read_u32(c) as f64).collect(),
        DT_FLOAT32 => data.chunks_exact(4).map(|c| B::read_f32(c) as f64).collect(),
        _ => data.chunks_exact(8).map(B::read_f64).collect(),
    };
    Ok(values)
}

fn decode(path: &Path) -> Result<Decoded> {
    let bytes = read_bytes(path)?;
    if bytes.len() < HEADER_SIZE {
        return Err(nifti_err(path, format!("file is only {} bytes long", bytes.len())));
    }
    let h = &bytes[..HEADER_SIZE];
    let little = LittleEndian::read_i32(&h[0..4]) == HEADER_SIZE as i32;
    let big = BigEndian::read_i32(&h[0..4]) == HEADER_SIZE as i32;
    let header = if little {
        parse_header::<LittleEndian>(h, path)?
    } else if big {
        parse_header::<BigEndian>(h, path)?
    } else {
        return Err(nifti_err(path, "sizeof_hdr is not 348"));
    };
    let grid = Grid::from_affine(header.dims, &header.affine).map_err(|e| nifti_err(path, e.to_string()))?;
    let n = grid.len();
    let data = bytes.get(header.vox_offset..).unwrap_or(&[]);
    let mut values = if little {
        decode_values::<LittleEndian>(data, header.datatype, n, path)?
    } else {
        decode_values::<BigEndian>(data, header.datatype, n, path)?
    };
    if header.slope != 1.0 || header.inter != 0.0 {
        values.iter_mut().for_each(|v| *v = *v * header.slope + header.inter);
    }
    Ok(Decoded {
        grid,
        datatype: header.datatype,
        values,
    })
}

/// Reads any supported datatype as 32-bit float intensities.
pub fn read_scalar(path: impl AsRef<Path>) -> Result<ScalarVolume> {
    let d = decode(path.as_ref())?;
    Ok(ScalarVolume {
        grid: d.grid,
        data: d.values.into_iter().map(|v| v as f32).collect(),
    })
}

/// Reads a label map. Values must be non-negative integers; float files
/// are accepted when every value is integral.
pub fn read_labels(path: impl AsRef<Path>) -> Result<LabelVolume> {
    let path = path.as_ref();
    let d = decode(path)?;
    let mut data = Vec::with_capacity(d.values.len());
    for (n, v) in d.values.into_iter().enumerate() {
        if !(v >= 0.0 && v <= u32::MAX as f64 && v.fract() == 0.0) {
            return Err(nifti_err(
                path,
                format!(
                    "voxel {:?} has value {v}; labels must be non-negative integers (datatype {})",
                    d.grid.coords(n),
                    d.datatype
                ),
            ));
        }
        data.push(v as u32);
    }
    Ok(LabelVolume { grid: d.grid, data })
}

/// Reads a binary mask: every nonzero voxel is foreground.
pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let d = decode(path.as_ref())?;
    Ok(BinaryMask {
        grid: d.grid,
        data: d.values.into_iter().map(|v| v != 0.0).collect(),
    })
}

/// Quaternion parameters `(b, c, d, qfac)` of the rotation part of an
/// orthonormal direction matrix.
fn direction_quaternion(dir: &[[f64; 3]; 3]) -> (f64, f64, f64, f64) {
    let det = dir[0][0] * (dir[1][1] * dir[2][2] - dir[1][2] * dir[2][1])
        - dir[0][1] * (dir[1][0] * dir[2][2] - dir[1][2] * dir[2][0])
        + dir[0][2] * (dir[1][0] * dir[2][1] - dir[1][1] * dir[2][0]);
    let qfac = if det < 0.0 { -1.0 } else { 1.0 };
    let mut r = *dir;
    for row in &mut r {
        row[2] *= qfac;
    }
    let trace = 1.0 + r[0][0] + r[1][1] + r[2][2];
    let (a, b, c, d);
    if trace > 0.5 {
        a = 0.5 * trace.sqrt();
        b = 0.25 * (r[2][1] - r[1][2]) / a;
        c = 0.25 * (r[0][2] - r[2][0]) / a;
        d = 0.25 * (r[1][0] - r[0][1]) / a;
    } else {
        let xd = 1.0 + r[0][0] - (r[1][1] + r[2][2]);
        let yd = 1.0 + r[1][1] - (r[0][0] + r[2][2]);
        let zd = 1.0 + r[2][2] - (r[0][0] + r[1][1]);
        if xd > 1.0 {
            b = 0.5 * xd.sqrt();
            c = 0.25 * (r[0][1] + r[1][0]) / b;
            d = 0.25 * (r[0][2] + r[2][0]) / b;
            a = 0.25 * (r[2][1] - r[1][2]) / b;
        } else if yd > 1.0 {
            c = 0.5 * yd.sqrt();
            b = 0.25 * (r[0][1] + r[1][0]) / c;
            d = 0.25 * (r[1][2] + r[2][1]) / c;
            a = 0.25 * (r[0][2] - r[2][0]) / c;
        } else {
            d = 0.5 * zd.sqrt();
            b = 0.25 * (r[0][2] + r[2][0]) / d;
            c = 0.25 * (r[1][2] + r[2][1]) / d;
            a = 0.25 * (r[1][0] - r[0][1]) / d;
        }
    }
    if a < 0.0 {
        (-b, -c, -d, qfac)
    } else {
        (b, c, d, qfac)
    }
}

fn header_bytes(grid: &Grid, datatype: i16, bitpix: i16) -> Vec<u8> {
    let mut h = Cursor::new(Vec::with_capacity(VOX_OFFSET));
    let w = &mut h;
    let put_i16 = |w: &mut Cursor<Vec<u8>>, v: i16| w.write_i16::<LittleEndian>(v).unwrap();
    let put_f32 = |w: &mut Cursor<Vec<u8>>, v: f64| w.write_f32::<LittleEndian>(v as f32).unwrap();
    let pad = |w: &mut Cursor<Vec<u8>>, n: usize| w.write_all(&vec![0u8; n]).unwrap();

    w.write_i32::<LittleEndian>(HEADER_SIZE as i32).unwrap();
    pad(w, 10 + 18 + 4 + 2); // data_type, db_name, extents, session_error
    w.write_u8(b'r').unwrap(); // regular
    w.write_u8(0).unwrap(); // dim_info
    let dims = [3, grid.dims[0] as i16, grid.dims[1] as i16, grid.dims[2] as i16, 1, 1, 1, 1];
    dims.iter().for_each(|&d| put_i16(w, d));
    pad(w, 12); // intent_p1..3
    put_i16(w, 0); // intent_code
    put_i16(w, datatype);
    put_i16(w, bitpix);
    put_i16(w, 0); // slice_start

    let (qb, qc, qd, qfac) = direction_quaternion(&grid.direction);
    let pixdim = [qfac, grid.spacing[0], grid.spacing[1], grid.spacing[2], 0.0, 0.0, 0.0, 0.0];
    pixdim.iter().for_each(|&p| put_f32(w, p));
    put_f32(w, VOX_OFFSET as f64);
    put_f32(w, 1.0); // scl_slope
    put_f32(w, 0.0); // scl_inter
    put_i16(w, 0); // slice_end
    w.write_u8(0).unwrap(); // slice_code
    w.write_u8(2).unwrap(); // xyzt_units: millimetres
    pad(w, 4 * 4 + 4 * 2); // cal_max, cal_min, slice_duration, toffset, glmax, glmin
    let mut descrip = [0u8; 80];
    descrip[..DESCRIPTION.len()].copy_from_slice(DESCRIPTION);
    w.write_all(&descrip).unwrap();
    pad(w, 24); // aux_file
    put_i16(w, 1); // qform_code: scanner
    put_i16(w, 1); // sform_code: scanner
    let affine = grid.affine();
    for v in [qb, qc, qd, affine[0][3], affine[1][3], affine[2][3]] {
        put_f32(w, v);
    }
    for row in affine.iter().take(3) {
        row.iter().for_each(|&v| put_f32(w, v));
    }
    pad(w, 16); // intent_name
    w.write_all(b"n+1\0").unwrap();
    pad(w, 4); // no extensions
    debug_assert_eq!(h.get_ref().len(), VOX_OFFSET);
    h.into_inner()
}

fn write_file(path: &Path, header: &[u8], data: &[u8]) -> Result<()> {
    let io_err = |source| Error::Write {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let gz = path.extension().is_some_and(|e| e == "gz");
    let result = if gz {
        let mut enc = GzEncoder::new(BufWriter::new(file), Compression::new(6));
        enc.write_all(header)
            .and_then(|_| enc.write_all(data))
            .and_then(|_| enc.finish())
            .and_then(|mut w| w.flush())
    } else {
        let mut w = BufWriter::new(file);
        w.write_all(header).and_then(|_| w.write_all(data)).and_then(|_| w.flush())
    };
    result.map_err(io_err)
}

fn check_dims(grid: &Grid, path: &Path) -> Result<()> {
    if grid.dims.iter().any(|&d| d > i16::MAX as usize) {
        return Err(nifti_err(path, format!("dimensions {:?} exceed the NIfTI-1 limit", grid.dims)));
    }
    Ok(())
}

/// Writes 32-bit float intensities.
pub fn write_scalar(vol: &ScalarVolume, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    check_dims(&vol.grid, path)?;
    let mut data = vec![0u8; vol.data.len() * 4];
    LittleEndian::write_f32_into(&vol.data, &mut data);
    write_file(path, &header_bytes(&vol.grid, DT_FLOAT32, 32), &data)
}

/// Writes an unsigned 8-bit mask with values 0 and 1.
pub fn write_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    check_dims(&mask.grid, path)?;
    write_file(path, &header_bytes(&mask.grid, DT_UINT8, 8), &mask.to_u8())
}

/// Writes a label map as 16-bit integers when every label fits, else as
/// 32-bit unsigned integers.
pub fn write_labels(labels: &LabelVolume, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    check_dims(&labels.grid, path)?;
    let max = labels.data.iter().copied().max().unwrap_or(0);
    if max <= i16::MAX as u32 {
        let values: Vec<i16> = labels.data.iter().map(|&v| v as i16).collect();
        let mut data = vec![0u8; values.len() * 2];
        LittleEndian::write_i16_into(&values, &mut data);
        write_file(path, &header_bytes(&labels.grid, DT_INT16, 16), &data)
    } else {
        let mut data = vec![0u8; labels.data.len() * 4];
        LittleEndian::write_u32_into(&labels.data, &mut data);
        write_file(path, &header_bytes(&labels.grid, DT_UINT32, 32), &data)
    }
}
