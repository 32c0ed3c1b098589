use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MorphOp {
    Erode,
    Dilate,
    /// `dilate(erode(·))`
    Open,
    /// `erode(dilate(·))`
    Close,
}

/// Largest accepted structuring-element radius.
pub const MAX_RADIUS: usize = 64;

/// Binary morphology with a discrete ball structuring element: all offsets
/// at Euclidean distance `≤ radius` voxels. Voxels outside the grid count as
/// background for both erosion and dilation.
pub fn morphology(mask: &BinaryMask, op: MorphOp, radius: usize) -> Result<BinaryMask> {
    if radius == 0 || radius > MAX_RADIUS {
        return Err(Error::config(
            "radius",
            format!("structuring element radius must be in 1..={MAX_RADIUS}, got {radius}"),
        ));
    }
    Ok(match op {
        MorphOp::Erode => erode(mask, radius),
        MorphOp::Dilate => dilate(mask, radius),
        MorphOp::Open => dilate(&erode(mask, radius), radius),
        MorphOp::Close => erode(&dilate(mask, radius), radius),
    })
}

pub fn dilate(mask: &BinaryMask, radius: usize) -> BinaryMask {
    ball_hit(mask, radius, true, false)
}

pub fn erode(mask: &BinaryMask, radius: usize) -> BinaryMask {
    let mut hit = ball_hit(mask, radius, false, true);
    hit.data.iter_mut().for_each(|b| *b = !*b);
    hit
}

/// For every voxel, whether the ball around it contains a voxel equal to
/// `target` (or, when `border_hits`, reaches outside the grid).
///
/// The ball is decomposed into x-runs: offset `(dy, dz)` covers
/// `|dx| ≤ ⌊√(r² − dy² − dz²)⌋`, so a hit is a row-wise distance test against
/// the nearest `target` voxel along x.
fn ball_hit(mask: &BinaryMask, radius: usize, target: bool, border_hits: bool) -> BinaryMask {
    let [nx, ny, nz] = mask.grid.dims;
    let r = radius as i64;
    let dist = row_distances(mask, target, border_hits, radius);

    let mut offsets = Vec::new();
    for dz in -r..=r {
        for dy in -r..=r {
            let rem = r * r - dy * dy - dz * dz;
            if rem >= 0 {
                offsets.push((dy, dz, isqrt(rem as u64) as u8));
            }
        }
    }

    let mut out = BinaryMask::empty(mask.grid.clone());
    out.data.par_chunks_mut(nx).enumerate().for_each(|(row, out_row)| {
        let (j, k) = ((row % ny) as i64, (row / ny) as i64);
        for &(dy, dz, w) in &offsets {
            let (jj, kk) = (j + dy, k + dz);
            if jj < 0 || kk < 0 || jj >= ny as i64 || kk >= nz as i64 {
                if border_hits {
                    out_row.fill(true);
                    return;
                }
                continue;
            }
            let src = (jj as usize + ny * kk as usize) * nx;
            for (o, &d) in out_row.iter_mut().zip(&dist[src..src + nx]) {
                *o |= d <= w;
            }
        }
    });
    out
}

/// Distance along x to the nearest voxel equal to `target` in the same row,
/// saturating above `cap`. With `border_hits`, the virtual voxels at x = -1
/// and x = nx also count as targets.
fn row_distances(mask: &BinaryMask, target: bool, border_hits: bool, cap: usize) -> Vec<u8> {
    let nx = mask.grid.dims[0];
    let far = (cap + 1).min(255) as u32;
    let mut dist = vec![0u8; mask.data.len()];
    dist.par_chunks_mut(nx)
        .zip(mask.data.par_chunks(nx))
        .for_each(|(d_row, m_row)| {
            let mut last = if border_hits { 0 } else { far };
            for (d, &m) in d_row.iter_mut().zip(m_row) {
                last = if m == target { 0 } else { (last + 1).min(far) };
                *d = last as u8;
            }
            let mut last = if border_hits { 0 } else { far };
            for (d, &m) in d_row.iter_mut().zip(m_row).rev() {
                last = if m == target { 0 } else { (last + 1).min(far) };
                *d = (*d as u32).min(last) as u8;
            }
        });
    dist
}

fn isqrt(v: u64) -> u64 {
    let mut s = (v as f64).sqrt() as u64;
    while s * s > v {
        s -= 1;
    }
    while (s + 1) * (s + 1) <= v {
        s += 1;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::{complement, Grid};

    #[test]
    fn closing_keeps_interior_cube() {
        let mut m = BinaryMask::empty(Grid::unit([15, 15, 15]));
        for k in 3..12 {
            for j in 3..12 {
                for i in 3..12 {
                    m.set(i, j, k, true);
                }
            }
        }
        assert_eq!(morphology(&m, MorphOp::Close, 1).unwrap(), m);
    }

    #[test]
    fn isolated_voxel_erodes_away() {
        let mut m = BinaryMask::empty(Grid::unit([5, 5, 5]));
        m.set(2, 2, 2, true);
        assert_eq!(morphology(&m, MorphOp::Erode, 1).unwrap().count(), 0);
        // A radius-1 ball is the 6-neighbourhood plus the centre.
        assert_eq!(morphology(&m, MorphOp::Dilate, 1).unwrap().count(), 7);
        assert_eq!(morphology(&m, MorphOp::Dilate, 2).unwrap().count(), 33);
    }

    #[test]
    fn radius_zero_rejected() {
        let m = BinaryMask::empty(Grid::unit([3, 3, 3]));
        assert!(morphology(&m, MorphOp::Open, 0).is_err());
    }

    #[test]
    fn erosion_treats_outside_as_background() {
        let m = BinaryMask::filled(Grid::unit([5, 5, 5]), true);
        let e = erode(&m, 1);
        assert_eq!(e.count(), 27);
        assert!(!e.get(0, 2, 2) && e.get(1, 1, 1));
    }

    #[test]
    fn duality_on_padded_grid() {
        let mut m = BinaryMask::empty(Grid::unit([16, 16, 16]));
        let mut state = 12345u64;
        for k in 3..13 {
            for j in 3..13 {
                for i in 3..13 {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                    m.set(i, j, k, (state >> 33) % 3 != 0);
                }
            }
        }
        let e = erode(&m, 2);
        let d = complement(&dilate(&complement(&m), 2));
        // Agreement holds wherever the ball stays inside the grid.
        for k in 2..14 {
            for j in 2..14 {
                for i in 2..14 {
                    assert_eq!(e.get(i, j, k), d.get(i, j, k));
                }
            }
        }
    }
}
