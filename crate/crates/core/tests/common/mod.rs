//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use resectsim::volume::{Connectivity, MorphOp};
use resectsim::{BinaryMask, Grid};

/// Offsets of the digital ball of radius `r`.
pub fn ball(r: usize) -> Vec<[i64; 3]> {
    let r = r as i64;
    let mut out = Vec::new();
    for z in -r..=r {
        for y in -r..=r {
            for x in -r..=r {
                if x * x + y * y + z * z <= r * r {
                    out.push([x, y, z]);
                }
            }
        }
    }
    out
}

fn at(mask: &BinaryMask, p: [i64; 3]) -> bool {
    let d = mask.grid.dims;
    if (0..3).any(|a| p[a] < 0 || p[a] >= d[a] as i64) {
        return false;
    }
    mask.get(p[0] as usize, p[1] as usize, p[2] as usize)
}

/// Minkowski sum with the ball, by direct search.
pub fn brute_dilate(mask: &BinaryMask, r: usize) -> BinaryMask {
    let b = ball(r);
    let mut out = BinaryMask::empty(mask.grid.clone());
    for idx in 0..mask.data.len() {
        let c = mask.grid.coords(idx).map(|v| v as i64);
        out.data[idx] = b.iter().any(|o| at(mask, [c[0] - o[0], c[1] - o[1], c[2] - o[2]]));
    }
    out
}

/// Minkowski difference with the ball; voxels outside the grid are background.
pub fn brute_erode(mask: &BinaryMask, r: usize) -> BinaryMask {
    let b = ball(r);
    let mut out = BinaryMask::empty(mask.grid.clone());
    for idx in 0..mask.data.len() {
        let c = mask.grid.coords(idx).map(|v| v as i64);
        out.data[idx] = b.iter().all(|o| at(mask, [c[0] + o[0], c[1] + o[1], c[2] + o[2]]));
    }
    out
}

pub fn brute_morph(mask: &BinaryMask, op: MorphOp, r: usize) -> BinaryMask {
    match op {
        MorphOp::Dilate => brute_dilate(mask, r),
        MorphOp::Erode => brute_erode(mask, r),
        MorphOp::Open => brute_dilate(&brute_erode(mask, r), r),
        MorphOp::Close => brute_erode(&brute_dilate(mask, r), r),
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Largest connected component by union-find; ties go to the component
/// containing the lowest linear index.
pub fn brute_largest_component(mask: &BinaryMask, conn: Connectivity) -> BinaryMask {
    let n = mask.data.len();
    let mut parent: Vec<usize> = (0..n).collect();
    let diag = matches!(conn, Connectivity::TwentySix);
    for idx in 0..n {
        if !mask.data[idx] {
            continue;
        }
        let c = mask.grid.coords(idx).map(|v| v as i64);
        for dz in -1..=1i64 {
            for dy in -1..=1i64 {
                for dx in -1..=1i64 {
                    let l1 = dx.abs() + dy.abs() + dz.abs();
                    if l1 == 0 || (!diag && l1 > 1) {
                        continue;
                    }
                    let p = [c[0] + dx, c[1] + dy, c[2] + dz];
                    if at(mask, p) {
                        let j = mask.grid.index(p[0] as usize, p[1] as usize, p[2] as usize);
                        let (a, b) = (find(&mut parent, idx), find(&mut parent, j));
                        if a != b {
                            parent[a.max(b)] = a.min(b);
                        }
                    }
                }
            }
        }
    }
    let mut size = vec![0usize; n];
    for idx in 0..n {
        if mask.data[idx] {
            let r = find(&mut parent, idx);
            size[r] += 1;
        }
    }
    // With min-index roots, the root is the component's first voxel.
    let mut best: Option<usize> = None;
    for r in 0..n {
        if size[r] > 0 && best.is_none_or(|b| size[r] > size[b]) {
            best = Some(r);
        }
    }
    let mut out = BinaryMask::empty(mask.grid.clone());
    if let Some(b) = best {
        for idx in 0..n {
            out.data[idx] = mask.data[idx] && find(&mut parent, idx) == b;
        }
    }
    out
}

/// Voxels whose centres satisfy `Σ ((p − c) / r)² ≤ 1` in physical space.
pub fn analytic_ellipsoid(grid: &Grid, centre: [f64; 3], axes: [f64; 3]) -> BinaryMask {
    let mut out = BinaryMask::empty(grid.clone());
    for idx in 0..grid.len() {
        let p = grid.index_to_physical(grid.coords(idx).map(|v| v as f64));
        let q: f64 = (0..3).map(|a| ((p[a] - centre[a]) / axes[a]).powi(2)).sum();
        out.data[idx] = q <= 1.0;
    }
    out
}

/// Dice by direct counting.
pub fn dice_count(a: &BinaryMask, b: &BinaryMask) -> f64 {
    let both = a.data.iter().zip(&b.data).filter(|(x, y)| **x && **y).count();
    let total = a.count() + b.count();
    if total == 0 {
        1.0
    } else {
        2.0 * both as f64 / total as f64
    }
}

/// Random mask with the given foreground density, built from a simple LCG
/// so that the oracle does not depend on the crate's generators.
pub fn random_mask(dims: [usize; 3], density: f64, seed: u64) -> BinaryMask {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut out = BinaryMask::empty(Grid::unit(dims));
    for v in out.data.iter_mut() {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        *v = ((state >> 11) as f64 / (1u64 << 53) as f64) < density;
    }
    out
}

/// Blobby random mask: random spheres, so morphology has real structure.
pub fn random_blobs(dims: [usize; 3], count: usize, seed: u64) -> BinaryMask {
    let mut state = seed ^ 0x9E37_79B9_7F4A_7C15;
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut out = BinaryMask::empty(Grid::unit(dims));
    for _ in 0..count {
        let c = [0, 1, 2].map(|a| next() * dims[a] as f64);
        let r = 1.0 + next() * 5.0;
        for idx in 0..out.data.len() {
            let p = out.grid.coords(idx);
            let d2: f64 = (0..3).map(|a| (p[a] as f64 - c[a]).powi(2)).sum();
            if d2 <= r * r {
                out.data[idx] = true;
            }
        }
    }
    out
}
