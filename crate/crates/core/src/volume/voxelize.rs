use crate::error::Result;
use crate::mesh::TriangleMesh;

use super::{BinaryMask, Grid};

/// Marks every voxel whose centre lies inside the closed surface `mesh`
/// (given in the grid's physical space).
///
/// Each grid row parallel to the x axis is intersected with the mesh and
/// filled by crossing parity. Rays that graze an edge or vertex are resolved
/// by symbolically nudging the ray by `(ε, ε²)` in the (y, z) plane; every
/// edge is evaluated in a canonical vertex order so that adjacent faces
/// always agree on which side of their shared edge the ray passes. A voxel
/// centre at `x` is inside between crossings `x0 ≤ x < x1`.
pub fn voxelize(mesh: &TriangleMesh, grid: &Grid) -> Result<BinaryMask> {
    mesh.check_closed()?;
    let [nx, ny, nz] = grid.dims;
    let verts: Vec<[f64; 3]> = mesh.vertices.iter().map(|&v| grid.physical_to_index(v)).collect();

    let mut crossings: Vec<(usize, f64)> = Vec::new();
    for face in &mesh.faces {
        let idx = [face[0] as usize, face[1] as usize, face[2] as usize];
        let p = [verts[idx[0]], verts[idx[1]], verts[idx[2]]];
        let normal = {
            let u = [p[1][0] - p[0][0], p[1][1] - p[0][1], p[1][2] - p[0][2]];
            let w = [p[2][0] - p[0][0], p[2][1] - p[0][1], p[2][2] - p[0][2]];
            [
                u[1] * w[2] - u[2] * w[1],
                u[2] * w[0] - u[0] * w[2],
                u[0] * w[1] - u[1] * w[0],
            ]
        };
        if normal[0] == 0.0 {
            // Edge-on to every x ray; a perturbed ray never hits it.
            continue;
        }
        let ymin = p.iter().map(|v| v[1]).fold(f64::INFINITY, f64::min);
        let ymax = p.iter().map(|v| v[1]).fold(f64::NEG_INFINITY, f64::max);
        let zmin = p.iter().map(|v| v[2]).fold(f64::INFINITY, f64::min);
        let zmax = p.iter().map(|v| v[2]).fold(f64::NEG_INFINITY, f64::max);
        let Some((j0, j1)) = index_span(ymin, ymax, ny) else { continue };
        let Some((k0, k1)) = index_span(zmin, zmax, nz) else { continue };

        for k in k0..=k1 {
            for j in j0..=j1 {
                let (py, pz) = (j as f64, k as f64);
                let s0 = oriented_side(idx[0], idx[1], &verts, py, pz);
                let s1 = oriented_side(idx[1], idx[2], &verts, py, pz);
                let s2 = oriented_side(idx[2], idx[0], &verts, py, pz);
                if s0 == 0 || s0 != s1 || s1 != s2 {
                    continue;
                }
                let x = p[0][0]
                    - (normal[1] * (py - p[0][1]) + normal[2] * (pz - p[0][2])) / normal[0];
                crossings.push((j + ny * k, x));
            }
        }
    }

    crossings.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let mut mask = BinaryMask::empty(grid.clone());
    let mut start = 0;
    while start < crossings.len() {
        let row = crossings[start].0;
        let mut end = start;
        while end < crossings.len() && crossings[end].0 == row {
            end += 1;
        }
        let xs = &crossings[start..end];
        if !xs.len().is_multiple_of(2) {
            log::warn!("odd crossing count ({}) on voxelization row {row}", xs.len());
        }
        let base = row * nx;
        for pair in xs.chunks_exact(2) {
            let lo = pair[0].1.ceil().max(0.0);
            let hi = pair[1].1.ceil().min(nx as f64);
            if hi > lo {
                mask.data[base + lo as usize..base + hi as usize].fill(true);
            }
        }
        start = end;
    }
    Ok(mask)
}

/// Integer coordinates within `[lo, hi]` clipped to `[0, n)`.
fn index_span(lo: f64, hi: f64, n: usize) -> Option<(usize, usize)> {
    let a = lo.ceil().max(0.0);
    let b = hi.floor().min(n as f64 - 1.0);
    if !(a <= b) {
        return None;
    }
    Some((a as usize, b as usize))
}

/// Side of the directed edge `a → b` on which the (symbolically perturbed)
/// point `(py, pz)` lies, as ±1; 0 only for an edge that is degenerate in
/// projection.
#[inline]
fn oriented_side(a: usize, b: usize, verts: &[[f64; 3]], py: f64, pz: f64) -> i8 {
    let (lo, hi, flip) = if a < b { (a, b, 1) } else { (b, a, -1) };
    let (va, vb) = (verts[lo], verts[hi]);
    let dy = vb[1] - va[1];
    let dz = vb[2] - va[2];
    let e = dy * (pz - va[2]) - dz * (py - va[1]);
    let s = if e > 0.0 {
        1
    } else if e < 0.0 {
        -1
    } else if dz != 0.0 {
        // d/dε of e at p + (ε, ε²) is -dz; the ε² term is dy.
        if -dz > 0.0 {
            1
        } else {
            -1
        }
    } else if dy > 0.0 {
        1
    } else if dy < 0.0 {
        -1
    } else {
        0
    };
    s * flip
}
