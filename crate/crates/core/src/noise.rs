//! Three-dimensional simplex noise and its fractal (multi-octave) sum.
//!
//! The lattice evaluation follows Gustavson's formulation of Perlin's
//! simplex noise: skew into the simplicial grid, find the enclosing simplex,
//! and sum radially attenuated gradient contributions from its four corners.
//! The permutation table is Perlin's published one, so the field is fixed
//! and all randomness comes from the caller's coordinate shift.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PERM: [u8; 256] = [
    151, 160, 137, 91, 90, 15, 131, 13, 201, 95, 96, 53, 194, 233, 7, 225, 140, 36, 103, 30, 69,
    142, 8, 99, 37, 240, 21, 10, 23, 190, 6, 148, 247, 120, 234, 75, 0, 26, 197, 62, 94, 252, 219,
    203, 117, 35, 11, 32, 57, 177, 33, 88, 237, 149, 56, 87, 174, 20, 125, 136, 171, 168, 68, 175,
    74, 165, 71, 134, 139, 48, 27, 166, 77, 146, 158, 231, 83, 111, 229, 122, 60, 211, 133, 230,
    220, 105, 92, 41, 55, 46, 245, 40, 244, 102, 143, 54, 65, 25, 63, 161, 1, 216, 80, 73, 209, 76,
    132, 187, 208, 89, 18, 169, 200, 196, 135, 130, 116, 188, 159, 86, 164, 100, 109, 198, 173,
    186, 3, 64, 52, 217, 226, 250, 124, 123, 5, 202, 38, 147, 118, 126, 255, 82, 85, 212, 207, 206,
    59, 227, 47, 16, 58, 17, 182, 189, 28, 42, 223, 183, 170, 213, 119, 248, 152, 2, 44, 154, 163,
    70, 221, 153, 101, 155, 167, 43, 172, 9, 129, 22, 39, 253, 19, 98, 108, 110, 79, 113, 224, 232,
    178, 185, 112, 104, 218, 246, 97, 228, 251, 34, 242, 193, 238, 210, 144, 12, 191, 179, 162,
    241, 81, 51, 145, 235, 249, 14, 239, 107, 49, 192, 214, 31, 181, 199, 106, 157, 184, 84, 204,
    176, 115, 121, 50, 45, 127, 4, 150, 254, 138, 236, 205, 93, 222, 114, 67, 29, 24, 72, 243, 141,
    128, 195, 78, 66, 215, 61, 156, 180,
];

const GRAD3: [[f64; 3]; 12] = [
    [1.0, 1.0, 0.0],
    [-1.0, 1.0, 0.0],
    [1.0, -1.0, 0.0],
    [-1.0, -1.0, 0.0],
    [1.0, 0.0, 1.0],
    [-1.0, 0.0, 1.0],
    [1.0, 0.0, -1.0],
    [-1.0, 0.0, -1.0],
    [0.0, 1.0, 1.0],
    [0.0, -1.0, 1.0],
    [0.0, 1.0, -1.0],
    [0.0, -1.0, -1.0],
];

const F3: f64 = 1.0 / 3.0;
const G3: f64 = 1.0 / 6.0;

/// Squared kernel radius. 0.5 keeps each corner's support inside the
/// neighbouring simplices, which makes the field continuous; the original
/// 0.6 leaves small seams.
const RADIUS_SQ: f64 = 0.5;

/// Maps the raw kernel sum onto [-1, 1]. With `RADIUS_SQ = 0.5` the raw sum
/// never exceeds 0.0130072 in magnitude, even if every corner picked its
/// best-aligned gradient, so this scale is a true bound; the final clamp only
/// absorbs rounding.
const OUTPUT_SCALE: f64 = 76.88;

#[inline]
fn hash(i: i64, j: i64, k: i64) -> usize {
    let p = |v: i64| PERM[(v & 255) as usize] as i64;
    (p(i + p(j + p(k))) % 12) as usize
}

#[inline]
fn corner(g: usize, x: f64, y: f64, z: f64) -> f64 {
    let t = RADIUS_SQ - x * x - y * y - z * z;
    if t <= 0.0 {
        0.0
    } else {
        let t2 = t * t;
        let gr = &GRAD3[g];
        t2 * t2 * (gr[0] * x + gr[1] * y + gr[2] * z)
    }
}

/// Simplex noise at `p`, in [-1, 1].
///
/// Vanishes at every vertex of the simplicial lattice and is continuous
/// everywhere.
pub fn simplex3(p: [f64; 3]) -> f64 {
    let [x, y, z] = p;
    let s = (x + y + z) * F3;
    let i = (x + s).floor();
    let j = (y + s).floor();
    let k = (z + s).floor();
    let t = (i + j + k) * G3;
    let x0 = x - (i - t);
    let y0 = y - (j - t);
    let z0 = z - (k - t);

    let (i1, j1, k1, i2, j2, k2) = if x0 >= y0 {
        if y0 >= z0 {
            (1, 0, 0, 1, 1, 0)
        } else if x0 >= z0 {
            (1, 0, 0, 1, 0, 1)
        } else {
            (0, 0, 1, 1, 0, 1)
        }
    } else if y0 < z0 {
        (0, 0, 1, 0, 1, 1)
    } else if x0 < z0 {
        (0, 1, 0, 0, 1, 1)
    } else {
        (0, 1, 0, 1, 1, 0)
    };

    let x1 = x0 - i1 as f64 + G3;
    let y1 = y0 - j1 as f64 + G3;
    let z1 = z0 - k1 as f64 + G3;
    let x2 = x0 - i2 as f64 + 2.0 * G3;
    let y2 = y0 - j2 as f64 + 2.0 * G3;
    let z2 = z0 - k2 as f64 + 2.0 * G3;
    let x3 = x0 - 1.0 + 3.0 * G3;
    let y3 = y0 - 1.0 + 3.0 * G3;
    let z3 = z0 - 1.0 + 3.0 * G3;

    let (i, j, k) = (i as i64, j as i64, k as i64);
    let n = corner(hash(i, j, k), x0, y0, z0)
        + corner(hash(i + i1, j + j1, k + k1), x1, y1, z1)
        + corner(hash(i + i2, j + j2, k + k2), x2, y2, z2)
        + corner(hash(i + 1, j + 1, k + 1), x3, y3, z3);
    (OUTPUT_SCALE * n).clamp(-1.0, 1.0)
}

/// Fractal noise configuration: octave count, per-octave persistence, the
/// coordinate divisor controlling smoothness and the coordinate shift that
/// selects a region of the (fixed) noise field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub octaves: u32,
    pub persistence: f64,
    pub scale: f64,
    pub shift: [f64; 3],
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            octaves: 4,
            persistence: 0.5,
            scale: 0.5,
            shift: [0.0; 3],
        }
    }
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        if self.octaves < 1 {
            return Err(Error::config("noise.octaves", "must be at least 1"));
        }
        if !(self.persistence > 0.0 && self.persistence <= 1.0) {
            return Err(Error::config("noise.persistence", "must lie in (0, 1]"));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::config("noise.scale", "must be positive"));
        }
        if self.shift.iter().any(|s| !s.is_finite()) {
            return Err(Error::config("noise.shift", "must be finite"));
        }
        Ok(())
    }
}

/// Weighted octave sum normalized by the total weight, so the result stays
/// in [-1, 1]. Octave `n` (1-based) samples at frequency `2^(n-1)` with
/// weight `persistence^(n-1)`.
pub fn fractal_noise(p: [f64; 3], params: &NoiseParams) -> f64 {
    let base = [
        (p[0] + params.shift[0]) / params.scale,
        (p[1] + params.shift[1]) / params.scale,
        (p[2] + params.shift[2]) / params.scale,
    ];
    let mut sum = 0.0;
    let mut weight_sum = 0.0;
    let mut weight = 1.0;
    let mut freq = 1.0;
    for _ in 0..params.octaves {
        sum += weight * simplex3([base[0] * freq, base[1] * freq, base[2] * freq]);
        weight_sum += weight;
        weight *= params.persistence;
        freq *= 2.0;
    }
    (sum / weight_sum).clamp(-1.0, 1.0)
}
