use rayon::prelude::*;

use crate::error::{Error, Result};

use super::ScalarVolume;

/// Kernel half-width in standard deviations.
pub const TRUNCATE: f64 = 4.0;

/// Sampled Gaussian with standard deviation `sigma` (voxels), truncated at
/// `TRUNCATE·sigma` and normalized to unit sum. Index `radius` is the centre.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (TRUNCATE * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|w| *w /= sum);
    k
}

/// Mirror index into `[0, n)` with the edge sample repeated
/// (`d c b a | a b c d | d c b a`).
#[inline]
fn reflect(i: i64, n: usize) -> usize {
    let n = n as i64;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

/// Separable Gaussian smoothing with per-axis standard deviations given in
/// millimetres. Borders are reflected. Values stay within the input's range.
pub fn gaussian_blur(vol: &ScalarVolume, sigma_mm: [f64; 3]) -> Result<ScalarVolume> {
    if sigma_mm.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
        return Err(Error::Input(format!(
            "blur standard deviations must be non-negative, got {sigma_mm:?}"
        )));
    }
    if sigma_mm.iter().all(|&s| s == 0.0) {
        return Ok(vol.clone());
    }
    let (lo, hi) = vol
        .data
        .iter()
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));

    let dims = vol.grid.dims;
    let mut data: Vec<f64> = vol.data.iter().map(|&v| v as f64).collect();
    for axis in 0..3 {
        let sigma = sigma_mm[axis] / vol.grid.spacing[axis];
        if sigma == 0.0 {
            continue;
        }
        let kernel = gaussian_kernel(sigma);
        data = convolve_axis(&data, dims, axis, &kernel);
    }

    let out = data
        .into_iter()
        .map(|v| (v as f32).clamp(lo, hi))
        .collect();
    Ok(ScalarVolume {
        grid: vol.grid.clone(),
        data: out,
    })
}

fn convolve_axis(input: &[f64], dims: [usize; 3], axis: usize, kernel: &[f64]) -> Vec<f64> {
    let [nx, ny, nz] = dims;
    let radius = (kernel.len() / 2) as i64;
    let mut out = vec![0.0; input.len()];
    out.par_chunks_mut(nx).enumerate().for_each(|(row, out_row)| {
        let (j, k) = (row % ny, row / ny);
        match axis {
            0 => {
                let in_row = &input[row * nx..(row + 1) * nx];
                for (i, o) in out_row.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (t, w) in kernel.iter().enumerate() {
                        acc += w * in_row[reflect(i as i64 + t as i64 - radius, nx)];
                    }
                    *o = acc;
                }
            }
            _ => {
                // Accumulate whole shifted rows so memory is read contiguously.
                for (t, w) in kernel.iter().enumerate() {
                    let src_row = if axis == 1 {
                        reflect(j as i64 + t as i64 - radius, ny) + ny * k
                    } else {
                        j + ny * reflect(k as i64 + t as i64 - radius, nz)
                    };
                    let in_row = &input[src_row * nx..(src_row + 1) * nx];
                    for (o, &v) in out_row.iter_mut().zip(in_row) {
                        *o += w * v;
                    }
                }
            }
        }
    });
    out
}
