use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::CounterRng;

use super::{BinaryMask, Grid, Region, ScalarVolume};

/// Voxelwise logical AND.
pub fn hadamard(a: &BinaryMask, b: &BinaryMask) -> Result<BinaryMask> {
    a.grid.ensure_matches(&b.grid, "hadamard")?;
    Ok(BinaryMask {
        grid: a.grid.clone(),
        data: a.data.iter().zip(&b.data).map(|(&x, &y)| x && y).collect(),
    })
}

pub fn complement(a: &BinaryMask) -> BinaryMask {
    a.map(|b| !b)
}

/// Uniformly chosen positive voxel, as `(i, j, k)`.
pub fn sample_positive_voxel<R: Rng + ?Sized>(mask: &BinaryMask, rng: &mut R) -> Result<[usize; 3]> {
    let count = mask.count();
    if count == 0 {
        return Err(Error::NoSeedVoxels);
    }
    let target = rng.random_range(0..count);
    let idx = mask
        .data
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .nth(target)
        .map(|(i, _)| i)
        .expect("target is below the positive count");
    Ok(mask.grid.coords(idx))
}

/// Mean and population standard deviation of `vol` over the mask.
pub fn masked_stats(vol: &ScalarVolume, mask: &BinaryMask) -> Result<(f64, f64)> {
    vol.grid.ensure_matches(&mask.grid, "masked_stats")?;
    // Welford's update, in scan order.
    let mut n = 0u64;
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    for (&v, _) in vol.data.iter().zip(&mask.data).filter(|(_, &m)| m) {
        n += 1;
        let x = v as f64;
        let d = x - mean;
        mean += d / n as f64;
        m2 += d * (x - mean);
    }
    if n == 0 {
        return Err(Error::Input("masked_stats: mask is empty".into()));
    }
    Ok((mean, (m2 / n as f64).sqrt()))
}

/// Image of i.i.d. normal intensities `N(mean, stddev²)`. Voxel at linear
/// index `n` takes `mean + stddev · rng.standard_normal(n)`.
pub fn synth_gaussian_image(grid: &Grid, mean: f64, stddev: f64, rng: &CounterRng) -> Result<ScalarVolume> {
    synth_gaussian_region(grid, &Region::full(grid.dims), mean, stddev, rng)
}

/// The `region` sub-box of [`synth_gaussian_image`], bit-identical to
/// cropping the full image.
pub fn synth_gaussian_region(
    grid: &Grid,
    region: &Region,
    mean: f64,
    stddev: f64,
    rng: &CounterRng,
) -> Result<ScalarVolume> {
    if !(stddev >= 0.0 && stddev.is_finite() && mean.is_finite()) {
        return Err(Error::Input(format!(
            "normal image needs finite mean and non-negative stddev, got ({mean}, {stddev})"
        )));
    }
    let sub = grid.sub_grid(region);
    let [ex, ey, _] = sub.dims;
    let mut data = vec![0f32; sub.len()];
    if stddev == 0.0 {
        data.fill(mean as f32);
    } else {
        data.par_chunks_mut(ex).enumerate().for_each(|(row, out)| {
            let (j, k) = (region.lo[1] + row % ey, region.lo[2] + row / ey);
            let base = grid.index(region.lo[0], j, k) as u64;
            for (i, o) in out.iter_mut().enumerate() {
                *o = (mean + stddev * rng.standard_normal(base + i as u64)) as f32;
            }
        });
    }
    Ok(ScalarVolume { grid: sub, data })
}

/// Convex combination `alpha·csf + (1 − alpha)·pre`, voxelwise.
///
/// `alpha = 0` returns `pre` and `alpha = 1` returns `csf` exactly; other
/// values are clamped to the envelope of the two sources.
pub fn blend(pre: &ScalarVolume, csf: &ScalarVolume, alpha: &ScalarVolume) -> Result<ScalarVolume> {
    pre.grid.ensure_matches(&csf.grid, "blend sources")?;
    pre.grid.ensure_matches(&alpha.grid, "blend alpha")?;
    if let Some(bad) = alpha.data.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::Input(format!("alpha value {bad} outside [0, 1]")));
    }
    let data = pre
        .data
        .par_iter()
        .zip(csf.data.par_iter())
        .zip(alpha.data.par_iter())
        .map(|((&p, &c), &a)| blend_voxel(p, c, a))
        .collect();
    Ok(ScalarVolume {
        grid: pre.grid.clone(),
        data,
    })
}

#[inline]
pub(crate) fn blend_voxel(pre: f32, csf: f32, alpha: f32) -> f32 {
    if alpha == 0.0 {
        pre
    } else if alpha == 1.0 {
        csf
    } else {
        let a = alpha as f64;
        let v = (a * csf as f64 + (1.0 - a) * pre as f64) as f32;
        v.clamp(pre.min(csf), pre.max(csf))
    }
}
