//! Segmentation scoring and post-processing.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::volume::{largest_component, BinaryMask, Connectivity, ScalarVolume};

/// Dice coefficient `2|A∩B| / (|A| + |B|)`. Two empty masks score 1.
pub fn dice(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    a.grid.ensure_matches(&b.grid, "dice")?;
    let (mut both, mut na, mut nb) = (0usize, 0usize, 0usize);
    for (&x, &y) in a.data.iter().zip(&b.data) {
        na += x as usize;
        nb += y as usize;
        both += (x && y) as usize;
    }
    if na + nb == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * both as f64 / (na + nb) as f64)
}

/// Voxels with value `>= threshold`.
pub fn threshold_mask(vol: &ScalarVolume, threshold: f32) -> BinaryMask {
    vol.map(|v| v >= threshold)
}

/// Thresholds a soft prediction and optionally keeps its largest component.
pub fn postprocess(vol: &ScalarVolume, threshold: f32, largest: Option<Connectivity>) -> BinaryMask {
    let m = threshold_mask(vol, threshold);
    match largest {
        Some(c) => largest_component(&m, c),
        None => m,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoreSummary {
    pub median: f64,
    pub iqr: f64,
    pub n: usize,
}

/// Quantile by linear interpolation between order statistics at rank
/// `(n − 1)·q` (the usual "type 7" definition). `sorted` must be ascending.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Median and interquartile range of a set of scores.
pub fn median_iqr(scores: &[f64]) -> Result<ScoreSummary> {
    if scores.is_empty() {
        return Err(Error::Input("no scores to summarize".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Input("scores contain NaN".into()));
    }
    let mut s = scores.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(ScoreSummary {
        median: quantile(&s, 0.5),
        iqr: quantile(&s, 0.75) - quantile(&s, 0.25),
        n: s.len(),
    })
}
