//! End-to-end resection simulation.
//!
//! A run draws its parameters, builds the cavity surface, centres it on a
//! random cortical gray-matter voxel of a random hemisphere, rasterizes it,
//! restricts it to the resectable part of that hemisphere and finally fills
//! it with CSF-like texture blended through a blurred copy of the label.
//!
//! Everything after rasterization only touches a box around the cavity. The
//! box margins are the dependency reach of each step (smoothing radii, blur
//! kernel half-width), so results are bit-identical to whole-volume
//! processing.

use std::f64::consts::TAU;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{
    box_mesh, build_icosphere, perturb_radially, semiaxes_from_volume, transform_mesh, EllipsoidAxes, EulerAngles,
    RadiusFormula, TriangleMesh, MAX_FREQUENCY,
};
use crate::noise::NoiseParams;
use crate::parcellation::{
    default_smoothing, resectable_mask_within, ventricle_mask, Hemisphere,
    ParcellationScheme, SmoothingStep,
};
use crate::rng::{param_rng, CounterRng, ParamRng};
use crate::volume::{
    blend, gaussian_blur, masked_stats, synth_gaussian_region, voxelize, BinaryMask, LabelVolume, Region,
    ScalarVolume, BLUR_TRUNCATE, MAX_MORPH_RADIUS,
};

pub mod phantom;

/// Cavity shape family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    /// Rotated ellipsoid with a noise-perturbed surface.
    #[default]
    Noisy,
    /// Rotated smooth ellipsoid.
    Ellipsoid,
    /// Axis-aligned box, never rotated.
    Cuboid,
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Shape::Noisy => "noisy",
            Shape::Ellipsoid => "ellipsoid",
            Shape::Cuboid => "cuboid",
        })
    }
}

impl std::str::FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noisy" => Ok(Shape::Noisy),
            "ellipsoid" => Ok(Shape::Ellipsoid),
            "cuboid" => Ok(Shape::Cuboid),
            other => Err(Error::config("shape", format!("expected noisy, ellipsoid or cuboid, got {other:?}"))),
        }
    }
}

/// Sampling ranges for the surface noise. Octaves and persistence are fixed;
/// scale and shift are drawn per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseRanges {
    pub octaves: u32,
    pub persistence: f64,
    pub scale_range: [f64; 2],
    pub shift_range: [f64; 2],
}

impl Default for NoiseRanges {
    fn default() -> Self {
        Self {
            octaves: 4,
            persistence: 0.5,
            scale_range: [0.2, 1.0],
            shift_range: [0.0, 1000.0],
        }
    }
}

/// Free parameters of the simulation, as ranges to sample from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResectionParams {
    pub shape: Shape,
    /// Cavity volume (mm³), sampled log-uniformly.
    pub volume_range: [f64; 2],
    /// Semiaxis ratio λ ≥ 1.
    pub lambda_range: [f64; 2],
    /// Rotation angle range (radians), used independently for each axis.
    pub rotation_range: [f64; 2],
    pub noise: NoiseRanges,
    /// Alpha-blur standard deviation (mm), drawn independently per axis.
    pub sigma_range: [f64; 2],
    pub icosphere_frequency: u32,
    /// Multiplier on the [-1, 1] noise displacement of the unit sphere.
    pub amplitude: f64,
    pub radius_formula: RadiusFormula,
    /// Morphological smoothing of the resectable mask.
    pub smoothing: Vec<SmoothingStep>,
    /// Placement attempts before giving up on an empty label.
    pub max_attempts: usize,
}

impl Default for ResectionParams {
    fn default() -> Self {
        Self {
            shape: Shape::Noisy,
            volume_range: [500.0, 50_000.0],
            lambda_range: [1.0, 2.0],
            rotation_range: [0.0, TAU],
            noise: NoiseRanges::default(),
            sigma_range: [0.5, 2.0],
            icosphere_frequency: 3,
            amplitude: 0.5,
            radius_formula: RadiusFormula::Verbatim,
            smoothing: default_smoothing(),
            max_attempts: 10,
        }
    }
}

fn check_range(key: &str, r: [f64; 2]) -> Result<()> {
    if !(r[0].is_finite() && r[1].is_finite()) {
        return Err(Error::config(key, "bounds must be finite"));
    }
    if r[0] > r[1] {
        return Err(Error::config(key, format!("minimum {} exceeds maximum {}", r[0], r[1])));
    }
    Ok(())
}

impl ResectionParams {
    pub fn validate(&self) -> Result<()> {
        check_range("volume_range", self.volume_range)?;
        if self.volume_range[0] <= 0.0 {
            return Err(Error::config("volume_range", "volumes must be positive"));
        }
        check_range("lambda_range", self.lambda_range)?;
        if self.lambda_range[0] < 1.0 {
            return Err(Error::config("lambda_range", "λ must be at least 1"));
        }
        check_range("rotation_range", self.rotation_range)?;
        if self.rotation_range[0] < 0.0 || self.rotation_range[1] > TAU {
            return Err(Error::config("rotation_range", "angles must lie in [0, 2π]"));
        }
        check_range("sigma_range", self.sigma_range)?;
        if self.sigma_range[0] < 0.0 {
            return Err(Error::config("sigma_range", "standard deviations must be non-negative"));
        }
        check_range("noise.scale_range", self.noise.scale_range)?;
        if self.noise.scale_range[0] <= 0.0 {
            return Err(Error::config("noise.scale_range", "scale must be positive"));
        }
        check_range("noise.shift_range", self.noise.shift_range)?;
        NoiseParams {
            octaves: self.noise.octaves,
            persistence: self.noise.persistence,
            scale: self.noise.scale_range[0],
            shift: [self.noise.shift_range[0]; 3],
        }
        .validate()?;
        if self.icosphere_frequency > MAX_FREQUENCY {
            return Err(Error::config(
                "icosphere_frequency",
                format!("must be at most {MAX_FREQUENCY}"),
            ));
        }
        if !(0.0..=1.0).contains(&self.amplitude) {
            return Err(Error::config("amplitude", "must lie in [0, 1]"));
        }
        for (i, step) in self.smoothing.iter().enumerate() {
            if step.radius == 0 || step.radius > MAX_MORPH_RADIUS {
                return Err(Error::config(
                    format!("smoothing[{i}].radius"),
                    format!("must be in 1..={}", MAX_MORPH_RADIUS),
                ));
            }
        }
        if self.max_attempts == 0 {
            return Err(Error::config("max_attempts", "must be at least 1"));
        }
        Ok(())
    }
}

/// One draw from [`ResectionParams`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizedParams {
    pub hemisphere: Hemisphere,
    pub volume: f64,
    pub lambda: f64,
    pub rotation: EulerAngles,
    pub noise: NoiseParams,
    pub sigma: [f64; 3],
    /// Key of the counter-based generator for the CSF texture.
    pub texture_key: u64,
}

fn uniform(rng: &mut ParamRng, r: [f64; 2]) -> f64 {
    let u: f64 = rng.random();
    if r[0] == r[1] {
        r[0]
    } else {
        r[0] + (r[1] - r[0]) * u
    }
}

fn log_uniform(rng: &mut ParamRng, r: [f64; 2]) -> f64 {
    let u: f64 = rng.random();
    if r[0] == r[1] {
        r[0]
    } else {
        (r[0].ln() + (r[1].ln() - r[0].ln()) * u).exp().clamp(r[0], r[1])
    }
}

fn sample_rotation(rng: &mut ParamRng, r: [f64; 2]) -> EulerAngles {
    let x = uniform(rng, r);
    let y = uniform(rng, r);
    let z = uniform(rng, r);
    EulerAngles { x, y, z }
}

/// Draws a parameter set. The draw order is fixed: hemisphere, volume, λ,
/// rotation x/y/z, noise scale, noise shift x/y/z, blur σ x/y/z, texture key.
/// Every draw consumes the stream whether or not the shape uses it.
pub fn sample_params(ranges: &ResectionParams, rng: &mut ParamRng) -> RealizedParams {
    let hemisphere = if rng.random_range(0..2u32) == 0 {
        Hemisphere::Left
    } else {
        Hemisphere::Right
    };
    let volume = log_uniform(rng, ranges.volume_range);
    let lambda = uniform(rng, ranges.lambda_range);
    let rotation = sample_rotation(rng, ranges.rotation_range);
    let scale = uniform(rng, ranges.noise.scale_range);
    let shift = [
        uniform(rng, ranges.noise.shift_range),
        uniform(rng, ranges.noise.shift_range),
        uniform(rng, ranges.noise.shift_range),
    ];
    let sigma = [
        uniform(rng, ranges.sigma_range),
        uniform(rng, ranges.sigma_range),
        uniform(rng, ranges.sigma_range),
    ];
    let texture_key = rng.random();
    RealizedParams {
        hemisphere,
        volume,
        lambda,
        rotation,
        noise: NoiseParams {
            octaves: ranges.noise.octaves,
            persistence: ranges.noise.persistence,
            scale,
            shift,
        },
        sigma,
        texture_key,
    }
}

/// Provenance of one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationMeta {
    pub seed: u64,
    pub shape: Shape,
    pub hemisphere: Hemisphere,
    /// Voxel the cavity is centred on.
    pub seed_voxel: [usize; 3],
    pub seed_point_mm: [f64; 3],
    pub volume_mm3: f64,
    pub lambda: f64,
    pub semiaxes_mm: EllipsoidAxes,
    pub radius_formula: RadiusFormula,
    /// Rotation actually applied (identity for cuboids).
    pub rotation: EulerAngles,
    pub icosphere_frequency: u32,
    /// Displacement multiplier actually applied (0 unless `noisy`).
    pub noise_amplitude: f64,
    pub noise: NoiseParams,
    pub blur_sigma_mm: [f64; 3],
    pub csf_mean: f64,
    pub csf_std: f64,
    pub texture_key: u64,
    pub attempts: usize,
    /// Voxels inside the cavity surface before the resectable restriction.
    pub cavity_voxels: usize,
    pub label_voxels: usize,
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub x_sim: ScalarVolume,
    pub y_sim: BinaryMask,
    /// Rasterized cavity surface before the resectable restriction.
    pub cavity: BinaryMask,
    /// Cavity surface in physical coordinates.
    pub mesh: TriangleMesh,
    pub meta: SimulationMeta,
}

/// Per-subject state shared by repeated simulations: the inputs, the CSF
/// intensity model and the cortical seed candidates of each hemisphere.
pub struct Simulator<'a> {
    x_pre: &'a ScalarVolume,
    labels: &'a LabelVolume,
    scheme: &'a ParcellationScheme,
    csf_mean: f64,
    csf_std: f64,
    /// Linear indices of cortical gray matter, left then right, in scan order.
    gm: [Vec<u32>; 2],
}

impl<'a> Simulator<'a> {
    pub fn new(x_pre: &'a ScalarVolume, labels: &'a LabelVolume, scheme: &'a ParcellationScheme) -> Result<Self> {
        x_pre.grid.ensure_matches(&labels.grid, "image and parcellation")?;
        if x_pre.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("image contains non-finite values".into()));
        }
        let ventricles = ventricle_mask(labels, scheme)?;
        let (csf_mean, csf_std) = masked_stats(x_pre, &ventricles)?;
        let positives = |h: Hemisphere| -> Vec<u32> {
            let set = scheme.cortical_gm(h);
            let mut last: Option<(u32, bool)> = None;
            labels
                .data
                .iter()
                .enumerate()
                .filter(|(_, &l)| match last {
                    Some((prev, hit)) if prev == l => hit,
                    _ => {
                        let hit = set.contains(&l);
                        last = Some((l, hit));
                        hit
                    }
                })
                .map(|(i, _)| i as u32)
                .collect()
        };
        let gm = [positives(Hemisphere::Left), positives(Hemisphere::Right)];
        Ok(Self {
            x_pre,
            labels,
            scheme,
            csf_mean,
            csf_std,
            gm,
        })
    }

    pub fn csf_stats(&self) -> (f64, f64) {
        (self.csf_mean, self.csf_std)
    }

    /// Runs one simulation. `(inputs, params, seed)` determine the output bit
    /// for bit.
    pub fn simulate(&self, params: &ResectionParams, seed: u64) -> Result<SimulationResult> {
        params.validate()?;
        let grid = &self.x_pre.grid;
        let mut rng = param_rng(seed);
        let realized = sample_params(params, &mut rng);
        let h = realized.hemisphere;

        let candidates = &self.gm[h as usize];
        if candidates.is_empty() {
            if self.scheme.cortical_gm(h).is_empty() {
                return Err(Error::config(
                    format!("{h}_cortical_gm"),
                    "the scheme lists no cortical gray-matter labels for this hemisphere",
                ));
            }
            return Err(Error::NoSeedVoxels);
        }

        let axes = semiaxes_from_volume(realized.volume, realized.lambda, params.radius_formula)?;
        let amplitude = match params.shape {
            Shape::Noisy => params.amplitude,
            Shape::Ellipsoid | Shape::Cuboid => 0.0,
        };
        let model = match params.shape {
            Shape::Cuboid => box_mesh([axes.r1, axes.r2, axes.r3]),
            Shape::Noisy | Shape::Ellipsoid => {
                let sphere = build_icosphere(params.icosphere_frequency)?;
                perturb_radially(&sphere, &realized.noise, amplitude)
            }
        };

        let mut rotation = realized.rotation;
        let mut attempt = 0;
        let placed = loop {
            attempt += 1;
            if attempt > 1 {
                rotation = sample_rotation(&mut rng, params.rotation_range);
            }
            let seed_idx = candidates[rng.random_range(0..candidates.len())] as usize;
            let seed_voxel = grid.coords(seed_idx);
            let centre = grid.index_to_physical([seed_voxel[0] as f64, seed_voxel[1] as f64, seed_voxel[2] as f64]);
            let mesh = match params.shape {
                Shape::Cuboid => transform_mesh(&model, &EulerAngles::IDENTITY, &EllipsoidAxes::UNIT, centre)?,
                Shape::Noisy | Shape::Ellipsoid => transform_mesh(&model, &rotation, &axes, centre)?,
            };
            let cavity = voxelize(&mesh, grid)?;
            if let Some(bbox) = cavity.bounding_box() {
                let resectable = resectable_mask_within(self.labels, self.scheme, h, &params.smoothing, &bbox)?;
                let cavity_crop = cavity.crop(&bbox);
                let label_crop = BinaryMask {
                    grid: cavity_crop.grid.clone(),
                    data: cavity_crop.data.iter().zip(&resectable.data).map(|(&a, &b)| a && b).collect(),
                };
                if !label_crop.is_all_false() {
                    break (seed_voxel, centre, mesh, cavity, label_crop, bbox);
                }
            }
            log::debug!("attempt {attempt}: empty cavity label at voxel {seed_voxel:?}");
            if attempt >= params.max_attempts {
                return Err(Error::PlacementFailed(attempt));
            }
        };
        let (seed_voxel, centre, mesh, cavity, label_crop, bbox) = placed;

        let mut y_sim = BinaryMask::empty(grid.clone());
        y_sim.paste(&label_crop, bbox.lo);
        let label_voxels = label_crop.count();

        let x_sim = self.texture(&y_sim, realized.sigma, realized.texture_key)?;

        let meta = SimulationMeta {
            seed,
            shape: params.shape,
            hemisphere: h,
            seed_voxel,
            seed_point_mm: centre,
            volume_mm3: realized.volume,
            lambda: realized.lambda,
            semiaxes_mm: axes,
            radius_formula: params.radius_formula,
            rotation: match params.shape {
                Shape::Cuboid => EulerAngles::IDENTITY,
                _ => rotation,
            },
            icosphere_frequency: params.icosphere_frequency,
            noise_amplitude: amplitude,
            noise: realized.noise,
            blur_sigma_mm: realized.sigma,
            csf_mean: self.csf_mean,
            csf_std: self.csf_std,
            texture_key: realized.texture_key,
            attempts: attempt,
            cavity_voxels: cavity.count(),
            label_voxels,
        };
        Ok(SimulationResult {
            x_sim,
            y_sim,
            cavity,
            mesh,
            meta,
        })
    }

    /// Blends CSF texture into the image through the blurred label, working
    /// only on the box where the blurred label can be nonzero.
    fn texture(&self, y_sim: &BinaryMask, sigma: [f64; 3], texture_key: u64) -> Result<ScalarVolume> {
        let grid = &self.x_pre.grid;
        let mut x_sim = self.x_pre.clone();
        let Some(bbox) = y_sim.bounding_box() else {
            return Ok(x_sim);
        };
        let margin = (0..3)
            .map(|a| {
                let s = sigma[a] / grid.spacing[a];
                if s > 0.0 {
                    (BLUR_TRUNCATE * s).ceil() as usize
                } else {
                    0
                }
            })
            .max()
            .unwrap_or(0);
        let region = bbox.dilated(margin, grid.dims);

        let label = y_sim.crop(&region).map(|b| if b { 1.0f32 } else { 0.0 });
        let mut alpha = gaussian_blur(&label, sigma)?;
        alpha.data.iter_mut().for_each(|a| *a = a.clamp(0.0, 1.0));
        let csf = synth_gaussian_region(grid, &region, self.csf_mean, self.csf_std, &CounterRng::new(texture_key))?;
        let pre = self.x_pre.crop(&region);
        let blended = blend(&pre, &csf, &alpha)?;
        x_sim.paste(&blended, region.lo);
        Ok(x_sim)
    }
}

/// One-shot convenience wrapper around [`Simulator`].
pub fn simulate_resection(
    x_pre: &ScalarVolume,
    labels: &LabelVolume,
    scheme: &ParcellationScheme,
    params: &ResectionParams,
    seed: u64,
) -> Result<SimulationResult> {
    Simulator::new(x_pre, labels, scheme)?.simulate(params, seed)
}

/// Box covering every voxel whose value can differ between `x_pre` and the
/// simulated image.
pub fn affected_region(result: &SimulationResult, grid_spacing: [f64; 3]) -> Option<Region> {
    let bbox = result.y_sim.bounding_box()?;
    let margin = (0..3)
        .map(|a| (BLUR_TRUNCATE * result.meta.blur_sigma_mm[a] / grid_spacing[a]).ceil() as usize)
        .max()
        .unwrap_or(0);
    Some(bbox.dilated(margin, result.y_sim.grid.dims))
}
