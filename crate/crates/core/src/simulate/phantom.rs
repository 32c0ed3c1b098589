//! Procedural brain phantom.
//!
//! A T1-like image and matching parcellation built from ellipsoids: two
//! hemispheres with a cortical rim, lateral ventricles, brainstem,
//! cerebellum and an unassigned midline strip. Labels follow
//! [`ParcellationScheme::phantom`](crate::ParcellationScheme::phantom).

use rayon::prelude::*;

use crate::rng::CounterRng;
use crate::volume::{Grid, LabelVolume, ScalarVolume, IDENTITY3};

/// Size of a 1 mm MNI-like volume.
pub const STANDARD_DIMS: [usize; 3] = [193, 229, 193];

pub const LEFT_WM: u32 = 1;
pub const RIGHT_WM: u32 = 2;
pub const LEFT_GM: u32 = 3;
pub const RIGHT_GM: u32 = 4;
pub const BRAINSTEM: u32 = 5;
pub const CEREBELLUM: u32 = 6;
pub const VENTRICLE: u32 = 7;
pub const MIDLINE: u32 = 8;

/// Mean intensity by label, indexed by label value.
const INTENSITY: [f32; 9] = [0.0, 110.0, 110.0, 75.0, 75.0, 100.0, 85.0, 30.0, 45.0];
const NOISE_STD: f64 = 4.0;

/// Rim of the brain ellipsoid that counts as cortex, in normalized radius.
const GM_RIM: f64 = 0.12;

struct Blob {
    centre: [f64; 3],
    axes: [f64; 3],
}

impl Blob {
    /// Squared normalized radius; < 1 inside.
    fn rho2(&self, u: [f64; 3]) -> f64 {
        (0..3).map(|a| ((u[a] - self.centre[a]) / self.axes[a]).powi(2)).sum()
    }
}

// Shapes in coordinates normalized to [-1, 1] over the grid.
const BRAIN: Blob = Blob {
    centre: [0.0, 0.02, 0.1],
    axes: [0.74, 0.8, 0.64],
};
const CEREBELLUM_BLOB: Blob = Blob {
    centre: [0.0, -0.52, -0.38],
    axes: [0.46, 0.24, 0.2],
};
const BRAINSTEM_BLOB: Blob = Blob {
    centre: [0.0, -0.18, -0.42],
    axes: [0.12, 0.12, 0.36],
};
const VENTRICLES: [Blob; 2] = [
    Blob {
        centre: [-0.12, 0.05, 0.16],
        axes: [0.06, 0.3, 0.1],
    },
    Blob {
        centre: [0.12, 0.05, 0.16],
        axes: [0.06, 0.3, 0.1],
    },
];

fn label_at(u: [f64; 3], midline_half_width: f64) -> u32 {
    if BRAINSTEM_BLOB.rho2(u) < 1.0 {
        return BRAINSTEM;
    }
    if CEREBELLUM_BLOB.rho2(u) < 1.0 {
        return CEREBELLUM;
    }
    let rho2 = BRAIN.rho2(u);
    if rho2 >= 1.0 {
        return 0;
    }
    if VENTRICLES.iter().any(|v| v.rho2(u) < 1.0) {
        return VENTRICLE;
    }
    if u[0].abs() < midline_half_width {
        return MIDLINE;
    }
    let left = u[0] < 0.0;
    let cortex = rho2.sqrt() > 1.0 - GM_RIM;
    match (left, cortex) {
        (true, true) => LEFT_GM,
        (false, true) => RIGHT_GM,
        (true, false) => LEFT_WM,
        (false, false) => RIGHT_WM,
    }
}

/// Phantom on a 1 mm grid of `dims` voxels centred on the origin. Image
/// noise is drawn from `seed`.
pub fn phantom(dims: [usize; 3], seed: u64) -> (ScalarVolume, LabelVolume) {
    let origin = [0, 1, 2].map(|a| -((dims[a] as f64 - 1.0) / 2.0));
    let grid = Grid::new(dims, [1.0; 3], origin, IDENTITY3).expect("phantom grid is valid");
    let half = dims.map(|d| (d as f64 / 2.0).max(1.0));
    // About one voxel either side of the mid-sagittal plane.
    let midline = 1.0 / half[0];

    let [nx, ny, _] = dims;
    let mut labels = vec![0u32; grid.len()];
    labels.par_chunks_mut(nx).enumerate().for_each(|(row, out)| {
        let (j, k) = (row % ny, row / ny);
        for (i, o) in out.iter_mut().enumerate() {
            let p = grid.index_to_physical([i as f64, j as f64, k as f64]);
            let u = [p[0] / half[0], p[1] / half[1], p[2] / half[2]];
            *o = label_at(u, midline);
        }
    });

    let noise = CounterRng::new(seed);
    let image = labels
        .par_iter()
        .enumerate()
        .map(|(n, &l)| {
            if l == 0 {
                0.0
            } else {
                (INTENSITY[l as usize] as f64 + NOISE_STD * noise.standard_normal(n as u64)) as f32
            }
        })
        .collect();

    (
        ScalarVolume {
            grid: grid.clone(),
            data: image,
        },
        LabelVolume { grid, data: labels },
    )
}
