//! Voxel grids and raster operations on them.
//!
//! Data is stored x-fastest (NIfTI order): the voxel `(i, j, k)` lives at
//! linear index `i + nx·(j + ny·k)`, and its centre sits at continuous index
//! coordinates `(i, j, k)`.

mod blur;
mod components;
mod morphology;
mod ops;
mod voxelize;

pub use blur::{gaussian_blur, gaussian_kernel, TRUNCATE as BLUR_TRUNCATE};
pub use components::{largest_component, Connectivity};
pub use morphology::{dilate, erode, morphology, MorphOp, MAX_RADIUS as MAX_MORPH_RADIUS};
pub use ops::{blend, complement, hadamard, masked_stats, sample_positive_voxel, synth_gaussian_image, synth_gaussian_region};
pub use voxelize::voxelize;

use crate::error::{Error, Result};

/// Placement of a voxel array in millimetre space.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub dims: [usize; 3],
    /// Voxel size along each index axis (mm).
    pub spacing: [f64; 3],
    /// Physical position of voxel `(0, 0, 0)` (mm).
    pub origin: [f64; 3],
    /// Orthonormal matrix whose columns are the index axes in physical space.
    pub direction: [[f64; 3]; 3],
}

pub const IDENTITY3: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Tolerance used for orthonormality checks and grid comparisons.
pub const GRID_TOLERANCE: f64 = 1e-6;

impl Grid {
    pub fn new(
        dims: [usize; 3],
        spacing: [f64; 3],
        origin: [f64; 3],
        direction: [[f64; 3]; 3],
    ) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::Input(format!("grid dimensions must be positive, got {dims:?}")));
        }
        if spacing.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::Input(format!("grid spacing must be positive, got {spacing:?}")));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::Input("grid origin must be finite".into()));
        }
        for a in 0..3 {
            for b in 0..3 {
                let d: f64 = (0..3).map(|r| direction[r][a] * direction[r][b]).sum();
                let expected = if a == b { 1.0 } else { 0.0 };
                if (d - expected).abs() > GRID_TOLERANCE || !d.is_finite() {
                    return Err(Error::Input(format!(
                        "grid direction is not orthonormal: {direction:?}"
                    )));
                }
            }
        }
        Ok(Self {
            dims,
            spacing,
            origin,
            direction,
        })
    }

    /// Unit-spaced, axis-aligned grid with its first voxel at the origin.
    pub fn unit(dims: [usize; 3]) -> Self {
        Self::new(dims, [1.0; 3], [0.0; 3], IDENTITY3).expect("dimensions must be positive")
    }

    /// Splits a 4×4 voxel-to-world affine into spacing, direction and origin.
    pub fn from_affine(dims: [usize; 3], affine: &[[f64; 4]; 4]) -> Result<Self> {
        let mut spacing = [0.0; 3];
        let mut direction = [[0.0; 3]; 3];
        for c in 0..3 {
            let n = (0..3).map(|r| affine[r][c] * affine[r][c]).sum::<f64>().sqrt();
            if !(n > 0.0) {
                return Err(Error::Input("affine has a zero-length axis".into()));
            }
            spacing[c] = n;
            for r in 0..3 {
                direction[r][c] = affine[r][c] / n;
            }
        }
        let origin = [affine[0][3], affine[1][3], affine[2][3]];
        Self::new(dims, spacing, origin, direction)
    }

    pub fn affine(&self) -> [[f64; 4]; 4] {
        let mut a = [[0.0; 4]; 4];
        for r in 0..3 {
            for c in 0..3 {
                a[r][c] = self.direction[r][c] * self.spacing[c];
            }
            a[r][3] = self.origin[r];
        }
        a[3][3] = 1.0;
        a
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    /// Continuous index coordinates to physical millimetres.
    pub fn index_to_physical(&self, ijk: [f64; 3]) -> [f64; 3] {
        let mut p = self.origin;
        for (r, pr) in p.iter_mut().enumerate() {
            for c in 0..3 {
                *pr += self.direction[r][c] * self.spacing[c] * ijk[c];
            }
        }
        p
    }

    /// Physical millimetres to continuous index coordinates.
    pub fn physical_to_index(&self, p: [f64; 3]) -> [f64; 3] {
        let d = [p[0] - self.origin[0], p[1] - self.origin[1], p[2] - self.origin[2]];
        let mut ijk = [0.0; 3];
        for (c, v) in ijk.iter_mut().enumerate() {
            // The direction is orthonormal, so its inverse is its transpose.
            *v = (0..3).map(|r| self.direction[r][c] * d[r]).sum::<f64>() / self.spacing[c];
        }
        ijk
    }

    /// Same dimensions and an affine equal within [`GRID_TOLERANCE`].
    pub fn matches(&self, other: &Grid) -> bool {
        if self.dims != other.dims {
            return false;
        }
        let (a, b) = (self.affine(), other.affine());
        a.iter()
            .flatten()
            .zip(b.iter().flatten())
            .all(|(x, y)| (x - y).abs() <= GRID_TOLERANCE)
    }

    pub(crate) fn ensure_matches(&self, other: &Grid, what: &str) -> Result<()> {
        if self.matches(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: {:?} vs {:?}",
                self.dims, other.dims
            )))
        }
    }

    /// Grid of the sub-box `[lo, hi)` in index space.
    pub fn sub_grid(&self, region: &Region) -> Grid {
        let lo = [region.lo[0] as f64, region.lo[1] as f64, region.lo[2] as f64];
        Grid {
            dims: region.extent(),
            spacing: self.spacing,
            origin: self.index_to_physical(lo),
            direction: self.direction,
        }
    }
}

/// Half-open index box `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
}

impl Region {
    pub fn full(dims: [usize; 3]) -> Self {
        Self { lo: [0; 3], hi: dims }
    }

    pub fn extent(&self) -> [usize; 3] {
        [
            self.hi[0] - self.lo[0],
            self.hi[1] - self.lo[1],
            self.hi[2] - self.lo[2],
        ]
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|a| self.hi[a] <= self.lo[a])
    }

    /// Grows the box by `margin` voxels per side, clipped to `dims`.
    pub fn dilated(&self, margin: usize, dims: [usize; 3]) -> Self {
        let mut out = *self;
        for a in 0..3 {
            out.lo[a] = self.lo[a].saturating_sub(margin);
            out.hi[a] = (self.hi[a] + margin).min(dims[a]);
        }
        out
    }

    pub fn contains(&self, ijk: [usize; 3]) -> bool {
        (0..3).all(|a| ijk[a] >= self.lo[a] && ijk[a] < self.hi[a])
    }
}

/// A grid together with one value per voxel.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume<T> {
    pub grid: Grid,
    pub data: Vec<T>,
}

pub type ScalarVolume = Volume<f32>;
pub type BinaryMask = Volume<bool>;
pub type LabelVolume = Volume<u32>;

impl<T: Copy> Volume<T> {
    pub fn new(grid: Grid, data: Vec<T>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::Input(format!(
                "volume holds {} values but its grid has {} voxels",
                data.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, data })
    }

    pub fn filled(grid: Grid, value: T) -> Self {
        let data = vec![value; grid.len()];
        Self { grid, data }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.grid.dims
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.data[self.grid.index(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: T) {
        let idx = self.grid.index(i, j, k);
        self.data[idx] = v;
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Volume<U> {
        Volume {
            grid: self.grid.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Copies the sub-box `region` into a volume of its own.
    pub fn crop(&self, region: &Region) -> Volume<T> {
        let ext = region.extent();
        let mut data = Vec::with_capacity(ext[0] * ext[1] * ext[2]);
        for k in region.lo[2]..region.hi[2] {
            for j in region.lo[1]..region.hi[1] {
                let start = self.grid.index(region.lo[0], j, k);
                data.extend_from_slice(&self.data[start..start + ext[0]]);
            }
        }
        Volume {
            grid: self.grid.sub_grid(region),
            data,
        }
    }

    /// Writes `patch` back into the sub-box whose low corner is `lo`.
    pub fn paste(&mut self, patch: &Volume<T>, lo: [usize; 3]) {
        let ext = patch.dims();
        for k in 0..ext[2] {
            for j in 0..ext[1] {
                let src = patch.grid.index(0, j, k);
                let dst = self.grid.index(lo[0], lo[1] + j, lo[2] + k);
                self.data[dst..dst + ext[0]].copy_from_slice(&patch.data[src..src + ext[0]]);
            }
        }
    }
}

impl BinaryMask {
    pub fn empty(grid: Grid) -> Self {
        Self::filled(grid, false)
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_all_false(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    /// Tight bounding box of the positive voxels, or `None` when empty.
    pub fn bounding_box(&self) -> Option<Region> {
        let [nx, ny, _] = self.grid.dims;
        let mut lo = [usize::MAX; 3];
        let mut hi = [0usize; 3];
        let mut any = false;
        for (row_idx, row) in self.data.chunks_exact(nx).enumerate() {
            let first = match row.iter().position(|&b| b) {
                Some(p) => p,
                None => continue,
            };
            let last = row.iter().rposition(|&b| b).unwrap_or(first);
            let (j, k) = (row_idx % ny, row_idx / ny);
            any = true;
            lo[0] = lo[0].min(first);
            hi[0] = hi[0].max(last + 1);
            lo[1] = lo[1].min(j);
            hi[1] = hi[1].max(j + 1);
            lo[2] = lo[2].min(k);
            hi[2] = hi[2].max(k + 1);
        }
        any.then_some(Region { lo, hi })
    }

    /// Converts to 0/1 bytes.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|&b| b as u8).collect()
    }
}
