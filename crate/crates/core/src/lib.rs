//! Synthesis of postoperative brain-resection training instances.
//!
//! Given a preoperative T1-weighted MRI and a whole-brain parcellation, the
//! simulator carves a randomly shaped cavity into one cortical hemisphere,
//! fills it with a CSF-like texture fitted to the ventricles and returns the
//! resected image together with its cavity label.
//!
//! The crate is organized bottom-up:
//!
//! - [`noise`]: 3D simplex noise and its multi-octave sum.
//! - [`mesh`]: icosphere construction, radial perturbation and placement.
//! - [`volume`]: the voxel grid types and raster operations.
//! - [`parcellation`]: anatomical masks derived from a label map.
//! - [`simulate`]: the end-to-end resection pipeline.
//! - [`evaluate`]: Dice scores, thresholding and median/IQR summaries.
//! - [`io`]: NIfTI-1 volumes, TOML configuration and CSV manifests.
//! - [`cli`]: the `resectsim` command-line front end.

pub mod cli;
pub mod error;
pub mod evaluate;
pub mod io;
pub mod mesh;
pub mod noise;
pub mod parcellation;
pub mod rng;
pub mod simulate;
pub mod volume;

pub use error::{Error, Result};
pub use mesh::TriangleMesh;
pub use noise::NoiseParams;
pub use parcellation::{Hemisphere, ParcellationScheme};
pub use simulate::{ResectionParams, Shape, SimulationResult, Simulator};
pub use volume::{BinaryMask, Grid, LabelVolume, ScalarVolume, Volume};
