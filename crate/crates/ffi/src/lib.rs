//! C interface to the resection simulator.
//!
//! All objects are opaque handles created and destroyed by this library.
//! Every fallible function returns an [`RsStatus`]; on failure a description
//! is available from [`rs_last_error_message`] on the same thread.
//!
//! Arrays are in NIfTI voxel order: `x` varies fastest, so voxel `(i, j, k)`
//! of a `dims = {nx, ny, nz}` array sits at `i + nx * (j + ny * k)`.
//! Affines are 4×4 row-major voxel-to-millimetre matrices.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use resectsim::io::parse_config;
use resectsim::simulate::SimulationResult;
use resectsim::{Error, Grid, LabelVolume, ParcellationScheme, ResectionParams, ScalarVolume, Shape, Simulator};

/// Outcome of a call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A scalar argument or string was malformed.
    InvalidArgument = 2,
    /// A configuration value is invalid; the message names the key.
    ConfigError = 3,
    /// The input volumes are unusable (no gray matter, no ventricles, ...).
    InputError = 4,
    /// Image and parcellation grids differ.
    GridMismatch = 5,
    /// A valid request failed while running, e.g. cavity placement.
    RuntimeError = 6,
    /// An internal panic was caught.
    Panic = 7,
}

/// Simulation parameters and label scheme.
pub struct RsConfig {
    params: ResectionParams,
    scheme: ParcellationScheme,
}

/// Subject inputs with cached per-subject statistics, for repeated draws.
pub struct RsSimulator {
    // Borrows the boxed inputs below, so it must be dropped first.
    sim: Option<Simulator<'static>>,
    image: *mut ScalarVolume,
    labels: *mut LabelVolume,
    scheme: *mut ParcellationScheme,
}

/// Output of one simulation.
pub struct RsResult {
    image: Vec<f32>,
    label: Vec<u8>,
    meta_json: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> RsStatus {
    match e {
        Error::Config { .. } => RsStatus::ConfigError,
        Error::GridMismatch(_) => RsStatus::GridMismatch,
        Error::PlacementFailed(_) | Error::Write { .. } => RsStatus::RuntimeError,
        _ => RsStatus::InputError,
    }
}

struct Failure(RsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            RsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            RsStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(RsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(RsStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn read_affine(p: *const f64, what: &str) -> Result<[[f64; 4]; 4], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = std::slice::from_raw_parts(p, 16);
    let mut m = [[0.0; 4]; 4];
    for r in 0..4 {
        m[r].copy_from_slice(&s[4 * r..4 * r + 4]);
    }
    Ok(m)
}

unsafe fn read_volumes(
    image: *const f32,
    image_affine: *const f64,
    labels: *const u32,
    labels_affine: *const f64,
    dims: *const usize,
) -> Result<(ScalarVolume, LabelVolume), Failure> {
    if image.is_null() {
        return Err(null("image"));
    }
    if labels.is_null() {
        return Err(null("labels"));
    }
    if dims.is_null() {
        return Err(null("dims"));
    }
    let d = std::slice::from_raw_parts(dims, 3);
    let dims = [d[0], d[1], d[2]];
    let n = dims
        .iter()
        .try_fold(1usize, |acc, &x| acc.checked_mul(x))
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure(RsStatus::InvalidArgument, format!("invalid dims {dims:?}")))?;
    let image_grid = Grid::from_affine(dims, &read_affine(image_affine, "image_affine")?)?;
    let labels_grid = Grid::from_affine(dims, &read_affine(labels_affine, "labels_affine")?)?;
    if !image_grid.matches(&labels_grid) {
        return Err(Failure(
            RsStatus::GridMismatch,
            "image and parcellation affines differ by more than 1e-6".into(),
        ));
    }
    let image = ScalarVolume::new(image_grid, std::slice::from_raw_parts(image, n).to_vec())?;
    let labels = LabelVolume::new(labels_grid, std::slice::from_raw_parts(labels, n).to_vec())?;
    Ok((image, labels))
}

fn into_result(r: SimulationResult) -> RsResult {
    let meta = serde_json::to_string(&r.meta).expect("metadata serializes");
    RsResult {
        image: r.x_sim.data,
        label: r.y_sim.to_u8(),
        meta_json: CString::new(meta).expect("JSON has no interior NUL"),
    }
}

/// Message describing the last failed call on this thread, or an empty
/// string. Valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn rs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default parameters with the `builtin:gif` label scheme.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn rs_config_new(out: *mut *mut RsConfig) -> RsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = RsConfig {
            params: ResectionParams::default(),
            scheme: ParcellationScheme::gif(),
        };
        *out = Box::into_raw(Box::new(cfg));
        Ok(())
    })
}

/// Parameters from TOML text, in the same format as the CLI's `--config`.
/// A `scheme` key replaces the default `builtin:gif` scheme; relative scheme
/// paths resolve against the working directory.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rs_config_from_toml(toml: *const c_char, out: *mut *mut RsConfig) -> RsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = c_str(toml, "toml")?;
        let cfg = parse_config(text, None)?;
        *out = Box::into_raw(Box::new(RsConfig {
            params: cfg.params,
            scheme: cfg.scheme.unwrap_or_else(ParcellationScheme::gif),
        }));
        Ok(())
    })
}

/// Replaces the label scheme: `builtin:gif`, `builtin:phantom` or a path to
/// a scheme TOML file.
///
/// # Safety
/// `config` must be a live handle; `spec` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rs_config_set_scheme(config: *mut RsConfig, spec: *const c_char) -> RsStatus {
    guard(|| {
        let cfg = config.as_mut().ok_or_else(|| null("config"))?;
        cfg.scheme = ParcellationScheme::load(c_str(spec, "spec")?)?;
        Ok(())
    })
}

/// Sets the cavity shape: `noisy`, `ellipsoid` or `cuboid`.
///
/// # Safety
/// `config` must be a live handle; `shape` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rs_config_set_shape(config: *mut RsConfig, shape: *const c_char) -> RsStatus {
    guard(|| {
        let cfg = config.as_mut().ok_or_else(|| null("config"))?;
        cfg.params.shape = c_str(shape, "shape")?.parse::<Shape>()?;
        Ok(())
    })
}

/// # Safety
/// `config` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rs_config_free(config: *mut RsConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// One simulation on in-memory arrays. `image` and `labels` hold
/// `dims[0]·dims[1]·dims[2]` values each; both affines must agree within
/// 1e-6. The output is bit-identical to the CLI on files with the same
/// contents, parameters and seed.
///
/// # Safety
/// Array pointers must reference the stated number of elements, affines 16
/// values, `dims` 3 values; `config` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rs_simulate_arrays(
    image: *const f32,
    image_affine: *const f64,
    labels: *const u32,
    labels_affine: *const f64,
    dims: *const usize,
    config: *const RsConfig,
    seed: u64,
    out: *mut *mut RsResult,
) -> RsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = config.as_ref().ok_or_else(|| null("config"))?;
        let (image, labels) = read_volumes(image, image_affine, labels, labels_affine, dims)?;
        let sim = Simulator::new(&image, &labels, &cfg.scheme)?;
        let result = sim.simulate(&cfg.params, seed)?;
        *out = Box::into_raw(Box::new(into_result(result)));
        Ok(())
    })
}

/// Copies a subject's arrays and prepares its per-subject statistics so
/// that repeated draws skip that work. The scheme is taken from `config`.
///
/// # Safety
/// As for [`rs_simulate_arrays`].
#[no_mangle]
pub unsafe extern "C" fn rs_simulator_new(
    image: *const f32,
    image_affine: *const f64,
    labels: *const u32,
    labels_affine: *const f64,
    dims: *const usize,
    config: *const RsConfig,
    out: *mut *mut RsSimulator,
) -> RsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = config.as_ref().ok_or_else(|| null("config"))?;
        let (image, labels) = read_volumes(image, image_affine, labels, labels_affine, dims)?;
        let image = Box::into_raw(Box::new(image));
        let labels = Box::into_raw(Box::new(labels));
        let scheme = Box::into_raw(Box::new(cfg.scheme.clone()));
        let handle = RsSimulator {
            sim: None,
            image,
            labels,
            scheme,
        };
        // The handle owns the boxes; dropping it on error releases them.
        let mut handle = Box::new(handle);
        handle.sim = Some(Simulator::new(&*image, &*labels, &*scheme)?);
        *out = Box::into_raw(handle);
        Ok(())
    })
}

/// One draw from a prepared subject, using the parameters of `config`
/// (its scheme is ignored).
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rs_simulator_run(
    simulator: *const RsSimulator,
    config: *const RsConfig,
    seed: u64,
    out: *mut *mut RsResult,
) -> RsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let s = simulator.as_ref().ok_or_else(|| null("simulator"))?;
        let cfg = config.as_ref().ok_or_else(|| null("config"))?;
        let sim = s.sim.as_ref().expect("initialized in rs_simulator_new");
        *out = Box::into_raw(Box::new(into_result(sim.simulate(&cfg.params, seed)?)));
        Ok(())
    })
}

impl Drop for RsSimulator {
    fn drop(&mut self) {
        self.sim = None;
        // SAFETY: the pointers come from Box::into_raw in rs_simulator_new
        // and nothing borrows them once `sim` is gone.
        unsafe {
            drop(Box::from_raw(self.image));
            drop(Box::from_raw(self.labels));
            drop(Box::from_raw(self.scheme));
        }
    }
}

/// # Safety
/// `simulator` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rs_simulator_free(simulator: *mut RsSimulator) {
    if !simulator.is_null() {
        drop(Box::from_raw(simulator));
    }
}

/// Number of voxels in each output array.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rs_result_len(result: *const RsResult) -> usize {
    result.as_ref().map_or(0, |r| r.image.len())
}

/// Simulated image, valid until the result is freed. Null for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rs_result_image(result: *const RsResult) -> *const f32 {
    result.as_ref().map_or(ptr::null(), |r| r.image.as_ptr())
}

/// Cavity label (0 or 1), valid until the result is freed.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rs_result_label(result: *const RsResult) -> *const u8 {
    result.as_ref().map_or(ptr::null(), |r| r.label.as_ptr())
}

/// Simulation metadata as a JSON object, valid until the result is freed.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rs_result_meta_json(result: *const RsResult) -> *const c_char {
    result.as_ref().map_or(ptr::null(), |r| r.meta_json.as_ptr())
}

/// Copies the image into `dst`, which must hold `len == rs_result_len`
/// values.
///
/// # Safety
/// `dst` must be writable for `len` floats.
#[no_mangle]
pub unsafe extern "C" fn rs_result_copy_image(result: *const RsResult, dst: *mut f32, len: usize) -> RsStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        if dst.is_null() {
            return Err(null("dst"));
        }
        if len != r.image.len() {
            return Err(Failure(
                RsStatus::InvalidArgument,
                format!("destination holds {len} values, result has {}", r.image.len()),
            ));
        }
        ptr::copy_nonoverlapping(r.image.as_ptr(), dst, len);
        Ok(())
    })
}

/// Copies the label into `dst`, which must hold `len == rs_result_len`
/// bytes.
///
/// # Safety
/// `dst` must be writable for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn rs_result_copy_label(result: *const RsResult, dst: *mut u8, len: usize) -> RsStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        if dst.is_null() {
            return Err(null("dst"));
        }
        if len != r.label.len() {
            return Err(Failure(
                RsStatus::InvalidArgument,
                format!("destination holds {len} values, result has {}", r.label.len()),
            ));
        }
        ptr::copy_nonoverlapping(r.label.as_ptr(), dst, len);
        Ok(())
    })
}

/// # Safety
/// `result` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rs_result_free(result: *mut RsResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}
