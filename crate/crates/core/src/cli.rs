//! The `resectsim` command line.
//!
//! Exit codes: 0 on success, 1 for invalid input or configuration, 2 for
//! failures while running a valid request (including batch runs where some
//! cases failed). Logging goes to standard error and is controlled by
//! `RESECTSIM_LOG` (`error`, `warn`, `info` or `debug`; default `warn`).

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evaluate::{dice, median_iqr, postprocess};
use crate::io::{self, Config, ManifestEntry};
use crate::parcellation::{gray_matter_mask, raw_resectable_mask, resectable_mask, ventricle_mask};
use crate::rng::derive_seed;
use crate::simulate::phantom::{phantom, STANDARD_DIMS};
use crate::simulate::{SimulationMeta, Simulator};
use crate::volume::Connectivity;
use crate::{Hemisphere, ParcellationScheme, ResectionParams, Shape};

const DEFAULT_SCHEME: &str = "builtin:gif";

#[derive(Debug, Parser)]
#[command(name = "resectsim", version, about = "Simulate brain resection cavities on preoperative T1 MRI")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one resection on an image and its parcellation.
    Simulate(SimulateArgs),
    /// Simulate resections for every subject of a CSV manifest.
    Batch(BatchArgs),
    /// Threshold a probability map and optionally keep its largest component.
    Postprocess(PostprocessArgs),
    /// Dice scores of predicted against reference masks, with median (IQR).
    Evaluate(EvaluateArgs),
    /// Write the anatomical masks used for cavity placement, for inspection.
    Masks(MasksArgs),
    /// Write a procedural phantom image and parcellation.
    Phantom(PhantomArgs),
}

#[derive(Debug, Args)]
pub struct SchemeArgs {
    /// Parameter file (TOML). Unspecified keys take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Label scheme: `builtin:gif`, `builtin:phantom` or a TOML file.
    /// Overrides any scheme named in the configuration [default: builtin:gif].
    #[arg(long)]
    pub scheme: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Preoperative T1 image (NIfTI-1).
    #[arg(long)]
    pub image: PathBuf,
    /// Parcellation on the same grid as the image (NIfTI-1).
    #[arg(long)]
    pub parcellation: PathBuf,
    /// Output path of the simulated image.
    #[arg(long)]
    pub out_image: PathBuf,
    /// Output path of the cavity label.
    #[arg(long)]
    pub out_label: PathBuf,
    /// Random seed; equal seeds give equal outputs.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Cavity shape: noisy, ellipsoid or cuboid. Overrides the configuration [default: noisy].
    #[arg(long)]
    pub shape: Option<Shape>,
    /// Metadata sidecar (JSON) [default: next to the label, with a .json suffix].
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// Also write the placed cavity surface as ASCII PLY (millimetres).
    #[arg(long)]
    pub dump_mesh: Option<PathBuf>,
    #[command(flatten)]
    pub scheme: SchemeArgs,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    /// CSV with columns subject_id,image,parcellation[,seed]. Relative paths
    /// are resolved against the manifest's directory.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory for <subject>_<k>_{image,label}.nii.gz, sidecars and summary.csv.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Simulations per subject.
    #[arg(long, default_value_t = 1)]
    pub per_subject: u64,
    /// Worker threads [default: number of CPUs]. Does not affect outputs.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Base seed. Draw k of a subject uses the first 8 bytes (little-endian)
    /// of SHA-256(base LE ‖ subject_id ‖ 0x00 ‖ k LE); a manifest seed
    /// replaces the base for its row.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Cavity shape. Overrides the configuration [default: noisy].
    #[arg(long)]
    pub shape: Option<Shape>,
    #[command(flatten)]
    pub scheme: SchemeArgs,
}

#[derive(Debug, Args)]
pub struct PostprocessArgs {
    /// Probability map (NIfTI-1).
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output mask (unsigned 8-bit).
    #[arg(long)]
    pub out: PathBuf,
    /// Voxels with probability >= threshold are foreground.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f32,
    /// Keep only the largest connected component.
    #[arg(long)]
    pub largest_component: bool,
    /// Neighbourhood for --largest-component: 6 or 26.
    #[arg(long, default_value = "26", value_parser = ["6", "26"])]
    pub connectivity: String,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Predicted mask.
    #[arg(long, requires = "gt", conflicts_with_all = ["pred_dir", "gt_dir"])]
    pub pred: Option<PathBuf>,
    /// Reference mask.
    #[arg(long, requires = "pred")]
    pub gt: Option<PathBuf>,
    /// Directory of predicted masks, paired with --gt-dir by file name.
    #[arg(long, requires = "gt_dir")]
    pub pred_dir: Option<PathBuf>,
    /// Directory of reference masks.
    #[arg(long, requires = "pred_dir")]
    pub gt_dir: Option<PathBuf>,
    /// Also write per-case scores and the summary as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MasksArgs {
    /// Parcellation (NIfTI-1).
    #[arg(long)]
    pub parcellation: PathBuf,
    /// Hemisphere to build the masks for: left or right.
    #[arg(long)]
    pub hemisphere: Hemisphere,
    /// Output directory.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub scheme: SchemeArgs,
}

#[derive(Debug, Args)]
pub struct PhantomArgs {
    /// Output image.
    #[arg(long)]
    pub out_image: PathBuf,
    /// Output parcellation (labels of the `builtin:phantom` scheme).
    #[arg(long)]
    pub out_parcellation: PathBuf,
    /// Grid size as NX,NY,NZ (1 mm voxels).
    #[arg(long, value_delimiter = ',', default_values_t = STANDARD_DIMS)]
    pub dims: Vec<usize>,
    /// Seed of the image noise.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("RESECTSIM_LOG", "warn"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let outcome = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Batch(a) => cmd_batch(a),
        Command::Postprocess(a) => cmd_postprocess(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Masks(a) => cmd_masks(a),
        Command::Phantom(a) => cmd_phantom(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_settings(args: &SchemeArgs, shape: Option<Shape>) -> Result<(ResectionParams, ParcellationScheme)> {
    let config = match &args.config {
        Some(p) => io::load_config(p)?,
        None => Config {
            params: ResectionParams::default(),
            scheme: None,
        },
    };
    let scheme = match (&args.scheme, config.scheme) {
        (Some(s), _) => ParcellationScheme::load(s)?,
        (None, Some(s)) => s,
        (None, None) => ParcellationScheme::load(DEFAULT_SCHEME)?,
    };
    let mut params = config.params;
    if let Some(shape) = shape {
        params.shape = shape;
    }
    Ok((params, scheme))
}

fn write_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Write {
        path: path.to_path_buf(),
        source,
    }
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("metadata serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(write_error(path))
}

/// `label.nii.gz` → `label.json`.
fn sidecar_path(label: &Path) -> PathBuf {
    let name = label.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let stem = name
        .strip_suffix(".nii.gz")
        .or_else(|| name.strip_suffix(".nii"))
        .unwrap_or(&name);
    label.with_file_name(format!("{stem}.json"))
}

fn cmd_simulate(a: SimulateArgs) -> Result<i32> {
    let (params, scheme) = load_settings(&a.scheme, a.shape)?;
    let image = io::read_scalar(&a.image)?;
    let labels = io::read_labels(&a.parcellation)?;
    let sim = Simulator::new(&image, &labels, &scheme)?;
    let result = sim.simulate(&params, a.seed)?;

    io::write_scalar(&result.x_sim, &a.out_image)?;
    io::write_mask(&result.y_sim, &a.out_label)?;
    let meta_path = a.meta.unwrap_or_else(|| sidecar_path(&a.out_label));
    write_json(&result.meta, &meta_path)?;
    if let Some(p) = &a.dump_mesh {
        let file = std::fs::File::create(p).map_err(write_error(p))?;
        result
            .mesh
            .write_ply(std::io::BufWriter::new(file))
            .map_err(write_error(p))?;
    }
    println!("{}", serde_json::to_string_pretty(&result.meta).expect("metadata serializes"));
    Ok(0)
}

#[derive(Debug, Serialize)]
struct SummaryRow {
    subject_id: String,
    draw: u64,
    seed: u64,
    status: &'static str,
    error: String,
    image: String,
    label: String,
    shape: String,
    hemisphere: String,
    seed_voxel_i: Option<usize>,
    seed_voxel_j: Option<usize>,
    seed_voxel_k: Option<usize>,
    volume_mm3: Option<f64>,
    lambda: Option<f64>,
    rotation_x: Option<f64>,
    rotation_y: Option<f64>,
    rotation_z: Option<f64>,
    noise_scale: Option<f64>,
    sigma_x: Option<f64>,
    sigma_y: Option<f64>,
    sigma_z: Option<f64>,
    csf_mean: Option<f64>,
    csf_std: Option<f64>,
    attempts: Option<usize>,
    cavity_voxels: Option<usize>,
    label_voxels: Option<usize>,
}

impl SummaryRow {
    fn new(subject_id: &str, draw: u64, seed: u64) -> Self {
        Self {
            subject_id: subject_id.to_string(),
            draw,
            seed,
            status: "failed",
            error: String::new(),
            image: String::new(),
            label: String::new(),
            shape: String::new(),
            hemisphere: String::new(),
            seed_voxel_i: None,
            seed_voxel_j: None,
            seed_voxel_k: None,
            volume_mm3: None,
            lambda: None,
            rotation_x: None,
            rotation_y: None,
            rotation_z: None,
            noise_scale: None,
            sigma_x: None,
            sigma_y: None,
            sigma_z: None,
            csf_mean: None,
            csf_std: None,
            attempts: None,
            cavity_voxels: None,
            label_voxels: None,
        }
    }

    fn fill(&mut self, m: &SimulationMeta, image: String, label: String) {
        self.status = "ok";
        self.image = image;
        self.label = label;
        self.shape = m.shape.to_string();
        self.hemisphere = m.hemisphere.to_string();
        [self.seed_voxel_i, self.seed_voxel_j, self.seed_voxel_k] = m.seed_voxel.map(Some);
        self.volume_mm3 = Some(m.volume_mm3);
        self.lambda = Some(m.lambda);
        self.rotation_x = Some(m.rotation.x);
        self.rotation_y = Some(m.rotation.y);
        self.rotation_z = Some(m.rotation.z);
        self.noise_scale = Some(m.noise.scale);
        [self.sigma_x, self.sigma_y, self.sigma_z] = m.blur_sigma_mm.map(Some);
        self.csf_mean = Some(m.csf_mean);
        self.csf_std = Some(m.csf_std);
        self.attempts = Some(m.attempts);
        self.cavity_voxels = Some(m.cavity_voxels);
        self.label_voxels = Some(m.label_voxels);
    }
}

fn run_draw(sim: &Simulator, params: &ResectionParams, out_dir: &Path, row: &mut SummaryRow) -> Result<()> {
    let result = sim.simulate(params, row.seed)?;
    let stem = format!("{}_{}", row.subject_id, row.draw);
    let image = format!("{stem}_image.nii.gz");
    let label = format!("{stem}_label.nii.gz");
    io::write_scalar(&result.x_sim, out_dir.join(&image))?;
    io::write_mask(&result.y_sim, out_dir.join(&label))?;
    write_json(&result.meta, &out_dir.join(format!("{stem}_meta.json")))?;
    row.fill(&result.meta, image, label);
    Ok(())
}

fn run_subject(
    entry: &ManifestEntry,
    params: &ResectionParams,
    scheme: &ParcellationScheme,
    base_seed: u64,
    per_subject: u64,
    out_dir: &Path,
) -> Vec<SummaryRow> {
    let id = &entry.subject_id;
    let seed_base = entry.seed.unwrap_or(base_seed);
    let mut rows: Vec<SummaryRow> = (0..per_subject)
        .map(|k| SummaryRow::new(id, k, derive_seed(seed_base, id, k)))
        .collect();
    let inputs = io::read_scalar(&entry.image).and_then(|img| Ok((img, io::read_labels(&entry.parcellation)?)));
    let (image, labels) = match inputs {
        Ok(v) => v,
        Err(e) => {
            log::error!("subject {id}: {e}");
            rows.iter_mut().for_each(|r| r.error = e.to_string());
            return rows;
        }
    };
    let sim = match Simulator::new(&image, &labels, scheme) {
        Ok(s) => s,
        Err(e) => {
            log::error!("subject {id}: {e}");
            rows.iter_mut().for_each(|r| r.error = e.to_string());
            return rows;
        }
    };
    rows.par_iter_mut().for_each(|row| {
        match run_draw(&sim, params, out_dir, row) {
            Ok(()) => log::info!("subject {id} draw {}: done", row.draw),
            Err(e) => {
                log::error!("subject {id} draw {}: {e}", row.draw);
                row.error = e.to_string();
            }
        }
    });
    rows
}

fn cmd_batch(a: BatchArgs) -> Result<i32> {
    let (params, scheme) = load_settings(&a.scheme, a.shape)?;
    let manifest = io::load_manifest(&a.manifest)?;
    if a.jobs == Some(0) {
        return Err(Error::config("jobs", "must be at least 1"));
    }
    std::fs::create_dir_all(&a.out_dir).map_err(write_error(&a.out_dir))?;
    let jobs = a
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Input(format!("cannot start {jobs} worker threads: {e}")))?;

    let rows: Vec<SummaryRow> = pool.install(|| {
        manifest
            .entries
            .par_iter()
            .map(|entry| run_subject(entry, &params, &scheme, a.seed, a.per_subject, &a.out_dir))
            .flatten_iter()
            .collect()
    });

    let summary = a.out_dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&summary).map_err(|e| Error::Write {
        path: summary.clone(),
        source: e.into(),
    })?;
    for row in &rows {
        w.serialize(row).map_err(|e| Error::Write {
            path: summary.clone(),
            source: e.into(),
        })?;
    }
    w.flush().map_err(write_error(&summary))?;

    let failed = rows.iter().filter(|r| r.status != "ok").count();
    eprintln!("{} of {} simulations succeeded", rows.len() - failed, rows.len());
    if failed > 0 {
        log::error!("{failed} simulation(s) failed; see {}", summary.display());
        return Ok(2);
    }
    Ok(0)
}

fn cmd_postprocess(a: PostprocessArgs) -> Result<i32> {
    if !(0.0..=1.0).contains(&a.threshold) {
        return Err(Error::config("threshold", "must lie in [0, 1]"));
    }
    let prob = io::read_scalar(&a.input)?;
    let connectivity = if a.connectivity == "6" {
        Connectivity::Six
    } else {
        Connectivity::TwentySix
    };
    let mask = postprocess(&prob, a.threshold, a.largest_component.then_some(connectivity));
    io::write_mask(&mask, &a.out)?;
    println!("{} foreground voxels", mask.count());
    Ok(0)
}

fn nifti_names(dir: &Path) -> Result<BTreeSet<String>> {
    let read_err = |source| Error::Read {
        path: dir.to_path_buf(),
        source,
    };
    let mut names = BTreeSet::new();
    for entry in std::fs::read_dir(dir).map_err(read_err)? {
        let entry = entry.map_err(read_err)?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if entry.path().is_file() && (name.ends_with(".nii") || name.ends_with(".nii.gz")) {
            names.insert(name);
        }
    }
    Ok(names)
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<i32> {
    let pairs: Vec<(String, PathBuf, PathBuf)> = match (a.pred, a.gt, a.pred_dir, a.gt_dir) {
        (Some(p), Some(g), None, None) => {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            vec![(name, p, g)]
        }
        (None, None, Some(pd), Some(gd)) => {
            let preds = nifti_names(&pd)?;
            let gts = nifti_names(&gd)?;
            if preds.is_empty() && gts.is_empty() {
                return Err(Error::Input(format!(
                    "no NIfTI files in {} or {}",
                    pd.display(),
                    gd.display()
                )));
            }
            let unmatched: Vec<String> = preds
                .symmetric_difference(&gts)
                .map(|n| {
                    let side = if preds.contains(n) { &pd } else { &gd };
                    side.join(n).display().to_string()
                })
                .collect();
            if !unmatched.is_empty() {
                return Err(Error::Input(format!("unmatched files: {}", unmatched.join(", "))));
            }
            preds.into_iter().map(|n| (n.clone(), pd.join(&n), gd.join(&n))).collect()
        }
        _ => return Err(Error::Input("give either --pred and --gt or --pred-dir and --gt-dir".into())),
    };

    let mut scores = Vec::with_capacity(pairs.len());
    for (name, p, g) in &pairs {
        let score = dice(&io::read_mask(p)?, &io::read_mask(g)?)?;
        println!("{name}\tDSC {score:.3}");
        scores.push(score);
    }
    let summary = median_iqr(&scores)?;
    println!(
        "DSC median (IQR): {:.1} ({:.1}), n = {}",
        100.0 * summary.median,
        100.0 * summary.iqr,
        summary.n
    );

    if let Some(path) = &a.csv {
        let mut out = String::from("case,dice\n");
        for ((name, _, _), s) in pairs.iter().zip(&scores) {
            out.push_str(&format!("{name},{s}\n"));
        }
        out.push_str(&format!("summary:median,{}\n", summary.median));
        out.push_str(&format!("summary:iqr,{}\n", summary.iqr));
        out.push_str(&format!("summary:n,{}\n", summary.n));
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(write_error(path))?;
    }
    Ok(0)
}

fn cmd_masks(a: MasksArgs) -> Result<i32> {
    let (params, scheme) = load_settings(&a.scheme, None)?;
    let labels = io::read_labels(&a.parcellation)?;
    std::fs::create_dir_all(&a.out_dir).map_err(write_error(&a.out_dir))?;
    let h = a.hemisphere;
    let out = |name: &str| a.out_dir.join(format!("{name}.nii.gz"));

    io::write_mask(&gray_matter_mask(&labels, &scheme, h)?, out(&format!("gm_{h}")))?;
    io::write_mask(&raw_resectable_mask(&labels, &scheme, h), out(&format!("resectable_raw_{h}")))?;
    io::write_mask(&resectable_mask(&labels, &scheme, h, &params.smoothing)?, out(&format!("resectable_{h}")))?;
    match ventricle_mask(&labels, &scheme) {
        Ok(v) => io::write_mask(&v, out("ventricles"))?,
        Err(Error::NoVentricles) => log::warn!("no ventricle labels in the parcellation; skipping the ventricle mask"),
        Err(e) => return Err(e),
    }
    Ok(0)
}

fn cmd_phantom(a: PhantomArgs) -> Result<i32> {
    let dims: [usize; 3] = a
        .dims
        .as_slice()
        .try_into()
        .map_err(|_| Error::config("dims", "expected three sizes"))?;
    if dims.iter().any(|&d| d < 8) {
        return Err(Error::config("dims", "every size must be at least 8"));
    }
    let (image, labels) = phantom(dims, a.seed);
    io::write_scalar(&image, &a.out_image)?;
    io::write_labels(&labels, &a.out_parcellation)?;
    Ok(0)
}
