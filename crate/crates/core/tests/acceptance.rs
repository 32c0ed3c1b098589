//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use resectsim::evaluate::{dice, median_iqr};
use resectsim::mesh::{build_icosphere, mesh_volume, semiaxes_from_volume, transform_mesh, EulerAngles, RadiusFormula};
use resectsim::noise::fractal_noise;
use resectsim::parcellation::{gray_matter_mask, resectable_mask};
use resectsim::rng::CounterRng;
use resectsim::simulate::phantom::{phantom, STANDARD_DIMS};
use resectsim::simulate::simulate_resection;
use resectsim::volume::{
    complement, hadamard, largest_component, morphology, synth_gaussian_image, voxelize, Connectivity, MorphOp,
};
use resectsim::{
    io, BinaryMask, Grid, Hemisphere, LabelVolume, NoiseParams, ParcellationScheme, ResectionParams, ScalarVolume,
    Shape, Simulator,
};

use common::{analytic_ellipsoid, brute_largest_component, brute_morph, dice_count, random_blobs, random_mask};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

struct Subject {
    img: ScalarVolume,
    lab: LabelVolume,
    scheme: ParcellationScheme,
}

fn icosphere_counts() -> Outcome {
    let expected = [(12, 20), (42, 80), (162, 320), (642, 1280)];
    for (f, &(v, faces)) in expected.iter().enumerate() {
        let m = build_icosphere(f as u32).map_err(|e| e.to_string())?;
        ensure!(
            (m.num_vertices(), m.num_faces()) == (v, faces),
            "f={f}: got ({}, {})",
            m.num_vertices(),
            m.num_faces()
        );
        ensure!(m.euler_characteristic() == 2, "f={f}: Euler {}", m.euler_characteristic());
        ensure!(m.is_watertight(), "f={f}: not watertight");
    }
    Ok("f=0..3 counts exact, χ=2, watertight".into())
}

fn ellipsoid_fidelity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let ico = build_icosphere(3).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let v = (rng.random_range(500f64.ln()..50_000f64.ln())).exp();
        let lambda = rng.random_range(1.0..2.0);
        let axes = semiaxes_from_volume(v, lambda, RadiusFormula::Verbatim).map_err(|e| e.to_string())?;
        let rot = EulerAngles {
            x: rng.random_range(0.0..std::f64::consts::TAU),
            y: rng.random_range(0.0..std::f64::consts::TAU),
            z: rng.random_range(0.0..std::f64::consts::TAU),
        };
        let t = [rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)];
        let m = transform_mesh(&ico, &rot, &axes, t).map_err(|e| e.to_string())?;
        let vol = mesh_volume(&m).map_err(|e| e.to_string())?;
        let rel = (vol - axes.volume()).abs() / axes.volume();
        worst = worst.max(rel);
        ensure!(rel < 0.01, "v={v:.1}, λ={lambda:.3}: relative error {rel:.5}");
    }
    Ok(format!("20 cases, worst relative volume error {:.3}%", 100.0 * worst))
}

fn noise_contract() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let defaults = ResectionParams::default().noise;
    let n = 1_000_000;
    let (mut sum, mut sum2) = (0.0, 0.0);
    let mut params = NoiseParams::default();
    for i in 0..n {
        if i % 1000 == 0 {
            params = NoiseParams {
                octaves: defaults.octaves,
                persistence: defaults.persistence,
                scale: rng.random_range(defaults.scale_range[0]..=defaults.scale_range[1]),
                shift: [0; 3].map(|_| rng.random_range(defaults.shift_range[0]..=defaults.shift_range[1])),
            };
        }
        let p = [0; 3].map(|_| rng.random_range(-1.5..1.5));
        let x = fractal_noise(p, &params);
        ensure!((-1.0..=1.0).contains(&x), "sample {x} at {p:?} outside [-1, 1]");
        sum += x;
        sum2 += x * x;
    }
    let mean = sum / n as f64;
    let std = (sum2 / n as f64 - mean * mean).sqrt();
    ensure!(std > 0.05, "sample std {std:.4}");

    let mut worst: f64 = 0.0;
    for _ in 0..100_000 {
        let p = [0; 3].map(|_| rng.random_range(-1.5..1.5));
        let d = [0; 3].map(|_| rng.random_range(-1.0..1.0f64));
        let norm = d.iter().map(|c| c * c).sum::<f64>().sqrt().max(1e-12);
        let q = [0, 1, 2].map(|a| p[a] + d[a] / norm * 1e-5);
        worst = worst.max((fractal_noise(p, &params) - fractal_noise(q, &params)).abs());
    }
    ensure!(worst <= 1e-3, "continuity: |Δ| = {worst:.2e} at ‖h‖ = 1e-5");
    Ok(format!("1e6 samples in range, std {std:.3}, max |Δ| at ‖h‖=1e-5: {worst:.1e}"))
}

fn voxelization_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ico = build_icosphere(3).map_err(|e| e.to_string())?;
    let mut worst: f64 = 1.0;
    for case in 0..10 {
        // Half the cases on an anisotropic, offset grid.
        let spacing = if case % 2 == 0 { [1.0; 3] } else { [0.9, 1.1, 1.3] };
        let grid = Grid::new([64, 64, 64], spacing, [-32.0, -35.0, -38.0], resectsim::volume::IDENTITY3)
            .map_err(|e| e.to_string())?;
        let min_axis = 10.0 * spacing.iter().cloned().fold(0.0, f64::max);
        let r = rng.random_range(min_axis * 1.5..min_axis * 2.0);
        let lambda = rng.random_range(1.0..1.45);
        let axes = resectsim::mesh::EllipsoidAxes {
            r1: r,
            r2: lambda * r,
            r3: r / lambda,
        };
        ensure!(axes.r3 >= min_axis, "case {case}: semiaxis below 10 voxels");
        let rot = EulerAngles {
            x: rng.random_range(0.0..6.28),
            y: rng.random_range(0.0..6.28),
            z: rng.random_range(0.0..6.28),
        };
        let c = [0; 3].map(|_| rng.random_range(-2.0..2.0));
        let m = transform_mesh(&ico, &rot, &axes, c).map_err(|e| e.to_string())?;
        let vox = voxelize(&m, &grid).map_err(|e| e.to_string())?;
        let truth = analytic_ellipsoid(&grid, c, [axes.r1, axes.r2, axes.r3]);
        let d = dice_count(&vox, &truth);
        worst = worst.min(d);
        ensure!(d >= 0.99, "case {case}: Dice {d:.4}");
    }
    Ok(format!("10 cases, minimum Dice {worst:.4}"))
}

fn morphology_and_components() -> Outcome {
    let ops = [MorphOp::Erode, MorphOp::Dilate, MorphOp::Open, MorphOp::Close];
    for case in 0..50u64 {
        let n = if case % 2 == 0 { 24 } else { 32 };
        let m = if case % 3 == 0 {
            random_mask([n; 3], 0.3 + 0.01 * case as f64, case)
        } else {
            random_blobs([n; 3], 6, case)
        };
        let op = ops[case as usize % 4];
        let r = 1 + (case as usize / 4) % 3;
        let got = morphology(&m, op, r).map_err(|e| e.to_string())?;
        ensure!(got == brute_morph(&m, op, r), "morphology case {case} ({op:?}, r={r}) differs");
    }
    for case in 0..50u64 {
        let n = if case % 2 == 0 { 24 } else { 32 };
        let m = if case % 2 == 0 {
            random_mask([n; 3], 0.1 + 0.01 * case as f64, 100 + case)
        } else {
            random_blobs([n; 3], 8, 100 + case)
        };
        let c = if case % 4 < 2 { Connectivity::Six } else { Connectivity::TwentySix };
        ensure!(
            largest_component(&m, c) == brute_largest_component(&m, c),
            "component case {case} ({c:?}) differs"
        );
    }
    Ok("50 + 50 masks equal to the brute-force oracles".into())
}

fn label_anatomy(s: &Subject) -> Outcome {
    let sim = Simulator::new(&s.img, &s.lab, &s.scheme).map_err(|e| e.to_string())?;
    let smoothing = ResectionParams::default().smoothing;
    let mut resectable = Vec::new();
    let mut gm = Vec::new();
    for h in [Hemisphere::Left, Hemisphere::Right] {
        resectable.push(complement(&resectable_mask(&s.lab, &s.scheme, h, &smoothing).map_err(|e| e.to_string())?));
        gm.push(gray_matter_mask(&s.lab, &s.scheme, h).map_err(|e| e.to_string())?);
    }
    let shapes = [Shape::Noisy, Shape::Ellipsoid, Shape::Cuboid];
    let mut sizes = Vec::new();
    for seed in 0..100u64 {
        let params = ResectionParams {
            shape: shapes[seed as usize % 3],
            ..ResectionParams::default()
        };
        let r = sim.simulate(&params, seed).map_err(|e| format!("seed {seed}: {e}"))?;
        let h = r.meta.hemisphere as usize;
        ensure!(!r.y_sim.is_all_false(), "seed {seed}: empty label");
        ensure!(
            hadamard(&r.y_sim, &resectable[h]).map_err(|e| e.to_string())?.is_all_false(),
            "seed {seed}: label outside the resectable mask"
        );
        let [i, j, k] = r.meta.seed_voxel;
        ensure!(gm[h].get(i, j, k), "seed {seed}: seed voxel outside cortical gray matter");
        sizes.push(r.y_sim.count() as f64);
    }
    sizes.sort_by(f64::total_cmp);
    Ok(format!(
        "100 simulations, label voxels {:.0} .. {:.0}",
        sizes[0],
        sizes[sizes.len() - 1]
    ))
}

fn blend_contract(s: &Subject) -> Outcome {
    let sim = Simulator::new(&s.img, &s.lab, &s.scheme).map_err(|e| e.to_string())?;
    let hard = ResectionParams {
        sigma_range: [0.0, 0.0],
        ..ResectionParams::default()
    };
    for seed in 0..2 {
        let r = sim.simulate(&hard, seed).map_err(|e| e.to_string())?;
        let csf = synth_gaussian_image(&s.img.grid, r.meta.csf_mean, r.meta.csf_std, &CounterRng::new(r.meta.texture_key))
            .map_err(|e| e.to_string())?;
        for n in 0..s.img.data.len() {
            let want = if r.y_sim.data[n] { csf.data[n] } else { s.img.data[n] };
            ensure!(r.x_sim.data[n].to_bits() == want.to_bits(), "σ=0, seed {seed}: voxel {n} differs");
        }
    }
    let mut changed = 0;
    for seed in 2..5 {
        let r = sim.simulate(&ResectionParams::default(), seed).map_err(|e| e.to_string())?;
        let csf = synth_gaussian_image(&s.img.grid, r.meta.csf_mean, r.meta.csf_std, &CounterRng::new(r.meta.texture_key))
            .map_err(|e| e.to_string())?;
        for n in 0..s.img.data.len() {
            let (p, c, x) = (s.img.data[n], csf.data[n], r.x_sim.data[n]);
            ensure!(p.min(c) <= x && x <= p.max(c), "σ>0, seed {seed}: voxel {n} outside the envelope");
            changed += (x != p) as usize;
        }
    }
    ensure!(changed > 0, "σ>0 runs changed nothing");
    Ok(format!("σ=0 exact on 2 runs; σ>0 within envelope on 3 runs ({changed} voxels changed)"))
}

fn csf_statistics(s: &Subject) -> Outcome {
    let sim = Simulator::new(&s.img, &s.lab, &s.scheme).map_err(|e| e.to_string())?;
    let (mu, sd) = sim.csf_stats();
    let x = synth_gaussian_image(&s.img.grid, mu, sd, &CounterRng::new(12345)).map_err(|e| e.to_string())?;
    let n = x.data.len() as f64;
    let mean = x.data.iter().map(|&v| v as f64).sum::<f64>() / n;
    let bound = 3.0 * sd / n.sqrt();
    ensure!((mean - mu).abs() <= bound, "mean {mean:.5} vs μ {mu:.5}, bound {bound:.5}");
    Ok(format!("|mean − μ| = {:.2e} ≤ {bound:.2e} over {} voxels", (mean - mu).abs(), x.data.len()))
}

fn exe() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_resectsim"));
    c.env_remove("RESECTSIM_LOG");
    c
}

fn run_ok(c: &mut Command) -> Result<(), String> {
    let o = c.output().map_err(|e| e.to_string())?;
    if o.status.success() {
        Ok(())
    } else {
        Err(format!("{:?} failed: {}", c, String::from_utf8_lossy(&o.stderr)))
    }
}

fn files_equal(a: &Path, b: &Path) -> Result<bool, String> {
    let read = |p: &Path| std::fs::read(p).map_err(|e| format!("{}: {e}", p.display()));
    Ok(read(a)? == read(b)?)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let mut rows = String::from("subject_id,image,parcellation\n");
    for (n, seed) in [(0, 11u64), (1, 12)] {
        let (img, lab) = phantom([96, 112, 96], seed);
        let (i, l) = (d.join(format!("s{n}_t1.nii.gz")), d.join(format!("s{n}_seg.nii.gz")));
        io::write_scalar(&img, &i).map_err(|e| e.to_string())?;
        io::write_labels(&lab, &l).map_err(|e| e.to_string())?;
        rows.push_str(&format!("s{n},{},{}\n", i.display(), l.display()));
    }
    for run in ["a", "b"] {
        run_ok(exe().args(["simulate", "--scheme", "builtin:phantom", "--seed", "77"]).args([
            "--image".as_ref(),
            d.join("s0_t1.nii.gz").as_os_str(),
            "--parcellation".as_ref(),
            d.join("s0_seg.nii.gz").as_os_str(),
            "--out-image".as_ref(),
            d.join(format!("{run}_x.nii.gz")).as_os_str(),
            "--out-label".as_ref(),
            d.join(format!("{run}_y.nii.gz")).as_os_str(),
        ]))?;
    }
    for f in ["x.nii.gz", "y.nii.gz", "y.json"] {
        ensure!(files_equal(&d.join(format!("a_{f}")), &d.join(format!("b_{f}")))?, "simulate: {f} differs");
    }

    let manifest = d.join("manifest.csv");
    std::fs::write(&manifest, rows).map_err(|e| e.to_string())?;
    for jobs in ["1", "4"] {
        run_ok(
            exe()
                .args(["batch", "--scheme", "builtin:phantom", "--per-subject", "3", "--seed", "9", "--jobs", jobs])
                .arg("--manifest")
                .arg(&manifest)
                .arg("--out-dir")
                .arg(d.join(format!("jobs{jobs}"))),
        )?;
    }
    let mut compared = 0;
    for entry in std::fs::read_dir(d.join("jobs1")).map_err(|e| e.to_string())? {
        let name = entry.map_err(|e| e.to_string())?.file_name();
        ensure!(
            files_equal(&d.join("jobs1").join(&name), &d.join("jobs4").join(&name))?,
            "batch: {name:?} differs between --jobs 1 and 4"
        );
        compared += 1;
    }
    ensure!(compared == 3 * 6 + 1, "batch wrote {compared} files");
    Ok(format!("simulate repeated byte-identical; batch --jobs 1 vs 4: {compared} files identical"))
}

fn performance(s: &Subject) -> Outcome {
    let params = ResectionParams::default();
    let mut times = Vec::new();
    for seed in 0..12u64 {
        let t = Instant::now();
        let r = simulate_resection(&s.img, &s.lab, &s.scheme, &params, 1000 + seed).map_err(|e| e.to_string())?;
        let dt = t.elapsed();
        ensure!(r.meta.shape == Shape::Noisy, "not a noisy-shape run");
        if seed >= 2 {
            times.push(dt);
        }
    }
    times.sort();
    let median = (times[4] + times[5]) / 2;
    let cpus = std::thread::available_parallelism().map_or(1, |n| n.get());
    ensure!(median < Duration::from_secs(1), "median {median:?} over 10 runs");
    Ok(format!(
        "median {:.0} ms over 10 runs after 2 warmups ({}×{}×{}, {cpus} CPU(s))",
        median.as_secs_f64() * 1e3,
        STANDARD_DIMS[0],
        STANDARD_DIMS[1],
        STANDARD_DIMS[2]
    ))
}

fn shape_variants(s: &Subject) -> Outcome {
    let sim = Simulator::new(&s.img, &s.lab, &s.scheme).map_err(|e| e.to_string())?;
    let ell = ResectionParams {
        shape: Shape::Ellipsoid,
        ..ResectionParams::default()
    };
    let cub = ResectionParams {
        shape: Shape::Cuboid,
        ..ResectionParams::default()
    };
    for seed in 0..10 {
        let r = sim.simulate(&ell, seed).map_err(|e| e.to_string())?;
        ensure!(r.meta.noise_amplitude == 0.0, "ellipsoid seed {seed}: amplitude {}", r.meta.noise_amplitude);
        let a = r.meta.semiaxes_mm;
        let c = r.meta.seed_point_mm;
        for v in &r.mesh.vertices {
            let q = ((v[0] - c[0]) / a.r1).powi(2) + ((v[1] - c[1]) / a.r2).powi(2) + ((v[2] - c[2]) / a.r3).powi(2);
            ensure!((q - 1.0).abs() < 1e-9, "ellipsoid seed {seed}: vertex displaced ({q})");
        }

        let r = sim.simulate(&cub, seed).map_err(|e| e.to_string())?;
        ensure!(r.meta.rotation == EulerAngles::IDENTITY, "cuboid seed {seed}: rotated");
        ensure!(r.meta.noise_amplitude == 0.0, "cuboid seed {seed}: displaced");
        let half = [r.meta.semiaxes_mm.r1, r.meta.semiaxes_mm.r2, r.meta.semiaxes_mm.r3];
        for v in &r.mesh.vertices {
            for ax in 0..3 {
                ensure!(
                    ((v[ax] - r.meta.seed_point_mm[ax]).abs() - half[ax]).abs() < 1e-9,
                    "cuboid seed {seed}: vertex off the axis-aligned box"
                );
            }
        }
        let b = r.cavity.bounding_box().ok_or("empty cuboid")?;
        let e = b.extent();
        ensure!(r.cavity.count() == e[0] * e[1] * e[2], "cuboid seed {seed}: cavity is not a discrete box");
    }

    // The same through the command line sidecar.
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let (img, lab) = phantom([96, 112, 96], 5);
    io::write_scalar(&img, d.join("t1.nii.gz")).map_err(|e| e.to_string())?;
    io::write_labels(&lab, d.join("seg.nii.gz")).map_err(|e| e.to_string())?;
    for shape in ["ellipsoid", "cuboid"] {
        run_ok(
            exe()
                .args(["simulate", "--scheme", "builtin:phantom", "--shape", shape])
                .arg("--image")
                .arg(d.join("t1.nii.gz"))
                .arg("--parcellation")
                .arg(d.join("seg.nii.gz"))
                .arg("--out-image")
                .arg(d.join("x.nii.gz"))
                .arg("--out-label")
                .arg(d.join(format!("{shape}.nii.gz"))),
        )?;
        let text = std::fs::read_to_string(d.join(format!("{shape}.json"))).map_err(|e| e.to_string())?;
        let meta: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        ensure!(meta["shape"] == shape, "sidecar shape {}", meta["shape"]);
        ensure!(meta["noise_amplitude"] == 0.0, "sidecar amplitude {}", meta["noise_amplitude"]);
        if shape == "cuboid" {
            for ax in ["x", "y", "z"] {
                ensure!(meta["rotation"][ax] == 0.0, "sidecar rotation {}", meta["rotation"]);
            }
        }
    }
    Ok("10 ellipsoids on the surface, 10 cuboids axis-aligned discrete boxes; sidecars agree".into())
}

fn evaluation_utilities() -> Outcome {
    let grid = Grid::unit([200, 1, 1]);
    let mask = |r: std::ops::Range<usize>| {
        let mut m = BinaryMask::empty(grid.clone());
        m.data[r].iter_mut().for_each(|v| *v = true);
        m
    };
    let d = |a: &BinaryMask, b: &BinaryMask| dice(a, b).map_err(|e| e.to_string());
    // |A| = |B| = 100, |A∩B| = 50.
    ensure!(d(&mask(0..100), &mask(50..150))? == 0.5, "half overlap");
    ensure!(d(&mask(0..100), &mask(0..100))? == 1.0, "identical");
    ensure!(d(&mask(0..100), &mask(100..200))? == 0.0, "disjoint");
    ensure!(d(&mask(0..0), &mask(0..0))? == 1.0, "both empty");

    let s = median_iqr(&[0.0, 0.25, 0.5, 0.75, 1.0]).map_err(|e| e.to_string())?;
    ensure!((s.median, s.iqr, s.n) == (0.5, 0.5, 5), "five scores: {s:?}");
    let s2 = median_iqr(&[1.0, 0.0, 0.75, 0.25, 0.5]).map_err(|e| e.to_string())?;
    ensure!(s2 == s, "permutation changed the summary");
    let s = median_iqr(&[0.5]).map_err(|e| e.to_string())?;
    ensure!((s.median, s.iqr) == (0.5, 0.0), "single score: {s:?}");
    ensure!(median_iqr(&[]).is_err(), "empty list accepted");
    Ok("dice 0.5/1/0/1 and summaries 0.5 (0.5), 0.5 (0) exact".into())
}

fn main() {
    let t = Instant::now();
    let (img, lab) = phantom(STANDARD_DIMS, 1);
    let subject = Subject {
        img,
        lab,
        scheme: ParcellationScheme::phantom(),
    };
    println!("setup: standard phantom built in {:.2} s", t.elapsed().as_secs_f64());

    let s = &subject;
    let criteria: Vec<(&str, Option<u64>, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("icosphere counts", Some(1), Box::new(icosphere_counts)),
        ("ellipsoid fidelity", Some(5), Box::new(ellipsoid_fidelity)),
        ("noise contract", Some(10), Box::new(noise_contract)),
        ("voxelization oracle", Some(30), Box::new(voxelization_oracle)),
        ("morphology and components oracles", Some(30), Box::new(morphology_and_components)),
        ("label anatomy", Some(60), Box::new(move || label_anatomy(s))),
        ("blend contract", Some(10), Box::new(move || blend_contract(s))),
        ("CSF statistics", Some(5), Box::new(move || csf_statistics(s))),
        ("determinism", None, Box::new(determinism)),
        ("performance", None, Box::new(move || performance(s))),
        ("shape variants", None, Box::new(move || shape_variants(s))),
        ("evaluation utilities", None, Box::new(evaluation_utilities)),
    ];

    let mut failed = 0;
    for (name, limit, check) in &criteria {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let dt = t.elapsed().as_secs_f64();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(l)) if dt >= *l as f64 => Err(format!("took {dt:.2} s, limit {l} s")),
            (o, _) => o,
        };
        let limit = limit.map_or(String::new(), |l| format!(" / {l} s"));
        match outcome {
            Ok(detail) => println!("PASS  {name:<34} {dt:>7.2} s{limit}  {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name:<34} {dt:>7.2} s{limit}  {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
