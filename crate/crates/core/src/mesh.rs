//! Cavity surface meshes: icosphere construction, radial noise
//! perturbation, placement transforms and the axis-aligned cuboid variant.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{fractal_noise, NoiseParams};

/// Largest accepted subdivision count (10·4⁷ + 2 = 163 842 vertices).
pub const MAX_FREQUENCY: u32 = 7;

/// Radius floor applied after radial perturbation of the unit sphere.
pub const MIN_PERTURBED_RADIUS: f64 = 0.05;

/// A triangle surface in millimetre model coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[u32; 3]>,
}

impl TriangleMesh {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    /// Number of faces incident on each undirected edge.
    fn edge_incidence(&self) -> HashMap<(u32, u32), u32> {
        let mut edges = HashMap::with_capacity(self.faces.len() * 3 / 2);
        for f in &self.faces {
            for e in 0..3 {
                let (a, b) = (f[e], f[(e + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        edges
    }

    pub fn num_edges(&self) -> usize {
        self.edge_incidence().len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_faces() as i64
    }

    /// Checks face indices, that every undirected edge borders exactly two
    /// faces and that those two faces traverse it in opposite directions.
    pub fn check_closed(&self) -> Result<()> {
        let n = self.vertices.len() as u32;
        let mut directed: HashMap<(u32, u32), u32> = HashMap::with_capacity(self.faces.len() * 3);
        for (k, f) in self.faces.iter().enumerate() {
            if f.iter().any(|&i| i >= n) {
                return Err(Error::Input(format!("face {k} references a missing vertex")));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::Input(format!("face {k} repeats a vertex")));
            }
            for e in 0..3 {
                *directed.entry((f[e], f[(e + 1) % 3])).or_insert(0) += 1;
            }
        }
        for (&(a, b), &count) in &directed {
            let reverse = directed.get(&(b, a)).copied().unwrap_or(0);
            if count != 1 || reverse != 1 {
                return Err(Error::Input(format!(
                    "mesh is not a closed consistently wound surface at edge ({a}, {b})"
                )));
            }
        }
        Ok(())
    }

    pub fn is_watertight(&self) -> bool {
        self.check_closed().is_ok()
    }

    /// Writes the mesh as ASCII PLY.
    pub fn write_ply<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "ply")?;
        writeln!(out, "format ascii 1.0")?;
        writeln!(out, "element vertex {}", self.vertices.len())?;
        writeln!(out, "property double x")?;
        writeln!(out, "property double y")?;
        writeln!(out, "property double z")?;
        writeln!(out, "element face {}", self.faces.len())?;
        writeln!(out, "property list uchar int vertex_indices")?;
        writeln!(out, "end_header")?;
        for v in &self.vertices {
            writeln!(out, "{} {} {}", v[0], v[1], v[2])?;
        }
        for f in &self.faces {
            writeln!(out, "3 {} {} {}", f[0], f[1], f[2])?;
        }
        Ok(())
    }
}

#[inline]
fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Enclosed signed volume by the divergence theorem. Positive for outward
/// winding; closed surfaces only.
pub fn mesh_volume(mesh: &TriangleMesh) -> Result<f64> {
    mesh.check_closed()?;
    // Origin at the first vertex keeps the per-face terms small.
    let o = mesh.vertices.first().copied().unwrap_or([0.0; 3]);
    let six_v: f64 = mesh
        .faces
        .iter()
        .map(|f| {
            let a = sub(mesh.vertices[f[0] as usize], o);
            let b = sub(mesh.vertices[f[1] as usize], o);
            let c = sub(mesh.vertices[f[2] as usize], o);
            dot(a, cross(b, c))
        })
        .sum();
    Ok(six_v / 6.0)
}

/// Unit icosphere: a regular icosahedron refined by `frequency` rounds of
/// 4-way midpoint subdivision, every vertex projected onto the unit sphere.
///
/// Yields `10·4^f + 2` vertices and `20·4^f` faces, wound outward.
pub fn build_icosphere(frequency: u32) -> Result<TriangleMesh> {
    if frequency > MAX_FREQUENCY {
        return Err(Error::config(
            "icosphere_frequency",
            format!("{frequency} exceeds the maximum of {MAX_FREQUENCY}"),
        ));
    }
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let mut vertices: Vec<[f64; 3]> = raw.iter().map(|&v| normalize(v)).collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..frequency {
        let mut midpoints: HashMap<(u32, u32), u32> = HashMap::with_capacity(faces.len() * 3 / 2);
        let mut midpoint = |a: u32, b: u32, vertices: &mut Vec<[f64; 3]>| -> u32 {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (va, vb) = (vertices[a as usize], vertices[b as usize]);
                vertices.push(normalize([
                    (va[0] + vb[0]) * 0.5,
                    (va[1] + vb[1]) * 0.5,
                    (va[2] + vb[2]) * 0.5,
                ]));
                (vertices.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    Ok(TriangleMesh { vertices, faces })
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = norm(v);
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Displaces each vertex along its radial direction by
/// `amplitude · fractal_noise(v)`, keeping the radius at or above
/// [`MIN_PERTURBED_RADIUS`]. Faces are untouched.
pub fn perturb_radially(mesh: &TriangleMesh, noise: &NoiseParams, amplitude: f64) -> TriangleMesh {
    if amplitude == 0.0 {
        return mesh.clone();
    }
    let vertices = mesh
        .vertices
        .iter()
        .map(|&v| {
            let r = norm(v);
            let delta = fractal_noise(v, noise);
            assert!(delta.is_finite(), "noise produced a non-finite value at {v:?}");
            let new_r = (r + amplitude * delta).max(MIN_PERTURBED_RADIUS);
            let s = new_r / r;
            [v[0] * s, v[1] * s, v[2] * s]
        })
        .collect();
    TriangleMesh {
        vertices,
        faces: mesh.faces.clone(),
    }
}

/// How the base radius is derived from the requested cavity volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadiusFormula {
    /// `r = (3v/4)^(1/3)`. The resulting ellipsoid encloses `π·v`.
    #[default]
    Verbatim,
    /// `r = (3v/(4π))^(1/3)`, so the ellipsoid encloses exactly `v`.
    ExactVolume,
}

/// Ellipsoid semiaxis lengths in millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidAxes {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
}

impl EllipsoidAxes {
    pub const UNIT: Self = Self {
        r1: 1.0,
        r2: 1.0,
        r3: 1.0,
    };

    pub fn volume(&self) -> f64 {
        4.0 / 3.0 * PI * self.r1 * self.r2 * self.r3
    }
}

/// Semiaxes `(r, λr, r/λ)` for cavity volume `v` (mm³) and ratio `λ ≥ 1`.
pub fn semiaxes_from_volume(v: f64, lambda: f64, formula: RadiusFormula) -> Result<EllipsoidAxes> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::config("volume", format!("must be positive, got {v}")));
    }
    if !(lambda >= 1.0 && lambda.is_finite()) {
        return Err(Error::config("lambda", format!("must be at least 1, got {lambda}")));
    }
    let r = match formula {
        RadiusFormula::Verbatim => (3.0 * v / 4.0).cbrt(),
        RadiusFormula::ExactVolume => (3.0 * v / (4.0 * PI)).cbrt(),
    };
    Ok(EllipsoidAxes {
        r1: r,
        r2: lambda * r,
        r3: r / lambda,
    })
}

/// Rotation angles in radians about the x, y and z axes.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EulerAngles {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl EulerAngles {
    pub const IDENTITY: Self = Self {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Matrix of `Rx(x) ∘ Ry(y) ∘ Rz(z)`: the z rotation acts first.
    pub fn matrix(&self) -> [[f64; 3]; 3] {
        let (sx, cx) = self.x.sin_cos();
        let (sy, cy) = self.y.sin_cos();
        let (sz, cz) = self.z.sin_cos();
        let rx = [[1.0, 0.0, 0.0], [0.0, cx, -sx], [0.0, sx, cx]];
        let ry = [[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]];
        let rz = [[cz, -sz, 0.0], [sz, cz, 0.0], [0.0, 0.0, 1.0]];
        matmul(&matmul(&rx, &ry), &rz)
    }
}

fn matmul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// Maps every vertex through rotation, then per-axis scaling by the
/// semiaxes, then translation.
pub fn transform_mesh(
    mesh: &TriangleMesh,
    rotation: &EulerAngles,
    axes: &EllipsoidAxes,
    translation: [f64; 3],
) -> Result<TriangleMesh> {
    let inputs_finite = [rotation.x, rotation.y, rotation.z, axes.r1, axes.r2, axes.r3]
        .iter()
        .chain(translation.iter())
        .all(|v| v.is_finite());
    if !inputs_finite {
        return Err(Error::Input("non-finite mesh transform".into()));
    }
    let m = rotation.matrix();
    let scale = [axes.r1, axes.r2, axes.r3];
    let vertices = mesh
        .vertices
        .iter()
        .map(|&v| {
            let mut out = [0.0; 3];
            for i in 0..3 {
                out[i] = dot(m[i], v) * scale[i] + translation[i];
            }
            out
        })
        .collect::<Vec<_>>();
    if vertices.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::Input("mesh vertices are not finite".into()));
    }
    Ok(TriangleMesh {
        vertices,
        faces: mesh.faces.clone(),
    })
}

/// Axis-aligned box centred at the origin with half-extents equal to the
/// semiaxes for `(v, λ)`: 8 vertices and 12 outward-wound triangles.
pub fn build_cuboid(v: f64, lambda: f64, formula: RadiusFormula) -> Result<TriangleMesh> {
    let axes = semiaxes_from_volume(v, lambda, formula)?;
    Ok(box_mesh([axes.r1, axes.r2, axes.r3]))
}

/// Box with the given half-extents, centred at the origin.
pub fn box_mesh(half: [f64; 3]) -> TriangleMesh {
    let mut vertices = Vec::with_capacity(8);
    for corner in 0..8u32 {
        vertices.push([
            if corner & 1 == 0 { -half[0] } else { half[0] },
            if corner & 2 == 0 { -half[1] } else { half[1] },
            if corner & 4 == 0 { -half[2] } else { half[2] },
        ]);
    }
    // Corner index bits: 1 = +x, 2 = +y, 4 = +z.
    let faces = vec![
        [0, 2, 3],
        [0, 3, 1], // -z
        [4, 5, 7],
        [4, 7, 6], // +z
        [0, 1, 5],
        [0, 5, 4], // -y
        [2, 6, 7],
        [2, 7, 3], // +y
        [0, 4, 6],
        [0, 6, 2], // -x
        [1, 3, 7],
        [1, 7, 5], // +x
    ];
    TriangleMesh { vertices, faces }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_counts() {
        for f in 0..=5u32 {
            let m = build_icosphere(f).unwrap();
            let p = 4usize.pow(f);
            assert_eq!(m.num_vertices(), 10 * p + 2);
            assert_eq!(m.num_faces(), 20 * p);
            assert_eq!(m.num_edges(), 30 * p);
            assert_eq!(m.euler_characteristic(), 2);
            assert!(m.is_watertight());
            for v in &m.vertices {
                assert!((norm(*v) - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn icosphere_rejects_high_frequency() {
        assert!(matches!(build_icosphere(8), Err(Error::Config { .. })));
    }

    #[test]
    fn icosphere_volume_close_to_sphere() {
        let m = build_icosphere(4).unwrap();
        let v = mesh_volume(&m).unwrap();
        let sphere = 4.0 * PI / 3.0;
        assert!(v < sphere);
        assert!((sphere - v) / sphere < 0.005, "{v}");
    }

    #[test]
    fn box_volume_and_topology() {
        let m = box_mesh([0.5, 1.0, 1.5]);
        assert!((mesh_volume(&m).unwrap() - 6.0).abs() < 1e-12);
        assert_eq!(m.num_edges(), 18);
        assert_eq!(m.euler_characteristic(), 2);
    }

    #[test]
    fn inverted_winding_negates_volume() {
        let m = build_icosphere(2).unwrap();
        let mut inv = m.clone();
        for f in &mut inv.faces {
            f.swap(1, 2);
        }
        let (a, b) = (mesh_volume(&m).unwrap(), mesh_volume(&inv).unwrap());
        assert!((a + b).abs() < 1e-12);
    }

    #[test]
    fn open_mesh_rejected() {
        let mut m = build_icosphere(1).unwrap();
        m.faces.pop();
        assert!(mesh_volume(&m).is_err());
    }

    #[test]
    fn semiaxes_examples() {
        let a = semiaxes_from_volume(1000.0, 1.0, RadiusFormula::Verbatim).unwrap();
        let r = 750f64.cbrt();
        assert!((a.r1 - r).abs() < 1e-12 && (a.r2 - r).abs() < 1e-12 && (a.r3 - r).abs() < 1e-12);
        assert!((r - 9.0856).abs() < 1e-4);
        let b = semiaxes_from_volume(1000.0, 2.0, RadiusFormula::Verbatim).unwrap();
        assert!((b.r1 - 9.0856).abs() < 1e-4);
        assert!((b.r2 - 18.1712).abs() < 1e-4);
        assert!((b.r3 - 4.5428).abs() < 1e-4);
        for (v, l) in [(1.0, 1.0), (500.0, 1.7), (5e4, 3.3)] {
            let a = semiaxes_from_volume(v, l, RadiusFormula::Verbatim).unwrap();
            assert!((a.r1 * a.r2 * a.r3 - 0.75 * v).abs() < 1e-9 * v);
            let e = semiaxes_from_volume(v, l, RadiusFormula::ExactVolume).unwrap();
            assert!((e.volume() - v).abs() < 1e-9 * v);
        }
        assert!(semiaxes_from_volume(0.0, 1.0, RadiusFormula::Verbatim).is_err());
        assert!(semiaxes_from_volume(10.0, 0.9, RadiusFormula::Verbatim).is_err());
    }

    #[test]
    fn identity_transform() {
        let m = build_icosphere(2).unwrap();
        let t = transform_mesh(&m, &EulerAngles::IDENTITY, &EllipsoidAxes::UNIT, [0.0; 3]).unwrap();
        assert_eq!(t, m);
    }

    #[test]
    fn rotation_order_applies_z_first() {
        let angles = EulerAngles {
            x: PI / 2.0,
            y: 0.0,
            z: PI / 2.0,
        };
        // Rz maps x̂ to ŷ, then Rx maps ŷ to ẑ.
        let m = angles.matrix();
        let v = [m[0][0], m[1][0], m[2][0]];
        assert!(v[0].abs() < 1e-12 && v[1].abs() < 1e-12 && (v[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_amplitude_is_identity() {
        let m = build_icosphere(3).unwrap();
        let p = perturb_radially(&m, &NoiseParams::default(), 0.0);
        assert_eq!(p, m);
    }

    #[test]
    fn full_amplitude_radius_bounds() {
        let m = build_icosphere(3).unwrap();
        for s in 0..5 {
            let noise = NoiseParams {
                scale: 0.2 + 0.2 * s as f64,
                shift: [s as f64 * 100.0, 3.0, -7.0],
                ..NoiseParams::default()
            };
            let p = perturb_radially(&m, &noise, 1.0);
            for v in &p.vertices {
                let r = norm(*v);
                assert!((MIN_PERTURBED_RADIUS - 1e-12..=2.0).contains(&r), "{r}");
            }
            assert!(p.is_watertight());
            assert_eq!(p.euler_characteristic(), 2);
        }
    }

    #[test]
    fn shift_changes_perturbation() {
        let m = build_icosphere(2).unwrap();
        let a = NoiseParams {
            shift: [1.0, 2.0, 3.0],
            ..NoiseParams::default()
        };
        let b = NoiseParams {
            shift: [400.0, 2.0, 3.0],
            ..NoiseParams::default()
        };
        assert_eq!(perturb_radially(&m, &a, 0.5), perturb_radially(&m, &a, 0.5));
        assert_ne!(perturb_radially(&m, &a, 0.5), perturb_radially(&m, &b, 0.5));
    }

    #[test]
    fn cuboid_matches_semiaxes() {
        let m = build_cuboid(1000.0, 1.0, RadiusFormula::Verbatim).unwrap();
        let edge = 2.0 * 750f64.cbrt();
        assert!((edge - 18.171).abs() < 1e-3);
        for v in &m.vertices {
            for c in v {
                assert!((c.abs() * 2.0 - edge).abs() < 1e-12);
            }
        }
        let a = semiaxes_from_volume(1000.0, 1.0, RadiusFormula::Verbatim).unwrap();
        let vol = mesh_volume(&m).unwrap();
        assert!((vol - 8.0 * a.r1 * a.r2 * a.r3).abs() < 1e-9);
    }

    #[test]
    fn ply_export() {
        let m = box_mesh([1.0, 1.0, 1.0]);
        let mut buf = Vec::new();
        m.write_ply(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("ply\nformat ascii 1.0\nelement vertex 8\n"));
        assert_eq!(text.lines().filter(|l| l.starts_with("3 ")).count(), 12);
    }
}
