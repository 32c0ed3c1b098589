//! Anatomical masks derived from a parcellation: per-hemisphere cortical
//! gray matter, the resectable-hemisphere mask and the ventricles.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{morphology, BinaryMask, LabelVolume, MorphOp, Region};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hemisphere {
    Left,
    Right,
}

impl Hemisphere {
    pub fn contralateral(self) -> Self {
        match self {
            Hemisphere::Left => Hemisphere::Right,
            Hemisphere::Right => Hemisphere::Left,
        }
    }
}

impl fmt::Display for Hemisphere {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hemisphere::Left => "left",
            Hemisphere::Right => "right",
        })
    }
}

impl std::str::FromStr for Hemisphere {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Hemisphere::Left),
            "right" => Ok(Hemisphere::Right),
            other => Err(Error::config("hemisphere", format!("expected left or right, got {other:?}"))),
        }
    }
}

/// Label IDs assigned to each anatomical role.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParcellationScheme {
    pub name: String,
    pub background: BTreeSet<u32>,
    pub brainstem: BTreeSet<u32>,
    pub cerebellum: BTreeSet<u32>,
    pub left_hemisphere: BTreeSet<u32>,
    pub right_hemisphere: BTreeSet<u32>,
    pub left_cortical_gm: BTreeSet<u32>,
    pub right_cortical_gm: BTreeSet<u32>,
    pub ventricles: BTreeSet<u32>,
}

/// Scheme document as written on disk. Every role may be omitted.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct SchemeDoc {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub background: Vec<i64>,
    #[serde(default)]
    pub brainstem: Vec<i64>,
    #[serde(default)]
    pub cerebellum: Vec<i64>,
    #[serde(default)]
    pub left_hemisphere: Vec<i64>,
    #[serde(default)]
    pub right_hemisphere: Vec<i64>,
    #[serde(default)]
    pub left_cortical_gm: Vec<i64>,
    #[serde(default)]
    pub right_cortical_gm: Vec<i64>,
    #[serde(default)]
    pub ventricles: Vec<i64>,
}

impl SchemeDoc {
    pub(crate) fn into_scheme(self, prefix: &str) -> Result<ParcellationScheme> {
        let ids = |key: &str, v: Vec<i64>| -> Result<BTreeSet<u32>> {
            v.into_iter()
                .map(|id| {
                    u32::try_from(id).map_err(|_| {
                        Error::config(format!("{prefix}{key}"), format!("label {id} is not a valid non-negative ID"))
                    })
                })
                .collect()
        };
        let scheme = ParcellationScheme {
            name: self.name.unwrap_or_else(|| "custom".into()),
            background: ids("background", self.background)?,
            brainstem: ids("brainstem", self.brainstem)?,
            cerebellum: ids("cerebellum", self.cerebellum)?,
            left_hemisphere: ids("left_hemisphere", self.left_hemisphere)?,
            right_hemisphere: ids("right_hemisphere", self.right_hemisphere)?,
            left_cortical_gm: ids("left_cortical_gm", self.left_cortical_gm)?,
            right_cortical_gm: ids("right_cortical_gm", self.right_cortical_gm)?,
            ventricles: ids("ventricles", self.ventricles)?,
        };
        scheme.validate(prefix)?;
        Ok(scheme)
    }
}

const GIF_SCHEME: &str = include_str!("../data/gif_scheme.toml");
const PHANTOM_SCHEME: &str = include_str!("../data/phantom_scheme.toml");

// Role bits in the lookup table.
const BACKGROUND: u8 = 1;
const BRAINSTEM: u8 = 1 << 1;
const CEREBELLUM: u8 = 1 << 2;
const LEFT: u8 = 1 << 3;
const RIGHT: u8 = 1 << 4;
const LEFT_GM: u8 = 1 << 5;
const RIGHT_GM: u8 = 1 << 6;
const VENTRICLES: u8 = 1 << 7;

impl ParcellationScheme {
    /// Mapping for GIF parcellations (Neuromorphometrics numbering).
    pub fn gif() -> Self {
        Self::from_toml_str(GIF_SCHEME, "").expect("bundled GIF scheme is valid")
    }

    /// Mapping for the labels produced by [`crate::simulate::phantom`].
    pub fn phantom() -> Self {
        Self::from_toml_str(PHANTOM_SCHEME, "").expect("bundled phantom scheme is valid")
    }

    /// Resolves `builtin:gif`, `builtin:phantom` or a path to a TOML file.
    pub fn load(spec: &str) -> Result<Self> {
        match spec {
            "builtin:gif" | "gif" => Ok(Self::gif()),
            "builtin:phantom" | "phantom" => Ok(Self::phantom()),
            path => {
                let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
                    path: Path::new(path).to_path_buf(),
                    source,
                })?;
                Self::from_toml_str(&text, "")
            }
        }
    }

    pub fn from_toml_str(text: &str, prefix: &str) -> Result<Self> {
        let doc: SchemeDoc = toml::from_str(text).map_err(|e| Error::config(format!("{prefix}scheme"), e.message().to_string()))?;
        doc.into_scheme(prefix)
    }

    fn roles(&self) -> [(&'static str, &BTreeSet<u32>); 8] {
        [
            ("background", &self.background),
            ("brainstem", &self.brainstem),
            ("cerebellum", &self.cerebellum),
            ("left_hemisphere", &self.left_hemisphere),
            ("right_hemisphere", &self.right_hemisphere),
            ("left_cortical_gm", &self.left_cortical_gm),
            ("right_cortical_gm", &self.right_cortical_gm),
            ("ventricles", &self.ventricles),
        ]
    }

    /// Role sets must be pairwise disjoint, except that each hemisphere's
    /// cortical gray matter lies within that hemisphere.
    pub fn validate(&self, prefix: &str) -> Result<()> {
        let nested = |gm: &str, hemi: &str, a: &str, b: &str| (a == gm && b == hemi) || (a == hemi && b == gm);
        let roles = self.roles();
        for (x, (name_a, a)) in roles.iter().enumerate() {
            for (name_b, b) in roles.iter().skip(x + 1) {
                if nested("left_cortical_gm", "left_hemisphere", name_a, name_b)
                    || nested("right_cortical_gm", "right_hemisphere", name_a, name_b)
                {
                    continue;
                }
                if let Some(id) = a.intersection(b).next() {
                    return Err(Error::config(
                        format!("{prefix}{name_b}"),
                        format!("label {id} also appears in {name_a}"),
                    ));
                }
            }
        }
        for (gm, hemi, key) in [
            (&self.left_cortical_gm, &self.left_hemisphere, "left_cortical_gm"),
            (&self.right_cortical_gm, &self.right_hemisphere, "right_cortical_gm"),
        ] {
            if let Some(id) = gm.difference(hemi).next() {
                return Err(Error::config(
                    format!("{prefix}{key}"),
                    format!("label {id} is not part of the matching hemisphere"),
                ));
            }
        }
        Ok(())
    }

    pub fn hemisphere(&self, h: Hemisphere) -> &BTreeSet<u32> {
        match h {
            Hemisphere::Left => &self.left_hemisphere,
            Hemisphere::Right => &self.right_hemisphere,
        }
    }

    pub fn cortical_gm(&self, h: Hemisphere) -> &BTreeSet<u32> {
        match h {
            Hemisphere::Left => &self.left_cortical_gm,
            Hemisphere::Right => &self.right_cortical_gm,
        }
    }

    /// Dense label → role-bit table.
    fn role_table(&self) -> RoleTable {
        let max = self.roles().iter().flat_map(|(_, s)| s.iter().copied()).max().unwrap_or(0);
        let mut bits = vec![0u8; max as usize + 1];
        for (set, bit) in [
            (&self.background, BACKGROUND),
            (&self.brainstem, BRAINSTEM),
            (&self.cerebellum, CEREBELLUM),
            (&self.left_hemisphere, LEFT),
            (&self.right_hemisphere, RIGHT),
            (&self.left_cortical_gm, LEFT_GM),
            (&self.right_cortical_gm, RIGHT_GM),
            (&self.ventricles, VENTRICLES),
        ] {
            for &id in set {
                bits[id as usize] |= bit;
            }
        }
        RoleTable { bits }
    }
}

struct RoleTable {
    bits: Vec<u8>,
}

impl RoleTable {
    #[inline]
    fn get(&self, label: u32) -> u8 {
        self.bits.get(label as usize).copied().unwrap_or(0)
    }

    fn mask(&self, p: &LabelVolume, f: impl Fn(u8) -> bool) -> BinaryMask {
        p.map(|l| f(self.get(l)))
    }
}

fn excluded_bits(h: Hemisphere) -> u8 {
    let contra = match h.contralateral() {
        Hemisphere::Left => LEFT,
        Hemisphere::Right => RIGHT,
    };
    BACKGROUND | BRAINSTEM | CEREBELLUM | contra
}

/// Cortical gray matter of hemisphere `h`.
pub fn gray_matter_mask(p: &LabelVolume, scheme: &ParcellationScheme, h: Hemisphere) -> Result<BinaryMask> {
    if scheme.cortical_gm(h).is_empty() {
        return Err(Error::config(
            format!("{h}_cortical_gm"),
            "the scheme lists no cortical gray-matter labels for this hemisphere",
        ));
    }
    let bit = match h {
        Hemisphere::Left => LEFT_GM,
        Hemisphere::Right => RIGHT_GM,
    };
    Ok(scheme.role_table().mask(p, |b| b & bit != 0))
}

/// Everything except background, brainstem, cerebellum and the
/// contralateral hemisphere, before smoothing.
pub fn raw_resectable_mask(p: &LabelVolume, scheme: &ParcellationScheme, h: Hemisphere) -> BinaryMask {
    let excluded = excluded_bits(h);
    scheme.role_table().mask(p, |b| b & excluded == 0)
}

/// One step of the smoothing recipe applied to the raw resectable mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothingStep {
    pub op: MorphOp,
    pub radius: usize,
}

/// Closing with radius 3 followed by opening with radius 2.
pub fn default_smoothing() -> Vec<SmoothingStep> {
    vec![
        SmoothingStep {
            op: MorphOp::Close,
            radius: 3,
        },
        SmoothingStep {
            op: MorphOp::Open,
            radius: 2,
        },
    ]
}

/// How far (in voxels) the recipe's output at a voxel can depend on input
/// voxels.
pub fn smoothing_reach(recipe: &[SmoothingStep]) -> usize {
    recipe
        .iter()
        .map(|s| match s.op {
            MorphOp::Erode | MorphOp::Dilate => s.radius,
            MorphOp::Open | MorphOp::Close => 2 * s.radius,
        })
        .sum()
}

pub fn apply_smoothing(mask: &BinaryMask, recipe: &[SmoothingStep]) -> Result<BinaryMask> {
    let mut out = mask.clone();
    for step in recipe {
        out = morphology(&out, step.op, step.radius)?;
    }
    Ok(out)
}

/// Raw resectable mask followed by the smoothing recipe.
pub fn resectable_mask(
    p: &LabelVolume,
    scheme: &ParcellationScheme,
    h: Hemisphere,
    recipe: &[SmoothingStep],
) -> Result<BinaryMask> {
    apply_smoothing(&raw_resectable_mask(p, scheme, h), recipe)
}

/// The `region` sub-box of [`resectable_mask`], computed from a
/// neighbourhood of that box only. Identical to cropping the full result.
pub fn resectable_mask_within(
    p: &LabelVolume,
    scheme: &ParcellationScheme,
    h: Hemisphere,
    recipe: &[SmoothingStep],
    region: &Region,
) -> Result<BinaryMask> {
    let reach = smoothing_reach(recipe);
    let outer = region.dilated(reach, p.grid.dims);
    let labels = p.crop(&outer);
    let smoothed = apply_smoothing(&raw_resectable_mask(&labels, scheme, h), recipe)?;
    let inner = Region {
        lo: [
            region.lo[0] - outer.lo[0],
            region.lo[1] - outer.lo[1],
            region.lo[2] - outer.lo[2],
        ],
        hi: [
            region.hi[0] - outer.lo[0],
            region.hi[1] - outer.lo[1],
            region.hi[2] - outer.lo[2],
        ],
    };
    let mut out = smoothed.crop(&inner);
    out.grid = p.grid.sub_grid(region);
    Ok(out)
}

/// Ventricular CSF.
pub fn ventricle_mask(p: &LabelVolume, scheme: &ParcellationScheme) -> Result<BinaryMask> {
    let m = scheme.role_table().mask(p, |b| b & VENTRICLES != 0);
    if m.is_all_false() {
        return Err(Error::NoVentricles);
    }
    Ok(m)
}
