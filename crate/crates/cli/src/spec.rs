//! JSON document formats: material specs, load histories, quadratic
//! forms and process characteristics.

use anyhow::{anyhow, bail, Context};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use viscolevy::{
    compose, dashpot, kelvin_voigt, maxwell, parallel, series, spring, stable_material, Atom,
    BernsteinRep, LevyMeasure, LoadHistory, Material, PaisCharacteristics, QuadraticFormPair,
    Ramp, Step,
};

pub const FORMAT_VERSION: u32 = 1;

fn default_version() -> u32 {
    FORMAT_VERSION
}

/// Top-level material document: a version field plus the spec tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialFile {
    #[serde(default = "default_version")]
    pub version: u32,
    #[serde(flatten)]
    pub spec: MaterialSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    pub rate: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableSpec {
    pub alpha: f64,
    pub scale: f64,
}

/// Material spec tree, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MaterialSpec {
    Spring {
        stiffness: f64,
    },
    Dashpot {
        rate: f64,
    },
    Maxwell {
        stiffness: f64,
        viscosity: f64,
    },
    KelvinVoigt {
        stiffness: f64,
        viscosity: f64,
    },
    Stable {
        alpha: f64,
        scale: f64,
    },
    Prony {
        #[serde(default)]
        constant: f64,
        #[serde(default)]
        drift: f64,
        #[serde(default)]
        atoms: Vec<AtomSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stable: Option<StableSpec>,
    },
    Series {
        children: Vec<MaterialSpec>,
    },
    Parallel {
        children: Vec<MaterialSpec>,
    },
    /// `children: [outer, inner]`.
    Compose {
        children: Vec<MaterialSpec>,
    },
}

impl MaterialFile {
    pub fn new(spec: MaterialSpec) -> Self {
        Self {
            version: FORMAT_VERSION,
            spec,
        }
    }

    pub fn to_material(&self) -> anyhow::Result<Material> {
        if self.version != FORMAT_VERSION {
            bail!("unsupported material spec version {}", self.version);
        }
        build(&self.spec)
    }
}

fn build(spec: &MaterialSpec) -> anyhow::Result<Material> {
    Ok(match spec {
        MaterialSpec::Spring { stiffness } => spring(*stiffness)?,
        MaterialSpec::Dashpot { rate } => dashpot(*rate)?,
        MaterialSpec::Maxwell { stiffness, viscosity } => maxwell(*stiffness, *viscosity)?,
        MaterialSpec::KelvinVoigt { stiffness, viscosity } => {
            kelvin_voigt(*stiffness, *viscosity)?
        }
        MaterialSpec::Stable { alpha, scale } => stable_material(*alpha, *scale)?,
        MaterialSpec::Prony {
            constant,
            drift,
            atoms,
            stable,
        } => {
            let atoms = atoms
                .iter()
                .map(|a| Atom { rate: a.rate, weight: a.weight })
                .collect();
            let stable = stable
                .as_ref()
                .map(|s| viscolevy::StableComponent::new(s.alpha, s.scale))
                .transpose()?;
            Material::Analytic(BernsteinRep::new(
                *constant,
                *drift,
                LevyMeasure::new(atoms, stable)?,
            )?)
        }
        MaterialSpec::Series { children } => {
            let mats = build_children(children, 2)?;
            mats.into_iter()
                .reduce(|a, b| series(&a, &b))
                .expect("at least two children")
        }
        MaterialSpec::Parallel { children } => {
            let mats = build_children(children, 2)?;
            let mut iter = mats.into_iter();
            let mut acc = iter.next().expect("at least two children");
            for m in iter {
                acc = parallel(&acc, &m)?;
            }
            acc
        }
        MaterialSpec::Compose { children } => {
            if children.len() != 2 {
                bail!("compose takes exactly two children [outer, inner], got {}", children.len());
            }
            compose(build(&children[0])?, build(&children[1])?)
        }
    })
}

fn build_children(children: &[MaterialSpec], min: usize) -> anyhow::Result<Vec<Material>> {
    if children.len() < min {
        bail!("combinator needs at least {min} children, got {}", children.len());
    }
    children.iter().map(build).collect()
}

/// Canonical spec of a material value; every variant the library can
/// produce has a serializable form.
pub fn spec_of(m: &Material) -> MaterialSpec {
    match m {
        Material::Analytic(rep) => MaterialSpec::Prony {
            constant: rep.constant(),
            drift: rep.drift(),
            atoms: rep
                .levy()
                .atoms()
                .iter()
                .map(|a| AtomSpec { rate: a.rate, weight: a.weight })
                .collect(),
            stable: rep
                .levy()
                .stable()
                .map(|s| StableSpec { alpha: s.alpha, scale: s.scale }),
        },
        Material::Composed { outer, inner } => MaterialSpec::Compose {
            children: vec![spec_of(outer), spec_of(inner)],
        },
        Material::Series(a, b) => MaterialSpec::Series {
            children: vec![spec_of(a), spec_of(b)],
        },
        Material::Parallel(a, b) => MaterialSpec::Parallel {
            children: vec![spec_of(a), spec_of(b)],
        },
    }
}

/// Load/strain history document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadFile {
    #[serde(default = "default_version")]
    pub version: u32,
    #[serde(default)]
    pub steps: Vec<StepSpec>,
    #[serde(default)]
    pub ramps: Vec<RampSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSpec {
    pub time: f64,
    pub jump: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RampSpec {
    pub start: f64,
    pub end: f64,
    pub rate: f64,
}

impl LoadFile {
    pub fn to_history(&self) -> anyhow::Result<LoadHistory> {
        if self.version != FORMAT_VERSION {
            bail!("unsupported load file version {}", self.version);
        }
        Ok(LoadHistory::new(
            self.steps
                .iter()
                .map(|s| Step { time: s.time, jump: s.jump })
                .collect(),
            self.ramps
                .iter()
                .map(|r| Ramp { start: r.start, end: r.end, rate: r.rate })
                .collect(),
        )?)
    }
}

/// Quadratic-form document: row-major matrices plus observable indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormsFile {
    #[serde(default = "default_version")]
    pub version: u32,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub observables: Vec<usize>,
}

fn matrix_from_rows(rows: &[Vec<f64>], name: &str) -> anyhow::Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 {
        bail!("matrix '{name}' is empty");
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            bail!("matrix '{name}' row {i} has {} entries, expected {n}", row.len());
        }
    }
    Ok(DMatrix::from_row_slice(
        n,
        n,
        &rows.iter().flatten().copied().collect::<Vec<_>>(),
    ))
}

impl FormsFile {
    pub fn to_pair(&self) -> anyhow::Result<QuadraticFormPair> {
        if self.version != FORMAT_VERSION {
            bail!("unsupported forms file version {}", self.version);
        }
        Ok(QuadraticFormPair::new(
            matrix_from_rows(&self.a, "a")?,
            matrix_from_rows(&self.b, "b")?,
            self.observables.clone(),
        )?)
    }
}

/// PAIS characteristics document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaisFile {
    #[serde(default = "default_version")]
    pub version: u32,
    pub start: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
    #[serde(default)]
    pub jumps: Vec<JumpSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpSpec {
    pub point: Vec<f64>,
    pub intensity: f64,
}

impl PaisFile {
    pub fn to_characteristics(&self) -> anyhow::Result<PaisCharacteristics> {
        if self.version != FORMAT_VERSION {
            bail!("unsupported PAIS file version {}", self.version);
        }
        let dim = self.start.len();
        let sigma = matrix_from_rows(&self.sigma, "sigma")?;
        if sigma.nrows() != dim {
            bail!("sigma is {}×{} but start has dimension {dim}", sigma.nrows(), sigma.ncols());
        }
        Ok(PaisCharacteristics::new(
            DVector::from_vec(self.start.clone()),
            sigma,
            self.jumps
                .iter()
                .map(|j| (DVector::from_vec(j.point.clone()), j.intensity))
                .collect(),
        )?)
    }
}

/// Parses a JSON document with file/line diagnostics.
pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, path: &str) -> anyhow::Result<T> {
    serde_json::from_str(text).map_err(|e| {
        anyhow!("{path}:{}:{}: {e}", e.line(), e.column())
    })
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &str) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
    parse_json(&text, path)
}
