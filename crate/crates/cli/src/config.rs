//! Run configuration: a JSON file, overridden field by field by flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sip_effmass::families::Violation;
use sip_effmass::{registry_get, CoulombParams, Family, FamilyCoeffs, FamilyModel, MassProfile, MuMap, ParamTriple};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputKind {
    Spectrum,
    Potential,
    Groundstate,
    Verify,
    Shapecheck,
}

impl OutputKind {
    pub fn name(self) -> &'static str {
        match self {
            OutputKind::Spectrum => "spectrum",
            OutputKind::Potential => "potential",
            OutputKind::Groundstate => "groundstate",
            OutputKind::Verify => "verify",
            OutputKind::Shapecheck => "shapecheck",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveChoice {
    /// Closed form when the family admits one, generic otherwise.
    #[default]
    Auto,
    Closed,
    Generic,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileSpec {
    pub name: Option<String>,
    pub params: BTreeMap<String, f64>,
    /// CSV with columns `x,m`.
    pub table: Option<PathBuf>,
}

impl ProfileSpec {
    pub fn build(&self) -> Result<MassProfile, CliError> {
        if let Some(path) = &self.table {
            if self.name.as_deref().is_some_and(|n| n != "tabulated") {
                return Err(CliError::config("a table path only goes with the `tabulated` profile"));
            }
            if !self.params.is_empty() {
                return Err(CliError::config("tabulated profiles take no parameters"));
            }
            return Ok(MassProfile::from_csv_path(path)?);
        }
        let name = self.name.as_deref().unwrap_or("constant");
        let mut params = self.params.clone();
        params.entry("m0".into()).or_insert(0.5);
        let list: Vec<(&str, f64)> = params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        Ok(registry_get(name, &list)?)
    }

    pub fn label(&self) -> String {
        if self.table.is_some() {
            return "tabulated".into();
        }
        self.name.clone().unwrap_or_else(|| "constant".into())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FamilySpec {
    pub tag: Option<Family>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub lambda0: Option<f64>,
    pub sigma0: Option<f64>,
    pub rho0: Option<f64>,
    pub z: Option<f64>,
    pub l: Option<u32>,
    pub e2: Option<f64>,
}

/// Family data with defaults filled in, as echoed into outputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedFamily {
    pub tag: Family,
    pub coeffs: FamilyCoeffs,
    pub params0: ParamTriple,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coulomb: Option<CoulombParams>,
}

impl FamilySpec {
    pub fn resolve(&self) -> Result<ResolvedFamily, CliError> {
        let tag = self.tag.ok_or_else(|| CliError::config("no family given (--family or `family.tag`)"))?;
        if tag == Family::Coulomb {
            if self.lambda0.is_some() || self.sigma0.is_some() || self.rho0.is_some() || self.c.is_some() {
                return Err(CliError::config("Coulomb parameters follow from a, b, z, l and e2; drop lambda0/sigma0/rho0/c"));
            }
            let a = self.a.unwrap_or(1.0);
            let z = self.z.ok_or_else(|| CliError::config("Coulomb needs z"))?;
            let b = self.b.ok_or_else(|| CliError::config("Coulomb needs b"))?;
            let mut cp = CoulombParams::new(z, self.l.unwrap_or(0), b);
            if let Some(e2) = self.e2 {
                cp.e2 = e2;
            }
            return Ok(ResolvedFamily { tag, coeffs: cp.coeffs(a), params0: cp.params0(a), coulomb: Some(cp) });
        }
        if self.z.is_some() || self.l.is_some() || self.e2.is_some() {
            return Err(CliError::config("z, l and e2 only apply to the Coulomb family"));
        }
        let a = self.a.ok_or_else(|| CliError::config("family coefficient a is required"))?;
        let lambda = self.lambda0.ok_or_else(|| CliError::config("lambda0 is required"))?;
        Ok(ResolvedFamily {
            tag,
            coeffs: FamilyCoeffs::new(a, self.b.unwrap_or(0.0), self.c.unwrap_or(0.0)),
            params0: ParamTriple::new(lambda, self.sigma0.unwrap_or(0.0), self.rho0.unwrap_or(0.0)),
            coulomb: None,
        })
    }

    /// Set one named field; used by flags and sweep axes.
    pub fn set(&mut self, key: &str, v: f64) -> Result<(), CliError> {
        match key {
            "a" => self.a = Some(v),
            "b" => self.b = Some(v),
            "c" => self.c = Some(v),
            "lambda0" => self.lambda0 = Some(v),
            "sigma0" => self.sigma0 = Some(v),
            "rho0" => self.rho0 = Some(v),
            "z" => self.z = Some(v),
            "e2" => self.e2 = Some(v),
            "l" => {
                if !(v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64) {
                    return Err(CliError::config(format!("l must be a non-negative integer, got {v}")));
                }
                self.l = Some(v as u32);
            }
            _ => return Err(CliError::config(format!("unknown family field `{key}`"))),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_lo: f64,
    pub x_hi: f64,
    #[serde(default = "default_points")]
    pub n_points: usize,
}

fn default_points() -> usize {
    4000
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Largest admissible Richardson estimate in `verify`.
    pub richardson: f64,
    /// Gap difference accepted as a match in `verify`.
    pub gap_match: f64,
    /// Scaled shape-invariance residual reported as a pass.
    pub shape: f64,
    /// Largest |ψ₀| at the grid ends relative to its maximum.
    pub edge: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { richardson: 5e-3, gap_match: 5e-3, shape: 1e-9, edge: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    /// Field name → values; points are the cartesian product in key order.
    pub axes: BTreeMap<String, Vec<f64>>,
    /// Profiles to cross with the axes; empty means the base profile.
    pub profiles: Vec<ProfileSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub profile: ProfileSpec,
    pub family: FamilySpec,
    pub grid: Option<GridConfig>,
    /// Number of levels.
    pub n_levels: usize,
    /// What `run` and `sweep` produce.
    pub outputs: Vec<OutputKind>,
    pub out_dir: PathBuf,
    pub format: Format,
    pub tolerances: Tolerances,
    /// Waive q ≠ 0 for constrained reductions.
    pub formal: bool,
    pub wavefunction: WaveChoice,
    pub sweep: SweepSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            profile: ProfileSpec::default(),
            family: FamilySpec::default(),
            grid: None,
            n_levels: 5,
            outputs: vec![OutputKind::Spectrum],
            out_dir: PathBuf::from("."),
            format: Format::Csv,
            tolerances: Tolerances::default(),
            formal: false,
            wavefunction: WaveChoice::Auto,
            sweep: SweepSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    /// Build the model; family constraints are checked here, before any numerics.
    pub fn model(&self) -> Result<(FamilyModel, ResolvedFamily), CliError> {
        if self.n_levels == 0 {
            return Err(CliError::config("n_levels must be at least 1"));
        }
        let fam = self.family.resolve()?;
        let profile = self.profile.build()?;
        let map = Arc::new(MuMap::new(profile)?);
        let model = match fam.tag {
            Family::Coulomb => FamilyModel::coulomb(fam.coulomb.expect("resolved Coulomb data"), fam.coeffs.a, map),
            tag if self.formal => FamilyModel::new_formal(tag, fam.coeffs, fam.params0, map),
            tag => FamilyModel::new(tag, fam.coeffs, fam.params0, map),
        }
        .map_err(|e| match e {
            sip_effmass::Error::InvalidModel(v) => CliError::violations(&v),
            other => other.into(),
        })?;
        Ok((model, fam))
    }
}

pub fn violation_ids(v: &[Violation]) -> Vec<String> {
    v.iter().map(|x| x.id().to_string()).collect()
}
