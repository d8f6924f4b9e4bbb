//! One configuration in, one directory of artifacts out.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sip_effmass::families::{ResidualCoefficients, ShapeCheck};
use sip_effmass::groundstate::{
    annihilation_residual, psi0_closed_table_with, psi0_generic_with, GroundStateOptions, WaveMethod, WavefunctionTable,
};
use sip_effmass::spectra::{coulomb_spectrum_sum, spectrum_closed, spectrum_sum};
use sip_effmass::verify::{compare, discretize, rayleigh_quotient, CompareOptions, CompareReport, GridSpec};
use sip_effmass::{Error, Family, FamilyModel};

use crate::config::{Format, OutputKind, ResolvedFamily, RunConfig, WaveChoice};
use crate::error::CliError;
use crate::output::{fmt_f64, json_document, write_file, CsvTable};

const MU_WINDOW: (f64, f64) = (-10.0, 10.0);
const COULOMB_WINDOW: (f64, f64) = (0.0, 200.0);
const MU_MARGIN: f64 = 1e-3;
const SHAPE_POINTS: usize = 1000;

pub struct Context {
    pub cfg: RunConfig,
    pub model: FamilyModel,
    pub family: ResolvedFamily,
}

impl Context {
    pub fn new(cfg: &RunConfig) -> Result<Self, CliError> {
        let (model, family) = cfg.model()?;
        Ok(Self { cfg: cfg.clone(), model, family })
    }

    fn describe(&self) -> serde_json::Value {
        let params: BTreeMap<&str, f64> = self.model.profile().params().iter().map(|(k, v)| (k.as_str(), *v)).collect();
        serde_json::json!({
            "family": self.family,
            "profile": { "name": self.model.profile().name(), "params": params },
            "formal": self.cfg.formal,
        })
    }

    fn comments(&self, t: &mut CsvTable) {
        let f = &self.family;
        let mut line = format!(
            "family: {} a={} b={} c={} lambda0={} sigma0={} rho0={}",
            f.tag, f.coeffs.a, f.coeffs.b, f.coeffs.c, f.params0.lambda, f.params0.sigma, f.params0.rho
        );
        if let Some(cp) = &f.coulomb {
            line.push_str(&format!(" z={} l={} e2={}", cp.z, cp.l, cp.e2));
        }
        t.comment(line);
        let params: Vec<String> = self.model.profile().params().iter().map(|(k, v)| format!("{k}={v}")).collect();
        t.comment(format!("profile: {} {}", self.model.profile().name(), params.join(" ")).trim_end().to_string());
    }

    /// The configured grid, or a default spanning μ ∈ [−10, 10] (Coulomb: (0, 200]).
    pub fn grid(&self) -> Result<GridSpec, CliError> {
        if let Some(g) = self.cfg.grid {
            return Ok(GridSpec::new(g.x_lo, g.x_hi, g.n_points)?);
        }
        let m = &self.model;
        let p = m.params0();
        let restricted = matches!(m.family(), Family::PtTrig | Family::Coulomb) || p.rho != 0.0;
        let (lo, hi) = if restricted {
            let window = if m.family() == Family::Coulomb { COULOMB_WINDOW } else { MU_WINDOW };
            let ends = m.regular_grid(2, window, MU_MARGIN)?;
            (ends[0], ends[1])
        } else {
            let (r0, r1) = m.mumap().range();
            let (a, b) = (MU_WINDOW.0.max(r0 + MU_MARGIN), MU_WINDOW.1.min(r1 - MU_MARGIN));
            (m.mumap().mu_inverse(a)?, m.mumap().mu_inverse(b)?)
        };
        Ok(GridSpec::new(lo, hi, 4000)?)
    }
}

/// Run `kinds` for `cfg` into `out_dir`; returns the file names written.
pub fn execute(cfg: &RunConfig, kinds: &[OutputKind], out_dir: &Path) -> Result<Vec<String>, CliError> {
    let ctx = Context::new(cfg)?;
    fs::create_dir_all(out_dir).map_err(|e| CliError::config(format!("cannot create {}: {e}", out_dir.display())))?;
    let mut written = Vec::new();
    for &kind in kinds {
        let (name, body) = match kind {
            OutputKind::Spectrum => spectrum(&ctx)?,
            OutputKind::Potential => potential(&ctx)?,
            OutputKind::Groundstate => groundstate(&ctx)?,
            OutputKind::Verify => verify(&ctx)?,
            OutputKind::Shapecheck => shapecheck(&ctx)?,
        };
        write_file(&out_dir.join(&name), &body)?;
        written.push(name);
    }
    Ok(written)
}

fn file_name(kind: OutputKind, format: Format) -> String {
    format!("{}.{}", kind.name(), format.ext())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub n: usize,
    pub e_partial_sum: f64,
    pub e_closed: f64,
    pub diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumResult {
    pub levels: Vec<SpectrumRow>,
    pub warnings: Vec<String>,
}

pub fn spectrum_rows(model: &FamilyModel, n_levels: usize) -> Result<SpectrumResult, CliError> {
    let mut warnings = Vec::new();
    let pairs: Vec<(f64, f64)> = if model.family() == Family::Coulomb {
        let cp = model.coulomb_params().expect("Coulomb models carry their parameters");
        warnings.push("row n is n_r with N = 2(n_r+1); E is the closed Coulomb sum".into());
        (0..n_levels as u32)
            .map(|n_r| coulomb_spectrum_sum(cp, 2 * (n_r + 1)).map(|s| (s.summed, s.closed)))
            .collect::<Result<_, Error>>()?
    } else {
        let sum = spectrum_sum(model, n_levels - 1);
        let closed = spectrum_closed(model, n_levels - 1)?;
        warnings.extend(sum.warnings.iter().cloned());
        sum.energies().into_iter().zip(closed.energies()).collect()
    };
    let levels = pairs
        .into_iter()
        .enumerate()
        .map(|(n, (s, c))| SpectrumRow { n, e_partial_sum: s, e_closed: c, diff: c - s })
        .collect();
    Ok(SpectrumResult { levels, warnings })
}

fn spectrum(ctx: &Context) -> Result<(String, String), CliError> {
    let res = spectrum_rows(&ctx.model, ctx.cfg.n_levels)?;
    let name = file_name(OutputKind::Spectrum, ctx.cfg.format);
    let body = match ctx.cfg.format {
        Format::Json => json_document(&ctx.describe(), &res)?,
        Format::Csv => {
            let mut t = CsvTable::new(&["n", "E_partial_sum", "E_closed", "diff"]);
            ctx.comments(&mut t);
            for w in &res.warnings {
                t.comment(format!("warning: {w}"));
            }
            for r in &res.levels {
                t.row(&[r.n.to_string(), fmt_f64(r.e_partial_sum), fmt_f64(r.e_closed), fmt_f64(r.diff)]);
            }
            t.render()
        }
    };
    Ok((name, body))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialRow {
    pub x: f64,
    pub mu: f64,
    pub w: f64,
    pub v1: f64,
    pub v2: f64,
    pub v1_eff: f64,
    pub v2_eff: f64,
}

fn potential(ctx: &Context) -> Result<(String, String), CliError> {
    let grid = ctx.grid()?;
    let p = ctx.model.params0();
    let rows = grid
        .nodes()
        .into_iter()
        .map(|x| {
            let e = ctx.model.evaluate(x, &p)?;
            Ok(PotentialRow { x, mu: e.mu, w: e.w, v1: e.v1, v2: e.v2, v1_eff: e.v1_eff, v2_eff: e.v2_eff })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let name = file_name(OutputKind::Potential, ctx.cfg.format);
    let body = match ctx.cfg.format {
        Format::Json => json_document(&ctx.describe(), &serde_json::json!({ "grid": grid, "rows": rows }))?,
        Format::Csv => {
            let mut t = CsvTable::new(&["x", "mu", "W", "V1", "V2", "V1eff", "V2eff"]);
            ctx.comments(&mut t);
            for r in &rows {
                t.row(&[r.x, r.mu, r.w, r.v1, r.v2, r.v1_eff, r.v2_eff].map(fmt_f64));
            }
            t.render()
        }
    };
    Ok((name, body))
}

/// ψ₀ on `grid` by the configured route.
pub fn ground_state(model: &FamilyModel, grid: &[f64], choice: WaveChoice, edge: f64) -> Result<WavefunctionTable, CliError> {
    let opts = GroundStateOptions { edge_tolerance: edge, ..Default::default() };
    let table = match choice {
        WaveChoice::Generic => psi0_generic_with(model, grid, &opts)?,
        WaveChoice::Closed => psi0_closed_table_with(model, grid, &opts)?,
        WaveChoice::Auto => match psi0_closed_table_with(model, grid, &opts) {
            Err(Error::Unsupported(_)) => psi0_generic_with(model, grid, &opts)?,
            other => other?,
        },
    };
    Ok(table)
}

fn groundstate(ctx: &Context) -> Result<(String, String), CliError> {
    let grid = ctx.grid()?;
    let table = ground_state(&ctx.model, &grid.nodes(), ctx.cfg.wavefunction, ctx.cfg.tolerances.edge)?;
    let report = annihilation_residual(&ctx.model, &table)?;
    let residual = |i: usize| -> f64 {
        i.checked_sub(report.first_index).and_then(|k| report.pointwise.get(k)).copied().unwrap_or(f64::NAN)
    };
    let name = file_name(OutputKind::Groundstate, ctx.cfg.format);
    let body = match ctx.cfg.format {
        Format::Json => {
            let residuals: Vec<Option<f64>> = (0..table.x.len()).map(|i| Some(residual(i)).filter(|v| v.is_finite())).collect();
            json_document(
                &ctx.describe(),
                &serde_json::json!({
                    "grid": grid,
                    "method": table.method,
                    "normalization": table.normalization,
                    "max_residual": report.max_relative,
                    "warnings": table.warnings,
                    "x": table.x,
                    "psi": table.psi,
                    "residual": residuals,
                }),
            )?
        }
        Format::Csv => {
            let mut t = CsvTable::new(&["x", "psi", "residual"]);
            ctx.comments(&mut t);
            let method = match table.method {
                WaveMethod::Generic => "generic",
                WaveMethod::ClosedForm => "closed_form",
            };
            t.comment(format!("method: {method}, normalization: {}", fmt_f64(table.normalization)));
            t.comment(format!("max relative annihilation residual: {}", fmt_f64(report.max_relative)));
            for w in &table.warnings {
                t.comment(format!("warning: {w}"));
            }
            for i in 0..table.x.len() {
                t.row(&[fmt_f64(table.x[i]), fmt_f64(table.psi[i]), fmt_f64(residual(i))]);
            }
            t.render()
        }
    };
    Ok((name, body))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyResult {
    pub report: CompareReport,
    /// ψ₀ᵀHψ₀/ψ₀ᵀψ₀ on the same operator, when ψ₀ is computable there.
    pub rayleigh_quotient: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ground_state_error: Option<String>,
}

pub fn verify_model(model: &FamilyModel, grid: &GridSpec, cfg: &RunConfig) -> Result<VerifyResult, CliError> {
    let opts = CompareOptions { tolerance: cfg.tolerances.richardson, match_tolerance: cfg.tolerances.gap_match };
    let report = compare(model, grid, cfg.n_levels.min(sip_effmass::verify::MAX_LEVELS), &opts)?;
    let op = discretize(model, grid)?;
    let rq = ground_state(model, &op.x, cfg.wavefunction, cfg.tolerances.edge)
        .and_then(|t| rayleigh_quotient(&op, &t.psi).map_err(CliError::from));
    let (rayleigh_quotient, ground_state_error) = match rq {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(e.message)),
    };
    Ok(VerifyResult { report, rayleigh_quotient, ground_state_error })
}

fn verify(ctx: &Context) -> Result<(String, String), CliError> {
    if ctx.cfg.n_levels > sip_effmass::verify::MAX_LEVELS {
        return Err(CliError::config(format!("verify computes at most {} levels", sip_effmass::verify::MAX_LEVELS)));
    }
    let grid = ctx.grid()?;
    let res = verify_model(&ctx.model, &grid, &ctx.cfg)?;
    Ok(("verify.json".into(), json_document(&ctx.describe(), &res)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeResult {
    pub max_residual: f64,
    /// max residual / max(1, max |V|).
    pub scaled: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub worst_x: f64,
    pub remainder: f64,
    pub max_abs_v: f64,
    pub points: usize,
    pub grid: GridSpec,
    /// Exact decomposition of the residual in powers of φ.
    pub residual_coefficients: ResidualCoefficients,
}

pub fn shape_check(model: &FamilyModel, grid: &GridSpec, tolerance: f64) -> Result<ShapeResult, CliError> {
    let mu_lo = model.mumap().mu(grid.x_lo)?;
    let mu_hi = model.mumap().mu(grid.x_hi)?;
    let xs = model.regular_grid(SHAPE_POINTS, (mu_lo, mu_hi), MU_MARGIN)?;
    let check: ShapeCheck = model.shape_invariance_residual(&xs)?;
    let scaled = check.scaled();
    Ok(ShapeResult {
        max_residual: check.max_residual,
        scaled,
        tolerance,
        pass: scaled <= tolerance,
        worst_x: check.worst_x,
        remainder: check.remainder,
        max_abs_v: check.max_abs_v,
        points: check.points,
        grid: *grid,
        residual_coefficients: model.residual_coefficients(model.params0()),
    })
}

fn shapecheck(ctx: &Context) -> Result<(String, String), CliError> {
    let grid = ctx.grid()?;
    let res = shape_check(&ctx.model, &grid, ctx.cfg.tolerances.shape)?;
    Ok(("shapecheck.json".into(), json_document(&ctx.describe(), &res)?))
}
