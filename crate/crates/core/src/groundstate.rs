//! Ground states annihilated by `A = √U ∂ₓ √U + W_eff`.
//!
//! The kernel is `ψ₀ = exp[−∫ W/U dx] = U^{-1/2} · exp[−∫ W_eff dμ]`.
//! The generic route integrates `W_eff` numerically in μ; the closed forms
//! use the antiderivatives of each family.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{Family, FamilyModel};
use crate::quadrature::{integrate, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveMethod {
    Generic,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WavefunctionTable {
    pub x: Vec<f64>,
    pub psi: Vec<f64>,
    /// 𝒩₀: the factor applied to the unnormalized samples.
    pub normalization: f64,
    pub method: WaveMethod,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundStateOptions {
    /// Largest admissible |ψ| at the grid ends relative to max |ψ|.
    pub edge_tolerance: f64,
    pub quad: QuadOptions,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self {
            edge_tolerance: 1e-4,
            quad: QuadOptions { abs_tol: 1e-13, rel_tol: 1e-13, max_intervals: 200 },
        }
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 3 {
        return Err(Error::Grid("need at least three samples".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Grid("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Uniform spacing, if the grid has one.
pub fn uniform_spacing(grid: &[f64]) -> Option<f64> {
    let n = grid.len();
    if n < 2 {
        return None;
    }
    let h = (grid[n - 1] - grid[0]) / (n - 1) as f64;
    let ok = grid.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h);
    ok.then_some(h)
}

/// ∫ f dx over the samples: Simpson on uniform grids with an even number of
/// panels, trapezoid otherwise.
pub fn integrate_samples(x: &[f64], f: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    if let Some(h) = uniform_spacing(x) {
        if n >= 3 && (n - 1) % 2 == 0 {
            let mut s = f[0] + f[n - 1];
            for (i, v) in f.iter().enumerate().take(n - 1).skip(1) {
                s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            return s * h / 3.0;
        }
    }
    x.windows(2).zip(f.windows(2)).map(|(xw, fw)| 0.5 * (xw[1] - xw[0]) * (fw[0] + fw[1])).sum()
}

// Exponentiate log-amplitudes stably and normalize ∫ψ² dx = 1.
fn finish(x: Vec<f64>, log_psi: Vec<f64>, method: WaveMethod, opts: &GroundStateOptions) -> Result<WavefunctionTable> {
    if log_psi.iter().any(|v| v.is_nan()) {
        return Err(Error::NotNormalizable("ψ₀ is undefined on part of the grid".into()));
    }
    let peak = log_psi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !peak.is_finite() {
        return Err(Error::NotNormalizable("ψ₀ vanishes or overflows on the grid".into()));
    }
    let raw: Vec<f64> = log_psi.iter().map(|l| (l - peak).exp()).collect();
    let n = raw.len();
    let edge = raw[0].max(raw[n - 1]);
    if edge > opts.edge_tolerance {
        return Err(Error::NotNormalizable(format!(
            "|ψ₀| at the grid edge is {edge:.3e} of its maximum; the integral diverges or the grid is too short"
        )));
    }
    let sq: Vec<f64> = raw.iter().map(|p| p * p).collect();
    let norm2 = integrate_samples(&x, &sq);
    let scale = 1.0 / norm2.sqrt();
    let psi = raw.iter().map(|p| p * scale).collect();
    Ok(WavefunctionTable { x, psi, normalization: scale * (-peak).exp(), method, warnings: Vec::new() })
}

/// ψ₀ on `grid` from the generic formula, normalized in ∫ψ² dx.
pub fn psi0_generic(model: &FamilyModel, grid: &[f64]) -> Result<WavefunctionTable> {
    psi0_generic_with(model, grid, &GroundStateOptions::default())
}

pub fn psi0_generic_with(model: &FamilyModel, grid: &[f64], opts: &GroundStateOptions) -> Result<WavefunctionTable> {
    check_grid(grid)?;
    let p = model.params0();
    let mus = grid.iter().map(|&x| model.mumap().mu(x)).collect::<Result<Vec<_>>>()?;
    // W_eff depends on x only through μ
    let w_eff = |mu: f64| -> f64 {
        match model.phi_of_mu(mu, f64::NAN) {
            Ok(phi) => {
                let r = if p.rho == 0.0 { 0.0 } else { p.rho / phi };
                p.lambda * phi + r + p.sigma
            }
            Err(_) => f64::NAN,
        }
    };
    let mut acc = 0.0;
    let mut log_psi = Vec::with_capacity(grid.len());
    for (i, &x) in grid.iter().enumerate() {
        if i > 0 {
            let seg = integrate(w_eff, mus[i - 1], mus[i], &opts.quad).map_err(|_| {
                Error::NotNormalizable(format!("∫W_eff dμ does not converge between x = {} and x = {x}", grid[i - 1]))
            })?;
            acc += seg.value;
        }
        let u = model.profile().u(x);
        log_psi.push(-acc - 0.5 * u.ln());
    }
    finish(grid.to_vec(), log_psi, WaveMethod::Generic, opts)
}

/// log of the unnormalized closed-form ψ₀ (𝒩₀ = 1).
pub fn log_psi0_closed(model: &FamilyModel, x: f64) -> Result<f64> {
    let mu = model.mumap().mu(x)?;
    let u = model.profile().u(x);
    let k = model.coeffs();
    let p = model.params0();
    let need = |ok: bool, what: &str| -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(Error::Unsupported(format!("closed-form ground state of {} needs {what}", model.family())))
        }
    };
    let body = match model.family() {
        Family::Ho => {
            need(p.sigma == 0.0 && k.b == 0.0, "σ = b = 0")?;
            // ω = 2aλ₀, l = ρ₀/a
            let omega = 2.0 * k.a * p.lambda;
            let l = p.rho / k.a;
            let centrifugal = if l == 0.0 {
                0.0
            } else {
                if !(mu > 0.0) {
                    return Err(Error::NonPositiveMu { x, mu });
                }
                -l * mu.ln()
            };
            centrifugal - omega * mu * mu / 4.0
        }
        Family::Morse => {
            need(p.rho == 0.0 && k.b == 0.0, "ρ₀ = b = 0")?;
            -p.sigma * mu - p.lambda / (k.a * k.a) * (k.a * mu).exp()
        }
        Family::PtTrig => {
            need(p.sigma == 0.0 && k.b == 0.0, "σ = b = 0")?;
            let th = (k.a * k.c).sqrt() * mu;
            let (c, s) = (th.cos(), th.sin());
            if !(c > 0.0 && s > 0.0) {
                return Err(Error::Branch { x, mu });
            }
            p.lambda / k.a * c.ln() - p.rho / k.c * s.ln()
        }
        Family::PtHyp => {
            need(p.sigma == 0.0 && k.b == 0.0, "σ = b = 0")?;
            let th = (-k.a * k.c).sqrt() * mu;
            let sh = th.sinh().abs();
            let tail = if p.rho == 0.0 { 0.0 } else { -p.rho / k.c * sh.ln() };
            p.lambda / k.a * th.cosh().ln() + tail
        }
        Family::Coulomb => {
            let cp = model.coulomb_params().expect("Coulomb models carry their parameters");
            if !(mu > 0.0) {
                return Err(Error::NonPositiveMu { x, mu });
            }
            let l1 = cp.l1();
            l1 * mu.ln() - cp.ze2() * mu / (2.0 * l1)
        }
    };
    Ok(body - 0.5 * u.ln())
}

/// Unnormalized closed-form ψ₀ at `x`.
pub fn psi0_closed(model: &FamilyModel, x: f64) -> Result<f64> {
    Ok(log_psi0_closed(model, x)?.exp())
}

/// Closed-form ψ₀ sampled on `grid` and normalized like [`psi0_generic`].
pub fn psi0_closed_table(model: &FamilyModel, grid: &[f64]) -> Result<WavefunctionTable> {
    psi0_closed_table_with(model, grid, &GroundStateOptions::default())
}

pub fn psi0_closed_table_with(model: &FamilyModel, grid: &[f64], opts: &GroundStateOptions) -> Result<WavefunctionTable> {
    check_grid(grid)?;
    let log_psi = grid.iter().map(|&x| log_psi0_closed(model, x)).collect::<Result<Vec<_>>>()?;
    let mut t = finish(grid.to_vec(), log_psi, WaveMethod::ClosedForm, opts)?;
    if model.family() == Family::Ho && model.params0().rho / model.coeffs().a > 0.0 {
        t.warnings.push("l = ρ₀/a > 0: μ^{−l} is singular at μ = 0".into());
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnihilationReport {
    /// max |√U (√U ψ)′ + W_eff ψ| / max |ψ| over the interior points.
    pub max_relative: f64,
    /// Index of the first point with a residual; stencils skip two points per end.
    pub first_index: usize,
    pub pointwise: Vec<f64>,
}

/// Residual of `A ψ₀ = 0` with a five-point derivative of `√U ψ`.
pub fn annihilation_residual(model: &FamilyModel, table: &WavefunctionTable) -> Result<AnnihilationReport> {
    let n = table.x.len();
    if n < 13 {
        return Err(Error::Grid(format!("need at least 9 interior points, got {}", n.saturating_sub(4))));
    }
    let h = uniform_spacing(&table.x).ok_or_else(|| Error::Grid("annihilation residual needs a uniform grid".into()))?;
    let p = model.params0();
    let sqrt_u: Vec<f64> = table.x.iter().map(|&x| model.profile().u(x).sqrt()).collect();
    let g: Vec<f64> = table.psi.iter().zip(&sqrt_u).map(|(psi, s)| psi * s).collect();
    let peak = table.psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut pointwise = Vec::with_capacity(n - 4);
    for i in 2..n - 2 {
        let dg = (g[i - 2] - 8.0 * g[i - 1] + 8.0 * g[i + 1] - g[i + 2]) / (12.0 * h);
        let e = model.evaluate(table.x[i], &p)?;
        pointwise.push((sqrt_u[i] * dg + e.w_eff * table.psi[i]).abs() / peak);
    }
    let max_relative = pointwise.iter().copied().fold(0.0, f64::max);
    Ok(AnnihilationReport { max_relative, first_index: 2, pointwise })
}
