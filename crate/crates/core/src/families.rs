//! Superpotential families on the alternating (π = −1) branch.
//!
//! Every family writes `W = λφ + ρ/φ + σ + U′/2` with φ(x) solving
//! `U φ′ = A φ² + B φ + C`:
//!
//! | family  | (A, B, C) | φ(μ)                                   |
//! |---------|-----------|----------------------------------------|
//! | HO      | (0, 0, a) | aμ + b                                 |
//! | Morse   | (0, a, b) | (e^{aμ} − b)/a                         |
//! | PT trig | (a, b, c) | (√Δ/2a)·tan(√Δ μ/2) − b/2a, Δ = 4ac − b² > 0 |
//! | PT hyp  | (a, b, c) | −(√−Δ/2a)·tanh(√−Δ μ/2) − b/2a, Δ < 0  |
//! | Coulomb | (a, b, c) | −(2 + bμ)/(2aμ), Δ = 0                  |
//!
//! For HO the coefficient `b` only shifts φ; `c` is unused by HO and Morse.
//! W′ always comes from the ODE, never from differencing.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::massprofile::{MassProfile, MuMap};

/// Half-width of the excluded band at the ends of the principal tan branch.
pub const BRANCH_GUARD: f64 = 1e-6;
/// |φ| below this with ρ ≠ 0 is reported as a pole.
pub const POLE_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Ho,
    Morse,
    PtTrig,
    PtHyp,
    Coulomb,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::Ho, Family::Morse, Family::PtTrig, Family::PtHyp, Family::Coulomb];

    pub fn name(self) -> &'static str {
        match self {
            Family::Ho => "ho",
            Family::Morse => "morse",
            Family::PtTrig => "pt_trig",
            Family::PtHyp => "pt_hyp",
            Family::Coulomb => "coulomb",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "ho" | "oscillator" => Ok(Family::Ho),
            "morse" => Ok(Family::Morse),
            "pt_trig" | "pttrig" => Ok(Family::PtTrig),
            "pt_hyp" | "pthyp" => Ok(Family::PtHyp),
            "coulomb" => Ok(Family::Coulomb),
            _ => Err(Error::InvalidParam(format!("unknown family `{s}`"))),
        }
    }
}

/// (λ, σ, ρ).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ParamTriple {
    pub lambda: f64,
    pub sigma: f64,
    pub rho: f64,
}

impl ParamTriple {
    pub fn new(lambda: f64, sigma: f64, rho: f64) -> Self {
        Self { lambda, sigma, rho }
    }

    pub fn is_finite(&self) -> bool {
        self.lambda.is_finite() && self.sigma.is_finite() && self.rho.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FamilyCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl FamilyCoeffs {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    /// Δ = 4ac − b².
    pub fn discriminant(&self) -> f64 {
        4.0 * self.a * self.c - self.b * self.b
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite()
    }
}

/// Coulomb data: the family fixes λ₀, σ₀, ρ₀ and c from these.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoulombParams {
    pub z: f64,
    #[serde(default = "unit_charge")]
    pub e2: f64,
    pub l: u32,
    pub b: f64,
}

fn unit_charge() -> f64 {
    1.0
}

impl CoulombParams {
    pub fn new(z: f64, l: u32, b: f64) -> Self {
        Self { z, e2: 1.0, l, b }
    }

    /// Z e².
    pub fn ze2(&self) -> f64 {
        self.z * self.e2
    }

    pub fn l1(&self) -> f64 {
        self.l as f64 + 1.0
    }

    /// (λ₀, σ₀, ρ₀) for coefficient `a`.
    pub fn params0(&self, a: f64) -> ParamTriple {
        let l1 = self.l1();
        ParamTriple::new(a * l1, 0.5 * self.b * l1 + self.ze2() / (2.0 * l1), 0.0)
    }

    /// Coefficients with c = b²/4a (Δ = 0).
    pub fn coeffs(&self, a: f64) -> FamilyCoeffs {
        FamilyCoeffs::new(a, self.b, self.b * self.b / (4.0 * a))
    }
}

/// A violated family constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Violation {
    ANegative,
    DeltaPositive,
    DeltaNegative,
    DeltaZero,
    ANonzero,
    BNonzero,
    QNonzero,
    RhoZero,
    Finite,
}

impl Violation {
    /// Short identifier of the required condition, e.g. `"a<0"`.
    pub fn id(self) -> &'static str {
        match self {
            Violation::ANegative => "a<0",
            Violation::DeltaPositive => "Δ>0",
            Violation::DeltaNegative => "Δ<0",
            Violation::DeltaZero => "Δ=0",
            Violation::ANonzero => "a≠0",
            Violation::BNonzero => "b≠0",
            Violation::QNonzero => "q≠0",
            Violation::RhoZero => "ρ₀=0",
            Violation::Finite => "finite",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// (A, B, C) of the φ equation `U φ′ = Aφ² + Bφ + C`.
pub fn ode_coefficients(family: Family, k: &FamilyCoeffs) -> (f64, f64, f64) {
    match family {
        Family::Ho => (0.0, 0.0, k.a),
        Family::Morse => (0.0, k.a, k.b),
        Family::PtTrig | Family::PtHyp | Family::Coulomb => (k.a, k.b, k.c),
    }
}

/// One step of the parameter recursion.
pub fn next_params(family: Family, k: &FamilyCoeffs, p: ParamTriple) -> ParamTriple {
    match family {
        Family::Ho => ParamTriple::new(p.lambda, p.sigma, -(p.rho + k.a)),
        Family::Morse => ParamTriple::new(p.lambda, p.sigma + k.a, -(p.rho + k.b)),
        Family::PtTrig | Family::PtHyp | Family::Coulomb => {
            ParamTriple::new(p.lambda + k.a, p.sigma + k.b, -(p.rho + k.c))
        }
    }
}

/// `q(λ_k, λ_{k+1})`, the right-hand side of the constant part of the condition.
pub fn q_value(family: Family, k: &FamilyCoeffs, p0: ParamTriple, p1: ParamTriple) -> f64 {
    match family {
        Family::Ho => k.a * (p1.lambda + p0.lambda),
        Family::Morse => k.b * (p1.lambda + p0.lambda),
        Family::PtTrig | Family::PtHyp | Family::Coulomb => {
            k.c * (p1.lambda + p0.lambda) - k.a * (p1.rho - p0.rho)
        }
    }
}

/// R(λ_k) = q − (σ_{k+1}² − σ_k²) − 2(ρ_{k+1}λ_{k+1} − ρ_kλ_k).
pub fn remainder(family: Family, k: &FamilyCoeffs, p: ParamTriple) -> f64 {
    let p1 = next_params(family, k, p);
    q_value(family, k, p, p1) - (p1.sigma * p1.sigma - p.sigma * p.sigma) - 2.0 * (p1.rho * p1.lambda - p.rho * p.lambda)
}

fn close_to_zero(v: f64, scale: f64) -> bool {
    v.abs() <= 1e-12 * scale.max(1.0)
}

/// Constraint check; an empty list means the triple is admissible.
pub fn validate(family: Family, k: &FamilyCoeffs, p0: &ParamTriple) -> Vec<Violation> {
    let mut v = Vec::new();
    if !k.is_finite() || !p0.is_finite() {
        v.push(Violation::Finite);
        return v;
    }
    let delta = k.discriminant();
    let dscale = (4.0 * k.a * k.c).abs().max(k.b * k.b);
    let q = q_value(family, k, *p0, next_params(family, k, *p0));
    match family {
        Family::Ho => {
            if k.a == 0.0 {
                v.push(Violation::ANonzero);
            }
        }
        Family::Morse => {
            if !(k.a < 0.0) {
                v.push(Violation::ANegative);
            }
        }
        Family::PtTrig => {
            if k.a == 0.0 {
                v.push(Violation::ANonzero);
            }
            if !(delta > 0.0) || close_to_zero(delta, dscale) {
                v.push(Violation::DeltaPositive);
            }
        }
        Family::PtHyp => {
            if k.a == 0.0 {
                v.push(Violation::ANonzero);
            }
            if !(delta < 0.0) || close_to_zero(delta, dscale) {
                v.push(Violation::DeltaNegative);
            }
        }
        Family::Coulomb => {
            if !close_to_zero(delta, dscale) {
                v.push(Violation::DeltaZero);
            }
            if k.a == 0.0 {
                v.push(Violation::ANonzero);
            }
            if k.b == 0.0 {
                v.push(Violation::BNonzero);
            }
            if p0.rho != 0.0 {
                v.push(Violation::RhoZero);
            }
        }
    }
    if q == 0.0 {
        v.push(Violation::QNonzero);
    }
    v
}

/// Everything a family evaluates at one point, for one parameter triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointEval {
    pub x: f64,
    pub mu: f64,
    pub phi: f64,
    pub u: f64,
    pub du: f64,
    pub d2u: f64,
    pub w: f64,
    pub w_eff: f64,
    /// U·W_eff′.
    pub u_dw_eff: f64,
    /// W′.
    pub dw: f64,
    pub v1: f64,
    pub v2: f64,
    pub v1_eff: f64,
    pub v2_eff: f64,
}

/// Coefficients of `V₂,eff(λ₀) − V₁,eff(λ₁)` in powers of φ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualCoefficients {
    pub phi2: f64,
    pub phi1: f64,
    pub constant: f64,
    pub inv_phi1: f64,
    pub inv_phi2: f64,
}

impl ResidualCoefficients {
    pub fn eval(&self, phi: f64) -> f64 {
        self.phi2 * phi * phi + self.phi1 * phi + self.constant + self.inv_phi1 / phi + self.inv_phi2 / (phi * phi)
    }

    /// True when the difference carries no φ dependence.
    pub fn is_x_independent(&self, tol: f64) -> bool {
        [self.phi2, self.phi1, self.inv_phi1, self.inv_phi2].iter().all(|c| c.abs() <= tol)
    }
}

/// Exact expansion of `V₂,eff(λ₀) − V₁,eff(λ₁)` with λ₁ from [`next_params`].
pub fn residual_coefficients(family: Family, k: &FamilyCoeffs, p0: ParamTriple) -> ResidualCoefficients {
    let p1 = next_params(family, k, p0);
    let (a, b, c) = ode_coefficients(family, k);
    let (l0, s0, r0) = (p0.lambda, p0.sigma, p0.rho);
    let (l1, s1, r1) = (p1.lambda, p1.sigma, p1.rho);
    ResidualCoefficients {
        phi2: (l0 + l1) * (l0 - l1 + a),
        phi1: 2.0 * (l0 * s0 - l1 * s1) + b * (l0 + l1),
        constant: s0 * s0 - s1 * s1 + 2.0 * (l0 * r0 - l1 * r1) + c * (l0 + l1) - a * (r0 + r1),
        inv_phi1: 2.0 * (r0 * s0 - r1 * s1) - b * (r0 + r1),
        inv_phi2: (r0 + r1) * (r0 - r1 - c),
    }
}

/// Result of [`FamilyModel::shape_invariance_residual`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeCheck {
    /// max |V₂,eff(λ₀) − V₁,eff(λ₁) − R(λ₀)| over the grid.
    pub max_residual: f64,
    /// x at which the maximum occurs.
    pub worst_x: f64,
    /// max of |V₂,eff(λ₀)| and |V₁,eff(λ₁)| over the grid.
    pub max_abs_v: f64,
    pub remainder: f64,
    pub points: usize,
}

impl ShapeCheck {
    /// Residual relative to `max(1, max|V|)`.
    pub fn scaled(&self) -> f64 {
        self.max_residual / self.max_abs_v.max(1.0)
    }
}

#[derive(Debug, Clone)]
pub struct FamilyModel {
    family: Family,
    coeffs: FamilyCoeffs,
    params0: ParamTriple,
    mumap: Arc<MuMap>,
    coulomb: Option<CoulombParams>,
    waived: Vec<Violation>,
}

impl FamilyModel {
    /// Validated model. Coulomb models go through [`FamilyModel::coulomb`].
    pub fn new(family: Family, coeffs: FamilyCoeffs, params0: ParamTriple, mumap: Arc<MuMap>) -> Result<Self> {
        if family == Family::Coulomb {
            return Err(Error::Unsupported(
                "Coulomb parameters are derived from (Z, l, b); use FamilyModel::coulomb".into(),
            ));
        }
        let v = validate(family, &coeffs, &params0);
        if !v.is_empty() {
            return Err(Error::InvalidModel(v));
        }
        Ok(Self { family, coeffs, params0, mumap, coulomb: None, waived: Vec::new() })
    }

    /// Like [`new`](Self::new) but tolerates `q = 0`, which the constrained
    /// reductions (e.g. Morse with ρ₀ = b = 0) need. The waiver is recorded.
    pub fn new_formal(family: Family, coeffs: FamilyCoeffs, params0: ParamTriple, mumap: Arc<MuMap>) -> Result<Self> {
        if family == Family::Coulomb {
            return Self::new(family, coeffs, params0, mumap);
        }
        let mut v = validate(family, &coeffs, &params0);
        let waived: Vec<Violation> = v.iter().copied().filter(|x| *x == Violation::QNonzero).collect();
        v.retain(|x| *x != Violation::QNonzero);
        if !v.is_empty() {
            return Err(Error::InvalidModel(v));
        }
        Ok(Self { family, coeffs, params0, mumap, coulomb: None, waived })
    }

    /// Coulomb model: λ₀ = a(l+1), σ₀ = b(l+1)/2 + Ze²/2(l+1), ρ₀ = 0, c = b²/4a.
    pub fn coulomb(cp: CoulombParams, a: f64, mumap: Arc<MuMap>) -> Result<Self> {
        if !(cp.z.is_finite() && cp.e2.is_finite()) {
            return Err(Error::InvalidModel(vec![Violation::Finite]));
        }
        if a == 0.0 {
            return Err(Error::InvalidModel(vec![Violation::ANonzero]));
        }
        let coeffs = cp.coeffs(a);
        let params0 = cp.params0(a);
        let v = validate(Family::Coulomb, &coeffs, &params0);
        if !v.is_empty() {
            return Err(Error::InvalidModel(v));
        }
        Ok(Self { family: Family::Coulomb, coeffs, params0, mumap, coulomb: Some(cp), waived: Vec::new() })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn coeffs(&self) -> &FamilyCoeffs {
        &self.coeffs
    }

    pub fn params0(&self) -> ParamTriple {
        self.params0
    }

    pub fn mumap(&self) -> &MuMap {
        &self.mumap
    }

    pub fn mumap_arc(&self) -> Arc<MuMap> {
        Arc::clone(&self.mumap)
    }

    pub fn profile(&self) -> &MassProfile {
        self.mumap.profile()
    }

    pub fn coulomb_params(&self) -> Option<&CoulombParams> {
        self.coulomb.as_ref()
    }

    /// Constraints waived by [`new_formal`](Self::new_formal).
    pub fn waived(&self) -> &[Violation] {
        &self.waived
    }

    pub fn ode_coefficients(&self) -> (f64, f64, f64) {
        ode_coefficients(self.family, &self.coeffs)
    }

    pub fn next_params(&self, pk: ParamTriple) -> ParamTriple {
        next_params(self.family, &self.coeffs, pk)
    }

    /// λ_k from λ₀ after `k` steps.
    pub fn params_at(&self, k: usize) -> ParamTriple {
        (0..k).fold(self.params0, |p, _| self.next_params(p))
    }

    pub fn remainder_r(&self, pk: ParamTriple) -> f64 {
        remainder(self.family, &self.coeffs, pk)
    }

    pub fn residual_coefficients(&self, pk: ParamTriple) -> ResidualCoefficients {
        residual_coefficients(self.family, &self.coeffs, pk)
    }

    /// φ as a function of μ; `x` is only used in error reports.
    pub fn phi_of_mu(&self, mu: f64, x: f64) -> Result<f64> {
        let FamilyCoeffs { a, b, .. } = self.coeffs;
        let delta = self.coeffs.discriminant();
        match self.family {
            Family::Ho => Ok(a * mu + b),
            Family::Morse => Ok(((a * mu).exp() - b) / a),
            Family::PtTrig => {
                let s = delta.sqrt();
                let theta = 0.5 * s * mu;
                if !(theta > BRANCH_GUARD && theta < FRAC_PI_2 - BRANCH_GUARD) {
                    return Err(Error::Branch { x, mu });
                }
                Ok(s / (2.0 * a) * theta.tan() - b / (2.0 * a))
            }
            Family::PtHyp => {
                let s = (-delta).sqrt();
                Ok(-s / (2.0 * a) * (0.5 * s * mu).tanh() - b / (2.0 * a))
            }
            Family::Coulomb => {
                if !(mu > 0.0) {
                    return Err(Error::NonPositiveMu { x, mu });
                }
                Ok(-(2.0 + b * mu) / (2.0 * a * mu))
            }
        }
    }

    pub fn phi(&self, x: f64) -> Result<f64> {
        let mu = self.mumap.mu(x)?;
        self.phi_of_mu(mu, x)
    }

    /// Full evaluation at `x` for parameters `p`.
    pub fn evaluate(&self, x: f64, p: &ParamTriple) -> Result<PointEval> {
        let mu = self.mumap.mu(x)?;
        self.evaluate_at(x, mu, p)
    }

    /// As [`evaluate`](Self::evaluate) with μ(x) supplied by the caller.
    pub fn evaluate_at(&self, x: f64, mu: f64, p: &ParamTriple) -> Result<PointEval> {
        let phi = self.phi_of_mu(mu, x)?;
        if p.rho != 0.0 && phi.abs() < POLE_GUARD {
            return Err(Error::Pole { x, phi });
        }
        let (u, du, d2u) = self.profile().u3(x);
        let (aa, bb, cc) = self.ode_coefficients();
        let u_dphi = (aa * phi + bb) * phi + cc;
        // ρ = 0 drops the 1/φ terms, so φ = 0 is then a regular point
        let (rho_phi, rho_phi2) = if p.rho == 0.0 { (0.0, 0.0) } else { (p.rho / phi, p.rho / (phi * phi)) };
        let w_eff = p.lambda * phi + rho_phi + p.sigma;
        let u_dw_eff = (p.lambda - rho_phi2) * u_dphi;
        let w = w_eff + 0.5 * du;
        let dw = u_dw_eff / u + 0.5 * d2u;
        let v1 = w * w - du * w - u * dw;
        let v2 = v1 + 2.0 * u * dw - u * d2u;
        let w2 = w_eff * w_eff;
        Ok(PointEval {
            x,
            mu,
            phi,
            u,
            du,
            d2u,
            w,
            w_eff,
            u_dw_eff,
            dw,
            v1,
            v2,
            v1_eff: w2 - u_dw_eff,
            v2_eff: w2 + u_dw_eff,
        })
    }

    pub fn superpotential_w(&self, x: f64) -> Result<f64> {
        Ok(self.evaluate(x, &self.params0)?.w)
    }

    pub fn potential_v1(&self, x: f64) -> Result<f64> {
        Ok(self.evaluate(x, &self.params0)?.v1)
    }

    pub fn potential_v2(&self, x: f64) -> Result<f64> {
        Ok(self.evaluate(x, &self.params0)?.v2)
    }

    /// (V₁,eff, V₂,eff) at λ₀.
    pub fn effective_pair(&self, x: f64) -> Result<(f64, f64)> {
        let e = self.evaluate(x, &self.params0)?;
        Ok((e.v1_eff, e.v2_eff))
    }

    /// Max over `grid` of |V₂,eff(x; λ₀) − V₁,eff(x; λ₁) − R(λ₀)|, λ₀ being the model's.
    pub fn shape_invariance_residual(&self, grid: &[f64]) -> Result<ShapeCheck> {
        self.shape_invariance_residual_with(grid, self.params0, self.next_params(self.params0))
    }

    /// Same check against an arbitrary partner triple `p1`.
    pub fn shape_invariance_residual_with(&self, grid: &[f64], p0: ParamTriple, p1: ParamTriple) -> Result<ShapeCheck> {
        let r = self.remainder_r(p0);
        let mut out = ShapeCheck { max_residual: 0.0, worst_x: f64::NAN, max_abs_v: 0.0, remainder: r, points: grid.len() };
        for &x in grid {
            let mu = self.mumap.mu(x)?;
            let e0 = self.evaluate_at(x, mu, &p0)?;
            let e1 = self.evaluate_at(x, mu, &p1)?;
            let res = (e0.v2_eff - e1.v1_eff - r).abs();
            if !(res <= out.max_residual) {
                out.max_residual = res;
                out.worst_x = x;
            }
            out.max_abs_v = out.max_abs_v.max(e0.v2_eff.abs()).max(e1.v1_eff.abs());
        }
        Ok(out)
    }

    /// Open μ-interval on which φ is defined and keeps one sign, so that every
    /// member of the parameter chain is pole free there.
    pub fn regular_mu_interval(&self) -> (f64, f64) {
        let FamilyCoeffs { a, b, .. } = self.coeffs;
        let delta = self.coeffs.discriminant();
        let inf = f64::INFINITY;
        match self.family {
            Family::Ho => {
                let root = -b / a;
                if a > 0.0 { (root, inf) } else { (-inf, root) }
            }
            Family::Morse => {
                // φ = 0 at e^{aμ} = b
                if b > 0.0 {
                    let root = b.ln() / a;
                    (root, inf)
                } else {
                    (-inf, inf)
                }
            }
            Family::PtTrig => {
                let s = delta.sqrt();
                // φ ∝ s·tanθ − b vanishes inside the branch when b > 0
                let theta0 = if b > 0.0 { (b / s).atan() } else { 0.0 };
                (2.0 * theta0 / s, std::f64::consts::PI / s)
            }
            Family::PtHyp => {
                let s = (-delta).sqrt();
                let t = -b / s;
                if t.abs() < 1.0 {
                    let root = 2.0 * t.atanh() / s;
                    if a > 0.0 { (-inf, root) } else { (root, inf) }
                } else {
                    (-inf, inf)
                }
            }
            Family::Coulomb => {
                if b < 0.0 { (0.0, -2.0 / b) } else { (0.0, inf) }
            }
        }
    }

    /// `n` x-points whose μ values are evenly spread over the regular interval
    /// clipped to `mu_window` and to the attainable μ range, staying `margin`
    /// away from the ends.
    pub fn regular_grid(&self, n: usize, mu_window: (f64, f64), margin: f64) -> Result<Vec<f64>> {
        let (r0, r1) = self.regular_mu_interval();
        let (m0, m1) = self.mumap.range();
        let lo = r0.max(m0).max(mu_window.0) + margin;
        let hi = r1.min(m1).min(mu_window.1) - margin;
        if !(lo < hi) || n < 2 {
            return Err(Error::Grid(format!("empty regular μ-interval ({lo}, {hi})")));
        }
        (0..n)
            .map(|i| {
                let mu = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                self.mumap.mu_inverse(mu)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::massprofile::registry_get;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn unit_map() -> Arc<MuMap> {
        Arc::new(MuMap::new(registry_get("constant", &[("m0", 0.5)]).unwrap()).unwrap())
    }

    fn asinh_map() -> Arc<MuMap> {
        Arc::new(MuMap::new(registry_get("asinh_mu", &[("m0", 0.5), ("alpha", 1.0)]).unwrap()).unwrap())
    }

    fn model(f: Family, k: (f64, f64, f64), p: (f64, f64, f64), map: Arc<MuMap>) -> FamilyModel {
        FamilyModel::new_formal(f, FamilyCoeffs::new(k.0, k.1, k.2), ParamTriple::new(p.0, p.1, p.2), map).unwrap()
    }

    #[test]
    fn validation_examples() {
        let ok = validate(Family::Morse, &FamilyCoeffs::new(-1.0, 1.0, 0.0), &ParamTriple::new(1.0, 0.0, 0.0));
        assert!(ok.is_empty());
        let bad = validate(Family::Morse, &FamilyCoeffs::new(1.0, 1.0, 0.0), &ParamTriple::new(1.0, 0.0, 0.0));
        assert_eq!(bad, vec![Violation::ANegative]);
        let bad = validate(Family::PtTrig, &FamilyCoeffs::new(1.0, 0.0, -1.0), &ParamTriple::new(1.0, 0.0, 0.0));
        assert!(bad.contains(&Violation::DeltaPositive));
        let bad = validate(Family::Ho, &FamilyCoeffs::new(1.0, 0.0, 0.0), &ParamTriple::new(0.0, 0.0, 0.0));
        assert_eq!(bad, vec![Violation::QNonzero]);
        let bad = validate(Family::Coulomb, &FamilyCoeffs::new(1.0, 0.0, 0.0), &ParamTriple::new(1.0, 0.0, 0.5));
        assert!(bad.contains(&Violation::BNonzero) && bad.contains(&Violation::RhoZero));
        assert_eq!(Violation::DeltaPositive.to_string(), "Δ>0");
    }

    #[test]
    fn constructors_refuse_invalid_models() {
        let e = FamilyModel::new(Family::Morse, FamilyCoeffs::new(1.0, 1.0, 0.0), ParamTriple::new(1.0, 0.0, 0.0), unit_map());
        assert_eq!(e.unwrap_err(), Error::InvalidModel(vec![Violation::ANegative]));
        // b = 0 Morse is only accepted formally
        let k = FamilyCoeffs::new(-1.0, 0.0, 0.0);
        let p = ParamTriple::new(1.0, 2.5, 0.0);
        assert!(FamilyModel::new(Family::Morse, k, p, unit_map()).is_err());
        let m = FamilyModel::new_formal(Family::Morse, k, p, unit_map()).unwrap();
        assert_eq!(m.waived(), &[Violation::QNonzero]);
        assert!(FamilyModel::new(Family::Coulomb, k, p, unit_map()).is_err());
    }

    #[test]
    fn phi_examples() {
        let ho = model(Family::Ho, (1.0, 0.0, 0.0), (1.0, 0.0, 0.0), unit_map());
        assert_eq!(ho.phi(2.0).unwrap(), 2.0);
        let morse = model(Family::Morse, (-1.0, 1.0, 0.0), (1.0, 2.5, 0.0), unit_map());
        assert_eq!(morse.phi(0.0).unwrap(), 0.0);
        let cb = FamilyModel::coulomb(CoulombParams::new(1.0, 0, 2.0), 1.0, unit_map()).unwrap();
        assert_eq!(cb.phi(1.0).unwrap(), -2.0);
        assert!(matches!(cb.phi(0.0), Err(Error::NonPositiveMu { .. })));
        let pt = model(Family::PtTrig, (1.0, 0.0, 1.0), (2.0, 0.0, 1.0), unit_map());
        assert!(matches!(pt.phi(-0.1), Err(Error::Branch { .. })));
        assert!(matches!(pt.phi(std::f64::consts::FRAC_PI_2), Err(Error::Branch { .. })));
        assert_relative_eq!(pt.phi(0.5).unwrap(), 0.5f64.tan(), epsilon = 1e-15);
    }

    #[test]
    fn superpotential_examples() {
        let ho = model(Family::Ho, (1.0, 0.0, 0.0), (1.0, 0.0, 0.0), unit_map());
        assert_eq!(ho.superpotential_w(3.0).unwrap(), 3.0);
        let morse = model(Family::Morse, (-1.0, 1.0, 0.0), (1.0, 2.5, 0.0), unit_map());
        assert_eq!(morse.superpotential_w(0.0).unwrap(), 2.5);
        let ho_a = model(Family::Ho, (1.0, 0.0, 0.0), (1.0, 0.0, 0.0), asinh_map());
        assert_eq!(ho_a.superpotential_w(0.0).unwrap(), 0.0);
    }

    #[test]
    fn pole_is_an_error() {
        let ho = model(Family::Ho, (1.0, 0.0, 0.0), (1.0, 0.0, 0.5), unit_map());
        assert!(matches!(ho.evaluate(0.0, &ho.params0()), Err(Error::Pole { .. })));
    }

    #[test]
    fn potential_examples() {
        let ho = model(Family::Ho, (1.0, 0.0, 0.0), (1.0, 0.0, 0.0), unit_map());
        assert_relative_eq!(ho.potential_v1(2.0).unwrap(), 3.0, epsilon = 1e-14);
        // constrained Morse at μ = 0: λ²/a² − λ(2σ/a − 1)·(−1)... evaluated directly
        let morse = model(Family::Morse, (-1.0, 0.0, 0.0), (1.0, 2.5, 0.0), unit_map());
        assert_relative_eq!(morse.potential_v1(0.0).unwrap(), 1.25, epsilon = 1e-14);
    }

    #[test]
    fn next_params_examples() {
        let ho = model(Family::Ho, (1.0, 0.0, 0.0), (1.0, 0.0, 0.0), unit_map());
        assert_eq!(ho.next_params(ho.params0()), ParamTriple::new(1.0, 0.0, -1.0));
        let morse = model(Family::Morse, (-1.0, 1.0, 0.0), (1.0, 2.5, 0.0), unit_map());
        assert_eq!(morse.next_params(morse.params0()), ParamTriple::new(1.0, 1.5, -1.0));
        let pt = model(Family::PtTrig, (1.0, 0.0, 1.0), (2.0, 0.0, 1.0), unit_map());
        assert_eq!(pt.next_params(pt.params0()), ParamTriple::new(3.0, 0.0, -2.0));
    }

    #[test]
    fn remainder_examples() {
        let ho = model(Family::Ho, (1.0, 0.0, 0.0), (1.0, 0.0, 0.0), unit_map());
        assert_eq!(ho.remainder_r(ho.params0()), 4.0);
        let morse = model(Family::Morse, (-1.0, 1.0, 0.0), (1.0, 2.5, 0.0), unit_map());
        assert_eq!(morse.remainder_r(morse.params0()), 8.0);
        let pt = model(Family::PtTrig, (1.0, 0.0, 1.0), (2.0, 0.0, 1.0), unit_map());
        assert_eq!(pt.remainder_r(pt.params0()), 24.0);
    }

    #[test]
    fn remainder_matches_printed_summands() {
        // HO: 4λ(ρ+a); Morse: 4bλ + 4λρ − 2aσ − a²; PT: 4cλ + 4aρ + 4λρ − 2bσ + Δ
        let p = ParamTriple::new(0.7, -0.3, 1.9);
        let k = FamilyCoeffs::new(-1.3, 0.4, 2.2);
        assert_relative_eq!(remainder(Family::Ho, &k, p), 4.0 * p.lambda * (p.rho + k.a), epsilon = 1e-13);
        let morse = 4.0 * k.b * p.lambda + 4.0 * p.lambda * p.rho - 2.0 * k.a * p.sigma - k.a * k.a;
        assert_relative_eq!(remainder(Family::Morse, &k, p), morse, epsilon = 1e-13);
        let pt = 4.0 * k.c * p.lambda + 4.0 * k.a * p.rho + 4.0 * p.lambda * p.rho - 2.0 * k.b * p.sigma + k.discriminant();
        assert_relative_eq!(remainder(Family::PtTrig, &k, p), pt, epsilon = 1e-13);
    }

    #[test]
    fn coulomb_parameters() {
        let cp = CoulombParams::new(1.0, 1, 0.6);
        let m = FamilyModel::coulomb(cp, 0.5, unit_map()).unwrap();
        assert_eq!(m.params0(), ParamTriple::new(1.0, 0.6 + 0.25, 0.0));
        assert_eq!(m.coeffs().discriminant(), 0.0);
        // ρ vanishes on even steps
        assert_eq!(m.params_at(2).rho, 0.0);
        assert_eq!(m.params_at(4).rho, 0.0);
        assert!(FamilyModel::coulomb(CoulombParams::new(1.0, 0, 0.0), 1.0, unit_map()).is_err());
    }

    #[test]
    fn effective_pair_relations() {
        let ho = model(Family::Ho, (1.0, 0.0, 0.0), (1.0, 0.0, 0.0), unit_map());
        let e = ho.evaluate(1.3, &ho.params0()).unwrap();
        assert_eq!(e.v1_eff, e.v1);
        let ho_a = model(Family::Ho, (1.0, 0.5, 0.0), (1.0, 0.2, 0.0), asinh_map());
        let e = ho_a.evaluate(0.0, &ho_a.params0()).unwrap();
        assert_relative_eq!(e.v1_eff - e.v1, 0.5 * e.d2u * e.u, epsilon = 1e-14);
        let e = ho_a.evaluate(0.7, &ho_a.params0()).unwrap();
        assert_relative_eq!(e.v2_eff - e.v1_eff, 2.0 * e.u_dw_eff, epsilon = 1e-13);
        let vu = 0.5 * e.u * e.d2u + 0.25 * e.du * e.du;
        assert_relative_eq!(e.v1_eff, e.v1 + vu, epsilon = 1e-13);
    }

    // Independent check of V₁ = W² − (UW)′ with (UW)′ by central differences.
    #[test]
    fn v1_matches_differenced_definition() {
        let cases = [
            model(Family::Ho, (0.8, 0.3, 0.0), (1.2, 0.4, -0.7), asinh_map()),
            model(Family::Morse, (-0.9, 0.5, 0.0), (1.1, 0.6, 0.3), asinh_map()),
            model(Family::PtTrig, (1.0, 0.2, 1.5), (1.3, 0.1, 0.4), asinh_map()),
            model(Family::PtHyp, (1.0, 0.3, -0.5), (1.6, -0.2, 0.3), asinh_map()),
        ];
        for m in cases {
            let (r0, r1) = m.regular_mu_interval();
            let mu = if r1.is_finite() && r0.is_finite() { 0.5 * (r0 + r1) } else if r0.is_finite() { r0 + 0.7 } else { r1 - 0.7 };
            let x = m.mumap().mu_inverse(mu).unwrap();
            let p = m.params0();
            let uw = |x: f64| {
                let e = m.evaluate(x, &p).unwrap();
                e.u * e.w
            };
            let h = 1e-4;
            let d = (uw(x - 2.0 * h) - 8.0 * uw(x - h) + 8.0 * uw(x + h) - uw(x + 2.0 * h)) / (12.0 * h);
            let e = m.evaluate(x, &p).unwrap();
            assert_relative_eq!(e.v1, e.w * e.w - d, max_relative = 1e-8, epsilon = 1e-8);
            let w_d = (e.w * e.w - e.u * e.d2u) + d - 2.0 * e.du * e.w;
            // V₂ = W² + (UW)′ − 2U′W − UU″
            assert_relative_eq!(e.v2, w_d, max_relative = 1e-8, epsilon = 1e-8);
        }
    }

    #[test]
    fn phi_solves_its_ode() {
        let cases = [
            model(Family::Ho, (0.8, 0.3, 0.0), (1.0, 0.0, 0.0), asinh_map()),
            model(Family::Morse, (-0.9, 0.5, 0.0), (1.0, 0.0, 0.0), asinh_map()),
            model(Family::PtTrig, (1.0, 0.2, 1.5), (1.0, 0.0, 0.0), unit_map()),
            model(Family::PtHyp, (1.0, 0.3, -0.5), (1.0, 0.0, 0.0), asinh_map()),
        ];
        let cb = FamilyModel::coulomb(CoulombParams::new(1.0, 0, 0.5), 1.0, asinh_map()).unwrap();
        for m in cases.iter().chain(std::iter::once(&cb)) {
            let (a, b, c) = m.ode_coefficients();
            let x = match m.family() {
                Family::PtTrig | Family::Coulomb => 0.6,
                _ => -0.4,
            };
            let h = 1e-5;
            let d = (m.phi(x + h).unwrap() - m.phi(x - h).unwrap()) / (2.0 * h);
            let phi = m.phi(x).unwrap();
            let lhs = m.profile().u(x) * d;
            assert!((lhs - (a * phi * phi + b * phi + c)).abs() <= 1e-8, "{}", m.family());
        }
    }

    // Printed reduced potentials, compared against V₁,eff as functions of μ.
    #[test]
    fn constrained_reductions() {
        let map = asinh_map();
        let xs = [0.3, 0.8, 1.4];
        // oscillator, σ = b = 0
        let (a, l, r) = (0.7, 1.3, -0.4);
        let m = model(Family::Ho, (a, 0.0, 0.0), (l, 0.0, r), map.clone());
        for &x in &xs {
            let e = m.evaluate(x, &m.params0()).unwrap();
            let mu = e.mu;
            let v = l * l * a * a * mu * mu + r * (r + a) / (a * a * mu * mu) + 2.0 * l * r - a * l;
            assert_relative_eq!(e.v1_eff, v, max_relative = 1e-10);
        }
        // Morse, ρ = b = 0
        let (a, l, s) = (-0.8, 1.1, 0.9);
        let m = model(Family::Morse, (a, 0.0, 0.0), (l, s, 0.0), map.clone());
        for &x in &xs {
            let e = m.evaluate(x, &m.params0()).unwrap();
            let z = (a * e.mu).exp();
            let v = l * l / (a * a) * z * z + l * (2.0 * s / a - 1.0) * z + s * s;
            assert_relative_eq!(e.v1_eff, v, max_relative = 1e-10);
        }
        // trigonometric, σ = b = 0, a, c > 0
        let (a, c, l, r) = (1.2, 0.5, 1.7, 0.6);
        let m = model(Family::PtTrig, (a, 0.0, c), (l, 0.0, r), map.clone());
        for &x in &xs {
            let e = m.evaluate(x, &m.params0()).unwrap();
            let th = (a * c).sqrt() * e.mu;
            let v = l * c * (l / a - 1.0) / th.cos().powi(2) + r * a * (r / c + 1.0) / th.sin().powi(2)
                - (l * (c / a).sqrt() - r * (a / c).sqrt()).powi(2);
            assert_relative_eq!(e.v1_eff, v, max_relative = 1e-10);
        }
        // hyperbolic, σ = b = 0, ac < 0
        let (a, c, l, r) = (1.2, -0.5, 1.7, 0.6);
        let m = model(Family::PtHyp, (a, 0.0, c), (l, 0.0, r), map.clone());
        for &x in &xs {
            let e = m.evaluate(x, &m.params0()).unwrap();
            let th = (-a * c).sqrt() * e.mu;
            let v = l * c * (l / a - 1.0) / th.cosh().powi(2) - r * a * (r / c + 1.0) / th.sinh().powi(2)
                - (l * l * c / a + r * r * a / c - 2.0 * l * r);
            assert_relative_eq!(e.v1_eff, v, max_relative = 1e-10);
        }
        // Coulomb: hydrogen-like radial potential
        let cp = CoulombParams { z: 1.5, e2: 1.0, l: 2, b: 0.8 };
        let m = FamilyModel::coulomb(cp, 0.9, map).unwrap();
        for &x in &xs {
            let e = m.evaluate(x, &m.params0()).unwrap();
            let (l, ze2, mu) = (2.0, 1.5, e.mu);
            let v = l * (l + 1.0) / (mu * mu) - ze2 / mu + ze2 * ze2 / (4.0 * (l + 1.0) * (l + 1.0));
            assert_relative_eq!(e.v1_eff, v, max_relative = 1e-10);
        }
    }

    #[test]
    fn hyperbolic_is_continuation_of_trigonometric() {
        let (a, b, c) = (1.1, 0.4, -0.6);
        let m = model(Family::PtHyp, (a, b, c), (1.0, 0.0, 0.0), unit_map());
        let delta = Complex64::new(4.0 * a * c - b * b, 0.0);
        for &mu in &[-1.0, 0.2, 0.9, 2.5] {
            // √Δ → i√−Δ in the trigonometric form
            let s = delta.sqrt();
            let trig = s / (2.0 * a) * (s * mu / 2.0).tan() - b / (2.0 * a);
            let hyp = m.phi_of_mu(mu, mu).unwrap();
            assert!(trig.im.abs() < 1e-14);
            assert_relative_eq!(trig.re, hyp, max_relative = 1e-13);
        }
    }

    #[test]
    fn residual_coefficients_reproduce_numerics() {
        let m = model(Family::PtHyp, (1.0, 0.3, -0.5), (1.6, -0.2, 0.3), asinh_map());
        let grid = m.regular_grid(50, (-4.0, 4.0), 0.05).unwrap();
        let coeffs = m.residual_coefficients(m.params0());
        let p1 = m.next_params(m.params0());
        for &x in &grid {
            let e0 = m.evaluate(x, &m.params0()).unwrap();
            let e1 = m.evaluate(x, &p1).unwrap();
            let d = e0.v2_eff - e1.v1_eff;
            assert_relative_eq!(d, coeffs.eval(e0.phi), max_relative = 1e-9, epsilon = 1e-9);
        }
    }

    #[test]
    fn exact_subsets_have_constant_residual() {
        let map = asinh_map();
        let cases = [
            model(Family::Ho, (0.7, 0.2, 0.0), (1.3, 0.0, 0.0), map.clone()),
            model(Family::Morse, (-0.8, 0.5, 0.0), (1.1, 1.2, 0.0), map.clone()),
            model(Family::PtTrig, (1.2, 0.0, 0.5), (1.7, 0.0, 0.0), map.clone()),
            model(Family::PtHyp, (1.2, 0.0, -0.5), (1.7, 0.0, 0.0), map.clone()),
        ];
        for m in cases {
            let c = m.residual_coefficients(m.params0());
            let grid = m.regular_grid(200, (-5.0, 5.0), 0.05).unwrap();
            let check = m.shape_invariance_residual(&grid).unwrap();
            let exact = c.is_x_independent(1e-12);
            if exact {
                assert!(check.scaled() <= 1e-9, "{}: {:e}", m.family(), check.scaled());
            } else {
                assert!(check.scaled() > 1e-6, "{}", m.family());
            }
        }
    }

    #[test]
    fn generic_parameters_break_the_identity() {
        // ρ₀ ≠ 0 leaves a (ρ₀+ρ₁)(ρ₀−ρ₁−C)/φ² term
        let m = model(Family::PtTrig, (1.0, 0.0, 1.0), (2.0, 0.0, 1.0), unit_map());
        let c = m.residual_coefficients(m.params0());
        assert_eq!(c.inv_phi2, (1.0 - 2.0) * (1.0 + 2.0 - 1.0));
        let grid = m.regular_grid(100, (0.0, 4.0), 0.05).unwrap();
        assert!(m.shape_invariance_residual(&grid).unwrap().max_residual > 1.0);
        // a perturbed partner is never x-independent
        let p0 = m.params0();
        let mut p1 = m.next_params(p0);
        p1.lambda += 0.1;
        assert!(m.shape_invariance_residual_with(&grid, p0, p1).unwrap().max_residual > 1e-3);
    }

    proptest! {
        #[test]
        fn ho_chain_has_period_two(a in 0.1f64..3.0, l in 0.1f64..3.0, r in -2.0f64..2.0) {
            let k = FamilyCoeffs::new(a, 0.0, 0.0);
            let p0 = ParamTriple::new(l, 0.0, r);
            let p2 = next_params(Family::Ho, &k, next_params(Family::Ho, &k, p0));
            prop_assert!((p2.rho - p0.rho).abs() <= 1e-14 * (1.0 + r.abs() + a));
        }

        #[test]
        fn coefficient_constant_equals_remainder_on_exact_ho(a in 0.1f64..3.0, l in 0.1f64..3.0) {
            let k = FamilyCoeffs::new(a, 0.0, 0.0);
            let p0 = ParamTriple::new(l, 0.0, 0.0);
            let c = residual_coefficients(Family::Ho, &k, p0);
            prop_assert!(c.is_x_independent(1e-12));
            prop_assert!((c.constant - remainder(Family::Ho, &k, p0)).abs() <= 1e-12 * (1.0 + c.constant.abs()));
        }
    }
}
