//! Position-dependent mass profiles, stored through `U(x) = 1/sqrt(2 m(x))`.

mod mumap;
mod pchip;

use std::io::Read;
use std::path::Path;

pub use mumap::{Anchor, MuMap, MuMapOptions};
pub use pchip::Pchip;

use crate::error::{Error, Result};

/// Names accepted by [`registry_get`].
pub const REGISTRY: [&str; 5] = ["constant", "exp_mass", "asinh_mu", "arctan_mu", "tabulated"];

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Constant { m0: f64 },
    ExpMass { m0: f64, beta: f64 },
    AsinhMu { m0: f64, alpha: f64 },
    ArctanMu { m0: f64, alpha: f64 },
    Tabulated(Pchip),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassProfile {
    name: String,
    params: Vec<(String, f64)>,
    domain: (f64, f64),
    kind: Kind,
}

/// Build a built-in profile from named parameters.
///
/// | name        | m(x)                  | μ(x) (natural anchor)        |
/// |-------------|-----------------------|------------------------------|
/// | `constant`  | m₀                    | √(2m₀)·x                     |
/// | `exp_mass`  | m₀·e^{2βx}            | √(2m₀)·e^{βx}/β              |
/// | `asinh_mu`  | m₀/(1 + α²x²)         | √(2m₀)·asinh(αx)/α           |
/// | `arctan_mu` | m₀/(1 + α²x²)²        | √(2m₀)·arctan(αx)/α          |
///
/// `tabulated` needs samples; see [`MassProfile::tabulated`].
pub fn registry_get(name: &str, params: &[(&str, f64)]) -> Result<MassProfile> {
    let expected: &[&str] = match name {
        "constant" => &["m0"],
        "exp_mass" => &["m0", "beta"],
        "asinh_mu" | "arctan_mu" => &["m0", "alpha"],
        "tabulated" => return Err(Error::TableRequired),
        other => return Err(Error::UnknownProfile(other.to_string())),
    };
    for (p, _) in params {
        if !expected.contains(p) {
            return Err(Error::UnexpectedParam { profile: name.into(), param: (*p).into() });
        }
    }
    let get = |key: &str| -> Result<f64> {
        params
            .iter()
            .find(|(p, _)| *p == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::MissingParam { profile: name.into(), param: key.into() })
    };
    let m0 = get("m0")?;
    if !(m0 > 0.0 && m0.is_finite()) {
        return Err(Error::NonPositiveMass(m0));
    }
    let kind = match name {
        "constant" => Kind::Constant { m0 },
        "exp_mass" => {
            let beta = get("beta")?;
            if !beta.is_finite() {
                return Err(Error::InvalidParam(format!("beta must be finite, got {beta}")));
            }
            Kind::ExpMass { m0, beta }
        }
        _ => {
            let alpha = get("alpha")?;
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(Error::InvalidParam(format!("alpha must be positive, got {alpha}")));
            }
            if name == "asinh_mu" {
                Kind::AsinhMu { m0, alpha }
            } else {
                Kind::ArctanMu { m0, alpha }
            }
        }
    };
    Ok(MassProfile {
        name: name.to_string(),
        params: expected.iter().map(|k| (k.to_string(), get(k).unwrap())).collect(),
        domain: (f64::NEG_INFINITY, f64::INFINITY),
        kind,
    })
}

impl MassProfile {
    /// Unit-free shorthand for `registry_get("constant", [("m0", m0)])`.
    pub fn constant(m0: f64) -> Result<Self> {
        registry_get("constant", &[("m0", m0)])
    }

    /// Profile from `(x, m)` samples; U is interpolated by a monotone cubic.
    pub fn tabulated(samples: &[(f64, f64)]) -> Result<Self> {
        if let Some(&(x, m)) = samples.iter().find(|(_, m)| !(*m > 0.0 && m.is_finite())) {
            return Err(Error::MalformedTable(format!("mass must be positive, got m = {m} at x = {x}")));
        }
        let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let us: Vec<f64> = samples.iter().map(|s| 1.0 / (2.0 * s.1).sqrt()).collect();
        let p = Pchip::new(xs, us)?;
        Ok(Self {
            name: "tabulated".into(),
            params: Vec::new(),
            domain: (p.lo(), p.hi()),
            kind: Kind::Tabulated(p),
        })
    }

    /// Read a `x,m` CSV table (`#` starts a comment line).
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::MalformedTable(e.to_string()))?;
        if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "m" {
            return Err(Error::MalformedTable(format!("expected header `x,m`, got `{}`", headers.iter().collect::<Vec<_>>().join(","))));
        }
        let mut samples = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::MalformedTable(e.to_string()))?;
            let parse = |j: usize| -> Result<f64> {
                rec.get(j)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| Error::MalformedTable(format!("row {}: cannot parse column {}", i + 1, j + 1)))
            };
            samples.push((parse(0)?, parse(1)?));
        }
        Self::tabulated(&samples)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_csv_reader(f)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &[(String, f64)] {
        &self.params
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    /// Closed domain `[lo, hi]`; infinite ends are unbounded.
    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.domain.0 && x <= self.domain.1
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, Kind::Constant { .. })
    }

    /// `(U, U′, U″)` at `x`.
    pub fn u3(&self, x: f64) -> (f64, f64, f64) {
        match &self.kind {
            Kind::Constant { m0 } => (1.0 / (2.0 * m0).sqrt(), 0.0, 0.0),
            Kind::ExpMass { m0, beta } => {
                let u = (-beta * x).exp() / (2.0 * m0).sqrt();
                (u, -beta * u, beta * beta * u)
            }
            Kind::AsinhMu { m0, alpha } => {
                let s = (2.0 * m0).sqrt();
                let a2 = alpha * alpha;
                let g = 1.0 + a2 * x * x;
                let r = g.sqrt();
                (r / s, a2 * x / (s * r), a2 / (s * g * r))
            }
            Kind::ArctanMu { m0, alpha } => {
                let s = (2.0 * m0).sqrt();
                let a2 = alpha * alpha;
                ((1.0 + a2 * x * x) / s, 2.0 * a2 * x / s, 2.0 * a2 / s)
            }
            Kind::Tabulated(p) => p.eval3(x),
        }
    }

    pub fn u(&self, x: f64) -> f64 {
        self.u3(x).0
    }

    pub fn du(&self, x: f64) -> f64 {
        self.u3(x).1
    }

    pub fn d2u(&self, x: f64) -> f64 {
        self.u3(x).2
    }

    pub fn mass(&self, x: f64) -> f64 {
        let u = self.u(x);
        1.0 / (2.0 * u * u)
    }

    /// `𝒱_U = U U″/2 + U′²/4`, the ordering term separating V₁ from V₁,eff.
    pub fn ordering_potential(&self, x: f64) -> f64 {
        let (u, du, d2u) = self.u3(x);
        0.5 * u * d2u + 0.25 * du * du
    }

    /// Anchor used by [`MuMap::new`] when none is given: the `x → ∓∞`
    /// limit for `exp_mass`, otherwise `x = 0` (or the left table edge).
    pub fn natural_anchor(&self) -> Anchor {
        match self.kind {
            Kind::ExpMass { beta, .. } if beta > 0.0 => Anchor::NegInfinity,
            Kind::ExpMass { beta, .. } if beta < 0.0 => Anchor::PosInfinity,
            _ if self.contains(0.0) => Anchor::At(0.0),
            _ => Anchor::At(self.domain.0),
        }
    }

    /// Closed-form μ for the analytic registry profiles, measured from
    /// [`natural_anchor`](Self::natural_anchor).
    pub fn mu_closed(&self, x: f64) -> Option<f64> {
        match self.kind {
            Kind::Constant { m0 } => Some((2.0 * m0).sqrt() * x),
            Kind::ExpMass { m0, beta } if beta == 0.0 => Some((2.0 * m0).sqrt() * x),
            Kind::ExpMass { m0, beta } => Some((2.0 * m0).sqrt() * (beta * x).exp() / beta),
            Kind::AsinhMu { m0, alpha } => Some((2.0 * m0).sqrt() * (alpha * x).asinh() / alpha),
            Kind::ArctanMu { m0, alpha } => Some((2.0 * m0).sqrt() * (alpha * x).atan() / alpha),
            Kind::Tabulated(_) => None,
        }
    }

    /// Closed-form inverse of [`mu_closed`](Self::mu_closed).
    pub fn mu_closed_inverse(&self, mu: f64) -> Option<f64> {
        match self.kind {
            Kind::Constant { m0 } => Some(mu / (2.0 * m0).sqrt()),
            Kind::ExpMass { m0, beta } if beta == 0.0 => Some(mu / (2.0 * m0).sqrt()),
            Kind::ExpMass { m0, beta } => Some((beta * mu / (2.0 * m0).sqrt()).ln() / beta),
            Kind::AsinhMu { m0, alpha } => Some((alpha * mu / (2.0 * m0).sqrt()).sinh() / alpha),
            Kind::ArctanMu { m0, alpha } => Some((alpha * mu / (2.0 * m0).sqrt()).tan() / alpha),
            Kind::Tabulated(_) => None,
        }
    }
}
