use std::fmt;

use crate::families::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unknown mass profile `{0}`")]
    UnknownProfile(String),

    #[error("profile `{profile}` is missing parameter `{param}`")]
    MissingParam { profile: String, param: String },

    #[error("profile `{profile}` does not take parameter `{param}`")]
    UnexpectedParam { profile: String, param: String },

    #[error("mass scale m0 must be positive, got {0}")]
    NonPositiveMass(f64),

    #[error("invalid profile parameter: {0}")]
    InvalidParam(String),

    #[error("tabulated profiles are built from a table, not from named parameters")]
    TableRequired,

    #[error("malformed mass table: {0}")]
    MalformedTable(String),

    #[error("x = {x} lies outside the profile domain [{lo}, {hi}]")]
    OutsideDomain { x: f64, lo: f64, hi: f64 },

    #[error("μ = {value} lies outside the attainable range ({lo}, {hi})")]
    MuOutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("quadrature did not converge on [{a}, {b}] (estimated error {err:e})")]
    Quadrature { a: f64, b: f64, err: f64 },

    #[error("inverse μ-map did not converge for μ = {0}")]
    InverseMu(f64),

    #[error("invalid model: {}", ViolationList(.0))]
    InvalidModel(Vec<Violation>),

    #[error("superpotential pole at x = {x} (φ = {phi:e})")]
    Pole { x: f64, phi: f64 },

    #[error("x = {x} (μ = {mu}) is outside the principal tan branch")]
    Branch { x: f64, mu: f64 },

    #[error("this family needs μ(x) > 0, got μ = {mu} at x = {x}")]
    NonPositiveMu { x: f64, mu: f64 },

    #[error("{0}")]
    Unsupported(String),

    #[error("ground state is not normalizable: {0}")]
    NotNormalizable(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("eigensolver: {0}")]
    Eigen(String),

    #[error("discretization error estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    TooCoarse { estimate: f64, tolerance: f64 },

    #[error("i/o: {0}")]
    Io(String),
}

struct ViolationList<'a>(&'a [Violation]);

impl fmt::Display for ViolationList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", v.id())?;
        }
        Ok(())
    }
}
