//! Shape-invariant potentials for position-dependent effective mass.
//!
//! Units: ħ = 1, e² = 1 unless set otherwise. The Hamiltonian is
//! `H = −∂ₓ U²(x) ∂ₓ + V(x)` with `U² = 1/(2m)`.

pub mod error;
pub mod families;
pub mod groundstate;
pub mod massprofile;
pub mod quadrature;
pub mod spectra;
pub mod verify;

pub use error::{Error, Result};
pub use families::{CoulombParams, Family, FamilyCoeffs, FamilyModel, ParamTriple, Violation};
pub use massprofile::{registry_get, Anchor, MassProfile, MuMap, MuMapOptions};
pub use spectra::{SpectrumTable, Method};
