//! Exact solution of a PT-symmetric transverse-field Ising chain and the
//! biorthogonal mixed-state fidelity of its thermal states across the
//! complex field plane (eta, xi).
//!
//! The chain of `2N` spins carries the staggered complex transverse field
//! `g_j = eta + i (-1)^j xi`. After a Jordan-Wigner transformation the
//! problem factorizes into commuting 16-dimensional momentum sectors which
//! this crate diagonalizes in closed form, including the paired left/right
//! (biorthogonal) eigenvector families of the non-Hermitian case. On top of
//! that sit thermal Gibbs sectors, the mixed-state fidelity between two
//! nearby parameter points, zero-temperature overlap limits, parameter-plane
//! sweeps, and exponential/harmonic fits of the resulting decay laws.
//!
//! All numerics are generic over the real scalar (f32 or f64) through the
//! [`scalar::Real`] trait; the concrete aliases below pin the common f64
//! instantiations.

pub mod analysis;
pub mod error;
pub mod fidelity;
pub mod fock;
pub mod matfun;
pub mod model;
pub mod oracle;
pub mod scalar;
pub mod sector;
pub mod validate;

pub use error::{FidelityError, FitError, GridError, MatError, OracleError, SectorError};
pub use scalar::Real;

/// f64 model parameters.
pub type CouplingParams64 = model::CouplingParams<f64>;
/// f64 polar field.
pub type PolarField64 = model::PolarField<f64>;
/// f64 dense complex matrix.
pub type ComplexMatrix64 = matfun::ComplexMatrix<f64>;
/// f64 biorthogonal sector eigensystem.
pub type BiorthogonalEigensystem64 = sector::BiorthogonalEigensystem<f64>;
/// f64 thermal sector state.
pub type ThermalSectorState64 = fidelity::ThermalSectorState<f64>;
/// f64 fidelity point.
pub type FidelityPoint64 = fidelity::FidelityPoint<f64>;
