//! Transport coefficients of an overdamped Brownian particle in a tilted
//! period-1 potential: average velocity, effective diffusion and effective
//! drag, from nested-integral formulas, small- and large-force expansions, and
//! two independent oracles (Euler–Maruyama ensembles and a Fokker–Planck
//! moment hierarchy).
//!
//! All computations are dimensionless (period, bare diffusion and thermal
//! energy equal to one); [`nondim`] converts dimensional parameters.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod error;
pub mod nondim;
pub mod oracle_fpe;
pub mod oracle_sde;
pub mod par;
pub mod potential;
pub mod quad;
pub mod spectral;
pub mod stats;
pub mod transport;

pub use error::{Error, Result};
pub use par::Execution;
pub use potential::{PeriodicPotential, PotentialSpec};
pub use quad::{CellGrid, QuadratureConfig};
pub use nondim::DimensionlessSystem;
pub use transport::{CellProfiles, TransportCoefficients};
