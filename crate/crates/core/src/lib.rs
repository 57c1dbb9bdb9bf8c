//! Spectral solver for the incommensurate multi-length-scale phase-field
//! crystal model.
//!
//! Quasiperiodic order parameters are represented with the projection method
//! ([`lattice`], [`field`]), the free energy and its variational derivative
//! live in [`model`], and time integration of the Allen–Cahn flow is done by
//! the energy-stable SAV/Crank–Nicolson stepper ([`sav`]) optionally lifted
//! to fourth order by one spectral deferred correction sweep ([`sdc`]).

pub mod dump;
pub mod error;
pub mod fft;
pub mod field;
pub mod lattice;
pub mod model;
pub mod sav;
pub mod sdc;

pub use error::{Error, Result};
pub use field::{Dealias, SpectralField};
pub use lattice::PMLattice;
pub use model::{Energy, IpfcModel, ModelParams};
pub use sav::{AuxScalar, SavState};
pub use sdc::{SdcConfig, SdcTrajectory};
