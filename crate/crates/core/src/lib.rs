//! Total-Lagrangian finite elements for coil-heated shape memory polymer devices.
//!
//! The crate couples three fields on a single reference mesh:
//!
//! * an electrokinetic scalar potential driven by an analytic solenoid
//!   vector potential ([`coil`], [`electrokinetics`]),
//! * transient heat conduction with a Joule-loss source and convective /
//!   radiative boundaries ([`thermal`]),
//! * quasistatic large-deformation mechanics with a glassy/rubbery shape
//!   memory polymer law ([`smp`], [`mechanics`]).
//!
//! All three are solved monolithically with backward Euler and Newton–Raphson
//! ([`coupled`]); [`scenario`] contains the config parser, the single-element
//! and stent drivers and the output writers.

pub mod coil;
pub mod coupled;
pub mod electrokinetics;
pub mod error;
pub mod fem;
pub mod kinematics;
pub mod mechanics;
pub mod scenario;
pub mod smp;
pub mod thermal;

pub use error::{Error, Result};
