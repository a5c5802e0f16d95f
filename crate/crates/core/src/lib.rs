//! Resonant almost-periodic vibrations of a damped impact oscillator under
//! biharmonic excitation.
//!
//! The crate predicts phase-locked resonant modes from the averaged
//! impulse–phase equations and checks them against event-driven simulation of
//! the full non-smooth system:
//!
//! - [`model`]: oscillator parameters and forcing laws,
//! - [`green`]: frequency–impulse maps and the periodic Green's function,
//! - [`resonance`]: resonance points, averaged field, equilibria, stability,
//! - [`simulator`]: adaptive integration with exact impact handling and
//!   phase-locking diagnostics.
//!
//! The closed-form layers ([`model`], [`green`], [`quadrature`]) are generic
//! over [`Scalar`]; the aliases below fix `f64`, which the averaging and the
//! simulator use throughout.

pub mod error;
pub mod green;
pub mod model;
pub mod quadrature;
pub mod resonance;
pub mod scalar;
pub mod simulator;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type OscillatorConfig = model::Oscillator<f64>;
pub type ForcingSpec = model::Forcing<f64>;
pub type Envelope = model::Envelope<f64>;
pub type GreensKernel = green::Kernel<f64>;

pub type OscillatorConfigF32 = model::Oscillator<f32>;
pub type ForcingSpecF32 = model::Forcing<f32>;
pub type GreensKernelF32 = green::Kernel<f32>;
