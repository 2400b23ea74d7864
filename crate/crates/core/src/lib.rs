//! rydlab: a numerical laboratory for the revival dynamics of Rydberg-type
//! wave packets.
//!
//! The library builds coherent superpositions over discrete spectra
//! (hydrogenic, quantum-defect, Stark, tabulated), evolves them exactly or at
//! a chosen Taylor truncation order, computes autocorrelation traces,
//! predicts and detects classical periods, fractional/full revivals and
//! superrevivals, performs the Stark odd/even subsidiary-wave decomposition,
//! and constructs radial squeezed states with uncertainty tracking.
//!
//! Everything internal is in atomic units; SI conversion lives in [`units`]
//! and is applied at output boundaries only.

pub mod analysis;
pub mod error;
pub mod export;
pub mod fraction;
pub mod packet;
pub mod quad;
pub mod radial;
pub mod special;
pub mod spectrum;
pub mod squeezed;
pub mod stark;
pub mod units;

pub use error::{Error, ErrorClass, Result};
pub use packet::{
    autocorrelation, build_packet, build_stark_packet, phase_at, radial_density,
    AutocorrelationTrace, PacketCoefficients, PhaseMode, PhaseModel,
};
pub use spectrum::{
    commensurability, hydrogen_rational_scales, tune_field, Spectrum, StateIndex, TimeScaleSet,
};
