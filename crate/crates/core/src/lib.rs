//! Simulation and analysis toolkit for light transport in disordered
//! photonic-crystal waveguides and for quantum-dot cavity QED in the
//! localized modes that disorder creates.
//!
//! The crate is organized along the data flow of a typical numerical
//! experiment:
//!
//! * [`geometry`]: waveguide geometry and random hole displacements,
//! * [`dispersion`]: slow-light band model near the guided-mode cutoff,
//! * [`transport`]: per-cell scattering, transfer-matrix cascades,
//!   localization lengths and resonance extraction,
//! * [`stats`]: normalized intensity ensembles and the variance
//!   localization criterion,
//! * [`qed`]: Purcell enhancement, mode-volume inversion and decay-rate
//!   superposition versus detuning,
//! * [`decay`]: photon-counting decay synthesis and Poisson
//!   maximum-likelihood lifetime fits,
//! * [`spectral`]: spectral peak fits with instrument deconvolution and
//!   temperature tuning of emitter/cavity lines.
//!
//! All random number use is routed through seeded counter-based streams
//! ([`rng`]) so every result is reproducible bit for bit.

pub mod decay;
pub mod dispersion;
pub mod error;
pub mod fitting;
pub mod geometry;
pub mod io;
pub mod qed;
pub mod rng;
pub mod spectral;
pub mod stats;
pub mod transport;
pub mod util;

pub use error::{Error, Result};

/// Schema tag written into every JSON artifact produced by this crate.
pub const SCHEMA_VERSION: &str = "1";
