//! Shared fitting machinery: a deterministic Nelder-Mead simplex
//! minimizer, spectral line profiles, and peak detection.

pub mod neldermead;
pub mod peaks;
pub mod profiles;

pub use neldermead::{minimize, NmOptions, NmResult};
pub use peaks::{find_peaks, Peak};
