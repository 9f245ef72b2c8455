//! Computational harmonic analysis on self-affine measures: Hadamard
//! triples, Fourier spectra of fractal measures, transfer operators,
//! extreme cycles, wavelet cascades and Hardy-space splittings on Julia
//! sets.

pub mod cdyn;
pub mod cycles;
pub mod error;
pub mod filters;
pub mod fourier;
pub mod ifs;
pub mod rational;
pub mod spectra;
pub mod transfer;
pub mod wavelet;

pub use error::{Error, Result};
