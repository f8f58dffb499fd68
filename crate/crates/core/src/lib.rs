//! Forward-pass building blocks for an alias-free UNet and its aliasing
//! baselines, together with exact band-limited translation operators and
//! the metrics used to measure translation equivariance.
//!
//! Everything here is pure computation over [`Tensor`] values and only needs
//! `alloc`. File formats, image IO, timing and the command line live in the
//! `unet-af` companion crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod data;
pub mod degrade;
mod error;
pub mod fft;
pub mod layers;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod spectral;
pub mod spectrum;
pub mod tensor;

pub use error::{Error, Result};
pub use rng::Rng;
pub use spectral::{BandSpec, Displacement};
pub use spectrum::{fft2, ifft2, Spectrum};
pub use tensor::{Precision, Shape, Tensor};
