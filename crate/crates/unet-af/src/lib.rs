//! File formats, experiment drivers and the command-line interface built
//! on `unet-af-core`.

pub mod bench;
pub mod cli;
pub mod config_file;
pub mod error;
pub mod experiment;
pub mod image_io;
pub mod report;
pub mod selftest;
pub mod weights_io;

pub use error::{Error, Result};
