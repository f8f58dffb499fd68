//! The three named UNets, their ablation variants, parameter storage and
//! the forward pass.

mod config;
mod unet;
mod weights;

pub use config::{ablation_matrix, incremental_variants, AblationRow, ModelConfig, Preset};
pub use unet::{forward, Unet};
pub use weights::{init, Param, WeightStore};
