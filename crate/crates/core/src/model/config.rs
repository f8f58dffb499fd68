use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::layers::{ActivationSpec, BaseActivation, FilterOrder, NormMode, Padding, PoolKind};
use crate::{Error, Precision, Result};

/// Named architectures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// Zero padding, BatchNorm, ReLU, max pooling, zero-insertion upsampling.
    Ronneberger,
    /// `Ronneberger` plus a global residual connection.
    Jin,
    /// Circular padding, LayerNorm-AF, filtered GELU, BlurPool, filtered
    /// upsampling, residual connection.
    Af,
    /// `Af` without the residual connection.
    AfDenoise,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Ronneberger, Preset::Jin, Preset::Af, Preset::AfDenoise];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Ronneberger => "Ronneberger",
            Preset::Jin => "Jin",
            Preset::Af => "AF",
            Preset::AfDenoise => "AF_denoise",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| !matches!(c, '-' | '_' | ' ')).collect();
        match key.to_ascii_lowercase().as_str() {
            "ronneberger" | "unetronneberger" => Ok(Preset::Ronneberger),
            "jin" | "unetjin" => Ok(Preset::Jin),
            "af" | "unetaf" => Ok(Preset::Af),
            "afdenoise" | "unetafdenoise" => Ok(Preset::AfDenoise),
            _ => Err(Error::UnknownPreset(s.to_string())),
        }
    }
}

/// Full description of one UNet variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelConfig {
    /// Number of pooling stages.
    pub scales: usize,
    /// Channel width of the finest scale; doubles at each coarser scale.
    pub base_channels: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub padding: Padding,
    pub norm: NormMode,
    pub activation: ActivationSpec,
    pub pooling: PoolKind,
    pub upsampling_filtered: bool,
    pub upsample_order: FilterOrder,
    pub residual: bool,
    pub precision: Precision,
}

impl ModelConfig {
    /// Desk profile (3 scales, 16 base channels, RGB).
    pub fn preset(preset: Preset) -> Self {
        let ronneberger = ModelConfig {
            scales: 3,
            base_channels: 16,
            in_channels: 3,
            out_channels: 3,
            padding: Padding::Zeros,
            norm: NormMode::BatchNorm,
            activation: ActivationSpec::plain(BaseActivation::Relu),
            pooling: PoolKind::MaxPool,
            upsampling_filtered: false,
            upsample_order: FilterOrder::BeforeConv,
            residual: false,
            precision: Precision::Double,
        };
        let af = ModelConfig {
            padding: Padding::Circular,
            norm: NormMode::LayerNormAF,
            activation: ActivationSpec::filtered(BaseActivation::Gelu),
            pooling: PoolKind::BlurPool,
            upsampling_filtered: true,
            residual: true,
            ..ronneberger
        };
        match preset {
            Preset::Ronneberger => ronneberger,
            Preset::Jin => ModelConfig { residual: true, ..ronneberger },
            Preset::Af => af,
            Preset::AfDenoise => ModelConfig { residual: false, ..af },
        }
    }

    /// Full-size profile (4 scales, 64 base channels).
    pub fn full_profile(self) -> Self {
        ModelConfig { scales: 4, base_channels: 64, ..self }
    }

    pub fn channels_at(&self, scale: usize) -> usize {
        self.base_channels << scale
    }

    /// Input sizes must be multiples of this.
    pub fn size_multiple(&self) -> usize {
        1 << self.scales
    }

    pub fn validate(&self) -> Result<()> {
        if self.scales == 0 {
            return Err(Error::InvalidArgument("scales must be >= 1".into()));
        }
        if self.base_channels == 0 || self.in_channels == 0 || self.out_channels == 0 {
            return Err(Error::InvalidArgument("channel counts must be positive".into()));
        }
        if self.residual && self.in_channels != self.out_channels {
            return Err(Error::InvalidArgument(format!(
                "residual connection needs in_channels == out_channels ({} vs {})",
                self.in_channels, self.out_channels
            )));
        }
        if self.activation.filtered && self.activation.oversample < 2 {
            return Err(Error::InvalidArgument("filtered activations need oversample >= 2".into()));
        }
        Ok(())
    }
}

/// One row of the single-substitution ablation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub axis: &'static str,
    pub variant: String,
    pub config: ModelConfig,
}

/// Every single-axis substitution of `base`, one axis at a time, with the
/// unmodified setting listed first on each axis (22 rows).
pub fn ablation_matrix(base: ModelConfig) -> Vec<AblationRow> {
    let mut rows = Vec::new();
    let mut push = |axis: &'static str, variant: &str, config: ModelConfig| {
        rows.push(AblationRow { axis, variant: variant.to_string(), config });
    };
    push("Res. connection", "Present", ModelConfig { residual: true, ..base });
    push("Res. connection", "Absent", ModelConfig { residual: false, ..base });
    for norm in NormMode::ALL {
        push("Normalization", norm.name(), ModelConfig { norm, ..base });
    }
    for padding in Padding::ALL {
        push("Padding", padding.name(), ModelConfig { padding, ..base });
    }
    let activations = [
        ActivationSpec::filtered(BaseActivation::Gelu),
        ActivationSpec::plain(BaseActivation::Gelu),
        ActivationSpec::filtered(BaseActivation::Relu),
        ActivationSpec::plain(BaseActivation::Relu),
        ActivationSpec::filtered(BaseActivation::Poly),
        ActivationSpec::plain(BaseActivation::Poly),
    ];
    for activation in activations {
        push("Activation", &activation.name(), ModelConfig { activation, ..base });
    }
    push("Upsampling", "Filtered", ModelConfig { upsampling_filtered: true, ..base });
    push("Upsampling", "Unfiltered", ModelConfig { upsampling_filtered: false, ..base });
    for pooling in PoolKind::ALL {
        push("Pooling", pooling.name(), ModelConfig { pooling, ..base });
    }
    rows
}

/// The cumulative substitutions leading from `Ronneberger` to `AF`, one
/// layer type at a time: `(label, config)`.
pub fn incremental_variants() -> Vec<(&'static str, ModelConfig)> {
    let ronneberger = ModelConfig::preset(Preset::Ronneberger);
    let jin = ModelConfig::preset(Preset::Jin);
    let norm = ModelConfig { norm: NormMode::LayerNormAF, ..jin };
    let pad = ModelConfig { padding: Padding::Circular, ..norm };
    let act = ModelConfig { activation: ActivationSpec::filtered(BaseActivation::Gelu), ..pad };
    let up = ModelConfig { upsampling_filtered: true, ..act };
    let pool = ModelConfig { pooling: PoolKind::BlurPool, ..up };
    vec![
        ("UNet-Ronneberger", ronneberger),
        ("+ Res conn.", jin),
        ("+ LayerNorm-AF", norm),
        ("+ Circular pad.", pad),
        ("+ Filtered GELU", act),
        ("+ Filtered Upconv.", up),
        ("+ BlurPool", pool),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        assert!(ModelConfig::preset(Preset::Jin).residual);
        assert!(!ModelConfig::preset(Preset::Ronneberger).residual);
        assert_eq!(ModelConfig::preset(Preset::Af).pooling, PoolKind::BlurPool);
        assert!(!ModelConfig::preset(Preset::AfDenoise).residual);
        let af = ModelConfig::preset(Preset::Af);
        assert_eq!(af.padding, Padding::Circular);
        assert_eq!(af.norm, NormMode::LayerNormAF);
        assert!(af.activation.filtered && af.upsampling_filtered);
        assert_eq!(af.activation.oversample, 2);
    }

    #[test]
    fn preset_names_parse() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert_eq!("unet-af".parse::<Preset>().unwrap(), Preset::Af);
        assert_eq!("Nope".parse::<Preset>(), Err(Error::UnknownPreset("Nope".into())));
    }

    #[test]
    fn ablation_matrix_has_22_rows() {
        let rows = ablation_matrix(ModelConfig::preset(Preset::Af));
        assert_eq!(rows.len(), 22);
        let count = |axis: &str| rows.iter().filter(|r| r.axis == axis).count();
        assert_eq!(
            [count("Res. connection"), count("Normalization"), count("Padding"), count("Activation"), count("Upsampling"), count("Pooling")],
            [2, 5, 3, 6, 2, 4]
        );
    }

    #[test]
    fn incremental_path_ends_at_af() {
        let steps = incremental_variants();
        assert_eq!(steps.len(), 7);
        assert_eq!(steps.last().unwrap().1, ModelConfig::preset(Preset::Af));
    }
}
