//! Flat `key = value` model configuration files.
//!
//! ```text
//! # start from a preset, then override single fields
//! preset = AF
//! padding = zeros
//! activation = gelu
//! filtered = false
//! ```
//!
//! Keys: `preset`, `scales`, `base_channels`, `in_channels`,
//! `out_channels`, `padding`, `norm`, `activation`, `filtered`,
//! `oversample`, `pooling`, `upsampling` (`filtered`/`unfiltered`),
//! `upsample_order` (`before-conv`/`after-conv`), `residual`, `precision`
//! (`f32`/`f64`). `preset` is applied first wherever it appears. Names are
//! matched ignoring case, spaces, `-` and `_`.

use std::fs;
use std::path::Path;

use unet_af_core::layers::{BaseActivation, FilterOrder, NormMode, Padding, PoolKind};
use unet_af_core::model::{ModelConfig, Preset};
use unet_af_core::Precision;

use crate::error::{Error, Result};

fn key(s: &str) -> String {
    s.chars().filter(|c| !matches!(c, '-' | '_' | ' ')).collect::<String>().to_ascii_lowercase()
}

fn pick<T: Copy>(value: &str, options: &[T], name: impl Fn(T) -> &'static str, what: &str) -> Result<T> {
    options.iter().copied().find(|&o| key(name(o)) == key(value)).ok_or_else(|| {
        let valid: Vec<_> = options.iter().map(|&o| name(o)).collect();
        Error::Config(format!("unknown {what} `{value}` (expected one of: {})", valid.join(", ")))
    })
}

pub fn parse_padding(v: &str) -> Result<Padding> {
    pick(v, &Padding::ALL, Padding::name, "padding")
}

pub fn parse_norm(v: &str) -> Result<NormMode> {
    pick(v, &NormMode::ALL, NormMode::name, "normalization")
}

pub fn parse_pooling(v: &str) -> Result<PoolKind> {
    pick(v, &PoolKind::ALL, PoolKind::name, "pooling")
}

pub fn parse_activation(v: &str) -> Result<BaseActivation> {
    pick(v, &BaseActivation::ALL, BaseActivation::name, "activation")
}

pub fn parse_precision(v: &str) -> Result<Precision> {
    match key(v).as_str() {
        "f64" | "double" => Ok(Precision::Double),
        "f32" | "single" => Ok(Precision::Single),
        _ => Err(Error::Config(format!("unknown precision `{v}` (expected f32 or f64)"))),
    }
}

pub fn parse_preset(v: &str) -> Result<Preset> {
    v.parse::<Preset>().map_err(|_| {
        let valid: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
        Error::Config(format!("unknown preset `{v}` (expected one of: {})", valid.join(", ")))
    })
}

fn parse_bool(v: &str) -> Result<bool> {
    match key(v).as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("expected a boolean, got `{v}`"))),
    }
}

fn parse_count(v: &str) -> Result<usize> {
    v.parse().map_err(|_| Error::Config(format!("expected a non-negative integer, got `{v}`")))
}

/// Parses configuration text; `default` is the starting point when no
/// `preset` key is given.
pub fn parse_config(text: &str, default: ModelConfig) -> Result<ModelConfig> {
    let mut entries = Vec::new();
    for (number, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`, got `{line}`", number + 1)))?;
        entries.push((number + 1, key(k), v.trim().to_string()));
    }
    let mut config = default;
    for (_, _, v) in entries.iter().filter(|(_, k, _)| k == "preset") {
        config = ModelConfig::preset(parse_preset(v)?);
    }
    for (line, k, v) in &entries {
        let at = |e: Error| match e {
            Error::Config(m) => Error::Config(format!("line {line}: {m}")),
            other => other,
        };
        let apply = |config: &mut ModelConfig| -> Result<()> {
            match k.as_str() {
                "preset" => {}
                "scales" => config.scales = parse_count(v)?,
                "basechannels" => config.base_channels = parse_count(v)?,
                "inchannels" => config.in_channels = parse_count(v)?,
                "outchannels" => config.out_channels = parse_count(v)?,
                "padding" => config.padding = parse_padding(v)?,
                "norm" | "normalization" => config.norm = parse_norm(v)?,
                "activation" => config.activation.base = parse_activation(v)?,
                "filtered" => config.activation.filtered = parse_bool(v)?,
                "oversample" => config.activation.oversample = parse_count(v)?,
                "pooling" => config.pooling = parse_pooling(v)?,
                "upsampling" => {
                    config.upsampling_filtered = match key(v).as_str() {
                        "filtered" => true,
                        "unfiltered" => false,
                        _ => parse_bool(v)?,
                    }
                }
                "upsampleorder" => {
                    config.upsample_order = match key(v).as_str() {
                        "beforeconv" => FilterOrder::BeforeConv,
                        "afterconv" => FilterOrder::AfterConv,
                        _ => return Err(Error::Config(format!("unknown upsample order `{v}`"))),
                    }
                }
                "residual" => config.residual = parse_bool(v)?,
                "precision" => config.precision = parse_precision(v)?,
                _ => return Err(Error::Config(format!("unknown key `{k}`"))),
            }
            Ok(())
        };
        apply(&mut config).map_err(at)?;
    }
    config.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(config)
}

pub fn load_config(path: impl AsRef<Path>, default: ModelConfig) -> Result<ModelConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, default).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}
