use alloc::format;
use alloc::vec::Vec;

use super::config::ModelConfig;
use super::weights::WeightStore;
use crate::layers::{
    activation, concat, conv2d, normalize, pool, upsample_layer_ordered, ConvParams, NormParams,
    Padding, PoolSpec,
};
use crate::{Error, Result, Tensor};

#[derive(Debug, Clone)]
struct Block {
    conv1: ConvParams,
    norm1: NormParams,
    conv2: ConvParams,
    norm2: NormParams,
}

#[derive(Debug, Clone)]
struct DecoderStage {
    up: ConvParams,
    block: Block,
}

/// A UNet with its parameters resolved, ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct Unet {
    config: ModelConfig,
    encoder: Vec<Block>,
    bottleneck: Block,
    /// Coarsest stage first.
    decoder: Vec<DecoderStage>,
    head: ConvParams,
}

fn vector(store: &WeightStore, path: &str) -> Result<Vec<f64>> {
    Ok(store.get(path)?.data.clone())
}

fn conv(store: &WeightStore, prefix: &str, padding: Padding) -> Result<ConvParams> {
    let weight = store.get(&format!("{prefix}/weight"))?.to_tensor()?;
    let bias = vector(store, &format!("{prefix}/bias"))?;
    ConvParams::new(weight, bias, padding)
}

fn norm(store: &WeightStore, prefix: &str, config: &ModelConfig) -> Result<NormParams> {
    let channels = store.get(&format!("{prefix}/gamma"))?.data.len();
    Ok(NormParams {
        gamma: vector(store, &format!("{prefix}/gamma"))?,
        beta: vector(store, &format!("{prefix}/beta"))?,
        running_mean: vector(store, &format!("{prefix}/running_mean"))?,
        running_var: vector(store, &format!("{prefix}/running_var"))?,
        ..NormParams::identity(config.norm, channels)
    })
}

fn block(store: &WeightStore, prefix: &str, config: &ModelConfig) -> Result<Block> {
    Ok(Block {
        conv1: conv(store, &format!("{prefix}/conv1"), config.padding)?,
        norm1: norm(store, &format!("{prefix}/norm1"), config)?,
        conv2: conv(store, &format!("{prefix}/conv2"), config.padding)?,
        norm2: norm(store, &format!("{prefix}/norm2"), config)?,
    })
}

impl Unet {
    pub fn new(config: ModelConfig, store: &WeightStore) -> Result<Self> {
        config.validate()?;
        store.check(&config)?;
        let encoder = (0..config.scales)
            .map(|s| block(store, &format!("enc/{s}"), &config))
            .collect::<Result<Vec<_>>>()?;
        let bottleneck = block(store, "mid", &config)?;
        let decoder = (0..config.scales)
            .rev()
            .map(|s| {
                Ok(DecoderStage {
                    up: conv(store, &format!("dec/{s}/up"), config.padding)?,
                    block: block(store, &format!("dec/{s}"), &config)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let head = conv(store, "head", config.padding)?;
        Ok(Unet { config, encoder, bottleneck, decoder, head })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    fn finish(&self, t: Tensor) -> Tensor {
        t.with_precision(self.config.precision)
    }

    fn conv_norm_act(&self, x: &Tensor, c: &ConvParams, n: &NormParams) -> Result<Tensor> {
        let y = self.finish(conv2d(x, c)?);
        let y = self.finish(normalize(&y, n)?);
        Ok(self.finish(activation(&y, &self.config.activation)?))
    }

    fn run_block(&self, x: &Tensor, b: &Block) -> Result<Tensor> {
        let y = self.conv_norm_act(x, &b.conv1, &b.norm1)?;
        self.conv_norm_act(&y, &b.conv2, &b.norm2)
    }

    /// Checks that `x` can flow through the network.
    pub fn check_input(&self, x: &Tensor) -> Result<()> {
        let s = x.shape();
        if s.channels != self.config.in_channels {
            return Err(Error::ShapeMismatch(format!(
                "model expects {} input channels, got tensor {s}",
                self.config.in_channels
            )));
        }
        let m = self.config.size_multiple();
        for size in [s.height, s.width] {
            if size % m != 0 || size == 0 {
                return Err(Error::IndivisibleSize { size, factor: m });
            }
        }
        Ok(())
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        self.check_input(x)?;
        let input = x.clone().with_precision(self.config.precision);
        let pool_spec = PoolSpec::new(self.config.pooling);
        let mut skips = Vec::with_capacity(self.encoder.len());
        let mut h = input.clone();
        for b in &self.encoder {
            let feat = self.run_block(&h, b)?;
            h = self.finish(pool(&feat, &pool_spec)?);
            skips.push(feat);
        }
        h = self.run_block(&h, &self.bottleneck)?;
        for stage in &self.decoder {
            let up = upsample_layer_ordered(
                &h,
                self.config.upsampling_filtered,
                self.config.upsample_order,
                &stage.up,
            )?;
            let up = self.finish(up);
            let skip = skips.pop().expect("one skip per decoder stage");
            h = self.run_block(&concat(&up, &skip)?, &stage.block)?;
        }
        let mut out = self.finish(conv2d(&h, &self.head)?);
        if self.config.residual {
            out = self.finish(out.add(&input)?);
        }
        Ok(out)
    }
}

/// One-shot forward pass: resolves the parameters and evaluates `x`.
pub fn forward(config: &ModelConfig, weights: &WeightStore, x: &Tensor) -> Result<Tensor> {
    Unet::new(*config, weights)?.forward(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic_images;
    use crate::model::{init, Param, Preset};
    use crate::spectral::{translate, Displacement};
    use crate::Rng;

    fn network(config: ModelConfig, seed: u64) -> (Unet, WeightStore) {
        let w = init(&config, &mut Rng::new(seed)).unwrap();
        (Unet::new(config, &w).unwrap(), w)
    }

    #[test]
    fn output_shape_matches_input_for_every_preset() {
        let x = synthetic_images(&mut Rng::new(0), 2, 3, 64).unwrap();
        for p in Preset::ALL {
            let (net, _) = network(ModelConfig::preset(p), 1);
            let y = net.forward(&x).unwrap();
            assert_eq!(y.shape(), x.shape(), "{p}");
            assert!(y.is_finite());
        }
    }

    #[test]
    fn zero_head_and_zero_input_give_zero_output() {
        let cfg = ModelConfig::preset(Preset::Af);
        let mut w = init(&cfg, &mut Rng::new(2)).unwrap();
        let dims = w.get("head/weight").unwrap().dims.clone();
        w.insert("head/weight", Param::filled(dims, 0.0));
        let x = Tensor::zeros((1, 3, 32, 32));
        let y = forward(&cfg, &w, &x).unwrap();
        assert_eq!(y.max_abs(), 0.0);
    }

    #[test]
    fn residual_toggle_adds_the_input() {
        let x = synthetic_images(&mut Rng::new(3), 1, 3, 32).unwrap();
        for p in [Preset::Af, Preset::Jin] {
            let on = ModelConfig { residual: true, ..ModelConfig::preset(p) };
            let off = ModelConfig { residual: false, ..on };
            let w = init(&on, &mut Rng::new(4)).unwrap();
            let a = forward(&on, &w, &x).unwrap();
            let b = forward(&off, &w, &x).unwrap();
            // The only difference is the final sum, so the residue is at
            // most one rounding of that sum.
            let diff = a.sub(&b).unwrap();
            assert!(diff.max_abs_diff(&x).unwrap() <= f64::EPSILON * a.max_abs().max(1.0), "{p}");
        }
    }

    #[test]
    fn whole_pixel_shifts_commute_exactly() {
        let x = synthetic_images(&mut Rng::new(5), 1, 3, 32).unwrap();
        let (net, _) = network(ModelConfig::preset(Preset::Af), 6);
        let g = Displacement::horizontal(8.0);
        let a = net.forward(&translate(&x, g)).unwrap();
        let b = translate(&net.forward(&x).unwrap(), g);
        assert!(a.max_abs_diff(&b).unwrap() < 1e-8);
    }

    #[test]
    fn input_checks() {
        let (net, w) = network(ModelConfig::preset(Preset::Af), 7);
        assert!(matches!(
            net.forward(&Tensor::zeros((1, 3, 20, 16))),
            Err(Error::IndivisibleSize { size: 20, factor: 8 })
        ));
        assert!(matches!(net.forward(&Tensor::zeros((1, 1, 16, 16))), Err(Error::ShapeMismatch(_))));
        let narrow = ModelConfig { base_channels: 8, ..ModelConfig::preset(Preset::Af) };
        assert!(matches!(Unet::new(narrow, &w), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn single_precision_rounds_every_output() {
        let cfg = ModelConfig { precision: crate::Precision::Single, ..ModelConfig::preset(Preset::Af) };
        let (net, _) = network(cfg, 8);
        let x = synthetic_images(&mut Rng::new(9), 1, 3, 32).unwrap();
        let y = net.forward(&x).unwrap();
        assert!(y.data().iter().all(|&v| (v as f32) as f64 == v));
    }
}
