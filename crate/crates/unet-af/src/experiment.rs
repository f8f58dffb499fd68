//! Seeded measurement protocols shared by the CLI and the test suites.
//!
//! One seed drives everything: weights are drawn from `Rng::new(seed)`,
//! images from stream 1 of it and displacements from stream 2. Every
//! configuration evaluated under one protocol therefore sees the same
//! inputs, and layers with equal shapes get equal weights.

use rayon::prelude::*;
use unet_af_core::data::{random_displacements, synthetic_images};
use unet_af_core::metrics::{
    adversarial_levels, equiv_record, restoration_record, EquivRecord, EquivReport,
};
use unet_af_core::model::{ablation_matrix, init, ModelConfig, Unet, WeightStore};
use unet_af_core::spectral::{translate_adversarial_grid, Displacement};
use unet_af_core::{Rng, Tensor};

use crate::error::Result;

const IMAGE_STREAM: u64 = 1;
const DISPLACEMENT_STREAM: u64 = 2;
const NOISE_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Protocol {
    pub seed: u64,
    /// Synthetic images per batch.
    pub images: usize,
    /// Square image side in pixels.
    pub size: usize,
    /// Random displacements per evaluation.
    pub displacements: usize,
    /// Bound on each displacement component, in pixels.
    pub max_disp: f64,
}

impl Default for Protocol {
    /// 64 displacements with components uniform in `[-8, 8]` px on two
    /// 64×64 images.
    fn default() -> Self {
        Protocol { seed: 0, images: 2, size: 64, displacements: 64, max_disp: 8.0 }
    }
}

impl Protocol {
    /// The equivariance-gap protocol: 8 images of 64×64, 32 displacements.
    pub fn gap() -> Self {
        Protocol { images: 8, displacements: 32, ..Protocol::default() }
    }

    pub fn images(&self, channels: usize) -> Result<Tensor> {
        let mut rng = Rng::new(self.seed).fork(IMAGE_STREAM);
        Ok(synthetic_images(&mut rng, self.images, channels, self.size)?)
    }

    pub fn displacements(&self) -> Vec<Displacement> {
        let mut rng = Rng::new(self.seed).fork(DISPLACEMENT_STREAM);
        random_displacements(&mut rng, self.displacements, self.max_disp)
    }

    pub fn weights(&self, config: &ModelConfig) -> Result<WeightStore> {
        Ok(init(config, &mut Rng::new(self.seed))?)
    }

    pub fn noise_rng(&self) -> Rng {
        Rng::new(self.seed).fork(NOISE_STREAM)
    }

    pub fn network(&self, config: &ModelConfig) -> Result<Unet> {
        Ok(Unet::new(*config, &self.weights(config)?)?)
    }

    /// Equivariance error of `config` with protocol weights and inputs.
    pub fn equiv(&self, config: &ModelConfig) -> Result<EquivReport> {
        let net = self.network(config)?;
        let x = self.images(config.in_channels)?;
        par_equiv(&|t: &Tensor| net.forward(t), &x, &self.displacements(), None)
    }
}

/// Displacements `(k·step, 0)` for `k = 0, 1, …` up to `max_disp`.
pub fn horizontal_sweep(max_disp: f64, step: f64) -> Vec<Displacement> {
    if step.is_nan() || step <= 0.0 || max_disp.is_nan() || max_disp < 0.0 {
        return vec![Displacement::ZERO];
    }
    let count = (max_disp / step + 1e-9).floor() as usize;
    (0..=count).map(|k| Displacement::horizontal(k as f64 * step)).collect()
}

/// [`unet_af_core::metrics::equiv`] with displacements evaluated in
/// parallel; the report is identical to the sequential one.
pub fn par_equiv<F>(
    f: &F,
    x: &Tensor,
    displacements: &[Displacement],
    reference: Option<&Tensor>,
) -> Result<EquivReport>
where
    F: Fn(&Tensor) -> unet_af_core::Result<Tensor> + Sync,
{
    let fx = f(x)?;
    let records = displacements
        .par_iter()
        .map(|&g| equiv_record(f, x, &fx, g, reference))
        .collect::<unet_af_core::Result<Vec<EquivRecord>>>()?;
    Ok(EquivReport::from_records(records, Vec::new()))
}

/// [`unet_af_core::metrics::adversarial_sweep`] evaluated in parallel.
pub fn par_adversarial<F>(f: &F, x: &Tensor, x_ref: &Tensor, max_disp: f64, step: f64) -> Result<EquivReport>
where
    F: Fn(&Tensor) -> unet_af_core::Result<Tensor> + Sync,
{
    let grid = translate_adversarial_grid(max_disp, step)?;
    let records = grid
        .par_iter()
        .map(|&g| restoration_record(f, x, x_ref, g))
        .collect::<unet_af_core::Result<Vec<EquivRecord>>>()?;
    let levels = adversarial_levels(&records, max_disp, step);
    Ok(EquivReport::from_records(records, levels))
}

/// One evaluated row of the single-substitution ablation.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationResult {
    pub axis: &'static str,
    pub variant: String,
    pub mean_db: f64,
    pub std_db: f64,
}

pub fn run_ablation(base: ModelConfig, protocol: &Protocol) -> Result<Vec<AblationResult>> {
    ablation_matrix(base)
        .into_iter()
        .map(|row| {
            let r = protocol.equiv(&row.config)?;
            Ok(AblationResult { axis: row.axis, variant: row.variant, mean_db: r.mean_db, std_db: r.std_db })
        })
        .collect()
}

pub fn ablation_csv(rows: &[AblationResult]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["axis", "variant", "equiv_mean_db", "equiv_std_db"])?;
    for r in rows {
        w.write_record([r.axis.to_string(), r.variant.clone(), format!("{:.4}", r.mean_db), format!("{:.4}", r.std_db)])?;
    }
    w.into_inner().map_err(|e| crate::Error::Csv(e.into_error().into()))
}

pub fn ablation_markdown(rows: &[AblationResult]) -> String {
    let mut out = String::from("| Layer | Variant | EQUIV (dB) |\n|---|---|---|\n");
    let mut last = "";
    for r in rows {
        let axis = if r.axis == last { "" } else { r.axis };
        last = r.axis;
        out.push_str(&format!("| {axis} | {} | {:.2} ± {:.2} |\n", r.variant, r.mean_db, r.std_db));
    }
    out
}
