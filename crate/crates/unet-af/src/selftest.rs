//! Desk-scale invariant suite behind the `selftest` command.

use std::f64::consts::PI;

use unet_af_core::degrade::{gaussian_blur, Boundary};
use unet_af_core::fft::cis;
use unet_af_core::layers::{
    conv2d, normalize, pool, upsample_layer, ConvParams, NormMode, NormParams, Padding, PoolKind, PoolSpec,
};
use unet_af_core::metrics::{equiv, psnr, ssim};
use unet_af_core::model::{ModelConfig, Preset};
use unet_af_core::spectral::{downsample, lowpass, translate, translate_adversarial_grid, upsample};
use unet_af_core::{fft2, BandSpec, Displacement, Precision, Rng, Tensor};

use crate::experiment::Protocol;
use crate::weights_io::{decode_weights, encode_weights};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, value: f64, bound: f64, below: bool) -> Check {
    let passed = if below { value <= bound } else { value >= bound };
    let op = if below { "<=" } else { ">=" };
    Check { name, passed, detail: format!("{value:.3e} {op} {bound:.1e}") }
}

fn failed(name: &'static str, err: impl std::fmt::Display) -> Check {
    Check { name, passed: false, detail: format!("error: {err}") }
}

/// Random input with no Nyquist content, so translation is exact.
fn smooth(rng: &mut Rng, shape: (usize, usize, usize, usize)) -> Tensor {
    lowpass(&rng.randn(shape), BandSpec::new(shape.2, shape.3)).expect("band equals size")
}

fn random_g(rng: &mut Rng, bound: f64) -> Displacement {
    Displacement::new(rng.uniform(-bound, bound), rng.uniform(-bound, bound))
}

fn diff(a: &Tensor, b: &Tensor) -> f64 {
    a.max_abs_diff(b).unwrap_or(f64::INFINITY)
}

fn spectral_checks(rng: &mut Rng) -> Vec<Check> {
    let mut out = Vec::new();

    let (h, w) = (12, 16);
    let x = rng.randn((1, 1, h, w));
    let spec = fft2(&x);
    let mut worst = 0.0_f64;
    for ky in 0..h {
        for kx in 0..w {
            let mut acc = unet_af_core::fft::Complex64::new(0.0, 0.0);
            for i in 0..h {
                for j in 0..w {
                    let phase = (ky * i) as f64 / h as f64 + (kx * j) as f64 / w as f64;
                    acc += x.get(0, 0, i, j) * cis(-2.0 * PI * phase);
                }
            }
            worst = worst.max((acc - spec.get(0, 0, ky, kx)).norm());
        }
    }
    out.push(check("fft2 matches the direct DFT", worst, 1e-10, true));

    let x = smooth(rng, (1, 2, 32, 32));
    let (g1, g2) = (random_g(rng, 3.0), random_g(rng, 3.0));
    let composed = translate(&translate(&x, g1), g2);
    out.push(check("translation group law", diff(&composed, &translate(&x, g1 + g2)), 1e-11, true));
    let back = translate(&translate(&x, g1), -g1);
    out.push(check("translation inverse", diff(&back, &x), 1e-11, true));

    let x = smooth(rng, (1, 2, 8, 8));
    let round = upsample(&x, 2).and_then(|u| downsample(&u, 2));
    out.push(match round {
        Ok(r) => check("downsample undoes upsample", diff(&r, &x), 1e-12, true),
        Err(e) => failed("downsample undoes upsample", e),
    });

    let (a, b) = (rng.randn((1, 1, 16, 16)), rng.randn((1, 1, 16, 16)));
    let band = BandSpec::new(8, 8);
    let la = lowpass(&a, band).expect("valid band");
    let idem = diff(&lowpass(&la, band).expect("valid band"), &la);
    out.push(check("lowpass is idempotent", idem, 1e-10, true));
    let lb = lowpass(&b, band).expect("valid band");
    let adj = (la.dot(&b).unwrap() - a.dot(&lb).unwrap()).abs();
    out.push(check("lowpass is self-adjoint", adj, 1e-10, true));
    out
}

fn layer_checks(rng: &mut Rng) -> Vec<Check> {
    let mut out = Vec::new();
    let x = smooth(rng, (2, 4, 16, 16));
    let g = random_g(rng, 4.0);
    let conv = ConvParams::new(rng.randn((3, 4, 3, 3)), vec![0.1, -0.2, 0.3], Padding::Circular)
        .expect("valid kernel");
    let a = conv2d(&translate(&x, g), &conv).unwrap();
    let b = translate(&conv2d(&x, &conv).unwrap(), g);
    out.push(check("circular convolution commutes", diff(&a, &b), 1e-9, true));

    let blur = PoolSpec::new(PoolKind::BlurPool);
    let a = pool(&translate(&x, g), &blur).unwrap();
    let b = translate(&pool(&x, &blur).unwrap(), g / 2.0);
    out.push(check("BlurPool commutes", diff(&a, &b), 1e-9, true));

    let up = ConvParams::new(rng.randn((2, 4, 3, 3)), vec![0.0; 2], Padding::Circular).expect("valid kernel");
    let a = upsample_layer(&translate(&x, g), true, &up).unwrap();
    let b = translate(&upsample_layer(&x, true, &up).unwrap(), g * 2.0);
    out.push(check("filtered upsampling commutes", diff(&a, &b), 1e-9, true));

    let norm = NormParams::identity(NormMode::LayerNormAF, 4);
    let a = normalize(&translate(&x, g), &norm).unwrap();
    let b = translate(&normalize(&x, &norm).unwrap(), g);
    out.push(check("LayerNorm-AF commutes", diff(&a, &b), 1e-9, true));

    let y = gaussian_blur(&x, 1.0, Boundary::Circular).unwrap();
    let a = gaussian_blur(&translate(&x, g), 1.0, Boundary::Circular).unwrap();
    out.push(check("circular blur commutes", diff(&a, &translate(&y, g)), 1e-11, true));
    out
}

fn metric_checks(rng: &mut Rng) -> Vec<Check> {
    let mut out = Vec::new();
    let a = rng.randn((1, 3, 16, 16));
    let p = psnr(&a, &a.map(|v| v + 0.1), 1.0).unwrap_or(f64::NAN);
    out.push(check("PSNR of a 0.1 offset", (p - 20.0).abs(), 1e-9, true));
    let s = ssim(&a, &a).unwrap_or(f64::NAN);
    out.push(check("SSIM of identical images", (s - 1.0).abs(), 1e-12, true));
    let identity = |t: &Tensor| Ok(t.clone());
    let grid = [Displacement::new(0.3, -1.2), Displacement::new(2.5, 0.75)];
    let report = equiv(&identity, &smooth(rng, (1, 1, 16, 16)), &grid, None);
    let all_identical = report
        .map(|r| r.records.iter().all(|r| r.error_psnr == Some(f64::INFINITY)))
        .unwrap_or(false);
    out.push(Check {
        name: "identity map is exactly equivariant",
        passed: all_identical,
        detail: String::new(),
    });
    let count = translate_adversarial_grid(0.5, 0.25).map(|g| g.len()).unwrap_or(0);
    out.push(Check {
        name: "adversarial grid size",
        passed: count == 24,
        detail: format!("{count} displacements"),
    });
    out
}

fn model_checks(precision: Precision) -> Vec<Check> {
    let mut out = Vec::new();
    let single = precision == Precision::Single;
    let protocol = Protocol { seed: 0, images: 1, size: 32, displacements: 4, max_disp: 8.0 };
    let af = ModelConfig { precision, ..ModelConfig::preset(Preset::Af) };
    let jin = ModelConfig { precision, ..ModelConfig::preset(Preset::Jin) };

    let whole = (|| -> crate::Result<f64> {
        let net = protocol.network(&af)?;
        let x = protocol.images(3)?;
        let g = Displacement::horizontal(8.0);
        let a = net.forward(&translate(&x, g))?;
        let b = translate(&net.forward(&x)?, g);
        Ok(diff(&a, &b))
    })();
    let tolerance = if single { 1e-5 } else { 1e-8 };
    out.push(match whole {
        Ok(v) => check("AF commutes with 8 px shifts", v, tolerance, true),
        Err(e) => failed("AF commutes with 8 px shifts", e),
    });

    let gap = protocol.equiv(&af).and_then(|a| Ok(a.mean_db - protocol.equiv(&jin)?.mean_db));
    out.push(match gap {
        Ok(v) => check("AF beats Jin on sub-pixel EQUIV (dB)", v, 25.0, false),
        Err(e) => failed("AF beats Jin on sub-pixel EQUIV (dB)", e),
    });

    let weights = protocol.weights(&af);
    out.push(match weights {
        Ok(w) => {
            let bytes = encode_weights(&w);
            let round_trip = decode_weights(&bytes).map(|r| r == w).unwrap_or(false);
            let truncated = decode_weights(&bytes[..bytes.len() - 3]).is_err();
            Check {
                name: "weight file round trip",
                passed: round_trip && truncated,
                detail: format!("{} bytes", bytes.len()),
            }
        }
        Err(e) => failed("weight file round trip", e),
    });
    out
}

/// Runs every check; model checks use `precision`.
pub fn run_selftest(precision: Precision) -> Vec<Check> {
    let mut rng = Rng::new(0);
    let mut checks = spectral_checks(&mut rng);
    checks.extend(layer_checks(&mut rng));
    checks.extend(metric_checks(&mut rng));
    checks.extend(model_checks(precision));
    checks
}
