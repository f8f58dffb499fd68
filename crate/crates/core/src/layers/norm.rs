use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormMode {
    /// Per-sample statistics over all channels and positions.
    LayerNormAF,
    /// Inference-mode normalization with running statistics.
    BatchNorm,
    /// Per-(sample, channel) spatial statistics.
    InstanceNorm,
    /// Per-(sample, position) statistics across channels.
    LayerNorm,
    None,
}

impl NormMode {
    pub const ALL: [NormMode; 5] = [
        NormMode::LayerNormAF,
        NormMode::BatchNorm,
        NormMode::InstanceNorm,
        NormMode::LayerNorm,
        NormMode::None,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NormMode::LayerNormAF => "LayerNorm-AF",
            NormMode::BatchNorm => "BatchNorm",
            NormMode::InstanceNorm => "InstanceNorm",
            NormMode::LayerNorm => "LayerNorm",
            NormMode::None => "None",
        }
    }
}

pub const DEFAULT_EPSILON: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct NormParams {
    pub mode: NormMode,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub epsilon: f64,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

impl NormParams {
    /// Unit scale, zero shift, running statistics `(0, 1)`.
    pub fn identity(mode: NormMode, channels: usize) -> Self {
        NormParams {
            mode,
            gamma: vec![1.0; channels],
            beta: vec![0.0; channels],
            epsilon: DEFAULT_EPSILON,
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
        }
    }

    fn check(&self, channels: usize) -> Result<()> {
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        let lens = [
            self.gamma.len(),
            self.beta.len(),
            self.running_mean.len(),
            self.running_var.len(),
        ];
        if lens.iter().any(|&l| l != channels) {
            return Err(Error::ShapeMismatch(format!(
                "normalization parameters sized {lens:?} for {channels} channels"
            )));
        }
        Ok(())
    }
}

fn mean_var(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (mut n, mut sum) = (0usize, 0.0);
    for v in values.clone() {
        n += 1;
        sum += v;
    }
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = sum / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    (mean, var)
}

pub fn normalize(x: &Tensor, p: &NormParams) -> Result<Tensor> {
    let s = x.shape();
    p.check(s.channels)?;
    let (c_count, n) = (s.channels, s.plane_len());
    let mut out = x.clone();
    match p.mode {
        NormMode::None => {}
        NormMode::LayerNormAF => {
            for b in 0..s.batch {
                let (mean, var) = mean_var(x.sample(b).iter().copied());
                let inv = 1.0 / libm::sqrt(var + p.epsilon);
                for c in 0..c_count {
                    out.plane_mut(b, c).iter_mut().for_each(|v| *v = (*v - mean) * inv);
                }
            }
        }
        NormMode::BatchNorm => {
            for b in 0..s.batch {
                for c in 0..c_count {
                    let inv = 1.0 / libm::sqrt(p.running_var[c] + p.epsilon);
                    let m = p.running_mean[c];
                    out.plane_mut(b, c).iter_mut().for_each(|v| *v = (*v - m) * inv);
                }
            }
        }
        NormMode::InstanceNorm => {
            for b in 0..s.batch {
                for c in 0..c_count {
                    let (mean, var) = mean_var(x.plane(b, c).iter().copied());
                    let inv = 1.0 / libm::sqrt(var + p.epsilon);
                    out.plane_mut(b, c).iter_mut().for_each(|v| *v = (*v - mean) * inv);
                }
            }
        }
        NormMode::LayerNorm => {
            for b in 0..s.batch {
                let sample = x.sample(b);
                for k in 0..n {
                    let (mean, var) = mean_var((0..c_count).map(|c| sample[c * n + k]));
                    let inv = 1.0 / libm::sqrt(var + p.epsilon);
                    for c in 0..c_count {
                        let idx = x.index(b, c, 0, 0) + k;
                        out.data_mut()[idx] = (sample[c * n + k] - mean) * inv;
                    }
                }
            }
        }
    }
    for b in 0..s.batch {
        for c in 0..c_count {
            let (g, be) = (p.gamma[c], p.beta[c]);
            if g != 1.0 || be != 0.0 {
                out.plane_mut(b, c).iter_mut().for_each(|v| *v = *v * g + be);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{lowpass, translate, BandSpec, Displacement};
    use crate::Rng;

    fn sample_stats(t: &Tensor, b: usize) -> (f64, f64) {
        mean_var(t.sample(b).iter().copied())
    }

    #[test]
    fn layer_norm_af_standardizes_each_sample() {
        let x = Rng::new(1).randn((2, 3, 6, 6)).map(|v| 3.0 * v + 1.5);
        let y = normalize(&x, &NormParams::identity(NormMode::LayerNormAF, 3)).unwrap();
        for b in 0..2 {
            let (m, v) = sample_stats(&y, b);
            assert!(m.abs() < 1e-10 && (v - 1.0).abs() < 1e-5, "mean {m} var {v}");
        }
        let tiny = NormParams { epsilon: 1e-14, ..NormParams::identity(NormMode::LayerNormAF, 3) };
        let y = normalize(&x, &tiny).unwrap();
        assert!((sample_stats(&y, 0).1 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn constant_input_maps_to_beta() {
        let mut p = NormParams::identity(NormMode::LayerNormAF, 2);
        p.beta = vec![0.25, -1.0];
        p.gamma = vec![3.0, 2.0];
        let y = normalize(&Tensor::full((1, 2, 4, 4), 7.0), &p).unwrap();
        assert!(y.plane(0, 0).iter().all(|&v| v == 0.25));
        assert!(y.plane(0, 1).iter().all(|&v| v == -1.0));
    }

    #[test]
    fn layer_norm_af_commutes_with_translation() {
        let mut rng = Rng::new(2);
        let x = lowpass(&rng.randn((1, 4, 16, 16)), BandSpec::new(16, 16)).unwrap();
        let mut p = NormParams::identity(NormMode::LayerNormAF, 4);
        p.gamma = (0..4).map(|_| rng.normal()).collect();
        p.beta = (0..4).map(|_| rng.normal()).collect();
        let g = Displacement::new(1.37, -0.52);
        let xt = translate(&x, g);
        let (m0, v0) = sample_stats(&x, 0);
        let (m1, v1) = sample_stats(&xt, 0);
        assert!((m0 - m1).abs() < 1e-11 && (v0 - v1).abs() < 1e-11);
        let a = normalize(&xt, &p).unwrap();
        let b = translate(&normalize(&x, &p).unwrap(), g);
        assert!(a.max_abs_diff(&b).unwrap() < 1e-10);
    }

    #[test]
    fn layer_norm_af_is_scale_invariant() {
        let x = Rng::new(3).randn((1, 2, 8, 8)).scale(2.0);
        let p = NormParams { epsilon: 1e-15, ..NormParams::identity(NormMode::LayerNormAF, 2) };
        let a = normalize(&x, &p).unwrap();
        let b = normalize(&x.scale(37.5), &p).unwrap();
        assert!(a.max_abs_diff(&b).unwrap() < 1e-9);
    }

    #[test]
    fn other_modes() {
        let x = Rng::new(4).randn((2, 3, 5, 5));
        let mut p = NormParams::identity(NormMode::BatchNorm, 3);
        p.running_mean = vec![1.0, 0.0, -1.0];
        p.running_var = vec![4.0, 1.0, 0.25];
        let y = normalize(&x, &p).unwrap();
        let expected = (x.get(1, 2, 3, 4) + 1.0) / libm::sqrt(0.25 + DEFAULT_EPSILON);
        assert!((y.get(1, 2, 3, 4) - expected).abs() < 1e-14);

        let y = normalize(&x, &NormParams::identity(NormMode::InstanceNorm, 3)).unwrap();
        let (m, v) = mean_var(y.plane(1, 1).iter().copied());
        assert!(m.abs() < 1e-12 && (v - 1.0).abs() < 1e-3);

        let y = normalize(&x, &NormParams::identity(NormMode::LayerNorm, 3)).unwrap();
        let (m, _) = mean_var((0..3).map(|c| y.get(0, c, 2, 2)));
        assert!(m.abs() < 1e-12);

        assert_eq!(normalize(&x, &NormParams::identity(NormMode::None, 3)).unwrap(), x);
        assert!(normalize(&x, &NormParams::identity(NormMode::None, 2)).is_err());
    }
}
