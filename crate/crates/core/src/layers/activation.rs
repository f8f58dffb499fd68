use core::f64::consts::FRAC_1_SQRT_2;

use crate::spectral::{downsample, upsample};
use crate::{Error, Result, Tensor};

/// Pointwise nonlinearity underlying an activation layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseActivation {
    /// `u Φ(u)` with the exact erf form of the normal CDF.
    Gelu,
    Relu,
    /// `u + u²/4`.
    Poly,
}

impl BaseActivation {
    pub const ALL: [BaseActivation; 3] = [BaseActivation::Gelu, BaseActivation::Relu, BaseActivation::Poly];

    #[inline]
    pub fn apply(self, u: f64) -> f64 {
        match self {
            BaseActivation::Gelu => 0.5 * u * (1.0 + libm::erf(u * FRAC_1_SQRT_2)),
            BaseActivation::Relu => u.max(0.0),
            BaseActivation::Poly => u + 0.25 * u * u,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BaseActivation::Gelu => "GELU",
            BaseActivation::Relu => "ReLU",
            BaseActivation::Poly => "Poly",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ActivationSpec {
    pub base: BaseActivation,
    pub filtered: bool,
    /// Oversampling factor of the filtered variant.
    pub oversample: usize,
}

impl ActivationSpec {
    pub const fn plain(base: BaseActivation) -> Self {
        ActivationSpec { base, filtered: false, oversample: 2 }
    }

    pub const fn filtered(base: BaseActivation) -> Self {
        ActivationSpec { base, filtered: true, oversample: 2 }
    }

    pub fn name(&self) -> alloc::string::String {
        if self.filtered {
            alloc::format!("Filtered {}", self.base.name())
        } else {
            self.base.name().into()
        }
    }
}

/// Applies the activation. The filtered variant resamples onto a grid
/// `oversample` times finer, applies the base function there, and returns
/// to the input grid through an ideal low-pass filter.
pub fn activation(x: &Tensor, spec: &ActivationSpec) -> Result<Tensor> {
    let base = spec.base;
    if !spec.filtered {
        return Ok(x.map(|u| base.apply(u)));
    }
    if spec.oversample < 2 {
        return Err(Error::InvalidArgument(alloc::format!(
            "filtered activation needs oversample >= 2, got {}",
            spec.oversample
        )));
    }
    let mut fine = upsample(x, spec.oversample)?;
    fine.map_inplace(|u| base.apply(u));
    downsample(&fine, spec.oversample)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::psnr;
    use crate::spectral::{lowpass, translate, BandSpec, Displacement};
    use crate::Rng;

    #[test]
    fn gelu_reference_values() {
        // Φ(1) = 0.841344746068543, Φ(-1) = 0.158655253931457
        assert!((BaseActivation::Gelu.apply(1.0) - 0.841344746068543).abs() < 1e-14);
        assert!((BaseActivation::Gelu.apply(-1.0) + 0.158655253931457).abs() < 1e-14);
        assert_eq!(BaseActivation::Poly.apply(2.0), 3.0);
    }

    #[test]
    fn constants_are_fixed_points_of_filtering() {
        let c = 0.8;
        let x = Tensor::full((1, 2, 8, 8), c);
        let y = activation(&x, &ActivationSpec::filtered(BaseActivation::Gelu)).unwrap();
        let expected = BaseActivation::Gelu.apply(c);
        assert!(y.data().iter().all(|v| (v - expected).abs() < 1e-12));
    }

    #[test]
    fn zero_maps_to_zero() {
        let x = Tensor::zeros((1, 1, 6, 6));
        for base in [BaseActivation::Gelu, BaseActivation::Relu, BaseActivation::Poly] {
            for spec in [ActivationSpec::plain(base), ActivationSpec::filtered(base)] {
                assert!(activation(&x, &spec).unwrap().max_abs() < 1e-15);
            }
        }
    }

    #[test]
    fn unfiltered_relu_is_pointwise() {
        let x = Rng::new(3).randn((1, 1, 8, 8));
        let y = activation(&x, &ActivationSpec::plain(BaseActivation::Relu)).unwrap();
        assert_eq!(y, x.map(|v| v.max(0.0)));
    }

    #[test]
    fn rejects_oversample_below_two() {
        let spec = ActivationSpec { oversample: 1, ..ActivationSpec::filtered(BaseActivation::Gelu) };
        assert!(activation(&Tensor::zeros((1, 1, 4, 4)), &spec).is_err());
    }

    #[test]
    fn filtering_improves_equivariance() {
        let mut rng = Rng::new(4);
        // half-band limited, like the synthetic test images
        let x = lowpass(&rng.randn((1, 4, 32, 32)), BandSpec::new(16, 16)).unwrap();
        // unit RMS, the scale LayerNormAF hands to activations
        let x = x.scale(1.0 / libm::sqrt(x.sum_sq() / x.data().len() as f64));
        let g = Displacement::new(0.37, 0.81);
        let err = |spec: ActivationSpec| {
            let a = activation(&translate(&x, g), &spec).unwrap();
            let b = translate(&activation(&x, &spec).unwrap(), g);
            psnr(&a, &b, 1.0).unwrap()
        };
        let filtered = err(ActivationSpec::filtered(BaseActivation::Gelu));
        assert!(filtered >= 60.0, "filtered GELU {filtered} dB");
        assert!(err(ActivationSpec::plain(BaseActivation::Gelu)) < 55.0);
        assert!(err(ActivationSpec::plain(BaseActivation::Relu)) < 55.0);
    }
}
