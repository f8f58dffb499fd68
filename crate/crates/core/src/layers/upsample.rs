use super::conv::{conv2d, ConvParams};
use crate::spectral::{lowpass, upsample, BandSpec};
use crate::{Result, Tensor};

/// Where the anti-aliasing filter of a filtered upsampling layer sits
/// relative to its convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FilterOrder {
    #[default]
    BeforeConv,
    AfterConv,
}

/// Inserts `factor - 1` zeros between samples, with gain `factor²` so the
/// mean is preserved.
pub fn zero_insert(x: &Tensor, factor: usize) -> Tensor {
    let s = x.shape();
    let (h, w) = (s.height, s.width);
    let mut out = Tensor::zeros(s.with_spatial(h * factor, w * factor));
    let gain = (factor * factor) as f64;
    let ow = w * factor;
    for (src, dst) in x.planes().zip(out.planes_mut()) {
        for i in 0..h {
            for j in 0..w {
                dst[i * factor * ow + j * factor] = gain * src[i * w + j];
            }
        }
    }
    out
}

/// ×2 upsampling followed by a convolution. The unfiltered variant is plain
/// zero insertion; the filtered one removes the spectral images it creates,
/// which is exact sinc interpolation.
pub fn upsample_layer(x: &Tensor, filtered: bool, p: &ConvParams) -> Result<Tensor> {
    upsample_layer_ordered(x, filtered, FilterOrder::BeforeConv, p)
}

pub fn upsample_layer_ordered(
    x: &Tensor,
    filtered: bool,
    order: FilterOrder,
    p: &ConvParams,
) -> Result<Tensor> {
    if !filtered {
        return conv2d(&zero_insert(x, 2), p);
    }
    match order {
        FilterOrder::BeforeConv => conv2d(&upsample(x, 2)?, p),
        FilterOrder::AfterConv => {
            let y = conv2d(&zero_insert(x, 2), p)?;
            let s = y.shape();
            lowpass(&y, BandSpec::new(s.height / 2, s.width / 2))
        }
    }
}
