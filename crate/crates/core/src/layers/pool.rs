use crate::spectral::downsample;
use crate::{Error, Result, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PoolKind {
    /// Ideal low-pass then decimation.
    BlurPool,
    MaxPool,
    AvgPool,
    /// Dense (stride-1, circular) max followed by `BlurPool`.
    MaxBlurPool,
}

impl PoolKind {
    pub const ALL: [PoolKind; 4] =
        [PoolKind::BlurPool, PoolKind::MaxPool, PoolKind::AvgPool, PoolKind::MaxBlurPool];

    pub fn name(self) -> &'static str {
        match self {
            PoolKind::BlurPool => "BlurPool",
            PoolKind::MaxPool => "MaxPool",
            PoolKind::AvgPool => "AvgPool",
            PoolKind::MaxBlurPool => "MaxBlurPool",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PoolSpec {
    pub kind: PoolKind,
    pub factor: usize,
}

impl PoolSpec {
    pub const fn new(kind: PoolKind) -> Self {
        PoolSpec { kind, factor: 2 }
    }
}

pub fn pool(x: &Tensor, spec: &PoolSpec) -> Result<Tensor> {
    let s = x.shape();
    let f = spec.factor;
    if f == 0 {
        return Err(Error::InvalidArgument("pooling factor must be >= 1".into()));
    }
    for size in [s.height, s.width] {
        if size % f != 0 {
            return Err(Error::IndivisibleSize { size, factor: f });
        }
    }
    match spec.kind {
        PoolKind::BlurPool => downsample(x, f),
        PoolKind::MaxPool => Ok(window_reduce(x, f, f64::NEG_INFINITY, f64::max, |m| m)),
        PoolKind::AvgPool => {
            let n = (f * f) as f64;
            Ok(window_reduce(x, f, 0.0, |a, b| a + b, |acc| acc / n))
        }
        PoolKind::MaxBlurPool => downsample(&dense_max(x, f), f),
    }
}

/// Reduces non-overlapping `f × f` windows.
fn window_reduce(
    x: &Tensor,
    f: usize,
    init: f64,
    combine: impl Fn(f64, f64) -> f64,
    finish: impl Fn(f64) -> f64,
) -> Tensor {
    let s = x.shape();
    let (h, w) = (s.height, s.width);
    let (oh, ow) = (h / f, w / f);
    let mut out = Tensor::zeros(s.with_spatial(oh, ow));
    for (src, dst) in x.planes().zip(out.planes_mut()) {
        for oi in 0..oh {
            for oj in 0..ow {
                let mut acc = init;
                for di in 0..f {
                    for dj in 0..f {
                        acc = combine(acc, src[(oi * f + di) * w + oj * f + dj]);
                    }
                }
                dst[oi * ow + oj] = finish(acc);
            }
        }
    }
    out
}

/// Stride-1 max over the `f × f` window anchored at each pixel, wrapping
/// circularly.
fn dense_max(x: &Tensor, f: usize) -> Tensor {
    let s = x.shape();
    let (h, w) = (s.height, s.width);
    let mut out = Tensor::zeros(s);
    for (src, dst) in x.planes().zip(out.planes_mut()) {
        for i in 0..h {
            for j in 0..w {
                let mut m = f64::NEG_INFINITY;
                for di in 0..f {
                    for dj in 0..f {
                        m = m.max(src[((i + di) % h) * w + (j + dj) % w]);
                    }
                }
                dst[i * w + j] = m;
            }
        }
    }
    out
}
