use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result, Shape, Tensor};

/// Boundary extension used by [`conv2d`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Padding {
    Circular,
    Zeros,
    Reflect,
}

impl Padding {
    pub const ALL: [Padding; 3] = [Padding::Circular, Padding::Zeros, Padding::Reflect];

    pub fn name(self) -> &'static str {
        match self {
            Padding::Circular => "Circular",
            Padding::Zeros => "Zeros",
            Padding::Reflect => "Reflect",
        }
    }

    /// Source index for a (possibly out-of-range) index on an axis of
    /// length `n`; `None` means a zero sample.
    #[inline]
    fn source(self, i: isize, n: usize) -> Option<usize> {
        let n = n as isize;
        if (0..n).contains(&i) {
            return Some(i as usize);
        }
        match self {
            Padding::Zeros => None,
            Padding::Circular => Some(i.rem_euclid(n) as usize),
            Padding::Reflect => {
                if n == 1 {
                    return Some(0);
                }
                let period = 2 * (n - 1);
                let m = i.rem_euclid(period);
                Some(if m < n { m } else { period - m } as usize)
            }
        }
    }
}

/// Weights `(out_channels, in_channels, kh, kw)`, per-output-channel bias
/// and the padding mode. Stride is 1 and the output keeps the input size.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams {
    pub weight: Tensor,
    pub bias: Vec<f64>,
    pub padding: Padding,
}

impl ConvParams {
    pub fn new(weight: Tensor, bias: Vec<f64>, padding: Padding) -> Result<Self> {
        let s = weight.shape();
        if s.height.is_multiple_of(2) || s.width.is_multiple_of(2) {
            return Err(Error::ShapeMismatch(format!("kernel {}x{} must have odd sides", s.height, s.width)));
        }
        if bias.len() != s.batch {
            return Err(Error::ShapeMismatch(format!(
                "bias has {} entries for {} output channels",
                bias.len(),
                s.batch
            )));
        }
        Ok(ConvParams { weight, bias, padding })
    }

    /// 1×1 identity map on `channels` channels.
    pub fn identity(channels: usize, padding: Padding) -> Self {
        let weight = Tensor::from_fn((channels, channels, 1, 1), |o, i, _, _| (o == i) as u8 as f64);
        ConvParams { weight, bias: vec![0.0; channels], padding }
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape().batch
    }

    pub fn in_channels(&self) -> usize {
        self.weight.shape().channels
    }

    pub fn kernel(&self) -> (usize, usize) {
        (self.weight.shape().height, self.weight.shape().width)
    }
}

/// Pads one plane by `(ph, pw)` on each side.
fn pad_plane(src: &[f64], h: usize, w: usize, ph: usize, pw: usize, mode: Padding) -> Vec<f64> {
    let (hp, wp) = (h + 2 * ph, w + 2 * pw);
    let mut out = vec![0.0; hp * wp];
    for i in 0..hp {
        let Some(si) = mode.source(i as isize - ph as isize, h) else { continue };
        let row = &mut out[i * wp..(i + 1) * wp];
        for (j, v) in row.iter_mut().enumerate() {
            if let Some(sj) = mode.source(j as isize - pw as isize, w) {
                *v = src[si * w + sj];
            }
        }
    }
    out
}

/// Same-size 2-D cross-correlation with per-channel bias.
/// `dst += kernel ⋆ src` for a padded source plane of width `w + kw - 1`.
fn accumulate(dst: &mut [f64], src: &[f64], kernel: &[f64], h: usize, w: usize, kh: usize, kw: usize) {
    let wp = w + kw - 1;
    for ky in 0..kh {
        for kx in 0..kw {
            let wv = kernel[ky * kw + kx];
            if wv == 0.0 {
                continue;
            }
            for i in 0..h {
                let srow = &src[(i + ky) * wp + kx..(i + ky) * wp + kx + w];
                let drow = &mut dst[i * w..(i + 1) * w];
                for (d, &v) in drow.iter_mut().zip(srow) {
                    *d += wv * v;
                }
            }
        }
    }
}

/// Specialization of [`accumulate`] that touches each output row once.
fn accumulate_3x3(dst: &mut [f64], src: &[f64], k: &[f64], h: usize, w: usize) {
    let wp = w + 2;
    for i in 0..h {
        let r0 = &src[i * wp..i * wp + wp];
        let r1 = &src[(i + 1) * wp..(i + 1) * wp + wp];
        let r2 = &src[(i + 2) * wp..(i + 2) * wp + wp];
        let drow = &mut dst[i * w..(i + 1) * w];
        for j in 0..w {
            drow[j] += k[0] * r0[j] + k[1] * r0[j + 1] + k[2] * r0[j + 2]
                + k[3] * r1[j] + k[4] * r1[j + 1] + k[5] * r1[j + 2]
                + k[6] * r2[j] + k[7] * r2[j + 1] + k[8] * r2[j + 2];
        }
    }
}

pub fn conv2d(x: &Tensor, p: &ConvParams) -> Result<Tensor> {
    let s = x.shape();
    let ws = p.weight.shape();
    let (oc, ic, kh, kw) = (ws.batch, ws.channels, ws.height, ws.width);
    if ic != s.channels {
        return Err(Error::ShapeMismatch(format!(
            "convolution expects {ic} input channels, got tensor {s}"
        )));
    }
    if s.height < kh || s.width < kw {
        return Err(Error::ShapeMismatch(format!(
            "spatial size {}x{} is smaller than the {kh}x{kw} kernel",
            s.height, s.width
        )));
    }
    if p.bias.len() != oc {
        return Err(Error::ShapeMismatch(format!("bias has {} entries for {oc} outputs", p.bias.len())));
    }
    let (h, w) = (s.height, s.width);
    let (ph, pw) = (kh / 2, kw / 2);
    let mut out = Tensor::zeros(Shape::new(s.batch, oc, h, w));
    let weights = p.weight.data();
    for b in 0..s.batch {
        let padded: Vec<Vec<f64>> =
            (0..ic).map(|c| pad_plane(x.plane(b, c), h, w, ph, pw, p.padding)).collect();
        for o in 0..oc {
            let dst = out.plane_mut(b, o);
            dst.fill(p.bias[o]);
            for (c, src) in padded.iter().enumerate() {
                let kernel = &weights[(o * ic + c) * kh * kw..(o * ic + c + 1) * kh * kw];
                if kh == 3 && kw == 3 {
                    accumulate_3x3(dst, src, kernel, h, w);
                } else {
                    accumulate(dst, src, kernel, h, w, kh, kw);
                }
            }
        }
    }
    Ok(out)
}
