//! Continuous circular translation and ideal (periodic sinc) resampling.
//!
//! Every operator here is a Fourier-domain mask or phase ramp applied per
//! plane. Band edges follow one rule: on a grid of `M` samples, a signed
//! frequency `k` is kept iff `2|k| < M`. The Nyquist bin of an even-sized
//! target is therefore always dropped.
//!
//! Even-sized inputs carry a Nyquist bin whose continuous interpolant is
//! ambiguous. [`translate`] and [`upsample`] treat it as split equally
//! between `+N/2` and `-N/2`, which keeps outputs real and makes integer
//! shifts exact rolls. On the subspace without Nyquist content (everything
//! produced by [`lowpass`], [`downsample`] and the filtered layers)
//! translation is unitary and obeys the group law exactly.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Div, Mul, Neg, Sub};

use crate::fft::{cis, Complex64};
use crate::spectrum::map_planes_spectral;
use crate::{Error, Result, Tensor};

/// Continuous 2-D translation in pixels of the grid it is applied on.
/// Positive `gx` moves content right, positive `gy` moves it down.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Displacement {
    pub gx: f64,
    pub gy: f64,
}

impl Displacement {
    pub const ZERO: Displacement = Displacement { gx: 0.0, gy: 0.0 };

    pub const fn new(gx: f64, gy: f64) -> Self {
        Displacement { gx, gy }
    }

    pub fn horizontal(gx: f64) -> Self {
        Displacement { gx, gy: 0.0 }
    }

    /// Chebyshev length `max(|gx|, |gy|)`.
    pub fn max_abs(&self) -> f64 {
        self.gx.abs().max(self.gy.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.gx.is_finite() && self.gy.is_finite()
    }
}

impl Add for Displacement {
    type Output = Displacement;
    fn add(self, o: Displacement) -> Displacement {
        Displacement::new(self.gx + o.gx, self.gy + o.gy)
    }
}

impl Sub for Displacement {
    type Output = Displacement;
    fn sub(self, o: Displacement) -> Displacement {
        Displacement::new(self.gx - o.gx, self.gy - o.gy)
    }
}

impl Neg for Displacement {
    type Output = Displacement;
    fn neg(self) -> Displacement {
        Displacement::new(-self.gx, -self.gy)
    }
}

impl Mul<f64> for Displacement {
    type Output = Displacement;
    fn mul(self, s: f64) -> Displacement {
        Displacement::new(self.gx * s, self.gy * s)
    }
}

impl Div<f64> for Displacement {
    type Output = Displacement;
    fn div(self, s: f64) -> Displacement {
        Displacement::new(self.gx / s, self.gy / s)
    }
}

/// The grid whose Nyquist band a low-pass filter preserves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BandSpec {
    pub target_height: usize,
    pub target_width: usize,
}

impl BandSpec {
    pub const fn new(target_height: usize, target_width: usize) -> Self {
        BandSpec { target_height, target_width }
    }
}

/// Signed frequency of DFT bin `k` on a grid of `n`; the Nyquist bin of an
/// even grid maps to `+n/2`.
#[inline]
pub fn signed_frequency(k: usize, n: usize) -> isize {
    if 2 * k <= n {
        k as isize
    } else {
        k as isize - n as isize
    }
}

#[inline]
fn is_nyquist(k: usize, n: usize) -> bool {
    n.is_multiple_of(2) && 2 * k == n
}

#[inline]
fn in_band(k: usize, n: usize, target: usize) -> bool {
    2 * signed_frequency(k, n).unsigned_abs() < target
}

/// Per-axis phase factors of a shift by `g` samples on a grid of `n`.
fn phase_ramp(n: usize, g: f64) -> Vec<Complex64> {
    (0..n)
        .map(|k| {
            if is_nyquist(k, n) {
                // mean of the +n/2 and -n/2 phases
                Complex64::new(libm::cos(PI * g), 0.0)
            } else {
                let f = signed_frequency(k, n) as f64;
                cis(-2.0 * PI * g * f / n as f64)
            }
        })
        .collect()
}

/// Exact circular sub-pixel translation by band-limited interpolation.
pub fn translate(x: &Tensor, g: Displacement) -> Tensor {
    let s = x.shape();
    let (h, w) = (s.height, s.width);
    let py = phase_ramp(h, g.gy);
    let px = phase_ramp(w, g.gx);
    map_planes_spectral(x, h, w, |src, dst| {
        for (ky, &phase) in py.iter().enumerate() {
            let row = ky * w;
            for kx in 0..w {
                dst[row + kx] = src[row + kx] * phase * px[kx];
            }
        }
    })
}

/// Every displacement on the square grid `{0, ±step, ±2 step, …}²` with
/// Chebyshev length at most `max_disp`, except the origin. Ordered by
/// `gx`, then `gy`.
pub fn translate_adversarial_grid(max_disp: f64, step: f64) -> Result<Vec<Displacement>> {
    if step.is_nan() || step <= 0.0 || !max_disp.is_finite() || max_disp < 0.0 {
        return Err(Error::InvalidArgument(alloc::format!(
            "grid needs step > 0 and max_disp >= 0 (got step {step}, max_disp {max_disp})"
        )));
    }
    let rings = grid_rings(max_disp, step);
    let mut out = Vec::with_capacity((2 * rings + 1).pow(2).saturating_sub(1));
    for ix in -(rings as i64)..=rings as i64 {
        for iy in -(rings as i64)..=rings as i64 {
            if ix != 0 || iy != 0 {
                out.push(Displacement::new(ix as f64 * step, iy as f64 * step));
            }
        }
    }
    Ok(out)
}

/// Number of whole steps that fit in `max_disp`, tolerant to rounding.
pub(crate) fn grid_rings(max_disp: f64, step: f64) -> usize {
    libm::floor(max_disp / step + 1e-9) as usize
}

/// Ideal projection onto the band of `band`, same output size.
pub fn lowpass(x: &Tensor, band: BandSpec) -> Result<Tensor> {
    let s = x.shape();
    let (h, w) = (s.height, s.width);
    if band.target_height == 0
        || band.target_width == 0
        || band.target_height > h
        || band.target_width > w
    {
        return Err(Error::InvalidArgument(alloc::format!(
            "band {}x{} must be between 1x1 and the tensor size {h}x{w}",
            band.target_height,
            band.target_width
        )));
    }
    let keep_y: Vec<bool> = (0..h).map(|k| in_band(k, h, band.target_height)).collect();
    let keep_x: Vec<bool> = (0..w).map(|k| in_band(k, w, band.target_width)).collect();
    Ok(map_planes_spectral(x, h, w, |src, dst| {
        for ky in (0..h).filter(|&k| keep_y[k]) {
            for kx in (0..w).filter(|&k| keep_x[k]) {
                dst[ky * w + kx] = src[ky * w + kx];
            }
        }
    }))
}

/// One axis of a spectral resampling map: `(source bin, target bin, weight)`.
fn axis_map(n_src: usize, n_dst: usize) -> Vec<(usize, usize, f64)> {
    let mut map = Vec::with_capacity(n_src + 1);
    for k in 0..n_src {
        let f = signed_frequency(k, n_src);
        if n_dst < n_src {
            if in_band(k, n_src, n_dst) {
                map.push((k, f.rem_euclid(n_dst as isize) as usize, 1.0));
            }
        } else if n_dst > n_src && is_nyquist(k, n_src) {
            map.push((k, n_src / 2, 0.5));
            map.push((k, n_dst - n_src / 2, 0.5));
        } else {
            map.push((k, f.rem_euclid(n_dst as isize) as usize, 1.0));
        }
    }
    map
}

/// Band-limited resampling of every plane to `(out_h, out_w)`, preserving
/// sample values of the periodic interpolant.
pub(crate) fn resample(x: &Tensor, out_h: usize, out_w: usize) -> Tensor {
    let s = x.shape();
    let (h, w) = (s.height, s.width);
    let my = axis_map(h, out_h);
    let mx = axis_map(w, out_w);
    let gain = (out_h * out_w) as f64 / (h * w) as f64;
    map_planes_spectral(x, out_h, out_w, |src, dst| {
        for &(sy, dy, wy) in &my {
            for &(sx, dx, wx) in &mx {
                dst[dy * out_w + dx] += src[sy * w + sx] * (gain * wy * wx);
            }
        }
    })
}

/// Ideal low-pass to the band of the coarse grid followed by decimation.
pub fn downsample(x: &Tensor, factor: usize) -> Result<Tensor> {
    let s = x.shape();
    if factor == 0 {
        return Err(Error::InvalidArgument("downsampling factor must be >= 1".into()));
    }
    for size in [s.height, s.width] {
        if size % factor != 0 {
            return Err(Error::IndivisibleSize { size, factor });
        }
    }
    Ok(resample(x, s.height / factor, s.width / factor))
}

/// Exact sinc interpolation onto a grid `factor` times finer.
pub fn upsample(x: &Tensor, factor: usize) -> Result<Tensor> {
    if factor == 0 {
        return Err(Error::InvalidArgument("upsampling factor must be >= 1".into()));
    }
    let s = x.shape();
    Ok(resample(x, s.height * factor, s.width * factor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rng;

    /// Random tensor with its own Nyquist bins removed.
    fn nyquist_free(rng: &mut Rng, shape: (usize, usize, usize, usize)) -> Tensor {
        let x = rng.randn(shape);
        lowpass(&x, BandSpec::new(shape.2, shape.3)).unwrap()
    }

    #[test]
    fn zero_shift_is_identity() {
        for (h, w) in [(8, 8), (7, 5), (16, 12)] {
            let x = Rng::new(1).randn((1, 2, h, w));
            let y = translate(&x, Displacement::ZERO);
            assert!(y.max_abs_diff(&x).unwrap() <= 1e-13);
        }
    }

    #[test]
    fn integer_shift_is_roll() {
        let x = Rng::new(2).randn((1, 1, 8, 8));
        let y = translate(&x, Displacement::new(3.0, 0.0));
        assert!(y.max_abs_diff(&x.roll(0, 3)).unwrap() <= 1e-12);
        let y = translate(&x, Displacement::new(-2.0, 5.0));
        assert!(y.max_abs_diff(&x.roll(5, -2)).unwrap() <= 1e-12);
    }

    #[test]
    fn inverse_shift_recovers_input() {
        let x = nyquist_free(&mut Rng::new(3), (1, 1, 16, 16));
        let g = Displacement::new(0.3, -1.7);
        let back = translate(&translate(&x, g), -g);
        assert!(back.max_abs_diff(&x).unwrap() <= 1e-11);
    }

    #[test]
    fn nyquist_content_is_attenuated_by_half_shift() {
        // The split convention maps cos(pi n) to cos(pi g) cos(pi n).
        let x = Tensor::from_fn((1, 1, 1, 8), |_, _, _, j| if j % 2 == 0 { 1.0 } else { -1.0 });
        let y = translate(&x, Displacement::horizontal(0.5));
        assert!(y.max_abs() < 1e-12);
    }

    #[test]
    fn adversarial_grid_counts() {
        assert_eq!(translate_adversarial_grid(0.25, 0.25).unwrap().len(), 8);
        assert_eq!(translate_adversarial_grid(0.5, 0.25).unwrap().len(), 24);
        assert!(translate_adversarial_grid(0.0, 0.1).unwrap().is_empty());
        assert!(translate_adversarial_grid(1.0, 0.0).is_err());
        let grid = translate_adversarial_grid(0.25, 0.25).unwrap();
        assert!(grid.iter().all(|g| g.max_abs() <= 0.25 && *g != Displacement::ZERO));
    }

    #[test]
    fn lowpass_examples() {
        let c = Tensor::full((1, 1, 8, 8), 0.7);
        let y = lowpass(&c, BandSpec::new(1, 1)).unwrap();
        assert!(y.max_abs_diff(&c).unwrap() < 1e-14);

        let cosine =
            Tensor::from_fn((1, 1, 8, 8), |_, _, _, j| libm::cos(2.0 * PI * 3.0 * j as f64 / 8.0));
        assert!(lowpass(&cosine, BandSpec::new(8, 4)).unwrap().max_abs() < 1e-14);

        let x = Rng::new(4).randn((1, 1, 12, 12));
        let once = lowpass(&x, BandSpec::new(6, 8)).unwrap();
        let twice = lowpass(&once, BandSpec::new(6, 8)).unwrap();
        assert!(twice.max_abs_diff(&once).unwrap() < 1e-12);
        assert!(lowpass(&x, BandSpec::new(13, 4)).is_err());
    }

    #[test]
    fn downsample_examples() {
        let c = Tensor::full((1, 1, 8, 8), -2.5);
        let d = downsample(&c, 2).unwrap();
        assert_eq!(d.shape().height, 4);
        assert!(d.max_abs_diff(&Tensor::full((1, 1, 4, 4), -2.5)).unwrap() < 1e-14);

        let x = Tensor::from_fn((1, 1, 8, 8), |_, _, _, j| libm::cos(2.0 * PI * j as f64 / 8.0));
        let expected =
            Tensor::from_fn((1, 1, 4, 4), |_, _, _, j| libm::cos(2.0 * PI * j as f64 / 4.0));
        assert!(downsample(&x, 2).unwrap().max_abs_diff(&expected).unwrap() <= 1e-12);

        let nyq = Tensor::from_fn((1, 1, 8, 8), |_, _, _, j| libm::cos(2.0 * PI * 2.0 * j as f64 / 8.0));
        assert!(downsample(&nyq, 2).unwrap().max_abs() < 1e-14);

        assert_eq!(
            downsample(&Tensor::zeros((1, 1, 6, 6)), 4),
            Err(Error::IndivisibleSize { size: 6, factor: 4 })
        );
    }

    #[test]
    fn upsample_examples() {
        let c = Tensor::full((1, 3, 5, 5), 4.0);
        let u = upsample(&c, 2).unwrap();
        assert!(u.max_abs_diff(&Tensor::full((1, 3, 10, 10), 4.0)).unwrap() < 1e-13);

        // Even-indexed samples reproduce the input, Nyquist content included.
        let x = Rng::new(5).randn((1, 1, 8, 8));
        let u = upsample(&x, 2).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                assert!((u.get(0, 0, 2 * i, 2 * j) - x.get(0, 0, i, j)).abs() <= 1e-12);
            }
        }

        let x = nyquist_free(&mut Rng::new(6), (1, 2, 6, 6));
        let round = downsample(&upsample(&x, 3).unwrap(), 3).unwrap();
        assert!(round.max_abs_diff(&x).unwrap() <= 1e-12);
    }

    #[test]
    fn grid_change_commutes_with_translation() {
        let mut rng = Rng::new(8);
        let x = rng.randn((1, 2, 16, 16));
        let g = Displacement::new(0.37, -1.21);
        let a = downsample(&translate(&x, g), 2).unwrap();
        let b = translate(&downsample(&x, 2).unwrap(), g / 2.0);
        assert!(a.max_abs_diff(&b).unwrap() <= 1e-10);

        let x = nyquist_free(&mut rng, (1, 2, 8, 8));
        let a = upsample(&translate(&x, g), 2).unwrap();
        let b = translate(&upsample(&x, 2).unwrap(), g * 2.0);
        assert!(a.max_abs_diff(&b).unwrap() <= 1e-10);
    }
}
