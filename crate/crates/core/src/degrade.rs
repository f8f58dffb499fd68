//! Forward models `y = h * x + ε` and crop-translations.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::spectral::{signed_frequency, translate, Displacement};
use crate::spectrum::map_planes_spectral;
use crate::{Error, Result, Rng, Tensor};

/// How the blur treats image borders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Boundary {
    /// Periodic extension; the blur is a Fourier multiplier.
    #[default]
    Circular,
    /// Truncated spatial kernel with zeros outside the image.
    Valid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegradationSpec {
    /// Gaussian blur standard deviation in pixels; 0 disables blur.
    pub blur_sigma: f64,
    /// Noise standard deviation in `[0, 1]` image units.
    pub noise_sigma: f64,
    pub boundary: Boundary,
}

impl DegradationSpec {
    /// σ = 1 px blur, σ = 0.01 noise, periodic borders.
    pub fn circular_deblur() -> Self {
        DegradationSpec { blur_sigma: 1.0, noise_sigma: 0.01, boundary: Boundary::Circular }
    }

    /// σ = 1 px blur, σ = 0.01 noise, zero-padded borders.
    pub fn valid_deblur() -> Self {
        DegradationSpec { boundary: Boundary::Valid, ..Self::circular_deblur() }
    }

    /// Noise only, σ = 0.1.
    pub fn denoise() -> Self {
        DegradationSpec { blur_sigma: 0.0, noise_sigma: 0.1, boundary: Boundary::Circular }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.blur_sigma >= 0.0 && self.noise_sigma >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sigmas must be >= 0 (blur {}, noise {})",
                self.blur_sigma, self.noise_sigma
            )));
        }
        Ok(())
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma >= 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("sigma must be finite and >= 0, got {sigma}")))
    }
}

/// Gaussian blur with standard deviation `sigma` pixels.
pub fn gaussian_blur(x: &Tensor, sigma: f64, boundary: Boundary) -> Result<Tensor> {
    check_sigma(sigma)?;
    if sigma == 0.0 {
        return Ok(x.clone());
    }
    Ok(match boundary {
        Boundary::Circular => circular_blur(x, sigma),
        Boundary::Valid => valid_blur(x, sigma),
    })
}

fn transfer(n: usize, sigma: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let f = signed_frequency(k, n) as f64 / n as f64;
            libm::exp(-2.0 * PI * PI * sigma * sigma * f * f)
        })
        .collect()
}

fn circular_blur(x: &Tensor, sigma: f64) -> Tensor {
    let s = x.shape();
    let (h, w) = (s.height, s.width);
    let ty = transfer(h, sigma);
    let tx = transfer(w, sigma);
    map_planes_spectral(x, h, w, |src, dst| {
        for ky in 0..h {
            for kx in 0..w {
                dst[ky * w + kx] = src[ky * w + kx] * (ty[ky] * tx[kx]);
            }
        }
    })
}

/// Sampled Gaussian on `[-r, r]`, `r = ceil(4σ)`, normalized to unit sum.
pub fn gaussian_taps(sigma: f64) -> Vec<f64> {
    let r = libm::ceil(4.0 * sigma) as isize;
    let mut taps: Vec<f64> = (-r..=r)
        .map(|d| libm::exp(-((d * d) as f64) / (2.0 * sigma * sigma)))
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

fn valid_blur(x: &Tensor, sigma: f64) -> Tensor {
    let taps = gaussian_taps(sigma);
    let r = (taps.len() / 2) as isize;
    let s = x.shape();
    let (h, w) = (s.height as isize, s.width as isize);
    let mut out = Tensor::zeros(s);
    let mut rows = vec![0.0; s.plane_len()];
    for (src, dst) in x.planes().zip(out.planes_mut()) {
        for i in 0..h {
            for j in 0..w {
                let mut acc = 0.0;
                for (t, &k) in taps.iter().enumerate() {
                    let jj = j + t as isize - r;
                    if (0..w).contains(&jj) {
                        acc += k * src[(i * w + jj) as usize];
                    }
                }
                rows[(i * w + j) as usize] = acc;
            }
        }
        for i in 0..h {
            for j in 0..w {
                let mut acc = 0.0;
                for (t, &k) in taps.iter().enumerate() {
                    let ii = i + t as isize - r;
                    if (0..h).contains(&ii) {
                        acc += k * rows[(ii * w + j) as usize];
                    }
                }
                dst[(i * w + j) as usize] = acc;
            }
        }
    }
    out
}

/// `x + sigma · n` with `n` standard normal, drawn from `rng`.
pub fn add_noise(x: &Tensor, sigma: f64, rng: &mut Rng) -> Result<Tensor> {
    check_sigma(sigma)?;
    if sigma == 0.0 {
        return Ok(x.clone());
    }
    x.add(&rng.randn(x.shape()).scale(sigma))
}

/// Blur then add fresh noise.
pub fn degrade(x: &Tensor, spec: &DegradationSpec, rng: &mut Rng) -> Result<Tensor> {
    spec.validate()?;
    add_noise(&gaussian_blur(x, spec.blur_sigma, spec.boundary)?, spec.noise_sigma, rng)
}

/// Blur then add a given noise realization (already scaled).
pub fn degrade_with_noise(x: &Tensor, spec: &DegradationSpec, noise: &Tensor) -> Result<Tensor> {
    spec.validate()?;
    gaussian_blur(x, spec.blur_sigma, spec.boundary)?.add(noise)
}

/// The centered `crop × crop` window of `x`.
pub fn center_crop(x: &Tensor, crop: usize) -> Result<Tensor> {
    crop_translate(x, Displacement::ZERO, crop)
}

/// Slides a centered `crop × crop` window over `x_large` by `g`: the image
/// is translated circularly by the fractional part of `g`, and the window
/// is offset by the integer part, so new content enters at the edges.
pub fn crop_translate(x_large: &Tensor, g: Displacement, crop: usize) -> Result<Tensor> {
    if !g.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite displacement {g:?}")));
    }
    let s = x_large.shape();
    let margin = 2 * libm::ceil(g.max_abs()) as usize;
    let available = s.height.min(s.width);
    if crop == 0 || crop + margin > available {
        return Err(Error::MarginExceeded { needed: crop + margin, available });
    }
    let (nx, ny) = (libm::floor(g.gx), libm::floor(g.gy));
    let frac = Displacement::new(g.gx - nx, g.gy - ny);
    let shifted = if frac == Displacement::ZERO { x_large.clone() } else { translate(x_large, frac) };
    let y0 = ((s.height - crop) / 2) as isize - ny as isize;
    let x0 = ((s.width - crop) / 2) as isize - nx as isize;
    debug_assert!(y0 >= 0 && x0 >= 0);
    let (y0, x0) = (y0 as usize, x0 as usize);
    let out_shape = s.with_spatial(crop, crop);
    let mut out = Tensor::zeros(out_shape);
    for (src, dst) in shifted.planes().zip(out.planes_mut()) {
        for i in 0..crop {
            let row = (y0 + i) * s.width + x0;
            dst[i * crop..(i + 1) * crop].copy_from_slice(&src[row..row + crop]);
        }
    }
    Ok(out)
}
