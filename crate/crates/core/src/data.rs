//! Seeded test inputs.

use alloc::vec::Vec;

use crate::spectral::{lowpass, BandSpec, Displacement};
use crate::{Result, Rng, Tensor};

/// `count` random images in `[0, 1]`: white noise restricted to the lower
/// half of the band, then affinely rescaled per image. Band-limited inputs
/// make sub-pixel translation exact.
pub fn synthetic_images(rng: &mut Rng, count: usize, channels: usize, size: usize) -> Result<Tensor> {
    let noise = rng.randn((count, channels, size, size));
    let band = (size / 2).max(1);
    let mut x = lowpass(&noise, BandSpec::new(band, band))?;
    let per_image = channels * size * size;
    for img in x.data_mut().chunks_exact_mut(per_image.max(1)) {
        let (lo, hi) = img
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let span = hi - lo;
        if span > 0.0 {
            img.iter_mut().for_each(|v| *v = (*v - lo) / span);
        } else {
            img.fill(0.5);
        }
    }
    Ok(x)
}

/// `n` displacements with components uniform in `[-max_abs, max_abs]`.
pub fn random_displacements(rng: &mut Rng, n: usize, max_abs: f64) -> Vec<Displacement> {
    (0..n)
        .map(|_| {
            let gx = rng.uniform(-max_abs, max_abs);
            let gy = rng.uniform(-max_abs, max_abs);
            Displacement::new(gx, gy)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::translate;

    #[test]
    fn synthetic_images_are_normalized_and_band_limited() {
        let x = synthetic_images(&mut Rng::new(0), 3, 3, 32).unwrap();
        assert_eq!(x.shape().batch, 3);
        for b in 0..3 {
            let s = x.sample(b);
            let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(lo.abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
        }
        let g = Displacement::new(0.3, 0.7);
        let back = translate(&translate(&x, g), -g);
        assert!(back.max_abs_diff(&x).unwrap() < 1e-11);
        assert_eq!(x, synthetic_images(&mut Rng::new(0), 3, 3, 32).unwrap());
    }

    #[test]
    fn displacements_stay_in_range() {
        let d = random_displacements(&mut Rng::new(1), 100, 8.0);
        assert_eq!(d.len(), 100);
        assert!(d.iter().all(|g| g.max_abs() <= 8.0));
    }
}
