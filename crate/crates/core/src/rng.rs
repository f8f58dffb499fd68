//! Seeded random streams (ChaCha8).

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::{Shape, Tensor};

/// Reproducible random stream: the same seed yields a bit-identical stream.
#[derive(Debug, Clone)]
pub struct Rng {
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Uniform sample in `[low, high)`.
    pub fn uniform(&mut self, low: f64, high: f64) -> f64 {
        match Uniform::new(low, high) {
            Ok(dist) => dist.sample(&mut self.inner),
            Err(_) => low,
        }
    }

    /// Tensor of i.i.d. standard normal entries.
    pub fn randn(&mut self, shape: impl Into<Shape>) -> Tensor {
        let shape = shape.into();
        let data = (0..shape.len()).map(|_| self.normal()).collect();
        Tensor::from_vec(shape, data).expect("length matches shape")
    }

    /// Derives an independent stream, e.g. one per worker or per image.
    pub fn fork(&mut self, stream: u64) -> Rng {
        let mut inner = self.inner.clone();
        inner.set_stream(stream);
        Rng { inner }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_tensor() {
        assert_eq!(Rng::new(0).randn((1, 1, 2, 2)), Rng::new(0).randn((1, 1, 2, 2)));
        assert_ne!(Rng::new(0).randn((1, 1, 2, 2)), Rng::new(1).randn((1, 1, 2, 2)));
    }

    #[test]
    fn moments_of_a_million_samples() {
        let t = Rng::new(0).randn((1, 1, 1000, 1000));
        let n = t.data().len() as f64;
        let mean = t.sum() / n;
        let var = t.data().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "variance {var}");
    }

    #[test]
    fn forked_streams_differ() {
        let mut base = Rng::new(5);
        let a = base.fork(1).randn((1, 1, 1, 4));
        let b = base.fork(2).randn((1, 1, 1, 4));
        assert_ne!(a, b);
    }
}
