//! Forward functions for every layer of the alias-free UNet and of the
//! baselines it is compared with. All are pure functions of their input and
//! parameters.

mod activation;
mod conv;
mod norm;
mod pool;
mod upsample;

pub use activation::{activation, ActivationSpec, BaseActivation};
pub use conv::{conv2d, ConvParams, Padding};
pub use norm::{normalize, NormMode, NormParams, DEFAULT_EPSILON};
pub use pool::{pool, PoolKind, PoolSpec};
pub use upsample::{upsample_layer, upsample_layer_ordered, zero_insert, FilterOrder};

use crate::{Result, Tensor};

/// Channel-wise concatenation, `a`'s channels first.
pub fn concat(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    a.concat_channels(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Rng, Shape};

    #[test]
    fn concat_block_structure() {
        let mut rng = Rng::new(0);
        let a = rng.randn((1, 2, 4, 4));
        let b = rng.randn((1, 3, 4, 4));
        let ab = concat(&a, &b).unwrap();
        assert_eq!(ab.shape(), Shape::new(1, 5, 4, 4));
        assert_eq!(ab.slice_channels(0, 2).unwrap(), a);

        // A convolution reading only the first block ignores the zeros.
        let x = rng.randn((1, 2, 6, 6));
        let w = rng.randn((3, 2, 3, 3));
        let p = ConvParams::new(w.clone(), alloc::vec![0.0; 3], Padding::Circular).unwrap();
        let wide = Tensor::from_fn((3, 4, 3, 3), |o, i, ky, kx| if i < 2 { w.get(o, i, ky, kx) } else { 0.0 });
        let pw = ConvParams::new(wide, alloc::vec![0.0; 3], Padding::Circular).unwrap();
        let xz = concat(&x, &Tensor::zeros((1, 2, 6, 6))).unwrap();
        let err = conv2d(&xz, &pw).unwrap().max_abs_diff(&conv2d(&x, &p).unwrap()).unwrap();
        assert!(err < 1e-14);
    }
}
