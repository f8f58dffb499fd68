use std::hint::black_box;
use std::time::Instant;

use unet_af_core::Tensor;

use crate::error::Result;

/// Images per second of `f` on `x`, timed over `iters` calls after
/// `warmup` untimed calls, on the calling thread.
pub fn fps_bench<F>(f: F, x: &Tensor, warmup: usize, iters: usize) -> Result<f64>
where
    F: Fn(&Tensor) -> unet_af_core::Result<Tensor>,
{
    let iters = iters.max(1);
    for _ in 0..warmup {
        black_box(f(black_box(x))?);
    }
    let start = Instant::now();
    for _ in 0..iters {
        black_box(f(black_box(x))?);
    }
    let secs = start.elapsed().as_secs_f64().max(f64::MIN_POSITIVE);
    Ok((iters * x.shape().batch) as f64 / secs)
}
