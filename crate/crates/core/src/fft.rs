//! One-dimensional complex FFT for arbitrary lengths, batched over lanes.
//!
//! Lengths that factor into small primes use a mixed-radix Stockham
//! (self-sorting, decimation-in-frequency) transform. Lengths with a prime
//! factor above [`MAX_DIRECT_RADIX`] go through Bluestein's chirp-z
//! algorithm on a power-of-two grid. The forward transform is unnormalized;
//! the inverse is returned unscaled and callers divide by the length.
//!
//! A lane-batched call transforms `lanes` interleaved sequences at once:
//! element `j` of every sequence is the contiguous block
//! `buf[j * lanes..(j + 1) * lanes]`. Butterflies then sweep contiguous
//! memory, which is how 2-D column passes are done.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

pub use num_complex::Complex64;

/// Largest prime factor handled by a direct butterfly.
const MAX_DIRECT_RADIX: usize = 31;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `exp(i * angle)`.
#[inline]
pub fn cis(angle: f64) -> Complex64 {
    Complex64::new(libm::cos(angle), libm::sin(angle))
}

/// A reusable transform of one length.
#[derive(Debug, Clone)]
pub struct FftPlan {
    len: usize,
    kind: PlanKind,
}

#[derive(Debug, Clone)]
enum PlanKind {
    Trivial,
    Stockham(Stockham),
    Bluestein(Bluestein),
}

#[derive(Debug, Clone)]
struct Stockham {
    len: usize,
    factors: Vec<usize>,
    /// `exp(-2πi j / len)` for `j` in `0..len`.
    forward: Vec<Complex64>,
    /// Conjugates of `forward`.
    inverse: Vec<Complex64>,
}

#[derive(Debug, Clone)]
struct Bluestein {
    inner: Stockham,
    chirp: Vec<Complex64>,
    kernel_spectrum: Vec<Complex64>,
}

impl FftPlan {
    pub fn new(len: usize) -> Self {
        let kind = if len <= 1 {
            PlanKind::Trivial
        } else {
            let factors = factorize(len);
            if factors.iter().all(|&p| p <= MAX_DIRECT_RADIX) {
                PlanKind::Stockham(Stockham::new(len, factors))
            } else {
                PlanKind::Bluestein(Bluestein::new(len))
            }
        };
        FftPlan { len, kind }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place forward transform, `X[k] = Σ x[n] exp(-2πi nk/N)`.
    pub fn forward(&self, buf: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        self.run(buf, 1, scratch, false);
    }

    /// In-place unscaled inverse transform, `x[n] = Σ X[k] exp(2πi nk/N)`.
    pub fn inverse_unscaled(&self, buf: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        self.run(buf, 1, scratch, true);
    }

    /// Transforms `lanes` interleaved sequences in place.
    pub fn run(&self, buf: &mut [Complex64], lanes: usize, scratch: &mut Vec<Complex64>, inverse: bool) {
        assert_eq!(buf.len(), self.len * lanes, "buffer length does not match plan");
        match &self.kind {
            PlanKind::Trivial => {}
            PlanKind::Stockham(st) => st.run(buf, lanes, scratch, inverse),
            PlanKind::Bluestein(bs) => {
                let mut seq = vec![ZERO; self.len];
                for lane in 0..lanes {
                    for (j, v) in seq.iter_mut().enumerate() {
                        *v = buf[j * lanes + lane];
                    }
                    bs.run(&mut seq, scratch, inverse);
                    for (j, v) in seq.iter().enumerate() {
                        buf[j * lanes + lane] = *v;
                    }
                }
            }
        }
    }
}

/// Prime factorization with pairs of 2 merged into radix-4 stages.
fn factorize(mut n: usize) -> Vec<usize> {
    let mut factors = Vec::new();
    while n.is_multiple_of(4) {
        factors.push(4);
        n /= 4;
    }
    let mut p = 2;
    while p * p <= n {
        while n.is_multiple_of(p) {
            factors.push(p);
            n /= p;
        }
        p += 1;
    }
    if n > 1 {
        factors.push(n);
    }
    factors
}

/// Multiplication by `-i` (forward) or `+i` (inverse).
#[inline(always)]
fn rotate(v: Complex64, inverse: bool) -> Complex64 {
    if inverse {
        Complex64::new(-v.im, v.re)
    } else {
        Complex64::new(v.im, -v.re)
    }
}

impl Stockham {
    fn new(len: usize, factors: Vec<usize>) -> Self {
        let forward: Vec<Complex64> = (0..len).map(|j| cis(-2.0 * PI * j as f64 / len as f64)).collect();
        let inverse = forward.iter().map(|w| w.conj()).collect();
        Stockham { len, factors, forward, inverse }
    }

    fn run(&self, buf: &mut [Complex64], lanes: usize, scratch: &mut Vec<Complex64>, inverse: bool) {
        scratch.clear();
        scratch.resize(buf.len(), ZERO);
        let mut stride = 1;
        let mut in_buf = true;
        for &p in &self.factors {
            if in_buf {
                self.stage(buf, scratch, stride, p, lanes, inverse);
            } else {
                self.stage(scratch, buf, stride, p, lanes, inverse);
            }
            in_buf = !in_buf;
            stride *= p;
        }
        if !in_buf {
            buf.copy_from_slice(scratch);
        }
    }

    /// One radix-`p` pass over sub-transforms of length `len / stride`.
    fn stage(
        &self,
        x: &[Complex64],
        y: &mut [Complex64],
        stride: usize,
        p: usize,
        lanes: usize,
        inverse: bool,
    ) {
        let table = if inverse { &self.inverse } else { &self.forward };
        let m = self.len / stride / p;
        let blk = stride * lanes;
        let root = self.len / p;
        for k in 0..m {
            let src = |r: usize| &x[(k + r * m) * blk..(k + r * m + 1) * blk];
            let dst = (p * k) * blk;
            match p {
                2 => {
                    let w1 = table[k * stride];
                    let (a, b) = (src(0), src(1));
                    let (y0, y1) = y[dst..dst + 2 * blk].split_at_mut(blk);
                    for q in 0..blk {
                        y0[q] = a[q] + b[q];
                        y1[q] = (a[q] - b[q]) * w1;
                    }
                }
                4 => {
                    let (w1, w2, w3) = (table[k * stride], table[2 * k * stride], table[3 * k * stride]);
                    let (a, b, c, d) = (src(0), src(1), src(2), src(3));
                    let (y0, rest) = y[dst..dst + 4 * blk].split_at_mut(blk);
                    let (y1, rest) = rest.split_at_mut(blk);
                    let (y2, y3) = rest.split_at_mut(blk);
                    for q in 0..blk {
                        let s02 = a[q] + c[q];
                        let d02 = a[q] - c[q];
                        let s13 = b[q] + d[q];
                        let r13 = rotate(b[q] - d[q], inverse);
                        y0[q] = s02 + s13;
                        y1[q] = (d02 + r13) * w1;
                        y2[q] = (s02 - s13) * w2;
                        y3[q] = (d02 - r13) * w3;
                    }
                }
                _ => {
                    for t in 0..p {
                        let wt = table[k * t * stride];
                        let out = &mut y[dst + t * blk..dst + (t + 1) * blk];
                        for (q, o) in out.iter_mut().enumerate() {
                            let mut acc = ZERO;
                            for r in 0..p {
                                acc += x[(k + r * m) * blk + q] * table[((r * t) % p) * root];
                            }
                            *o = acc * wt;
                        }
                    }
                }
            }
        }
    }
}

impl Bluestein {
    fn new(len: usize) -> Self {
        let inner_len = (2 * len - 1).next_power_of_two();
        let inner = Stockham::new(inner_len, factorize(inner_len));
        // exp(-πi k² / N), with k² reduced mod 2N to keep the angle small.
        let chirp: Vec<Complex64> = (0..len)
            .map(|k| {
                let k2 = (k as u128 * k as u128 % (2 * len as u128)) as f64;
                cis(-PI * k2 / len as f64)
            })
            .collect();
        let mut kernel = vec![ZERO; inner_len];
        kernel[0] = chirp[0].conj();
        for k in 1..len {
            kernel[k] = chirp[k].conj();
            kernel[inner_len - k] = chirp[k].conj();
        }
        inner.run(&mut kernel, 1, &mut Vec::new(), false);
        Bluestein { inner, chirp, kernel_spectrum: kernel }
    }

    fn run(&self, buf: &mut [Complex64], scratch: &mut Vec<Complex64>, inverse: bool) {
        // The inverse is the conjugate of the forward transform of the conjugate.
        let load = |v: Complex64| if inverse { v.conj() } else { v };
        let mut work = vec![ZERO; self.inner.len];
        for (k, (w, &x)) in work.iter_mut().zip(buf.iter()).enumerate() {
            *w = load(x) * self.chirp[k];
        }
        self.inner.run(&mut work, 1, scratch, false);
        for (w, &h) in work.iter_mut().zip(&self.kernel_spectrum) {
            *w *= h;
        }
        self.inner.run(&mut work, 1, scratch, true);
        let scale = 1.0 / self.inner.len as f64;
        for (k, x) in buf.iter_mut().enumerate() {
            *x = load(work[k] * scale * self.chirp[k]);
        }
    }
}
