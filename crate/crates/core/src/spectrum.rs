//! Two-dimensional DFT of tensor planes.
//!
//! Convention: the forward transform is unnormalized and the inverse carries
//! `1 / (H·W)`. Bins are stored in standard DFT order with the zero
//! frequency at index `(0, 0)`.

use alloc::vec;
use core::cell::RefCell;
use alloc::vec::Vec;

use crate::fft::{Complex64, FftPlan};
use crate::{Error, Result, Shape, Tensor};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Absolute tolerance (relative to the largest real sample, floored at 1)
/// on the imaginary residue accepted by [`ifft2`].
pub const HERMITIAN_TOLERANCE: f64 = 1e-9;

/// Complex coefficients of every (batch, channel) plane of a tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    shape: Shape,
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn from_vec(shape: Shape, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::ShapeMismatch(alloc::format!(
                "spectrum of shape {shape} needs {} bins, got {}",
                shape.len(),
                data.len()
            )));
        }
        Ok(Spectrum { shape, data })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn get(&self, b: usize, c: usize, ky: usize, kx: usize) -> Complex64 {
        let s = self.shape;
        self.data[((b * s.channels + c) * s.height + ky) * s.width + kx]
    }

    /// Largest deviation from `S[k] = conj(S[-k])`, relative to the largest
    /// coefficient magnitude.
    pub fn hermitian_defect(&self) -> f64 {
        let s = self.shape;
        let (h, w) = (s.height, s.width);
        let mut worst = 0.0_f64;
        let mut scale = 0.0_f64;
        for plane in self.data.chunks_exact(s.plane_len().max(1)) {
            for ky in 0..h {
                for kx in 0..w {
                    let a = plane[ky * w + kx];
                    let b = plane[((h - ky) % h) * w + (w - kx) % w];
                    worst = worst.max((a - b.conj()).norm());
                    scale = scale.max(a.norm());
                }
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }
}

/// Exact 2-D DFT of each plane.
pub fn fft2(x: &Tensor) -> Spectrum {
    let s = x.shape();
    let plan = Fft2d::new(s.height, s.width);
    let mut data = vec![ZERO; s.len()];
    let n = s.plane_len();
    if n > 0 {
        let mut planes = x.planes();
        let mut outs = data.chunks_exact_mut(n);
        while let Some(a) = planes.next() {
            let oa = outs.next().unwrap();
            match planes.next() {
                Some(b) => {
                    let ob = outs.next().unwrap();
                    plan.forward_real_pair(a, b, oa, ob);
                }
                None => plan.forward_real(a, oa),
            }
        }
    }
    Spectrum { shape: s, data }
}

/// Inverse 2-D DFT; fails if the result is not real within
/// [`HERMITIAN_TOLERANCE`].
pub fn ifft2(spectrum: &Spectrum) -> Result<Tensor> {
    let s = spectrum.shape;
    let plan = Fft2d::new(s.height, s.width);
    let mut buf = spectrum.data.clone();
    let mut residue = 0.0_f64;
    let mut magnitude = 1.0_f64;
    let mut out = Tensor::zeros(s);
    let n = s.plane_len();
    if n > 0 {
        for (plane, dst) in buf.chunks_exact_mut(n).zip(out.planes_mut()) {
            plan.inverse(plane);
            for (d, v) in dst.iter_mut().zip(plane.iter()) {
                *d = v.re;
                residue = residue.max(v.im.abs());
                magnitude = magnitude.max(v.re.abs());
            }
        }
    }
    if residue > HERMITIAN_TOLERANCE * magnitude {
        return Err(Error::NonHermitianSpectrum { residue });
    }
    Ok(out)
}

/// Row and column plans for one plane size, with reusable workspace.
#[derive(Debug, Clone)]
pub(crate) struct Fft2d {
    height: usize,
    width: usize,
    rows: FftPlan,
    cols: FftPlan,
    /// FFT ping-pong buffer and transposed plane.
    work: RefCell<(Vec<Complex64>, Vec<Complex64>)>,
}

impl Fft2d {
    pub(crate) fn new(height: usize, width: usize) -> Self {
        Fft2d {
            height,
            width,
            rows: FftPlan::new(width),
            cols: FftPlan::new(height),
            work: RefCell::new((Vec::new(), vec![ZERO; height * width])),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.height * self.width
    }

    /// Column pass with the rows as lanes, then the row pass on the
    /// transposed plane.
    fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        let (h, w) = (self.height, self.width);
        let mut work = self.work.borrow_mut();
        let (scratch, t) = &mut *work;
        self.cols.run(buf, w, scratch, inverse);
        if w > 1 {
            for i in 0..h {
                for j in 0..w {
                    t[j * h + i] = buf[i * w + j];
                }
            }
            self.rows.run(t, h, scratch, inverse);
            for j in 0..w {
                for i in 0..h {
                    buf[i * w + j] = t[j * h + i];
                }
            }
        }
    }

    pub(crate) fn forward(&self, buf: &mut [Complex64]) {
        self.transform(buf, false);
    }

    /// Normalized inverse (carries `1 / (H·W)`).
    pub(crate) fn inverse(&self, buf: &mut [Complex64]) {
        self.transform(buf, true);
        let scale = 1.0 / self.len() as f64;
        buf.iter_mut().for_each(|v| *v *= scale);
    }

    pub(crate) fn forward_real(&self, a: &[f64], out: &mut [Complex64]) {
        for (o, &v) in out.iter_mut().zip(a) {
            *o = Complex64::new(v, 0.0);
        }
        self.forward(out);
    }

    /// Transforms two real planes with one complex transform.
    pub(crate) fn forward_real_pair(
        &self,
        a: &[f64],
        b: &[f64],
        out_a: &mut [Complex64],
        out_b: &mut [Complex64],
    ) {
        let (h, w) = (self.height, self.width);
        for ((o, &x), &y) in out_a.iter_mut().zip(a).zip(b) {
            *o = Complex64::new(x, y);
        }
        self.forward(out_a);
        // A[k] = (Z[k] + conj Z[-k]) / 2, B[k] = (Z[k] - conj Z[-k]) / 2i.
        for ky in 0..h {
            let ny = (h - ky) % h;
            for kx in 0..w {
                let nx = (w - kx) % w;
                let z = out_a[ky * w + kx];
                let zc = out_a[ny * w + nx].conj();
                let d = z - zc;
                out_b[ky * w + kx] = Complex64::new(0.5 * d.im, -0.5 * d.re);
            }
        }
        for ky in 0..h {
            let ny = (h - ky) % h;
            for kx in 0..w {
                let nx = (w - kx) % w;
                let (i, j) = (ky * w + kx, ny * w + nx);
                if i < j {
                    let (zi, zj) = (out_a[i], out_a[j]);
                    out_a[i] = (zi + zj.conj()) * 0.5;
                    out_a[j] = (zj + zi.conj()) * 0.5;
                } else if i == j {
                    out_a[i] = Complex64::new(out_a[i].re, 0.0);
                }
            }
        }
    }

    /// Inverse of a Hermitian spectrum to a real plane; the imaginary
    /// residue is dropped. `spec` is used as workspace.
    pub(crate) fn inverse_real(&self, spec: &mut [Complex64], out: &mut [f64]) {
        self.inverse(spec);
        for (o, v) in out.iter_mut().zip(spec.iter()) {
            *o = v.re;
        }
    }

    /// Inverse of two Hermitian spectra with one complex transform.
    pub(crate) fn inverse_real_pair(
        &self,
        spec_a: &mut [Complex64],
        spec_b: &[Complex64],
        out_a: &mut [f64],
        out_b: &mut [f64],
    ) {
        for (a, &b) in spec_a.iter_mut().zip(spec_b) {
            // a + i b
            *a = Complex64::new(a.re - b.im, a.im + b.re);
        }
        self.inverse(spec_a);
        for ((v, oa), ob) in spec_a.iter().zip(out_a.iter_mut()).zip(out_b.iter_mut()) {
            *oa = v.re;
            *ob = v.im;
        }
    }
}

/// Applies a per-plane spectral operator to every plane of `x`.
///
/// `op(src, dst)` receives the spectrum of an input plane and must fill the
/// spectrum of the output plane, which has size `(out_h, out_w)` and must be
/// Hermitian.
pub(crate) fn map_planes_spectral(
    x: &Tensor,
    out_h: usize,
    out_w: usize,
    mut op: impl FnMut(&[Complex64], &mut [Complex64]),
) -> Tensor {
    let s = x.shape();
    let out_shape = s.with_spatial(out_h, out_w);
    let mut out = Tensor::zeros(out_shape);
    let (n_in, n_out) = (s.plane_len(), out_shape.plane_len());
    if n_in == 0 || n_out == 0 {
        return out;
    }
    let fin = Fft2d::new(s.height, s.width);
    let fout = if (out_h, out_w) == (s.height, s.width) { fin.clone() } else { Fft2d::new(out_h, out_w) };
    let (mut sa, mut sb) = (vec![ZERO; n_in], vec![ZERO; n_in]);
    let (mut da, mut db) = (vec![ZERO; n_out], vec![ZERO; n_out]);
    let mut inputs = x.planes();
    let mut outputs = out.planes_mut();
    while let Some(a) = inputs.next() {
        let oa = outputs.next().unwrap();
        match inputs.next() {
            Some(b) => {
                let ob = outputs.next().unwrap();
                fin.forward_real_pair(a, b, &mut sa, &mut sb);
                da.fill(ZERO);
                db.fill(ZERO);
                op(&sa, &mut da);
                op(&sb, &mut db);
                fout.inverse_real_pair(&mut da, &db, oa, ob);
            }
            None => {
                fin.forward_real(a, &mut sa);
                da.fill(ZERO);
                op(&sa, &mut da);
                fout.inverse_real(&mut da, oa);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fft::cis;
    use crate::Rng;
    use core::f64::consts::PI;

    fn naive_dft2(plane: &[f64], h: usize, w: usize) -> Vec<Complex64> {
        let mut out = vec![ZERO; h * w];
        for ky in 0..h {
            for kx in 0..w {
                let mut acc = ZERO;
                for i in 0..h {
                    for j in 0..w {
                        let phase = (ky * i) as f64 / h as f64 + (kx * j) as f64 / w as f64;
                        acc += plane[i * w + j] * cis(-2.0 * PI * phase);
                    }
                }
                out[ky * w + kx] = acc;
            }
        }
        out
    }

    #[test]
    fn constant_plane_is_dc_only() {
        let c = 1.75;
        let s = fft2(&Tensor::full((1, 1, 4, 4), c));
        assert!((s.get(0, 0, 0, 0) - Complex64::new(16.0 * c, 0.0)).norm() < 1e-12);
        for (k, v) in s.data().iter().enumerate().skip(1) {
            assert!(v.norm() < 1e-12, "bin {k} = {v}");
        }
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        let mut x = Tensor::zeros((1, 1, 8, 8));
        x.set(0, 0, 0, 0, 1.0);
        let s = fft2(&x);
        for v in s.data() {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        }
        let back = ifft2(&Spectrum::from_vec(s.shape(), vec![Complex64::new(1.0, 0.0); 64]).unwrap())
            .unwrap();
        assert!(back.max_abs_diff(&x).unwrap() < 1e-15);
    }

    #[test]
    fn agrees_with_naive_dft_on_paired_and_odd_planes() {
        let mut rng = Rng::new(7);
        // three planes: one packed pair plus one unpaired plane
        for (h, w) in [(5, 7), (16, 16), (1, 9), (6, 1)] {
            let x = rng.randn((1, 3, h, w));
            let s = fft2(&x);
            for c in 0..3 {
                let expected = naive_dft2(x.plane(0, c), h, w);
                for ky in 0..h {
                    for kx in 0..w {
                        let d = (s.get(0, c, ky, kx) - expected[ky * w + kx]).norm();
                        assert!(d < 1e-10, "{h}x{w} plane {c} bin ({ky},{kx}): {d}");
                    }
                }
            }
        }
    }

    #[test]
    fn round_trip_5x7() {
        let x = Rng::new(3).randn((2, 1, 5, 7));
        let back = ifft2(&fft2(&x)).unwrap();
        assert!(back.max_abs_diff(&x).unwrap() < 1e-12);
    }

    #[test]
    fn asymmetric_spectrum_is_rejected() {
        let mut data = vec![ZERO; 16];
        data[1] = Complex64::new(1.0, 0.0);
        let s = Spectrum::from_vec(Shape::new(1, 1, 4, 4), data).unwrap();
        assert!(matches!(ifft2(&s), Err(Error::NonHermitianSpectrum { .. })));
    }

    #[test]
    fn real_spectra_are_hermitian() {
        let x = Rng::new(11).randn((1, 2, 6, 9));
        assert!(fft2(&x).hermitian_defect() < 1e-12);
    }
}
