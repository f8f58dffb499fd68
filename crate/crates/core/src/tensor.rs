//! Dense 4-D real tensors in (batch, channel, height, width) order.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::{Error, Result};

/// Arithmetic precision of layer outputs.
///
/// Computation always runs in `f64`; `Single` rounds every layer output to
/// the nearest `f32`, which reproduces single-precision storage of
/// activations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Precision {
    #[default]
    Double,
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    pub batch: usize,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl Shape {
    pub const fn new(batch: usize, channels: usize, height: usize, width: usize) -> Self {
        Shape { batch, channels, height, width }
    }

    pub const fn len(&self) -> usize {
        self.batch * self.channels * self.height * self.width
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub const fn plane_len(&self) -> usize {
        self.height * self.width
    }

    pub const fn planes(&self) -> usize {
        self.batch * self.channels
    }

    pub const fn with_spatial(self, height: usize, width: usize) -> Self {
        Shape { height, width, ..self }
    }

    pub const fn with_channels(self, channels: usize) -> Self {
        Shape { channels, ..self }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.batch, self.channels, self.height, self.width)
    }
}

impl From<(usize, usize, usize, usize)> for Shape {
    fn from((b, c, h, w): (usize, usize, usize, usize)) -> Self {
        Shape::new(b, c, h, w)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Shape,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: impl Into<Shape>) -> Self {
        Self::full(shape, 0.0)
    }

    pub fn full(shape: impl Into<Shape>, value: f64) -> Self {
        let shape = shape.into();
        Tensor { shape, data: vec![value; shape.len()] }
    }

    pub fn from_vec(shape: impl Into<Shape>, data: Vec<f64>) -> Result<Self> {
        let shape = shape.into();
        if data.len() != shape.len() {
            return Err(Error::ShapeMismatch(format!(
                "shape {shape} needs {} values, got {}",
                shape.len(),
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    /// Builds a tensor by evaluating `f(b, c, i, j)` at every index.
    pub fn from_fn(
        shape: impl Into<Shape>,
        mut f: impl FnMut(usize, usize, usize, usize) -> f64,
    ) -> Self {
        let shape = shape.into();
        let mut data = Vec::with_capacity(shape.len());
        for b in 0..shape.batch {
            for c in 0..shape.channels {
                for i in 0..shape.height {
                    for j in 0..shape.width {
                        data.push(f(b, c, i, j));
                    }
                }
            }
        }
        Tensor { shape, data }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn index(&self, b: usize, c: usize, i: usize, j: usize) -> usize {
        let s = self.shape;
        ((b * s.channels + c) * s.height + i) * s.width + j
    }

    #[inline]
    pub fn get(&self, b: usize, c: usize, i: usize, j: usize) -> f64 {
        self.data[self.index(b, c, i, j)]
    }

    #[inline]
    pub fn set(&mut self, b: usize, c: usize, i: usize, j: usize, value: f64) {
        let k = self.index(b, c, i, j);
        self.data[k] = value;
    }

    /// The (height × width) plane of sample `b`, channel `c`.
    pub fn plane(&self, b: usize, c: usize) -> &[f64] {
        let n = self.shape.plane_len();
        let start = (b * self.shape.channels + c) * n;
        &self.data[start..start + n]
    }

    pub fn plane_mut(&mut self, b: usize, c: usize) -> &mut [f64] {
        let n = self.shape.plane_len();
        let start = (b * self.shape.channels + c) * n;
        &mut self.data[start..start + n]
    }

    /// Iterates over all planes in (batch, channel) order.
    pub fn planes(&self) -> core::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.shape.plane_len().max(1))
    }

    pub fn planes_mut(&mut self) -> core::slice::ChunksExactMut<'_, f64> {
        let n = self.shape.plane_len().max(1);
        self.data.chunks_exact_mut(n)
    }

    /// All channels of sample `b` as one contiguous slice.
    pub fn sample(&self, b: usize) -> &[f64] {
        let n = self.shape.channels * self.shape.plane_len();
        &self.data[b * n..(b + 1) * n]
    }

    /// Copies sample `b` out as a batch-of-one tensor.
    pub fn sample_tensor(&self, b: usize) -> Tensor {
        Tensor {
            shape: Shape { batch: 1, ..self.shape },
            data: self.sample(b).to_vec(),
        }
    }

    /// Stacks equally shaped tensors along the batch axis.
    pub fn stack(items: &[Tensor]) -> Result<Tensor> {
        let first = items
            .first()
            .ok_or_else(|| Error::InvalidArgument("cannot stack an empty list".into()))?
            .shape;
        let mut data = Vec::new();
        let mut batch = 0;
        for t in items {
            if (Shape { batch: first.batch, ..t.shape }) != first {
                return Err(Error::ShapeMismatch(format!(
                    "cannot stack {} with {}",
                    t.shape, first
                )));
            }
            batch += t.shape.batch;
            data.extend_from_slice(&t.data);
        }
        Ok(Tensor { shape: Shape { batch, ..first }, data })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor { shape: self.shape, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn map_inplace(&mut self, f: impl Fn(f64) -> f64) {
        self.data.iter_mut().for_each(|v| *v = f(*v));
    }

    pub fn zip_map(&self, other: &Tensor, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        self.expect_same_shape(other)?;
        Ok(Tensor {
            shape: self.shape,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, factor: f64) -> Tensor {
        self.map(|v| v * factor)
    }

    pub fn expect_same_shape(&self, other: &Tensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!("{} vs {}", self.shape, other.shape)));
        }
        Ok(())
    }

    /// Largest absolute elementwise difference. Shapes must match.
    pub fn max_abs_diff(&self, other: &Tensor) -> Result<f64> {
        self.expect_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn sum_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn dot(&self, other: &Tensor) -> Result<f64> {
        self.expect_same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.sum() / self.data.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Rounds every entry to the nearest `f32`.
    pub fn round_to_f32(&mut self) {
        self.data.iter_mut().for_each(|v| *v = *v as f32 as f64);
    }

    pub fn with_precision(mut self, precision: Precision) -> Tensor {
        if precision == Precision::Single {
            self.round_to_f32();
        }
        self
    }

    /// Circular integer roll: `out(i, j) = self(i - dy, j - dx)`.
    pub fn roll(&self, dy: isize, dx: isize) -> Tensor {
        let s = self.shape;
        let (h, w) = (s.height as isize, s.width as isize);
        let mut out = Tensor::zeros(s);
        for (src, dst) in self.planes().zip(out.planes_mut()) {
            for i in 0..h {
                let si = (i - dy).rem_euclid(h);
                for j in 0..w {
                    let sj = (j - dx).rem_euclid(w);
                    dst[(i * w + j) as usize] = src[(si * w + sj) as usize];
                }
            }
        }
        out
    }

    /// Channel-wise concatenation, `self`'s channels first.
    pub fn concat_channels(&self, other: &Tensor) -> Result<Tensor> {
        let (a, b) = (self.shape, other.shape);
        if a.batch != b.batch || a.height != b.height || a.width != b.width {
            return Err(Error::ShapeMismatch(format!("cannot concatenate {a} with {b}")));
        }
        let mut data = Vec::with_capacity(a.len() + b.len());
        for n in 0..a.batch {
            data.extend_from_slice(self.sample(n));
            data.extend_from_slice(other.sample(n));
        }
        Ok(Tensor { shape: a.with_channels(a.channels + b.channels), data })
    }

    /// Channels `[start, end)` of every sample.
    pub fn slice_channels(&self, start: usize, end: usize) -> Result<Tensor> {
        let s = self.shape;
        if start > end || end > s.channels {
            return Err(Error::ShapeMismatch(format!(
                "channel range {start}..{end} out of bounds for {s}"
            )));
        }
        let mut data = Vec::with_capacity(s.batch * (end - start) * s.plane_len());
        for b in 0..s.batch {
            for c in start..end {
                data.extend_from_slice(self.plane(b, c));
            }
        }
        Ok(Tensor { shape: s.with_channels(end - start), data })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_checks_length() {
        assert!(Tensor::from_vec((1, 1, 2, 2), vec![0.0; 3]).is_err());
        assert!(Tensor::from_vec((1, 1, 2, 2), vec![0.0; 4]).is_ok());
    }

    #[test]
    fn roll_wraps() {
        let t = Tensor::from_fn((1, 1, 2, 3), |_, _, i, j| (i * 3 + j) as f64);
        let r = t.roll(0, 1);
        assert_eq!(r.data(), &[2.0, 0.0, 1.0, 5.0, 3.0, 4.0]);
        assert_eq!(t.roll(2, 3), t);
    }

    #[test]
    fn concat_and_slice() {
        let a = Tensor::full((2, 2, 3, 3), 1.0);
        let b = Tensor::full((2, 3, 3, 3), 2.0);
        let c = a.concat_channels(&b).unwrap();
        assert_eq!(c.shape(), Shape::new(2, 5, 3, 3));
        assert_eq!(c.slice_channels(0, 2).unwrap(), a);
        assert_eq!(c.slice_channels(2, 5).unwrap(), b);
        assert!(a.concat_channels(&Tensor::zeros((1, 1, 3, 3))).is_err());
    }
}
