//! PNG input and output. Images map to `[0, 1]` RGB tensors of batch 1.

use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use unet_af_core::Tensor;

use crate::error::{Error, Result};

/// Sample depth of written files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Depth {
    Eight,
    Sixteen,
}

/// Reads an 8- or 16-bit PNG as a `(1, 3, H, W)` tensor. Gray images are
/// replicated to three channels and alpha is dropped.
pub fn read_png(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::EXPAND);
    let bad = |e: png::DecodingError| Error::format(path, e.to_string());
    let mut reader = decoder.read_info().map_err(bad)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::format(path, "image too large"))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(bad)?;
    let (h, w) = (info.height as usize, info.width as usize);
    let samples = info.color_type.samples();
    let (bytes, peak) = match info.bit_depth {
        png::BitDepth::Eight => (1, 255.0),
        png::BitDepth::Sixteen => (2, 65535.0),
        other => return Err(Error::format(path, format!("unsupported bit depth {other:?}"))),
    };
    let sample = |row: usize, col: usize, s: usize| -> f64 {
        let at = row * info.line_size + (col * samples + s) * bytes;
        let v = if bytes == 1 { buf[at] as f64 } else { u16::from_be_bytes([buf[at], buf[at + 1]]) as f64 };
        v / peak
    };
    let colour = samples >= 3;
    Ok(Tensor::from_fn((1, 3, h, w), |_, c, i, j| sample(i, j, if colour { c } else { 0 })))
}

/// Writes sample 0 of `x` (1 or 3 channels), clamped to `[0, 1]`.
pub fn write_png(path: impl AsRef<Path>, x: &Tensor, depth: Depth) -> Result<()> {
    let path = path.as_ref();
    let s = x.shape();
    let colour = match s.channels {
        1 => png::ColorType::Grayscale,
        3 => png::ColorType::Rgb,
        c => return Err(Error::format(path, format!("cannot write {c}-channel image"))),
    };
    let (h, w) = (s.height, s.width);
    let mut data = Vec::with_capacity(h * w * s.channels * 2);
    for i in 0..h {
        for j in 0..w {
            for c in 0..s.channels {
                let v = x.get(0, c, i, j).clamp(0.0, 1.0);
                match depth {
                    Depth::Eight => data.push((v * 255.0).round() as u8),
                    Depth::Sixteen => data.extend_from_slice(&((v * 65535.0).round() as u16).to_be_bytes()),
                }
            }
        }
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), w as u32, h as u32);
    encoder.set_color(colour);
    encoder.set_depth(match depth {
        Depth::Eight => png::BitDepth::Eight,
        Depth::Sixteen => png::BitDepth::Sixteen,
    });
    let bad = |e: png::EncodingError| Error::format(path, e.to_string());
    let mut writer = encoder.write_header().map_err(bad)?;
    writer.write_image_data(&data).map_err(bad)?;
    writer.finish().map_err(bad)
}

/// The `.png` files of `dir`, sorted by name.
pub fn list_pngs(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
        .collect();
    paths.sort();
    Ok(paths)
}

/// The largest centered crop whose sides are multiples of `multiple`,
/// capped at `max_side` when given.
pub fn crop_to_multiple(x: &Tensor, multiple: usize, max_side: Option<usize>) -> Tensor {
    let s = x.shape();
    let fit = |n: usize| {
        let n = max_side.map_or(n, |m| n.min(m));
        n / multiple * multiple
    };
    let (h, w) = (fit(s.height), fit(s.width));
    let (y0, x0) = ((s.height - h) / 2, (s.width - w) / 2);
    Tensor::from_fn(s.with_spatial(h, w), |b, c, i, j| x.get(b, c, y0 + i, x0 + j))
}
