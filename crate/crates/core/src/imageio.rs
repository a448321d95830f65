//! Grayscale image import and export.

use std::path::Path;

use image::{imageops::FilterType, DynamicImage, ImageBuffer, Luma};
use ndarray::Array2;

use crate::error::{HoloError, Result};
use crate::layout::ImageGrid;

/// Loads an 8- or 16-bit grayscale (or color, converted to luma) image,
/// maps it linearly to `[0, 1]` and resamples to `n x n` if needed.
pub fn load_grayscale(path: impl AsRef<Path>, n: Option<usize>) -> Result<ImageGrid> {
    let img = image::open(path.as_ref())?;
    let img = match n {
        Some(n) if img.width() as usize != n || img.height() as usize != n => {
            img.resize_exact(n as u32, n as u32, FilterType::Triangle)
        }
        _ => img,
    };
    let luma = img.to_luma16();
    let (w, h) = luma.dimensions();
    let values = Array2::from_shape_fn((h as usize, w as usize), |(i, j)| {
        luma.get_pixel(j as u32, i as u32).0[0] as f64 / u16::MAX as f64
    });
    ImageGrid::clamped(values)
}

fn to_u16(values: &Array2<f64>, lo: f64, hi: f64) -> ImageBuffer<Luma<u16>, Vec<u16>> {
    let (h, w) = values.dim();
    let span = if hi > lo { hi - lo } else { 1.0 };
    ImageBuffer::from_fn(w as u32, h as u32, |x, y| {
        let v = ((values[[y as usize, x as usize]] - lo) / span).clamp(0.0, 1.0);
        Luma([(v * u16::MAX as f64).round() as u16])
    })
}

/// Writes `values` clamped to `[0, 1]` as a 16-bit grayscale image. The
/// format follows the extension (`.png`, `.pgm`).
pub fn save_clamped(path: impl AsRef<Path>, values: &Array2<f64>) -> Result<()> {
    save(path, to_u16(values, 0.0, 1.0))
}

/// Writes `values` min-max normalized.
pub fn save_normalized(path: impl AsRef<Path>, values: &Array2<f64>) -> Result<()> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    save(path, to_u16(values, lo, hi))
}

/// `log(1 + I)` intensity preview with the zero frequency moved to the centre.
pub fn save_log_intensity(path: impl AsRef<Path>, intensity: &Array2<f64>) -> Result<()> {
    let (m1, m2) = intensity.dim();
    let centered = Array2::from_shape_fn((m1, m2), |(i, j)| {
        (1.0 + intensity[[(i + m1 / 2) % m1, (j + m2 / 2) % m2]]).ln()
    });
    save_normalized(path, &centered)
}

fn save(path: impl AsRef<Path>, buf: ImageBuffer<Luma<u16>, Vec<u16>>) -> Result<()> {
    let path = path.as_ref();
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    match ext.as_str() {
        "png" | "pgm" | "pnm" => DynamicImage::ImageLuma16(buf).save(path)?,
        other => return Err(HoloError::Config(format!("unsupported image extension {other:?}"))),
    }
    Ok(())
}
