use image::codecs::jpeg::JpegEncoder;
use image::{ExtendedColorType, ImageFormat};

use super::{CorruptionError, Raster};
use crate::rng::Rng;

/// Falling-streak offsets (dx, dy) and weights for one snow flake.
const STREAK: [(isize, isize, f64); 7] =
    [(-2, -3, 0.25), (-1, -2, 0.5), (-1, -1, 0.75), (0, 0, 1.0), (1, 1, 0.75), (1, 2, 0.5), (2, 3, 0.25)];

/// Additive white streak layer: each pixel seeds a flake with probability
/// `density`, flakes are stamped with the fixed streak kernel.
pub(crate) fn snow(plane: &mut [f64], width: usize, height: usize, density: f64, rng: &mut Rng) {
    let mut layer = vec![0.0; width * height];
    for y in 0..height {
        for x in 0..width {
            if rng.uniform() < density {
                let brightness = 0.6 + 0.4 * rng.uniform();
                for &(dx, dy, w) in &STREAK {
                    let (sx, sy) = (x as isize + dx, y as isize + dy);
                    if sx >= 0 && sy >= 0 && (sx as usize) < width && (sy as usize) < height {
                        layer[sy as usize * width + sx as usize] += brightness * w;
                    }
                }
            }
        }
    }
    for (i, l) in layer.iter().enumerate() {
        for c in 0..3 {
            plane[i * 3 + c] += l;
        }
    }
}

/// Baseline JPEG bytes at `quality` (1..=100).
pub(crate) fn encode_jpeg(image: &Raster, quality: u8) -> Result<Vec<u8>, CorruptionError> {
    let mut buf = Vec::new();
    JpegEncoder::new_with_quality(&mut buf, quality)
        .encode(image.data(), image.width(), image.height(), ExtendedColorType::Rgb8)
        .map_err(|e| CorruptionError::Encode(e.to_string()))?;
    Ok(buf)
}

pub(crate) fn jpeg_round_trip(image: &Raster, quality: u8) -> Result<Raster, CorruptionError> {
    let bytes = encode_jpeg(image, quality)?;
    let img = image::load_from_memory_with_format(&bytes, ImageFormat::Jpeg)
        .map_err(|e| CorruptionError::Decode(e.to_string()))?;
    let out = Raster::from(img.to_rgb8());
    if (out.width(), out.height()) != (image.width(), image.height()) {
        return Err(CorruptionError::Decode(format!(
            "JPEG round trip changed dimensions to {}x{}",
            out.width(),
            out.height()
        )));
    }
    Ok(out)
}

/// Block means over `block x block` tiles (edge tiles are partial).
pub(crate) fn pixelate(plane: &mut [f64], width: usize, height: usize, block: usize) {
    for by in (0..height).step_by(block) {
        for bx in (0..width).step_by(block) {
            let (ex, ey) = ((bx + block).min(width), (by + block).min(height));
            let n = ((ex - bx) * (ey - by)) as f64;
            for c in 0..3 {
                let mut sum = 0.0;
                for y in by..ey {
                    for x in bx..ex {
                        sum += plane[(y * width + x) * 3 + c];
                    }
                }
                let mean = sum / n;
                for y in by..ey {
                    for x in bx..ex {
                        plane[(y * width + x) * 3 + c] = mean;
                    }
                }
            }
        }
    }
}

pub(crate) fn gamma(plane: &mut [f64], gamma: f64) {
    let exponent = 1.0 / gamma;
    for v in plane.iter_mut() {
        *v = v.powf(exponent);
    }
}

/// Black/white checkerboard square covering `area` of the image at a seeded
/// position.
pub(crate) fn checkerboard_patch(plane: &mut [f64], width: usize, height: usize, area: f64, rng: &mut Rng) {
    let side = ((area * (width * height) as f64).sqrt().round() as usize).min(width.min(height));
    if side == 0 {
        return;
    }
    let x0 = (rng.uniform() * (width - side + 1) as f64) as usize;
    let y0 = (rng.uniform() * (height - side + 1) as f64) as usize;
    let cell = side.div_ceil(6).max(1);
    for y in 0..side {
        for x in 0..side {
            let v = if ((x / cell) + (y / cell)).is_multiple_of(2) { 1.0 } else { 0.0 };
            let i = ((y0 + y) * width + x0 + x) * 3;
            plane[i..i + 3].fill(v);
        }
    }
}
