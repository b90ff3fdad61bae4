use std::io::Cursor;
use std::path::Path;

use image::{ImageFormat, RgbImage};

use super::CorruptionError;

/// Decoded RGB image, row-major and channel-interleaved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl Raster {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self, CorruptionError> {
        if width == 0 || height == 0 {
            return Err(CorruptionError::InvalidRaster(format!("dimensions must be positive, got {width}x{height}")));
        }
        let expected = width as usize * height as usize * 3;
        if data.len() != expected {
            return Err(CorruptionError::InvalidRaster(format!(
                "expected {expected} bytes for {width}x{height}x3, got {}",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self, CorruptionError> {
        let data = rgb.iter().copied().cycle().take(width as usize * height as usize * 3).collect();
        Self::new(width, height, data)
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [u8; 3]) -> Result<Self, CorruptionError> {
        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CorruptionError> {
        let img = image::load_from_memory(bytes).map_err(|e| CorruptionError::Decode(e.to_string()))?;
        Ok(Self::from(img.to_rgb8()))
    }

    pub fn open(path: &Path) -> Result<Self, CorruptionError> {
        let bytes = std::fs::read(path).map_err(|e| CorruptionError::Io { path: path.to_path_buf(), source: e })?;
        Self::decode(&bytes).map_err(|e| match e {
            CorruptionError::Decode(msg) => CorruptionError::Decode(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_png(&self) -> Vec<u8> {
        let mut out = Cursor::new(Vec::new());
        RgbImage::from(self.clone())
            .write_to(&mut out, ImageFormat::Png)
            .expect("in-memory PNG encoding of a valid raster cannot fail");
        out.into_inner()
    }

    /// Channel values rescaled to `[0, 1]`.
    pub(crate) fn to_unit(&self) -> Vec<f64> {
        self.data.iter().map(|&v| f64::from(v) / 255.0).collect()
    }

    /// Re-quantises a `[0, 1]` plane: clamp, scale, round half away from zero.
    pub(crate) fn from_unit(width: u32, height: u32, plane: &[f64]) -> Self {
        debug_assert_eq!(plane.len(), width as usize * height as usize * 3);
        let data = plane.iter().map(|&v| quantize(v)).collect();
        Self { width, height, data }
    }
}

pub(crate) fn quantize(v: f64) -> u8 {
    if v.is_nan() {
        return 0;
    }
    // f64::round rounds half away from zero.
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

impl From<RgbImage> for Raster {
    fn from(img: RgbImage) -> Self {
        let (width, height) = img.dimensions();
        Self { width, height, data: img.into_raw() }
    }
}

impl From<Raster> for RgbImage {
    fn from(r: Raster) -> Self {
        RgbImage::from_raw(r.width, r.height, r.data).expect("raster invariants guarantee buffer size")
    }
}
