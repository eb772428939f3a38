use std::fs;
use std::io::Write;
use std::path::Path;

use super::{BinaryImage, GrayImage, BACKGROUND};
use crate::{Error, Result};

/// Read a grayscale PGM (`P5`) or PNG raster. Color PNGs are rejected.
pub fn read_raster(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let format_err = |reason: String| Error::Format {
        path: path.to_path_buf(),
        reason,
    };
    let format = image::guess_format(&bytes).map_err(|e| format_err(e.to_string()))?;
    if !matches!(format, image::ImageFormat::Png | image::ImageFormat::Pnm) {
        return Err(format_err(format!("unsupported raster format {format:?}")));
    }
    let decoded = image::load_from_memory_with_format(&bytes, format).map_err(|e| format_err(e.to_string()))?;
    if decoded.color().has_color() {
        return Err(format_err("expected a grayscale raster".into()));
    }
    let luma = decoded.to_luma8();
    let (w, h) = (luma.width() as usize, luma.height() as usize);
    GrayImage::new(w, h, luma.into_raw()).map_err(|e| format_err(e.to_string()))
}

fn write_p5(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    let mut buf = Vec::with_capacity(pixels.len() + 32);
    write!(buf, "P5\n{width} {height}\n255\n").expect("write to Vec");
    buf.extend_from_slice(pixels);
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn write_gray_pgm(path: &Path, img: &GrayImage) -> Result<()> {
    write_p5(path, img.width(), img.height(), img.data())
}

/// Ink is written as 0, background as 255.
pub fn write_binary_pgm(path: &Path, img: &BinaryImage) -> Result<()> {
    let pixels: Vec<u8> = img.data().iter().map(|&v| if v { 0 } else { BACKGROUND }).collect();
    write_p5(path, img.width(), img.height(), &pixels)
}
