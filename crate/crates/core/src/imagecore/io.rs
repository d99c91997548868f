use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use exr::prelude as ex;
use image::codecs::jpeg::JpegEncoder;
use image::{ExtendedColorType, ImageEncoder};
use serde::{Deserialize, Serialize};

use super::{LdrImage, RadianceImage};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HdrFormat {
    Exr,
    Hdr,
}

/// Side information from [`load_hdr`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub format: HdrFormat,
    /// Number of negative components replaced by 0.
    pub clamped: usize,
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default()
}

/// Load a Radiance `.hdr` or OpenEXR `.exr` file as linear RGB.
///
/// Negative components are clamped to 0 and counted; NaN and infinite
/// components are treated the same way.
pub fn load_hdr(path: impl AsRef<Path>) -> Result<(RadianceImage, LoadReport)> {
    let path = path.as_ref();
    let (width, height, mut data, format) = match extension(path).as_str() {
        "exr" => {
            let (w, h, d) = read_exr(path)?;
            (w, h, d, HdrFormat::Exr)
        }
        "hdr" => {
            let img = image::open(path).map_err(|e| Error::Decode {
                path: path.to_owned(),
                reason: e.to_string(),
            })?;
            let rgb = img.to_rgb32f();
            let (w, h) = rgb.dimensions();
            (w as usize, h as usize, rgb.into_raw(), HdrFormat::Hdr)
        }
        other => {
            return Err(Error::UnsupportedLayout {
                path: path.to_owned(),
                reason: format!("unknown HDR extension `{other}`"),
            })
        }
    };
    let mut clamped = 0;
    for v in &mut data {
        if !(*v >= 0.0) || !v.is_finite() {
            *v = 0.0;
            clamped += 1;
        }
    }
    if clamped > 0 {
        log::warn!("{}: clamped {clamped} invalid components", path.display());
    }
    let img = RadianceImage::from_data(width, height, data)?;
    Ok((img, LoadReport { format, clamped }))
}

fn read_exr(path: &Path) -> Result<(usize, usize, Vec<f32>)> {
    let image = ex::read_first_rgba_layer_from_file(
        path,
        |resolution, _channels| {
            (
                resolution.width(),
                vec![0f32; resolution.width() * resolution.height() * 3],
            )
        },
        |(width, pixels), pos, (r, g, b, _a): (f32, f32, f32, f32)| {
            let i = (pos.y() * *width + pos.x()) * 3;
            pixels[i] = r;
            pixels[i + 1] = g;
            pixels[i + 2] = b;
        },
    )
    .map_err(|e| match e {
        ex::Error::Io(io) => Error::Io(io),
        other => Error::UnsupportedLayout {
            path: path.to_owned(),
            reason: other.to_string(),
        },
    })?;
    let size = image.layer_data.size;
    let (_, data) = image.layer_data.channel_data.pixels;
    Ok((size.width(), size.height(), data))
}

/// Write a 32-bit float RGB OpenEXR file.
pub fn write_exr(img: &RadianceImage, path: impl AsRef<Path>) -> Result<()> {
    let w = img.width();
    let data = img.data();
    ex::write_rgb_file(path, w, img.height(), |x, y| {
        let i = (y * w + x) * 3;
        (data[i], data[i + 1], data[i + 2])
    })?;
    Ok(())
}

/// Write a baseline JPEG at `quality` in `1..=100`.
pub fn write_jpeg(img: &LdrImage, quality: u8, path: impl AsRef<Path>) -> Result<()> {
    if !(1..=100).contains(&quality) {
        return Err(Error::InvalidArgument(format!(
            "JPEG quality {quality} outside 1..=100"
        )));
    }
    let out = BufWriter::new(File::create(path)?);
    JpegEncoder::new_with_quality(out, quality).write_image(
        img.data(),
        img.width() as u32,
        img.height() as u32,
        ExtendedColorType::Rgb8,
    )?;
    Ok(())
}

pub fn write_png(img: &LdrImage, path: impl AsRef<Path>) -> Result<()> {
    image::save_buffer(
        path,
        img.data(),
        img.width() as u32,
        img.height() as u32,
        ExtendedColorType::Rgb8,
    )?;
    Ok(())
}

/// Load an 8-bit JPEG or PNG, dropping alpha.
pub fn load_ldr(path: impl AsRef<Path>) -> Result<LdrImage> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|e| Error::Decode {
        path: path.to_owned(),
        reason: e.to_string(),
    })?;
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    LdrImage::from_data(w as usize, h as usize, rgb.into_raw())
}
