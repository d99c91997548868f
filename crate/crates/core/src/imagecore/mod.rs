//! Image buffers, sRGB transfer functions and concatenation.
//!
//! [`RadianceImage`] holds linear RGB radiance as `f32` and is the common
//! intermediate of the renderer. [`LdrImage`] holds 8-bit sRGB-encoded RGB.
//! Neither carries alpha.

mod io;

pub use io::{load_hdr, load_ldr, write_exr, write_jpeg, write_png, HdrFormat, LoadReport};

use crate::math::Rgb;
use crate::{Error, Result};

/// sRGB opto-electronic transfer function on a clamped linear value.
pub fn srgb_encode(c: f64) -> Result<f64> {
    if !c.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(srgb_encode_clamped(c))
}

#[inline]
pub(crate) fn srgb_encode_clamped(c: f64) -> f64 {
    let c = c.clamp(0.0, 1.0);
    if c <= 0.003_130_8 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

/// Inverse of [`srgb_encode`] on `[0, 1]`.
pub fn srgb_decode(e: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&e) {
        return Err(Error::OutOfRange(e));
    }
    Ok(srgb_decode_unchecked(e))
}

#[inline]
fn srgb_decode_unchecked(e: f64) -> f64 {
    // Breakpoint is the encoded image of the linear breakpoint, so the two
    // branches invert each other exactly.
    if e <= 12.92 * 0.003_130_8 {
        e / 12.92
    } else {
        ((e + 0.055) / 1.055).powf(2.4)
    }
}

/// Linear value of every 8-bit sRGB code.
pub fn srgb_decode_table() -> [f32; 256] {
    let mut lut = [0.0f32; 256];
    for (i, v) in lut.iter_mut().enumerate() {
        *v = srgb_decode_unchecked(i as f64 / 255.0) as f32;
    }
    lut
}

/// Row-major interleaved RGB raster.
pub trait Raster: Sized {
    type Sample: Copy;

    fn width(&self) -> usize;
    fn height(&self) -> usize;
    fn samples(&self) -> &[Self::Sample];
    fn from_samples(width: usize, height: usize, data: Vec<Self::Sample>) -> Result<Self>;
}

/// Linear HDR radiance, all components finite and non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct RadianceImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl RadianceImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height * 3],
        }
    }

    pub fn filled(width: usize, height: usize, value: Rgb) -> Self {
        let mut img = Self::new(width, height);
        for px in img.data.chunks_exact_mut(3) {
            for c in 0..3 {
                px[c] = value[c] as f32;
            }
        }
        img
    }

    pub fn from_data(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for {width}x{height} RGB",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if let Some(v) = data.iter().find(|v| **v < 0.0) {
            return Err(Error::InvalidArgument(format!("negative radiance {v}")));
        }
        Ok(Self { width, height, data })
    }

    /// Build from a closure over `(x, y)`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Rgb) -> Self {
        let mut img = Self::new(width, height);
        for y in 0..height {
            for x in 0..width {
                img.set(x, y, f(x, y));
            }
        }
        img
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Rgb {
        let i = (y * self.width + x) * 3;
        Rgb::new(self.data[i] as f64, self.data[i + 1] as f64, self.data[i + 2] as f64)
    }

    /// Store a pixel; negative or non-finite components are written as 0.
    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: Rgb) {
        let i = (y * self.width + x) * 3;
        for c in 0..3 {
            let s = v[c] as f32;
            self.data[i + c] = if s.is_finite() && s > 0.0 { s } else { 0.0 };
        }
    }

    pub fn pixels(&self) -> impl Iterator<Item = Rgb> + '_ {
        self.data
            .chunks_exact(3)
            .map(|p| Rgb::new(p[0] as f64, p[1] as f64, p[2] as f64))
    }

    pub fn mean(&self) -> Rgb {
        let n = (self.width * self.height).max(1) as f64;
        self.pixels().fold(Rgb::BLACK, |a, p| a + p) / n
    }
}

impl Raster for RadianceImage {
    type Sample = f32;

    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn samples(&self) -> &[f32] {
        &self.data
    }
    fn from_samples(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        Self::from_data(width, height, data)
    }
}

/// 8-bit sRGB-encoded RGB.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LdrImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl LdrImage {
    pub fn filled(width: usize, height: usize, value: [u8; 3]) -> Self {
        let data = value.iter().copied().cycle().take(width * height * 3).collect();
        Self { width, height, data }
    }

    pub fn from_data(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::DimensionMismatch(format!(
                "{} bytes for {width}x{height} RGB",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&v);
    }

    /// Channel values normalized to `[0, 1]`.
    pub fn to_unit_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&b| b as f64 / 255.0).collect()
    }
}

impl Raster for LdrImage {
    type Sample = u8;

    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn samples(&self) -> &[u8] {
        &self.data
    }
    fn from_samples(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        Self::from_data(width, height, data)
    }
}

/// Place images side by side, left to right in argument order.
pub fn hconcat<I: Raster>(images: &[I]) -> Result<I> {
    let first = images
        .first()
        .ok_or_else(|| Error::InvalidArgument("hconcat needs at least one image".into()))?;
    let height = first.height();
    if let Some(bad) = images.iter().find(|i| i.height() != height) {
        return Err(Error::DimensionMismatch(format!(
            "height {} vs {}",
            bad.height(),
            height
        )));
    }
    let width: usize = images.iter().map(Raster::width).sum();
    let mut data = Vec::with_capacity(width * height * 3);
    for y in 0..height {
        for img in images {
            let row = img.width() * 3;
            data.extend_from_slice(&img.samples()[y * row..(y + 1) * row]);
        }
    }
    I::from_samples(width, height, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// IEC 61966-2-1 forward curve, written out independently.
    fn reference_encode(c: f64) -> f64 {
        if c <= 0.0031308 {
            c * 12.92
        } else {
            1.055 * c.powf(1.0 / 2.4) - 0.055
        }
    }

    #[test]
    fn encode_fixed_points() {
        assert_eq!(srgb_encode(0.0).unwrap(), 0.0);
        assert!((srgb_encode(1.0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(srgb_encode(7.5).unwrap(), srgb_encode(1.0).unwrap());
    }

    #[test]
    fn encode_breakpoint() {
        let bp = 0.0031308;
        let lower = 12.92 * bp;
        let upper = 1.055 * f64::powf(bp, 1.0 / 2.4) - 0.055;
        assert!((lower - upper).abs() < 1e-7);
        assert!((srgb_encode(bp).unwrap() - 0.040449936).abs() < 1e-7);
        assert!((srgb_encode(bp + 1e-12).unwrap() - srgb_encode(bp).unwrap()).abs() < 1e-7);
    }

    #[test]
    fn encode_rejects_non_finite() {
        assert!(srgb_encode(f64::NAN).is_err());
        assert!(srgb_encode(f64::INFINITY).is_err());
    }

    #[test]
    fn decode_rejects_out_of_range() {
        assert_eq!(srgb_decode(0.0).unwrap(), 0.0);
        assert!((srgb_decode(1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(srgb_decode(-0.01).is_err());
        assert!(srgb_decode(1.01).is_err());
    }

    #[test]
    fn decode_round_trip_grid() {
        let mut worst = 0.0f64;
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            let back = srgb_decode(srgb_encode(x).unwrap()).unwrap();
            worst = worst.max((back - x).abs());
        }
        assert!(worst < 1e-6, "max error {worst}");
    }

    #[test]
    fn decode_table_matches_decode() {
        let lut = srgb_decode_table();
        assert_eq!(lut[0], 0.0);
        assert_eq!(lut[255], 1.0);
        assert!((lut[188] as f64 - srgb_decode(188.0 / 255.0).unwrap()).abs() < 1e-7);
    }

    proptest! {
        #[test]
        fn encode_matches_reference(c in 0.0f64..1.0) {
            prop_assert!((srgb_encode(c).unwrap() - reference_encode(c)).abs() < 1e-12);
        }

        #[test]
        fn encode_is_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(srgb_encode(lo).unwrap() <= srgb_encode(hi).unwrap());
        }

        #[test]
        fn hconcat_preserves_pixels(widths in proptest::collection::vec(1usize..6, 1..5), h in 1usize..5) {
            let imgs: Vec<LdrImage> = widths
                .iter()
                .enumerate()
                .map(|(k, &w)| {
                    let data = (0..w * h * 3).map(|i| (i * 7 + k * 31) as u8).collect();
                    LdrImage::from_data(w, h, data).unwrap()
                })
                .collect();
            let out = hconcat(&imgs).unwrap();
            prop_assert_eq!(out.width(), widths.iter().sum::<usize>());
            prop_assert_eq!(out.data().len(), imgs.iter().map(|i| i.data().len()).sum::<usize>());
            let mut x0 = 0;
            for img in &imgs {
                for y in 0..h {
                    for x in 0..img.width() {
                        prop_assert_eq!(out.get(x0 + x, y), img.get(x, y));
                    }
                }
                x0 += img.width();
            }
        }
    }

    #[test]
    fn hconcat_single_is_identity() {
        let a = RadianceImage::from_fn(3, 2, |x, y| Rgb::new(x as f64, y as f64, 1.0));
        assert_eq!(hconcat(std::slice::from_ref(&a)).unwrap(), a);
    }

    #[test]
    fn hconcat_red_blue() {
        let red = LdrImage::filled(2, 2, [255, 0, 0]);
        let blue = LdrImage::filled(2, 2, [0, 0, 255]);
        let out = hconcat(&[red, blue]).unwrap();
        assert_eq!((out.width(), out.height()), (4, 2));
        for y in 0..2 {
            assert_eq!(out.get(0, y), [255, 0, 0]);
            assert_eq!(out.get(1, y), [255, 0, 0]);
            assert_eq!(out.get(2, y), [0, 0, 255]);
            assert_eq!(out.get(3, y), [0, 0, 255]);
        }
    }

    #[test]
    fn hconcat_widths_sum() {
        let imgs: Vec<_> = [3, 5, 7].iter().map(|&w| RadianceImage::new(w, 4)).collect();
        assert_eq!(hconcat(&imgs).unwrap().width(), 15);
    }

    #[test]
    fn hconcat_height_mismatch() {
        let imgs = [RadianceImage::new(2, 2), RadianceImage::new(2, 3)];
        assert!(matches!(hconcat(&imgs), Err(Error::DimensionMismatch(_))));
        assert!(hconcat::<LdrImage>(&[]).is_err());
    }

    #[test]
    fn radiance_validation() {
        assert!(RadianceImage::from_data(1, 1, vec![0.0, 1.0]).is_err());
        assert!(RadianceImage::from_data(1, 1, vec![0.0, f32::NAN, 1.0]).is_err());
        assert!(RadianceImage::from_data(1, 1, vec![0.0, -1.0, 1.0]).is_err());
        let mut img = RadianceImage::new(1, 1);
        img.set(0, 0, Rgb::new(-1.0, f64::NAN, 2.0));
        assert_eq!(img.get(0, 0), Rgb::new(0.0, 0.0, 2.0));
    }
}
