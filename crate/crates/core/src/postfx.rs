//! Camera pipeline: exposure, gray-world white balance, sRGB encoding and
//! 8-bit quantization, plus training-pair packaging.

use serde::{Deserialize, Serialize};

use crate::imagecore::{hconcat, srgb_encode_clamped, LdrImage, RadianceImage};
use crate::{Error, Result};

/// Luminance percentile mapped to [`EXPOSURE_TARGET`].
const EXPOSURE_PERCENTILE: f64 = 0.99;
const EXPOSURE_TARGET: f64 = 0.95;
const EXPOSURE_RANGE: [f64; 2] = [0.25, 4.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostParams {
    pub exposure: f64,
    pub awb_gains: [f64; 3],
    pub jpeg_quality: u8,
    /// Fraction of pixels of the reference image with a clipped channel.
    pub clip_stats: f64,
}

impl PostParams {
    pub fn identity(jpeg_quality: u8) -> Self {
        Self {
            exposure: 1.0,
            awb_gains: [1.0; 3],
            jpeg_quality,
            clip_stats: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.exposure > 0.0 && self.exposure.is_finite()) {
            return Err(Error::InvalidArgument(format!("exposure {}", self.exposure)));
        }
        if self.awb_gains.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "white balance gains {:?}",
                self.awb_gains
            )));
        }
        if !(1..=100).contains(&self.jpeg_quality) {
            return Err(Error::InvalidArgument(format!("jpeg quality {}", self.jpeg_quality)));
        }
        Ok(())
    }
}

fn channel_means(img: &RadianceImage) -> [f64; 3] {
    let mut sums = [0.0f64; 3];
    for px in img.data().chunks_exact(3) {
        for c in 0..3 {
            sums[c] += px[c] as f64;
        }
    }
    let n = (img.width() * img.height()).max(1) as f64;
    sums.map(|s| s / n)
}

/// Gray-world gains `mean_g / mean_c`, so the green gain is 1.
pub fn compute_awb_gains(img: &RadianceImage) -> Result<[f64; 3]> {
    let m = channel_means(img);
    if m.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "white balance needs non-zero channel means, got {m:?}"
        )));
    }
    Ok([m[1] / m[0], 1.0, m[1] / m[2]])
}

/// Exposure mapping the 99th luminance percentile to 0.95, clamped to
/// `[0.25, 4]`.
pub fn compute_exposure(img: &RadianceImage) -> f64 {
    let mut lum: Vec<f64> = img.pixels().map(|p| p.luminance()).collect();
    if lum.is_empty() {
        return 1.0;
    }
    let k = ((lum.len() - 1) as f64 * EXPOSURE_PERCENTILE).round() as usize;
    let (_, p, _) = lum.select_nth_unstable_by(k, f64::total_cmp);
    let p = *p;
    if p > 0.0 {
        (EXPOSURE_TARGET / p).clamp(EXPOSURE_RANGE[0], EXPOSURE_RANGE[1])
    } else {
        EXPOSURE_RANGE[1]
    }
}

#[inline]
fn quantize(linear: f64) -> u8 {
    (255.0 * srgb_encode_clamped(linear)).round() as u8
}

/// Apply exposure and gains, clamp, sRGB-encode and quantize. Returns the
/// image and the fraction of pixels with at least one clipped channel.
pub fn tonemap(img: &RadianceImage, params: &PostParams) -> (LdrImage, f64) {
    let mut data = Vec::with_capacity(img.data().len());
    let mut clipped = 0usize;
    for px in img.data().chunks_exact(3) {
        let mut any = false;
        for (&x, gain) in px.iter().zip(params.awb_gains) {
            let v = params.exposure * gain * x as f64;
            any |= v > 1.0;
            data.push(quantize(v));
        }
        clipped += any as usize;
    }
    let n = (img.width() * img.height()).max(1);
    let out = LdrImage::from_data(img.width(), img.height(), data).expect("same dimensions");
    (out, clipped as f64 / n as f64)
}

/// Tonemap the layers `[I, T, B, R, MR]` with exposure and white balance
/// measured on `I` alone.
pub fn shared_tonemap_quintuple(layers: [&RadianceImage; 5], jpeg_quality: u8) -> Result<([LdrImage; 5], PostParams)> {
    let (w, h) = (layers[0].width(), layers[0].height());
    if layers.iter().any(|l| l.width() != w || l.height() != h) {
        return Err(Error::DimensionMismatch("layers differ in size".into()));
    }
    let mut params = PostParams {
        exposure: compute_exposure(layers[0]),
        awb_gains: compute_awb_gains(layers[0]).unwrap_or([1.0; 3]),
        jpeg_quality,
        clip_stats: 0.0,
    };
    params.validate()?;
    let out = layers.map(|l| tonemap(l, &params));
    params.clip_stats = out[0].1;
    Ok((out.map(|(img, _)| img), params))
}

/// Legacy synthesis on 8-bit images: `clamp(alpha*t + beta*r - t*r)`.
pub fn legacy_blend(t: &LdrImage, r: &LdrImage, alpha: f64, beta: f64) -> Result<LdrImage> {
    if (t.width(), t.height()) != (r.width(), r.height()) {
        return Err(Error::DimensionMismatch("legacy blend inputs differ in size".into()));
    }
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(0.0..=1.5).contains(&v) {
            return Err(Error::InvalidArgument(format!("{name} {v} outside [0, 1.5]")));
        }
    }
    let data = t
        .data()
        .iter()
        .zip(r.data())
        .map(|(&a, &b)| {
            let (a, b) = (a as f64 / 255.0, b as f64 / 255.0);
            (255.0 * (alpha * a + beta * b - a * b).clamp(0.0, 1.0)).round() as u8
        })
        .collect();
    LdrImage::from_data(t.width(), t.height(), data)
}

/// Composite `[I:T:R]` and control `[I:white:white]`.
pub fn build_training_pair(i: &LdrImage, t: &LdrImage, r: &LdrImage) -> Result<(LdrImage, LdrImage)> {
    let dims = (i.width(), i.height());
    if (t.width(), t.height()) != dims || (r.width(), r.height()) != dims {
        return Err(Error::DimensionMismatch("training pair panels differ in size".into()));
    }
    let white = LdrImage::filled(dims.0, dims.1, [255; 3]);
    let composite = hconcat(&[i.clone(), t.clone(), r.clone()])?;
    let control = hconcat(&[i.clone(), white.clone(), white])?;
    Ok((composite, control))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagecore::srgb_encode;
    use crate::math::Rgb;
    use crate::rng::{SampleRng, UniformSource};
    use proptest::prelude::*;

    fn random_image(w: usize, h: usize, seed: u64, tint: Rgb) -> RadianceImage {
        let mut rng = SampleRng::new(seed);
        RadianceImage::from_fn(w, h, |_, _| Rgb::splat(0.05 + rng.next_f64()) * tint)
    }

    #[test]
    fn awb_gray_world() {
        let gray = random_image(16, 9, 1, Rgb::WHITE);
        let g = compute_awb_gains(&gray).unwrap();
        for v in g {
            assert!((v - 1.0).abs() < 1e-6);
        }
        let tinted = random_image(16, 9, 1, Rgb::new(1.3, 1.0, 0.6));
        let g = compute_awb_gains(&tinted).unwrap();
        assert!((g[0] - 1.0 / 1.3).abs() < 1e-6);
        assert_eq!(g[1], 1.0);
        assert!((g[2] - 1.0 / 0.6).abs() < 1e-6);

        let balanced = RadianceImage::from_fn(16, 9, |x, y| {
            let p = tinted.get(x, y);
            Rgb::new(p[0] * g[0], p[1] * g[1], p[2] * g[2])
        });
        let m = channel_means(&balanced);
        assert!((m[0] - m[1]).abs() < 1e-6 && (m[2] - m[1]).abs() < 1e-6);
    }

    #[test]
    fn awb_rejects_empty_channel() {
        let img = RadianceImage::filled(4, 4, Rgb::new(1.0, 0.0, 1.0));
        assert!(compute_awb_gains(&img).is_err());
    }

    #[test]
    fn tonemap_reference_values() {
        let p = PostParams::identity(90);
        let img = RadianceImage::from_data(3, 1, vec![0.0, 0.0, 0.0, 0.5, 0.5, 0.5, 1.0, 2.0, 9.0]).unwrap();
        let (ldr, clip) = tonemap(&img, &p);
        assert_eq!(ldr.get(0, 0), [0, 0, 0]);
        assert_eq!(ldr.get(1, 0), [188, 188, 188]);
        assert_eq!(ldr.get(2, 0), [255, 255, 255]);
        assert!((clip - 1.0 / 3.0).abs() < 1e-12);
        assert!((srgb_encode(0.5).unwrap() - 0.735357).abs() < 1e-6);
    }

    #[test]
    fn exposure_is_linear_below_clip() {
        let dark = random_image(8, 8, 4, Rgb::splat(0.2));
        let mut p = PostParams::identity(90);
        p.exposure = 2.0;
        let doubled = RadianceImage::from_fn(8, 8, |x, y| dark.get(x, y) * 2.0);
        assert_eq!(tonemap(&dark, &p).0, tonemap(&doubled, &PostParams::identity(90)).0);
    }

    #[test]
    fn exposure_targets_percentile() {
        let img = RadianceImage::from_fn(10, 10, |x, y| Rgb::splat((y * 10 + x) as f64 / 100.0 + 0.3));
        let e = compute_exposure(&img);
        assert!((e - 0.95 / 1.28).abs() < 1e-6);
        assert_eq!(compute_exposure(&RadianceImage::filled(4, 4, Rgb::splat(100.0))), 0.25);
        assert_eq!(compute_exposure(&RadianceImage::new(4, 4)), 4.0);
    }

    #[test]
    fn quintuple_shares_parameters() {
        let i = random_image(12, 8, 5, Rgb::new(1.2, 1.0, 0.8));
        let r = RadianceImage::from_fn(12, 8, |x, y| i.get(x, y) * 0.05);
        let t = RadianceImage::from_fn(12, 8, |x, y| i.get(x, y) * 0.95);
        let (out, params) = shared_tonemap_quintuple([&i, &t, &i, &r, &i], 80).unwrap();
        assert_eq!(out[0], out[2]);
        assert_eq!(out[0], out[4]);
        // R stays dim under the exposure of I
        let mean = |img: &LdrImage| img.data().iter().map(|&b| b as f64).sum::<f64>() / img.data().len() as f64;
        assert!(mean(&out[3]) < 0.5 * mean(&out[0]));
        assert_eq!(params.jpeg_quality, 80);
        let small = RadianceImage::new(2, 2);
        assert!(shared_tonemap_quintuple([&i, &t, &small, &r, &i], 80).is_err());
    }

    #[test]
    fn tonemapping_breaks_additivity() {
        let p = PostParams::identity(90);
        let q = |v: f64| quantize(v) as i32;
        assert_ne!(q(0.5), q(0.25) + q(0.25));
        let img = RadianceImage::filled(1, 1, Rgb::splat(0.5));
        assert_eq!(tonemap(&img, &p).0.get(0, 0)[0] as i32, q(0.5));
    }

    #[test]
    fn legacy_blend_cases() {
        let t = LdrImage::filled(3, 2, [128, 40, 250]);
        let r = LdrImage::filled(3, 2, [0, 0, 0]);
        assert_eq!(legacy_blend(&t, &r, 1.0, 0.0).unwrap(), t);
        assert!(legacy_blend(&t, &t, 0.0, 0.0).unwrap().data().iter().all(|&b| b == 0));
        let half = LdrImage::filled(1, 1, [128, 128, 128]);
        let out = legacy_blend(&half, &half, 1.0, 1.0).unwrap();
        let h: f64 = 128.0 / 255.0;
        let expect = (255.0 * (2.0 * h - h * h)).round() as u8;
        assert_eq!(out.get(0, 0), [expect; 3]);
        assert!((expect as f64 / 255.0 - 0.75).abs() < 0.01);
        assert!(legacy_blend(&t, &half, 1.0, 1.0).is_err());
        assert!(legacy_blend(&t, &r, 1.6, 1.0).is_err());
    }

    #[test]
    fn training_pair_layout() {
        let i = LdrImage::filled(5, 3, [10, 20, 30]);
        let t = LdrImage::filled(5, 3, [1, 2, 3]);
        let r = LdrImage::filled(5, 3, [7, 8, 9]);
        let (comp, ctrl) = build_training_pair(&i, &t, &r).unwrap();
        assert_eq!((comp.width(), comp.height()), (15, 3));
        for y in 0..3 {
            for x in 0..15 {
                if x < 5 {
                    assert_eq!(comp.get(x, y), ctrl.get(x, y));
                } else {
                    assert_eq!(ctrl.get(x, y), [255; 3]);
                }
            }
            assert_eq!(comp.get(7, y), [1, 2, 3]);
            assert_eq!(comp.get(12, y), [7, 8, 9]);
        }
        assert!(build_training_pair(&i, &t, &LdrImage::filled(4, 3, [0; 3])).is_err());
    }

    proptest! {
        #[test]
        fn tonemap_is_monotone(a in 0.0f32..3.0, b in 0.0f32..3.0, e in 0.25f64..4.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let mut p = PostParams::identity(90);
            p.exposure = e;
            let img = RadianceImage::from_data(2, 1, vec![lo, lo, lo, hi, hi, hi]).unwrap();
            let (ldr, _) = tonemap(&img, &p);
            prop_assert!(ldr.get(0, 0)[0] <= ldr.get(1, 0)[0]);
        }

        #[test]
        fn legacy_blend_matches_float_formula(
            t in proptest::collection::vec(any::<u8>(), 12),
            r in proptest::collection::vec(any::<u8>(), 12),
            alpha in 0.0f64..1.5, beta in 0.0f64..1.5,
        ) {
            let ti = LdrImage::from_data(2, 2, t.clone()).unwrap();
            let ri = LdrImage::from_data(2, 2, r.clone()).unwrap();
            let out = legacy_blend(&ti, &ri, alpha, beta).unwrap();
            for k in 0..12 {
                let (a, b) = (t[k] as f64 / 255.0, r[k] as f64 / 255.0);
                let f = (alpha * a + beta * b - a * b).clamp(0.0, 1.0) * 255.0;
                prop_assert!((out.data()[k] as f64 - f).abs() <= 1.0);
            }
        }
    }
}
