//! Equirectangular environment lighting.
//!
//! Directions use a z-up convention: polar angle `theta = acos(z)` maps to
//! image rows top to bottom and azimuth `phi = atan2(y, x)` maps to
//! columns. The importance-sampling tables weight each texel by its
//! luminance times its exact solid angle, so the sampling density is
//! piecewise constant over texels.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::imagecore::RadianceImage;
use crate::math::{Rgb, Vec3};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentMap {
    image: Arc<RadianceImage>,
    rotation: f64,
    /// Cumulative row weights, last entry 1.
    marginal: Vec<f64>,
    /// Per-row cumulative column weights, last entry of each row 1.
    conditional: Vec<Vec<f64>>,
    /// Sum of luminance times texel solid angle.
    total: f64,
    pole_average: [Rgb; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvSample {
    pub dir: Vec3,
    /// Solid-angle density of `dir`.
    pub pdf: f64,
    /// Radiance of the sampled texel.
    pub radiance: Rgb,
}

impl EnvironmentMap {
    /// Build lookup and sampling tables; `rotation` is an azimuthal offset
    /// in radians.
    pub fn build(image: Arc<RadianceImage>, rotation: f64) -> Result<Self> {
        let (w, h) = (image.width(), image.height());
        if h == 0 || w != 2 * h {
            return Err(Error::InvalidArgument(format!(
                "environment map must be 2:1, got {w}x{h}"
            )));
        }
        let dphi = 2.0 * PI / w as f64;
        let mut row_weight = Vec::with_capacity(h);
        let mut conditional = Vec::with_capacity(h);
        for y in 0..h {
            let solid = dphi * row_cos_span(y, h);
            let mut acc = 0.0;
            let mut cdf = Vec::with_capacity(w);
            for x in 0..w {
                acc += image.get(x, y).luminance().max(0.0);
                cdf.push(acc);
            }
            if acc > 0.0 {
                cdf.iter_mut().for_each(|c| *c /= acc);
            } else {
                // unreachable through sampling, keep it well formed
                cdf.iter_mut()
                    .enumerate()
                    .for_each(|(i, c)| *c = (i + 1) as f64 / w as f64);
            }
            *cdf.last_mut().unwrap() = 1.0;
            conditional.push(cdf);
            row_weight.push(acc * solid);
        }
        let total: f64 = row_weight.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::NoLight);
        }
        let mut acc = 0.0;
        let mut marginal: Vec<f64> = row_weight
            .iter()
            .map(|wgt| {
                acc += wgt;
                acc / total
            })
            .collect();
        *marginal.last_mut().unwrap() = 1.0;

        let row_mean = |y: usize| (0..w).fold(Rgb::BLACK, |a, x| a + image.get(x, y)) / w as f64;
        let pole_average = [row_mean(0), row_mean(h - 1)];
        Ok(Self {
            image,
            rotation,
            marginal,
            conditional,
            total,
            pole_average,
        })
    }

    /// Uniform environment of radiance `value`.
    pub fn constant(value: Rgb) -> Result<Self> {
        Self::build(Arc::new(RadianceImage::filled(2, 1, value)), 0.0)
    }

    pub fn image(&self) -> &RadianceImage {
        &self.image
    }

    pub fn rotation(&self) -> f64 {
        self.rotation
    }

    fn uv(&self, dir: Vec3) -> (f64, f64) {
        let theta = dir.z.clamp(-1.0, 1.0).acos();
        let phi = dir.y.atan2(dir.x) - self.rotation;
        ((phi / (2.0 * PI)).rem_euclid(1.0), theta / PI)
    }

    fn dir_from(&self, u: f64, v: f64) -> Vec3 {
        let phi = 2.0 * PI * u + self.rotation;
        let cos_t = (PI * v).cos();
        let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
        Vec3::new(sin_t * phi.cos(), sin_t * phi.sin(), cos_t)
    }

    /// Bilinear radiance lookup. Within half a texel of a pole the row is
    /// blended towards its average.
    pub fn lookup(&self, dir: Vec3) -> Rgb {
        let (w, h) = (self.image.width(), self.image.height());
        let (u, v) = self.uv(dir);
        let fx = u * w as f64 - 0.5;
        let fy = v * h as f64 - 0.5;
        let row = |y: usize| {
            let x0 = fx.floor();
            let t = fx - x0;
            let i0 = (x0 as i64).rem_euclid(w as i64) as usize;
            let i1 = (i0 + 1) % w;
            lerp(self.image.get(i0, y), self.image.get(i1, y), t)
        };
        if fy < 0.0 {
            let t = (fy + 0.5) / 0.5;
            return lerp(self.pole_average[0], row(0), t);
        }
        if fy > (h - 1) as f64 {
            let t = (fy - (h - 1) as f64) / 0.5;
            return lerp(row(h - 1), self.pole_average[1], t);
        }
        let y0 = fy.floor() as usize;
        let y1 = (y0 + 1).min(h - 1);
        lerp(row(y0), row(y1), fy - y0 as f64)
    }

    /// Radiance of the texel containing `dir`, the quantity the sampling
    /// density is proportional to.
    pub fn texel(&self, dir: Vec3) -> Rgb {
        let (x, y) = self.texel_index(dir);
        self.image.get(x, y)
    }

    fn texel_index(&self, dir: Vec3) -> (usize, usize) {
        let (w, h) = (self.image.width(), self.image.height());
        let (u, v) = self.uv(dir);
        (
            ((u * w as f64) as usize).min(w - 1),
            ((v * h as f64) as usize).min(h - 1),
        )
    }

    /// Solid-angle density with which [`sample`](Self::sample) draws `dir`.
    pub fn pdf(&self, dir: Vec3) -> f64 {
        self.texel(dir).luminance().max(0.0) / self.total
    }

    /// Draw a direction proportionally to luminance from two uniforms.
    pub fn sample(&self, u1: f64, u2: f64) -> EnvSample {
        let (w, h) = (self.image.width(), self.image.height());
        let (y, fy) = pick(&self.marginal, u1);
        let (x, fx) = pick(&self.conditional[y], u2);
        // uniform in solid angle within the texel
        let cos0 = (PI * y as f64 / h as f64).cos();
        let cos1 = (PI * (y + 1) as f64 / h as f64).cos();
        let cos_t = cos0 + (cos1 - cos0) * fy;
        let v = cos_t.clamp(-1.0, 1.0).acos() / PI;
        let u = (x as f64 + fx) / w as f64;
        let dir = self.dir_from(u, v);
        let radiance = self.image.get(x, y);
        EnvSample {
            dir,
            pdf: radiance.luminance() / self.total,
            radiance,
        }
    }
}

/// Returns `a` exactly when the endpoints are equal.
fn lerp(a: Rgb, b: Rgb, t: f64) -> Rgb {
    a + (b - a) * t
}

fn row_cos_span(y: usize, h: usize) -> f64 {
    (PI * y as f64 / h as f64).cos() - (PI * (y + 1) as f64 / h as f64).cos()
}

/// Index of the first CDF entry above `u`, and `u` rescaled into that bin.
fn pick(cdf: &[f64], u: f64) -> (usize, f64) {
    let i = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
    let lo = if i == 0 { 0.0 } else { cdf[i - 1] };
    let width = cdf[i] - lo;
    let f = if width > 0.0 {
        ((u - lo) / width).clamp(0.0, 1.0 - f64::EPSILON)
    } else {
        0.5
    };
    (i, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{SampleRng, UniformSource};

    fn random_map(w: usize, seed: u64) -> RadianceImage {
        let mut rng = SampleRng::new(seed);
        RadianceImage::from_fn(w, w / 2, |_, _| {
            Rgb::new(rng.next_f64() * 3.0, rng.next_f64(), rng.next_f64() * 0.5)
        })
    }

    #[test]
    fn rejects_bad_aspect_and_darkness() {
        assert!(EnvironmentMap::build(Arc::new(RadianceImage::new(3, 2)), 0.0).is_err());
        assert!(matches!(
            EnvironmentMap::build(Arc::new(RadianceImage::new(4, 2)), 0.0),
            Err(Error::NoLight)
        ));
    }

    #[test]
    fn cdfs_are_monotone() {
        let env = EnvironmentMap::build(Arc::new(random_map(32, 1)), 0.4).unwrap();
        assert!(env.marginal.windows(2).all(|p| p[0] <= p[1]));
        assert_eq!(*env.marginal.last().unwrap(), 1.0);
        for row in &env.conditional {
            assert!(row.windows(2).all(|p| p[0] <= p[1]));
            assert_eq!(*row.last().unwrap(), 1.0);
        }
    }

    #[test]
    fn uniform_map_is_uniform_sphere() {
        let env = EnvironmentMap::build(Arc::new(RadianceImage::filled(64, 32, Rgb::splat(0.7))), 1.0).unwrap();
        let mut rng = SampleRng::new(3);
        for _ in 0..10_000 {
            let s = env.sample(rng.next_f64(), rng.next_f64());
            assert!((s.pdf - 1.0 / (4.0 * PI)).abs() < 1e-6);
            assert!((env.pdf(s.dir) - s.pdf).abs() < 1e-9);
            assert!((s.dir.length() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_texel_concentrates_samples() {
        let mut img = RadianceImage::new(16, 8);
        img.set(5, 3, Rgb::splat(2.0));
        let env = EnvironmentMap::build(Arc::new(img), 0.3).unwrap();
        let mut rng = SampleRng::new(4);
        for _ in 0..10_000 {
            let s = env.sample(rng.next_f64(), rng.next_f64());
            assert_eq!(env.texel_index(s.dir), (5, 3));
            assert_eq!(s.radiance, Rgb::splat(2.0));
        }
    }

    #[test]
    fn importance_estimate_matches_quadrature() {
        let img = random_map(64, 7);
        let (w, h) = (img.width(), img.height());
        // direct texel-sum quadrature of the integral of radiance over the sphere
        let mut exact = Rgb::BLACK;
        for y in 0..h {
            let cos0 = (PI * y as f64 / h as f64).cos();
            let cos1 = (PI * (y + 1) as f64 / h as f64).cos();
            let solid = 2.0 * PI / w as f64 * (cos0 - cos1);
            for x in 0..w {
                exact += img.get(x, y) * solid;
            }
        }
        let env = EnvironmentMap::build(Arc::new(img), 2.0).unwrap();
        let mut rng = SampleRng::new(8);
        let n = 100_000;
        let mut est = Rgb::BLACK;
        for _ in 0..n {
            let s = env.sample(rng.next_f64(), rng.next_f64());
            est += s.radiance / s.pdf;
        }
        est = est / n as f64;
        for c in 0..3 {
            assert!(((est[c] - exact[c]) / exact[c]).abs() < 0.01, "{est:?} vs {exact:?}");
        }
    }

    #[test]
    fn constant_lookup() {
        let env = EnvironmentMap::constant(Rgb::new(0.2, 0.4, 0.8)).unwrap();
        let mut rng = SampleRng::new(1);
        for _ in 0..1000 {
            let d = Vec3::new(rng.next_f64() - 0.5, rng.next_f64() - 0.5, rng.next_f64() - 0.5).normalize();
            let v = env.lookup(d);
            for c in 0..3 {
                assert!((v[c] - [0.2, 0.4, 0.8][c]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn rotation_is_periodic() {
        let img = Arc::new(random_map(32, 2));
        let a = EnvironmentMap::build(img.clone(), 0.0).unwrap();
        let b = EnvironmentMap::build(img, 2.0 * PI).unwrap();
        let mut rng = SampleRng::new(6);
        for _ in 0..1000 {
            let d = Vec3::new(rng.next_f64() - 0.5, rng.next_f64() - 0.5, rng.next_f64() - 0.5).normalize();
            let (va, vb) = (a.lookup(d), b.lookup(d));
            assert!((va - vb).max_component().abs() < 1e-6);
        }
    }

    #[test]
    fn rotation_shifts_azimuth() {
        let img = Arc::new(random_map(32, 2));
        let a = EnvironmentMap::build(img.clone(), 0.0).unwrap();
        let b = EnvironmentMap::build(img, 0.5).unwrap();
        let d = Vec3::new(0.3, 0.5, 0.2).normalize();
        let (s, c) = 0.5f64.sin_cos();
        let rotated = Vec3::new(c * d.x - s * d.y, s * d.x + c * d.y, d.z);
        assert!((a.lookup(d) - b.lookup(rotated)).max_component().abs() < 1e-6);
    }

    #[test]
    fn poles_use_row_average() {
        let img = random_map(32, 5);
        let top = (0..32).fold(Rgb::BLACK, |a, x| a + img.get(x, 0)) / 32.0;
        let bottom = (0..32).fold(Rgb::BLACK, |a, x| a + img.get(x, 15)) / 32.0;
        let env = EnvironmentMap::build(Arc::new(img), 0.0).unwrap();
        let up = env.lookup(Vec3::Z);
        let down = env.lookup(-Vec3::Z);
        assert!(up.is_finite() && down.is_finite());
        assert!((up - top).max_component().abs() < 1e-6);
        assert!((down - bottom).max_component().abs() < 1e-6);
    }

    #[test]
    fn lookup_hits_texel_centers() {
        let img = random_map(16, 9);
        let env = EnvironmentMap::build(Arc::new(img.clone()), 0.0).unwrap();
        let (x, y) = (5usize, 3usize);
        let d = env.dir_from((x as f64 + 0.5) / 16.0, (y as f64 + 0.5) / 8.0);
        assert!((env.lookup(d) - img.get(x, y)).max_component().abs() < 1e-6);
    }
}
