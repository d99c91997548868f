//! Adaptive, deterministic, tile-parallel rendering of the five layers.

mod integrator;

pub use integrator::{trace_glass, trace_path, PathFamily, PathSample};

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::imagecore::RadianceImage;
use crate::math::Rgb;
use crate::rng::SampleRng;
use crate::rng::UniformSource;
use crate::scene::SceneConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RenderMode {
    #[serde(rename = "I")]
    Full,
    #[serde(rename = "T")]
    TransmissionOnly,
    #[serde(rename = "B")]
    Background,
    #[serde(rename = "R")]
    ReflectionOnly,
    #[serde(rename = "MR")]
    Mirror,
}

impl RenderMode {
    pub const ALL: [RenderMode; 5] = [
        RenderMode::Full,
        RenderMode::TransmissionOnly,
        RenderMode::Background,
        RenderMode::ReflectionOnly,
        RenderMode::Mirror,
    ];

    pub fn label(self) -> &'static str {
        match self {
            RenderMode::Full => "I",
            RenderMode::TransmissionOnly => "T",
            RenderMode::Background => "B",
            RenderMode::ReflectionOnly => "R",
            RenderMode::Mirror => "MR",
        }
    }

    /// Random stream id of standalone renders in this mode.
    fn stream(self) -> u64 {
        match self {
            RenderMode::Full => 1,
            RenderMode::TransmissionOnly => 2,
            RenderMode::Background => 3,
            RenderMode::ReflectionOnly => 4,
            RenderMode::Mirror => 5,
        }
    }
}

impl fmt::Display for RenderMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for RenderMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        RenderMode::ALL
            .into_iter()
            .find(|m| m.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown render mode `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderSettings {
    pub max_bounces: u32,
    pub base_spp: u32,
    pub max_spp: u32,
    /// Target 95% confidence half-width relative to `luminance + 0.01`.
    pub adaptive_threshold: f64,
    pub seed: u64,
    pub tile_size: usize,
    /// Worker threads; 0 uses the global pool.
    pub threads: usize,
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self {
            max_bounces: 32,
            base_spp: 32,
            max_spp: 256,
            adaptive_threshold: 0.05,
            seed: 0,
            tile_size: 16,
            threads: 0,
        }
    }
}

impl RenderSettings {
    /// Fixed sample count, adaptivity off.
    pub fn fixed(spp: u32, seed: u64) -> Self {
        Self {
            base_spp: spp,
            max_spp: spp,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_bounces < 4 {
            return Err(Error::InvalidArgument("max_bounces must be >= 4".into()));
        }
        if self.base_spp < 16 || self.max_spp < self.base_spp {
            return Err(Error::InvalidArgument(format!(
                "need 16 <= base_spp <= max_spp, got {} and {}",
                self.base_spp, self.max_spp
            )));
        }
        if !(self.adaptive_threshold > 0.0) {
            return Err(Error::InvalidArgument("adaptive threshold must be > 0".into()));
        }
        if self.tile_size == 0 {
            return Err(Error::InvalidArgument("tile size must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RenderStats {
    pub rays: u64,
    pub wall_seconds: f64,
    /// Samples replaced by 0 because they were NaN or infinite.
    pub non_finite: u64,
    pub mean_spp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    pub image: RadianceImage,
    /// Samples taken per pixel, row major.
    pub spp_map: Vec<u32>,
    pub stats: RenderStats,
}

/// The five layers of one scene.
#[derive(Debug, Clone, PartialEq)]
pub struct Quintuple {
    pub full: RenderOutput,
    pub transmission: RenderOutput,
    pub background: RenderOutput,
    pub reflection: RenderOutput,
    pub mirror: RenderOutput,
}

impl Quintuple {
    pub fn get(&self, mode: RenderMode) -> &RenderOutput {
        match mode {
            RenderMode::Full => &self.full,
            RenderMode::TransmissionOnly => &self.transmission,
            RenderMode::Background => &self.background,
            RenderMode::ReflectionOnly => &self.reflection,
            RenderMode::Mirror => &self.mirror,
        }
    }
}

/// Welford accumulator of the luminance driving adaptive sampling.
#[derive(Default)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn converged(&self, threshold: f64) -> bool {
        if self.n < 2 {
            return false;
        }
        let var = self.m2 / (self.n - 1) as f64;
        1.96 * (var / self.n as f64).sqrt() <= threshold * (self.mean + 0.01)
    }
}

struct PixelResult<const N: usize> {
    values: [Rgb; N],
    spp: u32,
    rays: u64,
    non_finite: u64,
}

/// Estimate `N` quantities at one pixel; the first drives adaptivity.
fn render_pixel<const N: usize>(
    scene: &SceneConfig,
    settings: &RenderSettings,
    stream: u64,
    x: usize,
    y: usize,
    kernel: &(impl Fn(&mut SampleRng, crate::math::Ray) -> ([Rgb; N], u64) + Sync),
) -> PixelResult<N> {
    let cam = &scene.camera;
    let pixel = (y * cam.width + x) as u64;
    let mut sums = [Rgb::BLACK; N];
    let mut stats = Welford::default();
    let mut rays = 0;
    let mut non_finite = 0;
    let mut spp = 0u32;
    let mut target = settings.base_spp;
    loop {
        while spp < target {
            let mut rng = SampleRng::for_sample(settings.seed, stream, pixel, spp as u64);
            let lens = rng.next_2d();
            let jitter = rng.next_2d();
            let ray = cam.generate_ray((x, y), lens, jitter);
            let (mut vals, r) = kernel(&mut rng, ray);
            rays += r;
            for v in vals.iter_mut() {
                if !v.is_finite() {
                    *v = Rgb::BLACK;
                    non_finite += 1;
                }
            }
            for (s, v) in sums.iter_mut().zip(vals) {
                *s += v;
            }
            stats.push(vals[0].luminance());
            spp += 1;
        }
        if spp >= settings.max_spp || stats.converged(settings.adaptive_threshold) {
            break;
        }
        target = (spp + settings.base_spp).min(settings.max_spp);
    }
    PixelResult {
        values: sums.map(|s| s / spp as f64),
        spp,
        rays,
        non_finite,
    }
}

fn run_parallel<const N: usize>(
    scene: &SceneConfig,
    settings: &RenderSettings,
    stream: u64,
    kernel: impl Fn(&mut SampleRng, crate::math::Ray) -> ([Rgb; N], u64) + Sync,
) -> Result<[RenderOutput; N]> {
    settings.validate()?;
    scene.validate()?;
    let start = Instant::now();
    let (w, h) = (scene.camera.width, scene.camera.height);
    let ts = settings.tile_size;
    let tiles: Vec<(usize, usize)> = (0..h.div_ceil(ts))
        .flat_map(|ty| (0..w.div_ceil(ts)).map(move |tx| (tx * ts, ty * ts)))
        .collect();
    let work = || {
        tiles
            .par_iter()
            .map(|&(x0, y0)| {
                let mut out = Vec::new();
                for y in y0..(y0 + ts).min(h) {
                    for x in x0..(x0 + ts).min(w) {
                        out.push((x, y, render_pixel(scene, settings, stream, x, y, &kernel)));
                    }
                }
                out
            })
            .collect::<Vec<_>>()
    };
    let results = if settings.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(settings.threads)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(work)
    } else {
        work()
    };

    let mut images: [RadianceImage; N] = std::array::from_fn(|_| RadianceImage::new(w, h));
    let mut spp_map = vec![0u32; w * h];
    let mut rays = 0;
    let mut non_finite = 0;
    for (x, y, px) in results.into_iter().flatten() {
        for (img, v) in images.iter_mut().zip(px.values) {
            img.set(x, y, v);
        }
        spp_map[y * w + x] = px.spp;
        rays += px.rays;
        non_finite += px.non_finite;
    }
    let stats = RenderStats {
        rays,
        wall_seconds: start.elapsed().as_secs_f64(),
        non_finite,
        mean_spp: spp_map.iter().map(|&s| s as f64).sum::<f64>() / (w * h) as f64,
    };
    if non_finite > 0 {
        log::warn!("{non_finite} non-finite samples replaced by 0");
    }
    Ok(images.map(|image| RenderOutput {
        image,
        spp_map: spp_map.clone(),
        stats: stats.clone(),
    }))
}

/// Render one layer. Pixels use random streams keyed by seed, mode, pixel
/// and sample index, so the image does not depend on the thread count.
pub fn render(scene: &SceneConfig, mode: RenderMode, settings: &RenderSettings) -> Result<RenderOutput> {
    let [out] = run_parallel(scene, settings, mode.stream(), |rng, ray| {
        let s = trace_path(scene, ray, mode, rng, settings);
        ([s.radiance], s.rays)
    })?;
    Ok(out)
}

/// Render all five layers.
///
/// `I`, `T` and `R` come from one pass: each path is traced once and added
/// to `I` and to whichever of `T` or `R` its family selects, so
/// `I = T + R` holds sample by sample. `I` drives adaptive sampling and
/// uses the same stream as a standalone `I` render, which it therefore
/// reproduces exactly.
pub fn render_quintuple(scene: &SceneConfig, settings: &RenderSettings) -> Result<Quintuple> {
    let [full, transmission, reflection] = run_parallel(scene, settings, RenderMode::Full.stream(), |rng, ray| {
        let s = trace_glass(scene, ray, rng, settings);
        let (t, r) = if s.family.is_transmission() {
            (s.radiance, Rgb::BLACK)
        } else {
            (Rgb::BLACK, s.radiance)
        };
        ([s.radiance, t, r], s.rays)
    })?;
    let background = render(scene, RenderMode::Background, settings)?;
    let mirror = render(scene, RenderMode::Mirror, settings)?;
    Ok(Quintuple {
        full,
        transmission,
        background,
        reflection,
        mirror,
    })
}
