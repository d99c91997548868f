//! Path tracing through the pane stack.
//!
//! Every interface event is a single Fresnel-weighted branch with unit
//! weight; absorption applies per glass segment. A path is classified by
//! the side on which it first leaves the pane: leaving through the
//! camera-facing plane makes it a reflection path, leaving through the
//! rear plane a transmission path. Paths that never touch the glass see
//! the scene directly and count as transmission.

use crate::math::{Ray, Rgb};
use crate::optics::{beer_lambert, sample_rough_dielectric, ScatterKind};
use crate::rng::UniformSource;
use crate::scene::{Faces, GlassPane, Medium, SceneConfig, SurfaceKind};

use super::{RenderMode, RenderSettings};

/// Bounce index from which Russian roulette is applied.
const ROULETTE_START: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathFamily {
    /// Never interacted with the glass.
    Direct,
    Transmitted,
    Reflected,
}

impl PathFamily {
    pub fn is_transmission(self) -> bool {
        matches!(self, PathFamily::Direct | PathFamily::Transmitted)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    pub radiance: Rgb,
    pub family: PathFamily,
    /// Intersection queries issued.
    pub rays: u64,
}

fn layer_ior(pane: &GlassPane, medium: Medium) -> f64 {
    match medium {
        Medium::Layer(l) if GlassPane::is_glass_layer(l) => pane.spec.ior,
        _ => 1.0,
    }
}

/// Trace one path with full glass transport and report its family.
pub fn trace_glass(
    scene: &SceneConfig,
    mut ray: Ray,
    rng: &mut impl UniformSource,
    settings: &RenderSettings,
) -> PathSample {
    let pane = &scene.pane;
    let sigma = pane.spec.sigma();
    let last_plane = pane.plane_count() - 1;
    let mut throughput = Rgb::WHITE;
    let mut medium = Medium::Exterior;
    let mut family = PathFamily::Direct;
    let mut rays = 0;
    for bounce in 0..settings.max_bounces {
        rays += 1;
        let Some(hit) = scene.intersect_from(&ray, medium, Faces::All) else {
            let radiance = match medium {
                Medium::Exterior => throughput * scene.background(ray.dir),
                // grazing ray trapped in a layer
                Medium::Layer(_) => Rgb::BLACK,
            };
            return PathSample { radiance, family, rays };
        };
        let plane = match hit.kind {
            SurfaceKind::Billboard(side) => {
                let emitted = scene.billboard(side).map_or(Rgb::BLACK, |b| b.radiance_at(hit.point));
                return PathSample {
                    radiance: throughput * emitted,
                    family,
                    rays,
                };
            }
            SurfaceKind::Interface { plane } => plane,
        };
        if let Medium::Layer(l) = medium {
            if GlassPane::is_glass_layer(l) {
                throughput *= beer_lambert(sigma, hit.t);
            }
        }
        let eta_ratio = layer_ior(pane, medium) / layer_ior(pane, hit.beyond);
        let s = sample_rough_dielectric(ray.dir, hit.normal, eta_ratio, pane.spec.roughness, rng);
        if s.weight == 0.0 {
            return PathSample {
                radiance: Rgb::BLACK,
                family,
                rays,
            };
        }
        throughput = throughput * s.weight;
        if s.kind == ScatterKind::Transmitted {
            medium = hit.beyond;
        }
        if medium == Medium::Exterior && family == PathFamily::Direct {
            family = if plane == 0 {
                PathFamily::Reflected
            } else {
                debug_assert_eq!(plane, last_plane);
                PathFamily::Transmitted
            };
        }
        ray = Ray::new(hit.point, s.dir);

        if bounce + 1 >= ROULETTE_START {
            let survive = throughput.luminance().clamp(0.0, 1.0);
            if survive < 1.0 {
                if rng.next_f64() >= survive {
                    return PathSample {
                        radiance: Rgb::BLACK,
                        family,
                        rays,
                    };
                }
                throughput = throughput * (1.0 / survive);
            }
        }
    }
    PathSample {
        radiance: Rgb::BLACK,
        family,
        rays,
    }
}

/// Background (no glass) and mirror paths.
fn trace_simple(scene: &SceneConfig, mut ray: Ray, faces: Faces, settings: &RenderSettings) -> PathSample {
    let mut rays = 0;
    for _ in 0..settings.max_bounces {
        rays += 1;
        match scene.intersect_from(&ray, Medium::Exterior, faces) {
            None => {
                return PathSample {
                    radiance: scene.background(ray.dir),
                    family: PathFamily::Direct,
                    rays,
                }
            }
            Some(hit) => match hit.kind {
                SurfaceKind::Billboard(side) => {
                    let emitted = scene.billboard(side).map_or(Rgb::BLACK, |b| b.radiance_at(hit.point));
                    return PathSample {
                        radiance: emitted,
                        family: PathFamily::Direct,
                        rays,
                    };
                }
                SurfaceKind::Interface { .. } => {
                    ray = Ray::new(hit.point, (-ray.dir).reflect(hit.normal));
                }
            },
        }
    }
    PathSample {
        radiance: Rgb::BLACK,
        family: PathFamily::Direct,
        rays,
    }
}

/// One radiance sample of `mode` along a camera ray.
pub fn trace_path(
    scene: &SceneConfig,
    ray: Ray,
    mode: RenderMode,
    rng: &mut impl UniformSource,
    settings: &RenderSettings,
) -> PathSample {
    match mode {
        RenderMode::Background => trace_simple(scene, ray, Faces::None, settings),
        RenderMode::Mirror => trace_simple(scene, ray, Faces::FrontOnly, settings),
        RenderMode::Full | RenderMode::TransmissionOnly | RenderMode::ReflectionOnly => {
            let mut s = trace_glass(scene, ray, rng, settings);
            let keep = match mode {
                RenderMode::TransmissionOnly => s.family.is_transmission(),
                RenderMode::ReflectionOnly => s.family == PathFamily::Reflected,
                _ => true,
            };
            if !keep {
                s.radiance = Rgb::BLACK;
            }
            s
        }
    }
}
