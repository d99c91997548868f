//! Scattering at smooth and rough dielectric interfaces.
//!
//! Rough interfaces use a GGX microsurface with the Smith uncorrelated
//! height model. Light performs a random walk on the microsurface: each
//! event samples a visible GGX normal and chooses reflection or refraction
//! with the microfacet Fresnel probability; the walk ends when the ray
//! escapes above or below the surface. The first event alone is the
//! classic single-scattering GGX dielectric; the remaining events return
//! the energy that model drops at higher roughness, so every sample carries
//! weight 1.

use crate::math::{Frame, Vec3};
use crate::rng::UniformSource;

use super::fresnel_reflectance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScatterKind {
    Reflected,
    Transmitted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterSample {
    /// Outgoing propagation direction.
    pub dir: Vec3,
    pub weight: f64,
    pub kind: ScatterKind,
}

/// Upper bound on microsurface events before a walk is abandoned.
const MAX_WALK_EVENTS: usize = 256;

/// Perfectly smooth interface: reflect with probability equal to the
/// Fresnel reflectance, otherwise refract. Weight is always 1.
pub fn sample_smooth_dielectric(
    dir_in: Vec3,
    normal: Vec3,
    eta_ratio: f64,
    rng: &mut impl UniformSource,
) -> ScatterSample {
    let n = if dir_in.dot(normal) > 0.0 { -normal } else { normal };
    let cos_i = (-dir_in.dot(n)).clamp(0.0, 1.0);
    let f = fresnel_reflectance(cos_i, eta_ratio, 1.0);
    if rng.next_f64() < f {
        return ScatterSample {
            dir: (-dir_in).reflect(n),
            weight: 1.0,
            kind: ScatterKind::Reflected,
        };
    }
    match super::refract(dir_in, n, eta_ratio) {
        Some(dir) => ScatterSample {
            dir,
            weight: 1.0,
            kind: ScatterKind::Transmitted,
        },
        // f == 1 under TIR, unreachable except through rounding
        None => ScatterSample {
            dir: (-dir_in).reflect(n),
            weight: 1.0,
            kind: ScatterKind::Reflected,
        },
    }
}

/// Sample a rough dielectric interface with GGX roughness `alpha`.
///
/// `dir_in` is the incoming propagation direction, `normal` the macro
/// surface normal (either orientation) and `eta_ratio` the ratio
/// `eta_incident / eta_transmitted`. Walks that fail to terminate return
/// zero weight.
pub fn sample_rough_dielectric(
    dir_in: Vec3,
    normal: Vec3,
    eta_ratio: f64,
    alpha: f64,
    rng: &mut impl UniformSource,
) -> ScatterSample {
    if alpha <= 0.0 {
        return sample_smooth_dielectric(dir_in, normal, eta_ratio, rng);
    }
    let n = if dir_in.dot(normal) > 0.0 { -normal } else { normal };
    let frame = Frame::from_normal(n);
    let wi = frame.to_local(-dir_in);
    let walk = Microsurface {
        alpha,
        eta: 1.0 / eta_ratio,
    };
    match walk.sample(wi, rng) {
        Some(wo) => ScatterSample {
            dir: frame.to_world(wo).normalize(),
            weight: 1.0,
            kind: if wo.z > 0.0 {
                ScatterKind::Reflected
            } else {
                ScatterKind::Transmitted
            },
        },
        None => ScatterSample {
            dir: dir_in,
            weight: 0.0,
            kind: ScatterKind::Transmitted,
        },
    }
}

/// Isotropic GGX smith lambda, extended below the horizon by
/// `lambda(-w) = -1 - lambda(w)`.
fn lambda(w: Vec3, alpha: f64) -> f64 {
    if w.z > 0.9999 {
        return 0.0;
    }
    if w.z < -0.9999 {
        return -1.0;
    }
    let sin_t = (1.0 - w.z * w.z).max(0.0).sqrt();
    let a = w.z / (alpha * sin_t);
    0.5 * (-1.0 + a.signum() * (1.0 + 1.0 / (a * a)).sqrt())
}

/// Visible normal of the GGX distribution seen from `wi` (Dupuy and
/// Benyoub spherical cap sampling). Valid for any `wi` not pointing
/// straight down.
fn sample_visible_normal(wi: Vec3, alpha: f64, u1: f64, u2: f64) -> Vec3 {
    let wi_std = Vec3::new(alpha * wi.x, alpha * wi.y, wi.z).normalize();
    let phi = 2.0 * std::f64::consts::PI * u1;
    let z = (1.0 - u2) * (1.0 + wi_std.z) - wi_std.z;
    let sin_t = (1.0 - z * z).clamp(0.0, 1.0).sqrt();
    let c = Vec3::new(sin_t * phi.cos(), sin_t * phi.sin(), z);
    let h = c + wi_std;
    Vec3::new(alpha * h.x, alpha * h.y, h.z).normalize()
}

// Uniform microsurface height distribution on [-1, 1].
#[inline]
fn height_cdf(h: f64) -> f64 {
    ((h + 1.0) * 0.5).clamp(0.0, 1.0)
}

#[inline]
fn height_inv_cdf(u: f64) -> f64 {
    (2.0 * u - 1.0).clamp(-1.0, 1.0)
}

struct Microsurface {
    alpha: f64,
    /// Index below the microsurface over the index above it.
    eta: f64,
}

impl Microsurface {
    /// Height of the next intersection along `w` from height `h`, or
    /// `None` if the ray leaves the surface.
    fn next_height(&self, w: Vec3, h: f64, u: f64) -> Option<f64> {
        if w.z > 0.9999 {
            return None;
        }
        if w.z < -0.9999 {
            return Some(height_inv_cdf(u * height_cdf(h)));
        }
        if w.z.abs() < 1e-4 {
            return Some(h);
        }
        let lam = lambda(w, self.alpha);
        let g1 = if w.z > 0.0 { height_cdf(h).powf(lam) } else { 0.0 };
        if u > 1.0 - g1 {
            return None;
        }
        Some(height_inv_cdf(height_cdf(h) / (1.0 - u).powf(1.0 / lam)))
    }

    /// One microfacet event for a ray arriving from direction `wi`
    /// (pointing away from the surface). Returns the outgoing direction
    /// and whether it ends above the microsurface.
    fn scatter(&self, wi: Vec3, above: bool, rng: &mut impl UniformSource) -> (Vec3, bool) {
        let (u1, u2) = rng.next_2d();
        let eta = if above { self.eta } else { 1.0 / self.eta };
        let wm = if above {
            sample_visible_normal(wi, self.alpha, u1, u2)
        } else {
            -sample_visible_normal(-wi, self.alpha, u1, u2)
        };
        let cos_i = wi.dot(wm);
        let f = fresnel_reflectance(cos_i, 1.0, eta);
        if rng.next_f64() < f {
            return (wm * (2.0 * cos_i) - wi, above);
        }
        let cos_t2 = 1.0 - (1.0 - cos_i * cos_i) / (eta * eta);
        let cos_t = -cos_t2.max(0.0).sqrt();
        let wo = wm * (cos_i / eta + cos_t) - wi / eta;
        (wo.normalize(), !above)
    }

    fn sample(&self, wi: Vec3, rng: &mut impl UniformSource) -> Option<Vec3> {
        let mut wr = -wi;
        let mut height = 1.0 + height_inv_cdf(0.999);
        let mut above = true;
        for _ in 0..MAX_WALK_EVENTS {
            let u = rng.next_f64();
            let next = if above {
                self.next_height(wr, height, u)
            } else {
                self.next_height(-wr, -height, u).map(|h| -h)
            };
            match next {
                None => return Some(wr),
                Some(h) => height = h,
            }
            let (wo, now_above) = self.scatter(-wr, above, rng);
            wr = wo;
            above = now_above;
            if !(height.is_finite() && wr.is_finite()) {
                return None;
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::refract;
    use crate::rng::SampleRng;

    fn incoming(deg: f64) -> Vec3 {
        let t = deg.to_radians();
        Vec3::new(t.sin(), 0.0, -t.cos())
    }

    fn angle_deg(a: Vec3, b: Vec3) -> f64 {
        a.dot(b).clamp(-1.0, 1.0).acos().to_degrees()
    }

    #[test]
    fn lambda_extension_below_horizon() {
        let w = Vec3::new(0.6, 0.0, 0.8);
        let l = lambda(w, 0.3);
        assert!(l > 0.0);
        assert!((lambda(-w, 0.3) + 1.0 + l).abs() < 1e-12);
        assert_eq!(lambda(Vec3::Z, 0.3), 0.0);
    }

    #[test]
    fn visible_normals_face_the_viewer() {
        let mut rng = SampleRng::new(4);
        for deg in [0.0, 30.0, 70.0, 89.0, 120.0] {
            let t = f64::to_radians(deg);
            let wi = Vec3::new(t.sin(), 0.0, t.cos());
            for _ in 0..2000 {
                let (u1, u2) = rng.next_2d();
                let m = sample_visible_normal(wi, 0.5, u1, u2);
                assert!(m.z > 0.0);
                assert!(wi.dot(m) >= -1e-9, "deg {deg}");
            }
        }
    }

    #[test]
    fn near_smooth_matches_specular_directions() {
        let mut rng = SampleRng::new(11);
        let d = incoming(30.0);
        let refl = (-d).reflect(Vec3::Z);
        let refr = refract(d, Vec3::Z, 1.0 / 1.5).unwrap();
        let n = 10_000;
        let close = (0..n)
            .filter(|_| {
                let s = sample_rough_dielectric(d, Vec3::Z, 1.0 / 1.5, 1e-4, &mut rng);
                let target = match s.kind {
                    ScatterKind::Reflected => refl,
                    ScatterKind::Transmitted => refr,
                };
                angle_deg(s.dir, target) < 0.5
            })
            .count();
        assert!(close as f64 >= 0.99 * n as f64, "{close}");
    }

    #[test]
    fn near_smooth_reflection_rate_is_fresnel() {
        let mut rng = SampleRng::new(5);
        let d = incoming(60.0);
        let n = 200_000;
        let refl = (0..n)
            .filter(|_| sample_rough_dielectric(d, Vec3::Z, 1.0 / 1.5, 1e-4, &mut rng).kind == ScatterKind::Reflected)
            .count() as f64
            / n as f64;
        let f = fresnel_reflectance(60f64.to_radians().cos(), 1.0, 1.5);
        let sigma = (f * (1.0 - f) / n as f64).sqrt();
        assert!((refl - f).abs() < 5.0 * sigma, "{refl} vs {f}");
    }

    #[test]
    fn index_matched_interface_passes_straight_through() {
        let mut rng = SampleRng::new(2);
        for alpha in [0.05, 0.3, 1.0] {
            let d = incoming(40.0);
            let mut total = 0.0;
            for _ in 0..10_000 {
                let s = sample_rough_dielectric(d, Vec3::Z, 1.0, alpha, &mut rng);
                assert_eq!(s.kind, ScatterKind::Transmitted);
                assert!((s.dir - d).length() < 1e-9, "{:?}", s.dir - d);
                total += s.weight;
            }
            assert!((total / 10_000.0 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rough_furnace_weight() {
        let mut rng = SampleRng::new(17);
        for (deg, eta_ratio) in [(0.0, 1.0 / 1.5), (45.0, 1.0 / 1.5), (20.0, 1.5), (60.0, 1.5)] {
            let d = incoming(deg);
            let n = 100_000;
            let mean = (0..n)
                .map(|_| sample_rough_dielectric(d, Vec3::Z, eta_ratio, 0.3, &mut rng).weight)
                .sum::<f64>()
                / n as f64;
            assert!((0.98..=1.0).contains(&mean), "deg {deg}: {mean}");
        }
    }

    #[test]
    fn outgoing_side_matches_tag() {
        let mut rng = SampleRng::new(8);
        for deg in [10.0, 50.0, 80.0] {
            for eta_ratio in [1.0 / 1.65, 1.45] {
                let d = incoming(deg);
                for _ in 0..5_000 {
                    let s = sample_rough_dielectric(d, Vec3::Z, eta_ratio, 0.3, &mut rng);
                    if s.weight == 0.0 {
                        continue;
                    }
                    assert!((s.dir.length() - 1.0).abs() < 1e-9);
                    match s.kind {
                        ScatterKind::Reflected => assert!(s.dir.z > 0.0),
                        ScatterKind::Transmitted => assert!(s.dir.z < 0.0),
                    }
                }
            }
        }
    }

    #[test]
    fn smooth_sampling_is_fresnel_weighted() {
        let mut rng = SampleRng::new(3);
        let d = -Vec3::Z;
        let n = 100_000;
        let refl = (0..n)
            .filter(|_| sample_smooth_dielectric(d, Vec3::Z, 1.0 / 1.5, &mut rng).kind == ScatterKind::Reflected)
            .count() as f64
            / n as f64;
        assert!((refl - 0.04).abs() < 0.003);
        // total internal reflection from inside
        let t = 50f64.to_radians();
        let inside = Vec3::new(t.sin(), 0.0, t.cos());
        let s = sample_smooth_dielectric(inside, Vec3::Z, 1.5, &mut rng);
        assert_eq!(s.kind, ScatterKind::Reflected);
        assert!(s.dir.z < 0.0);
    }
}
