//! Self-check of the renderer against closed-form glass optics.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::camera::CameraSpec;
use crate::imagecore::RadianceImage;
use crate::math::{Rgb, Vec3};
use crate::optics::{double_slab_response_analytic, slab_response_analytic, GlassSpec};
use crate::render::{render, render_quintuple, RenderMode, RenderOutput, RenderSettings};
use crate::scene::{EnvironmentMap, GlassPane, SceneConfig, SceneSetup};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleSettings {
    pub spp: u32,
    pub seed: u64,
    /// Side of the square images used by the image-wide checks.
    pub size: usize,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            spp: 1024,
            seed: 0,
            size: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub name: String,
    pub measured: f64,
    pub expected: f64,
    /// Relative error, or the error statistic named by the check.
    pub error: f64,
    /// `None` marks an informational entry.
    pub tolerance: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub settings: OracleSettings,
    pub checks: Vec<OracleCheck>,
}

impl OracleReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Camera `distance` from a pane at the origin, yawed by `incidence_deg`
/// about z so the optical axis meets the pane at that angle. The pane is
/// large enough to fill the view.
pub fn oracle_scene(
    glass: GlassSpec,
    env: EnvironmentMap,
    incidence_deg: f64,
    vertical_fov: f64,
    size: usize,
) -> SceneConfig {
    let a = incidence_deg.to_radians();
    let distance = 2.0;
    SceneConfig {
        setup: SceneSetup::HdrHdr,
        env,
        env_back: None,
        front_billboard: None,
        back_billboard: None,
        pane: GlassPane {
            spec: glass,
            center: Vec3::ZERO,
            normal: Vec3::new(0.0, -1.0, 0.0),
            up: Vec3::Z,
            half_extents: (25.0, 25.0),
        },
        camera: CameraSpec {
            position: Vec3::new(a.sin(), -a.cos(), 0.0) * distance,
            look_at: Vec3::ZERO,
            up: Vec3::Z,
            vertical_fov,
            focal_distance: distance,
            aperture_radius: 0.0,
            width: size,
            height: size,
        },
    }
}

/// A smooth, everywhere-positive sky used where a uniform map would make
/// a check trivial.
pub fn gradient_env() -> EnvironmentMap {
    let img = RadianceImage::from_fn(64, 32, |x, y| {
        let u = (x as f64 + 0.5) / 64.0 * std::f64::consts::TAU;
        let v = (y as f64 + 0.5) / 32.0;
        Rgb::new(0.6 + 0.4 * u.cos(), 0.5 + 0.3 * v, 0.4 + 0.3 * (2.0 * u).sin() * v)
    });
    EnvironmentMap::build(Arc::new(img), 0.0).expect("gradient sky carries light")
}

/// Cosine between the pane normal and the pinhole ray through the center
/// of `pixel`.
pub fn pixel_cosine(scene: &SceneConfig, x: usize, y: usize) -> f64 {
    let c = &scene.camera;
    let ndc_x = 2.0 * (x as f64 + 0.5) / c.width as f64 - 1.0;
    let ndc_y = 1.0 - 2.0 * (y as f64 + 0.5) / c.height as f64;
    (-c.pinhole_direction(ndc_x, ndc_y)).dot(scene.pane.normal)
}

fn check(name: &str, measured: f64, expected: f64, error: f64, tolerance: Option<f64>) -> OracleCheck {
    OracleCheck {
        name: name.into(),
        measured,
        expected,
        error,
        tolerance,
        passed: tolerance.is_none_or(|t| error <= t),
    }
}

fn relative(measured: f64, expected: f64) -> f64 {
    (measured - expected).abs() / expected.abs()
}

fn mean_lum(out: &RenderOutput) -> f64 {
    out.image.mean().luminance()
}

/// Largest per-pixel, per-channel relative deviation from `expected`.
fn max_deviation(img: &RadianceImage, expected: impl Fn(usize, usize) -> Rgb) -> f64 {
    let mut worst = 0.0f64;
    for y in 0..img.height() {
        for x in 0..img.width() {
            let (v, e) = (img.get(x, y), expected(x, y));
            for c in 0..3 {
                worst = worst.max(relative(v[c], e[c]));
            }
        }
    }
    worst
}

/// `mean |a - (b + c)| / mean(a)` over all pixels and channels.
pub fn linearity_error(a: &RadianceImage, b: &RadianceImage, c: &RadianceImage) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for ((x, y), z) in a.data().iter().zip(b.data()).zip(c.data()) {
        num += (*x as f64 - (*y as f64 + *z as f64)).abs();
        den += *x as f64;
    }
    num / den
}

/// Run the furnace, slab, linearity and layer-relation checks.
pub fn verify_oracle(settings: &OracleSettings) -> Result<OracleReport> {
    let fixed = |spp: u32| RenderSettings::fixed(spp, settings.seed);
    let uniform = || EnvironmentMap::constant(Rgb::splat(1.0)).expect("constant sky");
    let clear = GlassSpec::clear(0.005, 1.5);
    let n = settings.size;
    let mut checks = Vec::new();

    for (name, roughness) in [("furnace smooth", 0.0), ("furnace rough 0.3", 0.3)] {
        let glass = GlassSpec {
            roughness,
            ..clear.clone()
        };
        let scene = oracle_scene(glass, uniform(), 20.0, 40.0, n.min(32));
        let out = render(&scene, RenderMode::Full, &fixed(settings.spp))?;
        let err = max_deviation(&out.image, |_, _| Rgb::splat(1.0));
        checks.push(check(name, mean_lum(&out), 1.0, err, Some(0.01)));
        checks.push(check(
            &format!("{name} non-finite"),
            out.stats.non_finite as f64,
            0.0,
            out.stats.non_finite as f64,
            Some(0.0),
        ));
    }

    let scene = oracle_scene(clear.clone(), uniform(), 0.0, 2.0, n);
    let q = render_quintuple(&scene, &fixed(settings.spp))?;
    let err = max_deviation(&q.mirror.image, |_, _| Rgb::splat(1.0));
    checks.push(check("mirror furnace", mean_lum(&q.mirror), 1.0, err, Some(1e-6)));
    let slab = slab_response_analytic(&clear, 1.0)?;
    let (t, r) = (mean_lum(&q.transmission), mean_lum(&q.reflection));
    checks.push(check(
        "slab T",
        t,
        slab.transmittance[0],
        relative(t, slab.transmittance[0]),
        Some(0.005),
    ));
    checks.push(check(
        "slab R",
        r,
        slab.reflectance[0],
        relative(r, slab.reflectance[0]),
        Some(0.005),
    ));

    let double = GlassSpec {
        double_layer: true,
        interlayer_gap: 0.01,
        ..clear.clone()
    };
    let scene = oracle_scene(double.clone(), uniform(), 0.0, 2.0, n);
    let q = render_quintuple(&scene, &fixed(settings.spp))?;
    let two = double_slab_response_analytic(&double, 1.0)?;
    let (t, r) = (mean_lum(&q.transmission), mean_lum(&q.reflection));
    checks.push(check(
        "double T",
        t,
        two.transmittance[0],
        relative(t, two.transmittance[0]),
        Some(0.01),
    ));
    checks.push(check(
        "double R",
        r,
        two.reflectance[0],
        relative(r, two.reflectance[0]),
        Some(0.01),
    ));

    let tinted = GlassSpec {
        thickness: 0.008,
        absorption: [10.0, 25.0, 40.0],
        ..clear.clone()
    };
    let scene = oracle_scene(tinted, gradient_env(), 35.0, 50.0, n.min(32));
    let q = render_quintuple(&scene, &fixed(settings.spp))?;
    let joint = linearity_error(&q.full.image, &q.transmission.image, &q.reflection.image);
    checks.push(check("I = T + R joint", joint, 0.0, joint, Some(0.01)));
    let split = |spp| -> Result<f64> {
        let [i, t, r] = [
            RenderMode::Full,
            RenderMode::TransmissionOnly,
            RenderMode::ReflectionOnly,
        ]
        .map(|m| render(&scene, m, &fixed(spp)));
        Ok(linearity_error(&i?.image, &t?.image, &r?.image))
    };
    let coarse = split(64)?;
    checks.push(check("I = T + R independent, 64 spp", coarse, 0.0, coarse, None));
    if settings.spp > 64 {
        let fine = split(settings.spp)?;
        let name = format!("I = T + R independent, {} spp", settings.spp);
        checks.push(check(&name, fine, 0.0, fine, None));
    }

    // per pixel comparison needs far more samples than the image-wide ones
    let tinted = GlassSpec {
        absorption: [5.0, 15.0, 30.0],
        ..clear.clone()
    };
    let scene = oracle_scene(tinted.clone(), gradient_env(), 30.0, 4.0, 4);
    let q = render_quintuple(&scene, &fixed(settings.spp.saturating_mul(512)))?;
    let response = |x, y| slab_response_analytic(&tinted, pixel_cosine(&scene, x, y)).expect("smooth glass");
    let rho = max_deviation(&q.reflection.image, |x, y| {
        response(x, y).reflectance * q.mirror.image.get(x, y)
    });
    checks.push(check("R = rho MR per pixel", rho, 0.0, rho, Some(0.02)));
    let tau = max_deviation(&q.transmission.image, |x, y| {
        response(x, y).transmittance * q.background.image.get(x, y)
    });
    checks.push(check("T = tau B per pixel", tau, 0.0, tau, Some(0.02)));

    Ok(OracleReport {
        settings: settings.clone(),
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_reports_every_check() {
        let report = verify_oracle(&OracleSettings {
            spp: 16,
            seed: 1,
            size: 4,
        })
        .unwrap();
        assert_eq!(report.checks.len(), 13);
        let get = |name: &str| report.checks.iter().find(|c| c.name == name).unwrap();
        assert!(get("mirror furnace").passed);
        assert!(get("furnace smooth").passed);
        assert!(get("I = T + R joint").passed);
        assert!(get("I = T + R independent, 64 spp").tolerance.is_none());
    }

    #[test]
    fn pixel_cosine_on_axis() {
        let scene = oracle_scene(GlassSpec::clear(0.005, 1.5), gradient_env(), 40.0, 2.0, 1);
        assert!((pixel_cosine(&scene, 0, 0) - 40f64.to_radians().cos()).abs() < 1e-12);
    }
}
