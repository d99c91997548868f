//! Deterministic scene construction from sampled parameters.
//!
//! World space is z-up with the pane centered at the origin, facing -y.
//! The camera looks at the pane center from distance `distance` after a
//! yaw about z and a pitch towards z.

use crate::camera::CameraSpec;
use crate::dataset::SampledParameters;
use crate::math::Vec3;
use crate::{Error, Result};

use super::{AssetRegistry, Billboard, EnvironmentMap, GlassPane, SceneConfig, SceneSetup};

/// Billboards never exceed this half extent in meters.
const MAX_BILLBOARD_EXTENT: f64 = 10.0;
/// Pane footprints are capped at this half extent in meters.
const MAX_PANE_EXTENT: f64 = 25.0;
const BILLBOARD_MARGIN: f64 = 1.1;
/// Height of the simulated sensor in meters (full-frame).
const SENSOR_HEIGHT: f64 = 0.024;

/// Lens focal length in meters giving `vertical_fov` degrees on the sensor.
pub fn sensor_focal_length(vertical_fov: f64) -> f64 {
    0.5 * SENSOR_HEIGHT / (0.5 * vertical_fov.to_radians()).tan()
}

pub fn make_scene(params: &SampledParameters, assets: &AssetRegistry) -> Result<SceneConfig> {
    let env = EnvironmentMap::build(assets.env(&params.env_id)?, params.env_rotation)?;
    let env_back = match &params.env_back_id {
        Some(id) => Some(EnvironmentMap::build(assets.env(id)?, params.env_back_rotation)?),
        None => None,
    };

    let cam = &params.camera;
    let (yaw, pitch) = (cam.yaw_deg.to_radians(), cam.pitch_deg.to_radians());
    let position = Vec3::new(yaw.sin() * pitch.cos(), -yaw.cos() * pitch.cos(), pitch.sin()) * cam.distance;
    let camera = CameraSpec {
        position,
        look_at: Vec3::ZERO,
        up: Vec3::Z,
        vertical_fov: cam.vertical_fov,
        focal_distance: cam.focal_distance,
        aperture_radius: sensor_focal_length(cam.vertical_fov) / (2.0 * cam.f_number),
        width: cam.width,
        height: cam.height,
    };
    camera.validate()?;

    let normal = Vec3::new(0.0, -1.0, 0.0);
    let mut pane = GlassPane {
        spec: params.glass.clone(),
        center: Vec3::ZERO,
        normal,
        up: Vec3::Z,
        half_extents: (1.0, 1.0),
    };
    let (pu, pv) = pane.axes();
    let (fx, fz) = footprint(
        &camera,
        Vec3::ZERO,
        normal,
        pu,
        pv,
        MAX_PANE_EXTENT / params.pane_coverage,
    );
    pane.half_extents = (
        (fx * params.pane_coverage).min(MAX_PANE_EXTENT),
        (fz * params.pane_coverage).min(MAX_PANE_EXTENT),
    );

    let ldr = || -> Result<_> {
        let id = params
            .ldr_id
            .as_deref()
            .ok_or_else(|| Error::MissingAsset("setup needs an ldr asset".into()))?;
        assets.ldr(id)
    };
    let forward = camera.forward();
    let (front_billboard, back_billboard) = match params.setup {
        SceneSetup::HdrHdr => (None, None),
        SceneSetup::HdrLdr => {
            let center = position - forward * params.billboard_distance;
            let extents = mirrored_extent(&camera, normal, center, forward);
            let b = Billboard {
                image: ldr()?,
                center,
                normal: forward,
                up: Vec3::Z,
                half_extents: extents,
                emission_scale: params.emission_scale,
            };
            (Some(b), None)
        }
        SceneSetup::LdrHdr => {
            let depth = pane.plane_offsets().last().copied().unwrap_or(0.0);
            let plane_point = normal * (depth - params.billboard_distance);
            // center where the optical axis meets the billboard plane
            let t = (plane_point - position).dot(normal) / forward.dot(normal);
            let center = position + forward * t;
            let (bu, bv) = pane.axes();
            let (ex, ez) = footprint(&camera, center, normal, bu, bv, MAX_BILLBOARD_EXTENT);
            let b = Billboard {
                image: ldr()?,
                center,
                normal,
                up: Vec3::Z,
                half_extents: (
                    (ex * BILLBOARD_MARGIN).min(MAX_BILLBOARD_EXTENT),
                    (ez * BILLBOARD_MARGIN).min(MAX_BILLBOARD_EXTENT),
                ),
                emission_scale: params.emission_scale,
            };
            (None, Some(b))
        }
    };

    let scene = SceneConfig {
        setup: params.setup,
        env,
        env_back,
        front_billboard,
        back_billboard,
        pane,
        camera,
    };
    scene.validate()?;
    Ok(scene)
}

/// Film positions used to bound the view frustum.
fn frustum_grid() -> impl Iterator<Item = (f64, f64)> {
    (0..5).flat_map(|i| (0..5).map(move |j| (-1.0 + 0.5 * i as f64, -1.0 + 0.5 * j as f64)))
}

/// Half extents, along `u` and `v` about `center`, of the pinhole frustum
/// on the plane through `center` with normal `n`. Rays that miss the plane
/// count as `cap`.
fn footprint(camera: &CameraSpec, center: Vec3, n: Vec3, u: Vec3, v: Vec3, cap: f64) -> (f64, f64) {
    let (mut ex, mut ey) = (0.0f64, 0.0f64);
    for (x, y) in frustum_grid() {
        let d = camera.pinhole_direction(x, y);
        let dn = d.dot(n);
        let t = (center - camera.position).dot(n) / dn;
        if !(dn != 0.0 && t > 0.0) {
            return (cap, cap);
        }
        let p = camera.position + d * t - center;
        ex = ex.max(p.dot(u).abs());
        ey = ey.max(p.dot(v).abs());
    }
    (ex.min(cap), ey.min(cap))
}

/// Half extents of a billboard behind the camera, facing `forward`, that
/// cover the camera frustum mirrored in the pane plane.
fn mirrored_extent(camera: &CameraSpec, pane_normal: Vec3, center: Vec3, forward: Vec3) -> (f64, f64) {
    let v = (Vec3::Z - forward * Vec3::Z.dot(forward)).normalize();
    let u = v.cross(forward);
    let (mut ex, mut ey) = (0.0f64, 0.0f64);
    for (x, y) in frustum_grid() {
        let d = camera.pinhole_direction(x, y);
        let dn = d.dot(pane_normal);
        if dn >= 0.0 {
            return (MAX_BILLBOARD_EXTENT, MAX_BILLBOARD_EXTENT);
        }
        let hit = camera.position + d * (camera.position.dot(pane_normal) / -dn);
        let r = d - pane_normal * (2.0 * dn);
        let rf = r.dot(forward);
        let t = (center - hit).dot(forward) / rf;
        if !(rf < 0.0 && t > 0.0) {
            return (MAX_BILLBOARD_EXTENT, MAX_BILLBOARD_EXTENT);
        }
        let p = hit + r * t - center;
        ex = ex.max(p.dot(u).abs());
        ey = ey.max(p.dot(v).abs());
    }
    (
        (ex * BILLBOARD_MARGIN).min(MAX_BILLBOARD_EXTENT),
        (ey * BILLBOARD_MARGIN).min(MAX_BILLBOARD_EXTENT),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{sample_parameters, SamplerConfig};
    use crate::imagecore::{LdrImage, RadianceImage};
    use crate::math::{Ray, Rgb};
    use crate::scene::{BillboardSide, SurfaceKind};

    fn registry() -> AssetRegistry {
        let mut reg = AssetRegistry::new();
        reg.insert_env("sky", RadianceImage::filled(8, 4, Rgb::splat(1.0)));
        reg.insert_env("room", RadianceImage::filled(8, 4, Rgb::splat(0.5)));
        reg.insert_ldr("poster", LdrImage::filled(4, 4, [200, 50, 50]));
        reg
    }

    fn params_for(setup: SceneSetup, seed: u64) -> SampledParameters {
        let cfg = SamplerConfig {
            setup_weights: match setup {
                SceneSetup::HdrHdr => [1.0, 0.0, 0.0],
                SceneSetup::HdrLdr => [0.0, 1.0, 0.0],
                SceneSetup::LdrHdr => [0.0, 0.0, 1.0],
            },
            width: 32,
            height: 24,
            ..SamplerConfig::default()
        };
        sample_parameters(seed, &registry(), &cfg).unwrap()
    }

    #[test]
    fn hdr_hdr_has_no_billboards() {
        for seed in 0..20 {
            let s = make_scene(&params_for(SceneSetup::HdrHdr, seed), &registry()).unwrap();
            assert!(s.front_billboard.is_none() && s.back_billboard.is_none());
        }
    }

    #[test]
    fn front_billboard_sits_on_backward_axis() {
        for seed in 0..20 {
            let p = params_for(SceneSetup::HdrLdr, seed);
            let s = make_scene(&p, &registry()).unwrap();
            let b = s.front_billboard.as_ref().unwrap();
            let back = (b.center - s.camera.position).normalize();
            assert!((back + s.camera.forward()).length() < 1e-9);
            assert!(((b.center - s.camera.position).length() - p.billboard_distance).abs() < 1e-9);
        }
    }

    #[test]
    fn back_billboard_is_seen_through_the_pane() {
        for seed in 0..20 {
            let s = make_scene(&params_for(SceneSetup::LdrHdr, seed), &registry()).unwrap();
            let b = s.back_billboard.as_ref().unwrap();
            assert!(s.pane.height(b.center) < -s.pane.spec.thickness);
            // the optical axis, ignoring refraction, lands on the billboard
            let axis = Ray::new(s.camera.position, s.camera.forward());
            let t = b.intersect(axis.origin, axis.dir).unwrap();
            assert!(t > s.camera.position.length());
        }
    }

    #[test]
    fn front_billboard_is_visible_in_mirror() {
        let p = params_for(SceneSetup::HdrLdr, 3);
        let s = make_scene(&p, &registry()).unwrap();
        let d = s.camera.forward();
        let hit = s.intersect(&Ray::new(s.camera.position, d)).unwrap();
        let r = Ray::new(hit.point, (-d).reflect(hit.normal));
        let next = s.intersect(&r);
        let incidence = (-d).dot(s.pane.normal).acos().to_degrees();
        if incidence < 40.0 {
            assert_eq!(next.unwrap().kind, SurfaceKind::Billboard(BillboardSide::Front));
        }
    }

    #[test]
    fn construction_is_deterministic() {
        for setup in [SceneSetup::HdrHdr, SceneSetup::HdrLdr, SceneSetup::LdrHdr] {
            let p = params_for(setup, 42);
            assert_eq!(
                make_scene(&p, &registry()).unwrap(),
                make_scene(&p, &registry()).unwrap()
            );
        }
    }

    #[test]
    fn missing_assets_are_errors() {
        let mut p = params_for(SceneSetup::HdrLdr, 1);
        p.ldr_id = Some("gone".into());
        assert!(matches!(make_scene(&p, &registry()), Err(Error::MissingAsset(_))));
        p.env_id = "gone".into();
        assert!(matches!(make_scene(&p, &registry()), Err(Error::MissingAsset(_))));
    }

    #[test]
    fn aperture_follows_f_number() {
        let p = params_for(SceneSetup::HdrHdr, 5);
        let s = make_scene(&p, &registry()).unwrap();
        let f = sensor_focal_length(p.camera.vertical_fov);
        assert!((s.camera.aperture_radius - f / (2.0 * p.camera.f_number)).abs() < 1e-15);
        // 24 mm sensor at 53.13 degrees is a 24 mm lens
        assert!((sensor_focal_length(2.0 * 0.5f64.atan().to_degrees()) - 0.024).abs() < 1e-12);
    }
}
