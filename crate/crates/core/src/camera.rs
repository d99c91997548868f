//! Thin-lens camera.

use serde::{Deserialize, Serialize};

use crate::math::{Ray, Vec3};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    pub position: Vec3,
    pub look_at: Vec3,
    pub up: Vec3,
    /// Vertical field of view in degrees.
    pub vertical_fov: f64,
    /// Distance of the plane in focus, meters.
    pub focal_distance: f64,
    /// Lens radius in meters; 0 is a pinhole.
    pub aperture_radius: f64,
    pub width: usize,
    pub height: usize,
}

/// Orthonormal camera basis and film scale, derived from a [`CameraSpec`].
#[derive(Debug, Clone, Copy)]
struct Basis {
    forward: Vec3,
    right: Vec3,
    up: Vec3,
    tan_half: f64,
    aspect: f64,
}

impl CameraSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.vertical_fov > 1.0 && self.vertical_fov < 120.0) {
            return Err(Error::InvalidArgument(format!(
                "vertical fov {} outside (1, 120) degrees",
                self.vertical_fov
            )));
        }
        if !(self.focal_distance > 0.0) {
            return Err(Error::InvalidArgument("focal distance must be > 0".into()));
        }
        if !(self.aperture_radius >= 0.0) {
            return Err(Error::InvalidArgument("aperture radius must be >= 0".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidArgument("resolution must be positive".into()));
        }
        let fwd = self.look_at - self.position;
        if fwd.length() == 0.0 || fwd.cross(self.up).length() < 1e-9 * fwd.length() {
            return Err(Error::InvalidArgument(
                "look_at must differ from position and not be parallel to up".into(),
            ));
        }
        Ok(())
    }

    fn basis(&self) -> Basis {
        let forward = (self.look_at - self.position).normalize();
        let right = forward.cross(self.up).normalize();
        let up = right.cross(forward);
        Basis {
            forward,
            right,
            up,
            tan_half: (self.vertical_fov.to_radians() * 0.5).tan(),
            aspect: self.width as f64 / self.height as f64,
        }
    }

    pub fn forward(&self) -> Vec3 {
        self.basis().forward
    }

    /// Unit direction of the pinhole ray through film coordinates in
    /// `[-1, 1]^2`, `+y` up.
    pub fn pinhole_direction(&self, ndc_x: f64, ndc_y: f64) -> Vec3 {
        let b = self.basis();
        film_vector(&b, ndc_x, ndc_y).normalize()
    }

    /// Primary ray for `pixel`; `lens` and `jitter` are uniform in `[0,1)^2`.
    pub fn generate_ray(&self, pixel: (usize, usize), lens: (f64, f64), jitter: (f64, f64)) -> Ray {
        let ndc_x = 2.0 * (pixel.0 as f64 + jitter.0) / self.width as f64 - 1.0;
        let ndc_y = 1.0 - 2.0 * (pixel.1 as f64 + jitter.1) / self.height as f64;
        self.ray_through_film(ndc_x, ndc_y, lens)
    }

    pub fn ray_through_film(&self, ndc_x: f64, ndc_y: f64, lens: (f64, f64)) -> Ray {
        let b = self.basis();
        // film vector has unit forward component, so this lands on the focal plane
        let focus = self.position + film_vector(&b, ndc_x, ndc_y) * self.focal_distance;
        if self.aperture_radius == 0.0 {
            return Ray::new(self.position, (focus - self.position).normalize());
        }
        let (dx, dy) = concentric_disk(lens.0, lens.1);
        let origin = self.position + (b.right * dx + b.up * dy) * self.aperture_radius;
        Ray::new(origin, (focus - origin).normalize())
    }
}

fn film_vector(b: &Basis, ndc_x: f64, ndc_y: f64) -> Vec3 {
    b.forward + b.right * (ndc_x * b.tan_half * b.aspect) + b.up * (ndc_y * b.tan_half)
}

/// Shirley–Chiu concentric mapping of the unit square onto the unit disk.
pub fn concentric_disk(u: f64, v: f64) -> (f64, f64) {
    use std::f64::consts::FRAC_PI_4;
    let a = 2.0 * u - 1.0;
    let b = 2.0 * v - 1.0;
    if a == 0.0 && b == 0.0 {
        return (0.0, 0.0);
    }
    let (r, phi) = if a.abs() > b.abs() {
        (a, FRAC_PI_4 * (b / a))
    } else {
        (b, 2.0 * FRAC_PI_4 - FRAC_PI_4 * (a / b))
    };
    (r * phi.cos(), r * phi.sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{SampleRng, UniformSource};

    fn cam(aperture: f64) -> CameraSpec {
        CameraSpec {
            position: Vec3::new(0.3, -2.0, 0.5),
            look_at: Vec3::new(0.0, 0.0, 0.2),
            up: Vec3::Z,
            vertical_fov: 40.0,
            focal_distance: 1.7,
            aperture_radius: aperture,
            width: 65,
            height: 33,
        }
    }

    #[test]
    fn pinhole_origin_is_camera_position() {
        let c = cam(0.0);
        let mut rng = SampleRng::new(1);
        for _ in 0..100 {
            let r = c.generate_ray((10, 20), rng.next_2d(), rng.next_2d());
            assert_eq!(r.origin, c.position);
        }
    }

    #[test]
    fn center_pixel_follows_optical_axis() {
        let c = cam(0.0);
        let r = c.generate_ray((32, 16), (0.5, 0.5), (0.5, 0.5));
        let axis = (c.look_at - c.position).normalize();
        assert!((r.dir - axis).length() < 1e-12);
    }

    #[test]
    fn thin_lens_focuses_on_focal_plane() {
        let c = cam(0.05);
        let axis = c.forward();
        let pixel_footprint = 2.0 * (20f64.to_radians()).tan() * c.focal_distance / c.height as f64;
        let mut rng = SampleRng::new(9);
        for &px in &[(0, 0), (64, 32), (20, 7)] {
            let jitter = rng.next_2d();
            let pin = c.clone();
            let reference = {
                let mut p = pin;
                p.aperture_radius = 0.0;
                p.generate_ray(px, (0.5, 0.5), jitter)
            };
            let on_plane = |r: &Ray| {
                let t = (c.focal_distance - (r.origin - c.position).dot(axis)) / r.dir.dot(axis);
                r.at(t)
            };
            let target = on_plane(&reference);
            for _ in 0..200 {
                let r = c.generate_ray(px, rng.next_2d(), jitter);
                assert!((on_plane(&r) - target).length() < 1e-9);
                // and still lands within the pixel footprint for any jitter
                let r2 = c.generate_ray(px, rng.next_2d(), rng.next_2d());
                assert!((on_plane(&r2) - target).length() < 2.0 * pixel_footprint);
            }
        }
    }

    #[test]
    fn vertical_field_of_view() {
        let c = cam(0.0);
        let top = c.pinhole_direction(0.0, 1.0);
        let bottom = c.pinhole_direction(0.0, -1.0);
        let angle = top.dot(bottom).acos();
        assert!((angle - 40f64.to_radians()).abs() < 1e-6);
    }

    #[test]
    fn concentric_disk_stays_inside() {
        let mut rng = SampleRng::new(5);
        for _ in 0..10_000 {
            let (x, y) = concentric_disk(rng.next_f64(), rng.next_f64());
            assert!(x * x + y * y <= 1.0 + 1e-12);
        }
        assert_eq!(concentric_disk(0.5, 0.5), (0.0, 0.0));
    }

    #[test]
    fn lens_samples_cover_the_aperture() {
        let c = cam(0.02);
        let mut rng = SampleRng::new(3);
        let max_r = (0..5000)
            .map(|_| (c.generate_ray((1, 1), rng.next_2d(), (0.5, 0.5)).origin - c.position).length())
            .fold(0.0, f64::max);
        assert!(max_r <= 0.02 + 1e-12 && max_r > 0.019);
    }

    #[test]
    fn validation() {
        assert!(cam(0.0).validate().is_ok());
        let mut c = cam(0.0);
        c.vertical_fov = 0.5;
        assert!(c.validate().is_err());
        let mut c = cam(0.0);
        c.focal_distance = 0.0;
        assert!(c.validate().is_err());
        let mut c = cam(0.0);
        c.aperture_radius = -1.0;
        assert!(c.validate().is_err());
        let mut c = cam(0.0);
        c.up = c.look_at - c.position;
        assert!(c.validate().is_err());
    }
}
