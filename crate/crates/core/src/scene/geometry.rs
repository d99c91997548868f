use std::sync::Arc;

use crate::imagecore::{srgb_decode_table, LdrImage};
use crate::math::{Rgb, Vec3};
use crate::optics::GlassSpec;
use crate::{Error, Result};

/// A single pane or a double-glazed unit.
///
/// The camera-facing face lies in the plane through `center` with normal
/// `normal`; the remaining faces follow at increasing depth along
/// `-normal`. Interior layers are numbered from 1 (first glass layer); for
/// a double unit layer 2 is the air gap and layer 3 the second pane.
#[derive(Debug, Clone, PartialEq)]
pub struct GlassPane {
    pub spec: GlassSpec,
    pub center: Vec3,
    pub normal: Vec3,
    /// In-plane direction of the second half extent.
    pub up: Vec3,
    /// Half width and half height of the rectangle in meters.
    pub half_extents: (f64, f64),
}

impl GlassPane {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        let (hx, hy) = self.half_extents;
        if !(hx > 0.0 && hy > 0.0 && hx.is_finite() && hy.is_finite()) {
            return Err(Error::InvalidArgument("pane half extents must be > 0".into()));
        }
        if (self.normal.length() - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidArgument("pane normal must be unit length".into()));
        }
        if self.normal.cross(self.up).length() < 1e-6 {
            return Err(Error::InvalidArgument(
                "pane up must not be parallel to its normal".into(),
            ));
        }
        Ok(())
    }

    /// Signed offsets of the interface planes along the normal.
    pub fn plane_offsets(&self) -> Vec<f64> {
        let t = self.spec.thickness;
        if self.spec.double_layer {
            let g = self.spec.interlayer_gap;
            vec![0.0, -t, -t - g, -2.0 * t - g]
        } else {
            vec![0.0, -t]
        }
    }

    pub fn plane_count(&self) -> usize {
        if self.spec.double_layer {
            4
        } else {
            2
        }
    }

    /// Whether interior layer `layer` is glass (as opposed to the air gap).
    pub fn is_glass_layer(layer: usize) -> bool {
        layer % 2 == 1
    }

    pub(crate) fn axes(&self) -> (Vec3, Vec3) {
        let v = (self.up - self.normal * self.up.dot(self.normal)).normalize();
        let u = v.cross(self.normal);
        (u, v)
    }

    pub(crate) fn height(&self, p: Vec3) -> f64 {
        (p - self.center).dot(self.normal)
    }

    pub(crate) fn inside_rect(&self, p: Vec3) -> bool {
        let (u, v) = self.axes();
        let d = p - self.center;
        d.dot(u).abs() <= self.half_extents.0 && d.dot(v).abs() <= self.half_extents.1
    }
}

/// Two-sided emissive rectangle showing an LDR image.
#[derive(Debug, Clone, PartialEq)]
pub struct Billboard {
    pub image: Arc<LdrImage>,
    pub center: Vec3,
    /// Facing direction; the image reads correctly when viewed against it.
    pub normal: Vec3,
    pub up: Vec3,
    pub half_extents: (f64, f64),
    pub emission_scale: f64,
}

impl Billboard {
    pub fn validate(&self) -> Result<()> {
        let (hx, hy) = self.half_extents;
        if !(hx > 0.0 && hy > 0.0 && hx.is_finite() && hy.is_finite()) {
            return Err(Error::InvalidArgument("billboard half extents must be > 0".into()));
        }
        if !(self.emission_scale > 0.0 && self.emission_scale.is_finite()) {
            return Err(Error::InvalidArgument("emission scale must be > 0".into()));
        }
        if self.normal.cross(self.up).length() < 1e-6 {
            return Err(Error::InvalidArgument(
                "billboard up must not be parallel to its normal".into(),
            ));
        }
        Ok(())
    }

    fn axes(&self) -> (Vec3, Vec3) {
        let n = self.normal.normalize();
        let v = (self.up - n * self.up.dot(n)).normalize();
        (v.cross(n), v)
    }

    /// Ray parameter of the hit, if any.
    pub fn intersect(&self, origin: Vec3, dir: Vec3) -> Option<f64> {
        let n = self.normal.normalize();
        let dn = dir.dot(n);
        if dn == 0.0 {
            return None;
        }
        let t = (self.center - origin).dot(n) / dn;
        if !(t > 1e-9) {
            return None;
        }
        let (u, v) = self.axes();
        let d = origin + dir * t - self.center;
        (d.dot(u).abs() <= self.half_extents.0 && d.dot(v).abs() <= self.half_extents.1).then_some(t)
    }

    /// Emitted radiance at a point on the billboard (nearest texel).
    pub fn radiance_at(&self, p: Vec3) -> Rgb {
        let (u, v) = self.axes();
        let d = p - self.center;
        let s = (d.dot(u) / self.half_extents.0 + 1.0) * 0.5;
        let t = (1.0 - d.dot(v) / self.half_extents.1) * 0.5;
        let (w, h) = (self.image.width(), self.image.height());
        let x = ((s * w as f64) as usize).min(w - 1);
        let y = ((t * h as f64) as usize).min(h - 1);
        let px = self.image.get(x, y);
        let table = decode_table();
        Rgb::new(
            table[px[0] as usize] as f64,
            table[px[1] as usize] as f64,
            table[px[2] as usize] as f64,
        ) * self.emission_scale
    }
}

fn decode_table() -> &'static [f32; 256] {
    static TABLE: std::sync::OnceLock<[f32; 256]> = std::sync::OnceLock::new();
    TABLE.get_or_init(srgb_decode_table)
}
