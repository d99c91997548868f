//! Scene assembly and ray queries.

mod assets;
mod build;
mod desc;
mod env;
mod geometry;

pub use assets::AssetRegistry;
pub use build::{make_scene, sensor_focal_length};
pub use desc::{BillboardDesc, EnvDesc, SceneDescription};
pub use env::{EnvSample, EnvironmentMap};
pub use geometry::{Billboard, GlassPane};

use serde::{Deserialize, Serialize};

use crate::camera::CameraSpec;
use crate::math::{Ray, Rgb, Vec3};
use crate::{Error, Result};

/// Lighting arrangement around the pane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SceneSetup {
    /// Environment light on both sides.
    HdrHdr,
    /// LDR billboard behind the camera, seen in reflection.
    HdrLdr,
    /// LDR billboard behind the glass, seen in transmission.
    LdrHdr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub setup: SceneSetup,
    pub env: EnvironmentMap,
    /// Optional second map for directions pointing away from the camera
    /// side of the pane.
    pub env_back: Option<EnvironmentMap>,
    pub front_billboard: Option<Billboard>,
    pub back_billboard: Option<Billboard>,
    pub pane: GlassPane,
    pub camera: CameraSpec,
}

/// Which medium a ray travels in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Medium {
    Exterior,
    /// Interior layer of the pane stack, see [`GlassPane`].
    Layer(usize),
}

/// Which pane faces take part in an intersection query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Faces {
    All,
    None,
    /// Only the camera-facing plane, approached from outside.
    FrontOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BillboardSide {
    Front,
    Back,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurfaceKind {
    /// Interface plane `plane` (0 faces the camera).
    Interface {
        plane: usize,
    },
    Billboard(BillboardSide),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub point: Vec3,
    /// Geometric normal, oriented against the ray.
    pub normal: Vec3,
    pub kind: SurfaceKind,
    /// Medium on the far side of the surface.
    pub beyond: Medium,
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        self.camera.validate()?;
        self.pane.validate()?;
        let need = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidArgument(msg.into()))
            }
        };
        match self.setup {
            SceneSetup::HdrHdr => need(
                self.front_billboard.is_none() && self.back_billboard.is_none(),
                "setup HdrHdr takes no billboards",
            )?,
            SceneSetup::HdrLdr => need(self.front_billboard.is_some(), "setup HdrLdr needs a front billboard")?,
            SceneSetup::LdrHdr => need(self.back_billboard.is_some(), "setup LdrHdr needs a back billboard")?,
        }
        for b in self.front_billboard.iter().chain(&self.back_billboard) {
            b.validate()?;
        }
        need(
            self.pane.height(self.camera.position) > 0.0,
            "pane normal must face the camera",
        )
    }

    /// Nearest hit of a ray starting outside the glass.
    pub fn intersect(&self, ray: &Ray) -> Option<Hit> {
        self.intersect_from(ray, Medium::Exterior, Faces::All)
    }

    /// Nearest hit of a ray travelling in `medium`. Interior layers are
    /// laterally unbounded; the rectangle only limits entry from outside.
    pub fn intersect_from(&self, ray: &Ray, medium: Medium, faces: Faces) -> Option<Hit> {
        let pane = &self.pane;
        let n = pane.normal;
        let dn = ray.dir.dot(n);
        let h = pane.height(ray.origin);
        let offsets = pane.plane_offsets();
        let k = offsets.len();

        if let Medium::Layer(layer) = medium {
            let (plane, beyond) = if dn > 0.0 {
                (
                    layer - 1,
                    if layer == 1 {
                        Medium::Exterior
                    } else {
                        Medium::Layer(layer - 1)
                    },
                )
            } else if dn < 0.0 {
                (
                    layer,
                    if layer + 1 == k {
                        Medium::Exterior
                    } else {
                        Medium::Layer(layer + 1)
                    },
                )
            } else {
                return None;
            };
            let t = ((offsets[plane] - h) / dn).max(0.0);
            return Some(Hit {
                t,
                point: ray.at(t),
                normal: if dn > 0.0 { -n } else { n },
                kind: SurfaceKind::Interface { plane },
                beyond,
            });
        }

        let mut best: Option<Hit> = None;
        let mut consider = |hit: Hit| {
            if best.is_none_or(|b| hit.t < b.t) {
                best = Some(hit);
            }
        };
        if faces != Faces::None && dn < 0.0 && h > 0.0 {
            let t = h / -dn;
            let p = ray.at(t);
            if pane.inside_rect(p) {
                consider(Hit {
                    t,
                    point: p,
                    normal: n,
                    kind: SurfaceKind::Interface { plane: 0 },
                    beyond: Medium::Layer(1),
                });
            }
        }
        if faces == Faces::All && dn > 0.0 && h < offsets[k - 1] {
            let t = (offsets[k - 1] - h) / dn;
            let p = ray.at(t);
            if pane.inside_rect(p) {
                consider(Hit {
                    t,
                    point: p,
                    normal: -n,
                    kind: SurfaceKind::Interface { plane: k - 1 },
                    beyond: Medium::Layer(k - 1),
                });
            }
        }
        for (side, bb) in [
            (BillboardSide::Front, &self.front_billboard),
            (BillboardSide::Back, &self.back_billboard),
        ] {
            if let Some(b) = bb {
                if let Some(t) = b.intersect(ray.origin, ray.dir) {
                    let bn = b.normal.normalize();
                    consider(Hit {
                        t,
                        point: ray.at(t),
                        normal: if ray.dir.dot(bn) < 0.0 { bn } else { -bn },
                        kind: SurfaceKind::Billboard(side),
                        beyond: Medium::Exterior,
                    });
                }
            }
        }
        best
    }

    /// Radiance of an escaping ray.
    pub fn background(&self, dir: Vec3) -> Rgb {
        match &self.env_back {
            Some(back) if dir.dot(self.pane.normal) <= 0.0 => back.lookup(dir),
            _ => self.env.lookup(dir),
        }
    }

    pub fn billboard(&self, side: BillboardSide) -> Option<&Billboard> {
        match side {
            BillboardSide::Front => self.front_billboard.as_ref(),
            BillboardSide::Back => self.back_billboard.as_ref(),
        }
    }
}
