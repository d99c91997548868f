//! JSON scene files.
//!
//! ```json
//! {
//!   "setup": "HdrLdr",
//!   "env": { "file": { "path": "env/sky.exr", "rotation": 0.5 } },
//!   "front_billboard": {
//!     "image": "ldr/poster.png", "center": {"x": 0, "y": -3, "z": 0},
//!     "normal": {"x": 0, "y": 1, "z": 0}, "up": {"x": 0, "y": 0, "z": 1},
//!     "half_extents": [1.0, 0.75], "emission_scale": 1.0
//!   },
//!   "pane": { "glass": { ... }, "center": ..., "normal": ..., "up": ..., "half_extents": [1, 1] },
//!   "camera": { ... }
//! }
//! ```
//!
//! Relative paths resolve against the directory of the scene file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::camera::CameraSpec;
use crate::imagecore::{load_hdr, load_ldr, RadianceImage};
use crate::math::{Rgb, Vec3};
use crate::optics::GlassSpec;
use crate::Result;

use super::{Billboard, EnvironmentMap, GlassPane, SceneConfig, SceneSetup};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvDesc {
    File {
        path: PathBuf,
        #[serde(default)]
        rotation: f64,
    },
    Constant {
        radiance: [f64; 3],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BillboardDesc {
    pub image: PathBuf,
    pub center: Vec3,
    pub normal: Vec3,
    pub up: Vec3,
    pub half_extents: [f64; 2],
    pub emission_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaneDesc {
    pub glass: GlassSpec,
    pub center: Vec3,
    pub normal: Vec3,
    pub up: Vec3,
    pub half_extents: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDescription {
    pub setup: SceneSetup,
    pub env: EnvDesc,
    #[serde(default)]
    pub env_back: Option<EnvDesc>,
    #[serde(default)]
    pub front_billboard: Option<BillboardDesc>,
    #[serde(default)]
    pub back_billboard: Option<BillboardDesc>,
    pub pane: PaneDesc,
    pub camera: CameraSpec,
}

impl SceneDescription {
    pub fn from_file(path: impl AsRef<Path>) -> Result<SceneConfig> {
        let path = path.as_ref();
        let desc: SceneDescription = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        desc.build(path.parent().unwrap_or(Path::new(".")))
    }

    pub fn build(&self, base: &Path) -> Result<SceneConfig> {
        let env = |d: &EnvDesc| -> Result<EnvironmentMap> {
            match d {
                EnvDesc::File { path, rotation } => {
                    let (img, _) = load_hdr(base.join(path))?;
                    EnvironmentMap::build(Arc::new(img), *rotation)
                }
                EnvDesc::Constant { radiance } => {
                    EnvironmentMap::build(Arc::new(RadianceImage::filled(2, 1, Rgb(*radiance))), 0.0)
                }
            }
        };
        let billboard = |d: &BillboardDesc| -> Result<Billboard> {
            Ok(Billboard {
                image: Arc::new(load_ldr(base.join(&d.image))?),
                center: d.center,
                normal: d.normal.normalize(),
                up: d.up,
                half_extents: (d.half_extents[0], d.half_extents[1]),
                emission_scale: d.emission_scale,
            })
        };
        let scene = SceneConfig {
            setup: self.setup,
            env: env(&self.env)?,
            env_back: self.env_back.as_ref().map(env).transpose()?,
            front_billboard: self.front_billboard.as_ref().map(billboard).transpose()?,
            back_billboard: self.back_billboard.as_ref().map(billboard).transpose()?,
            pane: GlassPane {
                spec: self.pane.glass.clone(),
                center: self.pane.center,
                normal: self.pane.normal.normalize(),
                up: self.pane.up,
                half_extents: (self.pane.half_extents[0], self.pane.half_extents[1]),
            },
            camera: self.camera.clone(),
        };
        scene.validate()?;
        Ok(scene)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_constant_env_scene() {
        let json = r#"{
            "setup": "HdrHdr",
            "env": {"constant": {"radiance": [1, 1, 1]}},
            "pane": {
                "glass": {"thickness": 0.005, "ior": 1.5, "roughness": 0, "absorption": [0, 0, 0]},
                "center": {"x": 0, "y": 0, "z": 0}, "normal": {"x": 0, "y": -1, "z": 0},
                "up": {"x": 0, "y": 0, "z": 1}, "half_extents": [1, 1]
            },
            "camera": {
                "position": {"x": 0, "y": -2, "z": 0}, "look_at": {"x": 0, "y": 0, "z": 0},
                "up": {"x": 0, "y": 0, "z": 1}, "vertical_fov": 30, "focal_distance": 2,
                "aperture_radius": 0, "width": 4, "height": 4
            }
        }"#;
        let desc: SceneDescription = serde_json::from_str(json).unwrap();
        let scene = desc.build(Path::new(".")).unwrap();
        assert!(!scene.pane.spec.double_layer);
        assert!((scene.background(Vec3::X)[1] - 1.0).abs() < 1e-6);
    }
}
