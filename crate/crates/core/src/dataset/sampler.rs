use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::optics::GlassSpec;
use crate::render::RenderSettings;
use crate::scene::{AssetRegistry, SceneSetup};
use crate::{Error, Result};

/// Every range and mixture weight used when drawing sample parameters.
/// Lengths in the config are millimeters where the name says so.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub thin_probability: f64,
    pub thin_thickness_mm: [f64; 2],
    pub thick_thickness_mm: [f64; 2],
    pub ior: [f64; 2],
    pub rough_probability: f64,
    pub roughness_max: f64,
    pub tinted_probability: f64,
    /// Upper bound of per-channel absorption in 1/m.
    pub absorption_max: f64,
    pub double_layer_probability: f64,
    pub gap_mm: [f64; 2],
    /// Weights of HdrHdr, HdrLdr, LdrHdr.
    pub setup_weights: [f64; 3],
    /// Chance that HdrHdr uses a second map behind the glass.
    pub second_env_probability: f64,
    pub vertical_fov_deg: [f64; 2],
    pub f_number: [f64; 2],
    pub focal_distance_m: [f64; 2],
    pub camera_distance_m: [f64; 2],
    pub yaw_deg_max: f64,
    pub pitch_deg_max: f64,
    /// Pane size relative to the view footprint.
    pub pane_coverage: [f64; 2],
    pub billboard_distance_m: [f64; 2],
    /// Log-uniform range of the billboard radiance multiplier.
    pub emission_scale: [f64; 2],
    pub jpeg_quality: [u8; 2],
    pub width: usize,
    pub height: usize,
    pub render: RenderSettings,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            thin_probability: 0.7,
            thin_thickness_mm: [3.0, 6.0],
            thick_thickness_mm: [10.0, 40.0],
            ior: [1.45, 1.65],
            rough_probability: 0.2,
            roughness_max: 0.3,
            tinted_probability: 0.4,
            absorption_max: 150.0,
            double_layer_probability: 0.2,
            gap_mm: [6.0, 20.0],
            setup_weights: [0.6, 0.2, 0.2],
            second_env_probability: 0.5,
            vertical_fov_deg: [25.0, 75.0],
            f_number: [1.8, 16.0],
            focal_distance_m: [0.5, 10.0],
            camera_distance_m: [0.5, 3.0],
            yaw_deg_max: 35.0,
            pitch_deg_max: 15.0,
            pane_coverage: [0.7, 1.5],
            billboard_distance_m: [0.3, 2.0],
            emission_scale: [0.5, 4.0],
            jpeg_quality: [60, 95],
            width: 256,
            height: 192,
            render: RenderSettings::default(),
        }
    }
}

impl SamplerConfig {
    pub fn from_json_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let cfg: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |p: f64, name: &str| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} {p} is not a probability")))
            }
        };
        let range = |r: [f64; 2], name: &str| {
            if r[0] <= r[1] && r[0].is_finite() && r[1].is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} range {r:?} is empty")))
            }
        };
        prob(self.thin_probability, "thin_probability")?;
        prob(self.rough_probability, "rough_probability")?;
        prob(self.tinted_probability, "tinted_probability")?;
        prob(self.double_layer_probability, "double_layer_probability")?;
        prob(self.second_env_probability, "second_env_probability")?;
        for (r, name) in [
            (self.thin_thickness_mm, "thin_thickness_mm"),
            (self.thick_thickness_mm, "thick_thickness_mm"),
            (self.ior, "ior"),
            (self.gap_mm, "gap_mm"),
            (self.vertical_fov_deg, "vertical_fov_deg"),
            (self.f_number, "f_number"),
            (self.focal_distance_m, "focal_distance_m"),
            (self.camera_distance_m, "camera_distance_m"),
            (self.pane_coverage, "pane_coverage"),
            (self.billboard_distance_m, "billboard_distance_m"),
            (self.emission_scale, "emission_scale"),
        ] {
            range(r, name)?;
        }
        if self.thin_thickness_mm[0] <= 0.0 || self.ior[0] < 1.0 || self.emission_scale[0] <= 0.0 {
            return Err(Error::InvalidArgument(
                "thickness, ior or emission range out of domain".into(),
            ));
        }
        if self.setup_weights.iter().any(|w| !(*w >= 0.0)) || self.setup_weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidArgument(
                "setup weights must be >= 0 and not all zero".into(),
            ));
        }
        let [q0, q1] = self.jpeg_quality;
        if !(1 <= q0 && q0 <= q1 && q1 <= 100) {
            return Err(Error::InvalidArgument(format!(
                "jpeg quality range {:?}",
                self.jpeg_quality
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidArgument("resolution must be positive".into()));
        }
        self.render.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraDraw {
    pub distance: f64,
    pub yaw_deg: f64,
    pub pitch_deg: f64,
    pub vertical_fov: f64,
    pub f_number: f64,
    pub focal_distance: f64,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledParameters {
    pub seed: u64,
    pub glass: GlassSpec,
    pub setup: SceneSetup,
    pub env_id: String,
    /// Separate map behind the glass, if any.
    pub env_back_id: Option<String>,
    pub ldr_id: Option<String>,
    pub env_rotation: f64,
    pub env_back_rotation: f64,
    pub camera: CameraDraw,
    pub pane_coverage: f64,
    pub billboard_distance: f64,
    pub emission_scale: f64,
    pub jpeg_quality: u8,
}

fn uniform(rng: &mut impl Rng, r: [f64; 2]) -> f64 {
    r[0] + (r[1] - r[0]) * rng.random::<f64>()
}

/// Draw one parameter set. Every draw happens unconditionally and in a
/// fixed order, so a field's value does not depend on earlier branches.
pub fn sample_parameters(seed: u64, assets: &AssetRegistry, cfg: &SamplerConfig) -> Result<SampledParameters> {
    let env_ids = assets.env_ids();
    if env_ids.is_empty() {
        return Err(Error::EmptyAssetClass("env"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let thin = rng.random_bool(cfg.thin_probability);
    let thin_mm = uniform(&mut rng, cfg.thin_thickness_mm);
    let thick_mm = uniform(&mut rng, cfg.thick_thickness_mm);
    let ior = uniform(&mut rng, cfg.ior);
    let rough = rng.random_bool(cfg.rough_probability);
    // (0, max]
    let roughness = cfg.roughness_max * (1.0 - rng.random::<f64>());
    let tinted = rng.random_bool(cfg.tinted_probability);
    let sigma: [f64; 3] = std::array::from_fn(|_| cfg.absorption_max * rng.random::<f64>());
    let double_layer = rng.random_bool(cfg.double_layer_probability);
    let gap_mm = uniform(&mut rng, cfg.gap_mm);

    let total: f64 = cfg.setup_weights.iter().sum();
    let pick = rng.random::<f64>() * total;
    let setup = if pick < cfg.setup_weights[0] {
        SceneSetup::HdrHdr
    } else if pick < cfg.setup_weights[0] + cfg.setup_weights[1] {
        SceneSetup::HdrLdr
    } else {
        SceneSetup::LdrHdr
    };

    let env_index = rng.random_range(0..env_ids.len());
    let second_env = rng.random_bool(cfg.second_env_probability);
    let back_offset = if env_ids.len() > 1 {
        rng.random_range(1..env_ids.len())
    } else {
        0
    };
    let ldr_pick = rng.random::<f64>();
    let env_rotation = rng.random::<f64>() * std::f64::consts::TAU;
    let env_back_rotation = rng.random::<f64>() * std::f64::consts::TAU;

    let camera = CameraDraw {
        distance: uniform(&mut rng, cfg.camera_distance_m),
        yaw_deg: uniform(&mut rng, [-cfg.yaw_deg_max, cfg.yaw_deg_max]),
        pitch_deg: uniform(&mut rng, [-cfg.pitch_deg_max, cfg.pitch_deg_max]),
        vertical_fov: uniform(&mut rng, cfg.vertical_fov_deg),
        f_number: uniform(&mut rng, cfg.f_number),
        focal_distance: uniform(&mut rng, cfg.focal_distance_m),
        width: cfg.width,
        height: cfg.height,
    };
    let pane_coverage = uniform(&mut rng, cfg.pane_coverage);
    let billboard_distance = uniform(&mut rng, cfg.billboard_distance_m);
    let log_scale = uniform(&mut rng, [cfg.emission_scale[0].ln(), cfg.emission_scale[1].ln()]);
    let jpeg_quality = rng.random_range(cfg.jpeg_quality[0]..=cfg.jpeg_quality[1]);

    let ldr_id = match setup {
        SceneSetup::HdrHdr => None,
        _ => {
            let ids = assets.ldr_ids();
            if ids.is_empty() {
                return Err(Error::EmptyAssetClass("ldr"));
            }
            let i = ((ldr_pick * ids.len() as f64) as usize).min(ids.len() - 1);
            Some(ids[i].to_owned())
        }
    };
    let env_back_id = (setup == SceneSetup::HdrHdr && second_env && env_ids.len() > 1)
        .then(|| env_ids[(env_index + back_offset) % env_ids.len()].to_owned());

    Ok(SampledParameters {
        seed,
        glass: GlassSpec {
            thickness: if thin { thin_mm } else { thick_mm } * 1e-3,
            ior,
            roughness: if rough { roughness } else { 0.0 },
            absorption: if tinted { sigma } else { [0.0; 3] },
            double_layer,
            interlayer_gap: if double_layer { gap_mm * 1e-3 } else { 0.0 },
        },
        setup,
        env_id: env_ids[env_index].to_owned(),
        env_back_id,
        ldr_id,
        env_rotation,
        env_back_rotation,
        camera,
        pane_coverage,
        billboard_distance,
        emission_scale: log_scale.exp().clamp(cfg.emission_scale[0], cfg.emission_scale[1]),
        jpeg_quality,
    })
}
