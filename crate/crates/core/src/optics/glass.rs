use serde::{Deserialize, Serialize};

use crate::math::Rgb;
use crate::{Error, Result};

/// Physical description of a glass pane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlassSpec {
    /// Pane thickness in meters.
    pub thickness: f64,
    pub ior: f64,
    /// GGX alpha of both faces; 0 is optically smooth.
    pub roughness: f64,
    /// Per-channel absorption coefficient in 1/m.
    pub absorption: [f64; 3],
    #[serde(default)]
    pub double_layer: bool,
    /// Air gap between the two panes in meters, used when `double_layer`.
    #[serde(default)]
    pub interlayer_gap: f64,
}

impl GlassSpec {
    /// Clear smooth single pane.
    pub fn clear(thickness: f64, ior: f64) -> Self {
        Self {
            thickness,
            ior,
            roughness: 0.0,
            absorption: [0.0; 3],
            double_layer: false,
            interlayer_gap: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidArgument(what));
        if !(self.thickness > 0.0 && self.thickness.is_finite()) {
            return bad(format!("thickness {} must be > 0", self.thickness));
        }
        if !(1.0..=3.0).contains(&self.ior) {
            return bad(format!("ior {} outside [1, 3]", self.ior));
        }
        if !(0.0..=1.0).contains(&self.roughness) {
            return bad(format!("roughness {} outside [0, 1]", self.roughness));
        }
        if self.absorption.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return bad(format!("absorption {:?} must be >= 0", self.absorption));
        }
        if self.double_layer && !(self.interlayer_gap > 0.0 && self.interlayer_gap.is_finite()) {
            return bad(format!("interlayer gap {} must be > 0", self.interlayer_gap));
        }
        Ok(())
    }

    pub fn is_smooth(&self) -> bool {
        self.roughness == 0.0
    }

    pub fn sigma(&self) -> Rgb {
        Rgb(self.absorption)
    }
}

/// Beer–Lambert transmittance `exp(-sigma * path_length)` per channel.
pub fn beer_lambert(sigma: Rgb, path_length: f64) -> Rgb {
    debug_assert!(path_length >= 0.0);
    sigma.map(|s| (-s * path_length).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beer_lambert_cases() {
        assert_eq!(beer_lambert(Rgb::BLACK, 0.3), Rgb::WHITE);
        assert_eq!(beer_lambert(Rgb::new(5.0, 1.0, 2.0), 0.0), Rgb::WHITE);
        let a = beer_lambert(Rgb::new(100.0, 0.0, 0.0), 0.01);
        assert!((a[0] - 0.36788).abs() < 1e-5);
        assert_eq!((a[1], a[2]), (1.0, 1.0));
    }

    #[test]
    fn validation() {
        assert!(GlassSpec::clear(0.004, 1.5).validate().is_ok());
        assert!(GlassSpec::clear(0.0, 1.5).validate().is_err());
        assert!(GlassSpec::clear(0.004, 0.9).validate().is_err());
        assert!(GlassSpec::clear(0.004, 3.5).validate().is_err());
        let mut g = GlassSpec::clear(0.004, 1.5);
        g.roughness = 1.2;
        assert!(g.validate().is_err());
        g.roughness = 0.1;
        g.absorption = [0.0, -1.0, 0.0];
        assert!(g.validate().is_err());
        g.absorption = [0.0; 3];
        g.double_layer = true;
        assert!(g.validate().is_err());
        g.interlayer_gap = 0.01;
        assert!(g.validate().is_ok());
    }
}
