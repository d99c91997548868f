use serde::{Deserialize, Serialize};

use super::{beer_lambert, fresnel_reflectance, GlassSpec};
use crate::math::Rgb;
use crate::{Error, Result};

/// Directional reflectance and transmittance of a pane, summed over all
/// interreflections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlabResponse {
    pub reflectance: Rgb,
    pub transmittance: Rgb,
}

/// Closed-form response of one smooth slab at incidence `cos_theta_i`.
///
/// With interface reflectance `r` and internal pass attenuation `a`, the
/// transmitted family `(1-r)^2 a (1 + r^2 a^2 + r^4 a^4 + ...)` and the
/// reflected family `r + (1-r)^2 r a^2 (1 + r^2 a^2 + ...)` are geometric.
/// The internal reflectance equals `r` by Fresnel reciprocity.
pub fn slab_response_analytic(glass: &GlassSpec, cos_theta_i: f64) -> Result<SlabResponse> {
    if !glass.is_smooth() {
        return Err(Error::InvalidArgument(
            "closed-form slab response needs roughness 0".into(),
        ));
    }
    let cos_i = cos_theta_i.clamp(0.0, 1.0);
    let r = fresnel_reflectance(cos_i, 1.0, glass.ior);
    let sin2_t = (1.0 - cos_i * cos_i) / (glass.ior * glass.ior);
    let cos_t = (1.0 - sin2_t).sqrt();
    let a = beer_lambert(glass.sigma(), glass.thickness / cos_t);

    let mut out = SlabResponse {
        reflectance: Rgb::BLACK,
        transmittance: Rgb::BLACK,
    };
    for c in 0..3 {
        let denom = 1.0 - r * r * a[c] * a[c];
        let t = if denom > 0.0 {
            (1.0 - r) * (1.0 - r) * a[c] / denom
        } else {
            0.0
        };
        let rho = if denom > 0.0 {
            r + r * (1.0 - r) * (1.0 - r) * a[c] * a[c] / denom
        } else {
            1.0
        };
        out.transmittance.0[c] = t;
        out.reflectance.0[c] = rho;
    }
    Ok(out)
}

/// Two identical smooth panes separated by a non-absorbing air gap.
pub fn double_slab_response_analytic(glass: &GlassSpec, cos_theta_i: f64) -> Result<SlabResponse> {
    let single = slab_response_analytic(glass, cos_theta_i)?;
    Ok(compose_identical(single))
}

fn compose_identical(single: SlabResponse) -> SlabResponse {
    let mut out = single;
    for c in 0..3 {
        let rho = single.reflectance[c];
        let tau = single.transmittance[c];
        let denom = 1.0 - rho * rho;
        if denom > 0.0 {
            out.transmittance.0[c] = tau * tau / denom;
            out.reflectance.0[c] = rho + rho * tau * tau / denom;
        } else {
            out.transmittance.0[c] = 0.0;
            out.reflectance.0[c] = 1.0;
        }
    }
    out
}
