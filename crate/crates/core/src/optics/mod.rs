//! Glass optics: Fresnel and Snell at dielectric interfaces, Beer–Lambert
//! absorption, rough interfaces, and closed-form slab responses.

mod fresnel;
mod glass;
mod microfacet;
mod slab;

pub use fresnel::{fresnel_reflectance, refract};
pub use glass::{beer_lambert, GlassSpec};
pub use microfacet::{sample_rough_dielectric, sample_smooth_dielectric, ScatterKind, ScatterSample};
pub use slab::{double_slab_response_analytic, slab_response_analytic, SlabResponse};
