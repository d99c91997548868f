use crate::math::Vec3;

/// Unpolarized Fresnel reflectance of a smooth dielectric interface.
///
/// `cos_theta_i` is measured on the incident side, `eta_i` is the index of
/// the incident medium and `eta_t` the index of the other medium. Returns 1
/// under total internal reflection.
pub fn fresnel_reflectance(cos_theta_i: f64, eta_i: f64, eta_t: f64) -> f64 {
    let cos_i = cos_theta_i.clamp(0.0, 1.0);
    let eta = eta_i / eta_t;
    let sin2_t = eta * eta * (1.0 - cos_i * cos_i);
    if sin2_t >= 1.0 {
        return 1.0;
    }
    let cos_t = (1.0 - sin2_t).sqrt();
    let r_s = (eta_i * cos_i - eta_t * cos_t) / (eta_i * cos_i + eta_t * cos_t);
    let r_p = (eta_t * cos_i - eta_i * cos_t) / (eta_t * cos_i + eta_i * cos_t);
    (0.5 * (r_s * r_s + r_p * r_p)).clamp(0.0, 1.0)
}

/// Snell refraction of the propagation direction `dir`.
///
/// `normal` may face either side; `eta_ratio` is `eta_incident / eta_transmitted`.
/// Returns `None` on total internal reflection.
pub fn refract(dir: Vec3, normal: Vec3, eta_ratio: f64) -> Option<Vec3> {
    // orient the normal against the incoming direction
    let n = if dir.dot(normal) > 0.0 { -normal } else { normal };
    let cos_i = -dir.dot(n);
    let sin2_t = eta_ratio * eta_ratio * (1.0 - cos_i * cos_i).max(0.0);
    if sin2_t > 1.0 {
        return None;
    }
    let cos_t = (1.0 - sin2_t).sqrt();
    Some((dir * eta_ratio + n * (eta_ratio * cos_i - cos_t)).normalize())
}
