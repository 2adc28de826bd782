use super::ControllerConfig;
use crate::geometry::Vec3;

/// Proportional Cartesian velocity toward `goal`, capped at `v_max`, or at
/// `slow_factor · v_max` inside the slow zone.
pub fn pbvs_velocity(current: &Vec3, goal: &Vec3, cfg: &ControllerConfig) -> Vec3 {
    let e = goal - current;
    let dist = e.norm();
    if dist <= cfg.arrive_tol_m {
        return Vec3::zeros();
    }
    let cap = if dist > cfg.slow_zone_m { cfg.v_max_m_per_s } else { cfg.slow_factor * cfg.v_max_m_per_s };
    let v = e * cfg.lambda_gain_per_s;
    let speed = v.norm();
    if speed > cap {
        v * (cap / speed)
    } else {
        v
    }
}

/// Proportional yaw rate for a signed yaw error, capped in magnitude.
pub fn yaw_rate(error: f64, cfg: &ControllerConfig) -> f64 {
    (cfg.lambda_gain_per_s * error).clamp(-cfg.yaw_rate_max_rad_per_s, cfg.yaw_rate_max_rad_per_s)
}
