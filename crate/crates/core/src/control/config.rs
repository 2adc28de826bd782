use serde::{Deserialize, Serialize};

use super::ControlError;

/// Controller tunables. Field names carry their units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    pub lambda_gain_per_s: f64,
    pub v_max_m_per_s: f64,
    pub slow_zone_m: f64,
    pub slow_factor: f64,
    pub arrive_tol_m: f64,
    pub depth_error_margin_m: f64,
    pub human_abort_margin_px: usize,
    pub detection_timeout_s: f64,
    pub recovery_wait_s: f64,
    pub max_aborts: u32,
    pub control_rate_hz: f64,
    pub yaw_rate_max_rad_per_s: f64,
    pub yaw_tol_rad: f64,
    /// How far past the visible surface, along the approach axis, the jaws close.
    pub grasp_depth_offset_m: f64,
    pub watchdog_s: f64,
    pub abort_monitoring: bool,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            lambda_gain_per_s: 1.5,
            v_max_m_per_s: 0.25,
            slow_zone_m: 0.07,
            slow_factor: 0.15,
            arrive_tol_m: 0.005,
            depth_error_margin_m: 0.05,
            human_abort_margin_px: 5,
            detection_timeout_s: 30.0,
            recovery_wait_s: 3.0,
            max_aborts: 3,
            control_rate_hz: 100.0,
            yaw_rate_max_rad_per_s: 1.0,
            yaw_tol_rad: 0.02,
            grasp_depth_offset_m: 0.01,
            watchdog_s: 120.0,
            abort_monitoring: true,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<(), ControlError> {
        let positive = [
            ("lambda_gain_per_s", self.lambda_gain_per_s),
            ("v_max_m_per_s", self.v_max_m_per_s),
            ("slow_zone_m", self.slow_zone_m),
            ("slow_factor", self.slow_factor),
            ("arrive_tol_m", self.arrive_tol_m),
            ("depth_error_margin_m", self.depth_error_margin_m),
            ("detection_timeout_s", self.detection_timeout_s),
            ("recovery_wait_s", self.recovery_wait_s),
            ("control_rate_hz", self.control_rate_hz),
            ("yaw_rate_max_rad_per_s", self.yaw_rate_max_rad_per_s),
            ("yaw_tol_rad", self.yaw_tol_rad),
            ("watchdog_s", self.watchdog_s),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ControlError::InvalidConfig(name));
            }
        }
        if self.slow_factor > 1.0 {
            return Err(ControlError::InvalidConfig("slow_factor"));
        }
        if self.human_abort_margin_px == 0 {
            return Err(ControlError::InvalidConfig("human_abort_margin_px"));
        }
        if self.max_aborts == 0 {
            return Err(ControlError::InvalidConfig("max_aborts"));
        }
        if !(self.grasp_depth_offset_m >= 0.0) {
            return Err(ControlError::InvalidConfig("grasp_depth_offset_m"));
        }
        Ok(())
    }
}
