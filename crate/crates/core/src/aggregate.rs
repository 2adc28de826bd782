//! Sliding-window aggregation of per-frame grasps into one frozen grasp.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec3;
use crate::grasp::GraspPose;
use crate::time::SimTime;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AggregateError {
    #[error("grasp at {got} arrived before the previous one at {last}")]
    NonMonotonicTime { last: SimTime, got: SimTime },
    #[error("invalid window configuration: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowConfig {
    pub capacity: usize,
    pub deviation_limit_m: f64,
    pub min_inliers: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig { capacity: 5, deviation_limit_m: 0.07, min_inliers: 3 }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> Result<(), AggregateError> {
        if self.min_inliers == 0 || self.min_inliers > self.capacity {
            return Err(AggregateError::InvalidConfig("need 0 < min_inliers <= capacity"));
        }
        if !(self.deviation_limit_m > 0.0) {
            return Err(AggregateError::InvalidConfig("deviation limit must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WindowEvent {
    Pending,
    Frozen { pose: GraspPose, initiation_span: SimTime },
    Restarted,
}

#[derive(Debug, Clone)]
pub struct GraspWindow {
    config: WindowConfig,
    entries: Vec<(GraspPose, SimTime)>,
    last_time: Option<SimTime>,
}

/// Arithmetic mean with the terms added in ascending order, so the result
/// does not depend on the order the values were supplied in.
pub fn canonical_mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

fn axis_mean(points: &[Vec3], axis: usize) -> f64 {
    let mut vals: Vec<f64> = points.iter().map(|p| p[axis]).collect();
    canonical_mean(&mut vals)
}

pub fn component_mean(points: &[Vec3]) -> Vec3 {
    Vec3::new(axis_mean(points, 0), axis_mean(points, 1), axis_mean(points, 2))
}

/// Indices of points within `limit` of the mean on every axis.
pub fn inliers(points: &[Vec3], limit: f64) -> Vec<usize> {
    let mean = component_mean(points);
    (0..points.len())
        .filter(|&i| (0..3).all(|a| (points[i][a] - mean[a]).abs() <= limit))
        .collect()
}

fn lex(a: &Vec3, b: &Vec3) -> Ordering {
    a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)).then(a.z.total_cmp(&b.z))
}

/// Highest quality first; ties go to the earlier frame, then to a fixed geometric order.
fn representative_order(a: &(GraspPose, SimTime), b: &(GraspPose, SimTime)) -> Ordering {
    b.0.quality
        .total_cmp(&a.0.quality)
        .then(a.1.cmp(&b.1))
        .then(lex(&a.0.point_base, &b.0.point_base))
        .then(a.0.source_pixel.cmp(&b.0.source_pixel))
        .then(a.0.yaw.total_cmp(&b.0.yaw))
        .then(a.0.width.total_cmp(&b.0.width))
}

impl GraspWindow {
    pub fn new(config: WindowConfig) -> Result<Self, AggregateError> {
        config.validate()?;
        Ok(GraspWindow { config, entries: Vec::with_capacity(config.capacity), last_time: None })
    }

    pub fn config(&self) -> &WindowConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    pub fn push(&mut self, pose: GraspPose, t: SimTime) -> Result<WindowEvent, AggregateError> {
        if let Some(last) = self.last_time {
            if t < last {
                return Err(AggregateError::NonMonotonicTime { last, got: t });
            }
        }
        self.last_time = Some(t);
        self.entries.push((pose, t));
        if self.entries.len() < self.config.capacity {
            return Ok(WindowEvent::Pending);
        }

        let entries = std::mem::take(&mut self.entries);
        let points: Vec<Vec3> = entries.iter().map(|(p, _)| p.point_base).collect();
        let keep = inliers(&points, self.config.deviation_limit_m);
        if keep.len() < self.config.min_inliers {
            return Ok(WindowEvent::Restarted);
        }
        let survivors: Vec<&(GraspPose, SimTime)> = keep.iter().map(|&i| &entries[i]).collect();
        let kept_points: Vec<Vec3> = survivors.iter().map(|(p, _)| p.point_base).collect();
        let best = survivors.iter().copied().min_by(|a, b| representative_order(a, b)).expect("survivors nonempty");
        let first = entries.iter().map(|(_, t)| *t).min().expect("window nonempty");
        let last = entries.iter().map(|(_, t)| *t).max().expect("window nonempty");
        let pose = GraspPose { point_base: component_mean(&kept_points), ..best.0.clone() };
        Ok(WindowEvent::Frozen { pose, initiation_span: last - first })
    }
}
