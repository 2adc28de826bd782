//! One handover trial: camera pipeline, oracle perception, grasp synthesis
//! and the controller, all advanced on a single virtual clock.

use thiserror::Error;

use super::engine::{Engine, Step};
use super::graph::PipelineConfig;
use super::PipelineError;
use crate::aggregate::WindowConfig;
use crate::control::{ArmState, ControlError, Controller, ControllerConfig, FrameSignals, GraspProbe, MonitorSignals, Outcome};
use crate::geometry::{CameraIntrinsics, DepthImage, Pose, Vec3};
use crate::grasp::{synthesize, GraspParams};
use crate::perception::{select_target, Perception, SegMask};
use crate::scene::{grasp_outcome, render, GraspOutcome, Jaws, SceneModel, JAW_RADIUS};
use crate::time::SimTime;
use crate::trace::Record;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrialError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Control(#[from] ControlError),
}

pub struct TrialSetup<'a> {
    pub scene: &'a SceneModel,
    pub intrinsics: CameraIntrinsics,
    pub perception: &'a Perception,
    pub pipeline: &'a PipelineConfig,
    pub controller: ControllerConfig,
    pub window: WindowConfig,
    pub grasp: GraspParams,
    pub reach_m: f64,
    /// Tool poses in the robot base frame.
    pub home_pose: Pose,
    pub drop_pose: Pose,
    /// Times of scripted collision events, seconds.
    pub collisions_s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRun {
    pub records: Vec<Record>,
    pub outcome: Outcome,
    pub end_time: SimTime,
    pub aborts: u32,
    pub collisions: u32,
}

/// Whether a human pixel within Chebyshev distance `r` of `(u, v)` is closer than `limit`
/// (or blind). Human surfaces well behind the queried point do not count. `(u, v)` may be off-image.
fn human_near(human: &SegMask, depth: &DepthImage, u: i64, v: i64, r: i64, limit: f64) -> bool {
    let u0 = (u - r).max(0);
    let v0 = (v - r).max(0);
    let u1 = (u + r).min(human.width as i64 - 1);
    let v1 = (v + r).min(human.height as i64 - 1);
    (v0..=v1).any(|y| {
        (u0..=u1).any(|x| {
            let (x, y) = (x as usize, y as usize);
            human.get(x, y) && {
                let d = depth.get(x, y);
                d <= 0.0 || d < limit
            }
        })
    })
}

/// Valid depth in the 3×3 neighbourhood of `(u, v)` closest to `expected`.
fn depth_near(depth: &DepthImage, u: usize, v: usize, expected: f64) -> Option<f64> {
    let mut best: Option<f64> = None;
    for y in v.saturating_sub(1)..=(v + 1).min(depth.height - 1) {
        for x in u.saturating_sub(1)..=(u + 1).min(depth.width - 1) {
            let d = depth.get(x, y);
            if d > 0.0 && best.is_none_or(|b| (d - expected).abs() < (b - expected).abs()) {
                best = Some(d);
            }
        }
    }
    best
}

/// Monitoring signals for the frozen grasp point and the current jaws, seen from `cam_to_base`.
/// Human pixels more than `depth_band` behind the checked point are ignored.
#[allow(clippy::too_many_arguments)]
pub fn monitor_signals(
    point_base: &Vec3,
    jaws_base: &Jaws,
    jaw_width: f64,
    depth: &DepthImage,
    human: &SegMask,
    intr: &CameraIntrinsics,
    cam_to_base: &Pose,
    margin_px: usize,
    depth_band: f64,
) -> MonitorSignals {
    let base_to_cam = cam_to_base.inverse();
    let margin = margin_px as i64;
    let mut out = MonitorSignals::default();

    let p = base_to_cam.transform_point(point_base);
    if p.z > 0.0 {
        let (u, v) = (intr.fx * p.x / p.z + intr.cx, intr.fy * p.y / p.z + intr.cy);
        let (ui, vi) = (u.round() as i64, v.round() as i64);
        out.human_near_grasp = human_near(human, depth, ui, vi, margin, p.z + depth_band);
        if intr.contains(u, v) && p.z >= intr.min_depth && p.z <= intr.max_depth {
            out.expected_depth = Some(p.z);
            out.depth_at_grasp_pixel = depth_near(depth, ui as usize, vi as usize, p.z);
        }
    }

    let (a, b) = jaws_base.endpoints(jaw_width);
    const SAMPLES: usize = 16;
    for k in 0..=SAMPLES {
        let q = base_to_cam.transform_point(&(a + (b - a) * (k as f64 / SAMPLES as f64)));
        if q.z <= 0.0 {
            continue;
        }
        let (u, v) = (intr.fx * q.x / q.z + intr.cx, intr.fy * q.y / q.z + intr.cy);
        let r = margin + (JAW_RADIUS * intr.fx.max(intr.fy) / q.z).ceil() as i64;
        if human_near(human, depth, u.round() as i64, v.round() as i64, r, q.z + depth_band) {
            out.human_near_jaws = true;
            break;
        }
    }
    out
}

struct SceneProbe<'a> {
    scene: &'a SceneModel,
}

impl GraspProbe for SceneProbe<'_> {
    fn close(&self, now: SimTime, jaws_base: &Jaws, width: f64) -> GraspOutcome {
        let snapshot = self.scene.scene_at(now.as_secs());
        let base = &self.scene.robot_base;
        let jaws = Jaws::new(base.transform_point(&jaws_base.center), base.rotate(&jaws_base.axis));
        grasp_outcome(&snapshot, &jaws, width).unwrap_or(GraspOutcome::EmptyClose)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum HostEvent {
    Collision,
    Recovery(u64),
    Tick,
}

/// Runs one trial to completion.
pub fn run_trial(setup: &TrialSetup) -> Result<TrialRun, TrialError> {
    let graph = setup.pipeline.compile()?;
    let mut engine = Engine::new(graph, false);
    let arm = ArmState::at_home(setup.home_pose, setup.drop_pose);
    let mut ctl = Controller::new(setup.controller, setup.window, arm)?;
    let probe = SceneProbe { scene: setup.scene };
    let intr = &setup.intrinsics;
    let base = setup.scene.robot_base;
    let tick = ctl.tick_interval();

    // Host timers, kept sorted by (time, kind) and consumed from the front.
    let mut timers: Vec<(SimTime, HostEvent)> = setup.collisions_s.iter().map(|&t| (SimTime::from_secs(t), HostEvent::Collision)).collect();
    timers.push((SimTime::ZERO, HostEvent::Tick));
    timers.sort();
    let mut camera_poses: std::collections::BTreeMap<u64, Pose> = std::collections::BTreeMap::new();
    let hard_stop = SimTime::from_secs(setup.controller.watchdog_s) + SimTime::from_secs(1.0);

    while !ctl.is_done() {
        let next_host = timers.first().map(|(t, _)| *t).unwrap_or(hard_stop);
        if engine.next_time() <= next_host {
            let now = engine.next_time();
            match engine.step() {
                Step::Captured { seq, .. } => {
                    camera_poses.insert(seq, ctl.arm().camera_pose());
                }
                Step::Delivered(stamp) => {
                    let cam_base = camera_poses.remove(&stamp.sequence).expect("pose of captured frame");
                    camera_poses = camera_poses.split_off(&stamp.sequence);
                    let sig = frame_signals(setup, &ctl, &stamp.sequence, stamp.capture_time, &cam_base, &base, intr);
                    let (t, t_ns) = (now.as_secs(), now.nanos());
                    ctl.push_record(Record::Frame {
                        t,
                        t_ns,
                        seq: stamp.sequence,
                        capture_ns: stamp.capture_time.nanos(),
                        target: sig.target_present,
                        quality: sig.grasp.as_ref().map(|g| g.quality),
                    });
                    ctl.on_frame(now, &sig, &probe)?;
                }
                Step::Internal => {}
            }
            continue;
        }
        if next_host >= hard_stop {
            break;
        }
        let (now, ev) = timers.remove(0);
        match ev {
            HostEvent::Collision => {
                if let Some((at, generation)) = ctl.collision(now)? {
                    timers.push((at, HostEvent::Recovery(generation)));
                }
            }
            HostEvent::Recovery(generation) => ctl.recovery_elapsed(now, generation)?,
            HostEvent::Tick => {
                ctl.tick(now)?;
                timers.push((now + tick, HostEvent::Tick));
            }
        }
        timers.sort();
    }

    let end_time = ctl.records().iter().rev().find_map(|r| r.time()).unwrap_or(SimTime::ZERO);
    let outcome = ctl.outcome().unwrap_or(Outcome::GraspFail);
    Ok(TrialRun { aborts: ctl.aborts(), collisions: ctl.collisions(), outcome, end_time, records: ctl.into_records() })
}

fn frame_signals(
    setup: &TrialSetup,
    ctl: &Controller,
    seq: &u64,
    capture: SimTime,
    cam_base: &Pose,
    base: &Pose,
    intr: &CameraIntrinsics,
) -> FrameSignals {
    let snapshot = setup.scene.scene_at(capture.as_secs());
    let cam_world = base.compose(cam_base);
    let rendered = render(&snapshot, &cam_world, intr);
    let p = setup.perception;
    let boxes = p.detector.detect(&rendered, *seq);
    let hand = p.hand.segment_hand(&rendered, *seq);
    let body = p.body.segment_body(&rendered, *seq);
    let target = select_target(&boxes, &rendered.depth, intr, cam_base, setup.reach_m);

    let grasp = match (&target, ctl.wants_grasp()) {
        (Some(t), true) => synthesize(&rendered.depth, &t.bbox, &hand, &body, intr, cam_base, &setup.grasp).ok(),
        _ => None,
    };
    let monitor = match (ctl.frozen(), ctl.wants_monitoring()) {
        (Some(f), true) => Some(monitor_signals(
            &f.grasp.point_base,
            &ctl.arm().jaws(),
            f.grasp.width,
            &rendered.depth,
            &hand.union(&body),
            intr,
            cam_base,
            ctl.config().human_abort_margin_px,
            ctl.config().depth_error_margin_m,
        )),
        _ => None,
    };
    FrameSignals { seq: *seq, capture_time: capture, target_present: target.is_some(), grasp, monitor }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn human_near_ignores_far_background() {
        let mut m = SegMask::empty(13, 9);
        let mut d = DepthImage::filled(13, 9, 1.0);
        m.set(7, 4, true);
        assert!(!human_near(&m, &d, 5, 4, 2, 0.5));
        d.set(7, 4, 0.45);
        assert!(human_near(&m, &d, 5, 4, 2, 0.5));
        assert!(!human_near(&m, &d, 5, 4, 1, 0.5));
        // Blind pixels are always treated as near.
        d.set(7, 4, 0.0);
        assert!(human_near(&m, &d, 5, 4, 2, 0.5));
        assert!(!human_near(&m, &d, -9, 4, 2, 0.5));
    }

    #[test]
    fn depth_near_prefers_expected() {
        let mut d = DepthImage::filled(5, 5, 2.0);
        d.set(2, 2, 0.0);
        d.set(1, 1, 0.41);
        assert_eq!(depth_near(&d, 2, 2, 0.4), Some(0.41));
        assert_eq!(depth_near(&d, 4, 4, 0.4), Some(2.0));
    }
}
