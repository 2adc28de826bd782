use super::pbvs::{pbvs_velocity, yaw_rate};
use super::state::{is_legal, HandoverState, Outcome};
use super::{ControlError, ControllerConfig};
use crate::aggregate::{GraspWindow, WindowConfig, WindowEvent};
use crate::geometry::{half_turn_error, Pose, Vec3};
use crate::grasp::pose::yaw_of;
use crate::grasp::GraspPose;
use crate::scene::{GraspOutcome, Jaws, MAX_GRIPPER_WIDTH};
use crate::time::SimTime;
use crate::trace::{PoseRecord, Record};

/// Camera position behind the tool center point, along the approach axis.
pub const CAMERA_OFFSET_M: f64 = 0.12;

/// Kinematic state of the free-flying end-effector, in the robot base frame.
/// The tool frame has z along the approach direction and x along the jaw closing direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmState {
    pub ee_pose: Pose,
    pub gripper_width: f64,
    pub home_pose: Pose,
    pub drop_pose: Pose,
}

impl ArmState {
    pub fn at_home(home_pose: Pose, drop_pose: Pose) -> Self {
        ArmState { ee_pose: home_pose, gripper_width: MAX_GRIPPER_WIDTH, home_pose, drop_pose }
    }

    pub fn camera_pose(&self) -> Pose {
        camera_pose(&self.ee_pose)
    }

    pub fn jaws(&self) -> Jaws {
        Jaws::new(self.ee_pose.position, self.ee_pose.axis_x())
    }
}

/// Camera frame (base coordinates) for a tool pose; the camera shares the tool orientation.
pub fn camera_pose(ee: &Pose) -> Pose {
    ee.compose(&Pose::translation(Vec3::new(0.0, 0.0, -CAMERA_OFFSET_M)))
}

/// Perception results for one frame as seen by the controller.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameSignals {
    pub seq: u64,
    pub capture_time: SimTime,
    pub target_present: bool,
    /// Filled only while the controller asks for grasp candidates.
    pub grasp: Option<GraspPose>,
    /// Filled only while a frozen grasp is being approached.
    pub monitor: Option<MonitorSignals>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MonitorSignals {
    /// Depth the frozen grasp point should have in this frame; `None` when it is out of view or too close.
    pub expected_depth: Option<f64>,
    pub depth_at_grasp_pixel: Option<f64>,
    /// A hand or body pixel lies within the abort margin of the reprojected grasp pixel.
    pub human_near_grasp: bool,
    /// A hand or body pixel lies near the image footprint of the jaws.
    pub human_near_jaws: bool,
}

impl MonitorSignals {
    pub fn depth_error(&self) -> Option<f64> {
        Some((self.depth_at_grasp_pixel? - self.expected_depth?).abs())
    }
}

/// Ground truth answer to "what happens if the jaws close here".
pub trait GraspProbe {
    fn close(&self, now: SimTime, jaws_base: &Jaws, width: f64) -> GraspOutcome;
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrozenGrasp {
    pub grasp: GraspPose,
    pub goal: Pose,
}

pub struct Controller {
    cfg: ControllerConfig,
    arm: ArmState,
    state: HandoverState,
    window: GraspWindow,
    frozen: Option<FrozenGrasp>,
    /// Point near which motion stays slow, kept after an abort until the arm has left it.
    slow_anchor: Option<Vec3>,
    velocity: Vec3,
    yaw_velocity: f64,
    last_advance: Option<SimTime>,
    waited: SimTime,
    grasp_after: Option<SimTime>,
    aborts: u32,
    collisions: u32,
    recovery_generation: u64,
    records: Vec<Record>,
}

fn secs(t: SimTime) -> (f64, u64) {
    (t.as_secs(), t.nanos())
}

/// Signed rotation about `axis` taking `from` to `to`, in `(-π, π]`.
fn signed_angle(from: &Vec3, to: &Vec3, axis: &Vec3) -> f64 {
    from.cross(to).dot(axis).atan2(from.dot(to))
}

impl Controller {
    pub fn new(cfg: ControllerConfig, window: WindowConfig, arm: ArmState) -> Result<Self, ControlError> {
        cfg.validate()?;
        Ok(Controller {
            cfg,
            arm,
            state: HandoverState::Home,
            window: GraspWindow::new(window)?,
            frozen: None,
            slow_anchor: None,
            velocity: Vec3::zeros(),
            yaw_velocity: 0.0,
            last_advance: None,
            waited: SimTime::ZERO,
            grasp_after: None,
            aborts: 0,
            collisions: 0,
            recovery_generation: 0,
            records: Vec::new(),
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.cfg
    }

    pub fn state(&self) -> HandoverState {
        self.state
    }

    pub fn arm(&self) -> &ArmState {
        &self.arm
    }

    pub fn frozen(&self) -> Option<&FrozenGrasp> {
        self.frozen.as_ref()
    }

    pub fn velocity(&self) -> Vec3 {
        self.velocity
    }

    pub fn aborts(&self) -> u32 {
        self.aborts
    }

    pub fn collisions(&self) -> u32 {
        self.collisions
    }

    pub fn is_done(&self) -> bool {
        self.state.is_done()
    }

    pub fn outcome(&self) -> Option<Outcome> {
        match self.state {
            HandoverState::Done(o) => Some(o),
            _ => None,
        }
    }

    /// Whether the next frame should carry grasp candidates.
    pub fn wants_grasp(&self) -> bool {
        self.state.is_waiting()
    }

    /// Whether the next frame should carry monitoring signals for the frozen grasp.
    pub fn wants_monitoring(&self) -> bool {
        self.frozen.is_some() && matches!(self.state, HandoverState::Approaching | HandoverState::SlowApproach | HandoverState::Grasping)
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn push_record(&mut self, r: Record) {
        self.records.push(r);
    }

    pub fn into_records(self) -> Vec<Record> {
        self.records
    }

    pub fn tick_interval(&self) -> SimTime {
        SimTime::at_rate(1, self.cfg.control_rate_hz)
    }

    fn goal_distance(&self) -> Option<f64> {
        let goal = match self.state {
            HandoverState::Home | HandoverState::Recovering => self.arm.home_pose.position,
            HandoverState::Transporting | HandoverState::Dropping => self.arm.drop_pose.position,
            _ => self.frozen.as_ref()?.goal.position,
        };
        Some((goal - self.arm.ee_pose.position).norm())
    }

    fn transition(&mut self, now: SimTime, to: HandoverState, reason: &str) -> Result<(), ControlError> {
        let from = self.state;
        if !is_legal(from, to) {
            return Err(ControlError::IllegalTransition { from, to });
        }
        self.state = to;
        let (t, t_ns) = secs(now);
        self.records.push(Record::Transition {
            t,
            t_ns,
            state_from: from,
            state_to: to,
            reason: reason.to_string(),
            ee_pose: PoseRecord::from(&self.arm.ee_pose),
            distance_to_goal: self.goal_distance(),
        });
        if let HandoverState::Done(outcome) = to {
            self.velocity = Vec3::zeros();
            self.yaw_velocity = 0.0;
            self.records.push(Record::Done { t, t_ns, outcome, aborts: self.aborts, collisions: self.collisions });
        }
        Ok(())
    }

    /// Integrates the current command up to `now`.
    fn advance(&mut self, now: SimTime) {
        let Some(prev) = self.last_advance else {
            self.last_advance = Some(now);
            return;
        };
        if now <= prev {
            return;
        }
        let dt = (now - prev).as_secs();
        if self.velocity != Vec3::zeros() {
            self.arm.ee_pose.position += self.velocity * dt;
        }
        if self.yaw_velocity != 0.0 {
            let axis = self.arm.ee_pose.axis_z();
            self.arm.ee_pose = self.arm.ee_pose.rotated_about(&axis, self.yaw_velocity * dt);
        }
        if self.state.is_waiting() {
            self.waited = self.waited + (now - prev);
        }
        self.last_advance = Some(now);
    }

    fn yaw_error_to(&self, goal: &Pose) -> f64 {
        let axis = self.arm.ee_pose.axis_z();
        match self.state {
            // Parallel jaws are symmetric under a half turn.
            HandoverState::Approaching | HandoverState::SlowApproach | HandoverState::Grasping => {
                half_turn_error(yaw_of(&axis, &goal.axis_x()), yaw_of(&axis, &self.arm.ee_pose.axis_x()))
            }
            _ => signed_angle(&self.arm.ee_pose.axis_x(), &goal.axis_x(), &axis),
        }
    }

    fn servo(&mut self, goal: &Pose, with_yaw: bool) {
        let mut v = pbvs_velocity(&self.arm.ee_pose.position, &goal.position, &self.cfg);
        if let Some(anchor) = self.slow_anchor {
            let cap = self.cfg.slow_factor * self.cfg.v_max_m_per_s;
            if (anchor - self.arm.ee_pose.position).norm() <= self.cfg.slow_zone_m && v.norm() > cap {
                v *= cap / v.norm();
            }
        }
        self.velocity = v;
        self.yaw_velocity = if with_yaw { yaw_rate(self.yaw_error_to(goal), &self.cfg) } else { 0.0 };
    }

    fn at(&self, goal: &Pose, with_yaw: bool) -> bool {
        (goal.position - self.arm.ee_pose.position).norm() <= self.cfg.arrive_tol_m
            && (!with_yaw || self.yaw_error_to(goal).abs() <= self.cfg.yaw_tol_rad)
    }

    /// Control tick: integrate motion, take time-driven transitions, then issue the next command.
    pub fn tick(&mut self, now: SimTime) -> Result<(), ControlError> {
        if self.is_done() {
            return Ok(());
        }
        self.advance(now);
        if now >= SimTime::from_secs(self.cfg.watchdog_s) {
            return self.transition(now, HandoverState::Done(Outcome::GraspFail), "watchdog");
        }
        if let Some(anchor) = self.slow_anchor {
            if self.frozen.is_none() && (anchor - self.arm.ee_pose.position).norm() > self.cfg.slow_zone_m {
                self.slow_anchor = None;
            }
        }

        use HandoverState::*;
        match self.state {
            Home => {
                if self.at(&self.arm.home_pose.clone(), true) {
                    self.transition(now, WaitingForObject, "at_home")?;
                }
            }
            WaitingForObject | Aggregating => {
                if self.waited >= SimTime::from_secs(self.cfg.detection_timeout_s) {
                    return self.transition(now, Done(Outcome::DetectionFail), "detection_timeout");
                }
            }
            Approaching | SlowApproach => {
                let goal = self.frozen.as_ref().expect("approach without frozen grasp").goal;
                let dist = (goal.position - self.arm.ee_pose.position).norm();
                if self.state == Approaching && dist <= self.cfg.slow_zone_m {
                    self.transition(now, SlowApproach, "slow_zone")?;
                }
                if self.state == SlowApproach && self.at(&goal, true) {
                    self.transition(now, Grasping, "arrived")?;
                    self.grasp_after = Some(now);
                }
            }
            Transporting => {
                if self.at(&self.arm.drop_pose.clone(), false) {
                    self.transition(now, Dropping, "at_drop")?;
                    self.arm.gripper_width = MAX_GRIPPER_WIDTH;
                }
            }
            Dropping => {
                self.transition(now, Done(Outcome::Success), "released")?;
            }
            Grasping | Recovering | Done(_) => {}
        }

        match self.state {
            Home => {
                let home = self.arm.home_pose;
                self.servo(&home, true);
            }
            Approaching | SlowApproach => {
                let goal = self.frozen.as_ref().expect("approach without frozen grasp").goal;
                self.servo(&goal, true);
            }
            Transporting => {
                let drop = self.arm.drop_pose;
                self.servo(&drop, false);
            }
            _ => {
                self.velocity = Vec3::zeros();
                self.yaw_velocity = 0.0;
            }
        }

        if !self.is_done() {
            let (t, t_ns) = secs(now);
            self.records.push(Record::Tick {
                t,
                t_ns,
                state: self.state,
                ee_pose: PoseRecord::from(&self.arm.ee_pose),
                gripper_width: self.arm.gripper_width,
                speed: self.velocity.norm(),
            });
        }
        Ok(())
    }

    fn freeze(&mut self, now: SimTime, grasp: GraspPose, span: SimTime) -> Result<(), ControlError> {
        let closing = grasp.closing_axis();
        let approach = grasp.approach_axis;
        let goal_position = grasp.point_base + approach * self.cfg.grasp_depth_offset_m;
        let goal = Pose::from_axes(goal_position, closing, approach.cross(&closing), approach);
        let (t, t_ns) = secs(now);
        self.records.push(Record::Frozen {
            t,
            t_ns,
            point: grasp.point_base.into(),
            yaw: grasp.yaw,
            width: grasp.width,
            quality: grasp.quality,
            source_pixel: grasp.source_pixel,
            window_span_s: span.as_secs(),
        });
        self.arm.gripper_width = grasp.width;
        self.slow_anchor = Some(grasp.point_base);
        self.frozen = Some(FrozenGrasp { grasp, goal });
        self.transition(now, HandoverState::Approaching, "grasp_frozen")
    }

    fn abort(&mut self, now: SimTime, reason: &str) -> Result<(), ControlError> {
        self.aborts += 1;
        let (t, t_ns) = secs(now);
        self.records.push(Record::Abort { t, t_ns, reason: reason.to_string(), count: self.aborts });
        self.frozen = None;
        self.window.clear();
        self.grasp_after = None;
        self.velocity = Vec3::zeros();
        self.yaw_velocity = 0.0;
        self.arm.gripper_width = MAX_GRIPPER_WIDTH;
        if self.aborts > self.cfg.max_aborts {
            self.transition(now, HandoverState::Done(Outcome::GraspFail), "abort_limit")
        } else {
            self.transition(now, HandoverState::Home, reason)
        }
    }

    fn close(&mut self, now: SimTime, probe: &dyn GraspProbe) -> Result<(), ControlError> {
        let frozen = self.frozen.clone().expect("grasping without frozen grasp");
        let jaws = self.arm.jaws();
        let outcome = probe.close(now, &jaws, frozen.grasp.width);
        let (t, t_ns) = secs(now);
        self.records.push(Record::GraspAttempt {
            t,
            t_ns,
            outcome,
            jaw_center: jaws.center.into(),
            jaw_axis: jaws.axis.into(),
            width: frozen.grasp.width,
        });
        match outcome {
            GraspOutcome::ObjectSecured(_) => self.transition(now, HandoverState::Transporting, "object_secured"),
            GraspOutcome::EmptyClose => {
                self.arm.gripper_width = 0.0;
                self.transition(now, HandoverState::Done(Outcome::GraspFail), "empty_close")
            }
            GraspOutcome::ObjectTooWide => self.transition(now, HandoverState::Done(Outcome::GraspFail), "object_too_wide"),
            GraspOutcome::HumanPinch => {
                self.arm.gripper_width = 0.0;
                self.transition(now, HandoverState::Done(Outcome::SafetyViolation), "human_pinch")
            }
        }
    }

    /// Handles the perception output of one frame delivered at `now`.
    pub fn on_frame(&mut self, now: SimTime, sig: &FrameSignals, probe: &dyn GraspProbe) -> Result<(), ControlError> {
        if self.is_done() {
            return Ok(());
        }
        self.advance(now);
        use HandoverState::*;
        if self.state == WaitingForObject && sig.target_present {
            self.transition(now, Aggregating, "target_detected")?;
        }
        match self.state {
            Aggregating => {
                if let Some(g) = &sig.grasp {
                    match self.window.push(g.clone(), sig.capture_time)? {
                        WindowEvent::Frozen { pose, initiation_span } => self.freeze(now, pose, initiation_span)?,
                        WindowEvent::Restarted | WindowEvent::Pending => {}
                    }
                }
            }
            Approaching | SlowApproach if self.cfg.abort_monitoring => {
                if let Some(m) = &sig.monitor {
                    if m.human_near_grasp {
                        self.abort(now, "human_near_grasp")?;
                    } else if m.depth_error().is_some_and(|e| e > self.cfg.depth_error_margin_m) {
                        self.abort(now, "depth_deviation")?;
                    }
                }
            }
            Grasping if self.grasp_after.is_some_and(|t| sig.capture_time >= t) => {
                let m = sig.monitor.unwrap_or_default();
                if self.cfg.abort_monitoring && m.human_near_grasp {
                    self.abort(now, "human_near_grasp")?;
                } else if self.cfg.abort_monitoring && m.human_near_jaws {
                    self.abort(now, "human_near_jaws")?;
                } else if self.cfg.abort_monitoring && m.depth_error().is_some_and(|e| e > self.cfg.depth_error_margin_m) {
                    self.abort(now, "depth_deviation")?;
                } else {
                    self.close(now, probe)?;
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// A sensed collision: stop, open the gripper and wait. Returns when homing should begin
    /// and the generation that `recovery_elapsed` must present.
    pub fn collision(&mut self, now: SimTime) -> Result<Option<(SimTime, u64)>, ControlError> {
        if self.is_done() {
            return Ok(None);
        }
        self.advance(now);
        self.velocity = Vec3::zeros();
        self.yaw_velocity = 0.0;
        self.arm.gripper_width = MAX_GRIPPER_WIDTH;
        self.collisions += 1;
        self.recovery_generation += 1;
        if let Some(f) = self.frozen.take() {
            self.slow_anchor = Some(f.grasp.point_base);
        }
        self.window.clear();
        self.grasp_after = None;
        let (t, t_ns) = secs(now);
        self.records.push(Record::Collision { t, t_ns, gripper_width: self.arm.gripper_width, count: self.collisions });
        self.transition(now, HandoverState::Recovering, "collision")?;
        Ok(Some((now + SimTime::from_secs(self.cfg.recovery_wait_s), self.recovery_generation)))
    }

    pub fn recovery_elapsed(&mut self, now: SimTime, generation: u64) -> Result<(), ControlError> {
        if self.state != HandoverState::Recovering || generation != self.recovery_generation {
            return Ok(());
        }
        self.advance(now);
        self.transition(now, HandoverState::Home, "recovery_wait_elapsed")
    }
}
