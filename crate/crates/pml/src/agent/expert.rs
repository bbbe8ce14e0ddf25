//! Scripted pure-pursuit controller. It reads the true vehicle state, so it
//! is a privileged data-collection tool and a calibration baseline, not a
//! camera-driven agent.

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::sim::{Policy, TrackSpec};
use crate::steer::SteeringAction;
use crate::vehicle::VehicleState;

/// Chase point distance in meters. Small enough to track the 10 m benchmark
/// turns tightly, large enough to stay smooth at 0.5 m of travel per step.
pub const DEFAULT_LOOKAHEAD: f64 = 3.0;

/// Pure-pursuit steering toward the first waypoint at least `lookahead`
/// meters ahead of the nearest one. The wheel angle follows from the circle
/// through the vehicle and the chase point: curvature = 2 sin(alpha) / d,
/// where alpha is the bearing of the chase point in the vehicle frame.
///
/// Every operation here negates exactly under a mirror reflection of state
/// and track, which makes the controller antisymmetric on symmetric tracks.
pub fn scripted_expert(
    state: &VehicleState,
    track: &TrackSpec,
    lookahead: f64,
    wheelbase: f64,
    max_wheel_angle: f64,
) -> Result<SteeringAction> {
    assert!(lookahead > 0.0 && wheelbase > 0.0 && max_wheel_angle > 0.0);
    let limit = 5.0f64.max(2.0 * track.lane_width);
    let mut nearest = 0;
    let mut nearest_d2 = f64::INFINITY;
    for (i, w) in track.waypoints.iter().enumerate() {
        let (dx, dy) = (w.x - state.x, w.y - state.y);
        let d2 = dx * dx + dy * dy;
        if d2 < nearest_d2 {
            nearest_d2 = d2;
            nearest = i;
        }
    }
    if nearest_d2 > limit * limit {
        return Err(Error::NoWaypointInRange {
            distance: nearest_d2.sqrt(),
            limit,
        });
    }

    let look_sq = lookahead * lookahead;
    let target = track.waypoints[nearest..]
        .iter()
        .find(|w| {
            let (dx, dy) = (w.x - state.x, w.y - state.y);
            dx * dx + dy * dy >= look_sq
        })
        .unwrap_or_else(|| track.waypoints.last().expect("validated track"));

    let (dx, dy) = (target.x - state.x, target.y - state.y);
    let dist = (dx * dx + dy * dy).sqrt();
    if dist < 1e-9 {
        return SteeringAction::new(0.0);
    }
    let (sin_h, cos_h) = (state.heading.sin(), state.heading.cos());
    let forward = cos_h * dx + sin_h * dy;
    let lateral = -sin_h * dx + cos_h * dy;
    let alpha = lateral.atan2(forward);
    let curvature = 2.0 * alpha.sin() / dist;
    let wheel = (wheelbase * curvature).atan();
    SteeringAction::clamped(wheel / max_wheel_angle)
}

/// `Policy` wrapper around the scripted controller. It acts from the state
/// the simulator feeds it, ignoring the camera frame entirely.
pub struct ExpertPolicy {
    track: TrackSpec,
    lookahead: f64,
    wheelbase: f64,
    max_wheel_angle: f64,
    state: Option<VehicleState>,
}

impl ExpertPolicy {
    pub fn new(track: TrackSpec, cfg: &RunConfig) -> Self {
        Self::with_lookahead(track, cfg, DEFAULT_LOOKAHEAD)
    }

    pub fn with_lookahead(track: TrackSpec, cfg: &RunConfig, lookahead: f64) -> Self {
        ExpertPolicy {
            track,
            lookahead,
            wheelbase: cfg.wheelbase,
            max_wheel_angle: cfg.max_wheel_angle,
            state: None,
        }
    }
}

impl Policy for ExpertPolicy {
    fn act(&mut self, _obs: &GrayImage) -> Result<SteeringAction> {
        let state = self.state.as_ref().ok_or_else(|| Error::PolicyFault {
            step: 0,
            reason: "expert acted before receiving a state".into(),
        })?;
        scripted_expert(
            state,
            &self.track,
            self.lookahead,
            self.wheelbase,
            self.max_wheel_angle,
        )
    }

    fn note_true_state(&mut self, state: &VehicleState) {
        self.state = Some(state.clone());
    }
}
