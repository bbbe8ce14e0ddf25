use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::sim::camera::CameraModel;
use crate::sim::dynamics::step_dynamics;
use crate::sim::geom::{dist_to_polyline, Vec2};
use crate::sim::render::render_observation;
use crate::sim::track::TrackSpec;
use crate::steer::SteeringAction;
use crate::vehicle::VehicleState;

/// Something that turns camera frames into steering commands.
///
/// Policies fail loudly: an error out of `act` aborts the episode as a
/// policy fault rather than coasting on a stale action.
pub trait Policy {
    fn act(&mut self, obs: &GrayImage) -> Result<SteeringAction>;

    /// Privileged hook the simulator calls with the true state right
    /// before each observation. Data-collection policies (the scripted
    /// expert, the oracle-model agent) use it; agents under evaluation on
    /// camera input alone must leave it as this no-op.
    fn note_true_state(&mut self, _state: &VehicleState) {}
}

impl<F> Policy for F
where
    F: FnMut(&GrayImage) -> Result<SteeringAction>,
{
    fn act(&mut self, obs: &GrayImage) -> Result<SteeringAction> {
        self(obs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpisodeStatus {
    Running,
    Success,
    OffLane,
    Timeout,
}

impl EpisodeStatus {
    pub fn label(self) -> &'static str {
        match self {
            EpisodeStatus::Running => "running",
            EpisodeStatus::Success => "success",
            EpisodeStatus::OffLane => "off_lane",
            EpisodeStatus::Timeout => "timeout",
        }
    }
}

/// Final account of one driving attempt.
#[derive(Debug, Clone)]
pub struct Episode {
    pub track_name: String,
    pub status: EpisodeStatus,
    pub elapsed_steps: usize,
    pub final_state: VehicleState,
}

/// One row of the trajectory log: the state the policy saw, what it did,
/// and how far it stood from the lane center at that moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub action: f64,
    pub deviation: f64,
}

/// Runs a policy from the track's canonical start pose.
pub fn run_episode(
    track: &TrackSpec,
    policy: &mut dyn Policy,
    config: &RunConfig,
    max_steps: usize,
) -> Result<(Episode, Vec<StepRecord>)> {
    let start = VehicleState::new(
        track.start_pos.x,
        track.start_pos.y,
        track.start_heading,
        config.speed,
    )?;
    run_episode_from(track, policy, config, max_steps, start)
}

/// Runs a policy from an explicit start state (evaluation uses perturbed
/// starts). Terminates on the first of: goal reached within the capture
/// radius, lateral deviation beyond half the lane width, or `max_steps`.
pub fn run_episode_from(
    track: &TrackSpec,
    policy: &mut dyn Policy,
    config: &RunConfig,
    max_steps: usize,
    start: VehicleState,
) -> Result<(Episode, Vec<StepRecord>)> {
    config.validate()?;
    track.validate()?;
    let camera = CameraModel::from_config(config)?;
    let goal = track.goal();
    let off_lane_bound = track.lane_width / 2.0;

    let mut state = start;
    let mut log: Vec<StepRecord> = Vec::new();
    let mut status = EpisodeStatus::Running;
    let mut step = 0;
    while status == EpisodeStatus::Running {
        let pos = Vec2::new(state.x, state.y);
        let deviation = dist_to_polyline(pos, &track.centerline);
        if pos.dist(goal) <= config.capture_radius {
            status = EpisodeStatus::Success;
            break;
        }
        if deviation > off_lane_bound {
            status = EpisodeStatus::OffLane;
            break;
        }
        if step >= max_steps {
            status = EpisodeStatus::Timeout;
            break;
        }

        let obs = render_observation(&state, track, &camera);
        policy.note_true_state(&state);
        let action = policy.act(&obs).map_err(|e| Error::PolicyFault {
            step,
            reason: e.to_string(),
        })?;
        log.push(StepRecord {
            step,
            x: state.x,
            y: state.y,
            heading: state.heading,
            action: action.value(),
            deviation,
        });
        state = step_dynamics(
            &state,
            action,
            config.sim_dt,
            config.wheelbase,
            config.max_wheel_angle,
        );
        step += 1;
    }

    Ok((
        Episode {
            track_name: track.name.clone(),
            status,
            elapsed_steps: step,
            final_state: state,
        },
        log,
    ))
}

/// A generous step budget for a track: its length at cruise speed plus
/// half again, plus slack for the approach.
pub fn default_max_steps(track: &TrackSpec, config: &RunConfig) -> usize {
    let steps = track.length() / (config.speed * config.sim_dt);
    (steps * 1.5) as usize + 50
}

/// Writes the per-step log as tab-separated text with a fixed header.
pub fn write_trajectory_log(path: &std::path::Path, log: &[StepRecord]) -> Result<()> {
    let mut out = String::from("step\tx\ty\theading\taction\tdeviation\n");
    for rec in log {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            rec.step, rec.x, rec.y, rec.heading, rec.action, rec.deviation
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}
