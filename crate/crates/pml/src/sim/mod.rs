//! Deterministic 2D lane-keeping world: kinematic bicycle dynamics, road
//! geometry, and a ground-plane camera that renders road-only segmentation
//! frames. Stands in for a full driving simulator at desk scale.

pub mod camera;
pub mod dynamics;
pub mod episode;
pub mod geom;
pub mod render;
pub mod track;

pub use camera::CameraModel;
pub use dynamics::step_dynamics;
pub use episode::{
    default_max_steps, run_episode, run_episode_from, write_trajectory_log, Episode,
    EpisodeStatus, Policy, StepRecord,
};
pub use geom::{dist_to_polyline, Vec2};
pub use render::render_observation;
pub use track::{
    benchmark_track_names, make_lane_track, make_track, track_by_name, TaskKind, TrackFamily,
    TrackSpec, STRAIGHT_LEG, TURN_LEG, TURN_RADIUS, TWO_TURN_LEG, WAYPOINT_SPACING,
};
