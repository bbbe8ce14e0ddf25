use crate::error::{Error, Result};
use crate::steer::SteeringAction;
use serde::{Deserialize, Serialize};

/// Everything a run needs beyond the track: frame geometry, the candidate
/// action grid, vehicle and camera constants, and the seed.
///
/// Loads from a TOML file; every field can also be overridden by the CLI
/// flag of the same name. Missing fields take the defaults below, so a
/// config file only needs the fields it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Square frame edge in pixels.
    pub image_size: usize,
    /// Candidate actions for the covert sweep. Strictly increasing and
    /// symmetric about zero so left and right are treated evenhandedly.
    pub steering_grid: Vec<SteeringAction>,
    /// How many dynamics steps ahead the forward model imagines.
    pub prediction_horizon: usize,
    /// Simulation step in seconds.
    pub sim_dt: f64,
    /// Constant forward speed in m/s.
    pub speed: f64,
    /// Distance between axles in meters.
    pub wheelbase: f64,
    /// Road-wheel angle at full steering lock, radians.
    pub max_wheel_angle: f64,
    /// Camera height above the ground plane, meters.
    pub camera_height: f64,
    /// Downward camera tilt, radians.
    pub camera_pitch: f64,
    /// Horizontal field of view, radians.
    pub camera_fov: f64,
    /// Ground farther than this from the camera renders as background.
    pub camera_max_range: f64,
    /// Reaching this close to the goal waypoint counts as success, meters.
    pub capture_radius: f64,
    /// Master seed; every pipeline stage derives its own stream from it.
    pub rng_seed: u64,
}

/// 21 evenly spaced actions from -1 to 1. Constructed from integers so the
/// grid is exactly symmetric: value(20-k) is the bit-exact negation of
/// value(k).
pub fn default_steering_grid() -> Vec<SteeringAction> {
    (0..=20)
        .map(|k| SteeringAction::new((k as f64 - 10.0) / 10.0).expect("grid values in range"))
        .collect()
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            image_size: 64,
            steering_grid: default_steering_grid(),
            prediction_horizon: 4,
            sim_dt: 0.1,
            speed: 5.0,
            wheelbase: 2.5,
            max_wheel_angle: 0.5,
            camera_height: 1.6,
            camera_pitch: 0.30,
            camera_fov: 1.3,
            camera_max_range: 60.0,
            capture_radius: 2.0,
            rng_seed: 7,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.image_size < 2 {
            return fail(format!("image_size {} is too small", self.image_size));
        }
        if self.steering_grid.is_empty() {
            return fail("steering_grid is empty".into());
        }
        let grid = &self.steering_grid;
        for pair in grid.windows(2) {
            if pair[1].value() <= pair[0].value() {
                return fail(format!(
                    "steering_grid must be strictly increasing, found {} after {}",
                    pair[1].value(),
                    pair[0].value()
                ));
            }
        }
        let n = grid.len();
        for i in 0..n {
            let (a, b) = (grid[i].value(), grid[n - 1 - i].value());
            if a != -b {
                return fail(format!(
                    "steering_grid must be symmetric about 0, found {a} paired with {b}"
                ));
            }
        }
        if self.prediction_horizon < 1 {
            return fail("prediction_horizon must be at least 1".into());
        }
        for (name, value) in [
            ("sim_dt", self.sim_dt),
            ("speed", self.speed),
            ("wheelbase", self.wheelbase),
            ("camera_height", self.camera_height),
            ("camera_max_range", self.camera_max_range),
            ("capture_radius", self.capture_radius),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return fail(format!("{name} must be a positive finite number, got {value}"));
            }
        }
        if !self.max_wheel_angle.is_finite()
            || self.max_wheel_angle <= 0.0
            || self.max_wheel_angle >= std::f64::consts::FRAC_PI_2
        {
            return fail(format!(
                "max_wheel_angle must lie in (0, pi/2), got {}",
                self.max_wheel_angle
            ));
        }
        if !self.camera_pitch.is_finite()
            || self.camera_pitch < 0.0
            || self.camera_pitch >= std::f64::consts::FRAC_PI_2
        {
            return fail(format!(
                "camera_pitch must lie in [0, pi/2), got {}",
                self.camera_pitch
            ));
        }
        if !self.camera_fov.is_finite()
            || self.camera_fov <= 0.0
            || self.camera_fov >= std::f64::consts::PI
        {
            return fail(format!(
                "camera_fov must lie in (0, pi), got {}",
                self.camera_fov
            ));
        }
        Ok(())
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self)
            .map_err(|e| Error::InvalidConfig(format!("serialization failed: {e}")))
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("parse failed: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}
