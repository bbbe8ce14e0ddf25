use crate::config::RunConfig;
use crate::error::{Error, Result};

/// Pinhole camera rigidly mounted on the vehicle, looking forward and
/// pitched down toward the road.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    /// Meters above the ground plane.
    pub height: f64,
    /// Downward tilt in radians; 0 looks at the horizon.
    pub pitch: f64,
    /// Horizontal field of view in radians.
    pub horizontal_fov: f64,
    /// Square output frame edge in pixels.
    pub image_size: usize,
    /// Ground farther than this from the vehicle renders as background.
    pub max_range: f64,
}

impl CameraModel {
    pub fn new(
        height: f64,
        pitch: f64,
        horizontal_fov: f64,
        image_size: usize,
        max_range: f64,
    ) -> Result<Self> {
        let cam = Self {
            height,
            pitch,
            horizontal_fov,
            image_size,
            max_range,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        Self::new(
            cfg.camera_height,
            cfg.camera_pitch,
            cfg.camera_fov,
            cfg.image_size,
            cfg.camera_max_range,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.height > 0.0) || !self.height.is_finite() {
            return fail(format!("camera height must be positive, got {}", self.height));
        }
        if !(self.horizontal_fov > 0.0) || self.horizontal_fov >= std::f64::consts::PI {
            return fail(format!(
                "camera horizontal_fov must lie in (0, pi), got {}",
                self.horizontal_fov
            ));
        }
        if !self.pitch.is_finite()
            || self.pitch < 0.0
            || self.pitch >= std::f64::consts::FRAC_PI_2
        {
            return fail(format!("camera pitch must lie in [0, pi/2), got {}", self.pitch));
        }
        if self.image_size < 2 {
            return fail(format!("camera image_size {} is too small", self.image_size));
        }
        if !(self.max_range > 0.0) || !self.max_range.is_finite() {
            return fail(format!("camera max_range must be positive, got {}", self.max_range));
        }
        Ok(())
    }

    /// Focal length in pixels for the square sensor.
    pub fn focal(&self) -> f64 {
        (self.image_size as f64 / 2.0) / (self.horizontal_fov / 2.0).tan()
    }
}
