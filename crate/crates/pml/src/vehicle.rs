use crate::error::{Error, Result};

/// Wraps an angle into `(-pi, pi]`.
///
/// In-range angles are returned untouched (bit-exact), which keeps exact
/// left-right symmetry intact: wrap(-t) is the exact negation of wrap(t)
/// for every t that lands strictly inside the interval. Out-of-range
/// angles go through `rem_euclid`, which avoids the drift of repeated
/// add/subtract loops for far-out inputs.
pub fn wrap_angle(theta: f64) -> f64 {
    if theta > -std::f64::consts::PI && theta <= std::f64::consts::PI {
        return theta;
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let wrapped = theta.rem_euclid(two_pi); // in [0, 2*pi)
    if wrapped > std::f64::consts::PI {
        wrapped - two_pi
    } else {
        wrapped
    }
}

/// Ground-truth vehicle pose and speed in the world frame.
///
/// The world frame is right-handed looking down: `x` is the initial driving
/// direction, `y` points to the driver's right, and `heading` is measured
/// from `+x` toward `+y`. A positive steering action therefore increases the
/// heading and turns the vehicle right.
///
/// Only the simulation, the scripted expert, and evaluation code may read
/// this. Agents under test act on camera images alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    /// Heading in radians, always in `(-pi, pi]`.
    pub heading: f64,
    /// Forward speed in m/s, held constant during an episode.
    pub speed: f64,
}

impl VehicleState {
    pub fn new(x: f64, y: f64, heading: f64, speed: f64) -> Result<Self> {
        for (field, value) in [("x", x), ("y", y), ("heading", heading), ("speed", speed)] {
            if !value.is_finite() {
                return Err(Error::NonFiniteState { field, value });
            }
        }
        if speed <= 0.0 {
            return Err(Error::NonPositiveSpeed(speed));
        }
        Ok(Self {
            x,
            y,
            heading: wrap_angle(heading),
            speed,
        })
    }

    /// Pose reflected across the world `y = 0` plane. Useful for checking
    /// left-right symmetry: mirroring the state mirrors the camera view.
    pub fn reflected(&self) -> Self {
        Self {
            x: self.x,
            y: -self.y,
            heading: wrap_angle(-self.heading),
            speed: self.speed,
        }
    }

    /// Unit forward direction in world coordinates.
    pub fn forward(&self) -> (f64, f64) {
        (self.heading.cos(), self.heading.sin())
    }
}
