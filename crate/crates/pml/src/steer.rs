use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Normalized steering command in `[-1, 1]`.
///
/// `-1` is full left, `+1` full right, `0` straight ahead. The value is a
/// fraction of the maximum road-wheel angle, which the simulation applies
/// when stepping the vehicle. Construction rejects NaN, infinity, and
/// out-of-range values, so every held value is usable as-is.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SteeringAction(f64);

impl SteeringAction {
    pub const MIN: f64 = -1.0;
    pub const MAX: f64 = 1.0;

    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::NonFiniteSteering(value));
        }
        if !(Self::MIN..=Self::MAX).contains(&value) {
            return Err(Error::SteeringOutOfRange(value));
        }
        Ok(Self(value))
    }

    /// Clamps a finite raw command into range. Non-finite input is an error,
    /// not a clamp: a NaN command upstream is a bug worth surfacing.
    pub fn clamped(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::NonFiniteSteering(value));
        }
        Ok(Self(value.clamp(Self::MIN, Self::MAX)))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// The mirror-image command: steer as far the other way.
    pub fn negated(self) -> Self {
        // -0.0 and 0.0 compare equal; normalize so mirrored data keeps
        // byte-identical zero actions.
        if self.0 == 0.0 {
            Self(0.0)
        } else {
            Self(-self.0)
        }
    }
}

impl TryFrom<f64> for SteeringAction {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<SteeringAction> for f64 {
    fn from(action: SteeringAction) -> f64 {
        action.value()
    }
}
