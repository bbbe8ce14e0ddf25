//! Forward models: predictors of the future camera frame conditioned on a
//! held steering action. Two interchangeable implementations exist: the
//! oracle, which steps the real simulator from the vehicle's true state,
//! and the learned network, which rolls its own predictions forward
//! autoregressively.

pub mod train;
pub mod unet;

pub use train::{
    backprop_step, evaluate_model, loss_and_grad, train_forward_model, EpochStats, LossKind,
    TrainConfig, TrainReport,
};
pub use unet::{NetSpec, UNet};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::net::{ParamStore, Scalar, Tensor};
use crate::sim::{render_observation, step_dynamics, CameraModel, TrackSpec};
use crate::steer::SteeringAction;
use crate::vehicle::VehicleState;

/// Anything that can imagine the frame `horizon` steps ahead under a
/// constant action. `observe_state` is a privileged side channel for
/// implementations that track the true vehicle state; learned models
/// ignore it.
pub trait ForwardModel {
    fn predict(&self, obs: &GrayImage, action: SteeringAction, horizon: usize) -> Result<GrayImage>;

    fn observe_state(&mut self, _state: &VehicleState) {}
}

/// Ground-truth predictor: advance the true state `horizon` steps holding
/// the action, then render once.
pub fn oracle_predict(
    state: &VehicleState,
    action: SteeringAction,
    horizon: usize,
    track: &TrackSpec,
    camera: &CameraModel,
    cfg: &RunConfig,
) -> GrayImage {
    assert!(horizon >= 1, "prediction horizon must be at least 1");
    let mut s = state.clone();
    for _ in 0..horizon {
        s = step_dynamics(&s, action, cfg.sim_dt, cfg.wheelbase, cfg.max_wheel_angle);
    }
    render_observation(&s, track, camera)
}

/// Forward model backed by the simulator itself. It ignores the observed
/// frame and predicts from the most recently observed true state, so it is
/// exact by construction.
pub struct OracleModel {
    track: TrackSpec,
    camera: CameraModel,
    cfg: RunConfig,
    state: VehicleState,
}

impl OracleModel {
    pub fn new(track: TrackSpec, cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let camera = CameraModel::from_config(cfg)?;
        let state = VehicleState::new(track.start_pos.x, track.start_pos.y, track.start_heading, cfg.speed)?;
        Ok(OracleModel {
            track,
            camera,
            cfg: cfg.clone(),
            state,
        })
    }

    pub fn state(&self) -> &VehicleState {
        &self.state
    }

    pub fn track(&self) -> &TrackSpec {
        &self.track
    }
}

impl ForwardModel for OracleModel {
    fn predict(&self, _obs: &GrayImage, action: SteeringAction, horizon: usize) -> Result<GrayImage> {
        Ok(oracle_predict(
            &self.state,
            action,
            horizon,
            &self.track,
            &self.camera,
            &self.cfg,
        ))
    }

    fn observe_state(&mut self, state: &VehicleState) {
        self.state = state.clone();
    }
}

pub fn image_to_tensor<T: Scalar>(img: &GrayImage) -> Tensor<T> {
    let s = img.size();
    Tensor::from_vec(&[1, s, s], img.data().iter().map(|&v| T::from_f64(v)).collect())
        .expect("image is square")
}

pub fn tensor_to_image<T: Scalar>(t: &Tensor<T>) -> Result<GrayImage> {
    let d = t.dims();
    if d.len() != 3 || d[0] != 1 || d[1] != d[2] {
        return Err(Error::ShapeMismatch(format!(
            "expected a [1, s, s] tensor, got {d:?}"
        )));
    }
    GrayImage::new(d[1], d[2], t.data().iter().map(|&v| v.as_f64()).collect())
}

/// One deterministic network step. Fails on shape mismatch or when a
/// non-finite pre-activation shows up (diverged parameters).
pub fn net_predict<T: Scalar>(
    net: &UNet<T>,
    obs: &GrayImage,
    action: SteeringAction,
) -> Result<GrayImage> {
    let (y, cache) = net.forward(&image_to_tensor(obs), T::from_f64(action.value()))?;
    if cache.logits.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue {
            what: "activation",
            context: "network forward pass",
        });
    }
    tensor_to_image(&y)
}

/// Autoregressive rollout: each prediction becomes the next input, the
/// action held constant throughout.
pub fn net_rollout<T: Scalar>(
    net: &UNet<T>,
    obs: &GrayImage,
    action: SteeringAction,
    horizon: usize,
) -> Result<GrayImage> {
    assert!(horizon >= 1, "rollout horizon must be at least 1");
    let mut frame = net_predict(net, obs, action)?;
    for _ in 1..horizon {
        frame = net_predict(net, &frame, action)?;
    }
    Ok(frame)
}

/// Forward model backed by trained network parameters.
pub struct LearnedModel {
    net: UNet<f32>,
}

impl LearnedModel {
    pub fn new(net: UNet<f32>) -> Self {
        LearnedModel { net }
    }

    pub fn from_store(store: &ParamStore) -> Result<Self> {
        Ok(LearnedModel {
            net: UNet::from_store(store)?,
        })
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_store(&ParamStore::load(path)?)
    }

    pub fn net(&self) -> &UNet<f32> {
        &self.net
    }
}

impl ForwardModel for LearnedModel {
    fn predict(&self, obs: &GrayImage, action: SteeringAction, horizon: usize) -> Result<GrayImage> {
        net_rollout(&self.net, obs, action, horizon)
    }
}
