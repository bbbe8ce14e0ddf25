//! Lane keeping by predictive action selection.
//!
//! The agent never sees its own pose. Each control step it takes the current
//! camera observation, imagines the view a few steps ahead for every candidate
//! steering action using a forward model, and picks the action whose imagined
//! view is closest to a fixed preference image (an on-lane view rendered
//! ahead of time). Closeness is structural similarity, so the comparison is
//! about road shape rather than raw pixel error.
//!
//! The crate splits into:
//!
//! * foundation types ([`image`], [`steer`], [`vehicle`], [`config`])
//! * the similarity metric ([`ssim`])
//! * a small simulated world with a kinematic car and a ground-plane camera
//!   ([`sim`])
//! * a from-scratch neural net stack with checked gradients ([`net`])
//! * the forward model, exact and learned ([`model`])
//! * action selection, the scripted expert, and a behavioral-cloning
//!   baseline ([`agent`])
//! * dataset collection and the on-disk corpus format ([`data`])
//! * the evaluation bench ([`eval`])

pub mod agent;
pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod image;
pub mod model;
pub mod net;
pub mod rng;
pub mod sim;
pub mod ssim;
pub mod steer;
pub mod vehicle;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use image::GrayImage;
pub use ssim::{distance, ssim, SsimParams};
pub use steer::SteeringAction;
pub use vehicle::VehicleState;
