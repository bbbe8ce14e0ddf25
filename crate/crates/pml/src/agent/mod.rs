//! Policies that map camera frames to steering actions.
//!
//! The main one sweeps a grid of candidate actions, asks a forward model to
//! imagine the frame each candidate leads to, and picks the candidate whose
//! imagined frame is closest to a preference image. A behavioral-cloning
//! baseline and a privileged scripted expert live in the submodules.

pub mod bc;
pub mod expert;

pub use bc::{bc_predict, bc_train, BcNet, BcNetSpec, BcPolicy, BcTrainConfig, BcTrainReport};
pub use expert::{scripted_expert, ExpertPolicy, DEFAULT_LOOKAHEAD};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::model::ForwardModel;
use crate::sim::{
    make_lane_track, render_observation, CameraModel, Policy, TaskKind, TrackFamily,
    STRAIGHT_LEG, TURN_RADIUS,
};
use crate::ssim::{distance, SsimParams};
use crate::steer::SteeringAction;
use crate::vehicle::VehicleState;

/// The goal frame the agent steers toward: a lane-centered view of a
/// straight road, plus a tag recording which lane geometry it encodes.
#[derive(Debug, Clone)]
pub struct Preference {
    pub image: GrayImage,
    pub label: String,
}

/// One candidate from the action sweep: what the model imagined and how far
/// that stands from the preference.
#[derive(Debug, Clone)]
pub struct ActionScore {
    pub action: SteeringAction,
    pub predicted: GrayImage,
    /// 1 - similarity, clamped to [0, 2].
    pub dissimilarity: f64,
}

/// Index of the winning score. Ties go to the smallest |action|, then to
/// the negative one, so symmetric score sets resolve deterministically no
/// matter how the candidates were ordered or scheduled.
pub fn best_action(scores: &[ActionScore]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        let Some(j) = best else {
            best = Some(i);
            continue;
        };
        let b = &scores[j];
        let (sv, bv) = (s.action.value(), b.action.value());
        let wins = s.dissimilarity < b.dissimilarity
            || (s.dissimilarity == b.dissimilarity
                && (sv.abs() < bv.abs() || (sv.abs() == bv.abs() && sv < bv)));
        if wins {
            best = Some(i);
        }
    }
    best
}

/// Sweeps the candidate grid: predicts `horizon` steps ahead for each
/// action, scores the prediction against the preference, and returns the
/// winner along with every score for inspection.
pub fn select_action<M: ForwardModel + ?Sized>(
    obs: &GrayImage,
    model: &M,
    pref: &Preference,
    grid: &[SteeringAction],
    horizon: usize,
    params: &SsimParams,
) -> Result<(SteeringAction, Vec<ActionScore>)> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("action grid is empty".into()));
    }
    if !obs.same_dims(&pref.image) {
        return Err(Error::ImageDimensionMismatch(
            obs.width(),
            obs.height(),
            pref.image.width(),
            pref.image.height(),
        ));
    }
    let mut scores = Vec::with_capacity(grid.len());
    for &action in grid {
        let predicted = model.predict(obs, action, horizon)?;
        let raw = distance(&predicted, &pref.image, params)?;
        if !raw.is_finite() {
            return Err(Error::NonFiniteValue {
                what: "dissimilarity",
                context: "action sweep",
            });
        }
        scores.push(ActionScore {
            action,
            predicted,
            // The exact value lives in [0, 2]; clamping strips rounding spill.
            dissimilarity: raw.clamp(0.0, 2.0),
        });
    }
    let winner = best_action(&scores).expect("grid checked non-empty");
    Ok((scores[winner].action, scores))
}

/// Renders the goal frame: the view from the canonical start pose, centered
/// in lane `lane` of a straight road with the family's geometry.
pub fn make_preference(family: &TrackFamily, lane: usize, cfg: &RunConfig) -> Result<Preference> {
    cfg.validate()?;
    let track = make_lane_track(TaskKind::Straight, family, lane, TURN_RADIUS, STRAIGHT_LEG)?;
    let camera = CameraModel::from_config(cfg)?;
    let pose = VehicleState::new(
        track.start_pos.x,
        track.start_pos.y,
        track.start_heading,
        cfg.speed,
    )?;
    let image = render_observation(&pose, &track, &camera);
    Ok(Preference {
        image,
        label: format!("{}-lane{lane}", family.name),
    })
}

/// Policy that runs the action sweep every step against a fixed preference.
pub struct AifPolicy<M: ForwardModel> {
    model: M,
    preference: Preference,
    grid: Vec<SteeringAction>,
    horizon: usize,
    params: SsimParams,
}

impl<M: ForwardModel> AifPolicy<M> {
    pub fn new(model: M, preference: Preference, cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let params = SsimParams::default();
        params.validate_for(cfg.image_size)?;
        if preference.image.width() != cfg.image_size {
            return Err(Error::ImageDimensionMismatch(
                preference.image.width(),
                preference.image.height(),
                cfg.image_size,
                cfg.image_size,
            ));
        }
        Ok(AifPolicy {
            model,
            preference,
            grid: cfg.steering_grid.clone(),
            horizon: cfg.prediction_horizon,
            params,
        })
    }

    pub fn model(&self) -> &M {
        &self.model
    }
}

impl<M: ForwardModel> Policy for AifPolicy<M> {
    fn act(&mut self, obs: &GrayImage) -> Result<SteeringAction> {
        let (action, _) = select_action(
            obs,
            &self.model,
            &self.preference,
            &self.grid,
            self.horizon,
            &self.params,
        )?;
        Ok(action)
    }

    fn note_true_state(&mut self, state: &VehicleState) {
        self.model.observe_state(state);
    }
}
