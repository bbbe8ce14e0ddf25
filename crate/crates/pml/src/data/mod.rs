//! Corpus collection and conditioning: drive policies that generate varied
//! training frames, mirror augmentation, steering-bin balancing, and the
//! binary container in `corpus`.

pub mod corpus;

pub use corpus::{load_frames, load_transitions, save_frames, save_transitions};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::rng::{derive_seed, rng_from_seed};
use crate::sim::{
    dist_to_polyline, render_observation, run_episode_from, step_dynamics, CameraModel, TrackSpec,
    Vec2,
};
use crate::steer::SteeringAction;
use crate::vehicle::VehicleState;
use rand::Rng;

/// One dynamics step as the forward model sees it: the frame before, the
/// action taken, the frame after.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionSample {
    pub obs: GrayImage,
    pub action: SteeringAction,
    pub next_obs: GrayImage,
}

impl TransitionSample {
    pub fn new(obs: GrayImage, action: SteeringAction, next_obs: GrayImage) -> Result<Self> {
        if !obs.same_dims(&next_obs) {
            return Err(Error::ImageDimensionMismatch(
                obs.width(),
                obs.height(),
                next_obs.width(),
                next_obs.height(),
            ));
        }
        Ok(TransitionSample { obs, action, next_obs })
    }
}

/// A frame paired with the action the demonstrator took on it.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFrame {
    pub obs: GrayImage,
    pub action: SteeringAction,
}

/// How the steering range [-1, 1] is cut into bins for balancing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinSpec {
    pub bin_count: usize,
    pub cap_mode: CapMode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CapMode {
    /// Cap every bin at the smallest non-empty bin's count.
    MinCount,
    /// Cap every bin at a fixed count; smaller bins keep what they have.
    FixedCap(usize),
}

impl Default for BinSpec {
    fn default() -> Self {
        // 21 bins, matching the default action grid one-to-one.
        BinSpec { bin_count: 21, cap_mode: CapMode::MinCount }
    }
}

impl BinSpec {
    pub fn validate(&self) -> Result<()> {
        if self.bin_count < 2 {
            return Err(Error::InvalidConfig(format!(
                "bin_count must be at least 2, got {}",
                self.bin_count
            )));
        }
        if let CapMode::FixedCap(0) = self.cap_mode {
            return Err(Error::InvalidConfig("fixed cap of 0 would drop everything".into()));
        }
        Ok(())
    }

    /// Bin holding `action`. Bins split [-1, 1] evenly; the right edge 1.0
    /// folds into the last bin.
    pub fn bin_of(&self, action: SteeringAction) -> usize {
        let t = (action.value() + 1.0) / 2.0;
        ((t * self.bin_count as f64) as usize).min(self.bin_count - 1)
    }
}

/// Per-bin action counts for a corpus.
pub fn action_histogram<'a, I>(actions: I, spec: &BinSpec) -> Vec<usize>
where
    I: IntoIterator<Item = &'a SteeringAction>,
{
    let mut hist = vec![0usize; spec.bin_count];
    for a in actions {
        hist[spec.bin_of(*a)] += 1;
    }
    hist
}

/// Doubles a frame corpus: the originals in order, then each frame mirrored
/// with its action negated.
pub fn augment_flip(frames: &[LabeledFrame]) -> Vec<LabeledFrame> {
    let mut out = Vec::with_capacity(frames.len() * 2);
    out.extend_from_slice(frames);
    out.extend(frames.iter().map(|f| LabeledFrame {
        obs: f.obs.mirrored(),
        action: f.action.negated(),
    }));
    out
}

/// `augment_flip` for transitions; both frames mirror together.
pub fn augment_flip_transitions(samples: &[TransitionSample]) -> Vec<TransitionSample> {
    let mut out = Vec::with_capacity(samples.len() * 2);
    out.extend_from_slice(samples);
    out.extend(samples.iter().map(|s| TransitionSample {
        obs: s.obs.mirrored(),
        action: s.action.negated(),
        next_obs: s.next_obs.mirrored(),
    }));
    out
}

/// What `normalize_bins` did: counts before and after, the cap it applied,
/// and whether the corpus was too lopsided to balance at all.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizeReport {
    pub before: Vec<usize>,
    pub after: Vec<usize>,
    pub cap: usize,
    /// Every frame sat in one bin; the corpus was returned unchanged.
    pub degenerate: bool,
}

/// Balances the action histogram by subsampling overfull bins down to the
/// cap (seeded, without replacement). Frames keep their original order and
/// contents; nothing is ever invented or altered.
pub fn normalize_bins(
    frames: &[LabeledFrame],
    spec: &BinSpec,
    seed: u64,
) -> Result<(Vec<LabeledFrame>, NormalizeReport)> {
    spec.validate()?;
    if frames.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let before = action_histogram(frames.iter().map(|f| &f.action), spec);
    let occupied = before.iter().filter(|&&c| c > 0).count();
    if occupied == 1 {
        let cap = *before.iter().max().expect("non-empty histogram");
        let report = NormalizeReport { after: before.clone(), before, cap, degenerate: true };
        return Ok((frames.to_vec(), report));
    }

    let cap = match spec.cap_mode {
        CapMode::MinCount => *before.iter().filter(|&&c| c > 0).min().expect("occupied bins"),
        CapMode::FixedCap(c) => c,
    };

    let mut by_bin: Vec<Vec<usize>> = vec![Vec::new(); spec.bin_count];
    for (i, f) in frames.iter().enumerate() {
        by_bin[spec.bin_of(f.action)].push(i);
    }
    let mut rng = rng_from_seed(seed);
    let mut keep = vec![false; frames.len()];
    for members in &by_bin {
        if members.len() <= cap {
            for &i in members {
                keep[i] = true;
            }
        } else {
            for pick in rand::seq::index::sample(&mut rng, members.len(), cap) {
                keep[members[pick]] = true;
            }
        }
    }
    let out: Vec<LabeledFrame> = frames
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(f, _)| f.clone())
        .collect();
    let after = action_histogram(out.iter().map(|f| &f.action), spec);
    Ok((out, NormalizeReport { before, after, cap, degenerate: false }))
}

/// Knobs for the zigzag collector. The drive action is the scripted
/// expert's plus a triangle wave of the given amplitude, so amplitude 0
/// collapses to plain expert driving.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZigzagParams {
    /// Peak of the triangle overlay; 1.0 sweeps the whole action range.
    pub amplitude: f64,
    /// Steps per full triangle cycle.
    pub period: usize,
    /// Lane-center deviation (m) beyond which the overlay is muted and the
    /// expert recenters alone.
    pub recenter_bound: f64,
    /// Deviation (m) below which the overlay resumes after a recentering.
    pub release_bound: f64,
    /// Distance past the road edge (m) that abandons the pass and restarts
    /// from the start pose.
    pub restart_margin: f64,
}

impl Default for ZigzagParams {
    fn default() -> Self {
        ZigzagParams {
            amplitude: 1.0,
            period: 48,
            recenter_bound: 1.2,
            release_bound: 0.4,
            restart_margin: 2.0,
        }
    }
}

impl ZigzagParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if !(0.0..=1.0).contains(&self.amplitude) {
            return fail(format!("zigzag amplitude must lie in [0, 1], got {}", self.amplitude));
        }
        if self.period < 2 {
            return fail(format!("zigzag period must be at least 2 steps, got {}", self.period));
        }
        if !(self.release_bound > 0.0 && self.recenter_bound > self.release_bound) {
            return fail(format!(
                "need recenter_bound > release_bound > 0, got {} and {}",
                self.recenter_bound, self.release_bound
            ));
        }
        if !(self.restart_margin > 0.0) {
            return fail(format!("restart_margin must be positive, got {}", self.restart_margin));
        }
        Ok(())
    }

    /// Triangle wave at step `i`: 0 at phase 0, +1 at a quarter period,
    /// -1 at three quarters.
    fn wave(&self, i: usize) -> f64 {
        let p = (i % self.period) as f64 / self.period as f64;
        if p < 0.25 {
            4.0 * p
        } else if p < 0.75 {
            2.0 - 4.0 * p
        } else {
            4.0 * p - 4.0
        }
    }
}

fn jittered_start(
    track: &TrackSpec,
    speed: f64,
    lateral: f64,
    heading_jitter: f64,
    rng: &mut impl Rng,
) -> Result<VehicleState> {
    let dy = rng.gen_range(-lateral..=lateral);
    let dh = rng.gen_range(-heading_jitter..=heading_jitter);
    // The offset is applied perpendicular to the start heading so it is a
    // pure lateral shift regardless of how the track is oriented.
    let (sin_h, cos_h) = (track.start_heading.sin(), track.start_heading.cos());
    VehicleState::new(
        track.start_pos.x - dy * sin_h,
        track.start_pos.y + dy * cos_h,
        track.start_heading + dh,
        speed,
    )
}

/// Drives the zigzag schedule and records every transition. Returns the
/// samples plus how many times the vehicle strayed far enough off the road
/// to restart the pass.
///
/// Restarts re-seat the vehicle at a freshly jittered start pose and do not
/// consume a step, so the output always holds exactly `n_steps` samples.
pub fn collect_zigzag(
    track: &TrackSpec,
    cfg: &RunConfig,
    n_steps: usize,
    params: &ZigzagParams,
    seed: u64,
) -> Result<(Vec<TransitionSample>, usize)> {
    cfg.validate()?;
    track.validate()?;
    params.validate()?;
    if n_steps == 0 {
        return Err(Error::InvalidConfig("n_steps must be at least 1".into()));
    }
    let camera = CameraModel::from_config(cfg)?;
    let restart_bound = track.road_half_width + params.restart_margin;
    let mut rng = rng_from_seed(derive_seed(seed, 0x5a49_475a));
    let phase0: usize = rng.gen_range(0..params.period);

    let mut state = jittered_start(track, cfg.speed, 0.3, 0.035, &mut rng)?;
    let mut obs = render_observation(&state, track, &camera);
    let mut samples = Vec::with_capacity(n_steps);
    let mut resets = 0usize;
    let mut recovering = false;
    while samples.len() < n_steps {
        let deviation = dist_to_polyline(Vec2::new(state.x, state.y), &track.centerline);
        if deviation > restart_bound {
            resets += 1;
            state = jittered_start(track, cfg.speed, 0.3, 0.035, &mut rng)?;
            obs = render_observation(&state, track, &camera);
            recovering = false;
            continue;
        }
        if recovering && deviation < params.release_bound {
            recovering = false;
        } else if !recovering && deviation > params.recenter_bound {
            recovering = true;
        }

        let expert = scripted_expert_for(&state, track, cfg)?;
        let overlay = if recovering {
            0.0
        } else {
            params.amplitude * params.wave(samples.len() + phase0)
        };
        let action = SteeringAction::clamped(expert.value() + overlay)?;

        let next_state = step_dynamics(&state, action, cfg.sim_dt, cfg.wheelbase, cfg.max_wheel_angle);
        let next_obs = render_observation(&next_state, track, &camera);
        samples.push(TransitionSample::new(obs, action, next_obs.clone())?);
        state = next_state;
        obs = next_obs;
    }
    Ok((samples, resets))
}

fn scripted_expert_for(
    state: &VehicleState,
    track: &TrackSpec,
    cfg: &RunConfig,
) -> Result<SteeringAction> {
    crate::agent::scripted_expert(
        state,
        track,
        crate::agent::DEFAULT_LOOKAHEAD,
        cfg.wheelbase,
        cfg.max_wheel_angle,
    )
}

/// Collects expert demonstration frames by running the scripted expert from
/// seeded, perturbed start poses until `n_frames` are gathered. Returns the
/// frames plus how many episodes were driven.
pub fn collect_expert_frames(
    track: &TrackSpec,
    cfg: &RunConfig,
    n_frames: usize,
    seed: u64,
) -> Result<(Vec<LabeledFrame>, usize)> {
    cfg.validate()?;
    track.validate()?;
    if n_frames == 0 {
        return Err(Error::InvalidConfig("n_frames must be at least 1".into()));
    }
    let camera = CameraModel::from_config(cfg)?;
    let mut rng = rng_from_seed(derive_seed(seed, 0x4558_5054));
    // Start offsets stay well inside the off-lane bound (half the lane
    // width) so the expert can recover instead of failing the episode.
    let lateral = 0.3 * track.lane_width;

    let mut frames = Vec::with_capacity(n_frames);
    let mut episodes = 0usize;
    while frames.len() < n_frames {
        let start = jittered_start(track, cfg.speed, lateral, 0.15, &mut rng)?;
        let mut policy = crate::agent::ExpertPolicy::new(track.clone(), cfg);
        let max_steps = crate::sim::default_max_steps(track, cfg);
        let (_, log) = run_episode_from(track, &mut policy, cfg, max_steps, start)?;
        episodes += 1;
        for rec in &log {
            if frames.len() >= n_frames {
                break;
            }
            let state = VehicleState::new(rec.x, rec.y, rec.heading, cfg.speed)?;
            frames.push(LabeledFrame {
                obs: render_observation(&state, track, &camera),
                action: SteeringAction::new(rec.action)?,
            });
        }
    }
    Ok((frames, episodes))
}
