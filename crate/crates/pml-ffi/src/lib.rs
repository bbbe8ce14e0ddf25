//! C bindings over the core crate.
//!
//! Ownership follows one rule: whatever a `*_new`, `*_load`, or `*_default`
//! call hands out, the matching `*_free` releases, and nothing else
//! transfers ownership. Every fallible call returns a [`PmlStatus`] and
//! writes its results through out-pointers, which must be non-null. The
//! text behind the most recent failure on the calling thread is available
//! from [`pml_last_error_message`]. Handles are not synchronized; callers
//! must not use one handle from two threads at once.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use pml::agent::{make_preference, AifPolicy, BcPolicy, ExpertPolicy, Preference};
use pml::data::load_frames;
use pml::eval::family_label;
use pml::model::{LearnedModel, OracleModel};
use pml::sim::{
    default_max_steps, dist_to_polyline, render_observation, run_episode, step_dynamics,
    CameraModel, EpisodeStatus, Policy, TrackFamily, TrackSpec, Vec2,
};
use pml::{ssim, Error, GrayImage, RunConfig, SsimParams, SteeringAction, VehicleState};

/// Outcome of a call. Anything but `Ok` leaves a message readable through
/// `pml_last_error_message` on the same thread.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmlStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// Arguments were structurally valid but semantically rejected.
    InvalidArgument = 2,
    /// A name (track, file) did not resolve.
    NotFound = 3,
    /// The operating system refused a file operation.
    Io = 4,
    /// A file existed but its contents did not parse.
    Parse = 5,
    /// A computation produced non-finite values.
    Numeric = 6,
    /// A policy or model failed while running.
    Fault = 7,
    /// A bug: the library panicked and the unwind was caught at the
    /// boundary.
    Panic = 8,
}

/// Where a simulation or episode stands.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmlEpisodeStatus {
    Running = 0,
    Success = 1,
    OffLane = 2,
    Timeout = 3,
}

impl From<EpisodeStatus> for PmlEpisodeStatus {
    fn from(s: EpisodeStatus) -> Self {
        match s {
            EpisodeStatus::Running => PmlEpisodeStatus::Running,
            EpisodeStatus::Success => PmlEpisodeStatus::Success,
            EpisodeStatus::OffLane => PmlEpisodeStatus::OffLane,
            EpisodeStatus::Timeout => PmlEpisodeStatus::Timeout,
        }
    }
}

/// Final account of one closed-loop episode.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PmlEpisodeReport {
    pub status: PmlEpisodeStatus,
    pub steps: usize,
    /// Mean distance to the lane center over the episode; NaN if no step
    /// was recorded.
    pub avg_deviation: f64,
    pub final_x: f64,
    pub final_y: f64,
    pub final_heading: f64,
}

/// Opaque run configuration.
pub struct PmlConfig(RunConfig);

/// Opaque simulator session: one vehicle on one track.
pub struct PmlSim {
    track: TrackSpec,
    camera: CameraModel,
    cfg: RunConfig,
    start: VehicleState,
    state: VehicleState,
    step: usize,
    status: EpisodeStatus,
}

impl PmlSim {
    fn refresh_status(&mut self) {
        if self.status != EpisodeStatus::Running {
            return;
        }
        let pos = Vec2::new(self.state.x, self.state.y);
        if pos.dist(self.track.goal()) <= self.cfg.capture_radius {
            self.status = EpisodeStatus::Success;
        } else if dist_to_polyline(pos, &self.track.centerline) > self.track.lane_width / 2.0 {
            self.status = EpisodeStatus::OffLane;
        }
    }
}

/// Opaque steering policy.
pub struct PmlAgent(Box<dyn Policy>);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let owned = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = owned);
}

fn status_of(e: &Error) -> PmlStatus {
    match e {
        Error::Io(_) => PmlStatus::Io,
        Error::UnknownTrack(_) => PmlStatus::NotFound,
        Error::BadMagic { .. }
        | Error::UnsupportedVersion(_)
        | Error::Truncated { .. }
        | Error::CorruptFile(_)
        | Error::ParamStore(_) => PmlStatus::Parse,
        Error::NonFiniteValue { .. }
        | Error::NonFiniteSteering(_)
        | Error::NonFiniteState { .. } => PmlStatus::Numeric,
        Error::PolicyFault { .. } => PmlStatus::Fault,
        _ => PmlStatus::InvalidArgument,
    }
}

fn fail(e: Error) -> PmlStatus {
    set_error(&e.to_string());
    status_of(&e)
}

fn null_arg(what: &str) -> PmlStatus {
    set_error(&format!("{what} is null"));
    PmlStatus::NullArgument
}

fn guard(f: impl FnOnce() -> PmlStatus) -> PmlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic caught at the C boundary");
            PmlStatus::Panic
        }
    }
}

fn take_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, PmlStatus> {
    if p.is_null() {
        return Err(null_arg(what));
    }
    unsafe { CStr::from_ptr(p) }.to_str().map_err(|_| {
        set_error(&format!("{what} is not valid UTF-8"));
        PmlStatus::InvalidArgument
    })
}

fn image_from_raw(p: *const f64, width: usize, height: usize, what: &str) -> Result<GrayImage, PmlStatus> {
    if p.is_null() {
        return Err(null_arg(what));
    }
    let data = unsafe { std::slice::from_raw_parts(p, width.saturating_mul(height)) };
    GrayImage::new(width, height, data.to_vec()).map_err(fail)
}

/// Goal frame for a track, rendered from its own lane geometry.
fn synth_preference(track: &TrackSpec, cfg: &RunConfig) -> Result<Preference, Error> {
    let family = TrackFamily {
        name: family_label(track),
        lane_width: track.lane_width,
        lane_count: 1,
    };
    make_preference(&family, 0, cfg)
}

fn load_preference(path: &str) -> Result<Preference, PmlStatus> {
    let frames = load_frames(Path::new(path)).map_err(fail)?;
    if frames.len() != 1 {
        set_error(&format!(
            "preference file {path} holds {} frames, expected exactly one",
            frames.len()
        ));
        return Err(PmlStatus::InvalidArgument);
    }
    let image = frames.into_iter().next().expect("length checked").obs;
    let label = Path::new(path)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("preference")
        .to_string();
    Ok(Preference { image, label })
}

fn agent_out(out: *mut *mut PmlAgent, policy: Box<dyn Policy>) -> PmlStatus {
    match unsafe { out.as_mut() } {
        Some(slot) => {
            *slot = Box::into_raw(Box::new(PmlAgent(policy)));
            PmlStatus::Ok
        }
        None => null_arg("out"),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pml_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Static name of a status code, for logging.
#[no_mangle]
pub extern "C" fn pml_status_name(status: PmlStatus) -> *const c_char {
    let name: &'static str = match status {
        PmlStatus::Ok => "ok\0",
        PmlStatus::NullArgument => "null_argument\0",
        PmlStatus::InvalidArgument => "invalid_argument\0",
        PmlStatus::NotFound => "not_found\0",
        PmlStatus::Io => "io\0",
        PmlStatus::Parse => "parse\0",
        PmlStatus::Numeric => "numeric\0",
        PmlStatus::Fault => "fault\0",
        PmlStatus::Panic => "panic\0",
    };
    name.as_ptr() as *const c_char
}

/// Message behind the most recent failure on this thread. The pointer
/// stays valid until the next failing call on the same thread. Never null;
/// empty before the first failure.
#[no_mangle]
pub extern "C" fn pml_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Creates the default run configuration.
#[no_mangle]
pub extern "C" fn pml_config_default(out: *mut *mut PmlConfig) -> PmlStatus {
    guard(|| match unsafe { out.as_mut() } {
        Some(slot) => {
            *slot = Box::into_raw(Box::new(PmlConfig(RunConfig::default())));
            PmlStatus::Ok
        }
        None => null_arg("out"),
    })
}

/// Loads a run configuration from a TOML file.
#[no_mangle]
pub extern "C" fn pml_config_load(path: *const c_char, out: *mut *mut PmlConfig) -> PmlStatus {
    guard(|| {
        let Some(slot) = (unsafe { out.as_mut() }) else {
            return null_arg("out");
        };
        let path = match take_str(path, "path") {
            Ok(s) => s,
            Err(status) => return status,
        };
        match RunConfig::load(Path::new(path)) {
            Ok(cfg) => {
                *slot = Box::into_raw(Box::new(PmlConfig(cfg)));
                PmlStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Side length of the square camera frame, in pixels.
#[no_mangle]
pub extern "C" fn pml_config_image_size(cfg: *const PmlConfig, out: *mut usize) -> PmlStatus {
    guard(|| {
        let Some(cfg) = (unsafe { cfg.as_ref() }) else {
            return null_arg("cfg");
        };
        let Some(slot) = (unsafe { out.as_mut() }) else {
            return null_arg("out");
        };
        *slot = cfg.0.image_size;
        PmlStatus::Ok
    })
}

/// Releases a configuration. Null is a no-op.
#[no_mangle]
pub extern "C" fn pml_config_free(cfg: *mut PmlConfig) {
    if !cfg.is_null() {
        drop(unsafe { Box::from_raw(cfg) });
    }
}

/// Structural similarity of two row-major grayscale buffers of
/// `width * height` doubles in [0, 1]. Writes a score in [-1, 1].
#[no_mangle]
pub extern "C" fn pml_ssim(
    a: *const f64,
    b: *const f64,
    width: usize,
    height: usize,
    out_score: *mut f64,
) -> PmlStatus {
    guard(|| {
        let Some(slot) = (unsafe { out_score.as_mut() }) else {
            return null_arg("out_score");
        };
        let a = match image_from_raw(a, width, height, "a") {
            Ok(img) => img,
            Err(status) => return status,
        };
        let b = match image_from_raw(b, width, height, "b") {
            Ok(img) => img,
            Err(status) => return status,
        };
        let params = SsimParams::default();
        if let Err(e) = params.validate_for(width.min(height)) {
            return fail(e);
        }
        match ssim(&a, &b, &params) {
            Ok(score) => {
                *slot = score;
                PmlStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Creates a simulator session on a named track, parked at the canonical
/// start pose.
#[no_mangle]
pub extern "C" fn pml_sim_new(
    track: *const c_char,
    cfg: *const PmlConfig,
    out: *mut *mut PmlSim,
) -> PmlStatus {
    guard(|| {
        let Some(slot) = (unsafe { out.as_mut() }) else {
            return null_arg("out");
        };
        let Some(cfg) = (unsafe { cfg.as_ref() }) else {
            return null_arg("cfg");
        };
        let name = match take_str(track, "track") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let build = || -> Result<PmlSim, Error> {
            cfg.0.validate()?;
            let track = pml::sim::track_by_name(name)?;
            let camera = CameraModel::from_config(&cfg.0)?;
            let start = VehicleState::new(
                track.start_pos.x,
                track.start_pos.y,
                track.start_heading,
                cfg.0.speed,
            )?;
            let mut sim = PmlSim {
                track,
                camera,
                cfg: cfg.0.clone(),
                start,
                state: start,
                step: 0,
                status: EpisodeStatus::Running,
            };
            sim.refresh_status();
            Ok(sim)
        };
        match build() {
            Ok(sim) => {
                *slot = Box::into_raw(Box::new(sim));
                PmlStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Puts the vehicle back at the start pose and the step counter to zero.
#[no_mangle]
pub extern "C" fn pml_sim_reset(sim: *mut PmlSim) -> PmlStatus {
    guard(|| {
        let Some(sim) = (unsafe { sim.as_mut() }) else {
            return null_arg("sim");
        };
        sim.state = sim.start;
        sim.step = 0;
        sim.status = EpisodeStatus::Running;
        sim.refresh_status();
        PmlStatus::Ok
    })
}

/// Number of doubles `pml_sim_observe` writes: image_size squared.
#[no_mangle]
pub extern "C" fn pml_sim_observation_len(sim: *const PmlSim, out: *mut usize) -> PmlStatus {
    guard(|| {
        let Some(sim) = (unsafe { sim.as_ref() }) else {
            return null_arg("sim");
        };
        let Some(slot) = (unsafe { out.as_mut() }) else {
            return null_arg("out");
        };
        *slot = sim.cfg.image_size * sim.cfg.image_size;
        PmlStatus::Ok
    })
}

/// Renders the current camera frame into `buf`, row-major, values in
/// [0, 1]. `len` must equal the value from `pml_sim_observation_len`.
#[no_mangle]
pub extern "C" fn pml_sim_observe(sim: *const PmlSim, buf: *mut f64, len: usize) -> PmlStatus {
    guard(|| {
        let Some(sim) = (unsafe { sim.as_ref() }) else {
            return null_arg("sim");
        };
        if buf.is_null() {
            return null_arg("buf");
        }
        let expected = sim.cfg.image_size * sim.cfg.image_size;
        if len != expected {
            set_error(&format!("buffer holds {len} doubles, expected {expected}"));
            return PmlStatus::InvalidArgument;
        }
        let obs = render_observation(&sim.state, &sim.track, &sim.camera);
        unsafe { std::slice::from_raw_parts_mut(buf, len) }.copy_from_slice(obs.data());
        PmlStatus::Ok
    })
}

/// Advances one step under a steering value in [-1, 1]. Fails once the
/// episode has ended; `pml_sim_reset` starts a fresh one.
#[no_mangle]
pub extern "C" fn pml_sim_step(sim: *mut PmlSim, steering: f64) -> PmlStatus {
    guard(|| {
        let Some(sim) = (unsafe { sim.as_mut() }) else {
            return null_arg("sim");
        };
        if sim.status != EpisodeStatus::Running {
            set_error("episode already ended; reset the session to drive again");
            return PmlStatus::InvalidArgument;
        }
        let action = match SteeringAction::new(steering) {
            Ok(a) => a,
            Err(e) => return fail(e),
        };
        sim.state = step_dynamics(
            &sim.state,
            action,
            sim.cfg.sim_dt,
            sim.cfg.wheelbase,
            sim.cfg.max_wheel_angle,
        );
        sim.step += 1;
        sim.refresh_status();
        PmlStatus::Ok
    })
}

/// Current vehicle pose.
#[no_mangle]
pub extern "C" fn pml_sim_pose(
    sim: *const PmlSim,
    x: *mut f64,
    y: *mut f64,
    heading: *mut f64,
) -> PmlStatus {
    guard(|| {
        let Some(sim) = (unsafe { sim.as_ref() }) else {
            return null_arg("sim");
        };
        let (Some(x), Some(y), Some(heading)) =
            (unsafe { x.as_mut() }, unsafe { y.as_mut() }, unsafe { heading.as_mut() })
        else {
            return null_arg("pose output");
        };
        *x = sim.state.x;
        *y = sim.state.y;
        *heading = sim.state.heading;
        PmlStatus::Ok
    })
}

/// Distance from the lane center, in meters.
#[no_mangle]
pub extern "C" fn pml_sim_deviation(sim: *const PmlSim, out: *mut f64) -> PmlStatus {
    guard(|| {
        let Some(sim) = (unsafe { sim.as_ref() }) else {
            return null_arg("sim");
        };
        let Some(slot) = (unsafe { out.as_mut() }) else {
            return null_arg("out");
        };
        *slot = dist_to_polyline(Vec2::new(sim.state.x, sim.state.y), &sim.track.centerline);
        PmlStatus::Ok
    })
}

/// Whether the session is still running, has reached the goal, or has
/// left the lane.
#[no_mangle]
pub extern "C" fn pml_sim_status(sim: *const PmlSim, out: *mut PmlEpisodeStatus) -> PmlStatus {
    guard(|| {
        let Some(sim) = (unsafe { sim.as_ref() }) else {
            return null_arg("sim");
        };
        let Some(slot) = (unsafe { out.as_mut() }) else {
            return null_arg("out");
        };
        *slot = sim.status.into();
        PmlStatus::Ok
    })
}

/// Steps taken since the last reset.
#[no_mangle]
pub extern "C" fn pml_sim_step_count(sim: *const PmlSim, out: *mut usize) -> PmlStatus {
    guard(|| {
        let Some(sim) = (unsafe { sim.as_ref() }) else {
            return null_arg("sim");
        };
        let Some(slot) = (unsafe { out.as_mut() }) else {
            return null_arg("out");
        };
        *slot = sim.step;
        PmlStatus::Ok
    })
}

/// Releases a simulator session. Null is a no-op.
#[no_mangle]
pub extern "C" fn pml_sim_free(sim: *mut PmlSim) {
    if !sim.is_null() {
        drop(unsafe { Box::from_raw(sim) });
    }
}

/// Scripted lookahead controller for a named track.
#[no_mangle]
pub extern "C" fn pml_agent_expert(
    track: *const c_char,
    cfg: *const PmlConfig,
    out: *mut *mut PmlAgent,
) -> PmlStatus {
    guard(|| {
        let Some(cfg) = (unsafe { cfg.as_ref() }) else {
            return null_arg("cfg");
        };
        let name = match take_str(track, "track") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let track = match pml::sim::track_by_name(name) {
            Ok(t) => t,
            Err(e) => return fail(e),
        };
        agent_out(out, Box::new(ExpertPolicy::new(track, &cfg.0)))
    })
}

/// Action-sweep agent over the exact simulator model of a named track.
/// Needs `pml_agent_note_state` before each `pml_agent_act`.
#[no_mangle]
pub extern "C" fn pml_agent_oracle(
    track: *const c_char,
    cfg: *const PmlConfig,
    out: *mut *mut PmlAgent,
) -> PmlStatus {
    guard(|| {
        let Some(cfg) = (unsafe { cfg.as_ref() }) else {
            return null_arg("cfg");
        };
        let name = match take_str(track, "track") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let build = || -> Result<Box<dyn Policy>, Error> {
            let track = pml::sim::track_by_name(name)?;
            let pref = synth_preference(&track, &cfg.0)?;
            let model = OracleModel::new(track, &cfg.0)?;
            Ok(Box::new(AifPolicy::new(model, pref, &cfg.0)?))
        };
        match build() {
            Ok(policy) => agent_out(out, policy),
            Err(e) => fail(e),
        }
    })
}

/// Action-sweep agent over a trained forward model. `pref_path` may be
/// null, in which case the goal frame is rendered from the track's own
/// lane geometry; otherwise it names a single-frame corpus.
#[no_mangle]
pub extern "C" fn pml_agent_learned(
    model_path: *const c_char,
    pref_path: *const c_char,
    track: *const c_char,
    cfg: *const PmlConfig,
    out: *mut *mut PmlAgent,
) -> PmlStatus {
    guard(|| {
        let Some(cfg) = (unsafe { cfg.as_ref() }) else {
            return null_arg("cfg");
        };
        let model_path = match take_str(model_path, "model_path") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let name = match take_str(track, "track") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let track = match pml::sim::track_by_name(name) {
            Ok(t) => t,
            Err(e) => return fail(e),
        };
        let pref = if pref_path.is_null() {
            match synth_preference(&track, &cfg.0) {
                Ok(p) => p,
                Err(e) => return fail(e),
            }
        } else {
            let path = match take_str(pref_path, "pref_path") {
                Ok(s) => s,
                Err(status) => return status,
            };
            match load_preference(path) {
                Ok(p) => p,
                Err(status) => return status,
            }
        };
        let build = || -> Result<Box<dyn Policy>, Error> {
            let model = LearnedModel::load(Path::new(model_path))?;
            Ok(Box::new(AifPolicy::new(model, pref, &cfg.0)?))
        };
        match build() {
            Ok(policy) => agent_out(out, policy),
            Err(e) => fail(e),
        }
    })
}

/// Behavioral-cloning agent from a trained parameter store.
#[no_mangle]
pub extern "C" fn pml_agent_bc(model_path: *const c_char, out: *mut *mut PmlAgent) -> PmlStatus {
    guard(|| {
        let path = match take_str(model_path, "model_path") {
            Ok(s) => s,
            Err(status) => return status,
        };
        match BcPolicy::load(path) {
            Ok(policy) => agent_out(out, Box::new(policy)),
            Err(e) => fail(e),
        }
    })
}

/// Hands the agent the true vehicle state. Only privileged agents (the
/// oracle sweep, the expert) consume it; others ignore the call.
#[no_mangle]
pub extern "C" fn pml_agent_note_state(
    agent: *mut PmlAgent,
    x: f64,
    y: f64,
    heading: f64,
    speed: f64,
) -> PmlStatus {
    guard(|| {
        let Some(agent) = (unsafe { agent.as_mut() }) else {
            return null_arg("agent");
        };
        match VehicleState::new(x, y, heading, speed) {
            Ok(state) => {
                agent.0.note_true_state(&state);
                PmlStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Picks a steering value in [-1, 1] for a row-major grayscale frame of
/// `width * height` doubles in [0, 1].
#[no_mangle]
pub extern "C" fn pml_agent_act(
    agent: *mut PmlAgent,
    obs: *const f64,
    width: usize,
    height: usize,
    out_steering: *mut f64,
) -> PmlStatus {
    guard(|| {
        let Some(agent) = (unsafe { agent.as_mut() }) else {
            return null_arg("agent");
        };
        let Some(slot) = (unsafe { out_steering.as_mut() }) else {
            return null_arg("out_steering");
        };
        let obs = match image_from_raw(obs, width, height, "obs") {
            Ok(img) => img,
            Err(status) => return status,
        };
        match agent.0.act(&obs) {
            Ok(action) => {
                *slot = action.value();
                PmlStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                PmlStatus::Fault
            }
        }
    })
}

/// Releases an agent. Null is a no-op.
#[no_mangle]
pub extern "C" fn pml_agent_free(agent: *mut PmlAgent) {
    if !agent.is_null() {
        drop(unsafe { Box::from_raw(agent) });
    }
}

/// Drives one full episode on a named track and fills `report`. A
/// `max_steps` of zero picks an on-pace budget for the track. The agent
/// handle stays valid and keeps any state it built up.
#[no_mangle]
pub extern "C" fn pml_run_episode(
    track: *const c_char,
    agent: *mut PmlAgent,
    cfg: *const PmlConfig,
    max_steps: usize,
    report: *mut PmlEpisodeReport,
) -> PmlStatus {
    guard(|| {
        let Some(agent) = (unsafe { agent.as_mut() }) else {
            return null_arg("agent");
        };
        let Some(cfg) = (unsafe { cfg.as_ref() }) else {
            return null_arg("cfg");
        };
        let Some(slot) = (unsafe { report.as_mut() }) else {
            return null_arg("report");
        };
        let name = match take_str(track, "track") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let track = match pml::sim::track_by_name(name) {
            Ok(t) => t,
            Err(e) => return fail(e),
        };
        let budget = if max_steps == 0 {
            default_max_steps(&track, &cfg.0)
        } else {
            max_steps
        };
        match run_episode(&track, agent.0.as_mut(), &cfg.0, budget) {
            Ok((episode, log)) => {
                let avg = if log.is_empty() {
                    f64::NAN
                } else {
                    log.iter().map(|r| r.deviation).sum::<f64>() / log.len() as f64
                };
                *slot = PmlEpisodeReport {
                    status: episode.status.into(),
                    steps: episode.elapsed_steps,
                    avg_deviation: avg,
                    final_x: episode.final_state.x,
                    final_y: episode.final_state.y,
                    final_heading: episode.final_state.heading,
                };
                PmlStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}
