//! Exercises the C surface the way a foreign caller would: through raw
//! pointers and status codes, including the rude paths (nulls, bad names,
//! finished sessions).

use std::ffi::{CStr, CString};
use std::ptr;

use pml_ffi::{
    pml_agent_act, pml_agent_bc, pml_agent_expert, pml_agent_free, pml_agent_note_state,
    pml_agent_oracle, pml_config_default, pml_config_free, pml_config_image_size,
    pml_config_load, pml_last_error_message, pml_run_episode, pml_sim_deviation, pml_sim_free,
    pml_sim_new, pml_sim_observation_len, pml_sim_observe, pml_sim_pose, pml_sim_reset,
    pml_sim_status, pml_sim_step, pml_sim_step_count, pml_status_name, pml_version, PmlAgent,
    PmlConfig, PmlEpisodeReport, PmlEpisodeStatus, PmlSim, PmlStatus,
};

fn last_error() -> String {
    unsafe { CStr::from_ptr(pml_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn default_config() -> *mut PmlConfig {
    let mut cfg: *mut PmlConfig = ptr::null_mut();
    assert_eq!(pml_config_default(&mut cfg), PmlStatus::Ok);
    assert!(!cfg.is_null());
    cfg
}

fn sim_on(track: &str, cfg: *const PmlConfig) -> *mut PmlSim {
    let name = CString::new(track).unwrap();
    let mut sim: *mut PmlSim = ptr::null_mut();
    assert_eq!(pml_sim_new(name.as_ptr(), cfg, &mut sim), PmlStatus::Ok);
    assert!(!sim.is_null());
    sim
}

#[test]
fn version_and_status_names_are_static_strings() {
    let version = unsafe { CStr::from_ptr(pml_version()) }.to_str().unwrap();
    assert!(version.contains('.'), "version {version:?} looks wrong");
    let name = unsafe { CStr::from_ptr(pml_status_name(PmlStatus::NotFound)) }
        .to_str()
        .unwrap();
    assert_eq!(name, "not_found");
}

#[test]
fn config_round_trip_and_null_paths() {
    let cfg = default_config();
    let mut size = 0usize;
    assert_eq!(pml_config_image_size(cfg, &mut size), PmlStatus::Ok);
    assert_eq!(size, 64);
    assert_eq!(
        pml_config_image_size(ptr::null(), &mut size),
        PmlStatus::NullArgument
    );
    assert_eq!(pml_config_image_size(cfg, ptr::null_mut()), PmlStatus::NullArgument);
    pml_config_free(cfg);
    pml_config_free(ptr::null_mut());

    let missing = CString::new("/no/such/config.toml").unwrap();
    let mut loaded: *mut PmlConfig = ptr::null_mut();
    assert_eq!(pml_config_load(missing.as_ptr(), &mut loaded), PmlStatus::Io);
    assert!(loaded.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn ssim_of_a_buffer_with_itself_is_one() {
    let n = 16usize;
    let img: Vec<f64> = (0..n * n).map(|i| (i % 7) as f64 / 10.0).collect();
    let mut score = 0.0f64;
    assert_eq!(
        pml_ffi::pml_ssim(img.as_ptr(), img.as_ptr(), n, n, &mut score),
        PmlStatus::Ok
    );
    assert!((score - 1.0).abs() < 1e-12, "self-similarity {score}");

    assert_eq!(
        pml_ffi::pml_ssim(ptr::null(), img.as_ptr(), n, n, &mut score),
        PmlStatus::NullArgument
    );
    let bad = vec![2.5f64; n * n];
    assert_eq!(
        pml_ffi::pml_ssim(bad.as_ptr(), img.as_ptr(), n, n, &mut score),
        PmlStatus::InvalidArgument
    );
}

#[test]
fn sim_session_drives_and_refuses_nonsense() {
    let cfg = default_config();
    let sim = sim_on("straight-wide", cfg);

    let mut len = 0usize;
    assert_eq!(pml_sim_observation_len(sim, &mut len), PmlStatus::Ok);
    assert_eq!(len, 64 * 64);
    let mut frame = vec![0.0f64; len];
    assert_eq!(pml_sim_observe(sim, frame.as_mut_ptr(), len), PmlStatus::Ok);
    assert!(
        frame.iter().any(|&v| v > 0.5),
        "the camera should see road pixels from the start pose"
    );
    assert_eq!(
        pml_sim_observe(sim, frame.as_mut_ptr(), len - 1),
        PmlStatus::InvalidArgument
    );

    for _ in 0..3 {
        assert_eq!(pml_sim_step(sim, 0.0), PmlStatus::Ok);
    }
    let (mut x, mut y, mut heading) = (0.0, 0.0, 0.0);
    assert_eq!(pml_sim_pose(sim, &mut x, &mut y, &mut heading), PmlStatus::Ok);
    // Default pace is 5 m/s at 0.1 s per step, straight down the x axis.
    assert!((x - 1.5).abs() < 1e-9, "x = {x}");
    assert!(y.abs() < 1e-9 && heading.abs() < 1e-9);

    let mut dev = -1.0;
    assert_eq!(pml_sim_deviation(sim, &mut dev), PmlStatus::Ok);
    assert!(dev.abs() < 1e-9, "centered start, deviation {dev}");
    let mut steps = 0usize;
    assert_eq!(pml_sim_step_count(sim, &mut steps), PmlStatus::Ok);
    assert_eq!(steps, 3);
    let mut status = PmlEpisodeStatus::Timeout;
    assert_eq!(pml_sim_status(sim, &mut status), PmlStatus::Ok);
    assert_eq!(status, PmlEpisodeStatus::Running);

    assert_eq!(pml_sim_step(sim, 2.0), PmlStatus::InvalidArgument);
    assert_eq!(pml_sim_reset(sim), PmlStatus::Ok);
    assert_eq!(pml_sim_step_count(sim, &mut steps), PmlStatus::Ok);
    assert_eq!(steps, 0);

    pml_sim_free(sim);
    pml_sim_free(ptr::null_mut());
    pml_config_free(cfg);
}

#[test]
fn sim_session_ends_off_lane_and_step_refuses_to_continue() {
    let cfg = default_config();
    let sim = sim_on("straight-narrow", cfg);
    let mut status = PmlEpisodeStatus::Running;
    // Hard left on a narrow lane leaves it within a couple of meters.
    for _ in 0..200 {
        let rc = pml_sim_step(sim, -1.0);
        if rc != PmlStatus::Ok {
            panic!("step failed before the lane edge: {rc:?}");
        }
        assert_eq!(pml_sim_status(sim, &mut status), PmlStatus::Ok);
        if status != PmlEpisodeStatus::Running {
            break;
        }
    }
    assert_eq!(status, PmlEpisodeStatus::OffLane);
    assert_eq!(pml_sim_step(sim, 0.0), PmlStatus::InvalidArgument);
    assert!(last_error().contains("reset"));
    pml_sim_free(sim);
    pml_config_free(cfg);
}

#[test]
fn unknown_track_reports_not_found_with_the_name() {
    let cfg = default_config();
    let name = CString::new("figure-eight").unwrap();
    let mut sim: *mut PmlSim = ptr::null_mut();
    assert_eq!(pml_sim_new(name.as_ptr(), cfg, &mut sim), PmlStatus::NotFound);
    assert!(last_error().contains("figure-eight"));
    pml_config_free(cfg);
}

#[test]
fn expert_agent_completes_an_episode_through_the_abi() {
    let cfg = default_config();
    let track = CString::new("one-turn-wide").unwrap();
    let mut agent: *mut PmlAgent = ptr::null_mut();
    assert_eq!(pml_agent_expert(track.as_ptr(), cfg, &mut agent), PmlStatus::Ok);
    let mut report = PmlEpisodeReport {
        status: PmlEpisodeStatus::Running,
        steps: 0,
        avg_deviation: 0.0,
        final_x: 0.0,
        final_y: 0.0,
        final_heading: 0.0,
    };
    assert_eq!(
        pml_run_episode(track.as_ptr(), agent, cfg, 0, &mut report),
        PmlStatus::Ok
    );
    assert_eq!(report.status, PmlEpisodeStatus::Success);
    assert!(report.steps > 0);
    assert!(
        report.avg_deviation < 0.5,
        "expert wandered {} m from center",
        report.avg_deviation
    );
    pml_agent_free(agent);
    pml_config_free(cfg);
}

#[test]
fn oracle_agent_steers_back_toward_center_via_act() {
    let cfg = default_config();
    let track = CString::new("straight-wide").unwrap();
    let mut agent: *mut PmlAgent = ptr::null_mut();
    assert_eq!(pml_agent_oracle(track.as_ptr(), cfg, &mut agent), PmlStatus::Ok);

    // Stand left of center: the swept prediction should pick a rightward
    // (negative-y-correcting) steer, and the same state twice must give
    // the same answer.
    assert_eq!(
        pml_agent_note_state(agent, 10.0, 0.8, 0.0, 5.0),
        PmlStatus::Ok
    );
    let sim = sim_on("straight-wide", cfg);
    let mut frame = vec![0.0f64; 64 * 64];
    assert_eq!(pml_sim_observe(sim, frame.as_mut_ptr(), frame.len()), PmlStatus::Ok);
    let mut first = f64::NAN;
    assert_eq!(
        pml_agent_act(agent, frame.as_ptr(), 64, 64, &mut first),
        PmlStatus::Ok
    );
    assert!((-1.0..=1.0).contains(&first));
    assert!(first < 0.0, "left of center should steer right, got {first}");

    assert_eq!(
        pml_agent_note_state(agent, 10.0, 0.8, 0.0, 5.0),
        PmlStatus::Ok
    );
    let mut second = f64::NAN;
    assert_eq!(
        pml_agent_act(agent, frame.as_ptr(), 64, 64, &mut second),
        PmlStatus::Ok
    );
    assert_eq!(first, second, "same state, same sweep, same action");

    assert_eq!(
        pml_agent_note_state(agent, 1.0, 0.0, 0.0, f64::NAN),
        PmlStatus::Numeric
    );
    pml_sim_free(sim);
    pml_agent_free(agent);
    pml_config_free(cfg);
}

#[test]
fn bc_agent_from_missing_store_fails_cleanly() {
    let path = CString::new("/no/such/params.pmlw").unwrap();
    let mut agent: *mut PmlAgent = ptr::null_mut();
    assert_eq!(pml_agent_bc(path.as_ptr(), &mut agent), PmlStatus::Io);
    assert!(agent.is_null());
    assert_eq!(pml_agent_bc(ptr::null(), &mut agent), PmlStatus::NullArgument);
    pml_agent_free(ptr::null_mut());
}

#[test]
fn generated_header_declares_the_surface() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/pml.h"))
        .expect("build.rs writes include/pml.h");
    for needle in [
        "typedef enum PmlStatus",
        "typedef struct PmlAgent PmlAgent;",
        "typedef struct PmlConfig PmlConfig;",
        "typedef struct PmlSim PmlSim;",
        "PmlStatus pml_run_episode(",
        "const char *pml_last_error_message(void);",
    ] {
        assert!(header.contains(needle), "header lost {needle:?}");
    }
}
