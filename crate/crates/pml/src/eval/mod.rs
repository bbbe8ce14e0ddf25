//! Benchmark harness: runs a policy over the track suite from perturbed
//! starts, measures per-step waypoint deviation, and aggregates the numbers
//! into per-task and overall rows.

pub mod report;

pub use report::{parse_metrics, render_report, MetricsRow, METRICS_HEADER};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::sim::{
    default_max_steps, run_episode_from, EpisodeStatus, Policy, TaskKind, TrackSpec, Vec2,
};
use crate::vehicle::VehicleState;
use serde::{Deserialize, Serialize};

/// Matched waypoint index per trajectory position. The cursor only moves
/// forward: each position matches its nearest waypoint among those at or
/// past the previous match, so a track that doubles back near itself cannot
/// yank the match to an earlier leg.
fn matched_indices(trajectory: &[Vec2], waypoints: &[Vec2]) -> Vec<usize> {
    let mut out = Vec::with_capacity(trajectory.len());
    let mut cursor = 0;
    for p in trajectory {
        let mut best = cursor;
        let mut best_d = p.dist(waypoints[cursor]);
        for (j, wp) in waypoints.iter().enumerate().skip(cursor + 1) {
            let d = p.dist(*wp);
            if d < best_d {
                best = j;
                best_d = d;
            }
        }
        cursor = best;
        out.push(best);
    }
    out
}

/// Distance from each trajectory position to its waypoint, matching
/// forward-only as the vehicle makes progress.
pub fn deviation_series(trajectory: &[Vec2], waypoints: &[Vec2]) -> Result<Vec<f64>> {
    if trajectory.is_empty() {
        return Err(Error::Eval("deviation series of an empty trajectory".into()));
    }
    if waypoints.is_empty() {
        return Err(Error::Eval("deviation series against no waypoints".into()));
    }
    Ok(matched_indices(trajectory, waypoints)
        .into_iter()
        .zip(trajectory)
        .map(|(j, p)| p.dist(waypoints[j]))
        .collect())
}

/// One benchmark table cell: how one agent did on one task of one family.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskResult {
    pub town_family: String,
    pub agent: String,
    pub task: TaskKind,
    pub runs: usize,
    pub avg_deviation: f64,
    pub success_rate: f64,
}

/// Family-level aggregate: unweighted mean of the family's task rows.
#[derive(Debug, Clone, PartialEq)]
pub struct OverallRow {
    pub town_family: String,
    pub agent: String,
    pub runs: usize,
    pub avg_deviation: f64,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SuiteResult {
    pub tasks: Vec<TaskResult>,
    pub overall: Vec<OverallRow>,
}

fn task_rank(task: TaskKind) -> u8 {
    match task {
        TaskKind::Straight => 0,
        TaskKind::OneTurn => 1,
        TaskKind::TwoTurns => 2,
    }
}

impl SuiteResult {
    /// Machine-readable form: one row per task plus an `overall` row per
    /// family, sorted by (town, agent, task) so equal inputs give equal
    /// bytes. Numbers use the shortest exact float form.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(METRICS_HEADER);
        out.push('\n');
        let mut tasks = self.tasks.clone();
        tasks.sort_by(|a, b| {
            (&a.town_family, &a.agent, task_rank(a.task)).cmp(&(
                &b.town_family,
                &b.agent,
                task_rank(b.task),
            ))
        });
        for r in &tasks {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                r.town_family,
                r.agent,
                r.task.label(),
                r.runs,
                r.avg_deviation,
                r.success_rate
            ));
        }
        let mut overall = self.overall.clone();
        overall.sort_by(|a, b| (&a.town_family, &a.agent).cmp(&(&b.town_family, &b.agent)));
        for r in &overall {
            out.push_str(&format!(
                "{}\t{}\toverall\t{}\t{}\t{}\n",
                r.town_family, r.agent, r.runs, r.avg_deviation, r.success_rate
            ));
        }
        out
    }
}

pub const RUNS_PER_TRACK: usize = 4;

/// Start-pose variations across a task's runs: lateral shifts of 0 and
/// ±0.3 m, and one 3-degree heading offset.
pub fn start_perturbations() -> [(f64, f64); RUNS_PER_TRACK] {
    [
        (0.0, 0.0),
        (0.3, 0.0),
        (-0.3, 0.0),
        (0.0, 3.0_f64.to_radians()),
    ]
}

/// Canonical start shifted `lateral` meters to the driver's right and
/// rotated by `dheading`.
pub fn perturbed_start(
    track: &TrackSpec,
    speed: f64,
    lateral: f64,
    dheading: f64,
) -> Result<VehicleState> {
    let (sin_h, cos_h) = (track.start_heading.sin(), track.start_heading.cos());
    VehicleState::new(
        track.start_pos.x - lateral * sin_h,
        track.start_pos.y + lateral * cos_h,
        track.start_heading + dheading,
        speed,
    )
}

/// Every family label is the suffix of the benchmark name, e.g.
/// "one-turn-narrow" -> "narrow"; names without a dash stand alone.
pub fn family_label(track: &TrackSpec) -> String {
    match track.name.rsplit_once('-') {
        Some((_, suffix)) => suffix.to_string(),
        None => track.name.clone(),
    }
}

/// Runs one task `runs` times from the perturbed starts and reduces the
/// logs to a row. Deviation averages over every step of every run.
pub fn run_task<F>(
    track: &TrackSpec,
    mut make_policy: F,
    agent: &str,
    runs: usize,
    cfg: &RunConfig,
) -> Result<TaskResult>
where
    F: FnMut(&TrackSpec) -> Result<Box<dyn Policy>>,
{
    if runs == 0 {
        return Err(Error::Eval("a task needs at least one run".into()));
    }
    let perturbations = start_perturbations();
    let max_steps = default_max_steps(track, cfg);
    let mut successes = 0usize;
    let mut dev_sum = 0.0;
    let mut dev_count = 0usize;
    for run in 0..runs {
        let (lateral, dheading) = perturbations[run % perturbations.len()];
        let start = perturbed_start(track, cfg.speed, lateral, dheading)?;
        let mut policy = make_policy(track)
            .map_err(|e| Error::Eval(format!("agent {agent:?} failed to load: {e}")))?;
        let (episode, log) = run_episode_from(track, policy.as_mut(), cfg, max_steps, start)?;
        if episode.status == EpisodeStatus::Success {
            successes += 1;
        }
        let positions: Vec<Vec2> = log.iter().map(|r| Vec2::new(r.x, r.y)).collect();
        if !positions.is_empty() {
            for d in deviation_series(&positions, &track.waypoints)? {
                dev_sum += d;
            }
            dev_count += positions.len();
        }
    }
    if dev_count == 0 {
        return Err(Error::Eval(format!(
            "no steps recorded across {runs} runs on {}",
            track.name
        )));
    }
    Ok(TaskResult {
        town_family: family_label(track),
        agent: agent.to_string(),
        task: track.task,
        runs,
        avg_deviation: dev_sum / dev_count as f64,
        success_rate: successes as f64 * 100.0 / runs as f64,
    })
}

/// Runs every track in the suite and appends one overall row per family.
pub fn run_suite<F>(
    mut make_policy: F,
    agent: &str,
    suite: &[TrackSpec],
    runs_per_track: usize,
    cfg: &RunConfig,
) -> Result<SuiteResult>
where
    F: FnMut(&TrackSpec) -> Result<Box<dyn Policy>>,
{
    if suite.is_empty() {
        return Err(Error::Eval("empty track suite".into()));
    }
    let mut tasks = Vec::with_capacity(suite.len());
    for track in suite {
        tasks.push(run_task(track, &mut make_policy, agent, runs_per_track, cfg)?);
    }
    tasks.sort_by(|a, b| {
        (&a.town_family, &a.agent, task_rank(a.task)).cmp(&(
            &b.town_family,
            &b.agent,
            task_rank(b.task),
        ))
    });
    let mut overall = Vec::new();
    let mut families: Vec<String> = tasks.iter().map(|r| r.town_family.clone()).collect();
    families.dedup();
    for fam in families {
        let rows: Vec<&TaskResult> = tasks.iter().filter(|r| r.town_family == fam).collect();
        let n = rows.len() as f64;
        overall.push(OverallRow {
            town_family: fam,
            agent: agent.to_string(),
            runs: runs_per_track,
            avg_deviation: rows.iter().map(|r| r.avg_deviation).sum::<f64>() / n,
            success_rate: rows.iter().map(|r| r.success_rate).sum::<f64>() / n,
        });
    }
    Ok(SuiteResult { tasks, overall })
}

/// Track list for the eval command, loadable from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackSuite {
    pub tracks: Vec<String>,
}

impl Default for TrackSuite {
    fn default() -> Self {
        TrackSuite {
            tracks: crate::sim::benchmark_track_names()
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

impl TrackSuite {
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self)
            .map_err(|e| Error::Eval(format!("suite serialization failed: {e}")))
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let suite: Self =
            toml::from_str(text).map_err(|e| Error::Eval(format!("bad suite file: {e}")))?;
        if suite.tracks.is_empty() {
            return Err(Error::Eval("suite lists no tracks".into()));
        }
        Ok(suite)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn resolve(&self) -> Result<Vec<TrackSpec>> {
        self.tracks
            .iter()
            .map(|name| crate::sim::track_by_name(name))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::ExpertPolicy;
    use crate::image::GrayImage;
    use crate::rng::rng_from_seed;
    use crate::sim::track_by_name;
    use crate::steer::SteeringAction;
    use rand::Rng;

    /// Same matching discipline, written as the plainest possible scan.
    fn oracle_series(trajectory: &[Vec2], waypoints: &[Vec2]) -> Vec<f64> {
        let mut out = Vec::new();
        let mut floor = 0usize;
        for p in trajectory {
            let mut best_j = usize::MAX;
            let mut best = f64::INFINITY;
            for j in 0..waypoints.len() {
                if j < floor {
                    continue;
                }
                let d = ((p.x - waypoints[j].x).powi(2) + (p.y - waypoints[j].y).powi(2)).sqrt();
                if d < best {
                    best = d;
                    best_j = j;
                }
            }
            floor = best_j;
            out.push(best);
        }
        out
    }

    #[test]
    fn on_line_driving_scores_zero() {
        let track = track_by_name("straight-wide").unwrap();
        let devs = deviation_series(&track.waypoints, &track.waypoints).unwrap();
        assert!(devs.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn constant_offset_straight_track_scores_the_offset() {
        let track = track_by_name("straight-wide").unwrap();
        let shifted: Vec<Vec2> = track
            .waypoints
            .iter()
            .map(|wp| Vec2::new(wp.x, wp.y + 0.3))
            .collect();
        for d in deviation_series(&shifted, &track.waypoints).unwrap() {
            assert_eq!(d, 0.3);
        }
        // Positions between waypoints pick up at most the half-spacing
        // discretization on top of the lateral offset.
        let dense: Vec<Vec2> = (0..400).map(|k| Vec2::new(k as f64 * 0.25, 0.3)).collect();
        let bound = (0.3f64 * 0.3 + 0.5 * 0.5).sqrt() + 1e-12;
        for d in deviation_series(&dense, &track.waypoints).unwrap() {
            assert!((0.3..=bound).contains(&d), "deviation {d} outside [0.3, {bound}]");
        }
    }

    #[test]
    fn single_waypoint_measures_distance_to_it() {
        let wps = [Vec2::new(1.0, 2.0)];
        let traj = [Vec2::new(1.0, 2.0), Vec2::new(4.0, 6.0)];
        assert_eq!(deviation_series(&traj, &wps).unwrap(), vec![0.0, 5.0]);
    }

    #[test]
    fn matches_brute_force_oracle_on_random_trajectories() {
        let track = track_by_name("two-turns-wide").unwrap();
        let mut rng = rng_from_seed(41);
        for _ in 0..20 {
            let mut pos = Vec2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let mut traj = Vec::new();
            for _ in 0..120 {
                pos = Vec2::new(
                    pos.x + rng.gen_range(-0.2..0.8),
                    pos.y + rng.gen_range(-0.5..0.5),
                );
                traj.push(pos);
            }
            let fast = deviation_series(&traj, &track.waypoints).unwrap();
            let slow = oracle_series(&traj, &track.waypoints);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn matched_index_never_decreases_and_ignores_earlier_legs() {
        // Hairpin: outbound along y=0, back along y=1. A trajectory on the
        // return leg passes closer to outbound waypoints than to its own.
        let mut wps: Vec<Vec2> = (0..=10).map(|k| Vec2::new(k as f64, 0.0)).collect();
        wps.extend((0..=10).map(|k| Vec2::new(10.0 - k as f64, 1.0)));
        let traj: Vec<Vec2> = (0..=10).map(|k| Vec2::new(10.0 - k as f64, 0.4)).collect();
        let idx = matched_indices(&traj, &wps);
        for pair in idx.windows(2) {
            assert!(pair[1] >= pair[0], "matched index went backward: {idx:?}");
        }
        // First step grabs the outbound leg (still ahead of the cursor);
        // every later step must stay on the return leg: distance 0.6, not
        // the 0.4 an unconstrained nearest-point match would report.
        let devs = deviation_series(&traj, &wps).unwrap();
        for &d in &devs[1..] {
            assert!((d - 0.6).abs() < 1e-12, "deviation {d}, expected 0.6");
        }
    }

    #[test]
    fn empty_inputs_are_refused() {
        let wps = [Vec2::new(0.0, 0.0)];
        assert!(deviation_series(&[], &wps).is_err());
        assert!(deviation_series(&wps, &[]).is_err());
    }

    fn expert_factory(cfg: RunConfig) -> impl FnMut(&TrackSpec) -> Result<Box<dyn Policy>> {
        move |track: &TrackSpec| {
            Ok(Box::new(ExpertPolicy::new(track.clone(), &cfg)) as Box<dyn Policy>)
        }
    }

    #[test]
    fn expert_sweeps_both_families_cleanly() {
        let cfg = RunConfig::default();
        let suite = [
            track_by_name("straight-wide").unwrap(),
            track_by_name("one-turn-narrow").unwrap(),
        ];
        let result =
            run_suite(expert_factory(cfg.clone()), "expert", &suite, 4, &cfg).unwrap();
        assert_eq!(result.tasks.len(), 2);
        for row in &result.tasks {
            assert_eq!(row.success_rate, 100.0, "failed on {:?}", row);
            assert!(row.avg_deviation < 0.5, "deviation {}", row.avg_deviation);
            assert_eq!(row.runs, 4);
        }
        // One family per track here, so overalls mirror the task rows.
        assert_eq!(result.overall.len(), 2);
        assert_eq!(result.overall[0].town_family, "narrow");
        assert_eq!(result.overall[1].town_family, "wide");
    }

    #[test]
    fn partial_success_is_an_exact_percentage() {
        let cfg = RunConfig::default();
        let track = track_by_name("one-turn-wide").unwrap();
        // First run drives with the expert and succeeds; the rest hold the
        // wheel straight and leave the lane in the turn.
        let mut run = 0;
        let factory = |track: &TrackSpec| -> Result<Box<dyn Policy>> {
            run += 1;
            if run == 1 {
                Ok(Box::new(ExpertPolicy::new(track.clone(), &cfg)))
            } else {
                Ok(Box::new(|_: &GrayImage| SteeringAction::new(0.0)))
            }
        };
        let row = run_task(&track, factory, "mixed", 4, &cfg).unwrap();
        assert_eq!(row.success_rate, 25.0);
    }

    #[test]
    fn suite_metrics_are_byte_deterministic() {
        let cfg = RunConfig::default();
        let suite = [track_by_name("straight-narrow").unwrap()];
        let a = run_suite(expert_factory(cfg.clone()), "expert", &suite, 4, &cfg)
            .unwrap()
            .to_tsv();
        let b = run_suite(expert_factory(cfg.clone()), "expert", &suite, 4, &cfg)
            .unwrap()
            .to_tsv();
        assert_eq!(a, b);
        assert!(a.starts_with(METRICS_HEADER));
        assert_eq!(a.lines().count(), 3);
    }

    #[test]
    fn failing_agent_aborts_the_suite() {
        let cfg = RunConfig::default();
        let suite = [track_by_name("straight-wide").unwrap()];
        let factory = |_: &TrackSpec| -> Result<Box<dyn Policy>> {
            Err(Error::Eval("missing parameters".into()))
        };
        let err = run_suite(factory, "broken", &suite, 4, &cfg).unwrap_err();
        assert!(err.to_string().contains("failed to load"));
    }

    #[test]
    fn suite_file_round_trips_and_rejects_empty() {
        let suite = TrackSuite::default();
        assert_eq!(suite.tracks.len(), 6);
        let text = suite.to_toml_string().unwrap();
        assert_eq!(TrackSuite::from_toml_str(&text).unwrap(), suite);
        assert!(TrackSuite::from_toml_str("tracks = []\n").is_err());
        assert_eq!(suite.resolve().unwrap().len(), 6);
        assert!(TrackSuite { tracks: vec!["мoon".into()] }.resolve().is_err());
    }

    #[test]
    fn perturbed_start_moves_to_the_drivers_right() {
        let track = track_by_name("straight-wide").unwrap();
        let s = perturbed_start(&track, 5.0, 0.3, 0.0).unwrap();
        // Start heading is +x, so the driver's right is +y.
        assert!((s.y - (track.start_pos.y + 0.3)).abs() < 1e-12);
        assert_eq!(s.x, track.start_pos.x);
        let r = perturbed_start(&track, 5.0, 0.0, 0.05).unwrap();
        assert_eq!(r.heading, track.start_heading + 0.05);
    }
}
