use crate::error::{Error, Result};
use crate::sim::geom::{dist_to_polyline, Vec2};

/// Which of the three benchmark shapes a track is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Straight,
    OneTurn,
    TwoTurns,
}

impl TaskKind {
    pub fn label(self) -> &'static str {
        match self {
            TaskKind::Straight => "straight",
            TaskKind::OneTurn => "one_turn",
            TaskKind::TwoTurns => "two_turns",
        }
    }
}

/// Lane geometry shared by a group of tracks: how wide each lane is and how
/// many lanes the road carries. The two built-in families mirror a 4.0 m
/// and a 3.5 m lane.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackFamily {
    pub name: String,
    pub lane_width: f64,
    pub lane_count: usize,
}

impl TrackFamily {
    pub fn wide() -> Self {
        Self {
            name: "wide".into(),
            lane_width: 4.0,
            lane_count: 1,
        }
    }

    pub fn narrow() -> Self {
        Self {
            name: "narrow".into(),
            lane_width: 3.5,
            lane_count: 1,
        }
    }

    pub fn road_half_width(&self) -> f64 {
        self.lane_count as f64 * self.lane_width / 2.0
    }

    /// Signed lateral offset of a lane center from the road spine.
    /// Lane 0 is leftmost; positive offsets are to the driver's right.
    pub fn lane_offset(&self, lane: usize) -> Result<f64> {
        if lane >= self.lane_count {
            return Err(Error::InvalidLane {
                family: self.name.clone(),
                lanes: self.lane_count,
                lane,
            });
        }
        Ok((lane as f64 - (self.lane_count as f64 - 1.0) / 2.0) * self.lane_width)
    }
}

/// A complete driving task: road shape, target lane, and its waypoints.
///
/// `centerline` is the target lane's center as a polyline; the drivable
/// road is every point within `road_half_width` of `road_spine`. For the
/// built-in single-lane tracks the two lines coincide.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackSpec {
    pub name: String,
    pub task: TaskKind,
    pub centerline: Vec<Vec2>,
    pub lane_width: f64,
    pub road_spine: Vec<Vec2>,
    pub road_half_width: f64,
    /// Sampled along the lane center at `WAYPOINT_SPACING`.
    pub waypoints: Vec<Vec2>,
    pub goal_index: usize,
    pub start_pos: Vec2,
    pub start_heading: f64,
}

pub const WAYPOINT_SPACING: f64 = 1.0;
/// Arcs become chords of at most this length in the stored polylines.
const ARC_CHORD: f64 = 1.0;

impl TrackSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidTrack(msg));
        if self.centerline.len() < 2 {
            return fail("centerline needs at least 2 points".into());
        }
        for pair in self.centerline.windows(2) {
            if pair[0] == pair[1] {
                return fail("centerline has repeated consecutive points".into());
            }
        }
        if !(self.lane_width > 0.0) {
            return fail(format!("lane_width must be positive, got {}", self.lane_width));
        }
        if self.waypoints.is_empty() {
            return fail("track has no waypoints".into());
        }
        if self.goal_index != self.waypoints.len() - 1 {
            return fail("goal_index must reference the final waypoint".into());
        }
        for (i, wp) in self.waypoints.iter().enumerate() {
            let d = dist_to_polyline(*wp, &self.centerline);
            if d > self.lane_width / 2.0 {
                return fail(format!("waypoint {i} lies {d} m from the lane center"));
            }
        }
        Ok(())
    }

    pub fn goal(&self) -> Vec2 {
        self.waypoints[self.goal_index]
    }

    /// Total lane-center length in meters.
    pub fn length(&self) -> f64 {
        self.centerline
            .windows(2)
            .map(|pair| pair[0].dist(pair[1]))
            .sum()
    }
}

/// Piecewise path: straight runs and circular arcs, walked from the origin
/// heading along +x. Positive turn angles bend right (toward +y).
#[derive(Debug, Clone, Copy)]
enum Seg {
    Line {
        start: Vec2,
        heading: f64,
        len: f64,
    },
    Arc {
        center: Vec2,
        radius: f64,
        start_heading: f64,
        /// Signed turn angle; positive is a right turn.
        turn: f64,
    },
}

impl Seg {
    fn len(&self) -> f64 {
        match *self {
            Seg::Line { len, .. } => len,
            Seg::Arc { radius, turn, .. } => radius * turn.abs(),
        }
    }

    /// Point and heading at arc length `s` from the segment start.
    fn at(&self, s: f64) -> (Vec2, f64) {
        match *self {
            Seg::Line { start, heading, .. } => (
                Vec2::new(start.x + s * heading.cos(), start.y + s * heading.sin()),
                heading,
            ),
            Seg::Arc {
                center,
                radius,
                start_heading,
                turn,
            } => {
                let phi = start_heading + turn.signum() * s / radius;
                let p = if turn > 0.0 {
                    // Right turn: center sits to the right of travel.
                    Vec2::new(center.x + radius * phi.sin(), center.y - radius * phi.cos())
                } else {
                    Vec2::new(center.x - radius * phi.sin(), center.y + radius * phi.cos())
                };
                (p, phi)
            }
        }
    }

    fn end(&self) -> (Vec2, f64) {
        self.at(self.len())
    }
}

#[derive(Debug, Clone)]
struct Path {
    segs: Vec<Seg>,
}

impl Path {
    fn build(moves: &[Move]) -> Path {
        let mut segs = Vec::new();
        let mut pos = Vec2::new(0.0, 0.0);
        let mut heading = 0.0;
        for &m in moves {
            let seg = match m {
                Move::Straight(len) => Seg::Line {
                    start: pos,
                    heading,
                    len,
                },
                Move::Turn { radius, angle } => {
                    // Unit normal toward the turn center.
                    let side = angle.signum();
                    let n = Vec2::new(-heading.sin() * side, heading.cos() * side);
                    Seg::Arc {
                        center: pos.add(n.scale(radius)),
                        radius,
                        start_heading: heading,
                        turn: angle,
                    }
                }
            };
            let (end, end_heading) = seg.end();
            segs.push(seg);
            pos = end;
            heading = end_heading;
        }
        Path { segs }
    }

    fn length(&self) -> f64 {
        self.segs.iter().map(Seg::len).sum()
    }

    fn at(&self, s: f64) -> (Vec2, f64) {
        let mut remaining = s;
        for seg in &self.segs {
            if remaining <= seg.len() {
                return seg.at(remaining);
            }
            remaining -= seg.len();
        }
        self.segs.last().expect("path has segments").end()
    }

    /// The parallel path a signed lateral distance `d` to the right.
    /// Lines shift sideways; arcs change radius by the offset.
    fn offset(&self, d: f64) -> Path {
        let segs = self
            .segs
            .iter()
            .map(|seg| match *seg {
                Seg::Line { start, heading, len } => {
                    let n = Vec2::new(-heading.sin(), heading.cos());
                    Seg::Line {
                        start: start.add(n.scale(d)),
                        heading,
                        len,
                    }
                }
                Seg::Arc {
                    center,
                    radius,
                    start_heading,
                    turn,
                } => {
                    let new_radius = if turn > 0.0 { radius - d } else { radius + d };
                    assert!(
                        new_radius > 0.0,
                        "lane offset exceeds turn radius; road would fold over itself"
                    );
                    Seg::Arc {
                        center,
                        radius: new_radius,
                        start_heading,
                        turn,
                    }
                }
            })
            .collect();
        Path { segs }
    }

    /// Polyline with arcs chopped into chords no longer than `ARC_CHORD`.
    fn polyline(&self) -> Vec<Vec2> {
        let mut pts: Vec<Vec2> = Vec::new();
        let mut push = |p: Vec2| {
            if pts.last() != Some(&p) {
                pts.push(p);
            }
        };
        for seg in &self.segs {
            match *seg {
                Seg::Line { .. } => {
                    push(seg.at(0.0).0);
                    push(seg.end().0);
                }
                Seg::Arc { .. } => {
                    let len = seg.len();
                    let n = (len / ARC_CHORD).ceil().max(1.0) as usize;
                    for k in 0..=n {
                        push(seg.at(len * k as f64 / n as f64).0);
                    }
                }
            }
        }
        pts
    }

    /// Points every `spacing` meters from the start, end point included
    /// when the total length is a whole number of spacings.
    fn sample(&self, spacing: f64) -> Vec<Vec2> {
        let total = self.length();
        let n = (total / spacing + 1e-9).floor() as usize;
        (0..=n).map(|k| self.at(k as f64 * spacing).0).collect()
    }
}

#[derive(Debug, Clone, Copy)]
enum Move {
    Straight(f64),
    /// Positive angle turns right, negative turns left.
    Turn { radius: f64, angle: f64 },
}

fn task_moves(task: TaskKind, turn_radius: f64, leg: f64) -> Vec<Move> {
    use std::f64::consts::FRAC_PI_2;
    match task {
        TaskKind::Straight => vec![Move::Straight(leg)],
        TaskKind::OneTurn => vec![
            Move::Straight(leg),
            Move::Turn {
                radius: turn_radius,
                angle: FRAC_PI_2,
            },
            Move::Straight(leg),
        ],
        TaskKind::TwoTurns => vec![
            Move::Straight(leg),
            Move::Turn {
                radius: turn_radius,
                angle: FRAC_PI_2,
            },
            Move::Straight(leg),
            Move::Turn {
                radius: turn_radius,
                angle: -FRAC_PI_2,
            },
            Move::Straight(leg),
        ],
    }
}

/// Single-lane track of the given shape; the road is exactly one lane wide.
pub fn make_track(
    task: TaskKind,
    lane_width: f64,
    turn_radius: f64,
    leg_length: f64,
) -> Result<TrackSpec> {
    let family = TrackFamily {
        name: format!("lane{lane_width}"),
        lane_width,
        lane_count: 1,
    };
    make_lane_track(task, &family, 0, turn_radius, leg_length)
}

/// Track on lane `lane` of a road with `family.lane_count` lanes. The road
/// polygon spans all lanes; waypoints follow the chosen lane's center.
pub fn make_lane_track(
    task: TaskKind,
    family: &TrackFamily,
    lane: usize,
    turn_radius: f64,
    leg_length: f64,
) -> Result<TrackSpec> {
    if !(family.lane_width > 0.0) || !(turn_radius > 0.0) || !(leg_length > 0.0) {
        return Err(Error::InvalidTrack(format!(
            "geometry parameters must be positive: lane_width {} turn_radius {turn_radius} leg_length {leg_length}",
            family.lane_width
        )));
    }
    if family.lane_count == 0 {
        return Err(Error::InvalidTrack("family needs at least one lane".into()));
    }
    let offset = family.lane_offset(lane)?;
    let spine = Path::build(&task_moves(task, turn_radius, leg_length));
    let lane_path = spine.offset(offset);
    let waypoints = lane_path.sample(WAYPOINT_SPACING);
    let (start_pos, start_heading) = lane_path.at(0.0);
    let track = TrackSpec {
        name: format!("{}-{}", task.label(), family.name),
        task,
        centerline: lane_path.polyline(),
        lane_width: family.lane_width,
        road_spine: spine.polyline(),
        road_half_width: family.road_half_width(),
        goal_index: waypoints.len() - 1,
        waypoints,
        start_pos,
        start_heading,
    };
    track.validate()?;
    Ok(track)
}

/// Standard benchmark dimensions used by the CLI and the eval suite.
pub const TURN_RADIUS: f64 = 10.0;
pub const STRAIGHT_LEG: f64 = 100.0;
pub const TURN_LEG: f64 = 30.0;
pub const TWO_TURN_LEG: f64 = 22.0;

/// Looks up a benchmark track by its CLI label, e.g. "one-turn-narrow".
pub fn track_by_name(name: &str) -> Result<TrackSpec> {
    let (task_part, family) = match name.rsplit_once('-') {
        Some((t, "wide")) => (t, TrackFamily::wide()),
        Some((t, "narrow")) => (t, TrackFamily::narrow()),
        _ => return Err(Error::UnknownTrack(name.into())),
    };
    let (task, leg) = match task_part {
        "straight" => (TaskKind::Straight, STRAIGHT_LEG),
        "one-turn" => (TaskKind::OneTurn, TURN_LEG),
        "two-turns" => (TaskKind::TwoTurns, TWO_TURN_LEG),
        _ => return Err(Error::UnknownTrack(name.into())),
    };
    let mut track = make_lane_track(task, &family, 0, TURN_RADIUS, leg)?;
    track.name = name.to_string();
    Ok(track)
}

pub fn benchmark_track_names() -> [&'static str; 6] {
    [
        "straight-wide",
        "one-turn-wide",
        "two-turns-wide",
        "straight-narrow",
        "one-turn-narrow",
        "two-turns-narrow",
    ]
}
