/// 2D point/vector in world meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }

    pub fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }

    pub fn scale(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist(self, o: Vec2) -> f64 {
        self.sub(o).norm()
    }

    pub fn dist_sq(self, o: Vec2) -> f64 {
        self.sub(o).norm_sq()
    }
}

/// Squared distance from `p` to the closed segment `[a, b]`.
pub fn dist_sq_point_segment(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b.sub(a);
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return p.dist_sq(a);
    }
    let t = (p.sub(a).dot(ab) / len_sq).clamp(0.0, 1.0);
    p.dist_sq(a.add(ab.scale(t)))
}

/// Distance from `p` to a polyline (at least one point).
pub fn dist_to_polyline(p: Vec2, pts: &[Vec2]) -> f64 {
    assert!(!pts.is_empty(), "polyline needs at least one point");
    if pts.len() == 1 {
        return p.dist(pts[0]);
    }
    let mut best = f64::INFINITY;
    for pair in pts.windows(2) {
        let d = dist_sq_point_segment(p, pair[0], pair[1]);
        if d < best {
            best = d;
        }
    }
    best.sqrt()
}

/// True when `p` lies within `half_width` of the polyline. Compares squared
/// values and short-circuits; the containment answer is identical to the
/// full minimum-distance scan.
pub fn within_polyline(p: Vec2, pts: &[Vec2], half_width: f64) -> bool {
    let limit = half_width * half_width;
    if pts.len() == 1 {
        return p.dist_sq(pts[0]) <= limit;
    }
    pts.windows(2)
        .any(|pair| dist_sq_point_segment(p, pair[0], pair[1]) <= limit)
}
