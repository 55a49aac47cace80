use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn offset(self, dx: f64, dy: f64) -> Point {
        Point {
            x: self.x + dx,
            y: self.y + dy,
        }
    }

    fn inside(self, width: f64, height: f64) -> bool {
        (0.0..=width).contains(&self.x) && (0.0..=height).contains(&self.y)
    }
}

pub fn random_point(rng: &mut impl Rng, width: f64, height: f64) -> Point {
    Point {
        x: rng.gen_range(0.0..=width),
        y: rng.gen_range(0.0..=height),
    }
}

/// Independent uniform placement of `n` nodes.
pub fn generate_topology(rng: &mut impl Rng, n: usize, width: f64, height: f64) -> Vec<Point> {
    (0..n).map(|_| random_point(rng, width, height)).collect()
}

pub fn in_range(a: Point, b: Point, range: f64) -> bool {
    a.dist(b) <= range
}

/// Unit-disk neighbour sets by index.
pub fn adjacency(points: &[Point], range: f64) -> Vec<BTreeSet<usize>> {
    let mut adj = vec![BTreeSet::new(); points.len()];
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if in_range(points[i], points[j], range) {
                adj[i].insert(j);
                adj[j].insert(i);
            }
        }
    }
    adj
}

/// Expected neighbour count of a node placed uniformly at random, by
/// numerical integration of the covered area.
pub fn expected_degree(n: usize, width: f64, height: f64, range: f64) -> f64 {
    let steps = 200;
    let mut covered = 0.0;
    for a in 0..steps {
        for b in 0..steps {
            let x = (a as f64 + 0.5) / steps as f64 * width;
            let y = (b as f64 + 0.5) / steps as f64 * height;
            covered += disk_in_rect(x, y, range, width, height);
        }
    }
    let mean_area = covered / (steps * steps) as f64;
    (n as f64 - 1.0) * mean_area / (width * height)
}

fn disk_in_rect(cx: f64, cy: f64, r: f64, width: f64, height: f64) -> f64 {
    // Midpoint rule over vertical strips of the disk.
    let strips = 64;
    let x0 = (cx - r).max(0.0);
    let x1 = (cx + r).min(width);
    let dx = (x1 - x0) / strips as f64;
    (0..strips)
        .map(|k| {
            let x = x0 + (k as f64 + 0.5) * dx;
            let h = (r * r - (x - cx).powi(2)).max(0.0).sqrt();
            ((cy + h).min(height) - (cy - h).max(0.0)).max(0.0) * dx
        })
        .sum()
}

/// Random waypoint motion with zero pause time.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomWaypoint {
    speed: f64,
    width: f64,
    height: f64,
    targets: Vec<Point>,
}

impl RandomWaypoint {
    pub fn new(rng: &mut impl Rng, n: usize, speed: f64, width: f64, height: f64) -> Self {
        Self {
            speed,
            width,
            height,
            targets: generate_topology(rng, n, width, height),
        }
    }

    /// Move every node `dt` seconds along its legs, drawing new waypoints as
    /// they are reached.
    pub fn advance(&mut self, positions: &mut [Point], dt: f64, rng: &mut impl Rng) {
        if self.speed == 0.0 {
            return;
        }
        for (p, target) in positions.iter_mut().zip(&mut self.targets) {
            let mut budget = self.speed * dt;
            loop {
                let d = p.dist(*target);
                if d > budget {
                    let f = budget / d;
                    *p = p.offset((target.x - p.x) * f, (target.y - p.y) * f);
                    break;
                }
                budget -= d;
                *p = *target;
                *target = random_point(rng, self.width, self.height);
            }
        }
    }

    /// Run the model for `seconds` in coarse steps to approach steady state.
    pub fn warm_up(&mut self, positions: &mut [Point], seconds: f64, rng: &mut impl Rng) {
        let step: f64 = 0.1;
        let mut t = 0.0;
        while t < seconds {
            let dt = step.min(seconds - t);
            self.advance(positions, dt, rng);
            t += dt;
        }
    }
}

/// Straight-line drift of one node across another's range boundary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkDrift {
    pub anchor: usize,
    pub mover: usize,
    pub from: Point,
    pub to: Point,
    /// Seconds at which the drift starts and ends.
    pub start: f64,
    pub end: f64,
}

impl LinkDrift {
    pub fn position(&self, t: f64) -> Point {
        if t <= self.start {
            return self.from;
        }
        if t >= self.end {
            return self.to;
        }
        let f = (t - self.start) / (self.end - self.start);
        self.from
            .offset((self.to.x - self.from.x) * f, (self.to.y - self.from.y) * f)
    }
}

fn segment_distance(c: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((c.x - a.x) * dx + (c.y - a.y) * dy) / len2).clamp(0.0, 1.0)
    };
    c.dist(a.offset(dx * t, dy * t))
}

/// Place nodes so that node 1 crosses node 0's range boundary at `time`,
/// ending up inside (`add`) or outside its range, and no other link changes
/// on the way. Retries whole placements; `None` after `attempts` failures.
#[allow(clippy::too_many_arguments)]
pub fn scripted_link_change(
    rng: &mut impl Rng,
    n: usize,
    width: f64,
    height: f64,
    range: f64,
    add: bool,
    time: f64,
    speed: f64,
    margin: f64,
    attempts: usize,
) -> Option<(Vec<Point>, LinkDrift)> {
    let (start_r, end_r) = if add {
        (range + margin, range - margin)
    } else {
        (range - margin, range + margin)
    };
    for _ in 0..attempts {
        let mut pts = generate_topology(rng, n, width, height);
        let anchor = pts[0];
        let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let (ux, uy) = (theta.cos(), theta.sin());
        let from = anchor.offset(ux * start_r, uy * start_r);
        let to = anchor.offset(ux * end_r, uy * end_r);
        if !from.inside(width, height) || !to.inside(width, height) {
            continue;
        }
        pts[1] = from;
        let clean = pts.iter().enumerate().skip(2).all(|(_, &c)| {
            let a = in_range(c, from, range);
            let b = in_range(c, to, range);
            a == b && (a || segment_distance(c, from, to) > range)
        });
        if !clean {
            continue;
        }
        let half = margin / speed;
        return Some((
            pts,
            LinkDrift {
                anchor: 0,
                mover: 1,
                from,
                to,
                start: (time - half).max(0.0),
                end: time + half,
            },
        ));
    }
    None
}
