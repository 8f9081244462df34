//! Cylinder model: circumference, cross-sectional potential and the boundary
//! configuration, together with their JSON representation.
//!
//! Coordinates are `(x, theta)` with `x` along the axis and `theta` the angle
//! on a circle of circumference `c`. Angles are kept lifted to the real line;
//! every geometric routine reduces differences modulo `c` where it matters.
//!
//! The potential is a trigonometric polynomial in `theta`,
//!
//! ```text
//! V(theta) = a_0 + sum_{m>=1} a_m cos(m w theta) + sum_{m>=1} b_m sin(m w theta),   w = 2 pi / c,
//! ```
//!
//! stored as `fourier_cos = [a_0, a_1, ...]` and `fourier_sin = [b_1, b_2, ...]`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::boundary::{Bump, Curve, Side, TrigSeries};
use crate::error::{Error, Result};

/// A point of the cylinder, `theta` lifted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub theta: f64,
}

impl Point {
    pub const fn new(x: f64, theta: f64) -> Self {
        Self { x, theta }
    }

    pub fn offset(self, v: Vector, t: f64) -> Self {
        Self::new(self.x + t * v.x, self.theta + t * v.theta)
    }
}

/// A tangent vector in the orthonormal frame `(d/dx, d/dtheta)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vector {
    pub x: f64,
    pub theta: f64,
}

impl Vector {
    pub const fn new(x: f64, theta: f64) -> Self {
        Self { x, theta }
    }

    pub fn dot(self, other: Vector) -> f64 {
        self.x * other.x + self.theta * other.theta
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.theta)
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.x * s, self.theta * s)
    }
}

/// Cross-sectional potential as a real trigonometric polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub fourier_cos: Vec<f64>,
    #[serde(default)]
    pub fourier_sin: Vec<f64>,
}

impl Potential {
    pub fn constant(value: f64) -> Self {
        Self { fourier_cos: vec![value], fourier_sin: Vec::new() }
    }

    /// `V(theta)` on a circle of circumference `c`.
    pub fn value(&self, theta: f64, c: f64) -> f64 {
        let w = 2.0 * PI / c;
        let mut v = self.mean();
        for (m, a) in self.fourier_cos.iter().enumerate().skip(1) {
            v += a * (m as f64 * w * theta).cos();
        }
        for (m, b) in self.fourier_sin.iter().enumerate() {
            v += b * ((m + 1) as f64 * w * theta).sin();
        }
        v
    }

    /// The mean value `a_0`.
    pub fn mean(&self) -> f64 {
        self.fourier_cos.first().copied().unwrap_or(0.0)
    }

    /// Highest harmonic with a nonzero coefficient.
    pub fn degree(&self) -> usize {
        let dc = self.fourier_cos.iter().rposition(|&a| a != 0.0).unwrap_or(0);
        let ds = self.fourier_sin.iter().rposition(|&b| b != 0.0).map_or(0, |i| i + 1);
        dc.max(ds)
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    fn is_zero(&self) -> bool {
        self.fourier_cos.iter().chain(&self.fourier_sin).all(|&a| a == 0.0)
    }

    /// Minimum over the circle, located by dense sampling and golden refinement.
    pub fn minimum(&self, c: f64) -> (f64, f64) {
        let samples = 4096.max(64 * self.degree());
        let h = c / samples as f64;
        let (mut best_t, mut best_v) = (0.0, f64::INFINITY);
        for i in 0..samples {
            let t = i as f64 * h;
            let v = self.value(t, c);
            if v < best_v {
                best_v = v;
                best_t = t;
            }
        }
        let (mut a, mut b) = (best_t - h, best_t + h);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let t1 = b - g * (b - a);
            let t2 = a + g * (b - a);
            if self.value(t1, c) < self.value(t2, c) {
                b = t2;
            } else {
                a = t1;
            }
        }
        let t = 0.5 * (a + b);
        let v = self.value(t, c);
        if v < best_v {
            (v, t)
        } else {
            (best_v, best_t)
        }
    }
}

fn default_circumference() -> f64 {
    2.0 * PI
}

fn default_mode_cutoff() -> usize {
    32
}

/// JSON description of one boundary curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveConfig {
    /// Closed curve `s -> (x(s), theta(s))`, `s` in `[0, 2 pi)`, given by
    /// trigonometric coefficients. `side` is `inside` or `outside`.
    Closed { x: TrigSeries, theta: TrigSeries, side: Side },
    /// Circle of the given radius; shorthand for a closed curve.
    Circle { center_x: f64, center_theta: f64, radius: f64, side: Side },
    /// Graph `theta = level + bump(x)`; `side` is `above` or `below`.
    Graph {
        level: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bump: Option<Bump>,
        side: Side,
    },
}

/// Top-level model configuration, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(default = "default_circumference")]
    pub circumference: f64,
    pub potential: Potential,
    #[serde(default)]
    pub curves: Vec<CurveConfig>,
    #[serde(default = "default_mode_cutoff")]
    pub mode_cutoff: usize,
    /// Radius `R` beyond which potential and curves are independent of `x`.
    pub end_marker: f64,
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Validated cylinder with its potential.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderModel {
    pub circumference: f64,
    pub potential: Potential,
    pub mode_cutoff: usize,
    pub end_marker: f64,
}

impl CylinderModel {
    /// Validates potential and parameters without any boundary.
    pub fn new(circumference: f64, potential: Potential, mode_cutoff: usize, end_marker: f64) -> Result<Self> {
        if !(circumference.is_finite() && circumference > 0.0) {
            return Err(Error::InvalidModel(format!("circumference {circumference} must be positive")));
        }
        if mode_cutoff < 8 {
            return Err(Error::InvalidModel(format!("mode_cutoff {mode_cutoff} below 8")));
        }
        if !(end_marker.is_finite() && end_marker > 0.0) {
            return Err(Error::InvalidModel(format!("end_marker {end_marker} must be positive")));
        }
        if potential.fourier_cos.iter().chain(&potential.fourier_sin).any(|a| !a.is_finite()) {
            return Err(Error::InvalidModel("non-finite potential coefficient".into()));
        }
        if potential.is_zero() {
            return Err(Error::ZeroPotential);
        }
        let (min, theta) = potential.minimum(circumference);
        let scale = potential.fourier_cos.iter().chain(&potential.fourier_sin).map(|a| a.abs()).sum::<f64>();
        if min < -1e-12 * scale {
            return Err(Error::NegativePotential { min, theta });
        }
        Ok(Self { circumference, potential, mode_cutoff, end_marker })
    }

    pub fn potential_at(&self, theta: f64) -> f64 {
        self.potential.value(theta, self.circumference)
    }

    /// `2 pi / c`.
    pub fn frequency(&self) -> f64 {
        2.0 * PI / self.circumference
    }

    /// Reduces an angle difference into `(-c/2, c/2]`.
    pub fn reduce_angle(&self, d: f64) -> f64 {
        reduce_periodic(d, self.circumference)
    }

    /// Geodesic distance on the cylinder.
    pub fn distance(&self, p: Point, q: Point) -> f64 {
        (p.x - q.x).hypot(self.reduce_angle(p.theta - q.theta))
    }
}

/// Reduces `d` into `(-c/2, c/2]`.
pub fn reduce_periodic(d: f64, c: f64) -> f64 {
    let mut r = d - c * (d / c).round();
    if r <= -0.5 * c {
        r += c;
    } else if r > 0.5 * c {
        r -= c;
    }
    r
}

/// Region `N` of the cylinder: the intersection of the sides of its curves.
#[derive(Debug, Clone)]
pub struct RegionSpec {
    pub curves: Vec<Curve>,
}

impl RegionSpec {
    /// Whether `p` lies in the open region (membership with respect to every curve).
    pub fn contains(&self, model: &CylinderModel, p: Point) -> bool {
        self.curves.iter().all(|c| c.on_region_side(model.circumference, p))
    }

    /// Cylinder distance from `p` to the union of curves, by dense sampling
    /// followed by local refinement.
    pub fn distance_to_boundary(&self, model: &CylinderModel, p: Point) -> f64 {
        self.curves
            .iter()
            .map(|c| c.distance_to(model.circumference, p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest `x`-extent of any non-straight piece of the boundary.
    pub fn straightness_radius(&self) -> f64 {
        self.curves.iter().map(|c| c.straightness_radius()).fold(0.0, f64::max)
    }
}

/// Builds and validates a model and its region from a configuration.
pub fn build_model(cfg: &ModelConfig) -> Result<(CylinderModel, RegionSpec)> {
    let model = CylinderModel::new(cfg.circumference, cfg.potential.clone(), cfg.mode_cutoff, cfg.end_marker)?;
    let mut curves = Vec::with_capacity(cfg.curves.len());
    for spec in &cfg.curves {
        curves.push(Curve::from_config(spec)?);
    }
    let region = RegionSpec { curves };
    validate_region(&model, &region)?;
    Ok((model, region))
}

/// Checks the geometric hypotheses on a region: regular curves inside the
/// compact piece, pairwise disjoint curves and a potential that does not
/// vanish identically on the complement of the region.
pub fn validate_region(model: &CylinderModel, region: &RegionSpec) -> Result<()> {
    let c = model.circumference;
    let r = model.end_marker;
    for curve in &region.curves {
        curve.check_regular()?;
        let reach = curve.x_extent();
        if curve.is_closed() {
            if reach.0 <= -r || reach.1 >= r {
                return Err(Error::InvalidModel(format!(
                    "closed curve reaches x in [{:.3}, {:.3}] outside the compact piece |x| < {r}",
                    reach.0, reach.1
                )));
            }
        } else if curve.straightness_radius() > r {
            return Err(Error::InvalidModel(format!(
                "graph curve bends beyond the end marker {r}"
            )));
        }
    }
    let samples: Vec<Vec<Point>> = region.curves.iter().map(|cv| cv.sample_points(r + 1.0, 512)).collect();
    for a in 0..samples.len() {
        for b in (a + 1)..samples.len() {
            let distance = polyline_separation(&samples[a], &samples[b], region.curves[a].is_closed(), region.curves[b].is_closed(), c);
            let both_graphs = !region.curves[a].is_closed() && !region.curves[b].is_closed();
            let distance = if both_graphs {
                distance.min(reduce_periodic(region.curves[a].asymptote() - region.curves[b].asymptote(), c).abs())
            } else {
                distance
            };
            if distance < 1e-6 {
                return Err(Error::CurveIntersection { a, b, distance });
            }
        }
    }
    // the potential must be positive somewhere off the closure of N
    let vmax = model.potential.fourier_cos.iter().chain(&model.potential.fourier_sin).map(|a| a.abs()).sum::<f64>();
    let n_theta = 256;
    let n_x = 64;
    let mut found = false;
    'outer: for i in 0..n_theta {
        let theta = c * (i as f64 + 0.5) / n_theta as f64;
        if model.potential_at(theta) <= 1e-8 * vmax {
            continue;
        }
        for j in 0..=n_x {
            let x = -(r + 1.0) + 2.0 * (r + 1.0) * j as f64 / n_x as f64;
            let p = Point::new(x, theta);
            if !region.contains(model, p) && region.distance_to_boundary(model, p) > 1e-3 {
                found = true;
                break 'outer;
            }
        }
    }
    if !found && !region.curves.is_empty() {
        return Err(Error::ComplementPotentialVanishes);
    }
    Ok(())
}

/// Smallest separation between two sampled polylines; zero if they cross.
fn polyline_separation(a: &[Point], b: &[Point], a_closed: bool, b_closed: bool, c: f64) -> f64 {
    let segs = |p: &[Point], closed: bool| -> Vec<(Point, Point)> {
        let n = p.len();
        let m = if closed { n } else { n - 1 };
        (0..m).map(|i| (p[i], p[(i + 1) % n])).collect()
    };
    let sa = segs(a, a_closed);
    let sb = segs(b, b_closed);
    let mut best = f64::INFINITY;
    for &(p0, p1) in &sa {
        for &(q0, q1) in &sb {
            // shift the second segment to the image nearest the first
            let shift = reduce_periodic(q0.theta - p0.theta, c) - (q0.theta - p0.theta);
            let q0 = Point::new(q0.x, q0.theta + shift);
            let q1 = Point::new(q1.x, q1.theta + shift);
            best = best.min(segment_distance(p0, p1, q0, q1));
            if best == 0.0 {
                return 0.0;
            }
        }
    }
    best
}

fn segment_distance(p0: Point, p1: Point, q0: Point, q1: Point) -> f64 {
    let cross = |o: Point, a: Point, b: Point| (a.x - o.x) * (b.theta - o.theta) - (a.theta - o.theta) * (b.x - o.x);
    let d1 = cross(p0, p1, q0);
    let d2 = cross(p0, p1, q1);
    let d3 = cross(q0, q1, p0);
    let d4 = cross(q0, q1, p1);
    if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
        return 0.0;
    }
    let point_seg = |p: Point, a: Point, b: Point| {
        let (vx, vt) = (b.x - a.x, b.theta - a.theta);
        let len2 = vx * vx + vt * vt;
        let t = if len2 > 0.0 { (((p.x - a.x) * vx + (p.theta - a.theta) * vt) / len2).clamp(0.0, 1.0) } else { 0.0 };
        (p.x - a.x - t * vx).hypot(p.theta - a.theta - t * vt)
    };
    point_seg(p0, q0, q1).min(point_seg(p1, q0, q1)).min(point_seg(q0, p0, p1)).min(point_seg(q1, p0, p1))
}

/// Builds a circle curve configuration; convenience for tests and examples.
pub fn circle(center: Point, radius: f64, side: Side) -> CurveConfig {
    CurveConfig::Circle { center_x: center.x, center_theta: center.theta, radius, side }
}

/// Builds a graph curve configuration.
pub fn graph(level: f64, bump: Option<Bump>, side: Side) -> CurveConfig {
    CurveConfig::Graph { level, bump, side }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(curves: Vec<CurveConfig>, potential: Potential) -> ModelConfig {
        ModelConfig { circumference: 2.0 * PI, potential, curves, mode_cutoff: 32, end_marker: 2.0 }
    }

    #[test]
    fn strip_model_builds() {
        let cfg = base(
            vec![graph(0.0, None, Side::Above), graph(PI, None, Side::Below)],
            Potential::constant(1.0),
        );
        let (model, region) = build_model(&cfg).unwrap();
        assert!(region.contains(&model, Point::new(3.0, 1.0)));
        assert!(!region.contains(&model, Point::new(3.0, 4.0)));
        assert!(!region.contains(&model, Point::new(3.0, -0.5)));
    }

    #[test]
    fn circle_model_builds() {
        let cfg = base(
            vec![circle(Point::new(0.0, PI), 0.5, Side::Inside)],
            Potential { fourier_cos: vec![1.0, 1.0], fourier_sin: vec![] },
        );
        let (model, region) = build_model(&cfg).unwrap();
        assert!(region.contains(&model, Point::new(0.1, PI + 0.2)));
        assert!(region.contains(&model, Point::new(0.1, PI + 0.2 - 2.0 * PI)));
        assert!(!region.contains(&model, Point::new(0.6, PI)));
    }

    #[test]
    fn rejects_bad_potentials() {
        let cfg = base(vec![], Potential { fourier_cos: vec![0.0, 0.0], fourier_sin: vec![] });
        assert!(matches!(build_model(&cfg), Err(Error::ZeroPotential)));
        let cfg = base(vec![], Potential { fourier_cos: vec![0.5, 1.0], fourier_sin: vec![] });
        assert!(matches!(build_model(&cfg), Err(Error::NegativePotential { .. })));
    }

    #[test]
    fn rejects_intersecting_curves() {
        let cfg = base(
            vec![
                circle(Point::new(0.0, PI), 0.5, Side::Inside),
                circle(Point::new(0.6, PI), 0.5, Side::Outside),
            ],
            Potential::constant(1.0),
        );
        assert!(matches!(build_model(&cfg), Err(Error::CurveIntersection { .. })));
    }

    #[test]
    fn reduce_periodic_range() {
        let c = 2.0 * PI;
        for &d in &[0.0, 1.0, -1.0, PI, -PI, 7.0, -7.0, 100.0] {
            let r = reduce_periodic(d, c);
            assert!(r > -PI - 1e-15 && r <= PI + 1e-15);
            assert!(((d - r) / c - ((d - r) / c).round()).abs() < 1e-12);
        }
    }
}
