//! Boundary curves and their quadrature discretizations.
//!
//! Two curve families are supported. Closed curves are trigonometric
//! polynomials `s -> (x(s), theta(s))` on `[0, 2 pi)` and are discretized by
//! the trapezoid rule. Graph curves `theta = level + bump(x)` are straight
//! outside a compact interval; they are truncated to `[-L, L]` and covered by
//! Gauss-Legendre panels, with a few graded tail panels beyond `L` on which
//! densities are frozen to their asymptotic values.
//!
//! The unit normal `nu` always points out of the region `N`. Offsetting a
//! curve by `t > 0` moves it into `N`.

use std::f64::consts::PI;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{reduce_periodic, CurveConfig, CylinderModel, Point, RegionSpec, Vector};
use crate::quadrature::gauss_legendre;

/// Which side of a curve belongs to the region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Bounded component enclosed by a closed curve.
    Inside,
    /// Unbounded component outside a closed curve.
    Outside,
    /// Larger `theta` for a graph curve.
    Above,
    /// Smaller `theta` for a graph curve.
    Below,
}

/// Real trigonometric series `sum_k cos[k] cos(k s) + sum_k sin[k] sin((k+1) s)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrigSeries {
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl TrigSeries {
    /// Value and first two derivatives at `s`.
    pub fn eval(&self, s: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (k, a) in self.cos.iter().enumerate() {
            let kf = k as f64;
            let (sn, cs) = (kf * s).sin_cos();
            out[0] += a * cs;
            out[1] -= a * kf * sn;
            out[2] -= a * kf * kf * cs;
        }
        for (i, b) in self.sin.iter().enumerate() {
            let kf = (i + 1) as f64;
            let (sn, cs) = (kf * s).sin_cos();
            out[0] += b * sn;
            out[1] += b * kf * cs;
            out[2] -= b * kf * kf * sn;
        }
        out
    }

    /// `value(s) - value(t)` without cancellation for nearby arguments.
    pub fn difference(&self, s: f64, t: f64) -> f64 {
        let half_sum = 0.5 * (s + t);
        let half_diff = 0.5 * (s - t);
        let mut d = 0.0;
        for (k, a) in self.cos.iter().enumerate().skip(1) {
            let kf = k as f64;
            d -= 2.0 * a * (kf * half_sum).sin() * (kf * half_diff).sin();
        }
        for (i, b) in self.sin.iter().enumerate() {
            let kf = (i + 1) as f64;
            d += 2.0 * b * (kf * half_sum).cos() * (kf * half_diff).sin();
        }
        d
    }
}

/// Smooth compactly supported bump `amplitude * exp(1 - 1/(1 - u^2))`,
/// `u = (x - center)/width`, added to the level of a graph curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
}

impl Bump {
    /// Value and first two derivatives at `x`.
    pub fn eval(&self, x: f64) -> [f64; 3] {
        let u = (x - self.center) / self.width;
        if u.abs() >= 1.0 {
            return [0.0; 3];
        }
        let q = 1.0 / (1.0 - u * u);
        let b = (1.0 - q).exp();
        let d1 = -2.0 * u * q * q * b;
        let d2 = b * (4.0 * u * u * q.powi(4) - 2.0 * q * q - 8.0 * u * u * q.powi(3));
        let w = self.width;
        [self.amplitude * b, self.amplitude * d1 / w, self.amplitude * d2 / (w * w)]
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Closed { x: TrigSeries, theta: TrigSeries },
    Graph { level: f64, bump: Option<Bump> },
}

/// A boundary curve with the side of the region it bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    shape: Shape,
    side: Side,
    /// Distance by which the curve is displaced into the region.
    offset: f64,
    /// `nu = sigma (theta', -x') / |gamma'|`.
    sigma: f64,
}

impl Curve {
    /// Closed trigonometric curve.
    pub fn closed(x: TrigSeries, theta: TrigSeries, side: Side) -> Result<Self> {
        if !matches!(side, Side::Inside | Side::Outside) {
            return Err(Error::InvalidModel("closed curve side must be inside or outside".into()));
        }
        let mut curve = Curve { shape: Shape::Closed { x, theta }, side, offset: 0.0, sigma: 1.0 };
        curve.check_regular()?;
        let orientation = curve.signed_area().signum();
        curve.sigma = if side == Side::Inside { orientation } else { -orientation };
        Ok(curve)
    }

    /// Circle `(x0 + r cos s, theta0 + r sin s)`.
    pub fn circle(center: Point, radius: f64, side: Side) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidModel(format!("circle radius {radius} must be positive")));
        }
        Self::closed(
            TrigSeries { cos: vec![center.x, radius], sin: vec![] },
            TrigSeries { cos: vec![center.theta], sin: vec![radius] },
            side,
        )
    }

    /// Graph curve `theta = level + bump(x)`.
    pub fn graph(level: f64, bump: Option<Bump>, side: Side) -> Result<Self> {
        let sigma = match side {
            Side::Above => 1.0,
            Side::Below => -1.0,
            _ => return Err(Error::InvalidModel("graph curve side must be above or below".into())),
        };
        if let Some(b) = bump {
            if !(b.width > 0.0 && b.width.is_finite() && b.amplitude.is_finite() && b.center.is_finite()) {
                return Err(Error::InvalidModel("bump needs positive width and finite parameters".into()));
            }
        }
        Ok(Curve { shape: Shape::Graph { level, bump }, side, offset: 0.0, sigma })
    }

    pub fn from_config(cfg: &CurveConfig) -> Result<Self> {
        match cfg {
            CurveConfig::Closed { x, theta, side } => Self::closed(x.clone(), theta.clone(), *side),
            CurveConfig::Circle { center_x, center_theta, radius, side } => {
                Self::circle(Point::new(*center_x, *center_theta), *radius, *side)
            }
            CurveConfig::Graph { level, bump, side } => Self::graph(*level, *bump, *side),
        }
    }

    pub fn is_closed(&self) -> bool {
        matches!(self.shape, Shape::Closed { .. })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Asymptotic angle of a graph curve (mean angle for a closed curve).
    pub fn asymptote(&self) -> f64 {
        match &self.shape {
            Shape::Graph { level, .. } => level + self.offset * self.sigma,
            Shape::Closed { theta, .. } => theta.cos.first().copied().unwrap_or(0.0),
        }
    }

    /// Base curve position, first and second derivative at parameter `s`.
    fn base(&self, s: f64) -> ([f64; 2], [f64; 2], [f64; 2]) {
        match &self.shape {
            Shape::Closed { x, theta } => {
                let a = x.eval(s);
                let b = theta.eval(s);
                ([a[0], b[0]], [a[1], b[1]], [a[2], b[2]])
            }
            Shape::Graph { level, bump } => {
                let f = bump.map_or([0.0; 3], |b| b.eval(s));
                ([s, level + f[0]], [1.0, f[1]], [0.0, f[2]])
            }
        }
    }

    /// Unit normal pointing out of the region, and its parameter derivative.
    fn normal_and_derivative(&self, s: f64) -> (Vector, Vector) {
        let (_, d1, d2) = self.base(s);
        let sp = d1[0].hypot(d1[1]);
        let n = [d1[1] / sp, -d1[0] / sp];
        let dot = (d1[0] * d2[0] + d1[1] * d2[1]) / (sp * sp);
        let dn = [d2[1] / sp - n[0] * dot, -d2[0] / sp - n[1] * dot];
        (
            Vector::new(self.sigma * n[0], self.sigma * n[1]),
            Vector::new(self.sigma * dn[0], self.sigma * dn[1]),
        )
    }

    /// Outward (from `N`) unit normal at parameter `s`.
    pub fn normal(&self, s: f64) -> Vector {
        self.normal_and_derivative(s).0
    }

    /// Position at parameter `s`.
    pub fn point(&self, s: f64) -> Point {
        let (p, _, _) = self.base(s);
        if self.offset == 0.0 {
            return Point::new(p[0], p[1]);
        }
        let n = self.normal(s);
        Point::new(p[0] - self.offset * n.x, p[1] - self.offset * n.theta)
    }

    /// Parameter derivative of the position.
    pub fn derivative(&self, s: f64) -> Vector {
        let (_, d1, _) = self.base(s);
        if self.offset == 0.0 {
            return Vector::new(d1[0], d1[1]);
        }
        let (_, dn) = self.normal_and_derivative(s);
        Vector::new(d1[0] - self.offset * dn.x, d1[1] - self.offset * dn.theta)
    }

    pub fn speed(&self, s: f64) -> f64 {
        self.derivative(s).norm()
    }

    /// Unit tangent in the direction of increasing parameter.
    pub fn tangent(&self, s: f64) -> Vector {
        let d = self.derivative(s);
        d.scale(1.0 / d.norm())
    }

    /// Lifted chord `point(s) - point(t)`, accurate for nearby parameters.
    pub fn chord(&self, s: f64, t: f64) -> Vector {
        let mut v = match &self.shape {
            Shape::Closed { x, theta } => Vector::new(x.difference(s, t), theta.difference(s, t)),
            Shape::Graph { bump, .. } => {
                let df = bump.map_or(0.0, |b| b.eval(s)[0] - b.eval(t)[0]);
                Vector::new(s - t, df)
            }
        };
        if self.offset != 0.0 {
            let (ns, nt) = (self.normal(s), self.normal(t));
            v.x -= self.offset * (ns.x - nt.x);
            v.theta -= self.offset * (ns.theta - nt.theta);
        }
        v
    }

    /// Signed curvature of the base curve at `s`.
    pub fn curvature(&self, s: f64) -> f64 {
        let (_, d1, d2) = self.base(s);
        (d1[0] * d2[1] - d1[1] * d2[0]) / d1[0].hypot(d1[1]).powi(3)
    }

    fn sample_params(&self, reach: f64, n: usize) -> Vec<f64> {
        match self.shape {
            Shape::Closed { .. } => (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect(),
            Shape::Graph { .. } => (0..=n).map(|i| -reach + 2.0 * reach * i as f64 / n as f64).collect(),
        }
    }

    /// Points sampled along the curve; graph curves over `[-reach, reach]`.
    pub fn sample_points(&self, reach: f64, n: usize) -> Vec<Point> {
        self.sample_params(reach, n).into_iter().map(|s| self.point(s)).collect()
    }

    /// Largest curvature magnitude of the base curve.
    pub fn max_curvature(&self) -> f64 {
        let reach = self.straightness_radius().max(1.0);
        self.sample_params(reach, 4096).into_iter().map(|s| self.curvature(s).abs()).fold(0.0, f64::max)
    }

    /// Minimal and maximal `x` reached by the curve (graph curves: unbounded).
    pub fn x_extent(&self) -> (f64, f64) {
        match self.shape {
            Shape::Closed { .. } => self
                .sample_points(0.0, 2048)
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.x), hi.max(p.x))),
            Shape::Graph { .. } => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Radius beyond which a graph curve is a straight line `theta = const`.
    /// For closed curves the largest `|x|` reached.
    pub fn straightness_radius(&self) -> f64 {
        match &self.shape {
            Shape::Graph { bump, .. } => bump.map_or(0.0, |b| b.center.abs() + b.width),
            Shape::Closed { .. } => {
                let (lo, hi) = self.x_extent();
                lo.abs().max(hi.abs())
            }
        }
    }

    /// Fails with `IrregularCurve` if the parameterization degenerates.
    pub fn check_regular(&self) -> Result<()> {
        let reach = self.straightness_radius().max(1.0);
        let min_speed = self.sample_params(reach, 2048).into_iter().map(|s| self.speed(s)).fold(f64::INFINITY, f64::min);
        if !(min_speed > 1e-8) {
            return Err(Error::IrregularCurve { min_speed });
        }
        Ok(())
    }

    fn signed_area(&self) -> f64 {
        let n = 2048;
        let h = 2.0 * PI / n as f64;
        (0..n)
            .map(|i| {
                let s = i as f64 * h;
                let p = self.point(s);
                let d = self.derivative(s);
                0.5 * (p.x * d.theta - p.theta * d.x) * h
            })
            .sum()
    }

    /// Whether `p` lies strictly on the region side of this curve.
    pub fn on_region_side(&self, c: f64, p: Point) -> bool {
        match &self.shape {
            Shape::Closed { theta, .. } => {
                let center = theta.cos.first().copied().unwrap_or(0.0);
                let pt = center + reduce_periodic(p.theta - center, c);
                let inside = winding_number(&self.sample_points(0.0, 1024), Point::new(p.x, pt)) != 0;
                if self.side == Side::Inside {
                    inside
                } else {
                    !inside
                }
            }
            Shape::Graph { .. } => {
                let q = self.point(p.x);
                let d = reduce_periodic(p.theta - q.theta, c);
                if self.side == Side::Above {
                    d > 0.0
                } else {
                    d < 0.0
                }
            }
        }
    }

    /// Cylinder distance from `p` to the curve, with the nearest parameter.
    pub fn nearest(&self, c: f64, p: Point) -> (f64, f64) {
        let dist_at = |s: f64| {
            let q = self.point(s);
            (p.x - q.x).hypot(reduce_periodic(p.theta - q.theta, c))
        };
        let (params, h) = match self.shape {
            Shape::Closed { .. } => {
                let n = 1024;
                (self.sample_params(0.0, n), 2.0 * PI / n as f64)
            }
            Shape::Graph { .. } => {
                let n = 1200;
                let reach = 6.0;
                let ps: Vec<f64> = (0..=n).map(|i| p.x - reach + 2.0 * reach * i as f64 / n as f64).collect();
                (ps, 2.0 * reach / n as f64)
            }
        };
        let mut best = (f64::INFINITY, 0.0);
        for &s in &params {
            let d = dist_at(s);
            if d < best.0 {
                best = (d, s);
            }
        }
        let (mut a, mut b) = (best.1 - h, best.1 + h);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..90 {
            let t1 = b - g * (b - a);
            let t2 = a + g * (b - a);
            if dist_at(t1) < dist_at(t2) {
                b = t2;
            } else {
                a = t1;
            }
        }
        let s = 0.5 * (a + b);
        let d = dist_at(s);
        if d < best.0 {
            (d, s)
        } else {
            best
        }
    }

    pub fn distance_to(&self, c: f64, p: Point) -> f64 {
        self.nearest(c, p).0
    }

    /// Largest admissible offset magnitude: `min(0.25, 1 / (2 max curvature))`.
    pub fn max_offset(&self) -> f64 {
        let k = self.max_curvature();
        if k > 0.0 {
            (0.5 / k).min(0.25)
        } else {
            0.25
        }
    }
}

fn winding_number(poly: &[Point], p: Point) -> i32 {
    let mut wn = 0;
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let cross = (b.x - a.x) * (p.theta - a.theta) - (p.x - a.x) * (b.theta - a.theta);
        if a.theta <= p.theta {
            if b.theta > p.theta && cross > 0.0 {
                wn += 1;
            }
        } else if b.theta <= p.theta && cross < 0.0 {
            wn -= 1;
        }
    }
    wn
}

/// Parallel curve displaced by `t` along `-nu` (into the region for `t > 0`).
pub fn offset_curve(curve: &Curve, t: f64) -> Result<Curve> {
    let eps_max = curve.max_offset();
    let total = curve.offset + t;
    if !(total.abs() < eps_max) {
        return Err(Error::OffsetTooLarge { t, eps_max });
    }
    let mut out = curve.clone();
    out.offset = total;
    if !out.is_closed() {
        let reach = out.straightness_radius() + 1.0;
        let monotone = out.sample_params(reach, 4096).into_iter().all(|s| out.derivative(s).x > 0.0);
        if !monotone {
            return Err(Error::OffsetTooLarge { t, eps_max });
        }
    }
    Ok(out)
}

/// Discretization parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    /// Trapezoid nodes on each closed curve (even).
    pub nodes: usize,
    /// Nominal panel length on graph curves.
    pub panel_length: f64,
    /// Gauss-Legendre order per panel.
    pub panel_order: usize,
    /// Truncation half-length `L` for graph curves.
    pub half_length: f64,
}

impl Default for Resolution {
    fn default() -> Self {
        Self { nodes: 256, panel_length: 0.5, panel_order: 10, half_length: 20.0 }
    }
}

/// One quadrature node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub point: Point,
    pub normal: Vector,
    pub tangent: Vector,
    /// Quadrature weight with respect to arclength.
    pub weight: f64,
    pub param: f64,
    pub speed: f64,
    pub segment: usize,
}

/// Gauss-Legendre panel `[a, b]` in parameter space; its nodes are
/// `start..start + order` of the owning node list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
    pub start: usize,
}

/// Which end of a truncated graph curve a tail belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    Left,
    Right,
}

/// Frozen-density tail beyond the truncation of a graph curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Tail {
    pub end: End,
    pub panels: Vec<Panel>,
    /// Range in `BoundaryDiscretization::tail_nodes`.
    pub range: Range<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    Periodic { n: usize },
    Panels { panels: Vec<Panel>, order: usize, half_length: f64, tails: Vec<Tail>, tail_bound: f64 },
}

/// The discretization of one curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub curve: Curve,
    pub range: Range<usize>,
    pub layout: Layout,
}

/// Nodes and weights for all curves of a region.
#[derive(Debug, Clone)]
pub struct BoundaryDiscretization {
    pub circumference: f64,
    pub nodes: Vec<Node>,
    pub tail_nodes: Vec<Node>,
    pub segments: Vec<Segment>,
    /// Gauss-Legendre reference nodes on `[-1, 1]` used by all panels.
    pub reference_nodes: Vec<f64>,
    pub reference_weights: Vec<f64>,
}

impl BoundaryDiscretization {
    /// Discretizes every curve of a region. `mu0` is the cross-section ground
    /// state, which controls truncation and tail lengths.
    pub fn new(model: &CylinderModel, region: &RegionSpec, res: &Resolution, mu0: f64) -> Result<Self> {
        Self::from_curves(model.circumference, &region.curves, res, mu0)
    }

    pub fn from_curves(circumference: f64, curves: &[Curve], res: &Resolution, mu0: f64) -> Result<Self> {
        if res.panel_order < 2 {
            return Err(Error::InvalidInput("panel order must be at least 2".into()));
        }
        let (gx, gw) = gauss_legendre(res.panel_order);
        let mut disc = BoundaryDiscretization {
            circumference,
            nodes: Vec::new(),
            tail_nodes: Vec::new(),
            segments: Vec::new(),
            reference_nodes: gx,
            reference_weights: gw,
        };
        for curve in curves {
            disc.push_curve(curve, res, mu0)?;
        }
        Ok(disc)
    }

    fn make_node(curve: &Curve, s: f64, weight_param: f64, segment: usize) -> Node {
        let d = curve.derivative(s);
        let speed = d.norm();
        Node {
            point: curve.point(s),
            normal: curve.normal(s),
            tangent: d.scale(1.0 / speed),
            weight: weight_param * speed,
            param: s,
            speed,
            segment,
        }
    }

    fn push_curve(&mut self, curve: &Curve, res: &Resolution, mu0: f64) -> Result<()> {
        curve.check_regular()?;
        let seg_index = self.segments.len();
        let start = self.nodes.len();
        if curve.is_closed() {
            let n = res.nodes;
            if n < 8 || n % 2 != 0 {
                return Err(Error::InvalidInput(format!("closed curves need an even node count >= 8, got {n}")));
            }
            let h = 2.0 * PI / n as f64;
            for j in 0..n {
                self.nodes.push(Self::make_node(curve, j as f64 * h, h, seg_index));
            }
            self.segments.push(Segment { curve: curve.clone(), range: start..self.nodes.len(), layout: Layout::Periodic { n } });
            return Ok(());
        }
        if !(mu0 > 0.0) {
            return Err(Error::NonPositiveGroundState { mu0 });
        }
        let decay = mu0.sqrt();
        let r = curve.straightness_radius();
        let l = res.half_length;
        let required = r + 5.0 / decay;
        if !(l >= required) {
            return Err(Error::TruncationTooShort { half_length: l, required });
        }
        let order = res.panel_order;
        let count = ((2.0 * l / res.panel_length).ceil() as usize).max(1);
        let hp = 2.0 * l / count as f64;
        let mut panels = Vec::with_capacity(count);
        for k in 0..count {
            let a = -l + k as f64 * hp;
            let b = if k + 1 == count { l } else { a + hp };
            panels.push(self.push_panel(curve, a, b, seg_index, false));
        }
        let range = start..self.nodes.len();
        let extent = 40.0 / decay;
        let mut tails = Vec::new();
        for end in [End::Left, End::Right] {
            let tstart = self.tail_nodes.len();
            let mut tpanels = Vec::new();
            let mut covered = 0.0;
            let mut size = hp;
            let mut k = 0;
            while covered < extent - 1e-12 {
                let len = size.min(extent - covered);
                let (a, b) = match end {
                    End::Right => (l + covered, l + covered + len),
                    End::Left => (-l - covered - len, -l - covered),
                };
                tpanels.push(self.push_panel(curve, a, b, seg_index, true));
                covered += len;
                k += 1;
                if k >= 2 {
                    size *= 2.0;
                }
            }
            tails.push(Tail { end, panels: tpanels, range: tstart..self.tail_nodes.len() });
        }
        let tail_bound = (-decay * (l - r)).exp();
        self.segments.push(Segment {
            curve: curve.clone(),
            range,
            layout: Layout::Panels { panels, order, half_length: l, tails, tail_bound },
        });
        Ok(())
    }

    fn push_panel(&mut self, curve: &Curve, a: f64, b: f64, segment: usize, tail: bool) -> Panel {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let list_len = if tail { self.tail_nodes.len() } else { self.nodes.len() };
        for (t, w) in self.reference_nodes.iter().zip(&self.reference_weights) {
            let node = Self::make_node(curve, mid + half * t, half * w, segment);
            if tail {
                self.tail_nodes.push(node);
            } else {
                self.nodes.push(node);
            }
        }
        Panel { a, b, start: list_len }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.weight).collect()
    }

    /// Total quadrature length of the discretized curves (tails excluded).
    pub fn length(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }

    /// Characteristic spacing of the nodes near node `i`.
    pub fn spacing(&self, i: usize) -> f64 {
        let node = &self.nodes[i];
        match &self.segments[node.segment].layout {
            Layout::Periodic { n } => node.speed * 2.0 * PI / *n as f64,
            Layout::Panels { panels, order, .. } => {
                let hp = panels.first().map_or(1.0, |p| p.b - p.a);
                node.speed * hp / *order as f64
            }
        }
    }

    /// Largest node spacing over all nodes.
    pub fn max_spacing(&self) -> f64 {
        (0..self.len()).map(|i| self.spacing(i)).fold(0.0, f64::max)
    }

    /// Index of the node nearest to `p` and its cylinder distance.
    pub fn nearest_node(&self, p: Point) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, n) in self.nodes.iter().enumerate() {
            let d = (p.x - n.point.x).hypot(reduce_periodic(p.theta - n.point.theta, self.circumference));
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    /// CSV export with header `x,theta,weight,nu_x,nu_theta`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,theta,weight,nu_x,nu_theta\n");
        for n in &self.nodes {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                n.point.x, n.point.theta, n.weight, n.normal.x, n.normal.theta
            ));
        }
        s
    }
}

/// Discretizes a single curve.
pub fn discretize(curve: &Curve, circumference: f64, res: &Resolution, mu0: f64) -> Result<BoundaryDiscretization> {
    BoundaryDiscretization::from_curves(circumference, std::slice::from_ref(curve), res, mu0)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_PI: f64 = 2.0 * PI;

    #[test]
    fn circle_length_and_normals() {
        let c = Curve::circle(Point::new(0.0, PI), 0.5, Side::Inside).unwrap();
        let d = discretize(&c, TWO_PI, &Resolution { nodes: 64, ..Default::default() }, 1.0).unwrap();
        assert!((d.length() - PI).abs() < 1e-13);
        for n in &d.nodes {
            let radial = Vector::new(n.point.x, n.point.theta - PI).scale(2.0);
            assert!((n.normal.dot(radial) - 1.0).abs() < 1e-13, "outward normal");
            assert!(n.normal.dot(n.tangent).abs() < 1e-14);
        }
        let outside = Curve::circle(Point::new(0.0, PI), 0.5, Side::Outside).unwrap();
        assert!((outside.normal(0.3).x + c.normal(0.3).x).abs() < 1e-15);
    }

    #[test]
    fn offset_circle_lengths() {
        let c = Curve::circle(Point::new(0.0, PI), 0.5, Side::Inside).unwrap();
        let o = offset_curve(&c, -0.1).unwrap();
        let d = discretize(&o, TWO_PI, &Resolution { nodes: 64, ..Default::default() }, 1.0).unwrap();
        assert!((d.length() - 1.2 * PI).abs() < 1e-12);
        assert!(matches!(offset_curve(&c, 0.3), Err(Error::OffsetTooLarge { .. })));
    }

    #[test]
    fn strip_lines_normals_and_truncation() {
        let lo = Curve::graph(0.0, None, Side::Above).unwrap();
        let hi = Curve::graph(PI, None, Side::Below).unwrap();
        assert_eq!(lo.normal(3.0), Vector::new(0.0, -1.0));
        assert_eq!(hi.normal(3.0), Vector::new(-0.0, 1.0));
        let res = Resolution { half_length: 10.0, ..Default::default() };
        let d = BoundaryDiscretization::from_curves(TWO_PI, &[lo.clone(), hi], &res, 1.0).unwrap();
        assert_eq!(d.len(), 2 * 40 * 10);
        assert!((d.length() - 40.0).abs() < 1e-12);
        let short = Resolution { half_length: 4.0, ..Default::default() };
        assert!(matches!(discretize(&lo, TWO_PI, &short, 1.0), Err(Error::TruncationTooShort { .. })));
    }

    #[test]
    fn chord_matches_difference_of_points() {
        let c = Curve::closed(
            TrigSeries { cos: vec![0.1, 0.5, 0.05], sin: vec![0.0, 0.02] },
            TrigSeries { cos: vec![2.0, 0.0, 0.03], sin: vec![0.4] },
            Side::Inside,
        )
        .unwrap();
        for &(s, t) in &[(0.3, 1.7), (2.0, 2.0 + 1e-6), (5.0, 0.1)] {
            let ch = c.chord(s, t);
            let (p, q) = (c.point(s), c.point(t));
            assert!((ch.x - (p.x - q.x)).abs() < 1e-14);
            assert!((ch.theta - (p.theta - q.theta)).abs() < 1e-14);
        }
    }

    #[test]
    fn bump_derivatives_consistent() {
        let b = Bump { center: 0.3, width: 1.2, amplitude: 0.4 };
        let h = 1e-5;
        for &x in &[-0.5, 0.0, 0.31, 1.1] {
            let [_, d1, d2] = b.eval(x);
            let fd1 = (b.eval(x + h)[0] - b.eval(x - h)[0]) / (2.0 * h);
            let fd2 = (b.eval(x + h)[1] - b.eval(x - h)[1]) / (2.0 * h);
            assert!((d1 - fd1).abs() < 1e-8);
            assert!((d2 - fd2).abs() < 1e-7);
        }
    }

    #[test]
    fn nearest_point_on_circle() {
        let c = Curve::circle(Point::new(0.0, PI), 0.5, Side::Inside).unwrap();
        let (d, _) = c.nearest(TWO_PI, Point::new(0.0, PI + 0.3));
        assert!((d - 0.2).abs() < 1e-12);
        let (d, _) = c.nearest(TWO_PI, Point::new(0.0, PI + 0.7 - TWO_PI));
        assert!((d - 0.2).abs() < 1e-12);
    }
}
