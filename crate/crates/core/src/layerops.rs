//! Single and double layer operators of `Delta + V` on a discretized boundary.
//!
//! Nystrom matrices act on density values at the boundary nodes:
//!
//! ```text
//! S[i][j]  = E(p_i, q_j) w_j
//! K[i][j]  = d_{nu_q} E(p_i, q_j) w_j
//! K*[i][j] = K[j][i] w_j / w_i
//! ```
//!
//! Near the diagonal the kernels are split as `A log r + B` with
//!
//! ```text
//! A_S  = -(1/2pi) I0(lambda r)
//! A_K  =  (1/2pi) lambda I1(lambda r) ((p - q).nu_q) / r
//! A_K* =  (1/2pi) lambda I1(lambda r) ((q - p).nu_p) / r
//! ```
//!
//! and `lambda = sqrt(mean V)`. Closed curves integrate the logarithm with
//! Kress weights; graph-curve panels use product-integration weights on the
//! panel of the target and its neighbours. Diagonal values of `B` come from
//! the regular part of `E` (for `S`) or from symmetric Richardson
//! extrapolation along the curve (for `K`).
//!
//! Graph curves carry frozen tail densities beyond the truncation; their
//! contributions are kept in separate columns, one per curve end.

use std::f64::consts::PI;
use std::ops::Range;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryDiscretization, Curve, End, Layout, Node, Panel, Side};
use crate::error::{Error, Result};
use crate::greens::{GreenKernel, KernelPoint};
use crate::model::{reduce_periodic, Point, Vector};
use crate::quadrature::{barycentric_weights, integrate_adaptive, kress_log_weights, lagrange_basis, log_product_weights};
use crate::special::{bessel_i0, bessel_i1};
use crate::taufamily::ArcDomain;

/// Relative spread above which the diagonal extrapolation is rejected.
pub const EXTRAPOLATION_TOL: f64 = 1e-4;

/// Closest approach at which off-curve evaluation is attempted.
pub const EVALUATION_FLOOR: f64 = 1e-4;

/// Near-field factor: plain quadrature needs `dist >= NEAR_FACTOR * spacing`.
pub const NEAR_FACTOR: f64 = 10.0;

const ADAPTIVE_TOL: f64 = 1e-12;
const ADAPTIVE_MAX_INTERVALS: usize = 6000;

/// Frozen-density tail of one graph-curve end.
#[derive(Debug, Clone, PartialEq)]
pub struct TailGroup {
    pub segment: usize,
    pub end: End,
    /// Range in `BoundaryDiscretization::tail_nodes`.
    pub nodes: Range<usize>,
}

/// How the near-diagonal part of each operator was integrated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssemblyDiagnostics {
    pub schemes: Vec<String>,
    /// `exp(-sqrt(mu_0) (L - R))` for the graph curves, zero without them.
    pub tail_bound: f64,
    /// `||A - A^T|| / ||A||` for `A = W^{1/2} S W^{-1/2}` (Frobenius norms).
    pub symmetry_residual: f64,
    /// Largest relative spread of the diagonal extrapolation.
    pub extrapolation_spread: f64,
}

/// Density on the boundary nodes plus one frozen value per tail group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pub nodes: Vec<f64>,
    pub tails: Vec<f64>,
}

impl Density {
    pub fn new(nodes: Vec<f64>, tails: Vec<f64>) -> Self {
        Self { nodes, tails }
    }

    pub fn zeros(ops: &LayerOperatorSet) -> Self {
        Self { nodes: vec![0.0; ops.len()], tails: vec![0.0; ops.tails.len()] }
    }

    /// Node values with zero tails.
    pub fn from_nodes(ops: &LayerOperatorSet, nodes: Vec<f64>) -> Self {
        Self { nodes, tails: vec![0.0; ops.tails.len()] }
    }

    /// Samples `f` at the nodes; tails take the value at the outermost node
    /// of their end.
    pub fn sample(ops: &LayerOperatorSet, f: impl Fn(Point) -> f64) -> Self {
        let nodes: Vec<f64> = ops.disc.nodes.iter().map(|n| f(n.point)).collect();
        let tails = ops.tails.iter().map(|g| nodes[ops.outermost_node(g)]).collect();
        Self { nodes, tails }
    }

    pub fn max_abs(&self) -> f64 {
        self.nodes.iter().chain(&self.tails).fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Assembled operators together with the geometry they act on.
#[derive(Debug, Clone)]
pub struct LayerOperatorSet {
    pub s: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub kstar: DMatrix<f64>,
    /// Columns: response to unit frozen density on each tail group.
    pub s_tail: DMatrix<f64>,
    pub k_tail: DMatrix<f64>,
    pub kstar_tail: DMatrix<f64>,
    pub tails: Vec<TailGroup>,
    pub disc: Arc<BoundaryDiscretization>,
    pub kernel: Arc<GreenKernel>,
    pub diagnostics: AssemblyDiagnostics,
    prepared: Vec<KernelPoint>,
    prepared_tail: Vec<KernelPoint>,
}

/// Kernel data for one target/source pair.
#[derive(Debug, Clone, Copy, Default)]
struct PairKernel {
    e: f64,
    /// `d_{nu_q} E`.
    k: f64,
    /// `d_{nu_p} E`.
    kstar: f64,
}

/// Coefficients of `log r` in the three kernels.
#[derive(Debug, Clone, Copy, Default)]
struct LogParts {
    s: f64,
    k: f64,
    kstar: f64,
}

fn log_parts(lambda: f64, pq: Vector, nu_p: Vector, nu_q: Vector) -> LogParts {
    let r = pq.norm();
    let s = -bessel_i0(lambda * r) / (2.0 * PI);
    if r == 0.0 {
        return LogParts { s, k: 0.0, kstar: 0.0 };
    }
    let c = lambda * bessel_i1(lambda * r) / (2.0 * PI * r);
    LogParts { s, k: c * pq.dot(nu_q), kstar: -c * pq.dot(nu_p) }
}

impl LayerOperatorSet {
    pub fn len(&self) -> usize {
        self.disc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.disc.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.disc.weights()
    }

    /// Boundary node closest to the tail of `g`.
    pub fn outermost_node(&self, g: &TailGroup) -> usize {
        let seg = &self.disc.segments[g.segment];
        match g.end {
            End::Left => seg.range.start,
            End::Right => seg.range.end - 1,
        }
    }

    /// `S f` including tail contributions.
    pub fn apply_s(&self, f: &Density) -> DVector<f64> {
        self.apply(&self.s, &self.s_tail, f)
    }

    /// `K f` including tail contributions.
    pub fn apply_k(&self, f: &Density) -> DVector<f64> {
        self.apply(&self.k, &self.k_tail, f)
    }

    /// `K* f` including tail contributions.
    pub fn apply_kstar(&self, f: &Density) -> DVector<f64> {
        self.apply(&self.kstar, &self.kstar_tail, f)
    }

    fn apply(&self, m: &DMatrix<f64>, tail: &DMatrix<f64>, f: &Density) -> DVector<f64> {
        let mut out = m * DVector::from_column_slice(&f.nodes);
        if !f.tails.is_empty() {
            out += tail * DVector::from_column_slice(&f.tails);
        }
        out
    }

    /// Cross-section seen by the graph curves far out along the cylinder,
    /// with the segment each endpoint belongs to. `None` without graph curves.
    pub fn far_field(&self) -> Result<Option<FarField>> {
        far_field_of(&self.kernel, &self.disc)
    }
}

/// The cross-section at infinity of a region bounded by graph curves.
#[derive(Debug, Clone)]
pub struct FarField {
    pub domain: ArcDomain,
    /// Segment index of each endpoint of `domain`, in endpoint order.
    pub endpoint_segment: Vec<usize>,
}

/// [`LayerOperatorSet::far_field`] without assembling anything.
pub fn far_field_of(gk: &GreenKernel, disc: &BoundaryDiscretization) -> Result<Option<FarField>> {
    let c = disc.circumference;
    let mut lines: Vec<(f64, Side, usize)> = disc
        .segments
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.curve.is_closed())
        .map(|(i, s)| (s.curve.asymptote().rem_euclid(c), s.curve.side(), i))
        .collect();
    if lines.is_empty() {
        return Ok(None);
    }
    lines.sort_by(|a, b| a.0.total_cmp(&b.0));
    let start = lines
        .iter()
        .position(|l| l.1 == Side::Above)
        .ok_or_else(|| Error::InvalidModel("graph curves must alternate above/below around the circle".into()))?;
    lines.rotate_left(start);
    if lines.len() % 2 != 0 {
        return Err(Error::InvalidModel("graph curves must come in above/below pairs".into()));
    }
    let mut arcs = Vec::new();
    let mut endpoint_segment = Vec::new();
    for pair in lines.chunks(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if lo.1 != Side::Above || hi.1 != Side::Below {
            return Err(Error::InvalidModel("graph curves must alternate above/below around the circle".into()));
        }
        let mut b = hi.0;
        if b <= lo.0 {
            b += c;
        }
        arcs.push((lo.0, b));
        endpoint_segment.push(lo.2);
        endpoint_segment.push(hi.2);
    }
    let domain = ArcDomain::from_spectrum(gk.spectrum(), arcs)?;
    Ok(Some(FarField { domain, endpoint_segment }))
}

fn tail_groups(disc: &BoundaryDiscretization) -> Vec<TailGroup> {
    let mut out = Vec::new();
    for (i, seg) in disc.segments.iter().enumerate() {
        if let Layout::Panels { tails, .. } = &seg.layout {
            for t in tails {
                out.push(TailGroup { segment: i, end: t.end, nodes: t.range.clone() });
            }
        }
    }
    out
}

/// Reference panel nodes on `[-1, 1]`.
struct PanelRule {
    nodes: Vec<f64>,
}

struct Assembler<'a> {
    gk: &'a GreenKernel,
    disc: &'a BoundaryDiscretization,
    prepared: &'a [KernelPoint],
    prepared_tail: &'a [KernelPoint],
    rule: PanelRule,
    kress: Vec<Vec<f64>>,
    lambda: f64,
}

/// One row of every operator.
struct Row {
    s: Vec<f64>,
    k: Vec<f64>,
    s_tail: Vec<f64>,
    k_tail: Vec<f64>,
    kstar_tail: Vec<f64>,
    spread: f64,
}

impl<'a> Assembler<'a> {
    fn pair(&self, p: &KernelPoint, nu_p: Vector, q: &KernelPoint, nu_q: Vector) -> PairKernel {
        let v = self.gk.eval_unchecked(p, q);
        let grad_p = if self.gk.is_variable() {
            self.gk.eval_unchecked(q, p).gradient()
        } else {
            v.gradient().scale(-1.0)
        };
        PairKernel { e: v.value, k: v.gradient().dot(nu_q), kstar: grad_p.dot(nu_p) }
    }

    /// Smooth part of the double-layer kernel at the diagonal of node `i`.
    fn diagonal_k(&self, i: usize, node: &Node, curve: &Curve, closed: bool, h0: f64) -> Result<(f64, f64)> {
        let p = &self.prepared[i];
        let s = node.param;
        let smooth = |h: f64| -> f64 {
            let sq = s + h;
            let q = self.gk.prepare(curve.point(sq));
            let nu_q = curve.normal(sq);
            let chord = curve.chord(s, sq);
            let kk = self.pair(p, node.normal, &q, nu_q).k;
            let a = log_parts(self.lambda, chord, node.normal, nu_q).k;
            if closed {
                kk - 0.5 * a * (4.0 * (0.5 * h).sin().powi(2)).ln()
            } else {
                kk - a * h.abs().ln()
            }
        };
        let g: Vec<f64> = (0..3)
            .map(|l| {
                let h = h0 / f64::powi(2.0, l);
                0.5 * (smooth(h) + smooth(-h))
            })
            .collect();
        let a1 = (4.0 * g[1] - g[0]) / 3.0;
        let a2 = (4.0 * g[2] - g[1]) / 3.0;
        let value = (16.0 * a2 - a1) / 15.0;
        let spread = (a2 - value).abs() / value.abs().max(1.0);
        if spread > EXTRAPOLATION_TOL {
            return Err(Error::ExtrapolationUnstable { node: i, spread });
        }
        Ok((value, spread))
    }

    fn row(&self, i: usize) -> Result<Row> {
        let n = self.disc.len();
        let g_count = self.disc.segments.iter().map(|s| match &s.layout {
            Layout::Panels { tails, .. } => tails.len(),
            Layout::Periodic { .. } => 0,
        });
        let g_count: usize = g_count.sum();
        let mut row = Row {
            s: vec![0.0; n],
            k: vec![0.0; n],
            s_tail: vec![0.0; g_count],
            k_tail: vec![0.0; g_count],
            kstar_tail: vec![0.0; g_count],
            spread: 0.0,
        };
        let node = &self.disc.nodes[i];
        let p = &self.prepared[i];
        let mut group = 0;
        for (si, seg) in self.disc.segments.iter().enumerate() {
            let same = si == node.segment;
            match &seg.layout {
                Layout::Periodic { n: m } => {
                    if same {
                        self.kress_block(i, node, &seg.curve, seg.range.clone(), *m, &mut row)?;
                    } else {
                        for j in seg.range.clone() {
                            let q = &self.disc.nodes[j];
                            let pk = self.pair(p, node.normal, &self.prepared[j], q.normal);
                            row.s[j] = pk.e * q.weight;
                            row.k[j] = pk.k * q.weight;
                        }
                    }
                }
                Layout::Panels { panels, tails, .. } => {
                    for panel in panels {
                        let near = same && param_gap(node.param, panel) < panel.b - panel.a;
                        let base = panel.start;
                        for (local, (es, ek, _)) in self
                            .panel_entries(i, node, &seg.curve, panel, near, false)?
                            .into_iter()
                            .enumerate()
                        {
                            row.s[base + local] = es;
                            row.k[base + local] = ek;
                        }
                        if near {
                            row.spread = row.spread.max(self.last_spread(i, node, &seg.curve, panel)?);
                        }
                    }
                    for tail in tails {
                        for panel in &tail.panels {
                            let near = same && param_gap(node.param, panel) < panel.b - panel.a;
                            for (es, ek, eks) in self.panel_entries(i, node, &seg.curve, panel, near, true)? {
                                row.s_tail[group] += es;
                                row.k_tail[group] += ek;
                                row.kstar_tail[group] += eks;
                            }
                        }
                        group += 1;
                    }
                }
            }
        }
        Ok(row)
    }

    fn last_spread(&self, i: usize, node: &Node, curve: &Curve, panel: &Panel) -> Result<f64> {
        if node.param < panel.a || node.param > panel.b {
            return Ok(0.0);
        }
        let h0 = 0.04 * (panel.b - panel.a) / self.rule.nodes.len() as f64 * 10.0 / 4.0;
        Ok(self.diagonal_k(i, node, curve, false, h0)?.1)
    }

    /// Entries `(S, K, K*)` of target node `i` against the nodes of one panel.
    fn panel_entries(
        &self,
        i: usize,
        node: &Node,
        curve: &Curve,
        panel: &Panel,
        near: bool,
        tail: bool,
    ) -> Result<Vec<(f64, f64, f64)>> {
        let order = self.rule.nodes.len();
        let (list, prepared) = if tail {
            (&self.disc.tail_nodes, self.prepared_tail)
        } else {
            (&self.disc.nodes, self.prepared)
        };
        let p = &self.prepared[i];
        let mut out = Vec::with_capacity(order);
        if !near {
            for j in panel.start..panel.start + order {
                let q = &list[j];
                let pk = self.pair(p, node.normal, &prepared[j], q.normal);
                out.push((pk.e * q.weight, pk.k * q.weight, pk.kstar * q.weight));
            }
            return Ok(out);
        }
        let half = 0.5 * (panel.b - panel.a);
        let mid = 0.5 * (panel.a + panel.b);
        let t0 = (node.param - mid) / half;
        let lw = log_product_weights(&self.rule.nodes, t0);
        let ln_half = half.ln();
        for (local, j) in (panel.start..panel.start + order).enumerate() {
            let q = &list[j];
            let coincident = !tail && j == i;
            let lp = if coincident {
                LogParts { s: -1.0 / (2.0 * PI), k: 0.0, kstar: 0.0 }
            } else {
                log_parts(self.lambda, curve.chord(node.param, q.param), node.normal, q.normal)
            };
            let (bs, bk, bks) = if coincident {
                let reg = self.gk.regular_part_at_coincidence(p) - node.speed.ln() / (2.0 * PI);
                let h0 = 0.1 * half / order as f64;
                let (dk, _) = self.diagonal_k(i, node, curve, false, h0)?;
                (reg, dk, dk)
            } else {
                let pk = self.pair(p, node.normal, &prepared[j], q.normal);
                let lg = (node.param - q.param).abs().ln();
                (pk.e - lp.s * lg, pk.k - lp.k * lg, pk.kstar - lp.kstar * lg)
            };
            let w = q.weight;
            let logw = half * lw[local] * q.speed;
            out.push((
                w * (bs + lp.s * ln_half) + logw * lp.s,
                w * (bk + lp.k * ln_half) + logw * lp.k,
                w * (bks + lp.kstar * ln_half) + logw * lp.kstar,
            ));
        }
        Ok(out)
    }

    fn kress_block(&self, i: usize, node: &Node, curve: &Curve, range: Range<usize>, m: usize, row: &mut Row) -> Result<()> {
        let weights = self.kress_weights(m);
        let h = 2.0 * PI / m as f64;
        let li = i - range.start;
        let p = &self.prepared[i];
        for j in range.clone() {
            let lj = j - range.start;
            let q = &self.disc.nodes[j];
            let r = weights[(li + m - lj) % m];
            if j == i {
                let reg = self.gk.regular_part_at_coincidence(p) - node.speed.ln() / (2.0 * PI);
                let (dk, spread) = self.diagonal_k(i, node, curve, true, 0.1 * h)?;
                row.spread = row.spread.max(spread);
                row.s[j] = (r * (-0.5 / (2.0 * PI)) + h * reg) * q.speed;
                row.k[j] = h * dk * q.speed;
                continue;
            }
            let pk = self.pair(p, node.normal, &self.prepared[j], q.normal);
            let lp = log_parts(self.lambda, curve.chord(node.param, q.param), node.normal, q.normal);
            let lg = (4.0 * (0.5 * (node.param - q.param)).sin().powi(2)).ln();
            row.s[j] = (r * 0.5 * lp.s + h * (pk.e - 0.5 * lp.s * lg)) * q.speed;
            row.k[j] = (r * 0.5 * lp.k + h * (pk.k - 0.5 * lp.k * lg)) * q.speed;
        }
        Ok(())
    }

    fn kress_weights(&self, m: usize) -> &[f64] {
        self.kress.iter().find(|w| w.len() == m).expect("weights for every periodic size")
    }
}

fn param_gap(s: f64, panel: &Panel) -> f64 {
    if s < panel.a {
        panel.a - s
    } else if s > panel.b {
        s - panel.b
    } else {
        0.0
    }
}

/// Assembles `S`, `K`, `K*` and the tail columns.
pub fn assemble(gk: &GreenKernel, disc: &BoundaryDiscretization) -> Result<LayerOperatorSet> {
    let prepared: Vec<KernelPoint> = disc.nodes.par_iter().map(|n| gk.prepare(n.point)).collect();
    let prepared_tail: Vec<KernelPoint> = disc.tail_nodes.par_iter().map(|n| gk.prepare(n.point)).collect();
    let mut kress = Vec::new();
    let mut schemes = Vec::new();
    let mut tail_bound: f64 = 0.0;
    for seg in &disc.segments {
        match &seg.layout {
            Layout::Periodic { n } => {
                if !kress.iter().any(|w: &Vec<f64>| w.len() == *n) {
                    kress.push(kress_log_weights(*n));
                }
                schemes.push(format!("closed curve, {n} nodes: Kress log weights, Richardson diagonal for K"));
            }
            Layout::Panels { panels, order, half_length, tail_bound: tb, .. } => {
                tail_bound = tail_bound.max(*tb);
                schemes.push(format!(
                    "graph curve, {} panels of order {order} on [-{half_length}, {half_length}]: product-integration log weights, frozen tails",
                    panels.len()
                ));
            }
        }
    }
    let rule = PanelRule { nodes: disc.reference_nodes.clone() };
    let assembler = Assembler {
        gk,
        disc,
        prepared: &prepared,
        prepared_tail: &prepared_tail,
        rule,
        kress,
        lambda: gk.comparison_rate(),
    };
    let rows: Vec<Row> = (0..disc.len()).into_par_iter().map(|i| assembler.row(i)).collect::<Result<_>>()?;
    let n = disc.len();
    let tails = tail_groups(disc);
    let g = tails.len();
    let mut s = DMatrix::zeros(n, n);
    let mut k = DMatrix::zeros(n, n);
    let mut s_tail = DMatrix::zeros(n, g);
    let mut k_tail = DMatrix::zeros(n, g);
    let mut kstar_tail = DMatrix::zeros(n, g);
    let mut spread: f64 = 0.0;
    for (i, r) in rows.iter().enumerate() {
        for j in 0..n {
            s[(i, j)] = r.s[j];
            k[(i, j)] = r.k[j];
        }
        for c in 0..g {
            s_tail[(i, c)] = r.s_tail[c];
            k_tail[(i, c)] = r.k_tail[c];
            kstar_tail[(i, c)] = r.kstar_tail[c];
        }
        spread = spread.max(r.spread);
    }
    let w = disc.weights();
    let kstar = DMatrix::from_fn(n, n, |i, j| k[(j, i)] * w[j] / w[i]);
    let sym = DMatrix::from_fn(n, n, |i, j| s[(i, j)] * (w[i] / w[j]).sqrt());
    let symmetry_residual = (&sym - sym.transpose()).norm() / sym.norm().max(f64::MIN_POSITIVE);
    Ok(LayerOperatorSet {
        s,
        k,
        kstar,
        s_tail,
        k_tail,
        kstar_tail,
        tails,
        disc: Arc::new(disc.clone()),
        kernel: Arc::new(gk.clone()),
        diagnostics: AssemblyDiagnostics { schemes, tail_bound, symmetry_residual, extrapolation_spread: spread },
        prepared,
        prepared_tail,
    })
}

/// `S` alone.
pub fn assemble_s(gk: &GreenKernel, disc: &BoundaryDiscretization) -> Result<DMatrix<f64>> {
    Ok(assemble(gk, disc)?.s)
}

/// `K` alone.
pub fn assemble_k(gk: &GreenKernel, disc: &BoundaryDiscretization) -> Result<DMatrix<f64>> {
    Ok(assemble(gk, disc)?.k)
}

/// `K*` alone.
pub fn assemble_kstar(gk: &GreenKernel, disc: &BoundaryDiscretization) -> Result<DMatrix<f64>> {
    Ok(assemble(gk, disc)?.kstar)
}

/// Layer potentials and the gradient of the single layer at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LayerValues {
    pub single: f64,
    pub double: f64,
    /// Gradient of the single layer with respect to the evaluation point.
    pub single_grad: [f64; 2],
}

impl LayerValues {
    fn add(&mut self, v: [f64; 4], scale: f64) {
        self.single += v[0] * scale;
        self.double += v[1] * scale;
        self.single_grad[0] += v[2] * scale;
        self.single_grad[1] += v[3] * scale;
    }

    /// Directional derivative of the single layer along `dir`.
    pub fn single_derivative(&self, dir: Vector) -> f64 {
        self.single_grad[0] * dir.x + self.single_grad[1] * dir.theta
    }
}

impl LayerOperatorSet {
    /// `[E, d_{nu_q} E, grad_p E]` for a prepared target and source.
    fn integrand(&self, p: &KernelPoint, q: &KernelPoint, nu_q: Vector) -> [f64; 4] {
        let v = self.kernel.eval_unchecked(p, q);
        let gp = if self.kernel.is_variable() {
            self.kernel.eval_unchecked(q, p).gradient()
        } else {
            v.gradient().scale(-1.0)
        };
        [v.value, v.gradient().dot(nu_q), gp.x, gp.theta]
    }

    /// The comparison part of [`Self::integrand`]; needs no modal data.
    fn comparison_integrand(&self, p: Point, q: Point, nu_q: Vector) -> [f64; 4] {
        let v = self.kernel.comparison_kernel(p.x - q.x, p.theta - q.theta);
        let g = v.gradient();
        [v.value, g.dot(nu_q), -g.x, -g.theta]
    }

    /// The remainder part of [`Self::integrand`].
    fn remainder_integrand(&self, p: &KernelPoint, q: &KernelPoint, nu_q: Vector) -> [f64; 4] {
        let v = self.kernel.remainder_unchecked(p, q);
        let gp = self.kernel.remainder_unchecked(q, p).gradient();
        [v.value, v.gradient().dot(nu_q), gp.x, gp.theta]
    }

    /// Adds the node-quadrature remainder contribution of a near-field
    /// piece. The remainder is bounded with bounded gradient, so the
    /// boundary quadrature stays accurate next to the curve.
    fn add_remainder(&self, pk: &KernelPoint, nodes: &[Node], prepared: &[KernelPoint], dens: &[f64], out: &mut LayerValues) {
        if !self.kernel.is_variable() {
            return;
        }
        for ((q, qk), fj) in nodes.iter().zip(prepared).zip(dens) {
            out.add(self.remainder_integrand(pk, qk, q.normal), fj * q.weight);
        }
    }

    /// Evaluates the single layer, double layer and single-layer gradient of
    /// `f` at `p`, switching to adaptive quadrature close to the boundary.
    pub fn evaluate(&self, f: &Density, p: Point) -> Result<LayerValues> {
        let disc = &*self.disc;
        let c = disc.circumference;
        let pk = self.kernel.prepare(p);
        let mut out = LayerValues::default();
        let dist = |q: Point| (p.x - q.x).hypot(reduce_periodic(p.theta - q.theta, c));
        let mut group = 0;
        for seg in &disc.segments {
            match &seg.layout {
                Layout::Periodic { n } => {
                    let nodes = &disc.nodes[seg.range.clone()];
                    let spacing = nodes.iter().map(|q| q.speed).fold(0.0, f64::max) * 2.0 * PI / *n as f64;
                    let dmin = nodes.iter().map(|q| dist(q.point)).fold(f64::INFINITY, f64::min);
                    if dmin >= NEAR_FACTOR * spacing {
                        for (j, q) in seg.range.clone().zip(nodes) {
                            let v = self.integrand(&pk, &self.prepared[j], q.normal);
                            out.add(v, f.nodes[j] * q.weight);
                        }
                    } else {
                        self.check_floor(&seg.curve, p, dmin)?;
                        let dens = &f.nodes[seg.range.clone()];
                        let v = self.adaptive_closed(&pk, &seg.curve, dens, *n);
                        out.add(v, 1.0);
                        self.add_remainder(&pk, nodes, &self.prepared[seg.range.clone()], dens, &mut out);
                    }
                }
                Layout::Panels { panels, tails, order, .. } => {
                    for panel in panels {
                        let range = panel.start..panel.start + order;
                        let dens = &f.nodes[range.clone()];
                        self.panel_contribution(&pk, p, &seg.curve, panel, &disc.nodes[range.clone()], range, dens, false, &mut out)?;
                    }
                    for tail in tails {
                        let value = f.tails.get(group).copied().unwrap_or(0.0);
                        group += 1;
                        if value == 0.0 {
                            continue;
                        }
                        let dens = vec![value; *order];
                        for panel in &tail.panels {
                            let range = panel.start..panel.start + order;
                            self.panel_contribution(&pk, p, &seg.curve, panel, &disc.tail_nodes[range.clone()], range, &dens, true, &mut out)?;
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    fn check_floor(&self, curve: &Curve, p: Point, dmin: f64) -> Result<()> {
        if dmin < 10.0 * EVALUATION_FLOOR || dmin < 0.5 {
            let d = curve.distance_to(self.disc.circumference, p);
            if d < EVALUATION_FLOOR {
                return Err(Error::TooCloseToBoundary { distance: d });
            }
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn panel_contribution(
        &self,
        pk: &KernelPoint,
        p: Point,
        curve: &Curve,
        panel: &Panel,
        nodes: &[Node],
        range: Range<usize>,
        dens: &[f64],
        tail: bool,
        out: &mut LayerValues,
    ) -> Result<()> {
        let c = self.disc.circumference;
        let dist = |q: Point| (p.x - q.x).hypot(reduce_periodic(p.theta - q.theta, c));
        let dmin = nodes.iter().map(|q| dist(q.point)).fold(f64::INFINITY, f64::min);
        let arclen: f64 = nodes.iter().map(|q| q.weight).sum();
        let spacing = arclen / nodes.len() as f64;
        if dmin >= (NEAR_FACTOR * spacing).max(2.5 * arclen) {
            let prepared = if tail { &self.prepared_tail } else { &self.prepared };
            for ((q, j), fj) in nodes.iter().zip(range).zip(dens) {
                let v = self.integrand(pk, &prepared[j], q.normal);
                out.add(v, fj * q.weight);
            }
            return Ok(());
        }
        self.check_floor(curve, p, dmin)?;
        // comparison kernel adaptively against the interpolated density
        let reference = &self.disc.reference_nodes;
        let bary = barycentric_weights(reference);
        let half = 0.5 * (panel.b - panel.a);
        let mid = 0.5 * (panel.a + panel.b);
        let scale = dens.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut basis = vec![0.0; reference.len()];
        let p0 = pk.point();
        let res = integrate_adaptive(
            |t: f64| {
                lagrange_basis(reference, &bary, t, &mut basis);
                let phi: f64 = basis.iter().zip(dens).map(|(b, d)| b * d).sum();
                let s = mid + half * t;
                let v = self.comparison_integrand(p0, curve.point(s), curve.normal(s));
                let w = phi * curve.speed(s) * half;
                [v[0] * w, v[1] * w, v[2] * w, v[3] * w]
            },
            -1.0,
            1.0,
            4,
            ADAPTIVE_TOL * scale,
            ADAPTIVE_MAX_INTERVALS,
        );
        out.add(res.value, 1.0);
        let prepared = if tail { &self.prepared_tail[range] } else { &self.prepared[range] };
        self.add_remainder(pk, nodes, prepared, dens, out);
        Ok(())
    }

    /// Adaptive integral of the comparison kernel against the trigonometric
    /// interpolant of the density.
    fn adaptive_closed(&self, pk: &KernelPoint, curve: &Curve, dens: &[f64], n: usize) -> [f64; 4] {
        let scale = dens.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let nf = n as f64;
        let h = 2.0 * PI / nf;
        let p0 = pk.point();
        let res = integrate_adaptive(
            |s: f64| {
                let phi = trig_interpolate(dens, h, nf, s);
                let v = self.comparison_integrand(p0, curve.point(s), curve.normal(s));
                let w = phi * curve.speed(s);
                [v[0] * w, v[1] * w, v[2] * w, v[3] * w]
            },
            0.0,
            2.0 * PI,
            (n / 8).max(8),
            ADAPTIVE_TOL * scale,
            ADAPTIVE_MAX_INTERVALS,
        );
        res.value
    }

    /// Single layer `S(f)(p)` off the boundary.
    pub fn eval_single(&self, f: &Density, p: Point) -> Result<f64> {
        Ok(self.evaluate(f, p)?.single)
    }

    /// Double layer `D(f)(p) = int d_{nu_q} E(p, q) f(q) dsigma(q)` off the boundary.
    pub fn eval_double(&self, f: &Density, p: Point) -> Result<f64> {
        Ok(self.evaluate(f, p)?.double)
    }
}

/// Trigonometric interpolant of equispaced samples (even count) at `s`.
fn trig_interpolate(values: &[f64], h: f64, nf: f64, s: f64) -> f64 {
    let mut acc = 0.0;
    for (j, v) in values.iter().enumerate() {
        let x = s - j as f64 * h;
        let half = 0.5 * x;
        let sh = half.sin();
        if sh.abs() < 1e-15 {
            acc += v * (0.5 * nf * x).cos();
            continue;
        }
        acc += v * (0.5 * nf * x).sin() * half.cos() / (nf * sh);
    }
    acc
}

/// One line of a jump report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpEntry {
    pub relation: String,
    pub t: f64,
    /// Error of the extrapolated limit `2 v(t) - v(2t)`, relative to `max |f|`.
    pub error: f64,
    /// Error of `v(t)` itself.
    pub raw_error: f64,
    /// Observed order of `raw_error` between this `t` and the previous one.
    pub order: Option<f64>,
}

/// Offset-curve limits of the layer potentials against the jump relations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpReport {
    pub entries: Vec<JumpEntry>,
}

impl JumpReport {
    /// Largest extrapolated error at the smallest `t`.
    pub fn max_final_error(&self) -> f64 {
        let tmin = self.entries.iter().map(|e| e.t).fold(f64::INFINITY, f64::min);
        self.entries.iter().filter(|e| e.t == tmin).map(|e| e.error).fold(0.0, f64::max)
    }

    pub fn relation(&self, name: &str) -> Vec<&JumpEntry> {
        self.entries.iter().filter(|e| e.relation == name).collect()
    }
}

/// Relations checked by [`jump_check`], interior side first.
pub const JUMP_RELATIONS: [&str; 8] = [
    "single_interior",
    "single_exterior",
    "double_interior",
    "double_exterior",
    "normal_single_interior",
    "normal_single_exterior",
    "double_total",
    "normal_single_total",
];

/// Evaluates `S f`, `D f` and `d_nu S f` at `p_i -/+ t nu_i` for the
/// `targets` nodes and each `t` in the decreasing sequence, and compares the
/// limits with `S f`, `(-/+ 1/2 I + K) f` and `(+/- 1/2 I + K*) f`.
/// Interior (`+`) is the side of the region, i.e. `-nu`.
pub fn jump_check(ops: &LayerOperatorSet, f: &Density, ts: &[f64], targets: &[usize]) -> Result<JumpReport> {
    if ts.is_empty() || ts.windows(2).any(|w| !(w[1] < w[0])) || ts.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidInput("offset sequence must be positive and decreasing".into()));
    }
    let sf = ops.apply_s(f);
    let kf = ops.apply_k(f);
    let ksf = ops.apply_kstar(f);
    let scale = f.max_abs().max(f64::MIN_POSITIVE);
    let mut all_t: Vec<f64> = ts.iter().flat_map(|&t| [t, 2.0 * t]).collect();
    all_t.sort_by(|a, b| b.total_cmp(a));
    all_t.dedup();
    // values[t][target] = (interior, exterior)
    let values: Vec<Vec<(LayerValues, LayerValues)>> = all_t
        .par_iter()
        .map(|&t| {
            targets
                .iter()
                .map(|&i| {
                    let n = &ops.disc.nodes[i];
                    let inside = n.point.offset(n.normal, -t);
                    let outside = n.point.offset(n.normal, t);
                    Ok((ops.evaluate(f, inside)?, ops.evaluate(f, outside)?))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let at = |t: f64| all_t.iter().position(|&x| x == t).expect("evaluated");
    let measure = |t: f64, rel: usize| -> (f64, f64) {
        let (v1, v2) = (&values[at(t)], &values[at(2.0 * t)]);
        let mut raw: f64 = 0.0;
        let mut lim: f64 = 0.0;
        for (k, &i) in targets.iter().enumerate() {
            let nu = ops.disc.nodes[i].normal;
            let pick = |v: &(LayerValues, LayerValues)| -> f64 {
                match rel {
                    0 => v.0.single,
                    1 => v.1.single,
                    2 => v.0.double,
                    3 => v.1.double,
                    4 => v.0.single_derivative(nu),
                    5 => v.1.single_derivative(nu),
                    6 => v.1.double - v.0.double,
                    _ => v.0.single_derivative(nu) - v.1.single_derivative(nu),
                }
            };
            let fi = f.nodes[i];
            let expected = match rel {
                0 | 1 => sf[i],
                2 => -0.5 * fi + kf[i],
                3 => 0.5 * fi + kf[i],
                4 => 0.5 * fi + ksf[i],
                5 => -0.5 * fi + ksf[i],
                _ => fi,
            };
            let a = pick(&v1[k]);
            let b = pick(&v2[k]);
            raw = raw.max((a - expected).abs());
            lim = lim.max((2.0 * a - b - expected).abs());
        }
        (raw / scale, lim / scale)
    };
    let mut entries = Vec::new();
    for (rel, name) in JUMP_RELATIONS.iter().enumerate() {
        let mut prev: Option<(f64, f64)> = None;
        for &t in ts {
            let (raw, lim) = measure(t, rel);
            let order = prev.and_then(|(pt, pr)| {
                (raw > 0.0 && pr > 0.0).then(|| (pr / raw).ln() / (pt / t).ln())
            });
            entries.push(JumpEntry { relation: name.to_string(), t, error: lim, raw_error: raw, order });
            prev = Some((t, raw));
        }
    }
    Ok(JumpReport { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{Bump, Resolution};
    use crate::model::Potential;
    use crate::spectrum::CrossSectionSpectrum;

    fn kernel(cos: Vec<f64>) -> GreenKernel {
        let spec = CrossSectionSpectrum::new(2.0 * PI, &Potential { fourier_cos: cos, fourier_sin: vec![] }, 32).unwrap();
        GreenKernel::new(Arc::new(spec))
    }

    fn circle_ops(n: usize, cos: Vec<f64>) -> LayerOperatorSet {
        let gk = kernel(cos);
        let curve = Curve::circle(Point::new(0.0, PI), 0.5, Side::Inside).unwrap();
        let res = Resolution { nodes: n, ..Resolution::default() };
        let disc = BoundaryDiscretization::from_curves(2.0 * PI, &[curve], &res, gk.decay_rate().powi(2)).unwrap();
        assemble(&gk, &disc).unwrap()
    }

    #[test]
    fn closed_single_layer_is_symmetric() {
        let ops = circle_ops(128, vec![1.0]);
        assert!(ops.diagnostics.symmetry_residual < 1e-10, "{}", ops.diagnostics.symmetry_residual);
    }

    #[test]
    fn kstar_is_weighted_transpose() {
        let ops = circle_ops(64, vec![1.0, 0.5]);
        let w = DMatrix::from_diagonal(&DVector::from_vec(ops.weights()));
        let lhs = &w * &ops.kstar;
        let rhs = (&w * &ops.k).transpose();
        assert!((&lhs - &rhs).amax() < 1e-12 * rhs.amax());
    }

    #[test]
    fn single_layer_rows_match_adaptive_quadrature() {
        let ops = circle_ops(256, vec![1.0]);
        let ones = Density::from_nodes(&ops, vec![1.0; ops.len()]);
        let sf = ops.apply_s(&ones);
        let curve = &ops.disc.segments[0].curve;
        for &i in &[0usize, 37, 128] {
            let node = &ops.disc.nodes[i];
            let s0 = node.param;
            let integrand = |s: f64| -> [f64; 1] {
                if s == s0 {
                    return [0.0];
                }
                let q = curve.point(s);
                [ops.kernel.eval(node.point, q).unwrap_or(0.0) * curve.speed(s)]
            };
            // split at the singular parameter so both pieces see it at an end
            let a = integrate_adaptive(integrand, s0, s0 + PI, 8, 1e-13, 4000).value[0];
            let b = integrate_adaptive(integrand, s0 - PI, s0, 8, 1e-13, 4000).value[0];
            assert!((sf[i] - (a + b)).abs() < 1e-6, "{} vs {}", sf[i], a + b);
        }
    }

    #[test]
    fn zero_density_gives_zero() {
        let ops = circle_ops(64, vec![1.0]);
        let f = Density::zeros(&ops);
        let v = ops.evaluate(&f, Point::new(0.1, PI + 0.1)).unwrap();
        assert_eq!(v.single, 0.0);
        assert_eq!(v.double, 0.0);
    }

    #[test]
    fn single_layer_solves_the_equation() {
        let ops = circle_ops(128, vec![1.0, 0.5]);
        let f = Density::sample(&ops, |p| (p.theta).cos() + 0.3 * p.x);
        let spec = ops.kernel.spectrum_arc();
        let h = 1e-3;
        for p in [Point::new(2.0, 0.5), Point::new(-1.5, PI + 0.3)] {
            let u = |dx: f64, dt: f64| ops.eval_single(&f, Point::new(p.x + dx, p.theta + dt)).unwrap();
            let c = u(0.0, 0.0);
            let lap = -(u(h, 0.0) + u(-h, 0.0) + u(0.0, h) + u(0.0, -h) - 4.0 * c) / (h * h);
            let v = spec.potential().value(p.theta, 2.0 * PI);
            assert!((lap + v * c).abs() < 1e-5, "{}", lap + v * c);
        }
    }

    #[test]
    fn double_layer_jumps_on_circle() {
        let ops = circle_ops(128, vec![1.0]);
        let f = Density::sample(&ops, |p| 1.0 + 0.5 * (3.0 * p.theta).sin() + 0.2 * p.x);
        let targets: Vec<usize> = (0..ops.len()).step_by(16).collect();
        let rep = jump_check(&ops, &f, &[4e-3, 2e-3, 1e-3], &targets).unwrap();
        for e in rep.entries.iter().filter(|e| e.t == 1e-3) {
            assert!(e.error < 1e-4, "{e:?}");
        }
    }

    #[test]
    fn straight_strip_has_zero_self_blocks_in_k() {
        let gk = kernel(vec![1.0]);
        let curves = [
            Curve::graph(0.0, None, Side::Above).unwrap(),
            Curve::graph(2.0, None, Side::Below).unwrap(),
        ];
        let res = Resolution { half_length: 10.0, ..Resolution::default() };
        let disc = BoundaryDiscretization::from_curves(2.0 * PI, &curves, &res, 1.0).unwrap();
        let ops = assemble(&gk, &disc).unwrap();
        let n1 = ops.disc.segments[0].range.len();
        let block = ops.k.view((0, 0), (n1, n1));
        assert!(block.amax() < 1e-12, "{}", block.amax());
        let ff = ops.far_field().unwrap().unwrap();
        assert_eq!(ff.domain.arcs(), &[(0.0, 2.0)]);
    }

    #[test]
    fn bump_curve_assembles() {
        let gk = kernel(vec![1.0]);
        let bump = Bump { center: 0.0, width: 1.5, amplitude: 0.4 };
        let curves = [
            Curve::graph(0.0, Some(bump), Side::Above).unwrap(),
            Curve::graph(PI, None, Side::Below).unwrap(),
        ];
        let res = Resolution { half_length: 10.0, ..Resolution::default() };
        let disc = BoundaryDiscretization::from_curves(2.0 * PI, &curves, &res, 1.0).unwrap();
        let ops = assemble(&gk, &disc).unwrap();
        assert!(ops.diagnostics.extrapolation_spread < EXTRAPOLATION_TOL);
        assert_eq!(ops.tails.len(), 4);
    }
}
