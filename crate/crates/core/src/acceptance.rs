//! The acceptance suite: ten end-to-end checks with fixed configurations,
//! tolerances and time budgets.
//!
//! Each check returns a [`CriterionOutcome`]; a failing computation is
//! reported as a failed criterion with the error message rather than
//! aborting the suite.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boundary::{Bump, Curve, Resolution, Side};
use crate::dirichlet::{self, BumpSource, StripMode};
use crate::error::Result;
use crate::greens::{GreenKernel, SeparableBump};
use crate::layerops::{jump_check, Density, JUMP_RELATIONS};
use crate::linalg;
use crate::model::{reduce_periodic, Point, Potential};
use crate::oracle;
use crate::pipeline::operators_for;
use crate::spectrum::CrossSectionSpectrum;
use crate::taufamily::{self, ArcDomain, ChebSeries};

/// Result of one criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: String,
    pub passed: bool,
    /// The quantity compared against `tolerance` (worst case).
    pub measured: f64,
    pub tolerance: f64,
    pub seconds: f64,
    pub budget_seconds: f64,
    pub details: BTreeMap<String, f64>,
    pub error: Option<String>,
}

impl CriterionOutcome {
    /// One human-readable line.
    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let mut s = format!(
            "AC{:<2} {status} {:<34} measured {:.3e} (tol {:.1e}) in {:.1} s (budget {:.0} s)",
            self.id, self.name, self.measured, self.tolerance, self.seconds, self.budget_seconds
        );
        if let Some(e) = &self.error {
            s.push_str(&format!(" error: {e}"));
        }
        s
    }
}

/// What a check measured.
struct Measure {
    ok: bool,
    measured: f64,
    details: BTreeMap<String, f64>,
}

struct Criterion {
    id: usize,
    name: &'static str,
    tolerance: f64,
    budget: f64,
    run: fn(u64) -> Result<Measure>,
}

const CRITERIA: [Criterion; 10] = [
    Criterion { id: 1, name: "kernel oracle equivalence", tolerance: 1e-10, budget: 5.0, run: kernel_oracle },
    Criterion { id: 2, name: "jump relations", tolerance: 1e-4, budget: 60.0, run: jump_relations },
    Criterion { id: 3, name: "Rellich and divergence identities", tolerance: 1e-8, budget: 5.0, run: rellich },
    Criterion { id: 4, name: "uniform tau bounds", tolerance: 1e-2, budget: 30.0, run: uniform_bounds },
    Criterion { id: 5, name: "indicial consistency", tolerance: 1e-6, budget: 30.0, run: indicial },
    Criterion { id: 6, name: "Dirichlet solve", tolerance: 1e-6, budget: 120.0, run: dirichlet_solve },
    Criterion { id: 7, name: "invertibility under truncation", tolerance: 1e6, budget: 120.0, run: truncation_stability },
    Criterion { id: 8, name: "Dirichlet-to-Neumann map", tolerance: 1e-4, budget: 60.0, run: dtn_map },
    Criterion { id: 9, name: "representation equivalence", tolerance: 1e-5, budget: 60.0, run: representations },
    Criterion { id: 10, name: "well-posedness with source", tolerance: 1e-4, budget: 120.0, run: wellposedness },
];

/// Number of criteria.
pub const CRITERION_COUNT: usize = CRITERIA.len();

/// Runs criterion `id` (1 to 10).
pub fn run_criterion(id: usize, seed: u64) -> Option<CriterionOutcome> {
    let c = CRITERIA.iter().find(|c| c.id == id)?;
    let start = Instant::now();
    let result = (c.run)(seed);
    let seconds = start.elapsed().as_secs_f64();
    let within_budget = seconds <= c.budget;
    Some(match result {
        Ok(m) => CriterionOutcome {
            id: c.id,
            name: c.name.to_string(),
            passed: m.ok && within_budget,
            measured: m.measured,
            tolerance: c.tolerance,
            seconds,
            budget_seconds: c.budget,
            details: m.details,
            error: (!within_budget).then(|| "time budget exceeded".to_string()),
        },
        Err(e) => CriterionOutcome {
            id: c.id,
            name: c.name.to_string(),
            passed: false,
            measured: f64::NAN,
            tolerance: c.tolerance,
            seconds,
            budget_seconds: c.budget,
            details: BTreeMap::new(),
            error: Some(e.to_string()),
        },
    })
}

/// Runs all criteria in order.
pub fn run_all(seed: u64) -> Vec<CriterionOutcome> {
    (1..=CRITERION_COUNT).filter_map(|id| run_criterion(id, seed)).collect()
}

fn constant_kernel(v: f64, cutoff: usize) -> Result<GreenKernel> {
    potential_kernel(Potential::constant(v), cutoff)
}

fn potential_kernel(v: Potential, cutoff: usize) -> Result<GreenKernel> {
    Ok(GreenKernel::new(Arc::new(CrossSectionSpectrum::new(2.0 * PI, &v, cutoff)?)))
}

fn disk(gk: &GreenKernel, radius: f64, n: usize) -> Result<Arc<crate::layerops::LayerOperatorSet>> {
    let curve = Curve::circle(Point::new(0.0, PI), radius, Side::Inside)?;
    operators_for(gk, &[curve], &Resolution { nodes: n, ..Resolution::default() })
}

/// Interior points of the disk of radius `reach` about `(0, pi)`.
fn disk_probes(count: usize, reach: f64) -> Vec<Point> {
    (0..count)
        .map(|k| {
            let r = reach * (0.2 + 0.8 * ((k % 5) as f64 + 0.5) / 5.0);
            let a = 2.0 * PI * k as f64 / count as f64 + 0.3;
            Point::new(r * a.cos(), PI + r * a.sin())
        })
        .collect()
}

/// Mode sum against the image sum of `K0` integrated numerically, `V = 1`.
fn kernel_oracle(seed: u64) -> Result<Measure> {
    let gk = constant_kernel(1.0, 32)?;
    let c = 2.0 * PI;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let images = oracle::images_for(1.0, c, 1e-18);
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    while pairs < 500 {
        let p = Point::new(rng.gen_range(-2.0..2.0), rng.gen_range(0.0..c));
        let q = Point::new(rng.gen_range(-2.0..2.0), rng.gen_range(0.0..c));
        let (dx, dt) = (p.x - q.x, reduce_periodic(p.theta - q.theta, c));
        if dx.hypot(dt) < 0.1 {
            continue;
        }
        let e = gk.eval(p, q)?;
        let o = oracle::image_sum_kernel(1.0, c, dx, dt, images);
        worst = worst.max((e - o).abs() / o.abs());
        pairs += 1;
    }
    Ok(Measure { ok: worst <= 1e-10, measured: worst, details: BTreeMap::from([("pairs".into(), pairs as f64)]) })
}

/// Offset-curve limits on the circle of radius 0.5, `V = 1 + cos(theta)`.
fn jump_relations(_seed: u64) -> Result<Measure> {
    // the variable-potential remainder converges slowly in the cutoff, and
    // offsets of 1e-3 resolve its truncation at cutoff 32
    let gk = potential_kernel(Potential { fourier_cos: vec![1.0, 1.0], fourier_sin: vec![] }, 128)?;
    let ops = disk(&gk, 0.5, 256)?;
    let f = Density::sample(&ops, |p| 1.0 + 0.5 * (2.0 * p.theta).sin() + 0.3 * (3.0 * p.x).cos());
    let targets: Vec<usize> = (0..ops.len()).step_by(ops.len() / 32).collect();
    let ts = [1.6e-2, 8e-3, 4e-3, 2e-3, 1e-3];
    let report = jump_check(&ops, &f, &ts, &targets)?;
    let mut details = BTreeMap::new();
    let mut worst: f64 = 0.0;
    let mut converging = true;
    for name in JUMP_RELATIONS {
        let entries = report.relation(name);
        let first = entries.first().expect("entries");
        let last = entries.last().expect("entries");
        details.insert(format!("{name}.error"), last.error);
        details.insert(format!("{name}.raw_error"), last.raw_error);
        if let Some(o) = last.order {
            details.insert(format!("{name}.order"), o);
        }
        worst = worst.max(last.error);
        // the raw limit error must decrease as t shrinks
        converging &= last.raw_error < first.raw_error || last.raw_error < 1e-10;
    }
    details.insert("converging".into(), if converging { 1.0 } else { 0.0 });
    Ok(Measure { ok: worst <= 1e-4 && converging, measured: worst, details })
}

fn random_series<T: taufamily::SeriesScalar>(
    rng: &mut ChaCha8Rng,
    a: f64,
    b: f64,
    degree: usize,
    draw: impl Fn(&mut ChaCha8Rng) -> T,
) -> ChebSeries<T> {
    let coeffs = (0..=degree).map(|k| draw(rng) * (1.0 / (1.0 + k as f64).powi(2))).collect();
    ChebSeries::new(a, b, coeffs)
}

/// Rellich and divergence identities for random Chebyshev series.
fn rellich(seed: u64) -> Result<Measure> {
    let domain = ArcDomain::new(
        2.0 * PI,
        Potential { fourier_cos: vec![1.0, 0.5], fourier_sin: vec![] },
        vec![(0.3, 2.5), (3.0, 5.5)],
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let mut us = Vec::new();
        let mut ws = Vec::new();
        for &(a, b) in domain.arcs() {
            us.push(random_series(&mut rng, a, b, 14, |r| Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))));
            ws.push(random_series(&mut rng, a, b, 10, |r| r.gen_range(-1.0..1.0)));
        }
        worst = worst.max(taufamily::rellich_check(&domain, &us, &ws)?.max_residual());
    }
    Ok(Measure { ok: worst <= 1e-8, measured: worst, details: BTreeMap::from([("pairs".into(), 50.0)]) })
}

/// Sup norms over `tau` in `[-20, 20]`, refined grid and doubled cutoff.
fn uniform_bounds(_seed: u64) -> Result<Measure> {
    let v = Potential::constant(1.0);
    let coarse = CrossSectionSpectrum::new(2.0 * PI, &v, 32)?;
    let fine = CrossSectionSpectrum::new(2.0 * PI, &v, 64)?;
    let domain = ArcDomain::from_spectrum(&coarse, vec![(0.0, PI)])?;
    let grid = |step: f64| -> Vec<f64> {
        let n = (20.0 / step).round() as i64;
        (-n..=n).map(|k| k as f64 * step).collect()
    };
    let a = taufamily::uniform_bound_sweep(&domain, &coarse, &grid(0.5))?;
    let b = taufamily::uniform_bound_sweep(&domain, &fine, &grid(0.25))?;
    let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs());
    let ds = rel(a.sup_norm_s_inv(), b.sup_norm_s_inv());
    let dk = rel(a.sup_norm_half_k_inv(), b.sup_norm_half_k_inv());
    let finite = a.sup_norm_s_inv().is_finite() && a.sup_norm_half_k_inv().is_finite();
    let measured = ds.max(dk);
    let details = BTreeMap::from([
        ("sup_norm_s_inv".into(), a.sup_norm_s_inv()),
        ("sup_norm_half_k_inv".into(), a.sup_norm_half_k_inv()),
        ("refined_sup_norm_s_inv".into(), b.sup_norm_s_inv()),
        ("refined_sup_norm_half_k_inv".into(), b.sup_norm_half_k_inv()),
    ]);
    Ok(Measure { ok: finite && measured <= 1e-2, measured, details })
}

/// Fourier transform of the assembled operators along the straight lines
/// `theta = 0` and `theta = 2` against the indicial family.
fn indicial(_seed: u64) -> Result<Measure> {
    let gk = constant_kernel(1.0, 32)?;
    let curves = [Curve::graph(0.0, None, Side::Above)?, Curve::graph(2.0, None, Side::Below)?];
    let ops = operators_for(&gk, &curves, &Resolution { half_length: 20.0, ..Resolution::default() })?;
    let ff = ops.far_field()?.expect("graph curves");
    let nodes = &ops.disc.nodes;
    let segs = &ops.disc.segments;
    let mut worst_k: f64 = 0.0;
    let mut worst_s: f64 = 0.0;
    for tau in [0.0, 1.0, 2.0] {
        let m = taufamily::tau_layer_matrices(&ff.domain, gk.spectrum(), tau);
        for (pi, seg_i) in ff.endpoint_segment.iter().enumerate() {
            let range = segs[*seg_i].range.clone();
            let i = range
                .clone()
                .min_by(|&a, &b| nodes[a].point.x.abs().total_cmp(&nodes[b].point.x.abs()))
                .expect("nodes");
            for (qi, seg_j) in ff.endpoint_segment.iter().enumerate() {
                let (mut kh, mut sh) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
                for j in segs[*seg_j].range.clone() {
                    let ph = Complex64::from_polar(1.0, tau * (nodes[j].point.x - nodes[i].point.x));
                    kh += ph * ops.k[(i, j)];
                    sh += ph * ops.s[(i, j)];
                }
                worst_k = worst_k.max((kh - m.k[(pi, qi)]).norm());
                worst_s = worst_s.max((sh - m.s[(pi, qi)]).norm());
            }
        }
    }
    let details = BTreeMap::from([("k_error".into(), worst_k), ("s_error".into(), worst_s)]);
    Ok(Measure { ok: worst_k <= 1e-6 && worst_s <= 1e-6, measured: worst_k.max(worst_s), details })
}

fn strip_probes() -> Vec<Point> {
    (0..20).map(|k| Point::new(-3.0 + 6.0 * (k as f64) / 19.0, 0.4 + (PI - 0.8) * ((k * 7 % 20) as f64) / 19.0)).collect()
}

/// Manufactured solution in a disk; strip mode by the Fourier and the
/// truncated dense paths.
fn dirichlet_solve(_seed: u64) -> Result<Measure> {
    let gk = constant_kernel(1.0, 32)?;
    let ops = disk(&gk, 0.5, 256)?;
    let p0 = Point::new(0.3, PI + 0.8);
    let f: Vec<f64> = ops.disc.nodes.iter().map(|n| gk.eval(n.point, p0)).collect::<Result<_>>()?;
    let sol = dirichlet::solve_dirichlet(&ops, &f)?;
    let mut disk_err: f64 = 0.0;
    for p in disk_probes(20, 0.4) {
        let exact = gk.eval(p, p0)?;
        disk_err = disk_err.max((sol.value(p)? - exact).abs() / exact.abs());
    }

    let spec = gk.spectrum_arc();
    let domain = ArcDomain::from_spectrum(&spec, vec![(0.0, PI)])?;
    let mode = StripMode { xi: 1.0, amplitudes: vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)] };
    let fourier = dirichlet::solve_strip_fourier(&domain, Arc::clone(&spec), &[mode])?;
    let curves = [Curve::graph(0.0, None, Side::Above)?, Curve::graph(PI, None, Side::Below)?];
    let strip = operators_for(&gk, &curves, &Resolution { half_length: 20.0, ..Resolution::default() })?;
    let data: Vec<f64> = strip.disc.nodes.iter().map(|n| if n.segment == 0 { n.point.x.cos() } else { 0.0 }).collect();
    let dense = dirichlet::solve_dirichlet(&strip, &data)?;
    let (mut fourier_err, mut dense_err): (f64, f64) = (0.0, 0.0);
    for p in strip_probes() {
        let exact = oracle::strip_mode_solution(1.0, p.x, p.theta);
        fourier_err = fourier_err.max((fourier.value(p)? - exact).abs());
        dense_err = dense_err.max((dense.value(p)? - exact).abs());
    }
    let details = BTreeMap::from([
        ("disk_relative_error".into(), disk_err),
        ("strip_fourier_error".into(), fourier_err),
        ("strip_dense_error".into(), dense_err),
        ("disk_condition".into(), sol.condition),
        ("strip_condition".into(), dense.condition),
    ]);
    let ok = disk_err <= 1e-6 && fourier_err <= 1e-8 && dense_err <= 1e-4;
    Ok(Measure { ok, measured: disk_err, details })
}

/// Condition numbers of `-1/2 I + K` on the strip with a bump, for growing
/// truncation.
fn truncation_stability(_seed: u64) -> Result<Measure> {
    let gk = constant_kernel(1.0, 32)?;
    let bump = Bump { center: 0.0, width: 1.5, amplitude: 0.45 };
    let curves = [Curve::graph(0.0, Some(bump), Side::Above)?, Curve::graph(PI, None, Side::Below)?];
    let mut details = BTreeMap::new();
    let mut conds = Vec::new();
    for l in [10.0, 15.0, 20.0, 25.0] {
        let ops = operators_for(&gk, &curves, &Resolution { half_length: l, ..Resolution::default() })?;
        let n = ops.len();
        let a = nalgebra::DMatrix::identity(n, n) * -0.5 + &ops.k;
        let cond = linalg::condition_number(&a);
        details.insert(format!("cond_L{l}"), cond);
        conds.push(cond);
    }
    let max = conds.iter().cloned().fold(0.0, f64::max);
    let min = conds.iter().cloned().fold(f64::INFINITY, f64::min);
    details.insert("max_over_min".into(), max / min);
    Ok(Measure { ok: max < 1e6 && max / min <= 2.0, measured: max, details })
}

/// DtN matrix against offset extraction, the strip symbol, and positivity.
fn dtn_map(seed: u64) -> Result<Measure> {
    let gk = constant_kernel(1.0, 32)?;
    let ops = disk(&gk, 0.5, 256)?;
    let p0 = Point::new(0.3, PI + 0.8);
    let f: Vec<f64> = ops.disc.nodes.iter().map(|n| gk.eval(n.point, p0)).collect::<Result<_>>()?;
    let rep = dirichlet::dtn(&ops)?;
    let nf = &rep.matrix * DVector::from_column_slice(&f);
    let sol = dirichlet::solve_dirichlet(&ops, &f)?;
    let mut extraction: f64 = 0.0;
    for i in (0..ops.len()).step_by(8) {
        let d = sol.normal_derivative_by_offsets(i, 0.01)?;
        extraction = extraction.max((d - nf[i]).abs());
    }
    let extraction = extraction / nf.amax();

    let spec = gk.spectrum_arc();
    let domain = ArcDomain::from_spectrum(&spec, vec![(0.0, PI)])?;
    let mut symbol: f64 = 0.0;
    for xi in [0.0, 0.5, 1.0, 2.0, 4.0] {
        let n = taufamily::layer_dtn(&domain, &spec, xi)?;
        let exact = oracle::strip_dtn_symbol(xi);
        symbol = symbol.max((n[(0, 0)] - exact).abs() / exact);
    }
    let forms = rep.random_forms(seed, 100);
    let min_form = forms.iter().cloned().fold(f64::INFINITY, f64::min);
    let details = BTreeMap::from([
        ("extraction_error".into(), extraction),
        ("symbol_error".into(), symbol),
        ("min_random_form".into(), min_form),
        ("min_form".into(), rep.min_form),
        ("symmetry_residual".into(), rep.symmetry_residual),
    ]);
    let ok = extraction <= 1e-4 && symbol <= 1e-6 && min_form >= -1e-8;
    Ok(Measure { ok, measured: extraction, details })
}

/// Single-layer and double-layer representations, and Green's formula.
fn representations(_seed: u64) -> Result<Measure> {
    let gk = constant_kernel(1.0, 32)?;
    let ops = disk(&gk, 0.5, 256)?;
    let f: Vec<f64> = ops.disc.nodes.iter().map(|n| n.point.x.exp() * (2.0 * n.point.theta).sin() + 0.5).collect();
    let d = dirichlet::solve_dirichlet(&ops, &f)?;
    let s = dirichlet::ssinv_solve(&ops, &f)?;
    let neumann = dirichlet::neumann_data(&ops, &f)?;
    let probes = disk_probes(20, 0.4);
    let mut scale: f64 = 0.0;
    let (mut rep_err, mut green_err): (f64, f64) = (0.0, 0.0);
    for &p in &probes {
        let ud = d.value(p)?;
        scale = scale.max(ud.abs());
        rep_err = rep_err.max((ud - s.value(p)?).abs());
        green_err = green_err.max((dirichlet::green_closure(&d, &neumann, p)? - ud).abs());
    }
    let (rep_err, green_err) = (rep_err / scale, green_err / scale);
    let details = BTreeMap::from([("representation_error".into(), rep_err), ("green_closure_error".into(), green_err)]);
    Ok(Measure { ok: rep_err <= 1e-5 && green_err <= 1e-4, measured: rep_err, details })
}

/// `u = psi + E(., p0)` in the disk of radius 1.2 with source `(Delta + V) psi`.
fn wellposedness(_seed: u64) -> Result<Measure> {
    let gk = constant_kernel(1.0, 32)?;
    let ops = disk(&gk, 1.2, 256)?;
    let bump = SeparableBump { center: Point::new(0.0, PI), half_width: 0.45, power: 8, amplitude: 1.0 };
    let src = BumpSource { bump, spectrum: gk.spectrum_arc() };
    let p0 = Point::new(1.0, PI + 1.5);
    let f: Vec<f64> = ops.disc.nodes.iter().map(|n| gk.eval(n.point, p0)).collect::<Result<_>>()?;
    let sol = dirichlet::wellposedness_solve(&ops, &gk, &src, &f)?;
    let mut scale: f64 = 0.0;
    let mut err: f64 = 0.0;
    for p in disk_probes(20, 0.9) {
        let exact = bump.value(p, 2.0 * PI) + gk.eval(p, p0)?;
        scale = scale.max(exact.abs());
        err = err.max((sol.value(p)? - exact).abs());
    }
    let err = err / scale;
    Ok(Measure { ok: err <= 1e-4, measured: err, details: BTreeMap::from([("condition".into(), sol.boundary.condition)]) })
}
