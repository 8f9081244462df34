//! Layer potentials of `A + tau^2` on a union of arcs of the cross-section.
//!
//! The boundary of a union of arcs is a finite point set, so the single and
//! double layer "integrals" are finite sums over the endpoints (counting
//! measure). Endpoint `p` carries the outward normal `nu_p = -1` at the left
//! end of an arc and `+1` at the right end. With `g_tau` the Green's function
//! of `-d^2/dtheta^2 + W + tau^2` on the circle,
//!
//! ```text
//! S_tau[p][q] = g_tau(theta_p, theta_q)
//! K_tau[p][q] = nu_q d/dtheta' g_tau(theta_p, theta_q)   (diagonal: mean of one-sided limits)
//! K*_tau      = K_tau^T
//! ```
//!
//! Traces from inside the arcs: `D f -> (-1/2 I + K) f` and
//! `d_nu S f -> (1/2 I + K*) f`.
//!
//! Also provided: a Chebyshev collocation solver for the two-point problem
//! (the independent oracle), the one-dimensional Rellich and divergence
//! identities, the boundary estimate suite and the uniform bound sweep.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::Potential;
use crate::quadrature::{clenshaw_curtis, gauss_legendre};
use crate::spectrum::CrossSectionSpectrum;

/// Number of Chebyshev intervals of the oracle (256 points).
pub const ORACLE_INTERVALS: usize = 255;

/// Condition limit beyond which `1/2 I + K_tau` counts as singular.
pub const SINGULAR_FAMILY_LIMIT: f64 = 1e12;

/// Condition limit for the collocation matrix of the oracle.
const ORACLE_CONDITION_LIMIT: f64 = 1e14;

/// `epsilon` used for the realized constant of the epsilon-weighted
/// trace estimate.
pub const ESTIMATE_EPSILON: f64 = 0.1;

/// Quadrature points per arc in the identity checks.
const IDENTITY_POINTS: usize = 256;

/// Union of disjoint open arcs of the circle, with the potential `W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcDomain {
    circumference: f64,
    potential: Potential,
    arcs: Vec<(f64, f64)>,
}

/// Endpoint of an arc with its outward normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Endpoint {
    pub theta: f64,
    /// `+1` or `-1`, pointing out of the arc.
    pub normal: f64,
    pub arc: usize,
}

impl ArcDomain {
    /// Arcs `(a, b)` with `a < b`, lengths below `circumference`, pairwise
    /// disjoint modulo `circumference` including their endpoints.
    pub fn new(circumference: f64, potential: Potential, arcs: Vec<(f64, f64)>) -> Result<Self> {
        if !(circumference > 0.0 && circumference.is_finite()) {
            return Err(Error::InvalidInput(format!("circumference {circumference} must be positive")));
        }
        if arcs.is_empty() {
            return Err(Error::InvalidInput("arc domain needs at least one arc".into()));
        }
        for &(a, b) in &arcs {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidInput(format!("arc ({a}, {b}) is not an open interval")));
            }
            if b - a >= circumference {
                return Err(Error::InvalidInput(format!("arc ({a}, {b}) wraps the whole circle")));
            }
        }
        let mut spans: Vec<(f64, f64)> = arcs
            .iter()
            .map(|&(a, b)| {
                let s = a.rem_euclid(circumference);
                (s, s + (b - a))
            })
            .collect();
        spans.sort_by(|x, y| x.0.total_cmp(&y.0));
        for i in 0..spans.len() {
            let next = if i + 1 < spans.len() { spans[i + 1].0 } else { spans[0].0 + circumference };
            if spans.len() > 1 && spans[i].1 >= next {
                return Err(Error::InvalidInput("arcs overlap or share an endpoint".into()));
            }
        }
        let (min, theta) = potential.minimum(circumference);
        if min < -1e-12 {
            return Err(Error::NegativePotential { min, theta });
        }
        Ok(ArcDomain { circumference, potential, arcs })
    }

    /// Arc domain on the circle of `spectrum`, with its potential.
    pub fn from_spectrum(spectrum: &CrossSectionSpectrum, arcs: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(spectrum.circumference(), spectrum.potential().clone(), arcs)
    }

    pub fn circumference(&self) -> f64 {
        self.circumference
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn arcs(&self) -> &[(f64, f64)] {
        &self.arcs
    }

    /// `W` at `theta`.
    pub fn potential_at(&self, theta: f64) -> f64 {
        self.potential.value(theta, self.circumference)
    }

    /// Endpoints ordered `[a_0, b_0, a_1, b_1, ...]`.
    pub fn endpoints(&self) -> Vec<Endpoint> {
        self.arcs
            .iter()
            .enumerate()
            .flat_map(|(k, &(a, b))| {
                [Endpoint { theta: a, normal: -1.0, arc: k }, Endpoint { theta: b, normal: 1.0, arc: k }]
            })
            .collect()
    }

    /// Number of boundary points, twice the number of arcs.
    pub fn boundary_len(&self) -> usize {
        2 * self.arcs.len()
    }

    /// Index of the arc containing `theta` (modulo the circumference).
    pub fn arc_containing(&self, theta: f64) -> Option<usize> {
        let c = self.circumference;
        self.arcs.iter().position(|&(a, b)| {
            let t = a + (theta - a).rem_euclid(c);
            t > a && t < b
        })
    }

    fn compatible(&self, spectrum: &CrossSectionSpectrum) -> bool {
        (self.circumference - spectrum.circumference()).abs() <= 1e-12 * self.circumference
            && &self.potential == spectrum.potential()
    }
}

/// `S_tau`, `K_tau` and `K*_tau` on the endpoint set.
#[derive(Debug, Clone)]
pub struct TauLayerMatrices {
    pub tau: f64,
    pub s: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub kstar: DMatrix<f64>,
}

/// Assembles the layer matrices at `tau`. The spectrum must belong to the
/// same circle and potential as the domain.
pub fn tau_layer_matrices(domain: &ArcDomain, spectrum: &CrossSectionSpectrum, tau: f64) -> TauLayerMatrices {
    debug_assert!(domain.compatible(spectrum));
    let ends = domain.endpoints();
    let n = ends.len();
    let mut s = DMatrix::zeros(n, n);
    let mut k = DMatrix::zeros(n, n);
    for p in 0..n {
        for q in 0..n {
            let (tp, tq) = (ends[p].theta, ends[q].theta);
            s[(p, q)] = spectrum.circle_green(tau, tp, tq);
            k[(p, q)] = ends[q].normal * spectrum.circle_green_source_derivative(tau, tp, tq, 0.0);
        }
    }
    // exact symmetry of S; rounding in the remainder sum can break it
    let s = (&s + s.transpose()) * 0.5;
    let kstar = k.transpose();
    TauLayerMatrices { tau, s, k, kstar }
}

/// Single layer `sum_q g_tau(theta, theta_q) f_q`.
pub fn single_layer(domain: &ArcDomain, spectrum: &CrossSectionSpectrum, tau: f64, density: &[f64], theta: f64) -> f64 {
    domain
        .endpoints()
        .iter()
        .zip(density)
        .map(|(e, f)| spectrum.circle_green(tau, theta, e.theta) * f)
        .sum()
}

/// `d/dtheta` of the single layer at `theta`. At an endpoint, `side > 0`
/// takes the limit from larger angles and `side < 0` from smaller ones.
pub fn single_layer_derivative(
    domain: &ArcDomain,
    spectrum: &CrossSectionSpectrum,
    tau: f64,
    density: &[f64],
    theta: f64,
    side: f64,
) -> f64 {
    // d/dtheta g(theta, q) = d/dq g(q, theta) by symmetry; the separation
    // q - theta approaches zero from the side opposite to `side`
    domain
        .endpoints()
        .iter()
        .zip(density)
        .map(|(e, f)| spectrum.circle_green_source_derivative(tau, e.theta, theta, -side) * f)
        .sum()
}

/// Double layer `sum_q nu_q d/dtheta' g_tau(theta, theta_q) f_q`, with the
/// same `side` convention as [`single_layer_derivative`].
pub fn double_layer(
    domain: &ArcDomain,
    spectrum: &CrossSectionSpectrum,
    tau: f64,
    density: &[f64],
    theta: f64,
    side: f64,
) -> f64 {
    domain
        .endpoints()
        .iter()
        .zip(density)
        .map(|(e, f)| e.normal * spectrum.circle_green_source_derivative(tau, theta, e.theta, side) * f)
        .sum()
}

/// Dirichlet-to-Neumann matrix `(1/2 I + K*) S^{-1}` from the layer matrices.
pub fn layer_dtn(domain: &ArcDomain, spectrum: &CrossSectionSpectrum, tau: f64) -> Result<DMatrix<f64>> {
    let m = tau_layer_matrices(domain, spectrum, tau);
    let n = m.s.nrows();
    let half = DMatrix::identity(n, n) * 0.5 + &m.kstar;
    let sinv = linalg::lu_solve(&m.s, &DMatrix::identity(n, n))?;
    Ok(half * sinv)
}

/// Chebyshev differentiation matrix for ascending Lobatto points on `[-1, 1]`.
fn cheb_lobatto(n: usize) -> (Vec<f64>, DMatrix<f64>) {
    use std::f64::consts::PI;
    let nf = n as f64;
    let x: Vec<f64> = (0..=n).map(|j| (PI * (2.0 * j as f64 - nf) / (2.0 * nf)).sin()).collect();
    let w: Vec<f64> = (0..=n)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n {
                0.5 * s
            } else {
                s
            }
        })
        .collect();
    let mut d = DMatrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        let mut diag = 0.0;
        for j in 0..=n {
            if i == j {
                continue;
            }
            // x_i - x_j without cancellation
            let dx = 2.0 * (PI * (i + j) as f64 / (2.0 * nf) - PI / 2.0).cos() * (PI * (i as f64 - j as f64) / (2.0 * nf)).sin();
            let v = (w[j] / w[i]) / dx;
            d[(i, j)] = v;
            diag -= v;
        }
        d[(i, i)] = diag;
    }
    (x, d)
}

/// Samples of the oracle solution on one arc.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArcSamples {
    pub a: f64,
    pub b: f64,
    /// Chebyshev-Lobatto points, ascending.
    pub nodes: Vec<f64>,
    pub values: Vec<Complex64>,
    pub derivatives: Vec<Complex64>,
    /// Clenshaw-Curtis weights on `[a, b]`.
    pub weights: Vec<f64>,
}

impl ArcSamples {
    /// Barycentric interpolation of the solution at `theta` in `[a, b]`.
    pub fn value_at(&self, theta: f64) -> Complex64 {
        let n = self.nodes.len() - 1;
        let (mut num, mut den) = (Complex64::new(0.0, 0.0), 0.0);
        for j in 0..=n {
            let d = theta - self.nodes[j];
            if d == 0.0 {
                return self.values[j];
            }
            let mut wj = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n {
                wj *= 0.5;
            }
            let t = wj / d;
            num += self.values[j] * t;
            den += t;
        }
        num / den
    }
}

/// Oracle solution of the two-point problem on every arc.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArcSolution {
    pub tau: f64,
    pub arcs: Vec<ArcSamples>,
    /// Boundary values in endpoint order.
    pub boundary_values: Vec<Complex64>,
    /// Outward normal derivatives in endpoint order.
    pub normal_derivatives: Vec<Complex64>,
    /// Largest collocation residual `|-u'' + (tau^2 + W) u|` at interior nodes.
    pub residual: f64,
}

impl ArcSolution {
    /// Interpolated value at `theta`, `None` outside the domain.
    pub fn value_at(&self, domain: &ArcDomain, theta: f64) -> Option<Complex64> {
        let k = domain.arc_containing(theta)?;
        let s = &self.arcs[k];
        let t = s.a + (theta - s.a).rem_euclid(domain.circumference());
        Some(s.value_at(t))
    }
}

struct ArcFactor {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    d1: DMatrix<f64>,
    d2: DMatrix<f64>,
    coef: Vec<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

/// Factored Chebyshev collocation of `-u'' + (tau^2 + W) u = 0` with Dirichlet
/// data, reusable across boundary data.
pub struct ArcOracle {
    tau: f64,
    factors: Vec<ArcFactor>,
}

impl ArcOracle {
    /// Builds and factors the collocation matrices at `tau`.
    pub fn new(domain: &ArcDomain, tau: f64) -> Result<Self> {
        if !tau.is_finite() {
            return Err(Error::InvalidInput(format!("tau {tau} is not finite")));
        }
        let n = ORACLE_INTERVALS;
        let (x, dx) = cheb_lobatto(n);
        let (_, cc) = clenshaw_curtis(n);
        let mut factors = Vec::with_capacity(domain.arcs().len());
        for &(a, b) in domain.arcs() {
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            let nodes: Vec<f64> = x.iter().map(|&t| mid + half * t).collect();
            let d1 = &dx / half;
            let d2 = &d1 * &d1;
            let coef: Vec<f64> = nodes.iter().map(|&t| tau * tau + domain.potential_at(t)).collect();
            let mut m = -&d2;
            for i in 0..=n {
                m[(i, i)] += coef[i];
            }
            for row in [0, n] {
                m.row_mut(row).fill(0.0);
                m[(row, row)] = 1.0;
            }
            let cond = linalg::condition_number(&m);
            if !(cond < ORACLE_CONDITION_LIMIT) {
                return Err(Error::SolveFailure(format!(
                    "collocation matrix on arc ({a}, {b}) is numerically singular (condition {cond:.3e})"
                )));
            }
            let weights = cc.iter().map(|w| w * half).collect();
            factors.push(ArcFactor { nodes, weights, d1, d2, coef, lu: m.lu() });
        }
        Ok(ArcOracle { tau, factors })
    }

    /// Solves with boundary values in endpoint order.
    pub fn solve(&self, boundary_values: &[Complex64]) -> Result<ArcSolution> {
        if boundary_values.len() != 2 * self.factors.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} boundary values, got {}",
                2 * self.factors.len(),
                boundary_values.len()
            )));
        }
        let n = ORACLE_INTERVALS;
        let mut arcs = Vec::with_capacity(self.factors.len());
        let mut normal_derivatives = Vec::with_capacity(boundary_values.len());
        let mut residual: f64 = 0.0;
        for (k, f) in self.factors.iter().enumerate() {
            let (ua, ub) = (boundary_values[2 * k], boundary_values[2 * k + 1]);
            let mut rhs = DMatrix::zeros(n + 1, 2);
            rhs[(0, 0)] = ua.re;
            rhs[(0, 1)] = ua.im;
            rhs[(n, 0)] = ub.re;
            rhs[(n, 1)] = ub.im;
            let sol = f
                .lu
                .solve(&rhs)
                .ok_or_else(|| Error::SolveFailure("collocation matrix is singular".into()))?;
            let du = &f.d1 * &sol;
            let ddu = &f.d2 * &sol;
            for i in 1..n {
                let r = |c: usize| -ddu[(i, c)] + f.coef[i] * sol[(i, c)];
                residual = residual.max(r(0).hypot(r(1)));
            }
            let values: Vec<Complex64> = (0..=n).map(|i| Complex64::new(sol[(i, 0)], sol[(i, 1)])).collect();
            let derivatives: Vec<Complex64> = (0..=n).map(|i| Complex64::new(du[(i, 0)], du[(i, 1)])).collect();
            normal_derivatives.push(-derivatives[0]);
            normal_derivatives.push(derivatives[n]);
            arcs.push(ArcSamples {
                a: f.nodes[0],
                b: f.nodes[n],
                nodes: f.nodes.clone(),
                values,
                derivatives,
                weights: f.weights.clone(),
            });
        }
        Ok(ArcSolution { tau: self.tau, arcs, boundary_values: boundary_values.to_vec(), normal_derivatives, residual })
    }

    /// Dirichlet-to-Neumann matrix of the oracle, in endpoint order.
    pub fn dtn(&self) -> Result<DMatrix<f64>> {
        let m = 2 * self.factors.len();
        let mut out = DMatrix::zeros(m, m);
        for j in 0..m {
            let mut data = vec![Complex64::new(0.0, 0.0); m];
            data[j] = Complex64::new(1.0, 0.0);
            let sol = self.solve(&data)?;
            for i in 0..m {
                out[(i, j)] = sol.normal_derivatives[i].re;
            }
        }
        Ok(out)
    }
}

/// Solves `-u'' + (tau^2 + W) u = 0` on every arc with the given endpoint
/// values by Chebyshev collocation at 256 points per arc.
pub fn solve_arc_dirichlet_oracle(domain: &ArcDomain, tau: f64, boundary_values: &[Complex64]) -> Result<ArcSolution> {
    ArcOracle::new(domain, tau)?.solve(boundary_values)
}

/// Values a scalar Chebyshev series may carry.
pub trait SeriesScalar: Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}
impl SeriesScalar for f64 {}
impl SeriesScalar for Complex64 {}

/// Chebyshev series `sum_k c_k T_k(s)` on `[a, b]`, `s` the affine image of `theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebSeries<T> {
    pub a: f64,
    pub b: f64,
    pub coeffs: Vec<T>,
}

impl<T: SeriesScalar> ChebSeries<T> {
    pub fn new(a: f64, b: f64, coeffs: Vec<T>) -> Self {
        ChebSeries { a, b, coeffs }
    }

    /// Interpolant of `f` at `n + 1` Chebyshev-Lobatto points.
    pub fn interpolate(a: f64, b: f64, n: usize, f: impl Fn(f64) -> T) -> Self {
        use std::f64::consts::PI;
        let nf = n as f64;
        let vals: Vec<T> = (0..=n)
            .map(|j| f(0.5 * (a + b) + 0.5 * (b - a) * (PI * j as f64 / nf).cos()))
            .collect();
        let mut coeffs = vec![T::default(); n + 1];
        for (k, ck) in coeffs.iter_mut().enumerate() {
            let mut acc = T::default();
            for (j, &v) in vals.iter().enumerate() {
                let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                acc = acc + v * (w * (PI * (k * j) as f64 / nf).cos());
            }
            let scale = if k == 0 || k == n { 1.0 / nf } else { 2.0 / nf };
            *ck = acc * scale;
        }
        ChebSeries { a, b, coeffs }
    }

    fn local(&self, theta: f64) -> f64 {
        (2.0 * theta - self.a - self.b) / (self.b - self.a)
    }

    /// Clenshaw evaluation at `theta`.
    pub fn eval(&self, theta: f64) -> T {
        let s = self.local(theta);
        let (mut b1, mut b2) = (T::default(), T::default());
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = c + b1 * (2.0 * s) - b2;
            b2 = b1;
            b1 = b0;
        }
        match self.coeffs.first() {
            Some(&c0) => c0 + b1 * s - b2,
            None => T::default(),
        }
    }

    /// Series of `d/dtheta`.
    pub fn derivative(&self) -> Self {
        let n = self.coeffs.len();
        if n <= 1 {
            return ChebSeries { a: self.a, b: self.b, coeffs: vec![T::default()] };
        }
        let mut d = vec![T::default(); n + 1];
        for k in (1..n).rev() {
            d[k - 1] = d[k + 1] + self.coeffs[k] * (2.0 * k as f64);
        }
        d.truncate(n - 1);
        d[0] = d[0] * 0.5;
        let scale = 2.0 / (self.b - self.a);
        ChebSeries { a: self.a, b: self.b, coeffs: d.into_iter().map(|c| c * scale).collect() }
    }
}

/// Both sides of one identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentitySides {
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs - rhs| / max(1, |lhs|, |rhs|)`.
    pub residual: f64,
}

impl IdentitySides {
    fn new(lhs: f64, rhs: f64) -> Self {
        let residual = (lhs - rhs).abs() / 1f64.max(lhs.abs()).max(rhs.abs());
        IdentitySides { lhs, rhs, residual }
    }
}

/// Rellich and divergence identities on an arc domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RellichReport {
    pub rellich: IdentitySides,
    pub divergence: IdentitySides,
}

impl RellichReport {
    pub fn max_residual(&self) -> f64 {
        self.rellich.residual.max(self.divergence.residual)
    }
}

/// Evaluates both identities in one dimension for `u` (complex) and the
/// vector field `w d/dtheta`, one series per arc:
///
/// ```text
/// sum_dOmega <w,nu> |u'|^2  (with sign -1)    = -2 Re int w conj(u') u'' - int w' |u'|^2
/// sum_dOmega <w,nu> |u|^2                     =  Re int (2 w u conj(u') + w' |u|^2)
/// ```
///
/// Boundary sides come from the series endpoints, volume sides from
/// 256-point Gauss-Legendre quadrature.
pub fn rellich_check(domain: &ArcDomain, u: &[ChebSeries<Complex64>], w: &[ChebSeries<f64>]) -> Result<RellichReport> {
    let m = domain.arcs().len();
    if u.len() != m || w.len() != m {
        return Err(Error::InvalidInput(format!("need one series of u and w per arc ({m})")));
    }
    let (gx, gw) = gauss_legendre(IDENTITY_POINTS);
    let (mut r_lhs, mut r_rhs, mut d_lhs, mut d_rhs) = (0.0, 0.0, 0.0, 0.0);
    for (k, &(a, b)) in domain.arcs().iter().enumerate() {
        let (us, ws) = (&u[k], &w[k]);
        if (us.a - a).abs() > 1e-12 || (us.b - b).abs() > 1e-12 || (ws.a - a).abs() > 1e-12 || (ws.b - b).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("series {k} is not defined on arc ({a}, {b})")));
        }
        let du = us.derivative();
        let ddu = du.derivative();
        let dw = ws.derivative();
        // <w, nu> is -w(a) at the left end and w(b) at the right end
        r_lhs += -(ws.eval(b) * du.eval(b).norm_sqr()) + ws.eval(a) * du.eval(a).norm_sqr();
        d_lhs += ws.eval(b) * us.eval(b).norm_sqr() - ws.eval(a) * us.eval(a).norm_sqr();
        let half = 0.5 * (b - a);
        for (x, qw) in gx.iter().zip(&gw) {
            let t = 0.5 * (a + b) + half * x;
            let weight = qw * half;
            let (uv, d1, d2) = (us.eval(t), du.eval(t), ddu.eval(t));
            let (wv, dwv) = (ws.eval(t), dw.eval(t));
            r_rhs += weight * (-2.0 * wv * (d1.conj() * d2).re - dwv * d1.norm_sqr());
            d_rhs += weight * (2.0 * wv * (uv * d1.conj()).re + dwv * uv.norm_sqr());
        }
    }
    Ok(RellichReport { rellich: IdentitySides::new(r_lhs, r_rhs), divergence: IdentitySides::new(d_lhs, d_rhs) })
}

/// Ratio of the two sides of an inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum RealizedConstant {
    Value(f64),
    /// Both sides vanish.
    Degenerate,
}

impl RealizedConstant {
    fn ratio(lhs: f64, rhs: f64) -> Self {
        if lhs.abs() <= f64::MIN_POSITIVE && rhs.abs() <= f64::MIN_POSITIVE {
            RealizedConstant::Degenerate
        } else if rhs <= 0.0 {
            RealizedConstant::Value(f64::INFINITY)
        } else {
            RealizedConstant::Value(lhs / rhs)
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            RealizedConstant::Value(v) => Some(*v),
            RealizedConstant::Degenerate => None,
        }
    }
}

/// Family-wide bounds the realized constants are compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateBounds {
    /// `sum |d_nu u|^2 <= C sum (1 + tau^2) |u|^2`.
    pub neumann_by_dirichlet: f64,
    /// `sum tau^2 |u|^2 <= C sum |d_nu u|^2 + eps sum |u|^2`.
    pub tau_trace: f64,
    /// `sum (1 + tau^2) |u|^2 <= C sum |d_nu u|^2`.
    pub dirichlet_by_neumann: f64,
    /// `int |u|^2 <= C int (|u'|^2 + W |u|^2)`; absent when `W` vanishes somewhere on the arcs.
    pub poincare: Option<f64>,
}

/// Realized constants and the energy estimate for one oracle solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub tau: f64,
    pub neumann_by_dirichlet: RealizedConstant,
    pub tau_trace: RealizedConstant,
    pub dirichlet_by_neumann: RealizedConstant,
    pub poincare: RealizedConstant,
    /// `int (|u'|^2 + tau^2 |u|^2 + W |u|^2)`.
    pub energy: f64,
    /// `sum |u| |d_nu u|`.
    pub energy_bound: f64,
    pub energy_slack: f64,
    /// Names of the inequalities whose realized constant exceeds its bound.
    pub violations: Vec<String>,
}

/// Realized constants of the boundary estimates for an oracle solution.
pub fn estimate_suite(domain: &ArcDomain, u: &ArcSolution, bounds: Option<&EstimateBounds>) -> EstimateReport {
    let tau = u.tau;
    let t2 = tau * tau;
    let trace: f64 = u.boundary_values.iter().map(|v| v.norm_sqr()).sum();
    let flux: f64 = u.normal_derivatives.iter().map(|v| v.norm_sqr()).sum();
    let mixed: f64 = u.boundary_values.iter().zip(&u.normal_derivatives).map(|(a, b)| a.norm() * b.norm()).sum();
    let (mut grad, mut mass, mut weighted) = (0.0, 0.0, 0.0);
    for s in &u.arcs {
        for i in 0..s.nodes.len() {
            let w = s.weights[i];
            grad += w * s.derivatives[i].norm_sqr();
            mass += w * s.values[i].norm_sqr();
            weighted += w * domain.potential_at(s.nodes[i]) * s.values[i].norm_sqr();
        }
    }
    let energy = grad + t2 * mass + weighted;
    let c4 = RealizedConstant::ratio(flux, (1.0 + t2) * trace);
    let c5 = RealizedConstant::ratio(((t2 - ESTIMATE_EPSILON) * trace).max(0.0), flux);
    let c6 = RealizedConstant::ratio((1.0 + t2) * trace, flux);
    let c17 = RealizedConstant::ratio(mass, grad + weighted);
    let mut violations = Vec::new();
    if let Some(b) = bounds {
        let slack = 1.0 + 1e-8;
        let mut check = |name: &str, c: RealizedConstant, bound: Option<f64>| {
            if let (Some(v), Some(bd)) = (c.value(), bound) {
                if v > bd * slack + 1e-14 {
                    violations.push(name.to_string());
                }
            }
        };
        check("neumann_by_dirichlet", c4, Some(b.neumann_by_dirichlet));
        check("tau_trace", c5, Some(b.tau_trace));
        check("dirichlet_by_neumann", c6, Some(b.dirichlet_by_neumann));
        check("poincare", c17, b.poincare);
    }
    EstimateReport {
        tau,
        neumann_by_dirichlet: c4,
        tau_trace: c5,
        dirichlet_by_neumann: c6,
        poincare: c17,
        energy,
        energy_bound: mixed,
        energy_slack: mixed - energy,
        violations,
    }
}

/// Sharp per-`tau` constants from the singular values of the oracle DtN matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauConstants {
    pub neumann_by_dirichlet: f64,
    pub tau_trace: f64,
    pub dirichlet_by_neumann: f64,
}

/// Constants at `tau` from the oracle Dirichlet-to-Neumann matrix.
pub fn tau_constants(domain: &ArcDomain, tau: f64) -> Result<TauConstants> {
    let dtn = ArcOracle::new(domain, tau)?.dtn()?;
    let e = linalg::extreme_singular_values(&dtn);
    let t2 = tau * tau;
    Ok(TauConstants {
        neumann_by_dirichlet: e.max * e.max / (1.0 + t2),
        tau_trace: (t2 - ESTIMATE_EPSILON).max(0.0) / (e.min * e.min),
        dirichlet_by_neumann: (1.0 + t2) / (e.min * e.min),
    })
}

/// Suprema of [`tau_constants`] over `taus`.
pub fn family_bounds(domain: &ArcDomain, taus: &[f64]) -> Result<EstimateBounds> {
    let per: Vec<TauConstants> = taus.par_iter().map(|&t| tau_constants(domain, t)).collect::<Result<_>>()?;
    let sup = |f: fn(&TauConstants) -> f64| per.iter().map(f).fold(0.0, f64::max);
    let min_w = domain
        .arcs()
        .iter()
        .flat_map(|&(a, b)| (0..=512).map(move |i| a + (b - a) * i as f64 / 512.0))
        .map(|t| domain.potential_at(t))
        .fold(f64::INFINITY, f64::min);
    Ok(EstimateBounds {
        neumann_by_dirichlet: sup(|c| c.neumann_by_dirichlet),
        tau_trace: sup(|c| c.tau_trace),
        dirichlet_by_neumann: sup(|c| c.dirichlet_by_neumann),
        poincare: (min_w > 0.0).then(|| 1.0 / min_w),
    })
}

/// Per-`tau` entry of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauRecord {
    pub tau: f64,
    /// `sup ||S^{-1} f|| / ||f||_{H^1_tau}`, with `||f||_{H^1_tau} = (1 + |tau|) ||f||`.
    pub norm_s_inv: f64,
    pub norm_half_k_inv: f64,
    pub cond_s: f64,
    pub cond_half_k: f64,
    pub constants: TauConstants,
    pub s: Vec<Vec<f64>>,
    pub k: Vec<Vec<f64>>,
}

/// Inverse norms and estimate constants across a `tau` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauFamilyReport {
    pub tau_grid: Vec<f64>,
    pub records: Vec<TauRecord>,
}

impl TauFamilyReport {
    pub fn sup_norm_s_inv(&self) -> f64 {
        self.records.iter().map(|r| r.norm_s_inv).fold(0.0, f64::max)
    }

    pub fn sup_norm_half_k_inv(&self) -> f64 {
        self.records.iter().map(|r| r.norm_half_k_inv).fold(0.0, f64::max)
    }

    /// CSV rows `tau,norm_S_inv,norm_halfK_inv,cond_S,cond_halfK`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("tau,norm_S_inv,norm_halfK_inv,cond_S,cond_halfK\n");
        for r in &self.records {
            s.push_str(&format!("{},{},{},{},{}\n", r.tau, r.norm_s_inv, r.norm_half_k_inv, r.cond_s, r.cond_half_k));
        }
        s
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn check_grid(taus: &[f64]) -> Result<()> {
    if taus.is_empty() {
        return Err(Error::InvalidInput("empty tau grid".into()));
    }
    if let Some(t) = taus.iter().find(|t| !t.is_finite()) {
        return Err(Error::InvalidInput(format!("tau grid contains {t}")));
    }
    for &t in taus {
        let tol = 1e-12 * t.abs().max(1.0);
        if !taus.iter().any(|&s| (s + t).abs() <= tol) {
            return Err(Error::InvalidInput(format!("tau grid is not symmetric: {t} has no mirror")));
        }
    }
    Ok(())
}

/// Assembles the family on every `tau` of a symmetric grid and records
/// inverse norms, conditions and estimate constants.
pub fn uniform_bound_sweep(domain: &ArcDomain, spectrum: &CrossSectionSpectrum, taus: &[f64]) -> Result<TauFamilyReport> {
    check_grid(taus)?;
    if !domain.compatible(spectrum) {
        return Err(Error::InvalidInput("spectrum belongs to a different circle or potential".into()));
    }
    let records = taus
        .par_iter()
        .map(|&tau| {
            let m = tau_layer_matrices(domain, spectrum, tau);
            let n = m.s.nrows();
            let half_k = DMatrix::identity(n, n) * 0.5 + &m.k;
            let ek = linalg::extreme_singular_values(&half_k);
            let cond_half_k = ek.condition();
            if !(cond_half_k <= SINGULAR_FAMILY_LIMIT) {
                return Err(Error::SingularFamily { tau, cond: cond_half_k });
            }
            let es = linalg::extreme_singular_values(&m.s);
            let constants = tau_constants(domain, tau)?;
            Ok(TauRecord {
                tau,
                norm_s_inv: 1.0 / (es.min * (1.0 + tau.abs())),
                norm_half_k_inv: 1.0 / ek.min,
                cond_s: es.condition(),
                cond_half_k,
                constants,
                s: rows(&m.s),
                k: rows(&m.k),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TauFamilyReport { tau_grid: taus.to_vec(), records })
}

/// Residuals of the one-dimensional jump relation of the single layer:
/// at each endpoint `u'(p+) - u'(p-) + f_p`.
pub fn single_layer_jump_residuals(
    domain: &ArcDomain,
    spectrum: &CrossSectionSpectrum,
    tau: f64,
    density: &[f64],
) -> Vec<f64> {
    domain
        .endpoints()
        .iter()
        .zip(density)
        .map(|(e, f)| {
            let plus = single_layer_derivative(domain, spectrum, tau, density, e.theta, 1.0);
            let minus = single_layer_derivative(domain, spectrum, tau, density, e.theta, -1.0);
            plus - minus + f
        })
        .collect()
}

/// Endpoint vector as a column.
pub fn endpoint_vector(values: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit_domain() -> (ArcDomain, CrossSectionSpectrum) {
        let spec = CrossSectionSpectrum::new(2.0 * PI, &Potential::constant(1.0), 32).unwrap();
        let dom = ArcDomain::from_spectrum(&spec, vec![(0.0, PI)]).unwrap();
        (dom, spec)
    }

    #[test]
    fn s0_closed_form() {
        let (dom, spec) = unit_domain();
        let m = tau_layer_matrices(&dom, &spec, 0.0);
        let diag = PI.cosh() / (2.0 * PI.sinh());
        let off = 1.0 / (2.0 * PI.sinh());
        assert!((m.s[(0, 0)] - diag).abs() < 1e-14);
        assert!((m.s[(1, 1)] - diag).abs() < 1e-14);
        assert!((m.s[(0, 1)] - off).abs() < 1e-14);
        assert!((off - 0.043_30).abs() < 1e-5);
        assert!((m.k[(0, 0)] - m.k[(1, 1)]).abs() < 1e-14);
    }

    #[test]
    fn s_diagonal_decays_like_half_over_tau() {
        let (dom, spec) = unit_domain();
        let mut prev = f64::INFINITY;
        for tau in [10.0, 20.0, 40.0] {
            let m = tau_layer_matrices(&dom, &spec, tau);
            let err = (tau * m.s[(0, 0)] - 0.5).abs();
            assert!(err < prev);
            assert!(err < 0.5 / tau);
            prev = err;
        }
    }

    #[test]
    fn rejects_overlapping_arcs() {
        let p = Potential::constant(1.0);
        assert!(ArcDomain::new(2.0 * PI, p.clone(), vec![(0.0, 2.0), (1.5, 3.0)]).is_err());
        assert!(ArcDomain::new(2.0 * PI, p.clone(), vec![(0.0, 2.0), (2.0, 3.0)]).is_err());
        assert!(ArcDomain::new(2.0 * PI, p.clone(), vec![(5.0, 7.0), (0.5, 1.0)]).is_err());
        assert!(ArcDomain::new(2.0 * PI, p, vec![(5.0, 6.5), (0.5, 1.0)]).is_ok());
    }

    #[test]
    fn oracle_reproduces_sinh_solution() {
        let p = Potential { fourier_cos: vec![0.0], fourier_sin: vec![] };
        let dom = ArcDomain::new(2.0 * PI, p, vec![(0.0, PI)]).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let sol = solve_arc_dirichlet_oracle(&dom, 1.0, &[one, Complex64::new(0.0, 0.0)]).unwrap();
        let s = &sol.arcs[0];
        let err = s
            .nodes
            .iter()
            .zip(&s.values)
            .map(|(t, v)| (v - (PI - t).sinh() / PI.sinh()).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
        let expect = PI.cosh() / PI.sinh();
        assert!((sol.normal_derivatives[0].re - expect).abs() < 1e-9);
        assert!((expect - 1.003_74).abs() < 1e-5);
    }

    #[test]
    fn oracle_zero_data_gives_zero() {
        let (dom, _) = unit_domain();
        let zero = Complex64::new(0.0, 0.0);
        let sol = solve_arc_dirichlet_oracle(&dom, 0.0, &[zero, zero]).unwrap();
        assert!(sol.arcs[0].values.iter().all(|v| v.norm() == 0.0));
        let rep = estimate_suite(&dom, &sol, None);
        assert_eq!(rep.dirichlet_by_neumann, RealizedConstant::Degenerate);
        assert_eq!(rep.neumann_by_dirichlet, RealizedConstant::Degenerate);
    }

    #[test]
    fn layer_dtn_matches_oracle() {
        let spec = CrossSectionSpectrum::new(2.0 * PI, &Potential { fourier_cos: vec![1.0, 0.5], fourier_sin: vec![0.2] }, 128).unwrap();
        let dom = ArcDomain::from_spectrum(&spec, vec![(0.4, 2.3), (3.0, 5.1)]).unwrap();
        for tau in [0.0, 1.5] {
            let a = layer_dtn(&dom, &spec, tau).unwrap();
            let b = ArcOracle::new(&dom, tau).unwrap().dtn().unwrap();
            // the variable-potential kernel converges algebraically in the mode cutoff
            assert!((&a - &b).amax() < 5e-5, "{}", (&a - &b).amax());
        }
    }

    #[test]
    fn green_representation_inside() {
        let (dom, spec) = unit_domain();
        let tau = 0.7;
        let data = [Complex64::new(0.3, 0.0), Complex64::new(-1.1, 0.0)];
        let sol = solve_arc_dirichlet_oracle(&dom, tau, &data).unwrap();
        let f: Vec<f64> = sol.boundary_values.iter().map(|v| v.re).collect();
        let g: Vec<f64> = sol.normal_derivatives.iter().map(|v| v.re).collect();
        for theta in [0.2, 1.0, 2.9] {
            let rep = single_layer(&dom, &spec, tau, &g, theta) - double_layer(&dom, &spec, tau, &f, theta, 0.0);
            let u = sol.value_at(&dom, theta).unwrap().re;
            assert!((rep - u).abs() < 1e-9);
        }
    }

    #[test]
    fn interior_traces_follow_jump_relations() {
        let spec = CrossSectionSpectrum::new(2.0 * PI, &Potential { fourier_cos: vec![1.2, 0.4], fourier_sin: vec![] }, 32).unwrap();
        let dom = ArcDomain::from_spectrum(&spec, vec![(0.5, 2.5)]).unwrap();
        let tau = 1.3;
        let f = [0.8, -0.35];
        let m = tau_layer_matrices(&dom, &spec, tau);
        let fv = endpoint_vector(&f);
        let dl = (DMatrix::identity(2, 2) * -0.5 + &m.k) * &fv;
        let sl = (DMatrix::identity(2, 2) * 0.5 + &m.kstar) * &fv;
        for (p, e) in dom.endpoints().iter().enumerate() {
            let inward = -e.normal;
            let d = double_layer(&dom, &spec, tau, &f, e.theta, inward);
            let n = e.normal * single_layer_derivative(&dom, &spec, tau, &f, e.theta, inward);
            assert!((d - dl[p]).abs() < 1e-12);
            assert!((n - sl[p]).abs() < 1e-12);
        }
        for r in single_layer_jump_residuals(&dom, &spec, tau, &f) {
            assert!(r.abs() < 1e-8);
        }
    }

    #[test]
    fn rellich_constant_and_sine() {
        let dom = ArcDomain::new(2.0 * PI, Potential::constant(1.0), vec![(0.3, 2.1)]).unwrap();
        let c = ChebSeries::new(0.3, 2.1, vec![Complex64::new(2.0, -1.0)]);
        let w = ChebSeries::interpolate(0.3, 2.1, 8, |t| 1.0 + t * t);
        let r = rellich_check(&dom, &[c], &[w]).unwrap();
        assert_eq!(r.rellich.lhs, 0.0);
        assert_eq!(r.rellich.rhs, 0.0);
        let u = ChebSeries::interpolate(0.3, 2.1, 40, |t| Complex64::new(t.sin(), 0.0));
        let one = ChebSeries::new(0.3, 2.1, vec![1.0]);
        let r = rellich_check(&dom, &[u], &[one]).unwrap();
        assert!(r.max_residual() < 1e-10, "{r:?}");
        // w = d/dtheta: the divergence identity is sin^2(2.1) - sin^2(0.3)
        assert!((r.divergence.lhs - (2.1f64.sin().powi(2) - 0.3f64.sin().powi(2))).abs() < 1e-13);
    }

    #[test]
    fn cheb_series_derivative() {
        let s = ChebSeries::interpolate(-1.0, 2.0, 30, |t: f64| (2.0 * t).exp());
        let d = s.derivative();
        for t in [-0.9, 0.0, 1.7] {
            assert!((d.eval(t) - 2.0 * (2.0 * t).exp()).abs() < 1e-10);
            assert!((s.eval(t) - (2.0 * t).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn dirichlet_by_neumann_matches_closed_form() {
        let (dom, _) = unit_domain();
        for tau in [0.0, 2.0] {
            let c = tau_constants(&dom, tau).unwrap();
            let lam = (1.0f64 + tau * tau).sqrt();
            let expect = 1.0 / (lam * PI / 2.0).tanh().powi(2);
            assert!((c.dirichlet_by_neumann - expect).abs() < 1e-8 * expect);
        }
    }

    #[test]
    fn sweep_is_even_and_finite() {
        let (dom, spec) = unit_domain();
        let taus = [-3.0, -1.0, 0.0, 1.0, 3.0];
        let r = uniform_bound_sweep(&dom, &spec, &taus).unwrap();
        for (a, b) in r.records.iter().zip(r.records.iter().rev()) {
            assert!((a.norm_half_k_inv - b.norm_half_k_inv).abs() < 1e-12);
            assert!((a.norm_s_inv - b.norm_s_inv).abs() < 1e-12);
        }
        assert!(r.sup_norm_half_k_inv().is_finite());
        assert!(r.to_csv().starts_with("tau,norm_S_inv,norm_halfK_inv,cond_S,cond_halfK\n"));
        assert!(uniform_bound_sweep(&dom, &spec, &[0.0, 1.0]).is_err());
    }
}
