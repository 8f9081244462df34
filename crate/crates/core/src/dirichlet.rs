//! Dirichlet problem for `Delta + V` in the region `N`.
//!
//! The interior solution is represented either as a double layer,
//! `u = D g` with `(-1/2 I + K) g = f`, or as a single layer,
//! `u = S phi` with `S phi = f`. The Dirichlet-to-Neumann matrix is
//! `(1/2 I + K*) S^{-1}`. Graph curves get their frozen tail densities from
//! the same problem on the cross-section at infinity (`tau = 0`).
//!
//! Also here: a Fourier-mode solver for regions bounded by straight lines,
//! and the problem with an interior source (volume potential plus a
//! boundary correction).

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::End;
use crate::error::{Error, Result};
use crate::greens::{GreenKernel, SeparableBump};
use crate::layerops::{Density, LayerOperatorSet};
use crate::linalg;
use crate::model::{reduce_periodic, Point, Vector};
use crate::quadrature::gauss_legendre;
use crate::spectrum::CrossSectionSpectrum;
use crate::taufamily::{self, ArcDomain, TauLayerMatrices};

/// Condition bound of the boundary systems.
pub const CONDITION_LIMIT: f64 = 1e10;

/// Minimal distance between a volume source and the boundary.
pub const SOURCE_STANDOFF: f64 = 0.5;

/// Which layer potential carries the solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Representation {
    /// `u = D g`, `(-1/2 I + K) g = f`.
    Double,
    /// `u = S phi`, `S phi = f`.
    SingleSinv,
}

/// Density and evaluator of an interior Dirichlet solution.
#[derive(Debug, Clone)]
pub struct DirichletSolution {
    pub density: Density,
    pub representation: Representation,
    pub ops: Arc<LayerOperatorSet>,
    /// Dirichlet data at the boundary nodes.
    pub boundary_data: Vec<f64>,
    /// Condition number of the boundary system.
    pub condition: f64,
    /// `max |A g - rhs| / max |rhs|`.
    pub residual: f64,
    pub tail_bound: f64,
}

impl DirichletSolution {
    /// `u(p)` for `p` in the region.
    pub fn value(&self, p: Point) -> Result<f64> {
        match self.representation {
            Representation::Double => self.ops.eval_double(&self.density, p),
            Representation::SingleSinv => self.ops.eval_single(&self.density, p),
        }
    }

    pub fn values(&self, points: &[Point]) -> Result<Vec<f64>> {
        points.par_iter().map(|&p| self.value(p)).collect()
    }

    /// Outward normal derivative at node `i` from `u` on the inward offsets
    /// `delta, 2 delta, 3 delta, 4 delta` and the boundary value (one-sided
    /// fourth-order difference).
    pub fn normal_derivative_by_offsets(&self, i: usize, delta: f64) -> Result<f64> {
        let node = &self.ops.disc.nodes[i];
        let mut u = [self.boundary_data[i], 0.0, 0.0, 0.0, 0.0];
        for (k, slot) in u.iter_mut().enumerate().skip(1) {
            *slot = self.value(node.point.offset(node.normal, -(k as f64) * delta))?;
        }
        let d = (-25.0 * u[0] + 48.0 * u[1] - 36.0 * u[2] + 16.0 * u[3] - 3.0 * u[4]) / (12.0 * delta);
        Ok(-d)
    }
}

/// Maps far-end data to tail densities through a cross-section operator at
/// `tau = 0`, once for each end of the cylinder.
fn far_field_tails(
    ops: &LayerOperatorSet,
    f: &[f64],
    map: impl Fn(&TauLayerMatrices) -> Result<DMatrix<f64>>,
) -> Result<Vec<f64>> {
    let mut tails = vec![0.0; ops.tails.len()];
    let Some(ff) = ops.far_field()? else {
        return Ok(tails);
    };
    let m = taufamily::tau_layer_matrices(&ff.domain, ops.kernel.spectrum(), 0.0);
    let a = map(&m)?;
    for end in [End::Left, End::Right] {
        let groups: Vec<Option<usize>> = ff
            .endpoint_segment
            .iter()
            .map(|&seg| ops.tails.iter().position(|g| g.segment == seg && g.end == end))
            .collect();
        if groups.iter().all(Option::is_none) {
            continue;
        }
        let data = DVector::from_iterator(
            groups.len(),
            groups.iter().map(|g| g.map_or(0.0, |g| f[ops.outermost_node(&ops.tails[g])])),
        );
        let out = &a * data;
        for (k, g) in groups.iter().enumerate() {
            if let Some(g) = g {
                tails[*g] = out[k];
            }
        }
    }
    Ok(tails)
}

fn inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    linalg::lu_solve(a, &DMatrix::identity(a.nrows(), a.ncols()))
}

fn check_data(ops: &LayerOperatorSet, f: &[f64]) -> Result<()> {
    if f.len() != ops.len() {
        return Err(Error::InvalidInput(format!("expected {} boundary values, got {}", ops.len(), f.len())));
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("boundary data is not finite".into()));
    }
    Ok(())
}

fn solve_system(a: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<(DVector<f64>, f64, f64)> {
    let condition = linalg::check_condition(a, CONDITION_LIMIT)?;
    let g = a.clone().lu().solve(rhs).ok_or_else(|| Error::SolveFailure("boundary system is singular".into()))?;
    let scale = rhs.amax().max(f64::MIN_POSITIVE);
    let residual = (a * &g - rhs).amax() / scale;
    Ok((g, condition, residual))
}

/// Interior Dirichlet solution `u = D g`, `(-1/2 I + K) g = f`.
pub fn solve_dirichlet(ops: &Arc<LayerOperatorSet>, f: &[f64]) -> Result<DirichletSolution> {
    check_data(ops, f)?;
    let tails = far_field_tails(ops, f, |m| {
        let n = m.k.nrows();
        inverse(&(DMatrix::identity(n, n) * -0.5 + &m.k))
    })?;
    let n = ops.len();
    let a = DMatrix::identity(n, n) * -0.5 + &ops.k;
    let mut rhs = DVector::from_column_slice(f);
    if !tails.is_empty() {
        rhs -= &ops.k_tail * DVector::from_column_slice(&tails);
    }
    let (g, condition, residual) = solve_system(&a, &rhs)?;
    Ok(DirichletSolution {
        density: Density::new(g.iter().copied().collect(), tails),
        representation: Representation::Double,
        ops: Arc::clone(ops),
        boundary_data: f.to_vec(),
        condition,
        residual,
        tail_bound: ops.diagnostics.tail_bound,
    })
}

/// Interior Dirichlet solution `u = S phi`, `S phi = f`.
pub fn ssinv_solve(ops: &Arc<LayerOperatorSet>, f: &[f64]) -> Result<DirichletSolution> {
    check_data(ops, f)?;
    let tails = far_field_tails(ops, f, |m| inverse(&m.s))?;
    let mut rhs = DVector::from_column_slice(f);
    if !tails.is_empty() {
        rhs -= &ops.s_tail * DVector::from_column_slice(&tails);
    }
    let (phi, condition, residual) = solve_system(&ops.s, &rhs)?;
    Ok(DirichletSolution {
        density: Density::new(phi.iter().copied().collect(), tails),
        representation: Representation::SingleSinv,
        ops: Arc::clone(ops),
        boundary_data: f.to_vec(),
        condition,
        residual,
        tail_bound: ops.diagnostics.tail_bound,
    })
}

/// Neumann data `(1/2 I + K*) S^{-1} f` at the nodes, with the far-field
/// Neumann values in the tail slots.
pub fn neumann_data(ops: &Arc<LayerOperatorSet>, f: &[f64]) -> Result<Density> {
    let sol = ssinv_solve(ops, f)?;
    let phi = &sol.density;
    let ks = ops.apply_kstar(phi);
    let nodes = phi.nodes.iter().zip(ks.iter()).map(|(p, k)| 0.5 * p + k).collect();
    let tails = far_field_tails(ops, f, |m| {
        let n = m.s.nrows();
        Ok((DMatrix::identity(n, n) * 0.5 + &m.kstar) * inverse(&m.s)?)
    })?;
    Ok(Density::new(nodes, tails))
}

/// The Dirichlet-to-Neumann matrix on the boundary nodes.
#[derive(Debug, Clone)]
pub struct DtNReport {
    pub matrix: DMatrix<f64>,
    pub weights: Vec<f64>,
    pub condition_s: f64,
    /// `||WN - (WN)^T|| / ||WN||`.
    pub symmetry_residual: f64,
    /// Smallest eigenvalue of the symmetric part of `W^{1/2} N W^{-1/2}`,
    /// i.e. `min <Nf, f> / ||f||^2` in the weighted inner product.
    pub min_form: f64,
}

/// Serializable summary of a [`DtNReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtNSummary {
    pub size: usize,
    pub condition_s: f64,
    pub symmetry_residual: f64,
    pub min_form: f64,
    pub norm: f64,
}

impl DtNReport {
    /// `<N f, f> / ||f||^2` in the weighted inner product.
    pub fn quadratic_form(&self, f: &[f64]) -> f64 {
        let nf = &self.matrix * DVector::from_column_slice(f);
        let num: f64 = (0..f.len()).map(|i| self.weights[i] * nf[i] * f[i]).sum();
        let den: f64 = (0..f.len()).map(|i| self.weights[i] * f[i] * f[i]).sum();
        num / den
    }

    /// Quadratic forms of `count` random densities with entries in `[-1, 1]`.
    pub fn random_forms(&self, seed: u64, count: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.matrix.nrows();
        (0..count)
            .map(|_| {
                let f: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                self.quadratic_form(&f)
            })
            .collect()
    }

    pub fn summary(&self) -> DtNSummary {
        DtNSummary {
            size: self.matrix.nrows(),
            condition_s: self.condition_s,
            symmetry_residual: self.symmetry_residual,
            min_form: self.min_form,
            norm: self.matrix.norm(),
        }
    }
}

/// `N = (1/2 I + K*) S^{-1}` as a dense matrix, with symmetry and
/// positivity diagnostics.
pub fn dtn(ops: &LayerOperatorSet) -> Result<DtNReport> {
    let n = ops.len();
    let condition_s = linalg::check_condition(&ops.s, CONDITION_LIMIT)?;
    let matrix = (DMatrix::identity(n, n) * 0.5 + &ops.kstar) * inverse(&ops.s)?;
    let weights = ops.weights();
    let wn = DMatrix::from_fn(n, n, |i, j| weights[i] * matrix[(i, j)]);
    let symmetry_residual = (&wn - wn.transpose()).norm() / wn.norm().max(f64::MIN_POSITIVE);
    let scaled = DMatrix::from_fn(n, n, |i, j| matrix[(i, j)] * (weights[i] / weights[j]).sqrt());
    let sym = (&scaled + scaled.transpose()) * 0.5;
    let min_form = SymmetricEigen::new(sym).eigenvalues.min();
    Ok(DtNReport { matrix, weights, condition_s, symmetry_residual, min_form })
}

/// Green's representation `S(d_nu u) - D(u)` at `p`, built from the
/// Dirichlet data of `sol` and its Neumann data through the DtN map.
pub fn green_closure(sol: &DirichletSolution, neumann: &Density, p: Point) -> Result<f64> {
    let ops = &sol.ops;
    let data = Density::new(sol.boundary_data.clone(), sol_far_values(ops, &sol.boundary_data));
    let single = ops.evaluate(neumann, p)?.single;
    let double = ops.evaluate(&data, p)?.double;
    Ok(single - double)
}

fn sol_far_values(ops: &LayerOperatorSet, f: &[f64]) -> Vec<f64> {
    ops.tails.iter().map(|g| f[ops.outermost_node(g)]).collect()
}

/// One axial Fourier mode of boundary data on straight lines:
/// `f_e(x) = a_e exp(i xi x)` at endpoint `e` of the cross-section arcs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripMode {
    pub xi: f64,
    pub amplitudes: Vec<Complex64>,
}

/// Solution on a region bounded by straight lines, as a finite sum of modes.
/// Values are real parts of the complex synthesis.
#[derive(Debug, Clone)]
pub struct StripFourierSolution {
    pub domain: ArcDomain,
    pub spectrum: Arc<CrossSectionSpectrum>,
    /// `(xi, density amplitudes per endpoint)`.
    pub modes: Vec<(f64, Vec<Complex64>)>,
}

impl StripFourierSolution {
    /// `u(x, theta) = Re sum_m exp(i xi_m x) D_{xi_m}(g_m)(theta)`.
    pub fn value(&self, p: Point) -> Result<f64> {
        let c = self.domain.circumference();
        let theta = p.theta.rem_euclid(c);
        if self.domain.arc_containing(theta).is_none() {
            return Err(Error::InvalidInput(format!("theta = {} lies outside the strip", p.theta)));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (xi, g) in &self.modes {
            let re: Vec<f64> = g.iter().map(|z| z.re).collect();
            let im: Vec<f64> = g.iter().map(|z| z.im).collect();
            let d = |v: &[f64]| taufamily::double_layer(&self.domain, &self.spectrum, *xi, v, theta, 0.0);
            let dz = Complex64::new(d(&re), d(&im));
            acc += Complex64::from_polar(1.0, xi * p.x) * dz;
        }
        Ok(acc.re)
    }

    /// Density at endpoint `e` and axial position `x`.
    pub fn density_at(&self, e: usize, x: f64) -> f64 {
        self.modes.iter().map(|(xi, g)| (Complex64::from_polar(1.0, xi * x) * g[e]).re).sum()
    }
}

/// Solves `(-1/2 I + K_xi) g_xi = f_xi` mode by mode.
pub fn solve_strip_fourier(
    domain: &ArcDomain,
    spectrum: Arc<CrossSectionSpectrum>,
    modes: &[StripMode],
) -> Result<StripFourierSolution> {
    let m = domain.boundary_len();
    let solved = modes
        .par_iter()
        .map(|mode| {
            if mode.amplitudes.len() != m {
                return Err(Error::InvalidInput(format!("mode needs {m} amplitudes, got {}", mode.amplitudes.len())));
            }
            if mode.amplitudes.iter().all(|a| *a == Complex64::new(0.0, 0.0)) {
                return Ok((mode.xi, vec![Complex64::new(0.0, 0.0); m]));
            }
            let mats = taufamily::tau_layer_matrices(domain, &spectrum, mode.xi);
            let a = DMatrix::identity(m, m) * -0.5 + &mats.k;
            let cond = linalg::condition_number(&a);
            if !(cond < CONDITION_LIMIT) {
                return Err(Error::IllConditioned { cond, limit: CONDITION_LIMIT });
            }
            let lu = a.lu();
            let re = DVector::from_iterator(m, mode.amplitudes.iter().map(|z| z.re));
            let im = DVector::from_iterator(m, mode.amplitudes.iter().map(|z| z.im));
            let fail = || Error::SolveFailure(format!("mode {} is singular", mode.xi));
            let gr = lu.solve(&re).ok_or_else(fail)?;
            let gi = lu.solve(&im).ok_or_else(fail)?;
            Ok((mode.xi, (0..m).map(|k| Complex64::new(gr[k], gi[k])).collect()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StripFourierSolution { domain: domain.clone(), spectrum, modes: solved })
}

/// Axis-aligned square `|x - x0| <= h`, `|theta - theta0| <= h` carrying a
/// volume source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    pub center: Point,
    pub half_width: f64,
}

impl SupportBox {
    fn contains(&self, p: Point, c: f64) -> bool {
        (p.x - self.center.x).abs() <= self.half_width
            && reduce_periodic(p.theta - self.center.theta, c).abs() <= self.half_width
    }

    /// Distance from `o` (inside) along unit `d` to the edge of the box.
    fn exit(&self, o: Point, d: Vector) -> f64 {
        let h = self.half_width;
        let t = |off: f64, dir: f64| {
            if dir > 0.0 {
                (h - off) / dir
            } else if dir < 0.0 {
                (-h - off) / dir
            } else {
                f64::INFINITY
            }
        };
        t(o.x - self.center.x, d.x).min(t(o.theta - self.center.theta, d.theta)).max(0.0)
    }
}

/// Compactly supported source term `g_src`.
pub trait VolumeSource: Sync + Send {
    fn support(&self) -> SupportBox;
    fn density(&self, p: Point) -> f64;
}

/// `g_src = (Delta + V) psi` for a separable bump `psi`.
#[derive(Debug, Clone)]
pub struct BumpSource {
    pub bump: SeparableBump,
    pub spectrum: Arc<CrossSectionSpectrum>,
}

impl VolumeSource for BumpSource {
    fn support(&self) -> SupportBox {
        SupportBox { center: self.bump.center, half_width: self.bump.half_width }
    }

    fn density(&self, p: Point) -> f64 {
        self.bump.source(p, &self.spectrum)
    }
}

/// Volume potential `int E(p, q) g_src(q) dq` by polar quadrature.
///
/// Rays leave from `p` when `p` lies in the support (the Jacobian `r`
/// cancels the logarithm; `r = R s^2` smooths `r log r` further), otherwise
/// from the centre of the support. The angular range is split at the corners.
pub struct VolumePotential<'a> {
    pub source: &'a dyn VolumeSource,
    pub kernel: &'a GreenKernel,
    radial: (Vec<f64>, Vec<f64>),
    angular: (Vec<f64>, Vec<f64>),
}

impl<'a> VolumePotential<'a> {
    pub fn new(source: &'a dyn VolumeSource, kernel: &'a GreenKernel, order: usize) -> Self {
        Self { source, kernel, radial: gauss_legendre(order), angular: gauss_legendre(order) }
    }

    pub fn value(&self, p: Point) -> Result<f64> {
        let c = self.kernel.circumference();
        let b = self.source.support();
        // work in the copy of the support nearest to p
        let center = Point::new(b.center.x, p.theta + reduce_periodic(b.center.theta - p.theta, c));
        let local = SupportBox { center, half_width: b.half_width };
        let o = if local.contains(p, c) { p } else { center };
        let h = b.half_width;
        let mut cuts: Vec<f64> = [(h, h), (-h, h), (-h, -h), (h, -h)]
            .iter()
            .map(|&(dx, dt)| (center.theta + dt - o.theta).atan2(center.x + dx - o.x).rem_euclid(2.0 * PI))
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        let mut total = 0.0;
        let pk = self.kernel.prepare(p);
        for k in 0..cuts.len() {
            let a0 = cuts[k];
            let a1 = if k + 1 < cuts.len() { cuts[k + 1] } else { cuts[0] + 2.0 * PI };
            let (ha, ma) = (0.5 * (a1 - a0), 0.5 * (a1 + a0));
            for (ta, wa) in self.angular.0.iter().zip(&self.angular.1) {
                let phi = ma + ha * ta;
                let d = Vector::new(phi.cos(), phi.sin());
                let r_max = local.exit(o, d);
                if r_max == 0.0 {
                    continue;
                }
                let mut ray = 0.0;
                for (tr, wr) in self.radial.0.iter().zip(&self.radial.1) {
                    let s = 0.5 * (1.0 + tr);
                    let r = r_max * s * s;
                    let q = o.offset(d, r);
                    let g = self.source.density(q);
                    if g == 0.0 {
                        continue;
                    }
                    let e = self.kernel.eval_prepared(&pk, &self.kernel.prepare(q))?.value;
                    // dr = 2 R s ds, ds = dt / 2
                    ray += wr * 0.5 * e * g * r * 2.0 * r_max * s;
                }
                total += wa * ha * ray;
            }
        }
        Ok(total)
    }
}

/// Solution of `(Delta + V) u = g_src` in `N`, `u = f` on the boundary.
pub struct WellPosedSolution<'a> {
    pub volume: VolumePotential<'a>,
    pub boundary: DirichletSolution,
}

impl WellPosedSolution<'_> {
    pub fn value(&self, p: Point) -> Result<f64> {
        Ok(self.volume.value(p)? + self.boundary.value(p)?)
    }
}

/// Default radial and angular quadrature order of the volume potential.
pub const VOLUME_ORDER: usize = 48;

/// `u = u1 + u2` with `u1` the volume potential of `g_src` and `u2` the
/// Dirichlet solution with data `f - u1`.
pub fn wellposedness_solve<'a>(
    ops: &Arc<LayerOperatorSet>,
    kernel: &'a GreenKernel,
    source: &'a dyn VolumeSource,
    f: &[f64],
) -> Result<WellPosedSolution<'a>> {
    check_data(ops, f)?;
    let c = ops.disc.circumference;
    let b = source.support();
    if !(b.half_width > 0.0 && 2.0 * b.half_width < c) {
        return Err(Error::InvalidInput(format!("support half-width {} is not admissible", b.half_width)));
    }
    for seg in &ops.disc.segments {
        if !seg.curve.on_region_side(c, b.center) {
            return Err(Error::InvalidInput("source support lies outside the region".into()));
        }
    }
    let h = b.half_width;
    let per_side = 64;
    let mut distance = f64::INFINITY;
    for k in 0..4 * per_side {
        let s = (k % per_side) as f64 / per_side as f64 * 2.0 - 1.0;
        let (dx, dt) = match k / per_side {
            0 => (s * h, -h),
            1 => (h, s * h),
            2 => (-s * h, h),
            _ => (-h, -s * h),
        };
        let q = Point::new(b.center.x + dx, b.center.theta + dt);
        for seg in &ops.disc.segments {
            distance = distance.min(seg.curve.distance_to(c, q));
        }
    }
    if distance < SOURCE_STANDOFF {
        return Err(Error::SourceTooClose { distance });
    }
    let volume = VolumePotential::new(source, kernel, VOLUME_ORDER);
    let u1: Vec<f64> = ops.disc.nodes.par_iter().map(|n| volume.value(n.point)).collect::<Result<_>>()?;
    let data: Vec<f64> = f.iter().zip(&u1).map(|(a, b)| a - b).collect();
    let boundary = solve_dirichlet(ops, &data)?;
    Ok(WellPosedSolution { volume, boundary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{BoundaryDiscretization, Curve, Resolution, Side};
    use crate::layerops::assemble;
    use crate::model::Potential;

    fn kernel(cos: Vec<f64>) -> GreenKernel {
        let spec = CrossSectionSpectrum::new(2.0 * PI, &Potential { fourier_cos: cos, fourier_sin: vec![] }, 32).unwrap();
        GreenKernel::new(Arc::new(spec))
    }

    fn disk(gk: &GreenKernel, r: f64, n: usize) -> Arc<LayerOperatorSet> {
        let curve = Curve::circle(Point::new(0.0, PI), r, Side::Inside).unwrap();
        let res = Resolution { nodes: n, ..Resolution::default() };
        let disc = BoundaryDiscretization::from_curves(2.0 * PI, &[curve], &res, gk.decay_rate().powi(2)).unwrap();
        Arc::new(assemble(gk, &disc).unwrap())
    }

    fn probes() -> Vec<Point> {
        (0..8).map(|k| {
            let a = k as f64 * 0.8;
            Point::new(0.3 * a.cos(), PI + 0.3 * a.sin())
        }).collect()
    }

    #[test]
    fn manufactured_solution_both_representations() {
        let gk = kernel(vec![1.0]);
        let ops = disk(&gk, 0.5, 128);
        let p0 = Point::new(0.3, PI + 0.8);
        let f: Vec<f64> = ops.disc.nodes.iter().map(|n| gk.eval(n.point, p0).unwrap()).collect();
        let d = solve_dirichlet(&ops, &f).unwrap();
        let s = ssinv_solve(&ops, &f).unwrap();
        for p in probes() {
            let exact = gk.eval(p, p0).unwrap();
            assert!((d.value(p).unwrap() - exact).abs() < 1e-8 * exact.abs().max(1.0));
            assert!((s.value(p).unwrap() - exact).abs() < 1e-8 * exact.abs().max(1.0));
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let gk = kernel(vec![1.0]);
        let ops = disk(&gk, 0.5, 64);
        let d = solve_dirichlet(&ops, &vec![0.0; ops.len()]).unwrap();
        assert!(d.density.nodes.iter().all(|&g| g == 0.0));
        assert_eq!(d.value(Point::new(0.1, PI)).unwrap(), 0.0);
    }

    #[test]
    fn dtn_matches_exact_normal_derivative() {
        let gk = kernel(vec![1.0]);
        let ops = disk(&gk, 0.5, 128);
        let p0 = Point::new(-0.2, PI - 0.9);
        let f: Vec<f64> = ops.disc.nodes.iter().map(|n| gk.eval(n.point, p0).unwrap()).collect();
        let rep = dtn(&ops).unwrap();
        let nf = &rep.matrix * DVector::from_column_slice(&f);
        for (i, n) in ops.disc.nodes.iter().enumerate() {
            let exact = gk.gradient_target(n.point, p0).unwrap().dot(n.normal);
            assert!((nf[i] - exact).abs() < 1e-7, "{i}: {} vs {exact}", nf[i]);
        }
        assert!(rep.min_form > -1e-8, "{}", rep.min_form);
        assert!(rep.symmetry_residual < 1e-6, "{}", rep.symmetry_residual);
    }

    #[test]
    fn dtn_with_variable_potential() {
        let spec = CrossSectionSpectrum::new(2.0 * PI, &Potential { fourier_cos: vec![1.0, 0.3], fourier_sin: vec![] }, 128);
        let gk = GreenKernel::new(Arc::new(spec.unwrap()));
        let ops = disk(&gk, 0.5, 128);
        // p0 is axially separated from the circle: the truncated remainder has
        // kinks at zero axial separation
        let p0 = Point::new(0.9, PI + 0.2);
        let f: Vec<f64> = ops.disc.nodes.iter().map(|n| gk.eval(n.point, p0).unwrap()).collect();
        let nf = &dtn(&ops).unwrap().matrix * DVector::from_column_slice(&f);
        // the truncated eigen-expansion converges algebraically in the cutoff
        for (i, n) in ops.disc.nodes.iter().enumerate() {
            let exact = gk.gradient_target(n.point, p0).unwrap().dot(n.normal);
            assert!((nf[i] - exact).abs() < 1e-5, "{i}: {} vs {exact}", nf[i]);
        }
    }

    #[test]
    fn green_closure_reproduces_solution() {
        let gk = kernel(vec![1.0]);
        let ops = disk(&gk, 0.5, 128);
        let p0 = Point::new(0.0, PI + 1.0);
        let f: Vec<f64> = ops.disc.nodes.iter().map(|n| gk.eval(n.point, p0).unwrap()).collect();
        let sol = solve_dirichlet(&ops, &f).unwrap();
        let nd = neumann_data(&ops, &f).unwrap();
        for p in probes() {
            let g = green_closure(&sol, &nd, p).unwrap();
            assert!((g - sol.value(p).unwrap()).abs() < 1e-8);
        }
    }

    fn strip_domain(spec: &CrossSectionSpectrum) -> ArcDomain {
        ArcDomain::from_spectrum(spec, vec![(0.0, PI)]).unwrap()
    }

    #[test]
    fn strip_mode_matches_closed_form() {
        let gk = kernel(vec![1.0]);
        let spec = gk.spectrum_arc();
        let domain = strip_domain(&spec);
        let mode = StripMode { xi: 1.0, amplitudes: vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)] };
        let sol = solve_strip_fourier(&domain, spec, &[mode]).unwrap();
        let k = 2f64.sqrt();
        for &(x, t) in &[(0.0f64, 0.5f64), (0.7, 1.5), (-2.0, 3.0)] {
            let exact = x.cos() * (k * (PI - t)).sinh() / (k * PI).sinh();
            assert!((sol.value(Point::new(x, t)).unwrap() - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn strip_parseval() {
        let gk = kernel(vec![1.0]);
        let spec = gk.spectrum_arc();
        let domain = strip_domain(&spec);
        let dt = 0.05;
        let modes: Vec<StripMode> = (-240..=240)
            .map(|k| {
                let xi = k as f64 * dt;
                let fhat = (2.0 * PI).sqrt() * (-0.5 * xi * xi).exp();
                StripMode { xi, amplitudes: vec![Complex64::new(fhat * dt / (2.0 * PI), 0.0), Complex64::new(0.0, 0.0)] }
            })
            .collect();
        let sol = solve_strip_fourier(&domain, spec, &modes).unwrap();
        let tau_side: f64 = sol.modes.iter().map(|(_, g)| g[0].norm_sqr() + g[1].norm_sqr()).sum::<f64>()
            * (2.0 * PI / dt).powi(2)
            * dt
            / (2.0 * PI);
        let hx = 0.05;
        let x_side: f64 = (-600..=600)
            .map(|k| {
                let x = k as f64 * hx;
                sol.density_at(0, x).powi(2) + sol.density_at(1, x).powi(2)
            })
            .sum::<f64>()
            * hx;
        assert!((tau_side - x_side).abs() < 1e-8 * x_side, "{tau_side} {x_side}");
    }

    #[test]
    fn single_mode_stays_single() {
        let gk = kernel(vec![1.0]);
        let spec = gk.spectrum_arc();
        let domain = strip_domain(&spec);
        let zero = vec![Complex64::new(0.0, 0.0); 2];
        let modes = vec![
            StripMode { xi: 0.5, amplitudes: zero.clone() },
            StripMode { xi: 1.0, amplitudes: vec![Complex64::new(0.3, 0.1), Complex64::new(-1.0, 0.0)] },
            StripMode { xi: 2.0, amplitudes: zero },
        ];
        let sol = solve_strip_fourier(&domain, spec, &modes).unwrap();
        assert!(sol.modes[0].1.iter().all(|z| z.norm() == 0.0));
        assert!(sol.modes[2].1.iter().all(|z| z.norm() == 0.0));
        assert!(sol.modes[1].1.iter().any(|z| z.norm() > 0.0));
    }

    #[test]
    fn volume_potential_recovers_bump_with_zero_data() {
        let gk = kernel(vec![1.0]);
        let ops = disk(&gk, 1.2, 128);
        let bump = SeparableBump { center: Point::new(0.0, PI), half_width: 0.45, power: 8, amplitude: 1.0 };
        let src = BumpSource { bump, spectrum: gk.spectrum_arc() };
        let sol = wellposedness_solve(&ops, &gk, &src, &vec![0.0; ops.len()]).unwrap();
        for p in [Point::new(0.0, PI), Point::new(0.2, PI - 0.1), Point::new(-0.3, PI + 0.25), Point::new(0.8, PI)] {
            let exact = bump.value(p, 2.0 * PI);
            assert!((sol.value(p).unwrap() - exact).abs() < 1e-5, "{p:?}: {} vs {exact}", sol.value(p).unwrap());
        }
    }

    #[test]
    fn source_too_close_is_rejected() {
        let gk = kernel(vec![1.0]);
        let ops = disk(&gk, 0.5, 64);
        let bump = SeparableBump::new(Point::new(0.0, PI), 0.2);
        let src = BumpSource { bump, spectrum: gk.spectrum_arc() };
        let res = wellposedness_solve(&ops, &gk, &src, &vec![0.0; ops.len()]);
        assert!(matches!(res, Err(Error::SourceTooClose { .. })));
    }
}
