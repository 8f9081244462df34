//! Green's function of `Delta + V` on the cylinder.
//!
//! The kernel is split as `E = E0 + R`. `E0` is the Green's function for the
//! constant potential `Vbar` (the mean of `V`):
//!
//! ```text
//! E0 = (1/c) sum_n cos(n w dtheta) exp(-k_n |dx|) / (2 k_n),   k_n = sqrt(n^2 w^2 + Vbar)
//!    = (1/2pi) sum_n K0(lambda |(dx, dtheta + n c)|),          lambda = sqrt(Vbar)
//! ```
//!
//! The mode sum is used for `|dx| >= 0.5` and the image sum otherwise. The
//! remainder `R` is the difference of the eigenfunction expansions of `E` and
//! `E0` over the same number of modes; it vanishes when `V` is constant and is
//! continuous across the diagonal.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{reduce_periodic, Point, Vector};
use crate::special::{bessel_k0, bessel_k01, EULER_GAMMA};
use crate::spectrum::{CrossSectionSpectrum, ModalSample};

/// Axial separation below which `E0` is summed over images.
const IMAGE_SUM_RANGE: f64 = 0.5;

/// Points closer than this are treated as coincident.
pub const COINCIDENCE: f64 = 1e-10;

/// Kernel value and its gradient with respect to the source point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KernelValue {
    pub value: f64,
    /// `d E / d x'`.
    pub dx_src: f64,
    /// `d E / d theta'`.
    pub dtheta_src: f64,
}

impl KernelValue {
    pub fn gradient(&self) -> Vector {
        Vector::new(self.dx_src, self.dtheta_src)
    }

    fn add(&mut self, other: KernelValue) {
        self.value += other.value;
        self.dx_src += other.dx_src;
        self.dtheta_src += other.dtheta_src;
    }
}

/// A point together with the eigenfunction samples the remainder needs.
#[derive(Debug, Clone)]
pub struct KernelPoint {
    pub point: Point,
    modal: Option<ModalSample>,
}

impl KernelPoint {
    pub fn point(&self) -> Point {
        self.point
    }
}

/// Green's function of `Delta + V` on the cylinder.
#[derive(Debug, Clone)]
pub struct GreenKernel {
    spectrum: Arc<CrossSectionSpectrum>,
    c: f64,
    omega: f64,
    lambda: f64,
    variable: bool,
    sqrt_mu: Vec<f64>,
    comparison_kappa: Vec<f64>,
}

impl GreenKernel {
    pub fn new(spectrum: Arc<CrossSectionSpectrum>) -> Self {
        let c = spectrum.circumference();
        let omega = spectrum.omega();
        let vbar = spectrum.mean_potential();
        let sqrt_mu = spectrum.eigenvalues().iter().map(|m| m.sqrt()).collect();
        let comparison_kappa = (0..=spectrum.mode_cutoff())
            .map(|j| ((j as f64 * omega).powi(2) + vbar).sqrt())
            .collect();
        Self {
            variable: !spectrum.is_constant_potential(),
            lambda: vbar.sqrt(),
            spectrum,
            c,
            omega,
            sqrt_mu,
            comparison_kappa,
        }
    }

    pub fn spectrum(&self) -> &CrossSectionSpectrum {
        &self.spectrum
    }

    pub fn spectrum_arc(&self) -> Arc<CrossSectionSpectrum> {
        Arc::clone(&self.spectrum)
    }

    pub fn circumference(&self) -> f64 {
        self.c
    }

    /// `sqrt(Vbar)`, the decay rate of the comparison kernel.
    pub fn comparison_rate(&self) -> f64 {
        self.lambda
    }

    /// `sqrt(mu_0)`, the axial decay rate of `E`.
    pub fn decay_rate(&self) -> f64 {
        self.sqrt_mu[0]
    }

    pub fn is_variable(&self) -> bool {
        self.variable
    }

    /// Attaches the eigenfunction samples needed for repeated evaluation.
    pub fn prepare(&self, point: Point) -> KernelPoint {
        let modal = self.variable.then(|| self.spectrum.modal(point.theta));
        KernelPoint { point, modal }
    }

    pub fn distance(&self, p: Point, q: Point) -> f64 {
        (p.x - q.x).hypot(reduce_periodic(p.theta - q.theta, self.c))
    }

    /// `E(p, q)`.
    pub fn eval(&self, p: Point, q: Point) -> Result<f64> {
        Ok(self.eval_full(p, q)?.value)
    }

    /// Gradient of `E(p, q)` with respect to the source `q`.
    pub fn gradient_source(&self, p: Point, q: Point) -> Result<Vector> {
        Ok(self.eval_full(p, q)?.gradient())
    }

    /// Gradient of `E(p, q)` with respect to the target `p` (by symmetry of `E`).
    pub fn gradient_target(&self, p: Point, q: Point) -> Result<Vector> {
        self.gradient_source(q, p)
    }

    /// Value and source gradient.
    pub fn eval_full(&self, p: Point, q: Point) -> Result<KernelValue> {
        self.eval_prepared(&self.prepare(p), &self.prepare(q))
    }

    /// Value and source gradient at prepared points.
    pub fn eval_prepared(&self, p: &KernelPoint, q: &KernelPoint) -> Result<KernelValue> {
        let distance = self.distance(p.point, q.point);
        if distance < COINCIDENCE {
            return Err(Error::CoincidentPoints { distance });
        }
        Ok(self.eval_unchecked(p, q))
    }

    pub(crate) fn eval_unchecked(&self, p: &KernelPoint, q: &KernelPoint) -> KernelValue {
        let dx = p.point.x - q.point.x;
        let dtheta = p.point.theta - q.point.theta;
        let mut k = self.comparison_kernel(dx, dtheta);
        if self.variable {
            let (a, b) = (p.modal.as_ref().expect("prepared"), q.modal.as_ref().expect("prepared"));
            k.add(self.remainder(dx, dtheta, a, b));
        }
        k
    }

    /// `E - E0` at prepared points; zero for a constant potential.
    pub(crate) fn remainder_unchecked(&self, p: &KernelPoint, q: &KernelPoint) -> KernelValue {
        if !self.variable {
            return KernelValue::default();
        }
        let (a, b) = (p.modal.as_ref().expect("prepared"), q.modal.as_ref().expect("prepared"));
        self.remainder(p.point.x - q.point.x, p.point.theta - q.point.theta, a, b)
    }

    /// Constant-potential kernel `E0` with source gradient.
    pub fn comparison_kernel(&self, dx: f64, dtheta: f64) -> KernelValue {
        if dx.abs() < IMAGE_SUM_RANGE {
            self.image_sum(dx, reduce_periodic(dtheta, self.c), true)
        } else {
            self.mode_sum(dx, dtheta)
        }
    }

    fn image_sum(&self, dx: f64, dtheta: f64, include_central: bool) -> KernelValue {
        let lam = self.lambda;
        let scale = 1.0 / (2.0 * PI);
        let mut out = KernelValue::default();
        let term = |n: f64, out: &mut KernelValue| -> f64 {
            let dt = dtheta + n * self.c;
            let r = dx.hypot(dt);
            let (k0, k1) = bessel_k01(lam * r);
            out.value += scale * k0;
            let g = scale * lam * k1 / r;
            out.dx_src += g * dx;
            out.dtheta_src += g * dt;
            k0
        };
        let mut first = 0.0;
        if include_central {
            first = term(0.0, &mut out);
        }
        let mut n = 1.0;
        loop {
            let a = term(n, &mut out);
            let b = term(-n, &mut out);
            if first == 0.0 {
                first = a.max(b);
            }
            if a.max(b) < 1e-18 * first.max(1e-300) || lam * (n * self.c - 0.5 * self.c) > 745.0 {
                break;
            }
            n += 1.0;
        }
        out
    }

    fn mode_sum(&self, dx: f64, dtheta: f64) -> KernelValue {
        let adx = dx.abs();
        let sign = dx.signum();
        let inv_c = 1.0 / self.c;
        let vbar = self.lambda * self.lambda;
        let mut out = KernelValue::default();
        let kappa0 = self.lambda;
        let e0 = (-kappa0 * adx).exp();
        if kappa0 > 0.0 {
            out.value += inv_c * e0 / (2.0 * kappa0);
        }
        out.dx_src += inv_c * sign * e0 * 0.5;
        let (s1, c1) = (self.omega * dtheta).sin_cos();
        let (mut sn, mut cn) = (0.0, 1.0);
        let mut n = 1usize;
        loop {
            let ns = sn * c1 + cn * s1;
            let nc = cn * c1 - sn * s1;
            sn = ns;
            cn = nc;
            if n % 32 == 0 {
                let (s, cc) = (n as f64 * self.omega * dtheta).sin_cos();
                sn = s;
                cn = cc;
            }
            let nw = n as f64 * self.omega;
            let kappa = (nw * nw + vbar).sqrt();
            let e = (-kappa * adx).exp();
            let h = 2.0 * inv_c * e / (2.0 * kappa);
            out.value += h * cn;
            out.dx_src += 2.0 * inv_c * sign * e * 0.5 * cn;
            out.dtheta_src += h * nw * sn;
            if e < 1e-18 * e0.max(1e-300) {
                break;
            }
            n += 1;
        }
        out
    }

    /// Remainder `R = E - E0` from the truncated eigenfunction expansions.
    fn remainder(&self, dx: f64, dtheta: f64, a: &ModalSample, b: &ModalSample) -> KernelValue {
        let adx = dx.abs();
        let sign = if dx > 0.0 {
            1.0
        } else if dx < 0.0 {
            -1.0
        } else {
            0.0
        };
        let mut out = KernelValue::default();
        for k in 0..self.sqrt_mu.len() {
            let s = self.sqrt_mu[k];
            let e = (-s * adx).exp();
            let w = e / (2.0 * s);
            let pa = a.values[k];
            out.value += pa * b.values[k] * w;
            out.dx_src += sign * pa * b.values[k] * e * 0.5;
            out.dtheta_src += pa * b.derivatives[k] * w;
        }
        let inv_c = 1.0 / self.c;
        for (j, &kappa) in self.comparison_kappa.iter().enumerate() {
            let mult = if j == 0 { 1.0 } else { 2.0 };
            let e = (-kappa * adx).exp();
            let jw = j as f64 * self.omega;
            let (sn, cn) = (jw * dtheta).sin_cos();
            out.value -= mult * inv_c * cn * e / (2.0 * kappa);
            out.dx_src -= mult * inv_c * sign * cn * e * 0.5;
            out.dtheta_src -= mult * inv_c * jw * sn * e / (2.0 * kappa);
        }
        out
    }

    /// `lim_{q -> p} [E(p, q) + (1/2pi) log |p - q|]` at a point with angle `theta`.
    pub fn regular_part_at_coincidence(&self, p: &KernelPoint) -> f64 {
        let lam = self.lambda;
        let mut v = ((2.0f64).ln() - EULER_GAMMA - lam.ln()) / (2.0 * PI);
        let mut n = 1.0;
        loop {
            let k = bessel_k0(lam * n * self.c);
            v += 2.0 * k / (2.0 * PI);
            if k < 1e-18 || n > 1e6 {
                break;
            }
            n += 1.0;
        }
        if self.variable {
            let m = p.modal.as_ref().expect("prepared");
            v += self.remainder(0.0, 0.0, m, m).value;
        }
        v
    }

    /// Checks that `E` inverts `Delta + V` on a test bump: returns the
    /// residual `|int E(p, q) (Delta + V) psi(q) dq - psi(p)|`.
    ///
    /// Quadrature is tensor-product: Gauss-Legendre panels of length `h`
    /// (order 4) in `x` and the trapezoid rule with step close to `h` in
    /// `theta`. The logarithmic singularity at `p` is removed by subtracting
    /// `g(p)` times a cut-off logarithm whose integral is known in closed form.
    pub fn verify_fundamental(&self, p: Point, bump: &SeparableBump, h: f64) -> FundamentalCheck {
        let rho = 0.25;
        let g_p = bump.source(p, &self.spectrum);
        let n_theta = (self.c / h).round().max(8.0) as usize;
        let ht = self.c / n_theta as f64;
        let (gx, gw) = crate::quadrature::gauss_legendre(4);
        // axial extent: bump support and the subtraction disk
        let lo = (bump.center.x - bump.half_width).min(p.x - rho);
        let hi = (bump.center.x + bump.half_width).max(p.x + rho);
        // panel grid anchored at the bump edge
        let start = bump.center.x - bump.half_width - h * ((bump.center.x - bump.half_width - lo) / h).ceil();
        let panels = ((hi - start) / h).ceil() as usize;
        let p_kernel = self.prepare(p);
        let theta0 = bump.center.theta - bump.half_width;
        let mut total = 0.0;
        let mut count = 0usize;
        for k in 0..panels {
            let a = start + k as f64 * h;
            for (t, w) in gx.iter().zip(&gw) {
                let x = a + 0.5 * h * (1.0 + t);
                let wx = 0.5 * h * w;
                for j in 0..n_theta {
                    let theta = theta0 + j as f64 * ht;
                    let q = Point::new(x, theta);
                    let r = self.distance(p, q);
                    let g = bump.source(q, &self.spectrum);
                    let local = if r < rho {
                        let u = r / rho;
                        -(r.ln()) / (2.0 * PI) * (1.0 - u * u).powi(4)
                    } else {
                        0.0
                    };
                    if g == 0.0 && local == 0.0 {
                        continue;
                    }
                    let e = if g != 0.0 { self.eval_unchecked(&p_kernel, &self.prepare(q)).value } else { 0.0 };
                    total += (e * g - g_p * local) * wx * ht;
                    count += 1;
                }
            }
        }
        // closed form of the integral of the cut-off logarithm
        let h5 = 137.0 / 60.0;
        let local_integral = -rho * rho * (rho.ln() / 10.0 - h5 / 20.0);
        let value = total + g_p * local_integral;
        let expected = bump.value(p, self.c);
        FundamentalCheck { h, value, expected, residual: (value - expected).abs(), evaluations: count }
    }
}

/// Outcome of [`GreenKernel::verify_fundamental`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundamentalCheck {
    pub h: f64,
    pub value: f64,
    pub expected: f64,
    pub residual: f64,
    pub evaluations: usize,
}

/// Compactly supported test function
/// `psi(x, theta) = amplitude * b((x - x0)/a) b((theta - theta0)/a)`,
/// `b(s) = (1 - s^2)^k` on `|s| < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparableBump {
    pub center: Point,
    pub half_width: f64,
    pub power: i32,
    pub amplitude: f64,
}

impl SeparableBump {
    pub fn new(center: Point, half_width: f64) -> Self {
        Self { center, half_width, power: 8, amplitude: 1.0 }
    }

    fn profile(&self, s: f64) -> [f64; 3] {
        if s.abs() >= 1.0 {
            return [0.0; 3];
        }
        let k = self.power;
        let kf = k as f64;
        let q = 1.0 - s * s;
        let b = q.powi(k);
        let d1 = -2.0 * kf * s * q.powi(k - 1);
        let d2 = -2.0 * kf * q.powi(k - 1) + 4.0 * kf * (kf - 1.0) * s * s * q.powi(k - 2);
        [b, d1, d2]
    }

    fn local(&self, p: Point, c: f64) -> (f64, f64) {
        let a = self.half_width;
        ((p.x - self.center.x) / a, reduce_periodic(p.theta - self.center.theta, c) / a)
    }

    /// `psi(p)`.
    pub fn value(&self, p: Point, c: f64) -> f64 {
        let (sx, st) = self.local(p, c);
        self.amplitude * self.profile(sx)[0] * self.profile(st)[0]
    }

    /// `(Delta + V) psi` at `p`, with `Delta = -d_x^2 - d_theta^2`.
    pub fn source(&self, p: Point, spectrum: &CrossSectionSpectrum) -> f64 {
        let c = spectrum.circumference();
        let (sx, st) = self.local(p, c);
        let bx = self.profile(sx);
        let bt = self.profile(st);
        if bx[0] == 0.0 || bt[0] == 0.0 {
            return 0.0;
        }
        let a2 = self.half_width * self.half_width;
        let lap = -(bx[2] * bt[0] + bx[0] * bt[2]) / a2;
        self.amplitude * (lap + spectrum.potential().value(p.theta, c) * bx[0] * bt[0])
    }

    /// Whether `p` lies in the closed support.
    pub fn contains(&self, p: Point, c: f64) -> bool {
        let (sx, st) = self.local(p, c);
        sx.abs() <= 1.0 && st.abs() <= 1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Potential;

    fn kernel(cos: Vec<f64>, m: usize) -> GreenKernel {
        let s = CrossSectionSpectrum::new(2.0 * PI, &Potential { fourier_cos: cos, fourier_sin: vec![] }, m).unwrap();
        GreenKernel::new(Arc::new(s))
    }

    #[test]
    fn image_and_mode_sums_agree_in_overlap() {
        let k = kernel(vec![1.0], 32);
        for &(dx, dt) in &[(0.5, 0.3), (0.7, 2.0), (1.0, -3.0), (0.55, 0.0)] {
            let a = k.image_sum(dx, reduce_periodic(dt, k.c), true);
            let b = k.mode_sum(dx, dt);
            assert!((a.value - b.value).abs() < 1e-14 * a.value.abs().max(1e-3), "{dx} {dt}");
            assert!((a.dx_src - b.dx_src).abs() < 1e-13);
            assert!((a.dtheta_src - b.dtheta_src).abs() < 1e-13);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let k = kernel(vec![1.0, 0.6], 32);
        let p = Point::new(0.2, 1.0);
        let h = 1e-6;
        for &q in &[Point::new(0.5, 1.4), Point::new(1.3, 4.0), Point::new(-0.1, 0.7)] {
            let g = k.gradient_source(p, q).unwrap();
            let fx = (k.eval(p, Point::new(q.x + h, q.theta)).unwrap() - k.eval(p, Point::new(q.x - h, q.theta)).unwrap()) / (2.0 * h);
            let ft = (k.eval(p, Point::new(q.x, q.theta + h)).unwrap() - k.eval(p, Point::new(q.x, q.theta - h)).unwrap()) / (2.0 * h);
            assert!((g.x - fx).abs() < 1e-7, "{} vs {}", g.x, fx);
            assert!((g.theta - ft).abs() < 1e-7, "{} vs {}", g.theta, ft);
        }
    }

    #[test]
    fn symmetric_for_variable_potential() {
        let k = kernel(vec![1.0, 1.0], 32);
        let p = Point::new(0.3, 0.4);
        let q = Point::new(-0.8, 2.9);
        assert!((k.eval(p, q).unwrap() - k.eval(q, p).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn coincident_points_rejected() {
        let k = kernel(vec![1.0], 16);
        let p = Point::new(0.0, 1.0);
        assert!(matches!(k.eval(p, p), Err(Error::CoincidentPoints { .. })));
        assert!(matches!(k.eval(p, Point::new(0.0, 1.0 + 2.0 * PI)), Err(Error::CoincidentPoints { .. })));
    }

    #[test]
    fn regular_part_is_the_diagonal_limit() {
        for cos in [vec![1.0], vec![1.0, 0.5]] {
            let k = kernel(cos, 48);
            let p = Point::new(0.0, 1.3);
            let reg = k.regular_part_at_coincidence(&k.prepare(p));
            let r = 1e-4;
            let q = Point::new(r * 0.6, 1.3 + r * 0.8);
            let approx = k.eval(p, q).unwrap() + r.ln() / (2.0 * PI);
            assert!((approx - reg).abs() < 1e-4, "{approx} vs {reg}");
        }
    }

    #[test]
    fn fundamental_solution_on_bumps() {
        let k = kernel(vec![1.0], 32);
        let p = Point::new(0.013, 1.0071);
        let far = SeparableBump::new(Point::new(3.0, 1.0), 0.5);
        assert!(k.verify_fundamental(p, &far, 1.0 / 64.0).residual < 1e-8);
        let near = SeparableBump::new(p, 0.5);
        let r64 = k.verify_fundamental(p, &near, 1.0 / 64.0).residual;
        let r128 = k.verify_fundamental(p, &near, 1.0 / 128.0).residual;
        assert!(r64 < 1e-4, "{r64}");
        assert!(r128 < 1e-5, "{r128}");
    }
}
