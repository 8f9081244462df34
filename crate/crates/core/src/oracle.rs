//! Independent reference values used by the checks.
//!
//! Nothing here shares code paths with the solvers: `K0` is integrated
//! numerically from its integral representation, and the strip solutions
//! are written down by separation of variables.

use std::f64::consts::PI;

use crate::quadrature::integrate_adaptive;

/// `K0(z) = int_0^inf exp(-z cosh t) dt`, integrated adaptively.
pub fn k0_by_quadrature(z: f64) -> f64 {
    assert!(z > 0.0, "K0 needs a positive argument");
    // the integrand is below exp(-745) beyond this point
    let top = (745.0 / z).max(1.0 + 1e-12).acosh() + 1.0;
    let r = integrate_adaptive(|t: f64| [(-z * t.cosh()).exp()], 0.0, top, 16, 1e-16, 20000);
    r.value[0]
}

/// Green's function of `Delta + lambda^2` on the cylinder of circumference
/// `c` as an image sum of `K0`, with images up to `|n| <= images`.
pub fn image_sum_kernel(lambda: f64, c: f64, dx: f64, dtheta: f64, images: i32) -> f64 {
    (-images..=images)
        .map(|n| {
            let r = dx.hypot(dtheta + n as f64 * c);
            k0_by_quadrature(lambda * r)
        })
        .sum::<f64>()
        / (2.0 * PI)
}

/// Number of images needed for relative accuracy `tol` at `lambda`, `c`.
pub fn images_for(lambda: f64, c: f64, tol: f64) -> i32 {
    ((-tol.ln()) / (lambda * c)).ceil() as i32 + 1
}

/// Solution in the strip `0 < theta < pi` with `V = 1`, `u = cos(xi x)` on
/// `theta = 0` and `u = 0` on `theta = pi`.
pub fn strip_mode_solution(xi: f64, x: f64, theta: f64) -> f64 {
    let k = (1.0 + xi * xi).sqrt();
    (xi * x).cos() * (k * (PI - theta)).sinh() / (k * PI).sinh()
}

/// Outward normal derivative on `theta = 0` of [`strip_mode_solution`]
/// divided by its boundary value: `k coth(k pi)`, `k = sqrt(1 + xi^2)`.
pub fn strip_dtn_symbol(xi: f64) -> f64 {
    let k = (1.0 + xi * xi).sqrt();
    k / (k * PI).tanh()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::bessel_k0;

    #[test]
    fn k0_quadrature_matches_series() {
        for &z in &[0.05, 0.3, 1.0, 2.5, 8.0, 30.0] {
            let q = k0_by_quadrature(z);
            assert!((q - bessel_k0(z)).abs() < 1e-13 * q.max(1e-300) + 1e-300, "{z}: {q}");
        }
    }

    #[test]
    fn strip_solution_satisfies_equation() {
        let (x, t, h) = (0.4, 1.1, 1e-3);
        let u = |x: f64, t: f64| strip_mode_solution(1.0, x, t);
        let lap = -(u(x + h, t) + u(x - h, t) + u(x, t + h) + u(x, t - h) - 4.0 * u(x, t)) / (h * h);
        assert!((lap + u(x, t)).abs() < 1e-6);
        assert!((u(0.0, 0.0) - 1.0).abs() < 1e-15);
        assert!(u(0.0, PI).abs() < 1e-15);
    }
}
