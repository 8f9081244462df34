//! Spectrum of the cross-sectional operator `A = -d^2/dtheta^2 + V(theta)` on
//! the circle, its resolvent norms and the Green's function of `A + tau^2`.
//!
//! `A` is discretized by Galerkin projection onto the real Fourier basis
//! `{1/sqrt(c), sqrt(2/c) cos(j w theta), sqrt(2/c) sin(j w theta)}`. The basis
//! carries a margin of extra harmonics beyond the retained `2M + 1`
//! eigenpairs so that the retained eigenvectors are resolved to rounding.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{reduce_periodic, CylinderModel, Potential};

/// Eigenpairs of the cross-sectional operator.
#[derive(Debug, Clone)]
pub struct CrossSectionSpectrum {
    circumference: f64,
    omega: f64,
    potential: Potential,
    mode_cutoff: usize,
    basis_modes: usize,
    eigenvalues: Vec<f64>,
    /// Columns are eigenvector coefficients in the real Fourier basis.
    eigenvectors: DMatrix<f64>,
    residuals: Vec<f64>,
}

/// Eigenfunction values (and derivatives) at one angle.
#[derive(Debug, Clone)]
pub struct ModalSample {
    pub theta: f64,
    pub values: Vec<f64>,
    pub derivatives: Vec<f64>,
}

/// Operator norms of `(A + tau^2)^{-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolventNorms {
    pub tau: f64,
    /// Norm on `L^2`.
    pub l2: f64,
    /// Norm from `L^2` to `H^2`, with `||u||_{H^2} = ||(1 + A) u||`.
    pub l2_to_h2: f64,
}

/// Computes the cross-section spectrum for `model.mode_cutoff`.
pub fn eigensystem(model: &CylinderModel) -> Result<CrossSectionSpectrum> {
    CrossSectionSpectrum::new(model.circumference, &model.potential, model.mode_cutoff)
}

/// Real Fourier basis values and derivatives at `theta`, `modes` harmonics.
fn basis_at(theta: f64, omega: f64, c: f64, modes: usize, values: &mut [f64], derivs: &mut [f64]) {
    let a0 = 1.0 / c.sqrt();
    let a = (2.0 / c).sqrt();
    values[0] = a0;
    derivs[0] = 0.0;
    let (s1, c1) = (omega * theta).sin_cos();
    let (mut sj, mut cj) = (0.0, 1.0);
    for j in 1..=modes {
        // rotate by one harmonic; refresh periodically to limit drift
        if j % 32 == 0 {
            let (s, cc) = (j as f64 * omega * theta).sin_cos();
            sj = s;
            cj = cc;
        } else {
            let ns = sj * c1 + cj * s1;
            let nc = cj * c1 - sj * s1;
            sj = ns;
            cj = nc;
        }
        let jw = j as f64 * omega;
        values[2 * j - 1] = a * cj;
        values[2 * j] = a * sj;
        derivs[2 * j - 1] = -a * jw * sj;
        derivs[2 * j] = a * jw * cj;
    }
}

fn galerkin_matrix(c: f64, potential: &Potential, rows: usize, cols: usize) -> DMatrix<f64> {
    let omega = 2.0 * PI / c;
    let dim_r = 2 * rows + 1;
    let dim_c = 2 * cols + 1;
    let points = 2 * (rows + cols + potential.degree()) + 16;
    let h = c / points as f64;
    let mut vals_r = vec![0.0; dim_r];
    let mut der_r = vec![0.0; dim_r];
    let mut a = DMatrix::<f64>::zeros(dim_r, dim_c);
    for p in 0..points {
        let theta = p as f64 * h;
        basis_at(theta, omega, c, rows, &mut vals_r, &mut der_r);
        let v = potential.value(theta, c) * h;
        for jc in 0..dim_c {
            let bc = vals_r[jc] * v;
            for ir in 0..dim_r {
                a[(ir, jc)] += vals_r[ir] * bc;
            }
        }
    }
    for j in 1..=rows.min(cols) {
        let k = (j as f64 * omega).powi(2);
        a[(2 * j - 1, 2 * j - 1)] += k;
        a[(2 * j, 2 * j)] += k;
    }
    a
}

impl CrossSectionSpectrum {
    /// Solves the Galerkin eigenproblem retaining `2 * mode_cutoff + 1` eigenpairs.
    pub fn new(circumference: f64, potential: &Potential, mode_cutoff: usize) -> Result<Self> {
        let c = circumference;
        let omega = 2.0 * PI / c;
        let basis_modes = mode_cutoff + 16.max(4 * potential.degree());
        let a = galerkin_matrix(c, potential, basis_modes, basis_modes);
        let a = 0.5 * (&a + a.transpose());
        let eig = SymmetricEigen::new(a);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let keep = 2 * mode_cutoff + 1;
        let dim = 2 * basis_modes + 1;
        let mut vectors = DMatrix::<f64>::zeros(dim, keep);
        let mut values = Vec::with_capacity(keep);
        for (col, &i) in order.iter().take(keep).enumerate() {
            values.push(eig.eigenvalues[i]);
            vectors.set_column(col, &eig.eigenvectors.column(i));
        }
        let mu0 = values[0];
        if !(mu0 > 1e-10) {
            return Err(Error::NonPositiveGroundState { mu0 });
        }
        // residuals against a basis with twice as many harmonics
        let big = galerkin_matrix(c, potential, 2 * basis_modes, basis_modes);
        let applied = &big * &vectors;
        let residuals = (0..keep)
            .map(|k| {
                let mut r = applied.column(k).clone_owned();
                for i in 0..dim {
                    r[i] -= values[k] * vectors[(i, k)];
                }
                r.norm()
            })
            .collect();
        Ok(Self {
            circumference: c,
            omega,
            potential: potential.clone(),
            mode_cutoff,
            basis_modes,
            eigenvalues: values,
            eigenvectors: vectors,
            residuals,
        })
    }

    pub fn circumference(&self) -> f64 {
        self.circumference
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn mode_cutoff(&self) -> usize {
        self.mode_cutoff
    }

    /// Dimension of the Galerkin space.
    pub fn galerkin_dim(&self) -> usize {
        2 * self.basis_modes + 1
    }

    /// Retained eigenvalues, ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Residuals `||A phi_k - mu_k phi_k||` measured at doubled resolution.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn ground_state(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Mean of the potential, the constant of the comparison operator.
    pub fn mean_potential(&self) -> f64 {
        self.potential.mean()
    }

    pub fn is_constant_potential(&self) -> bool {
        self.potential.is_constant()
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Normalized eigenfunction `k` sampled at `theta` (sign as returned by the solver).
    pub fn eigenfunction(&self, k: usize, theta: f64) -> f64 {
        self.modal(theta).values[k]
    }

    /// Eigenfunction coefficient vector `k` in the real Fourier basis.
    pub fn eigenvector(&self, k: usize) -> DVector<f64> {
        self.eigenvectors.column(k).clone_owned()
    }

    /// Values and derivatives of all retained eigenfunctions at `theta`.
    pub fn modal(&self, theta: f64) -> ModalSample {
        let dim = self.galerkin_dim();
        let mut bv = vec![0.0; dim];
        let mut bd = vec![0.0; dim];
        basis_at(theta, self.omega, self.circumference, self.basis_modes, &mut bv, &mut bd);
        let keep = self.eigenvalues.len();
        let mut values = vec![0.0; keep];
        let mut derivatives = vec![0.0; keep];
        for k in 0..keep {
            let col = self.eigenvectors.column(k);
            let (mut v, mut d) = (0.0, 0.0);
            for i in 0..dim {
                v += col[i] * bv[i];
                d += col[i] * bd[i];
            }
            values[k] = v;
            derivatives[k] = d;
        }
        ModalSample { theta, values, derivatives }
    }

    /// Resolvent norms of `A + tau^2` from the retained spectrum.
    pub fn indicial_resolvent_norm(&self, tau: f64) -> ResolventNorms {
        let t2 = tau * tau;
        let l2 = 1.0 / (self.eigenvalues[0] + t2);
        let l2_to_h2 = self.eigenvalues.iter().map(|&mu| (1.0 + mu) / (mu + t2)).fold(0.0, f64::max);
        ResolventNorms { tau, l2, l2_to_h2 }
    }

    /// Comparison kernel terms for the constant potential `mean`, summed over
    /// the same number of harmonics as the retained spectrum:
    /// value and derivative with respect to the source angle.
    fn comparison(&self, tau: f64, d: f64) -> (f64, f64) {
        let c = self.circumference;
        let base = self.mean_potential() + tau * tau;
        let mut v = 1.0 / base;
        let mut dv = 0.0;
        for j in 1..=self.mode_cutoff {
            let jw = j as f64 * self.omega;
            let den = jw * jw + base;
            let (s, cs) = (jw * d).sin_cos();
            v += 2.0 * cs / den;
            dv += 2.0 * jw * s / den;
        }
        (v / c, dv / c)
    }

    /// Smooth remainder `g_tau - g_tau^{const}` and its source derivative.
    pub fn green_remainder(&self, tau: f64, a: &ModalSample, b: &ModalSample) -> (f64, f64) {
        if self.is_constant_potential() {
            return (0.0, 0.0);
        }
        let t2 = tau * tau;
        let (mut v, mut dv) = (0.0, 0.0);
        for k in 0..self.eigenvalues.len() {
            let w = 1.0 / (self.eigenvalues[k] + t2);
            v += a.values[k] * b.values[k] * w;
            dv += a.values[k] * b.derivatives[k] * w;
        }
        let (cv, cdv) = self.comparison(tau, a.theta - b.theta);
        (v - cv, dv - cdv)
    }

    /// Green's function `g_tau(theta, theta')` of `A + tau^2` on the circle.
    pub fn circle_green(&self, tau: f64, theta: f64, theta_src: f64) -> f64 {
        let lambda = (self.mean_potential() + tau * tau).sqrt();
        let g0 = constant_circle_green(lambda, self.circumference, theta - theta_src).0;
        if self.is_constant_potential() {
            return g0;
        }
        g0 + self.green_remainder(tau, &self.modal(theta), &self.modal(theta_src)).0
    }

    /// `d g_tau / d theta'` at `(theta, theta')`. When the two angles coincide
    /// modulo `c`, `side` selects the limit `theta - theta' -> 0+` (`side > 0`),
    /// `0-` (`side < 0`) or the average of both (`side == 0`).
    pub fn circle_green_source_derivative(&self, tau: f64, theta: f64, theta_src: f64, side: f64) -> f64 {
        let lambda = (self.mean_potential() + tau * tau).sqrt();
        let g0 = constant_circle_green_with_side(lambda, self.circumference, theta - theta_src, side).1;
        if self.is_constant_potential() {
            return g0;
        }
        g0 + self.green_remainder(tau, &self.modal(theta), &self.modal(theta_src)).1
    }

    /// CSV rows `k,mu,residual`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,mu,residual\n");
        for (k, (mu, r)) in self.eigenvalues.iter().zip(&self.residuals).enumerate() {
            s.push_str(&format!("{k},{mu},{r}\n"));
        }
        s
    }
}

/// Green's function of `-d^2 + lambda^2` on a circle of circumference `c`
/// and its derivative with respect to the source angle, at separation
/// `d = theta - theta'`. At `d = 0` the derivative is the average of the
/// one-sided limits, which is zero.
pub fn constant_circle_green(lambda: f64, c: f64, d: f64) -> (f64, f64) {
    constant_circle_green_with_side(lambda, c, d, 0.0)
}

fn constant_circle_green_with_side(lambda: f64, c: f64, d: f64, side: f64) -> (f64, f64) {
    let d = reduce_periodic(d, c);
    let b = 0.5 * c;
    let a = b - d.abs();
    let denom = 1.0 - (-2.0 * lambda * b).exp();
    let e1 = (lambda * (a - b)).exp();
    let e2 = (-lambda * (a + b)).exp();
    let g = (e1 + e2) / (2.0 * lambda * denom);
    let sign = if d > 0.0 {
        1.0
    } else if d < 0.0 {
        -1.0
    } else if side > 0.0 {
        1.0
    } else if side < 0.0 {
        -1.0
    } else {
        0.0
    };
    let dg = sign * (e1 - e2) / (2.0 * denom);
    (g, dg)
}
