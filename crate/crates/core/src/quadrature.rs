//! Quadrature building blocks: Gauss-Legendre rules, adaptive Gauss-Kronrod,
//! Clenshaw-Curtis weights, Kress logarithmic weights for periodic curves and
//! product-integration weights for `log|t - t0|` on a polynomial panel.

use std::collections::BinaryHeap;
use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Barycentric weights for Lagrange interpolation through `nodes`.
pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    nodes
        .iter()
        .enumerate()
        .map(|(j, &xj)| {
            let prod: f64 = nodes
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != j)
                .map(|(_, &xk)| xj - xk)
                .product();
            1.0 / prod
        })
        .collect()
}

/// Values of all Lagrange basis polynomials at `t`.
pub fn lagrange_basis(nodes: &[f64], bary: &[f64], t: f64, out: &mut [f64]) {
    if let Some(j) = nodes.iter().position(|&x| x == t) {
        out.iter_mut().for_each(|v| *v = 0.0);
        out[j] = 1.0;
        return;
    }
    let mut denom = 0.0;
    for j in 0..nodes.len() {
        let c = bary[j] / (t - nodes[j]);
        out[j] = c;
        denom += c;
    }
    out.iter_mut().for_each(|v| *v /= denom);
}

/// `int_{-1}^{1} log|t - t0| L_j(t) dt` for the Lagrange basis on `nodes`.
///
/// Computed by composite Gauss-Legendre on a mesh graded geometrically toward
/// the singularity (or toward the nearest end when `t0` lies outside).
pub fn log_product_weights(nodes: &[f64], t0: f64) -> Vec<f64> {
    let bary = barycentric_weights(nodes);
    let (gx, gw) = gauss_legendre(16);
    let mut breaks: Vec<f64> = vec![-1.0, 1.0];
    let grade_toward = |c: f64, lo: f64, hi: f64, scale_floor: f64, b: &mut Vec<f64>| {
        // geometric points between c and the far end on each side
        for &(far, sign) in &[(hi, 1.0), (lo, -1.0)] {
            let len = (far - c).abs();
            if len <= 0.0 {
                continue;
            }
            let mut d = len * 0.5;
            while d > scale_floor {
                b.push(c + sign * d);
                d *= 0.5;
            }
        }
    };
    if t0 > -1.0 && t0 < 1.0 {
        breaks.push(t0);
        grade_toward(t0, -1.0, 1.0, 1e-14, &mut breaks);
    } else {
        let end = if t0 >= 1.0 { 1.0 } else { -1.0 };
        let dist = (t0 - end).abs();
        grade_toward(end, -1.0, 1.0, dist.max(1e-17) * 0.25, &mut breaks);
    }
    breaks.retain(|&b| (-1.0..=1.0).contains(&b));
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    let mut out = vec![0.0; nodes.len()];
    let mut basis = vec![0.0; nodes.len()];
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (x, wt) in gx.iter().zip(&gw) {
            let t = mid + half * x;
            let dist = (t - t0).abs();
            if dist == 0.0 {
                continue;
            }
            let lg = dist.ln();
            lagrange_basis(nodes, &bary, t, &mut basis);
            for j in 0..nodes.len() {
                out[j] += half * wt * lg * basis[j];
            }
        }
    }
    out
}

/// Kress weights for `int_0^{2pi} log(4 sin^2((t - s)/2)) phi(s) ds` on the
/// equispaced nodes `s_j = 2 pi j / n_nodes`, indexed by `(i - j) mod n_nodes`.
pub fn kress_log_weights(n_nodes: usize) -> Vec<f64> {
    assert!(n_nodes % 2 == 0, "Kress weights need an even node count");
    let n = n_nodes / 2;
    let nf = n as f64;
    (0..n_nodes)
        .map(|k| {
            let d = k as f64 * PI / nf;
            let mut s = 0.0;
            for m in 1..n {
                s += (m as f64 * d).cos() / m as f64;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            -2.0 * PI / nf * s - PI / (nf * nf) * sign
        })
        .collect()
}

/// Chebyshev-Lobatto points `cos(pi j / n)` and Clenshaw-Curtis weights on `[-1, 1]`.
pub fn clenshaw_curtis(n: usize) -> (Vec<f64>, Vec<f64>) {
    let nodes: Vec<f64> = (0..=n).map(|j| (PI * j as f64 / n as f64).cos()).collect();
    let mut w = vec![0.0; n + 1];
    let nf = n as f64;
    for (j, wj) in w.iter_mut().enumerate() {
        let theta = PI * j as f64 / nf;
        let mut v = 1.0;
        let half = n / 2;
        if n % 2 == 0 {
            for k in 1..half {
                v -= 2.0 * (2.0 * k as f64 * theta).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
            v -= (2.0 * half as f64 * theta).cos() / (4.0 * (half * half) as f64 - 1.0);
        } else {
            for k in 1..=half {
                v -= 2.0 * (2.0 * k as f64 * theta).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
        }
        let c = if j == 0 || j == n { 1.0 } else { 2.0 };
        *wj = c * v / nf;
    }
    (nodes, w)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<const D: usize, F: FnMut(f64) -> [f64; D]>(f: &mut F, a: f64, b: f64) -> ([f64; D], f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = [0.0; D];
    let mut g = [0.0; D];
    let fc = f(c);
    for d in 0..D {
        k[d] = WGK[7] * fc[d];
        g[d] = WG[3] * fc[d];
    }
    for i in 0..7 {
        let f1 = f(c - h * XGK[i]);
        let f2 = f(c + h * XGK[i]);
        for d in 0..D {
            let s = f1[d] + f2[d];
            k[d] += WGK[i] * s;
            if i % 2 == 1 {
                g[d] += WG[i / 2] * s;
            }
        }
    }
    let mut err: f64 = 0.0;
    for d in 0..D {
        k[d] *= h;
        g[d] *= h;
        err = err.max((k[d] - g[d]).abs());
    }
    (k, err)
}

struct Piece<const D: usize> {
    a: f64,
    b: f64,
    value: [f64; D],
    err: f64,
}

impl<const D: usize> PartialEq for Piece<D> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<const D: usize> Eq for Piece<D> {}
impl<const D: usize> PartialOrd for Piece<D> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<const D: usize> Ord for Piece<D> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveResult<const D: usize> {
    pub value: [f64; D],
    pub error: f64,
    pub intervals: usize,
}

/// Globally adaptive Gauss-Kronrod (7/15) integration of a vector-valued
/// integrand over `[a, b]`, starting from `initial` equal pieces.
pub fn integrate_adaptive<const D: usize, F: FnMut(f64) -> [f64; D]>(
    mut f: F,
    a: f64,
    b: f64,
    initial: usize,
    abs_tol: f64,
    max_intervals: usize,
) -> AdaptiveResult<D> {
    let initial = initial.max(1);
    let mut heap = BinaryHeap::new();
    let step = (b - a) / initial as f64;
    for i in 0..initial {
        let lo = a + step * i as f64;
        let hi = if i + 1 == initial { b } else { lo + step };
        let (value, err) = gk15(&mut f, lo, hi);
        heap.push(Piece { a: lo, b: hi, value, err });
    }
    loop {
        let total_err: f64 = heap.iter().map(|p| p.err).sum();
        if total_err <= abs_tol || heap.len() >= max_intervals {
            break;
        }
        let worst = heap.pop().expect("non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(Piece { err: 0.0, ..worst });
            continue;
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        heap.push(Piece { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, err: e2 });
    }
    let mut value = [0.0; D];
    let mut error = 0.0;
    let intervals = heap.len();
    for p in heap {
        for d in 0..D {
            value[d] += p.value[d];
        }
        error += p.err;
    }
    AdaptiveResult { value, error, intervals }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1, 2, 5, 10, 16, 33] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn clenshaw_curtis_integrates_polynomials() {
        let (x, w) = clenshaw_curtis(64);
        for deg in 0..40 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
            assert!((q - exact).abs() < 1e-13, "deg={deg}");
        }
    }

    #[test]
    fn kress_weights_reproduce_log_moments() {
        // int_0^{2pi} log(4 sin^2(s/2)) cos(m s) ds = -2 pi / m for m >= 1, 0 for m = 0.
        let nn = 64;
        let r = kress_log_weights(nn);
        for m in 0..20 {
            let q: f64 = (0..nn)
                .map(|j| r[(nn - j) % nn] * (m as f64 * 2.0 * PI * j as f64 / nn as f64).cos())
                .sum();
            let exact = if m == 0 { 0.0 } else { -2.0 * PI / m as f64 };
            assert!((q - exact).abs() < 1e-12, "m={m}: {q} vs {exact}");
        }
    }

    #[test]
    fn log_product_weights_exact_for_polynomials() {
        let (nodes, _) = gauss_legendre(10);
        for &t0 in &[nodes[3], 0.123, -1.0, 2.7, -3.1] {
            let w = log_product_weights(&nodes, t0);
            for deg in 0..10 {
                let q: f64 = nodes.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
                // reference via antiderivative of u^m log|u| after binomial expansion
                let mut exact = 0.0;
                for m in 0..=deg {
                    let binom = binomial(deg as u64, m as u64);
                    let prim = |u: f64| {
                        if u == 0.0 {
                            0.0
                        } else {
                            let mp1 = m as f64 + 1.0;
                            u.powi(m + 1) / mp1 * (u.abs().ln() - 1.0 / mp1)
                        }
                    };
                    exact += binom * t0.powi(deg - m) * (prim(1.0 - t0) - prim(-1.0 - t0));
                }
                // the binomial reference itself cancels like (1 + |t0|)^deg
                let tol = 1e-13 * (1.0 + t0.abs()).powi(deg);
                assert!((q - exact).abs() < tol, "t0={t0} deg={deg}: {q} vs {exact}");
            }
        }
    }

    fn binomial(n: u64, k: u64) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn adaptive_handles_log_singularity() {
        let r = integrate_adaptive(|x: f64| [x.abs().ln(), 1.0], -1.0, 2.0, 3, 1e-13, 2000);
        let exact = (2.0 * 2f64.ln() - 2.0) + (-1.0);
        assert!((r.value[0] - exact).abs() < 1e-11, "{} vs {}", r.value[0], exact);
        assert!((r.value[1] - 3.0).abs() < 1e-14);
    }
}
