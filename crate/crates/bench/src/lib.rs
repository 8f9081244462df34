//! Fixtures shared by the benchmarks in `benches/`.

use std::f64::consts::PI;
use std::sync::Arc;

use cylpot_core::pipeline::operators_for;
use cylpot_core::{CrossSectionSpectrum, Curve, GreenKernel, LayerOperatorSet, Point, Potential, Resolution, Side};

/// Green's function on the circle of length `2 pi` for `V = 1 + a cos(theta)`.
pub fn kernel(a: f64, cutoff: usize) -> GreenKernel {
    let v = Potential { fourier_cos: vec![1.0, a], fourier_sin: vec![] };
    GreenKernel::new(Arc::new(CrossSectionSpectrum::new(2.0 * PI, &v, cutoff).expect("valid potential")))
}

/// Operators on the disk of radius 0.5 about `(0, pi)` with `n` nodes.
pub fn disk(gk: &GreenKernel, n: usize) -> Arc<LayerOperatorSet> {
    let curve = Curve::circle(Point::new(0.0, PI), 0.5, Side::Inside).expect("circle");
    operators_for(gk, &[curve], &Resolution { nodes: n, ..Resolution::default() }).expect("assembly")
}

/// Source point outside the disk and the matching Dirichlet data.
pub fn manufactured_data(gk: &GreenKernel, ops: &LayerOperatorSet) -> (Point, Vec<f64>) {
    let p0 = Point::new(0.3, PI + 0.8);
    let f = ops.disc.nodes.iter().map(|n| gk.eval(n.point, p0).expect("separated")).collect();
    (p0, f)
}
