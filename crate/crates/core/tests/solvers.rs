//! End-to-end solves on regions bounded by graph curves.

use std::f64::consts::PI;
use std::sync::Arc;

use cylpot_core::boundary::{Bump, Curve, Resolution, Side};
use cylpot_core::dirichlet;
use cylpot_core::greens::GreenKernel;
use cylpot_core::model::{ModelConfig, Point, Potential};
use cylpot_core::pipeline::{operators_for, Setup};
use cylpot_core::spectrum::CrossSectionSpectrum;

fn kernel() -> GreenKernel {
    GreenKernel::new(Arc::new(CrossSectionSpectrum::new(2.0 * PI, &Potential::constant(1.0), 32).unwrap()))
}

fn res(l: f64) -> Resolution {
    Resolution { half_length: l, ..Resolution::default() }
}

#[test]
fn constant_data_on_straight_strip_uses_far_field_tails() {
    let gk = kernel();
    let curves = [Curve::graph(0.0, None, Side::Above).unwrap(), Curve::graph(PI, None, Side::Below).unwrap()];
    let ops = operators_for(&gk, &curves, &res(12.0)).unwrap();
    assert_eq!(ops.tails.len(), 4);
    let sol = dirichlet::solve_dirichlet(&ops, &vec![1.0; ops.len()]).unwrap();
    // far-field densities are exact here, so the whole line is consistent
    for &(x, t) in &[(0.0, 1.0), (8.0, 2.0), (-11.0, 0.5)] {
        let exact = (t - PI / 2.0).cosh() / (PI / 2.0).cosh();
        let u = sol.value(Point::new(x, t)).unwrap();
        assert!((u - exact).abs() < 1e-6, "({x}, {t}): {u} vs {exact}");
    }
}

#[test]
fn manufactured_solution_with_bump() {
    let gk = kernel();
    let bump = Bump { center: 0.0, width: 1.5, amplitude: 0.45 };
    let curves = [Curve::graph(0.0, Some(bump), Side::Above).unwrap(), Curve::graph(PI, None, Side::Below).unwrap()];
    let ops = operators_for(&gk, &curves, &res(15.0)).unwrap();
    let p0 = Point::new(0.5, 4.5);
    let f: Vec<f64> = ops.disc.nodes.iter().map(|n| gk.eval(n.point, p0).unwrap()).collect();
    let d = dirichlet::solve_dirichlet(&ops, &f).unwrap();
    let s = dirichlet::ssinv_solve(&ops, &f).unwrap();
    for &(x, t) in &[(0.0, 1.2), (1.0, 0.8), (-2.0, 2.5), (3.0, 1.5)] {
        let p = Point::new(x, t);
        let exact = gk.eval(p, p0).unwrap();
        // default panels resolve the bump to a few parts in 1e6; halving them gives 1e-8
        for u in [d.value(p).unwrap(), s.value(p).unwrap()] {
            assert!((u - exact).abs() < 1e-5 * exact.abs(), "({x}, {t}): {u} vs {exact}");
        }
    }
}

#[test]
fn setup_from_json() {
    let text = r#"{
        "potential": {"fourier_cos": [1.0, 1.0], "fourier_sin": []},
        "curves": [{"kind": "circle", "center_x": 0.0, "center_theta": 3.14159, "radius": 0.5, "side": "inside"}],
        "end_marker": 2.0
    }"#;
    let cfg = ModelConfig::from_json(text).unwrap();
    let setup = Setup::new(&cfg).unwrap();
    let ops = setup.operators(&Resolution { nodes: 64, ..Resolution::default() }).unwrap();
    assert_eq!(ops.len(), 64);
    assert!(ops.diagnostics.symmetry_residual < 1e-10);
}
