//! Randomized properties of the model, kernel, indicial family and solvers.

use std::f64::consts::{PI, TAU};
use std::sync::{Arc, OnceLock};

use approx::assert_relative_eq;
use cylpot_core::boundary::{Bump, Curve, Resolution, Side, TrigSeries};
use cylpot_core::dirichlet::{self, DtNReport};
use cylpot_core::greens::GreenKernel;
use cylpot_core::layerops::LayerOperatorSet;
use cylpot_core::model::{CurveConfig, ModelConfig, Point, Potential};
use cylpot_core::pipeline::operators_for;
use cylpot_core::spectrum::CrossSectionSpectrum;
use cylpot_core::taufamily::{self, ArcDomain, ChebSeries};
use num_complex::Complex64;
use proptest::prelude::*;

fn kernel(cos: Vec<f64>) -> GreenKernel {
    let spec = CrossSectionSpectrum::new(2.0 * PI, &Potential { fourier_cos: cos, fourier_sin: vec![] }, 32).unwrap();
    GreenKernel::new(Arc::new(spec))
}

fn disk_ops() -> &'static (Arc<LayerOperatorSet>, DtNReport) {
    static OPS: OnceLock<(Arc<LayerOperatorSet>, DtNReport)> = OnceLock::new();
    OPS.get_or_init(|| {
        let gk = kernel(vec![1.0, 0.5]);
        let curve = Curve::circle(Point::new(0.0, PI), 0.5, Side::Inside).unwrap();
        let ops = operators_for(&gk, &[curve], &Resolution { nodes: 64, ..Resolution::default() }).unwrap();
        let rep = dirichlet::dtn(&ops).unwrap();
        (ops, rep)
    })
}

fn curve_config() -> impl Strategy<Value = CurveConfig> {
    prop_oneof![
        (-1.0..1.0f64, 1.0..5.0f64, 0.1..0.8f64).prop_map(|(x, t, r)| CurveConfig::Circle {
            center_x: x,
            center_theta: t,
            radius: r,
            side: Side::Inside
        }),
        (0.0..6.0f64, proptest::option::of((-1.0..1.0f64, 0.5..2.0f64, -0.5..0.5f64))).prop_map(|(level, b)| {
            CurveConfig::Graph {
                level,
                bump: b.map(|(center, width, amplitude)| Bump { center, width, amplitude }),
                side: Side::Above,
            }
        }),
        (0.2..0.6f64).prop_map(|a| CurveConfig::Closed {
            x: TrigSeries { cos: vec![0.0, a], sin: vec![0.0] },
            theta: TrigSeries { cos: vec![PI], sin: vec![0.0, 0.5 * a] },
            side: Side::Outside
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn model_config_json_round_trip(
        cos in proptest::collection::vec(-1.0..1.0f64, 1..5),
        sin in proptest::collection::vec(-1.0..1.0f64, 0..4),
        curves in proptest::collection::vec(curve_config(), 0..3),
        cutoff in 8usize..128,
        end_marker in 1.0..30.0f64,
    ) {
        let cfg = ModelConfig {
            circumference: 2.0 * PI,
            potential: Potential { fourier_cos: cos, fourier_sin: sin },
            curves,
            mode_cutoff: cutoff,
            end_marker,
        };
        let text = cfg.to_json().unwrap();
        prop_assert_eq!(ModelConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn kernel_is_symmetric(
        x1 in -2.0..2.0f64, t1 in 0.0..TAU,
        x2 in -2.0..2.0f64, t2 in 0.0..TAU,
    ) {
        let gk = kernel(vec![1.0, 0.6]);
        let (p, q) = (Point::new(x1, t1), Point::new(x2, t2));
        prop_assume!(gk.distance(p, q) > 1e-3);
        let a = gk.eval(p, q).unwrap();
        let b = gk.eval(q, p).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn indicial_family_is_even(tau in 0.0..15.0f64, a in 0.1..2.0f64, len in 0.3..3.0f64) {
        let spec = CrossSectionSpectrum::new(2.0 * PI, &Potential { fourier_cos: vec![1.0, 0.4], fourier_sin: vec![] }, 32).unwrap();
        let domain = ArcDomain::from_spectrum(&spec, vec![(a, a + len)]).unwrap();
        let plus = taufamily::tau_layer_matrices(&domain, &spec, tau);
        let minus = taufamily::tau_layer_matrices(&domain, &spec, -tau);
        prop_assert!((&plus.s - &minus.s).amax() == 0.0);
        prop_assert!((&plus.k - &minus.k).amax() == 0.0);
    }

    #[test]
    fn rellich_identities_hold(
        ur in proptest::collection::vec(-1.0..1.0f64, 4..12),
        ui in proptest::collection::vec(-1.0..1.0f64, 4..12),
        w in proptest::collection::vec(-1.0..1.0f64, 2..8),
        a in 0.0..2.0f64,
        len in 0.5..3.0f64,
    ) {
        let domain = ArcDomain::new(2.0 * PI, Potential::constant(1.0), vec![(a, a + len)]).unwrap();
        let n = ur.len().min(ui.len());
        let u = ChebSeries::new(a, a + len, (0..n).map(|k| Complex64::new(ur[k], ui[k])).collect());
        let w = ChebSeries::new(a, a + len, w);
        let rep = taufamily::rellich_check(&domain, &[u], &[w]).unwrap();
        prop_assert!(rep.max_residual() < 1e-9, "{:?}", rep);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn dtn_form_is_nonnegative(values in proptest::collection::vec(-1.0..1.0f64, 64)) {
        let (_, rep) = disk_ops();
        prop_assert!(rep.quadratic_form(&values) >= -1e-8);
    }

    #[test]
    fn dirichlet_solve_is_linear(
        f in proptest::collection::vec(-1.0..1.0f64, 64),
        g in proptest::collection::vec(-1.0..1.0f64, 64),
        alpha in -2.0..2.0f64,
    ) {
        let (ops, _) = disk_ops();
        let combo: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a + alpha * b).collect();
        let sf = dirichlet::solve_dirichlet(ops, &f).unwrap();
        let sg = dirichlet::solve_dirichlet(ops, &g).unwrap();
        let sc = dirichlet::solve_dirichlet(ops, &combo).unwrap();
        for i in 0..64 {
            let lin = sf.density.nodes[i] + alpha * sg.density.nodes[i];
            prop_assert!((sc.density.nodes[i] - lin).abs() < 1e-10 * (1.0 + lin.abs()));
        }
    }
}

#[test]
fn ground_state_is_stable_under_cutoff_doubling() {
    let v = Potential { fourier_cos: vec![1.0, 1.0], fourier_sin: vec![] };
    let a = CrossSectionSpectrum::new(2.0 * PI, &v, 32).unwrap();
    let b = CrossSectionSpectrum::new(2.0 * PI, &v, 64).unwrap();
    assert_relative_eq!(a.ground_state(), b.ground_state(), max_relative = 1e-10);
}
