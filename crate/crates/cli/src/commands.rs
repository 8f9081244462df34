//! The subcommands. Each writes its reports under the output directory and
//! returns the summary lines printed on stdout.

use std::path::Path;
use std::sync::Arc;

use cylpot_core::acceptance;
use cylpot_core::dirichlet::{self, StripMode};
use cylpot_core::greens::SeparableBump;
use cylpot_core::layerops::{jump_check, Density};
use cylpot_core::model::reduce_periodic;
use cylpot_core::oracle;
use cylpot_core::taufamily::{self, ArcDomain, ChebSeries};
use cylpot_core::{CurveConfig, Point, Resolution, Setup};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{read_probes, BoundaryData, Failure, Outcome, RunConfig};

/// Admissible `--tol` and `--grid` names per subcommand.
pub fn allowed(sub: &str) -> (&'static [&'static str], &'static [&'static str]) {
    match sub {
        "spectrum" => (&["residual"], &["cutoff"]),
        "kernel-check" => (&["kernel", "fundamental"], &["pairs", "cutoff"]),
        "jump-check" => (&["jump"], &["nodes", "panel_length", "panel_order", "half_length", "cutoff", "t_min", "levels", "targets"]),
        "solve" => (&["residual", "probe"], &["nodes", "panel_length", "panel_order", "half_length", "cutoff", "method", "representation"]),
        "dtn" => (&["positivity", "symmetry"], &["nodes", "panel_length", "panel_order", "half_length", "cutoff", "forms"]),
        "tau-sweep" => (&["stability"], &["cutoff", "tau_max", "tau_step"]),
        "rellich-check" => (&["rellich"], &["cutoff", "samples", "degree"]),
        "acceptance" => (&[], &["criterion"]),
        _ => (&[], &[]),
    }
}

fn resolution(rc: &RunConfig) -> Outcome<Resolution> {
    let d = Resolution::default();
    Ok(Resolution {
        nodes: rc.grid.usize_or("nodes", d.nodes)?,
        panel_length: rc.grid.f64_or("panel_length", d.panel_length)?,
        panel_order: rc.grid.usize_or("panel_order", d.panel_order)?,
        half_length: rc.grid.f64_or("half_length", d.half_length)?,
    })
}

fn report(rc: &RunConfig, name: &str, value: serde_json::Value) -> Outcome<String> {
    let path = rc.write(name, &(serde_json::to_string_pretty(&value)? + "\n"))?;
    Ok(format!("wrote {}", path.display()))
}

/// Summary lines and missed tolerances of a finished command.
#[derive(Debug, Default)]
pub struct Done {
    pub lines: Vec<String>,
    pub failures: Vec<String>,
}

impl Done {
    fn new(lines: Vec<String>) -> Self {
        Self { lines, failures: Vec::new() }
    }

    fn within(&mut self, name: &str, measured: f64, tol: f64) {
        // NaN fails too
        if !(measured <= tol) {
            self.failures.push(format!("{name} {measured:.3e} exceeds tolerance {tol:.1e}"));
        }
    }
}

pub fn spectrum(rc: &RunConfig) -> Outcome<Done> {
    let setup = Setup::new(&rc.load_model()?)?;
    let tol = rc.tol.f64_or("residual", 1e-8)?;
    let spec = &setup.spectrum;
    let max_residual = spec.residuals().iter().copied().fold(0.0, f64::max);
    let mut lines = vec![format!("wrote {}", rc.write("spectrum.csv", &spec.to_csv())?.display())];
    lines.push(report(
        rc,
        "spectrum.json",
        json!({
            "seed": rc.seed,
            "mode_cutoff": spec.mode_cutoff(),
            "galerkin_dim": spec.galerkin_dim(),
            "ground_state": spec.ground_state(),
            "max_residual": max_residual,
            "tolerance": tol,
        }),
    )?);
    lines.push(format!("ground state {:.12e}, max residual {max_residual:.3e}", spec.ground_state()));
    let mut done = Done::new(lines);
    done.within("eigenpair residual", max_residual, tol);
    Ok(done)
}

pub fn kernel_check(rc: &RunConfig) -> Outcome<Done> {
    let setup = Setup::new(&rc.load_model()?)?;
    let tol = rc.tol.f64_or("kernel", 1e-10)?;
    let tol_fund = rc.tol.f64_or("fundamental", 1e-4)?;
    let pairs = rc.grid.usize_or("pairs", 500)?;
    let gk = &setup.kernel;
    let c = gk.circumference();
    // against the image sum for constant potentials, reciprocity otherwise
    let constant = setup.spectrum.is_constant_potential();
    let lambda = setup.spectrum.mean_potential().sqrt();
    let images = oracle::images_for(lambda, c, 1e-18);
    let mut rng = ChaCha8Rng::seed_from_u64(rc.seed);
    let mut max_error: f64 = 0.0;
    let mut tested = 0;
    while tested < pairs {
        let p = Point::new(rng.gen_range(-2.0..2.0), rng.gen_range(0.0..c));
        let q = Point::new(rng.gen_range(-2.0..2.0), rng.gen_range(0.0..c));
        let (dx, dt) = (p.x - q.x, reduce_periodic(p.theta - q.theta, c));
        if dx.hypot(dt) < 0.1 {
            continue;
        }
        let e = gk.eval(p, q)?;
        let reference = if constant { oracle::image_sum_kernel(lambda, c, dx, dt, images) } else { gk.eval(q, p)? };
        max_error = max_error.max((e - reference).abs() / reference.abs());
        tested += 1;
    }
    let bump = SeparableBump::new(Point::new(0.0, 0.5 * c), 0.5);
    let p = Point::new(0.1, 0.5 * c + 0.15);
    let h_sweep: Vec<_> = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0].iter().map(|&h| gk.verify_fundamental(p, &bump, h)).collect();
    let fundamental = h_sweep.last().map_or(f64::NAN, |f| f.residual / f.expected.abs());
    let lines = vec![
        report(
            rc,
            "kernel_check.json",
            json!({
                "seed": rc.seed,
                "reference": if constant { "image_sum" } else { "reciprocity" },
                "max_error": max_error,
                "pairs_tested": tested,
                "h_sweep": h_sweep,
                "fundamental_relative_residual": fundamental,
                "tolerances": {"kernel": tol, "fundamental": tol_fund},
            }),
        )?,
        format!("max kernel error {max_error:.3e} over {tested} pairs, fundamental residual {fundamental:.3e}"),
    ];
    let mut done = Done::new(lines);
    done.within("kernel error", max_error, tol);
    done.within("fundamental residual", fundamental, tol_fund);
    Ok(done)
}

pub fn jump_check_cmd(rc: &RunConfig) -> Outcome<Done> {
    let setup = Setup::new(&rc.load_model()?)?;
    let tol = rc.tol.f64_or("jump", 1e-4)?;
    let t_min = rc.grid.f64_or("t_min", 1e-3)?;
    let levels = rc.grid.usize_or("levels", 5)?.max(1);
    let target_count = rc.grid.usize_or("targets", 32)?.max(1);
    let ops = setup.operators(&resolution(rc)?)?;
    let ts: Vec<f64> = (0..levels).map(|k| t_min * 2f64.powi((levels - 1 - k) as i32)).collect();
    let f = Density::sample(&ops, |p| 1.0 + 0.5 * (2.0 * p.theta).sin() + 0.3 * (3.0 * p.x).cos());
    let step = (ops.len() / target_count).max(1);
    let targets: Vec<usize> = (0..ops.len()).step_by(step).collect();
    let rep = jump_check(&ops, &f, &ts, &targets)?;
    let mut csv = String::from("relation,t,error,raw_error,order\n");
    for e in &rep.entries {
        let order = e.order.map_or(String::new(), |o| o.to_string());
        csv.push_str(&format!("{},{},{},{},{}\n", e.relation, e.t, e.error, e.raw_error, order));
    }
    let worst = rep.max_final_error();
    let lines = vec![
        format!("wrote {}", rc.write("jump_check.csv", &csv)?.display()),
        report(
            rc,
            "jump_check.json",
            json!({ "seed": rc.seed, "entries": rep.entries, "max_final_error": worst, "tolerance": tol }),
        )?,
        format!("max extrapolated jump error {worst:.3e} at t = {t_min:e}"),
    ];
    let mut done = Done::new(lines);
    done.within("jump error", worst, tol);
    Ok(done)
}

fn straight_graphs(curves: &[CurveConfig]) -> bool {
    !curves.is_empty() && curves.iter().all(|c| matches!(c, CurveConfig::Graph { bump: None, .. }))
}

pub fn solve(rc: &RunConfig, bc: Option<&str>, probes: Option<&Path>) -> Outcome<Done> {
    let cfg = rc.load_model()?;
    let setup = Setup::new(&cfg)?;
    let bc = BoundaryData::parse(bc.ok_or_else(|| Failure::Validation("`solve` needs --bc".into()))?)?;
    let probes = read_probes(probes.ok_or_else(|| Failure::Validation("`solve` needs --probes CSV".into()))?)?;
    let tol_residual = rc.tol.f64_or("residual", 1e-8)?;
    let tol_probe = rc.tol.f64_or("probe", 1e-6)?;
    let res = resolution(rc)?;
    for p in &probes {
        if !setup.region.contains(&setup.model, *p) {
            return Err(Failure::Validation(format!("probe ({}, {}) lies outside the region", p.x, p.theta)));
        }
    }
    let gk = Arc::clone(&setup.kernel);
    let source = match bc {
        BoundaryData::Green { x, theta } => {
            let p0 = Point::new(x, theta);
            if setup.region.contains(&setup.model, p0) {
                return Err(Failure::Validation("the Green's function source must lie outside the region".into()));
            }
            Some(p0)
        }
        _ => None,
    };
    let fourier_possible = matches!(bc, BoundaryData::Mode { .. }) && straight_graphs(&cfg.curves);
    let method = match rc.grid.text("method").unwrap_or("auto") {
        "auto" => if fourier_possible { "fourier" } else { "dense" },
        "dense" => "dense",
        "fourier" if fourier_possible => "fourier",
        "fourier" => return Err(Failure::Validation("the Fourier path needs mode data on straight graph curves".into())),
        other => return Err(Failure::Validation(format!("unknown method `{other}` (auto, dense, fourier)"))),
    };
    let representation = rc.grid.text("representation").unwrap_or("double");
    if !matches!(representation, "double" | "single") {
        return Err(Failure::Validation(format!("unknown representation `{representation}` (double, single)")));
    }

    let (values, diagnostics): (Vec<f64>, serde_json::Value) = if method == "fourier" {
        let BoundaryData::Mode { xi, amp, curve } = bc else { unreachable!("checked above") };
        let ff = setup.far_field(&res)?.expect("graph curves");
        let amplitudes = ff
            .endpoint_segment
            .iter()
            .map(|&seg| Complex64::new(if curve.map_or(true, |c| c == seg) { amp } else { 0.0 }, 0.0))
            .collect();
        let sol = dirichlet::solve_strip_fourier(&ff.domain, Arc::clone(&setup.spectrum), &[StripMode { xi, amplitudes }])?;
        let values = probes.iter().map(|p| sol.value(*p)).collect::<cylpot_core::Result<_>>()?;
        (values, json!({ "modes": 1 }))
    } else {
        let ops = setup.operators(&res)?;
        let data: Vec<f64> = ops
            .disc
            .nodes
            .iter()
            .map(|n| match bc {
                BoundaryData::Mode { xi, amp, curve } => {
                    if curve.map_or(true, |c| c == n.segment) {
                        Ok(amp * (xi * n.point.x).cos())
                    } else {
                        Ok(0.0)
                    }
                }
                BoundaryData::Green { .. } => gk.eval(n.point, source.expect("green source")),
                BoundaryData::Const { value } => Ok(value),
            })
            .collect::<cylpot_core::Result<_>>()?;
        let sol = if representation == "double" {
            dirichlet::solve_dirichlet(&ops, &data)?
        } else {
            dirichlet::ssinv_solve(&ops, &data)?
        };
        let values = sol.values(&probes)?;
        let diag = json!({
            "nodes": ops.len(),
            "condition": sol.condition,
            "residual": sol.residual,
            "tail_bound": sol.tail_bound,
            "symmetry_residual": ops.diagnostics.symmetry_residual,
            "extrapolation_spread": ops.diagnostics.extrapolation_spread,
        });
        (values, diag)
    };

    let exact: Option<Vec<f64>> =
        source.map(|p0| probes.iter().map(|p| gk.eval(*p, p0)).collect::<cylpot_core::Result<_>>()).transpose()?;
    let mut csv = String::from(if exact.is_some() { "x,theta,u,exact,relative_error\n" } else { "x,theta,u\n" });
    let mut max_probe_error: Option<f64> = None;
    for (k, p) in probes.iter().enumerate() {
        match &exact {
            Some(ex) => {
                let err = (values[k] - ex[k]).abs() / ex[k].abs();
                max_probe_error = Some(max_probe_error.unwrap_or(0.0).max(err));
                csv.push_str(&format!("{},{},{},{},{}\n", p.x, p.theta, values[k], ex[k], err));
            }
            None => csv.push_str(&format!("{},{},{}\n", p.x, p.theta, values[k])),
        }
    }
    let residual = diagnostics.get("residual").and_then(|r| r.as_f64());
    let mut lines = vec![format!("wrote {}", rc.write("solve.csv", &csv)?.display())];
    lines.push(report(
        rc,
        "solve.json",
        json!({
            "seed": rc.seed,
            "boundary_data": bc,
            "method": method,
            "representation": if method == "dense" { Some(representation) } else { None },
            "probes": probes.len(),
            "diagnostics": diagnostics,
            "max_probe_error": max_probe_error,
            "tolerances": {"residual": tol_residual, "probe": tol_probe},
        }),
    )?);
    lines.push(format!("{} probes by the {method} path", probes.len()));
    let mut done = Done::new(lines);
    if let Some(r) = residual {
        done.within("solve residual", r, tol_residual);
    }
    if let Some(e) = max_probe_error {
        done.within("probe error", e, tol_probe);
    }
    Ok(done)
}

pub fn dtn(rc: &RunConfig) -> Outcome<Done> {
    let setup = Setup::new(&rc.load_model()?)?;
    let tol_pos = rc.tol.f64_or("positivity", 1e-8)?;
    let tol_sym = rc.tol.f64_or("symmetry", 1e-6)?;
    let forms = rc.grid.usize_or("forms", 100)?;
    let ops = setup.operators(&resolution(rc)?)?;
    let rep = dirichlet::dtn(&ops)?;
    let values = rep.random_forms(rc.seed, forms);
    let min_random = values.iter().copied().fold(f64::INFINITY, f64::min);
    let n = rep.matrix.nrows();
    let mut csv = String::from("i,j,value\n");
    for i in 0..n {
        for j in 0..n {
            csv.push_str(&format!("{i},{j},{}\n", rep.matrix[(i, j)]));
        }
    }
    let summary = rep.summary();
    let lines = vec![
        format!("wrote {}", rc.write("dtn.csv", &csv)?.display()),
        report(
            rc,
            "dtn.json",
            json!({
                "seed": rc.seed,
                "summary": summary,
                "random_forms": forms,
                "min_random_form": if forms > 0 { Some(min_random) } else { None },
                "tolerances": {"positivity": tol_pos, "symmetry": tol_sym},
            }),
        )?,
        format!(
            "DtN of size {n}: min form {:.3e}, symmetry residual {:.3e}, cond S {:.3e}",
            summary.min_form, summary.symmetry_residual, summary.condition_s
        ),
    ];
    let mut done = Done::new(lines);
    if forms > 0 {
        done.within("negative quadratic form", -min_random, tol_pos);
    }
    done.within("DtN symmetry residual", summary.symmetry_residual, tol_sym);
    Ok(done)
}

fn arc_domain(setup: &Setup) -> Outcome<ArcDomain> {
    // only the asymptotes matter; nothing is assembled
    let d = Resolution::default();
    let res = Resolution { half_length: d.half_length.max(4.0 * setup.model.end_marker), ..d };
    setup
        .far_field(&res)?
        .map(|ff| ff.domain)
        .ok_or_else(|| Failure::Validation("the model has no graph curves, hence no cross-section arcs".into()))
}

pub fn tau_sweep(rc: &RunConfig) -> Outcome<Done> {
    let setup = Setup::new(&rc.load_model()?)?;
    let tol = rc.tol.f64_or("stability", 1e-2)?;
    let tau_max = rc.grid.f64_or("tau_max", 20.0)?;
    let step = rc.grid.f64_or("tau_step", 0.5)?;
    if !(step > 0.0 && tau_max >= 0.0) {
        return Err(Failure::Validation("tau_step must be positive and tau_max non-negative".into()));
    }
    let domain = arc_domain(&setup)?;
    let grid = |h: f64| -> Vec<f64> {
        let n = (tau_max / h).round() as i64;
        (-n..=n).map(|k| k as f64 * h).collect()
    };
    let sweep = |spec: &cylpot_core::CrossSectionSpectrum, h: f64| match taufamily::uniform_bound_sweep(&domain, spec, &grid(h)) {
        Err(e @ cylpot_core::Error::SingularFamily { .. }) => Err(Failure::Tolerance(e.to_string())),
        other => other.map_err(Failure::from),
    };
    let coarse = sweep(&setup.spectrum, step)?;
    // refinement: half the step and twice the cutoff
    let finer = cylpot_core::CrossSectionSpectrum::new(
        setup.spectrum.circumference(),
        setup.spectrum.potential(),
        2 * setup.spectrum.mode_cutoff(),
    )?;
    let refined = sweep(&finer, 0.5 * step)?;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs());
    let drift = rel(coarse.sup_norm_s_inv(), refined.sup_norm_s_inv())
        .max(rel(coarse.sup_norm_half_k_inv(), refined.sup_norm_half_k_inv()));
    let lines = vec![
        format!("wrote {}", rc.write("tau_sweep.csv", &coarse.to_csv())?.display()),
        report(
            rc,
            "tau_sweep.json",
            json!({
                "seed": rc.seed,
                "arcs": domain.arcs(),
                "tau_max": tau_max,
                "tau_step": step,
                "sup_norm_s_inv": coarse.sup_norm_s_inv(),
                "sup_norm_half_k_inv": coarse.sup_norm_half_k_inv(),
                "refined_sup_norm_s_inv": refined.sup_norm_s_inv(),
                "refined_sup_norm_half_k_inv": refined.sup_norm_half_k_inv(),
                "relative_drift": drift,
                "tolerance": tol,
            }),
        )?,
        format!(
            "sup |S^-1| {:.6e}, sup |(I/2+K)^-1| {:.6e}, drift under refinement {drift:.3e}",
            coarse.sup_norm_s_inv(),
            coarse.sup_norm_half_k_inv()
        ),
    ];
    if !(coarse.sup_norm_s_inv().is_finite() && coarse.sup_norm_half_k_inv().is_finite()) {
        return Err(Failure::Tolerance("inverse norms are not finite".into()));
    }
    let mut done = Done::new(lines);
    done.within("refinement drift", drift, tol);
    Ok(done)
}

pub fn rellich_check(rc: &RunConfig) -> Outcome<Done> {
    let setup = Setup::new(&rc.load_model()?)?;
    let tol = rc.tol.f64_or("rellich", 1e-8)?;
    let samples = rc.grid.usize_or("samples", 50)?;
    let degree = rc.grid.usize_or("degree", 14)?;
    let domain = arc_domain(&setup)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rc.seed);
    // coefficients decay like k^-2, so the series are smooth
    let decay = |k: usize| 1.0 / (1.0 + k as f64).powi(2);
    let mut csv = String::from("sample,rellich,divergence\n");
    let mut worst: f64 = 0.0;
    for s in 0..samples {
        let mut us = Vec::new();
        let mut ws = Vec::new();
        for &(a, b) in domain.arcs() {
            let u = (0..=degree)
                .map(|k| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * decay(k))
                .collect();
            let w = (0..=degree).map(|k| rng.gen_range(-1.0..1.0) * decay(k)).collect();
            us.push(ChebSeries::new(a, b, u));
            ws.push(ChebSeries::new(a, b, w));
        }
        let rep = taufamily::rellich_check(&domain, &us, &ws)?;
        let (r, d) = (rep.rellich.residual, rep.divergence.residual);
        worst = worst.max(rep.max_residual());
        csv.push_str(&format!("{s},{r},{d}\n"));
    }
    let lines = vec![
        format!("wrote {}", rc.write("rellich_check.csv", &csv)?.display()),
        report(
            rc,
            "rellich_check.json",
            json!({ "seed": rc.seed, "samples": samples, "degree": degree, "max_residual": worst, "tolerance": tol }),
        )?,
        format!("max identity residual {worst:.3e} over {samples} samples"),
    ];
    let mut done = Done::new(lines);
    done.within("identity residual", worst, tol);
    Ok(done)
}

pub fn acceptance_cmd(rc: &RunConfig) -> Outcome<Done> {
    // the suite carries its own configurations; a given model is only validated
    if rc.model.is_some() {
        Setup::new(&rc.load_model()?)?;
    }
    let outcomes = match rc.grid.text("criterion") {
        None => acceptance::run_all(rc.seed),
        Some(_) => {
            let id = rc.grid.usize_or("criterion", 0)?;
            vec![acceptance::run_criterion(id, rc.seed).ok_or_else(|| {
                Failure::Validation(format!("no criterion {id} (1 to {})", acceptance::CRITERION_COUNT))
            })?]
        }
    };
    let mut lines: Vec<String> = outcomes.iter().map(|o| o.line()).collect();
    lines.push(report(rc, "acceptance.json", json!({ "seed": rc.seed, "criteria": outcomes }))?);
    let mut done = Done::new(lines);
    done.failures.extend(outcomes.iter().filter(|o| !o.passed).map(|o| format!("criterion {} failed", o.id)));
    Ok(done)
}

