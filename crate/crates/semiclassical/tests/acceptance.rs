//! The eight acceptance criteria, one PASS/FAIL line each.

use std::f64::consts::TAU;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use semiclassical::config::{RunConfig, Validated};
use semiclassical::{execute, Command};
use semiclassical_core::fock::FockSpace;
use semiclassical_core::fock::Oracle;
use semiclassical_core::phase::{PhaseOptions, PhaseSolver};
use semiclassical_core::transport::{resolve_polynomial_initial, ObservableSpec, QuadratureSpec};
use semiclassical_core::verification::{
    hj_residual_study, least_squares_slope, oracle_for, pde_residual_study, Steps,
};
use semiclassical_core::wick::{MultiIndex, WickSymbol};
use semiclassical_core::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

const BENCH_T: f64 = 0.5;

fn validated(json: &str) -> Validated {
    RunConfig::from_json(json).unwrap().validate().unwrap()
}

fn kerr() -> WickSymbol {
    WickSymbol::kerr(1.0, 0.5)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Max |asymptotic − oracle| over the standard grid.
fn quadratic_exactness() -> Outcome {
    let grid = r#""times": [0.0, 0.25, 0.5, 1.0], "hbars": [0.1, 0.05],
        "targets": {"ring": {"radius": 0.05, "points": 5}}"#;
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for (name, head) in [
        ("harmonic", r#""symbol": {"preset": "harmonic", "omega": 1.0}, "alpha0": [[1.0, 0.0]]"#),
        (
            "beam_splitter",
            r#""symbol": {"preset": "beam_splitter", "omega1": 1.0, "omega2": 1.3, "g": 0.4}, "alpha0": [[0.5, 0.0], [0.0, 0.3]]"#,
        ),
    ] {
        let cfg = validated(&format!("{{{head}, {grid}}}"));
        let art = match execute(Command::Compare, &cfg, None) {
            Ok(a) => a,
            Err(e) => return outcome(false, format!("{name}: {e}")),
        };
        let errs = art.table.unwrap().values("abs_error").unwrap();
        points += errs.len();
        worst = errs.into_iter().fold(worst, f64::max);
    }
    outcome(
        worst <= 1e-8 && points == 2 * 2 * 4 * 5,
        format!("max |asymptotic − oracle| = {worst:.3e} over {points} points (≤ 1e-8)"),
    )
}

/// Slope of the `compare` residual column on the Kerr benchmark.
fn kerr_convergence() -> Outcome {
    let cfg = validated(
        r#"{"symbol": {"preset": "kerr", "omega": 1.0, "mu": 0.5}, "alpha0": [[1.0, 0.0]],
            "times": [0.0, 0.5], "targets": "central", "hbars": [0.08, 0.04, 0.02, 0.01]}"#,
    );
    let table = match execute(Command::Compare, &cfg, None) {
        Ok(a) => a.table.unwrap(),
        Err(e) => return outcome(false, e.to_string()),
    };
    let (ts, hs, rs) = (
        table.values("t").unwrap(),
        table.values("hbar").unwrap(),
        table.values("residual").unwrap(),
    );
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for j in 0..ts.len() {
        if ts[j] == BENCH_T {
            xs.push(hs[j].ln());
            ys.push(rs[j].ln());
        }
    }
    let slope = least_squares_slope(&xs, &ys).unwrap_or(f64::NAN);
    outcome(
        xs.len() == 4 && (slope - 1.0).abs() <= 0.15,
        format!("slope {slope:.4} over {} hbar values (1.0 ± 0.15)", xs.len()),
    )
}

fn ring(center: Complex64, rho: f64, points: usize) -> Vec<Complex64> {
    (0..points).map(|j| center + Complex64::from_polar(rho, TAU * j as f64 / points as f64)).collect()
}

/// HJ residual order on the benchmark ring and `|Im S|` over the phase grid.
fn hj_residual() -> Outcome {
    let solver = PhaseSolver::new(&kerr(), &[c(1.0, 0.0)], PhaseOptions::default()).unwrap();
    let center = solver.central(BENCH_T).unwrap().alpha()[0];
    let mut min_order = f64::INFINITY;
    for a in ring(center, 0.05, 5) {
        match hj_residual_study(&solver, &[a], BENCH_T, 0.05, 4) {
            Ok(r) => min_order = min_order.min(r.observed_order.unwrap_or(f64::NAN)),
            Err(e) => return outcome(false, e.to_string()),
        }
    }
    let cfg = validated(
        r#"{"symbol": {"preset": "kerr", "omega": 1.0, "mu": 0.5}, "alpha0": [[1.0, 0.0]],
            "times": {"t_max": 1.0, "steps": 10},
            "targets": {"ring": {"radius": 0.1, "points": 8, "include_center": true}}}"#,
    );
    let im = match execute(Command::Phase, &cfg, None) {
        Ok(a) => a.table.unwrap().values("im_s").unwrap().into_iter().fold(0.0, |m: f64, v| m.max(v.abs())),
        Err(e) => return outcome(false, e.to_string()),
    };
    outcome(
        min_order >= 1.8 && im <= 1e-9,
        format!("min observed order {min_order:.3} (≥ 1.8), max |Im S| {im:.2e} (≤ 1e-9)"),
    )
}

/// Centre values, Hessian sign and the ring fit.
fn phase_structure() -> Outcome {
    let solver = PhaseSolver::new(&kerr(), &[c(1.0, 0.0)], PhaseOptions::default()).unwrap();
    let (mut s_max, mut g_max, mut eig_max): (f64, f64, f64) = (0.0, 0.0, f64::NEG_INFINITY);
    let mut c_fit = f64::INFINITY;
    for j in 0..=10 {
        let t = j as f64 / 10.0;
        let central = solver.central(t).unwrap();
        let jet = match solver.solve_with_central(&central, central.alpha(), false) {
            Ok((jet, _)) => jet,
            Err(e) => return outcome(false, format!("t={t}: {e}")),
        };
        s_max = s_max.max(jet.s.abs());
        g_max = g_max.max(jet.grad_p[0].norm());
        eig_max = eig_max.max(jet.real_hessian().symmetric_eigenvalues().max());
        if t > 0.0 {
            for rho in [0.1, 0.05, 0.025] {
                for a in ring(central.alpha()[0], rho, 8) {
                    match solver.solve_with_central(&central, &[a], false) {
                        Ok((jet, _)) => c_fit = c_fit.min(-jet.s / (rho * rho)),
                        Err(e) => return outcome(false, format!("ring t={t} ρ={rho}: {e}")),
                    }
                }
            }
        }
    }
    outcome(
        s_max == 0.0 && g_max <= 1e-8 && eig_max < 0.0 && c_fit > 0.0,
        format!("|S| {s_max:.1e}, ‖∇S‖ {g_max:.1e}, max Hessian eigenvalue {eig_max:.3}, fitted C {c_fit:.3}"),
    )
}

/// The conservation checks of the invariant suite at `ode_tol = 1e-10`.
fn conservation() -> Outcome {
    let cfg = validated(
        r#"{"symbol": {"preset": "kerr", "omega": 1.0, "mu": 0.5}, "alpha0": [[1.0, 0.0]],
            "invariants": {"ode_tol": 1e-10, "t_max": 1.0, "time_samples": 20}}"#,
    );
    let art = match execute(Command::Invariants, &cfg, None) {
        Ok(a) => a,
        Err(e) => return outcome(false, e.to_string()),
    };
    let checks = art.report["checks"].as_array().unwrap();
    let get = |name: &str| {
        checks
            .iter()
            .find(|c| c["check_name"] == name)
            .map(|c| (c["measured"].as_f64().unwrap_or(f64::NAN), c["pass"].as_bool().unwrap()))
            .unwrap_or((f64::NAN, false))
    };
    let wanted = [
        ("characteristics.energy_drift", 1e-9, true),
        ("characteristics.conjugacy_defect", 1e-9, true),
        ("characteristics.quadratic_form_drift", 1e-9, true),
        ("characteristics.caustic_indicator", 1e-6, false),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, tol, is_max) in wanted {
        let (m, ok) = get(name);
        let within = if is_max { m <= tol } else { m >= tol };
        pass &= ok && within;
        parts.push(format!("{} {m:.2e}", name.trim_start_matches("characteristics.")));
    }
    outcome(pass, parts.join(", "))
}

/// Observed order of the evolution-PDE residual on oracle samples.
fn oracle_pde() -> Outcome {
    let hbar = 0.05;
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, sym, a0, alpha) in [
        ("harmonic", WickSymbol::harmonic(1.0), c(1.0, 0.0), c(0.7, 0.4)),
        ("kerr", kerr(), c(1.0, 0.0), c(0.6, 0.8)),
    ] {
        let obs = ObservableSpec::new(MultiIndex::new(vec![1]), MultiIndex::new(vec![0]), vec![a0]).unwrap();
        let oracle = oracle_for(&sym, hbar, &[alpha], &[a0], BENCH_T + 0.1, 1e-13).unwrap();
        let f = |a: &[Complex64], t: f64| oracle.expectation(&obs, a, t);
        let steps = Steps { h_space: 0.02, h_time: 0.02 };
        match pde_residual_study(&f, &sym, hbar, &[alpha], BENCH_T, steps, 3) {
            Ok(r) => {
                let order = r.observed_order.unwrap_or(f64::NAN);
                pass &= order >= 1.8;
                parts.push(format!("{name} order {order:.3}"));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{name}: {e}"));
            }
        }
    }
    outcome(pass, parts.join(", ") + " (≥ 1.8)")
}

/// The `kerr` subcommand's table and verdicts.
fn kerr_audit() -> Outcome {
    let cfg = validated(
        r#"{"symbol": {"preset": "kerr", "omega": 1.0, "mu": 0.5}, "alpha0": [[1.0, 0.0]],
            "times": [0.0, 0.25, 0.5, 1.0], "targets": {"ring": {"radius": 0.05, "points": 4}}}"#,
    );
    let art = match execute(Command::Kerr, &cfg, None) {
        Ok(a) => a,
        Err(e) => return outcome(false, e.to_string()),
    };
    let r = &art.report;
    let rows = art.table.as_ref().map_or(0, |t| t.rows.len());
    let names: Vec<&str> = r["verdicts"].as_array().unwrap().iter().map(|v| v["name"].as_str().unwrap()).collect();
    let complete = rows == 5 * 4
        && ["flow_printed", "flow_corrected", "phase_closed_form", "b0_closed_form"]
            .iter()
            .all(|n| names.contains(n));
    let dev = r["central_deviation"].as_f64().unwrap_or(f64::NAN);
    let agree: Vec<String> = r["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| format!("{}={}", v["name"].as_str().unwrap(), v["agrees"]))
        .collect();
    outcome(
        complete && r["consistent"] == true && dev <= 1e-10 && art.failure.is_none(),
        format!("central deviation {dev:.1e} (≤ 1e-10), {rows} rows, {}", agree.join(" ")),
    )
}

/// Completeness quadrature at `t = 0` and for the harmonic flow.
fn completeness() -> Outcome {
    let hbar = 0.05;
    let alpha = c(0.8, 0.3);
    let quad = QuadratureSpec::default();
    let opts = PhaseOptions { ode_tol: 1e-10, ..PhaseOptions::default() };
    let mut worst: f64 = 0.0;
    for (m, q) in [(0u32, 0u32), (1, 0), (1, 1)] {
        let exact = alpha.conj().powu(m) * alpha.powu(q);
        match resolve_polynomial_initial(&kerr(), m, q, alpha, 0.0, hbar, &quad, opts) {
            Ok(r) => worst = worst.max((r.value - exact).norm()),
            Err(e) => return outcome(false, format!("t=0 ({m},{q}): {e}")),
        }
    }
    let sym = WickSymbol::harmonic(1.0);
    let space = FockSpace::new(vec![80], hbar).unwrap();
    let oracle = Oracle::new(space, &sym).unwrap();
    for (m, q) in [(0u32, 0u32), (1, 0), (1, 1)] {
        let (mi, qi) = (MultiIndex::new(vec![m]), MultiIndex::new(vec![q]));
        let moment = oracle.moment(&mi, &qi, &[alpha], BENCH_T).unwrap();
        match resolve_polynomial_initial(&sym, m, q, alpha, BENCH_T, hbar, &quad, PhaseOptions::default()) {
            Ok(r) => worst = worst.max((r.value - moment).norm()),
            Err(e) => return outcome(false, format!("t={BENCH_T} ({m},{q}): {e}")),
        }
    }
    outcome(worst <= 1e-6, format!("max deviation {worst:.2e} (≤ 1e-6)"))
}

fn main() -> ExitCode {
    let criteria: [(&str, Duration, fn() -> Outcome); 8] = [
        ("1 quadratic exactness", Duration::from_secs(60), quadratic_exactness),
        ("2 Kerr hbar-convergence", Duration::from_secs(300), kerr_convergence),
        ("3 Hamilton-Jacobi residual", Duration::from_secs(600), hj_residual),
        ("4 phase structure at the center", Duration::from_secs(600), phase_structure),
        ("5 conservation suite", Duration::from_secs(30), conservation),
        ("6 oracle PDE compliance", Duration::from_secs(120), oracle_pde),
        ("7 Kerr closed-form audit", Duration::from_secs(600), kerr_audit),
        ("8 completeness quadrature", Duration::from_secs(120), completeness),
    ];
    let mut failed = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let out = check();
        let took = start.elapsed();
        let pass = out.pass && took <= budget;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {name}: {} ({}; {:.1} s of {} s)",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
