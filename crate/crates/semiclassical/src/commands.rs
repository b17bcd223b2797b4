//! The eight pipelines behind the subcommands.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use semiclassical_core::characteristics::{Flow, IntegrateOptions};
use semiclassical_core::fock::{coherent_tail, FockSpace, Oracle, DEFAULT_TAIL};
use semiclassical_core::kerr::{kerr_audit, on_real_ray, KerrParams};
use semiclassical_core::phase::PhaseJet;
use semiclassical_core::transport::{laplace_weight, TransportSolver};
use semiclassical_core::verification::{
    hbar_convergence, invariant_suite, oracle_covering, Bound, ConvergenceOptions, SuiteConfig,
};
use semiclassical_core::Complex64;

use crate::config::{shift, Validated};
use crate::error::{RunError, Stage};
use crate::output::{
    complex_cells, complex_headers, complex_json, scalar_cells, scalar_headers, serialize_f64, serialize_opt_f64,
    Cell, Table,
};

/// Deviation allowed between the corrected Kerr flow map and the central
/// trajectory.
pub const KERR_CENTRAL_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Flow,
    Phase,
    Transport,
    Oracle,
    Compare,
    Convergence,
    Kerr,
    Invariants,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        f.write_str(s.as_str().expect("string"))
    }
}

/// Outputs of one run. `failure` is set when the run completed but its
/// checks did not pass; the artifacts are still written.
#[derive(Debug)]
pub struct Artifacts {
    pub command: Command,
    pub table: Option<Table>,
    pub report: serde_json::Value,
    pub failure: Option<RunError>,
}

impl Artifacts {
    fn new<R: Serialize>(command: Command, table: Option<Table>, report: &R) -> Self {
        Artifacts {
            command,
            table,
            report: serde_json::to_value(report).expect("report serializes"),
            failure: None,
        }
    }
}

pub fn run(command: Command, cfg: &Validated) -> Result<Artifacts, RunError> {
    match command {
        Command::Flow => flow(cfg),
        Command::Phase => phase(cfg),
        Command::Transport => transport(cfg),
        Command::Oracle => oracle(cfg),
        Command::Compare => compare(cfg),
        Command::Convergence => convergence(cfg),
        Command::Kerr => kerr(cfg),
        Command::Invariants => invariants(cfg),
    }
}

fn max_of(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, f64::max)
}

/// Evaluation points per time: `(t, alpha)` in time-major order.
fn points(cfg: &Validated, stage: &'static str) -> Result<Vec<(f64, Vec<Complex64>)>, RunError> {
    let flow = Flow::new(&cfg.symbol).stage(stage)?;
    let centers: Vec<Vec<Complex64>> = cfg
        .times
        .par_iter()
        .map(|&t| flow.classical_flow(&cfg.alpha0, t, cfg.config.tolerances.ode))
        .collect::<Result<_, _>>()
        .stage(stage)?;
    let mut out = Vec::new();
    for (t, c) in cfg.times.iter().zip(&centers) {
        for p in cfg.config.targets.around(c) {
            out.push((*t, p));
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct TrajectoryReport {
    index: usize,
    alpha_init: Vec<[f64; 2]>,
    steps: usize,
    rejections: usize,
    #[serde(serialize_with = "serialize_f64")]
    min_caustic_indicator: f64,
    #[serde(serialize_with = "serialize_f64")]
    energy_drift: f64,
}

#[derive(Serialize)]
struct FlowReport {
    command: Command,
    trajectories: Vec<TrajectoryReport>,
}

fn flow(cfg: &Validated) -> Result<Artifacts, RunError> {
    const STAGE: &str = "characteristics.integrate";
    let flow = Flow::new(&cfg.symbol).stage(STAGE)?;
    let starts = match cfg.config.targets.offsets() {
        Some(offs) => offs.iter().map(|d| shift(&cfg.alpha0, *d)).collect(),
        None => cfg.config.targets.list_points(),
    };
    let opts = IntegrateOptions::new(cfg.config.tolerances.ode).with_transport();
    let trajs = starts
        .par_iter()
        .map(|a| flow.integrate(&cfg.alpha0, a, &cfg.times, opts))
        .collect::<Result<Vec<_>, _>>()
        .stage(STAGE)?;

    let n = cfg.modes();
    let mut headers = vec!["trajectory".to_owned(), "t".to_owned()];
    headers.extend(complex_headers("alpha", n));
    headers.extend(complex_headers("p", n));
    headers.extend(scalar_headers("action"));
    headers.push("caustic_indicator".to_owned());
    let mut table = Table::new(headers);
    let mut reports = Vec::with_capacity(trajs.len());
    for (j, (start, traj)) in starts.iter().zip(&trajs).enumerate() {
        let w0 = cfg.symbol.effective_hamiltonian(&traj.states[0].alpha, &traj.states[0].p).stage(STAGE)?;
        let mut drift: f64 = 0.0;
        let mut min_ci = f64::INFINITY;
        for st in &traj.states {
            let ci = st.caustic_indicator();
            min_ci = min_ci.min(ci);
            let w = cfg.symbol.effective_hamiltonian(&st.alpha, &st.p).stage(STAGE)?;
            drift = drift.max((w - w0).norm());
            let mut row = vec![Cell::from(j), Cell::from(st.time)];
            row.extend(complex_cells(&st.alpha));
            row.extend(complex_cells(&st.p));
            row.extend(scalar_cells(st.action));
            row.push(ci.into());
            table.push(row);
        }
        reports.push(TrajectoryReport {
            index: j,
            alpha_init: start.iter().map(|z| complex_json(*z)).collect(),
            steps: traj.stats.steps,
            rejections: traj.stats.rejections,
            min_caustic_indicator: min_ci,
            energy_drift: drift,
        });
    }
    Ok(Artifacts::new(
        Command::Flow,
        Some(table),
        &FlowReport {
            command: Command::Flow,
            trajectories: reports,
        },
    ))
}

fn jets(cfg: &Validated, stage: &'static str) -> Result<Vec<(PhaseJet, Complex64)>, RunError> {
    let solver = TransportSolver::new(&cfg.symbol, cfg.observable.clone(), cfg.phase_options()).stage(stage)?;
    let centrals = cfg
        .times
        .par_iter()
        .map(|&t| solver.phase().central(t))
        .collect::<Result<Vec<_>, _>>()
        .stage(stage)?;
    let pts = points(cfg, stage)?;
    pts.par_iter()
        .map(|(t, alpha)| {
            let central = &centrals[cfg.times.iter().position(|s| s == t).expect("grid time")];
            let (jet, end) = solver.phase().solve_with_central(central, alpha, true)?;
            let b0 = cfg.observable.initial_amplitude(&jet.alpha_init) * end.log_amplitude.exp();
            Ok((jet, b0))
        })
        .collect::<Result<Vec<_>, _>>()
        .stage(stage)
}

#[derive(Serialize)]
struct PhaseReport {
    command: Command,
    points: usize,
    #[serde(serialize_with = "serialize_f64")]
    max_abs_s_imag: f64,
    max_newton_iterations: usize,
    #[serde(serialize_with = "serialize_f64")]
    min_caustic_indicator: f64,
    #[serde(serialize_with = "serialize_f64")]
    max_condition_number: f64,
}

fn phase(cfg: &Validated) -> Result<Artifacts, RunError> {
    let jets = jets(cfg, "hj_phase.phase_at")?;
    let n = cfg.modes();
    let mut headers = vec!["t".to_owned()];
    headers.extend(complex_headers("alpha", n));
    headers.push("s".to_owned());
    headers.extend(complex_headers("p", n));
    headers.extend(["condition_number", "newton_iterations", "caustic_indicator", "im_s"].map(String::from));
    let mut table = Table::new(headers);
    for (jet, _) in &jets {
        let d = &jet.diagnostics;
        let mut row = vec![Cell::from(jet.t)];
        row.extend(complex_cells(&jet.alpha));
        row.push(jet.s.into());
        row.extend(complex_cells(&jet.grad_p));
        row.extend([
            d.condition_number.into(),
            d.newton_iterations.into(),
            d.caustic_indicator.into(),
            d.s_imag.into(),
        ]);
        table.push(row);
    }
    let diag = || jets.iter().map(|(j, _)| j.diagnostics);
    let report = PhaseReport {
        command: Command::Phase,
        points: jets.len(),
        max_abs_s_imag: max_of(diag().map(|d| d.s_imag.abs())),
        max_newton_iterations: diag().map(|d| d.newton_iterations).max().unwrap_or(0),
        min_caustic_indicator: diag().map(|d| d.caustic_indicator).fold(f64::INFINITY, f64::min),
        max_condition_number: max_of(diag().map(|d| d.condition_number)),
    };
    Ok(Artifacts::new(Command::Phase, Some(table), &report))
}

fn transport_headers(n: usize) -> Vec<String> {
    let mut headers = vec!["hbar".to_owned(), "t".to_owned()];
    headers.extend(complex_headers("alpha", n));
    headers.push("s".to_owned());
    headers.extend(scalar_headers("b0"));
    headers.extend(scalar_headers("asymptotic"));
    headers
}

fn transport_cells(hbar: f64, jet: &PhaseJet, b0: Complex64) -> (Vec<Cell>, Complex64) {
    let value = b0 * laplace_weight(jet.s, hbar);
    let mut row = vec![Cell::from(hbar), Cell::from(jet.t)];
    row.extend(complex_cells(&jet.alpha));
    row.push(jet.s.into());
    row.extend(scalar_cells(b0));
    row.extend(scalar_cells(value));
    (row, value)
}

#[derive(Serialize)]
struct TransportReport {
    command: Command,
    points: usize,
    hbars: Vec<f64>,
}

fn transport(cfg: &Validated) -> Result<Artifacts, RunError> {
    let jets = jets(cfg, "transport.b0_at")?;
    let mut table = Table::new(transport_headers(cfg.modes()));
    for &hbar in &cfg.config.hbars {
        for (jet, b0) in &jets {
            table.push(transport_cells(hbar, jet, *b0).0);
        }
    }
    let report = TransportReport {
        command: Command::Transport,
        points: jets.len(),
        hbars: cfg.config.hbars.clone(),
    };
    Ok(Artifacts::new(Command::Transport, Some(table), &report))
}

/// Oracle for `hbar` covering every point, or on the configured cutoffs.
fn build_oracle(cfg: &Validated, hbar: f64, pts: &[(f64, Vec<Complex64>)]) -> Result<Oracle, RunError> {
    const STAGE: &str = "fock_oracle.build";
    let max_tail = cfg.config.tolerances.tail.max(DEFAULT_TAIL);
    let oracle = match &cfg.config.cutoffs {
        Some(cut) => {
            let space = FockSpace::new(cut.clone(), hbar).stage(STAGE)?;
            Oracle::new(space, &cfg.symbol).stage(STAGE)?
        }
        None => {
            let covered: Vec<(Vec<Complex64>, f64)> = pts.iter().map(|(t, a)| (a.clone(), *t)).collect();
            oracle_covering(&cfg.symbol, hbar, &covered, &cfg.alpha0, cfg.config.tolerances.tail).stage(STAGE)?
        }
    };
    Ok(oracle.with_max_tail(max_tail))
}

fn oracle_values(cfg: &Validated, oracle: &Oracle, pts: &[(f64, Vec<Complex64>)]) -> Result<Vec<Complex64>, RunError> {
    pts.par_iter()
        .map(|(t, a)| oracle.expectation(&cfg.observable, a, *t))
        .collect::<Result<Vec<_>, _>>()
        .stage("fock_oracle.expectation")
}

#[derive(Serialize)]
struct OracleRun {
    hbar: f64,
    cutoffs: Vec<usize>,
    dimension: usize,
    #[serde(serialize_with = "serialize_f64")]
    max_tail: f64,
}

#[derive(Serialize)]
struct OracleReport {
    command: Command,
    runs: Vec<OracleRun>,
}

fn oracle(cfg: &Validated) -> Result<Artifacts, RunError> {
    let pts = points(cfg, "fock_oracle.expectation")?;
    let n = cfg.modes();
    let mut headers = vec!["hbar".to_owned(), "t".to_owned()];
    headers.extend(complex_headers("alpha", n));
    headers.extend(scalar_headers("expectation"));
    headers.extend((0..n).map(|k| format!("cutoff_{k}")));
    headers.push("tail".to_owned());
    let mut table = Table::new(headers);
    let mut runs = Vec::new();
    for &hbar in &cfg.config.hbars {
        let oracle = build_oracle(cfg, hbar, &pts)?;
        let values = oracle_values(cfg, &oracle, &pts)?;
        let space = oracle.space();
        let mut worst: f64 = 0.0;
        for ((t, a), v) in pts.iter().zip(&values) {
            let tail = coherent_tail(space, a).max(coherent_tail(space, &cfg.alpha0));
            worst = worst.max(tail);
            let mut row = vec![Cell::from(hbar), Cell::from(*t)];
            row.extend(complex_cells(a));
            row.extend(scalar_cells(*v));
            row.extend(space.cutoffs().iter().map(|d| Cell::from(*d)));
            row.push(tail.into());
            table.push(row);
        }
        runs.push(OracleRun {
            hbar,
            cutoffs: space.cutoffs().to_vec(),
            dimension: space.dim(),
            max_tail: worst,
        });
    }
    let report = OracleReport {
        command: Command::Oracle,
        runs,
    };
    Ok(Artifacts::new(Command::Oracle, Some(table), &report))
}

#[derive(Serialize)]
struct CompareRun {
    hbar: f64,
    cutoffs: Vec<usize>,
    #[serde(serialize_with = "serialize_f64")]
    max_abs_error: f64,
    #[serde(serialize_with = "serialize_f64")]
    max_residual: f64,
}

#[derive(Serialize)]
struct CompareReport {
    command: Command,
    runs: Vec<CompareRun>,
}

fn compare(cfg: &Validated) -> Result<Artifacts, RunError> {
    let jets = jets(cfg, "transport.b0_at")?;
    let pts: Vec<(f64, Vec<Complex64>)> = jets.iter().map(|(j, _)| (j.t, j.alpha.clone())).collect();
    let mut headers = transport_headers(cfg.modes());
    headers.extend(scalar_headers("oracle"));
    headers.extend(["abs_error", "residual", "relative_residual"].map(String::from));
    let mut table = Table::new(headers);
    let mut runs = Vec::new();
    for &hbar in &cfg.config.hbars {
        let oracle = build_oracle(cfg, hbar, &pts)?;
        let values = oracle_values(cfg, &oracle, &pts)?;
        let (mut worst_err, mut worst_res): (f64, f64) = (0.0, 0.0);
        for ((jet, b0), v) in jets.iter().zip(&values) {
            let (mut row, asy) = transport_cells(hbar, jet, *b0);
            let abs_error = (asy - v).norm();
            // |oracle·e^{−S/ℏ} − b₀|, the O(ℏ) remainder of the leading term.
            let residual = (v * (-jet.s / hbar).exp() - b0).norm();
            let relative = if v.norm() > 0.0 { abs_error / v.norm() } else { abs_error };
            worst_err = worst_err.max(abs_error);
            worst_res = worst_res.max(residual);
            row.extend(scalar_cells(*v));
            row.extend([abs_error.into(), residual.into(), relative.into()]);
            table.push(row);
        }
        runs.push(CompareRun {
            hbar,
            cutoffs: oracle.space().cutoffs().to_vec(),
            max_abs_error: worst_err,
            max_residual: worst_res,
        });
    }
    let report = CompareReport {
        command: Command::Compare,
        runs,
    };
    Ok(Artifacts::new(Command::Compare, Some(table), &report))
}

#[derive(Serialize)]
struct Study {
    t: f64,
    alpha: Vec<[f64; 2]>,
    #[serde(serialize_with = "serialize_opt_f64")]
    slope: Option<f64>,
    exact: bool,
}

#[derive(Serialize)]
struct ConvergenceSummary {
    command: Command,
    hbars: Vec<f64>,
    studies: Vec<Study>,
}

fn convergence(cfg: &Validated) -> Result<Artifacts, RunError> {
    const STAGE: &str = "verification.hbar_convergence";
    if cfg.config.hbars.len() < 3 {
        return Err(RunError::validation("hbars", "convergence needs at least three values"));
    }
    let pts = points(cfg, STAGE)?;
    let opts = ConvergenceOptions {
        cutoff_tail: cfg.config.tolerances.tail,
        max_tail: cfg.config.tolerances.tail.max(DEFAULT_TAIL),
        phase: cfg.phase_options(),
        ..ConvergenceOptions::default()
    };
    let reports = pts
        .par_iter()
        .map(|(t, a)| hbar_convergence(&cfg.symbol, &cfg.observable, a, *t, &cfg.config.hbars, &opts))
        .collect::<Result<Vec<_>, _>>()
        .stage(STAGE)?;

    let n = cfg.modes();
    let mut headers = vec!["t".to_owned()];
    headers.extend(complex_headers("alpha", n));
    headers.push("hbar".to_owned());
    headers.extend((0..n).map(|k| format!("cutoff_{k}")));
    headers.push("tail".to_owned());
    headers.extend(scalar_headers("oracle"));
    headers.push("s".to_owned());
    headers.extend(scalar_headers("b0"));
    headers.extend(["residual", "included"].map(String::from));
    let mut table = Table::new(headers);
    let mut studies = Vec::new();
    for ((t, a), rep) in pts.iter().zip(&reports) {
        for r in &rep.rows {
            let mut row = vec![Cell::from(*t)];
            row.extend(complex_cells(a));
            row.push(r.hbar.into());
            row.extend(r.cutoffs.iter().map(|d| Cell::from(*d)));
            row.push(r.tail.into());
            row.extend(scalar_cells(r.oracle));
            row.push(r.s.into());
            row.extend(scalar_cells(r.b0));
            row.extend([r.residual.into(), r.included.into()]);
            table.push(row);
        }
        studies.push(Study {
            t: *t,
            alpha: a.iter().map(|z| complex_json(*z)).collect(),
            slope: rep.slope,
            exact: rep.exact,
        });
    }
    let report = ConvergenceSummary {
        command: Command::Convergence,
        hbars: cfg.config.hbars.clone(),
        studies,
    };
    Ok(Artifacts::new(Command::Convergence, Some(table), &report))
}

#[derive(Serialize)]
struct Verdict {
    name: &'static str,
    #[serde(serialize_with = "serialize_f64")]
    max_deviation: f64,
    agrees: bool,
    note: String,
}

#[derive(Serialize)]
struct KerrReport {
    command: Command,
    omega: f64,
    mu: f64,
    alpha0: [f64; 2],
    m: u32,
    q: u32,
    threshold: f64,
    rows: usize,
    #[serde(serialize_with = "serialize_f64")]
    central_deviation: f64,
    central_matches: bool,
    consistent: bool,
    verdicts: Vec<Verdict>,
}

fn kerr(cfg: &Validated) -> Result<Artifacts, RunError> {
    const STAGE: &str = "kerr_reference.audit";
    let (omega, mu) = cfg
        .config
        .symbol
        .kerr_params()
        .ok_or_else(|| RunError::validation("symbol", "the kerr subcommand needs the kerr preset"))?;
    let params = KerrParams {
        omega,
        mu,
        alpha0: cfg.alpha0[0],
    };
    let offsets: Vec<Complex64> = match cfg.config.targets.offsets() {
        Some(o) => o,
        None => cfg.config.targets.list_points().iter().map(|p| p[0] - params.alpha0).collect(),
    };
    let m = cfg.observable.m.entries()[0];
    let q = cfg.observable.q.entries()[0];
    let threshold = cfg.config.kerr.threshold;
    let audit = kerr_audit(&params, m, q, &cfg.times, &offsets, cfg.config.tolerances.ode, threshold).stage(STAGE)?;

    let mut headers = vec!["t".to_owned()];
    for name in ["alpha_init", "numeric_alpha", "printed_alpha", "corrected_alpha", "numeric_s", "closed_s", "numeric_b0", "closed_b0"] {
        headers.extend(scalar_headers(name));
    }
    headers.extend(
        ["printed_flow_deviation", "corrected_flow_deviation", "phase_deviation", "b0_deviation", "real_ray"]
            .map(String::from),
    );
    let mut table = Table::new(headers);
    for r in &audit.rows {
        let mut row = vec![Cell::from(r.t)];
        for z in [
            r.alpha_init,
            r.numeric_alpha,
            r.printed_alpha,
            r.corrected_alpha,
            r.numeric_s,
            r.closed_s,
            r.numeric_b0,
            r.closed_b0,
        ] {
            row.extend(scalar_cells(z));
        }
        row.extend([
            r.printed_flow_deviation().into(),
            r.corrected_flow_deviation().into(),
            r.phase_deviation().into(),
            r.b0_deviation().into(),
            on_real_ray(params.alpha0, r.alpha_init).into(),
        ]);
        table.push(row);
    }
    let central_matches = audit.central_deviation <= KERR_CENTRAL_TOLERANCE;
    let consistent = audit.is_consistent();
    let report = KerrReport {
        command: Command::Kerr,
        omega,
        mu,
        alpha0: complex_json(params.alpha0),
        m,
        q,
        threshold,
        rows: audit.rows.len(),
        central_deviation: audit.central_deviation,
        central_matches,
        consistent,
        verdicts: audit
            .verdicts
            .iter()
            .map(|v| Verdict {
                name: v.name,
                max_deviation: v.max_deviation,
                agrees: v.agrees,
                note: v.note.clone(),
            })
            .collect(),
    };
    let mut art = Artifacts::new(Command::Kerr, Some(table), &report);
    if !(central_matches && consistent) {
        art.failure = Some(RunError::Check {
            stage: STAGE,
            detail: format!(
                "central deviation {:e}, table consistent: {consistent}",
                audit.central_deviation
            ),
        });
    }
    Ok(art)
}

#[derive(Serialize)]
struct CheckEntry {
    check_name: &'static str,
    #[serde(serialize_with = "serialize_f64")]
    tolerance: f64,
    #[serde(serialize_with = "serialize_f64")]
    measured: f64,
    bound: &'static str,
    pass: bool,
}

#[derive(Serialize)]
struct InvariantsReport {
    command: Command,
    all_pass: bool,
    checks: Vec<CheckEntry>,
}

fn invariants(cfg: &Validated) -> Result<Artifacts, RunError> {
    const STAGE: &str = "verification.invariant_suite";
    let mut suite = SuiteConfig::new(cfg.symbol.clone(), cfg.alpha0.clone());
    let inv = &cfg.config.invariants;
    if let Some(v) = inv.ode_tol {
        suite.ode_tol = v;
    }
    if let Some(v) = inv.radius {
        suite.radius = v;
    }
    if let Some(v) = inv.t_max {
        suite.t_max = v;
    }
    if let Some(v) = inv.time_samples {
        suite.time_samples = v;
    }
    suite.hbar = cfg.config.hbars[0];
    if cfg.config.hbars.len() >= 3 {
        suite.hbars = cfg.config.hbars.clone();
    }
    let report = invariant_suite(&suite).stage(STAGE)?;
    let all_pass = report.all_pass();
    let out = InvariantsReport {
        command: Command::Invariants,
        all_pass,
        checks: report
            .checks
            .iter()
            .map(|c| CheckEntry {
                check_name: c.check_name,
                tolerance: c.tolerance,
                measured: c.measured,
                bound: match c.bound {
                    Bound::Max => "max",
                    Bound::Min => "min",
                },
                pass: c.pass,
            })
            .collect(),
    };
    let mut art = Artifacts::new(Command::Invariants, None, &out);
    if !all_pass {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.check_name).collect();
        art.failure = Some(RunError::Check {
            stage: STAGE,
            detail: failed.join(", "),
        });
    }
    Ok(art)
}
