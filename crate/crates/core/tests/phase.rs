use semiclassical_core::kerr::{kerr_phase, KerrParams};
use semiclassical_core::phase::{invert_flow_map, phase_at, PhaseOptions, PhaseSolver};
use semiclassical_core::wick::WickSymbol;
use semiclassical_core::{Complex64, Error};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

const I: Complex64 = Complex64::new(0.0, 1.0);

fn kerr() -> WickSymbol {
    WickSymbol::kerr(1.0, 0.5)
}

fn solver(sym: &WickSymbol, a0: &[Complex64]) -> PhaseSolver {
    PhaseSolver::new(sym, a0, PhaseOptions::default()).unwrap()
}

#[test]
fn central_target_inverts_to_alpha0() {
    let sym = kerr();
    let a0 = [c(1.0, 0.0)];
    let s = solver(&sym, &a0);
    for t in [0.0, 0.3, 1.0] {
        let central = s.central(t).unwrap();
        let inv = s.invert_flow_map(central.alpha(), t).unwrap();
        assert!((inv.alpha_init[0] - a0[0]).norm() < 1e-12);
    }
}

#[test]
fn harmonic_inverse_and_phase_are_closed_form() {
    let omega = 1.0;
    let sym = WickSymbol::harmonic(omega);
    let a0 = [c(0.7, -0.2)];
    for (t, target) in [(0.25, c(0.5, 0.1)), (1.0, c(-0.3, 0.9)), (2.0, c(0.0, 0.0))] {
        let back = target * (-I * omega * t).exp();
        let inv = invert_flow_map(&sym, &a0, &[target], t, 1e-12, 5).unwrap();
        assert!((inv.alpha_init[0] - back).norm() < 1e-10);
        assert!(inv.iterations <= 1);
        let jet = phase_at(&sym, &a0, &[target], t, 1e-12).unwrap();
        assert!((jet.s + (back - a0[0]).norm_sqr()).abs() < 1e-10);
        let expected_grad = -(back - a0[0]).conj() * (-I * omega * t).exp();
        assert!((jet.grad_p[0] - expected_grad).norm() < 1e-10);
        assert!((jet.hess_aastar[(0, 0)] + 1.0).norm() < 1e-10);
        assert!(jet.hess_aa[(0, 0)].norm() < 1e-10);
    }
}

#[test]
fn kerr_newton_regression_fixture() {
    let sym = kerr();
    let a0 = [c(1.0, 0.0)];
    let t = 0.5;
    let s = solver(&sym, &a0);
    let central = s.central(t).unwrap();
    let target = [central.alpha()[0] + 0.05];
    let inv = s.invert_with_central(&central, &target).unwrap();
    let fixture = c(1.00478239799187907e0, -4.35696527100191619e-2);
    assert!((inv.alpha_init[0] - fixture).norm() < 1e-10, "{}", inv.alpha_init[0]);
    assert!(inv.iterations <= 8);
    assert!(inv.residual < 1e-12);
}

#[test]
fn jet_invariants_hold() {
    let sym = WickSymbol::cross_kerr(1.0, 0.7, 0.3);
    let a0 = [c(0.7, 0.1), c(-0.2, 0.5)];
    let s = solver(&sym, &a0);
    let t = 0.6;
    let central = s.central(t).unwrap();
    let target: Vec<_> = central.alpha().iter().zip([c(0.03, -0.02), c(-0.01, 0.04)]).map(|(a, d)| a + d).collect();
    let jet = s.phase_at(&target, t).unwrap();
    assert!(jet.diagnostics.s_imag.abs() <= 1e-9);
    for k in 0..2 {
        assert_eq!(jet.grad_pstar[k], jet.grad_p[k].conj());
    }
    let tol = 1e-10;
    assert!((&jet.hess_aa - jet.hess_aa.transpose()).camax() < tol);
    assert!((&jet.hess_astarastar - jet.hess_aa.map(|v| v.conj())).camax() < tol);
    assert!((&jet.hess_aastar - jet.hess_aastar.adjoint()).camax() < tol);
    let hr = jet.real_hessian();
    assert!((&hr - hr.transpose()).amax() < tol);
}

/// `S` at a nearby target, through its own Newton solve.
fn s_at(s: &PhaseSolver, alpha: &[Complex64], t: f64) -> f64 {
    s.phase_at(alpha, t).unwrap().s
}

#[test]
fn gradient_and_hessian_match_finite_differences() {
    let sym = kerr();
    let a0 = [c(1.0, 0.0)];
    let s = solver(&sym, &a0);
    let t = 0.5;
    let central = s.central(t).unwrap();
    let base = [central.alpha()[0] + c(0.04, -0.03)];
    let jet = s.phase_at(&base, t).unwrap();

    let h = 1e-4;
    let shift = |d: Complex64| [base[0] + d];
    let sx = (s_at(&s, &shift(c(h, 0.0)), t) - s_at(&s, &shift(c(-h, 0.0)), t)) / (2.0 * h);
    let sy = (s_at(&s, &shift(c(0.0, h)), t) - s_at(&s, &shift(c(0.0, -h)), t)) / (2.0 * h);
    let fd_grad = 0.5 * c(sx, -sy);
    assert!((fd_grad - jet.grad_p[0]).norm() < 1e-7, "{} vs {}", fd_grad, jet.grad_p[0]);

    let g = |d: Complex64| s.phase_at(&shift(d), t).unwrap().grad_p[0];
    let gx = (g(c(h, 0.0)) - g(c(-h, 0.0))) / (2.0 * h);
    let gy = (g(c(0.0, h)) - g(c(0.0, -h))) / (2.0 * h);
    let d_da = 0.5 * (gx - I * gy);
    let d_dastar = 0.5 * (gx + I * gy);
    assert!((d_da - jet.hess_aa[(0, 0)]).norm() < 1e-7);
    assert!((d_dastar - jet.hess_aastar[(0, 0)]).norm() < 1e-7);
}

#[test]
fn center_structure_over_unit_interval() {
    let sym = kerr();
    let a0 = [c(1.0, 0.0)];
    let s = solver(&sym, &a0);
    for j in 0..=10 {
        let t = j as f64 / 10.0;
        let central = s.central(t).unwrap();
        let jet = s.phase_at(central.alpha(), t).unwrap();
        assert!(jet.s.abs() <= 1e-12);
        assert!(jet.grad_p[0].norm() <= 1e-8);
        let eig = jet.real_hessian().symmetric_eigen().eigenvalues;
        assert!(eig.iter().all(|v| *v < 0.0), "{eig:?}");
    }
}

#[test]
fn ring_negativity() {
    let sym = kerr();
    let a0 = [c(1.0, 0.0)];
    let s = solver(&sym, &a0);
    let t = 0.7;
    let central = s.central(t).unwrap();
    let mut fitted = f64::INFINITY;
    for rho in [0.1, 0.05, 0.02] {
        for k in 0..8 {
            let d = Complex64::from_polar(rho, std::f64::consts::TAU * k as f64 / 8.0);
            let jet = s.solve_with_central(&central, &[central.alpha()[0] + d], false).unwrap().0;
            fitted = fitted.min(-jet.s / (rho * rho));
        }
    }
    assert!(fitted > 0.0, "C = {fitted}");
}

#[test]
fn kerr_phase_agrees_with_closed_form() {
    let p = KerrParams { omega: 1.0, mu: 0.5, alpha0: c(1.0, 0.0) };
    let sym = p.symbol();
    let s = solver(&sym, &[p.alpha0]);
    let t = 0.5;
    let central = s.central(t).unwrap();
    for d in [c(0.05, 0.0), c(0.0, 0.05), c(-0.03, 0.04)] {
        let jet = s.solve_with_central(&central, &[central.alpha()[0] + d], false).unwrap().0;
        let closed = kerr_phase(&p, jet.alpha_init[0], t);
        assert!((closed.re - jet.s).abs() < 1e-10);
        assert!(closed.im.abs() < 1e-12);
    }
}

#[test]
fn errors_are_reported() {
    let sym = kerr();
    assert!(matches!(
        PhaseSolver::new(&sym, &[c(1.0, 0.0), c(0.0, 0.0)], PhaseOptions::default()),
        Err(Error::DimensionMismatch { .. })
    ));
    let s = solver(&sym, &[c(1.0, 0.0)]);
    assert!(s.phase_at(&[c(1.0, 0.0)], -1.0).is_err());
    // Far outside the neighborhood with a tiny iteration budget.
    let opts = PhaseOptions { max_iter: 1, ..PhaseOptions::default() };
    let tight = PhaseSolver::new(&sym, &[c(1.0, 0.0)], opts).unwrap();
    assert!(tight.invert_flow_map(&[c(2.5, 1.0)], 1.0).is_err());
}
