use semiclassical_core::characteristics::{
    caustic_indicator, char_rhs, classical_rhs, initial_momentum, integrate, Flow, FourTrackState, IntegrateOptions,
    VariationalFrame,
};
use semiclassical_core::verification::quadratic_form;
use semiclassical_core::wick::{Slot, WickSymbol};
use semiclassical_core::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

const I: Complex64 = Complex64::new(0.0, 1.0);

fn grid(n: usize, t_max: f64) -> Vec<f64> {
    (0..=n).map(|j| t_max * j as f64 / n as f64).collect()
}

#[test]
fn initial_momentum_examples() {
    assert_eq!(initial_momentum(&[c(1.0, 0.0)], &[c(1.0, 0.0)]).unwrap(), vec![c(0.0, 0.0)]);
    let p = initial_momentum(&[c(1.0, 0.0)], &[c(1.0, 0.1)]).unwrap();
    assert!((p[0] - c(0.0, 0.1)).norm() < 1e-15);
    let p = initial_momentum(&[c(1.0, 0.0), c(0.0, 1.0)], &[c(1.0, 0.1), c(0.2, 1.0)]).unwrap();
    assert!((p[1] - c(-0.2, 0.0)).norm() < 1e-15);
    assert!(initial_momentum(&[c(1.0, 0.0)], &[]).is_err());
}

#[test]
fn rhs_examples() {
    let a = [c(0.3, -0.4)];
    let h = WickSymbol::harmonic(1.5);
    assert!((classical_rhs(&h, &a).unwrap()[0] - I * 1.5 * a[0]).norm() < 1e-15);
    let k = WickSymbol::kerr(1.0, 0.5);
    let expect = I * (1.0 + 2.0 * 0.5 * a[0].norm_sqr()) * a[0];
    assert!((classical_rhs(&k, &a).unwrap()[0] - expect).norm() < 1e-15);
    assert_eq!(classical_rhs(&k, &[c(0.0, 0.0)]).unwrap()[0], c(0.0, 0.0));

    let (da, dp) = char_rhs(&k, &a, &[c(0.0, 0.0)]).unwrap();
    assert_eq!(dp[0], c(0.0, 0.0));
    assert!((da[0] - expect).norm() < 1e-15);

    let p = [c(0.1, 0.2)];
    let (da, dp) = char_rhs(&h, &a, &p).unwrap();
    assert!((da[0] - I * 1.5 * a[0]).norm() < 1e-15);
    assert!((dp[0] + I * 1.5 * p[0]).norm() < 1e-15);
}

/// `α̇ = ∂W/∂p`, `ṗ = −∂W/∂α`, Wirtinger derivatives of the real `W`
/// taken by finite differences.
#[test]
fn kerr_rhs_matches_effective_hamiltonian_gradient() {
    let sym = WickSymbol::kerr(1.0, 0.5);
    let (alpha, p) = ([c(0.8, 0.3)], [c(-0.1, 0.25)]);
    let (da, dp) = char_rhs(&sym, &alpha, &p).unwrap();
    let h = 1e-6;
    let wirt = |f: &dyn Fn(Complex64) -> f64, z: Complex64| {
        let fx = (f(z + h) - f(z - h)) / (2.0 * h);
        let fy = (f(z + I * h) - f(z - I * h)) / (2.0 * h);
        0.5 * c(fx, -fy)
    };
    let w_alpha = |z: Complex64| sym.effective_hamiltonian(&[z], &p).unwrap().re;
    let w_p = |z: Complex64| sym.effective_hamiltonian(&alpha, &[z]).unwrap().re;
    assert!((da[0] - wirt(&w_p, p[0])).norm() < 1e-8);
    assert!((dp[0] + wirt(&w_alpha, alpha[0])).norm() < 1e-8);
}

#[test]
fn harmonic_closed_forms() {
    let omega = 1.3;
    let sym = WickSymbol::harmonic(omega);
    let (a0, ai) = ([c(1.0, 0.0)], [c(0.9, 0.2)]);
    let traj = integrate(&sym, &a0, &ai, &grid(8, 1.0), 1e-12).unwrap();
    let p0 = initial_momentum(&a0, &ai).unwrap()[0];
    for st in &traj.states {
        let rot = Complex64::from_polar(1.0, omega * st.time);
        assert!((st.alpha[0] - ai[0] * rot).norm() < 1e-10);
        assert!((st.p[0] - p0 * rot.conj()).norm() < 1e-10);
        assert!((st.frame.d_alpha[(0, 0)] - rot).norm() < 1e-10);
        assert!(st.frame.d_alpha[(0, 1)].norm() < 1e-12);
        assert!((st.frame.d_p[(0, 1)] + rot.conj()).norm() < 1e-10);
        assert!((caustic_indicator(&st.frame) - 1.0).abs() < 1e-10);
        // S = −|α e^{−iωt} − α0|² on the characteristic.
        let s = -(st.alpha[0] * rot.conj() - a0[0]).norm_sqr();
        assert!((st.action.re - s).abs() < 1e-10);
    }
}

#[test]
fn central_trajectory_is_trivial() {
    let sym = WickSymbol::kerr(1.0, 0.5);
    let a0 = [c(0.6, 0.8)];
    let traj = integrate(&sym, &a0, &a0, &grid(5, 1.0), 1e-12).unwrap();
    for st in &traj.states {
        assert_eq!(st.p[0], c(0.0, 0.0));
        assert!(st.action.norm() < 1e-15);
        assert!((st.alpha[0].norm() - 1.0).abs() < 1e-11);
        let expect = a0[0] * Complex64::from_polar(1.0, 2.0 * st.time);
        assert!((st.alpha[0] - expect).norm() < 1e-10);
    }
}

#[test]
fn first_state_is_initial_data_and_times_increase() {
    let sym = WickSymbol::kerr(1.0, 0.5);
    let (a0, ai) = ([c(1.0, 0.0)], [c(1.05, -0.03)]);
    let times = [0.0, 0.1, 0.35, 0.9];
    let traj = integrate(&sym, &a0, &ai, &times, 1e-10).unwrap();
    let first = &traj.states[0];
    assert_eq!(first.alpha, ai.to_vec());
    assert_eq!(first.p, initial_momentum(&a0, &ai).unwrap());
    assert_eq!(first.action, c(-(ai[0] - a0[0]).norm_sqr(), 0.0));
    assert_eq!(first.frame, VariationalFrame::initial(1));
    let got: Vec<f64> = traj.states.iter().map(|s| s.time).collect();
    assert_eq!(got, times.to_vec());
}

#[test]
fn energy_conservation_and_action_reality() {
    for (sym, a0, ai) in [
        (WickSymbol::kerr(1.0, 0.5), vec![c(1.0, 0.0)], vec![c(1.05, 0.04)]),
        (WickSymbol::cross_kerr(1.0, 0.7, 0.3), vec![c(0.7, 0.1), c(-0.2, 0.5)], vec![c(0.74, 0.1), c(-0.2, 0.46)]),
        (WickSymbol::beam_splitter(1.0, 1.3, 0.4), vec![c(0.5, 0.0), c(0.0, 0.3)], vec![c(0.52, 0.03), c(0.0, 0.3)]),
    ] {
        let traj = integrate(&sym, &a0, &ai, &grid(10, 1.0), 1e-10).unwrap();
        let w0 = sym.effective_hamiltonian(&traj.states[0].alpha, &traj.states[0].p).unwrap();
        for st in &traj.states {
            let w = sym.effective_hamiltonian(&st.alpha, &st.p).unwrap();
            assert!((w - w0).norm() <= 1e-9 * (1.0 + w0.norm()), "drift {}", (w - w0).norm());
            assert!(st.action.im.abs() <= 1e-10);
        }
    }
}

#[test]
fn four_track_system_preserves_conjugacy() {
    let sym = WickSymbol::kerr(1.0, 0.5);
    let flow = Flow::new(&sym).unwrap();
    let init = FourTrackState::initial(&[c(1.0, 0.0)], &[c(1.06, -0.05)]).unwrap();
    let states = flow.integrate_four_track(&init, &grid(10, 1.0), 1e-10).unwrap();
    assert!(states.len() > 10);
    for s in &states {
        assert!(s.conjugacy_defect() <= 1e-9);
        assert!(s.frame_symmetry_defect() <= 1e-9);
    }
    // The two-track solution agrees with the four-track one.
    let two = flow.integrate(&[c(1.0, 0.0)], &[c(1.06, -0.05)], &[0.0, 1.0], IntegrateOptions::new(1e-10)).unwrap();
    let last = states.last().unwrap();
    assert_eq!(last.time, 1.0);
    assert!((last.alpha[0] - two.last().alpha[0]).norm() < 1e-8);
    assert!((last.p[0] - two.last().p[0]).norm() < 1e-8);
}

#[test]
fn group_property() {
    let sym = WickSymbol::kerr(1.0, 0.5);
    let flow = Flow::new(&sym).unwrap();
    let tol = 1e-10;
    let opts = IntegrateOptions::new(tol).with_transport();
    let (a0, ai) = ([c(1.0, 0.0)], [c(0.96, 0.05)]);
    let direct = flow.integrate(&a0, &ai, &[0.0, 0.9], opts).unwrap();
    let first = flow.integrate(&a0, &ai, &[0.0, 0.4], opts).unwrap();
    let composed = flow.integrate_from(first.last(), &[0.4, 0.9], opts).unwrap();
    let (d, e) = (direct.last(), composed.last());
    let dev = [
        (d.alpha[0] - e.alpha[0]).norm(),
        (d.p[0] - e.p[0]).norm(),
        (d.action - e.action).norm(),
        (d.log_amplitude - e.log_amplitude).norm(),
        (&d.frame.d_alpha - &e.frame.d_alpha).camax(),
    ];
    assert!(dev.iter().all(|v| *v <= 10.0 * tol), "{dev:?}");
}

#[test]
fn harmonic_and_constant_frames() {
    let constant = WickSymbol::new(
        1,
        [(
            semiclassical_core::wick::MultiIndex::zeros(1),
            semiclassical_core::wick::MultiIndex::zeros(1),
            c(3.0, 0.0),
        )],
    )
    .unwrap();
    let traj = integrate(&constant, &[c(0.4, 0.0)], &[c(0.5, 0.1)], &[0.0, 1.0], 1e-12).unwrap();
    assert_eq!(traj.last().frame, VariationalFrame::initial(1));
    assert_eq!(traj.last().alpha, vec![c(0.5, 0.1)]);
}

/// Independent fixed-step RK4 integration of the linearization along a
/// `p = 0` trajectory, `A = δα`, `B = δp`, with `A* = conj(A)`.
fn linearized_oracle(sym: &WickSymbol, a0: &[Complex64], v: &[Complex64], t: f64, steps: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = a0.len();
    let d2 = |s1: Slot, j: usize, s2: Slot, k: usize, alpha: &[Complex64]| {
        let conj: Vec<_> = alpha.iter().map(|a| a.conj()).collect();
        sym.derivative(s1, j).derivative(s2, k).evaluate(&conj, alpha).unwrap()
    };
    let rhs = |y: &[Complex64]| -> Vec<Complex64> {
        let (alpha, a, b) = (&y[..n], &y[n..2 * n], &y[2 * n..]);
        let conj: Vec<_> = alpha.iter().map(|x| x.conj()).collect();
        let mut out = vec![c(0.0, 0.0); 3 * n];
        for k in 0..n {
            out[k] = I * sym.derivative(Slot::Star, k).evaluate(&conj, alpha).unwrap();
            let mut da = c(0.0, 0.0);
            let mut db = c(0.0, 0.0);
            for r in 0..n {
                da += d2(Slot::Star, k, Slot::Plain, r, alpha) * a[r]
                    + d2(Slot::Star, k, Slot::Star, r, alpha) * (a[r].conj() + b[r]);
                db += d2(Slot::Plain, k, Slot::Plain, r, alpha) * b[r].conj() - d2(Slot::Plain, k, Slot::Star, r, alpha) * b[r];
            }
            out[n + k] = I * da;
            out[2 * n + k] = I * db;
        }
        out
    };
    let mut y: Vec<Complex64> = a0.iter().copied().chain(v.iter().copied()).chain(v.iter().map(|x| -x.conj())).collect();
    let h = t / steps as f64;
    let axpy = |y: &[Complex64], k: &[Complex64], s: f64| -> Vec<Complex64> { y.iter().zip(k).map(|(a, b)| a + b * s).collect() };
    for _ in 0..steps {
        let k1 = rhs(&y);
        let k2 = rhs(&axpy(&y, &k1, h / 2.0));
        let k3 = rhs(&axpy(&y, &k2, h / 2.0));
        let k4 = rhs(&axpy(&y, &k3, h));
        for i in 0..y.len() {
            y[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
        }
    }
    (y[n..2 * n].to_vec(), y[2 * n..].to_vec())
}

#[test]
fn frame_matches_linearization_on_central_trajectory() {
    for (sym, a0, v) in [
        (WickSymbol::kerr(1.0, 0.5), vec![c(1.0, 0.0)], vec![c(0.3, -0.4)]),
        (WickSymbol::cross_kerr(1.0, 0.7, 0.3), vec![c(0.7, 0.1), c(-0.2, 0.5)], vec![c(0.2, 0.1), c(-0.3, 0.05)]),
    ] {
        let t = 0.8;
        let traj = integrate(&sym, &a0, &a0, &[0.0, t], 1e-12).unwrap();
        let frame = &traj.last().frame;
        let n = a0.len();
        let dir = nalgebra::DVector::from_fn(2 * n, |i, _| if i < n { v[i] } else { v[i - n].conj() });
        let a = &frame.d_alpha * &dir;
        let b = &frame.d_p * &dir;
        let (ao, bo) = linearized_oracle(&sym, &a0, &v, t, 4000);
        for k in 0..n {
            assert!((a[k] - ao[k]).norm() < 1e-10, "A {} vs {}", a[k], ao[k]);
            assert!((b[k] - bo[k]).norm() < 1e-10, "B {} vs {}", b[k], bo[k]);
        }
    }
}

#[test]
fn quadratic_form_is_conserved_on_central_trajectory() {
    let sym = WickSymbol::kerr(1.0, 0.5);
    let a0 = [c(1.0, 0.0)];
    let traj = integrate(&sym, &a0, &a0, &grid(20, 1.0), 1e-10).unwrap();
    for v in [[c(1.0, 0.0)], [c(0.0, 1.0)], [c(0.6, -0.8)]] {
        for st in &traj.states {
            let q = quadratic_form(&st.frame.d_alpha, &st.frame.d_p, &v);
            assert!((q + 1.0).abs() <= 1e-9, "{q}");
        }
    }
}

#[test]
fn kerr_caustic_indicator_stays_positive() {
    let sym = WickSymbol::kerr(1.0, 0.5);
    let a0 = [c(1.0, 0.0)];
    let traj = integrate(&sym, &a0, &a0, &grid(50, 1.0), 1e-10).unwrap();
    let floor = traj.states.iter().map(|s| s.caustic_indicator()).fold(f64::INFINITY, f64::min);
    assert!(floor >= 1e-6);
    assert_eq!(traj.states[0].caustic_indicator(), 1.0);
}

#[test]
fn blowup_is_reported() {
    // ℋ = z*³z³ drives |α| to infinity in finite time from a large start.
    let sym = WickSymbol::new(
        1,
        [(
            semiclassical_core::wick::MultiIndex::new(vec![3]),
            semiclassical_core::wick::MultiIndex::new(vec![3]),
            c(1.0, 0.0),
        )],
    )
    .unwrap();
    let a0 = [c(3.0, 0.0)];
    let ai = [c(3.5, 0.5)];
    assert!(integrate(&sym, &a0, &ai, &[0.0, 50.0], 1e-10).is_err());
}
