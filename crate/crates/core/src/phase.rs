//! Phase `S(α*, α, t)` near the central trajectory.
//!
//! The flow map `α(0) ↦ α(t)` is inverted by Newton iteration in real
//! coordinates; the phase value, gradient and Hessian are then read off the
//! characteristic through the preimage.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::characteristics::{CharState, Flow, IntegrateOptions};
use crate::error::{Error, Result};
use crate::linalg::{condition_number, CMatrix};
use crate::wick::WickSymbol;

/// Newton is abandoned once the caustic indicator falls below this.
pub const SINGULAR_INDICATOR: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseOptions {
    pub ode_tol: f64,
    pub newton_tol: f64,
    pub max_iter: usize,
    /// Hessian extraction fails above this condition number.
    pub max_condition: f64,
}

impl Default for PhaseOptions {
    fn default() -> Self {
        PhaseOptions {
            ode_tol: 1e-12,
            newton_tol: 1e-12,
            max_iter: 20,
            max_condition: 1e12,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhaseDiagnostics {
    pub newton_iterations: usize,
    pub newton_residual: f64,
    pub caustic_indicator: f64,
    pub condition_number: f64,
    /// Imaginary part of the integrated action (zero up to round-off).
    pub s_imag: f64,
}

/// Value, gradient and Hessian blocks of `S` at `(alpha, t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseJet {
    pub s: f64,
    /// `∂S/∂α`
    pub grad_p: Vec<Complex64>,
    /// `∂S/∂α*`
    pub grad_pstar: Vec<Complex64>,
    /// `∂²S/∂α∂α`
    pub hess_aa: CMatrix,
    /// `∂²S/∂α∂α*`
    pub hess_aastar: CMatrix,
    /// `∂²S/∂α*∂α*`
    pub hess_astarastar: CMatrix,
    pub alpha: Vec<Complex64>,
    pub t: f64,
    /// Preimage of `alpha` under the flow map.
    pub alpha_init: Vec<Complex64>,
    pub diagnostics: PhaseDiagnostics,
}

impl PhaseJet {
    pub fn modes(&self) -> usize {
        self.alpha.len()
    }

    /// Hessian in the real coordinates `(Re α, Im α)`.
    pub fn real_hessian(&self) -> DMatrix<f64> {
        let n = self.modes();
        // z = T·(x, y) with T = [[I, iI], [I, −iI]]; H_real = Tᵀ H_W T.
        let i = Complex64::new(0.0, 1.0);
        let t = CMatrix::from_fn(2 * n, 2 * n, |r, c| {
            let (rb, cb) = (r / n, c / n);
            if r % n != c % n {
                return Complex64::new(0.0, 0.0);
            }
            match (rb, cb) {
                (_, 0) => Complex64::new(1.0, 0.0),
                (0, 1) => i,
                _ => -i,
            }
        });
        let hw = CMatrix::from_fn(2 * n, 2 * n, |r, c| match (r < n, c < n) {
            (true, true) => self.hess_aa[(r, c)],
            (true, false) => self.hess_aastar[(r, c - n)],
            (false, true) => self.hess_aastar[(c, r - n)],
            (false, false) => self.hess_astarastar[(r - n, c - n)],
        });
        let real = t.transpose() * hw * t;
        DMatrix::from_fn(2 * n, 2 * n, |r, c| 0.5 * (real[(r, c)].re + real[(c, r)].re))
    }
}

/// Central trajectory `g^t α0` and the real Jacobian of the flow map there.
#[derive(Clone, Debug, PartialEq)]
pub struct CentralFlow {
    pub t: f64,
    pub state: CharState,
    jacobian: DMatrix<f64>,
}

impl CentralFlow {
    pub fn alpha(&self) -> &[Complex64] {
        &self.state.alpha
    }
}

/// Result of inverting the flow map.
#[derive(Clone, Debug, PartialEq)]
pub struct Inversion {
    pub alpha_init: Vec<Complex64>,
    pub iterations: usize,
    pub residual: f64,
    pub endpoint: CharState,
}

/// Phase construction for one fixed `α0`.
#[derive(Clone, Debug)]
pub struct PhaseSolver {
    flow: Flow,
    alpha0: Vec<Complex64>,
    opts: PhaseOptions,
}

fn to_real(v: &[Complex64]) -> DVector<f64> {
    let n = v.len();
    DVector::from_fn(2 * n, |i, _| if i < n { v[i].re } else { v[i - n].im })
}

fn from_real(x: &DVector<f64>) -> Vec<Complex64> {
    let n = x.len() / 2;
    (0..n).map(|i| Complex64::new(x[i], x[i + n])).collect()
}

fn times_to(t: f64) -> Vec<f64> {
    if t == 0.0 {
        alloc::vec![0.0]
    } else {
        alloc::vec![0.0, t]
    }
}

impl PhaseSolver {
    pub fn new(sym: &WickSymbol, alpha0: &[Complex64], opts: PhaseOptions) -> Result<Self> {
        let flow = Flow::new(sym)?;
        if alpha0.len() != flow.modes() {
            return Err(Error::DimensionMismatch {
                op: "hj_phase::phase_at",
                expected: flow.modes(),
                found: alpha0.len(),
            });
        }
        if !(t_ok(opts.ode_tol) && t_ok(opts.newton_tol)) {
            return Err(Error::InvalidArgument {
                op: "hj_phase::phase_at",
                reason: "tolerances must be positive",
            });
        }
        Ok(PhaseSolver {
            flow,
            alpha0: alpha0.to_vec(),
            opts,
        })
    }

    pub fn flow(&self) -> &Flow {
        &self.flow
    }

    pub fn alpha0(&self) -> &[Complex64] {
        &self.alpha0
    }

    pub fn options(&self) -> &PhaseOptions {
        &self.opts
    }

    fn endpoint(&self, alpha_init: &[Complex64], t: f64, transport: bool) -> Result<CharState> {
        if t < 0.0 {
            return Err(Error::InvalidArgument {
                op: "hj_phase::phase_at",
                reason: "time must be nonnegative",
            });
        }
        let mut opts = IntegrateOptions::new(self.opts.ode_tol);
        opts.transport = transport;
        let traj = self.flow.integrate(&self.alpha0, alpha_init, &times_to(t), opts)?;
        Ok(traj.last().clone())
    }

    /// Integrates the central trajectory (`α(0) = α0`, `p ≡ 0`) to time `t`.
    pub fn central(&self, t: f64) -> Result<CentralFlow> {
        let state = self.endpoint(&self.alpha0, t, true)?;
        Ok(CentralFlow {
            t,
            jacobian: state.frame.real_jacobian(),
            state,
        })
    }

    /// Finds `α(0)` whose characteristic reaches `alpha_target` at time `t`.
    pub fn invert_flow_map(&self, alpha_target: &[Complex64], t: f64) -> Result<Inversion> {
        let central = self.central(t)?;
        self.invert_with_central(&central, alpha_target)
    }

    pub fn invert_with_central(&self, central: &CentralFlow, alpha_target: &[Complex64]) -> Result<Inversion> {
        let n = self.flow.modes();
        if alpha_target.len() != n {
            return Err(Error::DimensionMismatch {
                op: "hj_phase::invert_flow_map",
                expected: n,
                found: alpha_target.len(),
            });
        }
        let t = central.t;
        let target = to_real(alpha_target);
        let offset = target.clone() - to_real(central.alpha());
        let mut x = match central.jacobian.clone().lu().solve(&offset) {
            Some(dx) => to_real(&self.alpha0) + dx,
            None => to_real(&self.alpha0),
        };

        let mut state = self.endpoint(&from_real(&x), t, false)?;
        let mut r = to_real(&state.alpha) - &target;
        let mut norm = r.norm();
        let mut iterations = 0;
        while norm > self.opts.newton_tol {
            if iterations >= self.opts.max_iter {
                return Err(Error::NewtonDiverged {
                    iterations,
                    residual: norm,
                });
            }
            let indicator = state.caustic_indicator();
            if indicator < SINGULAR_INDICATOR {
                return Err(Error::SingularJacobian { indicator });
            }
            let step = state
                .frame
                .real_jacobian()
                .lu()
                .solve(&(-&r))
                .ok_or(Error::SingularJacobian { indicator })?;
            iterations += 1;

            let mut lambda = 1.0;
            let mut accepted = None;
            for _ in 0..12 {
                let trial = &x + &step * lambda;
                if let Ok(s) = self.endpoint(&from_real(&trial), t, false) {
                    let tr = to_real(&s.alpha) - &target;
                    if tr.norm() < norm {
                        accepted = Some((trial, s, tr));
                        break;
                    }
                }
                lambda *= 0.5;
            }
            match accepted {
                Some((trial, s, tr)) => {
                    x = trial;
                    state = s;
                    norm = tr.norm();
                    r = tr;
                }
                None => {
                    return Err(Error::NewtonDiverged {
                        iterations,
                        residual: norm,
                    })
                }
            }
        }
        Ok(Inversion {
            alpha_init: from_real(&x),
            iterations,
            residual: norm,
            endpoint: state,
        })
    }

    /// Phase jet together with the endpoint state of its characteristic; the
    /// state carries `∫κ` when `transport` is set.
    pub fn solve(&self, alpha_target: &[Complex64], t: f64, transport: bool) -> Result<(PhaseJet, CharState)> {
        let central = self.central(t)?;
        self.solve_with_central(&central, alpha_target, transport)
    }

    pub fn solve_with_central(
        &self,
        central: &CentralFlow,
        alpha_target: &[Complex64],
        transport: bool,
    ) -> Result<(PhaseJet, CharState)> {
        let inv = self.invert_with_central(central, alpha_target)?;
        let end = if transport {
            self.endpoint(&inv.alpha_init, central.t, true)?
        } else {
            inv.endpoint.clone()
        };
        let jet = self.jet_from(&end, alpha_target, &inv)?;
        Ok((jet, end))
    }

    fn jet_from(&self, end: &CharState, alpha_target: &[Complex64], inv: &Inversion) -> Result<PhaseJet> {
        let n = self.flow.modes();
        let position = end.frame.position_block();
        let condition = condition_number(&position);
        if !(condition <= self.opts.max_condition) {
            return Err(Error::IllConditioned { condition });
        }
        let hess = end
            .frame
            .phase_hessian()
            .ok_or(Error::IllConditioned { condition })?;
        Ok(PhaseJet {
            s: end.action.re,
            grad_p: end.p.clone(),
            grad_pstar: end.p.iter().map(|v| v.conj()).collect(),
            hess_aa: hess.view((0, 0), (n, n)).into_owned(),
            hess_aastar: hess.view((0, n), (n, n)).into_owned(),
            hess_astarastar: hess.view((n, n), (n, n)).into_owned(),
            alpha: alpha_target.to_vec(),
            t: end.time,
            alpha_init: inv.alpha_init.clone(),
            diagnostics: PhaseDiagnostics {
                newton_iterations: inv.iterations,
                newton_residual: inv.residual,
                caustic_indicator: end.caustic_indicator(),
                condition_number: condition,
                s_imag: end.action.im,
            },
        })
    }

    pub fn phase_at(&self, alpha_target: &[Complex64], t: f64) -> Result<PhaseJet> {
        self.solve(alpha_target, t, false).map(|(jet, _)| jet)
    }
}

fn t_ok(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

/// Inverts the flow map with default ODE tolerance.
pub fn invert_flow_map(
    sym: &WickSymbol,
    alpha0: &[Complex64],
    alpha_target: &[Complex64],
    t: f64,
    newton_tol: f64,
    max_iter: usize,
) -> Result<Inversion> {
    let opts = PhaseOptions {
        newton_tol,
        max_iter,
        ..PhaseOptions::default()
    };
    PhaseSolver::new(sym, alpha0, opts)?.invert_flow_map(alpha_target, t)
}

/// Phase jet at `(alpha_target, t)` with ODE tolerance `tol`.
pub fn phase_at(sym: &WickSymbol, alpha0: &[Complex64], alpha_target: &[Complex64], t: f64, tol: f64) -> Result<PhaseJet> {
    let opts = PhaseOptions {
        ode_tol: tol,
        ..PhaseOptions::default()
    };
    PhaseSolver::new(sym, alpha0, opts)?.phase_at(alpha_target, t)
}
