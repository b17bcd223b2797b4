//! Leading transport amplitude `b₀` and the asymptotic value `e^{S/ℏ} b₀`.
//!
//! Along a characteristic the amplitude obeys `d/dt b₀ = κ b₀`, where `κ` is
//! the zeroth-order coefficient of the transport operator; the first-order
//! part of that operator is exactly advection along the characteristic. The
//! integral `∫κ` is accumulated inside the characteristic solve.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use core::f64::consts::PI;

use num_complex::Complex64;

use crate::characteristics::kappa;
use crate::error::{Error, Result};
use crate::phase::{PhaseJet, PhaseOptions, PhaseSolver};
use crate::quadrature::scaled_rule;
use crate::wick::{Derivatives, MultiIndex, ShiftedArgs, WickSymbol};

/// Index pair `(m, q)` and center `α0` of `F(0) = a^{†m}|α0⟩⟨α0|a^q`.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableSpec {
    pub m: MultiIndex,
    pub q: MultiIndex,
    pub alpha0: Vec<Complex64>,
}

impl ObservableSpec {
    pub fn new(m: MultiIndex, q: MultiIndex, alpha0: Vec<Complex64>) -> Result<Self> {
        for idx in [&m, &q] {
            if idx.len() != alpha0.len() {
                return Err(Error::DimensionMismatch {
                    op: "transport::ObservableSpec",
                    expected: alpha0.len(),
                    found: idx.len(),
                });
            }
        }
        Ok(ObservableSpec { m, q, alpha0 })
    }

    /// `m = q = 0`.
    pub fn density(alpha0: Vec<Complex64>) -> Self {
        let n = alpha0.len();
        ObservableSpec {
            m: MultiIndex::zeros(n),
            q: MultiIndex::zeros(n),
            alpha0,
        }
    }

    pub fn modes(&self) -> usize {
        self.alpha0.len()
    }

    /// Initial amplitude `conj(α)^m α^q`.
    pub fn initial_amplitude(&self, alpha: &[Complex64]) -> Complex64 {
        let conj: Vec<_> = alpha.iter().map(|a| a.conj()).collect();
        self.m.power(&conj) * self.q.power(alpha)
    }
}

/// Transport rate `κ` evaluated from a phase jet.
pub fn transport_coefficient(sym: &WickSymbol, jet: &PhaseJet) -> Result<Complex64> {
    if jet.modes() != sym.modes() {
        return Err(Error::DimensionMismatch {
            op: "transport::transport_coefficient",
            expected: sym.modes(),
            found: jet.modes(),
        });
    }
    let der = Derivatives::new(sym);
    let (x, y) = ShiftedArgs::new(&jet.alpha, &jet.grad_p);
    Ok(kappa(&der.jet(&x), &der.jet(&y), &jet.hess_aa, &jet.hess_astarastar))
}

/// Leading-order data at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct Asymptotic {
    pub jet: PhaseJet,
    pub b0: Complex64,
    /// `e^{S/ℏ} b₀` (present when an `ℏ` was supplied).
    pub value: Complex64,
}

/// Returns `e^{s/ℏ}`, flushing to zero below the smallest normal number.
pub fn laplace_weight(s: f64, hbar: f64) -> f64 {
    let e = s / hbar;
    if e < f64::MIN_POSITIVE.ln() {
        0.0
    } else {
        e.exp()
    }
}

/// Transport pipeline for one observable.
#[derive(Clone, Debug)]
pub struct TransportSolver {
    phase: PhaseSolver,
    obs: ObservableSpec,
}

impl TransportSolver {
    pub fn new(sym: &WickSymbol, obs: ObservableSpec, opts: PhaseOptions) -> Result<Self> {
        let phase = PhaseSolver::new(sym, &obs.alpha0, opts)?;
        Ok(TransportSolver { phase, obs })
    }

    pub fn phase(&self) -> &PhaseSolver {
        &self.phase
    }

    pub fn observable(&self) -> &ObservableSpec {
        &self.obs
    }

    /// Jet and `b₀ = conj(α(0))^m α(0)^q · exp(∫κ)` at `(alpha_target, t)`.
    pub fn b0_at(&self, alpha_target: &[Complex64], t: f64) -> Result<(PhaseJet, Complex64)> {
        let (jet, end) = self.phase.solve(alpha_target, t, true)?;
        let b0 = self.obs.initial_amplitude(&jet.alpha_init) * end.log_amplitude.exp();
        Ok((jet, b0))
    }

    pub fn evaluate(&self, alpha_target: &[Complex64], t: f64, hbar: f64) -> Result<Asymptotic> {
        check_hbar(hbar)?;
        let (jet, b0) = self.b0_at(alpha_target, t)?;
        let value = b0 * laplace_weight(jet.s, hbar);
        Ok(Asymptotic { jet, b0, value })
    }
}

fn check_hbar(hbar: f64) -> Result<()> {
    if hbar > 0.0 && hbar.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument {
            op: "transport::evaluate_asymptotic",
            reason: "hbar must be positive and finite",
        })
    }
}

/// `b₀` at `(alpha_target, t)` with ODE tolerance `tol`.
pub fn b0_at(sym: &WickSymbol, obs: &ObservableSpec, alpha_target: &[Complex64], t: f64, tol: f64) -> Result<Complex64> {
    let opts = PhaseOptions {
        ode_tol: tol,
        ..PhaseOptions::default()
    };
    TransportSolver::new(sym, obs.clone(), opts)?
        .b0_at(alpha_target, t)
        .map(|(_, b)| b)
}

/// Leading asymptotic value `e^{S/ℏ} b₀`.
pub fn evaluate_asymptotic(
    sym: &WickSymbol,
    obs: &ObservableSpec,
    alpha_target: &[Complex64],
    t: f64,
    hbar: f64,
) -> Result<Complex64> {
    check_hbar(hbar)?;
    TransportSolver::new(sym, obs.clone(), PhaseOptions::default())?
        .evaluate(alpha_target, t, hbar)
        .map(|a| a.value)
}

/// Tensor-product Gauss–Legendre grid over `α0` for the completeness integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    /// Nodes per real direction.
    pub nodes: usize,
    /// Half-width of the square; `None` selects `max(6√ℏ, 1.5)`.
    pub half_width: Option<f64>,
    /// The region check repeats the integral on a square this much wider.
    pub growth: f64,
    /// Allowed change between the two region sizes.
    pub tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            nodes: 32,
            half_width: None,
            growth: 1.25,
            tol: 1e-6,
        }
    }
}

impl QuadratureSpec {
    pub fn half_width_for(&self, hbar: f64) -> f64 {
        self.half_width.unwrap_or_else(|| (6.0 * hbar.sqrt()).max(1.5))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureResult {
    pub value: Complex64,
    /// The same integral on the enlarged square.
    pub value_wide: Complex64,
    pub center: Complex64,
    pub half_width: f64,
    /// Nodes whose phase could not be constructed; all lie where the
    /// Gaussian envelope is below `e^{-40}`.
    pub skipped: usize,
}

/// `(πℏ)⁻¹ ∬ e^{S/ℏ} b₀ d²α0` for single-mode initial data `conj(α)^m α^q`.
#[allow(clippy::too_many_arguments)]
pub fn resolve_polynomial_initial(
    sym: &WickSymbol,
    m: u32,
    q: u32,
    alpha_target: Complex64,
    t: f64,
    hbar: f64,
    quad: &QuadratureSpec,
    opts: PhaseOptions,
) -> Result<QuadratureResult> {
    check_hbar(hbar)?;
    if sym.modes() != 1 {
        return Err(Error::InvalidArgument {
            op: "transport::resolve_polynomial_initial",
            reason: "only single-mode symbols are supported",
        });
    }
    if quad.nodes == 0 || !(quad.growth > 1.0) {
        return Err(Error::InvalidArgument {
            op: "transport::resolve_polynomial_initial",
            reason: "quadrature needs at least one node and growth > 1",
        });
    }
    let probe = PhaseSolver::new(sym, &[alpha_target], opts)?;
    let center = probe.flow().classical_flow(&[alpha_target], -t, opts.ode_tol)?[0];
    let hw = quad.half_width_for(hbar);
    // Same node spacing on the wider square, so only the boundary differs.
    let wide_nodes = (quad.nodes as f64 * quad.growth).ceil() as usize;

    let (value, skipped_a) = completeness_sum(sym, m, q, alpha_target, t, hbar, quad.nodes, center, hw, opts)?;
    let (value_wide, skipped_b) =
        completeness_sum(sym, m, q, alpha_target, t, hbar, wide_nodes, center, hw * quad.growth, opts)?;
    let difference = (value - value_wide).norm();
    if difference > quad.tol {
        return Err(Error::QuadratureRegion {
            difference,
            tolerance: quad.tol,
        });
    }
    Ok(QuadratureResult {
        value,
        value_wide,
        center,
        half_width: hw,
        skipped: skipped_a + skipped_b,
    })
}

#[allow(clippy::too_many_arguments)]
fn completeness_sum(
    sym: &WickSymbol,
    m: u32,
    q: u32,
    alpha_target: Complex64,
    t: f64,
    hbar: f64,
    nodes: usize,
    center: Complex64,
    half_width: f64,
    opts: PhaseOptions,
) -> Result<(Complex64, usize)> {
    let (xs, wx) = scaled_rule(nodes, center.re, half_width);
    let (ys, wy) = scaled_rule(nodes, center.im, half_width);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut skipped = 0;
    for (x, wxi) in xs.iter().zip(&wx) {
        for (y, wyi) in ys.iter().zip(&wy) {
            let alpha0 = Complex64::new(*x, *y);
            let obs = ObservableSpec::new(
                MultiIndex::new(alloc::vec![m]),
                MultiIndex::new(alloc::vec![q]),
                alloc::vec![alpha0],
            )?;
            let solver = TransportSolver::new(sym, obs, opts)?;
            match solver.evaluate(&[alpha_target], t, hbar) {
                Ok(a) => sum += a.value * (wxi * wyi),
                Err(e) => {
                    if (alpha0 - center).norm_sqr() / hbar > 40.0 {
                        skipped += 1;
                    } else {
                        return Err(e);
                    }
                }
            }
        }
    }
    Ok((sum / (PI * hbar), skipped))
}
