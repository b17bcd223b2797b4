//! Characteristic system of the phase equation.
//!
//! The state carries `(α, p)` only; the conjugate tracks `α*`, `p*` are the
//! complex conjugates, which the hermitian flow preserves. The action and the
//! transport log-amplitude ride along as extra components, and so does the
//! variational frame (derivatives with respect to the Wirtinger initial
//! coordinates `(α(0), α*(0))`).

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{conj_swap, min_singular_value, right_divide, vstack, CMatrix};
use crate::ode::{self, Event, OdeOptions, OdeStats, System};
use crate::wick::{Derivatives, LocalJet, ShiftedArgs, WickSymbol};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Derivatives of `(α, p)` with respect to `(α(0), α*(0))`, each block `N × 2N`.
#[derive(Clone, Debug, PartialEq)]
pub struct VariationalFrame {
    pub d_alpha: CMatrix,
    pub d_p: CMatrix,
}

impl VariationalFrame {
    /// Frame at `t = 0` for initial momentum `p(0) = −(α*(0) − α0*)`.
    pub fn initial(modes: usize) -> Self {
        let n = modes;
        VariationalFrame {
            d_alpha: CMatrix::from_fn(n, 2 * n, |i, j| if i == j { 1.0.into() } else { ZERO }),
            d_p: CMatrix::from_fn(n, 2 * n, |i, j| if j == i + n { (-1.0).into() } else { ZERO }),
        }
    }

    pub fn modes(&self) -> usize {
        self.d_alpha.nrows()
    }

    pub fn d_alpha_star(&self) -> CMatrix {
        conj_swap(&self.d_alpha)
    }

    pub fn d_p_star(&self) -> CMatrix {
        conj_swap(&self.d_p)
    }

    /// `[dα; dα*]`, the `2N × 2N` Jacobian of the flow map in Wirtinger form.
    pub fn position_block(&self) -> CMatrix {
        vstack(&self.d_alpha, &self.d_alpha_star())
    }

    /// `[dp; dp*]`.
    pub fn momentum_block(&self) -> CMatrix {
        vstack(&self.d_p, &self.d_p_star())
    }

    /// Jacobian of `α(t)` with respect to `α(0)` in the real coordinates
    /// `(Re α, Im α)`.
    pub fn real_jacobian(&self) -> DMatrix<f64> {
        let n = self.modes();
        let j1 = self.d_alpha.columns(0, n);
        let j2 = self.d_alpha.columns(n, n);
        let sum = j1 + j2;
        let diff = j1 - j2;
        DMatrix::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
            (true, true) => sum[(i, j)].re,
            (true, false) => -diff[(i, j - n)].im,
            (false, true) => sum[(i - n, j)].im,
            (false, false) => diff[(i - n, j - n)].re,
        })
    }

    /// Wirtinger Hessian of the phase, `[dp; dp*] · [dα; dα*]⁻¹`.
    pub fn phase_hessian(&self) -> Option<CMatrix> {
        right_divide(&self.momentum_block(), &self.position_block())
    }
}

/// Smallest singular value of `[dα; dα*]`; it vanishes at a caustic.
pub fn caustic_indicator(frame: &VariationalFrame) -> f64 {
    min_singular_value(&frame.position_block())
}

/// A point on a characteristic.
#[derive(Clone, Debug, PartialEq)]
pub struct CharState {
    pub time: f64,
    pub alpha: Vec<Complex64>,
    pub p: Vec<Complex64>,
    /// `−|α(0) − α0|² + ∫ℒ dτ`; real for hermitian symbols.
    pub action: Complex64,
    /// `∫κ dτ` (zero unless transport accumulation was requested).
    pub log_amplitude: Complex64,
    pub frame: VariationalFrame,
}

impl CharState {
    pub fn caustic_indicator(&self) -> f64 {
        caustic_indicator(&self.frame)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub states: Vec<CharState>,
    pub stats: OdeStats,
}

impl Trajectory {
    pub fn last(&self) -> &CharState {
        self.states.last().expect("trajectory has at least one state")
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrateOptions {
    pub tol: f64,
    /// Also accumulate `∫κ` for the leading transport amplitude.
    pub transport: bool,
}

impl IntegrateOptions {
    pub fn new(tol: f64) -> Self {
        IntegrateOptions {
            tol,
            transport: false,
        }
    }

    pub fn with_transport(mut self) -> Self {
        self.transport = true;
        self
    }
}

/// `p(0) = −(conj(α_init) − conj(α0))`.
pub fn initial_momentum(alpha0: &[Complex64], alpha_init: &[Complex64]) -> Result<Vec<Complex64>> {
    if alpha0.len() != alpha_init.len() {
        return Err(Error::DimensionMismatch {
            op: "hj_phase::initial_momentum",
            expected: alpha0.len(),
            found: alpha_init.len(),
        });
    }
    Ok(alpha_init
        .iter()
        .zip(alpha0)
        .map(|(a, a0)| -(a.conj() - a0.conj()))
        .collect())
}

/// Transport rate `κ = (i/2) Σ {∂²ℋ/∂z_ℓ∂z_m(X)·S_{α*α*} − ∂²ℋ/∂z*_ℓ∂z*_m(Y)·S_{αα}}`
/// given the two jets at `X = (α*, α+p*)` and `Y = (α*+p, α)`.
pub(crate) fn kappa(jx: &LocalJet, jy: &LocalJet, hess_aa: &CMatrix, hess_ss: &CMatrix) -> Complex64 {
    let n = hess_aa.nrows();
    let mut acc = ZERO;
    for l in 0..n {
        for m in 0..n {
            acc += jx.plain_plain[l][m] * hess_ss[(l, m)] - jy.star_star[l][m] * hess_aa[(l, m)];
        }
    }
    I * 0.5 * acc
}

/// Hamiltonian flow of a hermitian Wick symbol and its characteristic system.
#[derive(Clone, Debug)]
pub struct Flow {
    der: Derivatives,
}

impl Flow {
    pub fn new(sym: &WickSymbol) -> Result<Self> {
        sym.require_hermitian("characteristics::integrate")?;
        Ok(Flow {
            der: Derivatives::new(sym),
        })
    }

    pub fn symbol(&self) -> &WickSymbol {
        &self.der.symbol
    }

    pub fn derivatives(&self) -> &Derivatives {
        &self.der
    }

    pub fn modes(&self) -> usize {
        self.der.modes()
    }

    fn check(&self, op: &'static str, v: &[Complex64]) -> Result<()> {
        if v.len() != self.modes() {
            return Err(Error::DimensionMismatch {
                op,
                expected: self.modes(),
                found: v.len(),
            });
        }
        Ok(())
    }

    /// `dα/dt = i ∂ℋ/∂z*(conj α, α)`.
    pub fn classical_rhs(&self, alpha: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check("characteristics::classical_rhs", alpha)?;
        let astar: Vec<_> = alpha.iter().map(|a| a.conj()).collect();
        Ok(self
            .der
            .star
            .iter()
            .map(|d| I * d.eval(&astar, alpha))
            .collect())
    }

    /// `(dα/dt, dp/dt)` of the characteristic system.
    pub fn char_rhs(&self, alpha: &[Complex64], p: &[Complex64]) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        self.check("characteristics::char_rhs", alpha)?;
        self.check("characteristics::char_rhs", p)?;
        let (x, y) = ShiftedArgs::new(alpha, p);
        let (y_star, y_plain) = self.der.first(&y);
        let (_, x_plain) = self.der.first(&x);
        let da = y_star.iter().map(|v| I * v).collect();
        let dp = x_plain.iter().zip(&y_plain).map(|(a, b)| I * (a - b)).collect();
        Ok((da, dp))
    }

    /// Time derivatives `(d/dt dα, d/dt dp)` of the frame blocks.
    pub fn variational_rhs(&self, state: &CharState) -> Result<(CMatrix, CMatrix)> {
        self.check("characteristics::variational_rhs", &state.alpha)?;
        let sys = TwoTrack {
            der: &self.der,
            transport: false,
        };
        let y = sys.pack(state);
        let mut dy = vec![ZERO; y.len()];
        sys.rhs(&y, &mut dy);
        let n = self.modes();
        let base = 2 * n + 2;
        Ok((unpack_block(&dy, base, n), unpack_block(&dy, base + 2 * n * n, n)))
    }

    /// Characteristic through `alpha_init` with `p(0)` fixed by `alpha0`,
    /// sampled at `times` (which must start at 0).
    pub fn integrate(
        &self,
        alpha0: &[Complex64],
        alpha_init: &[Complex64],
        times: &[f64],
        opts: IntegrateOptions,
    ) -> Result<Trajectory> {
        self.check("characteristics::integrate", alpha0)?;
        self.check("characteristics::integrate", alpha_init)?;
        if times.first() != Some(&0.0) {
            return Err(Error::InvalidArgument {
                op: "characteristics::integrate",
                reason: "time grid must start at 0",
            });
        }
        let p = initial_momentum(alpha0, alpha_init)?;
        let action = -alpha_init
            .iter()
            .zip(alpha0)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>();
        let state = CharState {
            time: 0.0,
            alpha: alpha_init.to_vec(),
            p,
            action: action.into(),
            log_amplitude: ZERO,
            frame: VariationalFrame::initial(self.modes()),
        };
        self.integrate_from(&state, times, opts)
    }

    /// Continues a characteristic from an arbitrary state; `times` are
    /// absolute and must not precede `state.time`.
    pub fn integrate_from(&self, state: &CharState, times: &[f64], opts: IntegrateOptions) -> Result<Trajectory> {
        self.check("characteristics::integrate", &state.alpha)?;
        let sys = TwoTrack {
            der: &self.der,
            transport: opts.transport,
        };
        let y0 = sys.pack(state);
        let mut states = Vec::with_capacity(times.len());
        let stats = ode::solve(&sys, state.time, &y0, times, OdeOptions::new(opts.tol), |ev, t, y| {
            if let Event::Output(_) = ev {
                states.push(sys.unpack(t, y));
            }
        })?;
        Ok(Trajectory { states, stats })
    }

    /// Classical flow `g^t α` (negative `t` runs backwards).
    pub fn classical_flow(&self, alpha: &[Complex64], t: f64, tol: f64) -> Result<Vec<Complex64>> {
        self.check("characteristics::classical_flow", alpha)?;
        let sys = Classical {
            der: &self.der,
            sign: if t < 0.0 { -1.0 } else { 1.0 },
        };
        let mut out = alpha.to_vec();
        ode::solve(&sys, 0.0, alpha, &[t.abs()], OdeOptions::new(tol), |ev, _, y| {
            if let Event::Output(_) = ev {
                out.copy_from_slice(y);
            }
        })?;
        Ok(out)
    }

    /// Integrates `(α, α*, p, p*)` and all four frame blocks as independent
    /// unknowns, recording every accepted step.
    pub fn integrate_four_track(&self, initial: &FourTrackState, times: &[f64], tol: f64) -> Result<Vec<FourTrackState>> {
        self.check("characteristics::integrate_four_track", &initial.alpha)?;
        let sys = FourTrack { der: &self.der };
        let y0 = sys.pack(initial);
        let mut states = vec![initial.clone()];
        ode::solve(&sys, initial.time, &y0, times, OdeOptions::new(tol), |ev, t, y| {
            if ev == Event::Step {
                states.push(sys.unpack(t, y));
            }
        })?;
        Ok(states)
    }
}

fn unpack_block(y: &[Complex64], base: usize, n: usize) -> CMatrix {
    CMatrix::from_fn(n, 2 * n, |k, c| y[base + k * 2 * n + c])
}

fn pack_block(m: &CMatrix, out: &mut Vec<Complex64>) {
    for k in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.push(m[(k, c)]);
        }
    }
}

/// Layout: `α (N) | p (N) | action | log-amplitude | dα (N×2N) | dp (N×2N)`.
struct TwoTrack<'a> {
    der: &'a Derivatives,
    transport: bool,
}

impl TwoTrack<'_> {
    fn n(&self) -> usize {
        self.der.modes()
    }

    fn pack(&self, s: &CharState) -> Vec<Complex64> {
        let mut y = Vec::with_capacity(self.dim());
        y.extend_from_slice(&s.alpha);
        y.extend_from_slice(&s.p);
        y.push(s.action);
        y.push(s.log_amplitude);
        pack_block(&s.frame.d_alpha, &mut y);
        pack_block(&s.frame.d_p, &mut y);
        y
    }

    fn unpack(&self, t: f64, y: &[Complex64]) -> CharState {
        let n = self.n();
        let base = 2 * n + 2;
        CharState {
            time: t,
            alpha: y[..n].to_vec(),
            p: y[n..2 * n].to_vec(),
            action: y[2 * n],
            log_amplitude: y[2 * n + 1],
            frame: VariationalFrame {
                d_alpha: unpack_block(y, base, n),
                d_p: unpack_block(y, base + 2 * n * n, n),
            },
        }
    }
}

impl System for TwoTrack<'_> {
    fn dim(&self) -> usize {
        let n = self.n();
        2 * n + 2 + 4 * n * n
    }

    fn rhs(&self, y: &[Complex64], dy: &mut [Complex64]) {
        let n = self.n();
        let m = 2 * n;
        let (alpha, p) = (&y[..n], &y[n..2 * n]);
        let (x, yy) = ShiftedArgs::new(alpha, p);
        let jx = self.der.jet(&x);
        let jy = self.der.jet(&yy);
        let sym = &self.der.symbol;

        let mut lag = sym.eval(&x.zstar, &x.z) - sym.eval(&yy.zstar, &yy.z);
        for k in 0..n {
            dy[k] = I * jy.star[k];
            dy[n + k] = I * (jx.plain[k] - jy.plain[k]);
            lag += p[k] * jy.star[k] - p[k].conj() * jx.plain[k];
        }
        dy[2 * n] = I * lag;

        let base_a = 2 * n + 2;
        let base_p = base_a + n * m;
        let da = |k: usize, c: usize| y[base_a + k * m + c];
        let dp = |k: usize, c: usize| y[base_p + k * m + c];
        // Conjugate blocks: conj with the two column halves exchanged.
        let swap = |c: usize| if c < n { c + n } else { c - n };
        let das = |k: usize, c: usize| da(k, swap(c)).conj();
        let dps = |k: usize, c: usize| dp(k, swap(c)).conj();

        for k in 0..n {
            for c in 0..m {
                let mut va = ZERO;
                let mut vp = ZERO;
                for r in 0..n {
                    va += jy.star_plain[k][r] * da(r, c) + jy.star_star[k][r] * (das(r, c) + dp(r, c));
                    vp += jx.plain_plain[k][r] * (da(r, c) + dps(r, c)) + jx.star_plain[r][k] * das(r, c)
                        - jy.plain_plain[k][r] * da(r, c)
                        - jy.star_plain[r][k] * (das(r, c) + dp(r, c));
                }
                dy[base_a + k * m + c] = I * va;
                dy[base_p + k * m + c] = I * vp;
            }
        }

        dy[2 * n + 1] = if self.transport {
            let frame = VariationalFrame {
                d_alpha: unpack_block(y, base_a, n),
                d_p: unpack_block(y, base_p, n),
            };
            match frame.phase_hessian() {
                Some(h) => {
                    let hess_aa = h.view((0, 0), (n, n)).into_owned();
                    let hess_ss = h.view((n, n), (n, n)).into_owned();
                    kappa(&jx, &jy, &hess_aa, &hess_ss)
                }
                None => Complex64::new(f64::NAN, f64::NAN),
            }
        } else {
            ZERO
        };
    }
}

struct Classical<'a> {
    der: &'a Derivatives,
    sign: f64,
}

impl System for Classical<'_> {
    fn dim(&self) -> usize {
        self.der.modes()
    }

    fn rhs(&self, y: &[Complex64], dy: &mut [Complex64]) {
        let ystar: Vec<_> = y.iter().map(|a| a.conj()).collect();
        for (k, d) in self.der.star.iter().enumerate() {
            dy[k] = I * d.eval(&ystar, y) * self.sign;
        }
    }
}

/// State of the full characteristic system with all four tracks independent.
#[derive(Clone, Debug, PartialEq)]
pub struct FourTrackState {
    pub time: f64,
    pub alpha: Vec<Complex64>,
    pub alpha_star: Vec<Complex64>,
    pub p: Vec<Complex64>,
    pub p_star: Vec<Complex64>,
    pub d_alpha: CMatrix,
    pub d_alpha_star: CMatrix,
    pub d_p: CMatrix,
    pub d_p_star: CMatrix,
}

impl FourTrackState {
    /// Conjugate-consistent initial data for the characteristic through
    /// `alpha_init` with `p(0)` fixed by `alpha0`.
    pub fn initial(alpha0: &[Complex64], alpha_init: &[Complex64]) -> Result<Self> {
        let p = initial_momentum(alpha0, alpha_init)?;
        let frame = VariationalFrame::initial(alpha0.len());
        Ok(FourTrackState {
            time: 0.0,
            alpha: alpha_init.to_vec(),
            alpha_star: alpha_init.iter().map(|a| a.conj()).collect(),
            p_star: p.iter().map(|v| v.conj()).collect(),
            p,
            d_alpha_star: frame.d_alpha_star(),
            d_p_star: frame.d_p_star(),
            d_alpha: frame.d_alpha,
            d_p: frame.d_p,
        })
    }

    /// `‖α* − conj α‖ + ‖p* − conj p‖` (Euclidean norms).
    pub fn conjugacy_defect(&self) -> f64 {
        let d = |a: &[Complex64], b: &[Complex64]| -> f64 {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y.conj()).norm_sqr())
                .sum::<f64>()
                .sqrt()
        };
        d(&self.alpha_star, &self.alpha) + d(&self.p_star, &self.p)
    }

    /// Largest entry of `dα* − conj_swap(dα)` and `dp* − conj_swap(dp)`.
    pub fn frame_symmetry_defect(&self) -> f64 {
        let a = (&self.d_alpha_star - conj_swap(&self.d_alpha)).camax();
        let p = (&self.d_p_star - conj_swap(&self.d_p)).camax();
        a.max(p)
    }
}

struct FourTrack<'a> {
    der: &'a Derivatives,
}

impl FourTrack<'_> {
    fn n(&self) -> usize {
        self.der.modes()
    }

    fn pack(&self, s: &FourTrackState) -> Vec<Complex64> {
        let mut y = Vec::with_capacity(self.dim());
        for v in [&s.alpha, &s.alpha_star, &s.p, &s.p_star] {
            y.extend_from_slice(v);
        }
        for b in [&s.d_alpha, &s.d_alpha_star, &s.d_p, &s.d_p_star] {
            pack_block(b, &mut y);
        }
        y
    }

    fn unpack(&self, t: f64, y: &[Complex64]) -> FourTrackState {
        let n = self.n();
        let base = 4 * n;
        let bs = 2 * n * n;
        FourTrackState {
            time: t,
            alpha: y[..n].to_vec(),
            alpha_star: y[n..2 * n].to_vec(),
            p: y[2 * n..3 * n].to_vec(),
            p_star: y[3 * n..4 * n].to_vec(),
            d_alpha: unpack_block(y, base, n),
            d_alpha_star: unpack_block(y, base + bs, n),
            d_p: unpack_block(y, base + 2 * bs, n),
            d_p_star: unpack_block(y, base + 3 * bs, n),
        }
    }
}

impl System for FourTrack<'_> {
    fn dim(&self) -> usize {
        let n = self.n();
        4 * n + 8 * n * n
    }

    fn rhs(&self, y: &[Complex64], dy: &mut [Complex64]) {
        let n = self.n();
        let m = 2 * n;
        let (alpha, alpha_star) = (&y[..n], &y[n..2 * n]);
        let (p, p_star) = (&y[2 * n..3 * n], &y[3 * n..4 * n]);
        let (x, yy) = ShiftedArgs::from_tracks(alpha, alpha_star, p, p_star);
        let jx = self.der.jet(&x);
        let jy = self.der.jet(&yy);
        for k in 0..n {
            dy[k] = I * jy.star[k];
            dy[n + k] = -I * jx.plain[k];
            dy[2 * n + k] = I * (jx.plain[k] - jy.plain[k]);
            dy[3 * n + k] = I * (jx.star[k] - jy.star[k]);
        }
        let base = 4 * n;
        let bs = n * m;
        let blk = |b: usize, k: usize, c: usize| y[base + b * bs + k * m + c];
        let a = |k, c| blk(0, k, c);
        let a_s = |k, c| blk(1, k, c);
        let pp = |k, c| blk(2, k, c);
        let p_s = |k, c| blk(3, k, c);
        for k in 0..n {
            for c in 0..m {
                let (mut va, mut vas, mut vp, mut vps) = (ZERO, ZERO, ZERO, ZERO);
                for r in 0..n {
                    va += jy.star_plain[k][r] * a(r, c) + jy.star_star[k][r] * (a_s(r, c) + pp(r, c));
                    vp += jx.plain_plain[k][r] * (a(r, c) + p_s(r, c)) + jx.star_plain[r][k] * a_s(r, c)
                        - jy.plain_plain[k][r] * a(r, c)
                        - jy.star_plain[r][k] * (a_s(r, c) + pp(r, c));
                    vas += jx.star_plain[r][k] * a_s(r, c) + jx.plain_plain[k][r] * (a(r, c) + p_s(r, c));
                    vps += jx.star_star[k][r] * a_s(r, c) + jx.star_plain[k][r] * (a(r, c) + p_s(r, c))
                        - jy.star_star[k][r] * (a_s(r, c) + pp(r, c))
                        - jy.star_plain[k][r] * a(r, c);
                }
                dy[base + k * m + c] = I * va;
                dy[base + bs + k * m + c] = -I * vas;
                dy[base + 2 * bs + k * m + c] = I * vp;
                dy[base + 3 * bs + k * m + c] = I * vps;
            }
        }
    }
}

/// Convenience wrapper around [`Flow::classical_rhs`].
pub fn classical_rhs(sym: &WickSymbol, alpha: &[Complex64]) -> Result<Vec<Complex64>> {
    Flow::new(sym)?.classical_rhs(alpha)
}

/// Convenience wrapper around [`Flow::char_rhs`].
pub fn char_rhs(sym: &WickSymbol, alpha: &[Complex64], p: &[Complex64]) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    Flow::new(sym)?.char_rhs(alpha, p)
}

/// Convenience wrapper around [`Flow::integrate`].
pub fn integrate(
    sym: &WickSymbol,
    alpha0: &[Complex64],
    alpha_init: &[Complex64],
    times: &[f64],
    tol: f64,
) -> Result<Trajectory> {
    Flow::new(sym)?.integrate(alpha0, alpha_init, times, IntegrateOptions::new(tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn classical_rhs_examples() {
        let omega = 1.3;
        let f = Flow::new(&WickSymbol::harmonic(omega)).unwrap();
        let a = c(0.4, -0.7);
        assert!((f.classical_rhs(&[a]).unwrap()[0] - I * omega * a).norm() < 1e-15);

        let (w, mu) = (1.0, 0.5);
        let k = Flow::new(&WickSymbol::kerr(w, mu)).unwrap();
        let expect = I * (w + 2.0 * mu * a.norm_sqr()) * a;
        assert!((k.classical_rhs(&[a]).unwrap()[0] - expect).norm() < 1e-15);
        assert_eq!(k.classical_rhs(&[ZERO]).unwrap()[0], ZERO);
    }

    #[test]
    fn char_rhs_examples() {
        let k = Flow::new(&WickSymbol::kerr(1.0, 0.5)).unwrap();
        let a = c(0.9, 0.2);
        let (da, dp) = k.char_rhs(&[a], &[ZERO]).unwrap();
        assert_eq!(dp[0], ZERO);
        assert!((da[0] - k.classical_rhs(&[a]).unwrap()[0]).norm() < 1e-15);

        let omega = 0.7;
        let h = Flow::new(&WickSymbol::harmonic(omega)).unwrap();
        let p = c(0.1, 0.3);
        let (da, dp) = h.char_rhs(&[a], &[p]).unwrap();
        assert!((da[0] - I * omega * a).norm() < 1e-15);
        assert!((dp[0] + I * omega * p).norm() < 1e-15);
    }

    #[test]
    fn initial_frame_blocks() {
        let f = VariationalFrame::initial(2);
        let das = f.d_alpha_star();
        let dps = f.d_p_star();
        for i in 0..2 {
            for j in 0..4 {
                let e = |cond: bool, v: f64| if cond { c(v, 0.0) } else { ZERO };
                assert_eq!(f.d_alpha[(i, j)], e(j == i, 1.0));
                assert_eq!(das[(i, j)], e(j == i + 2, 1.0));
                assert_eq!(f.d_p[(i, j)], e(j == i + 2, -1.0));
                assert_eq!(dps[(i, j)], e(j == i, -1.0));
            }
        }
        assert!((caustic_indicator(&f) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn initial_momentum_examples() {
        let p = initial_momentum(&[c(1.0, 0.0)], &[c(1.0, 0.1)]).unwrap();
        assert!((p[0] - c(0.0, 0.1)).norm() < 1e-16);
        assert_eq!(initial_momentum(&[c(0.3, 0.2)], &[c(0.3, 0.2)]).unwrap()[0], ZERO);
        let p2 = initial_momentum(&[c(1.0, 0.0), c(0.0, 1.0)], &[c(1.5, 0.0), c(0.0, 0.5)]).unwrap();
        assert!((p2[0] - c(-0.5, 0.0)).norm() < 1e-16);
        assert!((p2[1] - c(0.0, -0.5)).norm() < 1e-16);
        assert!(initial_momentum(&[ZERO], &[ZERO, ZERO]).is_err());
    }

    #[test]
    fn non_hermitian_flow_rejected() {
        use crate::wick::MultiIndex;
        let lone = WickSymbol::new(1, [(MultiIndex::new(vec![0]), MultiIndex::new(vec![1]), c(1.0, 0.0))]).unwrap();
        assert!(matches!(Flow::new(&lone), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn integrate_requires_zero_start() {
        let f = Flow::new(&WickSymbol::harmonic(1.0)).unwrap();
        let r = f.integrate(&[ZERO], &[ZERO], &[0.5], IntegrateOptions::new(1e-8));
        assert!(matches!(r, Err(Error::InvalidArgument { .. })));
    }

    #[test]
    fn classical_flow_round_trip() {
        let f = Flow::new(&WickSymbol::kerr(1.0, 0.5)).unwrap();
        let a = [c(0.8, 0.3)];
        let fwd = f.classical_flow(&a, 0.7, 1e-12).unwrap();
        let back = f.classical_flow(&fwd, -0.7, 1e-12).unwrap();
        assert!((back[0] - a[0]).norm() < 1e-10);
        assert!((fwd[0].norm() - a[0].norm()).abs() < 1e-10);
    }
}
