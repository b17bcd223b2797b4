//! Exact dynamics on a truncated Fock space with `a|n⟩ = √(ℏn)|n−1⟩`.
//!
//! Basis states are ordered with mode 0 most significant.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::transport::ObservableSpec;
use crate::wick::{MultiIndex, WickSymbol};

pub type CVector = DVector<Complex64>;

/// Largest total dimension a space may have.
pub const MAX_DIMENSION: usize = 1 << 16;
/// Default bound on the Poisson tail of a coherent state.
pub const DEFAULT_TAIL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct FockSpace {
    cutoffs: Vec<usize>,
    strides: Vec<usize>,
    dim: usize,
    hbar: f64,
}

impl FockSpace {
    pub fn new(cutoffs: Vec<usize>, hbar: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidArgument {
                op: "fock_oracle::FockSpace",
                reason: "hbar must be positive and finite",
            });
        }
        if cutoffs.is_empty() || cutoffs.contains(&0) {
            return Err(Error::InvalidArgument {
                op: "fock_oracle::FockSpace",
                reason: "every mode needs a cutoff of at least 1",
            });
        }
        let mut dim: usize = 1;
        for &d in &cutoffs {
            dim = dim.saturating_mul(d);
        }
        if dim > MAX_DIMENSION {
            return Err(Error::DimensionTooLarge {
                dim,
                max: MAX_DIMENSION,
            });
        }
        let mut strides = vec![1; cutoffs.len()];
        for k in (0..cutoffs.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * cutoffs[k + 1];
        }
        Ok(FockSpace {
            cutoffs,
            strides,
            dim,
            hbar,
        })
    }

    pub fn modes(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn index(&self, occupation: &[usize]) -> usize {
        occupation.iter().zip(&self.strides).map(|(n, s)| n * s).sum()
    }

    pub fn occupation(&self, mut index: usize) -> Vec<usize> {
        self.strides
            .iter()
            .map(|s| {
                let n = index / s;
                index %= s;
                n
            })
            .collect()
    }

    fn check_modes(&self, op: &'static str, found: usize) -> Result<()> {
        if found != self.modes() {
            return Err(Error::DimensionMismatch {
                op,
                expected: self.modes(),
                found,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    pub matrix: CMatrix,
    pub hermitian: bool,
}

impl OperatorMatrix {
    pub fn hermiticity_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).camax()
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        &self.matrix * v
    }
}

/// `ln n!` for `n = 0..=max`.
fn ln_factorials(max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(max + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for n in 1..=max {
        acc += (n as f64).ln();
        out.push(acc);
    }
    out
}

/// `√(ℏ^k · n!/(n−k)!)`, the weight of `k` lowerings from level `n`.
fn ladder_weight(hbar: f64, n: usize, k: usize) -> f64 {
    let mut w = 1.0;
    for j in 0..k {
        w *= hbar * (n - j) as f64;
    }
    w.sqrt()
}

/// Annihilation operator of mode `k` (0-based).
pub fn annihilation(space: &FockSpace, k: usize) -> Result<OperatorMatrix> {
    if k >= space.modes() {
        return Err(Error::InvalidArgument {
            op: "fock_oracle::annihilation",
            reason: "mode index out of range",
        });
    }
    let mut m = CMatrix::zeros(space.dim, space.dim);
    for col in 0..space.dim {
        let mut occ = space.occupation(col);
        let n = occ[k];
        if n > 0 {
            occ[k] = n - 1;
            m[(space.index(&occ), col)] = Complex64::new((space.hbar * n as f64).sqrt(), 0.0);
        }
    }
    Ok(OperatorMatrix {
        matrix: m,
        hermitian: false,
    })
}

pub fn creation(space: &FockSpace, k: usize) -> Result<OperatorMatrix> {
    let a = annihilation(space, k)?;
    Ok(OperatorMatrix {
        matrix: a.matrix.adjoint(),
        hermitian: false,
    })
}

/// Probability mass of a Poisson(`λ`) distribution at levels `≥ d`.
pub fn poisson_tail(lambda: f64, d: usize) -> f64 {
    if lambda == 0.0 {
        return if d == 0 { 1.0 } else { 0.0 };
    }
    let ln_l = lambda.ln();
    let mut ln_fact = 0.0;
    for n in 1..=d {
        ln_fact += (n as f64).ln();
    }
    let mut sum = 0.0;
    let mut n = d;
    loop {
        let term = (-lambda + n as f64 * ln_l - ln_fact).exp();
        sum += term;
        if n as f64 > lambda && term <= 1e-17 * sum.max(f64::MIN_POSITIVE) {
            break;
        }
        n += 1;
        ln_fact += (n as f64).ln();
        if n > d + 100_000 {
            break;
        }
    }
    sum.min(1.0)
}

/// Smallest cutoff whose Poisson tail is at most `target`.
pub fn tail_cutoff(lambda: f64, target: f64) -> usize {
    if poisson_tail(lambda, 1) <= target {
        return 1;
    }
    let mut hi = 2usize;
    while poisson_tail(lambda, hi) > target {
        hi *= 2;
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if poisson_tail(lambda, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Largest per-mode tail mass of `|α⟩` in `space`.
pub fn coherent_tail(space: &FockSpace, alpha: &[Complex64]) -> f64 {
    alpha
        .iter()
        .zip(space.cutoffs())
        .map(|(a, &d)| poisson_tail(a.norm_sqr() / space.hbar, d))
        .fold(0.0, f64::max)
}

/// Truncated coherent state; fails if any mode's tail exceeds `max_tail`.
pub fn coherent_vector_with_tail(space: &FockSpace, alpha: &[Complex64], max_tail: f64) -> Result<CVector> {
    space.check_modes("fock_oracle::coherent_vector", alpha.len())?;
    let hbar = space.hbar;
    let mut per_mode = Vec::with_capacity(alpha.len());
    for (k, (a, &d)) in alpha.iter().zip(space.cutoffs()).enumerate() {
        let lambda = a.norm_sqr() / hbar;
        let tail = poisson_tail(lambda, d);
        if tail > max_tail {
            return Err(Error::TailTooLarge {
                mode: k,
                tail,
                required_cutoff: tail_cutoff(lambda, max_tail),
            });
        }
        let lf = ln_factorials(d);
        let (r, arg) = (a.norm(), a.arg());
        let amps: Vec<Complex64> = (0..d)
            .map(|n| {
                if r == 0.0 {
                    return Complex64::new(if n == 0 { 1.0 } else { 0.0 }, 0.0);
                }
                let nf = n as f64;
                let ln_mod = -0.5 * lambda + nf * r.ln() - 0.5 * (lf[n] + nf * hbar.ln());
                Complex64::from_polar(ln_mod.exp(), nf * arg)
            })
            .collect();
        per_mode.push(amps);
    }
    Ok(CVector::from_fn(space.dim, |i, _| {
        space
            .occupation(i)
            .iter()
            .enumerate()
            .map(|(k, &n)| per_mode[k][n])
            .product()
    }))
}

pub fn coherent_vector(space: &FockSpace, alpha: &[Complex64]) -> Result<CVector> {
    coherent_vector_with_tail(space, alpha, DEFAULT_TAIL)
}

/// Wick-ordered `Σ c(ℓ,s) a^{†ℓ} a^s`, assembled entry by entry.
pub fn wick_operator(space: &FockSpace, sym: &WickSymbol) -> Result<OperatorMatrix> {
    space.check_modes("fock_oracle::wick_operator", sym.modes())?;
    let hbar = space.hbar;
    let mut m = CMatrix::zeros(space.dim, space.dim);
    for col in 0..space.dim {
        let occ = space.occupation(col);
        for (l, s, c) in sym.terms() {
            let mut amp = 1.0;
            let mut target = Vec::with_capacity(occ.len());
            let mut inside = true;
            for k in 0..occ.len() {
                let (lk, sk) = (l.entries()[k] as usize, s.entries()[k] as usize);
                if occ[k] < sk {
                    inside = false;
                    break;
                }
                let lowered = occ[k] - sk;
                let raised = lowered + lk;
                if raised >= space.cutoffs[k] {
                    inside = false;
                    break;
                }
                amp *= ladder_weight(hbar, occ[k], sk) * ladder_weight(hbar, raised, lk);
                target.push(raised);
            }
            if inside {
                m[(space.index(&target), col)] += c * amp;
            }
        }
    }
    let op = OperatorMatrix {
        matrix: m,
        hermitian: sym.is_hermitian(),
    };
    if op.hermitian && op.hermiticity_defect() > HERMITIAN_TOL {
        return Err(Error::NotHermitian {
            op: "fock_oracle::wick_operator",
        });
    }
    Ok(op)
}

/// Applies `a^m` (all modes) to `v`.
pub fn lower(space: &FockSpace, v: &CVector, m: &MultiIndex) -> CVector {
    let mut out = CVector::zeros(space.dim);
    'basis: for i in 0..space.dim {
        let mut occ = space.occupation(i);
        let mut w = 1.0;
        for (k, &mk) in m.entries().iter().enumerate() {
            let mk = mk as usize;
            if occ[k] < mk {
                continue 'basis;
            }
            w *= ladder_weight(space.hbar, occ[k], mk);
            occ[k] -= mk;
        }
        out[space.index(&occ)] += v[i] * w;
    }
    out
}

/// Spectral decomposition of a hermitian operator, reused for every time.
#[derive(Clone, Debug)]
pub struct Propagator {
    eigenvalues: DVector<f64>,
    /// `None` when the operator is diagonal in the number basis.
    eigenvectors: Option<CMatrix>,
    hbar: f64,
}

impl Propagator {
    pub fn new(h: &OperatorMatrix, hbar: f64) -> Result<Self> {
        if !h.hermitian {
            return Err(Error::NotHermitian {
                op: "fock_oracle::evolve",
            });
        }
        let n = h.matrix.nrows();
        let off_diagonal = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .any(|(i, j)| i != j && h.matrix[(i, j)] != Complex64::new(0.0, 0.0));
        if !off_diagonal {
            return Ok(Propagator {
                eigenvalues: DVector::from_fn(n, |i, _| h.matrix[(i, i)].re),
                eigenvectors: None,
                hbar,
            });
        }
        let eig = h.matrix.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::EigenFailure);
        }
        Ok(Propagator {
            eigenvalues: eig.eigenvalues,
            eigenvectors: Some(eig.eigenvectors),
            hbar,
        })
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// `e^{−iHt/ℏ} v`.
    pub fn evolve(&self, v: &CVector, t: f64) -> CVector {
        let phase = |i: usize| Complex64::from_polar(1.0, -self.eigenvalues[i] * t / self.hbar);
        match &self.eigenvectors {
            None => CVector::from_fn(v.len(), |i, _| v[i] * phase(i)),
            Some(u) => {
                let mut c = u.adjoint() * v;
                for (i, ci) in c.iter_mut().enumerate() {
                    *ci *= phase(i);
                }
                u * c
            }
        }
    }
}

pub fn evolve(space: &FockSpace, h: &OperatorMatrix, v: &CVector, t: f64) -> Result<CVector> {
    Ok(Propagator::new(h, space.hbar)?.evolve(v, t))
}

/// Hamiltonian and propagator for one `(space, symbol)` pair.
#[derive(Clone, Debug)]
pub struct Oracle {
    space: FockSpace,
    hamiltonian: OperatorMatrix,
    propagator: Propagator,
    max_tail: f64,
}

impl Oracle {
    pub fn new(space: FockSpace, sym: &WickSymbol) -> Result<Self> {
        let hamiltonian = wick_operator(&space, sym)?;
        let propagator = Propagator::new(&hamiltonian, space.hbar)?;
        Ok(Oracle {
            space,
            hamiltonian,
            propagator,
            max_tail: DEFAULT_TAIL,
        })
    }

    pub fn with_max_tail(mut self, max_tail: f64) -> Self {
        self.max_tail = max_tail;
        self
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn hamiltonian(&self) -> &OperatorMatrix {
        &self.hamiltonian
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    pub fn coherent(&self, alpha: &[Complex64]) -> Result<CVector> {
        coherent_vector_with_tail(&self.space, alpha, self.max_tail)
    }

    /// `e^{−iHt/ℏ}|α⟩`.
    pub fn evolved(&self, alpha: &[Complex64], t: f64) -> Result<CVector> {
        Ok(self.propagator.evolve(&self.coherent(alpha)?, t))
    }

    /// `⟨α|F(t)|α⟩` for `F(0) = a^{†m}|α0⟩⟨α0|a^q`.
    pub fn expectation(&self, obs: &ObservableSpec, alpha: &[Complex64], t: f64) -> Result<Complex64> {
        self.space.check_modes("fock_oracle::expectation", obs.modes())?;
        let u = self.evolved(alpha, t)?;
        let bra = self.coherent(&obs.alpha0)?;
        let left = bra.dotc(&lower(&self.space, &u, &obs.m));
        let right = bra.dotc(&lower(&self.space, &u, &obs.q));
        Ok(left.conj() * right)
    }

    /// `⟨α|e^{iHt/ℏ} a^{†m} a^q e^{−iHt/ℏ}|α⟩`.
    pub fn moment(&self, m: &MultiIndex, q: &MultiIndex, alpha: &[Complex64], t: f64) -> Result<Complex64> {
        self.space.check_modes("fock_oracle::moment", m.len())?;
        self.space.check_modes("fock_oracle::moment", q.len())?;
        let u = self.evolved(alpha, t)?;
        Ok(lower(&self.space, &u, m).dotc(&lower(&self.space, &u, q)))
    }
}

/// Per-mode cutoffs covering every point in `alphas` to `target_tail`,
/// plus a margin of the symbol's degree in that mode so that the operator's
/// action on the covered states stays inside the truncation.
pub fn cutoff_search(
    modes: usize,
    hbar: f64,
    alphas: &[Vec<Complex64>],
    sym: &WickSymbol,
    target_tail: f64,
) -> Result<Vec<usize>> {
    if !(target_tail > 0.0) {
        return Err(Error::InvalidArgument {
            op: "fock_oracle::cutoff_search",
            reason: "target tail must be positive",
        });
    }
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(Error::InvalidArgument {
            op: "fock_oracle::cutoff_search",
            reason: "hbar must be positive and finite",
        });
    }
    if sym.modes() != modes {
        return Err(Error::DimensionMismatch {
            op: "fock_oracle::cutoff_search",
            expected: modes,
            found: sym.modes(),
        });
    }
    let mut cutoffs = Vec::with_capacity(modes);
    for k in 0..modes {
        let mut lambda: f64 = 0.0;
        for a in alphas {
            if a.len() != modes {
                return Err(Error::DimensionMismatch {
                    op: "fock_oracle::cutoff_search",
                    expected: modes,
                    found: a.len(),
                });
            }
            lambda = lambda.max(a[k].norm_sqr() / hbar);
        }
        cutoffs.push(tail_cutoff(lambda, target_tail) + sym.max_degree_in_mode(k) as usize);
    }
    let dim = cutoffs.iter().fold(1usize, |acc, &d| acc.saturating_mul(d));
    if dim > MAX_DIMENSION {
        return Err(Error::DimensionTooLarge {
            dim,
            max: MAX_DIMENSION,
        });
    }
    Ok(cutoffs)
}
