//! Wick symbols of polynomial Bose Hamiltonians.
//!
//! A symbol `ℋ(z*, z) = Σ c(ℓ,s) z*^ℓ z^s` is stored as a map from ordered
//! multi-index pairs to nonzero complex coefficients. The two arguments are
//! independent: characteristics evaluate the symbol at shifted, non-conjugate
//! pairs such as `(α* + p, α)`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest allowed order `|ℓ|` of a single multi-index.
pub const MAX_ORDER: u32 = 20;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Tuple of nonnegative exponents, one per mode.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zeros(modes: usize) -> Self {
        MultiIndex(vec![0; modes])
    }

    /// The unit vector `1_k`.
    pub fn unit(modes: usize, k: usize) -> Self {
        let mut e = vec![0; modes];
        e[k] = 1;
        MultiIndex(e)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total order `Σ ℓ_k`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `Π ℓ_k!` as a float (exact for orders up to [`MAX_ORDER`]).
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&e| (1..=e).map(f64::from).product::<f64>())
            .product()
    }

    /// `Π z_k^{ℓ_k}`.
    pub fn power(&self, z: &[Complex64]) -> Complex64 {
        self.0
            .iter()
            .zip(z)
            .fold(Complex64::new(1.0, 0.0), |acc, (&e, &zk)| acc * zk.powu(e))
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

/// Which argument of `ℋ(z*, z)` a derivative acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    /// `∂/∂z*_k`
    Star,
    /// `∂/∂z_k`
    Plain,
}

/// Polynomial Wick symbol in canonical form.
#[derive(Clone, Debug, PartialEq)]
pub struct WickSymbol {
    modes: usize,
    terms: BTreeMap<(MultiIndex, MultiIndex), Complex64>,
    hermitian: bool,
}

impl WickSymbol {
    /// Builds a symbol from `(ℓ, s, coefficient)` triples. Repeated keys are
    /// summed and zero coefficients dropped.
    pub fn new<T>(modes: usize, terms: T) -> Result<Self>
    where
        T: IntoIterator<Item = (MultiIndex, MultiIndex, Complex64)>,
    {
        if modes == 0 {
            return Err(Error::InvalidArgument {
                op: "wick_symbols::new",
                reason: "mode count must be positive",
            });
        }
        let mut map: BTreeMap<(MultiIndex, MultiIndex), Complex64> = BTreeMap::new();
        for (l, s, c) in terms {
            for idx in [&l, &s] {
                if idx.len() != modes {
                    return Err(Error::DimensionMismatch {
                        op: "wick_symbols::new",
                        expected: modes,
                        found: idx.len(),
                    });
                }
                if idx.order() > MAX_ORDER {
                    return Err(Error::DegreeTooHigh {
                        degree: idx.order(),
                        max: MAX_ORDER,
                    });
                }
            }
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::InvalidArgument {
                    op: "wick_symbols::new",
                    reason: "non-finite coefficient",
                });
            }
            *map.entry((l, s)).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        Ok(Self::from_map(modes, map))
    }

    /// Like [`WickSymbol::new`] but replaces every coefficient by the average
    /// of `c(ℓ,s)` and `conj(c(s,ℓ))`, which yields a hermitian symbol.
    pub fn symmetrized<T>(modes: usize, terms: T) -> Result<Self>
    where
        T: IntoIterator<Item = (MultiIndex, MultiIndex, Complex64)>,
    {
        let raw = Self::new(modes, terms)?;
        let mut sym = Vec::with_capacity(2 * raw.terms.len());
        for ((l, s), c) in &raw.terms {
            sym.push((l.clone(), s.clone(), c * 0.5));
            sym.push((s.clone(), l.clone(), c.conj() * 0.5));
        }
        Self::new(modes, sym)
    }

    pub fn zero(modes: usize) -> Self {
        Self::from_map(modes, BTreeMap::new())
    }

    fn from_map(modes: usize, mut terms: BTreeMap<(MultiIndex, MultiIndex), Complex64>) -> Self {
        terms.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        let hermitian = terms.iter().all(|((l, s), c)| {
            terms
                .get(&(s.clone(), l.clone()))
                .is_some_and(|partner| *c == partner.conj())
        });
        WickSymbol {
            modes,
            terms,
            hermitian,
        }
    }

    /// `ω z*z`
    pub fn harmonic(omega: f64) -> Self {
        let one = MultiIndex::new(vec![1]);
        Self::from_terms_unchecked(1, [(one.clone(), one, omega.into())])
    }

    /// `ω z*z + μ z*²z²`
    pub fn kerr(omega: f64, mu: f64) -> Self {
        let one = MultiIndex::new(vec![1]);
        let two = MultiIndex::new(vec![2]);
        Self::from_terms_unchecked(
            1,
            [(one.clone(), one, omega.into()), (two.clone(), two, mu.into())],
        )
    }

    /// `ω₁ z₁*z₁ + ω₂ z₂*z₂ + μ₁₂ z₁*z₂*z₁z₂`
    pub fn cross_kerr(omega1: f64, omega2: f64, mu12: f64) -> Self {
        let e1 = MultiIndex::new(vec![1, 0]);
        let e2 = MultiIndex::new(vec![0, 1]);
        let both = MultiIndex::new(vec![1, 1]);
        Self::from_terms_unchecked(
            2,
            [
                (e1.clone(), e1, omega1.into()),
                (e2.clone(), e2, omega2.into()),
                (both.clone(), both, mu12.into()),
            ],
        )
    }

    /// `ω₁ z₁*z₁ + ω₂ z₂*z₂ + g (z₁*z₂ + z₂*z₁)`
    pub fn beam_splitter(omega1: f64, omega2: f64, g: f64) -> Self {
        let e1 = MultiIndex::new(vec![1, 0]);
        let e2 = MultiIndex::new(vec![0, 1]);
        Self::from_terms_unchecked(
            2,
            [
                (e1.clone(), e1.clone(), omega1.into()),
                (e2.clone(), e2.clone(), omega2.into()),
                (e1.clone(), e2.clone(), g.into()),
                (e2, e1, g.into()),
            ],
        )
    }

    fn from_terms_unchecked<const K: usize>(
        modes: usize,
        terms: [(MultiIndex, MultiIndex, Complex64); K],
    ) -> Self {
        let mut map = BTreeMap::new();
        for (l, s, c) in terms {
            *map.entry((l, s)).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        Self::from_map(modes, map)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in deterministic (lexicographic) order.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &MultiIndex, Complex64)> {
        self.terms.iter().map(|((l, s), c)| (l, s, *c))
    }

    pub fn coefficient(&self, l: &MultiIndex, s: &MultiIndex) -> Complex64 {
        self.terms
            .get(&(l.clone(), s.clone()))
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Returns a new symbol with `c` added to the `(ℓ, s)` coefficient.
    pub fn with_term(&self, l: MultiIndex, s: MultiIndex, c: Complex64) -> Result<Self> {
        let existing = self.terms().map(|(a, b, v)| (a.clone(), b.clone(), v));
        Self::new(self.modes, existing.chain(core::iter::once((l, s, c))))
    }

    /// Largest exponent of mode `k` in either argument over all terms.
    pub fn max_degree_in_mode(&self, k: usize) -> u32 {
        self.terms
            .keys()
            .map(|(l, s)| l.entries()[k].max(s.entries()[k]))
            .max()
            .unwrap_or(0)
    }

    /// Largest combined order `|ℓ| + |s|` over all terms.
    pub fn total_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|(l, s)| l.order() + s.order())
            .max()
            .unwrap_or(0)
    }

    fn check_len(&self, op: &'static str, v: &[Complex64]) -> Result<()> {
        if v.len() != self.modes {
            return Err(Error::DimensionMismatch {
                op,
                expected: self.modes,
                found: v.len(),
            });
        }
        Ok(())
    }

    /// `Σ c(ℓ,s) zstar^ℓ z^s`.
    pub fn evaluate(&self, zstar: &[Complex64], z: &[Complex64]) -> Result<Complex64> {
        self.check_len("wick_symbols::evaluate", zstar)?;
        self.check_len("wick_symbols::evaluate", z)?;
        Ok(self.eval(zstar, z))
    }

    /// Unchecked evaluation; callers guarantee argument lengths.
    pub(crate) fn eval(&self, zstar: &[Complex64], z: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|((l, s), c)| c * l.power(zstar) * s.power(z))
            .sum()
    }

    /// Formal partial derivative in `slot` with respect to mode `k` (0-based).
    ///
    /// # Panics
    /// If `k` is not a valid mode index.
    pub fn derivative(&self, slot: Slot, k: usize) -> WickSymbol {
        assert!(k < self.modes, "mode index {k} out of range");
        let mut map = BTreeMap::new();
        for ((l, s), c) in &self.terms {
            let (mut l, mut s) = (l.clone(), s.clone());
            let target = match slot {
                Slot::Star => &mut l.0[k],
                Slot::Plain => &mut s.0[k],
            };
            if *target == 0 {
                continue;
            }
            let factor = f64::from(*target);
            *target -= 1;
            *map.entry((l, s)).or_insert(Complex64::new(0.0, 0.0)) += c * factor;
        }
        Self::from_map(self.modes, map)
    }

    /// `W = −i{ℋ(α*, α+p*) − ℋ(α*+p, α)}` with `α* = conj(α)`, `p* = conj(p)`.
    pub fn effective_hamiltonian(&self, alpha: &[Complex64], p: &[Complex64]) -> Result<Complex64> {
        self.require_hermitian("wick_symbols::effective_hamiltonian")?;
        self.check_len("wick_symbols::effective_hamiltonian", alpha)?;
        self.check_len("wick_symbols::effective_hamiltonian", p)?;
        let (x, y) = ShiftedArgs::new(alpha, p);
        Ok(-I * (self.eval(&x.zstar, &x.z) - self.eval(&y.zstar, &y.z)))
    }

    /// Action integrand
    /// `ℒ = i{p·∂ℋ/∂z*(α*+p, α) − p*·∂ℋ/∂z(α*, α+p*) − ℋ(α*+p, α) + ℋ(α*, α+p*)}`.
    pub fn lagrangian(&self, alpha: &[Complex64], p: &[Complex64]) -> Result<Complex64> {
        self.require_hermitian("wick_symbols::lagrangian")?;
        self.check_len("wick_symbols::lagrangian", alpha)?;
        self.check_len("wick_symbols::lagrangian", p)?;
        Ok(Derivatives::new(self).lagrangian(alpha, p))
    }

    pub(crate) fn require_hermitian(&self, op: &'static str) -> Result<()> {
        if self.hermitian {
            Ok(())
        } else {
            Err(Error::NotHermitian { op })
        }
    }
}

/// The two shifted argument pairs used throughout the characteristic system:
/// `X = (α*, α + p*)` and `Y = (α* + p, α)`.
#[derive(Clone, Debug)]
pub(crate) struct Args {
    pub zstar: Vec<Complex64>,
    pub z: Vec<Complex64>,
}

pub(crate) struct ShiftedArgs;

impl ShiftedArgs {
    #[allow(clippy::new_ret_no_self)]
    pub fn new(alpha: &[Complex64], p: &[Complex64]) -> (Args, Args) {
        let astar: Vec<_> = alpha.iter().map(|a| a.conj()).collect();
        let pstar: Vec<_> = p.iter().map(|v| v.conj()).collect();
        Self::from_tracks(alpha, &astar, p, &pstar)
    }

    pub fn from_tracks(
        alpha: &[Complex64],
        alpha_star: &[Complex64],
        p: &[Complex64],
        p_star: &[Complex64],
    ) -> (Args, Args) {
        let x = Args {
            zstar: alpha_star.to_vec(),
            z: alpha.iter().zip(p_star).map(|(a, b)| a + b).collect(),
        };
        let y = Args {
            zstar: alpha_star.iter().zip(p).map(|(a, b)| a + b).collect(),
            z: alpha.to_vec(),
        };
        (x, y)
    }
}

/// First and second formal derivatives of a symbol, precomputed once so that
/// ODE right-hand sides only evaluate polynomials.
#[derive(Clone, Debug)]
pub struct Derivatives {
    pub symbol: WickSymbol,
    /// `∂ℋ/∂z*_k`
    pub star: Vec<WickSymbol>,
    /// `∂ℋ/∂z_k`
    pub plain: Vec<WickSymbol>,
    /// `∂²ℋ/∂z*_j∂z*_k`
    pub star_star: Vec<Vec<WickSymbol>>,
    /// `∂²ℋ/∂z*_j∂z_k`
    pub star_plain: Vec<Vec<WickSymbol>>,
    /// `∂²ℋ/∂z_j∂z_k`
    pub plain_plain: Vec<Vec<WickSymbol>>,
}

/// Values of the first and second derivatives at one argument pair.
#[derive(Clone, Debug)]
pub(crate) struct LocalJet {
    pub star: Vec<Complex64>,
    pub plain: Vec<Complex64>,
    pub star_star: Vec<Vec<Complex64>>,
    pub star_plain: Vec<Vec<Complex64>>,
    pub plain_plain: Vec<Vec<Complex64>>,
}

impl Derivatives {
    pub fn new(symbol: &WickSymbol) -> Self {
        let n = symbol.modes();
        let star: Vec<_> = (0..n).map(|k| symbol.derivative(Slot::Star, k)).collect();
        let plain: Vec<_> = (0..n).map(|k| symbol.derivative(Slot::Plain, k)).collect();
        let star_star = (0..n)
            .map(|j| (0..n).map(|k| star[j].derivative(Slot::Star, k)).collect())
            .collect();
        let star_plain = (0..n)
            .map(|j| (0..n).map(|k| star[j].derivative(Slot::Plain, k)).collect())
            .collect();
        let plain_plain = (0..n)
            .map(|j| (0..n).map(|k| plain[j].derivative(Slot::Plain, k)).collect())
            .collect();
        Derivatives {
            symbol: symbol.clone(),
            star,
            plain,
            star_star,
            star_plain,
            plain_plain,
        }
    }

    pub fn modes(&self) -> usize {
        self.symbol.modes()
    }

    pub(crate) fn first(&self, a: &Args) -> (Vec<Complex64>, Vec<Complex64>) {
        (
            self.star.iter().map(|d| d.eval(&a.zstar, &a.z)).collect(),
            self.plain.iter().map(|d| d.eval(&a.zstar, &a.z)).collect(),
        )
    }

    pub(crate) fn jet(&self, a: &Args) -> LocalJet {
        let (star, plain) = self.first(a);
        let grid = |m: &Vec<Vec<WickSymbol>>| -> Vec<Vec<Complex64>> {
            m.iter()
                .map(|row| row.iter().map(|d| d.eval(&a.zstar, &a.z)).collect())
                .collect()
        };
        LocalJet {
            star,
            plain,
            star_star: grid(&self.star_star),
            star_plain: grid(&self.star_plain),
            plain_plain: grid(&self.plain_plain),
        }
    }

    pub(crate) fn lagrangian(&self, alpha: &[Complex64], p: &[Complex64]) -> Complex64 {
        let (x, y) = ShiftedArgs::new(alpha, p);
        let (y_star, _) = self.first(&y);
        let (_, x_plain) = self.first(&x);
        let mut acc = self.symbol.eval(&x.zstar, &x.z) - self.symbol.eval(&y.zstar, &y.z);
        for k in 0..self.modes() {
            acc += p[k] * y_star[k] - p[k].conj() * x_plain[k];
        }
        I * acc
    }
}
