//! Small dense linear-algebra helpers on top of nalgebra.

#[allow(unused_imports)]
use num_traits::Float;
use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Vertical concatenation of two blocks with equal column counts.
pub fn vstack(top: &CMatrix, bottom: &CMatrix) -> CMatrix {
    debug_assert_eq!(top.ncols(), bottom.ncols());
    let (rt, rb, c) = (top.nrows(), bottom.nrows(), top.ncols());
    CMatrix::from_fn(rt + rb, c, |i, j| {
        if i < rt {
            top[(i, j)]
        } else {
            bottom[(i - rt, j)]
        }
    })
}

/// `conj(m)` with its left and right column halves exchanged.
///
/// For a block of derivatives with respect to `(α(0), α*(0))` this yields the
/// derivatives of the conjugate quantity.
pub fn conj_swap(m: &CMatrix) -> CMatrix {
    let half = m.ncols() / 2;
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        let src = if j < half { j + half } else { j - half };
        m[(i, src)].conj()
    })
}

/// Singular values in decreasing order.
pub fn singular_values(m: &CMatrix) -> nalgebra::DVector<f64> {
    m.clone().svd(false, false).singular_values
}

/// Smallest singular value.
pub fn min_singular_value(m: &CMatrix) -> f64 {
    singular_values(m).iter().copied().fold(f64::INFINITY, f64::min)
}

/// 2-norm condition number `σ_max/σ_min` (infinite for singular input).
pub fn condition_number(m: &CMatrix) -> f64 {
    let sv = singular_values(m);
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solves `X · a = b` for `X`.
pub fn right_divide(b: &CMatrix, a: &CMatrix) -> Option<CMatrix> {
    a.transpose()
        .lu()
        .solve(&b.transpose())
        .map(|xt| xt.transpose())
}
