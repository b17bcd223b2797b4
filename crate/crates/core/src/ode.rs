//! Adaptive Dormand–Prince 5(4) integration of complex ODE systems.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Autonomous right-hand side `dy/dt = f(y)`.
pub trait System {
    fn dim(&self) -> usize;
    fn rhs(&self, y: &[Complex64], dy: &mut [Complex64]);
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    /// Absolute and relative tolerance on the local error of each component.
    pub tol: f64,
    pub max_steps: usize,
}

impl OdeOptions {
    pub fn new(tol: f64) -> Self {
        OdeOptions {
            tol,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub steps: usize,
    pub rejections: usize,
    pub rhs_evals: usize,
}

/// What the solver is reporting to the observer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Event {
    /// The state at `times[index]`.
    Output(usize),
    /// An accepted internal step.
    Step,
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// Difference between the 5th- and 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `sys` from `y0` at time `t0` and reports the state at each of
/// `times` (non-decreasing, all `≥ t0`). Steps are clipped so every requested
/// time is hit exactly.
pub fn solve<S, F>(
    sys: &S,
    t0: f64,
    y0: &[Complex64],
    times: &[f64],
    opts: OdeOptions,
    mut observe: F,
) -> Result<OdeStats>
where
    S: System,
    F: FnMut(Event, f64, &[Complex64]),
{
    let n = sys.dim();
    debug_assert_eq!(y0.len(), n);
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument {
            op: "characteristics::integrate",
            reason: "tolerance must be positive",
        });
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < t0) {
        return Err(Error::InvalidArgument {
            op: "characteristics::integrate",
            reason: "output times must be non-decreasing and not before the start",
        });
    }

    let mut stats = OdeStats::default();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut k: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0); n]; 7];
    let mut stage = vec![Complex64::new(0.0, 0.0); n];
    let mut y_new = vec![Complex64::new(0.0, 0.0); n];

    sys.rhs(&y, &mut k[0]);
    stats.rhs_evals += 1;
    if !all_finite(&k[0]) || !all_finite(&y) {
        return Err(Error::NonFinite { time: t });
    }

    let mut next = 0;
    while next < times.len() && times[next] == t {
        observe(Event::Output(next), t, &y);
        next += 1;
    }
    if next == times.len() {
        return Ok(stats);
    }

    let mut h = initial_step(sys, &y, &k[0], opts.tol, times[times.len() - 1] - t0);
    stats.rhs_evals += 1;
    let mut last_nonfinite = false;

    while next < times.len() {
        if stats.steps + stats.rejections >= opts.max_steps {
            return Err(Error::StepSizeCollapse { time: t, step: h });
        }
        let target = times[next];
        let clipped = t + h >= target;
        let h_try = if clipped { target - t } else { h };
        if h_try <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(if last_nonfinite {
                Error::NonFinite { time: t }
            } else {
                Error::StepSizeCollapse { time: t, step: h_try }
            });
        }

        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        acc += kj[i] * (h_try * a);
                    }
                }
                stage[i] = acc;
            }
            sys.rhs(&stage, &mut k[s]);
            if s == 6 {
                y_new.copy_from_slice(&stage);
            }
        }
        stats.rhs_evals += 6;

        let mut err_norm: f64 = 0.0;
        for i in 0..n {
            let mut e = Complex64::new(0.0, 0.0);
            for (j, kj) in k.iter().enumerate() {
                if E[j] != 0.0 {
                    e += kj[i] * E[j];
                }
            }
            let scale = opts.tol * (1.0 + y[i].norm().max(y_new[i].norm()));
            err_norm = err_norm.max((e * h_try).norm() / scale);
        }

        let finite = err_norm.is_finite() && all_finite(&y_new) && all_finite(&k[6]);
        if !finite {
            last_nonfinite = true;
            stats.rejections += 1;
            h = h_try * 0.2;
            continue;
        }
        last_nonfinite = false;

        if err_norm <= 1.0 {
            stats.steps += 1;
            t = if clipped { target } else { t + h_try };
            core::mem::swap(&mut y, &mut y_new);
            let (first, rest) = k.split_at_mut(1);
            first[0].copy_from_slice(&rest[5]);
            observe(Event::Step, t, &y);
            while next < times.len() && times[next] == t {
                observe(Event::Output(next), t, &y);
                next += 1;
            }
            let fac = if err_norm == 0.0 {
                5.0
            } else {
                (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
            };
            // A clipped step says nothing about the natural step length.
            h = if clipped { h.max(h_try * fac) } else { h_try * fac };
        } else {
            stats.rejections += 1;
            h = h_try * (0.9 * err_norm.powf(-0.2)).clamp(0.2, 1.0);
        }
    }
    Ok(stats)
}

fn all_finite(v: &[Complex64]) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn initial_step<S: System>(sys: &S, y: &[Complex64], f0: &[Complex64], tol: f64, span: f64) -> f64 {
    let n = y.len().max(1) as f64;
    let scale = |i: usize| tol * (1.0 + y[i].norm());
    let rms = |v: &dyn Fn(usize) -> f64| -> f64 {
        ((0..y.len()).map(|i| v(i) * v(i)).sum::<f64>() / n).sqrt()
    };
    let d0 = rms(&|i| y[i].norm() / scale(i));
    let d1 = rms(&|i| f0[i].norm() / scale(i));
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<Complex64> = y.iter().zip(f0).map(|(a, b)| a + b * h0).collect();
    let mut f1 = vec![Complex64::new(0.0, 0.0); y.len()];
    sys.rhs(&y1, &mut f1);
    let d2 = rms(&|i| (f1[i] - f0[i]).norm() / scale(i)) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    let h = (100.0 * h0).min(h1);
    if span > 0.0 {
        h.min(span)
    } else {
        h
    }
}
