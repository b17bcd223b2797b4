use core::fmt;

/// Errors raised by the numeric pipeline.
///
/// Every message is prefixed with the `module::operation` that produced it so
/// that callers can report the failing stage without extra bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        found: usize,
    },
    DegreeTooHigh {
        degree: u32,
        max: u32,
    },
    NotHermitian {
        op: &'static str,
    },
    InvalidArgument {
        op: &'static str,
        reason: &'static str,
    },
    StepSizeCollapse {
        time: f64,
        step: f64,
    },
    NonFinite {
        time: f64,
    },
    NewtonDiverged {
        iterations: usize,
        residual: f64,
    },
    SingularJacobian {
        indicator: f64,
    },
    IllConditioned {
        condition: f64,
    },
    TailTooLarge {
        mode: usize,
        tail: f64,
        required_cutoff: usize,
    },
    DimensionTooLarge {
        dim: usize,
        max: usize,
    },
    EigenFailure,
    QuadratureRegion {
        difference: f64,
        tolerance: f64,
    },
    StencilOrder {
        order: usize,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { op, expected, found } => {
                write!(f, "{op}: dimension mismatch (expected {expected}, found {found})")
            }
            Error::DegreeTooHigh { degree, max } => write!(
                f,
                "wick_symbols::new: multi-index order {degree} exceeds the cap of {max}"
            ),
            Error::NotHermitian { op } => write!(f, "{op}: symbol is not hermitian"),
            Error::InvalidArgument { op, reason } => write!(f, "{op}: {reason}"),
            Error::StepSizeCollapse { time, step } => write!(
                f,
                "characteristics::integrate: step size collapsed to {step:e} at t = {time}"
            ),
            Error::NonFinite { time } => {
                write!(f, "characteristics::integrate: non-finite state at t = {time}")
            }
            Error::NewtonDiverged { iterations, residual } => write!(
                f,
                "hj_phase::invert_flow_map: no convergence after {iterations} iterations \
                 (residual {residual:e}); target outside the validity neighborhood"
            ),
            Error::SingularJacobian { indicator } => write!(
                f,
                "hj_phase::invert_flow_map: singular flow-map Jacobian (caustic indicator {indicator:e})"
            ),
            Error::IllConditioned { condition } => write!(
                f,
                "hj_phase::phase_at: Hessian solve ill-conditioned (condition number {condition:e})"
            ),
            Error::TailTooLarge { mode, tail, required_cutoff } => write!(
                f,
                "fock_oracle::coherent_vector: truncation tail {tail:e} on mode {mode}; \
                 cutoff of at least {required_cutoff} required"
            ),
            Error::DimensionTooLarge { dim, max } => write!(
                f,
                "fock_oracle: total dimension {dim} exceeds the limit {max}"
            ),
            Error::EigenFailure => write!(f, "fock_oracle::evolve: eigendecomposition failed"),
            Error::QuadratureRegion { difference, tolerance } => write!(
                f,
                "transport::resolve_polynomial_initial: quadrature region too small \
                 (region-size change {difference:e} > {tolerance:e})"
            ),
            Error::StencilOrder { order } => write!(
                f,
                "verification::pde_residual: derivative order {order} exceeds stencil support"
            ),
        }
    }
}
