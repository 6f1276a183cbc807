use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "Bessel function domain error: order {order}, argument {x} (both must be finite and >= 0)"
    )]
    BesselDomain { order: f64, x: f64 },

    /// `J'_ν(0)` is infinite for `0 < ν < 1`.
    #[error("J'_{order}(0) diverges for 0 < order < 1 (one-sided limit is +inf)")]
    SingularDerivative { order: f64 },

    #[error("Bessel evaluation did not converge for order {order}, argument {x}")]
    BesselNoConvergence { order: f64, x: f64 },

    #[error(
        "could only bracket {found} of {wanted} Robin roots for order zeta = {order} \
         below lambda*rho_c = {bound}"
    )]
    RootBracket {
        order: f64,
        wanted: usize,
        found: usize,
        bound: f64,
    },

    #[error("Robin roots for order zeta = {order} failed the post-check: {reason}")]
    RootCheck { order: f64, reason: String },

    #[error(
        "mode norm mismatch for zeta = {order}, lambda*rho_c = {x}: \
         quadrature {quadrature:e} vs closed form {closed_form:e}"
    )]
    NormMismatch {
        order: f64,
        x: f64,
        quadrature: f64,
        closed_form: f64,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("receiver at rho = {rho:e} m with radius {radius:e} m crosses the boundary rho_c = {rho_c:e} m")]
    ReceiverOutsideDomain { rho: f64, radius: f64, rho_c: f64 },

    #[error("series truncation not converged by n_max = {n_max}, m_max = {m_max} (last change {last_change:e})")]
    TruncationNotConverged {
        n_max: usize,
        m_max: usize,
        last_change: f64,
    },

    #[error("cannot compare an empty series")]
    EmptySeries,

    #[error("series do not overlap in time")]
    NoOverlap,

    #[error("config line {line}: `{key}`: {reason}")]
    Config {
        line: usize,
        key: String,
        reason: String,
    },

    #[error("{0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
