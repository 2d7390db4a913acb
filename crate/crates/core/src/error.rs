use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value for `{0}`")]
    NonFinite(&'static str),

    #[error("amplifier gain overflows for alpha*L = {nepers} Np")]
    GainOverflow { nepers: f64 },

    #[error("time grid too small at z = {z_km} km: {edge_energy:.3e} of the pulse energy sits at the window edge")]
    GridTooSmall { z_km: f64, edge_energy: f64 },

    #[error("z-quadrature did not converge{}: residual {residual:.3e} > tolerance {tolerance:.3e}", fmt_index(.index))]
    Quadrature {
        index: Option<(i32, i32, i32)>,
        residual: f64,
        tolerance: f64,
    },

    #[error("sequence lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("coefficient memory {memory} needs more history than a block of {len} symbols")]
    InsufficientHistory { memory: usize, len: usize },

    #[error("bound bracket is negative ({bracket}); effective coefficient outside the formula's domain")]
    NegativeBracket { bracket: f64 },

    #[error("modulus inconsistency: |g|^2 = {g_abs_sq} < (g_R)^2 = {g_real_sq}")]
    Modulus { g_abs_sq: f64, g_real_sq: f64 },

    #[error("region has no dominant face")]
    NoDominantFace,

    #[error("sample budget too small: {requested} < {minimum}")]
    SampleBudget { requested: usize, minimum: usize },

    #[error("matrix is not symmetric positive semidefinite")]
    NotPsd,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn fmt_index(index: &Option<(i32, i32, i32)>) -> String {
    match index {
        Some((l, m, p)) => format!(" at (l,m,p) = ({l},{m},{p})"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub(crate) fn ensure_finite(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(name))
    }
}
