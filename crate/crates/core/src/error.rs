use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input is empty")]
    EmptyInput,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid {name}: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("masses sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },

    #[error("infinite relative entropy: kl({p}, {q})")]
    InfiniteDivergence { p: f64, q: f64 },

    #[error("target {target} is not bracketed by [{f_lo}, {f_hi}]")]
    NotBracketed { target: f64, f_lo: f64, f_hi: f64 },

    #[error("invalid bracket [{lo}, {hi}]")]
    InvalidBracket { lo: f64, hi: f64 },

    #[error(
        "guarantee {guarantee} is unreachable with Catoni's bound: needs at least {threshold}"
    )]
    Unreachable { guarantee: f64, threshold: f64 },

    #[error("csv row {row}, field `{field}`: {reason}")]
    Csv {
        row: usize,
        field: String,
        reason: String,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn csv(row: usize, field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Csv {
            row,
            field: field.into(),
            reason: reason.into(),
        }
    }
}
