use std::fmt;

/// Errors raised by the arithmetic layers and the tower construction.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("singular jet: division by a jet with zero constant term")]
    SingularJet,

    #[error("invalid jet: {op} produced a non-finite coefficient")]
    InvalidJet { op: &'static str },

    #[error("jet order {0} exceeds the supported maximum")]
    OrderTooLarge(usize),

    #[error("jet orders differ ({0} vs {1})")]
    OrderMismatch(usize, usize),

    #[error("{op}: argument {x} is outside the domain")]
    Domain { op: &'static str, x: f64 },

    #[error("value at {x} overflows plain doubles; use the guarded variant")]
    Overflow { x: f64 },

    #[error("value is not representable even in level-index form")]
    Unrepresentable,

    #[error("composition step {index} failed: {source}")]
    Step { index: usize, source: Box<Error> },

    #[error("tail norm never drops below {eps} within {cap} indices")]
    NoThreshold { eps: f64, cap: usize },

    #[error("contour sample at {re}{im:+}i is not finite")]
    Contour { re: f64, im: f64 },

    #[error("t = {t} is outside the domain of level {k} (edge {alpha})")]
    OutsideDomain { k: usize, t: f64, alpha: f64 },

    #[error("x = {x} is outside the range of level {k} (edge {alpha})")]
    OutsideRange { k: usize, x: f64, alpha: f64 },

    #[error("t = {t} is below the convergence window starting at {window}")]
    BelowWindow { t: f64, window: f64 },

    #[error("normalization failed: {0}")]
    Normalization(String),

    #[error("construction of level {k} failed: {reason}")]
    Construction { k: usize, reason: String },

    #[error("root finding failed: {0}")]
    Root(String),

    #[error("level {0} has not been built")]
    MissingLevel(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn at_step(self, index: usize) -> Self {
        Error::Step {
            index,
            source: Box::new(self),
        }
    }

    /// True for the overflow family: the value exists but is too large for
    /// the requested representation.
    pub fn is_overflow(&self) -> bool {
        match self {
            Error::Overflow { .. } | Error::Unrepresentable => true,
            Error::Step { source, .. } => source.is_overflow(),
            _ => false,
        }
    }

    /// True when the argument lies outside a function's domain or range.
    pub fn is_domain(&self) -> bool {
        match self {
            Error::Domain { .. } | Error::OutsideDomain { .. } | Error::OutsideRange { .. } => true,
            Error::Step { source, .. } => source.is_domain(),
            _ => false,
        }
    }
}

pub(crate) struct Display<'a>(pub &'a [f64]);

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}
