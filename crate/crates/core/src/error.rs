use crate::expr::{BoxError, EvalError, ParseError, ShapeError};

/// Failures of the numerical layers.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("point has {found} coordinates, expected {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("M is numerically singular near a blow-up (|det M| = {det:e}, scale {scale:e})")]
    SingularNearBlowup { det: f64, scale: f64 },
    #[error("Newton iterate left the domain at {point:?}")]
    LeftDomain { point: Vec<f64> },
    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("no real branch of the requested kind anywhere in the search box")]
    NoBranch,
    #[error("M is not singular (smallest/largest singular value = {ratio:e})")]
    NotSingular { ratio: f64 },
    #[error("det(I + U0 t) vanishes at this point")]
    BlowupTime,
    #[error("no sign change of det(I + U0 t) on the lattice")]
    EmptyRegion,
    #[error("denominator conj(F_V) + t vanishes")]
    DegenerateDenominator,
    #[error("{0}")]
    Unsupported(String),
}

/// Failures while building a problem from text.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SetupError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Box(#[from] BoxError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("{0}")]
    Invalid(String),
    #[error("line {line}, column {column}: {message}")]
    At { line: usize, column: usize, message: String },
}

impl SetupError {
    /// Attach the line and column of byte `offset` in `src`.
    pub fn at(src: &str, offset: usize, message: impl Into<String>) -> SetupError {
        let (line, column) = line_col(src, offset);
        SetupError::At {
            line,
            column,
            message: message.into(),
        }
    }
}

/// One-based line and column of a byte offset.
pub fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let head = &src[..offset.min(src.len())];
    let line = head.matches('\n').count() + 1;
    let column = head.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, p: &[f64]) -> Result<()> {
    if p.len() != expected {
        return Err(Error::Dimension {
            expected,
            found: p.len(),
        });
    }
    Ok(())
}
