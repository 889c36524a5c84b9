//! Expression language: parsing, evaluation, and exact first/second
//! derivatives through nested forward-mode dual numbers.

mod ast;
mod domain;
mod number;
mod parser;
mod vector;

pub use ast::{DomainKind, EvalError, Expression, Func, Node};
pub use domain::{BoxDomain, BoxError, DEFAULT_MARGIN};
pub use number::{Dual, Number};
pub use parser::{parse, parse_with_constants, ParseError, ParseErrorKind};
pub use vector::{ShapeError, VectorFunction};
