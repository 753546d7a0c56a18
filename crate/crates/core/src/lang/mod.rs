//! The LoopC language: syntax, types, shape rules and reference semantics.

pub mod ast;
pub mod check;
pub mod interp;
pub mod ops;
pub mod parse;
pub mod pretty;
pub mod shape;
pub mod typed;

pub use ast::{Program, Scalar};
pub use check::{typecheck, TypeError, TypeErrorKind};
pub use interp::{interpret, ExecutionResult, InputMap, InputTrace, InterpError, Outcome};
pub use parse::{parse, parse_properties, PropertyDecl, SyntaxError};
pub use pretty::pretty_print;
pub use shape::{validate_shape, ShapeReport};
pub use typed::TypedProgram;

/// Parses and type-checks in one go.
pub fn load(src: &str) -> Result<TypedProgram, LoadError> {
    let p = parse(src)?;
    Ok(typecheck(&p)?)
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{0}")]
    Syntax(#[from] SyntaxError),
    #[error("{0}")]
    Type(#[from] TypeError),
}
