//! Abstract syntax, concrete-syntax parser, pretty-printer, desugaring of
//! derived forms, substitution and tape erasure for the object language.

mod ast;
mod erase;
mod parser;
mod pretty;
mod surface;

pub use ast::{BinOp, Expr, Lbl, Loc, Symbol, Value};
pub use erase::{erase, mentions_tapes};
pub use parser::{parse, ParseError};
pub use pretty::pretty;
pub use surface::{desugar, desugar_sexpr, is_core, DesugarError, SExpr, SurfaceProgram};

/// Parses and desugars in one go; the common entry point for program files.
pub fn parse_program(text: &str) -> Result<Expr, ProgramError> {
    let surface = parse(text)?;
    Ok(desugar(&surface)?)
}

#[derive(Debug, thiserror::Error)]
pub enum ProgramError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Desugar(#[from] DesugarError),
}
