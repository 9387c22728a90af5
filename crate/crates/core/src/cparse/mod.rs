//! Lexer and recursive-descent parser for the C subset fragments are written in.
//!
//! Comments, whitespace and preprocessor lines are discarded during lexing, so
//! two sources that differ only in layout produce the same token stream and
//! the same tree.

mod ast;
mod lexer;
mod parser;

pub use ast::*;
pub use lexer::{tokenize, Token, TokenKind, KEYWORDS};
pub use parser::parse;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CParseError {
    #[error("lex error at {line}:{column}: {message}")]
    Lex { line: u32, column: u32, message: String },
    #[error("parse error at {line}:{column}: expected {expected}, found `{found}`")]
    Syntax { line: u32, column: u32, expected: String, found: String },
    #[error("unsupported construct `{construct}` at line {line}")]
    Unsupported { line: u32, construct: String },
}

/// Tokenizes and parses in one step.
pub fn parse_source(source: &str) -> Result<TranslationUnit, CParseError> {
    parse(&tokenize(source)?)
}
