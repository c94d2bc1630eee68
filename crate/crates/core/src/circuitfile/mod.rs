//! Line-oriented text format for circuits.
//!
//! ```text
//! format weaktrace-circuit/1
//! ports IN U L
//! outcomes DU DL
//! mirror M epsilon=0.001 mode=exact
//! source IN H
//! stage
//!   hwp IN
//! stage
//!   timepoint split
//!   split IN -> U L
//! stage
//!   reflect L M
//! stage
//!   detect U -> DU
//!   detect L -> DL
//! ```
//!
//! One statement per line, `#` starts a comment. Every diagnostic carries a
//! 1-based line and column. [`serialize`] emits a canonical form that
//! [`parse`] reads back to an equal circuit.

mod parser;
mod writer;

use std::fmt;

use crate::engine::Circuit;
use crate::hilbert::Pol;

pub use parser::{parse, parse_bytes, parse_document};
pub use writer::{serialize, serialize_document};

/// Format identifier expected on the first statement line.
pub const FORMAT_VERSION: &str = "weaktrace-circuit/1";

/// Conventional file extension.
pub const EXTENSION: &str = "wtc";

/// A parsed file: the circuit plus the optional declared input.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitDocument {
    pub circuit: Circuit,
    /// Port and polarization the photon enters with, if declared.
    pub source: Option<(String, Pol)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

/// Every problem found in a file; a file with diagnostics yields no circuit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub diagnostics: Vec<Diagnostic>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.diagnostics.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}
