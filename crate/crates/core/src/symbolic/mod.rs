//! Exact symbolic expressions in the `q` and `N` symbols.
//!
//! An [`Expression`] is a canonical sum of terms
//!
//! ```text
//! coeff · (2π)^k · Π q_l^{e_l} · Π nbe(q_m) / Π (i·Σ c_v N_v + Σ s_l q_l)
//! ```
//!
//! with exact rational coefficients. Two expressions are equal as values of
//! this free sum exactly when they compare equal with `==`.

mod expr;
mod linear_form;
mod reduce;
mod render;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::graph::LineId;

pub use expr::{rational, Expression, Term, TermKey};
pub use linear_form::LinearForm;
pub use render::{Format, Symbols};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymbolicError {
    #[error("linear form is identically zero")]
    ZeroForm,
    #[error("coefficient {1} of q{0} is outside {{-1, 0, +1}}")]
    QCoefficient(LineId, i64),
    #[error("cannot reflect q{0}: a term carries its kernel")]
    KernelReflection(LineId),
    #[error("a term already carries the kernel of q{0}")]
    DuplicateKernel(LineId),
    #[error("a denominator vanishes at the evaluation point")]
    ZeroDenominator,
    #[error("no value for q{0}")]
    MissingLineValue(LineId),
    #[error("no value for the N symbol of vertex #{0}")]
    MissingVertexValue(usize),
    #[error("q{0} must be positive")]
    NonPositiveQ(LineId),
    #[error("malformed expression: {0}")]
    Parse(String),
}

/// Numeric values for every symbol: `q` per line, `N` per free vertex (the
/// root value is implied by `Σ N_v = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub q: BTreeMap<LineId, f64>,
    pub n: Vec<i64>,
}

impl Point {
    pub fn new(q: impl IntoIterator<Item = (LineId, f64)>, n: Vec<i64>) -> Self {
        Point {
            q: q.into_iter().collect(),
            n,
        }
    }

    pub fn q_value(&self, line: LineId) -> Result<f64, SymbolicError> {
        self.q.get(&line).copied().ok_or(SymbolicError::MissingLineValue(line))
    }
}
