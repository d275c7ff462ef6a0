use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{Point, SymbolicError};
use crate::graph::LineId;

/// A linear denominator `i·(Σ c_v N_v) + Σ s_l q_l` with integer `c_v` over
/// the free (non-root) vertices and `s_l ∈ {-1, +1}`.
///
/// Zero coefficients are never stored, so structural equality is equality of
/// the forms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinearForm {
    n: BTreeMap<usize, i64>,
    q: BTreeMap<LineId, i8>,
}

impl LinearForm {
    pub fn new(
        n: impl IntoIterator<Item = (usize, i64)>,
        q: impl IntoIterator<Item = (LineId, i64)>,
    ) -> Result<Self, SymbolicError> {
        let mut form = LinearForm {
            n: BTreeMap::new(),
            q: BTreeMap::new(),
        };
        for (v, c) in n {
            *form.n.entry(v).or_insert(0) += c;
        }
        let mut qs: BTreeMap<LineId, i64> = BTreeMap::new();
        for (l, c) in q {
            *qs.entry(l).or_insert(0) += c;
        }
        form.n.retain(|_, c| *c != 0);
        for (l, c) in qs {
            match c {
                0 => {}
                1 | -1 => {
                    form.q.insert(l, c as i8);
                }
                _ => return Err(SymbolicError::QCoefficient(l, c)),
            }
        }
        if form.n.is_empty() && form.q.is_empty() {
            return Err(SymbolicError::ZeroForm);
        }
        Ok(form)
    }

    pub fn n_coeffs(&self) -> &BTreeMap<usize, i64> {
        &self.n
    }

    pub fn q_coeffs(&self) -> &BTreeMap<LineId, i8> {
        &self.q
    }

    pub fn q_coeff(&self, line: LineId) -> i8 {
        self.q.get(&line).copied().unwrap_or(0)
    }

    fn leading_sign(&self) -> i64 {
        match self.n.values().next() {
            Some(c) => c.signum(),
            None => *self.q.values().next().expect("form is nonzero") as i64,
        }
    }

    /// Makes the first nonzero coefficient (`N`s first, then `q`s) positive.
    /// Returns the sign that was divided out.
    pub fn normalized(self) -> (i64, LinearForm) {
        if self.leading_sign() > 0 {
            (1, self)
        } else {
            (-1, self.negated())
        }
    }

    pub fn negated(mut self) -> LinearForm {
        self.n.values_mut().for_each(|c| *c = -*c);
        self.q.values_mut().for_each(|c| *c = -*c);
        self
    }

    /// `q_line -> -q_line`.
    pub fn reflected(&self, line: LineId) -> LinearForm {
        let mut out = self.clone();
        if let Some(c) = out.q.get_mut(&line) {
            *c = -*c;
        }
        out
    }

    pub fn eval(&self, point: &Point) -> Result<Complex64, SymbolicError> {
        let mut im = 0.0;
        for (&v, &c) in &self.n {
            let nv = *point.n.get(v).ok_or(SymbolicError::MissingVertexValue(v))?;
            im += (c * nv) as f64;
        }
        let mut re = 0.0;
        for (&l, &c) in &self.q {
            re += c as f64 * point.q_value(l)?;
        }
        Ok(Complex64::new(re, im))
    }
}
