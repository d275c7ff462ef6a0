use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::{LinearForm, Point, SymbolicError};
use crate::graph::LineId;
use crate::kernel::nbe;

/// Everything about a term except its coefficient. Terms with equal keys merge.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TermKey {
    pub two_pi_pow: u32,
    pub q_exp: BTreeMap<LineId, i32>,
    pub kernels: BTreeSet<LineId>,
    /// Sorted multiset of normalized denominators.
    pub denoms: Vec<LinearForm>,
}

/// One term `coeff · (2π)^two_pi_pow · Π q^q_exp · Π nbe(kernels) / Π denoms`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub coeff: BigRational,
    pub two_pi_pow: u32,
    pub q_exp: BTreeMap<LineId, i32>,
    pub kernels: BTreeSet<LineId>,
    pub denoms: Vec<LinearForm>,
}

impl Term {
    /// A bare `coeff / Π denoms`.
    pub fn fraction(coeff: BigRational, denoms: Vec<LinearForm>) -> Self {
        Term {
            coeff,
            two_pi_pow: 0,
            q_exp: BTreeMap::new(),
            kernels: BTreeSet::new(),
            denoms,
        }
    }

    fn canonical(self) -> (TermKey, BigRational) {
        let mut coeff = self.coeff;
        let mut denoms: Vec<LinearForm> = self
            .denoms
            .into_iter()
            .map(|d| {
                let (sign, d) = d.normalized();
                if sign < 0 {
                    coeff = -coeff.clone();
                }
                d
            })
            .collect();
        denoms.sort();
        let mut q_exp = self.q_exp;
        q_exp.retain(|_, e| *e != 0);
        (
            TermKey {
                two_pi_pow: self.two_pi_pow,
                q_exp,
                kernels: self.kernels,
                denoms,
            },
            coeff,
        )
    }
}

/// Canonical sum of terms.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Expression {
    terms: BTreeMap<TermKey, BigRational>,
}

impl Expression {
    pub fn zero() -> Self {
        Expression::default()
    }

    pub fn from_terms(terms: impl IntoIterator<Item = Term>) -> Self {
        let mut e = Expression::zero();
        for t in terms {
            let (key, c) = t.canonical();
            e.accumulate(key, c);
        }
        e
    }

    fn accumulate(&mut self, key: TermKey, coeff: BigRational) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(key) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// Adds a term whose key is already canonical.
    pub(crate) fn insert_canonical(&mut self, key: TermKey, coeff: BigRational) {
        self.accumulate(key, coeff);
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TermKey, &BigRational)> {
        self.terms.iter()
    }

    pub fn terms(&self) -> Vec<Term> {
        self.terms
            .iter()
            .map(|(k, c)| Term {
                coeff: c.clone(),
                two_pi_pow: k.two_pi_pow,
                q_exp: k.q_exp.clone(),
                kernels: k.kernels.clone(),
                denoms: k.denoms.clone(),
            })
            .collect()
    }

    pub fn add(&self, other: &Expression) -> Expression {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn add_assign(&mut self, other: &Expression) {
        for (k, c) in &other.terms {
            self.accumulate(k.clone(), c.clone());
        }
    }

    pub fn sub(&self, other: &Expression) -> Expression {
        self.add(&other.scale(&-BigRational::one()))
    }

    pub fn scale(&self, factor: &BigRational) -> Expression {
        if factor.is_zero() {
            return Expression::zero();
        }
        Expression {
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (k.clone(), c * factor))
                .collect(),
        }
    }

    /// Multiplies every term by `factor · (2π)^two_pi_pow · Π q^q_exp`.
    pub fn multiply_monomial(
        &self,
        factor: &BigRational,
        two_pi_pow: u32,
        q_exp: &BTreeMap<LineId, i32>,
    ) -> Expression {
        let mut out = Expression::zero();
        for (k, c) in &self.terms {
            let mut key = k.clone();
            key.two_pi_pow += two_pi_pow;
            for (&l, &e) in q_exp {
                *key.q_exp.entry(l).or_insert(0) += e;
            }
            key.q_exp.retain(|_, e| *e != 0);
            out.accumulate(key, c * factor);
        }
        out
    }

    /// Substitutes `q_line -> -q_line` everywhere.
    ///
    /// Fails if any term carries the kernel of `line`: the kernel would have to
    /// be rewritten through `nbe(-q) = -1 - nbe(q)`, which this algebra never does.
    pub fn reflect(&self, line: LineId) -> Result<Expression, SymbolicError> {
        let mut out = Expression::zero();
        for (k, c) in &self.terms {
            if k.kernels.contains(&line) {
                return Err(SymbolicError::KernelReflection(line));
            }
            let mut coeff = c.clone();
            if k.q_exp.get(&line).copied().unwrap_or(0) % 2 != 0 {
                coeff = -coeff;
            }
            let denoms = k.denoms.iter().map(|d| d.reflected(line)).collect();
            let term = Term {
                coeff,
                two_pi_pow: k.two_pi_pow,
                q_exp: k.q_exp.clone(),
                kernels: k.kernels.clone(),
                denoms,
            };
            let (key, coeff) = term.canonical();
            out.accumulate(key, coeff);
        }
        Ok(out)
    }

    /// `(1 - R_line)` applied to the expression.
    pub fn reflection_difference(&self, line: LineId) -> Result<Expression, SymbolicError> {
        Ok(self.sub(&self.reflect(line)?))
    }

    /// Multiplies every term by `nbe(q_line)`.
    pub fn kernel_multiply(&self, line: LineId) -> Result<Expression, SymbolicError> {
        let mut out = Expression::zero();
        for (k, c) in &self.terms {
            let mut key = k.clone();
            if !key.kernels.insert(line) {
                return Err(SymbolicError::DuplicateKernel(line));
            }
            out.accumulate(key, c.clone());
        }
        Ok(out)
    }

    /// Numeric value at a point. Kernels are evaluated with [`nbe`].
    pub fn eval(&self, point: &Point) -> Result<Complex64, SymbolicError> {
        let mut sum = Complex64::zero();
        let mut compensation = Complex64::zero();
        for (k, c) in &self.terms {
            let mut v = Complex64::new(rational_to_f64(c), 0.0);
            v *= (2.0 * PI).powi(k.two_pi_pow as i32);
            for (&l, &e) in &k.q_exp {
                v *= point.q_value(l)?.powi(e);
            }
            for &l in &k.kernels {
                let q = point.q_value(l)?;
                v *= nbe(q).map_err(|_| SymbolicError::NonPositiveQ(l))?;
            }
            for d in &k.denoms {
                let z = d.eval(point)?;
                if z.norm() == 0.0 {
                    return Err(SymbolicError::ZeroDenominator);
                }
                v /= z;
            }
            // Neumaier summation, separately on each component.
            neumaier(&mut sum.re, &mut compensation.re, v.re);
            neumaier(&mut sum.im, &mut compensation.im, v.im);
        }
        Ok(sum + compensation)
    }

    /// Smallest `|denominator|` over all terms at the point, or `None` for an
    /// expression without denominators.
    pub fn min_denominator_modulus(&self, point: &Point) -> Result<Option<f64>, SymbolicError> {
        let mut min: Option<f64> = None;
        for k in self.terms.keys() {
            for d in &k.denoms {
                let m = d.eval(point)?.norm();
                min = Some(min.map_or(m, |x| x.min(m)));
            }
        }
        Ok(min)
    }

    /// Largest kernel count over all terms.
    pub fn max_kernel_degree(&self) -> usize {
        self.terms.keys().map(|k| k.kernels.len()).max().unwrap_or(0)
    }
}

fn neumaier(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

pub(crate) fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// `n/d` as an exact coefficient.
pub fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl std::ops::Neg for &Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        self.scale(&-BigRational::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn l(i: u32) -> LineId {
        LineId(i)
    }

    fn form(n: &[(usize, i64)], q: &[(u32, i64)]) -> LinearForm {
        LinearForm::new(n.iter().copied(), q.iter().map(|&(i, c)| (LineId(i), c))).unwrap()
    }

    /// `(2π/(2q1 2q2)) · 1/(iN - q1 - q2)`.
    fn g2_piece() -> Expression {
        Expression::from_terms([Term {
            coeff: rational(1, 4),
            two_pi_pow: 1,
            q_exp: BTreeMap::from([(l(1), -1), (l(2), -1)]),
            kernels: BTreeSet::new(),
            denoms: vec![form(&[(0, 1)], &[(1, -1), (2, -1)])],
        }])
    }

    #[test]
    fn reflection_of_worked_example() {
        let reflected = g2_piece().reflect(l(1)).unwrap();
        let expected = Expression::from_terms([Term {
            coeff: rational(-1, 4),
            two_pi_pow: 1,
            q_exp: BTreeMap::from([(l(1), -1), (l(2), -1)]),
            kernels: BTreeSet::new(),
            denoms: vec![form(&[(0, 1)], &[(1, 1), (2, -1)])],
        }]);
        assert_eq!(reflected, expected);
    }

    #[test]
    fn reflection_of_independent_symbol_is_identity() {
        assert_eq!(g2_piece().reflect(l(7)).unwrap(), g2_piece());
    }

    #[test]
    fn reflection_is_an_involution() {
        let e = g2_piece();
        assert_eq!(e.reflect(l(2)).unwrap().reflect(l(2)).unwrap(), e);
    }

    #[test]
    fn reflecting_a_kernel_is_an_error() {
        let e = g2_piece().kernel_multiply(l(1)).unwrap();
        assert_eq!(e.reflect(l(1)), Err(SymbolicError::KernelReflection(l(1))));
    }

    #[test]
    fn kernel_multiplication() {
        let e = Expression::from_terms([Term::fraction(rational(1, 1), vec![form(&[], &[(1, 1)])])]);
        let k1 = e.kernel_multiply(l(1)).unwrap();
        assert_eq!(k1.terms()[0].kernels, BTreeSet::from([l(1)]));
        let a = k1.kernel_multiply(l(2)).unwrap();
        let b = e.kernel_multiply(l(2)).unwrap().kernel_multiply(l(1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(k1.kernel_multiply(l(1)), Err(SymbolicError::DuplicateKernel(l(1))));
    }

    #[test]
    fn add_and_scale() {
        let e = g2_piece();
        assert!(e.add(&e.scale(&rational(-1, 1))).is_zero());
        assert_eq!(Expression::zero().add(&e), e);
        assert!(e.scale(&rational(0, 1)).is_zero());
        let doubled = e.add(&e);
        assert_eq!(doubled.len(), 1);
        assert_eq!(doubled.terms()[0].coeff, rational(1, 2));
    }

    #[test]
    fn sign_normalization_merges_equivalent_terms() {
        let a = Term::fraction(rational(1, 1), vec![form(&[(0, 1)], &[(1, -1)])]);
        let b = Term::fraction(rational(-1, 1), vec![form(&[(0, -1)], &[(1, 1)])]);
        let e = Expression::from_terms([a, b]);
        assert_eq!(e.len(), 1);
        assert_eq!(e.terms()[0].coeff, rational(2, 1));
    }

    #[test]
    fn odd_prefactor_identity_annihilates() {
        // (1 - R)[ q^{-1} (1 - R) h ] = 0 for h without q-dependence in its prefactor.
        let h = Expression::from_terms([
            Term::fraction(rational(3, 1), vec![form(&[(0, 1)], &[(1, 1), (2, -1)])]),
            Term::fraction(rational(-2, 5), vec![form(&[(0, 2)], &[(1, -1)]), form(&[], &[(2, 1)])]),
        ]);
        let inner = h
            .reflection_difference(l(1))
            .unwrap()
            .multiply_monomial(&rational(1, 1), 0, &BTreeMap::from([(l(1), -1)]));
        assert!(!inner.is_zero());
        assert!(inner.reflection_difference(l(1)).unwrap().is_zero());
    }

    #[test]
    fn eval_of_empty_is_zero() {
        let p = Point::new([(l(1), 1.0)], vec![]);
        assert_eq!(Expression::zero().eval(&p).unwrap(), Complex64::zero());
    }

    #[test]
    fn eval_reports_zero_denominator() {
        let e = Expression::from_terms([Term::fraction(rational(1, 1), vec![form(&[], &[(1, 1), (2, -1)])])]);
        let p = Point::new([(l(1), 1.5), (l(2), 1.5)], vec![]);
        assert_eq!(e.eval(&p), Err(SymbolicError::ZeroDenominator));
    }

    fn arb_term() -> impl Strategy<Value = Term> {
        (
            -5i64..=5,
            1i64..=4,
            0u32..=2,
            proptest::collection::btree_set(1u32..=3, 0..=2),
            proptest::collection::vec(
                (-2i64..=2, -1i64..=1, -1i64..=1, prop_oneof![Just(1i64), Just(-1i64)]),
                1..=2,
            ),
            prop_oneof![Just(-1i32), Just(0), Just(1)],
        )
            .prop_map(|(num, den, pi, kernels, ds, e1)| Term {
                coeff: rational(num, den),
                two_pi_pow: pi,
                q_exp: BTreeMap::from([(l(1), e1), (l(2), -1)]),
                kernels: kernels.into_iter().map(LineId).collect(),
                denoms: ds
                    .into_iter()
                    .map(|(n, a, b, c)| {
                        LinearForm::new([(0, n)], [(l(1), a), (l(2), b), (l(4), c)]).unwrap()
                    })
                    .collect(),
            })
    }

    fn kernel_free(terms: Vec<Term>) -> Vec<Term> {
        terms
            .into_iter()
            .map(|mut t| {
                t.kernels.clear();
                t
            })
            .collect()
    }

    proptest! {
        #[test]
        fn canonical_form_is_order_insensitive(terms in proptest::collection::vec(arb_term(), 0..8), seed in any::<u64>()) {
            let a = Expression::from_terms(terms.clone());
            let mut shuffled = terms;
            let n = shuffled.len();
            if n > 1 {
                for i in 0..n {
                    let j = (seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64) % n as u64) as usize;
                    shuffled.swap(i, j);
                }
            }
            let b = Expression::from_terms(shuffled);
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(Expression::from_terms(a.terms()), a);
        }

        #[test]
        fn reflections_are_involutions_and_commute(terms in proptest::collection::vec(arb_term(), 0..6)) {
            let e = Expression::from_terms(kernel_free(terms));
            prop_assert_eq!(e.reflect(l(1)).unwrap().reflect(l(1)).unwrap(), e.clone());
            let ab = e.reflect(l(1)).unwrap().reflect(l(4)).unwrap();
            let ba = e.reflect(l(4)).unwrap().reflect(l(1)).unwrap();
            prop_assert_eq!(ab, ba);
        }

        #[test]
        fn eval_is_linear(
            t1 in proptest::collection::vec(arb_term(), 0..5),
            t2 in proptest::collection::vec(arb_term(), 0..5),
            num in -7i64..=7,
            den in 1i64..=5,
        ) {
            let p = Point::new([(l(1), 0.731), (l(2), 1.377), (l(3), 2.113), (l(4), 0.4519)], vec![3]);
            let e1 = Expression::from_terms(t1);
            let e2 = Expression::from_terms(t2);
            let sum = e1.add(&e2).eval(&p).unwrap();
            let parts = e1.eval(&p).unwrap() + e2.eval(&p).unwrap();
            prop_assert!((sum - parts).norm() <= 1e-12 * (1.0 + parts.norm()));
            let c = rational(num, den);
            let scaled = e1.scale(&c).eval(&p).unwrap();
            let expected = e1.eval(&p).unwrap() * (num as f64 / den as f64);
            prop_assert!((scaled - expected).norm() <= 1e-12 * (1.0 + expected.norm()));
        }
    }
}
