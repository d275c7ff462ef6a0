//! Partial-fraction normal form.
//!
//! Reciprocals of linear forms satisfy the relations
//! `m = Σ λ_t D_t  ⇒  1/Π D_t = Σ λ_t / (m · Π_{u≠t} D_u)`.
//! Rewriting with these until every denominator set is free of broken
//! circuits gives a representation that depends only on the function, not on
//! the route that produced it. Forms whose `q` coefficients share one sign
//! come first in the order, so spurious mixed-sign denominators are eliminated
//! whenever the function admits a representation without them.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, Zero};

use super::expr::{Expression, TermKey};
use super::LinearForm;
use crate::graph::LineId;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Ranked {
    mixed: bool,
    form: LinearForm,
}

impl Ranked {
    fn new(form: LinearForm) -> Self {
        let mut signs = form.q_coeffs().values();
        let mixed = match signs.next() {
            Some(first) => signs.any(|s| s != first),
            None => false,
        };
        Ranked { mixed, form }
    }
}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.mixed, &self.form).cmp(&(other.mixed, &other.form))
    }
}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Prefix {
    two_pi_pow: u32,
    q_exp: BTreeMap<LineId, i32>,
    kernels: BTreeSet<LineId>,
}

type Coefficients = BTreeMap<Prefix, BigRational>;
type Smallest = Option<(Ranked, Vec<Rational64>)>;

impl Expression {
    /// The partial-fraction normal form. Two expressions built from the same
    /// products of reciprocal forms are equal as functions exactly when their
    /// normal forms compare equal.
    pub fn reduced(&self) -> Expression {
        let mut work: BTreeMap<Vec<Ranked>, Coefficients> = BTreeMap::new();
        for (key, c) in self.iter() {
            let mut denoms: Vec<Ranked> = key.denoms.iter().cloned().map(Ranked::new).collect();
            denoms.sort();
            let prefix = Prefix {
                two_pi_pow: key.two_pi_pow,
                q_exp: key.q_exp.clone(),
                kernels: key.kernels.clone(),
            };
            add_to(work.entry(denoms).or_default(), prefix, c.clone());
        }

        let mut spans: HashMap<Vec<Ranked>, Smallest> = HashMap::new();
        let mut out = Expression::zero();
        // Rewrites only produce lexicographically smaller sets, so the largest
        // pending set has received all of its contributions.
        while let Some((denoms, coeffs)) = work.pop_last() {
            if coeffs.is_empty() {
                continue;
            }
            match broken_circuit(&denoms, &mut spans) {
                None => {
                    let mut forms: Vec<LinearForm> = denoms.into_iter().map(|r| r.form).collect();
                    forms.sort();
                    for (prefix, c) in coeffs {
                        let key = TermKey {
                            two_pi_pow: prefix.two_pi_pow,
                            q_exp: prefix.q_exp,
                            kernels: prefix.kernels,
                            denoms: forms.clone(),
                        };
                        out.insert_canonical(key, c);
                    }
                }
                Some((start, m, lambda)) => {
                    for (offset, l) in lambda.iter().enumerate() {
                        if l.is_zero() {
                            continue;
                        }
                        let l = BigRational::new(BigInt::from(*l.numer()), BigInt::from(*l.denom()));
                        let mut next = denoms.clone();
                        next.remove(start + offset);
                        next.push(m.clone());
                        next.sort();
                        let slot = work.entry(next).or_default();
                        for (prefix, c) in &coeffs {
                            add_to(slot, prefix.clone(), c * &l);
                        }
                    }
                }
            }
        }
        out
    }
}

fn add_to(coeffs: &mut Coefficients, prefix: Prefix, c: BigRational) {
    match coeffs.entry(prefix) {
        std::collections::btree_map::Entry::Vacant(v) => {
            if !c.is_zero() {
                v.insert(c);
            }
        }
        std::collections::btree_map::Entry::Occupied(mut o) => {
            *o.get_mut() += c;
            if o.get().is_zero() {
                o.remove();
            }
        }
    }
}

/// First position `i` where a form smaller than `denoms[i]` lies in the span
/// of `denoms[i..]`, with that form and its coordinates in `denoms[i..]`.
fn broken_circuit(
    denoms: &[Ranked],
    spans: &mut HashMap<Vec<Ranked>, Smallest>,
) -> Option<(usize, Ranked, Vec<Rational64>)> {
    for i in 0..denoms.len() {
        let tail = &denoms[i..];
        let found = spans
            .entry(tail.to_vec())
            .or_insert_with(|| smallest_in_span(tail))
            .clone();
        let (m, lambda) = found?;
        if m < denoms[i] {
            return Some((i, m, lambda));
        }
    }
    None
}

fn small(c: i64) -> Rational64 {
    Rational64::from_integer(c)
}

/// The smallest form with `q` coefficients in `{-1, 0, 1}` and integer `N`
/// coefficients inside the span of `forms`. `None` when the `q` parts are
/// dependent, in which case the set is left alone.
fn smallest_in_span(forms: &[Ranked]) -> Smallest {
    let k = forms.len();
    let columns: BTreeSet<LineId> = forms.iter().flat_map(|f| f.form.q_coeffs().keys().copied()).collect();
    let columns: Vec<LineId> = columns.into_iter().collect();
    let vertices: BTreeSet<usize> = forms.iter().flat_map(|f| f.form.n_coeffs().keys().copied()).collect();
    let q: Vec<Vec<i64>> = forms
        .iter()
        .map(|f| columns.iter().map(|&l| f.form.q_coeff(l) as i64).collect())
        .collect();
    let n: Vec<Vec<i64>> = forms
        .iter()
        .map(|f| vertices.iter().map(|v| *f.form.n_coeffs().get(v).unwrap_or(&0)).collect())
        .collect();

    let pivots = pivot_columns(&q)?;
    // Solve Σ_j λ_j q_j[p] = σ_p on the pivot columns.
    let square: Vec<Vec<Rational64>> = pivots
        .iter()
        .map(|&p| (0..k).map(|j| small(q[j][p])).collect())
        .collect();
    let inverse = invert(square)?;

    let mut best: Smallest = None;
    for code in 1..3usize.pow(k as u32) {
        let sigma: Vec<i64> = (0..k).map(|p| (code / 3usize.pow(p as u32) % 3) as i64 - 1).collect();
        let mut lambda: Vec<Rational64> = (0..k)
            .map(|j| (0..k).map(|p| inverse[j][p] * small(sigma[p])).sum())
            .collect();
        let Some(form) = combine(&q, &n, &lambda, &columns, &vertices) else {
            continue;
        };
        let (sign, form) = form.normalized();
        if sign < 0 {
            lambda.iter_mut().for_each(|l| *l = -*l);
        }
        let cand = Ranked::new(form);
        if best.as_ref().is_none_or(|(b, _)| cand < *b) {
            best = Some((cand, lambda));
        }
    }
    best
}

fn combine(
    q: &[Vec<i64>],
    n: &[Vec<i64>],
    lambda: &[Rational64],
    columns: &[LineId],
    vertices: &BTreeSet<usize>,
) -> Option<LinearForm> {
    let mut qs = Vec::with_capacity(columns.len());
    for (c, &l) in columns.iter().enumerate() {
        let x: Rational64 = q.iter().zip(lambda).map(|(row, lam)| lam * small(row[c])).sum();
        if !x.is_integer() || x.abs() > Rational64::one() {
            return None;
        }
        qs.push((l, x.to_integer()));
    }
    let mut ns = Vec::with_capacity(vertices.len());
    for (c, &v) in vertices.iter().enumerate() {
        let x: Rational64 = n.iter().zip(lambda).map(|(row, lam)| lam * small(row[c])).sum();
        if !x.is_integer() {
            return None;
        }
        ns.push((v, x.to_integer()));
    }
    LinearForm::new(ns, qs).ok()
}

/// Column indices on which the rows of `q` are independent.
fn pivot_columns(q: &[Vec<i64>]) -> Option<Vec<usize>> {
    let k = q.len();
    let width = q.first().map_or(0, |r| r.len());
    let mut basis: Vec<(usize, Vec<Rational64>)> = Vec::new();
    let mut pivots = Vec::new();
    for c in 0..width {
        let mut v: Vec<Rational64> = (0..k).map(|j| small(q[j][c])).collect();
        for (lead, b) in &basis {
            if !v[*lead].is_zero() {
                let f = v[*lead] / b[*lead];
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= f * y;
                }
            }
        }
        if let Some(lead) = v.iter().position(|x| !x.is_zero()) {
            basis.push((lead, v));
            pivots.push(c);
            if pivots.len() == k {
                return Some(pivots);
            }
        }
    }
    None
}

fn invert(mut a: Vec<Vec<Rational64>>) -> Option<Vec<Vec<Rational64>>> {
    let n = a.len();
    let mut inv: Vec<Vec<Rational64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { Rational64::one() } else { Rational64::zero() }).collect())
        .collect();
    for col in 0..n {
        let p = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, p);
        inv.swap(col, p);
        let d = a[col][col];
        for j in 0..n {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col];
                for j in 0..n {
                    let (x, y) = (a[col][j], inv[col][j]);
                    a[r][j] -= f * x;
                    inv[r][j] -= f * y;
                }
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::{Point, Term};

    fn form(n: &[(usize, i64)], q: &[(u32, i64)]) -> LinearForm {
        LinearForm::new(n.iter().copied(), q.iter().map(|&(l, c)| (LineId(l), c))).unwrap()
    }

    fn frac(c: i64, denoms: Vec<LinearForm>) -> Term {
        Term::fraction(BigRational::from_integer(c.into()), denoms)
    }

    #[test]
    fn three_term_relation() {
        // A + B = C with A = iN1 + q1, B = iN2 + q2, C = i(N1+N2) + q1 + q2.
        let a = form(&[(0, 1)], &[(1, 1)]);
        let b = form(&[(1, 1)], &[(2, 1)]);
        let c = form(&[(0, 1), (1, 1)], &[(1, 1), (2, 1)]);
        let lhs = Expression::from_terms([frac(1, vec![a.clone(), b.clone()])]);
        let rhs = Expression::from_terms([frac(1, vec![c.clone(), a]), frac(1, vec![c, b])]);
        assert_eq!(lhs.reduced(), rhs.reduced());
        assert!(lhs.sub(&rhs).reduced().is_zero());
    }

    #[test]
    fn normal_form_is_idempotent_and_preserves_values() {
        let a = form(&[(0, 1)], &[(1, 1), (2, -1)]);
        let b = form(&[(1, 1)], &[(2, 1), (3, 1)]);
        let c = form(&[(0, 1), (1, 1)], &[(1, 1), (3, 1)]);
        let d = form(&[(1, 1)], &[(3, -1)]);
        let e = Expression::from_terms([frac(1, vec![a.clone(), b.clone()]), frac(-2, vec![c, d]), frac(3, vec![a, b])]);
        let r = e.reduced();
        assert_eq!(r.reduced(), r);
        let p = Point::new([(LineId(1), 0.7), (LineId(2), 1.3), (LineId(3), 2.1)], vec![2, -1]);
        let (x, y) = (e.eval(&p).unwrap(), r.eval(&p).unwrap());
        assert!((x - y).norm() < 1e-13 * x.norm());
    }

    #[test]
    fn mixed_forms_are_ranked_last() {
        let same = Ranked::new(form(&[(0, 1)], &[(1, -1), (2, -1)]));
        let mixed = Ranked::new(form(&[(0, 1)], &[(1, 1), (2, -1)]));
        assert!(same < mixed);
    }
}
