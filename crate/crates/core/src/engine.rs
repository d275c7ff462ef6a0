//! Tree decomposition of Matsubara integrals and sums.
//!
//! For every spanning tree `T` the vertex constraints are solved for the tree
//! variables `n_j = Ω_j(N, n_l)` in terms of the cotree variables `n_l`. The
//! integral contribution of `T` is
//!
//! ```text
//! I_T = (2π)^L Π_k 1/(2q_k) Π_{j∈T} (1 - R_j) [ 1/(q_j - iΩ_j(N, iε_l q_l)) ]
//! ```
//!
//! where the reflections act only inside the bracket, and `ε_l = ±1` is the
//! sign of the regulator attached to the fundamental cycle of `l`. The sum is
//! obtained either by applying the thermal operator
//! `Π_i [1 + nbe_i (1 - R_i)]` (cutset terms dropped) to `I_G = Σ_T I_T`, or
//! tree by tree with the operator restricted to the cotree lines.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::graph::{power_set, GraphError, LineId, LineSubset, MatsubaraGraph, SpanningTree};
use crate::symbolic::{Expression, LinearForm, SymbolicError, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
    #[error("invalid regulator hierarchy: {0}")]
    InvalidHierarchy(String),
}

/// Strict ordering of the regulators, `τ_{h(1)} ≫ τ_{h(2)} ≫ … > 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hierarchy {
    order: Vec<LineId>,
    rank: BTreeMap<LineId, usize>,
}

impl Hierarchy {
    /// Lines ranked by ascending id.
    pub fn identity(graph: &MatsubaraGraph) -> Self {
        Self::build(graph.line_ids().collect())
    }

    pub fn new(graph: &MatsubaraGraph, order: Vec<LineId>) -> Result<Self, EngineError> {
        let given: BTreeSet<LineId> = order.iter().copied().collect();
        let expected: BTreeSet<LineId> = graph.line_ids().collect();
        if given.len() != order.len() || given != expected {
            return Err(EngineError::InvalidHierarchy(format!(
                "expected a permutation of the {} line ids",
                expected.len()
            )));
        }
        Ok(Self::build(order))
    }

    pub fn random<R: Rng + ?Sized>(graph: &MatsubaraGraph, rng: &mut R) -> Self {
        let mut order: Vec<LineId> = graph.line_ids().collect();
        order.shuffle(rng);
        Self::build(order)
    }

    fn build(order: Vec<LineId>) -> Self {
        let rank = order.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        Hierarchy { order, rank }
    }

    pub fn order(&self) -> &[LineId] {
        &self.order
    }

    /// Position in the hierarchy; 0 is the dominant regulator.
    pub fn rank(&self, line: LineId) -> usize {
        self.rank[&line]
    }
}

/// `n_j = Σ_v a_v N_v + Σ_l b_l n_l` for one tree line.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Omega {
    /// Coefficients over free vertices; the root is already eliminated.
    pub n: BTreeMap<usize, i64>,
    /// Coefficients over cotree lines, each `±1`.
    pub lines: BTreeMap<LineId, i64>,
}

impl Omega {
    pub fn eval(&self, n_free: &[i64], n_cotree: &BTreeMap<LineId, i64>) -> i64 {
        let a: i64 = self.n.iter().map(|(&v, &c)| c * n_free[v]).sum();
        let b: i64 = self.lines.iter().map(|(l, &c)| c * n_cotree[l]).sum();
        a + b
    }

    pub fn eval_real(&self, n_free: &[i64], x_cotree: &BTreeMap<LineId, f64>) -> f64 {
        let a: i64 = self.n.iter().map(|(&v, &c)| c * n_free[v]).sum();
        let b: f64 = self.lines.iter().map(|(l, &c)| c as f64 * x_cotree[l]).sum();
        a as f64 + b
    }
}

/// A spanning tree with its solved constraints and regulator signs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeSolution {
    pub tree: SpanningTree,
    pub omega: BTreeMap<LineId, Omega>,
    pub epsilon: BTreeMap<LineId, i8>,
}

impl TreeSolution {
    pub fn cotree(&self) -> impl Iterator<Item = LineId> + '_ {
        self.epsilon.keys().copied()
    }

    /// Values of every line variable given the free `N`s and the cotree variables.
    pub fn line_values(&self, n_free: &[i64], n_cotree: &BTreeMap<LineId, i64>) -> BTreeMap<LineId, i64> {
        let mut out = n_cotree.clone();
        for (&j, om) in &self.omega {
            out.insert(j, om.eval(n_free, n_cotree));
        }
        out
    }
}

/// Solves the vertex constraints for the tree variables.
pub fn solve_tree(
    graph: &MatsubaraGraph,
    tree: &SpanningTree,
    hierarchy: &Hierarchy,
) -> Result<TreeSolution, EngineError> {
    let root = graph.root();
    let mut omega = BTreeMap::new();
    for j in tree.lines().iter() {
        let (side, crossing) = graph.fundamental_cutset(tree, j)?;
        // Σ_{v∈side} N_v with N_root = -Σ_{v≠root} N_v.
        let root_inside = side.contains(&root) as i64;
        let n = (0..root)
            .map(|v| (v, side.contains(&v) as i64 - root_inside))
            .filter(|&(_, c)| c != 0)
            .collect();
        let lines = crossing
            .iter()
            .filter(|(&l, _)| l != j)
            .map(|(&l, &s)| (l, -(s as i64)))
            .collect();
        omega.insert(j, Omega { n, lines });
    }
    let epsilon = epsilon_signs(graph, tree, hierarchy)?;
    Ok(TreeSolution {
        tree: tree.clone(),
        omega,
        epsilon,
    })
}

/// `ε_l` for every cotree line: the sign of the dominant regulator in the
/// signed sum over the fundamental cycle of `l`.
pub fn epsilon_signs(
    graph: &MatsubaraGraph,
    tree: &SpanningTree,
    hierarchy: &Hierarchy,
) -> Result<BTreeMap<LineId, i8>, EngineError> {
    let mut out = BTreeMap::new();
    for l in graph.cotree(tree) {
        let cycle = graph.fundamental_cycle(tree, l)?;
        let &(_, sign) = cycle
            .iter()
            .min_by_key(|(k, _)| hierarchy.rank(*k))
            .expect("cycle contains l");
        out.insert(l, sign);
    }
    Ok(out)
}

fn prefactor(graph: &MatsubaraGraph) -> (BigRational, u32, BTreeMap<LineId, i32>) {
    let coeff = BigRational::new(BigInt::one(), BigInt::from(2).pow(graph.line_count() as u32));
    let q_exp = graph.line_ids().map(|l| (l, -1)).collect();
    (coeff, graph.cycle_rank() as u32, q_exp)
}

/// Contribution of one tree to the Matsubara integral.
pub fn tree_integral(graph: &MatsubaraGraph, solution: &TreeSolution) -> Result<Expression, EngineError> {
    let mut denoms = Vec::with_capacity(solution.omega.len());
    for (&j, om) in &solution.omega {
        // q_j - iΩ_j(N, n_l = iε_l q_l) = q_j + Σ ε_l b_l q_l - i Σ a_v N_v
        let q = std::iter::once((j, 1)).chain(
            om.lines
                .iter()
                .map(|(l, &b)| (*l, b * solution.epsilon[l] as i64)),
        );
        let n = om.n.iter().map(|(&v, &a)| (v, -a));
        denoms.push(LinearForm::new(n, q)?);
    }
    let mut e = Expression::from_terms([Term::fraction(BigRational::one(), denoms)]);
    for j in solution.tree.lines().iter() {
        e = e.reflection_difference(j)?;
    }
    let (coeff, two_pi_pow, q_exp) = prefactor(graph);
    Ok(e.multiply_monomial(&coeff, two_pi_pow, &q_exp))
}

/// Solutions for every spanning tree, in enumeration order.
pub fn solve_all(graph: &MatsubaraGraph, hierarchy: &Hierarchy) -> Result<Vec<TreeSolution>, EngineError> {
    graph
        .spanning_trees()
        .iter()
        .map(|t| solve_tree(graph, t, hierarchy))
        .collect()
}

/// `I_G = Σ_T I_T` in partial-fraction normal form.
pub fn matsubara_integral(graph: &MatsubaraGraph, hierarchy: &Hierarchy) -> Result<Expression, EngineError> {
    let mut total = Expression::zero();
    for sol in solve_all(graph, hierarchy)? {
        total.add_assign(&tree_integral(graph, &sol)?);
    }
    Ok(total.reduced())
}

/// A thermal operator as a list of line subsets; the subset `S` stands for
/// `Π_{i∈S} nbe_i (1 - R_i)` and the empty subset for the identity.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OperatorSpec {
    pub subsets: Vec<LineSubset>,
}

impl OperatorSpec {
    /// `Π_{i∈lines} [1 + nbe_i (1 - R_i)]` expanded.
    pub fn product_over(lines: &[LineId]) -> Self {
        OperatorSpec {
            subsets: power_set(lines),
        }
    }

    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    pub fn render(&self) -> String {
        if self.subsets.is_empty() {
            return "0".into();
        }
        self.subsets
            .iter()
            .map(|s| {
                if s.is_empty() {
                    "1".to_string()
                } else {
                    s.iter()
                        .map(|l| format!("nbe{l}(1−R{l})"))
                        .collect::<Vec<_>>()
                        .join(" ")
                }
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

/// The product operator over all lines: every subset.
pub fn operator_full(graph: &MatsubaraGraph) -> Result<OperatorSpec, EngineError> {
    Ok(OperatorSpec {
        subsets: graph.all_subsets()?,
    })
}

/// The operator with every cutset term removed; terms stop at the cycle rank.
pub fn operator_reduced(graph: &MatsubaraGraph) -> Result<OperatorSpec, EngineError> {
    Ok(OperatorSpec {
        subsets: graph.non_cutset_subsets(graph.cycle_rank())?,
    })
}

/// Applies the operator; factors of one subset act in ascending line order.
/// The result is in partial-fraction normal form.
pub fn apply_operator(spec: &OperatorSpec, expression: &Expression) -> Result<Expression, EngineError> {
    Ok(apply_unreduced(spec, expression)?.reduced())
}

fn apply_unreduced(spec: &OperatorSpec, expression: &Expression) -> Result<Expression, EngineError> {
    let mut total = Expression::zero();
    for subset in &spec.subsets {
        let mut e = expression.clone();
        for i in subset.iter() {
            e = e.reflection_difference(i)?.kernel_multiply(i)?;
        }
        total.add_assign(&e);
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SumMethod {
    /// Reduced thermal operator applied to `I_G`.
    Operator,
    /// Tree by tree, with the operator over the cotree lines only.
    Direct,
}

impl std::str::FromStr for SumMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "operator" => Ok(SumMethod::Operator),
            "direct" => Ok(SumMethod::Direct),
            other => Err(format!("unknown method {other:?}")),
        }
    }
}

pub fn matsubara_sum(
    graph: &MatsubaraGraph,
    method: SumMethod,
    hierarchy: &Hierarchy,
) -> Result<Expression, EngineError> {
    match method {
        SumMethod::Operator => {
            let integral = matsubara_integral(graph, hierarchy)?;
            apply_operator(&operator_reduced(graph)?, &integral)
        }
        SumMethod::Direct => {
            let mut total = Expression::zero();
            for sol in solve_all(graph, hierarchy)? {
                let cotree: Vec<LineId> = sol.cotree().collect();
                let part = tree_integral(graph, &sol)?;
                total.add_assign(&apply_unreduced(&OperatorSpec::product_over(&cotree), &part)?);
            }
            Ok(total.reduced())
        }
    }
}

/// True iff `Π_{i∈subset} (1 - R_i)` sends the expression to zero.
pub fn annihilator_check(
    graph: &MatsubaraGraph,
    subset: &LineSubset,
    expression: &Expression,
) -> Result<bool, EngineError> {
    let mut e = expression.clone();
    for i in subset.iter() {
        graph.line(i)?;
        e = e.reflection_difference(i)?;
    }
    Ok(e.reduced().is_zero())
}
