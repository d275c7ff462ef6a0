//! Independent numeric ground truth.
//!
//! Nothing here uses the symbolic engine except `verify_*`, which compares
//! engine output against these oracles.

use std::collections::BTreeMap;

use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

pub use crate::kernel::nbe;

use crate::engine::{matsubara_integral, matsubara_sum, solve_tree, EngineError, Hierarchy, SumMethod, TreeSolution};
use crate::graph::{LineId, MatsubaraGraph};
use crate::quadrature::{integrate_real_line, Estimate, Options, QuadratureError};
use crate::symbolic::{Expression, Point, SymbolicError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("quadrature needs cycle rank at most 2, graph has {0}")]
    RankTooHigh(usize),
    #[error("cutoff must be at least 10, got {0}")]
    CutoffTooSmall(i64),
    #[error("line values violate the vertex constraints")]
    ConstraintViolated,
    #[error("expected {expected} values, got {got}")]
    Arity { expected: usize, got: usize },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
}

/// Compensated summation.
#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BruteForce {
    pub value: f64,
    /// The same sum with cutoff `M/2`.
    pub half_value: f64,
}

impl BruteForce {
    pub fn convergence(&self) -> f64 {
        (self.value - self.half_value).abs()
    }
}

fn first_tree(graph: &MatsubaraGraph) -> Result<TreeSolution, OracleError> {
    let tree = graph.spanning_trees().into_iter().next().expect("connected graph has a tree");
    Ok(solve_tree(graph, &tree, &Hierarchy::identity(graph))?)
}

fn check_point(graph: &MatsubaraGraph, point: &Point) -> Result<(), OracleError> {
    let expected = graph.vertex_count() - 1;
    if point.n.len() != expected {
        return Err(OracleError::Arity {
            expected,
            got: point.n.len(),
        });
    }
    for l in graph.line_ids() {
        if point.q_value(l)? <= 0.0 {
            return Err(SymbolicError::NonPositiveQ(l).into());
        }
    }
    Ok(())
}

/// Visits every point of `[-m, m]^dims` in lexicographic order.
fn for_each_in_box(dims: usize, m: i64, mut visit: impl FnMut(&[i64])) {
    let mut x = vec![-m; dims];
    loop {
        visit(&x);
        let mut k = dims;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            if x[k] < m {
                x[k] += 1;
                break;
            }
            x[k] = -m;
        }
    }
}

/// Truncated `S_G`: the independent variables of the first spanning tree run
/// over `[-M, M]^L`, the tree variables follow from the constraints.
pub fn brute_force_sum(graph: &MatsubaraGraph, point: &Point, cutoff: i64) -> Result<BruteForce, OracleError> {
    if cutoff < 10 {
        return Err(OracleError::CutoffTooSmall(cutoff));
    }
    check_point(graph, point)?;
    let sol = first_tree(graph)?;
    let cotree: Vec<LineId> = sol.cotree().collect();
    let q2: BTreeMap<LineId, f64> = point.q.iter().map(|(&l, &q)| (l, q * q)).collect();
    let half = cutoff / 2;
    let (mut full, mut inner) = (Neumaier::default(), Neumaier::default());
    let mut free = BTreeMap::new();
    for_each_in_box(cotree.len(), cutoff, |x| {
        free.clear();
        free.extend(cotree.iter().copied().zip(x.iter().copied()));
        let mut term = 1.0;
        for (l, &n) in &free {
            term /= (n * n) as f64 + q2[l];
        }
        for (j, om) in &sol.omega {
            let n = om.eval(&point.n, &free) as f64;
            term /= n * n + q2[j];
        }
        full.add(term);
        if x.iter().all(|v| v.abs() <= half) {
            inner.add(term);
        }
    });
    Ok(BruteForce {
        value: full.value(),
        half_value: inner.value(),
    })
}

/// The unreduced lattice sum: every line variable runs over `[-M, M]` and
/// each vertex (root included) contributes a Kronecker delta. `n_all` holds
/// one value per vertex.
pub fn lattice_box_sum(graph: &MatsubaraGraph, q: &BTreeMap<LineId, f64>, n_all: &[i64], cutoff: i64) -> Result<f64, OracleError> {
    if n_all.len() != graph.vertex_count() {
        return Err(OracleError::Arity {
            expected: graph.vertex_count(),
            got: n_all.len(),
        });
    }
    let ids: Vec<LineId> = graph.line_ids().collect();
    let qs: Vec<f64> = ids
        .iter()
        .map(|l| q.get(l).copied().ok_or(SymbolicError::MissingLineValue(*l)))
        .collect::<Result<_, _>>()?;
    let mut signs = vec![vec![0i64; ids.len()]; graph.vertex_count()];
    for (v, row) in signs.iter_mut().enumerate() {
        for (k, &l) in ids.iter().enumerate() {
            row[k] = graph.incidence_sign(v, l).expect("valid ids") as i64;
        }
    }
    let mut acc = Neumaier::default();
    for_each_in_box(ids.len(), cutoff, |x| {
        let satisfied = signs
            .iter()
            .zip(n_all)
            .all(|(row, &nv)| row.iter().zip(x).map(|(s, n)| s * n).sum::<i64>() == nv);
        if satisfied {
            let t: f64 = x.iter().zip(&qs).map(|(&n, q)| 1.0 / ((n * n) as f64 + q * q)).product();
            acc.add(t);
        }
    });
    Ok(acc.value())
}

/// `I_G` by nested adaptive quadrature over the independent variables of the
/// first spanning tree.
pub fn quadrature_integral(graph: &MatsubaraGraph, point: &Point, tolerance: f64) -> Result<Estimate, OracleError> {
    let rank = graph.cycle_rank();
    if rank > 2 {
        return Err(OracleError::RankTooHigh(rank));
    }
    check_point(graph, point)?;
    let sol = first_tree(graph)?;
    let cotree: Vec<LineId> = sol.cotree().collect();
    let integrand = |x: &BTreeMap<LineId, f64>| -> f64 {
        let mut v = 1.0;
        for (l, &xl) in x {
            v /= xl * xl + point.q[l] * point.q[l];
        }
        for (j, om) in &sol.omega {
            let n = om.eval_real(&point.n, x);
            v /= n * n + point.q[j] * point.q[j];
        }
        v
    };
    let outer = Options {
        rel_tol: tolerance,
        ..Options::default()
    };
    let inner = Options {
        rel_tol: tolerance * 1e-2,
        ..Options::default()
    };
    match cotree.as_slice() {
        [a] => integrate_real_line(
            |x| -> Result<f64, OracleError> { Ok(integrand(&BTreeMap::from([(*a, x)]))) },
            outer,
        ),
        [a, b] => integrate_real_line(
            |x| -> Result<f64, OracleError> {
                let est = integrate_real_line(
                    |y| -> Result<f64, OracleError> { Ok(integrand(&BTreeMap::from([(*a, x), (*b, y)]))) },
                    inner,
                )?;
                Ok(est.value)
            },
            outer,
        ),
        _ => unreachable!("connected graphs with minimum degree 2 have rank at least 1"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub trial: usize,
    pub q: BTreeMap<LineId, f64>,
    /// Values of the free vertices.
    pub n: Vec<i64>,
    pub symbolic: f64,
    /// Imaginary part of the symbolic value; zero up to rounding.
    pub symbolic_imag: f64,
    pub oracle: f64,
    pub abs_error: f64,
    pub rel_error: f64,
    /// `|value(M) - value(M/2)|` for sums, the quadrature error estimate for integrals.
    pub convergence: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl VerificationReport {
    fn new(trial: usize, point: &Point, symbolic: Complex64, oracle: f64, convergence: f64, tolerance: f64) -> Self {
        let abs_error = (symbolic.re - oracle).abs();
        let rel_error = if oracle == 0.0 {
            f64::INFINITY
        } else {
            abs_error / oracle.abs()
        };
        let pass = rel_error <= tolerance || (oracle.abs() < 1.0 && abs_error <= tolerance);
        VerificationReport {
            trial,
            q: point.q.clone(),
            n: point.n.clone(),
            symbolic: symbolic.re,
            symbolic_imag: symbolic.im,
            oracle,
            abs_error,
            rel_error,
            convergence,
            tolerance,
            pass,
        }
    }
}

/// `q` uniform in `[0.3, 3]`, free `N` uniform in `[-3, 3]`.
pub fn random_point<R: Rng + ?Sized>(graph: &MatsubaraGraph, rng: &mut R) -> Point {
    let q = graph.line_ids().map(|l| (l, rng.gen_range(0.3..=3.0))).collect();
    let n = (0..graph.vertex_count() - 1).map(|_| rng.gen_range(-3..=3)).collect();
    Point { q, n }
}

const DEGENERATE: f64 = 1e-6;

/// Draws points until every denominator of `e` stays away from zero.
fn draw_regular<R: Rng + ?Sized>(graph: &MatsubaraGraph, e: &Expression, rng: &mut R) -> Result<Point, OracleError> {
    loop {
        let p = random_point(graph, rng);
        match e.min_denominator_modulus(&p)? {
            Some(m) if m < DEGENERATE => log::info!("redrawing near-degenerate point {:?}", p),
            _ => return Ok(p),
        }
    }
}

/// Compares `S_G` from the engine with brute-force sums at random points.
pub fn verify_sum(
    graph: &MatsubaraGraph,
    trials: usize,
    cutoff: i64,
    tolerance: f64,
    seed: u64,
) -> Result<Vec<VerificationReport>, OracleError> {
    let sum = matsubara_sum(graph, SumMethod::Operator, &Hierarchy::identity(graph))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(trials);
    for trial in 0..trials {
        let p = draw_regular(graph, &sum, &mut rng)?;
        let symbolic = sum.eval(&p)?;
        let bf = brute_force_sum(graph, &p, cutoff)?;
        out.push(VerificationReport::new(trial, &p, symbolic, bf.value, bf.convergence(), tolerance));
    }
    Ok(out)
}

/// Compares `I_G` from the engine with quadrature at random points.
pub fn verify_integral(
    graph: &MatsubaraGraph,
    trials: usize,
    tolerance: f64,
    seed: u64,
) -> Result<Vec<VerificationReport>, OracleError> {
    let rank = graph.cycle_rank();
    if rank > 2 {
        return Err(OracleError::RankTooHigh(rank));
    }
    let integral = matsubara_integral(graph, &Hierarchy::identity(graph))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(trials);
    for trial in 0..trials {
        let p = draw_regular(graph, &integral, &mut rng)?;
        let symbolic = integral.eval(&p)?;
        let est = quadrature_integral(graph, &p, tolerance * 1e-2)?;
        out.push(VerificationReport::new(trial, &p, symbolic, est.value, est.error, tolerance));
    }
    Ok(out)
}

/// Line values satisfying every vertex constraint: free `N` in `[-3, 3]`,
/// independent variables of the first tree in `[-5, 5]`.
pub fn random_constrained_tuple<R: Rng + ?Sized>(
    graph: &MatsubaraGraph,
    rng: &mut R,
) -> Result<(Vec<i64>, BTreeMap<LineId, i64>), OracleError> {
    let sol = first_tree(graph)?;
    let n_free: Vec<i64> = (0..graph.vertex_count() - 1).map(|_| rng.gen_range(-3..=3)).collect();
    let cot: BTreeMap<LineId, i64> = sol.cotree().map(|l| (l, rng.gen_range(-5..=5))).collect();
    let values = sol.line_values(&n_free, &cot);
    Ok((n_free, values))
}

/// Relative residual of the tree identity, computed exactly from the inputs
/// `Π_k 1/(q_k - i n_k) = Σ_T Π_{j∈T} 1/(q_j - iΩ_j(N, -i q_l)) Π_{l∉T} 1/(q_l - i n_l)`.
pub fn check_gaudin_identity(
    graph: &MatsubaraGraph,
    q: &BTreeMap<LineId, f64>,
    n_free: &[i64],
    n_lines: &BTreeMap<LineId, i64>,
) -> Result<f64, OracleError> {
    let point = Point::new(q.iter().map(|(&l, &v)| (l, v)), n_free.to_vec());
    check_point(graph, &point)?;
    if n_lines.len() != graph.line_count() || graph.line_ids().any(|l| !n_lines.contains_key(&l)) {
        return Err(OracleError::Arity {
            expected: graph.line_count(),
            got: n_lines.len(),
        });
    }
    let root_n = -n_free.iter().sum::<i64>();
    for v in 0..graph.vertex_count() {
        let flow: i64 = graph
            .line_ids()
            .map(|l| graph.incidence_sign(v, l).expect("valid ids") as i64 * n_lines[&l])
            .sum();
        let target = if v == graph.root() { root_n } else { n_free[v] };
        if flow != target {
            return Err(OracleError::ConstraintViolated);
        }
    }

    let h = Hierarchy::identity(graph);
    let solutions = graph
        .spanning_trees()
        .iter()
        .map(|t| solve_tree(graph, t, &h))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(tree_identity_residual(graph, q, n_free, n_lines, &solutions))
}

type ExactComplex = Complex<BigRational>;

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite input")
}

fn int(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

/// Both sides are rational in `q`, so they are evaluated exactly from the
/// given doubles. Only the final ratio is rounded. Near-cancelling tree
/// terms would otherwise dominate the residual with rounding error.
fn tree_identity_residual(
    graph: &MatsubaraGraph,
    q: &BTreeMap<LineId, f64>,
    n_free: &[i64],
    n_lines: &BTreeMap<LineId, i64>,
    solutions: &[TreeSolution],
) -> f64 {
    let qx: BTreeMap<LineId, BigRational> = q.iter().map(|(&l, &v)| (l, exact(v))).collect();
    let line = |l: &LineId| ExactComplex::new(qx[l].clone(), int(-n_lines[l]));
    let one = ExactComplex::new(int(1), int(0));
    let lhs = graph.line_ids().fold(one.clone(), |acc, l| acc / line(&l));
    let mut rhs = ExactComplex::new(int(0), int(0));
    for sol in solutions {
        let mut term = one.clone();
        for (j, om) in &sol.omega {
            let mut re = qx[j].clone();
            for (l, &b) in &om.lines {
                re -= int(b) * &qx[l];
            }
            let a: i64 = om.n.iter().map(|(&v, &c)| c * n_free[v]).sum();
            term = term / ExactComplex::new(re, int(-a));
        }
        for l in sol.cotree() {
            term = term / line(&l);
        }
        rhs = rhs + term;
    }
    let diff = lhs.clone() - rhs;
    (diff.norm_sqr() / lhs.norm_sqr()).to_f64().expect("finite ratio").sqrt()
}
