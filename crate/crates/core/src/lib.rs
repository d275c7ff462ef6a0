//! Exact evaluation of Matsubara sums over connected multigraphs.
//!
//! A [`MatsubaraGraph`] fixes a constrained lattice sum `S_G` of products of
//! `1/(n_i² + q_i²)` and its continuous counterpart `I_G`. The [`engine`]
//! builds `I_G` in closed form from the spanning trees of the graph and
//! obtains `S_G` by applying reflection operators dressed with
//! Bose–Einstein kernels. The [`oracles`] module checks every result against
//! brute-force lattice sums and adaptive quadrature.
//!
//! ```
//! use matsubara::{fixtures, matsubara_sum, Format, Hierarchy, LineId, Point, SumMethod, Symbols};
//!
//! let g = fixtures::g4();
//! let s = matsubara_sum(&g, SumMethod::Operator, &Hierarchy::identity(&g)).unwrap();
//! assert!(s.render(&Symbols::for_graph(&g), Format::Latex).contains("n_{B}"));
//! let p = Point::new((1..=5).map(|l| (LineId(l), 0.5 + l as f64)), vec![1, 0, -2]);
//! let v = s.eval(&p).unwrap();
//! assert!(v.re > 0.0 && v.im.abs() < 1e-12 * v.re);
//! ```

pub mod corpus;
pub mod engine;
pub mod fixtures;
pub mod graph;
pub mod kernel;
pub mod oracles;
pub mod quadrature;
pub mod symbolic;

pub use engine::{
    annihilator_check, apply_operator, epsilon_signs, matsubara_integral, matsubara_sum, operator_full,
    operator_reduced, solve_tree, tree_integral, EngineError, Hierarchy, OperatorSpec, SumMethod, TreeSolution,
};
pub use graph::{GraphError, LineId, LineSubset, MatsubaraGraph, RawGraph, SpanningTree};
pub use kernel::nbe;
pub use symbolic::{Expression, Format, LinearForm, Point, Symbols, SymbolicError, Term};
