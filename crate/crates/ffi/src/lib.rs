//! C ABI over the `matsubara` engine.
//!
//! Graphs and expressions cross the boundary as opaque handles. Every fallible
//! call returns an [`MtsStatus`]; on failure a message for the calling thread
//! is available from [`mts_last_error`]. Strings returned through out
//! parameters are owned by the caller and released with [`mts_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use matsubara::engine::{matsubara_integral, matsubara_sum, operator_full, operator_reduced, EngineError, Hierarchy, SumMethod};
use matsubara::graph::{GraphError, LineId, MatsubaraGraph};
use matsubara::oracles::{verify_sum, OracleError};
use matsubara::symbolic::{Expression, Format, Point, SymbolicError, Symbols};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidGraph = 3,
    InvalidArgument = 4,
    Symbolic = 5,
    Engine = 6,
    Oracle = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtsFormat {
    Text = 0,
    Latex = 1,
    Json = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtsSumMethod {
    Operator = 0,
    Direct = 1,
}

/// A validated Matsubara graph.
pub struct MtsGraph {
    graph: MatsubaraGraph,
}

/// A canonical expression together with the graph data needed to evaluate
/// and print it.
pub struct MtsExpression {
    expr: Expression,
    symbols: Symbols,
    lines: Vec<LineId>,
}

struct Failure {
    status: MtsStatus,
    message: String,
}

impl Failure {
    fn new(status: MtsStatus, message: impl Into<String>) -> Self {
        Failure {
            status,
            message: message.into(),
        }
    }
}

impl From<GraphError> for Failure {
    fn from(e: GraphError) -> Self {
        Failure::new(MtsStatus::InvalidGraph, e.to_string())
    }
}

impl From<SymbolicError> for Failure {
    fn from(e: SymbolicError) -> Self {
        Failure::new(MtsStatus::Symbolic, e.to_string())
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        let status = match e {
            EngineError::Graph(_) => MtsStatus::InvalidGraph,
            EngineError::Symbolic(_) => MtsStatus::Symbolic,
            _ => MtsStatus::Engine,
        };
        Failure::new(status, e.to_string())
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        Failure::new(MtsStatus::Oracle, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MtsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MtsStatus::Ok,
        Ok(Err(fail)) => {
            set_error(&fail.message);
            fail.status
        }
        Err(_) => {
            set_error("internal panic");
            MtsStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(MtsStatus::NullPointer, format!("{what} is null")))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::new(MtsStatus::NullPointer, format!("{what} is null")));
    }
    out.write(value);
    Ok(())
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::new(MtsStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("nul bytes removed").into_raw()
}

fn wrap(graph: &MatsubaraGraph, expr: Expression) -> *mut MtsExpression {
    Box::into_raw(Box::new(MtsExpression {
        expr,
        symbols: Symbols::for_graph(graph),
        lines: graph.line_ids().collect(),
    }))
}

/// Message describing the last failure on this thread, or NULL. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn mts_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mts_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses and validates a graph given as JSON
/// (`{"vertices": [...], "edges": [{"id", "from", "to"}, ...]}`).
///
/// # Safety
/// `json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mts_graph_from_json(json: *const c_char, out: *mut *mut MtsGraph) -> MtsStatus {
    guard(|| {
        if json.is_null() {
            return Err(Failure::new(MtsStatus::NullPointer, "json is null"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Failure::new(MtsStatus::InvalidUtf8, e.to_string()))?;
        let graph = MatsubaraGraph::from_json(text)?;
        put(out, Box::into_raw(Box::new(MtsGraph { graph })), "out")
    })
}

/// # Safety
/// `graph` must come from [`mts_graph_from_json`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mts_graph_free(graph: *mut MtsGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Vertex count, line count, cycle rank and spanning-tree count.
///
/// # Safety
/// `graph` must be a live handle; each out pointer must be writable or NULL.
#[no_mangle]
pub unsafe extern "C" fn mts_graph_counts(
    graph: *const MtsGraph,
    vertices: *mut usize,
    lines: *mut usize,
    cycle_rank: *mut usize,
    trees: *mut u64,
) -> MtsStatus {
    guard(|| {
        let g = &get(graph, "graph")?.graph;
        if !vertices.is_null() {
            vertices.write(g.vertex_count());
        }
        if !lines.is_null() {
            lines.write(g.line_count());
        }
        if !cycle_rank.is_null() {
            cycle_rank.write(g.cycle_rank());
        }
        if !trees.is_null() {
            trees.write(u64::try_from(g.count_spanning_trees()).unwrap_or(u64::MAX));
        }
        Ok(())
    })
}

/// Text rendering of the thermal operator, cutset-reduced unless `full`.
///
/// # Safety
/// `graph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mts_graph_operator(graph: *const MtsGraph, full: bool, out: *mut *mut c_char) -> MtsStatus {
    guard(|| {
        let g = &get(graph, "graph")?.graph;
        let op = if full { operator_full(g)? } else { operator_reduced(g)? };
        put(out, c_string(op.render()), "out")
    })
}

/// The Matsubara integral `I_G`.
///
/// # Safety
/// `graph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mts_integral(graph: *const MtsGraph, out: *mut *mut MtsExpression) -> MtsStatus {
    guard(|| {
        let g = &get(graph, "graph")?.graph;
        let e = matsubara_integral(g, &Hierarchy::identity(g))?;
        put(out, wrap(g, e), "out")
    })
}

/// The Matsubara sum `S_G`.
///
/// # Safety
/// `graph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mts_sum(
    graph: *const MtsGraph,
    method: MtsSumMethod,
    out: *mut *mut MtsExpression,
) -> MtsStatus {
    guard(|| {
        let g = &get(graph, "graph")?.graph;
        let method = match method {
            MtsSumMethod::Operator => SumMethod::Operator,
            MtsSumMethod::Direct => SumMethod::Direct,
        };
        let e = matsubara_sum(g, method, &Hierarchy::identity(g))?;
        put(out, wrap(g, e), "out")
    })
}

/// # Safety
/// `expr` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mts_expression_free(expr: *mut MtsExpression) {
    if !expr.is_null() {
        drop(Box::from_raw(expr));
    }
}

/// Number of canonical terms.
///
/// # Safety
/// `expr` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mts_expression_term_count(expr: *const MtsExpression, out: *mut usize) -> MtsStatus {
    guard(|| put(out, get(expr, "expr")?.expr.len(), "out"))
}

/// Canonical equality of two expressions.
///
/// # Safety
/// Both handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mts_expression_equal(
    a: *const MtsExpression,
    b: *const MtsExpression,
    out: *mut bool,
) -> MtsStatus {
    guard(|| put(out, get(a, "a")?.expr == get(b, "b")?.expr, "out"))
}

/// Renders as text, LaTeX or JSON.
///
/// # Safety
/// `expr` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mts_expression_render(
    expr: *const MtsExpression,
    format: MtsFormat,
    out: *mut *mut c_char,
) -> MtsStatus {
    guard(|| {
        let e = get(expr, "expr")?;
        let format = match format {
            MtsFormat::Text => Format::Text,
            MtsFormat::Latex => Format::Latex,
            MtsFormat::Json => Format::Json,
        };
        put(out, c_string(e.expr.render(&e.symbols, format)), "out")
    })
}

/// Evaluates at `q` (one value per line, ascending line id) and `n` (one
/// integer per non-root vertex, in declaration order).
///
/// # Safety
/// `q` and `n` must point to `q_len` and `n_len` readable values; `re` and
/// `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mts_expression_eval(
    expr: *const MtsExpression,
    q: *const f64,
    q_len: usize,
    n: *const i64,
    n_len: usize,
    re: *mut f64,
    im: *mut f64,
) -> MtsStatus {
    guard(|| {
        let e = get(expr, "expr")?;
        let q = slice(q, q_len, "q")?;
        let n = slice(n, n_len, "n")?;
        if q.len() != e.lines.len() || n.len() != e.symbols.vertices.len() {
            return Err(Failure::new(
                MtsStatus::InvalidArgument,
                format!(
                    "expected {} q values and {} n values, got {} and {}",
                    e.lines.len(),
                    e.symbols.vertices.len(),
                    q.len(),
                    n.len()
                ),
            ));
        }
        let point = Point::new(e.lines.iter().copied().zip(q.iter().copied()), n.to_vec());
        let v = e.expr.eval(&point)?;
        put(re, v.re, "re")?;
        put(im, v.im, "im")
    })
}

/// Compares `S_G` with brute-force lattice sums at `trials` seeded points.
/// Reports the number of failing trials and the largest relative error.
///
/// # Safety
/// `graph` must be a live handle; out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn mts_verify_sum(
    graph: *const MtsGraph,
    trials: usize,
    cutoff: i64,
    tolerance: f64,
    seed: u64,
    failures: *mut usize,
    max_rel_error: *mut f64,
) -> MtsStatus {
    guard(|| {
        let g = &get(graph, "graph")?.graph;
        let reports = verify_sum(g, trials, cutoff, tolerance, seed)?;
        put(failures, reports.iter().filter(|r| !r.pass).count(), "failures")?;
        put(max_rel_error, reports.iter().map(|r| r.rel_error).fold(0.0, f64::max), "max_rel_error")
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mts_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
