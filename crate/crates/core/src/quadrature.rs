//! Adaptive Gauss–Kronrod (7/15) quadrature.

// Nodes and weights are kept at their published precision.
#![allow(clippy::excessive_precision)]

use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

// Gauss weights at XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum QuadratureError {
    #[error("tolerance not reached after {0} subdivisions (error estimate {1:e})")]
    NotConverged(usize, f64),
    #[error("integrand is not finite at {0}")]
    NonFinite(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            rel_tol: 1e-10,
            abs_tol: 0.0,
            max_intervals: 2000,
        }
    }
}

fn kronrod<F, E>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64), E>
where
    F: FnMut(f64) -> Result<f64, E>,
    E: From<QuadratureError>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    check(fc, c)?;
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let (f1, f2) = (f(c - x)?, f(c + x)?);
        check(f1, c - x)?;
        check(f2, c + x)?;
        k += WGK[i] * (f1 + f2);
        if i % 2 == 1 {
            g += WG[i / 2] * (f1 + f2);
        }
    }
    Ok((k * h, ((k - g) * h).abs()))
}

fn check(v: f64, x: f64) -> Result<(), QuadratureError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(QuadratureError::NonFinite(x))
    }
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrates `f` over `[a, b]`, always bisecting the piece with the largest
/// error estimate.
pub fn integrate<F, E>(mut f: F, a: f64, b: f64, opts: Options) -> Result<Estimate, E>
where
    F: FnMut(f64) -> Result<f64, E>,
    E: From<QuadratureError>,
{
    let (value, error) = kronrod(&mut f, a, b)?;
    let mut heap = BinaryHeap::from([Piece { a, b, value, error }]);
    let (mut total, mut err) = (value, error);
    while err > opts.abs_tol.max(opts.rel_tol * total.abs()) {
        if heap.len() >= opts.max_intervals {
            return Err(QuadratureError::NotConverged(heap.len(), err).into());
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = kronrod(&mut f, worst.a, mid)?;
        let (v2, e2) = kronrod(&mut f, mid, worst.b)?;
        heap.push(Piece { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, error: e2 });
        // Re-summing keeps rounding from accumulating over many updates.
        total = heap.iter().map(|p| p.value).sum();
        err = heap.iter().map(|p| p.error).sum();
    }
    Ok(Estimate { value: total, error: err })
}

/// Integrates over the whole real line with `x = tan u`.
pub fn integrate_real_line<F, E>(mut f: F, opts: Options) -> Result<Estimate, E>
where
    F: FnMut(f64) -> Result<f64, E>,
    E: From<QuadratureError>,
{
    integrate(
        |u: f64| {
            let c = u.cos();
            if c == 0.0 {
                return Ok(0.0);
            }
            Ok(f(u.tan())? / (c * c))
        },
        -FRAC_PI_2,
        FRAC_PI_2,
        opts,
    )
}
