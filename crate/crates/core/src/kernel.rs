//! The Bose–Einstein kernel `nbe(z) = 1/(e^{2πz} - 1)`.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("kernel argument is zero")]
pub struct ZeroArgument;

/// `1/(e^{2πz} - 1)`, evaluated without overflow for any finite `z`.
///
/// Large positive arguments underflow cleanly to zero. Negative arguments go
/// through `nbe(z) = -1 - nbe(-z)`.
pub fn nbe(z: f64) -> Result<f64, ZeroArgument> {
    if z == 0.0 {
        return Err(ZeroArgument);
    }
    if z > 0.0 {
        Ok(1.0 / (2.0 * PI * z).exp_m1())
    } else {
        Ok(-1.0 - 1.0 / (-2.0 * PI * z).exp_m1())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_at_one() {
        let v = nbe(1.0).unwrap();
        let expected = 1.0 / ((2.0 * PI).exp() - 1.0);
        assert!((v - expected).abs() < 1e-18);
        assert!((v - 1.8709365986606446e-3).abs() < 1e-15);
    }

    #[test]
    fn reflection_identity() {
        for z in [0.25, 1.0, 3.0] {
            assert!((nbe(z).unwrap() + nbe(-z).unwrap() + 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn large_arguments_do_not_overflow() {
        assert!(nbe(50.0).unwrap() < 1e-130);
        assert!(nbe(100.0).unwrap().is_finite());
        assert_eq!(nbe(-100.0).unwrap(), -1.0);
        assert!(nbe(1e6).unwrap() == 0.0);
    }

    #[test]
    fn sign_decomposition() {
        // nbe(q) = -θ(-q) + sign(q) nbe(|q|)
        for q in [0.3f64, -0.3, 2.7, -2.7] {
            let theta = if q < 0.0 { 1.0 } else { 0.0 };
            let rhs = -theta + q.signum() * nbe(q.abs()).unwrap();
            assert!((nbe(q).unwrap() - rhs).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_is_rejected() {
        assert_eq!(nbe(0.0), Err(ZeroArgument));
    }

    #[test]
    fn matches_coth_form() {
        for z in [0.1, 0.3, 0.7, 1.3, -0.4, -2.2] {
            let coth = 1.0 / (PI * z).tanh();
            let reference = 0.5 * (coth - 1.0);
            let v = nbe(z).unwrap();
            assert!((v - reference).abs() <= 1e-13 * reference.abs().max(1.0), "z={z}");
        }
    }
}
