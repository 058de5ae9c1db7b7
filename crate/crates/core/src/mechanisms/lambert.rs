//! Lower branch of the Lambert W function.
//!
//! `W₋₁(y)` is the solution `w ≤ -1` of `w·eʷ = y` for `y ∈ [-1/e, 0)`. The
//! planar Laplace radial CDF `1 - (1 + εr)e^(-εr)` inverts through it.
//!
//! The initial guess is the branch-point series near `-1/e` and the
//! asymptotic logarithmic expansion elsewhere; Halley's iteration then
//! refines it to working precision.

use crate::scalar::Scalar;

use super::MechanismError;

const MAX_HALLEY_STEPS: usize = 64;

/// Evaluates `W₋₁(y)`.
pub fn lambert_w_minus1<F: Scalar>(y: F) -> Result<F, MechanismError> {
    let e = F::E();
    let branch = -F::one() / e;
    let slack = F::lit(8.0) * F::epsilon();
    if !y.is_finite() || y >= F::zero() || y < branch - slack {
        return Err(MechanismError::DomainError(y.as_f64()));
    }

    // q = 1 + e·y is the distance to the branch point
    let q = F::one() + e * y;
    if q <= slack {
        return Ok(-F::one());
    }
    let p = -(F::lit(2.0) * q).sqrt();
    if p.abs() < F::lit(1e-3) {
        return Ok(branch_series(p));
    }

    let mut w = if y < F::lit(-0.25) {
        branch_series(p)
    } else {
        let l1 = (-y).ln();
        let l2 = (-l1).ln();
        l1 - l2 + l2 / l1
    };

    for _ in 0..MAX_HALLEY_STEPS {
        let ew = w.exp();
        let f = w * ew - y;
        let wp1 = w + F::one();
        let denom = ew * wp1 - (w + F::lit(2.0)) * f / (F::lit(2.0) * wp1);
        if denom == F::zero() || !denom.is_finite() {
            break;
        }
        let step = f / denom;
        let next = (w - step).min(-F::one());
        let done = (next - w).abs() <= F::lit(4.0) * F::epsilon() * w.abs();
        w = next;
        if done {
            break;
        }
    }
    Ok(w)
}

/// Series of `W₋₁` about the branch point in `p = -√(2(1 + e·y))`.
fn branch_series<F: Scalar>(p: F) -> F {
    const COEFFS: [f64; 7] = [
        -1.0,
        1.0,
        -1.0 / 3.0,
        11.0 / 72.0,
        -43.0 / 540.0,
        769.0 / 17280.0,
        -221.0 / 8505.0,
    ];
    COEFFS
        .iter()
        .rev()
        .fold(F::zero(), |acc, &c| acc * p + F::lit(c))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Bisection on `w·eʷ = y` over `[-50, -1]`.
    fn bisect(y: f64) -> f64 {
        let (mut lo, mut hi) = (-50.0f64, -1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            // w·eʷ is decreasing on (-∞, -1]
            if mid * mid.exp() > y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn branch_point() {
        let y = -1.0 / std::f64::consts::E;
        assert_eq!(lambert_w_minus1(y).unwrap(), -1.0);
    }

    #[test]
    fn matches_bisection_oracle() {
        let w = lambert_w_minus1(-0.05f64).unwrap();
        assert!((w - bisect(-0.05)).abs() < 1e-10);
        assert!((w - (-4.4998)).abs() < 1e-4);
        assert!((w * w.exp() + 0.05).abs() <= 1e-12);

        let y = -1e-6;
        let w = lambert_w_minus1(y).unwrap();
        assert!((w - bisect(y)).abs() < 1e-9);
        assert!(((w * w.exp() - y) / y).abs() <= 1e-12);
    }

    #[test]
    fn residuals_across_domain() {
        let branch = -1.0 / std::f64::consts::E;
        for k in 1..2000 {
            let t = k as f64 / 2000.0;
            let y = branch * t.powi(3);
            let w = lambert_w_minus1(y).unwrap();
            assert!(w <= -1.0);
            let r = w * w.exp() - y;
            assert!(r.abs() <= 1e-12 || (r / y).abs() <= 1e-12, "y={y} w={w} r={r}");
        }
        for y in [branch + 1e-16, branch + 1e-12, branch + 1e-7, branch + 1e-4, -1e-300, -1e-100] {
            let w = lambert_w_minus1(y).unwrap();
            let r = w * w.exp() - y;
            assert!(r.abs() <= 1e-12 || (r / y).abs() <= 1e-12, "y={y} w={w} r={r}");
        }
    }

    #[test]
    fn domain_errors() {
        assert!(lambert_w_minus1(0.0f64).is_err());
        assert!(lambert_w_minus1(0.1f64).is_err());
        assert!(lambert_w_minus1(-0.4f64).is_err());
        assert!(lambert_w_minus1(f64::NAN).is_err());
    }

    #[test]
    fn single_precision() {
        let w = lambert_w_minus1(-0.05f32).unwrap();
        assert!((w as f64 - bisect(-0.05)).abs() < 1e-5);
    }
}
