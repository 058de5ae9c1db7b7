//! Continuous location obfuscation mechanisms.
//!
//! Three isotropic noise families are supported, each adding a random offset
//! `(r cos θ, r sin θ)` with `θ` uniform and a family-specific radius law:
//!
//! | family   | density `f(z\|x)`                 | mean loss    | radius quantile                      |
//! |----------|-----------------------------------|--------------|--------------------------------------|
//! | Laplace  | `ε²/2π · e^(-ε·r)`                | `2/ε`        | `-(W₋₁((p-1)/e) + 1)/ε`              |
//! | Gaussian | `1/(2πσ²) · e^(-r²/2σ²)`           | `σ·√(π/2)`   | `σ·√(-2 ln(1-p))`                    |
//! | Circular | `1/(πR²)` for `r ≤ R`, else `0`   | `2R/3`       | `R·√p`                               |
//!
//! Only the Laplace family satisfies geo-indistinguishability; the other two
//! are the comparison baselines. [`remap`] adds the deterministic
//! post-processing overlay that pulls a noisy output to the posterior
//! geometric median.

mod lambert;
pub mod remap;
mod rng;
mod spec;
pub mod weiszfeld;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{distance, PlanarPoint};
use crate::scalar::Scalar;

pub use lambert::lambert_w_minus1;
pub use remap::RemappedMechanism;
pub use rng::RandomStream;
pub use spec::{MechanismSpec, RemapSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MechanismError {
    #[error("DomainError: lambert W-1 is defined on [-1/e, 0), got {0}")]
    DomainError(f64),
    #[error("InvalidParameter: {0}")]
    InvalidParameter(String),
    #[error("InvalidUtility: target average loss must be positive and finite, got {0}")]
    InvalidUtility(f64),
    #[error("DegeneratePrior: posterior mass is numerically zero everywhere")]
    DegeneratePrior,
    #[error("InvalidPrior: {0}")]
    InvalidPrior(String),
}

/// The noise family, without its scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Laplace,
    Gaussian,
    Circular,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Laplace, Family::Gaussian, Family::Circular];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Laplace => "laplace",
            Family::Gaussian => "gaussian",
            Family::Circular => "circular",
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = MechanismError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "laplace" => Ok(Family::Laplace),
            "gaussian" => Ok(Family::Gaussian),
            "circular" => Ok(Family::Circular),
            other => Err(MechanismError::InvalidParameter(format!("unknown family '{other}'"))),
        }
    }
}

/// A noise mechanism with its scale. Scales are in meters, `epsilon` in inverse meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum MechanismParams<F> {
    Laplace { epsilon: F },
    Gaussian { sigma: F },
    Circular { radius: F },
}

impl<F: Scalar> MechanismParams<F> {
    pub fn laplace(epsilon: F) -> Result<Self, MechanismError> {
        Self::Laplace { epsilon }.validated()
    }

    pub fn gaussian(sigma: F) -> Result<Self, MechanismError> {
        Self::Gaussian { sigma }.validated()
    }

    pub fn circular(radius: F) -> Result<Self, MechanismError> {
        Self::Circular { radius }.validated()
    }

    pub fn with_scale(family: Family, scale: F) -> Result<Self, MechanismError> {
        match family {
            Family::Laplace => Self::laplace(scale),
            Family::Gaussian => Self::gaussian(scale),
            Family::Circular => Self::circular(scale),
        }
    }

    pub fn validated(self) -> Result<Self, MechanismError> {
        let s = self.scale();
        if s.is_finite() && s > F::zero() {
            Ok(self)
        } else {
            Err(MechanismError::InvalidParameter(format!(
                "{} scale must be positive and finite, got {}",
                self.family(),
                s
            )))
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Self::Laplace { .. } => Family::Laplace,
            Self::Gaussian { .. } => Family::Gaussian,
            Self::Circular { .. } => Family::Circular,
        }
    }

    /// The family's scale parameter: ε, σ or R.
    pub fn scale(&self) -> F {
        match *self {
            Self::Laplace { epsilon } => epsilon,
            Self::Gaussian { sigma } => sigma,
            Self::Circular { radius } => radius,
        }
    }

    /// Probability density of reporting `z` from true location `x`, per m².
    pub fn density(&self, z: &PlanarPoint<F>, x: &PlanarPoint<F>) -> F {
        let r = distance(z, x);
        let two_pi = F::TAU();
        match *self {
            Self::Laplace { epsilon } => epsilon * epsilon / two_pi * (-epsilon * r).exp(),
            Self::Gaussian { sigma } => {
                let s2 = sigma * sigma;
                (-(r * r) / (F::lit(2.0) * s2)).exp() / (two_pi * s2)
            }
            Self::Circular { radius } => {
                if r <= radius {
                    F::one() / (F::PI() * radius * radius)
                } else {
                    F::zero()
                }
            }
        }
    }

    /// Natural log of [`density`](Self::density); `-∞` outside the support.
    pub fn log_density(&self, z: &PlanarPoint<F>, x: &PlanarPoint<F>) -> F {
        let r = distance(z, x);
        let two_pi = F::TAU();
        match *self {
            Self::Laplace { epsilon } => F::lit(2.0) * epsilon.ln() - two_pi.ln() - epsilon * r,
            Self::Gaussian { sigma } => {
                let s2 = sigma * sigma;
                -(two_pi * s2).ln() - r * r / (F::lit(2.0) * s2)
            }
            Self::Circular { radius } => {
                if r <= radius {
                    -(F::PI() * radius * radius).ln()
                } else {
                    F::neg_infinity()
                }
            }
        }
    }

    /// `P(‖z - x‖ ≤ r)`.
    pub fn radial_cdf(&self, r: F) -> F {
        if r <= F::zero() {
            return F::zero();
        }
        match *self {
            Self::Laplace { epsilon } => {
                let t = epsilon * r;
                F::one() - (F::one() + t) * (-t).exp()
            }
            Self::Gaussian { sigma } => F::one() - (-(r * r) / (F::lit(2.0) * sigma * sigma)).exp(),
            Self::Circular { radius } => (r / radius).powi(2).min(F::one()),
        }
    }

    /// Inverse of [`radial_cdf`](Self::radial_cdf) for `p ∈ [0, 1)`.
    pub fn radial_quantile(&self, p: F) -> Result<F, MechanismError> {
        if !(p >= F::zero() && p < F::one()) {
            return Err(MechanismError::InvalidParameter(format!(
                "quantile level must be in [0, 1), got {p}"
            )));
        }
        Ok(match *self {
            Self::Laplace { epsilon } => {
                let w = lambert_w_minus1((p - F::one()) / F::E())?;
                (-(w + F::one()) / epsilon).max(F::zero())
            }
            Self::Gaussian { sigma } => sigma * (-F::lit(2.0) * (-p).ln_1p()).sqrt(),
            Self::Circular { radius } => radius * p.sqrt(),
        })
    }

    /// Draws an obfuscated location around `x`. Consumes two uniforms from
    /// `rnd`: the radial level first, then the angle.
    pub fn sample(&self, x: &PlanarPoint<F>, rnd: &mut RandomStream) -> PlanarPoint<F> {
        let p = F::lit(rnd.uniform());
        let theta = F::lit(rnd.uniform()) * F::TAU();
        let r = self
            .radial_quantile(p)
            .expect("uniform draws lie in [0, 1)");
        x.offset_polar(r, theta)
    }

    /// Expected distance between the true and the reported location.
    pub fn analytic_qavg(&self) -> F {
        match *self {
            Self::Laplace { epsilon } => F::lit(2.0) / epsilon,
            Self::Gaussian { sigma } => sigma * F::FRAC_PI_2().sqrt(),
            Self::Circular { radius } => F::lit(2.0) * radius / F::lit(3.0),
        }
    }

    /// Radius of the disc around the true location holding the output with probability 0.95.
    pub fn analytic_r95(&self) -> F {
        self.radial_quantile(F::lit(0.95))
            .expect("0.95 lies in the quantile domain")
    }

    /// Parameters of `family` whose [`analytic_qavg`](Self::analytic_qavg) equals `qavg`.
    pub fn calibrate_to_qavg(family: Family, qavg: F) -> Result<Self, MechanismError> {
        if !(qavg.is_finite() && qavg > F::zero()) {
            return Err(MechanismError::InvalidUtility(qavg.as_f64()));
        }
        match family {
            Family::Laplace => Self::laplace(F::lit(2.0) / qavg),
            Family::Gaussian => Self::gaussian(qavg * F::FRAC_2_PI().sqrt()),
            Family::Circular => Self::circular(F::lit(1.5) * qavg),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KM: f64 = 1000.0;

    fn origin() -> PlanarPoint<f64> {
        PlanarPoint::origin()
    }

    /// Bisection on a monotone radial CDF.
    fn bisect_quantile(cdf: impl Fn(f64) -> f64, p: f64, hi: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, hi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn laplace_quantile_examples() {
        let m = MechanismParams::laplace(2.0 / KM).unwrap();
        assert_eq!(m.radial_quantile(0.0).unwrap(), 0.0);
        let eps = 2.0 / KM;
        let oracle = bisect_quantile(|r| 1.0 - (1.0 + eps * r) * (-eps * r).exp(), 0.95, 1e6);
        let r = m.radial_quantile(0.95).unwrap();
        assert!((r - oracle).abs() < 1e-6);
        assert!((r - 2372.0).abs() < 1.0, "{r}");
    }

    #[test]
    fn circular_quantile_example() {
        let m = MechanismParams::circular(750.0).unwrap();
        assert_eq!(m.radial_quantile(0.25).unwrap(), 375.0);
    }

    #[test]
    fn zero_level_sample_is_identity() {
        let m = MechanismParams::laplace(0.004).unwrap();
        let x = PlanarPoint::new(12.0, -3.0);
        let r = m.radial_quantile(0.0).unwrap();
        assert_eq!(x.offset_polar(r, 1.234), x);
    }

    #[test]
    fn density_examples() {
        let lap = MechanismParams::laplace(0.002).unwrap();
        let d = lap.density(&origin(), &origin());
        assert!((d - 6.366e-7).abs() < 1e-10);
        assert_eq!(d, 0.002 * 0.002 / (2.0 * std::f64::consts::PI));

        let circ = MechanismParams::circular(750.0).unwrap();
        assert_eq!(circ.density(&PlanarPoint::new(800.0, 0.0), &origin()), 0.0);

        let sigma = 398.94;
        let g = MechanismParams::gaussian(sigma).unwrap();
        let v = g.density(&PlanarPoint::new(0.0, sigma), &origin());
        let expected = (-0.5f64).exp() / (2.0 * std::f64::consts::PI * sigma * sigma);
        assert!(((v - expected) / expected).abs() < 1e-12);
    }

    #[test]
    fn gaussian_density_matches_integrated_cdf() {
        // d/dr of the radial CDF equals 2πr·f(r)
        let g = MechanismParams::gaussian(398.94).unwrap();
        for r in [50.0, 398.94, 900.0] {
            let h = 1e-3;
            let slope = (g.radial_cdf(r + h) - g.radial_cdf(r - h)) / (2.0 * h);
            let f = g.density(&PlanarPoint::new(r, 0.0), &origin());
            assert!(((slope - 2.0 * std::f64::consts::PI * r * f) / slope).abs() < 1e-6);
        }
    }

    #[test]
    fn log_density_agrees_with_density() {
        let z = PlanarPoint::new(310.0, -120.0);
        for m in [
            MechanismParams::laplace(0.004).unwrap(),
            MechanismParams::gaussian(400.0).unwrap(),
            MechanismParams::circular(750.0).unwrap(),
        ] {
            let a = m.density(&z, &origin()).ln();
            let b = m.log_density(&z, &origin());
            assert!((a - b).abs() < 1e-12);
        }
        let c = MechanismParams::circular(10.0).unwrap();
        assert_eq!(c.log_density(&z, &origin()), f64::NEG_INFINITY);
    }

    #[test]
    fn analytic_and_calibration_examples() {
        let lap = MechanismParams::laplace(2.0 / KM).unwrap();
        assert!((lap.analytic_qavg() - 1000.0).abs() < 1e-9);

        let g = MechanismParams::<f64>::calibrate_to_qavg(Family::Gaussian, 500.0).unwrap();
        assert!((g.scale() - 398.94).abs() < 0.01);
        assert!((g.analytic_qavg() - 500.0).abs() < 1e-9);

        let c = MechanismParams::<f64>::calibrate_to_qavg(Family::Circular, 500.0).unwrap();
        assert_eq!(c.scale(), 750.0);
        assert_eq!(c.analytic_qavg(), 500.0);

        let l = MechanismParams::<f64>::calibrate_to_qavg(Family::Laplace, 500.0).unwrap();
        assert!((l.scale() * KM - 4.0).abs() < 1e-12);

        assert!(matches!(
            MechanismParams::<f64>::calibrate_to_qavg(Family::Laplace, 0.0),
            Err(MechanismError::InvalidUtility(_))
        ));
        assert!(MechanismParams::<f64>::calibrate_to_qavg(Family::Gaussian, -3.0).is_err());
    }

    #[test]
    fn calibration_round_trip_is_exact_on_simple_values() {
        for q in [100.0, 250.0, 500.0, 1000.0, 2000.0] {
            for f in Family::ALL {
                let m = MechanismParams::<f64>::calibrate_to_qavg(f, q).unwrap();
                assert!(((m.analytic_qavg() - q) / q).abs() <= 2.0 * f64::EPSILON, "{f} {q}");
            }
        }
    }

    #[test]
    fn r95_examples() {
        let r = |f| {
            MechanismParams::<f64>::calibrate_to_qavg(f, 1000.0)
                .unwrap()
                .analytic_r95()
        };
        assert!((r(Family::Laplace) - 2372.0).abs() < 1.0);
        assert!((r(Family::Gaussian) - 1953.0).abs() < 1.0);
        assert!((r(Family::Circular) - 1462.0).abs() < 1.0);
    }

    #[test]
    fn invalid_scales_rejected() {
        assert!(MechanismParams::laplace(0.0f64).is_err());
        assert!(MechanismParams::gaussian(f64::INFINITY).is_err());
        assert!(MechanismParams::circular(-1.0f64).is_err());
    }

    #[test]
    fn laplace_is_geo_indistinguishable_on_random_triples() {
        let eps = 0.003;
        let m = MechanismParams::laplace(eps).unwrap();
        let mut s = RandomStream::new(9, 0);
        for _ in 0..10_000 {
            let mut pt = || PlanarPoint::new(s.uniform() * 4000.0 - 2000.0, s.uniform() * 4000.0 - 2000.0);
            let (x, xp, z) = (pt(), pt(), pt());
            let lhs = (m.density(&z, &x) / m.density(&z, &xp)).ln().abs();
            assert!(lhs <= eps * distance(&x, &xp) + 1e-9);
        }
    }

    #[test]
    fn generic_over_f32() {
        let m = MechanismParams::<f32>::calibrate_to_qavg(Family::Laplace, 1000.0).unwrap();
        assert!((m.analytic_r95() - 2372.0).abs() < 2.0);
        let mut s = RandomStream::new(1, 2);
        let z = m.sample(&PlanarPoint::origin(), &mut s);
        assert!(z.is_finite());
    }

    #[test]
    fn family_parsing() {
        assert_eq!("Gaussian".parse::<Family>().unwrap(), Family::Gaussian);
        assert!("cauchy".parse::<Family>().is_err());
    }
}
