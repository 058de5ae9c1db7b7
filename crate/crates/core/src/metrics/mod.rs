//! Privacy metrics: multiplicative distance, the geo-indistinguishability
//! bound, Bayesian posteriors, and the decision adversary's error.
//!
//! The decision adversary knows the user is at `x` or `x′` with probability
//! one half each. Observing `z`, it picks the location with the larger
//! likelihood and errs with probability
//!
//! ```text
//! Perr = min(f(z|x), f(z|x′)) / (f(z|x) + f(z|x′))
//! ```
//!
//! A mechanism is ε-geo-indistinguishable exactly when every such error is
//! at least `1 / (1 + e^(ε·d(x, x′)))`.

mod discrete;
mod pmf;

use thiserror::Error;

use crate::geo::{distance, PlanarPoint};
use crate::scalar::Scalar;

pub use discrete::DiscreteMechanism;
pub use pmf::{Pmf, SupportKey};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("SupportMismatch: distributions are not on the same support")]
    SupportMismatch,
    #[error("BothZero: both densities are zero")]
    BothZero,
    #[error("ZeroEvidence: output {0} has zero probability under the prior")]
    ZeroEvidence(usize),
    #[error("InvalidPmf: {0}")]
    InvalidPmf(String),
    #[error("InvalidMechanism: {0}")]
    InvalidMechanism(String),
    #[error("InvalidArgument: {0}")]
    InvalidArgument(String),
    #[error("Csv: {0}")]
    Csv(String),
}

#[inline]
fn is_zero<F: Scalar>(v: F) -> bool {
    v <= F::ZERO_FLOOR
}

/// `sup |ln(a/b)|` over aligned slices, with `0` for zero/zero pairs and `∞`
/// for one-sided zeros. Values at or below [`Scalar::ZERO_FLOOR`] count as zero.
pub fn multiplicative_distance<F: Scalar>(a: &[F], b: &[F]) -> Result<F, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::SupportMismatch);
    }
    let mut sup = F::zero();
    for (&p, &q) in a.iter().zip(b) {
        let term = match (is_zero(p), is_zero(q)) {
            (true, true) => F::zero(),
            (true, false) | (false, true) => return Ok(F::infinity()),
            (false, false) => (p.ln() - q.ln()).abs(),
        };
        sup = sup.max(term);
    }
    Ok(sup)
}

/// Privacy level `ε·d` guaranteed between two points `d` meters apart.
pub fn epsilon_star<F: Scalar>(epsilon: F, d: F) -> F {
    epsilon * d
}

/// Guaranteed floor on the decision adversary's error: `1 / (1 + e^(ε·d))`.
pub fn perr_min<F: Scalar>(epsilon: F, d: F) -> F {
    F::one() / (F::one() + (epsilon * d).exp())
}

/// The ε for which [`perr_min`] at distance `d` equals `target ∈ (0, 0.5)`.
pub fn epsilon_for_perr_min<F: Scalar>(target: F, d: F) -> Result<F, MetricsError> {
    if !(target > F::zero() && target < F::lit(0.5)) || !(d > F::zero() && d.is_finite()) {
        return Err(MetricsError::InvalidArgument(format!(
            "need 0 < target < 0.5 and d > 0, got target={target}, d={d}"
        )));
    }
    Ok((F::one() / target - F::one()).ln() / d)
}

/// Error of the optimal decision between two equiprobable locations, given
/// the likelihoods of the observation under each.
pub fn perr<F: Scalar>(f_zx: F, f_zx_prime: F) -> Result<F, MetricsError> {
    if !(f_zx >= F::zero() && f_zx_prime >= F::zero()) {
        return Err(MetricsError::InvalidArgument("densities must be nonnegative".into()));
    }
    match (is_zero(f_zx), is_zero(f_zx_prime)) {
        (true, true) => Err(MetricsError::BothZero),
        (true, false) | (false, true) => Ok(F::zero()),
        (false, false) => Ok(f_zx.min(f_zx_prime) / (f_zx + f_zx_prime)),
    }
}

/// [`perr`] from log-likelihoods; `-∞` marks a zero density.
pub fn perr_from_log<F: Scalar>(log_f: F, log_f_prime: F) -> Result<F, MetricsError> {
    match (log_f == F::neg_infinity(), log_f_prime == F::neg_infinity()) {
        (true, true) => Err(MetricsError::BothZero),
        (true, false) | (false, true) => Ok(F::zero()),
        (false, false) => Ok(F::one() / (F::one() + (log_f - log_f_prime).abs().exp())),
    }
}

/// Bayesian update of a prior over mechanism inputs after observing output `z`.
pub fn posterior<F: Scalar>(
    prior: &Pmf<usize, F>,
    mech: &DiscreteMechanism<F>,
    z: usize,
) -> Result<Pmf<usize, F>, MetricsError> {
    if z >= mech.outputs().len() {
        return Err(MetricsError::InvalidArgument(format!("output index {z} out of range")));
    }
    let mut joint = Vec::with_capacity(prior.len());
    let mut evidence = F::zero();
    for &(k, m) in prior.support() {
        if k >= mech.inputs().len() {
            return Err(MetricsError::InvalidArgument(format!("prior key {k} is not a mechanism input")));
        }
        let v = mech.prob(k, z) * m;
        evidence = evidence + v;
        joint.push((k, v));
    }
    if !(evidence > F::zero()) {
        return Err(MetricsError::ZeroEvidence(z));
    }
    Pmf::new(joint.into_iter().map(|(k, v)| (k, v / evidence)).collect())
}

fn diameter<F: Scalar>(pts: &[PlanarPoint<F>]) -> F {
    let mut best = F::zero();
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            best = best.max(distance(a, b));
        }
    }
    best
}

/// Largest distance between two locations with positive prior mass.
pub fn prior_diameter<F: Scalar>(prior: &Pmf<PlanarPoint<F>, F>) -> F {
    let pts: Vec<_> = prior.positive().map(|(p, _)| *p).collect();
    diameter(&pts)
}

/// [`prior_diameter`] for a prior over mechanism input indices.
pub fn prior_diameter_indexed<F: Scalar>(prior: &Pmf<usize, F>, mech: &DiscreteMechanism<F>) -> F {
    let pts: Vec<_> = prior.positive().map(|&(k, _)| mech.inputs()[k]).collect();
    diameter(&pts)
}

fn check_pairwise<F: Scalar>(mech: &DiscreteMechanism<F>) -> Result<(), MetricsError> {
    let xs = mech.inputs();
    if xs.len() < 2 {
        return Err(MetricsError::InvalidMechanism("need at least two inputs".into()));
    }
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            if !(distance(&xs[i], &xs[j]) > F::zero()) {
                return Err(MetricsError::InvalidMechanism(format!("inputs {i} and {j} coincide")));
            }
        }
    }
    Ok(())
}

/// Smallest ε for which the mechanism is ε-geo-indistinguishable (`∞` if none).
pub fn tightest_epsilon<F: Scalar>(mech: &DiscreteMechanism<F>) -> Result<F, MetricsError> {
    check_pairwise(mech)?;
    let xs = mech.inputs();
    let mut eps = F::zero();
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            let dm = multiplicative_distance(mech.row(i), mech.row(j))?;
            eps = eps.max(dm / distance(&xs[i], &xs[j]));
        }
    }
    Ok(eps)
}

/// Input pair and output that realize [`tightest_epsilon`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonWitness<F> {
    pub input_a: usize,
    pub input_b: usize,
    pub output: usize,
    pub distance: F,
    /// `|ln f(z|a) - ln f(z|b)|`, `∞` when only one side can produce `z`.
    pub log_ratio: F,
    pub epsilon: F,
}

/// [`tightest_epsilon`] with the pair and output attaining it. `None` when
/// every row is identical.
pub fn tightest_epsilon_witness<F: Scalar>(mech: &DiscreteMechanism<F>) -> Result<Option<EpsilonWitness<F>>, MetricsError> {
    check_pairwise(mech)?;
    let xs = mech.inputs();
    let mut best: Option<EpsilonWitness<F>> = None;
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            let d = distance(&xs[i], &xs[j]);
            for z in 0..mech.outputs().len() {
                let lr = multiplicative_distance(&[mech.prob(i, z)], &[mech.prob(j, z)])?;
                let eps = lr / d;
                if eps > F::zero() && best.is_none_or(|b| eps > b.epsilon) {
                    best = Some(EpsilonWitness {
                        input_a: i,
                        input_b: j,
                        output: z,
                        distance: d,
                        log_ratio: lr,
                        epsilon: eps,
                    });
                }
            }
        }
    }
    Ok(best)
}

/// Checks `dM(f(·|x), f(·|x′)) ≤ ε·d(x, x′)` for every input pair.
pub fn satisfies_geo_ind<F: Scalar>(mech: &DiscreteMechanism<F>, epsilon: F) -> Result<bool, MetricsError> {
    check_pairwise(mech)?;
    let xs = mech.inputs();
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            let dm = multiplicative_distance(mech.row(i), mech.row(j))?;
            if dm > epsilon * distance(&xs[i], &xs[j]) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Checks `Perr(x, x′, z) ≥ Perrmin` for every input pair and every output
/// that is possible under at least one of the two inputs.
pub fn satisfies_perr_floor<F: Scalar>(mech: &DiscreteMechanism<F>, epsilon: F) -> Result<bool, MetricsError> {
    check_pairwise(mech)?;
    let xs = mech.inputs();
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            let floor = perr_min(epsilon, distance(&xs[i], &xs[j]));
            for z in 0..mech.outputs().len() {
                match perr(mech.prob(i, z), mech.prob(j, z)) {
                    Ok(p) if p < floor => return Ok(false),
                    Ok(_) | Err(MetricsError::BothZero) => {}
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok(true)
}

/// Result of checking `dM(p(·|z), π) ≤ ε·d(π)` over all outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorBoundReport<F> {
    pub holds: bool,
    /// `ε·d(π)`.
    pub bound: F,
    /// Output with the smallest slack `bound - dM`, and that slack.
    pub worst: Option<(usize, F)>,
    pub checked_outputs: usize,
    /// Outputs impossible under the prior.
    pub skipped_outputs: usize,
}

/// Verifies the prior/posterior similarity bound implied by ε-geo-indistinguishability.
///
/// Distributions are compared on the prior's positive support only.
pub fn posterior_bound_holds<F: Scalar>(
    prior: &Pmf<usize, F>,
    mech: &DiscreteMechanism<F>,
    epsilon: F,
) -> Result<PosteriorBoundReport<F>, MetricsError> {
    let bound = epsilon * prior_diameter_indexed(prior, mech);
    let slack = F::lit(1e-9);
    let keep: Vec<usize> = prior
        .support()
        .iter()
        .enumerate()
        .filter(|(_, (_, m))| *m > F::zero())
        .map(|(i, _)| i)
        .collect();
    let prior_masses: Vec<F> = keep.iter().map(|&i| prior.support()[i].1).collect();

    let mut report = PosteriorBoundReport {
        holds: true,
        bound,
        worst: None,
        checked_outputs: 0,
        skipped_outputs: 0,
    };
    for z in 0..mech.outputs().len() {
        let post = match posterior(prior, mech, z) {
            Ok(p) => p,
            Err(MetricsError::ZeroEvidence(_)) => {
                report.skipped_outputs += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let post_masses: Vec<F> = keep.iter().map(|&i| post.support()[i].1).collect();
        let dm = multiplicative_distance(&post_masses, &prior_masses)?;
        let gap = bound - dm;
        report.checked_outputs += 1;
        if dm > bound + slack {
            report.holds = false;
        }
        if report.worst.is_none_or(|(_, g)| gap < g) {
            report.worst = Some((z, gap));
        }
    }
    Ok(report)
}
