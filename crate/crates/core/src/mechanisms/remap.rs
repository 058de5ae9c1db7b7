//! Optimal remapping of a noisy location.
//!
//! A remapped mechanism first draws `z′` from its base mechanism and then
//! reports the point minimizing the expected distance to the true location
//! under the posterior `p(c | z′) ∝ f(z′ | c)·π(c)` over prior cells `c`.
//! That point is the posterior-weighted geometric median of the cell
//! centers. The output depends on `z′` and the prior only, so the base
//! mechanism's privacy guarantee carries over unchanged.

use crate::geo::{Grid, PlanarPoint};
use crate::metrics::Pmf;
use crate::scalar::Scalar;

use super::weiszfeld::{geometric_median, WeiszfeldOptions};
use super::{MechanismError, MechanismParams, RandomStream};

/// Posterior weights below this fraction of the largest one are dropped
/// before the median search.
const RELATIVE_WEIGHT_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct RemappedMechanism<F> {
    base: MechanismParams<F>,
    grid: Grid<F>,
    prior: Pmf<usize, F>,
    options: WeiszfeldOptions<F>,
    centers: Vec<PlanarPoint<F>>,
    log_prior: Vec<F>,
}

impl<F: Scalar> RemappedMechanism<F> {
    /// `prior` is a pmf over cell indices of `grid`.
    pub fn new(
        base: MechanismParams<F>,
        grid: Grid<F>,
        prior: Pmf<usize, F>,
        options: WeiszfeldOptions<F>,
    ) -> Result<Self, MechanismError> {
        let base = base.validated()?;
        if !(options.tolerance >= F::zero() && options.tolerance.is_finite()) {
            return Err(MechanismError::InvalidParameter("tolerance must be finite and nonnegative".into()));
        }
        let mut centers = Vec::new();
        let mut log_prior = Vec::new();
        for &(cell, mass) in prior.positive() {
            let c = grid
                .cell_center(cell)
                .map_err(|e| MechanismError::InvalidPrior(e.to_string()))?;
            centers.push(c);
            log_prior.push(mass.ln());
        }
        if centers.is_empty() {
            return Err(MechanismError::InvalidPrior("no cell has positive mass".into()));
        }
        Ok(Self {
            base,
            grid,
            prior,
            options,
            centers,
            log_prior,
        })
    }

    pub fn base(&self) -> &MechanismParams<F> {
        &self.base
    }

    pub fn grid(&self) -> &Grid<F> {
        &self.grid
    }

    pub fn prior(&self) -> &Pmf<usize, F> {
        &self.prior
    }

    pub fn options(&self) -> &WeiszfeldOptions<F> {
        &self.options
    }

    /// Posterior over positive-mass cells given `z′`, as (center, unnormalized weight)
    /// pairs scaled so the largest weight is one.
    pub fn posterior_weights(&self, z_prime: &PlanarPoint<F>) -> Result<(Vec<PlanarPoint<F>>, Vec<F>), MechanismError> {
        if !z_prime.is_finite() {
            return Err(MechanismError::DegeneratePrior);
        }
        let logs: Vec<F> = self
            .centers
            .iter()
            .zip(&self.log_prior)
            .map(|(c, &lp)| self.base.log_density(z_prime, c) + lp)
            .collect();
        let top = logs.iter().cloned().fold(F::neg_infinity(), F::max);
        if !top.is_finite() {
            return Err(MechanismError::DegeneratePrior);
        }
        let cutoff = F::lit(RELATIVE_WEIGHT_CUTOFF);
        let mut pts = Vec::new();
        let mut ws = Vec::new();
        for (c, &l) in self.centers.iter().zip(&logs) {
            let w = (l - top).exp();
            if w >= cutoff {
                pts.push(*c);
                ws.push(w);
            }
        }
        Ok((pts, ws))
    }

    /// Maps an intermediate location `z′` to the posterior geometric median.
    pub fn remap(&self, z_prime: &PlanarPoint<F>) -> Result<PlanarPoint<F>, MechanismError> {
        let (pts, ws) = self.posterior_weights(z_prime)?;
        Ok(geometric_median(&pts, &ws, &self.options)?.point)
    }

    /// Draws `z′` from the base mechanism and remaps it. Falls back to `z′`
    /// when the posterior is degenerate.
    pub fn sample(&self, x: &PlanarPoint<F>, rnd: &mut RandomStream) -> PlanarPoint<F> {
        let z_prime = self.base.sample(x, rnd);
        self.remap(&z_prime).unwrap_or(z_prime)
    }
}
