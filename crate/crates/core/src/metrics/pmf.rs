use std::cmp::Ordering;
use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::geo::PlanarPoint;
use crate::scalar::Scalar;

use super::MetricsError;

/// Keys a [`Pmf`] can be supported on. Only needed to detect duplicates.
pub trait SupportKey: Clone + Debug {
    fn key_cmp(&self, other: &Self) -> Ordering;
}

impl SupportKey for usize {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }
}

impl<F: Scalar> SupportKey for PlanarPoint<F> {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.x
            .partial_cmp(&other.x)
            .unwrap_or(Ordering::Equal)
            .then(self.y.partial_cmp(&other.y).unwrap_or(Ordering::Equal))
    }
}

/// A finite probability mass function. Support order is preserved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pmf<K, F> {
    support: Vec<(K, F)>,
}

impl<K: SupportKey, F: Scalar> Pmf<K, F> {
    pub fn new(support: Vec<(K, F)>) -> Result<Self, MetricsError> {
        if support.is_empty() {
            return Err(MetricsError::InvalidPmf("empty support".into()));
        }
        let mut total = F::zero();
        for (k, m) in &support {
            if !(m.is_finite() && *m >= F::zero()) {
                return Err(MetricsError::InvalidPmf(format!("mass {m} at {k:?}")));
            }
            total = total + *m;
        }
        if (total - F::one()).abs() > F::MASS_TOLERANCE {
            return Err(MetricsError::InvalidPmf(format!("masses sum to {total}")));
        }
        let mut order: Vec<usize> = (0..support.len()).collect();
        order.sort_by(|&a, &b| support[a].0.key_cmp(&support[b].0));
        if order
            .windows(2)
            .any(|w| support[w[0]].0.key_cmp(&support[w[1]].0) == Ordering::Equal)
        {
            return Err(MetricsError::InvalidPmf("duplicate support entries".into()));
        }
        Ok(Self { support })
    }

    /// Normalizes nonnegative weights into a pmf.
    pub fn from_weights(entries: Vec<(K, F)>) -> Result<Self, MetricsError> {
        let total = entries.iter().fold(F::zero(), |a, (_, w)| a + *w);
        if !(total > F::zero() && total.is_finite()) {
            return Err(MetricsError::InvalidPmf(format!("weights sum to {total}")));
        }
        Self::new(entries.into_iter().map(|(k, w)| (k, w / total)).collect())
    }

    pub fn uniform(keys: Vec<K>) -> Result<Self, MetricsError> {
        let n = F::from_usize(keys.len()).unwrap();
        Self::new(keys.into_iter().map(|k| (k, F::one() / n)).collect())
    }

    pub fn point_mass(key: K) -> Self {
        Self {
            support: vec![(key, F::one())],
        }
    }

    pub fn support(&self) -> &[(K, F)] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &K> {
        self.support.iter().map(|(k, _)| k)
    }

    pub fn masses(&self) -> Vec<F> {
        self.support.iter().map(|(_, m)| *m).collect()
    }

    /// Entries with strictly positive mass.
    pub fn positive(&self) -> impl Iterator<Item = &(K, F)> {
        self.support.iter().filter(|(_, m)| *m > F::zero())
    }

    /// Multiplicative distance to `other`, which must list the same keys in the same order.
    pub fn multiplicative_distance(&self, other: &Self) -> Result<F, MetricsError> {
        if self.len() != other.len()
            || self
                .keys()
                .zip(other.keys())
                .any(|(a, b)| a.key_cmp(b) != Ordering::Equal)
        {
            return Err(MetricsError::SupportMismatch);
        }
        super::multiplicative_distance(&self.masses(), &other.masses())
    }
}
