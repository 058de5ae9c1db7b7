//! JSON description of a mechanism, as read and written by the command line.
//!
//! ```json
//! {"family":"laplace","scale_m_or_inv_km":4.0,
//!  "remap":{"grid":{...},"prior_path":"prior.csv","tolerance_m":0.001,"max_iters":200}}
//! ```
//!
//! The scale is ε in inverse kilometers for Laplace, σ in meters for
//! Gaussian and the radius in meters for Circular.

use serde::{Deserialize, Serialize};

use crate::geo::Grid;

use super::{Family, MechanismError, MechanismParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemapSpec {
    pub grid: Grid<f64>,
    pub prior_path: String,
    pub tolerance_m: f64,
    pub max_iters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismSpec {
    pub family: Family,
    pub scale_m_or_inv_km: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remap: Option<RemapSpec>,
}

impl MechanismSpec {
    pub fn from_params(params: &MechanismParams<f64>) -> Self {
        let scale = match params {
            MechanismParams::Laplace { epsilon } => epsilon * 1000.0,
            other => other.scale(),
        };
        Self {
            family: params.family(),
            scale_m_or_inv_km: scale,
            remap: None,
        }
    }

    pub fn params(&self) -> Result<MechanismParams<f64>, MechanismError> {
        let scale = match self.family {
            Family::Laplace => self.scale_m_or_inv_km / 1000.0,
            _ => self.scale_m_or_inv_km,
        };
        MechanismParams::with_scale(self.family, scale)
    }
}
