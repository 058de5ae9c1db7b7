//! Privacy/utility table for the planar Laplace mechanism.

use serde::{Deserialize, Serialize};

use crate::mechanisms::MechanismParams;
use crate::metrics::{epsilon_star, perr_min};

use super::ExperimentError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub epsilon_inv_km: f64,
    pub eps_star: f64,
    pub perr_min: f64,
    pub qavg_m: f64,
    pub r95_m: f64,
}

/// One row per ε (given per kilometer), evaluated at radius `r_star_m`.
pub fn tradeoff_table(epsilons_inv_km: &[f64], r_star_m: f64) -> Result<Vec<TradeoffRow>, ExperimentError> {
    if !(r_star_m.is_finite() && r_star_m > 0.0) {
        return Err(ExperimentError::InvalidConfig(format!("r* must be positive, got {r_star_m}")));
    }
    epsilons_inv_km
        .iter()
        .map(|&e| {
            let eps = e / 1000.0;
            let params = MechanismParams::laplace(eps)?;
            Ok(TradeoffRow {
                epsilon_inv_km: e,
                eps_star: epsilon_star(eps, r_star_m),
                perr_min: perr_min(eps, r_star_m),
                qavg_m: params.analytic_qavg(),
                r95_m: params.analytic_r95(),
            })
        })
        .collect()
}
