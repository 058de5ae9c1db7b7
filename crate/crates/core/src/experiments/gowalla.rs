//! Remapped planar Laplace against plain planar Laplace on check-in data.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{empirical_prior, sample_checkins, split_users, Checkin, Region, SplitSpec};
use crate::geo::{distance, project, PlanarPoint};
use crate::mechanisms::weiszfeld::WeiszfeldOptions;
use crate::mechanisms::{MechanismParams, RandomStream, RemappedMechanism};

use super::ExperimentError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GowallaConfig {
    pub region: Region,
    pub cell_size_m: f64,
    pub smoothing: f64,
    pub train_fraction: f64,
    pub epsilons_inv_km: Vec<f64>,
    pub n_checkins: usize,
    pub seed: u64,
    pub tolerance_m: f64,
    pub max_iters: usize,
}

impl Default for GowallaConfig {
    fn default() -> Self {
        Self {
            region: Region::default(),
            cell_size_m: 100.0,
            smoothing: 0.0,
            train_fraction: 0.8,
            epsilons_inv_km: vec![6.67, 4.0, 2.0, 1.0],
            n_checkins: 20_000,
            seed: 42,
            tolerance_m: 1e-3,
            max_iters: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GowallaRow {
    pub epsilon_inv_km: f64,
    pub qavg_remap_m: f64,
    pub r95_remap_m: f64,
    pub qavg_plain_m: f64,
    pub r95_plain_m: f64,
    /// Plain Laplace loss measured on the same draws, before remapping.
    pub qavg_plain_empirical_m: f64,
    pub r95_plain_empirical_m: f64,
}

impl GowallaRow {
    pub fn qavg_reduction_pct(&self) -> f64 {
        100.0 * (1.0 - self.qavg_remap_m / self.qavg_plain_m)
    }

    pub fn r95_reduction_pct(&self) -> f64 {
        100.0 * (1.0 - self.r95_remap_m / self.r95_plain_m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GowallaReport {
    pub rows: Vec<GowallaRow>,
    pub train_users: usize,
    pub test_users: usize,
    pub train_checkins: usize,
    pub test_checkins: usize,
    pub sampled: usize,
    pub prior_cells: usize,
}

/// Nearest-rank 95th percentile.
pub fn percentile95(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((0.95 * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

/// Splits `checkins` by user, builds the prior from the training side and
/// obfuscates a sample of test check-ins at every ε. Test check-in `i` uses
/// stream `i` for every ε.
pub fn gowalla_remap_experiment(checkins: &[Checkin], cfg: &GowallaConfig) -> Result<GowallaReport, ExperimentError> {
    if cfg.n_checkins == 0 {
        return Err(ExperimentError::InvalidConfig("n_checkins must be at least 1".into()));
    }
    let split = split_users(
        checkins,
        &SplitSpec {
            train_fraction: cfg.train_fraction,
            seed: cfg.seed,
        },
    )?;
    let proj = cfg.region.projection();
    let grid = cfg.region.grid(&proj, cfg.cell_size_m)?;
    let prior = empirical_prior(&split.train, &grid, &proj, cfg.smoothing)?;
    let sample = sample_checkins(&split.test, cfg.n_checkins, cfg.seed);
    if sample.is_empty() {
        return Err(ExperimentError::InvalidConfig("no test check-ins to obfuscate".into()));
    }
    let xs: Vec<PlanarPoint<f64>> = sample
        .iter()
        .map(|c| project(&c.location, &proj))
        .collect::<Result<_, _>>()
        .map_err(crate::dataset::DatasetError::from)?;
    let options = WeiszfeldOptions {
        tolerance: cfg.tolerance_m,
        max_iters: cfg.max_iters,
    };

    let mut rows = Vec::new();
    for &e in &cfg.epsilons_inv_km {
        let base = MechanismParams::laplace(e / 1000.0)?;
        let mech = RemappedMechanism::new(base, grid, prior.pmf.clone(), options)?;
        let losses: Vec<(f64, f64)> = xs
            .par_iter()
            .enumerate()
            .map(|(i, x)| {
                let mut rnd = RandomStream::new(cfg.seed, i as u64);
                let z_prime = base.sample(x, &mut rnd);
                let z = mech.remap(&z_prime).unwrap_or(z_prime);
                (distance(x, &z), distance(x, &z_prime))
            })
            .collect();
        let (remap, plain): (Vec<f64>, Vec<f64>) = losses.into_iter().unzip();
        let n = remap.len() as f64;
        rows.push(GowallaRow {
            epsilon_inv_km: e,
            qavg_remap_m: remap.iter().sum::<f64>() / n,
            r95_remap_m: percentile95(&remap),
            qavg_plain_m: base.analytic_qavg(),
            r95_plain_m: base.analytic_r95(),
            qavg_plain_empirical_m: plain.iter().sum::<f64>() / n,
            r95_plain_empirical_m: percentile95(&plain),
        });
    }
    Ok(GowallaReport {
        rows,
        train_users: split.train_users.len(),
        test_users: split.test_users.len(),
        train_checkins: split.train.len(),
        test_checkins: split.test.len(),
        sampled: sample.len(),
        prior_cells: prior.pmf.positive().count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synthetic::{generate, SyntheticSpec};

    #[test]
    fn nearest_rank() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile95(&v), 95.0);
        assert_eq!(percentile95(&[3.0]), 3.0);
        assert_eq!(percentile95(&[2.0, 1.0]), 2.0);
    }

    #[test]
    fn remap_lowers_loss_on_synthetic_data() {
        let data = generate(&SyntheticSpec {
            checkins: 3000,
            ..Default::default()
        });
        let cfg = GowallaConfig {
            n_checkins: 400,
            cell_size_m: 200.0,
            ..Default::default()
        };
        let report = gowalla_remap_experiment(&data, &cfg).unwrap();
        assert_eq!(report.rows.len(), 4);
        assert_eq!(report.sampled, 400);
        for r in &report.rows {
            assert!(r.qavg_remap_m < r.qavg_plain_m, "{r:?}");
            assert!(r.qavg_remap_m < r.qavg_plain_empirical_m, "{r:?}");
        }
    }

    #[test]
    fn prior_on_test_cells_with_fine_grid() {
        // every user visits one venue; training users share the test venues
        let region = Region::default();
        let proj = region.projection();
        let venues = [PlanarPoint::new(-800.0, 300.0), PlanarPoint::new(1200.0, -400.0)];
        let mut data = Vec::new();
        for u in 0..200u64 {
            let g = proj.unproject(&venues[(u % 2) as usize]);
            let line = format!("{u}\t2010-10-19T23:55:27Z\t{}\t{}\t{}", g.lat, g.lon, u % 2);
            data.push(Checkin::parse_line(&line).unwrap());
        }
        let cfg = GowallaConfig {
            n_checkins: 40,
            cell_size_m: 10.0,
            epsilons_inv_km: vec![4.0],
            ..Default::default()
        };
        let r = &gowalla_remap_experiment(&data, &cfg).unwrap().rows[0];
        assert!(r.qavg_remap_m < r.qavg_plain_m);
        assert!(r.qavg_remap_m < 10.0, "{r:?}");
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let data = generate(&SyntheticSpec {
            checkins: 1500,
            ..Default::default()
        });
        let cfg = GowallaConfig {
            n_checkins: 300,
            cell_size_m: 250.0,
            epsilons_inv_km: vec![2.0],
            ..Default::default()
        };
        let run = |n| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .unwrap()
                .install(|| gowalla_remap_experiment(&data, &cfg).unwrap())
        };
        assert_eq!(run(1), run(3));
    }
}
