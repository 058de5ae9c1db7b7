//! Two-point decision adversary under the three noise families.
//!
//! The user sits at `x = (0, 0)` or `x′ = (d, 0)` with equal probability,
//! reports `z`, and the adversary guesses the likelier of the two. Each trial
//! records the adversary's error probability given `z`; averaging over trials
//! estimates the Bayes error of the mixture.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geo::PlanarPoint;
use crate::mechanisms::{Family, MechanismParams, RandomStream};
use crate::metrics::{perr_from_log, MetricsError};

use super::ExperimentError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionExperimentConfig {
    pub distances_m: Vec<f64>,
    pub qavgs_m: Vec<f64>,
    pub families: Vec<Family>,
    pub trials: usize,
    pub seed: u64,
    pub bins: usize,
    pub keep_records: bool,
}

impl Default for DecisionExperimentConfig {
    fn default() -> Self {
        Self {
            distances_m: vec![100.0],
            qavgs_m: vec![500.0],
            families: Family::ALL.to_vec(),
            trials: 20_000,
            seed: 42,
            bins: 50,
            keep_records: false,
        }
    }
}

impl DecisionExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::InvalidConfig(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.bins == 0 {
            return bad("bins must be at least 1".into());
        }
        if self.families.is_empty() || self.distances_m.is_empty() || self.qavgs_m.is_empty() {
            return bad("families, distances and qavgs must be nonempty".into());
        }
        for &v in self.distances_m.iter().chain(&self.qavgs_m) {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("distances and qavgs must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrueLocation {
    X,
    XPrime,
}

impl TrueLocation {
    pub fn tag(self) -> &'static str {
        match self {
            Self::X => "x",
            Self::XPrime => "x_prime",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub family: Family,
    pub d_m: f64,
    pub qavg_m: f64,
    pub trial: u64,
    pub truth: TrueLocation,
    pub z: PlanarPoint<f64>,
    pub perr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub family: Family,
    pub d_m: f64,
    pub qavg_m: f64,
    pub trials: usize,
    pub avg_perr: f64,
    pub std_err: f64,
    pub min_perr: f64,
    /// `None` for the Laplace rows themselves.
    pub pct_better: Option<f64>,
    /// Counts over equal-width bins of `[0, 0.5]`.
    pub histogram: Vec<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DecisionResult {
    pub rows: Vec<SummaryRow>,
    pub records: Vec<TrialRecord>,
}

/// One trial. Draws the true location, then `z`, from `rnd`.
pub fn decision_trial(
    params: &MechanismParams<f64>,
    x: &PlanarPoint<f64>,
    x_prime: &PlanarPoint<f64>,
    rnd: &mut RandomStream,
) -> (TrueLocation, PlanarPoint<f64>, f64) {
    let truth = if rnd.uniform() < 0.5 {
        TrueLocation::X
    } else {
        TrueLocation::XPrime
    };
    let origin = match truth {
        TrueLocation::X => x,
        TrueLocation::XPrime => x_prime,
    };
    let z = params.sample(origin, rnd);
    let perr = match perr_from_log(params.log_density(&z, x), params.log_density(&z, x_prime)) {
        Ok(p) => p,
        // z was drawn from one of the two, so this only happens when rounding
        // pushes a Circular draw a hair past the rim; neither side explains z.
        Err(MetricsError::BothZero) => 0.0,
        Err(e) => unreachable!("{e}"),
    };
    (truth, z, perr)
}

fn perrs(params: &MechanismParams<f64>, d: f64, seed: u64, trials: usize) -> Vec<(TrueLocation, PlanarPoint<f64>, f64)> {
    let x = PlanarPoint::origin();
    let x_prime = PlanarPoint::new(d, 0.0);
    (0..trials as u64)
        .into_par_iter()
        .map(|t| decision_trial(params, &x, &x_prime, &mut RandomStream::new(seed, t)))
        .collect()
}

/// Histogram of `values` over `bins` equal bins of `[0, 0.5]`; 0.5 itself
/// lands in the last bin.
pub fn histogram(values: &[f64], bins: usize) -> Vec<u64> {
    let mut h = vec![0u64; bins];
    for &v in values {
        let k = ((v / 0.5) * bins as f64).floor();
        let k = if k < 0.0 { 0 } else { (k as usize).min(bins - 1) };
        h[k] += 1;
    }
    h
}

/// Percentage of paired trials in which `family` leaves the adversary with
/// a strictly larger error than `laplace`.
pub fn pct_better(family: &[f64], laplace: &[f64]) -> Result<f64, ExperimentError> {
    if family.len() != laplace.len() || family.is_empty() {
        return Err(ExperimentError::GridMismatch(format!(
            "{} trials against {} Laplace trials",
            family.len(),
            laplace.len()
        )));
    }
    let wins = family.iter().zip(laplace).filter(|(f, l)| f > l).count();
    Ok(100.0 * wins as f64 / family.len() as f64)
}

fn summarize(
    family: Family,
    d: f64,
    qavg: f64,
    values: &[f64],
    bins: usize,
    laplace: Option<&[f64]>,
) -> Result<SummaryRow, ExperimentError> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(SummaryRow {
        family,
        d_m: d,
        qavg_m: qavg,
        trials: values.len(),
        avg_perr: mean,
        std_err: (var / n).sqrt(),
        min_perr: values.iter().copied().fold(f64::INFINITY, f64::min),
        pct_better: laplace.map(|l| pct_better(values, l)).transpose()?,
        histogram: histogram(values, bins),
    })
}

/// Runs every `(family, d, qavg)` combination. Trial `t` always uses stream
/// `t` of `cfg.seed`, so families and grid points share their random draws
/// and results do not depend on the thread count. Rows come out ordered by
/// family (as listed), then distance, then qavg.
pub fn run_decision_experiment(cfg: &DecisionExperimentConfig) -> Result<DecisionResult, ExperimentError> {
    cfg.validate()?;
    let nf = cfg.families.len();
    let mut rows: Vec<Vec<SummaryRow>> = vec![Vec::new(); nf];
    let mut records: Vec<Vec<TrialRecord>> = vec![Vec::new(); nf];
    for &d in &cfg.distances_m {
        for &qavg in &cfg.qavgs_m {
            let run = |family| -> Result<_, ExperimentError> {
                let params = MechanismParams::calibrate_to_qavg(family, qavg)?;
                Ok(perrs(&params, d, cfg.seed, cfg.trials))
            };
            let laplace: Vec<f64> = run(Family::Laplace)?.into_iter().map(|t| t.2).collect();
            for (k, &family) in cfg.families.iter().enumerate() {
                let trials = run(family)?;
                let values: Vec<f64> = trials.iter().map(|t| t.2).collect();
                let baseline = (family != Family::Laplace).then_some(&laplace[..]);
                rows[k].push(summarize(family, d, qavg, &values, cfg.bins, baseline)?);
                if cfg.keep_records {
                    records[k].extend(trials.into_iter().enumerate().map(|(t, (truth, z, perr))| TrialRecord {
                        family,
                        d_m: d,
                        qavg_m: qavg,
                        trial: t as u64,
                        truth,
                        z,
                        perr,
                    }));
                }
            }
        }
    }
    let rows = rows.into_iter().flatten().collect();
    let records = records.into_iter().flatten().collect();
    Ok(DecisionResult { rows, records })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossoverMetric {
    /// `avg_perr(family) - avg_perr(Laplace)` changes sign.
    AvgPerr,
    /// `pct_better - 50` changes sign.
    PctBetter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossover {
    pub family: Family,
    pub qavg_m: f64,
    pub metric: CrossoverMetric,
    /// First grid distance whose sign differs from the smallest distance's;
    /// `None` if the sign never flips on the grid.
    pub d_m: Option<f64>,
}

/// Crossover distances for every non-Laplace family and qavg in `rows`.
/// Needs the Laplace rows for [`CrossoverMetric::AvgPerr`].
pub fn crossovers(rows: &[SummaryRow]) -> Vec<Crossover> {
    let mut keys: Vec<(Family, f64)> = Vec::new();
    for r in rows.iter().filter(|r| r.family != Family::Laplace) {
        if !keys.contains(&(r.family, r.qavg_m)) {
            keys.push((r.family, r.qavg_m));
        }
    }
    let mut out = Vec::new();
    for (family, qavg) in keys {
        let mut series: Vec<&SummaryRow> = rows
            .iter()
            .filter(|r| r.family == family && r.qavg_m == qavg)
            .collect();
        series.sort_by(|a, b| a.d_m.total_cmp(&b.d_m));
        let laplace_at = |d: f64| {
            rows.iter()
                .find(|r| r.family == Family::Laplace && r.qavg_m == qavg && r.d_m == d)
                .map(|r| r.avg_perr)
        };
        let avg: Vec<(f64, Option<f64>)> = series
            .iter()
            .map(|r| (r.d_m, laplace_at(r.d_m).map(|l| r.avg_perr - l)))
            .collect();
        if avg.iter().all(|(_, g)| g.is_some()) {
            out.push(Crossover {
                family,
                qavg_m: qavg,
                metric: CrossoverMetric::AvgPerr,
                d_m: first_flip(avg.iter().map(|&(d, g)| (d, g.unwrap()))),
            });
        }
        out.push(Crossover {
            family,
            qavg_m: qavg,
            metric: CrossoverMetric::PctBetter,
            d_m: first_flip(series.iter().filter_map(|r| r.pct_better.map(|p| (r.d_m, p - 50.0)))),
        });
    }
    out
}

fn first_flip(series: impl Iterator<Item = (f64, f64)>) -> Option<f64> {
    let mut first = None;
    for (d, g) in series {
        match first {
            None => first = Some(g > 0.0),
            Some(s) if s != (g > 0.0) => return Some(d),
            _ => {}
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::perr_min;

    /// `½∫min(f(z|x), f(z|x′)) dz` by the midpoint rule on a square lattice.
    fn bayes_error_quadrature(params: &MechanismParams<f64>, d: f64) -> f64 {
        let reach = params.radial_quantile(1.0 - 1e-9).unwrap();
        let h = (params.analytic_qavg() / 200.0).min(d / 20.0);
        let x = PlanarPoint::origin();
        let xp = PlanarPoint::new(d, 0.0);
        let (x0, x1, y0) = (-reach, d + reach, -reach);
        let nx = ((x1 - x0) / h).ceil() as usize;
        let ny = ((2.0 * reach) / h).ceil() as usize;
        let mut total = 0.0;
        for j in 0..ny {
            let y = y0 + (j as f64 + 0.5) * h;
            for i in 0..nx {
                let z = PlanarPoint::new(x0 + (i as f64 + 0.5) * h, y);
                total += params.density(&z, &x).min(params.density(&z, &xp));
            }
        }
        0.5 * total * h * h
    }

    fn cfg(families: Vec<Family>, d: Vec<f64>, q: Vec<f64>, trials: usize) -> DecisionExperimentConfig {
        DecisionExperimentConfig {
            distances_m: d,
            qavgs_m: q,
            families,
            trials,
            ..Default::default()
        }
    }

    #[test]
    fn trial_perr_tends_to_half_as_points_merge() {
        let p = MechanismParams::laplace(0.004).unwrap();
        let mut s = RandomStream::new(1, 0);
        for _ in 0..100 {
            let (_, _, e) = decision_trial(&p, &PlanarPoint::origin(), &PlanarPoint::new(1e-9, 0.0), &mut s);
            assert!((e - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn laplace_trials_respect_floor() {
        let p = MechanismParams::calibrate_to_qavg(Family::Laplace, 500.0).unwrap();
        let floor = perr_min(0.004, 100.0);
        let mut s = RandomStream::new(9, 3);
        for _ in 0..5000 {
            let (_, _, e) = decision_trial(&p, &PlanarPoint::origin(), &PlanarPoint::new(100.0, 0.0), &mut s);
            assert!(e >= floor - 1e-12);
        }
    }

    #[test]
    fn disjoint_circles_give_zero_error() {
        let p = MechanismParams::circular(40.0).unwrap();
        let mut s = RandomStream::new(3, 0);
        for _ in 0..1000 {
            let (_, _, e) = decision_trial(&p, &PlanarPoint::origin(), &PlanarPoint::new(100.0, 0.0), &mut s);
            assert_eq!(e, 0.0);
        }
    }

    #[test]
    fn laplace_mean_matches_quadrature() {
        let r = run_decision_experiment(&cfg(vec![Family::Laplace], vec![100.0], vec![500.0], 20_000)).unwrap();
        let oracle = bayes_error_quadrature(&MechanismParams::laplace(0.004).unwrap(), 100.0);
        let row = &r.rows[0];
        assert!((row.avg_perr - oracle).abs() < 0.01, "{} vs {oracle}", row.avg_perr);
    }

    #[test]
    fn all_families_within_three_standard_errors() {
        let grid_d = vec![100.0, 400.0, 1200.0];
        let grid_q = vec![200.0, 500.0, 1000.0];
        let r = run_decision_experiment(&cfg(Family::ALL.to_vec(), grid_d, grid_q, 20_000)).unwrap();
        for row in &r.rows {
            let p = MechanismParams::calibrate_to_qavg(row.family, row.qavg_m).unwrap();
            let oracle = bayes_error_quadrature(&p, row.d_m);
            // quadrature error on the Circular rims is a few 1e-4
            let slack = 3.0 * row.std_err + 1e-3;
            assert!(
                (row.avg_perr - oracle).abs() <= slack,
                "{} d={} q={}: {} vs {oracle} (se {})",
                row.family,
                row.d_m,
                row.qavg_m,
                row.avg_perr,
                row.std_err
            );
        }
    }

    #[test]
    fn gaussian_beats_laplace_at_short_range() {
        let r = run_decision_experiment(&cfg(vec![Family::Laplace, Family::Gaussian], vec![100.0], vec![500.0], 20_000))
            .unwrap();
        assert!(r.rows[1].avg_perr > r.rows[0].avg_perr);
        assert!(r.rows[1].pct_better.unwrap() > 50.0);
        assert_eq!(r.rows[0].pct_better, None);
    }

    #[test]
    fn pct_better_edge_cases() {
        let a = [0.1, 0.3, 0.2];
        assert_eq!(pct_better(&a, &a).unwrap(), 0.0);
        assert!(matches!(pct_better(&a, &a[..2]), Err(ExperimentError::GridMismatch(_))));
        let r = run_decision_experiment(&cfg(vec![Family::Circular], vec![5000.0], vec![300.0], 2000)).unwrap();
        assert_eq!(r.rows[0].pct_better, Some(0.0));
        assert_eq!(r.rows[0].avg_perr, 0.0);
    }

    #[test]
    fn histogram_shape() {
        let h = histogram(&[0.0, 0.01, 0.4999, 0.5, 0.25], 50);
        assert_eq!(h.len(), 50);
        assert_eq!(h.iter().sum::<u64>(), 5);
        assert_eq!(h[0], 1);
        assert_eq!(h[1], 1);
        assert_eq!(h[25], 1);
        assert_eq!(h[49], 2);

        let r = run_decision_experiment(&cfg(vec![Family::Laplace], vec![100.0], vec![500.0], 5000)).unwrap();
        let row = &r.rows[0];
        assert_eq!(row.histogram.iter().sum::<u64>(), 5000);
        let floor_bin = (perr_min(0.004f64, 100.0) / 0.01).floor() as usize;
        assert!(row.histogram[..floor_bin].iter().all(|&c| c == 0));
    }

    #[test]
    fn records_follow_trial_order_and_are_thread_independent() {
        let mut c = cfg(Family::ALL.to_vec(), vec![100.0, 300.0], vec![500.0], 3000);
        c.keep_records = true;
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_decision_experiment(&c).unwrap());
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| run_decision_experiment(&c).unwrap());
        assert_eq!(one, four);
        assert_eq!(one.records.len(), 3 * 2 * 3000);
        assert!(one.records[..3000].iter().enumerate().all(|(i, r)| r.trial == i as u64));
        for row in &one.rows {
            let own: Vec<f64> = one
                .records
                .iter()
                .filter(|r| r.family == row.family && r.d_m == row.d_m)
                .map(|r| r.perr)
                .collect();
            assert!((own.iter().sum::<f64>() / own.len() as f64 - row.avg_perr).abs() < 1e-15);
        }
    }

    #[test]
    fn crossover_is_first_sign_flip() {
        let row = |family, d, avg, pct| SummaryRow {
            family,
            d_m: d,
            qavg_m: 500.0,
            trials: 1,
            avg_perr: avg,
            std_err: 0.0,
            min_perr: avg,
            pct_better: pct,
            histogram: vec![],
        };
        let rows = vec![
            row(Family::Laplace, 100.0, 0.4, None),
            row(Family::Laplace, 200.0, 0.3, None),
            row(Family::Laplace, 300.0, 0.2, None),
            row(Family::Gaussian, 300.0, 0.1, Some(20.0)),
            row(Family::Gaussian, 100.0, 0.45, Some(70.0)),
            row(Family::Gaussian, 200.0, 0.31, Some(40.0)),
        ];
        let c = crossovers(&rows);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].metric, CrossoverMetric::AvgPerr);
        assert_eq!(c[0].d_m, Some(300.0));
        assert_eq!(c[1].d_m, Some(200.0));
    }

    #[test]
    fn rejects_bad_config() {
        assert!(run_decision_experiment(&cfg(vec![Family::Laplace], vec![100.0], vec![500.0], 0)).is_err());
        assert!(run_decision_experiment(&cfg(vec![Family::Laplace], vec![-1.0], vec![500.0], 10)).is_err());
        assert!(run_decision_experiment(&cfg(vec![], vec![1.0], vec![500.0], 10)).is_err());
    }
}
