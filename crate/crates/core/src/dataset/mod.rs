//! Gowalla check-in ingestion, user-level train/test splits, and empirical
//! popularity priors over a grid.
//!
//! The input is the SNAP `loc-gowalla_totalCheckins.txt` layout: one
//! tab-separated record per line,
//! `user_id⟨TAB⟩timestamp⟨TAB⟩latitude⟨TAB⟩longitude⟨TAB⟩venue_id`.

mod prior;
pub mod synthetic;

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{GeoError, GeoPoint, Grid, PlanarPoint, ProjectionRef};
use crate::mechanisms::RandomStream;

pub use prior::{empirical_prior, CellPrior, PriorSidecar};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("IoError: {0}")]
    Io(#[from] std::io::Error),
    #[error("EmptyPrior: no training check-in falls inside the grid")]
    EmptyPrior,
    #[error("EmptyDataset: {0}")]
    EmptyDataset(String),
    #[error("InvalidRegion: {0}")]
    InvalidRegion(String),
    #[error("InvalidSplit: train fraction must lie in (0, 1), got {0}")]
    InvalidSplit(f64),
    #[error("MalformedPrior: {0}")]
    MalformedPrior(String),
    #[error(transparent)]
    Geo(#[from] GeoError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkin {
    pub user_id: u64,
    pub timestamp: DateTime<Utc>,
    pub location: GeoPoint,
    pub venue_id: u64,
}

impl Checkin {
    /// Parses one TSV record. `None` if the line is malformed.
    pub fn parse_line(line: &str) -> Option<Self> {
        let fields: Vec<&str> = line.trim_end_matches(['\r', '\n']).split('\t').collect();
        if fields.len() != 5 {
            return None;
        }
        let user_id = fields[0].trim().parse().ok()?;
        let timestamp = DateTime::parse_from_rfc3339(fields[1].trim()).ok()?.with_timezone(&Utc);
        let lat = fields[2].trim().parse().ok()?;
        let lon = fields[3].trim().parse().ok()?;
        let location = GeoPoint::new(lat, lon).ok()?;
        let venue_id = fields[4].trim().parse().ok()?;
        Some(Self {
            user_id,
            timestamp,
            location,
            venue_id,
        })
    }

    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}",
            self.user_id,
            self.timestamp.format("%Y-%m-%dT%H:%M:%SZ"),
            self.location.lat,
            self.location.lon,
            self.venue_id
        )
    }
}

/// A latitude/longitude bounding box, inclusive on all sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub min_lat: f64,
    pub max_lat: f64,
    pub min_lon: f64,
    pub max_lon: f64,
}

impl Default for Region {
    /// San Francisco.
    fn default() -> Self {
        Self {
            min_lat: 37.55,
            max_lat: 37.85,
            min_lon: -122.55,
            max_lon: -122.25,
        }
    }
}

impl Region {
    pub fn new(min_lat: f64, max_lat: f64, min_lon: f64, max_lon: f64) -> Result<Self, DatasetError> {
        let r = Self {
            min_lat,
            max_lat,
            min_lon,
            max_lon,
        };
        GeoPoint::new(min_lat, min_lon)?;
        GeoPoint::new(max_lat, max_lon)?;
        if !(min_lat < max_lat && min_lon < max_lon) {
            return Err(DatasetError::InvalidRegion(format!("{r:?}")));
        }
        Ok(r)
    }

    pub fn contains(&self, g: &GeoPoint) -> bool {
        (self.min_lat..=self.max_lat).contains(&g.lat) && (self.min_lon..=self.max_lon).contains(&g.lon)
    }

    pub fn center(&self) -> GeoPoint {
        GeoPoint {
            lat: 0.5 * (self.min_lat + self.max_lat),
            lon: 0.5 * (self.min_lon + self.max_lon),
        }
    }

    /// Projection centred on the region.
    pub fn projection(&self) -> ProjectionRef {
        ProjectionRef::new(self.center())
    }

    /// Smallest grid of `cell_size` meter cells covering the projected region.
    pub fn grid(&self, proj: &ProjectionRef, cell_size: f64) -> Result<Grid<f64>, DatasetError> {
        let lo: PlanarPoint<f64> = crate::geo::project(&GeoPoint::new(self.min_lat, self.min_lon)?, proj)?;
        let hi: PlanarPoint<f64> = crate::geo::project(&GeoPoint::new(self.max_lat, self.max_lon)?, proj)?;
        Ok(Grid::covering(lo, hi, cell_size)?)
    }
}

/// Records kept by [`load_checkins`] and the line counts behind them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadReport {
    pub checkins: Vec<Checkin>,
    pub parsed: usize,
    pub malformed: usize,
    pub outside_region: usize,
}

pub fn read_checkins<R: BufRead>(reader: R, region: &Region) -> Result<LoadReport, DatasetError> {
    let mut report = LoadReport::default();
    for line in reader.lines() {
        let line = line?;
        match Checkin::parse_line(&line) {
            None => report.malformed += 1,
            Some(c) => {
                report.parsed += 1;
                if region.contains(&c.location) {
                    report.checkins.push(c);
                } else {
                    report.outside_region += 1;
                }
            }
        }
    }
    Ok(report)
}

/// Streams a check-in file, keeping records inside `region` in file order.
pub fn load_checkins(path: impl AsRef<Path>, region: &Region) -> Result<LoadReport, DatasetError> {
    read_checkins(BufReader::new(File::open(path)?), region)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<Checkin>,
    pub test: Vec<Checkin>,
    pub train_users: Vec<u64>,
    pub test_users: Vec<u64>,
}

/// Splits by user: users are sorted, shuffled with `spec.seed`, and the first
/// `⌈fraction·U⌉` go to training. Check-ins keep their input order.
pub fn split_users(checkins: &[Checkin], spec: &SplitSpec) -> Result<Split, DatasetError> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(DatasetError::InvalidSplit(spec.train_fraction));
    }
    if checkins.is_empty() {
        return Err(DatasetError::EmptyDataset("no check-ins to split".into()));
    }
    let mut users: Vec<u64> = checkins
        .iter()
        .map(|c| c.user_id)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut rnd = RandomStream::new(spec.seed, 0);
    users.shuffle(rnd.rng_mut());
    let n_train = ((spec.train_fraction * users.len() as f64).ceil() as usize).min(users.len());
    let test_users = users.split_off(n_train);
    let train_set: BTreeSet<u64> = users.iter().copied().collect();
    let (train, test) = checkins
        .iter()
        .cloned()
        .partition(|c| train_set.contains(&c.user_id));
    Ok(Split {
        train,
        test,
        train_users: users,
        test_users,
    })
}

/// Draws up to `n` check-ins without replacement.
pub fn sample_checkins(checkins: &[Checkin], n: usize, seed: u64) -> Vec<Checkin> {
    let mut idx: Vec<usize> = (0..checkins.len()).collect();
    let mut rnd = RandomStream::new(seed, 1);
    let (picked, _) = idx.partial_shuffle(rnd.rng_mut(), n.min(checkins.len()));
    picked.iter().map(|&i| checkins[i].clone()).collect()
}
