//! Empirical popularity prior over grid cells.
//!
//! On disk a prior is a CSV `cell_index,mass` listing every cell with
//! positive mass, plus a JSON sidecar holding the grid and projection needed
//! to give the indices a meaning.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::geo::{project, GeoPoint, Grid, PlanarPoint, ProjectionRef};
use crate::metrics::Pmf;

use super::{Checkin, DatasetError};

#[derive(Debug, Clone, PartialEq)]
pub struct CellPrior {
    pub grid: Grid<f64>,
    pub projection: ProjectionRef,
    pub pmf: Pmf<usize, f64>,
    pub in_grid: usize,
    pub out_of_grid: usize,
}

/// Grid and projection metadata written next to a prior CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSidecar {
    pub origin_lat: f64,
    pub origin_lon: f64,
    pub earth_radius_m: f64,
    pub grid_origin_x_m: f64,
    pub grid_origin_y_m: f64,
    pub cell_size_m: f64,
    pub nx: usize,
    pub ny: usize,
}

impl PriorSidecar {
    pub fn new(grid: &Grid<f64>, proj: &ProjectionRef) -> Self {
        Self {
            origin_lat: proj.origin.lat,
            origin_lon: proj.origin.lon,
            earth_radius_m: proj.earth_radius,
            grid_origin_x_m: grid.origin.x,
            grid_origin_y_m: grid.origin.y,
            cell_size_m: grid.cell_size,
            nx: grid.nx,
            ny: grid.ny,
        }
    }

    pub fn grid(&self) -> Result<Grid<f64>, DatasetError> {
        Ok(Grid::new(
            PlanarPoint::new(self.grid_origin_x_m, self.grid_origin_y_m),
            self.cell_size_m,
            self.nx,
            self.ny,
        )?)
    }

    pub fn projection(&self) -> Result<ProjectionRef, DatasetError> {
        Ok(ProjectionRef {
            origin: GeoPoint::new(self.origin_lat, self.origin_lon)?,
            earth_radius: self.earth_radius_m,
        })
    }
}

/// Frequency of training check-ins per cell. With `smoothing > 0`, every
/// cell receives that many pseudo-counts before normalizing.
pub fn empirical_prior(
    train: &[Checkin],
    grid: &Grid<f64>,
    proj: &ProjectionRef,
    smoothing: f64,
) -> Result<CellPrior, DatasetError> {
    if !(smoothing >= 0.0 && smoothing.is_finite()) {
        return Err(DatasetError::MalformedPrior(format!("smoothing must be >= 0, got {smoothing}")));
    }
    let mut counts = vec![0u64; grid.cells()];
    let (mut in_grid, mut out_of_grid) = (0usize, 0usize);
    for c in train {
        let cell = project::<f64>(&c.location, proj)
            .ok()
            .and_then(|p| grid.locate(&p).ok());
        match cell {
            Some(k) => {
                counts[k] += 1;
                in_grid += 1;
            }
            None => out_of_grid += 1,
        }
    }
    if in_grid == 0 {
        return Err(DatasetError::EmptyPrior);
    }
    let entries: Vec<(usize, f64)> = counts
        .iter()
        .enumerate()
        .map(|(k, &n)| (k, n as f64 + smoothing))
        .filter(|(_, w)| *w > 0.0)
        .collect();
    let pmf = Pmf::from_weights(entries).map_err(|e| DatasetError::MalformedPrior(e.to_string()))?;
    Ok(CellPrior {
        grid: *grid,
        projection: *proj,
        pmf,
        in_grid,
        out_of_grid,
    })
}

impl CellPrior {
    pub fn sidecar(&self) -> PriorSidecar {
        PriorSidecar::new(&self.grid, &self.projection)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "cell_index,mass")?;
        for (k, m) in self.pmf.support() {
            writeln!(w, "{k},{m}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R, sidecar: &PriorSidecar) -> Result<Self, DatasetError> {
        let grid = sidecar.grid()?;
        let projection = sidecar.projection()?;
        let mut entries = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if i == 0 {
                if line.trim() != "cell_index,mass" {
                    return Err(DatasetError::MalformedPrior(format!("unexpected header '{line}'")));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let bad = || DatasetError::MalformedPrior(format!("line {}: '{line}'", i + 1));
            let (k, m) = line.split_once(',').ok_or_else(bad)?;
            let k: usize = k.trim().parse().map_err(|_| bad())?;
            let m: f64 = m.trim().parse().map_err(|_| bad())?;
            if k >= grid.cells() {
                return Err(bad());
            }
            entries.push((k, m));
        }
        let pmf = Pmf::new(entries).map_err(|e| DatasetError::MalformedPrior(e.to_string()))?;
        Ok(Self {
            grid,
            projection,
            pmf,
            in_grid: 0,
            out_of_grid: 0,
        })
    }
}
