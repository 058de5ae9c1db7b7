//! Planar geometry, the local equirectangular projection, and uniform grids.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// Mean Earth radius in meters used by every projection.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Half-width of the latitude window around the origin in which the
/// equirectangular projection is accepted.
pub const PROJECTION_WINDOW_DEG: f64 = 5.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("InvalidGeoPoint: lat={lat}, lon={lon}")]
    InvalidGeoPoint { lat: f64, lon: f64 },
    #[error("InvalidPlanarPoint: coordinates must be finite")]
    InvalidPlanarPoint,
    #[error("OutOfProjectionWindow: latitude {lat} is more than 5 degrees from origin latitude {origin_lat}")]
    OutOfProjectionWindow { lat: f64, origin_lat: f64 },
    #[error("InvalidGrid: {0}")]
    InvalidGrid(String),
    #[error("OutOfGrid: point ({x}, {y}) lies outside the grid")]
    OutOfGrid { x: f64, y: f64 },
    #[error("IndexOutOfRange: cell {index} with {cells} cells")]
    IndexOutOfRange { index: usize, cells: usize },
}

/// A latitude/longitude pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        let ok = lat.is_finite()
            && lon.is_finite()
            && (-90.0..=90.0).contains(&lat)
            && (-180.0..=180.0).contains(&lon);
        if ok {
            Ok(Self { lat, lon })
        } else {
            Err(GeoError::InvalidGeoPoint { lat, lon })
        }
    }
}

/// A location in a local flat frame, meters east (`x`) and north (`y`) of an origin.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanarPoint<F> {
    pub x: F,
    pub y: F,
}

impl<F: Scalar> PlanarPoint<F> {
    #[inline]
    pub fn new(x: F, y: F) -> Self {
        Self { x, y }
    }

    pub fn try_new(x: F, y: F) -> Result<Self, GeoError> {
        if x.is_finite() && y.is_finite() {
            Ok(Self { x, y })
        } else {
            Err(GeoError::InvalidPlanarPoint)
        }
    }

    pub fn origin() -> Self {
        Self::new(F::zero(), F::zero())
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Translates by a polar offset of length `r` at angle `theta`.
    #[inline]
    pub fn offset_polar(&self, r: F, theta: F) -> Self {
        Self::new(self.x + r * theta.cos(), self.y + r * theta.sin())
    }
}

/// Euclidean distance between two planar points.
#[inline]
pub fn distance<F: Scalar>(a: &PlanarPoint<F>, b: &PlanarPoint<F>) -> F {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Reference for the equirectangular projection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionRef {
    pub origin: GeoPoint,
    pub earth_radius: f64,
}

impl ProjectionRef {
    pub fn new(origin: GeoPoint) -> Self {
        Self {
            origin,
            earth_radius: EARTH_RADIUS_M,
        }
    }

    /// Inverse of [`project`], used by the synthetic data generator.
    pub fn unproject(&self, p: &PlanarPoint<f64>) -> GeoPoint {
        let k = self.earth_radius * std::f64::consts::PI / 180.0;
        GeoPoint {
            lat: self.origin.lat + p.y / k,
            lon: self.origin.lon + p.x / (k * self.origin.lat.to_radians().cos()),
        }
    }
}

/// Equirectangular projection of `g` around `proj.origin`.
pub fn project<F: Scalar>(g: &GeoPoint, proj: &ProjectionRef) -> Result<PlanarPoint<F>, GeoError> {
    GeoPoint::new(g.lat, g.lon)?;
    GeoPoint::new(proj.origin.lat, proj.origin.lon)?;
    if (g.lat - proj.origin.lat).abs() >= PROJECTION_WINDOW_DEG {
        return Err(GeoError::OutOfProjectionWindow {
            lat: g.lat,
            origin_lat: proj.origin.lat,
        });
    }
    let k = proj.earth_radius * std::f64::consts::PI / 180.0;
    let x = (g.lon - proj.origin.lon) * proj.origin.lat.to_radians().cos() * k;
    let y = (g.lat - proj.origin.lat) * k;
    Ok(PlanarPoint::new(F::lit(x), F::lit(y)))
}

/// A uniform grid of square cells. Cell `k` sits at column `k % nx`, row `k / nx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid<F> {
    /// Southwest corner.
    pub origin: PlanarPoint<F>,
    pub cell_size: F,
    pub nx: usize,
    pub ny: usize,
}

impl<F: Scalar> Grid<F> {
    pub fn new(origin: PlanarPoint<F>, cell_size: F, nx: usize, ny: usize) -> Result<Self, GeoError> {
        if !origin.is_finite() {
            return Err(GeoError::InvalidPlanarPoint);
        }
        if !(cell_size.is_finite() && cell_size > F::zero()) {
            return Err(GeoError::InvalidGrid("cell size must be positive and finite".into()));
        }
        if nx == 0 || ny == 0 {
            return Err(GeoError::InvalidGrid("cell counts must be positive".into()));
        }
        Ok(Self {
            origin,
            cell_size,
            nx,
            ny,
        })
    }

    /// Smallest grid with the given cell size covering the box `[lo, hi]`.
    pub fn covering(lo: PlanarPoint<F>, hi: PlanarPoint<F>, cell_size: F) -> Result<Self, GeoError> {
        if !(hi.x > lo.x && hi.y > lo.y) {
            return Err(GeoError::InvalidGrid("empty bounding box".into()));
        }
        let count = |span: F| -> usize {
            // one extra cell when the box edge falls exactly on a cell edge,
            // so the closed box stays inside the half-open grid
            (span / cell_size).floor().to_usize().unwrap_or(0) + 1
        };
        Self::new(lo, cell_size, count(hi.x - lo.x), count(hi.y - lo.y))
    }

    #[inline]
    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn width(&self) -> F {
        self.cell_size * F::from_usize(self.nx).unwrap()
    }

    pub fn height(&self) -> F {
        self.cell_size * F::from_usize(self.ny).unwrap()
    }

    /// Index of the cell containing `p`. Cells are half-open `[lo, hi)` on both axes.
    pub fn locate(&self, p: &PlanarPoint<F>) -> Result<usize, GeoError> {
        let out = || GeoError::OutOfGrid {
            x: p.x.as_f64(),
            y: p.y.as_f64(),
        };
        if !p.is_finite() {
            return Err(out());
        }
        let fx = ((p.x - self.origin.x) / self.cell_size).floor();
        let fy = ((p.y - self.origin.y) / self.cell_size).floor();
        if fx < F::zero() || fy < F::zero() {
            return Err(out());
        }
        let (i, j) = (fx.to_usize().ok_or_else(out)?, fy.to_usize().ok_or_else(out)?);
        if i >= self.nx || j >= self.ny {
            return Err(out());
        }
        Ok(j * self.nx + i)
    }

    pub fn cell_center(&self, index: usize) -> Result<PlanarPoint<F>, GeoError> {
        if index >= self.cells() {
            return Err(GeoError::IndexOutOfRange {
                index,
                cells: self.cells(),
            });
        }
        let half = F::lit(0.5);
        let i = F::from_usize(index % self.nx).unwrap();
        let j = F::from_usize(index / self.nx).unwrap();
        Ok(PlanarPoint::new(
            self.origin.x + (i + half) * self.cell_size,
            self.origin.y + (j + half) * self.cell_size,
        ))
    }
}
