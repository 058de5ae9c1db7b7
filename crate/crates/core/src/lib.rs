//! Location obfuscation under geo-indistinguishability.
//!
//! The crate implements the planar Laplace, Gaussian and uniform-circle
//! noise mechanisms, the optimal remapping overlay, the decision-adversary
//! error metrics, Gowalla check-in ingestion and the Monte Carlo harness
//! that measures privacy against utility.
//!
//! Geometry, mechanisms and metrics are generic over [`Scalar`] (`f32` or
//! `f64`). The aliases below fix the scalar to `f64`, which is what the
//! dataset and experiment layers use.

pub mod geo;
pub mod mechanisms;
pub mod metrics;
pub mod dataset;
pub mod experiments;
pub mod scalar;

pub use geo::{distance, project, GeoError, GeoPoint, ProjectionRef};
pub use mechanisms::{Family, MechanismError, RandomStream};
pub use experiments::ExperimentError;
pub use metrics::MetricsError;
pub use scalar::Scalar;

pub type PlanarPoint = geo::PlanarPoint<f64>;
pub type Grid = geo::Grid<f64>;
pub type MechanismParams = mechanisms::MechanismParams<f64>;
pub type RemappedMechanism = mechanisms::RemappedMechanism<f64>;
pub type WeiszfeldOptions = mechanisms::weiszfeld::WeiszfeldOptions<f64>;
pub type DiscreteMechanism = metrics::DiscreteMechanism<f64>;
/// Prior or posterior over grid cells or mechanism inputs.
pub type CellPmf = metrics::Pmf<usize, f64>;
/// Prior or posterior over planar locations.
pub type LocationPmf = metrics::Pmf<geo::PlanarPoint<f64>, f64>;

pub type PlanarPointF32 = geo::PlanarPoint<f32>;
pub type MechanismParamsF32 = mechanisms::MechanismParams<f32>;
