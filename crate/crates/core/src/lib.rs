//! Discretized Brownian disks and their metric gluings.
//!
//! The crate is organised bottom-up:
//!
//! * [`sampler`] draws the driving paths (Brownian motion, bridges,
//!   first-passage contours) from a splittable counter-based RNG.
//! * [`encoding`] turns a contour into its forest structure: range-minimum
//!   index, zero classes of `d_X`, hitting times and excursions.
//! * [`labels`] samples the label field on the forest and adds the boundary
//!   bridge.
//! * [`diskmetric`] assembles a [`DiskInstance`] and computes its quotient
//!   metric by shortest paths over the contracted label graph.
//! * [`gluing`] forms quotients of disjoint unions of finite geodesic spaces.
//! * [`scaling`] fits exponents and runs the statistical reports.
//! * [`acceptance`] bundles the end-to-end verification criteria.

pub mod acceptance;
pub mod diskmetric;
pub mod encoding;
mod error;
pub mod gluing;
pub mod labels;
pub mod rng;
pub mod sampler;
pub mod scaling;

pub use diskmetric::{BoundaryPoint, DiskInstance, DiskParams, FiniteGeodesicSpace, UNREACHABLE};
pub use encoding::{ForestCode, RmqIndex};
pub use error::{Error, Result};
pub use gluing::{GluedSpace, GluingSchema, Orientation};
pub use labels::LabelField;
pub use rng::SeedRecord;
pub use sampler::{Discretization, PathKind, PathSample};
pub use scaling::{ExponentFit, Report};
