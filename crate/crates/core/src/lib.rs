//! Differential privacy measured by the Rao (Fisher–Rao) distance between the
//! output densities of a mechanism on neighbouring datasets.
//!
//! * [`family`]: the density catalog, its sampling and Fisher information.
//! * [`geometry`]: closed-form Rao distances and the Bhattacharyya angle.
//! * [`oracle`]: quadrature, geodesic relaxation and Monte Carlo checks.
//! * [`mechanism`]: sensitivity, calibration and sanitization.
//! * [`accountant`]: budget composition, conversion and the release ledger.

pub mod accountant;
pub mod error;
pub mod family;
pub mod geometry;
pub mod mechanism;
pub mod oracle;

pub use error::{Error, Result};
pub use family::{Family, ParamPoint, Scale, Shape};
pub use geometry::{DistanceReport, Formula, Method};
pub use mechanism::{MechanismKind, MechanismSpec, QueryKind, QuerySpec};
