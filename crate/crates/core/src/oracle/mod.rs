//! Independent numerical machinery used to check every closed form.
//!
//! Nothing here calls into the closed-form geometry: Fisher information comes
//! from quadrature of finite-difference scores, distances from relaxing a
//! discretized path, divergences from seeded Monte Carlo.

pub mod divergence;
pub mod embedding;
pub mod fisher;
pub mod geodesic;
pub mod quadrature;
pub mod sweep;

pub use divergence::{divergence_mc, Divergence, McEstimate};
pub use embedding::{bin_probabilities, binned_bhattacharyya_angle};
pub use fisher::fisher_information_numeric;
pub use geodesic::{
    geodesic_distance_numeric, geodesic_distance_numeric_with, path_length, GeodesicOptions,
    GeodesicReport, Metric,
};
pub use quadrature::{integrate, Integral, QuadratureSpec};
pub use sweep::{privacy_loss_sweep, privacy_loss_sweep_family, PrivacyLossSweep};
