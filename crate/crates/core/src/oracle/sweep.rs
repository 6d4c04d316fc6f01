//! Empirical pure-DP privacy loss of a mechanism pair, by grid search.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::family::{log_density_unchecked, Family};
use crate::mechanism::MechanismSpec;

/// Smallest grid accepted by the sweep.
pub const MIN_GRID_POINTS: usize = 1001;

/// Outcome of a privacy-loss sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrivacyLossSweep {
    /// Largest `|log f(x; out1) - log f(x; out2)|` seen on the grid.
    pub epsilon: f64,
    /// Grid point attaining the maximum.
    pub argmax: f64,
    /// Set when an endpoint of the grid beats every interior point, meaning
    /// the loss is still growing where the grid stops.
    pub unbounded_suspected: bool,
}

/// Sweeps the absolute log-density ratio of the mechanism centred at `out1`
/// and at `out2` over an evenly spaced grid of `grid_points` points, spanning
/// `grid_halfwidth` on each side of the midpoint of the two outputs.
pub fn privacy_loss_sweep(
    mech: &MechanismSpec,
    out1: f64,
    out2: f64,
    grid_halfwidth: f64,
    grid_points: usize,
) -> Result<PrivacyLossSweep> {
    privacy_loss_sweep_family(mech.family(), out1, out2, grid_halfwidth, grid_points)
}

/// Same as [`privacy_loss_sweep`] for a bare location family.
pub fn privacy_loss_sweep_family(
    family: Family,
    out1: f64,
    out2: f64,
    grid_halfwidth: f64,
    grid_points: usize,
) -> Result<PrivacyLossSweep> {
    if grid_points < MIN_GRID_POINTS {
        return Err(invalid(format!(
            "grid_points must be at least {MIN_GRID_POINTS}, got {grid_points}"
        )));
    }
    if !(grid_halfwidth.is_finite() && grid_halfwidth > 0.0) {
        return Err(invalid("grid_halfwidth must be positive"));
    }
    let p1 = family.at(out1)?;
    let p2 = family.at(out2)?;
    let center = 0.5 * (out1 + out2);
    let step = 2.0 * grid_halfwidth / (grid_points - 1) as f64;

    let loss = |i: usize| {
        let x = if i == grid_points - 1 {
            center + grid_halfwidth
        } else {
            center - grid_halfwidth + step * i as f64
        };
        (
            x,
            (log_density_unchecked(&p1, x) - log_density_unchecked(&p2, x)).abs(),
        )
    };

    let (mut argmax, mut interior) = (center, f64::NEG_INFINITY);
    for i in 1..grid_points - 1 {
        let (x, l) = loss(i);
        if l > interior {
            interior = l;
            argmax = x;
        }
    }
    let mut epsilon = interior;
    let mut unbounded_suspected = false;
    for i in [0, grid_points - 1] {
        let (x, l) = loss(i);
        if l > interior + 1e-9 * (1.0 + interior) {
            unbounded_suspected = true;
        }
        if l > epsilon {
            epsilon = l;
            argmax = x;
        }
    }
    Ok(PrivacyLossSweep {
        epsilon,
        argmax,
        unbounded_suspected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::MechanismKind;

    #[test]
    fn laplace_envelope() {
        let s =
            privacy_loss_sweep_family(Family::laplace(1.0).unwrap(), 0.0, 1.0, 20.0, 2001).unwrap();
        assert!((s.epsilon - 1.0).abs() < 1e-9);
        assert!(!s.unbounded_suspected);
    }

    #[test]
    fn identical_outputs() {
        let s =
            privacy_loss_sweep_family(Family::gaussian(1.0).unwrap(), 2.0, 2.0, 5.0, 1001).unwrap();
        assert_eq!(s.epsilon, 0.0);
        assert!(!s.unbounded_suspected);
    }

    #[test]
    fn gaussian_grows_with_halfwidth() {
        let f = Family::gaussian(1.0).unwrap();
        let a = privacy_loss_sweep_family(f, 0.0, 1.0, 10.0, 1001).unwrap();
        let b = privacy_loss_sweep_family(f, 0.0, 1.0, 20.0, 1001).unwrap();
        assert!(a.unbounded_suspected && b.unbounded_suspected);
        // log-ratio is |x - 1/2| for unit spacing, so the max is the halfwidth
        assert!((a.epsilon - 10.0).abs() < 1e-9);
        assert!((b.epsilon - 20.0).abs() < 1e-9);
    }

    #[test]
    fn calibrated_laplace_mechanism() {
        let m = MechanismSpec::with_scale(MechanismKind::Laplace, 1.0, 0.5, 2.0).unwrap();
        let s = privacy_loss_sweep(&m, 10.0, 11.0, 40.0, 4001).unwrap();
        assert!((s.epsilon - 0.5).abs() < 1e-9);
    }

    #[test]
    fn rejects_small_grid() {
        let f = Family::laplace(1.0).unwrap();
        assert!(privacy_loss_sweep_family(f, 0.0, 1.0, 10.0, 1000).is_err());
        assert!(privacy_loss_sweep_family(f, 0.0, 1.0, 0.0, 1001).is_err());
    }
}
