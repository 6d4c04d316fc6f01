//! The square-root embedding under binning.
//!
//! Binning the real line is a deterministic post-processing map. By
//! Cauchy–Schwarz on each bin, `√(P₁P₂) ≥ ∫_bin √(f₁f₂)`, so the discrete
//! Bhattacharyya coefficient can only grow and the embedding angle can only
//! shrink.

use crate::error::{invalid, Error, Result};
use crate::family::{cdf, sf, ParamPoint};
use crate::geometry::angle_from_hellinger_sq;

fn bin_mass(p: &ParamPoint, lo: f64, hi: f64) -> f64 {
    // Difference in whichever tail keeps both terms small.
    if lo >= p.mu() {
        sf(p, lo) - sf(p, hi)
    } else {
        cdf(p, hi) - cdf(p, lo)
    }
}

/// Probabilities of `p` on the bins `(-∞, e₀], (e₀, e₁], …, (e_last, ∞)`.
pub fn bin_probabilities(p: &ParamPoint, edges: &[f64]) -> Vec<f64> {
    let mut bounds = Vec::with_capacity(edges.len() + 2);
    bounds.push(f64::NEG_INFINITY);
    bounds.extend_from_slice(edges);
    bounds.push(f64::INFINITY);
    bounds
        .windows(2)
        .map(|w| match (w[0].is_finite(), w[1].is_finite()) {
            (false, _) => cdf(p, w[1]),
            (_, false) => sf(p, w[0]),
            _ => bin_mass(p, w[0], w[1]),
        })
        .map(|m| m.max(0.0))
        .collect()
}

/// Bhattacharyya angle between the binned versions of two densities.
///
/// `edges` must be strictly increasing; `edges.len() + 1` bins result.
pub fn binned_bhattacharyya_angle(p1: &ParamPoint, p2: &ParamPoint, edges: &[f64]) -> Result<f64> {
    if p1.family() != p2.family() {
        return Err(Error::FamilyMismatch(format!(
            "{} vs {}",
            p1.family(),
            p2.family()
        )));
    }
    if edges.is_empty() {
        return Err(invalid("binning needs at least one edge (two bins)"));
    }
    if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("bin edges must be finite and strictly increasing"));
    }
    let a = bin_probabilities(p1, edges);
    let b = bin_probabilities(p2, edges);
    let h: f64 = a
        .iter()
        .zip(&b)
        .map(|(x, y)| {
            let d = x.sqrt() - y.sqrt();
            0.5 * d * d
        })
        .sum();
    Ok(angle_from_hellinger_sq(h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::Family;
    use crate::geometry::bhattacharyya_angle;

    #[test]
    fn probabilities_sum_to_one() {
        let p = Family::laplace(1.5).unwrap().at(0.4).unwrap();
        let probs = bin_probabilities(&p, &[-3.0, -1.0, 0.0, 0.4, 2.0, 9.0]);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn binning_never_increases_angle() {
        let g = Family::gaussian(1.0).unwrap();
        let (a, b) = (g.at(0.0).unwrap(), g.at(1.3).unwrap());
        let full = bhattacharyya_angle(&a, &b).unwrap().value;
        for k in [2usize, 8, 64] {
            let edges: Vec<f64> = (1..k).map(|i| -6.0 + 13.0 * i as f64 / k as f64).collect();
            let binned = binned_bhattacharyya_angle(&a, &b, &edges).unwrap();
            assert!(binned <= full + 1e-12, "k={k}: {binned} > {full}");
        }
    }

    #[test]
    fn rejects_bad_edges() {
        let p = Family::gaussian(1.0).unwrap().at(0.0).unwrap();
        assert!(binned_bhattacharyya_angle(&p, &p, &[]).is_err());
        assert!(binned_bhattacharyya_angle(&p, &p, &[1.0, 0.0]).is_err());
    }
}
