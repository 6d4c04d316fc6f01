//! Monte-Carlo divergence estimates.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::family::{log_density_unchecked, sample, ParamPoint};

/// Which divergence to estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Divergence {
    KullbackLeibler,
    /// Rényi divergence of order α > 1.
    Renyi(f64),
}

/// A Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Estimates `D(f₁ ‖ f₂)` from `n` draws of `f₁`.
///
/// KL is the sample mean of `log f₁ - log f₂`. Rényi uses
/// `D_α = log E_{f₁}[(f₁/f₂)^(α-1)] / (α - 1)`, computed in log space; its
/// standard error is the delta-method transform of the sample standard error
/// of the inner mean.
pub fn divergence_mc(
    kind: Divergence,
    p1: &ParamPoint,
    p2: &ParamPoint,
    n: usize,
    seed: u64,
) -> Result<McEstimate> {
    if p1.family() != p2.family() {
        return Err(Error::FamilyMismatch(format!(
            "{} vs {}",
            p1.family(),
            p2.family()
        )));
    }
    if n < 2 {
        return Err(invalid("Monte-Carlo estimates need at least 2 samples"));
    }
    if let Divergence::Renyi(alpha) = kind {
        if !(alpha > 1.0 && alpha.is_finite()) {
            return Err(invalid(format!("Renyi order must exceed 1, got {alpha}")));
        }
    }
    let xs = sample(p1, seed, n)?;
    let log_ratios: Vec<f64> = xs
        .iter()
        .map(|&x| log_density_unchecked(p1, x) - log_density_unchecked(p2, x))
        .collect();
    let nf = n as f64;
    let (value, std_error) = match kind {
        Divergence::KullbackLeibler => {
            let (mean, sd) = mean_sd(log_ratios.iter().copied());
            (mean, sd / nf.sqrt())
        }
        Divergence::Renyi(alpha) => {
            let order = alpha - 1.0;
            let shift = log_ratios
                .iter()
                .fold(f64::NEG_INFINITY, |m, &l| m.max(order * l));
            let (mean, sd) = mean_sd(log_ratios.iter().map(|&l| (order * l - shift).exp()));
            let value = (mean.ln() + shift) / order;
            (value, sd / nf.sqrt() / (order * mean))
        }
    };
    Ok(McEstimate {
        value,
        std_error,
        n_samples: n,
        seed,
    })
}

fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (count, mean) = values
        .clone()
        .fold((0usize, 0.0), |(c, s), v| (c + 1, s + v));
    let mean = mean / count as f64;
    let ss: f64 = values.map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (count - 1) as f64).sqrt())
}
