//! Sensitivity, Rao-DP calibration, and sanitization.
//!
//! Adjacency is replace-one: neighbouring datasets have the same size and
//! differ in exactly one record. Sensitivity is measured with `|·|` on ℝ.
//!
//! A mechanism releases one draw from a location family centred at the true
//! answer. Its Rao distance across neighbours is `Δ · sqrt(g₁₁(σ))`, so the
//! minimal admissible scale solves `Δ · sqrt(g₁₁(σ)) = θ`:
//!
//! * Laplace and Gaussian: `σ = Δ/θ`;
//! * generalized Gaussian of shape N: `σ = (Δ · N · sqrt(Γ(2-1/N)/Γ(1/N)) / θ)^N`.
//!
//! [`Formula::Literal`] gives the linear form
//! `σ = Δ · sqrt(N Γ(2-1/N)/Γ(1+1/N)) / θ` instead, which only meets the budget
//! when it coincides with the above.
//!
//! Post-processing a released value never changes its Rao distance bound, so
//! budgets are charged once, when a value is sanitized, and never again.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::family::{sample_with, Family, Scale, Shape};
use crate::geometry::{literal_gen_gaussian_constant, Formula};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    /// Number of records whose value lies in `[lower, upper]`.
    CountWithPredicate,
    /// Sum of records, each promised to lie in `[lower, upper]`.
    Sum,
    /// Mean of `n_records` records, each promised to lie in `[lower, upper]`.
    Mean,
}

/// A scalar query together with the public facts its sensitivity depends on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuerySpec {
    pub kind: QueryKind,
    pub lower: f64,
    pub upper: f64,
    pub n_records: Option<usize>,
}

impl QuerySpec {
    pub fn new(kind: QueryKind, lower: f64, upper: f64, n_records: Option<usize>) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(invalid(format!(
                "bounds must be finite with lower < upper, got [{lower}, {upper}]"
            )));
        }
        if kind == QueryKind::Mean && !matches!(n_records, Some(n) if n >= 1) {
            return Err(invalid("mean queries need n_records >= 1"));
        }
        Ok(Self {
            kind,
            lower,
            upper,
            n_records,
        })
    }

    pub fn count(lower: f64, upper: f64) -> Result<Self> {
        Self::new(QueryKind::CountWithPredicate, lower, upper, None)
    }

    pub fn sum(lower: f64, upper: f64) -> Result<Self> {
        Self::new(QueryKind::Sum, lower, upper, None)
    }

    pub fn mean(lower: f64, upper: f64, n_records: usize) -> Result<Self> {
        Self::new(QueryKind::Mean, lower, upper, Some(n_records))
    }

    /// Evaluates the query on the raw records.
    ///
    /// Sum and mean queries reject any record outside the declared bounds,
    /// since such a record would break the sensitivity promise. Mean queries
    /// also require exactly `n_records` records.
    pub fn evaluate(&self, values: &[f64]) -> Result<f64> {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(invalid(format!("record {index} is not finite: {value}")));
        }
        match self.kind {
            QueryKind::CountWithPredicate => Ok(values
                .iter()
                .filter(|v| (self.lower..=self.upper).contains(*v))
                .count() as f64),
            QueryKind::Sum | QueryKind::Mean => {
                if let Some((index, &value)) = values
                    .iter()
                    .enumerate()
                    .find(|(_, v)| !(self.lower..=self.upper).contains(*v))
                {
                    return Err(Error::OutOfBounds {
                        index,
                        value,
                        lower: self.lower,
                        upper: self.upper,
                    });
                }
                let total: f64 = values.iter().sum();
                if self.kind == QueryKind::Sum {
                    return Ok(total);
                }
                let n = self.n_records.expect("validated mean query");
                if values.len() != n {
                    return Err(invalid(format!(
                        "mean query declared {n} records but received {}",
                        values.len()
                    )));
                }
                Ok(total / n as f64)
            }
        }
    }
}

/// Global sensitivity of the query under replace-one adjacency.
pub fn sensitivity(query: &QuerySpec) -> f64 {
    match query.kind {
        QueryKind::CountWithPredicate => 1.0,
        QueryKind::Sum => query.upper - query.lower,
        QueryKind::Mean => (query.upper - query.lower) / query.n_records.unwrap_or(1) as f64,
    }
}

/// Noise family of a mechanism, before its scale is fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MechanismKind {
    Laplace,
    Gaussian,
    GenGaussian(Shape),
}

impl MechanismKind {
    pub fn gen_gaussian(shape: f64) -> Result<Self> {
        Ok(MechanismKind::GenGaussian(Shape::new(shape)?))
    }

    /// The location family with the given scale.
    pub fn family(&self, scale: f64) -> Result<Family> {
        let s = Scale::new(scale)?;
        Ok(match *self {
            MechanismKind::Laplace => Family::LaplaceLoc(s),
            MechanismKind::Gaussian => Family::GaussianLoc(s),
            MechanismKind::GenGaussian(n) => Family::GenGaussianLoc(s, n),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            MechanismKind::Laplace => "laplace",
            MechanismKind::Gaussian => "gaussian",
            MechanismKind::GenGaussian(_) => "gengauss",
        }
    }
}

impl std::fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MechanismKind::GenGaussian(n) => write!(f, "gengauss(shape={})", n.get()),
            other => f.write_str(other.name()),
        }
    }
}

fn ensure_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive")))
    }
}

/// Minimal scale for which the mechanism satisfies θ-Rao DP at sensitivity Δ.
pub fn calibrate(kind: MechanismKind, delta: f64, theta: f64) -> Result<f64> {
    calibrate_with(kind, delta, theta, Formula::Corrected)
}

pub fn calibrate_with(
    kind: MechanismKind,
    delta: f64,
    theta: f64,
    formula: Formula,
) -> Result<f64> {
    ensure_positive("delta", delta)?;
    ensure_positive("theta", theta)?;
    Ok(match kind {
        MechanismKind::Laplace | MechanismKind::Gaussian => delta / theta,
        MechanismKind::GenGaussian(n) => {
            let n = n.get();
            match formula {
                Formula::Corrected => {
                    let root = delta * n * (gamma(2.0 - 1.0 / n) / gamma(1.0 / n)).sqrt() / theta;
                    root.powf(n)
                }
                Formula::Literal => delta * literal_gen_gaussian_constant(n) / theta,
            }
        }
    })
}

/// A calibrated mechanism: family, sensitivity Δ, Rao budget θ and scale σ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MechanismSpec {
    kind: MechanismKind,
    sensitivity: f64,
    theta: f64,
    scale: f64,
}

impl MechanismSpec {
    /// The mechanism with the minimal admissible scale.
    pub fn calibrated(kind: MechanismKind, sensitivity: f64, theta: f64) -> Result<Self> {
        let scale = calibrate(kind, sensitivity, theta)?;
        Ok(Self {
            kind,
            sensitivity,
            theta,
            scale,
        })
    }

    /// A mechanism with an explicit scale, which must not be below the calibrated one.
    pub fn with_scale(
        kind: MechanismKind,
        sensitivity: f64,
        theta: f64,
        scale: f64,
    ) -> Result<Self> {
        let minimal = calibrate(kind, sensitivity, theta)?;
        ensure_positive("scale", scale)?;
        if scale < minimal {
            return Err(invalid(format!(
                "scale {scale} is below the calibrated minimum {minimal} for theta={theta}"
            )));
        }
        Ok(Self {
            kind,
            sensitivity,
            theta,
            scale,
        })
    }

    pub fn kind(&self) -> MechanismKind {
        self.kind
    }

    pub fn sensitivity(&self) -> f64 {
        self.sensitivity
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn family(&self) -> Family {
        self.kind.family(self.scale).expect("validated scale")
    }
}

/// Releases one draw from the mechanism centred at `true_value`.
pub fn sanitize(true_value: f64, mech: &MechanismSpec, seed: u64) -> Result<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    sanitize_with(true_value, mech, &mut rng)
}

/// Like [`sanitize`], drawing from stream `release_index` of the generator
/// seeded with `seed`. Distinct releases under one seed get independent noise.
pub fn sanitize_release(
    true_value: f64,
    mech: &MechanismSpec,
    seed: u64,
    release_index: u64,
) -> Result<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(release_index);
    sanitize_with(true_value, mech, &mut rng)
}

pub fn sanitize_with<R: Rng + ?Sized>(
    true_value: f64,
    mech: &MechanismSpec,
    rng: &mut R,
) -> Result<f64> {
    let point = mech.family().at(true_value)?;
    Ok(sample_with(&point, rng, 1)[0])
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::geometry::rao_distance_location;

    #[test]
    fn sensitivities() {
        assert_eq!(sensitivity(&QuerySpec::count(0.0, 1.0).unwrap()), 1.0);
        assert_eq!(sensitivity(&QuerySpec::sum(0.0, 1.0).unwrap()), 1.0);
        assert_eq!(sensitivity(&QuerySpec::mean(0.0, 1.0, 100).unwrap()), 0.01);
    }

    #[test]
    fn query_validation() {
        assert!(QuerySpec::sum(1.0, 1.0).is_err());
        assert!(QuerySpec::mean(0.0, 1.0, 0).is_err());
        assert!(QuerySpec::new(QueryKind::Mean, 0.0, 1.0, None).is_err());
    }

    #[test]
    fn evaluation_and_bounds() {
        let q = QuerySpec::mean(0.0, 1.0, 4).unwrap();
        assert_eq!(q.evaluate(&[0.0, 0.5, 1.0, 0.5]).unwrap(), 0.5);
        assert!(matches!(
            q.evaluate(&[0.0, 1.5, 1.0, 0.5]),
            Err(Error::OutOfBounds { index: 1, .. })
        ));
        assert!(q.evaluate(&[0.0, 0.5]).is_err());
        let c = QuerySpec::count(0.25, 0.75).unwrap();
        assert_eq!(c.evaluate(&[0.0, 0.3, 0.75, 2.0]).unwrap(), 2.0);
        assert_eq!(
            QuerySpec::sum(-1.0, 1.0)
                .unwrap()
                .evaluate(&[-1.0, 0.5])
                .unwrap(),
            -0.5
        );
    }

    #[test]
    fn calibration_examples() {
        assert_eq!(calibrate(MechanismKind::Laplace, 1.0, 0.5).unwrap(), 2.0);
        assert_eq!(calibrate(MechanismKind::Gaussian, 2.0, 1.0).unwrap(), 2.0);
        let n2 = MechanismKind::gen_gaussian(2.0).unwrap();
        assert_abs_diff_eq!(calibrate(n2, 1.0, 1.0).unwrap(), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            calibrate_with(n2, 1.0, 1.0, Formula::Literal).unwrap(),
            2f64.sqrt(),
            epsilon = 1e-14
        );
        let n1 = MechanismKind::gen_gaussian(1.0).unwrap();
        assert_abs_diff_eq!(calibrate(n1, 1.0, 0.5).unwrap(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn calibration_rejects_non_positive() {
        let err = calibrate(MechanismKind::Gaussian, 0.0, 1.0).unwrap_err();
        assert_eq!(err.to_string(), "delta must be positive");
        assert!(calibrate(MechanismKind::Gaussian, 1.0, -1.0).is_err());
        assert!(calibrate(MechanismKind::Gaussian, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn calibrated_gen_gaussian_meets_budget_exactly() {
        let kind = MechanismKind::gen_gaussian(2.0).unwrap();
        let sigma = calibrate(kind, 1.0, 1.0).unwrap();
        let d = rao_distance_location(kind.family(sigma).unwrap(), 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(d.value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn spec_never_under_noised() {
        assert!(MechanismSpec::with_scale(MechanismKind::Laplace, 1.0, 0.5, 1.9).is_err());
        let m = MechanismSpec::with_scale(MechanismKind::Laplace, 1.0, 0.5, 2.5).unwrap();
        assert_eq!(m.scale(), 2.5);
    }

    #[test]
    fn sanitize_is_deterministic() {
        let m = MechanismSpec::calibrated(MechanismKind::Gaussian, 1.0, 1.0).unwrap();
        assert_eq!(sanitize(3.0, &m, 9).unwrap(), sanitize(3.0, &m, 9).unwrap());
    }

    #[test]
    fn release_streams_differ() {
        let m = MechanismSpec::calibrated(MechanismKind::Laplace, 1.0, 1.0).unwrap();
        let a = sanitize_release(0.0, &m, 4, 0).unwrap();
        assert_eq!(a, sanitize_release(0.0, &m, 4, 0).unwrap());
        assert_ne!(a, sanitize_release(0.0, &m, 4, 1).unwrap());
    }

    #[test]
    fn laplace_release_mean() {
        let m = MechanismSpec::with_scale(MechanismKind::Laplace, 1.0, 0.5, 2.0).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let n = 100_000;
        let mean = (0..n)
            .map(|_| sanitize_with(10.0, &m, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        // sd of the mean is 2√2/√n ≈ 0.0089
        assert!((mean - 10.0).abs() < 0.03, "{mean}");
    }

    #[test]
    fn gaussian_release_quantiles() {
        let m = MechanismSpec::calibrated(MechanismKind::Gaussian, 1.0, 1.0).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let n = 100_000;
        let inside = (0..n)
            .filter(|_| sanitize_with(0.0, &m, &mut rng).unwrap().abs() <= 1.96)
            .count() as f64
            / n as f64;
        assert!((inside - 0.95).abs() < 0.003, "{inside}");
    }
}
