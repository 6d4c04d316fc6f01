//! Parametric density families used as privacy mechanisms.
//!
//! Four families are catalogued:
//!
//! | family            | coordinates | density                                            |
//! |-------------------|-------------|----------------------------------------------------|
//! | `GaussianLocScale`| (μ, σ)      | (2πσ²)^(-1/2) exp(-(x-μ)²/(2σ²))                   |
//! | `GaussianLoc(σ)`  | (μ)         | same, σ fixed                                      |
//! | `LaplaceLoc(σ)`   | (μ)         | (2σ)^(-1) exp(-\|x-μ\|/σ)                          |
//! | `GenGaussianLoc(σ, N)` | (μ)    | (2σ^(1/N) Γ(1/N)/N)^(-1) exp(-\|x-μ\|^N/σ)         |
//!
//! **Generalized Gaussian scale convention.** The scale σ divides `|x-μ|^N`
//! directly, so σ carries units of `x^N` and the natural spread of the density
//! is `σ^(1/N)`. This is *not* the common `exp(-(|x-μ|/s)^N)` convention; the two
//! are related by `σ = s^N`. With N = 1 the family is exactly `LaplaceLoc(σ)`;
//! with N = 2 it is a Gaussian with standard deviation `sqrt(σ/2)`.
//!
//! # Sampling
//!
//! Every sampler is driven by [`ChaCha20Rng`] seeded with
//! [`SeedableRng::seed_from_u64`], so a seed fully determines the output.
//! Gaussian draws use the `rand_distr` ziggurat `Normal`; Laplace draws use the
//! inverse CDF on an open-interval uniform; generalized Gaussian draws use the
//! Gamma transform `x = μ ± G^(1/N)` with `G ~ Gamma(1/N, scale σ)` and a fair
//! random sign.

use std::f64::consts::LN_2;

use nalgebra::DMatrix;
use rand::distr::{Distribution, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Gamma, Normal};
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma, gamma_lr, ln_gamma};

use crate::error::{invalid, Result};

/// A strictly positive, finite scale parameter.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Scale(f64);

impl Scale {
    pub fn new(sigma: f64) -> Result<Self> {
        if sigma.is_finite() && sigma > 0.0 {
            Ok(Self(sigma))
        } else {
            Err(invalid(format!(
                "scale must be positive and finite, got {sigma}"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Generalized Gaussian shape exponent, `N >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Shape(f64);

impl Shape {
    pub fn new(n: f64) -> Result<Self> {
        if n.is_finite() && n >= 1.0 {
            Ok(Self(n))
        } else {
            Err(invalid(format!("shape must be finite and >= 1, got {n}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// A parametric density family. Location families carry their fixed scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    GaussianLocScale,
    GaussianLoc(Scale),
    LaplaceLoc(Scale),
    GenGaussianLoc(Scale, Shape),
}

impl Family {
    pub fn gaussian_loc_scale() -> Self {
        Family::GaussianLocScale
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        Ok(Family::GaussianLoc(Scale::new(sigma)?))
    }

    pub fn laplace(sigma: f64) -> Result<Self> {
        Ok(Family::LaplaceLoc(Scale::new(sigma)?))
    }

    pub fn gen_gaussian(sigma: f64, shape: f64) -> Result<Self> {
        Ok(Family::GenGaussianLoc(
            Scale::new(sigma)?,
            Shape::new(shape)?,
        ))
    }

    /// Number of manifold coordinates: 1 for location families, 2 for (μ, σ).
    pub fn arity(&self) -> usize {
        match self {
            Family::GaussianLocScale => 2,
            _ => 1,
        }
    }

    pub fn is_location(&self) -> bool {
        self.arity() == 1
    }

    /// The fixed scale of a location family, `None` for `GaussianLocScale`.
    pub fn fixed_scale(&self) -> Option<f64> {
        match *self {
            Family::GaussianLocScale => None,
            Family::GaussianLoc(s) | Family::LaplaceLoc(s) | Family::GenGaussianLoc(s, _) => {
                Some(s.get())
            }
        }
    }

    pub fn shape(&self) -> Option<f64> {
        match *self {
            Family::GenGaussianLoc(_, n) => Some(n.get()),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::GaussianLocScale => "gaussian-full",
            Family::GaussianLoc(_) => "gaussian",
            Family::LaplaceLoc(_) => "laplace",
            Family::GenGaussianLoc(..) => "gengauss",
        }
    }

    /// Point of this family at the given coordinates.
    pub fn point(&self, coords: &[f64]) -> Result<ParamPoint> {
        ParamPoint::new(*self, coords)
    }

    /// Point of a location family at location `mu`.
    pub fn at(&self, mu: f64) -> Result<ParamPoint> {
        ParamPoint::new(*self, &[mu])
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            Family::GaussianLocScale => write!(f, "gaussian-full"),
            Family::GaussianLoc(s) => write!(f, "gaussian(sigma={})", s.get()),
            Family::LaplaceLoc(s) => write!(f, "laplace(sigma={})", s.get()),
            Family::GenGaussianLoc(s, n) => {
                write!(f, "gengauss(sigma={}, shape={})", s.get(), n.get())
            }
        }
    }
}

/// A coordinate point on a family's statistical manifold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamPoint {
    family: Family,
    coords: [f64; 2],
}

impl ParamPoint {
    pub fn new(family: Family, coords: &[f64]) -> Result<Self> {
        if coords.len() != family.arity() {
            return Err(invalid(format!(
                "{} expects {} coordinate(s), got {}",
                family.name(),
                family.arity(),
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid("coordinates must be finite"));
        }
        let sigma = match family.fixed_scale() {
            Some(s) => s,
            None => {
                if coords[1] <= 0.0 {
                    return Err(invalid(format!(
                        "sigma coordinate must be positive, got {}",
                        coords[1]
                    )));
                }
                coords[1]
            }
        };
        Ok(Self {
            family,
            coords: [coords[0], sigma],
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.family.arity()]
    }

    pub fn mu(&self) -> f64 {
        self.coords[0]
    }

    /// The scale: the σ coordinate for `GaussianLocScale`, the fixed scale otherwise.
    pub fn sigma(&self) -> f64 {
        self.coords[1]
    }

    /// Natural spread of the density in units of x (σ^(1/N) for the generalized Gaussian).
    pub fn spread(&self) -> f64 {
        match self.family.shape() {
            Some(n) => self.sigma().powf(1.0 / n),
            None => self.sigma(),
        }
    }

    /// Same point with the location moved to `mu`.
    pub fn with_mu(&self, mu: f64) -> Self {
        Self {
            family: self.family,
            coords: [mu, self.coords[1]],
        }
    }
}

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// `log f(x; θ)`.
pub fn log_density(point: &ParamPoint, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(invalid(format!("x must be finite, got {x}")));
    }
    Ok(log_density_unchecked(point, x))
}

pub(crate) fn log_density_unchecked(point: &ParamPoint, x: f64) -> f64 {
    let (mu, sigma) = (point.mu(), point.sigma());
    match point.family {
        Family::GaussianLocScale | Family::GaussianLoc(_) => {
            let z = (x - mu) / sigma;
            -HALF_LN_2PI - sigma.ln() - 0.5 * z * z
        }
        Family::LaplaceLoc(_) => -(LN_2 + sigma.ln()) - (x - mu).abs() / sigma,
        Family::GenGaussianLoc(_, n) => {
            let n = n.get();
            gen_gaussian_log_norm(sigma, n) - (x - mu).abs().powf(n) / sigma
        }
    }
}

/// `-log(2 σ^(1/N) Γ(1/N) / N)`.
fn gen_gaussian_log_norm(sigma: f64, n: f64) -> f64 {
    -(LN_2 + sigma.ln() / n + ln_gamma(1.0 / n) - n.ln())
}

/// Cumulative distribution function.
pub fn cdf(point: &ParamPoint, x: f64) -> f64 {
    if x >= point.mu() {
        1.0 - upper_tail(point, x - point.mu())
    } else {
        upper_tail(point, point.mu() - x)
    }
}

/// Survival function `1 - cdf`, accurate in the upper tail.
pub fn sf(point: &ParamPoint, x: f64) -> f64 {
    if x >= point.mu() {
        upper_tail(point, x - point.mu())
    } else {
        1.0 - upper_tail(point, point.mu() - x)
    }
}

/// `P(X - μ > r)` for `r >= 0`; all catalog densities are symmetric about μ.
fn upper_tail(point: &ParamPoint, r: f64) -> f64 {
    let sigma = point.sigma();
    match point.family {
        Family::GaussianLocScale | Family::GaussianLoc(_) => {
            0.5 * erfc(r / (sigma * std::f64::consts::SQRT_2))
        }
        Family::LaplaceLoc(_) => 0.5 * (-r / sigma).exp(),
        Family::GenGaussianLoc(_, n) => {
            let n = n.get();
            let z = r.powf(n) / sigma;
            if z <= 0.0 {
                0.5
            } else if !z.is_finite() {
                0.0
            } else {
                0.5 * (1.0 - gamma_lr(1.0 / n, z))
            }
        }
    }
}

/// Draws `n` values from the density at `point`, fully determined by `seed`.
pub fn sample(point: &ParamPoint, seed: u64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(invalid("sample count must be at least 1"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    Ok(sample_with(point, &mut rng, n))
}

/// Draws `n` values using a caller-supplied generator.
pub fn sample_with<R: Rng + ?Sized>(point: &ParamPoint, rng: &mut R, n: usize) -> Vec<f64> {
    let (mu, sigma) = (point.mu(), point.sigma());
    match point.family {
        Family::GaussianLocScale | Family::GaussianLoc(_) => {
            let normal = Normal::new(mu, sigma).expect("validated scale");
            normal.sample_iter(rng).take(n).collect()
        }
        Family::LaplaceLoc(_) => (0..n)
            .map(|_| {
                let u: f64 = Open01.sample(rng);
                let v = u - 0.5;
                mu - sigma * v.signum() * (1.0 - 2.0 * v.abs()).ln()
            })
            .collect(),
        Family::GenGaussianLoc(_, shape) => {
            let shape = shape.get();
            let g = Gamma::new(1.0 / shape, sigma).expect("validated scale and shape");
            (0..n)
                .map(|_| {
                    let r = g.sample(rng).powf(1.0 / shape);
                    if rng.random::<bool>() {
                        mu + r
                    } else {
                        mu - r
                    }
                })
                .collect()
        }
    }
}

/// Closed-form Fisher information matrix, in the coordinates of [`ParamPoint::coords`].
pub fn fisher_information_closed(point: &ParamPoint) -> DMatrix<f64> {
    let sigma = point.sigma();
    match point.family {
        Family::GaussianLocScale => {
            let s2 = sigma * sigma;
            DMatrix::from_row_slice(2, 2, &[1.0 / s2, 0.0, 0.0, 2.0 / s2])
        }
        Family::GaussianLoc(_) | Family::LaplaceLoc(_) => {
            DMatrix::from_element(1, 1, 1.0 / (sigma * sigma))
        }
        Family::GenGaussianLoc(_, n) => {
            DMatrix::from_element(1, 1, gen_gaussian_location_information(sigma, n.get()))
        }
    }
}

/// `N² σ^(-2/N) Γ(2 - 1/N) / Γ(1/N)`: the location Fisher information of the
/// generalized Gaussian.
pub fn gen_gaussian_location_information(sigma: f64, n: f64) -> f64 {
    n * n * sigma.powf(-2.0 / n) * gamma(2.0 - 1.0 / n) / gamma(1.0 / n)
}
