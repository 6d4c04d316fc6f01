use nalgebra::DMatrix;

use crate::error::Result;
use crate::family::{log_density_unchecked, ParamPoint};
use crate::oracle::quadrature::{integrate, QuadratureSpec};

/// Relative step for the central differences of `log f` in the parameters.
pub const SCORE_STEP: f64 = 1e-5;

/// Fisher information `E[∂ᵢ log f · ∂ⱼ log f]` by quadrature, with the score
/// taken by central finite differences in the coordinates.
///
/// The integral is truncated at `spec.integration_halfwidth` natural spreads
/// from μ and split at μ, where the Laplace-type densities have their kink.
pub fn fisher_information_numeric(
    point: &ParamPoint,
    spec: &QuadratureSpec,
) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let arity = point.family().arity();
    let coords = point.coords().to_vec();
    let mut plus = Vec::with_capacity(arity);
    let mut minus = Vec::with_capacity(arity);
    let mut steps = Vec::with_capacity(arity);
    for i in 0..arity {
        let h = SCORE_STEP * coords[i].abs().max(1.0);
        let mut up = coords.clone();
        let mut down = coords.clone();
        up[i] += h;
        down[i] -= h;
        plus.push(ParamPoint::new(point.family(), &up)?);
        minus.push(ParamPoint::new(point.family(), &down)?);
        steps.push(h);
    }
    let score = |i: usize, x: f64| {
        (log_density_unchecked(&plus[i], x) - log_density_unchecked(&minus[i], x))
            / (2.0 * steps[i])
    };

    let reach = spec.integration_halfwidth * point.spread();
    let (lo, hi) = (point.mu() - reach, point.mu() + reach);
    let mut g = DMatrix::zeros(arity, arity);
    for i in 0..arity {
        for j in i..arity {
            let r = integrate(
                |x| score(i, x) * score(j, x) * log_density_unchecked(point, x).exp(),
                lo,
                hi,
                &[point.mu()],
                spec,
            )?;
            g[(i, j)] = r.value;
            g[(j, i)] = r.value;
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::Family;

    fn g11(point: &ParamPoint) -> f64 {
        fisher_information_numeric(point, &QuadratureSpec::default()).unwrap()[(0, 0)]
    }

    #[test]
    fn example_matrix() {
        let p = Family::gaussian_loc_scale().point(&[0.0, 2.0]).unwrap();
        let g = fisher_information_numeric(&p, &QuadratureSpec::default()).unwrap();
        assert!((g[(0, 0)] - 0.25).abs() < 1e-6);
        assert!((g[(1, 1)] - 0.5).abs() < 1e-6);
        assert!(g[(0, 1)].abs() < 1e-6);
        assert_eq!(g[(0, 1)], g[(1, 0)]);
    }

    #[test]
    fn laplace_kink() {
        let p = Family::laplace(1.0).unwrap().at(0.3).unwrap();
        assert!((g11(&p) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn gen_gaussian_shape_four() {
        // 16 Γ(1.75)/Γ(0.25) from tabulated Gamma values.
        let expected = 16.0 * 0.919_062_526_848_883_2 / 3.625_609_908_221_908;
        let p = Family::gen_gaussian(1.0, 4.0).unwrap().at(0.0).unwrap();
        assert!((g11(&p) - expected).abs() < 1e-6 * expected);
    }
}
