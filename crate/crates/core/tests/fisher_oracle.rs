use raodp::family::{fisher_information_closed, log_density};
use raodp::oracle::{fisher_information_numeric, integrate, QuadratureSpec};
use raodp::{Family, ParamPoint};

fn families() -> Vec<Family> {
    let mut out = Vec::new();
    for s in [0.25, 0.5, 1.0, 2.0, 7.5] {
        out.push(Family::gaussian(s).unwrap());
        out.push(Family::laplace(s).unwrap());
        for n in [1.0, 1.5, 2.0, 3.0, 4.0] {
            out.push(Family::gen_gaussian(s, n).unwrap());
        }
    }
    out
}

fn points() -> Vec<ParamPoint> {
    let mut pts: Vec<ParamPoint> = families().into_iter().map(|f| f.at(0.7).unwrap()).collect();
    for (mu, sigma) in [(0.0, 2.0), (-3.0, 0.4), (10.0, 5.0)] {
        pts.push(Family::gaussian_loc_scale().point(&[mu, sigma]).unwrap());
    }
    pts
}

#[test]
fn closed_fisher_matches_quadrature() {
    let spec = QuadratureSpec::default();
    for p in points() {
        let closed = fisher_information_closed(&p);
        let numeric = fisher_information_numeric(&p, &spec).unwrap();
        let scale = closed.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (c, n) in closed.iter().zip(numeric.iter()) {
            assert!(
                (c - n).abs() <= 1e-6 * scale,
                "{p:?}: closed {closed} numeric {numeric}"
            );
        }
    }
}

#[test]
fn densities_integrate_to_one() {
    let spec = QuadratureSpec::default();
    for p in points() {
        let reach = spec.integration_halfwidth * p.spread();
        let mass = integrate(
            |x| log_density(&p, x).unwrap().exp(),
            p.mu() - reach,
            p.mu() + reach,
            &[p.mu()],
            &spec,
        )
        .unwrap();
        assert!((mass.value - 1.0).abs() < 1e-9, "{p:?}: {}", mass.value);
    }
}
