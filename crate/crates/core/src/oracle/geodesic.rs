//! Numeric geodesic distances by discrete path relaxation.
//!
//! A path with fixed endpoints and `K` interior nodes is relaxed to a minimum
//! of the discrete energy `Σ Δθᵀ g(midpoint) Δθ`, one coordinate of one node at
//! a time (nonlinear Gauss–Seidel, one Newton step per coordinate). Energy
//! minimizers are constant-speed discrete geodesics, so their length is the
//! minimal discrete length. The solve runs coarse-to-fine: the straight
//! coordinate line initializes a 16-segment path, and each converged level is
//! resampled onto twice as many segments until the requested `K` is reached.
//! The change between the last two levels gives the reported error estimate.
//!
//! The metric is computed by quadrature at one reference point and moved
//! around the manifold by the family's symmetry: location families are
//! translation invariant, and for the location-scale Gaussian
//! `g(μ, σ) = g(0, 1) / σ²`. No closed-form Fisher information enters, so the
//! oracle is independent of the formulas it checks.

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::family::{fisher_information_closed, Family, ParamPoint};
use crate::geometry::{DistanceReport, Method};
use crate::oracle::fisher::fisher_information_numeric;
use crate::oracle::quadrature::QuadratureSpec;

/// A Riemannian metric on one family's coordinate space.
#[derive(Debug, Clone)]
pub struct Metric {
    family: Family,
    source: MetricSource,
}

#[derive(Debug, Clone)]
enum MetricSource {
    ClosedForm,
    /// Tensor at the reference point (μ = 0, σ = 1 where σ is a coordinate).
    Reference([[f64; 2]; 2]),
}

impl Metric {
    /// The closed-form Fisher information.
    pub fn closed_form(family: Family) -> Self {
        Self {
            family,
            source: MetricSource::ClosedForm,
        }
    }

    /// Quadrature Fisher information at a reference point, transported by symmetry.
    pub fn quadrature(family: Family, spec: &QuadratureSpec) -> Result<Self> {
        let reference = match family {
            Family::GaussianLocScale => family.point(&[0.0, 1.0])?,
            _ => family.at(0.0)?,
        };
        let g = fisher_information_numeric(&reference, spec)?;
        let mut tensor = [[0.0; 2]; 2];
        for i in 0..family.arity() {
            for j in 0..family.arity() {
                tensor[i][j] = g[(i, j)];
            }
        }
        Ok(Self {
            family,
            source: MetricSource::Reference(tensor),
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Metric tensor at `coords` (only the leading `arity` entries are used).
    pub fn tensor(&self, coords: [f64; 2]) -> [[f64; 2]; 2] {
        match &self.source {
            MetricSource::Reference(g) => match self.family {
                Family::GaussianLocScale => {
                    let k = 1.0 / (coords[1] * coords[1]);
                    [[g[0][0] * k, g[0][1] * k], [g[1][0] * k, g[1][1] * k]]
                }
                _ => *g,
            },
            MetricSource::ClosedForm => {
                let point = match self.family {
                    Family::GaussianLocScale => self.family.point(&coords),
                    _ => self.family.at(coords[0]),
                }
                .expect("coordinates stay inside the manifold");
                let g: DMatrix<f64> = fisher_information_closed(&point);
                let mut t = [[0.0; 2]; 2];
                for i in 0..g.nrows() {
                    for j in 0..g.ncols() {
                        t[i][j] = g[(i, j)];
                    }
                }
                t
            }
        }
    }

    fn arity(&self) -> usize {
        self.family.arity()
    }

    fn quad_form(&self, at: [f64; 2], v: [f64; 2]) -> f64 {
        let g = self.tensor(at);
        let n = self.arity();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += g[i][j] * v[i] * v[j];
            }
        }
        s
    }

    fn segment_energy(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        self.quad_form(mid, [b[0] - a[0], b[1] - a[1]])
    }

    fn segment_length(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        self.segment_energy(a, b).max(0.0).sqrt()
    }
}

fn raw(point: &ParamPoint) -> [f64; 2] {
    [point.mu(), point.sigma()]
}

fn raw_path_length(metric: &Metric, path: &[[f64; 2]]) -> f64 {
    path.windows(2)
        .map(|w| metric.segment_length(w[0], w[1]))
        .sum()
}

/// First-order line-element integration: `Σ sqrt(Δθᵀ g(midpoint) Δθ)`.
pub fn path_length(metric: &Metric, path: &[ParamPoint]) -> Result<f64> {
    if path.len() < 2 {
        return Err(invalid("a path needs at least two points"));
    }
    if let Some(p) = path.iter().find(|p| p.family() != metric.family()) {
        return Err(Error::FamilyMismatch(format!(
            "path point in {} but metric is on {}",
            p.family(),
            metric.family()
        )));
    }
    let raw_path: Vec<[f64; 2]> = path.iter().map(raw).collect();
    Ok(raw_path_length(metric, &raw_path))
}

/// Controls for [`geodesic_distance_numeric_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicOptions {
    /// Interior nodes of the finest path; at least 63.
    pub interior_points: usize,
    /// Stop a level when one sweep improves the energy by less than this fraction.
    pub rel_tol: f64,
    /// Sweep budget per level.
    pub max_sweeps: usize,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        Self {
            interior_points: 255,
            rel_tol: 1e-10,
            max_sweeps: 50_000,
        }
    }
}

/// Result of a numeric geodesic solve.
#[derive(Debug, Clone)]
pub struct GeodesicReport {
    /// Length of the relaxed path; `oracle_error` is the change from the previous level.
    pub distance: DistanceReport,
    pub converged: bool,
    pub sweeps: usize,
    /// Largest Euler–Lagrange residual along the path, relative to the squared speed.
    pub euler_lagrange_residual: f64,
    pub path: Vec<ParamPoint>,
}

pub fn geodesic_distance_numeric(p1: &ParamPoint, p2: &ParamPoint) -> Result<GeodesicReport> {
    let metric = Metric::quadrature(p1.family(), &QuadratureSpec::default())?;
    geodesic_distance_numeric_with(p1, p2, &metric, &GeodesicOptions::default())
}

pub fn geodesic_distance_numeric_with(
    p1: &ParamPoint,
    p2: &ParamPoint,
    metric: &Metric,
    options: &GeodesicOptions,
) -> Result<GeodesicReport> {
    if p1.family() != p2.family() || p1.family() != metric.family() {
        return Err(Error::FamilyMismatch(format!(
            "{} vs {} on a {} metric",
            p1.family(),
            p2.family(),
            metric.family()
        )));
    }
    if options.interior_points < 63 {
        return Err(invalid("geodesic solver needs at least 63 interior points"));
    }
    let (a, b) = (raw(p1), raw(p2));
    let final_segments = options.interior_points + 1;

    let mut levels = vec![final_segments];
    while *levels.last().unwrap() / 2 >= 16 {
        let next = levels.last().unwrap() / 2;
        levels.push(next);
    }
    levels.reverse();

    let mut path = straight(a, b, levels[0]);
    let mut converged = true;
    let mut sweeps = 0;
    let mut previous_length = None;
    let mut length = 0.0;
    for (i, &segments) in levels.iter().enumerate() {
        if i > 0 {
            previous_length = Some(length);
            path = resample(&path, segments);
        }
        let (ok, n) = relax(metric, &mut path, options);
        converged &= ok;
        sweeps += n;
        length = raw_path_length(metric, &path);
    }
    let oracle_error = previous_length.map_or(0.0, |prev: f64| (length - prev).abs() / 3.0);

    let residual = euler_lagrange_residual(metric, &path);
    let family = p1.family();
    let path = path
        .iter()
        .map(|c| ParamPoint::new(family, &c[..family.arity()]))
        .collect::<Result<Vec<_>>>()?;
    Ok(GeodesicReport {
        distance: DistanceReport {
            value: length,
            method: Method::NumericOracle,
            oracle_error,
        },
        converged,
        sweeps,
        euler_lagrange_residual: residual,
        path,
    })
}

fn straight(a: [f64; 2], b: [f64; 2], segments: usize) -> Vec<[f64; 2]> {
    (0..=segments)
        .map(|i| {
            let t = i as f64 / segments as f64;
            [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
        })
        .collect()
}

/// Linear interpolation of a uniformly parameterized path onto `segments` pieces.
fn resample(path: &[[f64; 2]], segments: usize) -> Vec<[f64; 2]> {
    let old = path.len() - 1;
    (0..=segments)
        .map(|i| {
            let s = i as f64 * old as f64 / segments as f64;
            let k = (s.floor() as usize).min(old - 1);
            let t = s - k as f64;
            let (p, q) = (path[k], path[k + 1]);
            [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
        })
        .collect()
}

fn total_energy(metric: &Metric, path: &[[f64; 2]]) -> f64 {
    path.windows(2)
        .map(|w| metric.segment_energy(w[0], w[1]))
        .sum()
}

/// Gauss–Seidel sweeps until the relative energy improvement drops below tolerance.
fn relax(metric: &Metric, path: &mut [[f64; 2]], options: &GeodesicOptions) -> (bool, usize) {
    let arity = metric.arity();
    let mut energy = total_energy(metric, path);
    if energy == 0.0 {
        return (true, 0);
    }
    for sweep in 1..=options.max_sweeps {
        for j in 1..path.len() - 1 {
            let (prev, next) = (path[j - 1], path[j + 1]);
            for c in 0..arity {
                path[j] = newton_coordinate(metric, prev, path[j], next, c);
            }
        }
        let updated = total_energy(metric, path);
        let improvement = (energy - updated) / energy;
        energy = updated;
        if improvement < options.rel_tol {
            return (true, sweep);
        }
    }
    (false, options.max_sweeps)
}

fn newton_coordinate(
    metric: &Metric,
    prev: [f64; 2],
    node: [f64; 2],
    next: [f64; 2],
    c: usize,
) -> [f64; 2] {
    let local = |p: [f64; 2]| metric.segment_energy(prev, p) + metric.segment_energy(p, next);
    let span = (next[c] - prev[c])
        .abs()
        .max(1e-3 * node[1].abs().max(1e-300));
    let h = 1e-4 * span;
    let shifted = |d: f64| {
        let mut p = node;
        p[c] += d;
        p
    };
    let (qm, q0, qp) = (local(shifted(-h)), local(node), local(shifted(h)));
    let d1 = (qp - qm) / (2.0 * h);
    let d2 = (qp - 2.0 * q0 + qm) / (h * h);
    if d2.is_nan() || d2 <= 0.0 || !d1.is_finite() {
        return node;
    }
    let mut step = -d1 / d2;
    if c == 1 && node[1] + step <= 0.5 * node[1] {
        // σ must stay positive on the location-scale manifold.
        step = -0.5 * node[1];
    }
    let candidate = shifted(step);
    if local(candidate) <= q0 {
        candidate
    } else {
        node
    }
}

/// Residual of `Σᵢ g_ik ẍᵢ + Σᵢⱼ [ij,k] ẋᵢ ẋⱼ = 0` on the interior nodes, with
/// Christoffel symbols of the first kind
/// `[ij,k] = ½(∂ⱼ g_ik + ∂ᵢ g_jk - ∂ₖ g_ij)` taken by central differences.
fn euler_lagrange_residual(metric: &Metric, path: &[[f64; 2]]) -> f64 {
    let n = metric.arity();
    let segments = (path.len() - 1) as f64;
    let dt = 1.0 / segments;
    let speed_sq = (raw_path_length(metric, path)).powi(2);
    if speed_sq == 0.0 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for j in 1..path.len() - 1 {
        let x = path[j];
        let mut vel = [0.0; 2];
        let mut acc = [0.0; 2];
        for i in 0..n {
            vel[i] = (path[j + 1][i] - path[j - 1][i]) / (2.0 * dt);
            acc[i] = (path[j + 1][i] - 2.0 * x[i] + path[j - 1][i]) / (dt * dt);
        }
        // dg[m][i][k] = ∂_m g_ik
        let mut dg = [[[0.0; 2]; 2]; 2];
        for m in 0..n {
            let h = 1e-5 * x[m].abs().max(1.0);
            let mut up = x;
            let mut down = x;
            up[m] += h;
            down[m] -= h;
            let (gu, gd) = (metric.tensor(up), metric.tensor(down));
            for i in 0..n {
                for k in 0..n {
                    dg[m][i][k] = (gu[i][k] - gd[i][k]) / (2.0 * h);
                }
            }
        }
        let g = metric.tensor(x);
        for k in 0..n {
            let mut r = 0.0;
            for i in 0..n {
                r += g[i][k] * acc[i];
                for jj in 0..n {
                    let christoffel = 0.5 * (dg[jj][i][k] + dg[i][jj][k] - dg[k][i][jj]);
                    r += christoffel * vel[i] * vel[jj];
                }
            }
            worst = worst.max(r.abs() / speed_sq);
        }
    }
    worst
}
