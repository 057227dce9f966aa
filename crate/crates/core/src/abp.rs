//! Contact search, Jacobian bounds and coverage statistics for the map
//! `Φ(x, y) = ∇u(x) + y`.
//!
//! A target `ξ` is matched to the global minimiser of `w = u − ⟨x, ξ⟩` over
//! all vertices, refined once with the local quadratic model of `w`. At the
//! contact the matrix `M = D²u − ⟨II, ȳ⟩` must be positive semidefinite and
//! `det M` is compared with the bound of the active mode.

use nalgebra::{Matrix2, SymmetricEigen, Vector2};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geomconst::{ball_volume, michael_simon_constant, sphere_area};
use crate::halton;
use crate::mesh::{CurvatureData, PatchFit, Point, TriMesh, VertexSymmetricField};
use crate::neumann::{Mode, PotentialSolution};
use crate::quadrature::compensated_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AbpMode {
    /// Planar domain, `M = D²u`.
    Sobolev,
    /// Closed submanifold with `u ≡ 0`, `M = −⟨II, ȳ⟩`.
    Fwc,
    /// Submanifold with potential, targets in the unit ball.
    MichaelSimon,
    /// Closed submanifold with potential, Gaussian targets.
    LogSobolev,
}

impl AbpMode {
    pub fn name(self) -> &'static str {
        match self {
            AbpMode::Sobolev => "sobolev",
            AbpMode::Fwc => "fwc",
            AbpMode::MichaelSimon => "michael_simon",
            AbpMode::LogSobolev => "log_sobolev",
        }
    }

    pub fn from_potential(mode: Mode) -> Self {
        match mode {
            Mode::Sobolev => AbpMode::Sobolev,
            Mode::MichaelSimon => AbpMode::MichaelSimon,
            Mode::LogSobolev => AbpMode::LogSobolev,
        }
    }
}

/// Everything the contact search reads: the mesh, the potential with its
/// recovered derivatives, curvature and the normalised density.
#[derive(Debug, Clone)]
pub struct AbpContext<'a> {
    pub mesh: &'a TriMesh,
    pub mode: AbpMode,
    pub u: Vec<f64>,
    pub fits: VertexSymmetricField,
    pub curvature: Option<CurvatureData>,
    pub density: Vec<f64>,
}

impl<'a> AbpContext<'a> {
    pub fn from_solution(
        mesh: &'a TriMesh,
        mode: Mode,
        solution: &PotentialSolution,
        density: &[f64],
        curvature: Option<CurvatureData>,
    ) -> Result<Self> {
        mesh.check_field(solution.u.len())?;
        mesh.check_field(density.len())?;
        if !mesh.is_planar() && curvature.is_none() {
            return Err(Error::MissingCurvature(mode.name()));
        }
        Ok(Self {
            mesh,
            mode: AbpMode::from_potential(mode),
            u: solution.u.0.clone(),
            fits: solution.hess_u.clone(),
            curvature,
            density: density.to_vec(),
        })
    }

    /// The normal-map setting: `u ≡ 0` on a closed submanifold.
    pub fn normal_map(mesh: &'a TriMesh, curvature: CurvatureData) -> Result<Self> {
        if !mesh.is_closed() {
            return Err(Error::Precondition("normal-map contact search needs a closed submanifold".into()));
        }
        if mesh.is_planar() {
            return Err(Error::Precondition("normal-map contact search needs positive codimension".into()));
        }
        let zero = PatchFit {
            gradient: Vector2::zeros(),
            hessian: Matrix2::zeros(),
        };
        let fits = (0..mesh.vertex_count())
            .map(|v| curvature.second_fundamental[v].as_ref().map(|_| zero))
            .collect();
        Ok(Self {
            mesh,
            mode: AbpMode::Fwc,
            u: vec![0.0; mesh.vertex_count()],
            fits: VertexSymmetricField { fits },
            curvature: Some(curvature),
            density: vec![1.0; mesh.vertex_count()],
        })
    }

    /// Adds a constant to `u`; every ABP quantity must be unchanged.
    pub fn with_gauge_shift(mut self, c: f64) -> Self {
        self.u.iter_mut().for_each(|v| *v += c);
        self
    }

    fn n(&self) -> usize {
        self.mesh.intrinsic_dim()
    }

    fn second_fundamental(&self, v: usize, y: &Point) -> Option<Matrix2<f64>> {
        match &self.curvature {
            Some(c) if !self.mesh.is_planar() => c.contract(self.mesh, v, y),
            _ => Some(Matrix2::zeros()),
        }
    }

    fn mean_curvature(&self, v: usize) -> Point {
        self.curvature
            .as_ref()
            .map_or(Point::zeros(), |c| c.mean_curvature[v])
    }

    /// Spectral bound on the contact matrix over unit normals, used to scale
    /// the PSD tolerance.
    pub fn c2_proxy(&self) -> f64 {
        let mut proxy: f64 = 0.0;
        for v in 0..self.mesh.vertex_count() {
            let mut s = self.fits.hessian(v).map_or(0.0, |m| spectral_norm(&m));
            if let Some(Some(ii)) = self.curvature.as_ref().map(|c| &c.second_fundamental[v]) {
                s += ii.iter().map(spectral_norm).fold(0.0, f64::max);
            }
            proxy = proxy.max(s);
        }
        proxy.max(1e-12)
    }

    /// `ε_psd = 10 · h · ‖u‖_{C²}` with the proxy of [`AbpContext::c2_proxy`].
    pub fn default_psd_tolerance(&self) -> f64 {
        10.0 * self.mesh.h_max() * self.c2_proxy()
    }
}

fn spectral_norm(m: &Matrix2<f64>) -> f64 {
    let e = SymmetricEigen::new(*m).eigenvalues;
    e[0].abs().max(e[1].abs())
}

fn trimmed(p: &Point, dim: usize) -> Vec<f64> {
    (0..dim).map(|k| p[k]).collect()
}

/// One target vector with its contact data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContactSample {
    pub target: Vec<f64>,
    pub contact_vertex: usize,
    pub contact_point: Vec<f64>,
    /// `∇u(x̄)` as an ambient vector.
    pub tangential: Vec<f64>,
    /// `ȳ`, the normal part of `ξ` at the contact.
    pub normal: Vec<f64>,
    /// `|ξ − ∇u(x̄) − ȳ|`.
    pub defect: f64,
    /// Smallest eigenvalue of `M` (NaN when the vertex fit is unavailable).
    pub psd_slack: f64,
    pub jacobian: f64,
    pub bound: f64,
    pub trace: f64,
    pub trace_bound: f64,
    pub refined: bool,
    pub on_boundary_vertex: bool,
    pub interior: bool,
    pub ball: bool,
    #[serde(skip)]
    contact_matrix: Option<Matrix2<f64>>,
}

impl ContactSample {
    pub fn contact_matrix(&self) -> Option<Matrix2<f64>> {
        self.contact_matrix
    }
}

/// Jacobian and trace margins of one contact sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JacobianCheck {
    /// `det M`, Gaussian-weighted by `e^{−|Φ|²/4}` in log-Sobolev mode.
    pub jacobian: f64,
    pub bound: f64,
    /// `bound − jacobian`.
    pub margin: f64,
    pub trace: f64,
    pub trace_bound: f64,
    pub trace_margin: f64,
}

/// Contact search for a single target.
pub fn contact_search(ctx: &AbpContext, xi: &[f64]) -> Result<ContactSample> {
    let mesh = ctx.mesh;
    let dim = mesh.dim();
    if xi.len() != dim {
        return Err(Error::FieldMismatch { expected: dim, got: xi.len() });
    }
    let xi_p = crate::mesh::point(xi);
    if ctx.mode != AbpMode::LogSobolev && !(xi_p.norm() < 1.0) {
        return Err(Error::Domain { name: "target", value: xi_p.norm(), reason: "must lie in the open unit ball" });
    }

    // exhaustive scan, lowest index wins ties
    let (v, _) = mesh
        .positions()
        .iter()
        .zip(&ctx.u)
        .enumerate()
        .map(|(i, (p, u))| (i, u - p.dot(&xi_p)))
        .fold((usize::MAX, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });

    let base = mesh.positions()[v];
    let y = mesh.normal_part(v, &xi_p);
    let xi_t = mesh.to_tangent_coords(v, &xi_p);
    let on_boundary = mesh.is_boundary_vertex(v);
    let fit = ctx.fits.fits[v];
    let ii = ctx.second_fundamental(v, &y);
    let m = match (fit, ii) {
        (Some(f), Some(ii)) => Some(f.hessian - ii),
        _ => None,
    };

    let mut delta = Vector2::zeros();
    let mut refined = false;
    if let (Some(f), Some(m)) = (fit, m) {
        let radius = mesh
            .one_ring(v)
            .iter()
            .map(|&j| (mesh.positions()[j] - base).norm())
            .fold(0.0, f64::max);
        let eig = SymmetricEigen::new(m).eigenvalues;
        if eig[0] > 0.0 && eig[1] > 0.0 {
            if let Some(inv) = m.try_inverse() {
                let d = -(inv * (f.gradient - xi_t));
                if d.norm() <= radius {
                    delta = d;
                    refined = true;
                }
            }
        }
    }
    let grad_t = fit.map_or(Vector2::zeros(), |f| f.gradient + f.hessian * delta);
    let tangential = mesh.from_tangent_coords(v, &grad_t);
    let contact = base + mesh.from_tangent_coords(v, &delta);
    let defect = (xi_p - tangential - y).norm();

    let interior = if !on_boundary {
        true
    } else {
        refined && mesh.from_tangent_coords(v, &delta).dot(&mesh.vertex_conormal(v)) < 0.0
    };
    let ball = match ctx.mode {
        AbpMode::LogSobolev => true,
        _ => tangential.norm_squared() + y.norm_squared() < 1.0,
    };

    let psd_slack = m.map_or(f64::NAN, |m| SymmetricEigen::new(m).eigenvalues.min());
    let mut sample = ContactSample {
        target: xi.to_vec(),
        contact_vertex: v,
        contact_point: trimmed(&contact, dim),
        tangential: trimmed(&tangential, dim),
        normal: trimmed(&y, dim),
        defect,
        psd_slack,
        jacobian: f64::NAN,
        bound: f64::NAN,
        trace: f64::NAN,
        trace_bound: f64::NAN,
        refined,
        on_boundary_vertex: on_boundary,
        interior,
        ball,
        contact_matrix: m,
    };
    if m.is_some() {
        let check = evaluate_bounds(ctx, &sample)?;
        sample.jacobian = check.jacobian;
        sample.bound = check.bound;
        sample.trace = check.trace;
        sample.trace_bound = check.trace_bound;
    }
    Ok(sample)
}

fn evaluate_bounds(ctx: &AbpContext, sample: &ContactSample) -> Result<JacobianCheck> {
    let m = sample
        .contact_matrix
        .ok_or_else(|| Error::Precondition(format!("vertex {} has no recovered Hessian", sample.contact_vertex)))?;
    let v = sample.contact_vertex;
    let n = ctx.n() as f64;
    let f = ctx.density[v];
    let y = crate::mesh::point(&sample.normal);
    let h = ctx.mean_curvature(v);
    let det = m.determinant();
    let trace = m.trace();
    let (jacobian, bound, trace_bound) = match ctx.mode {
        AbpMode::Sobolev | AbpMode::MichaelSimon => {
            (det, f.powf(n / (n - 1.0)), n * f.powf(1.0 / (n - 1.0)))
        }
        AbpMode::Fwc => {
            let s = -h.dot(&y);
            (det, (s / n).max(0.0).powi(ctx.n() as i32), s)
        }
        AbpMode::LogSobolev => {
            let phi2 = crate::mesh::point(&sample.tangential).norm_squared() + y.norm_squared();
            let q = (h * 2.0 + y).norm_squared();
            (
                (-0.25 * phi2).exp() * det,
                f * (-0.25 * q - n).exp(),
                f.ln() + 0.25 * phi2 - 0.25 * q,
            )
        }
    };
    Ok(JacobianCheck {
        jacobian,
        bound,
        margin: bound - jacobian,
        trace,
        trace_bound,
        trace_margin: trace_bound - trace,
    })
}

/// Jacobian margin of a sample already classified as a contact point.
pub fn jacobian_bound_check(ctx: &AbpContext, sample: &ContactSample, psd_tolerance: f64) -> Result<JacobianCheck> {
    if !(sample.psd_slack >= -psd_tolerance) {
        return Err(Error::NotInContactSet(sample.psd_slack));
    }
    evaluate_bounds(ctx, sample)
}

/// Fixed-width histogram over the observed range.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(values: &[f64], bins: usize) -> Self {
        let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        if finite.is_empty() {
            return Self { lo: 0.0, hi: 0.0, counts: vec![0; bins] };
        }
        let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0; bins];
        for v in finite {
            let k = if width > 0.0 { ((v - lo) / width) as usize } else { 0 };
            counts[k.min(bins - 1)] += 1;
        }
        Self { lo, hi, counts }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub mode: AbpMode,
    pub sample_count: usize,
    pub seed: u64,
    pub h: f64,
    pub psd_tolerance: f64,
    pub jacobian_tolerance: f64,
    pub covered_count: usize,
    pub covered_fraction: f64,
    pub boundary_contact_fraction: f64,
    pub unrefined_fraction: f64,
    /// Among covered samples: fraction with margin below `−jacobian_tolerance`.
    pub negative_margin_fraction: f64,
    /// Among covered samples: fraction with margin below zero.
    pub strict_negative_fraction: f64,
    pub trace_negative_fraction: f64,
    pub min_margin: f64,
    pub min_psd_slack: f64,
    pub max_defect: f64,
    /// `max |Φ(x̄) − x̄|` over covered samples (planar mode only).
    pub max_transport_displacement: Option<f64>,
    /// Importance-weighted mean of the sample weights (1 for the Gaussian
    /// sampler, which draws from the weight itself).
    pub mean_weight: f64,
    pub psd_histogram: Histogram,
    pub margin_histogram: Histogram,
    pub worst_samples: Vec<ContactSample>,
}

pub const WORST_SAMPLES: usize = 5;
pub const HISTOGRAM_BINS: usize = 20;

/// Jacobian tolerance `tol(h) = h · max(1, max bound)`.
pub fn default_jacobian_tolerance(h: f64, max_bound: f64) -> f64 {
    h * max_bound.max(1.0)
}

/// Runs the contact search on quasi-random targets and aggregates.
///
/// Targets are Halton points of the unit ball, or Box-Muller Gaussian points
/// with density `∝ e^{−|ξ|²/4}` in log-Sobolev mode.
pub fn coverage_report(
    ctx: &AbpContext,
    sample_count: usize,
    psd_tolerance: Option<f64>,
    seed: u64,
) -> Result<CoverageReport> {
    if sample_count == 0 {
        return Err(Error::Precondition("coverage needs at least one sample".into()));
    }
    let dim = ctx.mesh.dim();
    let targets = match ctx.mode {
        AbpMode::LogSobolev => halton::gaussian_points(dim, sample_count, 2.0, seed),
        _ => halton::ball_points(dim, sample_count, seed),
    };
    let samples: Vec<ContactSample> = targets
        .par_iter()
        .map(|xi| contact_search(ctx, xi))
        .collect::<Result<_>>()?;

    let h = ctx.mesh.h_max();
    let eps = psd_tolerance.unwrap_or_else(|| ctx.default_psd_tolerance());
    let max_bound = samples
        .iter()
        .map(|s| s.bound)
        .filter(|b| b.is_finite())
        .fold(0.0, f64::max);
    let tol = default_jacobian_tolerance(h, max_bound);

    let covered: Vec<&ContactSample> = samples
        .iter()
        .filter(|s| s.interior && s.ball && s.psd_slack >= -eps)
        .collect();
    let margins: Vec<f64> = covered.iter().map(|s| s.bound - s.jacobian).collect();
    let trace_margins: Vec<f64> = covered.iter().map(|s| s.trace_bound - s.trace).collect();
    let slacks: Vec<f64> = samples.iter().map(|s| s.psd_slack).collect();
    let frac = |count: usize, of: usize| if of == 0 { 0.0 } else { count as f64 / of as f64 };
    let nc = covered.len();

    let mut worst: Vec<&ContactSample> = covered.clone();
    worst.sort_by(|a, b| {
        (a.bound - a.jacobian)
            .total_cmp(&(b.bound - b.jacobian))
            .then(a.contact_vertex.cmp(&b.contact_vertex))
    });
    let mut worst_samples: Vec<ContactSample> = worst.into_iter().take(WORST_SAMPLES).cloned().collect();
    let mut by_slack: Vec<&ContactSample> = samples.iter().filter(|s| s.psd_slack.is_finite()).collect();
    by_slack.sort_by(|a, b| a.psd_slack.total_cmp(&b.psd_slack).then(a.contact_vertex.cmp(&b.contact_vertex)));
    for s in by_slack.into_iter().take(WORST_SAMPLES) {
        if !worst_samples.contains(s) {
            worst_samples.push(s.clone());
        }
    }

    let max_transport_displacement = (ctx.mode == AbpMode::Sobolev).then(|| {
        covered
            .iter()
            .map(|s| {
                s.target
                    .iter()
                    .zip(&s.contact_point)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    });

    Ok(CoverageReport {
        mode: ctx.mode,
        sample_count,
        seed,
        h,
        psd_tolerance: eps,
        jacobian_tolerance: tol,
        covered_count: nc,
        covered_fraction: frac(nc, sample_count),
        boundary_contact_fraction: frac(samples.iter().filter(|s| s.on_boundary_vertex).count(), sample_count),
        unrefined_fraction: frac(samples.iter().filter(|s| !s.refined).count(), sample_count),
        negative_margin_fraction: frac(margins.iter().filter(|m| **m < -tol).count(), nc),
        strict_negative_fraction: frac(margins.iter().filter(|m| **m < 0.0).count(), nc),
        trace_negative_fraction: frac(trace_margins.iter().filter(|m| **m < -tol).count(), nc),
        min_margin: margins.iter().copied().fold(f64::INFINITY, f64::min),
        min_psd_slack: slacks.iter().copied().filter(|s| s.is_finite()).fold(f64::INFINITY, f64::min),
        max_defect: samples.iter().map(|s| s.defect).fold(0.0, f64::max),
        max_transport_displacement,
        mean_weight: 1.0,
        psd_histogram: Histogram::new(&slacks, HISTOGRAM_BINS),
        margin_histogram: Histogram::new(&margins, HISTOGRAM_BINS),
        worst_samples,
    })
}

/// Both sides of the volume chain closing each argument; returns
/// `RHS / LHS`, which must be at least `1 − tol`.
///
/// - sobolev: `|Bⁿ| ≤ ∫ f^{n/(n−1)}`
/// - michael_simon: `(n+m)|B^{n+m}| ≤ m|B^m| ∫ f^{n/(n−1)}`
/// - fwc: `|B^{n+m}| ≤ (|B^{n+m}|/|Sⁿ|) ∫ (|H|/n)ⁿ`
/// - log_sobolev: `1 ≤ (4π)^{−n/2} e^{−n} ∫ f`
pub fn abp_volume_lower_bound(ctx: &AbpContext, report: &CoverageReport) -> Result<VolumeBound> {
    if report.sample_count == 0 || report.mode != ctx.mode {
        return Err(Error::Precondition("coverage report is incomplete or belongs to another mode".into()));
    }
    let mesh = ctx.mesh;
    let n = ctx.n();
    let m = mesh.codim();
    let p = n as f64 / (n as f64 - 1.0);
    let powered: Vec<f64> = ctx.density.iter().map(|f| f.powf(p)).collect();
    let (lhs, rhs) = match ctx.mode {
        AbpMode::Sobolev => (ball_volume(n)?, mesh.integrate_values(&powered)?),
        AbpMode::MichaelSimon => {
            // enforces m ≥ 2
            michael_simon_constant(n, m)?;
            (
                (n + m) as f64 * ball_volume(n + m)?,
                m as f64 * ball_volume(m)? * mesh.integrate_values(&powered)?,
            )
        }
        AbpMode::Fwc => {
            let c = ctx
                .curvature
                .as_ref()
                .ok_or(Error::MissingCurvature("fwc"))?;
            let vals: Vec<f64> = c
                .mean_curvature
                .iter()
                .map(|h| (h.norm() / n as f64).powi(n as i32))
                .collect();
            let b = ball_volume(n + m)?;
            (b, b / sphere_area(n)? * mesh.integrate_values(&vals)?)
        }
        AbpMode::LogSobolev => {
            let mass = compensated_sum(
                mesh.vertex_areas().iter().zip(&ctx.density).map(|(a, f)| a * f),
            );
            (
                1.0,
                (4.0 * std::f64::consts::PI).powf(-(n as f64) / 2.0) * (-(n as f64)).exp() * mass,
            )
        }
    };
    Ok(VolumeBound { lhs, rhs, ratio: rhs / lhs })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumeBound {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{curvature, shapes, VertexScalarField};
    use crate::neumann::{solve, NeumannProblem};

    fn disk_context(mesh: &TriMesh) -> AbpContext<'_> {
        let f = VertexScalarField::constant(mesh.vertex_count(), 1.0);
        let prob = NeumannProblem::from_density(mesh, &f, Mode::Sobolev, None).unwrap();
        let sol = solve(&prob).unwrap();
        AbpContext::from_solution(mesh, Mode::Sobolev, &sol, &prob.weight.0, None).unwrap()
    }

    #[test]
    fn identity_transport_on_disk() {
        let d = shapes::disk(1.0, 3, 2).unwrap();
        let ctx = disk_context(&d);
        let c = ctx.density[0];
        let s = contact_search(&ctx, &[0.3, 0.0]).unwrap();
        assert!((s.contact_point[0] - 0.3 / c).abs() < 1e-8);
        assert!(s.contact_point[1].abs() < 1e-8);
        assert!((s.psd_slack - c).abs() < 1e-8);
        assert!((s.jacobian - c * c).abs() < 1e-8);
        assert!((s.bound - s.jacobian).abs() < 1e-8);
        assert!(s.defect < 1e-8);
        assert!(s.interior && s.ball && s.refined);
    }

    #[test]
    fn zero_target_contacts_minimum_of_u() {
        let d = shapes::disk(1.0, 2, 2).unwrap();
        let ctx = disk_context(&d);
        let s = contact_search(&ctx, &[0.0, 0.0]).unwrap();
        let argmin = (0..d.vertex_count())
            .min_by(|a, b| ctx.u[*a].total_cmp(&ctx.u[*b]))
            .unwrap();
        assert_eq!(s.contact_vertex, argmin);
    }

    #[test]
    fn target_outside_ball_rejected() {
        let d = shapes::disk(1.0, 1, 2).unwrap();
        let ctx = disk_context(&d);
        assert!(contact_search(&ctx, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn normal_map_on_sphere_hits_pole() {
        let s = shapes::icosphere(1.0, 3, 3).unwrap();
        let ctx = AbpContext::normal_map(&s, curvature(&s).unwrap()).unwrap();
        let t = 0.5;
        let sample = contact_search(&ctx, &[0.0, 0.0, t]).unwrap();
        let x = s.positions()[sample.contact_vertex];
        assert!((x - crate::mesh::point(&[0.0, 0.0, 1.0])).norm() < 1e-12);
        assert!((sample.normal[2] - t).abs() < 1e-9);
        assert!((sample.jacobian - t * t).abs() < 2e-2 * t * t);
        assert!((sample.bound - t * t).abs() < 1e-3 * t * t);
    }

    #[test]
    fn affine_potential_has_zero_jacobian() {
        let d = shapes::disk(1.0, 2, 2).unwrap();
        let mut ctx = disk_context(&d);
        ctx.u = d.positions().iter().map(|p| 0.2 * p[0]).collect();
        ctx.fits = d.hessian_recover(&VertexScalarField(ctx.u.clone())).unwrap();
        let s = contact_search(&ctx, &[0.2, 0.0]).unwrap();
        assert!(s.jacobian.abs() < 1e-9);
        let check = jacobian_bound_check(&ctx, &s, 1e-6).unwrap();
        assert!((check.margin - check.bound).abs() < 1e-9);
    }

    #[test]
    fn not_in_contact_set_error() {
        let d = shapes::disk(1.0, 2, 2).unwrap();
        let mut ctx = disk_context(&d);
        ctx.u = d.positions().iter().map(|p| -0.5 * p[0] * p[0]).collect();
        ctx.fits = d.hessian_recover(&VertexScalarField(ctx.u.clone())).unwrap();
        let s = contact_search(&ctx, &[0.0, 0.0]).unwrap();
        assert!(matches!(jacobian_bound_check(&ctx, &s, 1e-3), Err(Error::NotInContactSet(_))));
    }

    #[test]
    fn coverage_is_gauge_invariant_and_deterministic() {
        let d = shapes::disk(1.0, 2, 2).unwrap();
        let ctx = disk_context(&d);
        let a = coverage_report(&ctx, 500, None, 7).unwrap();
        let b = coverage_report(&ctx.clone().with_gauge_shift(1.0), 500, None, 7).unwrap();
        assert_eq!(a.covered_count, b.covered_count);
        assert_eq!(a.negative_margin_fraction, b.negative_margin_fraction);
        let c = coverage_report(&ctx, 500, None, 7).unwrap();
        assert_eq!(a, c);
        assert!(a.covered_fraction > 0.95, "{}", a.covered_fraction);
    }

    #[test]
    fn volume_bound_equality_cases() {
        let d = shapes::disk(1.0, 3, 2).unwrap();
        let ctx = disk_context(&d);
        let rep = coverage_report(&ctx, 100, None, 1).unwrap();
        let vb = abp_volume_lower_bound(&ctx, &rep).unwrap();
        // ∫ c² over the polygon against π
        assert!((vb.ratio - 1.0).abs() < 1e-2, "{}", vb.ratio);
    }

    #[test]
    fn histogram_counts_everything() {
        let h = Histogram::new(&[0.0, 0.5, 1.0, f64::NAN], 4);
        assert_eq!(h.counts.iter().sum::<usize>(), 3);
        assert_eq!(h.counts[3], 1);
    }
}
