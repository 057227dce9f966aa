//! End-to-end checkers: evaluate both sides of each inequality on a mesh or
//! a rotationally symmetric model and report ratio and margin.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::comparison::{asymptotic_volume_ratio, tube_volume, TubeConfig, WarpedModel, TIP_RADIUS};
use crate::error::{Error, Result};
use crate::geomconst::{ball_volume, michael_simon_constant, sphere_area};
use crate::mesh::{curvature, curve_curvature, CurvatureData, CurveMesh, Mesh, MeshStats, TriMesh, VertexScalarField};
use crate::neumann::vertex_gradient_norms;
use crate::quadrature::{compensated_sum, integrate_piecewise};

/// Tolerance for checks that reduce to 1D quadrature of smooth profiles.
pub const QUADRATURE_TOL: f64 = 1e-10;

/// Which way the inequality points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `lhs ≥ rhs`
    AtLeast,
    /// `lhs ≤ rhs`
    AtMost,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub theorem: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; `null` in JSON when `rhs ≤ 0`.
    pub ratio: f64,
    /// Signed slack: `lhs − rhs` for [`Direction::AtLeast`], `rhs − lhs`
    /// otherwise. Nonnegative when the inequality holds.
    pub margin: f64,
    pub direction: Direction,
    /// Relative tolerance applied by [`InequalityReport::holds`].
    pub tolerance: f64,
    pub geometry: String,
    pub mesh_stats: Option<MeshStats>,
    /// Auxiliary quantities (sorted by key).
    pub details: BTreeMap<String, f64>,
}

impl InequalityReport {
    fn new(theorem: &str, lhs: f64, rhs: f64, direction: Direction, geometry: String) -> Self {
        let ratio = if rhs > 0.0 { lhs / rhs } else { f64::NAN };
        let margin = match direction {
            Direction::AtLeast => lhs - rhs,
            Direction::AtMost => rhs - lhs,
        };
        Self {
            theorem: theorem.to_string(),
            lhs,
            rhs,
            ratio,
            margin,
            direction,
            tolerance: QUADRATURE_TOL,
            geometry,
            mesh_stats: None,
            details: BTreeMap::new(),
        }
    }

    fn with_mesh(mut self, stats: MeshStats) -> Self {
        self.tolerance = stats.h_max * stats.h_max;
        self.mesh_stats = Some(stats);
        self
    }

    fn detail(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.to_string(), value);
        self
    }

    pub fn with_geometry(mut self, label: impl Into<String>) -> Self {
        self.geometry = label.into();
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    /// `margin ≥ −tolerance · max(|lhs|, |rhs|)`.
    pub fn holds(&self) -> bool {
        self.margin >= -self.tolerance * self.lhs.abs().max(self.rhs.abs())
    }
}

/// Tolerance band from two refinement levels: the change in ratio between
/// them, which bounds the fine-level error when it decays at least
/// quadratically. Falls back to the fine report's own tolerance when that is
/// larger.
pub fn refinement_tolerance(coarse: &InequalityReport, fine: &InequalityReport) -> f64 {
    let band = (fine.ratio - coarse.ratio).abs();
    if band.is_finite() {
        band.max(1e-12)
    } else {
        fine.tolerance
    }
}

fn describe(mesh: &TriMesh) -> String {
    if mesh.is_planar() {
        "planar domain".into()
    } else if mesh.is_closed() {
        format!("closed surface in R^{}", mesh.dim())
    } else {
        format!("surface with boundary in R^{}", mesh.dim())
    }
}

fn check_positive(f: &VertexScalarField) -> Result<()> {
    match f.0.iter().copied().find(|v| !(*v > 0.0)) {
        Some(v) => Err(Error::NonpositiveDensity(v)),
        None => Ok(()),
    }
}

/// `∫|∇f|` for the P1 interpolant (exact per face).
fn gradient_l1(mesh: &TriMesh, f: &VertexScalarField) -> Result<f64> {
    let grad = mesh.gradient(f)?;
    Ok(compensated_sum(
        grad.0.iter().zip(mesh.face_areas()).map(|(g, a)| g.norm() * a),
    ))
}

/// Euclidean Sobolev inequality on a planar domain:
/// `∫|∇f| + ∫_∂D f ≥ n |Bⁿ|^{1/n} (∫ f^{n/(n−1)})^{(n−1)/n}`.
pub fn check_sobolev_euclidean(domain: &TriMesh, f: &VertexScalarField) -> Result<InequalityReport> {
    if !domain.is_planar() {
        return Err(Error::Precondition("Sobolev check needs a planar domain".into()));
    }
    domain.check_field(f.len())?;
    check_positive(f)?;
    let n = domain.intrinsic_dim();
    let nf = n as f64;
    let interior = gradient_l1(domain, f)?;
    let boundary = domain.integrate_boundary(f)?;
    let power = domain.integrate(&f.map(|v| v.powf(nf / (nf - 1.0))))?;
    let rhs = nf * ball_volume(n)?.powf(1.0 / nf) * power.powf((nf - 1.0) / nf);
    Ok(
        InequalityReport::new("sobolev_euclidean", interior + boundary, rhs, Direction::AtLeast, describe(domain))
            .with_mesh(domain.stats())
            .detail("gradient_integral", interior)
            .detail("boundary_integral", boundary),
    )
}

/// `|∂D| ≥ n |Bⁿ|^{1/n} |D|^{(n−1)/n}`.
pub fn check_isoperimetric(domain: &TriMesh) -> Result<InequalityReport> {
    if !domain.is_planar() {
        return Err(Error::Precondition("isoperimetric check needs a planar domain".into()));
    }
    let n = domain.intrinsic_dim();
    let nf = n as f64;
    let perimeter = domain.boundary_length();
    let area = domain.total_area();
    let rhs = nf * ball_volume(n)?.powf(1.0 / nf) * area.powf((nf - 1.0) / nf);
    Ok(
        InequalityReport::new("isoperimetric", perimeter, rhs, Direction::AtLeast, describe(domain))
            .with_mesh(domain.stats())
            .detail("volume", area),
    )
}

/// `∫_Σ (|H|/n)ⁿ ≥ |Sⁿ|` for a closed surface or closed curve.
pub fn check_fwc(submanifold: &Mesh) -> Result<InequalityReport> {
    match submanifold {
        Mesh::Domain(_) => Err(Error::Precondition("FWC check needs a closed submanifold, got a planar domain".into())),
        Mesh::Surface(m) => check_fwc_surface(m, None),
        Mesh::Curve(c) => check_fwc_curve(c),
    }
}

/// Surface version; `curvature` may be passed to avoid recomputation.
pub fn check_fwc_surface(surface: &TriMesh, curvature_data: Option<&CurvatureData>) -> Result<InequalityReport> {
    if !surface.is_closed() {
        return Err(Error::Precondition("FWC check needs a closed surface".into()));
    }
    let owned;
    let curv = match curvature_data {
        Some(c) => c,
        None => {
            owned = curvature(surface)?;
            &owned
        }
    };
    let n = surface.intrinsic_dim();
    let values: Vec<f64> = curv
        .mean_curvature_norms()
        .iter()
        .map(|h| (h / n as f64).powi(n as i32))
        .collect();
    let lhs = surface.integrate_values(&values)?;
    Ok(
        InequalityReport::new("fwc", lhs, sphere_area(n)?, Direction::AtLeast, describe(surface))
            .with_mesh(surface.stats()),
    )
}

/// Curve version: `∫|κ|` is the sum of exterior turning angles.
pub fn check_fwc_curve(curve: &CurveMesh) -> Result<InequalityReport> {
    if !curve.is_closed() {
        return Err(Error::Precondition("FWC check needs a closed curve".into()));
    }
    let lhs = compensated_sum(curve_curvature(curve)?.turning_angles);
    Ok(InequalityReport::new(
        "fwc",
        lhs,
        sphere_area(1)?,
        Direction::AtLeast,
        format!("closed curve in R^{}", curve.dim()),
    )
    .with_mesh(curve.stats()))
}

/// `∫_Σ √(|∇f|² + f²|H|²) + ∫_∂Σ f ≥ c(n,m) (∫ f^{n/(n−1)})^{(n−1)/n}` for a
/// surface of codimension `m ≥ 2`.
pub fn check_michael_simon(surface: &TriMesh, f: &VertexScalarField) -> Result<InequalityReport> {
    let m = surface.codim();
    if m < 2 {
        return Err(Error::Hypothesis(format!(
            "sharp constant needs codimension m >= 2, got m = {m}; embed R^{} in R^{} first",
            surface.dim(),
            surface.dim() + 1
        )));
    }
    surface.check_field(f.len())?;
    check_positive(f)?;
    let n = surface.intrinsic_dim();
    let nf = n as f64;
    let curv = curvature(surface)?;
    let grad = vertex_gradient_norms(surface, f)?;
    let integrand: Vec<f64> = (0..f.len())
        .map(|i| {
            let h = curv.mean_curvature[i].norm();
            (grad[i] * grad[i] + f.0[i] * f.0[i] * h * h).sqrt()
        })
        .collect();
    let interior = surface.integrate_values(&integrand)?;
    let boundary = surface.integrate_boundary(f)?;
    let power = surface.integrate(&f.map(|v| v.powf(nf / (nf - 1.0))))?;
    let rhs = michael_simon_constant(n, m)? * power.powf((nf - 1.0) / nf);
    Ok(
        InequalityReport::new("michael_simon", interior + boundary, rhs, Direction::AtLeast, describe(surface))
            .with_mesh(surface.stats())
            .detail("codimension", m as f64)
            .detail("boundary_integral", boundary),
    )
}

/// Log-Sobolev inequality on a closed surface, in the form
/// `∫ f(log f + n + (n/2) log 4π) − ∫ |∇f|²/f − ∫ f|H|² ≤ (∫f) log(∫f)`.
///
/// The Gaussian-measure form with `φ = (4π)^{n/2} e^{|x|²/4} f` is evaluated
/// alongside, with its own lumped quadrature; its margin is stored under
/// `gaussian_form_margin` and the relative gap under `formulation_gap`.
/// The two agree only up to the discrete divergence theorem for the
/// tangential position field.
pub fn check_log_sobolev(surface: &TriMesh, f: &VertexScalarField) -> Result<InequalityReport> {
    if !surface.is_closed() || surface.is_planar() {
        return Err(Error::Precondition("log-Sobolev check needs a closed surface".into()));
    }
    surface.check_field(f.len())?;
    check_positive(f)?;
    let n = surface.intrinsic_dim() as f64;
    let curv = curvature(surface)?;
    let grad = surface.vertex_gradient_average(&surface.gradient(f)?);
    let log4pi = (4.0 * std::f64::consts::PI).ln();

    let theorem_terms: Vec<f64> = (0..f.len())
        .map(|i| {
            let v = f.0[i];
            v * (v.ln() + n + 0.5 * n * log4pi) - grad[i].norm_squared() / v - v * curv.mean_curvature[i].norm_squared()
        })
        .collect();
    let lhs = surface.integrate_values(&theorem_terms)?;
    let mass = surface.integrate(f)?;
    let rhs = mass * mass.ln();

    // Gaussian form: dγ = (4π)^{−n/2} e^{−|x|²/4} dvol, ∇φ/φ = ∇f/f + xᵀ/2.
    let pos = surface.positions();
    let mut gauss_terms = Vec::with_capacity(f.len());
    let mut gauss_mass = Vec::with_capacity(f.len());
    for i in 0..f.len() {
        let x = &pos[i];
        let weight = (-(0.5 * n * log4pi) - 0.25 * x.norm_squared()).exp();
        let phi = f.0[i] / weight;
        let x_t = surface.tangent_part(i, x);
        let x_n = surface.normal_part(i, x);
        let dlog = grad[i] / f.0[i] + x_t * 0.5;
        let shifted = curv.mean_curvature[i] + x_n * 0.5;
        gauss_terms.push(weight * (phi * phi.ln() - phi * dlog.norm_squared() - phi * shifted.norm_squared()));
        gauss_mass.push(weight * phi);
    }
    let g_lhs = surface.integrate_values(&gauss_terms)?;
    let g_mass = surface.integrate_values(&gauss_mass)?;
    let g_margin = g_mass * g_mass.ln() - g_lhs;
    let report = InequalityReport::new("log_sobolev", lhs, rhs, Direction::AtMost, describe(surface))
        .with_mesh(surface.stats());
    let gap = (report.margin - g_margin).abs() / report.margin.abs().max(f64::MIN_POSITIVE);
    Ok(report
        .detail("gaussian_form_margin", g_margin)
        .detail("formulation_gap", gap)
        .detail("mass", mass))
}

/// Radius interval `[inner, outer]` about the pole; `inner = 0` is a ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RevolutionDomain {
    pub inner: f64,
    pub outer: f64,
}

fn check_interval(model: &WarpedModel, inner: f64, outer: f64) -> Result<()> {
    if !(inner >= 0.0 && outer > inner) {
        return Err(Error::Precondition(format!("invalid radius interval [{inner}, {outer}]")));
    }
    if outer > model.r_max {
        return Err(Error::Domain { name: "outer radius", value: outer, reason: "exceeds the model grid" });
    }
    Ok(())
}

/// `|∂D| ≥ n |Bⁿ|^{1/n} θ^{1/n} |D|^{(n−1)/n}` on a model.
pub fn check_riemannian_isoperimetric(model: &WarpedModel, domain: RevolutionDomain) -> Result<InequalityReport> {
    check_interval(model, domain.inner, domain.outer)?;
    let n = model.n;
    let nf = n as f64;
    let theta = asymptotic_volume_ratio(model)?;
    // the tip is not part of the boundary
    let (lo, inner_face) = if domain.inner < TIP_RADIUS {
        (0.0, 0.0)
    } else {
        (domain.inner, model.sphere_area_at(domain.inner)?)
    };
    let volume = model.shell_volume(lo, domain.outer)?;
    let boundary = model.sphere_area_at(domain.outer)? + inner_face;
    let rhs = nf * ball_volume(n)?.powf(1.0 / nf) * theta.powf(1.0 / nf) * volume.powf((nf - 1.0) / nf);
    Ok(InequalityReport::new(
        "riemannian_isoperimetric",
        boundary,
        rhs,
        Direction::AtLeast,
        format!("radius interval [{}, {}] in {:?}", domain.inner, domain.outer, model.profile),
    )
    .detail("theta", theta)
    .detail("volume", volume))
}

/// `∫_Σ (|H|/(n−1))^{n−1} ≥ |S^{n−1}| θ` for the geodesic sphere of radius
/// `rho` about the pole, where `|H| = (n−1) φ′/φ`.
pub fn check_riemannian_fwc(model: &WarpedModel, rho: f64) -> Result<InequalityReport> {
    check_interval(model, 0.0, rho)?;
    if rho < TIP_RADIUS {
        return Err(Error::Domain { name: "rho", value: rho, reason: "inside the excised tip ball" });
    }
    let n = model.n;
    let p = model.profile;
    let kappa = p.dphi(rho) / p.phi(rho);
    let lhs = model.sphere_area_at(rho)? * kappa.powi(n as i32 - 1);
    let theta = asymptotic_volume_ratio(model)?;
    Ok(InequalityReport::new(
        "riemannian_fwc",
        lhs,
        sphere_area(n - 1)? * theta,
        Direction::AtLeast,
        format!("geodesic sphere r = {rho} in {:?}", p),
    )
    .detail("theta", theta)
    .detail("mean_curvature", (n - 1) as f64 * kappa))
}

/// Tube volume bound: `|{d(·, Σ) < r}| ≤ ∫_Σ ∫_{|y|<1} r (1 − r⟨H,y⟩/(n−1))₊^{n−1} dy`
/// for the geodesic sphere `Σ` of radius `config.rho0`. With `H = −(n−1)κν`
/// and `y = sν`, the inner integral is `∫_{−1}^{1} r (1 + rκs)₊^{n−1} ds`.
pub fn check_heintze_karcher_tube(config: &TubeConfig) -> Result<InequalityReport> {
    let n = config.model.n;
    let k = n as i32 - 1;
    let kappa = config.principal_curvature();
    let r = config.r;
    let area = config.model.sphere_area_at(config.rho0)?;
    let zero = if r * kappa > 1.0 { vec![-1.0 / (r * kappa)] } else { Vec::new() };
    let fibre = integrate_piecewise(-1.0, 1.0, &zero, 4, |s| r * (1.0 + r * kappa * s).max(0.0).powi(k));
    let lhs = tube_volume(config)?;
    Ok(InequalityReport::new(
        "heintze_karcher",
        lhs,
        area * fibre,
        Direction::AtMost,
        format!("tube of radius {r} about r = {} in {:?}", config.rho0, config.model.profile),
    )
    .detail("sphere_area", area)
    .detail("principal_curvature", kappa))
}
