//! Weighted Neumann problems `div(f ∇u) = ρ` that define the ABP potential,
//! density normalisation, and a high-accuracy radial oracle for balls.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::{CurvatureData, FaceVectorField, TriMesh, VertexScalarField, VertexSymmetricField};
use crate::quadrature::{compensated_sum, GaussLegendre};

/// Which inequality the potential serves; decides normalisation and rhs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Sobolev,
    MichaelSimon,
    LogSobolev,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Sobolev => "sobolev",
            Mode::MichaelSimon => "michael_simon",
            Mode::LogSobolev => "log_sobolev",
        }
    }
}

/// Boundary data for the weighted flux `f ⟨∇u, η⟩`.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryFlux {
    /// `⟨∇u, η⟩ = 1`, i.e. weighted flux `f`.
    Unit,
    /// Weighted flux density at the two endpoints of each boundary edge, in
    /// the order of `mesh.boundary_edges()`; integrated by the trapezoid rule.
    EdgeValues(Vec<[f64; 2]>),
    /// Closed surface, no boundary term.
    Closed,
}

pub const COMPAT_TOL: f64 = 1e-8;
pub const COMPAT_PROJECT_TOL: f64 = 1e-4;
pub const CG_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct NeumannProblem<'a> {
    pub mesh: &'a TriMesh,
    pub weight: VertexScalarField,
    pub rhs: VertexScalarField,
    pub boundary_flux: BoundaryFlux,
    pub mode: Mode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Compatibility {
    /// `∫ρ − ∫_∂ g`.
    pub residual: f64,
    /// `∫(|A| + |B|) + ∫_∂ |g|` for `ρ = A − B` split into the mode's
    /// source terms.
    pub scale: f64,
}

impl Compatibility {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual.abs() / self.scale
        } else {
            self.residual.abs()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    pub residual_norm: f64,
    pub compatibility_residual: f64,
    pub compatibility_scale: f64,
    /// Relative compatibility defect removed by shifting ρ (0 if none).
    pub projected: f64,
    pub excluded_hessian_vertices: usize,
}

#[derive(Debug, Clone)]
pub struct PotentialSolution {
    pub u: VertexScalarField,
    pub grad_u: FaceVectorField,
    pub hess_u: VertexSymmetricField,
    pub diagnostics: SolverDiagnostics,
}

impl PotentialSolution {
    pub fn residual_norm(&self) -> f64 {
        self.diagnostics.residual_norm
    }

    pub fn compatibility_residual(&self) -> f64 {
        self.diagnostics.compatibility_residual
    }
}

fn check_positive(f: &VertexScalarField) -> Result<()> {
    match f.0.iter().copied().find(|v| !(*v > 0.0)) {
        Some(v) => Err(Error::NonpositiveDensity(v)),
        None => Ok(()),
    }
}

fn require_curvature<'c>(
    mesh: &TriMesh,
    mode: Mode,
    curvature: Option<&'c CurvatureData>,
) -> Result<Option<&'c CurvatureData>> {
    match (mode, curvature) {
        (Mode::Sobolev, _) => Ok(None),
        (_, Some(c)) => Ok(Some(c)),
        (_, None) if mesh.is_planar() => Ok(None),
        (Mode::MichaelSimon, None) => Err(Error::MissingCurvature("michael_simon")),
        (Mode::LogSobolev, None) => Err(Error::MissingCurvature("log_sobolev")),
    }
}

/// `|∇f|` at vertices from area-averaged face gradients.
pub fn vertex_gradient_norms(mesh: &TriMesh, f: &VertexScalarField) -> Result<Vec<f64>> {
    let grad = mesh.gradient(f)?;
    Ok(mesh
        .vertex_gradient_average(&grad)
        .iter()
        .map(|g| g.norm())
        .collect())
}

fn mean_curvature_sq(mesh: &TriMesh, curvature: Option<&CurvatureData>) -> Vec<f64> {
    match curvature {
        Some(c) => c.mean_curvature.iter().map(|h| h.norm_squared()).collect(),
        None => vec![0.0; mesh.vertex_count()],
    }
}

fn exponent(n: usize) -> f64 {
    n as f64 / (n as f64 - 1.0)
}

/// Scales `f` so that the normalisation identity of `mode` holds exactly for
/// the lumped quadrature used by [`build_rhs`].
pub fn normalize_density(
    mesh: &TriMesh,
    f: &VertexScalarField,
    mode: Mode,
    curvature: Option<&CurvatureData>,
) -> Result<VertexScalarField> {
    mesh.check_field(f.len())?;
    check_positive(f)?;
    let curvature = require_curvature(mesh, mode, curvature)?;
    let n = mesh.intrinsic_dim();
    let grad = vertex_gradient_norms(mesh, f)?;
    let h2 = mean_curvature_sq(mesh, curvature);
    let c = match mode {
        Mode::Sobolev | Mode::MichaelSimon => {
            let interior: Vec<f64> = (0..f.len())
                .map(|i| (grad[i] * grad[i] + f.0[i] * f.0[i] * h2[i]).sqrt())
                .collect();
            let lhs = mesh.integrate_values(&interior)? + mesh.integrate_boundary_values(&f.0)?;
            let rhs = n as f64 * mesh.integrate_values(&f.map(|v| v.powf(exponent(n))).0)?;
            if !(lhs > 0.0) {
                return Err(Error::DegenerateIntegral("normalisation left-hand side"));
            }
            if !(rhs > 0.0) {
                return Err(Error::DegenerateIntegral("normalisation right-hand side"));
            }
            (lhs / rhs).powi(n as i32 - 1)
        }
        Mode::LogSobolev => {
            let mass = mesh.integrate(f)?;
            if !(mass > 0.0) {
                return Err(Error::DegenerateIntegral("density mass"));
            }
            let terms: Vec<f64> = (0..f.len())
                .map(|i| {
                    let v = f.0[i];
                    v * h2[i] + grad[i] * grad[i] / v - v * v.ln()
                })
                .collect();
            (mesh.integrate_values(&terms)? / mass).exp()
        }
    };
    Ok(f.scaled(c))
}

/// Right-hand side `ρ` of the potential equation for `mode`.
pub fn build_rhs(
    mesh: &TriMesh,
    f: &VertexScalarField,
    mode: Mode,
    curvature: Option<&CurvatureData>,
) -> Result<VertexScalarField> {
    mesh.check_field(f.len())?;
    check_positive(f)?;
    let curvature = require_curvature(mesh, mode, curvature)?;
    let n = mesh.intrinsic_dim() as f64;
    let grad = vertex_gradient_norms(mesh, f)?;
    let h2 = mean_curvature_sq(mesh, curvature);
    let p = exponent(mesh.intrinsic_dim());
    Ok(VertexScalarField(
        (0..f.len())
            .map(|i| {
                let (v, g) = (f.0[i], grad[i]);
                match mode {
                    Mode::Sobolev | Mode::MichaelSimon => n * v.powf(p) - (g * g + v * v * h2[i]).sqrt(),
                    Mode::LogSobolev => v * v.ln() - g * g / v - v * h2[i],
                }
            })
            .collect(),
    ))
}

impl<'a> NeumannProblem<'a> {
    /// Normalises `f`, builds `ρ` and picks the boundary condition matching
    /// the mesh (unit flux when open, none when closed).
    pub fn from_density(
        mesh: &'a TriMesh,
        f: &VertexScalarField,
        mode: Mode,
        curvature: Option<&CurvatureData>,
    ) -> Result<Self> {
        let weight = normalize_density(mesh, f, mode, curvature)?;
        let rhs = build_rhs(mesh, &weight, mode, curvature)?;
        let boundary_flux = if mesh.is_closed() {
            BoundaryFlux::Closed
        } else {
            BoundaryFlux::Unit
        };
        Ok(Self {
            mesh,
            weight,
            rhs,
            boundary_flux,
            mode,
        })
    }

    /// Lumped boundary load `∫_∂ g φ_i` per vertex.
    fn boundary_load(&self) -> Result<Vec<f64>> {
        let mut load = vec![0.0; self.mesh.vertex_count()];
        match &self.boundary_flux {
            BoundaryFlux::Unit => {
                for e in self.mesh.boundary_edges() {
                    load[e.a] += 0.5 * e.length * self.weight.0[e.a];
                    load[e.b] += 0.5 * e.length * self.weight.0[e.b];
                }
            }
            BoundaryFlux::EdgeValues(g) => {
                let edges = self.mesh.boundary_edges();
                if g.len() != edges.len() {
                    return Err(Error::FieldMismatch { expected: edges.len(), got: g.len() });
                }
                for (e, [ga, gb]) in edges.iter().zip(g) {
                    load[e.a] += 0.5 * e.length * ga;
                    load[e.b] += 0.5 * e.length * gb;
                }
            }
            BoundaryFlux::Closed => {}
        }
        Ok(load)
    }

    pub fn compatibility(&self) -> Result<Compatibility> {
        self.mesh.check_field(self.rhs.len())?;
        let load = self.boundary_load()?;
        self.mesh.check_field(self.weight.len())?;
        let int_rho = self.mesh.integrate(&self.rhs)?;
        // ρ = A − B with A = n f^p (f log f in log-Sobolev mode); the scale
        // is ∫|A| + |B|, which stays honest when A and B cancel pointwise.
        let n = self.mesh.intrinsic_dim() as f64;
        let p = exponent(self.mesh.intrinsic_dim());
        let magnitude: Vec<f64> = self
            .weight
            .0
            .iter()
            .zip(&self.rhs.0)
            .map(|(&f, &rho)| {
                let a = match self.mode {
                    Mode::Sobolev | Mode::MichaelSimon => n * f.abs().powf(p),
                    Mode::LogSobolev => f * f.abs().ln(),
                };
                a.abs() + (a - rho).abs()
            })
            .collect();
        Ok(Compatibility {
            residual: int_rho - compensated_sum(load.iter().copied()),
            scale: self.mesh.integrate_values(&magnitude)? + compensated_sum(load.iter().map(|v| v.abs())),
        })
    }

    /// Shifts `ρ` by a constant so the compatibility residual vanishes.
    pub fn project_compatible(&mut self) -> Result<f64> {
        let c = self.compatibility()?;
        let area = self.mesh.total_area();
        self.rhs = self.rhs.map(|v| v - c.residual / area);
        Ok(c.relative())
    }
}

/// Symmetric sparse matrix in compressed-row form.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        let mut last = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *vals.last_mut().expect("entry exists") += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .find(|&k| self.cols[k] == i)
                    .map_or(0.0, |k| self.vals[k])
            })
            .collect()
    }

    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            *yi = (self.row_ptr[i]..self.row_ptr[i + 1])
                .map(|k| self.vals[k] * x[self.cols[k]])
                .sum();
        });
    }
}

/// P1 stiffness `K_ij = Σ_T f̄_T |T| ∇φ_i·∇φ_j` with `f̄_T` the vertex mean.
pub fn assemble_stiffness(mesh: &TriMesh, weight: &[f64]) -> CsrMatrix {
    let local: Vec<[(usize, usize, f64); 9]> = (0..mesh.triangles().len())
        .into_par_iter()
        .map(|t| {
            let tri = mesh.triangles()[t];
            let g = mesh.barycentric_gradients(t);
            let fbar = (weight[tri[0]] + weight[tri[1]] + weight[tri[2]]) / 3.0;
            let scale = fbar * mesh.face_areas()[t];
            let mut out = [(0, 0, 0.0); 9];
            for a in 0..3 {
                for b in 0..3 {
                    out[3 * a + b] = (tri[a], tri[b], scale * g[a].dot(&g[b]));
                }
            }
            out
        })
        .collect();
    CsrMatrix::from_triplets(mesh.vertex_count(), local.into_iter().flatten().collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients for a consistent positive
/// semidefinite system whose kernel is the constants. Returns the iterate,
/// the iteration count and the final relative residual.
pub fn pcg(k: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize, f64)> {
    let n = k.dim();
    let inv_diag: Vec<f64> = k.diagonal().iter().map(|d| if *d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let b_norm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok((x, 0, 0.0));
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut kp = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut rel = 1.0;
    for it in 1..=max_iter {
        k.mul_into(&p, &mut kp);
        let pkp = dot(&p, &kp);
        if !(pkp > 0.0) {
            return Err(Error::NotConverged { iterations: it, residual: rel });
        }
        let alpha = rz / pkp;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * kp[i];
        }
        rel = dot(&r, &r).sqrt() / b_norm;
        if rel <= tol {
            return Ok((x, it, rel));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotConverged { iterations: max_iter, residual: rel })
}

/// Boundary vertices whose boundary turning angle exceeds `min_angle`.
pub fn boundary_corners(mesh: &TriMesh, min_angle: f64) -> Vec<usize> {
    let pos = mesh.positions();
    let mut corners = Vec::new();
    for lp in mesh.boundary_loops() {
        let k = lp.len();
        for i in 0..k {
            let (a, b, c) = (pos[lp[(i + k - 1) % k]], pos[lp[i]], pos[lp[(i + 1) % k]]);
            let (t0, t1) = ((b - a).normalize(), (c - b).normalize());
            if t0.dot(&t1).clamp(-1.0, 1.0).acos() > min_angle {
                corners.push(lp[i]);
            }
        }
    }
    corners.sort_unstable();
    corners
}

/// Corner threshold used to exclude Hessians near non-smooth boundary points.
pub const CORNER_ANGLE: f64 = std::f64::consts::PI / 6.0;

pub fn solve(problem: &NeumannProblem) -> Result<PotentialSolution> {
    let mesh = problem.mesh;
    mesh.check_field(problem.weight.len())?;
    mesh.check_field(problem.rhs.len())?;
    check_positive(&problem.weight)?;
    if problem.boundary_flux != BoundaryFlux::Closed && mesh.is_closed() {
        return Err(Error::Precondition("boundary flux given on a closed mesh".into()));
    }
    if problem.boundary_flux == BoundaryFlux::Closed && !mesh.is_closed() {
        return Err(Error::Precondition("open mesh requires a boundary flux".into()));
    }

    let compat = problem.compatibility()?;
    let mut rhs = problem.rhs.0.clone();
    let mut projected = 0.0;
    if compat.relative() > COMPAT_TOL {
        if compat.relative() > COMPAT_PROJECT_TOL {
            return Err(Error::Incompatible {
                residual: compat.relative(),
                tolerance: COMPAT_PROJECT_TOL,
            });
        }
        let shift = compat.residual / mesh.total_area();
        rhs.iter_mut().for_each(|v| *v -= shift);
        projected = compat.relative();
    }

    let load = problem.boundary_load()?;
    let mut b: Vec<f64> = (0..mesh.vertex_count())
        .map(|i| load[i] - mesh.vertex_areas()[i] * rhs[i])
        .collect();
    let mean = compensated_sum(b.iter().copied()) / b.len() as f64;
    b.iter_mut().for_each(|v| *v -= mean);

    let k = assemble_stiffness(mesh, &problem.weight.0);
    let max_iter = 20 * mesh.vertex_count() + 100;
    let (mut u, iterations, residual_norm) = pcg(&k, &b, CG_TOL, max_iter)?;
    let shift = mesh.integrate_values(&u)? / mesh.total_area();
    u.iter_mut().for_each(|v| *v -= shift);
    let u = VertexScalarField(u);

    let grad_u = mesh.gradient(&u)?;
    let mut hess_u = mesh.hessian_recover(&u)?;
    for c in boundary_corners(mesh, CORNER_ANGLE) {
        hess_u.fits[c] = None;
        for &j in mesh.two_ring(c) {
            hess_u.fits[j] = None;
        }
    }
    let excluded = hess_u.excluded().len();
    Ok(PotentialSolution {
        u,
        grad_u,
        hess_u,
        diagnostics: SolverDiagnostics {
            iterations,
            residual_norm,
            compatibility_residual: compat.residual,
            compatibility_scale: compat.scale,
            projected,
            excluded_hessian_vertices: excluded,
        },
    })
}

/// Positive radial density profile on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialProfile {
    Constant { value: f64 },
    /// `a + b r²`
    Quadratic { a: f64, b: f64 },
    /// `amp · exp(−rate r²)`
    Gaussian { amp: f64, rate: f64 },
}

impl RadialProfile {
    pub fn value(&self, r: f64) -> f64 {
        match *self {
            Self::Constant { value } => value,
            Self::Quadratic { a, b } => a + b * r * r,
            Self::Gaussian { amp, rate } => amp * (-rate * r * r).exp(),
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        match *self {
            Self::Constant { .. } => 0.0,
            Self::Quadratic { b, .. } => 2.0 * b * r,
            Self::Gaussian { amp, rate } => -2.0 * rate * r * amp * (-rate * r * r).exp(),
        }
    }
}

/// Solution of the radial reduction `(r^{n−1} f u′)′ = r^{n−1} ρ`,
/// `u′(1) = 1`, sampled on a uniform grid of `[0, 1]`.
#[derive(Debug, Clone, Serialize)]
pub struct RadialSolution {
    pub n: usize,
    /// Normalisation constant applied to the profile.
    pub scale: f64,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
}

impl RadialSolution {
    /// Piecewise-cubic Hermite interpolation of `u`.
    pub fn u_at(&self, r: f64) -> f64 {
        let m = self.r.len() - 1;
        let h = 1.0 / m as f64;
        let k = ((r / h).floor() as usize).min(m - 1);
        let s = (r - self.r[k]) / h;
        let (h00, h10, h01, h11) = (
            2.0 * s.powi(3) - 3.0 * s * s + 1.0,
            s.powi(3) - 2.0 * s * s + s,
            -2.0 * s.powi(3) + 3.0 * s * s,
            s.powi(3) - s * s,
        );
        h00 * self.u[k] + h10 * h * self.du[k] + h01 * self.u[k + 1] + h11 * h * self.du[k + 1]
    }
}

/// Sobolev-mode potential on the unit ball of `R^n` for a radial density.
///
/// The profile is normalised with the radial form of the normalisation
/// identity. `I(r) = ∫₀^r s^{n−1} ρ` is accumulated with 8-point
/// Gauss-Legendre per half step; `u = ∫ I/(r^{n−1} f)` then uses Simpson
/// steps (RK4 for a state-independent right-hand side). `u` is fixed by
/// `∫_B u = 0`.
pub fn solve_radial(n: usize, profile: RadialProfile, samples: usize) -> Result<RadialSolution> {
    if n < 2 {
        return Err(Error::DimensionOutOfRange { value: n, min: 2, max: crate::geomconst::MAX_DIM });
    }
    if samples < 8 {
        return Err(Error::Precondition(format!("radial solve needs at least 8 samples, got {samples}")));
    }
    let m = samples;
    let h = 1.0 / m as f64;
    let nf = n as f64;
    let p = exponent(n);
    for k in 0..=2 * m {
        let r = 0.5 * h * k as f64;
        if !(profile.value(r) > 0.0) {
            return Err(Error::Domain { name: "radial profile", value: profile.value(r), reason: "must be positive on [0, 1]" });
        }
    }
    let w = |r: f64| r.powi(n as i32 - 1);
    let gl = GaussLegendre::new(8);
    let lhs = gl.integrate_composite(0.0, 1.0, m, |r| w(r) * profile.derivative(r).abs()) + profile.value(1.0);
    let rhs = nf * gl.integrate_composite(0.0, 1.0, m, |r| w(r) * profile.value(r).powf(p));
    let scale = (lhs / rhs).powi(n as i32 - 1);
    let f = |r: f64| scale * profile.value(r);
    let rho = |r: f64| nf * f(r).powf(p) - scale * profile.derivative(r).abs();
    let g = |r: f64| w(r) * rho(r);

    // I at grid and midpoints
    let mut i_grid = vec![0.0; m + 1];
    let mut i_mid = vec![0.0; m];
    for k in 0..m {
        let a = k as f64 * h;
        i_mid[k] = i_grid[k] + gl.integrate(a, a + 0.5 * h, g);
        i_grid[k + 1] = i_mid[k] + gl.integrate(a + 0.5 * h, a + h, g);
    }
    let du_of = |r: f64, i: f64| if r == 0.0 { 0.0 } else { i / (w(r) * f(r)) };
    let r: Vec<f64> = (0..=m).map(|k| k as f64 * h).collect();
    let du: Vec<f64> = (0..=m).map(|k| du_of(r[k], i_grid[k])).collect();
    let mut u = vec![0.0; m + 1];
    for k in 0..m {
        let mid = du_of(r[k] + 0.5 * h, i_mid[k]);
        u[k + 1] = u[k] + h / 6.0 * (du[k] + 4.0 * mid + du[k + 1]);
    }
    // mean-zero gauge against the radial volume weight
    let vol = 1.0 / nf;
    let mean = compensated_sum((0..m).map(|k| {
        let mid_u = 0.5 * (u[k] + u[k + 1]) + h / 8.0 * (du[k] - du[k + 1]);
        h / 6.0 * (w(r[k]) * u[k] + 4.0 * w(r[k] + 0.5 * h) * mid_u + w(r[k + 1]) * u[k + 1])
    })) / vol;
    u.iter_mut().for_each(|v| *v -= mean);
    Ok(RadialSolution { n, scale, r, u, du })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{curvature, point, shapes};

    #[test]
    fn constant_density_on_disk_is_already_normalised() {
        let disk = shapes::disk(1.0, 3, 2).unwrap();
        let f = VertexScalarField::constant(disk.vertex_count(), 1.0);
        let g = normalize_density(&disk, &f, Mode::Sobolev, None).unwrap();
        let n = disk_rings_polygon_ratio(&disk);
        assert!((g.0[0] - n).abs() < 1e-12);
        let two = VertexScalarField::constant(disk.vertex_count(), 2.0);
        let g2 = normalize_density(&disk, &two, Mode::Sobolev, None).unwrap();
        assert!((g2.0[0] - g.0[0]).abs() < 1e-12);
    }

    // perimeter/(2·area) of the polygonal disk; 1 in the smooth limit
    fn disk_rings_polygon_ratio(mesh: &TriMesh) -> f64 {
        mesh.boundary_length() / (2.0 * mesh.total_area())
    }

    #[test]
    fn log_sobolev_sphere_constant() {
        let s = shapes::icosphere(1.0, 3, 3).unwrap();
        let c = curvature(&s).unwrap();
        let f = VertexScalarField::constant(s.vertex_count(), 1.0);
        let g = normalize_density(&s, &f, Mode::LogSobolev, Some(&c)).unwrap();
        assert!((g.0[0].ln() - 4.0).abs() < 1e-3);
        let rho = build_rhs(&s, &g, Mode::LogSobolev, Some(&c)).unwrap();
        let scale = g.0[0] * 4.0;
        assert!(rho.0.iter().all(|v| v.abs() < 1e-3 * scale));
    }

    #[test]
    fn missing_curvature_is_an_error() {
        let s = shapes::icosphere(1.0, 1, 3).unwrap();
        let f = VertexScalarField::constant(s.vertex_count(), 1.0);
        assert!(matches!(
            build_rhs(&s, &f, Mode::LogSobolev, None),
            Err(Error::MissingCurvature(_))
        ));
    }

    #[test]
    fn nonpositive_density_rejected() {
        let d = shapes::disk(1.0, 1, 2).unwrap();
        let mut f = VertexScalarField::constant(d.vertex_count(), 1.0);
        f.0[3] = 0.0;
        assert!(matches!(
            normalize_density(&d, &f, Mode::Sobolev, None),
            Err(Error::NonpositiveDensity(_))
        ));
    }

    #[test]
    fn compatibility_after_normalisation_is_roundoff() {
        let d = shapes::disk(1.0, 3, 2).unwrap();
        let f = VertexScalarField::from_fn(d.positions(), |p| 1.0 + 0.5 * p[0] + 0.2 * p[1] * p[1]);
        let prob = NeumannProblem::from_density(&d, &f, Mode::Sobolev, None).unwrap();
        assert!(prob.compatibility().unwrap().relative() < 1e-12);
    }

    #[test]
    fn disk_solution_is_half_r_squared() {
        let d = shapes::disk(1.0, 3, 2).unwrap();
        let f = VertexScalarField::constant(d.vertex_count(), 1.0);
        let prob = NeumannProblem::from_density(&d, &f, Mode::Sobolev, None).unwrap();
        let sol = solve(&prob).unwrap();
        assert!(sol.residual_norm() <= CG_TOL);
        let exact: Vec<f64> = d.positions().iter().map(|p| 0.5 * p.norm_squared()).collect();
        let shift = d.integrate_values(&exact).unwrap() / d.total_area();
        let err = sol
            .u
            .0
            .iter()
            .zip(&exact)
            .map(|(u, e)| (u - e + shift).abs())
            .fold(0.0, f64::max);
        let h = d.h_max();
        assert!(err < 2.0 * h * h, "err {err} h {h}");
        assert!(d.integrate(&sol.u).unwrap().abs() < 1e-12);
    }

    #[test]
    fn sphere_log_sobolev_potential_vanishes() {
        let s = shapes::icosphere(1.0, 2, 3).unwrap();
        let c = curvature(&s).unwrap();
        let f = VertexScalarField::constant(s.vertex_count(), 1.0);
        let prob = NeumannProblem::from_density(&s, &f, Mode::LogSobolev, Some(&c)).unwrap();
        let sol = solve(&prob).unwrap();
        let umax = sol.u.0.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(umax < 1e-3, "umax {umax}");
    }

    #[test]
    fn incompatible_data_rejected() {
        let d = shapes::disk(1.0, 2, 2).unwrap();
        let prob = NeumannProblem {
            mesh: &d,
            weight: VertexScalarField::constant(d.vertex_count(), 1.0),
            rhs: VertexScalarField::constant(d.vertex_count(), 5.0),
            boundary_flux: BoundaryFlux::Unit,
            mode: Mode::Sobolev,
        };
        assert!(matches!(solve(&prob), Err(Error::Incompatible { .. })));
    }

    #[test]
    fn square_corners_are_excluded() {
        let sq = shapes::square(1.0, 2).unwrap();
        assert_eq!(boundary_corners(&sq, CORNER_ANGLE).len(), 4);
        let f = VertexScalarField::constant(sq.vertex_count(), 1.0);
        let prob = NeumannProblem::from_density(&sq, &f, Mode::Sobolev, None).unwrap();
        let sol = solve(&prob).unwrap();
        let corner = sq
            .positions()
            .iter()
            .position(|p| (p - point(&[0.0, 0.0])).norm() < 1e-12)
            .unwrap();
        assert!(sol.hess_u.fits[corner].is_none());
        assert!(sol.diagnostics.excluded_hessian_vertices >= 4);
    }

    #[test]
    fn radial_constant_profile_is_exact() {
        for n in [2, 5] {
            let s = solve_radial(n, RadialProfile::Constant { value: 1.0 }, 200).unwrap();
            assert!((s.scale - 1.0).abs() < 1e-12);
            for (r, du) in s.r.iter().zip(&s.du) {
                assert!((du - r).abs() < 1e-12);
            }
            // u = r²/2 − n/(2(n+2))
            let c = n as f64 / (2.0 * (n as f64 + 2.0));
            assert!((s.u_at(0.7) - (0.245 - c)).abs() < 1e-10);
        }
    }

    #[test]
    fn radial_gaussian_hits_unit_flux() {
        let s = solve_radial(3, RadialProfile::Gaussian { amp: 1.0, rate: 1.0 }, 400).unwrap();
        assert!((s.du.last().unwrap() - 1.0).abs() < 1e-10);
        assert!(solve_radial(2, RadialProfile::Quadratic { a: 1.0, b: -2.0 }, 100).is_err());
    }

    #[test]
    fn radial_quadratic_matches_fine_trapezoid() {
        let s = solve_radial(3, RadialProfile::Quadratic { a: 1.0, b: 1.0 }, 256).unwrap();
        // independent check: trapezoid with 2^16 panels for I(r), then u′ = I/(r² f)
        let n = 3;
        let prof = RadialProfile::Quadratic { a: 1.0, b: 1.0 };
        let f = |r: f64| s.scale * prof.value(r);
        let rho = |r: f64| 3.0 * f(r).powf(1.5) - s.scale * prof.derivative(r).abs();
        let r0 = 0.5;
        let m = 1 << 16;
        let h = r0 / m as f64;
        let g = |r: f64| r.powi(n - 1) * rho(r);
        let mut acc = 0.5 * (g(0.0) + g(r0));
        for k in 1..m {
            acc += g(k as f64 * h);
        }
        let du = acc * h / (r0 * r0 * f(r0));
        assert!((s.du[128] - du).abs() < 1e-8);
    }
}
