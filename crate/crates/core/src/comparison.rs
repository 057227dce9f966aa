//! Rotationally symmetric model manifolds `dr² + φ(r)² g_{S^{n−1}}` with
//! nonnegative curvature, Jacobi fields along radial geodesics and the
//! Riccati comparison that drives the monotonicity arguments.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geomconst::{ball_volume, sphere_area};
use crate::quadrature::integrate_piecewise;

/// Radius of the ball around a cone tip excluded from curvature evaluations.
pub const TIP_RADIUS: f64 = 1e-6;
pub const CERTIFICATE_TOL: f64 = 1e-12;
pub const STEPS_PER_UNIT: usize = 2000;
pub const MONOTONE_SLACK: f64 = 1e-8;
pub const TRACE_SLACK: f64 = 1e-7;

/// Warping function of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Euclidean,
    /// `φ = α r`
    Cone { alpha: f64 },
    /// `φ′ = α + (1 − α) ψ(r/s)` with the quintic smoothstep
    /// `ψ(x) = 1 − (10x³ − 15x⁴ + 6x⁵)` on `[0, 1]` and `ψ = 0` beyond.
    SmoothedCone { alpha: f64, s: f64 },
}

fn smooth_psi(x: f64) -> (f64, f64, f64) {
    // (Ψ = ∫ψ, ψ, ψ′)
    if x >= 1.0 {
        (0.5, 0.0, 0.0)
    } else {
        let x2 = x * x;
        (
            x - 2.5 * x2 * x2 + 3.0 * x2 * x2 * x - x2 * x2 * x2,
            1.0 - (10.0 * x2 * x - 15.0 * x2 * x2 + 6.0 * x2 * x2 * x),
            -30.0 * x2 * (1.0 - x) * (1.0 - x),
        )
    }
}

impl Profile {
    pub fn phi(&self, r: f64) -> f64 {
        match *self {
            Profile::Euclidean => r,
            Profile::Cone { alpha } => alpha * r,
            Profile::SmoothedCone { alpha, s } => alpha * r + (1.0 - alpha) * s * smooth_psi(r / s).0,
        }
    }

    pub fn dphi(&self, r: f64) -> f64 {
        match *self {
            Profile::Euclidean => 1.0,
            Profile::Cone { alpha } => alpha,
            Profile::SmoothedCone { alpha, s } => alpha + (1.0 - alpha) * smooth_psi(r / s).1,
        }
    }

    pub fn ddphi(&self, r: f64) -> f64 {
        match *self {
            Profile::Euclidean | Profile::Cone { .. } => 0.0,
            Profile::SmoothedCone { alpha, s } => (1.0 - alpha) * smooth_psi(r / s).2 / s,
        }
    }

    /// Slope at infinity.
    pub fn asymptotic_slope(&self) -> f64 {
        match *self {
            Profile::Euclidean => 1.0,
            Profile::Cone { alpha } | Profile::SmoothedCone { alpha, .. } => alpha,
        }
    }

    fn breaks(&self) -> Vec<f64> {
        match *self {
            Profile::SmoothedCone { s, .. } => vec![s],
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WarpedModel {
    pub n: usize,
    pub profile: Profile,
    pub r_max: f64,
    pub grid: Vec<f64>,
    /// Smallest radial and tangential sectional curvatures seen on the grid.
    pub min_radial_curvature: f64,
    pub min_tangential_curvature: f64,
}

/// Builds and certifies a model: `−φ″/φ ≥ −1e−12` and `(1 − φ′²)/φ² ≥ −1e−12`
/// on a uniform grid of `[TIP_RADIUS, r_max]`.
pub fn build_model(n: usize, profile: Profile, r_max: f64) -> Result<WarpedModel> {
    if !(2..=crate::geomconst::MAX_DIM).contains(&n) {
        return Err(Error::DimensionOutOfRange { value: n, min: 2, max: crate::geomconst::MAX_DIM });
    }
    if !(r_max > 0.0) {
        return Err(Error::Domain { name: "r_max", value: r_max, reason: "must be positive" });
    }
    match profile {
        Profile::Euclidean => {}
        Profile::Cone { alpha } | Profile::SmoothedCone { alpha, .. } => {
            if !(alpha > 0.0) {
                return Err(Error::InvalidModel(format!("cone slope {alpha} must be positive")));
            }
        }
    }
    if let Profile::SmoothedCone { s, .. } = profile {
        if !(s > 0.0) {
            return Err(Error::InvalidModel(format!("transition radius {s} must be positive")));
        }
    }
    let points = 4000;
    let grid: Vec<f64> = (0..=points)
        .map(|i| TIP_RADIUS + (r_max - TIP_RADIUS) * i as f64 / points as f64)
        .collect();
    let mut min_radial = f64::INFINITY;
    let mut min_tangential = f64::INFINITY;
    for &r in &grid {
        let phi = profile.phi(r);
        let radial = -profile.ddphi(r) / phi;
        let tangential = (1.0 - profile.dphi(r).powi(2)) / (phi * phi);
        min_radial = min_radial.min(radial);
        min_tangential = min_tangential.min(tangential);
        if radial < -CERTIFICATE_TOL || tangential < -CERTIFICATE_TOL {
            return Err(Error::InvalidModel(format!(
                "curvature certificate fails at r = {r}: -φ''/φ = {radial:.3e}, (1-φ'²)/φ² = {tangential:.3e}"
            )));
        }
    }
    Ok(WarpedModel {
        n,
        profile,
        r_max,
        grid,
        min_radial_curvature: min_radial,
        min_tangential_curvature: min_tangential,
    })
}

impl WarpedModel {
    /// `∫_a^b |S^{n−1}| φ^{n−1}`.
    pub fn shell_volume(&self, a: f64, b: f64) -> Result<f64> {
        let area = sphere_area(self.n - 1)?;
        let k = self.n as i32 - 1;
        let p = self.profile;
        Ok(area * integrate_piecewise(a, b, &p.breaks(), 8, |r| p.phi(r).powi(k)))
    }

    /// Area of the geodesic sphere of radius `r` about the pole.
    pub fn sphere_area_at(&self, r: f64) -> Result<f64> {
        Ok(sphere_area(self.n - 1)? * self.profile.phi(r).powi(self.n as i32 - 1))
    }

    pub fn ball_volume(&self, r: f64) -> Result<f64> {
        self.shell_volume(0.0, r)
    }
}

/// `θ = lim vol(B_r) / (|Bⁿ| rⁿ) = (lim φ(r)/r)^{n−1}`; the limit of
/// `φ(r)/r = α + c/r` is extrapolated from `R` and `2R`.
pub fn asymptotic_volume_ratio(model: &WarpedModel) -> Result<f64> {
    let p = model.profile;
    let ratio = |r: f64| p.phi(r) / r;
    let base = model.r_max.max(match p {
        Profile::SmoothedCone { s, .. } => 10.0 * s,
        _ => 1.0,
    });
    let rich = |r: f64| 2.0 * ratio(2.0 * r) - ratio(r);
    let (a, b) = (rich(base), rich(2.0 * base));
    if !((a - b).abs() <= 1e-9 * a.abs().max(1.0)) {
        return Err(Error::InvalidModel(format!("φ(r)/r does not settle: {a} vs {b}")));
    }
    Ok(b.powi(model.n as i32 - 1))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BishopGromovVerdict {
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Largest relative increase between consecutive ratios.
    pub max_relative_increase: f64,
    pub nonincreasing: bool,
    /// Ratio at the largest radius and `|Bⁿ| θ`.
    pub limit: f64,
    pub target: f64,
    pub limit_error: f64,
}

/// `r ↦ vol(B_r)/rⁿ` on `radii`, plus the same ratio at `r = 1e8` compared
/// with `|Bⁿ| θ`.
pub fn bishop_gromov_check(model: &WarpedModel, radii: &[f64], tol: f64) -> Result<BishopGromovVerdict> {
    if radii.is_empty() || radii.windows(2).any(|w| !(w[1] > w[0])) || !(radii[0] > 0.0) {
        return Err(Error::Precondition("radii must be positive and increasing".into()));
    }
    let n = model.n as i32;
    let ratios: Vec<f64> = radii
        .iter()
        .map(|&r| Ok(model.ball_volume(r)? / r.powi(n)))
        .collect::<Result<_>>()?;
    let max_relative_increase = ratios
        .windows(2)
        .map(|w| (w[1] - w[0]) / w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let far = 1e8;
    let limit = model.ball_volume(far)? / far.powi(n);
    let target = ball_volume(model.n)? * asymptotic_volume_ratio(model)?;
    Ok(BishopGromovVerdict {
        radii: radii.to_vec(),
        nonincreasing: max_relative_increase <= tol,
        max_relative_increase: max_relative_increase.max(0.0),
        ratios,
        limit,
        target,
        limit_error: (limit - target).abs() / target,
    })
}

/// Curvature operator along the radial geodesic `ρ(t) = ρ₀ + t·direction`.
#[derive(Debug, Clone, Copy)]
pub struct RadialCurvature {
    pub profile: Profile,
    pub rho0: f64,
    pub direction: f64,
    pub r_max: f64,
    /// Matrix size: `n` includes the (flat) radial direction, `n − 1` does not.
    pub k: usize,
    pub n: usize,
}

/// `S(t) = diag(0?, −φ″/φ, …)` in a parallel frame along a radial geodesic.
pub fn curvature_along_radial_geodesic(
    model: &WarpedModel,
    rho0: f64,
    outward: bool,
    k: usize,
) -> Result<RadialCurvature> {
    if k != model.n && k + 1 != model.n {
        return Err(Error::Precondition(format!("frame size {k} must be n or n-1 (n = {})", model.n)));
    }
    if !(0.0..=model.r_max).contains(&rho0) {
        return Err(Error::Domain { name: "rho0", value: rho0, reason: "outside the model grid" });
    }
    Ok(RadialCurvature {
        profile: model.profile,
        rho0,
        direction: if outward { 1.0 } else { -1.0 },
        r_max: model.r_max,
        k,
        n: model.n,
    })
}

impl RadialCurvature {
    pub fn radius(&self, t: f64) -> f64 {
        self.rho0 + self.direction * t
    }

    /// `−φ″/φ`, zero inside the excised tip ball.
    pub fn sectional(&self, t: f64) -> Result<f64> {
        let r = self.radius(t);
        if r < -1e-12 || r > self.r_max + 1e-12 {
            return Err(Error::Domain { name: "geodesic radius", value: r, reason: "leaves the model grid" });
        }
        if r < TIP_RADIUS {
            return Ok(0.0);
        }
        Ok(-self.profile.ddphi(r) / self.profile.phi(r))
    }

    pub fn matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        let s = self.sectional(t)?;
        let mut m = DMatrix::zeros(self.k, self.k);
        let first = if self.k == self.n { 1 } else { 0 };
        for i in first..self.k {
            m[(i, i)] = s;
        }
        Ok(m)
    }

    /// `tr S = Ric(γ′, γ′)`.
    pub fn ricci(&self, t: f64) -> Result<f64> {
        Ok((self.n - 1) as f64 * self.sectional(t)?)
    }
}

/// Sampled solution of `P″ = −P S`, `P(0) = I`.
#[derive(Debug, Clone)]
pub struct RiccatiTrajectory {
    pub k: usize,
    pub t: Vec<f64>,
    pub p: Vec<DMatrix<f64>>,
    pub q: Vec<DMatrix<f64>>,
    pub det_p: Vec<f64>,
    pub tr_q: Vec<f64>,
    pub focal_time: Option<f64>,
    /// `max ‖Q − Qᵀ‖_max` over the recorded points.
    pub max_q_asymmetry: f64,
    pub step: f64,
}

fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).abs().max()
}

/// Classical RK4 with `steps` fixed steps on `[0, r]`. Integration stops at
/// the first focal point: `det P` at round-off level or negative, or an upward jump of `tr Q` (which is
/// nonincreasing while `tr S ≥ 0`, so a jump means `P` passed through a
/// singular matrix with an even-order zero of the determinant).
pub fn integrate_jacobi<F>(s: F, dp0: &DMatrix<f64>, r: f64, steps: usize) -> Result<RiccatiTrajectory>
where
    F: Fn(f64) -> Result<DMatrix<f64>>,
{
    if steps < 100 {
        return Err(Error::Precondition(format!("at least 100 steps required, got {steps}")));
    }
    let k = dp0.nrows();
    if dp0.ncols() != k || k == 0 {
        return Err(Error::Precondition("P'(0) must be a nonempty square matrix".into()));
    }
    if asymmetry(dp0) > 1e-12 * (1.0 + dp0.abs().max()) {
        return Err(Error::Precondition("P'(0) must be symmetric".into()));
    }
    if !(r > 0.0) {
        return Err(Error::Domain { name: "r", value: r, reason: "must be positive" });
    }
    let s0 = s(0.0)?;
    if s0.nrows() != k || asymmetry(&s0) > 1e-12 * (1.0 + s0.abs().max()) {
        return Err(Error::Precondition("S(0) must be symmetric with the size of P".into()));
    }

    let dt = r / steps as f64;
    let mut p = DMatrix::<f64>::identity(k, k);
    let mut v = dp0.clone();
    let mut traj = RiccatiTrajectory {
        k,
        t: vec![0.0],
        p: vec![p.clone()],
        q: vec![v.clone()],
        det_p: vec![1.0],
        tr_q: vec![v.trace()],
        focal_time: None,
        max_q_asymmetry: asymmetry(&v),
        step: dt,
    };
    let mut peak = 1.0f64;
    for i in 0..steps {
        let t = i as f64 * dt;
        let (sa, sb, sc) = (s(t)?, s(t + 0.5 * dt)?, s(t + dt)?);
        let k1p = v.clone();
        let k1v = -(&p * &sa);
        let p2 = &p + &k1p * (0.5 * dt);
        let k2p = &v + &k1v * (0.5 * dt);
        let k2v = -(&p2 * &sb);
        let p3 = &p + &k2p * (0.5 * dt);
        let k3p = &v + &k2v * (0.5 * dt);
        let k3v = -(&p3 * &sb);
        let p4 = &p + &k3p * dt;
        let k4p = &v + &k3v * dt;
        let k4v = -(&p4 * &sc);
        p += (&k1p + &k2p * 2.0 + &k3p * 2.0 + &k4p) * (dt / 6.0);
        v += (&k1v + &k2v * 2.0 + &k3v * 2.0 + &k4v) * (dt / 6.0);

        let t1 = (i + 1) as f64 * dt;
        let det = p.determinant();
        let prev_det = *traj.det_p.last().expect("nonempty");
        let q = p.clone().try_inverse().map(|inv| inv * &v);
        let jumped = match &q {
            Some(q) => {
                let prev = *traj.tr_q.last().expect("nonempty");
                q.trace() > prev + 1e-9 * (1.0 + prev.abs())
            }
            None => true,
        };
        if det <= 1e-14 * peak || jumped {
            let focal = if det <= 0.0 && prev_det > 0.0 {
                t + dt * prev_det / (prev_det - det)
            } else {
                t + 0.5 * dt
            };
            traj.focal_time = Some(focal);
            break;
        }
        let q = q.expect("invertible before focal time");
        traj.max_q_asymmetry = traj.max_q_asymmetry.max(asymmetry(&q));
        traj.t.push(t1);
        peak = peak.max(det);
        traj.det_p.push(det);
        traj.tr_q.push(q.trace());
        traj.p.push(p.clone());
        traj.q.push(q);
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityVerdict {
    pub passed: bool,
    /// `min_i (g(t_i) − g(t_{i+1}))`.
    pub min_margin: f64,
    /// Largest `(g(t_{i+1}) − g(t_i)) / g(t_i)`.
    pub worst_relative_increase: f64,
    pub steps_checked: usize,
}

fn monotone_verdict(values: &[f64], slack: f64) -> MonotonicityVerdict {
    let mut min_margin = f64::INFINITY;
    let mut worst = f64::NEG_INFINITY;
    for w in values.windows(2) {
        min_margin = min_margin.min(w[0] - w[1]);
        worst = worst.max((w[1] - w[0]) / w[0].abs().max(f64::MIN_POSITIVE));
    }
    MonotonicityVerdict {
        passed: worst <= slack,
        min_margin,
        worst_relative_increase: worst,
        steps_checked: values.len().saturating_sub(1),
    }
}

/// `g(t) = (1 + t f^{1/(n−1)})^{−n} det P(t)` along the trajectory.
pub fn sobolev_profile(traj: &RiccatiTrajectory, f_val: f64, n: usize) -> Vec<f64> {
    let a = f_val.powf(1.0 / (n as f64 - 1.0));
    traj.t
        .iter()
        .zip(&traj.det_p)
        .map(|(t, d)| (1.0 + t * a).powi(-(n as i32)) * d)
        .collect()
}

/// Checks that `g` is nonincreasing, after enforcing `tr Q(0) ≤ n f^{1/(n−1)}`.
pub fn sobolev_monotonicity_check(traj: &RiccatiTrajectory, f_val: f64, n: usize) -> Result<MonotonicityVerdict> {
    if !(f_val > 0.0) {
        return Err(Error::NonpositiveDensity(f_val));
    }
    if traj.k != n {
        return Err(Error::Precondition(format!("trajectory has size {}, expected n = {n}", traj.k)));
    }
    let cap = n as f64 * f_val.powf(1.0 / (n as f64 - 1.0));
    if traj.tr_q[0] > cap + 1e-9 {
        return Err(Error::Hypothesis(format!(
            "tr Q(0) = {} exceeds n f^(1/(n-1)) = {cap}",
            traj.tr_q[0]
        )));
    }
    Ok(monotone_verdict(&sobolev_profile(traj, f_val, n), MONOTONE_SLACK))
}

/// `h(t) = (1 − t ⟨H,y⟩/(n−1))^{−(n−1)} det P(t)`; NaN where the base is
/// not positive.
pub fn fwc_profile(traj: &RiccatiTrajectory, h_dot_y: f64, n: usize) -> Vec<f64> {
    let k = n as f64 - 1.0;
    traj.t
        .iter()
        .zip(&traj.det_p)
        .map(|(t, d)| {
            let base = 1.0 - t * h_dot_y / k;
            if base > 0.0 {
                base.powi(-(n as i32 - 1)) * d
            } else {
                f64::NAN
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FwcVerdict {
    pub monotone: MonotonicityVerdict,
    /// `min_t (1 − t⟨H,y⟩/(n−1))` over the recorded points.
    pub min_base: f64,
    pub passed: bool,
}

pub fn fwc_monotonicity_check(traj: &RiccatiTrajectory, h_dot_y: f64, n: usize) -> Result<FwcVerdict> {
    if traj.k + 1 != n {
        return Err(Error::Precondition(format!("trajectory has size {}, expected n - 1 = {}", traj.k, n - 1)));
    }
    if traj.tr_q[0] > -h_dot_y + 1e-9 * (1.0 + h_dot_y.abs()) {
        return Err(Error::Hypothesis(format!(
            "tr P'(0) = {} exceeds -<H,y> = {}",
            traj.tr_q[0], -h_dot_y
        )));
    }
    let k = n as f64 - 1.0;
    let min_base = traj
        .t
        .iter()
        .map(|t| 1.0 - t * h_dot_y / k)
        .fold(f64::INFINITY, f64::min);
    let values = fwc_profile(traj, h_dot_y, n);
    let monotone = monotone_verdict(&values, MONOTONE_SLACK);
    Ok(FwcVerdict {
        passed: monotone.passed && min_base > 0.0,
        monotone,
        min_base,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceVerdict {
    pub passed: bool,
    /// `min_i [−tr Q_i tr Q_{i+1}/k − (tr Q_{i+1} − tr Q_i)/dt] / (1 + |tr Q_i tr Q_{i+1}|/k)`.
    pub derivative_margin: f64,
    /// `min_i [q₀/(1 + t_i q₀/k) − tr Q_i] / (1 + |tr Q_i|)` where the bound is finite.
    pub bound_margin: f64,
}

/// Discrete Riccati trace comparison. Both margins are relative to the local
/// size of `tr Q`, which blows up near a focal point, and pass at
/// `−TRACE_SLACK`.
pub fn riccati_trace_comparison(traj: &RiccatiTrajectory) -> TraceVerdict {
    let k = traj.k as f64;
    let q0 = traj.tr_q[0];
    let mut derivative_margin = f64::INFINITY;
    for i in 0..traj.t.len().saturating_sub(1) {
        let (a, b) = (traj.tr_q[i], traj.tr_q[i + 1]);
        let dt = traj.t[i + 1] - traj.t[i];
        let m = (-a * b / k - (b - a) / dt) / (1.0 + (a * b / k).abs());
        derivative_margin = derivative_margin.min(m);
    }
    let mut bound_margin = f64::INFINITY;
    for (t, q) in traj.t.iter().zip(&traj.tr_q) {
        let denom = 1.0 + t * q0 / k;
        if denom > 0.0 {
            bound_margin = bound_margin.min((q0 / denom - q) / (1.0 + q.abs()));
        }
    }
    TraceVerdict {
        passed: derivative_margin >= -TRACE_SLACK && bound_margin >= -TRACE_SLACK,
        derivative_margin,
        bound_margin,
    }
}

/// Columns `t, det_p, tr_q[, g][, h]`.
pub fn trajectory_csv(traj: &RiccatiTrajectory, sobolev: Option<(f64, usize)>, fwc: Option<(f64, usize)>) -> String {
    let g = sobolev.map(|(f, n)| sobolev_profile(traj, f, n));
    let h = fwc.map(|(hy, n)| fwc_profile(traj, hy, n));
    let mut out = String::from("t,det_p,tr_q");
    if g.is_some() {
        out.push_str(",g");
    }
    if h.is_some() {
        out.push_str(",h");
    }
    out.push('\n');
    for i in 0..traj.t.len() {
        let _ = write!(out, "{:.9e},{:.12e},{:.12e}", traj.t[i], traj.det_p[i], traj.tr_q[i]);
        if let Some(g) = &g {
            let _ = write!(out, ",{:.12e}", g[i]);
        }
        if let Some(h) = &h {
            let _ = write!(out, ",{:.12e}", h[i]);
        }
        out.push('\n');
    }
    out
}

/// Tube around the geodesic sphere of radius `rho0` about the pole.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TubeConfig {
    pub model: WarpedModel,
    pub rho0: f64,
    pub r: f64,
}

impl TubeConfig {
    pub fn new(model: WarpedModel, rho0: f64, r: f64) -> Result<Self> {
        if !(rho0 > 0.0) {
            return Err(Error::Domain { name: "rho0", value: rho0, reason: "must be positive" });
        }
        if !(r > 0.0) {
            return Err(Error::Domain { name: "tube radius", value: r, reason: "must be positive" });
        }
        if rho0 + r > model.r_max {
            return Err(Error::Domain { name: "rho0 + r", value: rho0 + r, reason: "exceeds the model grid" });
        }
        Ok(Self { model, rho0, r })
    }

    /// `κ = φ′/φ` at the sphere; the mean curvature vector is
    /// `−(n−1) κ ν` for the outward normal `ν`.
    pub fn principal_curvature(&self) -> f64 {
        let p = self.model.profile;
        p.dphi(self.rho0) / p.phi(self.rho0)
    }
}

/// `|{p : d(p, Σ) < r}|`; for centred spheres the distance is `|ρ − ρ₀|`.
pub fn tube_volume(config: &TubeConfig) -> Result<f64> {
    let lo = (config.rho0 - config.r).max(0.0);
    config.model.shell_volume(lo, config.rho0 + config.r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn zero_s(k: usize) -> impl Fn(f64) -> Result<DMatrix<f64>> {
        move |_| Ok(DMatrix::zeros(k, k))
    }

    #[test]
    fn euclidean_and_cone_certificates() {
        assert!(build_model(3, Profile::Euclidean, 10.0).is_ok());
        assert!(build_model(2, Profile::Cone { alpha: 0.5 }, 10.0).is_ok());
        assert!(matches!(
            build_model(3, Profile::SmoothedCone { alpha: 1.2, s: 1.0 }, 10.0),
            Err(Error::InvalidModel(_))
        ));
        assert!(build_model(3, Profile::SmoothedCone { alpha: 0.6, s: 1.0 }, 10.0).is_ok());
    }

    #[test]
    fn smoothed_profile_is_consistent() {
        let p = Profile::SmoothedCone { alpha: 0.6, s: 1.5 };
        for &r in &[0.1, 0.7, 1.2, 1.49, 2.0] {
            let h = 1e-5;
            let fd = (p.phi(r + h) - p.phi(r - h)) / (2.0 * h);
            assert!((fd - p.dphi(r)).abs() < 1e-8);
            let fd2 = (p.dphi(r + h) - p.dphi(r - h)) / (2.0 * h);
            assert!((fd2 - p.ddphi(r)).abs() < 1e-7);
        }
        assert!((p.phi(3.0) - (0.6 * 3.0 + 0.4 * 1.5 * 0.5)).abs() < 1e-14);
    }

    #[test]
    fn theta_values() {
        let e = build_model(3, Profile::Euclidean, 10.0).unwrap();
        assert!((asymptotic_volume_ratio(&e).unwrap() - 1.0).abs() < 1e-14);
        let c = build_model(4, Profile::Cone { alpha: 0.5 }, 10.0).unwrap();
        assert!((asymptotic_volume_ratio(&c).unwrap() - 0.125).abs() < 1e-12);
        let s = build_model(3, Profile::SmoothedCone { alpha: 0.6, s: 1.0 }, 10.0).unwrap();
        assert!((asymptotic_volume_ratio(&s).unwrap() - 0.36).abs() < 1e-6);
    }

    #[test]
    fn bishop_gromov_sequences() {
        let radii: Vec<f64> = (1..=40).map(|i| 0.25 * i as f64).collect();
        let c = build_model(2, Profile::Cone { alpha: 0.5 }, 10.0).unwrap();
        let v = bishop_gromov_check(&c, &radii, 1e-10).unwrap();
        assert!(v.nonincreasing);
        assert!(v.ratios.iter().all(|r| (r - PI * 0.5).abs() < 1e-12));
        let s = build_model(3, Profile::SmoothedCone { alpha: 0.6, s: 2.0 }, 10.0).unwrap();
        let v = bishop_gromov_check(&s, &radii, 1e-10).unwrap();
        assert!(v.nonincreasing);
        assert!(v.ratios.windows(2).all(|w| w[1] < w[0]));
        assert!(v.limit_error < 1e-6);
    }

    #[test]
    fn radial_curvature_signs() {
        let c = build_model(3, Profile::Cone { alpha: 0.7 }, 10.0).unwrap();
        let s = curvature_along_radial_geodesic(&c, 1.0, true, 3).unwrap();
        assert_eq!(s.matrix(0.5).unwrap(), DMatrix::zeros(3, 3));
        let m = build_model(3, Profile::SmoothedCone { alpha: 0.7, s: 2.0 }, 10.0).unwrap();
        let s = curvature_along_radial_geodesic(&m, 0.5, true, 2).unwrap();
        let mat = s.matrix(0.5).unwrap();
        assert!(mat[(0, 0)] > 0.0 && mat[(1, 1)] > 0.0);
        assert!(s.ricci(0.5).unwrap() >= 0.0);
        assert!(s.matrix(20.0).is_err());
    }

    #[test]
    fn affine_closed_form() {
        let c = 0.7;
        let dp0 = DMatrix::identity(3, 3) * c;
        let traj = integrate_jacobi(zero_s(3), &dp0, 10.0, 20_000).unwrap();
        for (t, d) in traj.t.iter().zip(&traj.det_p) {
            assert!((d - (1.0 + c * t).powi(3)).abs() <= 1e-10 * (1.0 + c * t).powi(3));
        }
        assert!(traj.focal_time.is_none());
    }

    #[test]
    fn trigonometric_focal_time() {
        for k in [1usize, 2, 3] {
            let kappa = 2.0;
            let s = move |_t: f64| Ok(DMatrix::identity(k, k) * kappa);
            let traj = integrate_jacobi(s, &DMatrix::zeros(k, k), 2.0, 4000).unwrap();
            let expected = PI / (2.0 * kappa.sqrt());
            let focal = traj.focal_time.unwrap();
            assert!((focal - expected).abs() <= traj.step, "k {k}: {focal} vs {expected}");
        }
    }

    #[test]
    fn short_integration_rejected() {
        assert!(integrate_jacobi(zero_s(2), &DMatrix::zeros(2, 2), 1.0, 50).is_err());
        let mut bad = DMatrix::zeros(2, 2);
        bad[(0, 1)] = 1.0;
        assert!(integrate_jacobi(zero_s(2), &bad, 1.0, 200).is_err());
    }

    #[test]
    fn sobolev_equality_and_strict_cases() {
        let n = 3;
        let f: f64 = 1.5;
        let a = f.powf(0.5);
        let traj = integrate_jacobi(zero_s(n), &(DMatrix::identity(n, n) * a), 2.0, 4000).unwrap();
        let v = sobolev_monotonicity_check(&traj, f, n).unwrap();
        assert!(v.passed);
        assert!(v.min_margin.abs() < 1e-12);
        let dp0 = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.1, 0.5, a]));
        let traj = integrate_jacobi(zero_s(n), &dp0, 2.0, 4000).unwrap();
        let v = sobolev_monotonicity_check(&traj, f, n).unwrap();
        assert!(v.passed && v.min_margin > 0.0);
        let too_big = DMatrix::identity(n, n) * (2.0 * a);
        let traj = integrate_jacobi(zero_s(n), &too_big, 1.0, 2000).unwrap();
        assert!(matches!(sobolev_monotonicity_check(&traj, f, n), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn fwc_offsets_of_unit_sphere() {
        let n = 3;
        let out = integrate_jacobi(zero_s(2), &DMatrix::identity(2, 2), 2.0, 4000).unwrap();
        let v = fwc_monotonicity_check(&out, -2.0, n).unwrap();
        assert!(v.passed);
        assert!(fwc_profile(&out, -2.0, n).iter().all(|h| (h - 1.0).abs() < 1e-10));

        let inward = integrate_jacobi(zero_s(2), &(-DMatrix::identity(2, 2)), 2.0, 4000).unwrap();
        let focal = inward.focal_time.unwrap();
        assert!((focal - 1.0).abs() <= inward.step);
        let v = fwc_monotonicity_check(&inward, 2.0, n).unwrap();
        assert!(v.passed, "{v:?} {:?}", &inward.t[inward.t.len() - 2..]);

        let s = |_t: f64| Ok(DMatrix::identity(2, 2) * 0.5);
        let curved = integrate_jacobi(s, &DMatrix::identity(2, 2), 2.0, 4000).unwrap();
        let v = fwc_monotonicity_check(&curved, -2.0, n).unwrap();
        assert!(v.passed && v.monotone.min_margin > 0.0);
    }

    #[test]
    fn trace_comparison_cases() {
        let c = 0.8;
        let traj = integrate_jacobi(zero_s(3), &(DMatrix::identity(3, 3) * c), 3.0, 6000).unwrap();
        let v = riccati_trace_comparison(&traj);
        assert!(v.passed);
        assert!(v.bound_margin.abs() < 1e-9);

        let s = |_t: f64| Ok(DMatrix::identity(2, 2) * 3.0);
        let traj = integrate_jacobi(s, &DMatrix::zeros(2, 2), 0.8, 1600).unwrap();
        let v = riccati_trace_comparison(&traj);
        assert!(v.passed && v.bound_margin >= 0.0);
        assert!(traj.tr_q.iter().all(|q| *q <= 1e-12));
    }

    #[test]
    fn q_stays_symmetric() {
        let m = build_model(3, Profile::SmoothedCone { alpha: 0.6, s: 1.0 }, 10.0).unwrap();
        let s = curvature_along_radial_geodesic(&m, 0.2, true, 3).unwrap();
        let dp0 = DMatrix::from_row_slice(3, 3, &[0.3, 0.1, -0.2, 0.1, 0.5, 0.05, -0.2, 0.05, 0.1]);
        let traj = integrate_jacobi(|t| s.matrix(t), &dp0, 3.0, 6000).unwrap();
        assert!(traj.max_q_asymmetry < 1e-9);
        assert!(traj.det_p.iter().all(|d| *d > 0.0));
    }

    #[test]
    fn tube_volumes() {
        let e = build_model(3, Profile::Euclidean, 10.0).unwrap();
        let t = TubeConfig::new(e.clone(), 1.0, 0.5).unwrap();
        let exact = 4.0 * PI / 3.0 * (1.5f64.powi(3) - 0.5f64.powi(3));
        assert!((tube_volume(&t).unwrap() - exact).abs() < 1e-12);
        let t = TubeConfig::new(e, 1.0, 2.0).unwrap();
        assert!((tube_volume(&t).unwrap() - 4.0 * PI / 3.0 * 27.0).abs() < 1e-11);
        let alpha = 0.8;
        let c = build_model(3, Profile::Cone { alpha }, 10.0).unwrap();
        let t = TubeConfig::new(c, 2.0, 1.0).unwrap();
        let exact = 4.0 * PI * alpha * alpha * (27.0 - 1.0) / 3.0;
        assert!((tube_volume(&t).unwrap() - exact).abs() < 1e-11);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let traj = integrate_jacobi(zero_s(2), &DMatrix::identity(2, 2), 1.0, 100).unwrap();
        let csv = trajectory_csv(&traj, Some((1.0, 2)), None);
        assert!(csv.starts_with("t,det_p,tr_q,g\n"));
        assert_eq!(csv.lines().count(), 102);
    }
}
