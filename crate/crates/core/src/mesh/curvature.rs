use nalgebra::Matrix2;

use super::{CurveMesh, Point, TriMesh};
use crate::error::{Error, Result};

/// Mean curvature vector and second fundamental form per vertex.
///
/// `second_fundamental[v][α]` is `⟨II, ν_α⟩` in the tangent frame of `v`,
/// with `ν_α = mesh.normal_frame(v)[α]`. `None` marks a vertex whose 2-ring
/// fit was rank deficient.
#[derive(Debug, Clone)]
pub struct CurvatureData {
    pub mean_curvature: Vec<Point>,
    pub second_fundamental: Vec<Option<Vec<Matrix2<f64>>>>,
}

impl CurvatureData {
    pub fn mean_curvature_norms(&self) -> Vec<f64> {
        self.mean_curvature.iter().map(|h| h.norm()).collect()
    }

    /// `⟨II(v), y⟩` for an ambient vector `y`, in the tangent frame.
    pub fn contract(&self, mesh: &TriMesh, v: usize, y: &Point) -> Option<Matrix2<f64>> {
        let ii = self.second_fundamental[v].as_ref()?;
        Some(
            ii.iter()
                .zip(mesh.normal_frame(v))
                .fold(Matrix2::zeros(), |acc, (m, nu)| acc + m * y.dot(nu)),
        )
    }

    /// `Σ_α tr⟨II, ν_α⟩ ν_α`, the mean curvature implied by the fitted form.
    pub fn trace_vector(&self, mesh: &TriMesh, v: usize) -> Option<Point> {
        let ii = self.second_fundamental[v].as_ref()?;
        Some(
            ii.iter()
                .zip(mesh.normal_frame(v))
                .fold(Point::zeros(), |acc, (m, nu)| acc + nu * m.trace()),
        )
    }
}

/// Discrete curvature of a triangle mesh.
///
/// `H = Δ_Σ x` from the cotangent Laplacian with lumped mass, projected onto
/// the vertex normal space (so `|H| = 2/R` on a round sphere, pointing
/// inward). At boundary vertices the one-sided Laplacian is meaningless and
/// `H` is taken from the trace of the fitted second fundamental form.
///
/// `II` comes from a 2-ring least-squares fit of the normal heights
/// `h = g·p + ½ pᵀ II p · |d|²/|p|²`, where `d` is the chord to a neighbour
/// and `p` its tangential projection.
pub fn curvature(mesh: &TriMesh) -> Result<CurvatureData> {
    let nv = mesh.vertex_count();
    if mesh.is_planar() {
        return Ok(CurvatureData {
            mean_curvature: vec![Point::zeros(); nv],
            second_fundamental: vec![Some(Vec::new()); nv],
        });
    }
    let codim = mesh.codim();
    let mut lap = vec![Point::zeros(); nv];
    for (i, j, w) in mesh.cotan_weights() {
        let d = mesh.positions()[j] - mesh.positions()[i];
        lap[i] += d * w;
        lap[j] -= d * w;
    }
    let areas = mesh.vertex_areas();

    let second_fundamental: Vec<Option<Vec<Matrix2<f64>>>> = (0..nv)
        .map(|v| {
            let base = mesh.positions()[v];
            let mut forms = Vec::with_capacity(codim);
            // chord over projected length: makes the height model exact on
            // round spheres, removing the quartic bias of a plain quadric
            let stretch = |j: usize| {
                let d = mesh.positions()[j] - base;
                let p2 = mesh.tangent_part(v, &d).norm_squared();
                if p2 > 0.0 { d.norm_squared() / p2 } else { 1.0 }
            };
            for nu in mesh.normal_frame(v) {
                let height = |j: usize| (mesh.positions()[j] - base).dot(nu);
                forms.push(mesh.fit_patch_scaled(v, height, stretch)?.hessian);
            }
            Some(forms)
        })
        .collect();

    let mut mean_curvature = Vec::with_capacity(nv);
    for v in 0..nv {
        let h = if mesh.is_boundary_vertex(v) {
            let ii = second_fundamental[v]
                .as_ref()
                .ok_or_else(|| Error::InvalidMesh(format!("boundary vertex {v}: degenerate curvature fit")))?;
            ii.iter()
                .zip(mesh.normal_frame(v))
                .fold(Point::zeros(), |acc, (m, nu)| acc + nu * m.trace())
        } else {
            mesh.normal_part(v, &(lap[v] / areas[v]))
        };
        mean_curvature.push(h);
    }
    Ok(CurvatureData {
        mean_curvature,
        second_fundamental,
    })
}

/// Discrete curvature of a polyline.
#[derive(Debug, Clone)]
pub struct CurveCurvature {
    /// Curvature vector per vertex (turning angle over dual length, pointing
    /// toward the turn).
    pub mean_curvature: Vec<Point>,
    /// Exterior turning angle per vertex.
    pub turning_angles: Vec<f64>,
}

pub fn curve_curvature(curve: &CurveMesh) -> Result<CurveCurvature> {
    let n = curve.vertex_count();
    let pos = curve.positions();
    let dual = curve.dual_lengths();
    let mut h = vec![Point::zeros(); n];
    let mut angles = vec![0.0; n];
    for i in 0..n {
        if !curve.is_closed() && (i == 0 || i == n - 1) {
            continue;
        }
        let prev = pos[(i + n - 1) % n];
        let next = pos[(i + 1) % n];
        let t0 = (pos[i] - prev).normalize();
        let t1 = (next - pos[i]).normalize();
        let cos = t0.dot(&t1).clamp(-1.0, 1.0);
        let sin = (t1 - t0 * cos).norm();
        let angle = sin.atan2(cos);
        angles[i] = angle;
        let dir = t1 - t0;
        let len = dir.norm();
        if len > 0.0 {
            h[i] = dir / len * (angle / dual[i]);
        }
    }
    Ok(CurveCurvature {
        mean_curvature: h,
        turning_angles: angles,
    })
}
