use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use super::{sym2, FaceVectorField, Point, TriMesh, VertexScalarField};
use crate::error::Result;
use crate::quadrature::compensated_sum;

/// Local quadratic model of a vertex field, in the vertex tangent frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchFit {
    pub gradient: Vector2<f64>,
    pub hessian: Matrix2<f64>,
}

/// Per-vertex symmetric matrices in the vertex tangent frame. `None` marks a
/// vertex whose patch was rank deficient.
#[derive(Debug, Clone)]
pub struct VertexSymmetricField {
    pub fits: Vec<Option<PatchFit>>,
}

impl VertexSymmetricField {
    pub fn hessian(&self, v: usize) -> Option<Matrix2<f64>> {
        self.fits[v].map(|f| f.hessian)
    }

    pub fn gradient(&self, v: usize) -> Option<Vector2<f64>> {
        self.fits[v].map(|f| f.gradient)
    }

    pub fn excluded(&self) -> Vec<usize> {
        self.fits
            .iter()
            .enumerate()
            .filter_map(|(i, f)| f.is_none().then_some(i))
            .collect()
    }
}

impl TriMesh {
    /// Vertex-lumped integral `Σ A_i f_i`.
    pub fn integrate(&self, field: &VertexScalarField) -> Result<f64> {
        self.integrate_values(&field.0)
    }

    pub fn integrate_values(&self, values: &[f64]) -> Result<f64> {
        self.check_field(values.len())?;
        Ok(compensated_sum(
            self.vertex_areas.iter().zip(values).map(|(a, f)| a * f),
        ))
    }

    /// Trapezoidal integral of a vertex field over the boundary loops.
    pub fn integrate_boundary(&self, field: &VertexScalarField) -> Result<f64> {
        self.integrate_boundary_values(&field.0)
    }

    pub fn integrate_boundary_values(&self, values: &[f64]) -> Result<f64> {
        self.check_field(values.len())?;
        Ok(compensated_sum(
            self.boundary_edges
                .iter()
                .map(|e| 0.5 * e.length * (values[e.a] + values[e.b])),
        ))
    }

    /// Lumped boundary weights: half the length of each adjacent boundary edge.
    pub fn boundary_vertex_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.vertex_count()];
        for e in &self.boundary_edges {
            w[e.a] += 0.5 * e.length;
            w[e.b] += 0.5 * e.length;
        }
        w
    }

    /// Ambient gradients of the three barycentric coordinate functions of a
    /// triangle; they lie in the plane of the triangle.
    pub fn barycentric_gradients(&self, t: usize) -> [Point; 3] {
        let [i0, i1, i2] = self.triangles[t];
        let p0 = self.positions[i0];
        let a = self.positions[i1] - p0;
        let b = self.positions[i2] - p0;
        let (aa, ab, bb) = (a.dot(&a), a.dot(&b), b.dot(&b));
        let det = aa * bb - ab * ab;
        // dual basis of (a, b) within the face plane
        let g1 = (a * bb - b * ab) / det;
        let g2 = (b * aa - a * ab) / det;
        [-(g1 + g2), g1, g2]
    }

    /// Piecewise-linear gradient, constant per face.
    pub fn gradient(&self, field: &VertexScalarField) -> Result<FaceVectorField> {
        self.check_field(field.len())?;
        let f = &field.0;
        Ok(FaceVectorField(
            (0..self.triangles.len())
                .map(|t| {
                    let g = self.barycentric_gradients(t);
                    let tri = self.triangles[t];
                    g[0] * f[tri[0]] + g[1] * f[tri[1]] + g[2] * f[tri[2]]
                })
                .collect(),
        ))
    }

    /// Area-weighted average of face gradients at each vertex.
    pub fn vertex_gradient_average(&self, grad: &FaceVectorField) -> Vec<Point> {
        (0..self.vertex_count())
            .map(|v| {
                let mut acc = Point::zeros();
                let mut w = 0.0;
                for &t in &self.vertex_faces[v] {
                    acc += grad.0[t] * self.areas[t];
                    w += self.areas[t];
                }
                acc / w
            })
            .collect()
    }

    /// Weighted least-squares quadratic fit of `values` over the 2-ring of
    /// `v`, in tangent-frame coordinates. The fit passes through `values[v]`.
    ///
    /// Returns `None` when fewer than six distinct neighbours are available
    /// or the normal matrix is numerically rank deficient.
    pub fn fit_quadratic(&self, v: usize, values: &[f64]) -> Option<PatchFit> {
        self.fit_patch(v, |j| values[j])
    }

    /// [`TriMesh::fit_quadratic`] with values supplied by a closure over
    /// vertex indices; only `v` and its 2-ring are queried.
    pub fn fit_patch<F: Fn(usize) -> f64>(&self, v: usize, value: F) -> Option<PatchFit> {
        self.fit_patch_scaled(v, value, |_| 1.0)
    }

    /// Like [`TriMesh::fit_patch`], with the quadratic columns of row `j`
    /// multiplied by `quad_scale(j)`.
    pub(crate) fn fit_patch_scaled<F, S>(&self, v: usize, value: F, quad_scale: S) -> Option<PatchFit>
    where
        F: Fn(usize) -> f64,
        S: Fn(usize) -> f64,
    {
        let ring = &self.two_ring[v];
        if ring.len() < 6 {
            return None;
        }
        let base = self.positions[v];
        let h2 = ring
            .iter()
            .map(|&j| (self.positions[j] - base).norm_squared())
            .fold(0.0, f64::max);
        let h = h2.sqrt();
        if !(h > 0.0) {
            return None;
        }
        let rows = ring.len();
        let mut a = DMatrix::<f64>::zeros(rows, 5);
        let mut rhs = DVector::<f64>::zeros(rows);
        for (r, &j) in ring.iter().enumerate() {
            let d = self.positions[j] - base;
            let c = self.to_tangent_coords(v, &d);
            let (x, y) = (c[0] / h, c[1] / h);
            let w = 1.0 / (d.norm_squared() / h2).max(1e-12).sqrt();
            let q = w * quad_scale(j);
            a[(r, 0)] = w * x;
            a[(r, 1)] = w * y;
            a[(r, 2)] = q * 0.5 * x * x;
            a[(r, 3)] = q * x * y;
            a[(r, 4)] = q * 0.5 * y * y;
            rhs[r] = w * (value(j) - value(v));
        }
        let svd = a.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smin > 1e-8 * smax) {
            return None;
        }
        let coef = svd.solve(&rhs, 1e-14 * smax).ok()?;
        Some(PatchFit {
            gradient: Vector2::new(coef[0] / h, coef[1] / h),
            hessian: sym2(coef[2] / h2, coef[3] / h2, coef[4] / h2),
        })
    }

    /// Vertex Hessians (and gradients) from 2-ring quadratic fits.
    pub fn hessian_recover(&self, field: &VertexScalarField) -> Result<VertexSymmetricField> {
        self.check_field(field.len())?;
        use rayon::prelude::*;
        let fits = (0..self.vertex_count())
            .into_par_iter()
            .map(|v| self.fit_quadratic(v, &field.0))
            .collect();
        Ok(VertexSymmetricField { fits })
    }

    /// Cotangent weights `½(cot α + cot β)` per undirected edge, returned as
    /// `(i, j, w)` with `i < j`.
    pub fn cotan_weights(&self) -> Vec<(usize, usize, f64)> {
        let mut map = std::collections::BTreeMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (i, j, o) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let a = self.positions[i] - self.positions[o];
                let b = self.positions[j] - self.positions[o];
                let cross = (a.norm_squared() * b.norm_squared() - a.dot(&b).powi(2)).max(0.0).sqrt();
                let cot = a.dot(&b) / cross;
                *map.entry((i.min(j), i.max(j))).or_insert(0.0) += 0.5 * cot;
            }
        }
        map.into_iter().map(|((i, j), w)| (i, j, w)).collect()
    }
}

