//! Triangle meshes (planar domains and embedded surfaces) and polyline
//! curves, together with the discrete operators used by the solver and the
//! contact search.
//!
//! Positions are stored as [`Point`] (a 4-vector); a mesh with ambient
//! dimension `d < 4` keeps the trailing `4 − d` coordinates at zero. A
//! planar domain is simply a [`TriMesh`] with `dim == 2`, so every operator
//! below is shared between domains and surfaces.

mod curvature;
mod io;
mod ops;
pub mod shapes;

use std::collections::HashMap;

use nalgebra::{DMatrix, Matrix2, Vector2, Vector4};
use serde::Serialize;

use crate::error::{Error, Result};

pub use curvature::{curve_curvature, curvature, CurvatureData, CurveCurvature};
pub use io::{load_mesh, read_obj, read_off, write_obj, write_off, MeshFormat};
pub use ops::{PatchFit, VertexSymmetricField};

pub type Point = Vector4<f64>;

/// Lift the first `d` coordinates of a slice into a padded [`Point`].
pub fn point(coords: &[f64]) -> Point {
    let mut p = Point::zeros();
    for (i, c) in coords.iter().take(4).enumerate() {
        p[i] = *c;
    }
    p
}

/// One real value per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexScalarField(pub Vec<f64>);

impl VertexScalarField {
    pub fn constant(len: usize, value: f64) -> Self {
        Self(vec![value; len])
    }

    pub fn from_fn<F: Fn(&Point) -> f64>(positions: &[Point], f: F) -> Self {
        Self(positions.iter().map(f).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self(self.0.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }
}

/// One ambient vector per face.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceVectorField(pub Vec<Point>);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub triangle: usize,
    pub length: f64,
    /// Outward unit conormal, in the plane of the adjacent triangle.
    pub conormal: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeshStats {
    pub vertices: usize,
    pub elements: usize,
    pub boundary_edges: usize,
    pub h_max: f64,
    pub h_mean: f64,
}

/// A validated, consistently oriented triangle mesh in `R^dim`, `dim ∈ {2,3,4}`.
#[derive(Debug, Clone)]
pub struct TriMesh {
    dim: usize,
    positions: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    areas: Vec<f64>,
    vertex_areas: Vec<f64>,
    boundary_edges: Vec<BoundaryEdge>,
    boundary_loops: Vec<Vec<usize>>,
    on_boundary: Vec<bool>,
    vertex_faces: Vec<Vec<usize>>,
    one_ring: Vec<Vec<usize>>,
    two_ring: Vec<Vec<usize>>,
    tangent_frames: Vec<[Point; 2]>,
    normal_frames: Vec<Vec<Point>>,
}

pub type DomainMesh = TriMesh;
pub type SurfaceMesh = TriMesh;

fn face_normal3(p0: &Point, p1: &Point, p2: &Point) -> nalgebra::Vector3<f64> {
    let a = (p1 - p0).fixed_rows::<3>(0).into_owned();
    let b = (p2 - p0).fixed_rows::<3>(0).into_owned();
    a.cross(&b)
}

pub(crate) fn triangle_area(p0: &Point, p1: &Point, p2: &Point) -> f64 {
    let a = p1 - p0;
    let b = p2 - p0;
    let aa = a.dot(&a);
    let bb = b.dot(&b);
    let ab = a.dot(&b);
    0.5 * (aa * bb - ab * ab).max(0.0).sqrt()
}

impl TriMesh {
    /// Build and validate a mesh.
    ///
    /// Planar meshes with clockwise orientation are flipped; mixed
    /// orientation, non-manifold edges and zero-area triangles are errors.
    pub fn new(dim: usize, positions: Vec<Point>, mut triangles: Vec<[usize; 3]>) -> Result<Self> {
        if !(2..=4).contains(&dim) {
            return Err(Error::InvalidMesh(format!("ambient dimension {dim} not in 2..=4")));
        }
        let nv = positions.len();
        if nv < 3 || triangles.is_empty() {
            return Err(Error::InvalidMesh("mesh needs at least one triangle".into()));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= nv) {
                return Err(Error::InvalidMesh(format!("triangle {t} references a missing vertex")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidMesh(format!("triangle {t} repeats a vertex")));
            }
        }
        if dim == 2 {
            let signed: Vec<f64> = triangles
                .iter()
                .map(|t| {
                    let a = positions[t[1]] - positions[t[0]];
                    let b = positions[t[2]] - positions[t[0]];
                    a[0] * b[1] - a[1] * b[0]
                })
                .collect();
            let pos = signed.iter().filter(|&&s| s > 0.0).count();
            if pos == 0 {
                for t in triangles.iter_mut() {
                    t.swap(1, 2);
                }
            } else if pos != triangles.len() {
                return Err(Error::InvalidMesh("planar triangles have mixed orientation".into()));
            }
        }

        let areas: Vec<f64> = triangles
            .iter()
            .map(|t| triangle_area(&positions[t[0]], &positions[t[1]], &positions[t[2]]))
            .collect();
        let scale = positions
            .iter()
            .map(|p| p.norm())
            .fold(0.0, f64::max)
            .max(1e-300);
        if let Some((t, a)) = areas
            .iter()
            .enumerate()
            .find(|(_, &a)| !(a > 1e-14 * scale * scale))
        {
            return Err(Error::InvalidMesh(format!("triangle {t} is degenerate (area {a:e})")));
        }

        // directed edge -> triangle
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let e = (tri[k], tri[(k + 1) % 3]);
                if directed.insert(e, t).is_some() {
                    return Err(Error::InvalidMesh(format!(
                        "edge ({}, {}) is used twice with the same orientation",
                        e.0, e.1
                    )));
                }
            }
        }

        let mut boundary_edges = Vec::new();
        let mut keys: Vec<_> = directed.keys().copied().collect();
        keys.sort_unstable();
        for (a, b) in keys {
            if !directed.contains_key(&(b, a)) {
                let t = directed[&(a, b)];
                let tri = triangles[t];
                let c = tri.iter().copied().find(|&v| v != a && v != b).unwrap();
                let pa = positions[a];
                let pb = positions[b];
                let dir = pb - pa;
                let length = dir.norm();
                let along = dir / length;
                let to_c = positions[c] - pa;
                let inward = to_c - along * to_c.dot(&along);
                let conormal = -inward / inward.norm();
                boundary_edges.push(BoundaryEdge {
                    a,
                    b,
                    triangle: t,
                    length,
                    conormal,
                });
            }
        }

        let mut on_boundary = vec![false; nv];
        let mut next_on_boundary: HashMap<usize, usize> = HashMap::new();
        for e in &boundary_edges {
            on_boundary[e.a] = true;
            on_boundary[e.b] = true;
            if next_on_boundary.insert(e.a, e.b).is_some() {
                return Err(Error::InvalidMesh(format!(
                    "vertex {} has two outgoing boundary edges (non-manifold)",
                    e.a
                )));
            }
        }
        let mut boundary_loops = Vec::new();
        let mut visited: HashMap<usize, bool> = HashMap::new();
        let mut starts: Vec<usize> = next_on_boundary.keys().copied().collect();
        starts.sort_unstable();
        for start in starts {
            if visited.contains_key(&start) {
                continue;
            }
            let mut cycle = vec![start];
            visited.insert(start, true);
            let mut cur = next_on_boundary[&start];
            while cur != start {
                if visited.contains_key(&cur) {
                    return Err(Error::InvalidMesh("boundary does not form simple loops".into()));
                }
                visited.insert(cur, true);
                cycle.push(cur);
                cur = *next_on_boundary
                    .get(&cur)
                    .ok_or_else(|| Error::InvalidMesh("open boundary chain".into()))?;
            }
            boundary_loops.push(cycle);
        }

        let mut vertex_faces = vec![Vec::new(); nv];
        let vertex_areas = mixed_voronoi_areas(&positions, &triangles, &areas);
        let mut one_ring: Vec<Vec<usize>> = vec![Vec::new(); nv];
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                vertex_faces[tri[k]].push(t);
                one_ring[tri[k]].push(tri[(k + 1) % 3]);
                one_ring[tri[k]].push(tri[(k + 2) % 3]);
            }
        }
        if let Some(v) = vertex_faces.iter().position(|f| f.is_empty()) {
            return Err(Error::InvalidMesh(format!("vertex {v} belongs to no triangle")));
        }
        for ring in one_ring.iter_mut() {
            ring.sort_unstable();
            ring.dedup();
        }
        let two_ring: Vec<Vec<usize>> = (0..nv)
            .map(|i| {
                let mut r: Vec<usize> = one_ring[i]
                    .iter()
                    .flat_map(|&j| one_ring[j].iter().copied())
                    .chain(one_ring[i].iter().copied())
                    .filter(|&j| j != i)
                    .collect();
                r.sort_unstable();
                r.dedup();
                r
            })
            .collect();

        let mut mesh = Self {
            dim,
            positions,
            triangles,
            areas,
            vertex_areas,
            boundary_edges,
            boundary_loops,
            on_boundary,
            vertex_faces,
            one_ring,
            two_ring,
            tangent_frames: Vec::new(),
            normal_frames: Vec::new(),
        };
        mesh.compute_frames()?;
        Ok(mesh)
    }

    fn compute_frames(&mut self) -> Result<()> {
        let nv = self.positions.len();
        let mut tangent = Vec::with_capacity(nv);
        let mut normal = Vec::with_capacity(nv);
        for i in 0..nv {
            let (t, n) = match self.dim {
                2 => ([Point::x(), Point::y()], Vec::new()),
                3 => self.frame_codim1(i)?,
                _ => self.frame_projector(i)?,
            };
            tangent.push(t);
            normal.push(n);
        }
        self.tangent_frames = tangent;
        self.normal_frames = normal;
        Ok(())
    }

    fn reference_edge(&self, i: usize) -> Point {
        let j = self.one_ring[i][0];
        self.positions[j] - self.positions[i]
    }

    fn frame_codim1(&self, i: usize) -> Result<([Point; 2], Vec<Point>)> {
        let mut n = nalgebra::Vector3::zeros();
        for &t in &self.vertex_faces[i] {
            let tri = self.triangles[t];
            // cross product length is twice the area: area weighting
            n += face_normal3(&self.positions[tri[0]], &self.positions[tri[1]], &self.positions[tri[2]]);
        }
        let len = n.norm();
        if !(len > 0.0) {
            return Err(Error::InvalidMesh(format!("vertex {i} has a degenerate normal")));
        }
        let nu = point(&[n[0] / len, n[1] / len, n[2] / len]);
        let (e1, e2) = complete_tangent(self.reference_edge(i), &[nu], i)?;
        Ok(([e1, e2], vec![nu]))
    }

    fn frame_projector(&self, i: usize) -> Result<([Point; 2], Vec<Point>)> {
        let d = self.dim;
        let mut acc = DMatrix::<f64>::zeros(d, d);
        for &t in &self.vertex_faces[i] {
            let tri = self.triangles[t];
            let p0 = self.positions[tri[0]];
            let a = self.positions[tri[1]] - p0;
            let b = self.positions[tri[2]] - p0;
            let u = a / a.norm();
            let w = b - u * b.dot(&u);
            let v = w / w.norm();
            let area = self.areas[t];
            for r in 0..d {
                for c in 0..d {
                    acc[(r, c)] += area * (u[r] * u[c] + v[r] * v[c]);
                }
            }
        }
        let eig = acc.symmetric_eigen();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&x, &y| eig.eigenvalues[y].partial_cmp(&eig.eigenvalues[x]).unwrap());
        let col = |k: usize| {
            let mut p = Point::zeros();
            for r in 0..d {
                p[r] = eig.eigenvectors[(r, k)];
            }
            p
        };
        let t1 = col(order[0]);
        let t2 = col(order[1]);
        // express the reference edge in the dominant plane, then orthonormalise
        let r = self.reference_edge(i);
        let rp = t1 * r.dot(&t1) + t2 * r.dot(&t2);
        let e1 = rp / rp.norm();
        let w = t1 + t2 - e1 * (t1 + t2).dot(&e1);
        let e2 = if w.norm() > 1e-8 {
            w / w.norm()
        } else {
            let w = t1 - e1 * t1.dot(&e1);
            w / w.norm()
        };
        let mut normals = Vec::new();
        for &k in &order[2..] {
            let mut v = col(k);
            for b in [e1, e2].iter().chain(normals.iter()) {
                v -= b * v.dot(b);
            }
            let len = v.norm();
            if !(len > 1e-8) {
                return Err(Error::InvalidMesh(format!("vertex {i} has a degenerate normal frame")));
            }
            v /= len;
            let lead = (0..d).max_by(|&a, &b| v[a].abs().partial_cmp(&v[b].abs()).unwrap()).unwrap();
            if v[lead] < 0.0 {
                v = -v;
            }
            normals.push(v);
        }
        Ok(([e1, e2], normals))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Intrinsic dimension (always 2 for triangle meshes).
    pub fn intrinsic_dim(&self) -> usize {
        2
    }

    pub fn codim(&self) -> usize {
        self.dim - 2
    }

    pub fn is_planar(&self) -> bool {
        self.dim == 2
    }

    pub fn is_closed(&self) -> bool {
        self.boundary_edges.is_empty()
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn face_areas(&self) -> &[f64] {
        &self.areas
    }

    /// Lumped vertex masses (mixed Voronoi dual areas).
    pub fn vertex_areas(&self) -> &[f64] {
        &self.vertex_areas
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn boundary_loops(&self) -> &[Vec<usize>] {
        &self.boundary_loops
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.on_boundary[v]
    }

    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.vertex_faces[v]
    }

    pub fn one_ring(&self, v: usize) -> &[usize] {
        &self.one_ring[v]
    }

    pub fn two_ring(&self, v: usize) -> &[usize] {
        &self.two_ring[v]
    }

    pub fn tangent_frame(&self, v: usize) -> &[Point; 2] {
        &self.tangent_frames[v]
    }

    pub fn normal_frame(&self, v: usize) -> &[Point] {
        &self.normal_frames[v]
    }

    /// Projection of an ambient vector onto the vertex normal space.
    pub fn normal_part(&self, v: usize, x: &Point) -> Point {
        self.normal_frames[v]
            .iter()
            .fold(Point::zeros(), |acc, nu| acc + nu * x.dot(nu))
    }

    /// Projection of an ambient vector onto the vertex tangent plane.
    pub fn tangent_part(&self, v: usize, x: &Point) -> Point {
        let [e1, e2] = &self.tangent_frames[v];
        e1 * x.dot(e1) + e2 * x.dot(e2)
    }

    pub fn to_tangent_coords(&self, v: usize, x: &Point) -> Vector2<f64> {
        let [e1, e2] = &self.tangent_frames[v];
        Vector2::new(x.dot(e1), x.dot(e2))
    }

    pub fn from_tangent_coords(&self, v: usize, c: &Vector2<f64>) -> Point {
        let [e1, e2] = &self.tangent_frames[v];
        e1 * c[0] + e2 * c[1]
    }

    /// Average outward conormal of the boundary edges meeting at `v`
    /// (zero for interior vertices).
    pub fn vertex_conormal(&self, v: usize) -> Point {
        let s = self
            .boundary_edges
            .iter()
            .filter(|e| e.a == v || e.b == v)
            .fold(Point::zeros(), |acc, e| acc + e.conormal);
        let n = s.norm();
        if n > 0.0 {
            s / n
        } else {
            s
        }
    }

    pub fn edge_lengths(&self) -> impl Iterator<Item = f64> + '_ {
        self.triangles.iter().flat_map(move |t| {
            (0..3).map(move |k| (self.positions[t[(k + 1) % 3]] - self.positions[t[k]]).norm())
        })
    }

    /// Largest edge length.
    pub fn h_max(&self) -> f64 {
        self.edge_lengths().fold(0.0, f64::max)
    }

    pub fn h_mean(&self) -> f64 {
        let (s, c) = self.edge_lengths().fold((0.0, 0usize), |(s, c), l| (s + l, c + 1));
        s / c as f64
    }

    pub fn stats(&self) -> MeshStats {
        MeshStats {
            vertices: self.vertex_count(),
            elements: self.triangles.len(),
            boundary_edges: self.boundary_edges.len(),
            h_max: self.h_max(),
            h_mean: self.h_mean(),
        }
    }

    pub fn total_area(&self) -> f64 {
        crate::quadrature::compensated_sum(self.areas.iter().copied())
    }

    pub fn boundary_length(&self) -> f64 {
        crate::quadrature::compensated_sum(self.boundary_edges.iter().map(|e| e.length))
    }

    /// Copy of the mesh with every position multiplied by `t`.
    pub fn scaled(&self, t: f64) -> Result<Self> {
        Self::new(
            self.dim,
            self.positions.iter().map(|p| p * t).collect(),
            self.triangles.clone(),
        )
    }

    /// Copy of the mesh embedded into `R^dim` by zero padding.
    pub fn embedded(&self, dim: usize) -> Result<Self> {
        if dim < self.dim {
            return Err(Error::InvalidMesh(format!("cannot embed R^{} into R^{dim}", self.dim)));
        }
        Self::new(dim, self.positions.clone(), self.triangles.clone())
    }

    pub(crate) fn check_field(&self, len: usize) -> Result<()> {
        if len == self.vertex_count() {
            Ok(())
        } else {
            Err(Error::FieldMismatch {
                expected: self.vertex_count(),
                got: len,
            })
        }
    }
}

fn complete_tangent(reference: Point, normals: &[Point], v: usize) -> Result<(Point, Point)> {
    let mut e1 = reference;
    for n in normals {
        e1 -= n * e1.dot(n);
    }
    let len = e1.norm();
    if !(len > 1e-14) {
        return Err(Error::InvalidMesh(format!("vertex {v}: reference edge parallel to normal")));
    }
    e1 /= len;
    let n = normals[0];
    let c = nalgebra::Vector3::new(n[0], n[1], n[2]).cross(&nalgebra::Vector3::new(e1[0], e1[1], e1[2]));
    let e2 = point(&[c[0], c[1], c[2]]);
    Ok((e1, e2 / e2.norm()))
}

/// A polyline in `R^dim`, `dim ∈ {2, 3}`.
#[derive(Debug, Clone)]
pub struct CurveMesh {
    dim: usize,
    positions: Vec<Point>,
    closed: bool,
}

impl CurveMesh {
    pub fn new(dim: usize, positions: Vec<Point>, closed: bool) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::InvalidMesh(format!("curve ambient dimension {dim} not in 2..=3")));
        }
        if positions.len() < 3 {
            return Err(Error::InvalidMesh("curve needs at least three vertices".into()));
        }
        let curve = Self { dim, positions, closed };
        for (k, (a, b)) in curve.edges().enumerate() {
            if !((curve.positions[b] - curve.positions[a]).norm() > 0.0) {
                return Err(Error::InvalidMesh(format!("curve edge {k} has zero length")));
            }
        }
        Ok(curve)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn codim(&self) -> usize {
        self.dim - 1
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.positions.len();
        let count = if self.closed { n } else { n - 1 };
        (0..count).map(move |i| (i, (i + 1) % n))
    }

    pub fn length(&self) -> f64 {
        crate::quadrature::compensated_sum(
            self.edges().map(|(a, b)| (self.positions[b] - self.positions[a]).norm()),
        )
    }

    /// Dual (vertex-lumped) lengths: half of each adjacent edge.
    pub fn dual_lengths(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.positions.len()];
        for (a, b) in self.edges() {
            let l = (self.positions[b] - self.positions[a]).norm();
            w[a] += 0.5 * l;
            w[b] += 0.5 * l;
        }
        w
    }

    pub fn integrate(&self, field: &[f64]) -> Result<f64> {
        if field.len() != self.positions.len() {
            return Err(Error::FieldMismatch {
                expected: self.positions.len(),
                got: field.len(),
            });
        }
        Ok(crate::quadrature::compensated_sum(
            self.dual_lengths().iter().zip(field).map(|(w, f)| w * f),
        ))
    }

    pub fn h_max(&self) -> f64 {
        self.edges()
            .map(|(a, b)| (self.positions[b] - self.positions[a]).norm())
            .fold(0.0, f64::max)
    }

    pub fn stats(&self) -> MeshStats {
        let n = self.edges().count();
        MeshStats {
            vertices: self.positions.len(),
            elements: n,
            boundary_edges: if self.closed { 0 } else { 2 },
            h_max: self.h_max(),
            h_mean: self.length() / n as f64,
        }
    }

    pub fn scaled(&self, t: f64) -> Result<Self> {
        Self::new(self.dim, self.positions.iter().map(|p| p * t).collect(), self.closed)
    }
}

/// Any mesh the loaders and generators can produce.
#[derive(Debug, Clone)]
pub enum Mesh {
    Domain(TriMesh),
    Surface(TriMesh),
    Curve(CurveMesh),
}

impl Mesh {
    pub fn stats(&self) -> MeshStats {
        match self {
            Mesh::Domain(m) | Mesh::Surface(m) => m.stats(),
            Mesh::Curve(c) => c.stats(),
        }
    }

    pub fn into_tri(self) -> Result<TriMesh> {
        match self {
            Mesh::Domain(m) | Mesh::Surface(m) => Ok(m),
            Mesh::Curve(_) => Err(Error::InvalidMesh("expected a triangle mesh, found a curve".into())),
        }
    }

    pub fn into_curve(self) -> Result<CurveMesh> {
        match self {
            Mesh::Curve(c) => Ok(c),
            _ => Err(Error::InvalidMesh("expected a curve, found a triangle mesh".into())),
        }
    }

    pub(crate) fn classify(mesh: TriMesh) -> Self {
        if mesh.is_planar() {
            Mesh::Domain(mesh)
        } else {
            Mesh::Surface(mesh)
        }
    }
}

pub(crate) fn sym2(a: f64, b: f64, c: f64) -> Matrix2<f64> {
    Matrix2::new(a, b, b, c)
}

/// Mixed Voronoi dual areas: the circumcentric cell share of each
/// non-obtuse triangle, and a half/quarter split of obtuse ones. They
/// partition every triangle, so they sum to the total area. Paired with
/// cotangent stiffness, the lumped Laplacian of `|x|²` is exact at interior
/// vertices of non-obtuse meshes.
fn mixed_voronoi_areas(positions: &[Point], triangles: &[[usize; 3]], areas: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; positions.len()];
    for (t, tri) in triangles.iter().enumerate() {
        let p = |k: usize| positions[tri[k % 3]];
        let corner_dot = |k: usize| (p(k + 1) - p(k)).dot(&(p(k + 2) - p(k)));
        let obtuse = (0..3).find(|&k| corner_dot(k) < 0.0);
        for k in 0..3 {
            out[tri[k]] += match obtuse {
                Some(o) if o == k => 0.5 * areas[t],
                Some(_) => 0.25 * areas[t],
                None => {
                    // |e|² cot(opposite angle) / 8 for the two edges at k
                    let cot = |j: usize| corner_dot(j) / (2.0 * areas[t]);
                    ((p(k + 1) - p(k)).norm_squared() * cot(k + 2)
                        + (p(k + 2) - p(k)).norm_squared() * cot(k + 1))
                        / 8.0
                }
            };
        }
    }
    out
}
