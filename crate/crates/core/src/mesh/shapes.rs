//! Test-shape generators.
//!
//! | name | kind | parameters (default) |
//! |------|------|----------------------|
//! | `disk` | planar domain | `r` (1) |
//! | `square` | planar domain | `side` (1) |
//! | `annulus` | planar domain | `r_in` (0.5), `r_out` (1) |
//! | `icosphere` | surface in R³ | `r` (1), `dim` (3) |
//! | `sphere_r4` | surface in R⁴ | `r` (1) |
//! | `hemisphere` | surface with boundary | `r` (1), `dim` (3) |
//! | `flat_disk_r4` | surface with boundary | `r` (1) |
//! | `torus` | surface in R³ | `R` (2), `r` (1), `dim` (3) |
//! | `circle` | curve | `r` (1), `dim` (3), `vertices` |
//! | `ellipse` | planar curve | `a` (2), `b` (1), `dim` (2), `vertices` |
//! | `torus_knot` | curve in R³ | `p` (2), `q` (3), `R` (2), `r` (1), `vertices` |
//!
//! Every refinement level doubles the linear resolution.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use super::{point, CurveMesh, Mesh, Point, TriMesh};
use crate::error::{Error, Result};

pub type ShapeParams = BTreeMap<String, f64>;

pub const SHAPES: &[&str] = &[
    "disk",
    "square",
    "annulus",
    "icosphere",
    "sphere_r4",
    "hemisphere",
    "flat_disk_r4",
    "torus",
    "circle",
    "ellipse",
    "torus_knot",
];

fn param(params: &ShapeParams, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

fn dim_param(params: &ShapeParams, default: usize, allowed: &[usize]) -> Result<usize> {
    let d = param(params, "dim", default as f64);
    let di = d as usize;
    if d.fract() != 0.0 || !allowed.contains(&di) {
        return Err(Error::Domain {
            name: "dim",
            value: d,
            reason: "unsupported ambient dimension for this shape",
        });
    }
    Ok(di)
}

fn positive(params: &ShapeParams, key: &'static str, default: f64) -> Result<f64> {
    let v = param(params, key, default);
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain {
            name: key,
            value: v,
            reason: "must be positive",
        })
    }
}

/// Generate a named shape at the given refinement level.
pub fn builtin_shape(name: &str, params: &ShapeParams, refinement: u32) -> Result<Mesh> {
    let level = refinement.min(12);
    match name {
        "disk" => Ok(Mesh::Domain(disk(positive(params, "r", 1.0)?, level, 2)?)),
        "square" => Ok(Mesh::Domain(square(positive(params, "side", 1.0)?, level)?)),
        "annulus" => {
            let r_in = positive(params, "r_in", 0.5)?;
            let r_out = positive(params, "r_out", 1.0)?;
            if r_in >= r_out {
                return Err(Error::Domain {
                    name: "r_in",
                    value: r_in,
                    reason: "inner radius must be below the outer radius",
                });
            }
            Ok(Mesh::Domain(annulus(r_in, r_out, level)?))
        }
        "icosphere" => {
            let dim = dim_param(params, 3, &[3, 4])?;
            Ok(Mesh::Surface(icosphere(positive(params, "r", 1.0)?, level, dim)?))
        }
        "sphere_r4" => Ok(Mesh::Surface(icosphere(positive(params, "r", 1.0)?, level, 4)?)),
        "hemisphere" => {
            let dim = dim_param(params, 3, &[3, 4])?;
            Ok(Mesh::Surface(hemisphere(positive(params, "r", 1.0)?, level, dim)?))
        }
        "flat_disk_r4" => Ok(Mesh::Surface(disk(positive(params, "r", 1.0)?, level, 4)?)),
        "torus" => {
            let dim = dim_param(params, 3, &[3, 4])?;
            let big = positive(params, "R", 2.0)?;
            let small = positive(params, "r", 1.0)?;
            if small >= big {
                return Err(Error::Domain {
                    name: "r",
                    value: small,
                    reason: "tube radius must be below the centre radius",
                });
            }
            Ok(Mesh::Surface(torus(big, small, level, dim)?))
        }
        "circle" => {
            let dim = dim_param(params, 3, &[2, 3])?;
            let n = vertex_count(params, level)?;
            let r = positive(params, "r", 1.0)?;
            Ok(Mesh::Curve(ellipse(r, r, n, dim)?))
        }
        "ellipse" => {
            let dim = dim_param(params, 2, &[2, 3])?;
            let n = vertex_count(params, level)?;
            Ok(Mesh::Curve(ellipse(
                positive(params, "a", 2.0)?,
                positive(params, "b", 1.0)?,
                n,
                dim,
            )?))
        }
        "torus_knot" => {
            let n = vertex_count(params, level)?;
            Ok(Mesh::Curve(torus_knot(
                positive(params, "p", 2.0)?,
                positive(params, "q", 3.0)?,
                positive(params, "R", 2.0)?,
                positive(params, "r", 1.0)?,
                n,
            )?))
        }
        other => Err(Error::UnknownShape(other.to_string())),
    }
}

fn vertex_count(params: &ShapeParams, level: u32) -> Result<usize> {
    match params.get("vertices") {
        Some(&v) if v >= 3.0 && v.fract() == 0.0 => Ok(v as usize),
        Some(&v) => Err(Error::Domain {
            name: "vertices",
            value: v,
            reason: "must be an integer >= 3",
        }),
        None => Ok(16usize << level),
    }
}

/// Number of concentric rings of the radial disk mesh at a level.
pub fn disk_rings(level: u32) -> usize {
    ((3usize << level) / 2).max(1)
}

/// Radial disk mesh: ring `k` has `6k` vertices at radius `k·r/N`.
pub fn disk(r: f64, level: u32, dim: usize) -> Result<TriMesh> {
    let rings = disk_rings(level);
    let (positions, triangles) = radial_disk_topology(rings, |k, j| {
        if k == 0 {
            point(&[0.0, 0.0])
        } else {
            let a = 2.0 * PI * j as f64 / (6 * k) as f64;
            let rho = r * k as f64 / rings as f64;
            point(&[rho * a.cos(), rho * a.sin()])
        }
    });
    TriMesh::new(dim, positions, triangles)
}

fn radial_disk_topology<F: Fn(usize, usize) -> Point>(rings: usize, place: F) -> (Vec<Point>, Vec<[usize; 3]>) {
    // ring k starts at 1 + 3k(k-1)
    let start = |k: usize| if k == 0 { 0 } else { 1 + 3 * k * (k - 1) };
    let mut positions = vec![place(0, 0)];
    for k in 1..=rings {
        for j in 0..6 * k {
            positions.push(place(k, j));
        }
    }
    let mut triangles = Vec::with_capacity(6 * rings * rings);
    for k in 1..=rings {
        let outer = |i: usize| start(k) + i % (6 * k);
        let inner = |i: usize| {
            if k == 1 {
                0
            } else {
                start(k - 1) + i % (6 * (k - 1))
            }
        };
        for s in 0..6 {
            for i in 0..k {
                let a = s * k + i;
                let b = s * (k - 1) + i;
                triangles.push([outer(a), outer(a + 1), inner(b)]);
                if i + 1 < k {
                    triangles.push([inner(b), outer(a + 1), inner(b + 1)]);
                }
            }
        }
    }
    (positions, triangles)
}

/// Structured grid on `[0, side]²` with alternating diagonals.
pub fn square(side: f64, level: u32) -> Result<TriMesh> {
    let n = 2usize << level;
    let h = side / n as f64;
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut positions = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            positions.push(point(&[i as f64 * h, j as f64 * h]));
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            if (i + j) % 2 == 0 {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }
    TriMesh::new(2, positions, triangles)
}

pub fn annulus(r_in: f64, r_out: f64, level: u32) -> Result<TriMesh> {
    let m = 6usize << level;
    let k = ((1usize << level) / 2).max(1);
    let mut positions = Vec::with_capacity(m * (k + 1));
    for ring in 0..=k {
        let rho = r_in + (r_out - r_in) * ring as f64 / k as f64;
        for j in 0..m {
            let a = 2.0 * PI * j as f64 / m as f64;
            positions.push(point(&[rho * a.cos(), rho * a.sin()]));
        }
    }
    let idx = |ring: usize, j: usize| ring * m + j % m;
    let mut triangles = Vec::with_capacity(2 * m * k);
    for ring in 0..k {
        for j in 0..m {
            let (a, b, c, d) = (idx(ring, j), idx(ring, j + 1), idx(ring + 1, j + 1), idx(ring + 1, j));
            if (ring + j) % 2 == 0 {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }
    TriMesh::new(2, positions, triangles)
}

/// Subdivided icosahedron projected to the sphere of radius `r`.
pub fn icosphere(r: f64, level: u32, dim: usize) -> Result<TriMesh> {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<[f64; 3]> = vec![
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let normalize = |v: [f64; 3]| {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        [v[0] / n, v[1] / n, v[2] / n]
    };
    for v in verts.iter_mut() {
        *v = normalize(*v);
    }
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<[f64; 3]>| {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                let (p, q) = (verts[a], verts[b]);
                verts.push(normalize([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                verts.len() - 1
            })
        };
        for f in &faces {
            let ab = midpoint(f[0], f[1], &mut verts);
            let bc = midpoint(f[1], f[2], &mut verts);
            let ca = midpoint(f[2], f[0], &mut verts);
            next.push([f[0], ab, ca]);
            next.push([f[1], bc, ab]);
            next.push([f[2], ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    let positions = verts.iter().map(|v| point(&[r * v[0], r * v[1], r * v[2]])).collect();
    TriMesh::new(dim, positions, faces)
}

/// Upper hemisphere, built on the radial disk topology with polar angle
/// proportional to ring index.
pub fn hemisphere(r: f64, level: u32, dim: usize) -> Result<TriMesh> {
    let rings = disk_rings(level);
    let (positions, triangles) = radial_disk_topology(rings, |k, j| {
        if k == 0 {
            point(&[0.0, 0.0, r])
        } else {
            let a = 2.0 * PI * j as f64 / (6 * k) as f64;
            let theta = 0.5 * PI * k as f64 / rings as f64;
            point(&[r * theta.sin() * a.cos(), r * theta.sin() * a.sin(), r * theta.cos()])
        }
    });
    TriMesh::new(dim, positions, triangles)
}

pub fn torus(big: f64, small: f64, level: u32, dim: usize) -> Result<TriMesh> {
    let nv = 6usize << level;
    let nu = 2 * nv;
    let mut positions = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = 2.0 * PI * i as f64 / nu as f64;
        for j in 0..nv {
            let v = 2.0 * PI * j as f64 / nv as f64;
            let rho = big + small * v.cos();
            positions.push(point(&[rho * u.cos(), rho * u.sin(), small * v.sin()]));
        }
    }
    let idx = |i: usize, j: usize| (i % nu) * nv + j % nv;
    let mut triangles = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    TriMesh::new(dim, positions, triangles)
}

pub fn ellipse(a: f64, b: f64, vertices: usize, dim: usize) -> Result<CurveMesh> {
    let positions = (0..vertices)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / vertices as f64;
            point(&[a * t.cos(), b * t.sin()])
        })
        .collect();
    CurveMesh::new(dim, positions, true)
}

/// `(p, q)` torus knot on the torus with radii `R`, `r`.
pub fn torus_knot(p: f64, q: f64, big: f64, small: f64, vertices: usize) -> Result<CurveMesh> {
    let positions = (0..vertices)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / vertices as f64;
            let rho = big + small * (q * t).cos();
            point(&[rho * (p * t).cos(), rho * (p * t).sin(), small * (q * t).sin()])
        })
        .collect();
    CurveMesh::new(3, positions, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_level4_size_and_perimeter() {
        let m = disk(1.0, 4, 2).unwrap();
        assert_eq!(m.triangles().len(), 6 * 24 * 24);
        assert_eq!(m.boundary_loops().len(), 1);
        assert!((m.boundary_length() - 2.0 * PI).abs() < 1e-3);
        let n = 144.0;
        let inscribed = 2.0 * n * (PI / n).sin();
        assert!((m.boundary_length() - inscribed).abs() < 1e-12);
    }

    #[test]
    fn icosphere_level3_area() {
        let m = icosphere(1.0, 3, 3).unwrap();
        assert!(m.is_closed());
        assert!((m.total_area() - 4.0 * PI).abs() < 1e-2 * 4.0 * PI);
    }

    #[test]
    fn circle_length() {
        let c = builtin_shape("circle", &ShapeParams::from([("vertices".into(), 256.0)]), 0)
            .unwrap()
            .into_curve()
            .unwrap();
        assert!(c.is_closed());
        let expected = 2.0 * 256.0 * (PI / 256.0).sin();
        assert!((c.length() - expected).abs() < 1e-12);
        assert!((c.length() - 2.0 * PI).abs() < 1e-3);
    }

    #[test]
    fn unknown_shape_rejected() {
        assert!(matches!(
            builtin_shape("dodecahedron", &ShapeParams::new(), 1),
            Err(Error::UnknownShape(_))
        ));
    }

    #[test]
    fn annulus_has_two_loops() {
        let m = annulus(0.5, 1.0, 3).unwrap();
        assert_eq!(m.boundary_loops().len(), 2);
    }

    #[test]
    fn hemisphere_and_torus_topology() {
        let h = hemisphere(1.0, 3, 3).unwrap();
        assert_eq!(h.boundary_loops().len(), 1);
        let t = torus(2.0, 1.0, 2, 3).unwrap();
        assert!(t.is_closed());
        let area = 4.0 * PI * PI * 2.0;
        assert!((t.total_area() - area).abs() < 0.02 * area);
    }
}
