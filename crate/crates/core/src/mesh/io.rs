//! ASCII OFF and OBJ readers/writers (positions and connectivity only).
//!
//! Vertex lines may carry 2, 3 or 4 coordinates. Trailing coordinates that
//! are zero on every vertex are dropped, so a planar domain written with
//! `z = 0` reads back as a planar domain. OBJ `l` records produce a
//! [`CurveMesh`]; a closed curve repeats its first index at the end.

use std::fmt::Write as _;
use std::path::Path;

use super::{point, CurveMesh, Mesh, Point, TriMesh};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "off" => Some(Self::Off),
            "obj" => Some(Self::Obj),
            _ => None,
        }
    }
}

pub fn load_mesh(path: &Path, format: Option<MeshFormat>) -> Result<Mesh> {
    let format = format
        .or_else(|| MeshFormat::from_path(path))
        .ok_or_else(|| Error::Io(format!("cannot infer mesh format of {}", path.display())))?;
    let text = std::fs::read_to_string(path)?;
    match format {
        MeshFormat::Off => read_off(&text),
        MeshFormat::Obj => read_obj(&text),
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn effective_dim(coords: &[Vec<f64>]) -> usize {
    let width = coords.iter().map(|c| c.len()).max().unwrap_or(0);
    let mut dim = width;
    while dim > 2 && coords.iter().all(|c| c.get(dim - 1).copied().unwrap_or(0.0) == 0.0) {
        dim -= 1;
    }
    dim
}

fn parse_coords(tokens: &[&str], line: usize) -> Result<Vec<f64>> {
    if !(2..=4).contains(&tokens.len()) {
        return Err(parse_err(line, format!("expected 2-4 coordinates, found {}", tokens.len())));
    }
    tokens
        .iter()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| parse_err(line, format!("invalid coordinate `{t}`")))
        })
        .collect()
}

pub fn read_off(text: &str) -> Result<Mesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hl, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let mut header_tokens: Vec<&str> = header.split_whitespace().collect();
    if !header_tokens.first().is_some_and(|t| t.ends_with("OFF")) {
        return Err(parse_err(hl, "missing OFF header"));
    }
    header_tokens.remove(0);
    let (cl, counts) = if header_tokens.is_empty() {
        let (cl, l) = lines.next().ok_or_else(|| parse_err(hl + 1, "missing element counts"))?;
        (cl, l.split_whitespace().collect::<Vec<_>>())
    } else {
        (hl, header_tokens)
    };
    if counts.len() < 2 {
        return Err(parse_err(cl, "expected vertex and face counts"));
    }
    let nv: usize = counts[0]
        .parse()
        .map_err(|_| parse_err(cl, format!("invalid vertex count `{}`", counts[0])))?;
    let nf: usize = counts[1]
        .parse()
        .map_err(|_| parse_err(cl, format!("invalid face count `{}`", counts[1])))?;
    let mut coords = Vec::with_capacity(nv);
    for k in 0..nv {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(cl, format!("file ends after {k} of {nv} vertices")))?;
        let tokens: Vec<&str> = l.split_whitespace().collect();
        coords.push(parse_coords(&tokens, ln)?);
    }
    let mut triangles = Vec::with_capacity(nf);
    for k in 0..nf {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(cl, format!("file ends after {k} of {nf} faces")))?;
        let tokens: Vec<&str> = l.split_whitespace().collect();
        let count: usize = tokens
            .first()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(ln, "invalid face record"))?;
        if count != 3 {
            return Err(parse_err(ln, format!("only triangles are supported (found {count}-gon)")));
        }
        if tokens.len() < 4 {
            return Err(parse_err(ln, "face record has fewer than three indices"));
        }
        let mut tri = [0usize; 3];
        for (slot, t) in tri.iter_mut().zip(&tokens[1..4]) {
            let idx: usize = t.parse().map_err(|_| parse_err(ln, format!("invalid index `{t}`")))?;
            if idx >= nv {
                return Err(parse_err(ln, format!("index {idx} out of range (nv = {nv})")));
            }
            *slot = idx;
        }
        triangles.push(tri);
    }
    build_tri(coords, triangles)
}

fn build_tri(coords: Vec<Vec<f64>>, triangles: Vec<[usize; 3]>) -> Result<Mesh> {
    let dim = effective_dim(&coords);
    let positions: Vec<Point> = coords.iter().map(|c| point(c)).collect();
    Ok(Mesh::classify(TriMesh::new(dim, positions, triangles)?))
}

fn parse_obj_index(token: &str, nv: usize, line: usize) -> Result<usize> {
    let head = token.split('/').next().unwrap_or("");
    let raw: i64 = head
        .parse()
        .map_err(|_| parse_err(line, format!("invalid index `{token}`")))?;
    let idx = if raw > 0 {
        raw - 1
    } else if raw < 0 {
        nv as i64 + raw
    } else {
        -1
    };
    if idx < 0 || idx as usize >= nv {
        return Err(parse_err(line, format!("index {raw} out of range (nv = {nv})")));
    }
    Ok(idx as usize)
}

pub fn read_obj(text: &str) -> Result<Mesh> {
    let mut coords = Vec::new();
    let mut triangles = Vec::new();
    let mut polyline: Option<(usize, Vec<usize>)> = None;
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let l = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = l.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let rest: Vec<&str> = tokens.collect();
                coords.push(parse_coords(&rest, ln)?);
            }
            Some("f") => {
                let idx = tokens
                    .map(|t| parse_obj_index(t, coords.len(), ln))
                    .collect::<Result<Vec<_>>>()?;
                if idx.len() != 3 {
                    return Err(parse_err(ln, format!("only triangles are supported (found {} indices)", idx.len())));
                }
                triangles.push([idx[0], idx[1], idx[2]]);
            }
            Some("l") => {
                if polyline.is_some() {
                    return Err(parse_err(ln, "only one polyline per file is supported"));
                }
                let idx = tokens
                    .map(|t| parse_obj_index(t, coords.len(), ln))
                    .collect::<Result<Vec<_>>>()?;
                polyline = Some((ln, idx));
            }
            _ => {}
        }
    }
    if let Some((ln, mut idx)) = polyline {
        if !triangles.is_empty() {
            return Err(parse_err(ln, "file mixes faces and polylines"));
        }
        let closed = idx.len() > 2 && idx.first() == idx.last();
        if closed {
            idx.pop();
        }
        let dim = effective_dim(&coords);
        let positions = idx.iter().map(|&k| point(&coords[k])).collect();
        return Ok(Mesh::Curve(CurveMesh::new(dim, positions, closed)?));
    }
    if triangles.is_empty() {
        return Err(parse_err(text.lines().count().max(1), "no faces or polylines found"));
    }
    build_tri(coords, triangles)
}

fn coords_line(p: &Point, dim: usize) -> String {
    (0..dim).map(|k| format!("{:.17e}", p[k])).collect::<Vec<_>>().join(" ")
}

pub fn write_off(mesh: &TriMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "OFF");
    let _ = writeln!(s, "{} {} 0", mesh.vertex_count(), mesh.triangles().len());
    for p in mesh.positions() {
        let _ = writeln!(s, "{}", coords_line(p, mesh.dim()));
    }
    for t in mesh.triangles() {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    s
}

pub fn write_obj(mesh: &Mesh) -> String {
    let mut s = String::new();
    match mesh {
        Mesh::Domain(m) | Mesh::Surface(m) => {
            for p in m.positions() {
                let _ = writeln!(s, "v {}", coords_line(p, m.dim()));
            }
            for t in m.triangles() {
                let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
            }
        }
        Mesh::Curve(c) => {
            for p in c.positions() {
                let _ = writeln!(s, "v {}", coords_line(p, c.dim()));
            }
            let mut idx: Vec<String> = (1..=c.vertex_count()).map(|k| k.to_string()).collect();
            if c.is_closed() {
                idx.push("1".into());
            }
            let _ = writeln!(s, "l {}", idx.join(" "));
        }
    }
    s
}
