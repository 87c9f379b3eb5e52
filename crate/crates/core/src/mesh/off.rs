//! ASCII OFF reader/writer and projection of imported meshes onto a surface.

use std::io::Write;
use std::path::Path;

use super::SurfaceMesh;
use crate::geometry::LevelSetSurface;
use crate::{Error, Result, Vec3};

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Parses an ASCII OFF file with triangular faces. Connectivity is checked (closed,
/// manifold); orientation and vertex positions are taken as given.
pub fn parse_off(text: &str) -> Result<SurfaceMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (line_no, header) = lines.next().ok_or_else(|| parse_error(1, "empty file"))?;
    let mut header_tokens = header.split_whitespace();
    if header_tokens.next() != Some("OFF") {
        return Err(parse_error(line_no, "missing OFF header"));
    }
    let rest: Vec<&str> = header_tokens.collect();
    let (counts_line, counts) = if rest.is_empty() {
        let (n, l) = lines.next().ok_or_else(|| parse_error(line_no, "missing element counts"))?;
        (n, l.split_whitespace().collect::<Vec<_>>())
    } else {
        (line_no, rest)
    };
    if counts.len() < 2 {
        return Err(parse_error(counts_line, "expected vertex and face counts"));
    }
    let parse_count = |s: &str| s.parse::<usize>().map_err(|_| parse_error(counts_line, format!("bad count '{s}'")));
    let n_vertices = parse_count(counts[0])?;
    let n_faces = parse_count(counts[1])?;

    let mut vertices = Vec::with_capacity(n_vertices);
    for _ in 0..n_vertices {
        let (n, l) = lines.next().ok_or_else(|| parse_error(counts_line, "file ends inside the vertex list"))?;
        let coords: Vec<f64> = l
            .split_whitespace()
            .take(3)
            .map(|s| s.parse::<f64>().map_err(|_| parse_error(n, format!("bad coordinate '{s}'"))))
            .collect::<Result<_>>()?;
        if coords.len() != 3 {
            return Err(parse_error(n, "vertex needs three coordinates"));
        }
        vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
    }

    let mut faces = Vec::with_capacity(n_faces);
    for _ in 0..n_faces {
        let (n, l) = lines.next().ok_or_else(|| parse_error(counts_line, "file ends inside the face list"))?;
        let idx: Vec<usize> = l
            .split_whitespace()
            .map(|s| s.parse::<usize>().map_err(|_| parse_error(n, format!("bad index '{s}'"))))
            .take(4)
            .collect::<Result<_>>()?;
        if idx.first() != Some(&3) || idx.len() < 4 {
            return Err(parse_error(n, "only triangular faces are supported"));
        }
        let face = [idx[1], idx[2], idx[3]];
        if face.iter().any(|&v| v >= n_vertices) {
            return Err(parse_error(n, "face index out of range"));
        }
        faces.push(face);
    }
    SurfaceMesh::from_faces(vertices, &faces)
}

pub fn load_off(path: impl AsRef<Path>) -> Result<SurfaceMesh> {
    parse_off(&std::fs::read_to_string(path)?)
}

pub fn write_off<W: Write>(mesh: &SurfaceMesh, mut out: W) -> std::io::Result<()> {
    writeln!(out, "OFF")?;
    writeln!(out, "{} {} {}", mesh.n_vertices(), mesh.n_triangles(), mesh.n_edges())?;
    for v in mesh.vertices() {
        writeln!(out, "{:e} {:e} {:e}", v[0], v[1], v[2])?;
    }
    for t in mesh.triangles() {
        writeln!(out, "3 {} {} {}", t.vertices[0], t.vertices[1], t.vertices[2])?;
    }
    Ok(())
}

/// Moves every vertex to its closest point on the surface and orients all triangles so
/// that `ν_h · ν > 0`.
pub fn project_to_surface(mesh: &SurfaceMesh, surface: &LevelSetSurface) -> Result<SurfaceMesh> {
    let vertices = mesh
        .vertices()
        .iter()
        .map(|v| Ok(surface.closest_point(v)?.0))
        .collect::<Result<Vec<_>>>()?;
    let mut faces: Vec<[usize; 3]> = mesh.triangles().iter().map(|t| t.vertices).collect();

    // consistent orientation per connected component
    let n = faces.len();
    let mut component = vec![usize::MAX; n];
    let mut flipped = vec![false; n];
    let mut n_components = 0;
    for seed in 0..n {
        if component[seed] != usize::MAX {
            continue;
        }
        component[seed] = n_components;
        let mut stack = vec![seed];
        while let Some(t) = stack.pop() {
            for (local, &e) in mesh.triangle_edges(t).iter().enumerate() {
                let edge = &mesh.edges()[e];
                let (other, other_local) = if edge.plus.0 == t { edge.minus } else { edge.plus };
                let same_direction = directed(&mesh.triangles()[t].edge_vertices(local), flipped[t])
                    == directed(&mesh.triangles()[other].edge_vertices(other_local), false);
                // `other` must traverse the edge opposite to `t`
                let needs_flip = same_direction;
                if component[other] == usize::MAX {
                    component[other] = n_components;
                    flipped[other] = needs_flip;
                    stack.push(other);
                } else if flipped[other] != needs_flip {
                    return Err(Error::NonManifold("surface is not orientable".into()));
                }
            }
        }
        n_components += 1;
    }
    for (face, &f) in faces.iter_mut().zip(&flipped) {
        if f {
            face.swap(1, 2);
        }
    }

    let normal = |f: &[usize; 3]| (vertices[f[1]] - vertices[f[0]]).cross(&(vertices[f[2]] - vertices[f[0]])).normalize();
    let mut votes = vec![0i64; n_components];
    for (t, f) in faces.iter().enumerate() {
        let centroid = (vertices[f[0]] + vertices[f[1]] + vertices[f[2]]) / 3.0;
        let nu = surface.normal(&surface.closest_point(&centroid)?.0)?;
        votes[component[t]] += if nu.dot(&normal(f)) >= 0.0 { 1 } else { -1 };
    }
    for (t, face) in faces.iter_mut().enumerate() {
        if votes[component[t]] < 0 {
            face.swap(1, 2);
        }
    }

    for (t, f) in faces.iter().enumerate() {
        let nu_h = normal(f);
        let centroid = (vertices[f[0]] + vertices[f[1]] + vertices[f[2]]) / 3.0;
        let probes = [vertices[f[0]], vertices[f[1]], vertices[f[2]], surface.closest_point(&centroid)?.0];
        for p in probes {
            let dot = surface.normal(&p)?.dot(&nu_h);
            if dot <= 0.0 {
                return Err(Error::OrientationFailure { triangle: t, dot });
            }
        }
    }
    SurfaceMesh::from_faces(vertices, &faces)
}

/// Directed edge as seen from a triangle that may be scheduled for flipping.
fn directed(edge: &(usize, usize), flip: bool) -> (usize, usize) {
    if flip {
        (edge.1, edge.0)
    } else {
        *edge
    }
}
