//! Polyhedral surface `Γ_h` with vertices on `Γ`.
//!
//! Local edge `i` of a triangle is the edge opposite its vertex `i`. Every edge records the
//! two incident triangles; the `plus` side is the triangle with the lower index, which fixes
//! the sign of jumps for both assembly and estimation.

mod bisect;
mod off;
mod vtk;

use std::collections::HashMap;

pub use bisect::{bisect, bisect_uniform, refine_uniform, Refinement};
pub use off::{load_off, parse_off, project_to_surface, write_off};
pub use vtk::{write_vtk, write_vtk_file};

use crate::geometry::LevelSetSurface;
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triangle {
    /// Counter-clockwise with respect to the outward normal.
    pub vertices: [usize; 3],
    /// Local index of the edge bisected next.
    pub refinement_edge: usize,
    pub generation: u32,
}

impl Triangle {
    pub fn new(vertices: [usize; 3]) -> Self {
        Self { vertices, refinement_edge: 0, generation: 0 }
    }

    /// Endpoints of local edge `i`, in the triangle's orientation.
    pub fn edge_vertices(&self, i: usize) -> (usize, usize) {
        (self.vertices[(i + 1) % 3], self.vertices[(i + 2) % 3])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    /// Sorted vertex indices.
    pub vertices: [usize; 2],
    /// `(triangle, local edge)` of the lower-index triangle.
    pub plus: (usize, usize),
    pub minus: (usize, usize),
}

#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<Triangle>,
    edges: Vec<Edge>,
    triangle_edges: Vec<[usize; 3]>,
    vertex_triangles: Vec<Vec<usize>>,
    h_triangle: Vec<f64>,
    h_edge: Vec<f64>,
}

/// Vertex and element patches `w_p`, `w_K = ∪_{p ∈ K} w_p`.
#[derive(Debug, Clone)]
pub struct Patches {
    pub vertex: Vec<Vec<usize>>,
    pub element: Vec<Vec<usize>>,
    pub h_p: Vec<f64>,
}

impl SurfaceMesh {
    /// Builds connectivity; fails unless every edge has exactly two incident triangles and
    /// every vertex neighbourhood is a single disc.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<Triangle>) -> Result<Self> {
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::with_capacity(triangles.len() * 3 / 2);
        let mut incidences: Vec<Vec<(usize, usize)>> = Vec::with_capacity(triangles.len() * 3 / 2);
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        let mut vertex_triangles = vec![Vec::new(); vertices.len()];

        for (t, tri) in triangles.iter().enumerate() {
            let [a, b, c] = tri.vertices;
            if a == b || b == c || a == c {
                return Err(Error::InvalidMesh(format!("triangle {t} repeats a vertex")));
            }
            if tri.vertices.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!("triangle {t} references a missing vertex")));
            }
            if tri.refinement_edge > 2 {
                return Err(Error::InvalidMesh(format!("triangle {t} has refinement edge {}", tri.refinement_edge)));
            }
            let mut local = [0; 3];
            for (i, slot) in local.iter_mut().enumerate() {
                let (p, q) = tri.edge_vertices(i);
                let key = (p.min(q), p.max(q));
                let id = *edge_index.entry(key).or_insert_with(|| {
                    incidences.push(Vec::with_capacity(2));
                    incidences.len() - 1
                });
                incidences[id].push((t, i));
                *slot = id;
            }
            triangle_edges.push(local);
            for &v in &tri.vertices {
                vertex_triangles[v].push(t);
            }
        }

        let mut keys = vec![(0, 0); incidences.len()];
        for (key, &id) in &edge_index {
            keys[id] = *key;
        }
        let mut edges = Vec::with_capacity(incidences.len());
        for (id, inc) in incidences.iter().enumerate() {
            let (p, q) = keys[id];
            match inc.as_slice() {
                [first, second] => edges.push(Edge { vertices: [p, q], plus: *first, minus: *second }),
                [_] => return Err(Error::NonManifold(format!("edge ({p}, {q}) is a boundary edge"))),
                more => {
                    return Err(Error::NonManifold(format!("edge ({p}, {q}) is shared by {} triangles", more.len())))
                }
            }
        }

        let mut mesh = Self {
            vertices,
            triangles,
            edges,
            triangle_edges,
            vertex_triangles,
            h_triangle: Vec::new(),
            h_edge: Vec::new(),
        };
        mesh.check_vertex_fans()?;
        mesh.h_edge = mesh
            .edges
            .iter()
            .map(|e| (mesh.vertices[e.vertices[0]] - mesh.vertices[e.vertices[1]]).norm())
            .collect();
        mesh.h_triangle = mesh.triangle_edges.iter().map(|es| es.iter().map(|&e| mesh.h_edge[e]).fold(0.0, f64::max)).collect();
        Ok(mesh)
    }

    /// Builds a generation-0 mesh whose refinement edges are the longest edges.
    pub fn from_faces(vertices: Vec<Vec3>, faces: &[[usize; 3]]) -> Result<Self> {
        let triangles = faces
            .iter()
            .map(|&f| {
                let mut tri = Triangle::new(f);
                tri.refinement_edge = longest_edge(&vertices, &f);
                tri
            })
            .collect();
        Self::new(vertices, triangles)
    }

    fn check_vertex_fans(&self) -> Result<()> {
        for (v, tris) in self.vertex_triangles.iter().enumerate() {
            if tris.is_empty() {
                continue;
            }
            // walk around v across edges incident to v
            let mut seen = vec![false; tris.len()];
            let mut stack = vec![0];
            seen[0] = true;
            let mut count = 1;
            while let Some(i) = stack.pop() {
                let t = tris[i];
                for (local, &e) in self.triangle_edges[t].iter().enumerate() {
                    if self.triangles[t].vertices[local] == v {
                        continue;
                    }
                    let edge = &self.edges[e];
                    let other = if edge.plus.0 == t { edge.minus.0 } else { edge.plus.0 };
                    if let Some(j) = tris.iter().position(|&x| x == other) {
                        if !seen[j] {
                            seen[j] = true;
                            count += 1;
                            stack.push(j);
                        }
                    }
                }
            }
            if count != tris.len() {
                return Err(Error::NonManifold(format!("vertex {v} joins {} separate fans", tris.len() - count + 1)));
            }
        }
        Ok(())
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edge ids of the three local edges of a triangle.
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    pub fn vertex_triangles(&self, v: usize) -> &[usize] {
        &self.vertex_triangles[v]
    }

    /// Longest edge of the triangle.
    pub fn h_triangle(&self, t: usize) -> f64 {
        self.h_triangle[t]
    }

    pub fn h_edge(&self, e: usize) -> f64 {
        self.h_edge[e]
    }

    pub fn h_max(&self) -> f64 {
        self.h_triangle.iter().copied().fold(0.0, f64::max)
    }

    pub fn triangle_points(&self, t: usize) -> [Vec3; 3] {
        self.triangles[t].vertices.map(|v| self.vertices[v])
    }

    pub fn point(&self, t: usize, bary: &[f64; 3]) -> Vec3 {
        let p = self.triangle_points(t);
        p[0] * bary[0] + p[1] * bary[1] + p[2] * bary[2]
    }

    pub fn barycenter(&self, t: usize) -> Vec3 {
        self.point(t, &[1.0 / 3.0; 3])
    }

    /// Unit normal of the planar triangle from its vertex order.
    pub fn normal(&self, t: usize) -> Vec3 {
        let p = self.triangle_points(t);
        (p[1] - p[0]).cross(&(p[2] - p[0])).normalize()
    }

    pub fn area(&self, t: usize) -> f64 {
        let p = self.triangle_points(t);
        0.5 * (p[1] - p[0]).cross(&(p[2] - p[0])).norm()
    }

    /// Outward unit conormal of local edge `i` of triangle `t`, in the triangle's plane.
    pub fn conormal(&self, t: usize, i: usize) -> Vec3 {
        let tri = &self.triangles[t];
        let (a, b) = tri.edge_vertices(i);
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        let n = (pb - pa).normalize().cross(&self.normal(t));
        if (self.vertices[tri.vertices[i]] - pa).dot(&n) > 0.0 {
            -n
        } else {
            n
        }
    }

    /// Barycentric coordinates in triangle `t` of the point `(1-s) a + s b` on its local edge `i`,
    /// where `(a, b)` are the edge's sorted global vertices.
    pub fn edge_point_barycentric(&self, t: usize, i: usize, s: f64) -> [f64; 3] {
        let tri = &self.triangles[t];
        let (p, q) = tri.edge_vertices(i);
        let (lo_weight, hi_weight) = (1.0 - s, s);
        let (wp, wq) = if p < q { (lo_weight, hi_weight) } else { (hi_weight, lo_weight) };
        let mut bary = [0.0; 3];
        bary[(i + 1) % 3] = wp;
        bary[(i + 2) % 3] = wq;
        bary
    }

    pub fn patches(&self) -> Patches {
        let vertex = self.vertex_triangles.clone();
        let h_p = vertex.iter().map(|ts| ts.iter().map(|&t| self.h_triangle[t]).fold(0.0, f64::max)).collect();
        let element = self
            .triangles
            .iter()
            .map(|tri| {
                let mut w: Vec<usize> = tri.vertices.iter().flat_map(|&v| vertex[v].iter().copied()).collect();
                w.sort_unstable();
                w.dedup();
                w
            })
            .collect();
        Patches { vertex, element, h_p }
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.n_edges() as i64 + self.n_triangles() as i64
    }

    /// Checks the invariants refinement must preserve: closed and conforming (guaranteed by
    /// construction), consistently oriented, vertices on the surface, outward normals and
    /// outward in-plane conormals.
    pub fn validate(&self, surface: &LevelSetSurface) -> Result<()> {
        for edge in &self.edges {
            let (tp, ip) = edge.plus;
            let (tm, im) = edge.minus;
            if self.triangles[tp].edge_vertices(ip) == self.triangles[tm].edge_vertices(im) {
                return Err(Error::InvalidMesh(format!(
                    "triangles {tp} and {tm} are inconsistently oriented"
                )));
            }
        }
        let tol = 1e-10 * surface.bounding_radius();
        for (v, x) in self.vertices.iter().enumerate() {
            let dist = surface.first_order_distance(x)?;
            if dist > tol {
                return Err(Error::InvalidMesh(format!("vertex {v} is {dist:.3e} off the surface")));
            }
        }
        for t in 0..self.n_triangles() {
            let nu_h = self.normal(t);
            let mut probes: Vec<Vec3> = self.triangle_points(t).to_vec();
            probes.push(surface.closest_point(&self.barycenter(t))?.0);
            for p in probes {
                let dot = surface.normal(&p)?.dot(&nu_h);
                if dot <= 0.0 {
                    return Err(Error::OrientationFailure { triangle: t, dot });
                }
            }
            let pts = self.triangle_points(t);
            for i in 0..3 {
                let n = self.conormal(t, i);
                let (a, _) = self.triangles[t].edge_vertices(i);
                let unit = (n.norm() - 1.0).abs() < 1e-12;
                let in_plane = n.dot(&nu_h).abs() < 1e-12;
                let outward = (pts[i] - self.vertices[a]).dot(&n) < 0.0;
                if !(unit && in_plane && outward) {
                    return Err(Error::InvalidMesh(format!("bad conormal on triangle {t}, edge {i}")));
                }
            }
        }
        Ok(())
    }
}

fn longest_edge(vertices: &[Vec3], face: &[usize; 3]) -> usize {
    let mut best = (0, -1.0);
    for i in 0..3 {
        let len = (vertices[face[(i + 1) % 3]] - vertices[face[(i + 2) % 3]]).norm();
        // ties go to the lower local index
        if len > best.1 * (1.0 + 1e-12) {
            best = (i, len);
        }
    }
    best.0
}

/// Regular icosahedron subdivided `level` times (each triangle into four), vertices
/// normalised onto the unit sphere.
pub fn icosphere(level: u32) -> SurfaceMesh {
    let (vertices, faces) = icosphere_faces(level);
    SurfaceMesh::from_faces(vertices, &faces).expect("icosphere is a closed manifold")
}

fn icosphere_faces(level: u32) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let g = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        (-1.0, g, 0.0),
        (1.0, g, 0.0),
        (-1.0, -g, 0.0),
        (1.0, -g, 0.0),
        (0.0, -1.0, g),
        (0.0, 1.0, g),
        (0.0, -1.0, -g),
        (0.0, 1.0, -g),
        (g, 0.0, -1.0),
        (g, 0.0, 1.0),
        (-g, 0.0, -1.0),
        (-g, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
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
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Vec3>| {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                vertices.push(((vertices[a] + vertices[b]) * 0.5).normalize());
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    (vertices, faces)
}

/// Icosphere carried onto the Dziuk surface by `(a, b, c) ↦ (a + c², b, c)`, which maps the
/// unit sphere onto `(x₁ - x₃²)² + x₂² + x₃² = 1` exactly.
pub fn dziuk_mesh(level: u32) -> SurfaceMesh {
    let (vertices, faces) = icosphere_faces(level);
    let mapped = vertices.iter().map(|v| Vec3::new(v[0] + v[2] * v[2], v[1], v[2])).collect();
    SurfaceMesh::from_faces(mapped, &faces).expect("mapped icosphere is a closed manifold")
}

/// Icosphere directions pushed radially onto a surface that is star-shaped with respect to
/// the origin (`φ < 0` at the origin and `φ` increasing along every ray).
pub fn star_shaped_mesh(surface: &LevelSetSurface, level: u32) -> Result<SurfaceMesh> {
    let (directions, faces) = icosphere_faces(level);
    let outer = 2.0 * surface.bounding_radius();
    let vertices = directions
        .iter()
        .map(|dir| {
            let (mut lo, mut hi) = (0.0, outer);
            if surface.phi(&(dir * lo)) >= 0.0 || surface.phi(&(dir * hi)) <= 0.0 {
                return Err(Error::InvalidMesh(format!("surface is not star-shaped along {dir:?}")));
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if surface.phi(&(dir * mid)) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-16 * outer {
                    break;
                }
            }
            Ok(surface.closest_point(&(dir * (0.5 * (lo + hi))))?.0)
        })
        .collect::<Result<Vec<_>>>()?;
    SurfaceMesh::from_faces(vertices, &faces)
}
