//! Newest-vertex bisection with conforming closure.
//!
//! Marked triangles mark their refinement edge; any triangle with a marked edge then marks
//! its own refinement edge until nothing changes. Each triangle is then split recursively
//! along marked refinement edges, so every marked edge is bisected from both sides.

use std::collections::HashMap;

use super::{SurfaceMesh, Triangle};
use crate::geometry::LevelSetSurface;
use crate::Result;

/// Refined mesh plus, for every new triangle, its ancestor in the input mesh and the
/// barycentric coordinates (in that ancestor) of its three vertices.
#[derive(Debug, Clone)]
pub struct Refinement {
    pub mesh: SurfaceMesh,
    pub parent: Vec<usize>,
    pub parent_bary: Vec<[[f64; 3]; 3]>,
}

impl Refinement {
    fn identity(mesh: SurfaceMesh) -> Self {
        let n = mesh.n_triangles();
        let unit = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        Self { mesh, parent: (0..n).collect(), parent_bary: vec![unit; n] }
    }

    /// Chains `self` (old → mid) with `next` (mid → new).
    pub fn then(self, next: Refinement) -> Refinement {
        let mut parent = Vec::with_capacity(next.parent.len());
        let mut parent_bary = Vec::with_capacity(next.parent.len());
        for (mid, bary) in next.parent.iter().zip(&next.parent_bary) {
            parent.push(self.parent[*mid]);
            let outer = &self.parent_bary[*mid];
            parent_bary.push(bary.map(|b| {
                let mut out = [0.0; 3];
                for (k, weight) in b.iter().enumerate() {
                    for j in 0..3 {
                        out[j] += weight * outer[k][j];
                    }
                }
                out
            }));
        }
        Refinement { mesh: next.mesh, parent, parent_bary }
    }
}

/// Bisects every marked triangle at least once; new vertices are closest points of edge
/// midpoints.
pub fn bisect(mesh: &SurfaceMesh, marked: &[usize], surface: &LevelSetSurface) -> Result<Refinement> {
    let mut edge_marked = vec![false; mesh.n_edges()];
    for &t in marked {
        let tri = &mesh.triangles()[t];
        edge_marked[mesh.triangle_edges(t)[tri.refinement_edge]] = true;
    }
    loop {
        let mut changed = false;
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let edges = mesh.triangle_edges(t);
            let refinement = edges[tri.refinement_edge];
            if !edge_marked[refinement] && edges.iter().any(|&e| edge_marked[e]) {
                edge_marked[refinement] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut vertices = mesh.vertices().to_vec();
    let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
    for (e, edge) in mesh.edges().iter().enumerate() {
        if edge_marked[e] {
            let [a, b] = edge.vertices;
            let mid = (vertices[a] + vertices[b]) * 0.5;
            let (xi, _) = surface.closest_point(&mid)?;
            vertices.push(xi);
            midpoints.insert((a, b), vertices.len() - 1);
        }
    }

    let mut triangles = Vec::with_capacity(mesh.n_triangles() * 2);
    let mut parent = Vec::with_capacity(mesh.n_triangles() * 2);
    let mut parent_bary = Vec::with_capacity(mesh.n_triangles() * 2);
    let unit = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let mut stack = vec![(*tri, unit)];
        while let Some((tri, bary)) = stack.pop() {
            let (p, q) = tri.edge_vertices(tri.refinement_edge);
            match midpoints.get(&(p.min(q), p.max(q))) {
                None => {
                    triangles.push(tri);
                    parent.push(t);
                    parent_bary.push(bary);
                }
                Some(&m) => {
                    // rotate so the refinement edge is opposite local vertex 0
                    let r = tri.refinement_edge;
                    let v = [tri.vertices[r], tri.vertices[(r + 1) % 3], tri.vertices[(r + 2) % 3]];
                    let b = [bary[r], bary[(r + 1) % 3], bary[(r + 2) % 3]];
                    let bm = [0, 1, 2].map(|k| 0.5 * (b[1][k] + b[2][k]));
                    let generation = tri.generation + 1;
                    // children keep the orientation; their refinement edges are opposite m
                    let first = Triangle { vertices: [v[0], v[1], m], refinement_edge: 2, generation };
                    let second = Triangle { vertices: [v[0], m, v[2]], refinement_edge: 1, generation };
                    // pushed in reverse so the first child is emitted first
                    stack.push((second, [b[0], bm, b[2]]));
                    stack.push((first, [b[0], b[1], bm]));
                }
            }
        }
    }

    let refined = SurfaceMesh::new(vertices, triangles)?;
    Ok(Refinement { mesh: refined, parent, parent_bary })
}

/// `rounds` successive bisections of every triangle. Once the similarity classes of the
/// triangles have settled, two rounds halve the mesh size.
pub fn bisect_uniform(mesh: &SurfaceMesh, surface: &LevelSetSurface, rounds: usize) -> Result<Refinement> {
    let mut acc = Refinement::identity(mesh.clone());
    for _ in 0..rounds {
        let all: Vec<usize> = (0..acc.mesh.n_triangles()).collect();
        let next = bisect(&acc.mesh, &all, surface)?;
        acc = acc.then(next);
    }
    Ok(acc)
}

/// Regular refinement: every triangle is split into four through its edge midpoints, which
/// are moved onto the surface. Applied to an icosphere this reproduces the next icosphere
/// level exactly.
pub fn refine_uniform(mesh: &SurfaceMesh, surface: &LevelSetSurface) -> Result<Refinement> {
    let mut vertices = mesh.vertices().to_vec();
    let mut midpoint = vec![0; mesh.n_edges()];
    for (e, edge) in mesh.edges().iter().enumerate() {
        let [a, b] = edge.vertices;
        let (xi, _) = surface.closest_point(&((vertices[a] + vertices[b]) * 0.5))?;
        vertices.push(xi);
        midpoint[e] = vertices.len() - 1;
    }
    let n = mesh.n_triangles();
    let mut faces = Vec::with_capacity(4 * n);
    let mut parent = Vec::with_capacity(4 * n);
    let mut parent_bary = Vec::with_capacity(4 * n);
    let corner = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    // local edge i is opposite vertex i, so its midpoint has barycentrics ½ on the others
    let mid = [[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let [v0, v1, v2] = tri.vertices;
        let [m0, m1, m2] = mesh.triangle_edges(t).map(|e| midpoint[e]);
        faces.extend_from_slice(&[[v0, m2, m1], [v1, m0, m2], [v2, m1, m0], [m0, m1, m2]]);
        parent.extend_from_slice(&[t; 4]);
        parent_bary.extend_from_slice(&[
            [corner[0], mid[2], mid[1]],
            [corner[1], mid[0], mid[2]],
            [corner[2], mid[1], mid[0]],
            [mid[0], mid[1], mid[2]],
        ]);
    }
    let refined = SurfaceMesh::from_faces(vertices, &faces)?;
    Ok(Refinement { mesh: refined, parent, parent_bary })
}
