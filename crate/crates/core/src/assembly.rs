//! Symmetric interior-penalty system on the polyhedral surface and its CG solver.
//!
//! Local element and edge blocks are computed in parallel and scattered into the global
//! matrix in a fixed sequential order, so the assembled system does not depend on the
//! number of worker threads.

use rayon::prelude::*;

use crate::dgspace::{edge_rule, triangle_rule, BasisPoint, DGFunction, DgSpace, EdgeRule};
use crate::geometry::LevelSetSurface;
use crate::mesh::SurfaceMesh;
use crate::{Error, Result, Vec3};

/// `({q}, [q])` for the two traces of a scalar.
pub fn jump_avg(q_plus: f64, q_minus: f64) -> (f64, f64) {
    (0.5 * (q_plus + q_minus), q_plus - q_minus)
}

/// `({v; n}, [v; n])` for the two traces of a vector field with their own conormals.
pub fn jump_avg_vec(v_plus: &Vec3, v_minus: &Vec3, n_plus: &Vec3, n_minus: &Vec3) -> (f64, f64) {
    let (a, b) = (v_plus.dot(n_plus), v_minus.dot(n_minus));
    (0.5 * (a - b), a + b)
}

/// Row-compressed sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        });
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |M_ij - M_ji|`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// `self - other` on a shared sparsity pattern.
    pub fn sub(&self, other: &CsrMatrix) -> CsrMatrix {
        assert!(self.row_ptr == other.row_ptr && self.col_idx == other.col_idx, "sparsity patterns differ");
        CsrMatrix { values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(), ..self.clone() }
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }
}

#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

/// Quadrature and penalty settings of the discrete form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblyOptions {
    /// Penalty `ω` in `β_e = ω / h_e`.
    pub penalty: f64,
    pub triangle_degree: usize,
    pub edge_degree: usize,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self { penalty: 10.0, triangle_degree: 4, edge_degree: 5 }
    }
}

/// A quadrature point on an edge seen from both incident triangles.
#[derive(Debug, Clone, Copy)]
pub struct EdgePoint {
    /// Position along the edge from its lower to its higher vertex.
    pub s: f64,
    /// Weight including the edge length.
    pub weight: f64,
    pub bary_plus: [f64; 3],
    pub bary_minus: [f64; 3],
}

pub fn edge_points(mesh: &SurfaceMesh, e: usize, rule: &EdgeRule) -> Vec<EdgePoint> {
    let edge = &mesh.edges()[e];
    let length = mesh.h_edge(e);
    rule.iter()
        .map(|(p, w)| {
            let s = p[1];
            EdgePoint {
                s,
                weight: w * length,
                bary_plus: mesh.edge_point_barycentric(edge.plus.0, edge.plus.1, s),
                bary_minus: mesh.edge_point_barycentric(edge.minus.0, edge.minus.1, s),
            }
        })
        .collect()
}

/// Global row-block layout: each triangle couples to itself and its edge neighbours.
struct BlockPattern {
    n_local: usize,
    /// Sorted block columns of every block row.
    neighbours: Vec<Vec<usize>>,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl BlockPattern {
    fn new(mesh: &SurfaceMesh, n_local: usize) -> Self {
        let neighbours: Vec<Vec<usize>> = (0..mesh.n_triangles())
            .map(|t| {
                let mut cols: Vec<usize> = mesh
                    .triangle_edges(t)
                    .iter()
                    .map(|&e| {
                        let edge = &mesh.edges()[e];
                        if edge.plus.0 == t {
                            edge.minus.0
                        } else {
                            edge.plus.0
                        }
                    })
                    .collect();
                cols.push(t);
                cols.sort_unstable();
                cols.dedup();
                cols
            })
            .collect();
        let mut row_ptr = Vec::with_capacity(mesh.n_triangles() * n_local + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for cols in &neighbours {
            for _ in 0..n_local {
                for &c in cols {
                    col_idx.extend(c * n_local..(c + 1) * n_local);
                }
                row_ptr.push(col_idx.len());
            }
        }
        Self { n_local, neighbours, row_ptr, col_idx }
    }

    fn zeros(&self) -> CsrMatrix {
        CsrMatrix {
            n: self.row_ptr.len() - 1,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: vec![0.0; self.col_idx.len()],
        }
    }

    /// Adds a dense `n_local × n_local` block at block position `(r, c)`.
    fn add_block(&self, m: &mut CsrMatrix, r: usize, c: usize, block: &[f64]) {
        let n = self.n_local;
        let k = self.neighbours[r].iter().position(|&x| x == c).expect("block outside the sparsity pattern");
        let width = self.neighbours[r].len() * n;
        for i in 0..n {
            let start = self.row_ptr[r * n + i] + k * n;
            debug_assert_eq!(self.row_ptr[r * n + i + 1] - self.row_ptr[r * n + i], width);
            for j in 0..n {
                m.values[start + j] += block[i * n + j];
            }
        }
    }
}

/// Symmetric dense block from its upper triangle.
fn symmetric_block(n: usize, mut entry: impl FnMut(usize, usize) -> f64) -> Vec<f64> {
    let mut block = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = entry(i, j);
            block[i * n + j] = v;
            block[j * n + i] = v;
        }
    }
    block
}

struct EdgeBlock {
    plus: usize,
    minus: usize,
    /// `2n × 2n`, plus unknowns first.
    values: Vec<f64>,
}

impl EdgeBlock {
    fn sub(&self, n: usize, a: usize, b: usize) -> Vec<f64> {
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.values[(a * n + i) * 2 * n + b * n + j];
            }
        }
        out
    }
}

fn edge_blocks(
    mesh: &SurfaceMesh,
    space: &DgSpace,
    rule: &EdgeRule,
    consistency: bool,
    penalty: f64,
) -> Result<Vec<EdgeBlock>> {
    let n = space.n_local();
    (0..mesh.n_edges())
        .into_par_iter()
        .map(|e| {
            let edge = &mesh.edges()[e];
            let (tp, ip) = edge.plus;
            let (tm, im) = edge.minus;
            let maps = [space.element_map(mesh, tp)?, space.element_map(mesh, tm)?];
            let conormals = [mesh.conormal(tp, ip), mesh.conormal(tm, im)];
            let beta = penalty / mesh.h_edge(e);
            let signs = [1.0, -1.0];
            let mut values = vec![0.0; 4 * n * n];
            for q in edge_points(mesh, e, rule) {
                let basis = [space.basis().evaluate(&q.bary_plus), space.basis().evaluate(&q.bary_minus)];
                // per unknown (side, i): jump contribution and normal-flux average contribution
                let mut jump = vec![0.0; 2 * n];
                let mut flux = vec![0.0; 2 * n];
                for side in 0..2 {
                    for i in 0..n {
                        jump[side * n + i] = signs[side] * basis[side].values[i];
                        let grad = maps[side].surface_gradient(&basis[side].gradients[i]);
                        flux[side * n + i] = 0.5 * signs[side] * grad.dot(&conormals[side]);
                    }
                }
                for a in 0..2 * n {
                    for b in a..2 * n {
                        let mut v = beta * jump[a] * jump[b];
                        if consistency {
                            v -= jump[b] * flux[a] + jump[a] * flux[b];
                        }
                        values[a * 2 * n + b] += q.weight * v;
                    }
                }
            }
            for a in 0..2 * n {
                for b in 0..a {
                    values[a * 2 * n + b] = values[b * 2 * n + a];
                }
            }
            Ok(EdgeBlock { plus: tp, minus: tm, values })
        })
        .collect()
}

fn scatter_edges(pattern: &BlockPattern, matrix: &mut CsrMatrix, blocks: &[EdgeBlock]) {
    let n = pattern.n_local;
    for blk in blocks {
        let tris = [blk.plus, blk.minus];
        for a in 0..2 {
            for b in 0..2 {
                pattern.add_block(matrix, tris[a], tris[b], &blk.sub(n, a, b));
            }
        }
    }
}

/// Assembles the interior-penalty matrix with `β_e = ω / h_e` and the load vector
/// `∫_K f(ξ(x)) v dσ_h`, where `forcing` is evaluated at the closest point `ξ(x)`.
pub fn assemble(
    mesh: &SurfaceMesh,
    space: &DgSpace,
    surface: &LevelSetSurface,
    forcing: &(dyn Fn(&Vec3) -> Result<f64> + Sync),
    options: &AssemblyOptions,
) -> Result<SparseSystem> {
    if !(options.penalty > 0.0) {
        return Err(Error::Usage(format!("penalty must be positive, got {}", options.penalty)));
    }
    let n = space.n_local();
    let tri_rule = triangle_rule(options.triangle_degree)?;
    let table: Vec<BasisPoint> = space.basis().tabulate(&tri_rule.points);
    let pattern = BlockPattern::new(mesh, n);

    let element: Vec<(Vec<f64>, Vec<f64>)> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| {
            let map = space.element_map(mesh, t)?;
            let jac = map.jacobian();
            let mut load = vec![0.0; n];
            let mut grads = vec![Vec3::zeros(); n];
            let mut block = vec![0.0; n * n];
            for ((p, w), b) in tri_rule.iter().zip(&table) {
                for (g, rg) in grads.iter_mut().zip(&b.gradients) {
                    *g = map.surface_gradient(rg);
                }
                let (xi, _) = surface.closest_point(&map.point(p))?;
                let f = forcing(&xi)?;
                let wj = w * jac;
                for i in 0..n {
                    load[i] += wj * f * b.values[i];
                    for j in i..n {
                        block[i * n + j] += wj * (grads[i].dot(&grads[j]) + b.values[i] * b.values[j]);
                    }
                }
            }
            for i in 0..n {
                for j in 0..i {
                    block[i * n + j] = block[j * n + i];
                }
            }
            Ok((block, load))
        })
        .collect::<Result<_>>()?;
    let edges = edge_blocks(mesh, space, &edge_rule(options.edge_degree)?, true, options.penalty)?;

    let mut matrix = pattern.zeros();
    let mut rhs = vec![0.0; mesh.n_triangles() * n];
    for (t, (block, load)) in element.iter().enumerate() {
        pattern.add_block(&mut matrix, t, t, block);
        rhs[t * n..(t + 1) * n].copy_from_slice(load);
    }
    scatter_edges(&pattern, &mut matrix, &edges);
    Ok(SparseSystem { matrix, rhs })
}

/// Penalty part `Σ_e ∫ β_e [u][v]` alone, on the same sparsity pattern as [`assemble`].
pub fn assemble_penalty(mesh: &SurfaceMesh, space: &DgSpace, options: &AssemblyOptions) -> Result<CsrMatrix> {
    let pattern = BlockPattern::new(mesh, space.n_local());
    let edges = edge_blocks(mesh, space, &edge_rule(options.edge_degree)?, false, options.penalty)?;
    let mut matrix = pattern.zeros();
    scatter_edges(&pattern, &mut matrix, &edges);
    Ok(matrix)
}

/// Element mass matrix `∫_K φ_i φ_j dσ_h`, block diagonal.
pub fn element_mass(mesh: &SurfaceMesh, space: &DgSpace, t: usize) -> Result<Vec<f64>> {
    let n = space.n_local();
    let map = space.element_map(mesh, t)?;
    let rule = triangle_rule((2 * space.degree()).max(1))?;
    Ok(symmetric_block(n, |i, j| {
        rule.iter()
            .map(|(p, w)| {
                let b = space.basis().evaluate(p);
                w * map.jacobian() * b.values[i] * b.values[j]
            })
            .sum()
    }))
}

#[derive(Debug, Clone)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `‖Mx - b‖ / ‖b‖` recomputed from the returned iterate.
    pub relative_residual: f64,
}

impl CgSolution {
    pub fn into_function(self, space: &DgSpace) -> DGFunction {
        DGFunction::from_coefficients(space, self.x)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients, stopping when `‖Mx - b‖ ≤ rel_tol ‖b‖`.
/// Gives up after `20 · dim` iterations, which signals an indefinite system.
pub fn solve_cg(system: &SparseSystem, rel_tol: f64) -> Result<CgSolution> {
    let m = &system.matrix;
    let b = &system.rhs;
    let n = m.dim();
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok(CgSolution { x: vec![0.0; n], iterations: 0, relative_residual: 0.0 });
    }
    let diag = m.diagonal();
    let inv_diag: Vec<f64> = diag
        .iter()
        .enumerate()
        .map(|(i, &d)| if d > 0.0 { Ok(1.0 / d) } else { Err(Error::SingularElement(i)) })
        .collect::<Result<_>>()?;

    let cap = 20 * n.max(1);
    let mut x = vec![0.0; n];
    let mut r = b.clone();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    loop {
        let residual = dot(&r, &r).sqrt() / b_norm;
        if residual <= rel_tol {
            // confirm with the true residual; recursion drift can hide a few digits
            let true_r: Vec<f64> = m.mul_vec(&x).iter().zip(b).map(|(a, bi)| bi - a).collect();
            let true_residual = dot(&true_r, &true_r).sqrt() / b_norm;
            if true_residual <= rel_tol {
                return Ok(CgSolution { x, iterations, relative_residual: true_residual });
            }
            r = true_r;
            z = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
            p = z.clone();
            rz = dot(&r, &z);
        }
        if iterations >= cap {
            return Err(Error::SolverNoConvergence { iterations, residual });
        }
        iterations += 1;
        m.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SolverNoConvergence { iterations, residual });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
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
}

/// Assembles and solves in one step.
pub fn solve(
    mesh: &SurfaceMesh,
    space: &DgSpace,
    surface: &LevelSetSurface,
    forcing: &(dyn Fn(&Vec3) -> Result<f64> + Sync),
    options: &AssemblyOptions,
    rel_tol: f64,
) -> Result<DGFunction> {
    let system = assemble(mesh, space, surface, forcing, options)?;
    Ok(solve_cg(&system, rel_tol)?.into_function(space))
}

/// CSR matrix from dense rows, keeping explicit zeros out. Intended for small tests.
pub fn csr_from_dense(rows: &[Vec<f64>]) -> CsrMatrix {
    let n = rows.len();
    let mut row_ptr = vec![0];
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    for row in rows {
        assert_eq!(row.len(), n, "matrix must be square");
        for (j, &v) in row.iter().enumerate() {
            if v != 0.0 {
                col_idx.push(j);
                values.push(v);
            }
        }
        row_ptr.push(col_idx.len());
    }
    CsrMatrix { n, row_ptr, col_idx, values }
}
