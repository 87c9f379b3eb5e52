//! Residual and geometric error indicators, true errors and the efficiency index.
//!
//! Every element carries four indicators:
//!
//! - `R_K² = ‖A_h‖_{∞,w_K} η_K²` with `η_K = h_K ‖R‖_K + h_K^{1/2} ‖r‖_{∂K}`,
//!   `R = f_h δ_h + Δ_Γh u_h - u_h δ_h` and `r = [∇_Γh u_h; n_h]`;
//! - `R_DG,K²`, the penalty jump `‖√β [u_h]‖²_{∂K}` weighted by patch suprema of the
//!   transport operators;
//! - `G_K² = ‖B_h ∇_Γh u_h‖²_K + ‖(1 - δ_h)(u_h - f_h)‖²_K`;
//! - `G_DG,K²`, jump terms weighted by the mismatch between discrete and lifted conormals.
//!
//! Suprema over patches and element boundaries are maxima over quadrature points. All
//! indicators are multiplied by the estimator constant `C`, so that the total satisfies
//! `total² = Σ_K (R_K² + R_DG,K² + G_K² + G_DG,K²)` for the scaled values as well.

use rayon::prelude::*;

use crate::assembly::edge_points;
use crate::dgspace::{edge_rule, triangle_rule, DGFunction, DgSpace};
use crate::geometry::{AmbientField, LevelSetSurface, LiftData};
use crate::linalg::spectral_norm;
use crate::mesh::SurfaceMesh;
use crate::{Error, Mat3, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorOptions {
    pub penalty: f64,
    /// Constant `C` multiplying every indicator.
    pub constant: f64,
    pub triangle_degree: usize,
    pub edge_degree: usize,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self { penalty: 10.0, constant: 1.0, triangle_degree: 4, edge_degree: 5 }
    }
}

/// Norms of the element residual `R` and of the normal-flux jump `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementResiduals {
    /// `‖R‖_{L²(K)}` per triangle.
    pub element: Vec<f64>,
    /// `‖r‖_{L²(e)}` per edge.
    pub edge: Vec<f64>,
    /// `η_K = h_K ‖R‖_K + h_K^{1/2} ‖r‖_{∂K}` per triangle.
    pub eta: Vec<f64>,
}

impl ElementResiduals {
    /// `(Σ_K h_K² ‖R‖²_K)^{1/2}`.
    pub fn weighted_element_norm(&self, mesh: &SurfaceMesh) -> f64 {
        self.element.iter().enumerate().map(|(t, r)| (mesh.h_triangle(t) * r).powi(2)).sum::<f64>().sqrt()
    }

    /// `(Σ_e ‖r‖²_e)^{1/2}`.
    pub fn jump_norm(&self) -> f64 {
        self.edge.iter().map(|r| r * r).sum::<f64>().sqrt()
    }
}

/// Per-triangle indicators and their aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSet {
    pub eta: Vec<f64>,
    pub r_k: Vec<f64>,
    pub r_dg: Vec<f64>,
    pub g_k: Vec<f64>,
    pub g_dg: Vec<f64>,
    pub total: f64,
    pub r_total: f64,
    pub r_dg_total: f64,
    pub g_total: f64,
    pub g_dg_total: f64,
}

impl IndicatorSet {
    fn from_parts(eta: Vec<f64>, r_k: Vec<f64>, r_dg: Vec<f64>, g_k: Vec<f64>, g_dg: Vec<f64>) -> Self {
        let l2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let (r_total, r_dg_total, g_total, g_dg_total) = (l2(&r_k), l2(&r_dg), l2(&g_k), l2(&g_dg));
        let total = (r_total.powi(2) + r_dg_total.powi(2) + g_total.powi(2) + g_dg_total.powi(2)).sqrt();
        Self { eta, r_k, r_dg, g_k, g_dg, total, r_total, r_dg_total, g_total, g_dg_total }
    }

    pub fn len(&self) -> usize {
        self.r_k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_k.is_empty()
    }

    /// `(R_K² + R_DG,K² + G_K² + G_DG,K²)^{1/2}`.
    pub fn element_indicator(&self, t: usize) -> f64 {
        (self.r_k[t].powi(2) + self.r_dg[t].powi(2) + self.g_k[t].powi(2) + self.g_dg[t].powi(2)).sqrt()
    }

    pub fn element_indicators(&self) -> Vec<f64> {
        (0..self.len()).map(|t| self.element_indicator(t)).collect()
    }

    /// Share of the geometric residual in the total, `(Σ G_K²)^{1/2} / total`.
    pub fn geometric_ratio(&self) -> f64 {
        if self.total > 0.0 {
            self.g_total / self.total
        } else {
            0.0
        }
    }
}

/// Energy-norm and `L²` errors on the lifted surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrueError {
    pub dg: f64,
    pub l2: f64,
}

/// Largest values of the quantities that measure how well `Γ_h` approximates `Γ`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GeometryDefects {
    pub distance: f64,
    pub one_minus_delta_h: f64,
    pub one_minus_delta_e: f64,
    pub p_minus_a_h: f64,
    pub b_h: f64,
}

type Forcing<'a> = &'a (dyn Fn(&Vec3) -> Result<f64> + Sync);

/// Values at one triangle quadrature point.
struct ElementPoint {
    weight: f64,
    lift: LiftData,
    u: f64,
    grad: Vec3,
    laplacian: f64,
}

fn element_points(
    u: &DGFunction,
    mesh: &SurfaceMesh,
    space: &DgSpace,
    surface: &LevelSetSurface,
    t: usize,
    degree: usize,
) -> Result<Vec<ElementPoint>> {
    let rule = triangle_rule(degree)?;
    let map = space.element_map(mesh, t)?;
    let mut points = Vec::with_capacity(rule.len());
    for (p, w) in rule.iter() {
        let b = space.basis().evaluate(p);
        let lift = surface.lift_data(&map.point(p), &map.normal)?;
        points.push(ElementPoint {
            weight: w * map.jacobian(),
            lift,
            u: u.value_at(t, &b),
            grad: map.surface_gradient(&u.reference_gradient_at(t, &b)),
            laplacian: map.surface_laplacian(&u.reference_hessian_at(t, &b)),
        });
    }
    Ok(points)
}

/// `R = f_h δ_h + Δ_Γh u_h - u_h δ_h` at a quadrature point.
fn residual(pt: &ElementPoint, f: f64) -> f64 {
    f * pt.lift.delta_h + pt.laplacian - pt.u * pt.lift.delta_h
}

/// Values at one edge quadrature point, seen from both sides.
struct EdgeSample {
    weight: f64,
    jump: f64,
    flux_jump: f64,
    /// Per side: `‖F_h‖`, `δ_e`, conormal-mismatch weight, curvature weight.
    side: [SideSample; 2],
}

#[derive(Clone, Copy)]
struct SideSample {
    f_norm: f64,
    delta_e: f64,
    conormal_weight: f64,
    curvature_weight: f64,
}

fn edge_samples(
    u: &DGFunction,
    mesh: &SurfaceMesh,
    space: &DgSpace,
    surface: &LevelSetSurface,
    e: usize,
    degree: usize,
) -> Result<Vec<EdgeSample>> {
    let edge = &mesh.edges()[e];
    let sides = [edge.plus, edge.minus];
    let maps = [space.element_map(mesh, sides[0].0)?, space.element_map(mesh, sides[1].0)?];
    let conormals = [mesh.conormal(sides[0].0, sides[0].1), mesh.conormal(sides[1].0, sides[1].1)];
    let [a, b] = edge.vertices;
    let tau = (mesh.vertices()[b] - mesh.vertices()[a]).normalize();
    let rule = edge_rule(degree)?;
    let mut out = Vec::with_capacity(rule.len());
    for q in edge_points(mesh, e, &rule) {
        let barys = [q.bary_plus, q.bary_minus];
        let x = maps[0].point(&barys[0]);
        let projection = surface.project(&x)?;
        let mut values = [0.0; 2];
        let mut fluxes = [0.0; 2];
        let mut side = [SideSample { f_norm: 0.0, delta_e: 0.0, conormal_weight: 0.0, curvature_weight: 0.0 }; 2];
        for s in 0..2 {
            let (t, _) = sides[s];
            let basis = space.basis().evaluate(&barys[s]);
            values[s] = u.value_at(t, &basis);
            fluxes[s] = maps[s].surface_gradient(&u.reference_gradient_at(t, &basis)).dot(&conormals[s]);
            let lift = projection.lift(&maps[s].normal)?;
            let edge_lift = lift.edge(&tau, &conormals[s])?;
            let transport: Mat3 = (lift.f_h * lift.p_h).transpose();
            side[s] = SideSample {
                f_norm: spectral_norm(&lift.f_h),
                delta_e: edge_lift.delta_e,
                conormal_weight: (transport * (edge_lift.n_inv_lift * edge_lift.delta_e - lift.p * conormals[s])).norm(),
                curvature_weight: lift.d.abs() * (transport * (lift.h * conormals[s])).norm(),
            };
        }
        out.push(EdgeSample { weight: q.weight, jump: values[0] - values[1], flux_jump: fluxes[0] + fluxes[1], side });
    }
    Ok(out)
}

/// `‖R‖_K`, `‖r‖_e` and `η_K` for a discrete solution.
pub fn element_residuals(
    u: &DGFunction,
    mesh: &SurfaceMesh,
    space: &DgSpace,
    surface: &LevelSetSurface,
    forcing: Forcing<'_>,
    options: &EstimatorOptions,
) -> Result<ElementResiduals> {
    let element: Vec<f64> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| {
            let mut sum = 0.0;
            for pt in element_points(u, mesh, space, surface, t, options.triangle_degree)? {
                let r = residual(&pt, forcing(&pt.lift.xi)?);
                sum += pt.weight * r * r;
            }
            Ok(sum.sqrt())
        })
        .collect::<Result<_>>()?;
    let edge: Vec<f64> = (0..mesh.n_edges())
        .into_par_iter()
        .map(|e| {
            let samples = edge_samples(u, mesh, space, surface, e, options.edge_degree)?;
            Ok(samples.iter().map(|s| s.weight * s.flux_jump * s.flux_jump).sum::<f64>().sqrt())
        })
        .collect::<Result<_>>()?;
    let eta = (0..mesh.n_triangles())
        .map(|t| {
            let h = mesh.h_triangle(t);
            let boundary = mesh.triangle_edges(t).iter().map(|&e| edge[e] * edge[e]).sum::<f64>().sqrt();
            h * element[t] + h.sqrt() * boundary
        })
        .collect();
    Ok(ElementResiduals { element, edge, eta })
}

/// Element-local data gathered before patch suprema are taken.
struct ElementData {
    r_norm: f64,
    g_sq: f64,
    a_max: f64,
    delta_max: f64,
    pullback_max: f64,
}

/// Edge integrals and per-side boundary suprema.
struct EdgeData {
    flux_sq: f64,
    jump_sq: f64,
    conormal_sq: f64,
    curvature_sq: f64,
    f_max: [f64; 2],
    delta_e_max: [f64; 2],
}

/// Computes all four indicator families for a discrete solution.
pub fn indicators(
    u: &DGFunction,
    mesh: &SurfaceMesh,
    space: &DgSpace,
    surface: &LevelSetSurface,
    forcing: Forcing<'_>,
    options: &EstimatorOptions,
) -> Result<IndicatorSet> {
    let elements: Vec<ElementData> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| {
            let points = element_points(u, mesh, space, surface, t, options.triangle_degree)?;
            let mut data = ElementData { r_norm: 0.0, g_sq: 0.0, a_max: 0.0, delta_max: 0.0, pullback_max: 0.0 };
            let mut r_sq = 0.0;
            for pt in &points {
                let lift = &pt.lift;
                let f = forcing(&lift.xi)?;
                let r = residual(pt, f);
                r_sq += pt.weight * r * r;
                let consistency = (lift.b_h * pt.grad).norm_squared();
                let data_term = ((1.0 - lift.delta_h) * (pt.u - f)).powi(2);
                data.g_sq += pt.weight * (consistency + data_term);
                data.a_max = data.a_max.max(spectral_norm(&lift.a_h));
                data.delta_max = data.delta_max.max(lift.delta_h.abs());
                data.pullback_max = data.pullback_max.max(spectral_norm(&lift.pullback()));
            }
            data.r_norm = r_sq.sqrt();
            Ok(data)
        })
        .collect::<Result<_>>()?;

    let edges: Vec<EdgeData> = (0..mesh.n_edges())
        .into_par_iter()
        .map(|e| {
            let samples = edge_samples(u, mesh, space, surface, e, options.edge_degree)?;
            let mut data = EdgeData {
                flux_sq: 0.0,
                jump_sq: 0.0,
                conormal_sq: 0.0,
                curvature_sq: 0.0,
                f_max: [0.0; 2],
                delta_e_max: [0.0; 2],
            };
            for s in &samples {
                let jump_sq = s.jump * s.jump;
                data.flux_sq += s.weight * s.flux_jump * s.flux_jump;
                data.jump_sq += s.weight * jump_sq;
                let conormal_avg = 0.5 * (s.side[0].conormal_weight + s.side[1].conormal_weight);
                let curvature_avg = 0.5 * (s.side[0].curvature_weight + s.side[1].curvature_weight);
                data.conormal_sq += s.weight * jump_sq * conormal_avg * conormal_avg;
                data.curvature_sq += s.weight * jump_sq * curvature_avg * curvature_avg;
                for k in 0..2 {
                    data.f_max[k] = data.f_max[k].max(s.side[k].f_norm);
                    data.delta_e_max[k] = data.delta_e_max[k].max(s.side[k].delta_e);
                }
            }
            Ok(data)
        })
        .collect::<Result<_>>()?;

    let patches = mesh.patches();
    let c = options.constant;
    let per_element: Vec<[f64; 5]> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| {
            let patch = &patches.element[t];
            let a_w = patch.iter().map(|&k| elements[k].a_max).fold(0.0, f64::max);
            let d_w = patch.iter().map(|&k| elements[k].delta_max).fold(0.0, f64::max);
            let q_w = patch.iter().map(|&k| elements[k].pullback_max).fold(0.0, f64::max);
            let h = mesh.h_triangle(t);

            let (mut flux_sq, mut penalty_sq, mut conormal_sq, mut curvature_sq) = (0.0, 0.0, 0.0, 0.0);
            let (mut f_b, mut e_b): (f64, f64) = (0.0, 0.0);
            for &e in &mesh.triangle_edges(t) {
                let data = &edges[e];
                let side = if mesh.edges()[e].plus.0 == t { 0 } else { 1 };
                flux_sq += data.flux_sq;
                penalty_sq += options.penalty / mesh.h_edge(e) * data.jump_sq;
                conormal_sq += data.conormal_sq;
                curvature_sq += data.curvature_sq;
                f_b = f_b.max(data.f_max[side]);
                e_b = e_b.max(data.delta_e_max[side]);
            }

            let eta = h * elements[t].r_norm + h.sqrt() * flux_sq.sqrt();
            let r_k = (a_w * eta * eta).sqrt();
            let transport = f_b * f_b * q_w * q_w * e_b * e_b;
            let r_dg = ((1.0 + transport + a_w * d_w * transport) * penalty_sq).sqrt();
            let g_k = elements[t].g_sq.sqrt();
            let g_dg = (d_w / (h * h) * (conormal_sq + curvature_sq)).sqrt();
            [eta, c * r_k, c * r_dg, c * g_k, c * g_dg]
        })
        .collect();

    let column = |k: usize| per_element.iter().map(|v| v[k]).collect::<Vec<_>>();
    Ok(IndicatorSet::from_parts(column(0), column(1), column(2), column(3), column(4)))
}

/// `‖u - u_h^l‖` in the DG norm of the lifted triangulation and in `L²(Γ)`.
pub fn true_dg_error(
    u: &DGFunction,
    exact: &dyn AmbientField,
    mesh: &SurfaceMesh,
    space: &DgSpace,
    surface: &LevelSetSurface,
    options: &EstimatorOptions,
) -> Result<TrueError> {
    let element: Vec<(f64, f64)> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| {
            let points = element_points(u, mesh, space, surface, t, options.triangle_degree)?;
            let (mut h1, mut l2) = (0.0, 0.0);
            for pt in &points {
                let lift = &pt.lift;
                let exact_grad = lift.p * exact.gradient(&lift.xi);
                let diff = exact.value(&lift.xi) - pt.u;
                let grad_diff = exact_grad - lift.f_h * pt.grad;
                let w = pt.weight * lift.delta_h;
                h1 += w * grad_diff.norm_squared();
                l2 += w * diff * diff;
            }
            Ok((h1, l2))
        })
        .collect::<Result<_>>()?;
    let jumps: Vec<f64> = (0..mesh.n_edges())
        .into_par_iter()
        .map(|e| {
            let samples = edge_samples(u, mesh, space, surface, e, options.edge_degree)?;
            let lifted_length: f64 = samples.iter().map(|s| s.weight * s.side[0].delta_e).sum();
            let jump_sq: f64 = samples.iter().map(|s| s.weight * s.side[0].delta_e * s.jump * s.jump).sum();
            Ok(jump_sq / lifted_length)
        })
        .collect::<Result<_>>()?;
    let l2: f64 = element.iter().map(|(_, l)| l).sum();
    let h1: f64 = element.iter().map(|(h, _)| h).sum();
    let jump: f64 = jumps.iter().sum();
    Ok(TrueError { dg: (h1 + l2 + jump).sqrt(), l2: l2.sqrt() })
}

/// `total / dg_error`.
pub fn efficiency_index(indicators: &IndicatorSet, dg_error: f64) -> Result<f64> {
    if dg_error == 0.0 {
        return Err(Error::DivisionByZero);
    }
    Ok(indicators.total / dg_error)
}

/// Maxima of `|d|`, `|1 - δ_h|`, `|1 - δ_e|`, `‖P - A_h‖` and `‖B_h‖` over the quadrature
/// points of all triangles and edges.
pub fn geometry_defects(mesh: &SurfaceMesh, surface: &LevelSetSurface, options: &EstimatorOptions) -> Result<GeometryDefects> {
    let rule = triangle_rule(options.triangle_degree)?;
    let erule = edge_rule(options.edge_degree)?;
    let per_triangle: Vec<GeometryDefects> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| {
            let nu_h = mesh.normal(t);
            let mut g = GeometryDefects::default();
            for (p, _) in rule.iter() {
                let lift = surface.lift_data(&mesh.point(t, p), &nu_h)?;
                g.distance = g.distance.max(lift.d.abs());
                g.one_minus_delta_h = g.one_minus_delta_h.max((1.0 - lift.delta_h).abs());
                g.p_minus_a_h = g.p_minus_a_h.max(spectral_norm(&(lift.p - lift.a_h)));
                g.b_h = g.b_h.max(spectral_norm(&lift.b_h));
            }
            for (i, &e) in mesh.triangle_edges(t).iter().enumerate() {
                let [a, b] = mesh.edges()[e].vertices;
                let tau = (mesh.vertices()[b] - mesh.vertices()[a]).normalize();
                let n_h = mesh.conormal(t, i);
                for (p, _) in erule.iter() {
                    let bary = mesh.edge_point_barycentric(t, i, p[1]);
                    let lift = surface.lift_data(&mesh.point(t, &bary), &nu_h)?;
                    let edge = lift.edge(&tau, &n_h)?;
                    g.one_minus_delta_e = g.one_minus_delta_e.max((1.0 - edge.delta_e).abs());
                }
            }
            Ok(g)
        })
        .collect::<Result<_>>()?;
    Ok(per_triangle.iter().fold(GeometryDefects::default(), |acc, g| GeometryDefects {
        distance: acc.distance.max(g.distance),
        one_minus_delta_h: acc.one_minus_delta_h.max(g.one_minus_delta_h),
        one_minus_delta_e: acc.one_minus_delta_e.max(g.one_minus_delta_e),
        p_minus_a_h: acc.p_minus_a_h.max(g.p_minus_a_h),
        b_h: acc.b_h.max(g.b_h),
    }))
}
