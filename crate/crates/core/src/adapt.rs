//! Fixed-fraction marking and the adaptive drivers.
//!
//! [`run_standard`] solves on every mesh. [`run_geometric`] refines on the geometric
//! indicator `G_K` alone, without new linear solves, while the geometric residual
//! dominates the estimate; between solves the last solution is carried to the refined
//! mesh unchanged (it is piecewise polynomial on the parent, hence on every child).

use std::time::Instant;

use crate::assembly::{solve, AssemblyOptions};
use crate::dgspace::{DGFunction, DgSpace};
use crate::estimator::{efficiency_index, indicators, true_dg_error, EstimatorOptions, IndicatorSet, TrueError};
use crate::mesh::{bisect, refine_uniform, Refinement, SurfaceMesh};
use crate::problems::BenchmarkProblem;
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefinementKind {
    Uniform,
    FixedFraction,
    Geometric,
}

impl RefinementKind {
    pub fn name(self) -> &'static str {
        match self {
            RefinementKind::Uniform => "uniform",
            RefinementKind::FixedFraction => "fixed-fraction",
            RefinementKind::Geometric => "geometric",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "uniform" => Some(RefinementKind::Uniform),
            "fixed-fraction" | "fixed_fraction" => Some(RefinementKind::FixedFraction),
            "geometric" => Some(RefinementKind::Geometric),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementPolicy {
    pub kind: RefinementKind,
    /// Fraction of elements marked per step, in `(0, 1]`.
    pub theta: f64,
    /// Largest admissible share `(Σ G_K²)^{1/2} / total` before a solve, in `(0, 1)`.
    pub geom_tol: f64,
    /// No mesh with more unknowns than this is solved.
    pub max_dofs: usize,
    /// Upper bound on meshes visited (solved or not).
    pub max_iterations: usize,
    /// Stop once a solved mesh has an estimator at or below this value.
    pub target_estimator: Option<f64>,
}

impl Default for RefinementPolicy {
    fn default() -> Self {
        Self {
            kind: RefinementKind::FixedFraction,
            theta: 0.3,
            geom_tol: 0.5,
            max_dofs: 50_000,
            max_iterations: 30,
            target_estimator: None,
        }
    }
}

impl RefinementPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Usage(format!("theta must lie in (0, 1], got {}", self.theta)));
        }
        if !(self.geom_tol > 0.0 && self.geom_tol < 1.0) {
            return Err(Error::Usage(format!("geom-tol must lie in (0, 1), got {}", self.geom_tol)));
        }
        if self.max_iterations == 0 {
            return Err(Error::Usage("max-iterations must be at least 1".into()));
        }
        if let Some(t) = self.target_estimator {
            if !(t > 0.0) {
                return Err(Error::Usage(format!("target-estimator must be positive, got {t}")));
            }
        }
        Ok(())
    }
}

/// Discretisation and solver settings shared by all levels of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscretizationOptions {
    pub degree: usize,
    pub penalty: f64,
    pub estimator_constant: f64,
    pub triangle_degree: usize,
    pub edge_degree: usize,
    pub rel_tol: f64,
    /// Record per-level wall time; switched off for byte-reproducible output.
    pub timing: bool,
}

impl Default for DiscretizationOptions {
    fn default() -> Self {
        Self {
            degree: 1,
            penalty: 10.0,
            estimator_constant: 1.0,
            triangle_degree: 4,
            edge_degree: 5,
            rel_tol: 1e-10,
            timing: true,
        }
    }
}

impl DiscretizationOptions {
    pub fn assembly(&self) -> AssemblyOptions {
        AssemblyOptions { penalty: self.penalty, triangle_degree: self.triangle_degree, edge_degree: self.edge_degree }
    }

    pub fn estimator(&self) -> EstimatorOptions {
        EstimatorOptions {
            penalty: self.penalty,
            constant: self.estimator_constant,
            triangle_degree: self.triangle_degree,
            edge_degree: self.edge_degree,
        }
    }

    /// Settings with the triangle quadrature raised to what `problem` asks for.
    pub fn for_problem(mut self, problem: &BenchmarkProblem) -> Self {
        self.triangle_degree = self.triangle_degree.max(problem.quadrature_degree);
        self
    }
}

/// One row of a run: a mesh and the estimate on it.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelReport {
    pub level: usize,
    pub dofs: usize,
    pub n_triangles: usize,
    pub h_max: f64,
    /// `NaN` when no exact solution is known or the level was not solved.
    pub dg_error: f64,
    pub l2_error: f64,
    pub estimator_total: f64,
    pub r: f64,
    pub r_dg: f64,
    pub g: f64,
    pub g_dg: f64,
    pub efficiency: f64,
    pub cumulative_solves: usize,
    /// Seconds spent on this level.
    pub wall_time: f64,
    /// Whether the estimate used a solution computed on this mesh.
    pub solved: bool,
}

/// Everything known about a level, handed to the observer of a run.
pub struct LevelState<'a> {
    pub report: &'a LevelReport,
    pub mesh: &'a SurfaceMesh,
    pub solution: &'a DGFunction,
    pub indicators: &'a IndicatorSet,
}

/// Indices of the `⌈θN⌉` largest values, ties broken towards lower indices, returned in
/// increasing index order.
pub fn mark_fixed_fraction(values: &[f64], theta: f64) -> Vec<usize> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    // the small offset keeps θN that is integral up to round-off from rounding up
    let count = ((theta * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut marked = order[..count].to_vec();
    marked.sort_unstable();
    marked
}

/// Carries a discrete function to a refined mesh; exact since every child lies in its
/// parent and the function is polynomial there.
pub fn prolongate(u: &DGFunction, space: &DgSpace, refinement: &Refinement) -> DGFunction {
    space.project(refinement.mesh.n_triangles(), |t, bary| {
        let pb = &refinement.parent_bary[t];
        let mut parent = [0.0; 3];
        for (k, weight) in bary.iter().enumerate() {
            for j in 0..3 {
                parent[j] += weight * pb[k][j];
            }
        }
        space.eval(u, refinement.parent[t], &parent)
    })
}

struct Context<'a> {
    problem: &'a BenchmarkProblem,
    options: DiscretizationOptions,
    space: DgSpace,
    start: Instant,
}

impl Context<'_> {
    fn new<'a>(problem: &'a BenchmarkProblem, options: &DiscretizationOptions) -> Result<Context<'a>> {
        if options.degree != 1 {
            return Err(Error::Usage(format!("only degree 1 is supported, got {}", options.degree)));
        }
        Ok(Context { problem, options: options.for_problem(problem), space: DgSpace::new(options.degree), start: Instant::now() })
    }

    fn forcing(&self) -> impl Fn(&Vec3) -> Result<f64> + Sync + '_ {
        |xi: &Vec3| self.problem.forcing_at(xi)
    }

    fn solve(&self, mesh: &SurfaceMesh) -> Result<DGFunction> {
        let u = solve(mesh, &self.space, &self.problem.surface, &self.forcing(), &self.options.assembly(), self.options.rel_tol)?;
        if !u.is_finite() {
            return Err(Error::SolverNoConvergence { iterations: 0, residual: f64::NAN });
        }
        Ok(u)
    }

    fn estimate(&self, mesh: &SurfaceMesh, u: &DGFunction) -> Result<IndicatorSet> {
        indicators(u, mesh, &self.space, &self.problem.surface, &self.forcing(), &self.options.estimator())
    }

    fn errors(&self, mesh: &SurfaceMesh, u: &DGFunction) -> Result<Option<TrueError>> {
        match &self.problem.exact_u {
            Some(exact) => Ok(Some(true_dg_error(
                u,
                exact.as_ref(),
                mesh,
                &self.space,
                &self.problem.surface,
                &self.options.estimator(),
            )?)),
            None => Ok(None),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn report(
        &mut self,
        level: usize,
        mesh: &SurfaceMesh,
        set: &IndicatorSet,
        errors: Option<TrueError>,
        solves: usize,
        solved: bool,
    ) -> Result<LevelReport> {
        let (dg, l2) = errors.map_or((f64::NAN, f64::NAN), |e| (e.dg, e.l2));
        let efficiency = if dg.is_nan() { f64::NAN } else { efficiency_index(set, dg)? };
        let wall_time = if self.options.timing { self.start.elapsed().as_secs_f64() } else { 0.0 };
        self.start = Instant::now();
        Ok(LevelReport {
            level,
            dofs: self.space.dofs(mesh),
            n_triangles: mesh.n_triangles(),
            h_max: mesh.h_max(),
            dg_error: dg,
            l2_error: l2,
            estimator_total: set.total,
            r: set.r_total,
            r_dg: set.r_dg_total,
            g: set.g_total,
            g_dg: set.g_dg_total,
            efficiency,
            cumulative_solves: solves,
            wall_time,
            solved,
        })
    }
}

fn target_reached(policy: &RefinementPolicy, set: &IndicatorSet) -> bool {
    policy.target_estimator.is_some_and(|t| set.total <= t)
}

/// Solve, estimate, mark and refine on every level (uniform or fixed-fraction marking).
///
/// `on_level` sees each level as soon as it is complete, so partial results survive a
/// failure further on.
pub fn run_standard(
    problem: &BenchmarkProblem,
    policy: &RefinementPolicy,
    options: &DiscretizationOptions,
    mut on_level: impl FnMut(&LevelState<'_>) -> Result<()>,
) -> Result<Vec<LevelReport>> {
    policy.validate()?;
    if policy.kind == RefinementKind::Geometric {
        return Err(Error::Usage("run_standard needs uniform or fixed-fraction refinement".into()));
    }
    let mut ctx = Context::new(problem, options)?;
    let mut mesh = problem.initial_mesh()?;
    problem.check_forcing(&mesh)?;
    let mut reports = Vec::new();
    for level in 0..policy.max_iterations {
        if ctx.space.dofs(&mesh) > policy.max_dofs {
            break;
        }
        let u = ctx.solve(&mesh)?;
        let set = ctx.estimate(&mesh, &u)?;
        let errors = ctx.errors(&mesh, &u)?;
        let report = ctx.report(level, &mesh, &set, errors, level + 1, true)?;
        on_level(&LevelState { report: &report, mesh: &mesh, solution: &u, indicators: &set })?;
        reports.push(report);
        if target_reached(policy, &set) || level + 1 == policy.max_iterations {
            break;
        }
        mesh = match policy.kind {
            RefinementKind::Uniform => refine_uniform(&mesh, &problem.surface)?.mesh,
            _ => bisect(&mesh, &mark_fixed_fraction(&set.element_indicators(), policy.theta), &problem.surface)?.mesh,
        };
    }
    Ok(reports)
}

/// Geometric strategy: after the initial solve, refine on `G_K` and re-estimate with the
/// carried-over solution until `(Σ G_K²)^{1/2} / total ≤ geom_tol`; only then solve again
/// and mark on the full indicator.
pub fn run_geometric(
    problem: &BenchmarkProblem,
    policy: &RefinementPolicy,
    options: &DiscretizationOptions,
    mut on_level: impl FnMut(&LevelState<'_>) -> Result<()>,
) -> Result<Vec<LevelReport>> {
    policy.validate()?;
    let mut ctx = Context::new(problem, options)?;
    let mut mesh = problem.initial_mesh()?;
    problem.check_forcing(&mesh)?;

    let mut u = ctx.solve(&mesh)?;
    let mut solves = 1;
    let mut set = ctx.estimate(&mesh, &u)?;
    let errors = ctx.errors(&mesh, &u)?;
    let report = ctx.report(0, &mesh, &set, errors, solves, true)?;
    on_level(&LevelState { report: &report, mesh: &mesh, solution: &u, indicators: &set })?;
    let mut reports = vec![report];
    let mut solved = true;

    for level in 1..policy.max_iterations {
        if solved && target_reached(policy, &set) {
            return Ok(reports);
        }
        let values = if solved { set.element_indicators() } else { set.g_k.clone() };
        let refinement = bisect(&mesh, &mark_fixed_fraction(&values, policy.theta), &problem.surface)?;
        if ctx.space.dofs(&refinement.mesh) > policy.max_dofs {
            return finish(reports, solved, level);
        }
        u = prolongate(&u, &ctx.space, &refinement);
        mesh = refinement.mesh;
        set = ctx.estimate(&mesh, &u)?;
        solved = set.geometric_ratio() <= policy.geom_tol;
        let errors = if solved {
            u = ctx.solve(&mesh)?;
            solves += 1;
            set = ctx.estimate(&mesh, &u)?;
            ctx.errors(&mesh, &u)?
        } else {
            None
        };
        let report = ctx.report(level, &mesh, &set, errors, solves, solved)?;
        on_level(&LevelState { report: &report, mesh: &mesh, solution: &u, indicators: &set })?;
        reports.push(report);
    }
    if solved && target_reached(policy, &set) {
        return Ok(reports);
    }
    finish(reports, solved, policy.max_iterations)
}

fn finish(reports: Vec<LevelReport>, solved: bool, iterations: usize) -> Result<Vec<LevelReport>> {
    if solved {
        Ok(reports)
    } else {
        Err(Error::NonTermination { iterations })
    }
}

/// Dispatches on the policy's kind.
pub fn run(
    problem: &BenchmarkProblem,
    policy: &RefinementPolicy,
    options: &DiscretizationOptions,
    on_level: impl FnMut(&LevelState<'_>) -> Result<()>,
) -> Result<Vec<LevelReport>> {
    match policy.kind {
        RefinementKind::Geometric => run_geometric(problem, policy, options, on_level),
        _ => run_standard(problem, policy, options, on_level),
    }
}
