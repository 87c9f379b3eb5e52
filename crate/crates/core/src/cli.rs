//! Command line front end: configuration, run orchestration and report files.
//!
//! A run writes three kinds of files into the output directory:
//!
//! * `levels.csv`: one row per level with the columns of [`CSV_HEADER`]; missing values are
//!   written as `nan`,
//! * `level_<k>.vtk`: the mesh of level `k` with the local indicators as cell data,
//! * `summary.txt`: convergence orders of every error and estimator column and the final
//!   efficiency index.
//!
//! Settings may also come from a flat `key = value` file passed with `--config`; keys are
//! the long flag names without dashes (`geom-tol` or `geom_tol`), `#` starts a comment and
//! flags on the command line take precedence.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Parser;

use crate::adapt::{run, DiscretizationOptions, LevelReport, LevelState, RefinementKind, RefinementPolicy};
use crate::mesh::write_vtk_file;
use crate::problems::{by_name, BenchmarkProblem};
use crate::{Error, Result};

pub const CSV_HEADER: &str =
    "level,dofs,n_triangles,h_max,dg_error,l2_error,estimator_total,R,R_DG,G,G_DG,efficiency,cumulative_solves,wall_time,solved";

#[derive(Debug, Default, Parser)]
#[command(name = "surfdg", version, about = "Adaptive interior-penalty DG for -Δu + u = f on implicit surfaces")]
struct Flags {
    /// Benchmark problem: sphere, dziuk or enzensberger-stern.
    #[arg(long)]
    problem: Option<String>,
    /// Refinement strategy: uniform, fixed-fraction or geometric.
    #[arg(long)]
    refine: Option<String>,
    /// Fraction of elements marked per step.
    #[arg(long)]
    theta: Option<f64>,
    /// Geometric share of the estimator below which the geometric strategy solves again.
    #[arg(long)]
    geom_tol: Option<f64>,
    /// Largest number of unknowns solved for.
    #[arg(long)]
    max_dofs: Option<usize>,
    /// Largest number of levels.
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Stop once a solved level's estimator is at or below this value.
    #[arg(long)]
    target_estimator: Option<f64>,
    /// Interior penalty parameter.
    #[arg(long)]
    penalty: Option<f64>,
    /// Constant multiplying every indicator.
    #[arg(long)]
    estimator_c: Option<f64>,
    /// Polynomial degree (only 1 is supported).
    #[arg(long)]
    degree: Option<usize>,
    /// Exactness degree of the triangle quadrature.
    #[arg(long)]
    triangle_quadrature: Option<usize>,
    /// Exactness degree of the edge quadrature.
    #[arg(long)]
    edge_quadrature: Option<usize>,
    /// Relative residual tolerance of the linear solver.
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Worker threads for assembly and estimation.
    #[arg(long)]
    threads: Option<usize>,
    /// Write zero wall times so reruns produce identical files.
    #[arg(long)]
    no_timing: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat key=value file with defaults for the flags above.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// A validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: String,
    pub policy: RefinementPolicy,
    pub options: DiscretizationOptions,
    pub threads: usize,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: "sphere".into(),
            policy: RefinementPolicy::default(),
            options: DiscretizationOptions::default(),
            threads: 1,
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.policy.validate()?;
        by_name(&self.problem)?;
        let o = &self.options;
        if o.degree != 1 {
            return Err(Error::Usage(format!("degree: only 1 is supported, got {}", o.degree)));
        }
        if !(o.penalty > 0.0) {
            return Err(Error::Usage(format!("penalty must be positive, got {}", o.penalty)));
        }
        if !(o.estimator_constant > 0.0) {
            return Err(Error::Usage(format!("estimator-c must be positive, got {}", o.estimator_constant)));
        }
        if !(o.rel_tol > 0.0 && o.rel_tol < 1.0) {
            return Err(Error::Usage(format!("rel-tol must lie in (0, 1), got {}", o.rel_tol)));
        }
        crate::dgspace::triangle_rule(o.triangle_degree)
            .and_then(|_| crate::dgspace::edge_rule(o.edge_degree))
            .map_err(|e| Error::Usage(e.to_string()))?;
        if self.threads == 0 {
            return Err(Error::Usage("threads must be at least 1".into()));
        }
        Ok(())
    }
}

const FILE_KEYS: &[&str] = &[
    "problem",
    "refine",
    "theta",
    "geom-tol",
    "max-dofs",
    "max-iterations",
    "target-estimator",
    "penalty",
    "estimator-c",
    "degree",
    "triangle-quadrature",
    "edge-quadrature",
    "rel-tol",
    "threads",
    "timing",
    "out",
];

/// Parses a flat `key = value` text into normalised keys.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut entries = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("config line {}: expected key = value", i + 1)))?;
        let key = key.trim().replace('_', "-");
        if !FILE_KEYS.contains(&key.as_str()) {
            return Err(Error::Usage(format!("config line {}: unknown key '{key}'", i + 1)));
        }
        entries.insert(key, value.trim().to_string());
    }
    Ok(entries)
}

fn value<T: FromStr>(flag: Option<T>, file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    if flag.is_some() {
        return Ok(flag);
    }
    file.get(key)
        .map(|v| v.parse::<T>().map_err(|_| Error::Usage(format!("invalid value '{v}' for '{key}'"))))
        .transpose()
}

/// Builds a configuration from command line arguments (including the program name) and
/// the file named by `--config`, if any.
pub fn parse_config<I, T>(args: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let flags = Flags::try_parse_from(args).map_err(|e| Error::Usage(e.to_string()))?;
    let file = match &flags.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Usage(format!("cannot read config file {}: {e}", path.display())))?;
            parse_config_text(&text)?
        }
        None => BTreeMap::new(),
    };
    merge(flags, &file)
}

fn merge(flags: Flags, file: &BTreeMap<String, String>) -> Result<RunConfig> {
    let mut config = RunConfig::default();
    let problem = value(flags.problem, file, "problem")?;
    config.problem = problem.ok_or_else(|| Error::Usage("missing --problem".into()))?;
    if let Some(kind) = value(flags.refine, file, "refine")? {
        config.policy.kind = RefinementKind::parse(&kind)
            .ok_or_else(|| Error::Usage(format!("refine: unknown strategy '{kind}'")))?;
    }
    let policy = &mut config.policy;
    policy.theta = value(flags.theta, file, "theta")?.unwrap_or(policy.theta);
    policy.geom_tol = value(flags.geom_tol, file, "geom-tol")?.unwrap_or(policy.geom_tol);
    policy.max_dofs = value(flags.max_dofs, file, "max-dofs")?.unwrap_or(policy.max_dofs);
    policy.max_iterations = value(flags.max_iterations, file, "max-iterations")?.unwrap_or(policy.max_iterations);
    policy.target_estimator = value(flags.target_estimator, file, "target-estimator")?.or(policy.target_estimator);
    let options = &mut config.options;
    options.penalty = value(flags.penalty, file, "penalty")?.unwrap_or(options.penalty);
    options.estimator_constant = value(flags.estimator_c, file, "estimator-c")?.unwrap_or(options.estimator_constant);
    options.degree = value(flags.degree, file, "degree")?.unwrap_or(options.degree);
    options.triangle_degree =
        value(flags.triangle_quadrature, file, "triangle-quadrature")?.unwrap_or(options.triangle_degree);
    options.edge_degree = value(flags.edge_quadrature, file, "edge-quadrature")?.unwrap_or(options.edge_degree);
    options.rel_tol = value(flags.rel_tol, file, "rel-tol")?.unwrap_or(options.rel_tol);
    options.timing = if flags.no_timing { false } else { value(None, file, "timing")?.unwrap_or(true) };
    config.threads = value(flags.threads, file, "threads")?.unwrap_or(config.threads);
    config.out = value(flags.out, file, "out")?.unwrap_or(config.out);
    config.validate()?;
    Ok(config)
}

fn number(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.12e}")
    }
}

/// One CSV row in the column order of [`CSV_HEADER`].
pub fn csv_row(r: &LevelReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.level,
        r.dofs,
        r.n_triangles,
        number(r.h_max),
        number(r.dg_error),
        number(r.l2_error),
        number(r.estimator_total),
        number(r.r),
        number(r.r_dg),
        number(r.g),
        number(r.g_dg),
        number(r.efficiency),
        r.cumulative_solves,
        number(r.wall_time),
        r.solved,
    )
}

/// Convergence order between consecutive rows: in `h` for uniform runs, otherwise the
/// slope against the number of unknowns scaled to an `h`-equivalent.
pub fn convergence_orders(reports: &[LevelReport], uniform: bool, column: impl Fn(&LevelReport) -> f64) -> Vec<f64> {
    reports
        .windows(2)
        .map(|w| {
            let ratio = (column(&w[0]) / column(&w[1])).ln();
            if uniform {
                ratio / (w[0].h_max / w[1].h_max).ln()
            } else {
                -2.0 * ratio / (w[0].dofs as f64 / w[1].dofs as f64).ln()
            }
        })
        .collect()
}

type Column = fn(&LevelReport) -> f64;

/// Plain-text summary: order table and the final efficiency index.
pub fn summary(problem: &str, policy: &RefinementPolicy, reports: &[LevelReport]) -> String {
    let uniform = policy.kind == RefinementKind::Uniform;
    // orders are only meaningful between levels whose solution was computed on that level
    let solved: Vec<LevelReport> = reports.iter().filter(|r| r.solved).cloned().collect();
    let columns: [(&str, Column); 7] = [
        ("dg_error", |r| r.dg_error),
        ("l2_error", |r| r.l2_error),
        ("estimator", |r| r.estimator_total),
        ("R", |r| r.r),
        ("R_DG", |r| r.r_dg),
        ("G", |r| r.g),
        ("G_DG", |r| r.g_dg),
    ];
    let mut out = String::new();
    let _ = writeln!(out, "problem: {problem}");
    let _ = writeln!(out, "refinement: {}", policy.kind.name());
    let _ = writeln!(
        out,
        "orders: {}",
        if uniform { "log(e_(k-1)/e_k) / log(h_(k-1)/h_k)" } else { "-2 log(e_(k-1)/e_k) / log(N_(k-1)/N_k)" }
    );
    let _ = writeln!(out);
    let _ = write!(out, "{:>5} {:>9}", "level", "dofs");
    for (name, _) in &columns {
        let _ = write!(out, " {name:>10}");
    }
    let _ = writeln!(out);
    let orders: Vec<Vec<f64>> = columns.iter().map(|(_, f)| convergence_orders(&solved, uniform, f)).collect();
    for (i, r) in solved.iter().enumerate() {
        let _ = write!(out, "{:>5} {:>9}", r.level, r.dofs);
        for column in &orders {
            match i.checked_sub(1).map(|j| column[j]) {
                Some(eoc) if eoc.is_finite() => {
                    let _ = write!(out, " {eoc:>10.3}");
                }
                _ => {
                    let _ = write!(out, " {:>10}", "-");
                }
            }
        }
        let _ = writeln!(out);
    }
    let _ = writeln!(out);
    let last_efficiency = solved.iter().rev().map(|r| r.efficiency).find(|e| e.is_finite());
    match last_efficiency {
        Some(e) => {
            let _ = writeln!(out, "final efficiency index: {e:.6}");
        }
        None => {
            let _ = writeln!(out, "final efficiency index: n/a");
        }
    }
    if let Some(last) = reports.last() {
        let _ = writeln!(out, "linear solves: {}", last.cumulative_solves);
    }
    out
}

fn write_level_vtk(dir: &Path, state: &LevelState<'_>) -> Result<()> {
    let set = state.indicators;
    let eta = set.element_indicators();
    let fields: [(&str, &[f64]); 5] =
        [("indicator", &eta), ("R_K", &set.r_k), ("R_DG", &set.r_dg), ("G_K", &set.g_k), ("G_DG", &set.g_dg)];
    let path = dir.join(format!("level_{}.vtk", state.report.level));
    Ok(write_vtk_file(&path, state.mesh, &format!("level {}", state.report.level), &fields)?)
}

/// Runs a validated configuration and writes its report files. Rows and meshes are
/// written as levels complete, so a failing run leaves the levels reached so far.
pub fn run_config(config: &RunConfig) -> Result<Vec<LevelReport>> {
    config.validate()?;
    let problem: BenchmarkProblem = by_name(&config.problem)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start {} threads: {e}", config.threads)))?;
    fs::create_dir_all(&config.out)?;
    let mut csv = BufWriter::new(File::create(config.out.join("levels.csv"))?);
    writeln!(csv, "{CSV_HEADER}")?;
    csv.flush()?;
    let mut written = Vec::new();
    let result = pool.install(|| {
        run(&problem, &config.policy, &config.options, |state| {
            writeln!(csv, "{}", csv_row(state.report))?;
            csv.flush()?;
            write_level_vtk(&config.out, state)?;
            written.push(state.report.clone());
            Ok(())
        })
    });
    fs::write(config.out.join("summary.txt"), summary(&config.problem, &config.policy, &written))?;
    result
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    if let Err(e) = Flags::try_parse_from(&args) {
        if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) {
            let _ = e.print();
            return 0;
        }
    }
    let outcome = parse_config(args).and_then(|config| {
        let reports = run_config(&config)?;
        if let Some(last) = reports.last() {
            println!(
                "{} levels, {} unknowns, estimator {:.4e}, wrote {}",
                reports.len(),
                last.dofs,
                last.estimator_total,
                config.out.display()
            );
        }
        Ok(())
    });
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("surfdg: {e}");
            e.exit_code()
        }
    }
}
