//! Solving on a user-defined surface: an ellipsoid given by its level-set function.
//!
//! The mesh is an icosphere pushed onto the ellipsoid; the exact solution `u = x₁x₂`
//! defines the forcing. Each uniform level prints the true error, the estimate and its
//! efficiency.
//!
//! ```text
//! cargo run --example custom_surface
//! ```

use surfdg::assembly::{solve, AssemblyOptions};
use surfdg::dgspace::DgSpace;
use surfdg::estimator::{indicators, true_dg_error, EstimatorOptions};
use surfdg::geometry::{surface_forcing, ClosureField, LevelSetSurface};
use surfdg::mesh::{icosphere, project_to_surface, refine_uniform};
use surfdg::{Error, Mat3, Vec3};

fn main() -> surfdg::Result<()> {
    let axes = Vec3::new(1.5, 1.0, 0.7);
    let inv = axes.map(|a| 1.0 / (a * a));
    let surface = LevelSetSurface::user(
        move |x| x.component_mul(x).dot(&inv) - 1.0,
        move |x| x.component_mul(&inv) * 2.0,
        move |_| Mat3::from_diagonal(&(inv * 2.0)),
        1.5,
    );
    let exact = ClosureField::new(
        |x| x[0] * x[1],
        |x| Vec3::new(x[1], x[0], 0.0),
        |_| Mat3::new(0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0),
    );
    let forcing = |xi: &Vec3| surface_forcing(&surface, &exact, xi).map_err(Error::from);

    let space = DgSpace::new(1);
    let mut mesh = project_to_surface(&icosphere(1), &surface)?;
    println!("{:>8} {:>12} {:>12} {:>10}", "dofs", "dg error", "estimator", "efficiency");
    for _ in 0..4 {
        let u = solve(&mesh, &space, &surface, &forcing, &AssemblyOptions::default(), 1e-10)?;
        let options = EstimatorOptions::default();
        let error = true_dg_error(&u, &exact, &mesh, &space, &surface, &options)?;
        let estimate = indicators(&u, &mesh, &space, &surface, &forcing, &options)?;
        println!(
            "{:>8} {:>12.4e} {:>12.4e} {:>10.3}",
            space.dofs(&mesh),
            error.dg,
            estimate.total,
            estimate.total / error.dg
        );
        mesh = refine_uniform(&mesh, &surface)?.mesh;
    }
    Ok(())
}
