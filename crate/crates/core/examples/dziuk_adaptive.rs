//! Uniform against fixed-fraction refinement on the Dziuk surface, whose solution has an
//! exponential peak. The adaptive meshes, with their local indicators, are written as VTK
//! so the refinement pattern can be inspected in a viewer.
//!
//! ```text
//! cargo run --release --example dziuk_adaptive [output-dir]
//! ```

use std::path::PathBuf;

use surfdg::adapt::{run_standard, DiscretizationOptions, RefinementKind, RefinementPolicy};
use surfdg::mesh::write_vtk_file;
use surfdg::problems::dziuk_problem;

fn main() -> surfdg::Result<()> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("surfdg-dziuk"));
    std::fs::create_dir_all(&dir)?;
    let problem = dziuk_problem();
    let options = DiscretizationOptions::default();

    let uniform = RefinementPolicy { kind: RefinementKind::Uniform, max_iterations: 4, max_dofs: usize::MAX, ..Default::default() };
    let reference = run_standard(&problem, &uniform, &options, |_| Ok(()))?;
    println!("uniform");
    for r in &reference {
        println!("  {:>6} unknowns  dg error {:.4e}  efficiency {:.2}", r.dofs, r.dg_error, r.efficiency);
    }

    let adaptive = RefinementPolicy { max_dofs: reference.last().map_or(usize::MAX, |r| r.dofs), ..Default::default() };
    println!("fixed fraction, theta = {}", adaptive.theta);
    run_standard(&problem, &adaptive, &options, |state| {
        let r = state.report;
        println!("  {:>6} unknowns  dg error {:.4e}  efficiency {:.2}", r.dofs, r.dg_error, r.efficiency);
        let eta = state.indicators.element_indicators();
        write_vtk_file(
            dir.join(format!("adaptive_{:02}.vtk", r.level)),
            state.mesh,
            "fixed-fraction refinement",
            &[("indicator", &eta), ("G_K", &state.indicators.g_k)],
        )?;
        Ok(())
    })?;
    println!("wrote {}", dir.display());
    Ok(())
}
