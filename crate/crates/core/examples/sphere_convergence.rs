//! Uniform refinement on the unit sphere with `u = x₁x₂`: errors, estimator components and
//! their observed orders in `h`.
//!
//! ```text
//! cargo run --release --example sphere_convergence
//! ```

use surfdg::adapt::{run_standard, DiscretizationOptions, RefinementKind, RefinementPolicy};
use surfdg::cli::summary;
use surfdg::problems::sphere_problem;

fn main() -> surfdg::Result<()> {
    let policy = RefinementPolicy { kind: RefinementKind::Uniform, max_iterations: 5, max_dofs: usize::MAX, ..Default::default() };
    let reports = run_standard(&sphere_problem(), &policy, &DiscretizationOptions::default(), |state| {
        let r = state.report;
        println!(
            "level {}: {:>6} unknowns, dg error {:.4e}, L2 error {:.4e}, estimator {:.4e}",
            r.level, r.dofs, r.dg_error, r.l2_error, r.estimator_total
        );
        Ok(())
    })?;
    println!();
    print!("{}", summary("sphere", &policy, &reports));
    Ok(())
}
