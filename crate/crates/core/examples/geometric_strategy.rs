//! The geometric strategy on the Enzensberger-Stern surface: both drivers refine until the
//! estimator drops below the same target, and the geometric one skips linear solves while
//! the surface approximation dominates the estimate.
//!
//! ```text
//! cargo run --release --example geometric_strategy [target] [geom-tol]
//! ```

use surfdg::adapt::{run_geometric, run_standard, DiscretizationOptions, RefinementKind, RefinementPolicy};
use surfdg::problems::enzensberger_stern_problem;

fn main() -> surfdg::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<f64>());
    let target = args.next().transpose().ok().flatten().unwrap_or(2.2);
    let geom_tol = args.next().transpose().ok().flatten().unwrap_or(0.5);

    let problem = enzensberger_stern_problem();
    let options = DiscretizationOptions::default();
    let standard = RefinementPolicy { target_estimator: Some(target), max_iterations: 40, max_dofs: 500_000, ..Default::default() };
    let geometric = RefinementPolicy { kind: RefinementKind::Geometric, geom_tol, ..standard };

    for (name, policy) in [("standard", standard), ("geometric", geometric)] {
        println!("{name}");
        let show = |state: &surfdg::adapt::LevelState<'_>| {
            let r = state.report;
            println!(
                "  {:>6} unknowns  estimator {:.4e}  G share {:.3}  {}",
                r.dofs,
                r.estimator_total,
                state.indicators.geometric_ratio(),
                if r.solved { "solved" } else { "reused previous solution" }
            );
            Ok(())
        };
        let reports = if policy.kind == RefinementKind::Geometric {
            run_geometric(&problem, &policy, &options, show)?
        } else {
            run_standard(&problem, &policy, &options, show)?
        };
        println!("  {} linear solves", reports.last().map_or(0, |r| r.cumulative_solves));
    }
    Ok(())
}
