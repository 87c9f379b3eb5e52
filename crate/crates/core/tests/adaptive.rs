use surfdg::adapt::{run_geometric, run_standard, DiscretizationOptions, RefinementKind, RefinementPolicy};
use surfdg::problems::{dziuk_problem, enzensberger_stern_problem, sphere_problem};
use surfdg::Error;

fn options() -> DiscretizationOptions {
    DiscretizationOptions { timing: false, ..Default::default() }
}

#[test]
fn dziuk_fixed_fraction_estimator_decreases() {
    let policy = RefinementPolicy { max_iterations: 8, ..Default::default() };
    let reports = run_standard(&dziuk_problem(), &policy, &options(), |_| Ok(())).unwrap();
    assert_eq!(reports.len(), 8);
    // the first bisection of the coarse mesh creates a few badly lifted elements, after
    // which the estimate decreases on every level
    for pair in reports[1..].windows(2) {
        assert!(pair[1].estimator_total < pair[0].estimator_total, "{pair:?}");
    }
    for pair in reports.windows(2) {
        assert!(pair[1].dofs > pair[0].dofs);
        assert!(pair[1].dg_error < pair[0].dg_error);
    }
}

#[test]
fn geometric_run_counts_only_real_solves() {
    let policy = RefinementPolicy {
        kind: RefinementKind::Geometric,
        geom_tol: 0.3,
        max_iterations: 6,
        ..Default::default()
    };
    let mut seen = Vec::new();
    let result = run_geometric(&enzensberger_stern_problem(), &policy, &options(), |state| {
        seen.push((state.report.solved, state.report.cumulative_solves));
        Ok(())
    });
    // with this tolerance the geometry is still unresolved after six meshes
    assert!(matches!(result, Err(Error::NonTermination { .. })), "{result:?}");
    assert_eq!(seen[0], (true, 1));
    assert!(seen[1..].iter().all(|&(solved, solves)| !solved && solves == 1));
}

#[test]
fn target_estimator_stops_a_run() {
    let policy = RefinementPolicy { kind: RefinementKind::Uniform, target_estimator: Some(2.0), ..Default::default() };
    let reports = run_standard(&sphere_problem(), &policy, &options(), |_| Ok(())).unwrap();
    let last = reports.last().unwrap();
    assert!(last.estimator_total <= 2.0);
    assert!(reports[..reports.len() - 1].iter().all(|r| r.estimator_total > 2.0));
}

#[test]
fn max_dofs_bounds_every_level() {
    let policy = RefinementPolicy { kind: RefinementKind::Uniform, max_dofs: 4000, ..Default::default() };
    let reports = run_standard(&sphere_problem(), &policy, &options(), |_| Ok(())).unwrap();
    assert_eq!(reports.iter().map(|r| r.dofs).collect::<Vec<_>>(), vec![240, 960, 3840]);
}

#[test]
fn standard_driver_rejects_the_geometric_kind() {
    let policy = RefinementPolicy { kind: RefinementKind::Geometric, ..Default::default() };
    assert!(matches!(run_standard(&sphere_problem(), &policy, &options(), |_| Ok(())), Err(Error::Usage(_))));
}
