//! Two-dimensional smoke test of the full pipeline on the unit square:
//! eigenpairs, auxiliary solves, certificate search and a short continuation.

use pqlap::barrier::BarrierBuilder;
use pqlap::mesh::{DomainSpec, Mesh};
use pqlap::plap::ScalarSolveOptions;
use pqlap::problem::ProblemParams;
use pqlap::solver::{continuation_solve, SolveConfig, SolveStatus};

#[test]
fn square_pipeline() {
    let params = ProblemParams {
        p: 2.0,
        q: 2.0,
        alpha1: -0.5,
        beta1: 0.5,
        alpha2: 0.5,
        beta2: -0.5,
        lambda: 1.0,
        gamma: 2.0,
    };
    let spec = DomainSpec::rectangle([0.0, 1.0], [0.0, 1.0]);
    let n = 12;
    let mesh = Mesh::build(spec, n).unwrap();
    let tilde = Mesh::build_enlarged(spec, n).unwrap();
    let b = BarrierBuilder::new(&params, &mesh, &tilde, None, &ScalarSolveOptions::default())
        .unwrap();
    let (c, cert) = b.select_c(params.lambda).unwrap();
    assert!(cert.pass, "{}", cert.report());
    let pair = b.barrier_pair(c).unwrap();
    let cfg = SolveConfig {
        eps_stages: 6,
        tol_system_residual: 1e-4,
        ..SolveConfig::default()
    };
    let (u, v, report) = continuation_solve(&params, params.lambda, cert.eps0, &pair, &cfg);
    assert_eq!(report.status, SolveStatus::Converged, "{}", report.report());
    assert!(report.stages.iter().all(|s| s.trap_ok));
    assert!(u.min_interior() > 0.0 && v.min_interior() > 0.0);
    assert!(u.sup_diff(&v) <= 1e-7);
}
