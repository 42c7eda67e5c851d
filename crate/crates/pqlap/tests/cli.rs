//! Command dispatch, exit-code mapping and artifact headers.

use pqlap::cli::run_command;
use pqlap::config::RunConfig;
use pqlap::error::Error;

const THETA_POS: &str = "\
domain.dim = 1
mesh.n = 64
problem.alpha1 = -0.5
problem.beta1 = 0.5
problem.alpha2 = 0.5
problem.beta2 = -0.5
problem.lambda = 1.0
problem.gamma = 2.0
";

#[test]
fn classify_report_contents() {
    let cfg = RunConfig::parse(THETA_POS).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    run_command("classify", &cfg, THETA_POS.as_bytes(), tmp.path()).unwrap();
    let report = std::fs::read_to_string(tmp.path().join("classification.txt")).unwrap();
    assert!(report.contains("theta: 2.0"), "{report}");
    assert!(report.contains("sigma: -1"), "{report}");
    assert!(report.contains("regime: subhomogeneous"), "{report}");
    // Header with version and config hash.
    let first = report.lines().next().unwrap();
    assert!(first.starts_with("# pqlap "), "{first}");
    assert!(first.contains("config_sha256="), "{first}");
}

#[test]
fn unknown_key_maps_to_config_exit_code() {
    let err = RunConfig::parse("problem.lamda = 1.0").unwrap_err();
    assert!(err.to_string().contains("lamda"));
    assert_eq!(err.exit_code(), 65);
}

#[test]
fn unknown_command_rejected() {
    let cfg = RunConfig::parse(THETA_POS).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let err = run_command("clasify", &cfg, THETA_POS.as_bytes(), tmp.path()).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
}

#[test]
fn exit_code_contract() {
    assert_eq!(Error::Config("x".into()).exit_code(), 65);
    assert_eq!(Error::Nonconvergence("x".into()).exit_code(), 2);
    assert_eq!(Error::Certificate("x".into()).exit_code(), 3);
    assert_eq!(Error::Param("x".into()).exit_code(), 1);
}

#[test]
fn eigen_command_emits_fields_and_mesh() {
    let cfg = RunConfig::parse(THETA_POS).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    run_command("eigen", &cfg, THETA_POS.as_bytes(), tmp.path()).unwrap();
    for name in [
        "mesh.csv",
        "eigen_p.csv",
        "eigen_q.csv",
        "eigen_p_tilde.csv",
        "eigen_q_tilde.csv",
        "eigen_summary.txt",
    ] {
        assert!(tmp.path().join(name).exists(), "{name} missing");
    }
    let summary = std::fs::read_to_string(tmp.path().join("eigen_summary.txt")).unwrap();
    assert!(summary.contains("lambda_1p: 9.8"), "{summary}");
}

#[test]
fn barriers_command_emits_certificate() {
    let cfg = RunConfig::parse(THETA_POS).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    run_command("barriers", &cfg, THETA_POS.as_bytes(), tmp.path()).unwrap();
    let cert = std::fs::read_to_string(tmp.path().join("certificate.txt")).unwrap();
    assert!(cert.contains("pass: true"), "{cert}");
    assert!(cert.contains("margin sub_u_weak"), "{cert}");
    for name in [
        "barrier_lower_u.csv",
        "barrier_lower_v.csv",
        "barrier_upper_u.csv",
        "barrier_upper_v.csv",
    ] {
        assert!(tmp.path().join(name).exists(), "{name} missing");
    }
}

#[test]
fn solve_command_reports_convergence() {
    let cfg = RunConfig::parse(THETA_POS).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    run_command("solve", &cfg, THETA_POS.as_bytes(), tmp.path()).unwrap();
    let report = std::fs::read_to_string(tmp.path().join("solve_report.txt")).unwrap();
    assert!(report.contains("status: converged"), "{report}");
    assert!(tmp.path().join("solution_u.csv").exists());
    assert!(tmp.path().join("solution_v.csv").exists());
}

#[test]
fn verify_command_emits_orders() {
    let cfg = RunConfig::parse(THETA_POS).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    run_command("verify", &cfg, THETA_POS.as_bytes(), tmp.path()).unwrap();
    let orders = std::fs::read_to_string(tmp.path().join("convergence_orders.txt").with_extension("csv"))
        .or_else(|_| std::fs::read_to_string(tmp.path().join("convergence_orders.csv")))
        .unwrap();
    assert!(orders.contains("# convergence"), "{orders}");
    let energy = std::fs::read_to_string(tmp.path().join("energy_certificate.txt")).unwrap();
    assert!(energy.contains("verdict"), "{energy}");
}
