//! Command dispatch shared by the binary and the integration tests.
//!
//! Exit-code contract: 0 success, 2 nonconvergence, 3 certificate failure,
//! 64 unknown command, 65 configuration error; anything else is 1.

use std::path::Path;

use crate::barrier::BarrierBuilder;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::plap::ScalarSolveOptions;
use crate::report::Emitter;
use crate::solver::{continuation_solve, SolveStatus};
use crate::verify::{energy_certificate, manufactured_convergence, nonexistence_probe};
use crate::problem::{lambda_star, Regime};

pub const COMMANDS: &[&str] = &["classify", "eigen", "barriers", "solve", "sweep", "verify"];

/// Run one CLI command against a parsed configuration. `raw_config` is the
/// config file's exact bytes, hashed into every emitted artifact header.
pub fn run_command(name: &str, cfg: &RunConfig, raw_config: &[u8], out_dir: &Path) -> Result<()> {
    match name {
        "classify" => classify(cfg, raw_config, out_dir),
        "eigen" => eigen(cfg, raw_config, out_dir),
        "barriers" => barriers(cfg, raw_config, out_dir),
        "solve" => solve(cfg, raw_config, out_dir),
        "sweep" => sweep(cfg, raw_config, out_dir),
        "verify" => verify(cfg, raw_config, out_dir),
        other => Err(Error::Config(format!("unknown command `{other}`"))),
    }
}

fn scalar_opts(cfg: &RunConfig) -> ScalarSolveOptions {
    ScalarSolveOptions {
        tol: cfg.solve.tol_newton,
        ..ScalarSolveOptions::default()
    }
}

fn builder_from_config(cfg: &RunConfig) -> Result<BarrierBuilder> {
    let spec = cfg.domain_spec()?;
    let mesh = Mesh::build(spec, cfg.mesh_n)?;
    let mesh_tilde = Mesh::build_enlarged(spec, cfg.n_tilde())?;
    let class = cfg.problem.classify()?;
    let bcfg = cfg.barrier_config(&class, &mesh);
    BarrierBuilder::new(&cfg.problem, &mesh, &mesh_tilde, Some(bcfg), &scalar_opts(cfg))
}

fn classify(cfg: &RunConfig, raw: &[u8], out_dir: &Path) -> Result<()> {
    let class = cfg.problem.classify()?;
    let mut em = Emitter::new(out_dir, raw)?;
    em.text("classification.txt", &class.report())?;
    Ok(())
}

fn eigen(cfg: &RunConfig, raw: &[u8], out_dir: &Path) -> Result<()> {
    let b = builder_from_config(cfg)?;
    let mut em = Emitter::new(out_dir, raw)?;
    em.mesh("mesh.csv", &b.mesh)?;
    em.field("eigen_p.csv", &b.eig_p.phi)?;
    em.field("eigen_q.csv", &b.eig_q.phi)?;
    em.field("eigen_p_tilde.csv", &b.eig_p_tilde.phi)?;
    em.field("eigen_q_tilde.csv", &b.eig_q_tilde.phi)?;
    let mut summary = String::new();
    summary.push_str(&format!("lambda_1p: {:?}\n", b.eig_p.lambda));
    summary.push_str(&format!("lambda_1q: {:?}\n", b.eig_q.lambda));
    summary.push_str(&format!("lambda_1p_tilde: {:?}\n", b.eig_p_tilde.lambda));
    summary.push_str(&format!("lambda_1q_tilde: {:?}\n", b.eig_q_tilde.lambda));
    summary.push_str(&format!("normalization_defect_p: {:?}\n", b.eig_p.normalization_defect()));
    summary.push_str(&format!("normalization_defect_q: {:?}\n", b.eig_q.normalization_defect()));
    em.text("eigen_summary.txt", &summary)?;
    Ok(())
}

fn barriers(cfg: &RunConfig, raw: &[u8], out_dir: &Path) -> Result<()> {
    let b = builder_from_config(cfg)?;
    let (c, cert) = b.select_c(cfg.problem.lambda)?;
    let pair = b.barrier_pair(c)?;
    let consts = b.fit_comparison_constants(c)?;
    let mut em = Emitter::new(out_dir, raw)?;
    em.field("barrier_lower_u.csv", &pair.lower_u)?;
    em.field("barrier_lower_v.csv", &pair.lower_v)?;
    em.field("barrier_upper_u.csv", &pair.upper_u)?;
    em.field("barrier_upper_v.csv", &pair.upper_v)?;
    let mut body = cert.report();
    body.push_str(&format!("l1: {:?}\nl2: {:?}\nl: {:?}\n", consts.l1, consts.l2, consts.l));
    body.push_str(&format!("m_max: {:?}\nmu: {:?}\nrho: {:?}\n", consts.m_max, consts.mu, consts.rho));
    body.push_str(&format!(
        "c1: {:?}\nc2: {:?}\nc1_prime: {:?}\nc2_prime: {:?}\n",
        consts.c1, consts.c2, consts.c1p, consts.c2p
    ));
    body.push_str(&format!(
        "aux_delta: {:?}\ntheta1: {:?}\ntheta2: {:?}\n",
        consts.aux_delta, consts.theta1, consts.theta2
    ));
    em.text("certificate.txt", &body)?;
    if !cert.pass {
        return Err(Error::Certificate(format!(
            "barrier certificate failed; worst margin {} = {:.3e}",
            cert.worst().name,
            cert.worst().worst
        )));
    }
    Ok(())
}

fn solve(cfg: &RunConfig, raw: &[u8], out_dir: &Path) -> Result<()> {
    let b = builder_from_config(cfg)?;
    let (c, cert) = b.select_c(cfg.problem.lambda)?;
    let mut em = Emitter::new(out_dir, raw)?;
    em.text("certificate.txt", &cert.report())?;
    if !cert.pass {
        return Err(Error::Certificate(format!(
            "barrier certificate failed; worst margin {} = {:.3e}",
            cert.worst().name,
            cert.worst().worst
        )));
    }
    let lambda = if cert.lambda_searched { cert.lambda } else { cfg.problem.lambda };
    let pair = b.barrier_pair(c)?;
    let (u, v, report) = continuation_solve(&cfg.problem, lambda, cert.eps0, &pair, &cfg.solve);
    em.field("solution_u.csv", &u)?;
    em.field("solution_v.csv", &v)?;
    em.mesh("mesh.csv", &b.mesh)?;
    em.text("solve_report.txt", &report.report())?;
    match report.status {
        SolveStatus::Converged => Ok(()),
        _ => Err(Error::Nonconvergence(format!(
            "continuation did not produce a certified solution: {:?}",
            report.status
        ))),
    }
}

fn sweep(cfg: &RunConfig, raw: &[u8], out_dir: &Path) -> Result<()> {
    let b = builder_from_config(cfg)?;
    let mut em = Emitter::new(out_dir, raw)?;
    let mut table = String::from("# sweep: lambda,outcome,max_u,max_v,res_u,res_v\n");
    let count = cfg.sweep_count.max(2);
    for i in 0..count {
        let t = i as f64 / (count - 1) as f64;
        let lambda = cfg.sweep_lambda_lo + t * (cfg.sweep_lambda_hi - cfg.sweep_lambda_lo);
        let probe = nonexistence_probe(&b, lambda, &cfg.solve)?;
        table.push_str(&format!(
            "{lambda:?},{},{:?},{:?},{:?},{:?}\n",
            probe.outcome.as_str(),
            probe.max_u,
            probe.max_v,
            probe.res_u,
            probe.res_v
        ));
    }
    if b.class.regime == Regime::Homogeneous && b.class.c && b.class.c2 {
        let star = lambda_star(&cfg.problem, b.eig_p.lambda, b.eig_q.lambda)?;
        table.push_str(&format!("# lambda_star: {star:?}\n"));
    }
    em.text("sweep.csv", &table)?;
    Ok(())
}

fn verify(cfg: &RunConfig, raw: &[u8], out_dir: &Path) -> Result<()> {
    let mut em = Emitter::new(out_dir, raw)?;
    let levels = [64usize, 128, 256];
    let mut table = String::from("# convergence: r,n,error,order\n");
    let mut exponents = vec![2.0, 1.5, 3.0];
    for r in [cfg.problem.p, cfg.problem.q] {
        if !exponents.iter().any(|&e| (e - r).abs() < 1e-12) {
            exponents.push(r);
        }
    }
    for r in exponents {
        let t = manufactured_convergence(r, &levels)?;
        for (i, &n) in t.levels.iter().enumerate() {
            let order = if i == 0 {
                String::from("-")
            } else {
                format!("{:?}", t.orders[i - 1])
            };
            table.push_str(&format!("{r:?},{n},{:?},{order}\n", t.errors[i]));
        }
    }
    em.text("convergence_orders.csv", &table)?;

    let class = cfg.problem.classify()?;
    if class.regime == Regime::Homogeneous && class.c && class.c2 {
        let b = builder_from_config(cfg)?;
        let (lower_u, lower_v) = b.build_subsolution(b.cfg.c_fixed);
        let cert = energy_certificate(
            &cfg.problem,
            cfg.problem.lambda,
            &lower_u,
            &lower_v,
            b.eig_p.lambda,
            b.eig_q.lambda,
        )?;
        let star = lambda_star(&cfg.problem, b.eig_p.lambda, b.eig_q.lambda)?;
        let mut body = cert.report();
        body.push_str(&format!("lambda_star: {star:?}\n"));
        em.text("energy_certificate.txt", &body)?;
    } else {
        em.text(
            "energy_certificate.txt",
            "verdict: skipped (energy balance applies to the homogeneous regime only)\n",
        )?;
    }
    Ok(())
}
