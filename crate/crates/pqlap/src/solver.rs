//! Regularized system solves inside a barrier trap and continuation of the
//! shift parameter toward zero.
//!
//! One regularized solve alternates scalar solves: freeze v and solve the
//! u-equation (whose right side is nonincreasing in u), clamp into the trap,
//! then freeze u and solve the v-equation. Sweeps stop when successive
//! iterates agree to `tol_fixedpoint` AND the recomputed weak residuals of
//! both shifted equations fall below `tol_residual` — the second condition
//! guards against the singular right-hand sides amplifying the half-sweep lag
//! near the boundary.

use crate::barrier::BarrierPair;
use crate::error::{Error, Result};
use crate::mesh::Field;
use crate::plap::{
    solve_scalar, sup_norm, weak_residual, Bounds, CoupledPower, ScalarSolveOptions,
};
use crate::problem::ProblemParams;

/// Tolerances and schedule of a system solve.
#[derive(Debug, Clone)]
pub struct SolveConfig {
    /// Sup-norm threshold on successive sweep differences.
    pub tol_fixedpoint: f64,
    /// Inner scalar Newton tolerance.
    pub tol_newton: f64,
    /// Recomputed per-equation weak-residual target for accepting a stage.
    pub tol_residual: f64,
    pub max_sweeps: usize,
    /// Number of shift stages; stage j uses eps0 · 2^{−j}, j = 0..eps_stages.
    pub eps_stages: usize,
    /// Clamp every sweep into the trap.
    pub clamp: bool,
    /// Treat a trap violation as a hard failure (meaningful with clamp off).
    pub enforce_trapping: bool,
    /// Final unshifted residual target for the continuation limit.
    pub tol_system_residual: f64,
    /// Abort a sweep loop whose fields exceed this magnitude.
    pub divergence_cap: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            tol_fixedpoint: 1e-9,
            tol_newton: 1e-10,
            tol_residual: 1e-9,
            max_sweeps: 200,
            eps_stages: 21,
            clamp: true,
            enforce_trapping: true,
            tol_system_residual: 1e-6,
            divergence_cap: 1e8,
        }
    }
}

impl SolveConfig {
    pub fn eps_schedule(&self, eps0: f64) -> Vec<f64> {
        (0..self.eps_stages).map(|j| eps0 * 0.5f64.powi(j as i32)).collect()
    }

    fn scalar_opts(&self) -> ScalarSolveOptions {
        ScalarSolveOptions {
            tol: self.tol_newton,
            divergence_cap: self.divergence_cap.max(1e8),
            ..ScalarSolveOptions::default()
        }
    }
}

/// Statistics of a single regularized solve.
#[derive(Debug, Clone)]
pub struct StageStats {
    pub eps: f64,
    pub sweeps: usize,
    pub final_diff: f64,
    pub res_u: f64,
    pub res_v: f64,
    pub trap_ok: bool,
    pub min_u_interior: f64,
    pub min_v_interior: f64,
}

/// Terminal status of a continuation run.
#[derive(Debug, Clone, PartialEq)]
pub enum SolveStatus {
    Converged,
    /// A stage failed to converge; carries the stage index and the reason.
    StageFailure(usize, String),
    /// Stages converged but the unshifted system residual stayed above
    /// target.
    ResidualFailure,
}

/// Full record of a continuation run. Residuals are recomputed from the final
/// fields of each stage, never carried from the iteration.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub stages: Vec<StageStats>,
    pub cauchy_u: Vec<f64>,
    pub cauchy_v: Vec<f64>,
    pub final_res_u: f64,
    pub final_res_v: f64,
    pub status: SolveStatus,
    pub notes: Vec<String>,
}

impl SolveReport {
    pub fn report(&self) -> String {
        let mut out = String::new();
        let status = match &self.status {
            SolveStatus::Converged => "converged".to_string(),
            SolveStatus::StageFailure(j, why) => format!("stage_failure at stage {j}: {why}"),
            SolveStatus::ResidualFailure => "residual_failure".to_string(),
        };
        out.push_str(&format!("status: {status}\n"));
        out.push_str(&format!("stages: {}\n", self.stages.len()));
        out.push_str(&format!("final_res_u: {:?}\n", self.final_res_u));
        out.push_str(&format!("final_res_v: {:?}\n", self.final_res_v));
        out.push_str("# stage table: eps,sweeps,final_diff,res_u,res_v,trap_ok,min_u,min_v\n");
        for s in &self.stages {
            out.push_str(&format!(
                "stage: {:?},{},{:?},{:?},{:?},{},{:?},{:?}\n",
                s.eps, s.sweeps, s.final_diff, s.res_u, s.res_v, s.trap_ok, s.min_u_interior,
                s.min_v_interior
            ));
        }
        out.push_str("# continuation differences: stage,du,dv\n");
        for (j, (du, dv)) in self.cauchy_u.iter().zip(&self.cauchy_v).enumerate() {
            out.push_str(&format!("cauchy: {j},{du:?},{dv:?}\n"));
        }
        for n in &self.notes {
            out.push_str(&format!("note: {n}\n"));
        }
        out
    }
}

fn trap_ok(u: &Field, v: &Field, barriers: &BarrierPair) -> bool {
    let tol = 1e-10;
    for k in 0..u.len() {
        if u.values[k] < barriers.lower_u.values[k] - tol
            || u.values[k] > barriers.upper_u.values[k] + tol
            || v.values[k] < barriers.lower_v.values[k] - tol
            || v.values[k] > barriers.upper_v.values[k] + tol
        {
            return false;
        }
    }
    true
}

fn shifted_residuals(
    params: &ProblemParams,
    lambda: f64,
    eps: f64,
    u: &Field,
    v: &Field,
) -> Result<(f64, f64)> {
    let res_u = weak_residual(
        params.p,
        u,
        &CoupledPower {
            scale: lambda,
            other: v,
            other_exponent: params.beta1,
            shift: eps,
            self_exponent: params.alpha1,
        },
    )?;
    let res_v = weak_residual(
        params.q,
        v,
        &CoupledPower {
            scale: lambda,
            other: u,
            other_exponent: params.alpha2,
            shift: eps,
            self_exponent: params.beta2,
        },
    )?;
    Ok((sup_norm(&res_u), sup_norm(&res_v)))
}

/// One regularized solve at fixed shift by alternating scalar solves.
pub fn solve_regularized(
    params: &ProblemParams,
    lambda: f64,
    eps: f64,
    barriers: &BarrierPair,
    init: (&Field, &Field),
    cfg: &SolveConfig,
) -> Result<(Field, Field, StageStats)> {
    let scalar_opts = cfg.scalar_opts();
    let mut u = init.0.clone();
    let mut v = init.1.clone();
    if cfg.clamp {
        u.clamp_between(&barriers.lower_u, &barriers.upper_u);
        v.clamp_between(&barriers.lower_v, &barriers.upper_v);
    }
    let mut diff = f64::INFINITY;
    let mut sweeps = 0usize;
    let mut converged = false;
    while sweeps < cfg.max_sweeps {
        sweeps += 1;
        let u_bounds = if cfg.clamp {
            Bounds {
                lo: Some(&barriers.lower_u),
                hi: Some(&barriers.upper_u),
            }
        } else {
            Bounds::default()
        };
        let mut u_new = solve_scalar(
            params.p,
            &CoupledPower {
                scale: lambda,
                other: &v,
                other_exponent: params.beta1,
                shift: eps,
                self_exponent: params.alpha1,
            },
            u_bounds,
            &u,
            &scalar_opts,
        )
        .map_err(|e| Error::Nonconvergence(format!("sweep {sweeps}, u-equation: {e}")))?;
        if cfg.clamp {
            u_new.clamp_between(&barriers.lower_u, &barriers.upper_u);
        }
        let v_bounds = if cfg.clamp {
            Bounds {
                lo: Some(&barriers.lower_v),
                hi: Some(&barriers.upper_v),
            }
        } else {
            Bounds::default()
        };
        let mut v_new = solve_scalar(
            params.q,
            &CoupledPower {
                scale: lambda,
                other: &u_new,
                other_exponent: params.alpha2,
                shift: eps,
                self_exponent: params.beta2,
            },
            v_bounds,
            &v,
            &scalar_opts,
        )
        .map_err(|e| Error::Nonconvergence(format!("sweep {sweeps}, v-equation: {e}")))?;
        if cfg.clamp {
            v_new.clamp_between(&barriers.lower_v, &barriers.upper_v);
        }
        diff = u_new.sup_diff(&u).max(v_new.sup_diff(&v));
        u = u_new;
        v = v_new;
        if u.max_abs().max(v.max_abs()) > cfg.divergence_cap {
            return Err(Error::Nonconvergence(format!(
                "sweep {sweeps}: fields exceeded the divergence cap {:.1e}",
                cfg.divergence_cap
            )));
        }
        if diff <= cfg.tol_fixedpoint {
            let (ru, rv) = shifted_residuals(params, lambda, eps, &u, &v)?;
            if ru.max(rv) <= cfg.tol_residual {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        let (ru, rv) = shifted_residuals(params, lambda, eps, &u, &v)?;
        return Err(Error::Nonconvergence(format!(
            "{} sweeps at eps = {eps:.3e}: last difference {diff:.3e}, residuals ({ru:.3e}, {rv:.3e})",
            cfg.max_sweeps
        )));
    }
    let (res_u, res_v) = shifted_residuals(params, lambda, eps, &u, &v)?;
    let stats = StageStats {
        eps,
        sweeps,
        final_diff: diff,
        res_u,
        res_v,
        trap_ok: trap_ok(&u, &v, barriers),
        min_u_interior: u.min_interior(),
        min_v_interior: v.min_interior(),
    };
    if cfg.enforce_trapping && !stats.trap_ok {
        return Err(Error::Nonconvergence(format!(
            "trapping violated at eps = {eps:.3e}"
        )));
    }
    Ok((u, v, stats))
}

/// Weak residuals of the unshifted system; the fields must be positive at
/// interior nodes for the singular powers to be defined.
pub fn weak_residual_system(
    params: &ProblemParams,
    lambda: f64,
    u: &Field,
    v: &Field,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if u.min_interior() <= 0.0 || v.min_interior() <= 0.0 {
        return Err(Error::SingularRhs(
            "unshifted residual undefined: nonpositive interior value".into(),
        ));
    }
    let res_u = weak_residual(
        params.p,
        u,
        &CoupledPower {
            scale: lambda,
            other: v,
            other_exponent: params.beta1,
            shift: 0.0,
            self_exponent: params.alpha1,
        },
    )?;
    let res_v = weak_residual(
        params.q,
        v,
        &CoupledPower {
            scale: lambda,
            other: u,
            other_exponent: params.alpha2,
            shift: 0.0,
            self_exponent: params.beta2,
        },
    )?;
    Ok((res_u, res_v))
}

/// Drive the shift to zero along a geometric schedule, warm-starting every
/// stage from the previous one; the first stage starts at the lower barrier.
///
/// Any stage failure ends the run with the partial report attached. A
/// completed schedule is accepted only if the recomputed unshifted residuals
/// meet `tol_system_residual`.
pub fn continuation_solve(
    params: &ProblemParams,
    lambda: f64,
    eps0: f64,
    barriers: &BarrierPair,
    cfg: &SolveConfig,
) -> (Field, Field, SolveReport) {
    let mut u = barriers.lower_u.clone();
    let mut v = barriers.lower_v.clone();
    let mut report = SolveReport {
        stages: Vec::new(),
        cauchy_u: Vec::new(),
        cauchy_v: Vec::new(),
        final_res_u: f64::NAN,
        final_res_v: f64::NAN,
        status: SolveStatus::Converged,
        notes: vec![
            "shift schedule: geometric halving (a null sequence equivalent to harmonic steps)"
                .to_string(),
        ],
    };
    for (j, eps) in cfg.eps_schedule(eps0).into_iter().enumerate() {
        match solve_regularized(params, lambda, eps, barriers, (&u, &v), cfg) {
            Ok((u_new, v_new, stats)) => {
                if j > 0 {
                    report.cauchy_u.push(u_new.sup_diff(&u));
                    report.cauchy_v.push(v_new.sup_diff(&v));
                }
                u = u_new;
                v = v_new;
                report.stages.push(stats);
            }
            Err(e) => {
                report.status = SolveStatus::StageFailure(j, e.to_string());
                return (u, v, report);
            }
        }
    }
    match weak_residual_system(params, lambda, &u, &v) {
        Ok((ru, rv)) => {
            report.final_res_u = sup_norm(&ru);
            report.final_res_v = sup_norm(&rv);
            if report.final_res_u.max(report.final_res_v) > cfg.tol_system_residual {
                report.status = SolveStatus::ResidualFailure;
                report
                    .notes
                    .push("stage differences converged but the unshifted residual stayed above target".into());
            }
        }
        Err(e) => {
            report.status = SolveStatus::ResidualFailure;
            report.notes.push(format!("unshifted residual unavailable: {e}"));
        }
    }
    (u, v, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barrier::BarrierBuilder;
    use crate::mesh::{DomainSpec, Mesh};

    fn reference_params() -> ProblemParams {
        ProblemParams {
            p: 2.0,
            q: 2.0,
            alpha1: -0.5,
            beta1: 0.5,
            alpha2: 0.5,
            beta2: -0.5,
            lambda: 1.0,
            gamma: 2.0,
        }
    }

    fn reference_builder(n: usize) -> BarrierBuilder {
        let spec = DomainSpec::interval(0.0, 1.0);
        let mesh = Mesh::build(spec, n).unwrap();
        let tilde = Mesh::build_enlarged(spec, n).unwrap();
        BarrierBuilder::new(
            &reference_params(),
            &mesh,
            &tilde,
            None,
            &ScalarSolveOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn shift_monotonicity_of_rhs() {
        // For fixed positive fields the u-equation right side decreases as
        // the shift grows (negative self exponent).
        let params = reference_params();
        let u: f64 = 0.3;
        let v: f64 = 0.7;
        let f = |eps: f64| (u + eps).powf(params.alpha1) * v.powf(params.beta1);
        assert!(f(1e-3) > f(1e-2));
        assert!(f(1e-2) > f(1e-1));
    }

    #[test]
    fn regularized_solve_reference_instance() {
        let b = reference_builder(96);
        let (c, cert) = b.select_c(1.0).unwrap();
        let pair = b.barrier_pair(c).unwrap();
        let cfg = SolveConfig::default();
        let (u, v, stats) = solve_regularized(
            &reference_params(),
            1.0,
            cert.eps0,
            &pair,
            (&pair.lower_u, &pair.lower_v),
            &cfg,
        )
        .unwrap();
        assert!(stats.res_u <= 1e-8 && stats.res_v <= 1e-8);
        assert!(stats.trap_ok);
        assert!(u.min_interior() > 0.0 && v.min_interior() > 0.0);
        // Symmetric instance: both fields solve the same fixed-point problem.
        assert!(u.sup_diff(&v) <= 1e-8, "gap {}", u.sup_diff(&v));
    }

    #[test]
    fn both_inits_reach_the_same_limit() {
        let b = reference_builder(64);
        let (c, cert) = b.select_c(1.0).unwrap();
        let pair = b.barrier_pair(c).unwrap();
        let cfg = SolveConfig::default();
        let params = reference_params();
        let (u_lo, _, _) = solve_regularized(
            &params,
            1.0,
            cert.eps0,
            &pair,
            (&pair.lower_u, &pair.lower_v),
            &cfg,
        )
        .unwrap();
        let (u_hi, _, _) = solve_regularized(
            &params,
            1.0,
            cert.eps0,
            &pair,
            (&pair.upper_u, &pair.upper_v),
            &cfg,
        )
        .unwrap();
        // Uniqueness is not asserted by the model; report the observed gap
        // and require only agreement at the sweep tolerance scale.
        let gap = u_lo.sup_diff(&u_hi);
        println!("init sensitivity: {gap:.3e}");
        assert!(gap <= 2.0 * 1e-6);
    }

    #[test]
    fn monotone_sweeps_from_lower_barrier() {
        // Unclamped sweeps starting at the lower pair increase nodally on
        // the cooperative reference instance; run five sweep bodies by hand.
        let b = reference_builder(64);
        let (_, cert) = b.select_c(1.0).unwrap();
        let pair = b.barrier_pair(cert.c).unwrap();
        let params = reference_params();
        let opts = SolveConfig::default().scalar_opts();
        let mut u = pair.lower_u.clone();
        let mut v = pair.lower_v.clone();
        for _ in 0..5 {
            let u_new = solve_scalar(
                params.p,
                &CoupledPower {
                    scale: 1.0,
                    other: &v,
                    other_exponent: params.beta1,
                    shift: cert.eps0,
                    self_exponent: params.alpha1,
                },
                Bounds::default(),
                &u,
                &opts,
            )
            .unwrap();
            let v_new = solve_scalar(
                params.q,
                &CoupledPower {
                    scale: 1.0,
                    other: &u_new,
                    other_exponent: params.alpha2,
                    shift: cert.eps0,
                    self_exponent: params.beta2,
                },
                Bounds::default(),
                &v,
                &opts,
            )
            .unwrap();
            for k in 0..u.len() {
                assert!(u_new.values[k] >= u.values[k] - 1e-10);
                assert!(v_new.values[k] >= v.values[k] - 1e-10);
            }
            u = u_new;
            v = v_new;
        }
    }

    #[test]
    fn continuation_reference_instance() {
        let b = reference_builder(96);
        let (c, cert) = b.select_c(1.0).unwrap();
        let pair = b.barrier_pair(c).unwrap();
        let cfg = SolveConfig::default();
        let (u, v, report) =
            continuation_solve(&reference_params(), 1.0, cert.eps0, &pair, &cfg);
        assert_eq!(report.status, SolveStatus::Converged, "{}", report.report());
        assert!(report.final_res_u <= 1e-6 && report.final_res_v <= 1e-6);
        assert!(report.stages.iter().all(|s| s.trap_ok));
        assert!(u.min_interior() > 0.0 && v.min_interior() > 0.0);
        assert!(u.sup_diff(&v) <= 1e-8);
    }

    #[test]
    fn lambda_monotonicity() {
        let b = reference_builder(64);
        let params = reference_params();
        let cfg = SolveConfig::default();
        let mut fields = Vec::new();
        for lambda in [1.0, 2.0] {
            let (c, cert) = b.select_c(lambda).unwrap();
            let pair = b.barrier_pair(c).unwrap();
            let (u, v, report) = continuation_solve(&params, lambda, cert.eps0, &pair, &cfg);
            assert_eq!(report.status, SolveStatus::Converged);
            fields.push((u, v));
        }
        for k in 0..fields[0].0.len() {
            assert!(fields[1].0.values[k] >= fields[0].0.values[k] - 1e-8);
            assert!(fields[1].1.values[k] >= fields[0].1.values[k] - 1e-8);
        }
    }

    #[test]
    fn unshifted_residual_requires_positivity() {
        let b = reference_builder(32);
        let params = reference_params();
        let zero = Field::zeros(&b.mesh);
        assert!(weak_residual_system(&params, 1.0, &zero, &zero).is_err());
    }

    #[test]
    fn manufactured_system_pair() {
        // u* = v* = x(1-x): the u-equation keeps its singular coupling term
        // and the mismatch 2 - lambda u*^{a1} v*^{b1} moves into the source,
        // so u* solves the corrected equation exactly in the limit.
        let params = reference_params();
        let lambda = 1.0;
        let mut norms = Vec::new();
        for n in [32usize, 64, 128] {
            let mesh = Mesh::build(DomainSpec::interval(0.0, 1.0), n).unwrap();
            let star = Field::from_fn(&mesh, |p| p[0] * (1.0 - p[0]));
            let (a1, b1) = (params.alpha1, params.beta1);
            let src = crate::plap::FnSource {
                f: move |x: [f64; 2], t: f64| {
                    let w = x[0] * (1.0 - x[0]);
                    lambda * t.powf(a1) * w.powf(b1) + 2.0 - lambda * w.powf(a1 + b1)
                },
                df: move |x: [f64; 2], t: f64| {
                    let w = x[0] * (1.0 - x[0]);
                    lambda * a1 * t.powf(a1 - 1.0) * w.powf(b1)
                },
            };
            let res = weak_residual(params.p, &star, &src).unwrap();
            norms.push(sup_norm(&res));
        }
        assert!(norms[2] < norms[1] && norms[1] < norms[0], "{norms:?}");
        assert!(norms[2] < 1e-4, "{norms:?}");
    }
}
