//! Independent checks: the energy-balance certificate behind the
//! nonexistence threshold, existence/nonexistence probes over λ, the
//! empirical threshold bisection, and manufactured-solution convergence
//! orders for the discretization itself.

use crate::barrier::BarrierBuilder;
use crate::error::{Error, Result};
use crate::mesh::{DomainSpec, Field, Mesh};
use crate::plap::{grad_lp_norm_pow, lp_norm_pow, solve_scalar, Bounds, FnSource,
    ScalarSolveOptions};
use crate::problem::{lambda_star, ProblemParams, Regime};
use crate::solver::{continuation_solve, SolveConfig, SolveReport, SolveStatus};

/// Both sides of the energy balance a true solution pair must satisfy in the
/// homogeneous regime, together with the eigenvalue gap tests that make small
/// λ incompatible with it.
#[derive(Debug, Clone)]
pub struct EnergyCertificate {
    /// ‖∇u‖_p^p + ‖∇v‖_q^q.
    pub lhs: f64,
    /// λ [ (α₁+α₂+1)/p ‖u‖_p^p + (β₁+β₂+1)/q ‖v‖_q^q ].
    pub rhs: f64,
    pub rayleigh_u: f64,
    pub rayleigh_v: f64,
    /// λ₁,p > (α₁+α₂+1) λ / p.
    pub gap_p: bool,
    /// λ₁,q > (β₁+β₂+1) λ / q.
    pub gap_q: bool,
    /// The candidate violates the balance (lhs > rhs), as every genuine pair
    /// below the threshold must.
    pub violates_balance: bool,
    pub verdict: EnergyVerdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyVerdict {
    /// Both gaps hold and the candidate violates the balance: consistent
    /// numerical evidence of nonexistence (evidence, not proof).
    NonexistenceEvidence,
    /// At least one gap fails; no conclusion at this λ.
    NoConclusion,
}

impl EnergyCertificate {
    pub fn report(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("lhs_gradient_energy: {:?}\n", self.lhs));
        out.push_str(&format!("rhs_weighted_mass: {:?}\n", self.rhs));
        out.push_str(&format!("rayleigh_u: {:?}\n", self.rayleigh_u));
        out.push_str(&format!("rayleigh_v: {:?}\n", self.rayleigh_v));
        out.push_str(&format!("gap_p: {}\n", self.gap_p));
        out.push_str(&format!("gap_q: {}\n", self.gap_q));
        out.push_str(&format!("violates_balance: {}\n", self.violates_balance));
        let verdict = match self.verdict {
            EnergyVerdict::NonexistenceEvidence => "nonexistence-evidence",
            EnergyVerdict::NoConclusion => "no-conclusion",
        };
        out.push_str(&format!("verdict: {verdict}\n"));
        out
    }
}

/// Evaluate the energy balance for a candidate pair in the homogeneous
/// regime.
pub fn energy_certificate(
    params: &ProblemParams,
    lambda: f64,
    u: &Field,
    v: &Field,
    lam1p: f64,
    lam1q: f64,
) -> Result<EnergyCertificate> {
    let class = params.classify()?;
    if class.regime != Regime::Homogeneous {
        return Err(Error::Param(format!(
            "energy certificate requires the homogeneous regime, got theta = {}",
            class.theta
        )));
    }
    if !class.c {
        return Err(Error::Param(
            "energy certificate requires singular exponents in (-1, 0)".into(),
        ));
    }
    if !class.c2 {
        return Err(Error::Param(
            "energy certificate requires the homogeneous coupling equality".into(),
        ));
    }
    if u.min_interior() <= 0.0 || v.min_interior() <= 0.0 {
        return Err(Error::Param(
            "energy certificate requires interior-positive fields".into(),
        ));
    }
    let grad_u = grad_lp_norm_pow(u, params.p);
    let grad_v = grad_lp_norm_pow(v, params.q);
    let mass_u = lp_norm_pow(u, params.p);
    let mass_v = lp_norm_pow(v, params.q);
    let su = (params.alpha1 + params.alpha2 + 1.0) / params.p;
    let sv = (params.beta1 + params.beta2 + 1.0) / params.q;
    let lhs = grad_u + grad_v;
    let rhs = lambda * (su * mass_u + sv * mass_v);
    let gap_p = lam1p > su * lambda;
    let gap_q = lam1q > sv * lambda;
    let violates_balance = lhs > rhs;
    let verdict = if gap_p && gap_q && violates_balance {
        EnergyVerdict::NonexistenceEvidence
    } else {
        EnergyVerdict::NoConclusion
    };
    Ok(EnergyCertificate {
        lhs,
        rhs,
        rayleigh_u: grad_u / mass_u,
        rayleigh_v: grad_v / mass_v,
        gap_p,
        gap_q,
        violates_balance,
        verdict,
    })
}

/// Probe classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeOutcome {
    /// Continuation converged and the final fields are vanishingly small.
    Collapse,
    Nonconvergence,
    ConvergedPositive,
}

impl ProbeOutcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProbeOutcome::Collapse => "collapse",
            ProbeOutcome::Nonconvergence => "nonconvergence",
            ProbeOutcome::ConvergedPositive => "converged-positive",
        }
    }
}

/// Everything a probe at one λ produces.
#[derive(Debug)]
pub struct ProbeReport {
    pub lambda: f64,
    pub outcome: ProbeOutcome,
    pub max_u: f64,
    pub max_v: f64,
    pub res_u: f64,
    pub res_v: f64,
    pub energy: Option<EnergyCertificate>,
    pub solve: SolveReport,
    pub u: Field,
    pub v: Field,
}

/// Run the continuation without any certificate requirement (barriers are
/// used only to seed the iteration) and classify the outcome. Valid λ must be
/// positive; the homogeneous-regime hypotheses are checked by the caller's
/// parameter validation.
pub fn nonexistence_probe(
    builder: &BarrierBuilder,
    lambda: f64,
    cfg: &SolveConfig,
) -> Result<ProbeReport> {
    let params = ProblemParams {
        lambda,
        ..builder.params
    };
    let class = params.classify()?;
    if class.regime != Regime::Homogeneous || !class.c || !class.c2 {
        return Err(Error::Param(
            "probe requires the homogeneous regime with singular exponents in (-1, 0) and the coupling equality".into(),
        ));
    }
    let pair = builder.barrier_pair(builder.cfg.c_fixed.max(2.0))?;
    let eps0 = crate::problem::epsilon0(pair.c, builder.class.sigma, pair.k)?;
    let probe_cfg = SolveConfig {
        clamp: false,
        enforce_trapping: false,
        ..cfg.clone()
    };
    let (u, v, solve) = continuation_solve(&params, lambda, eps0, &pair, &probe_cfg);
    let max_u = u.max_abs();
    let max_v = v.max_abs();
    let outcome = match &solve.status {
        SolveStatus::Converged => {
            if max_u.max(max_v) < 10.0 * probe_cfg.tol_fixedpoint {
                ProbeOutcome::Collapse
            } else {
                ProbeOutcome::ConvergedPositive
            }
        }
        _ => {
            // A stage failure with tiny fields is the collapse signature as
            // well: the iteration drained below the solver floor.
            if max_u.max(max_v) < 10.0 * probe_cfg.tol_fixedpoint {
                ProbeOutcome::Collapse
            } else {
                ProbeOutcome::Nonconvergence
            }
        }
    };
    let energy = if outcome == ProbeOutcome::ConvergedPositive {
        energy_certificate(
            &params,
            lambda,
            &u,
            &v,
            builder.eig_p.lambda,
            builder.eig_q.lambda,
        )
        .ok()
    } else {
        None
    };
    Ok(ProbeReport {
        lambda,
        outcome,
        max_u,
        max_v,
        res_u: solve.final_res_u,
        res_v: solve.final_res_v,
        energy,
        solve,
        u,
        v,
    })
}

/// Bisection output with the full probe log.
#[derive(Debug)]
pub struct ThresholdReport {
    pub lambda_emp: f64,
    pub lambda_star: f64,
    pub probes: Vec<(f64, ProbeOutcome, f64)>,
    pub notes: Vec<String>,
}

/// Which side of the empirical threshold an outcome sits on. The growth side
/// accepts both a converged positive pair and growth-type nonconvergence:
/// in the homogeneous regime the scale-invariant system admits positive
/// solutions only on a thin λ set, so above the threshold the iteration
/// grows without settling — that growth is the numerically observable
/// existence-side signature.
fn collapse_side(outcome: ProbeOutcome, max_field: f64) -> bool {
    match outcome {
        ProbeOutcome::Collapse => true,
        ProbeOutcome::ConvergedPositive => false,
        ProbeOutcome::Nonconvergence => max_field < 1.0,
    }
}

/// Bisect the probe outcome between a collapsing λ and a non-collapsing λ.
pub fn empirical_threshold(
    builder: &BarrierBuilder,
    lambda_lo: f64,
    lambda_hi: f64,
    bisection_steps: usize,
    cfg: &SolveConfig,
) -> Result<ThresholdReport> {
    if !(lambda_lo < lambda_hi) {
        return Err(Error::Param(format!(
            "bracket must be ordered, got [{lambda_lo}, {lambda_hi}]"
        )));
    }
    let star = lambda_star(
        &ProblemParams {
            lambda: lambda_lo,
            ..builder.params
        },
        builder.eig_p.lambda,
        builder.eig_q.lambda,
    )?;
    let mut probes = Vec::new();
    let mut notes = Vec::new();
    let lo_probe = nonexistence_probe(builder, lambda_lo, cfg)?;
    probes.push((lambda_lo, lo_probe.outcome, lo_probe.max_u));
    if !collapse_side(lo_probe.outcome, lo_probe.max_u.max(lo_probe.max_v)) {
        return Err(Error::Param(format!(
            "lower bracket {lambda_lo} is not on the collapse side (outcome {})",
            lo_probe.outcome.as_str()
        )));
    }
    let hi_probe = nonexistence_probe(builder, lambda_hi, cfg)?;
    probes.push((lambda_hi, hi_probe.outcome, hi_probe.max_u));
    if collapse_side(hi_probe.outcome, hi_probe.max_u.max(hi_probe.max_v)) {
        return Err(Error::Param(format!(
            "upper bracket {lambda_hi} is not on the existence side (outcome {})",
            hi_probe.outcome.as_str()
        )));
    }
    if hi_probe.outcome == ProbeOutcome::Nonconvergence {
        notes.push(
            "existence side inferred from growth-type nonconvergence of the scale-invariant iteration"
                .into(),
        );
    }
    let mut lo = lambda_lo;
    let mut hi = lambda_hi;
    for _ in 0..bisection_steps {
        let mid = 0.5 * (lo + hi);
        let probe = nonexistence_probe(builder, mid, cfg)?;
        let side = collapse_side(probe.outcome, probe.max_u.max(probe.max_v));
        probes.push((mid, probe.outcome, probe.max_u));
        if side {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Flag non-monotone outcome sequences instead of hiding them.
    let mut sorted = probes.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut seen_noncollapse = false;
    for (_, outcome, maxf) in &sorted {
        let side = collapse_side(*outcome, *maxf);
        if !side {
            seen_noncollapse = true;
        } else if seen_noncollapse {
            notes.push("non-monotone probe outcomes across lambda".into());
            break;
        }
    }
    Ok(ThresholdReport {
        lambda_emp: 0.5 * (lo + hi),
        lambda_star: star,
        probes,
        notes,
    })
}

/// Errors and observed orders of a manufactured-solution refinement study.
#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub r: f64,
    pub levels: Vec<usize>,
    pub errors: Vec<f64>,
    pub orders: Vec<f64>,
}

impl ConvergenceTable {
    pub fn min_order(&self) -> f64 {
        self.orders.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Manufactured-solution refinement study for −Δ_r, reporting sup-norm
/// errors and observed orders across the mesh levels.
///
/// For r ≥ 2 the manufactured solution is sin(πx). For r < 2 that choice
/// makes the source |∇u|^{r−2}-singular at the peak and the element
/// quadrature caps the observable rate near 1/2, so the study switches to
/// the degenerate-peak bump 1 − (2x−1)^4 whose source |2x−1|^{3r−4} stays
/// continuous down to r = 4/3.
pub fn manufactured_convergence(r: f64, levels: &[usize]) -> Result<ConvergenceTable> {
    if levels.len() < 3 {
        return Err(Error::Param(format!(
            "need at least 3 refinement levels, got {}",
            levels.len()
        )));
    }
    use std::f64::consts::PI;
    let mut errors = Vec::new();
    for &n in levels {
        let mesh = Mesh::build(DomainSpec::interval(0.0, 1.0), n)?;
        let init = Field::from_fn(&mesh, |p| 4.0 * p[0] * (1.0 - p[0]));
        let opts = ScalarSolveOptions {
            tol: 1e-11,
            ..ScalarSolveOptions::default()
        };
        let (exact, u) = if r >= 2.0 {
            let exact = Field::from_fn(&mesh, |p| (PI * p[0]).sin());
            let src = FnSource {
                f: move |x: [f64; 2], _t: f64| {
                    let c = (PI * x[0]).cos();
                    let s = (PI * x[0]).sin();
                    (r - 1.0) * (PI * c.abs()).powf(r - 2.0) * PI * PI * s
                },
                df: |_x, _t| 0.0,
            };
            let u = solve_scalar(r, &src, Bounds::default(), &init, &opts)?;
            (exact, u)
        } else {
            let exact = Field::from_fn(&mesh, |p| {
                let s = 2.0 * p[0] - 1.0;
                1.0 - s * s * s * s
            });
            let src = FnSource {
                f: move |x: [f64; 2], _t: f64| {
                    let s = 2.0 * x[0] - 1.0;
                    48.0 * (r - 1.0) * 8f64.powf(r - 2.0) * s.abs().powf(3.0 * r - 4.0)
                },
                df: |_x, _t| 0.0,
            };
            let u = solve_scalar(r, &src, Bounds::default(), &init, &opts)?;
            (exact, u)
        };
        errors.push(u.sup_diff(&exact));
    }
    let orders = errors
        .windows(2)
        .map(|w| (w[0] / w[1]).log2())
        .collect();
    Ok(ConvergenceTable {
        r,
        levels: levels.to_vec(),
        errors,
        orders,
    })
}

/// Discrete Rayleigh lower bound with slack for the eigenvalue's own
/// discretization error.
pub fn rayleigh_lower_bound_holds(w: &Field, r: f64, lam1: f64, slack: f64) -> bool {
    grad_lp_norm_pow(w, r) >= (1.0 - slack) * lam1 * lp_norm_pow(w, r)
}

#[allow(unused_imports)]
use crate::plap::weak_residual;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{first_eigenpair, EigenOptions};
    use std::f64::consts::PI;

    fn homogeneous_params() -> ProblemParams {
        ProblemParams {
            p: 2.0,
            q: 2.0,
            alpha1: -0.5,
            beta1: 1.5,
            alpha2: 1.5,
            beta2: -0.5,
            lambda: 1.0,
            gamma: 2.0,
        }
    }

    #[test]
    fn gap_inequalities_flip_exactly_at_threshold() {
        let params = homogeneous_params();
        let lam1 = PI * PI;
        let star = lambda_star(&params, lam1, lam1).unwrap();
        let su = (params.alpha1 + params.alpha2 + 1.0) / params.p;
        assert!((lam1 - su * star).abs() <= 1e-10);
        assert!(lam1 > su * (star * (1.0 - 1e-12)));
        assert!(lam1 <= su * (star * (1.0 + 1e-12)));
    }

    #[test]
    fn eigenpair_saturates_energy_balance() {
        let mesh = Mesh::build(DomainSpec::interval(0.0, 1.0), 128).unwrap();
        let eig = first_eigenpair(2.0, &mesh, &EigenOptions::default()).unwrap();
        let params = homogeneous_params();
        let cert = energy_certificate(
            &params,
            eig.lambda,
            &eig.phi,
            &eig.phi,
            eig.lambda,
            eig.lambda,
        )
        .unwrap();
        // lhs = lambda (‖u‖² + ‖v‖²) exactly at the Rayleigh minimizer.
        let expected = eig.lambda
            * (lp_norm_pow(&eig.phi, 2.0) + lp_norm_pow(&eig.phi, 2.0));
        assert!((cert.lhs - expected).abs() / expected <= 1e-6);
        assert!((cert.rayleigh_u - eig.lambda).abs() / eig.lambda <= 1e-6);
    }

    #[test]
    fn small_lambda_gaps_hold_for_barrier_trial_pair() {
        let mesh = Mesh::build(DomainSpec::interval(0.0, 1.0), 96).unwrap();
        let eig = first_eigenpair(2.0, &mesh, &EigenOptions::default()).unwrap();
        let params = homogeneous_params();
        let star = lambda_star(&params, eig.lambda, eig.lambda).unwrap();
        let trial = eig.phi.powf(2.0);
        let cert = energy_certificate(&params, 0.5 * star, &trial, &trial, eig.lambda, eig.lambda)
            .unwrap();
        assert!(cert.gap_p && cert.gap_q);
        assert_eq!(cert.verdict, EnergyVerdict::NonexistenceEvidence);
        // At 2 λ* at least one gap fails.
        let cert2 = energy_certificate(&params, 2.0 * star, &trial, &trial, eig.lambda, eig.lambda)
            .unwrap();
        assert!(!(cert2.gap_p && cert2.gap_q));
        assert_eq!(cert2.verdict, EnergyVerdict::NoConclusion);
    }

    #[test]
    fn wrong_regime_rejected() {
        let mesh = Mesh::build(DomainSpec::interval(0.0, 1.0), 32).unwrap();
        let f = Field::from_fn(&mesh, |p| p[0] * (1.0 - p[0]));
        let params = ProblemParams {
            beta1: 0.5,
            alpha2: 0.5,
            ..homogeneous_params()
        };
        assert!(energy_certificate(&params, 1.0, &f, &f, 1.0, 1.0).is_err());
    }

    #[test]
    fn manufactured_orders() {
        let table = manufactured_convergence(2.0, &[32, 64, 128]).unwrap();
        assert!(table.min_order() >= 1.8, "{:?}", table);
        let table3 = manufactured_convergence(3.0, &[32, 64, 128]).unwrap();
        assert!(table3.min_order() >= 0.9, "{:?}", table3);
        assert!(manufactured_convergence(2.0, &[32, 64]).is_err());
    }

    #[test]
    fn probe_and_threshold_edge_cases() {
        let params = homogeneous_params();
        let spec = DomainSpec::interval(0.0, 1.0);
        let mesh = Mesh::build(spec, 32).unwrap();
        let tilde = Mesh::build_enlarged(spec, 32).unwrap();
        let b = BarrierBuilder::new(&params, &mesh, &tilde, None, &ScalarSolveOptions::default())
            .unwrap();
        let cfg = crate::solver::SolveConfig::default();
        // lambda must be positive.
        assert!(nonexistence_probe(&b, 0.0, &cfg).is_err());
        // Reversed bracket rejected before any probing.
        assert!(empirical_threshold(&b, 20.0, 1.0, 3, &cfg).is_err());
        // Zero bisection steps return the bracket midpoint.
        let report = empirical_threshold(&b, 2.0, 200.0, 0, &cfg).unwrap();
        assert_eq!(report.lambda_emp, 101.0);
    }

    #[test]
    fn rayleigh_bound_for_suite_fields() {
        let mesh = Mesh::build(DomainSpec::interval(0.0, 1.0), 96).unwrap();
        let eig = first_eigenpair(2.0, &mesh, &EigenOptions::default()).unwrap();
        for field in [
            eig.phi.clone(),
            eig.phi.powf(2.0),
            mesh.distance_to_boundary(),
        ] {
            assert!(rayleigh_lower_bound_holds(&field, 2.0, eig.lambda, 0.02));
        }
    }
}
