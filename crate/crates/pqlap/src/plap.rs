//! Discrete −Δ_r in weak form and the damped-Newton scalar solver.
//!
//! Piecewise-linear elements with one-point (1D) or edge-midpoint (2D)
//! quadrature on the right-hand side. The residual of −Δ_r u = f against the
//! interior hat functions is
//!
//!   R_i = Σ_e |∇u|^{r−2} ∇u·∇φ_i |e|  −  Σ_e Σ_q w_q f(x_q, u(x_q)) φ_i(x_q),
//!
//! always evaluated with the exact degenerate coefficient. The smoothing
//! parameter of [`GradientRegularization`] enters only the Newton matrix,
//! where it replaces |∇u|^{r−2} by (|∇u|² + s²)^{(r−2)/2} to keep the
//! linearization positive definite where the gradient vanishes.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::BandedSpd;
use crate::mesh::{Field, Mesh};

/// Right-hand side f(x, t) of a scalar problem, where t is the unknown's
/// value at the evaluation point.
pub trait SourceTerm {
    fn eval(&self, x: [f64; 2], t: f64) -> f64;
    /// ∂f/∂t, used by the Newton matrix. Defaults to zero for sources that
    /// ignore the unknown.
    fn deriv_t(&self, _x: [f64; 2], _t: f64) -> f64 {
        0.0
    }
}

pub struct Constant(pub f64);

impl SourceTerm for Constant {
    fn eval(&self, _x: [f64; 2], _t: f64) -> f64 {
        self.0
    }
}

/// A fixed nodal field interpolated at quadrature points.
pub struct NodalSource<'a>(pub &'a Field);

impl SourceTerm for NodalSource<'_> {
    fn eval(&self, x: [f64; 2], _t: f64) -> f64 {
        self.0.eval_at(x).unwrap_or(f64::NAN)
    }
}

/// amplitude · (t + shift)^exponent — the η- or ε-shifted singular power.
pub struct ShiftedPower {
    pub amplitude: f64,
    pub exponent: f64,
    pub shift: f64,
}

impl SourceTerm for ShiftedPower {
    fn eval(&self, _x: [f64; 2], t: f64) -> f64 {
        self.amplitude * (t + self.shift).powf(self.exponent)
    }

    fn deriv_t(&self, _x: [f64; 2], t: f64) -> f64 {
        self.amplitude * self.exponent * (t + self.shift).powf(self.exponent - 1.0)
    }
}

/// scale · sign(w) |w|^{r−1} for a frozen field w; the inverse-iteration load.
pub struct SignedPower<'a> {
    pub field: &'a Field,
    pub exponent: f64,
    pub scale: f64,
}

impl SourceTerm for SignedPower<'_> {
    fn eval(&self, x: [f64; 2], _t: f64) -> f64 {
        let w = self.field.eval_at(x).unwrap_or(f64::NAN);
        self.scale * w.signum() * w.abs().powf(self.exponent)
    }
}

/// scale · (t + shift)^{self_exponent} · w(x)^{other_exponent} with a frozen
/// coupling field w — one equation of the cooperative system with the other
/// unknown frozen.
pub struct CoupledPower<'a> {
    pub scale: f64,
    pub other: &'a Field,
    pub other_exponent: f64,
    pub shift: f64,
    pub self_exponent: f64,
}

impl SourceTerm for CoupledPower<'_> {
    fn eval(&self, x: [f64; 2], t: f64) -> f64 {
        let w = self.other.eval_at(x).unwrap_or(f64::NAN);
        self.scale * (t + self.shift).powf(self.self_exponent) * w.powf(self.other_exponent)
    }

    fn deriv_t(&self, x: [f64; 2], t: f64) -> f64 {
        let w = self.other.eval_at(x).unwrap_or(f64::NAN);
        self.scale
            * self.self_exponent
            * (t + self.shift).powf(self.self_exponent - 1.0)
            * w.powf(self.other_exponent)
    }
}

/// Closure-backed source for manufactured problems.
pub struct FnSource<F, G>
where
    F: Fn([f64; 2], f64) -> f64,
    G: Fn([f64; 2], f64) -> f64,
{
    pub f: F,
    pub df: G,
}

impl<F, G> SourceTerm for FnSource<F, G>
where
    F: Fn([f64; 2], f64) -> f64,
    G: Fn([f64; 2], f64) -> f64,
{
    fn eval(&self, x: [f64; 2], t: f64) -> f64 {
        (self.f)(x, t)
    }

    fn deriv_t(&self, x: [f64; 2], t: f64) -> f64 {
        (self.df)(x, t)
    }
}

#[inline]
fn flux_coefficient(g2: f64, s2: f64, r: f64) -> f64 {
    // (|g|² + s²)^{(r-2)/2}; exact limit 0·|0|^{r-2} = 0 handled by caller.
    (g2 + s2).powf(0.5 * (r - 2.0))
}

fn check_exponent(r: f64) -> Result<()> {
    if !(r > 1.0) || !r.is_finite() {
        return Err(Error::Param(format!("operator exponent must exceed 1, got {r}")));
    }
    Ok(())
}

/// Weak residual of −Δ_r u = f at every node; boundary entries are zero.
///
/// The Dirichlet data of `u` is the caller's responsibility: entries are only
/// meaningful at interior nodes, and fields with nonzero boundary values
/// (one-sided comparison fields) are legal inputs.
pub fn weak_residual(r: f64, u: &Field, src: &dyn SourceTerm) -> Result<Vec<f64>> {
    check_exponent(r)?;
    let mesh = &u.mesh;
    let mut res = vec![0.0f64; mesh.num_nodes()];
    for e in mesh.elems() {
        let mut g = [0.0f64; 2];
        for (l, &v) in e.verts[..e.nv].iter().enumerate() {
            g[0] += u.values[v] * e.grads[l][0];
            g[1] += u.values[v] * e.grads[l][1];
        }
        let g2 = g[0] * g[0] + g[1] * g[1];
        let coef = if g2 == 0.0 { 0.0 } else { flux_coefficient(g2, 0.0, r) };
        for (l, &v) in e.verts[..e.nv].iter().enumerate() {
            if mesh.boundary[v] {
                continue;
            }
            res[v] += coef * (g[0] * e.grads[l][0] + g[1] * e.grads[l][1]) * e.measure;
        }
        for (x, phi, w) in e.qpoints[..e.nq].iter() {
            // Evaluate the source only if some interior hat sees this point.
            let mut needed = false;
            for (l, &v) in e.verts[..e.nv].iter().enumerate() {
                if !mesh.boundary[v] && phi[l] != 0.0 {
                    needed = true;
                }
            }
            if !needed {
                continue;
            }
            let mut t = 0.0;
            for (l, &v) in e.verts[..e.nv].iter().enumerate() {
                t += u.values[v] * phi[l];
            }
            let f = src.eval(*x, t);
            if !f.is_finite() {
                return Err(Error::SingularRhs(format!(
                    "source value {f} at quadrature point ({}, {})",
                    x[0], x[1]
                )));
            }
            for (l, &v) in e.verts[..e.nv].iter().enumerate() {
                if !mesh.boundary[v] {
                    res[v] -= w * f * phi[l];
                }
            }
        }
    }
    Ok(res)
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// ∫ |u|^r by the element quadrature rule.
pub fn lp_norm_pow(u: &Field, r: f64) -> f64 {
    let mut acc = 0.0;
    for e in u.mesh.elems() {
        for (_, phi, w) in e.qpoints[..e.nq].iter() {
            let mut t = 0.0;
            for (l, &v) in e.verts[..e.nv].iter().enumerate() {
                t += u.values[v] * phi[l];
            }
            acc += w * t.abs().powf(r);
        }
    }
    acc
}

/// ∫ |∇u|^r; exact for piecewise-linear fields.
pub fn grad_lp_norm_pow(u: &Field, r: f64) -> f64 {
    let mut acc = 0.0;
    for e in u.mesh.elems() {
        let mut g = [0.0f64; 2];
        for (l, &v) in e.verts[..e.nv].iter().enumerate() {
            g[0] += u.values[v] * e.grads[l][0];
            g[1] += u.values[v] * e.grads[l][1];
        }
        acc += e.measure * (g[0] * g[0] + g[1] * g[1]).powf(0.5 * r);
    }
    acc
}

/// Discrete Rayleigh quotient ‖∇u‖_r^r / ‖u‖_r^r.
pub fn rayleigh_quotient(u: &Field, r: f64) -> f64 {
    grad_lp_norm_pow(u, r) / lp_norm_pow(u, r)
}

/// Smoothing schedule for the degenerate diffusion coefficient in the Newton
/// matrix. The schedule decreases toward zero; the residual itself is always
/// evaluated at s = 0.
#[derive(Debug, Clone)]
pub struct GradientRegularization {
    pub schedule: Vec<f64>,
}

impl Default for GradientRegularization {
    fn default() -> Self {
        GradientRegularization {
            schedule: vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10],
        }
    }
}

impl GradientRegularization {
    pub fn validate(&self) -> Result<()> {
        if self.schedule.is_empty() {
            return Err(Error::Param("empty smoothing schedule".into()));
        }
        for w in self.schedule.windows(2) {
            if !(w[1] < w[0]) {
                return Err(Error::Param("smoothing schedule must decrease".into()));
            }
        }
        if *self.schedule.last().unwrap() > 1e-10 {
            return Err(Error::Param("smoothing schedule must end at or below 1e-10".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ScalarSolveOptions {
    /// Sup-norm target for the weak residual.
    pub tol: f64,
    pub max_iter_per_stage: usize,
    pub max_backtracks: usize,
    pub smoothing: GradientRegularization,
    /// Abort when the iterate magnitude exceeds this cap.
    pub divergence_cap: f64,
}

impl Default for ScalarSolveOptions {
    fn default() -> Self {
        ScalarSolveOptions {
            tol: 1e-10,
            max_iter_per_stage: 60,
            max_backtracks: 30,
            smoothing: GradientRegularization::default(),
            divergence_cap: 1e12,
        }
    }
}

struct DofMap {
    dof_of_node: Vec<Option<usize>>,
    node_of_dof: Vec<usize>,
    bandwidth: usize,
}

fn dof_map(mesh: &Arc<Mesh>) -> DofMap {
    let mut dof_of_node = vec![None; mesh.num_nodes()];
    let mut node_of_dof = Vec::new();
    for &k in mesh.interior_nodes() {
        dof_of_node[k] = Some(node_of_dof.len());
        node_of_dof.push(k);
    }
    let mut bandwidth = 0usize;
    for e in mesh.elems() {
        let dofs: Vec<usize> = e.verts[..e.nv]
            .iter()
            .filter_map(|&v| dof_of_node[v])
            .collect();
        for &a in &dofs {
            for &b in &dofs {
                bandwidth = bandwidth.max(a.abs_diff(b));
            }
        }
    }
    DofMap {
        dof_of_node,
        node_of_dof,
        bandwidth,
    }
}

fn assemble_newton_matrix(
    r: f64,
    s: f64,
    u: &Field,
    src: &dyn SourceTerm,
    dofs: &DofMap,
) -> BandedSpd {
    let mesh = &u.mesh;
    let mut mat = BandedSpd::zeros(dofs.node_of_dof.len(), dofs.bandwidth);
    let s2 = s * s;
    for e in mesh.elems() {
        let mut g = [0.0f64; 2];
        for (l, &v) in e.verts[..e.nv].iter().enumerate() {
            g[0] += u.values[v] * e.grads[l][0];
            g[1] += u.values[v] * e.grads[l][1];
        }
        let g2 = g[0] * g[0] + g[1] * g[1];
        let base = g2 + s2;
        let a = if base == 0.0 {
            // r = 2 is the Laplacian; for r > 2 the coefficient vanishes with
            // the gradient. (r < 2 always carries s > 0.)
            if r == 2.0 { 1.0 } else { 0.0 }
        } else {
            flux_coefficient(g2, s2, r)
        };
        let b = if r == 2.0 || base == 0.0 {
            0.0
        } else {
            (r - 2.0) * base.powf(0.5 * r - 2.0)
        };
        for (li, &vi) in e.verts[..e.nv].iter().enumerate() {
            let Some(di) = dofs.dof_of_node[vi] else { continue };
            let gi = g[0] * e.grads[li][0] + g[1] * e.grads[li][1];
            for (lj, &vj) in e.verts[..e.nv].iter().enumerate() {
                let Some(dj) = dofs.dof_of_node[vj] else { continue };
                let gj = g[0] * e.grads[lj][0] + g[1] * e.grads[lj][1];
                let dot = e.grads[li][0] * e.grads[lj][0] + e.grads[li][1] * e.grads[lj][1];
                mat.add(di, dj, (a * dot + b * gi * gj) * e.measure);
            }
        }
        for (x, phi, w) in e.qpoints[..e.nq].iter() {
            let mut t = 0.0;
            for (l, &v) in e.verts[..e.nv].iter().enumerate() {
                t += u.values[v] * phi[l];
            }
            let mut df = 0.0;
            let mut have_df = false;
            for (li, &vi) in e.verts[..e.nv].iter().enumerate() {
                let Some(di) = dofs.dof_of_node[vi] else { continue };
                if phi[li] == 0.0 {
                    continue;
                }
                for (lj, &vj) in e.verts[..e.nv].iter().enumerate() {
                    let Some(dj) = dofs.dof_of_node[vj] else { continue };
                    if phi[lj] == 0.0 {
                        continue;
                    }
                    if !have_df {
                        df = src.deriv_t(*x, t);
                        have_df = true;
                    }
                    if df != 0.0 && df.is_finite() {
                        mat.add(di, dj, -w * df * phi[li] * phi[lj]);
                    }
                }
            }
        }
    }
    mat
}

/// Optional nodal bounds for the scalar solve.
#[derive(Clone, Copy, Default)]
pub struct Bounds<'a> {
    pub lo: Option<&'a Field>,
    pub hi: Option<&'a Field>,
}

impl Bounds<'_> {
    fn clamp(&self, u: &mut Field) {
        if let Some(lo) = self.lo {
            for k in 0..u.values.len() {
                u.values[k] = u.values[k].max(lo.values[k]);
            }
        }
        if let Some(hi) = self.hi {
            for k in 0..u.values.len() {
                u.values[k] = u.values[k].min(hi.values[k]);
            }
        }
    }
}

/// Solve −Δ_r u = f(x, u) with zero Dirichlet data by damped Newton with
/// coefficient-smoothing continuation.
///
/// When bounds are given the iterate is clamped into them after every
/// accepted step; convergence is judged on the clamped iterate. Stagnation
/// (residual reduction below 1e−3 over 20 iterations with the schedule
/// exhausted) is an explicit error, never a silently returned bad field.
pub fn solve_scalar(
    r: f64,
    src: &dyn SourceTerm,
    bounds: Bounds<'_>,
    init: &Field,
    opts: &ScalarSolveOptions,
) -> Result<Field> {
    check_exponent(r)?;
    opts.smoothing.validate()?;
    let mesh = Arc::clone(&init.mesh);
    let dofs = dof_map(&mesh);
    let mut u = init.clone();
    for k in 0..u.values.len() {
        if mesh.boundary[k] {
            u.values[k] = 0.0;
        }
    }
    bounds.clamp(&mut u);

    let mut res = weak_residual(r, &u, src)?;
    let mut res_norm = sup_norm(&res);
    let mut history = vec![res_norm];

    // r = 2 has no degeneracy; a single exact stage suffices.
    let stages: Vec<f64> = if (r - 2.0).abs() < 1e-14 {
        vec![0.0]
    } else {
        opts.smoothing.schedule.clone()
    };

    'stages: for &s in &stages {
        let mut stage_start = res_norm;
        let mut iters_since_check = 0usize;
        for _ in 0..opts.max_iter_per_stage {
            if res_norm <= opts.tol {
                break 'stages;
            }
            let mat = assemble_newton_matrix(r, s, &u, src, &dofs);
            let rhs: Vec<f64> = dofs.node_of_dof.iter().map(|&k| -res[k]).collect();
            let delta = match mat.solve(&rhs) {
                Ok(d) => d,
                Err(_) => continue 'stages,
            };
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..=opts.max_backtracks {
                let mut trial = u.clone();
                for (d, &k) in dofs.node_of_dof.iter().enumerate() {
                    trial.values[k] += step * delta[d];
                }
                bounds.clamp(&mut trial);
                if let Ok(trial_res) = weak_residual(r, &trial, src) {
                    let trial_norm = sup_norm(&trial_res);
                    if trial_norm.is_finite() && trial_norm < res_norm {
                        u = trial;
                        res = trial_res;
                        res_norm = trial_norm;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                continue 'stages;
            }
            if u.max_abs() > opts.divergence_cap {
                return Err(Error::Nonconvergence(format!(
                    "scalar solve diverged: |u| exceeded {}",
                    opts.divergence_cap
                )));
            }
            history.push(res_norm);
            iters_since_check += 1;
            if iters_since_check == 20 {
                if res_norm > 1e-3 * stage_start {
                    // Stagnating at this smoothing level; try the next one.
                    continue 'stages;
                }
                stage_start = res_norm;
                iters_since_check = 0;
            }
        }
    }

    if res_norm <= opts.tol {
        Ok(u)
    } else {
        let tail: Vec<String> = history.iter().rev().take(6).map(|v| format!("{v:.3e}")).collect();
        Err(Error::Nonconvergence(format!(
            "Newton stagnated at residual {res_norm:.3e} (target {:.1e}); recent norms: {}",
            opts.tol,
            tail.join(", ")
        )))
    }
}
