//! Cross-checks of the element solver against an independent dense-grid
//! finite-difference oracle. The oracle discretizes the strong form by
//! centered differences at the nodes and carries its own tridiagonal Newton
//! and sweep loops, sharing no code with the element path it checks.

use pqlap::barrier::BarrierBuilder;
use pqlap::mesh::{DomainSpec, Mesh};
use pqlap::plap::ScalarSolveOptions;
use pqlap::problem::ProblemParams;
use pqlap::solver::{solve_regularized, SolveConfig};

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

/// Thomas algorithm for a symmetric tridiagonal system with constant
/// off-diagonal.
fn thomas(diag: &[f64], off: f64, rhs: &[f64]) -> Vec<f64> {
    let m = diag.len();
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    c[0] = off / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..m {
        let denom = diag[i] - off * c[i - 1];
        c[i] = off / denom;
        d[i] = (rhs[i] - off * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; m];
    x[m - 1] = d[m - 1];
    for i in (0..m - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Newton on the collocated scalar equation −u'' = g(x_i, u_i) with zero
/// boundary data on a uniform grid of m cells.
fn fd_scalar_solve(
    m: usize,
    init: &[f64],
    g: impl Fn(f64, f64) -> f64,
    dg: impl Fn(f64, f64) -> f64,
) -> Vec<f64> {
    let h = 1.0 / m as f64;
    let mut u = init.to_vec();
    for _ in 0..80 {
        let mut diag = vec![0.0; m - 1];
        let mut rhs = vec![0.0; m - 1];
        let mut worst: f64 = 0.0;
        for i in 1..m {
            let x = i as f64 * h;
            let lap = (2.0 * u[i] - u[i - 1] - u[i + 1]) / (h * h);
            let res = lap - g(x, u[i]);
            worst = worst.max(res.abs());
            rhs[i - 1] = -res;
            diag[i - 1] = 2.0 / (h * h) - dg(x, u[i]);
        }
        if worst < 1e-12 {
            break;
        }
        let delta = thomas(&diag, -1.0 / (h * h), &rhs);
        for i in 1..m {
            u[i] += delta[i - 1];
        }
    }
    u
}

/// Gauss–Seidel on the collocated regularized system at fixed shift.
fn fd_system_solve(m: usize, params: &ProblemParams, lambda: f64, eps: f64) -> (Vec<f64>, Vec<f64>) {
    let h = 1.0 / m as f64;
    let seed: Vec<f64> = (0..=m)
        .map(|i| {
            let x = i as f64 * h;
            x * (1.0 - x)
        })
        .collect();
    let mut u = seed.clone();
    let mut v = seed;
    for _ in 0..400 {
        let vv = v.clone();
        let interp_v = |x: f64| {
            let i = ((x * m as f64).floor() as usize).min(m - 1);
            let t = x * m as f64 - i as f64;
            vv[i] * (1.0 - t) + vv[i + 1] * t
        };
        let a1 = params.alpha1;
        let b1 = params.beta1;
        let u_new = fd_scalar_solve(
            m,
            &u,
            |x, t| lambda * (t + eps).powf(a1) * interp_v(x).powf(b1),
            |x, t| lambda * a1 * (t + eps).powf(a1 - 1.0) * interp_v(x).powf(b1),
        );
        let uu = u_new.clone();
        let interp_u = |x: f64| {
            let i = ((x * m as f64).floor() as usize).min(m - 1);
            let t = x * m as f64 - i as f64;
            uu[i] * (1.0 - t) + uu[i + 1] * t
        };
        let a2 = params.alpha2;
        let b2 = params.beta2;
        let v_new = fd_scalar_solve(
            m,
            &v,
            |x, t| lambda * interp_u(x).powf(a2) * (t + eps).powf(b2),
            |x, t| lambda * b2 * interp_u(x).powf(a2) * (t + eps).powf(b2 - 1.0),
        );
        let diff = u_new
            .iter()
            .zip(&u)
            .chain(v_new.iter().zip(&v))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        u = u_new;
        v = v_new;
        if diff < 1e-12 {
            break;
        }
    }
    (u, v)
}

#[test]
fn regularized_solve_matches_dense_collocation() {
    let params = reference_params();
    let lambda = 1.0;
    let eps = 1e-2;
    let n = 256usize;
    let spec = DomainSpec::interval(0.0, 1.0);
    let mesh = Mesh::build(spec, n).unwrap();
    let tilde = Mesh::build_enlarged(spec, n).unwrap();
    let b = BarrierBuilder::new(&params, &mesh, &tilde, None, &ScalarSolveOptions::default())
        .unwrap();
    let (c, _) = b.select_c(lambda).unwrap();
    let pair = b.barrier_pair(c).unwrap();
    // The 1e-2 shift sits above the certified ceiling of the selected
    // amplitude, so the solve runs untrapped; the oracle validates the field
    // values directly.
    let cfg = SolveConfig {
        clamp: false,
        enforce_trapping: false,
        ..SolveConfig::default()
    };
    let (u, v, stats) = solve_regularized(
        &params,
        lambda,
        eps,
        &pair,
        (&pair.lower_u, &pair.lower_v),
        &cfg,
    )
    .unwrap();
    assert!(stats.res_u <= 1e-8 && stats.res_v <= 1e-8);

    let m = 2048usize;
    let (fu, fv) = fd_system_solve(m, &params, lambda, eps);
    let stride = m / n;
    let mut worst: f64 = 0.0;
    for (k, &[x, _]) in mesh.nodes.iter().enumerate() {
        let i = (x * m as f64).round() as usize;
        assert_eq!(i % stride, 0);
        worst = worst.max((u.values[k] - fu[i]).abs());
        worst = worst.max((v.values[k] - fv[i]).abs());
    }
    assert!(worst <= 5e-3, "element vs collocation gap {worst:.3e}");
    println!("dense-grid oracle gap at eps=1e-2: {worst:.3e}");
}

#[test]
fn lambda_monotonicity_on_dense_grid() {
    let params = reference_params();
    let m = 2048usize;
    let eps = 1e-4;
    let (u1, v1) = fd_system_solve(m, &params, 1.0, eps);
    let (u2, v2) = fd_system_solve(m, &params, 2.0, eps);
    for i in 0..=m {
        assert!(u2[i] >= u1[i] - 1e-8);
        assert!(v2[i] >= v1[i] - 1e-8);
    }
}
