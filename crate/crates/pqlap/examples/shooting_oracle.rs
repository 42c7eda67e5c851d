//! Generator for the eigenvalue oracle fixture used by the acceptance suite.
//!
//! The first Dirichlet eigenvalue of −(|u'|^{r−2}u')' = λ |u|^{r−2} u on
//! (0, 1) is found by shooting: integrate the flux-form first-order system
//!
//!   u' = sign(w) |w|^{1/(r−1)},   w' = −λ |u|^{r−2} u,   u(0) = 0, w(0) = 1,
//!
//! with fixed-step RK4 and bisect λ on the sign of u(1). The result is
//! cross-checked against the closed form (r−1) (2π / (r sin(π/r)))^r coming
//! from the quadrature of the separated first integral.
//!
//! Run `cargo run --example shooting_oracle -- write` to regenerate
//! `tests/fixtures/eigen_shooting.txt`.

use std::f64::consts::PI;

fn endpoint_value(r: f64, lambda: f64, steps: usize) -> f64 {
    let h = 1.0 / steps as f64;
    let inv = 1.0 / (r - 1.0);
    let rhs = |u: f64, w: f64| -> (f64, f64) {
        (w.signum() * w.abs().powf(inv), -lambda * u.signum() * u.abs().powf(r - 1.0))
    };
    let mut u = 0.0f64;
    let mut w = 1.0f64;
    for _ in 0..steps {
        let (k1u, k1w) = rhs(u, w);
        let (k2u, k2w) = rhs(u + 0.5 * h * k1u, w + 0.5 * h * k1w);
        let (k3u, k3w) = rhs(u + 0.5 * h * k2u, w + 0.5 * h * k2w);
        let (k4u, k4w) = rhs(u + h * k3u, w + h * k3w);
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
    }
    u
}

fn shoot_eigenvalue(r: f64) -> f64 {
    let steps = 200_000;
    // u(1; λ) changes sign at every eigenvalue; march to the first sign
    // change before bisecting so the bracket cannot straddle a higher one.
    let mut lo = 1.0;
    assert!(endpoint_value(r, lo, steps) > 0.0);
    let mut hi = lo;
    loop {
        hi += 1.0;
        if endpoint_value(r, hi, steps) < 0.0 {
            break;
        }
        lo = hi;
        assert!(hi < 1000.0, "no sign change found");
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if endpoint_value(r, mid, steps) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn closed_form(r: f64) -> f64 {
    let pi_r = 2.0 * PI / (r * (PI / r).sin());
    (r - 1.0) * pi_r.powf(r)
}

fn main() {
    let mut lines = vec![
        "# First Dirichlet eigenvalues of the 1D r-Laplacian on (0, 1)".to_string(),
        "# shooting method (RK4 + bisection); regenerate with:".to_string(),
        "#   cargo run --example shooting_oracle -- write".to_string(),
    ];
    for r in [2.0f64, 3.0] {
        let shot = shoot_eigenvalue(r);
        let exact = closed_form(r);
        let rel = (shot - exact).abs() / exact;
        assert!(
            rel < 1e-6,
            "shooting value {shot} disagrees with the closed form {exact} (rel {rel:.3e})"
        );
        println!("r={r}: shooting={shot:.12} closed_form={exact:.12} rel_gap={rel:.3e}");
        lines.push(format!("r={r} lambda1={shot:.12}"));
    }
    if std::env::args().any(|a| a == "write") {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/eigen_shooting.txt");
        std::fs::create_dir_all(std::path::Path::new(path).parent().unwrap()).unwrap();
        std::fs::write(path, lines.join("\n") + "\n").unwrap();
        println!("wrote {path}");
    }
}
