//! Parameter validation and the closed-form constants of the cooperative
//! singular system: the homogeneity constant Θ, the sign σ, the coupling
//! exponent k, the regularization ceiling ε₀, and the nonexistence threshold
//! λ*.

use crate::error::{Error, Result};

/// Exponents and parameters of the system
///
///   −Δ_p u = λ u^{α₁} v^{β₁},   −Δ_q v = λ u^{α₂} v^{β₂},
///
/// with the cooperative singular sign pattern α₁, β₂ < 0 < α₂, β₁, together
/// with the barrier power γ > 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemParams {
    pub p: f64,
    pub q: f64,
    pub alpha1: f64,
    pub beta1: f64,
    pub alpha2: f64,
    pub beta2: f64,
    pub lambda: f64,
    pub gamma: f64,
}

/// Homogeneity regime by the sign of Θ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Subhomogeneous,
    Homogeneous,
    Superhomogeneous,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Subhomogeneous => "subhomogeneous",
            Regime::Homogeneous => "homogeneous",
            Regime::Superhomogeneous => "superhomogeneous",
        }
    }
}

/// Admissible window for the coupling exponent k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KInterval {
    /// Θ = 0 leaves k free (σ = 0 removes every C^{σk} factor).
    Free,
    Open(f64, f64),
}

/// Outcome of validating a parameter set.
#[derive(Debug, Clone, Copy)]
pub struct Classification {
    pub theta: f64,
    pub sigma: i32,
    pub regime: Regime,
    pub h1: bool,
    pub h_prime: bool,
    pub h_doubleprime: bool,
    pub c: bool,
    pub c2: bool,
    pub k: f64,
    pub k_interval: KInterval,
}

/// Relative tolerance snapping Θ to zero and testing the equalities of the
/// homogeneous coupling condition.
pub const THETA_TOL: f64 = 1e-12;

/// Θ = (p−1−α₁)(q−1−β₂) − β₁ α₂, exact arithmetic on the inputs.
pub fn theta(params: &ProblemParams) -> f64 {
    (params.p - 1.0 - params.alpha1) * (params.q - 1.0 - params.beta2)
        - params.beta1 * params.alpha2
}

/// σ = −sgn(Θ): 1 if Θ < 0, 0 if Θ = 0, −1 if Θ > 0.
pub fn sigma(theta: f64) -> i32 {
    if theta < 0.0 {
        1
    } else if theta == 0.0 {
        0
    } else {
        -1
    }
}

fn theta_snapped(params: &ProblemParams) -> f64 {
    let t = theta(params);
    let scale = ((params.p - 1.0 - params.alpha1) * (params.q - 1.0 - params.beta2))
        .abs()
        .max((params.beta1 * params.alpha2).abs())
        .max(1.0);
    if t.abs() <= THETA_TOL * scale {
        0.0
    } else {
        t
    }
}

/// Coupling exponent: the midpoint of the admissible open window, or k = 1
/// when Θ = 0.
pub fn choose_k(params: &ProblemParams, theta: f64) -> Result<(f64, KInterval)> {
    if theta == 0.0 {
        return Ok((1.0, KInterval::Free));
    }
    let lo_raw = (params.p - 1.0 - params.alpha1) / params.beta1;
    let hi_raw = params.alpha2 / (params.q - 1.0 - params.beta2);
    let (lo, hi) = if theta < 0.0 { (lo_raw, hi_raw) } else { (hi_raw, lo_raw) };
    if !(lo < hi) {
        // The sign of Θ guarantees a nonempty window; reaching this branch
        // means the floating evaluation disagrees with itself.
        return Err(Error::Param(format!(
            "empty coupling window ({lo}, {hi}) despite theta = {theta}"
        )));
    }
    let k = 0.5 * (lo + hi);
    debug_assert!(lo < k && k < hi);
    Ok((k, KInterval::Open(lo, hi)))
}

/// ε₀ = min{C^σ, C^{σk}} for C > 1.
pub fn epsilon0(c: f64, sigma: i32, k: f64) -> Result<f64> {
    if !(c > 1.0) {
        return Err(Error::Param(format!("amplitude constant must exceed 1, got {c}")));
    }
    let s = sigma as f64;
    Ok(c.powf(s).min(c.powf(s * k)))
}

/// λ* = min{ p λ₁,p / (α₁+α₂+1), q λ₁,q / (β₁+β₂+1) }, defined in the
/// homogeneous regime with singular exponents in (−1, 0) and the coupling
/// equalities in force.
pub fn lambda_star(params: &ProblemParams, lam1p: f64, lam1q: f64) -> Result<f64> {
    let class = params.classify()?;
    if class.regime != Regime::Homogeneous {
        return Err(Error::Param(format!(
            "threshold requires the homogeneous regime, got theta = {}",
            class.theta
        )));
    }
    if !class.c {
        return Err(Error::Param(
            "threshold requires singular exponents in (-1, 0)".into(),
        ));
    }
    if !class.c2 {
        return Err(Error::Param(
            "threshold requires the homogeneous coupling equality".into(),
        ));
    }
    let su = params.alpha1 + params.alpha2 + 1.0;
    let sv = params.beta1 + params.beta2 + 1.0;
    if !(su > 0.0) || !(sv > 0.0) {
        return Err(Error::Param(format!(
            "threshold requires positive exponent sums, got {su} and {sv}"
        )));
    }
    Ok((params.p / su * lam1p).min(params.q / sv * lam1q))
}

impl ProblemParams {
    /// Check every hypothesis and compute the derived constants. Only the
    /// cooperative sign pattern, p, q > 1, γ > 1 and λ > 0 are hard errors;
    /// the remaining flags are advisory.
    pub fn classify(&self) -> Result<Classification> {
        if !(self.p > 1.0) || !(self.q > 1.0) {
            return Err(Error::Param(format!(
                "operator exponents must exceed 1, got p = {}, q = {}",
                self.p, self.q
            )));
        }
        if !(self.gamma > 1.0) {
            return Err(Error::Param(format!("barrier power must exceed 1, got {}", self.gamma)));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::Param(format!("lambda must be positive, got {}", self.lambda)));
        }
        for (name, value, want_negative) in [
            ("alpha1", self.alpha1, true),
            ("beta2", self.beta2, true),
            ("alpha2", self.alpha2, false),
            ("beta1", self.beta1, false),
        ] {
            let ok = if want_negative { value < 0.0 } else { value > 0.0 };
            if !ok {
                let side = if want_negative { "negative" } else { "positive" };
                return Err(Error::Param(format!(
                    "not cooperative-singular: exponent {name} = {value} must be {side}"
                )));
            }
        }
        let theta_raw = theta(self);
        let theta_s = theta_snapped(self);
        let sig = sigma(theta_s);
        let regime = match sig {
            -1 => Regime::Subhomogeneous,
            0 => Regime::Homogeneous,
            _ => Regime::Superhomogeneous,
        };
        let h_prime = self.alpha1 > -1.0 - 1.0 / self.gamma && self.beta2 > -1.0 - 1.0 / self.gamma;
        let h_doubleprime = self.alpha1 > -1.0 / self.gamma && self.beta2 > -1.0 / self.gamma;
        let c = self.alpha1 > -1.0 && self.alpha1 < 0.0 && self.beta2 > -1.0 && self.beta2 < 0.0;
        let c2_first = {
            let target = self.q / self.p * (self.p - 1.0 - self.alpha1);
            (self.beta1 - target).abs() <= THETA_TOL * target.abs().max(1.0)
        };
        let c2_second = {
            let target = self.p / self.q * (self.q - 1.0 - self.beta2);
            (self.alpha2 - target).abs() <= THETA_TOL * target.abs().max(1.0)
        };
        let (k, k_interval) = choose_k(self, theta_s)?;
        Ok(Classification {
            theta: theta_raw,
            sigma: sig,
            regime,
            h1: true,
            h_prime,
            h_doubleprime,
            c,
            c2: c2_first || c2_second,
            k,
            k_interval,
        })
    }
}

impl Classification {
    /// Key/value report consumed by the `classify` command.
    pub fn report(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("theta: {:?}\n", self.theta));
        out.push_str(&format!("sigma: {}\n", self.sigma));
        out.push_str(&format!("regime: {}\n", self.regime.as_str()));
        out.push_str(&format!("h1: {}\n", self.h1));
        out.push_str(&format!("h_prime: {}\n", self.h_prime));
        out.push_str(&format!("h_doubleprime: {}\n", self.h_doubleprime));
        out.push_str(&format!("c: {}\n", self.c));
        out.push_str(&format!("c2: {}\n", self.c2));
        out.push_str(&format!("k: {:?}\n", self.k));
        match self.k_interval {
            KInterval::Free => out.push_str("k_interval: free\n"),
            KInterval::Open(lo, hi) => {
                out.push_str(&format!("k_interval: ({lo:?}, {hi:?})\n"));
            }
        }
        out
    }
}
