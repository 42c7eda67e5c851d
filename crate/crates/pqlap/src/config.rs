//! Flat key/value run configuration.
//!
//! The format is line-based `section.key = value` with `#` comments. Every
//! key has a documented default; unknown keys are rejected by name so typos
//! cannot silently fall back to defaults.

use std::path::Path;

use crate::barrier::BarrierConfig;
use crate::error::{Error, Result};
use crate::mesh::{DomainSpec, Mesh};
use crate::problem::{Classification, ProblemParams};
use crate::solver::SolveConfig;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub domain_dim: usize,
    pub domain_x: [f64; 2],
    pub domain_y: [f64; 2],
    /// Padding of the enlarged domain; defaults to a quarter of the shortest
    /// axis when absent.
    pub domain_padding: Option<f64>,
    pub mesh_n: usize,
    pub mesh_n_tilde: Option<usize>,
    pub problem: ProblemParams,
    pub solve: SolveConfig,
    pub barrier_theta1: Option<f64>,
    pub barrier_theta2: Option<f64>,
    pub barrier_aux_delta: Option<f64>,
    pub barrier_k: Option<f64>,
    pub barrier_c_fixed: Option<f64>,
    pub barrier_c_max_pow: Option<u32>,
    pub barrier_strip_width: Option<f64>,
    pub sweep_lambda_lo: f64,
    pub sweep_lambda_hi: f64,
    pub sweep_count: usize,
    pub threshold_bisection_steps: usize,
    pub output_dir: String,
    /// Recorded for reproducibility of randomized property tests only; the
    /// commands themselves are deterministic.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            domain_dim: 1,
            domain_x: [0.0, 1.0],
            domain_y: [0.0, 1.0],
            domain_padding: None,
            mesh_n: 256,
            mesh_n_tilde: None,
            problem: ProblemParams {
                p: 2.0,
                q: 2.0,
                alpha1: -0.5,
                beta1: 0.5,
                alpha2: 0.5,
                beta2: -0.5,
                lambda: 1.0,
                gamma: 2.0,
            },
            solve: SolveConfig::default(),
            barrier_theta1: None,
            barrier_theta2: None,
            barrier_aux_delta: None,
            barrier_k: None,
            barrier_c_fixed: None,
            barrier_c_max_pow: None,
            barrier_strip_width: None,
            sweep_lambda_lo: 1.0,
            sweep_lambda_hi: 20.0,
            sweep_count: 8,
            threshold_bisection_steps: 10,
            output_dir: "out".to_string(),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected `key = value`, got `{raw}`",
                    lineno + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            cfg.apply(key, value).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("line {}: {msg}", lineno + 1)),
                other => other,
            })?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(RunConfig, Vec<u8>)> {
        let bytes = std::fs::read(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| Error::Config(format!("{} is not UTF-8", path.display())))?;
        Ok((RunConfig::parse(&text)?, bytes))
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("key `{key}`: invalid {what} `{value}`"));
        let f = || value.parse::<f64>().map_err(|_| bad("number"));
        let u = || value.parse::<usize>().map_err(|_| bad("integer"));
        let b = || value.parse::<bool>().map_err(|_| bad("boolean"));
        match key {
            "domain.dim" => self.domain_dim = u()?,
            "domain.x_lo" => self.domain_x[0] = f()?,
            "domain.x_hi" => self.domain_x[1] = f()?,
            "domain.y_lo" => self.domain_y[0] = f()?,
            "domain.y_hi" => self.domain_y[1] = f()?,
            "domain.padding" => self.domain_padding = Some(f()?),
            "mesh.n" => self.mesh_n = u()?,
            "mesh.n_tilde" => self.mesh_n_tilde = Some(u()?),
            "problem.p" => self.problem.p = f()?,
            "problem.q" => self.problem.q = f()?,
            "problem.alpha1" => self.problem.alpha1 = f()?,
            "problem.beta1" => self.problem.beta1 = f()?,
            "problem.alpha2" => self.problem.alpha2 = f()?,
            "problem.beta2" => self.problem.beta2 = f()?,
            "problem.lambda" => self.problem.lambda = f()?,
            "problem.gamma" => self.problem.gamma = f()?,
            "solve.tol_fixedpoint" => self.solve.tol_fixedpoint = f()?,
            "solve.tol_newton" => self.solve.tol_newton = f()?,
            "solve.tol_residual" => self.solve.tol_residual = f()?,
            "solve.tol_system_residual" => self.solve.tol_system_residual = f()?,
            "solve.max_sweeps" => self.solve.max_sweeps = u()?,
            "solve.eps_stages" => self.solve.eps_stages = u()?,
            "solve.clamp" => self.solve.clamp = b()?,
            "barrier.theta1" => self.barrier_theta1 = Some(f()?),
            "barrier.theta2" => self.barrier_theta2 = Some(f()?),
            "barrier.aux_delta" => self.barrier_aux_delta = Some(f()?),
            "barrier.k" => self.barrier_k = Some(f()?),
            "barrier.c" => self.barrier_c_fixed = Some(f()?),
            "barrier.c_max_pow" => {
                self.barrier_c_max_pow =
                    Some(value.parse::<u32>().map_err(|_| bad("integer"))?)
            }
            "barrier.strip_width" => self.barrier_strip_width = Some(f()?),
            "sweep.lambda_lo" => self.sweep_lambda_lo = f()?,
            "sweep.lambda_hi" => self.sweep_lambda_hi = f()?,
            "sweep.count" => self.sweep_count = u()?,
            "threshold.bisection_steps" => self.threshold_bisection_steps = u()?,
            "output.dir" => self.output_dir = value.to_string(),
            "seed" => self.seed = value.parse::<u64>().map_err(|_| bad("integer"))?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn domain_spec(&self) -> Result<DomainSpec> {
        let mut spec = match self.domain_dim {
            1 => DomainSpec::interval(self.domain_x[0], self.domain_x[1]),
            2 => DomainSpec::rectangle(self.domain_x, self.domain_y),
            d => return Err(Error::Config(format!("domain.dim must be 1 or 2, got {d}"))),
        };
        if let Some(p) = self.domain_padding {
            spec = spec.with_padding(p);
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn n_tilde(&self) -> usize {
        self.mesh_n_tilde.unwrap_or(self.mesh_n)
    }

    /// Barrier configuration with defaults filled from the classification and
    /// mesh, then overridden by any explicit keys.
    pub fn barrier_config(&self, class: &Classification, mesh: &Mesh) -> BarrierConfig {
        let mut cfg = BarrierConfig::defaults(&self.problem, class, mesh);
        if let Some(v) = self.barrier_k {
            cfg.k = v;
        }
        if let Some(v) = self.barrier_theta1 {
            cfg.theta1 = v;
        }
        if let Some(v) = self.barrier_theta2 {
            cfg.theta2 = v;
        }
        if let Some(v) = self.barrier_aux_delta {
            cfg.aux_delta = v;
        } else if self.barrier_theta1.is_some() || self.barrier_theta2.is_some() || self.barrier_k.is_some()
        {
            cfg.aux_delta = 2.0
                * ((self.problem.p - 1.0) / cfg.theta1)
                    .min(cfg.k * (self.problem.q - 1.0) / cfg.theta2);
        }
        if let Some(v) = self.barrier_c_fixed {
            cfg.c_fixed = v;
        }
        if let Some(v) = self.barrier_c_max_pow {
            cfg.c_max_pow = v;
        }
        if let Some(v) = self.barrier_strip_width {
            cfg.strip_width = v;
        }
        cfg
    }
}
