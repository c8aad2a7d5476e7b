//! Crank–Nicolson solver for `ξ_t = γ² ξ_xx` on `[0, 1]` with
//! `ξ(0, x) = sin(πx)` and homogeneous Dirichlet boundaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatConfig {
    /// Thermal diffusivity parameter γ; the equation uses γ².
    pub gamma: f64,
    /// Grid points on `[0, 1]`, boundaries included.
    pub nx: usize,
    /// Number of snapshots, `t = 0` included.
    pub nt: usize,
    pub t_final: f64,
}

impl Default for HeatConfig {
    fn default() -> Self {
        HeatConfig {
            gamma: 0.05,
            nx: 101,
            nt: 501,
            t_final: 5.0,
        }
    }
}

impl HeatConfig {
    pub fn with_gamma(gamma: f64) -> Self {
        HeatConfig {
            gamma,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!("gamma must be positive, got {}", self.gamma)));
        }
        if self.nx < 3 {
            return Err(Error::InvalidConfig("heat grid needs nx >= 3".into()));
        }
        if self.nt < 2 {
            return Err(Error::InvalidConfig("heat grid needs nt >= 2".into()));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidConfig("final time must be positive".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let dx = 1.0 / (self.nx - 1) as f64;
        (0..self.nx).map(|i| i as f64 * dx).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        let dt = self.t_final / (self.nt - 1) as f64;
        (0..self.nt).map(|k| k as f64 * dt).collect()
    }
}

/// `e^{−γ²π²t} sin(πx)`, the exact solution for this initial condition.
pub fn heat_exact(gamma: f64, t: f64, x: f64) -> f64 {
    (-gamma * gamma * std::f64::consts::PI.powi(2) * t).exp() * (std::f64::consts::PI * x).sin()
}

/// `nx × nt` snapshot matrix of the Crank–Nicolson solution.
pub fn heat_snapshots(cfg: &HeatConfig) -> Result<DenseMatrix> {
    cfg.validate()?;
    let (nx, nt) = (cfg.nx, cfg.nt);
    let dx = 1.0 / (nx - 1) as f64;
    let dt = cfg.t_final / (nt - 1) as f64;
    let mu = cfg.gamma * cfg.gamma * dt / (dx * dx);

    let x = cfg.grid();
    let mut data = Vec::with_capacity(nx * nt);
    data.extend(x.iter().map(|&xi| (std::f64::consts::PI * xi).sin()));

    // interior unknowns; (1 + μ) on the diagonal, −μ/2 off it
    let m = nx - 2;
    let diag = 1.0 + mu;
    let off = -0.5 * mu;
    // forward-elimination factors of the constant tridiagonal matrix
    let mut c_prime = vec![0.0; m];
    let mut pivots = vec![0.0; m];
    pivots[0] = diag;
    for i in 1..m {
        c_prime[i - 1] = off / pivots[i - 1];
        pivots[i] = diag - off * c_prime[i - 1];
    }

    let mut u: Vec<f64> = data[1..nx - 1].to_vec();
    let mut rhs = vec![0.0; m];
    for _ in 1..nt {
        for i in 0..m {
            let left = if i > 0 { u[i - 1] } else { 0.0 };
            let right = if i + 1 < m { u[i + 1] } else { 0.0 };
            rhs[i] = (1.0 - mu) * u[i] + 0.5 * mu * (left + right);
        }
        // Thomas sweep
        u[0] = rhs[0] / pivots[0];
        for i in 1..m {
            u[i] = (rhs[i] - off * u[i - 1]) / pivots[i];
        }
        for i in (0..m - 1).rev() {
            u[i] -= c_prime[i] * u[i + 1];
        }
        data.push(0.0);
        data.extend_from_slice(&u);
        data.push(0.0);
    }
    DenseMatrix::from_column_major(nx, nt, data)
}
