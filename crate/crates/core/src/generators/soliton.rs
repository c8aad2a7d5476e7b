//! Split-step Fourier solver for the focusing nonlinear Schrödinger equation
//! `ξ_t = i ξ_xx + i |ξ|² ξ` on a periodic interval, started from a sum of
//! single-soliton profiles.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Relative mass drift beyond which a run is rejected.
pub const MASS_DRIFT_LIMIT: f64 = 1e-3;

/// One soliton in the initial condition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub speed: f64,
    pub position: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolitonConfig {
    /// Amplitude parameter α; peak height is `√(2α)`.
    pub alpha: f64,
    pub pulses: Vec<Pulse>,
    /// Left end of the periodic domain.
    pub x_min: f64,
    /// Domain length `L`.
    pub length: f64,
    pub nx: usize,
    /// Number of snapshots, `t = 0` included.
    pub nt: usize,
    pub t_final: f64,
    /// Split-step substeps between consecutive snapshots.
    pub substeps: usize,
}

impl Default for SolitonConfig {
    fn default() -> Self {
        SolitonConfig {
            alpha: 0.25,
            pulses: vec![
                Pulse {
                    speed: 1.0,
                    position: 0.0,
                },
                Pulse {
                    speed: 0.1,
                    position: 25.0,
                },
            ],
            x_min: -20.0,
            length: 80.0,
            nx: 512,
            nt: 801,
            t_final: 40.0,
            substeps: 10,
        }
    }
}

impl SolitonConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        SolitonConfig {
            alpha,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.nx < 8 {
            return Err(Error::InvalidConfig("soliton grid needs nx >= 8".into()));
        }
        if self.nt < 2 || self.substeps == 0 {
            return Err(Error::InvalidConfig("need nt >= 2 and at least one substep".into()));
        }
        if !(self.length > 0.0 && self.t_final > 0.0) {
            return Err(Error::InvalidConfig("domain length and final time must be positive".into()));
        }
        if self.pulses.is_empty() {
            return Err(Error::InvalidConfig("at least one pulse is required".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let dx = self.length / self.nx as f64;
        (0..self.nx).map(|j| self.x_min + j as f64 * dx).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        let dt = self.t_final / (self.nt - 1) as f64;
        (0..self.nt).map(|k| k as f64 * dt).collect()
    }
}

/// Closed-form single soliton on the real line:
/// `√(2α) exp(i(v(x−x₀)/2 − t(v²/4 − α))) sech(√α (x − x₀ − vt))`.
pub fn soliton_exact(alpha: f64, pulse: Pulse, t: f64, x: f64) -> Complex64 {
    let v = pulse.speed;
    let shifted = x - pulse.position;
    let phase = 0.5 * v * shifted - t * (0.25 * v * v - alpha);
    let envelope = (2.0 * alpha).sqrt() / (alpha.sqrt() * (shifted - v * t)).cosh();
    Complex64::from_polar(envelope, phase)
}

/// The complex field at every snapshot time, one `Vec` per time.
pub fn soliton_field(cfg: &SolitonConfig) -> Result<Vec<Vec<Complex64>>> {
    cfg.validate()?;
    let nx = cfg.nx;
    let x = cfg.grid();
    let dx = cfg.length / nx as f64;
    let h = cfg.t_final / ((cfg.nt - 1) * cfg.substeps) as f64;

    let mut psi: Vec<Complex64> = x
        .iter()
        .map(|&xi| cfg.pulses.iter().map(|&p| soliton_exact(cfg.alpha, p, 0.0, xi)).sum())
        .collect();

    let two_pi_over_l = 2.0 * std::f64::consts::PI / cfg.length;
    let linear: Vec<Complex64> = (0..nx)
        .map(|j| {
            let mode = if j < nx / 2 { j as f64 } else { j as f64 - nx as f64 };
            let k = mode * two_pi_over_l;
            Complex64::from_polar(1.0 / nx as f64, -k * k * h)
        })
        .collect();

    let mut planner = FftPlanner::new();
    let forward: Arc<dyn Fft<f64>> = planner.plan_fft_forward(nx);
    let inverse: Arc<dyn Fft<f64>> = planner.plan_fft_inverse(nx);
    let mut scratch = vec![Complex64::new(0.0, 0.0); forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len())];

    let mass = |f: &[Complex64]| f.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx;
    let mass0 = mass(&psi);

    let half_nonlinear = |f: &mut [Complex64]| {
        for z in f.iter_mut() {
            *z *= Complex64::from_polar(1.0, 0.5 * h * z.norm_sqr());
        }
    };

    let mut out = Vec::with_capacity(cfg.nt);
    out.push(psi.clone());
    for _ in 1..cfg.nt {
        for _ in 0..cfg.substeps {
            half_nonlinear(&mut psi);
            forward.process_with_scratch(&mut psi, &mut scratch);
            for (z, l) in psi.iter_mut().zip(&linear) {
                *z *= l;
            }
            inverse.process_with_scratch(&mut psi, &mut scratch);
            half_nonlinear(&mut psi);
        }
        let drift = (mass(&psi) - mass0).abs() / mass0;
        if !(drift <= MASS_DRIFT_LIMIT) {
            return Err(Error::MassDrift { drift });
        }
        out.push(psi.clone());
    }
    Ok(out)
}

/// `2nx × nt` snapshot matrix: real parts in rows `0..nx`, imaginary parts
/// in rows `nx..2nx`.
pub fn soliton_snapshots(cfg: &SolitonConfig) -> Result<DenseMatrix> {
    let field = soliton_field(cfg)?;
    let nx = cfg.nx;
    let mut data = Vec::with_capacity(2 * nx * field.len());
    for column in &field {
        data.extend(column.iter().map(|z| z.re));
        data.extend(column.iter().map(|z| z.im));
    }
    DenseMatrix::from_column_major(2 * nx, field.len(), data)
}
