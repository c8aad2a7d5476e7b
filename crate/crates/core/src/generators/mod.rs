//! Synthetic snapshot generators and parameter sweeps.

mod heat;
mod soliton;

pub use heat::{heat_exact, heat_snapshots, HeatConfig};
pub use soliton::{soliton_exact, soliton_field, soliton_snapshots, Pulse, SolitonConfig, MASS_DRIFT_LIMIT};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, ParamPoint};
use crate::snapshot::{SnapshotEntry, SnapshotSet};

/// Full heat sweep `γ ∈ 0.001:0.001:0.1`.
pub const HEAT_GAMMAS: &str = "0.001:0.001:0.1";
/// Full soliton sweep `α ∈ 0.05:0.01:0.5`.
pub const SOLITON_ALPHAS: &str = "0.05:0.01:0.5";

/// Which solver to run for each parameter value; the parameter field of the
/// carried config is replaced per value.
#[derive(Clone, Debug, PartialEq)]
pub enum Generator {
    Heat(HeatConfig),
    Soliton(SolitonConfig),
}

impl Generator {
    pub fn heat() -> Self {
        Generator::Heat(HeatConfig::default())
    }

    pub fn soliton() -> Self {
        Generator::Soliton(SolitonConfig::default())
    }

    /// Identifier prefix: `g` for γ, `a` for α.
    pub fn prefix(&self) -> &'static str {
        match self {
            Generator::Heat(_) => "g",
            Generator::Soliton(_) => "a",
        }
    }

    /// Snapshot matrix for one scalar parameter value.
    pub fn run(&self, value: f64) -> Result<DenseMatrix> {
        match self {
            Generator::Heat(cfg) => heat_snapshots(&HeatConfig {
                gamma: value,
                ..cfg.clone()
            }),
            Generator::Soliton(cfg) => soliton_snapshots(&SolitonConfig {
                alpha: value,
                ..cfg.clone()
            }),
        }
    }
}

/// Entry id for a parameter value, e.g. `g0.05` or `a0.3`.
pub fn entry_id(prefix: &str, value: f64) -> String {
    format!("{prefix}{value}")
}

/// Runs `generator` at each value in parallel, keeping the input order.
pub fn sweep(generator: &Generator, values: &[f64]) -> Result<SnapshotSet> {
    let matrices: Vec<DenseMatrix> = values
        .par_iter()
        .map(|&v| generator.run(v))
        .collect::<Result<_>>()?;
    let entries = values
        .iter()
        .zip(matrices)
        .map(|(&v, snapshots)| {
            Ok(SnapshotEntry {
                id: entry_id(generator.prefix(), v),
                lambda: ParamPoint::scalar(v)?,
                snapshots,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SnapshotSet::from_entries(entries)
}

/// Parses `a:step:b` (inclusive) or a comma-separated list. Range values are
/// rounded to the largest number of decimals among the three tokens, so
/// `0.001:0.001:0.1` yields exactly `0.001, 0.002, …, 0.1`.
pub fn parse_values(spec: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| Error::InvalidConfig(format!("bad value list {spec:?}: {why}"));
    let parse = |s: &str| -> Result<f64> {
        let v: f64 = s.trim().parse().map_err(|_| bad("not a number"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(bad("non-finite value"))
        }
    };
    let spec_trim = spec.trim();
    if spec_trim.is_empty() {
        return Err(bad("empty"));
    }
    if !spec_trim.contains(':') {
        return spec_trim.split(',').map(parse).collect();
    }
    let parts: Vec<&str> = spec_trim.split(':').collect();
    let [a, step, b] = parts[..] else {
        return Err(bad("expected start:step:end"));
    };
    let (start, step_v, end) = (parse(a)?, parse(step)?, parse(b)?);
    if step_v <= 0.0 {
        return Err(bad("step must be positive"));
    }
    if end < start {
        return Err(bad("end is below start"));
    }
    let count = ((end - start) / step_v + 1e-9).floor() as usize + 1;
    let decimals = [a, step, b].iter().map(|t| decimals_of(t)).max().unwrap_or(None);
    Ok((0..count)
        .map(|k| {
            let v = start + k as f64 * step_v;
            match decimals {
                Some(d) => round_to(v, d),
                None => v,
            }
        })
        .collect())
}

/// Digits after the decimal point, or `None` for exponent notation.
fn decimals_of(token: &str) -> Option<usize> {
    let t = token.trim();
    if t.contains(['e', 'E']) {
        return None;
    }
    Some(t.split_once('.').map_or(0, |(_, frac)| frac.len()))
}

fn round_to(v: f64, decimals: usize) -> f64 {
    // formatting rounds correctly; parsing back gives the nearest double
    format!("{v:.decimals$}").parse().expect("formatted float parses")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_sweeps_have_expected_sizes() {
        let g = parse_values(HEAT_GAMMAS).unwrap();
        assert_eq!(g.len(), 100);
        assert_eq!(g[0], 0.001);
        assert_eq!(g[6], 0.007);
        assert_eq!(*g.last().unwrap(), 0.1);
        let a = parse_values(SOLITON_ALPHAS).unwrap();
        assert_eq!(a.len(), 46);
        assert_eq!(a[1], 0.06);
        assert_eq!(*a.last().unwrap(), 0.5);
    }

    #[test]
    fn lists_and_errors() {
        assert_eq!(parse_values("0.1, 0.2,0.3").unwrap(), vec![0.1, 0.2, 0.3]);
        assert_eq!(parse_values("1:1:3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert!(parse_values("").is_err());
        assert!(parse_values("1:0:3").is_err());
        assert!(parse_values("3:1:1").is_err());
        assert!(parse_values("1:2").is_err());
        assert!(parse_values("x").is_err());
    }

    #[test]
    fn sweep_ids_and_order() {
        let gen = Generator::Heat(HeatConfig {
            nx: 11,
            nt: 5,
            ..HeatConfig::default()
        });
        let set = sweep(&gen, &[0.02, 0.01, 0.1]).unwrap();
        assert_eq!(set.ids().collect::<Vec<_>>(), vec!["g0.02", "g0.01", "g0.1"]);
        assert_eq!(set.n(), 11);
        assert_eq!(set.d(), 1);
        assert_eq!(set.entries()[1].lambda.coord(0), 0.01);
    }
}
