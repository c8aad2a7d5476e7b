//! Subspace geometry on the Grassmann manifold `G(r, n)`.
//!
//! A [`PodBasis`] `Φ` represents the point `span(Φ)`. Distances use the
//! principal angles `θᵢ` between two subspaces, `δ = (Σ θᵢ²)^{1/2}`. The
//! tangent-space interpolation baseline maps training bases to the tangent
//! space at a reference point with [`log_map`], interpolates there and maps
//! back with [`exp_map`].

use std::f64::consts::FRAC_PI_2;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, ParamPoint};
use crate::pod::{thin_svd, PodBasis};

/// Interpolated tangent vectors whose largest singular value reaches
/// `π/2 − STABILITY_MARGIN` are flagged unstable.
pub const STABILITY_MARGIN: f64 = 1e-3;

/// Two subspaces closer than this are treated as equal.
pub const SUBSPACE_EQ_TOL: f64 = 1e-8;

/// `ΦᵀΦ'` with smallest singular value at or below this is singular for the
/// log map.
const LOG_MAP_SINGULAR_TOL: f64 = 1e-12;

/// Principal angles, sorted non-decreasing, each in `[0, π/2]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrincipalAngles {
    theta: Vec<f64>,
}

impl PrincipalAngles {
    pub fn as_slice(&self) -> &[f64] {
        &self.theta
    }

    pub fn max(&self) -> f64 {
        self.theta.last().copied().unwrap_or(0.0)
    }

    /// `(Σ θᵢ²)^{1/2}`.
    pub fn geodesic_norm(&self) -> f64 {
        self.theta.iter().map(|t| t * t).sum::<f64>().sqrt()
    }
}

/// A tangent vector `Γ` at `reference`, with `referenceᵀ Γ = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    gamma: DenseMatrix,
    reference: PodBasis,
}

impl TangentVector {
    /// Projects `gamma` onto the tangent space at `reference`.
    pub fn new(reference: PodBasis, gamma: DenseMatrix) -> Result<Self> {
        if gamma.shape() != reference.phi().shape() {
            return Err(Error::DimensionMismatch(format!(
                "tangent vector is {}x{}, reference is {}x{}",
                gamma.rows(),
                gamma.cols(),
                reference.n(),
                reference.rank()
            )));
        }
        let gamma = project_out(&reference, gamma.to_faer());
        Ok(TangentVector {
            gamma: DenseMatrix::from_faer(gamma.as_ref())?,
            reference,
        })
    }

    pub fn zero(reference: PodBasis) -> Self {
        let (n, r) = reference.phi().shape();
        TangentVector {
            gamma: DenseMatrix::zeros(n, r),
            reference,
        }
    }

    pub fn gamma(&self) -> &DenseMatrix {
        &self.gamma
    }

    pub fn reference(&self) -> &PodBasis {
        &self.reference
    }

    /// Largest singular value of `Γ`, i.e. the largest angle travelled by the
    /// geodesic `exp(tΓ)` at `t = 1`.
    pub fn max_angle(&self) -> f64 {
        thin_svd(&self.gamma).map(|s| s.sigma[0]).unwrap_or(f64::INFINITY)
    }
}

/// Outcome of the interpolation stability check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityFlag {
    pub stable: bool,
    /// Largest singular value of the interpolated tangent vector.
    pub max_angle: f64,
}

fn check_pair(a: &PodBasis, b: &PodBasis) -> Result<()> {
    if a.phi().shape() != b.phi().shape() {
        return Err(Error::DimensionMismatch(format!(
            "subspaces G({}, {}) and G({}, {})",
            a.rank(),
            a.n(),
            b.rank(),
            b.n()
        )));
    }
    Ok(())
}

/// `(I − ΦΦᵀ) X`.
fn project_out(basis: &PodBasis, x: Mat<f64>) -> Mat<f64> {
    let phi = basis.phi().as_faer();
    let coeffs = phi.transpose() * &x;
    x - phi * coeffs
}

fn singular_values_of(m: faer::MatRef<'_, f64>) -> Result<Vec<f64>> {
    let s = m.singular_values().map_err(|_| Error::SvdNoConvergence)?;
    Ok(s.into_iter().map(|v| v.max(0.0)).collect())
}

/// Principal angles between `span(A)` and `span(B)`.
///
/// Cosines come from the singular values of `AᵀB` and sines from those of
/// `(I − AAᵀ)B`. Angles below π/4 are recovered from the sine, the rest from
/// the clamped cosine, so neither route is evaluated where it is
/// ill-conditioned.
pub fn principal_angles(a: &PodBasis, b: &PodBasis) -> Result<PrincipalAngles> {
    check_pair(a, b)?;
    let r = a.rank();
    if a == b {
        // identical bases: report exact zeros rather than roundoff
        return Ok(PrincipalAngles { theta: vec![0.0; r] });
    }
    let cross = a.phi().as_faer().transpose() * b.phi().as_faer();
    let cosines = singular_values_of(cross.as_ref())?;
    let residual = project_out(a, b.phi().to_faer());
    let sines = singular_values_of(residual.as_ref())?;

    let mut theta: Vec<f64> = (0..r)
        .map(|i| {
            let c = cosines[i].clamp(0.0, 1.0);
            // sines are sorted descending, so the i-th smallest angle pairs with sines[r-1-i]
            let s = sines.get(r - 1 - i).copied().unwrap_or(0.0).clamp(0.0, 1.0);
            if c * c >= 0.5 {
                s.asin()
            } else {
                c.acos()
            }
        })
        .collect();
    theta.sort_by(f64::total_cmp);
    Ok(PrincipalAngles { theta })
}

/// Geodesic distance `(Σ θᵢ²)^{1/2}` between `span(A)` and `span(B)`.
pub fn riemannian_distance(a: &PodBasis, b: &PodBasis) -> Result<f64> {
    Ok(principal_angles(a, b)?.geodesic_norm())
}

/// True when the subspaces coincide within [`SUBSPACE_EQ_TOL`].
pub fn same_subspace(a: &PodBasis, b: &PodBasis) -> Result<bool> {
    Ok(riemannian_distance(a, b)? < SUBSPACE_EQ_TOL)
}

/// Logarithm of `target` at `reference`.
///
/// With `M = refᵀ target`, forms `L = (I − ref refᵀ) target M⁻¹`, takes its
/// thin SVD `L = U S Vᵀ` and returns `Γ = U atan(S) Vᵀ`.
pub fn log_map(reference: &PodBasis, target: &PodBasis) -> Result<TangentVector> {
    log_map_labeled(reference, target, || "the reference and the target".to_string())
}

fn log_map_labeled(
    reference: &PodBasis,
    target: &PodBasis,
    label: impl FnOnce() -> String,
) -> Result<TangentVector> {
    check_pair(reference, target)?;
    let y = reference.phi().as_faer();
    let x = target.phi().as_faer();
    let m = y.transpose() * x;
    let svd = m.thin_svd().map_err(|_| Error::SvdNoConvergence)?;
    let s = svd.S().column_vector();
    let smallest = s.iter().copied().fold(f64::INFINITY, f64::min);
    if !(smallest > LOG_MAP_SINGULAR_TOL) {
        return Err(Error::LogMapUndefined { pair: label() });
    }
    // M⁻¹ = W diag(1/s) Pᵀ for M = P diag(s) Wᵀ
    let mut w_scaled = svd.V().to_owned();
    for (j, sj) in s.iter().enumerate() {
        w_scaled.col_mut(j).iter_mut().for_each(|v| *v /= sj);
    }
    let m_inv = w_scaled * svd.U().transpose();
    let l = project_out(reference, x.to_owned()) * m_inv;
    let l = project_out(reference, l);

    let lsvd = l.thin_svd().map_err(|_| Error::SvdNoConvergence)?;
    let mut u = lsvd.U().to_owned();
    for (j, sj) in lsvd.S().column_vector().iter().enumerate() {
        let a = sj.max(0.0).atan();
        u.col_mut(j).iter_mut().for_each(|v| *v *= a);
    }
    let gamma = project_out(reference, u * lsvd.V().transpose());
    Ok(TangentVector {
        gamma: DenseMatrix::from_faer(gamma.as_ref())?,
        reference: reference.clone(),
    })
}

/// Exponential of `t` at `reference`.
///
/// With the thin SVD `Γ = U S Vᵀ`, returns the orthonormalized
/// `ref V cos(S) Vᵀ + U sin(S) Vᵀ`.
pub fn exp_map(reference: &PodBasis, t: &TangentVector) -> Result<PodBasis> {
    if t.reference != *reference {
        return Err(Error::ReferenceMismatch);
    }
    let gsvd = t.gamma.as_faer().thin_svd().map_err(|_| Error::SvdNoConvergence)?;
    let v = gsvd.V();
    let mut v_cos = v.to_owned();
    let mut u_sin = gsvd.U().to_owned();
    for (j, sj) in gsvd.S().column_vector().iter().enumerate() {
        let (sin, cos) = sj.sin_cos();
        v_cos.col_mut(j).iter_mut().for_each(|x| *x *= cos);
        u_sin.col_mut(j).iter_mut().for_each(|x| *x *= sin);
    }
    let y = reference.phi().as_faer();
    let moved = (y * v_cos + u_sin) * v.transpose();
    orthonormalize(moved)
}

/// Q factor of a thin QR with a non-negative `R` diagonal.
fn orthonormalize(m: Mat<f64>) -> Result<PodBasis> {
    let qr = m.qr();
    let mut q = qr.compute_thin_Q();
    let r = qr.thin_R();
    for j in 0..q.ncols() {
        if r[(j, j)] < 0.0 {
            q.col_mut(j).iter_mut().for_each(|x| *x = -*x);
        }
    }
    PodBasis::new(DenseMatrix::from_faer(q.as_ref())?)
}

/// Flags `t` unstable when its largest singular value reaches
/// `π/2 − STABILITY_MARGIN`, outside the region where the exponential map is
/// injective.
pub fn stability_check(t: &TangentVector) -> StabilityFlag {
    let max_angle = t.max_angle();
    StabilityFlag {
        stable: max_angle < FRAC_PI_2 - STABILITY_MARGIN,
        max_angle,
    }
}

/// Interpolation weights of the training parameters at `target`.
///
/// One-dimensional parameters use Lagrange polynomials through every node;
/// higher dimensions use inverse-distance weighting with power 2. Both
/// reproduce the training nodes exactly.
pub fn interpolation_weights(nodes: &[&ParamPoint], target: &ParamPoint) -> Result<Vec<f64>> {
    if nodes.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: nodes.len(),
        });
    }
    if let Some(p) = nodes.iter().find(|p| p.dim() != target.dim()) {
        return Err(Error::DimensionMismatch(format!(
            "target has dimension {}, training point has {}",
            target.dim(),
            p.dim()
        )));
    }
    if target.dim() == 1 {
        let xs: Vec<f64> = nodes.iter().map(|p| p.coord(0)).collect();
        let t = target.coord(0);
        let mut weights = Vec::with_capacity(xs.len());
        for (k, &xk) in xs.iter().enumerate() {
            let mut w = 1.0;
            for (j, &xj) in xs.iter().enumerate() {
                if j == k {
                    continue;
                }
                if xj == xk {
                    return Err(Error::InvalidConfig(format!(
                        "duplicate interpolation node {xk}"
                    )));
                }
                w *= (t - xj) / (xk - xj);
            }
            weights.push(w);
        }
        Ok(weights)
    } else {
        if let Some(k) = nodes.iter().position(|p| p.coords() == target.coords()) {
            let mut w = vec![0.0; nodes.len()];
            w[k] = 1.0;
            return Ok(w);
        }
        let raw: Vec<f64> = nodes
            .iter()
            .map(|p| 1.0 / p.distance(target).powi(2))
            .collect();
        let total: f64 = raw.iter().sum();
        Ok(raw.into_iter().map(|w| w / total).collect())
    }
}

/// Tangent-space interpolator anchored at one training basis.
///
/// Log maps of all training bases are computed once; each prediction then
/// costs one weighted sum and one exponential map.
#[derive(Clone, Debug)]
pub struct TangentInterpolator {
    reference: PodBasis,
    params: Vec<ParamPoint>,
    tangents: Vec<DenseMatrix>,
}

impl TangentInterpolator {
    pub fn new(train: &[(ParamPoint, PodBasis)], ref_index: usize) -> Result<Self> {
        if train.len() < 2 {
            return Err(Error::TooFewPoints {
                needed: 2,
                got: train.len(),
            });
        }
        let (_, reference) = train.get(ref_index).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "reference index {ref_index} out of range for {} training points",
                train.len()
            ))
        })?;
        let dim = train[0].0.dim();
        let mut tangents = Vec::with_capacity(train.len());
        for (k, (lambda, basis)) in train.iter().enumerate() {
            if lambda.dim() != dim {
                return Err(Error::DimensionMismatch(
                    "training parameters differ in dimension".into(),
                ));
            }
            let t = if k == ref_index {
                TangentVector::zero(reference.clone())
            } else {
                log_map_labeled(reference, basis, || {
                    format!("training points #{ref_index} and #{k}")
                })?
            };
            tangents.push(t.gamma);
        }
        Ok(TangentInterpolator {
            reference: reference.clone(),
            params: train.iter().map(|(p, _)| p.clone()).collect(),
            tangents,
        })
    }

    pub fn reference(&self) -> &PodBasis {
        &self.reference
    }

    /// Interpolated tangent vector at `target`.
    pub fn tangent_at(&self, target: &ParamPoint) -> Result<TangentVector> {
        let nodes: Vec<&ParamPoint> = self.params.iter().collect();
        let weights = interpolation_weights(&nodes, target)?;
        let (n, r) = self.reference.phi().shape();
        let mut acc = vec![0.0; n * r];
        for (w, gamma) in weights.iter().zip(&self.tangents) {
            if *w == 0.0 {
                continue;
            }
            for (a, g) in acc.iter_mut().zip(gamma.as_slice()) {
                *a += w * g;
            }
        }
        TangentVector::new(
            self.reference.clone(),
            DenseMatrix::from_column_major(n, r, acc)?,
        )
    }

    /// Predicted basis at `target` and the stability of the interpolation.
    pub fn predict(&self, target: &ParamPoint) -> Result<(PodBasis, StabilityFlag)> {
        let t = self.tangent_at(target)?;
        let flag = stability_check(&t);
        Ok((exp_map(&self.reference, &t)?, flag))
    }
}

/// One-shot tangent-space interpolation at `target` about
/// `train[ref_index]`.
pub fn interpolate_basis(
    train: &[(ParamPoint, PodBasis)],
    ref_index: usize,
    target: &ParamPoint,
) -> Result<(PodBasis, StabilityFlag)> {
    TangentInterpolator::new(train, ref_index)?.predict(target)
}
