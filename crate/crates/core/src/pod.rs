//! Proper orthogonal decomposition: thin and randomized SVD, POD bases and
//! projection error.
//!
//! Singular vectors are sign-normalized so that the entry of largest
//! magnitude in each left singular vector is positive (the first such entry
//! on ties), with the matching right singular vector flipped alongside. This
//! makes every factorization in the crate reproducible bit for bit.

use faer::prelude::{Reborrow, ReborrowMut};
use faer::{Mat, MatRef};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Singular values below `RANK_TOL * σ₁` count as zero when deciding rank.
pub const RANK_TOL: f64 = 1e-12;

/// Default oversampling for [`randomized_svd`].
pub const DEFAULT_OVERSAMPLE: usize = 10;

/// Tolerance on `‖ΦᵀΦ − I‖_max` accepted by [`PodBasis::new`].
pub const ORTHONORMALITY_TOL: f64 = 1e-10;

/// `M = U · diag(σ) · Vᵀ` with `k` columns in `U` and `V`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThinSvd {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

impl ThinSvd {
    pub fn k(&self) -> usize {
        self.sigma.len()
    }

    /// `U · diag(σ) · Vᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.u.to_faer();
        for (j, s) in self.sigma.iter().enumerate() {
            us.col_mut(j).iter_mut().for_each(|x| *x *= s);
        }
        DenseMatrix::from_faer((us * self.v.as_faer().transpose()).as_ref())
            .expect("finite factors give a finite product")
    }
}

/// An `n × r` matrix with orthonormal columns spanning a POD subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct PodBasis {
    phi: DenseMatrix,
}

impl PodBasis {
    /// Wraps `phi`, checking `r ≤ n` and `‖ΦᵀΦ − I‖_max < 1e-10`.
    pub fn new(phi: DenseMatrix) -> Result<Self> {
        if phi.cols() > phi.rows() {
            return Err(Error::RankInfeasible {
                rank: phi.cols(),
                max: phi.rows(),
            });
        }
        let deviation = orthonormality_defect(phi.as_faer());
        if !(deviation < ORTHONORMALITY_TOL) {
            return Err(Error::NotOrthonormal { deviation });
        }
        Ok(PodBasis { phi })
    }

    pub fn phi(&self) -> &DenseMatrix {
        &self.phi
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.phi
    }

    pub fn rank(&self) -> usize {
        self.phi.cols()
    }

    pub fn n(&self) -> usize {
        self.phi.rows()
    }
}

/// `‖AᵀA − I‖_max`.
pub fn orthonormality_defect(a: MatRef<'_, f64>) -> f64 {
    let gram = a.transpose() * a;
    let mut worst = 0.0f64;
    for j in 0..gram.ncols() {
        for i in 0..gram.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

/// Number of singular values above `RANK_TOL · σ₁`.
pub fn numerical_rank(sigma: &[f64]) -> usize {
    match sigma.first() {
        Some(&s1) if s1 > 0.0 => sigma.iter().take_while(|&&s| s > RANK_TOL * s1).count(),
        _ => 0,
    }
}

/// Thin SVD with `k = min(rows, cols)`.
pub fn thin_svd(m: &DenseMatrix) -> Result<ThinSvd> {
    let (u, sigma, v) = svd_faer(m.as_faer(), true)?;
    let v = v.expect("right vectors requested");
    finish(u, sigma, Some(v))
}

/// POD basis of rank `r`: the first `r` left singular vectors of `d`.
///
/// When `r` exceeds the numerical rank of `d` the trailing columns are the
/// continuing singular vectors, which stay orthonormal.
pub fn pod_basis(d: &DenseMatrix, r: usize) -> Result<PodBasis> {
    let max = d.rows().min(d.cols());
    if r == 0 || r > max {
        return Err(Error::RankInfeasible { rank: r, max });
    }
    let (u, _, _) = svd_faer(d.as_faer(), false)?;
    let mut u = u;
    normalize_signs(u.as_mut(), None);
    PodBasis::new(DenseMatrix::from_faer(u.subcols(0, r))?)
}

/// Randomized SVD truncated to `r` components.
///
/// Sketches the column space with `D·P`, where `P` is a `cols × (r + p)`
/// standard normal matrix drawn from a ChaCha8 stream seeded with `seed`,
/// orthonormalizes the sketch by QR, factors the small matrix `QᵀD` and lifts
/// its left singular vectors back with `Q`. No power iterations.
pub fn randomized_svd(d: &DenseMatrix, r: usize, oversample: usize, seed: u64) -> Result<ThinSvd> {
    let (n, m) = d.shape();
    let width = r + oversample;
    if r == 0 || width > m {
        return Err(Error::RankInfeasible {
            rank: width,
            max: m,
        });
    }
    if r > n {
        return Err(Error::RankInfeasible { rank: r, max: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<f64> = (0..m * width).map(|_| StandardNormal.sample(&mut rng)).collect();
    let projector = MatRef::from_column_major_slice(&draws, m, width);

    let sketch = d.as_faer() * projector;
    let q = sketch.qr().compute_thin_Q();
    let small = q.transpose() * d.as_faer();
    let (u_small, sigma, v) = svd_faer(small.as_ref(), true)?;
    let u = &q * &u_small;

    let svd = finish(u, sigma, v)?;
    Ok(ThinSvd {
        u: svd.u.leading_columns(r),
        sigma: svd.sigma[..r].to_vec(),
        v: svd.v.leading_columns(r),
    })
}

/// Squared projection error `‖D − ΦΦᵀD‖²_F`, computed from the residual.
pub fn reconstruction_error(d: &DenseMatrix, basis: &PodBasis) -> Result<f64> {
    if d.rows() != basis.n() {
        return Err(Error::DimensionMismatch(format!(
            "snapshots have {} rows, basis has {}",
            d.rows(),
            basis.n()
        )));
    }
    let phi = basis.phi().as_faer();
    let dm = d.as_faer();
    let coeffs = phi.transpose() * dm;
    let residual = dm - phi * coeffs;
    Ok(residual.squared_norm_l2())
}

/// Left singular vectors and values (plus right vectors if asked).
///
/// Strongly rectangular inputs go through a QR reduction first so the dense
/// SVD only ever sees a square `min(rows, cols)` problem.
fn svd_faer(m: MatRef<'_, f64>, want_v: bool) -> Result<(Mat<f64>, Vec<f64>, Option<Mat<f64>>)> {
    let (rows, cols) = (m.nrows(), m.ncols());
    if cols > 2 * rows {
        // M = Rᵀ Qᵀ with Mᵀ = QR
        let qr = m.transpose().qr();
        let rt = qr.thin_R().transpose().to_owned();
        let svd = rt.thin_svd().map_err(|_| Error::SvdNoConvergence)?;
        let v = want_v.then(|| qr.compute_thin_Q() * svd.V());
        Ok((svd.U().to_owned(), singular_values(&svd), v))
    } else if rows > 2 * cols {
        // M = Q R
        let qr = m.qr();
        let r = qr.thin_R().to_owned();
        let svd = r.thin_svd().map_err(|_| Error::SvdNoConvergence)?;
        let u = qr.compute_thin_Q() * svd.U();
        Ok((u, singular_values(&svd), want_v.then(|| svd.V().to_owned())))
    } else {
        let svd = m.thin_svd().map_err(|_| Error::SvdNoConvergence)?;
        Ok((
            svd.U().to_owned(),
            singular_values(&svd),
            want_v.then(|| svd.V().to_owned()),
        ))
    }
}

fn singular_values(svd: &faer::linalg::solvers::Svd<f64>) -> Vec<f64> {
    svd.S().column_vector().iter().map(|s| s.max(0.0)).collect()
}

fn finish(mut u: Mat<f64>, sigma: Vec<f64>, mut v: Option<Mat<f64>>) -> Result<ThinSvd> {
    normalize_signs(u.as_mut(), v.as_mut().map(|v| v.as_mut()));
    let v = v.expect("right vectors present");
    Ok(ThinSvd {
        u: DenseMatrix::from_faer(u.as_ref())?,
        sigma,
        v: DenseMatrix::from_faer(v.as_ref())?,
    })
}

/// Flips singular vector pairs so each left vector's largest-magnitude entry
/// is positive.
pub(crate) fn normalize_signs(mut u: faer::MatMut<'_, f64>, mut v: Option<faer::MatMut<'_, f64>>) {
    for j in 0..u.ncols() {
        let mut best = 0.0f64;
        let mut sign = 1.0;
        for x in u.rb().col(j).iter() {
            if x.abs() > best {
                best = x.abs();
                sign = x.signum();
            }
        }
        if sign < 0.0 {
            u.rb_mut().col_mut(j).iter_mut().for_each(|x| *x = -*x);
            if let Some(v) = v.as_mut() {
                v.rb_mut().col_mut(j).iter_mut().for_each(|x| *x = -*x);
            }
        }
    }
}
