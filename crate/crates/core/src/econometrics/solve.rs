//! Shared linear-algebra pieces: thin-QR least squares and the sandwich
//! covariance estimators. Meat terms accumulate in row order (and cluster
//! scores in cluster-code order) so results are reproducible bit for bit.

use nalgebra::{DMatrix, DVector};

use super::EconError;

pub(crate) struct LsFit {
    pub beta: DVector<f64>,
    pub xtx_inv: DMatrix<f64>,
}

/// Least squares via thin QR; the caller has already rank-checked `x`.
pub(crate) fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<LsFit, EconError> {
    let k = x.ncols();
    let qr = x.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let qty = q.transpose() * y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| EconError::Degenerate("triangular solve failed on a rank-checked design".into()))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| EconError::Degenerate("triangular inversion failed on a rank-checked design".into()))?;
    let xtx_inv = &r_inv * r_inv.transpose();
    Ok(LsFit { beta, xtx_inv })
}

pub(crate) enum CovKind<'a> {
    Classical,
    Hc1,
    Cr1 {
        clusters: &'a [usize],
        n_clusters: usize,
    },
}

/// Sandwich covariance with `bread` on both sides and per-row scores
/// `score_i * x_i`. For OLS the score is the residual; for the logit MLE it
/// is `y - mu`. `Classical` is the OLS-only homoskedastic estimator.
pub(crate) fn covariance(
    bread: &DMatrix<f64>,
    x: &DMatrix<f64>,
    scores: &DVector<f64>,
    kind: &CovKind,
) -> DMatrix<f64> {
    let n = x.nrows();
    let k = x.ncols();
    let mut cov = match kind {
        CovKind::Classical => {
            let ssr: f64 = scores.iter().map(|e| e * e).sum();
            let s2 = ssr / (n - k) as f64;
            bread * s2
        }
        CovKind::Hc1 => {
            let mut meat = DMatrix::zeros(k, k);
            for i in 0..n {
                let xi = x.row(i);
                let w = scores[i] * scores[i];
                for a in 0..k {
                    for b in 0..k {
                        meat[(a, b)] += w * xi[a] * xi[b];
                    }
                }
            }
            let factor = n as f64 / (n - k) as f64;
            bread * meat * bread * factor
        }
        CovKind::Cr1 { clusters, n_clusters } => {
            let g = *n_clusters;
            let mut sums = vec![DVector::<f64>::zeros(k); g];
            for i in 0..n {
                let xi = x.row(i);
                let s = &mut sums[clusters[i]];
                for a in 0..k {
                    s[a] += scores[i] * xi[a];
                }
            }
            let mut meat = DMatrix::zeros(k, k);
            for s in &sums {
                for a in 0..k {
                    for b in 0..k {
                        meat[(a, b)] += s[a] * s[b];
                    }
                }
            }
            let factor = (g as f64 / (g as f64 - 1.0)) * ((n as f64 - 1.0) / (n - k) as f64);
            bread * meat * bread * factor
        }
    };
    // Kill floating-point asymmetry so the PSD invariant holds exactly.
    let t = cov.transpose();
    cov = (cov + t) * 0.5;
    cov
}

/// Symmetric positive-definite solve used by the logit Newton steps.
pub(crate) fn cholesky_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    a.clone().cholesky().map(|chol| chol.solve(b))
}

pub(crate) fn cholesky_inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    a.clone().cholesky().map(|chol| chol.inverse())
}
