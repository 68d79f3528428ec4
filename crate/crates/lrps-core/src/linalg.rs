//! Dense symmetric linear algebra and geometric sampling primitives for the
//! whitened and orthogonalized proposals.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Eigenvalues below `RELATIVE_EIGEN_FLOOR · λ_max` are clamped before the
/// square root so degenerate live-point clouds never produce zero-length
/// proposal directions.
const RELATIVE_EIGEN_FLOOR: f64 = 1e-12;
/// Gram–Schmidt residuals below this fraction of the input norm count as
/// rank deficiency.
const GRAM_SCHMIDT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum LinalgError {
    #[error("sample covariance needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("sample covariance is degenerate (no positive eigenvalue)")]
    DegenerateCovariance,
    #[error("gram-schmidt input is rank deficient at vector {0}")]
    RankDeficient(usize),
}

/// Sample covariance of the live points together with its eigendecomposition
/// and symmetric square root. Immutable once built; shared by the region-*
/// proposals until the next refresh.
#[derive(Debug, Clone)]
pub struct CovarianceSnapshot {
    /// The d×d sample covariance (divisor n−1, about the sample mean).
    pub matrix: DMatrix<f64>,
    /// Eigenvalues sorted descending, clamped to the relative floor.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, aligned with `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
    /// Symmetric square root `Q diag(√λ) Qᵀ`, so `sqrt_map · sqrt_mapᵀ`
    /// reconstructs the (floored) covariance.
    pub sqrt_map: DMatrix<f64>,
    /// Nested-sampling iteration at which the snapshot was computed.
    pub epoch: usize,
}

impl CovarianceSnapshot {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `sqrt_map · v`.
    pub fn apply_sqrt(&self, v: &[f64]) -> Vec<f64> {
        let out = &self.sqrt_map * DVector::from_column_slice(v);
        out.as_slice().to_vec()
    }

    /// Unit eigenvector `i` (descending eigenvalue order).
    pub fn principal_axis(&self, i: usize) -> Vec<f64> {
        self.eigenvectors.column(i).as_slice().to_vec()
    }

    /// Eigenvector `i` scaled by the square root of its eigenvalue: the
    /// natural slice length along that axis.
    pub fn scaled_principal_axis(&self, i: usize) -> Vec<f64> {
        let scale = self.eigenvalues[i].sqrt();
        self.eigenvectors
            .column(i)
            .iter()
            .map(|&q| scale * q)
            .collect()
    }
}

/// Unbiased sample covariance of `points` with eigendecomposition and
/// symmetric square root, eigenvalues floored at `1e-12 · λ_max`.
pub fn sample_covariance(points: &[Vec<f64>]) -> Result<CovarianceSnapshot, LinalgError> {
    let n = points.len();
    if n < 2 {
        return Err(LinalgError::TooFewPoints(n));
    }
    let d = points[0].len();
    let mut mean = vec![0.0; d];
    for p in points {
        debug_assert_eq!(p.len(), d);
        for (m, &v) in mean.iter_mut().zip(p) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut cov = DMatrix::zeros(d, d);
    for p in points {
        let c: Vec<f64> = p.iter().zip(&mean).map(|(&v, &m)| v - m).collect();
        for i in 0..d {
            for j in i..d {
                cov[(i, j)] += c[i] * c[j];
            }
        }
    }
    let norm = 1.0 / (n as f64 - 1.0);
    for i in 0..d {
        for j in i..d {
            let v = cov[(i, j)] * norm;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }

    let eigen = cov.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        let (la, lb): (f64, f64) = (eigen.eigenvalues[a], eigen.eigenvalues[b]);
        lb.total_cmp(&la)
    });
    let lambda_max: f64 = eigen.eigenvalues[order[0]];
    if !lambda_max.is_finite() || lambda_max <= 0.0 {
        return Err(LinalgError::DegenerateCovariance);
    }
    let floor = RELATIVE_EIGEN_FLOOR * lambda_max;
    let eigenvalues: Vec<f64> = order
        .iter()
        .map(|&i| {
            let l: f64 = eigen.eigenvalues[i];
            l.max(floor)
        })
        .collect();
    let mut eigenvectors = DMatrix::zeros(d, d);
    for (col, &i) in order.iter().enumerate() {
        eigenvectors.set_column(col, &eigen.eigenvectors.column(i));
    }
    let sqrt_diag = DMatrix::from_diagonal(&DVector::from_iterator(
        d,
        eigenvalues.iter().map(|&l| l.sqrt()),
    ));
    let sqrt_map = &eigenvectors * sqrt_diag * eigenvectors.transpose();

    Ok(CovarianceSnapshot {
        matrix: cov,
        eigenvalues,
        eigenvectors,
        sqrt_map,
        epoch: 0,
    })
}

/// Classical Gram–Schmidt with normalization. The output spans the same
/// space, is pairwise orthogonal and unit length, and its first vector is
/// parallel to the first input. Rank deficiency is reported so the caller
/// can resample its raw directions.
pub fn gram_schmidt(vs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, LinalgError> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vs.len());
    for (idx, v) in vs.iter().enumerate() {
        let input_norm = norm(v);
        let mut w = v.clone();
        for q in &out {
            let proj = dot(&w, q);
            for (wi, &qi) in w.iter_mut().zip(q) {
                *wi -= proj * qi;
            }
        }
        let residual = norm(&w);
        if residual <= GRAM_SCHMIDT_TOL * input_norm || residual == 0.0 {
            return Err(LinalgError::RankDeficient(idx));
        }
        for wi in &mut w {
            *wi /= residual;
        }
        out.push(w);
    }
    Ok(out)
}

/// Uniform direction on the unit sphere: normalized standard-normal draw.
pub fn sample_unit_sphere<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|vi| vi / n).collect();
        }
    }
}

/// Uniform draw from the closed unit ball: sphere draw scaled by `U^{1/d}`.
pub fn sample_unit_ball<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    let radius = rng.random::<f64>().powf(1.0 / d as f64);
    sample_unit_sphere(d, rng)
        .into_iter()
        .map(|v| v * radius)
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}
