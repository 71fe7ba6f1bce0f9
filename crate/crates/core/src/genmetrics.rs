//! Metrics for generated audio: Fréchet distance between fitted Gaussians,
//! smoothed KL divergence and cross-modal cosine alignment.

use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::corpus::EmbeddingSet;
use crate::simkernel::{self, SimError};

/// Eigenvalues below this (negative) bound mean the covariance is not PSD.
pub const PSD_TOLERANCE: f64 = -1e-6;
/// Allowed asymmetry of a covariance matrix.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_KL_EPS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("need at least 2 samples, got {n}")]
    InsufficientSamples { n: usize },
    #[error("covariance `{which}` is not PSD (eigenvalue {eigenvalue:e})")]
    NonPsd { which: &'static str, eigenvalue: f64 },
    #[error("covariance is not symmetric at ({row}, {col})")]
    Asymmetric { row: usize, col: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid probability entry at index {index}")]
    InvalidProbability { index: usize },
    #[error("probability vector has zero mass")]
    ZeroMass,
    #[error("histogram needs at least 2 bins")]
    TooFewBins,
    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("degenerate histogram range [{lo}, {hi}]")]
    DegenerateRange { lo: f64, hi: f64 },
    #[error("value {value} at row {row} lies outside the histogram range")]
    ValueOutOfRange { row: usize, value: f64 },
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Mean and covariance of an embedding set.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    mean: Vec<f64>,
    /// Row-major `dim × dim`.
    cov: Vec<f64>,
    n: usize,
}

impl GaussianStats {
    pub fn new(mean: Vec<f64>, cov: Vec<f64>, n: usize) -> Result<Self, MetricsError> {
        let d = mean.len();
        if cov.len() != d * d {
            return Err(MetricsError::DimMismatch {
                left: d * d,
                right: cov.len(),
            });
        }
        if n < 2 {
            return Err(MetricsError::InsufficientSamples { n });
        }
        for i in 0..d {
            for j in i + 1..d {
                if (cov[i * d + j] - cov[j * d + i]).abs() > SYMMETRY_TOLERANCE {
                    return Err(MetricsError::Asymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self { mean, cov, n })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov(&self) -> &[f64] {
        &self.cov
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn cov_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim(), self.dim(), &self.cov)
    }
}

/// Sample mean and unbiased covariance, symmetrized as `(C + Cᵀ) / 2`.
pub fn fit_gaussian(set: &EmbeddingSet) -> Result<GaussianStats, MetricsError> {
    let n = set.len();
    if n < 2 {
        return Err(MetricsError::InsufficientSamples { n });
    }
    let d = set.dim();
    let mut mean = alloc::vec![0.0; d];
    for row in set.rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let cov_row = |i: usize| -> Vec<f64> {
        let mut out = alloc::vec![0.0; d];
        for row in set.rows() {
            let di = row[i] - mean[i];
            for (o, (v, m)) in out.iter_mut().zip(row.iter().zip(&mean)) {
                *o += di * (v - m);
            }
        }
        for o in out.iter_mut() {
            *o /= (n - 1) as f64;
        }
        out
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        (0..d).into_par_iter().map(cov_row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<f64>> = (0..d).map(cov_row).collect();

    let mut cov = alloc::vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            cov[i * d + j] = 0.5 * (rows[i][j] + rows[j][i]);
        }
    }
    GaussianStats::new(mean, cov, n)
}

fn checked_eigen(m: DMatrix<f64>, which: &'static str) -> Result<SymmetricEigen<f64, nalgebra::Dyn>, MetricsError> {
    let eig = SymmetricEigen::new(m);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < PSD_TOLERANCE {
        return Err(MetricsError::NonPsd { which, eigenvalue: min });
    }
    if min < 0.0 {
        log::debug!("clamping eigenvalue {min:e} of `{which}` to zero");
    }
    Ok(eig)
}

fn psd_sqrt(eig: &SymmetricEigen<f64, nalgebra::Dyn>) -> DMatrix<f64> {
    let roots = eig.eigenvalues.map(|l| libm::sqrt(l.max(0.0)));
    let v = &eig.eigenvectors;
    let scaled = v * DMatrix::from_diagonal(&roots);
    let s = scaled * v.transpose();
    (&s + s.transpose()) * 0.5
}

/// `tr((A^{1/2} B A^{1/2})^{1/2})`, which equals `tr((AB)^{1/2})` for PSD
/// `A` and `B`.
pub fn trace_sqrt_product(a: &[f64], b: &[f64], dim: usize) -> Result<f64, MetricsError> {
    let a = DMatrix::from_row_slice(dim, dim, a);
    let b = DMatrix::from_row_slice(dim, dim, b);
    let ea = checked_eigen(a, "first")?;
    checked_eigen(b.clone(), "second")?;
    let root = psd_sqrt(&ea);
    let inner = &root * b * &root;
    let inner = (&inner + inner.transpose()) * 0.5;
    let ei = checked_eigen(inner, "product")?;
    Ok(ei.eigenvalues.iter().map(|&l| libm::sqrt(l.max(0.0))).sum())
}

/// Fréchet distance `‖μb − μe‖² + tr(Σb + Σe − 2 (Σb Σe)^{1/2})`, clamped at 0.
pub fn fad(b: &GaussianStats, e: &GaussianStats) -> Result<f64, MetricsError> {
    if b.dim() != e.dim() {
        return Err(MetricsError::DimMismatch {
            left: b.dim(),
            right: e.dim(),
        });
    }
    let d = b.dim();
    let mean_term: f64 = b.mean.iter().zip(&e.mean).map(|(x, y)| (x - y) * (x - y)).sum();
    let cb = b.cov_matrix();
    let ce = e.cov_matrix();
    let cross = trace_sqrt_product(&b.cov, &e.cov, d)?;
    let value = mean_term + cb.trace() + ce.trace() - 2.0 * cross;
    if value < 0.0 {
        log::debug!("clamping negative distance {value:e} to zero");
    }
    Ok(value.max(0.0))
}

/// A discrete distribution; entries are non-negative and sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Accepts any non-negative finite weights with positive mass and
    /// normalizes them.
    pub fn new(weights: Vec<f64>) -> Result<Self, MetricsError> {
        if let Some(index) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(MetricsError::InvalidProbability { index });
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(MetricsError::ZeroMass);
        }
        Ok(Self(weights.into_iter().map(|w| w / total).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn smooth(p: &[f64], eps: f64) -> Vec<f64> {
    let total: f64 = p.iter().map(|v| v + eps).sum();
    p.iter().map(|v| (v + eps) / total).collect()
}

/// `Σ p_i ln(p_i / q_i)` in nats after adding `eps` to every entry of both
/// vectors and renormalizing. Entries where the original `p_i` is zero are
/// skipped.
pub fn kl_div(p: &ProbVector, q: &ProbVector, eps: f64) -> Result<f64, MetricsError> {
    if p.len() != q.len() {
        return Err(MetricsError::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let ps = smooth(&p.0, eps);
    let qs = smooth(&q.0, eps);
    Ok(p.0
        .iter()
        .zip(ps.iter().zip(&qs))
        .filter(|(orig, _)| **orig > 0.0)
        .map(|(_, (pi, qi))| pi * libm::log(pi / qi))
        .sum())
}

/// Cosine between an artwork embedding and a generated-audio embedding.
pub fn ibsc(e_art: &[f64], e_gen: &[f64]) -> Result<f64, MetricsError> {
    Ok(simkernel::cosine(e_art, e_gen)?)
}

/// `(min, max)` of coordinate `axis` over every row of `sets`.
pub fn axis_range(sets: &[&EmbeddingSet], axis: usize) -> Option<(f64, f64)> {
    let mut it = sets
        .iter()
        .filter(|s| axis < s.dim())
        .flat_map(|s| s.rows().map(move |r| r[axis]));
    let first = it.next()?;
    Some(it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v))))
}

/// Equal-width histogram of coordinate `axis` over `range`, normalized.
/// The top edge falls in the last bin.
pub fn histogram_features(
    set: &EmbeddingSet,
    bins: usize,
    axis: usize,
    range: (f64, f64),
) -> Result<ProbVector, MetricsError> {
    if bins < 2 {
        return Err(MetricsError::TooFewBins);
    }
    if axis >= set.dim() {
        return Err(MetricsError::AxisOutOfRange { axis, dim: set.dim() });
    }
    let (lo, hi) = range;
    if hi.is_nan() || lo.is_nan() || hi <= lo {
        return Err(MetricsError::DegenerateRange { lo, hi });
    }
    let mut counts = alloc::vec![0.0; bins];
    for (row, r) in set.rows().enumerate() {
        let v = r[axis];
        if v < lo || v > hi {
            return Err(MetricsError::ValueOutOfRange { row, value: v });
        }
        let b = (((v - lo) / (hi - lo)) * bins as f64) as usize;
        counts[b.min(bins - 1)] += 1.0;
    }
    ProbVector::new(counts)
}
