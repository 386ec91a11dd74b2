//! Closed-form ridge regression on standardized features.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RidgeModel {
    pub lambda: f64,
    pub intercept: f64,
    /// Weights in standardized units, one per retained feature.
    pub weights: Vec<f64>,
    /// Indices (into the input columns) of the retained features.
    pub retained: Vec<usize>,
    /// Zero-variance features, excluded from the fit.
    pub dropped: Vec<usize>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub n_features: usize,
}

impl RidgeModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.retained
            .iter()
            .zip(&self.weights)
            .zip(self.means.iter().zip(&self.stds))
            .fold(self.intercept, |acc, ((&j, w), (m, s))| {
                acc + w * (row[j] - m) / s
            })
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter().map(|r| self.predict_row(r)).collect()
    }

    pub fn weight_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

fn normal_residual(gram: &DMatrix<f64>, rhs: &DVector<f64>, w: &DVector<f64>) -> f64 {
    (gram * w - rhs).amax()
}

/// Fits `(ZᵀZ + λI) w = Zᵀy` where `Z` is `x` standardized with training
/// means and population standard deviations. The intercept is `mean(y)` and
/// is not penalized.
pub fn ridge_fit(x: &[Vec<f64>], y: &[f64], lambda: f64) -> Result<RidgeModel> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "lambda {lambda} must be finite and >= 0"
        )));
    }
    let n = x.len();
    if n == 0 || n != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{n} rows for {} targets",
            y.len()
        )));
    }
    let p = x[0].len();
    if let Some(i) = x.iter().position(|r| r.len() != p) {
        return Err(Error::DimensionMismatch(format!(
            "row {i} has {} features, expected {p}",
            x[i].len()
        )));
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(
            "ridge input contains NaN or infinity".into(),
        ));
    }

    let nf = n as f64;
    let intercept = y.iter().sum::<f64>() / nf;
    let mut retained = Vec::new();
    let mut dropped = Vec::new();
    let mut means = Vec::new();
    let mut stds = Vec::new();
    for j in 0..p {
        let m = x.iter().map(|r| r[j]).sum::<f64>() / nf;
        let var = x.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / nf;
        let s = var.sqrt();
        if s <= 1e-12 * (1.0 + m.abs()) {
            dropped.push(j);
        } else {
            retained.push(j);
            means.push(m);
            stds.push(s);
        }
    }
    let k = retained.len();
    let z = DMatrix::from_fn(n, k, |i, c| (x[i][retained[c]] - means[c]) / stds[c]);
    let yv = DVector::from_column_slice(y);
    let mut gram = z.transpose() * &z;
    for d in 0..k {
        gram[(d, d)] += lambda;
    }
    let rhs = z.transpose() * &yv;

    let weights = if k == 0 {
        DVector::zeros(0)
    } else {
        let chol = gram.clone().cholesky().ok_or(Error::Singular {
            residual: f64::INFINITY,
        })?;
        let mut w = chol.solve(&rhs);
        let tol = 1e-8 * (1.0 + rhs.amax());
        let mut res = normal_residual(&gram, &rhs, &w);
        if res > tol {
            // One round of iterative refinement.
            w += chol.solve(&(&rhs - &gram * &w));
            res = normal_residual(&gram, &rhs, &w);
        }
        if res.is_nan() || res > tol || w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular { residual: res });
        }
        w
    };

    Ok(RidgeModel {
        lambda,
        intercept,
        weights: weights.iter().copied().collect(),
        retained,
        dropped,
        means,
        stds,
        n_features: p,
    })
}
