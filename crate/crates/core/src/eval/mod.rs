//! Goodness of fit, data splits, and the ridge experiment that compares
//! input variants.

mod ridge;

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{build_dataset, DatasetTable, VariantSpec};
use crate::raster::TileRecord;
use crate::wavelet::WaveletFilter;

pub use ridge::{ridge_fit, RidgeModel};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct R2Report {
    pub r2: f64,
    pub rss: f64,
    pub tss: f64,
    pub n: usize,
}

/// Coefficient of determination `1 - RSS/TSS`.
pub fn r2_score(y: &[f64], y_hat: &[f64]) -> Result<R2Report> {
    if y.len() != y_hat.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} targets vs {} predictions",
            y.len(),
            y_hat.len()
        )));
    }
    if y.len() < 2 {
        return Err(Error::InvalidArgument(
            "r2 needs at least two samples".into(),
        ));
    }
    if y.iter().chain(y_hat).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("r2 input contains NaN or infinity".into()));
    }
    let n = y.len();
    let mean = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let rss: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b).powi(2)).sum();
    if tss == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(R2Report {
        r2: 1.0 - rss / tss,
        rss,
        tss,
        n,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

pub const DEFAULT_RATIOS: (f64, f64, f64) = (0.6, 0.2, 0.2);

fn canonical_ids<S: AsRef<str>>(ids: &[S]) -> Result<Vec<String>> {
    let mut v: Vec<String> = ids.iter().map(|s| s.as_ref().to_string()).collect();
    v.sort();
    if let Some(w) = v.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicateTileId(w[0].clone()));
    }
    Ok(v)
}

fn shuffled<S: AsRef<str>>(ids: &[S], seed: u64) -> Result<Vec<String>> {
    let mut v = canonical_ids(ids)?;
    v.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(v)
}

/// Seeded train/validation/test partition. Validation and test sizes are
/// `floor(n * ratio)`; the remainder goes to training.
pub fn split_dataset<S: AsRef<str>>(
    ids: &[S],
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<Split> {
    if ids.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 ids to split, got {}",
            ids.len()
        )));
    }
    let (a, b, c) = ratios;
    if [a, b, c].iter().any(|r| !(0.0..=1.0).contains(r)) || (a + b + c - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "split ratios {ratios:?} must sum to 1"
        )));
    }
    let order = shuffled(ids, seed)?;
    let n = order.len();
    let n_val = (n as f64 * b + 1e-9).floor() as usize;
    let n_test = (n as f64 * c + 1e-9).floor() as usize;
    let n_train = n - n_val - n_test;
    Ok(Split {
        train: order[..n_train].to_vec(),
        val: order[n_train..n_train + n_val].to_vec(),
        test: order[n_train + n_val..].to_vec(),
    })
}

/// `k` seeded folds whose sizes differ by at most one.
pub fn kfold<S: AsRef<str>>(ids: &[S], k: usize, seed: u64) -> Result<Vec<Vec<String>>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k = {k} must be >= 2")));
    }
    if ids.len() < k {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds the {} available ids",
            ids.len()
        )));
    }
    let order = shuffled(ids, seed)?;
    let mut folds = vec![Vec::new(); k];
    for (i, id) in order.into_iter().enumerate() {
        folds[i % k].push(id);
    }
    Ok(folds)
}

/// `10^-3, 10^-2, ..., 10^3`.
pub fn default_lambda_grid() -> Vec<f64> {
    (-3..=3).map(|e| 10f64.powi(e)).collect()
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub filter: WaveletFilter,
    pub lambdas: Vec<f64>,
    pub ratios: (f64, f64, f64),
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(filter: WaveletFilter, seed: u64) -> Self {
        ExperimentConfig {
            filter,
            lambdas: default_lambda_grid(),
            ratios: DEFAULT_RATIOS,
            seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaScore {
    pub lambda: f64,
    pub val_r2: f64,
}

/// Outcome of fitting one table on one partition.
#[derive(Clone, Debug, PartialEq)]
pub struct FitOutcome {
    pub lambda: f64,
    pub val_r2: f64,
    pub test: R2Report,
    pub n_train: usize,
    pub n_val: usize,
    pub lambda_scores: Vec<LambdaScore>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariantResult {
    pub variant: VariantSpec,
    pub dropped: usize,
    pub outcome: FitOutcome,
}

type Rows = (Vec<Vec<f64>>, Vec<f64>);

fn select_rows(table: &DatasetTable, ids: &[String]) -> Rows {
    let wanted: HashSet<&str> = ids.iter().map(String::as_str).collect();
    table
        .rows
        .iter()
        .filter(|r| wanted.contains(r.tile_id.as_str()))
        .map(|r| (r.features.clone(), r.target))
        .unzip()
}

/// Fits ridge on `train` for every λ, keeps the λ with the best validation
/// R² (the smaller λ on ties), and scores it on `test`.
pub fn fit_and_score(table: &DatasetTable, split: &Split, lambdas: &[f64]) -> Result<FitOutcome> {
    if lambdas.is_empty() {
        return Err(Error::InvalidArgument("empty lambda grid".into()));
    }
    let (x_tr, y_tr) = select_rows(table, &split.train);
    let (x_va, y_va) = select_rows(table, &split.val);
    let (x_te, y_te) = select_rows(table, &split.test);
    if x_tr.len() < 2 || x_va.len() < 2 || x_te.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "degenerate split: {} train, {} val, {} test rows",
            x_tr.len(),
            x_va.len(),
            x_te.len()
        )));
    }
    let mut grid = lambdas.to_vec();
    grid.sort_by(f64::total_cmp);
    let mut scores = Vec::with_capacity(grid.len());
    let mut best: Option<(f64, RidgeModel)> = None;
    for &lambda in &grid {
        let model = ridge_fit(&x_tr, &y_tr, lambda)?;
        let val = r2_score(&y_va, &model.predict(&x_va))?.r2;
        scores.push(LambdaScore {
            lambda,
            val_r2: val,
        });
        if best.as_ref().map_or(true, |(b, _)| val > *b) {
            best = Some((val, model));
        }
    }
    let (val_r2, model) = best.expect("non-empty grid");
    let test = r2_score(&y_te, &model.predict(&x_te))?;
    Ok(FitOutcome {
        lambda: model.lambda,
        val_r2,
        test,
        n_train: x_tr.len(),
        n_val: x_va.len(),
        lambda_scores: scores,
    })
}

fn check_partition(all: &[String], parts: &[&[String]]) -> Result<()> {
    let mut seen = HashSet::new();
    for id in parts.iter().flat_map(|p| p.iter()) {
        if !seen.insert(id.as_str()) {
            return Err(Error::InvalidArgument(format!(
                "id {id} appears in two partitions"
            )));
        }
    }
    if seen.len() != all.len() || all.iter().any(|id| !seen.contains(id.as_str())) {
        return Err(Error::InvalidArgument(
            "partitions do not cover the ids".into(),
        ));
    }
    Ok(())
}

/// Builds each variant's table, splits tiles 60/20/20 by id (one split
/// shared by all variants), selects λ on validation, and reports test R².
pub fn run_experiment(
    tiles: &[TileRecord],
    variants: &[VariantSpec],
    config: &ExperimentConfig,
) -> Result<Vec<VariantResult>> {
    if tiles.len() < 50 {
        return Err(Error::InvalidArgument(format!(
            "experiment needs at least 50 tiles, got {}",
            tiles.len()
        )));
    }
    let ids: Vec<&str> = tiles.iter().map(|t| t.tile_id.as_str()).collect();
    let split = split_dataset(&ids, config.ratios, config.seed)?;
    let all = canonical_ids(&ids)?;
    check_partition(&all, &[&split.train, &split.val, &split.test])?;

    variants
        .par_iter()
        .map(|spec| {
            let built = build_dataset(tiles, spec, &config.filter)?;
            let outcome = fit_and_score(&built.table, &split, &config.lambdas)?;
            log::info!(
                "{spec}: lambda={} val_r2={:.4} test_r2={:.4} dropped={}",
                outcome.lambda,
                outcome.val_r2,
                outcome.test.r2,
                built.dropped.len()
            );
            Ok(VariantResult {
                variant: *spec,
                dropped: built.dropped.len(),
                outcome,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvResult {
    pub variant: VariantSpec,
    pub folds: Vec<FitOutcome>,
}

impl CvResult {
    pub fn mean_test_r2(&self) -> f64 {
        self.folds.iter().map(|f| f.test.r2).sum::<f64>() / self.folds.len() as f64
    }
}

/// k-fold evaluation: fold `i` is the test set, fold `i + 1` (mod k)
/// selects λ, and the remaining folds train.
pub fn run_cross_validation(
    tiles: &[TileRecord],
    variants: &[VariantSpec],
    k: usize,
    config: &ExperimentConfig,
) -> Result<Vec<CvResult>> {
    if k < 3 {
        return Err(Error::InvalidArgument(format!(
            "cross-validation needs k >= 3 (train, validation and test folds), got {k}"
        )));
    }
    let ids: Vec<&str> = tiles.iter().map(|t| t.tile_id.as_str()).collect();
    let folds = kfold(&ids, k, config.seed)?;
    let all = canonical_ids(&ids)?;
    let fold_refs: Vec<&[String]> = folds.iter().map(Vec::as_slice).collect();
    check_partition(&all, &fold_refs)?;
    let splits: Vec<Split> = (0..k)
        .map(|i| Split {
            test: folds[i].clone(),
            val: folds[(i + 1) % k].clone(),
            train: (0..k)
                .filter(|&j| j != i && j != (i + 1) % k)
                .flat_map(|j| folds[j].iter().cloned())
                .collect(),
        })
        .collect();
    variants
        .par_iter()
        .map(|spec| {
            let built = build_dataset(tiles, spec, &config.filter)?;
            let folds = splits
                .iter()
                .map(|s| fit_and_score(&built.table, s, &config.lambdas))
                .collect::<Result<Vec<_>>>()?;
            Ok(CvResult {
                variant: *spec,
                folds,
            })
        })
        .collect()
}

/// Returns a copy of `table` with targets permuted by `seed`; used as a
/// null control.
pub fn shuffle_targets(table: &DatasetTable, seed: u64) -> DatasetTable {
    let mut targets = table.targets();
    targets.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = table.clone();
    for (row, t) in out.rows.iter_mut().zip(targets) {
        row.target = t;
    }
    out
}
