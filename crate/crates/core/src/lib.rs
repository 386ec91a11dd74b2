//! Monthly NDVI wavelet features for tile-level regression.
//!
//! The pipeline goes from raw observations to monthly composites, NDVI,
//! a single-level periodic DWT per pixel, tile summary statistics, and a
//! ridge experiment that compares feature variants.

pub mod error;
pub mod eval;
pub mod features;
pub mod index;
pub mod io;
pub mod raster;
pub mod synth;
pub mod temporal;
pub mod wavelet;

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use eval::{
    kfold, r2_score, ridge_fit, run_cross_validation, run_experiment, split_dataset,
    ExperimentConfig, R2Report, RidgeModel, Split, VariantResult,
};
pub use features::{build_dataset, BuiltDataset, DatasetRow, DatasetTable, VariantId, VariantSpec};
pub use index::ndvi;
pub use raster::{
    Band, BandPlane, CompositeStack, GeoRef, Observation, ObservationSeries, TileRecord,
    TimeSeriesStack, Units, MONTHS,
};
pub use synth::{gen_dataset, gen_tile, jitter_location, SynthConfig};
pub use temporal::{composite, monthly_mean, monthly_median_multiyear, CompositeMethod};
pub use wavelet::{
    build_filter, dwt1_periodic, idwt1_periodic, wavelet_feature_planes, DwtLevel1, FilterName,
    WaveletFilter, WaveletStat,
};
