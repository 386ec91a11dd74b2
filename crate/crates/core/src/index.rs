//! Band arithmetic.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::BandPlane;

const RANGE_TOLERANCE: f64 = 1e-6;
const MIN_DENOMINATOR: f64 = 1e-12;

/// NDVI of a single pixel. `NaN` when either input is missing, when the
/// denominator vanishes, or when the ratio leaves `[-1, 1]` by more than the
/// rounding tolerance (which only happens for negative reflectances).
#[inline]
pub fn ndvi_value(nir: f32, red: f32) -> f32 {
    if nir.is_nan() || red.is_nan() {
        return f32::NAN;
    }
    let (n, r) = (nir as f64, red as f64);
    let den = n + r;
    if den.abs() < MIN_DENOMINATOR {
        return f32::NAN;
    }
    let v = (n - r) / den;
    if v.abs() > 1.0 + RANGE_TOLERANCE {
        return f32::NAN;
    }
    v.clamp(-1.0, 1.0) as f32
}

/// Normalized difference `(NIR - Red) / (NIR + Red)` per pixel.
pub fn ndvi(nir: &BandPlane, red: &BandPlane) -> Result<BandPlane> {
    if !nir.same_shape(red) || nir.len() != red.len() {
        return Err(Error::DimensionMismatch(format!(
            "nir is {}x{}, red is {}x{}",
            nir.width, nir.height, red.width, red.height
        )));
    }
    let values = nir
        .values
        .par_iter()
        .zip(red.values.par_iter())
        .map(|(&n, &r)| ndvi_value(n, r))
        .collect();
    Ok(BandPlane {
        width: nir.width,
        height: nir.height,
        values,
    })
}
