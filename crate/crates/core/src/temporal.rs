//! Temporal reductions: monthly means, per-pixel composites, and the
//! three-year month-of-year median.
//!
//! Every reduction is computed per pixel in `f64` and stored as `f32`.
//! Observations are visited in canonical date order, so outputs are
//! bitwise independent of input order and worker count.

use chrono::Datelike;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::{BandPlane, CompositeStack, ObservationSeries, TimeSeriesStack, MONTHS};

/// How a static composite reduces the valid observations of a pixel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CompositeMethod {
    #[default]
    Median,
    Mean,
}

/// Median of a slice; the mean of the two middle values when the count is
/// even. `NaN` for an empty slice. Reorders `values`.
pub fn median(values: &mut [f32]) -> f32 {
    let n = values.len();
    if n == 0 {
        return f32::NAN;
    }
    values.sort_unstable_by(f32::total_cmp);
    if n % 2 == 1 {
        values[n / 2]
    } else {
        ((values[n / 2 - 1] as f64 + values[n / 2] as f64) / 2.0) as f32
    }
}

fn mean(values: &[f32]) -> f32 {
    if values.is_empty() {
        return f32::NAN;
    }
    let sum: f64 = values.iter().map(|&v| v as f64).sum();
    (sum / values.len() as f64) as f32
}

/// Fills empty (`NaN`) months by linear interpolation between the nearest
/// valid months, wrapping around the year. Needs at least two valid months;
/// otherwise the series is left as is and `false` is returned.
pub fn gap_fill(series: &mut [f32; MONTHS]) -> bool {
    let valid = series.iter().filter(|v| !v.is_nan()).count();
    if valid == MONTHS {
        return true;
    }
    if valid < 2 {
        return false;
    }
    let src = *series;
    for j in 0..MONTHS {
        if !src[j].is_nan() {
            continue;
        }
        let back = (1..MONTHS)
            .find(|d| !src[(j + MONTHS - d) % MONTHS].is_nan())
            .unwrap();
        let fwd = (1..MONTHS)
            .find(|d| !src[(j + d) % MONTHS].is_nan())
            .unwrap();
        let before = src[(j + MONTHS - back) % MONTHS] as f64;
        let after = src[(j + fwd) % MONTHS] as f64;
        series[j] = ((before * fwd as f64 + after * back as f64) / (back + fwd) as f64) as f32;
    }
    true
}

fn month_index(date: &chrono::NaiveDate) -> usize {
    date.month0() as usize
}

/// Scatters per-pixel monthly series into a single-band stack.
fn to_stack(
    obs: &ObservationSeries,
    band: usize,
    per_pixel: Vec<[f32; MONTHS]>,
) -> Result<TimeSeriesStack> {
    let (w, h) = (obs.width, obs.height);
    let planes = (0..MONTHS)
        .map(|m| BandPlane {
            width: w,
            height: h,
            values: per_pixel.iter().map(|s| s[m]).collect(),
        })
        .collect();
    TimeSeriesStack::single(obs.bands[band].clone(), planes)
}

/// Gathers, per month-of-year, the valid finite values of one pixel.
fn pooled_by_month(obs: &ObservationSeries, band: usize, pixel: usize) -> [Vec<f32>; MONTHS] {
    let mut pools: [Vec<f32>; MONTHS] = Default::default();
    for o in obs.observations() {
        let v = o.planes[band].values[pixel];
        if o.valid[pixel] && !v.is_nan() {
            pools[month_index(&o.date)].push(v);
        }
    }
    pools
}

/// Twelve monthly means of one band. Months without a valid observation are
/// gap-filled; pixels with fewer than two valid months keep `NaN`.
pub fn monthly_mean(obs: &ObservationSeries, band: &str) -> Result<TimeSeriesStack> {
    let b = obs.band_index(band)?;
    let span = obs.span_months();
    if span > MONTHS as i32 {
        return Err(Error::WindowSpan {
            months: span,
            required: "at most 12",
        });
    }
    let n = obs.width * obs.height;
    let per_pixel: Vec<[f32; MONTHS]> = (0..n)
        .into_par_iter()
        .map(|p| {
            let pools = pooled_by_month(obs, b, p);
            let mut s: [f32; MONTHS] = std::array::from_fn(|m| mean(&pools[m]));
            gap_fill(&mut s);
            s
        })
        .collect();
    to_stack(obs, b, per_pixel)
}

/// Month-of-year medians pooled over a window of at least 36 months.
pub fn monthly_median_multiyear(obs: &ObservationSeries, band: &str) -> Result<TimeSeriesStack> {
    let b = obs.band_index(band)?;
    let span = obs.span_months();
    if span < 36 {
        return Err(Error::WindowSpan {
            months: span,
            required: "at least 36",
        });
    }
    let n = obs.width * obs.height;
    let per_pixel: Vec<[f32; MONTHS]> = (0..n)
        .into_par_iter()
        .map(|p| {
            let mut pools = pooled_by_month(obs, b, p);
            let mut s: [f32; MONTHS] = std::array::from_fn(|m| median(&mut pools[m]));
            gap_fill(&mut s);
            s
        })
        .collect();
    to_stack(obs, b, per_pixel)
}

/// Per-pixel, per-band reduction of all valid observations. Pixels with no
/// valid observation are `NaN`.
pub fn composite(obs: &ObservationSeries, method: CompositeMethod) -> Result<CompositeStack> {
    if obs.is_empty() {
        return Err(Error::Empty("no observations to composite".into()));
    }
    let n = obs.width * obs.height;
    let planes = (0..obs.bands.len())
        .map(|b| {
            let values = (0..n)
                .into_par_iter()
                .map_init(Vec::new, |buf, p| {
                    buf.clear();
                    buf.extend(
                        obs.observations()
                            .iter()
                            .filter(|o| o.valid[p])
                            .map(|o| o.planes[b].values[p])
                            .filter(|v| !v.is_nan()),
                    );
                    match method {
                        CompositeMethod::Median => median(buf),
                        CompositeMethod::Mean => mean(buf),
                    }
                })
                .collect();
            BandPlane {
                width: obs.width,
                height: obs.height,
                values,
            }
        })
        .collect();
    CompositeStack::new(obs.bands.clone(), planes)
}

pub fn median_composite(obs: &ObservationSeries) -> Result<CompositeStack> {
    composite(obs, CompositeMethod::Median)
}
