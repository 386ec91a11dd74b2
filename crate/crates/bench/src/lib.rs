//! Seeded inputs shared by the benchmarks.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wavestack_core::{Band, BandPlane, Observation, ObservationSeries, TimeSeriesStack, Units};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Twelve-sample signals drawn uniformly from [-1, 1).
pub fn signals(count: usize, seed: u64) -> Vec<[f64; 12]> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| std::array::from_fn(|_| r.random_range(-1.0..1.0)))
        .collect()
}

/// A square monthly NDVI stack of random values.
pub fn ndvi_stack(edge: usize, seed: u64) -> TimeSeriesStack {
    let mut r = rng(seed);
    let planes = (0..12)
        .map(|_| BandPlane {
            width: edge,
            height: edge,
            values: (0..edge * edge)
                .map(|_| r.random_range(-1.0f32..1.0))
                .collect(),
        })
        .collect();
    TimeSeriesStack::single(Band::new("ndvi", Units::Ndvi), planes).expect("valid stack")
}

/// One year of `per_month` dated observations with about a third of pixels masked.
pub fn observation_series(
    edge: usize,
    bands: usize,
    per_month: u32,
    seed: u64,
) -> ObservationSeries {
    let mut r = rng(seed);
    let n = edge * edge;
    let band_list = (0..bands)
        .map(|b| Band::new(format!("b{b}"), Units::Reflectance))
        .collect();
    let mut obs = Vec::new();
    for month in 1..=12 {
        for k in 0..per_month {
            let valid: Vec<bool> = (0..n).map(|_| r.random_bool(0.7)).collect();
            let planes = (0..bands)
                .map(|_| BandPlane {
                    width: edge,
                    height: edge,
                    values: (0..n).map(|_| r.random_range(0.01f32..0.6)).collect(),
                })
                .collect();
            obs.push(Observation {
                date: NaiveDate::from_ymd_opt(2020, month, 1 + 9 * k % 28).expect("valid date"),
                planes,
                valid,
            });
        }
    }
    ObservationSeries::new(band_list, obs).expect("valid series")
}

/// A noisy linear regression problem with `rows` samples of `cols` features.
pub fn regression(rows: usize, cols: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut r = rng(seed);
    let beta: Vec<f64> = (0..cols).map(|_| r.random_range(-1.0..1.0)).collect();
    let x: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..cols).map(|_| r.random_range(-2.0..2.0)).collect())
        .collect();
    let y = x
        .iter()
        .map(|row| {
            row.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>() + r.random_range(-0.1..0.1)
        })
        .collect();
    (x, y)
}
