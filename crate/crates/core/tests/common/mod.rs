//! Independent reference implementations shared by the integration tests.
//! Nothing here calls into the library's numeric code.

#![allow(dead_code)]

use chrono::NaiveDate;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use wavestack_core::{Band, BandPlane, Observation, ObservationSeries, Units};

pub const N: usize = 12;

/// Full circular convolution of `q` with `taps`, keeping the odd outputs.
pub fn conv_downsample(q: &[f64; N], taps: &[f64]) -> [f64; N / 2] {
    let mut full = [0.0; N];
    for (t, out) in full.iter_mut().enumerate() {
        for (k, &h) in taps.iter().enumerate() {
            let idx = (t as isize - k as isize).rem_euclid(N as isize) as usize;
            *out += h * q[idx];
        }
    }
    std::array::from_fn(|n| full[2 * n + 1])
}

/// The 12x12 analysis operator: rows 0..6 lowpass, rows 6..12 highpass.
pub fn analysis_matrix(lp: &[f64], hp: &[f64]) -> [[f64; N]; N] {
    let mut w = [[0.0; N]; N];
    for j in 0..N {
        let mut e = [0.0; N];
        e[j] = 1.0;
        let a = conv_downsample(&e, lp);
        let d = conv_downsample(&e, hp);
        for n in 0..N / 2 {
            w[n][j] = a[n];
            w[n + N / 2][j] = d[n];
        }
    }
    w
}

/// Largest entry of `|WᵀW − I|`.
pub fn gram_deviation(w: &[[f64; N]; N]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..N {
        for j in 0..N {
            let g: f64 = (0..N).map(|r| w[r][i] * w[r][j]).sum();
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - want).abs());
        }
    }
    worst
}

pub fn random_signal(rng: &mut ChaCha8Rng) -> [f64; N] {
    std::array::from_fn(|_| rng.random_range(-1.0..1.0))
}

/// Haversine great-circle distance in meters.
pub fn haversine_m(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    const R: f64 = 6_371_008.8;
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * R * a.sqrt().asin()
}

/// Random observation series with `bands` bands over `months` consecutive
/// calendar months starting January 2019, 1 to `per_month` dates per
/// month. Every pixel keeps at least one valid observation in every month,
/// so no gap filling is involved. Invalid observations carry garbage
/// values that must be ignored.
pub fn random_series(
    rng: &mut ChaCha8Rng,
    width: usize,
    height: usize,
    bands: usize,
    months: usize,
    per_month: usize,
) -> ObservationSeries {
    let n = width * height;
    let band_list: Vec<Band> = (0..bands)
        .map(|b| Band::new(format!("b{b}"), Units::Generic))
        .collect();
    let mut obs = Vec::new();
    for m in 0..months {
        let year = 2019 + (m / 12) as i32;
        let month = (m % 12) as u32 + 1;
        let count = rng.random_range(1..=per_month);
        let mut days: Vec<u32> = (1..=28).collect();
        for i in 0..count {
            let j = rng.random_range(i..days.len());
            days.swap(i, j);
        }
        for (i, &day) in days[..count].iter().enumerate() {
            let valid: Vec<bool> = (0..n).map(|_| i == 0 || rng.random_bool(0.7)).collect();
            let planes = (0..bands)
                .map(|_| BandPlane {
                    width,
                    height,
                    values: valid
                        .iter()
                        .map(|&ok| {
                            if ok {
                                rng.random_range(0.01f32..1.0)
                            } else {
                                -999.0
                            }
                        })
                        .collect(),
                })
                .collect();
            obs.push(Observation {
                date: NaiveDate::from_ymd_opt(year, month, day).unwrap(),
                planes,
                valid,
            });
        }
    }
    ObservationSeries::new(band_list, obs).unwrap()
}

fn valid_values(
    obs: &ObservationSeries,
    band: usize,
    pixel: usize,
    month0: Option<u32>,
) -> Vec<f32> {
    let mut out = Vec::new();
    for o in obs.observations() {
        if !o.valid[pixel] {
            continue;
        }
        if let Some(m) = month0 {
            if chrono::Datelike::month0(&o.date) != m {
                continue;
            }
        }
        out.push(o.planes[band].values[pixel]);
    }
    out
}

pub fn oracle_mean(values: &[f32]) -> f64 {
    let mut s = 0.0f64;
    for v in values {
        s += *v as f64;
    }
    s / values.len() as f64
}

pub fn oracle_median(values: &[f32]) -> f32 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        ((v[k / 2 - 1] as f64 + v[k / 2] as f64) * 0.5) as f32
    }
}

pub fn oracle_month_mean(obs: &ObservationSeries, band: usize, pixel: usize, month0: u32) -> f64 {
    oracle_mean(&valid_values(obs, band, pixel, Some(month0)))
}

pub fn oracle_month_median(obs: &ObservationSeries, band: usize, pixel: usize, month0: u32) -> f32 {
    oracle_median(&valid_values(obs, band, pixel, Some(month0)))
}

pub fn oracle_composite_median(obs: &ObservationSeries, band: usize, pixel: usize) -> f32 {
    oracle_median(&valid_values(obs, band, pixel, None))
}

/// Standardizes columns (population std) and returns `(Z, means, stds)`.
pub fn standardize(x: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let n = x.len() as f64;
    let p = x[0].len();
    let means: Vec<f64> = (0..p)
        .map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect();
    let stds: Vec<f64> = (0..p)
        .map(|j| (x.iter().map(|r| (r[j] - means[j]).powi(2)).sum::<f64>() / n).sqrt())
        .collect();
    let z = x
        .iter()
        .map(|r| (0..p).map(|j| (r[j] - means[j]) / stds[j]).collect())
        .collect();
    (z, means, stds)
}

/// Minimizes `½‖y − ȳ − Zw‖² + ½λ‖w‖²` by plain gradient descent.
pub fn ridge_gradient_descent(z: &[Vec<f64>], y: &[f64], lambda: f64) -> Vec<f64> {
    let n = z.len();
    let p = z[0].len();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let trace: f64 = z.iter().flatten().map(|v| v * v).sum::<f64>() + lambda * p as f64;
    let step = 1.0 / trace;
    let mut w = vec![0.0; p];
    for _ in 0..200_000 {
        let mut grad: Vec<f64> = w.iter().map(|wj| lambda * wj).collect();
        for (row, &yi) in z.iter().zip(y) {
            let r: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() - (yi - ybar);
            for j in 0..p {
                grad[j] += r * row[j];
            }
        }
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        for j in 0..p {
            w[j] -= step * grad[j];
        }
        if gnorm < 1e-13 {
            break;
        }
    }
    w
}
