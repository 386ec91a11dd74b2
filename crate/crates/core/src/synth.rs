//! Deterministic synthetic tiles with seasonal NDVI and a wealth-proxy target.
//!
//! A tile is a mosaic of four land-cover classes. Cropland and forest share
//! the same composite reflectance, so the annual composite alone cannot tell
//! them apart; only the monthly NDVI signal (mean level and seasonal
//! amplitude) separates them. The target mixes settlement fraction with the
//! tile's mean cropland amplitude:
//!
//! ```text
//! target = alpha * settlement_fraction + beta * mean(cropland amplitude) + N(0, sigma_t)
//! ```
//!
//! Every random draw comes from a ChaCha stream keyed by `(seed, tile_index)`
//! and a per-purpose stream id, consumed in a fixed pixel/month order, so a
//! tile is a pure function of the config and its index.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::{
    Band, BandPlane, CompositeStack, GeoRef, TileRecord, TimeSeriesStack, LANDSAT_BANDS, MONTHS,
    NDVI_BAND, NL_BAND,
};
use crate::temporal::gap_fill;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LandCover {
    Settlement = 0,
    Cropland = 1,
    Forest = 2,
    Barren = 3,
}

impl LandCover {
    pub const ALL: [LandCover; 4] = [
        LandCover::Settlement,
        LandCover::Cropland,
        LandCover::Forest,
        LandCover::Barren,
    ];
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassParams {
    pub ndvi_mean: f64,
    /// Seasonal NDVI amplitude.
    pub amplitude: f64,
    /// Month (1..12, fractional allowed) at which the seasonal term crosses zero upward.
    pub phase_month: f64,
    pub noise_sigma: f64,
    /// Mean reflectance per Landsat band, in [`LANDSAT_BANDS`] order.
    pub reflectance: [f64; 7],
    pub nl_radiance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TargetCoeffs {
    /// Weight of the settlement fraction.
    pub alpha: f64,
    /// Weight of the tile-mean cropland amplitude.
    pub beta: f64,
    pub sigma: f64,
}

impl TargetCoeffs {
    /// Noise-free part of the target.
    pub fn signal(&self, settlement_fraction: f64, mean_crop_amplitude: f64) -> f64 {
        self.alpha * settlement_fraction + self.beta * mean_crop_amplitude
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub tile_px: usize,
    pub pixel_size_m: f64,
    /// Indexed by [`LandCover`] discriminant.
    pub palette: [ClassParams; 4],
    /// Spread of the per-tile class preference; larger values give more
    /// varied class fractions across tiles.
    pub class_logit_sigma: f64,
    /// Box-blur radius of the per-pixel class noise.
    pub smoothing_radius: usize,
    /// Per-tile multiplier range applied to cropland amplitude.
    pub crop_intensity: (f64, f64),
    pub cloud_dropout_prob: f64,
    pub band_noise_sigma: f64,
    pub nl_noise_sigma: f64,
    pub target: TargetCoeffs,
    pub with_nl: bool,
    pub monthly_landsat: bool,
}

// Reflectance order: red, green, blue, nir, swir1, swir2, thermal.
const VEGETATED_REFLECTANCE: [f64; 7] = [0.08, 0.10, 0.06, 0.30, 0.22, 0.14, 0.45];

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            tile_px: 32,
            pixel_size_m: 30.0,
            palette: [
                ClassParams {
                    ndvi_mean: 0.20,
                    amplitude: 0.05,
                    phase_month: 1.0,
                    noise_sigma: 0.05,
                    reflectance: [0.18, 0.16, 0.14, 0.25, 0.28, 0.24, 0.60],
                    nl_radiance: 12.0,
                },
                ClassParams {
                    ndvi_mean: 0.35,
                    amplitude: 0.30,
                    phase_month: 4.0,
                    noise_sigma: 0.05,
                    reflectance: VEGETATED_REFLECTANCE,
                    nl_radiance: 0.5,
                },
                ClassParams {
                    ndvi_mean: 0.70,
                    amplitude: 0.10,
                    phase_month: 2.0,
                    noise_sigma: 0.05,
                    reflectance: VEGETATED_REFLECTANCE,
                    nl_radiance: 0.3,
                },
                ClassParams {
                    ndvi_mean: 0.10,
                    amplitude: 0.02,
                    phase_month: 1.0,
                    noise_sigma: 0.05,
                    reflectance: [0.25, 0.22, 0.18, 0.30, 0.38, 0.32, 0.65],
                    nl_radiance: 0.2,
                },
            ],
            class_logit_sigma: 1.0,
            smoothing_radius: 3,
            crop_intensity: (0.5, 1.5),
            cloud_dropout_prob: 0.1,
            band_noise_sigma: 0.02,
            nl_noise_sigma: 0.5,
            target: TargetCoeffs {
                alpha: 1.0,
                beta: 3.0,
                sigma: 0.05,
            },
            with_nl: true,
            monthly_landsat: false,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.tile_px == 0 {
            return bad("tile_px must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.cloud_dropout_prob) {
            return bad(format!(
                "cloud_dropout_prob {} not in [0,1]",
                self.cloud_dropout_prob
            ));
        }
        let sigmas = [
            self.band_noise_sigma,
            self.nl_noise_sigma,
            self.target.sigma,
            self.class_logit_sigma,
        ];
        if sigmas
            .iter()
            .chain(self.palette.iter().map(|c| &c.noise_sigma))
            .any(|s| !(*s >= 0.0 && s.is_finite()))
        {
            return bad("noise sigmas must be finite and >= 0".into());
        }
        if self.pixel_size_m.is_nan() || self.pixel_size_m <= 0.0 {
            return bad("pixel_size_m must be > 0".into());
        }
        let (lo, hi) = self.crop_intensity;
        if !(lo >= 0.0 && hi >= lo) {
            return bad(format!("crop_intensity range ({lo}, {hi}) is invalid"));
        }
        Ok(())
    }

    fn class(&self, c: LandCover) -> &ClassParams {
        &self.palette[c as usize]
    }
}

#[derive(Clone, Copy)]
#[repr(u64)]
enum Stream {
    Tile = 1,
    LandCover = 2,
    Ndvi = 3,
    Cloud = 4,
    Bands = 5,
    Nl = 6,
    LandsatMonthly = 7,
    Target = 8,
    Jitter = 9,
}

fn stream_rng(seed: u64, index: u64, stream: Stream) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&index.to_le_bytes());
    key[16..24].copy_from_slice(b"wavestk1");
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream as u64);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Separable box blur with edge clamping.
fn box_blur(values: &[f64], w: usize, h: usize, r: usize) -> Vec<f64> {
    if r == 0 {
        return values.to_vec();
    }
    let r = r as isize;
    let pass = |src: &[f64], horizontal: bool| -> Vec<f64> {
        let mut out = vec![0.0; src.len()];
        for y in 0..h as isize {
            for x in 0..w as isize {
                let mut s = 0.0;
                for d in -r..=r {
                    let (xx, yy) = if horizontal {
                        ((x + d).clamp(0, w as isize - 1), y)
                    } else {
                        (x, (y + d).clamp(0, h as isize - 1))
                    };
                    s += src[(yy * w as isize + xx) as usize];
                }
                out[(y * w as isize + x) as usize] = s / (2 * r + 1) as f64;
            }
        }
        out
    };
    pass(&pass(values, true), false)
}

fn land_cover(config: &SynthConfig, index: u64) -> Vec<LandCover> {
    let (w, h) = (config.tile_px, config.tile_px);
    let n = w * h;
    let mut rng = stream_rng(config.seed, index, Stream::LandCover);
    let logits: Vec<f64> = LandCover::ALL
        .iter()
        .map(|_| config.class_logit_sigma * normal(&mut rng))
        .collect();
    // Blurring iid unit noise over a (2r+1)^2 window divides its variance by
    // (2r+1)^2; rescale so the field has roughly unit variance.
    let gain = (2 * config.smoothing_radius + 1) as f64;
    let fields: Vec<Vec<f64>> = LandCover::ALL
        .iter()
        .map(|_| {
            let white: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
            box_blur(&white, w, h, config.smoothing_radius)
                .into_iter()
                .map(|v| v * gain)
                .collect()
        })
        .collect();
    (0..n)
        .map(|p| {
            let mut best = LandCover::Settlement;
            let mut best_score = f64::NEG_INFINITY;
            for (c, class) in LandCover::ALL.iter().enumerate() {
                let s = logits[c] + fields[c][p];
                if s > best_score {
                    best_score = s;
                    best = *class;
                }
            }
            best
        })
        .collect()
}

fn seasonal(m: usize, phase_month: f64) -> f64 {
    (2.0 * PI * ((m + 1) as f64 - phase_month) / MONTHS as f64).sin()
}

/// Reflectance response of each Landsat band to the seasonal NDVI term.
const SEASONAL_GAIN: [f64; 7] = [-0.15, 0.05, 0.03, 0.35, 0.05, 0.03, 0.05];

fn clamp_band(b: usize, v: f64) -> f32 {
    let v = if LANDSAT_BANDS[b] == "thermal" {
        v.max(0.0)
    } else {
        v.clamp(0.0, 1.0)
    };
    v as f32
}

/// Generates one tile; a pure function of `(config, tile_index)`.
pub fn gen_tile(config: &SynthConfig, tile_index: u64) -> TileRecord {
    let (w, h) = (config.tile_px, config.tile_px);
    let n = w * h;
    let cover = land_cover(config, tile_index);

    let mut tile_rng = stream_rng(config.seed, tile_index, Stream::Tile);
    let center_lon = tile_rng.random_range(-17.0..51.0);
    let center_lat = tile_rng.random_range(-34.0..37.0);
    let (lo, hi) = config.crop_intensity;
    let crop_intensity = if hi > lo {
        tile_rng.random_range(lo..hi)
    } else {
        lo
    };

    let amplitude = |c: LandCover| {
        let a = config.class(c).amplitude;
        if c == LandCover::Cropland {
            a * crop_intensity
        } else {
            a
        }
    };

    let mut ndvi_rng = stream_rng(config.seed, tile_index, Stream::Ndvi);
    let mut cloud_rng = stream_rng(config.seed, tile_index, Stream::Cloud);
    let mut series: Vec<[f32; MONTHS]> = Vec::with_capacity(n);
    for &c in &cover {
        let p = config.class(c);
        let amp = amplitude(c);
        let mut s = [0f32; MONTHS];
        for (m, v) in s.iter_mut().enumerate() {
            let noise = p.noise_sigma * normal(&mut ndvi_rng);
            let clouded = cloud_rng.random::<f64>() < config.cloud_dropout_prob;
            let x = (p.ndvi_mean + amp * seasonal(m, p.phase_month) + noise).clamp(-1.0, 1.0);
            *v = if clouded { f32::NAN } else { x as f32 };
        }
        gap_fill(&mut s);
        series.push(s);
    }
    let ndvi_planes = (0..MONTHS)
        .map(|m| BandPlane {
            width: w,
            height: h,
            values: series.iter().map(|s| s[m]).collect(),
        })
        .collect();
    let ndvi_monthly = TimeSeriesStack::single(Band::infer(NDVI_BAND), ndvi_planes)
        .expect("twelve uniform planes");

    let mut band_rng = stream_rng(config.seed, tile_index, Stream::Bands);
    let mut bands = Band::landsat();
    let mut planes: Vec<BandPlane> = (0..LANDSAT_BANDS.len())
        .map(|b| BandPlane {
            width: w,
            height: h,
            values: cover
                .iter()
                .map(|&c| {
                    let mu = config.class(c).reflectance[b];
                    clamp_band(b, mu + config.band_noise_sigma * normal(&mut band_rng))
                })
                .collect(),
        })
        .collect();
    if config.with_nl {
        let mut nl_rng = stream_rng(config.seed, tile_index, Stream::Nl);
        bands.push(Band::infer(NL_BAND));
        planes.push(BandPlane {
            width: w,
            height: h,
            values: cover
                .iter()
                .map(|&c| {
                    let v =
                        config.class(c).nl_radiance + config.nl_noise_sigma * normal(&mut nl_rng);
                    v.max(0.0) as f32
                })
                .collect(),
        });
    }
    let composite = CompositeStack::new(bands, planes).expect("unique bands, uniform planes");

    let landsat_monthly = config.monthly_landsat.then(|| {
        let mut rng = stream_rng(config.seed, tile_index, Stream::LandsatMonthly);
        let months = (0..MONTHS)
            .map(|m| {
                (0..LANDSAT_BANDS.len())
                    .map(|b| BandPlane {
                        width: w,
                        height: h,
                        values: cover
                            .iter()
                            .map(|&c| {
                                let p = config.class(c);
                                let v = p.reflectance[b]
                                    + SEASONAL_GAIN[b] * amplitude(c) * seasonal(m, p.phase_month)
                                    + config.band_noise_sigma * normal(&mut rng);
                                clamp_band(b, v)
                            })
                            .collect(),
                    })
                    .collect()
            })
            .collect();
        TimeSeriesStack::new(Band::landsat(), months).expect("twelve uniform months")
    });

    let settlement = cover
        .iter()
        .filter(|&&c| c == LandCover::Settlement)
        .count() as f64
        / n as f64;
    let crop_amp = cover
        .iter()
        .filter(|&&c| c == LandCover::Cropland)
        .map(|&c| amplitude(c))
        .sum::<f64>()
        / n as f64;
    let mut target_rng = stream_rng(config.seed, tile_index, Stream::Target);
    let target =
        config.target.signal(settlement, crop_amp) + config.target.sigma * normal(&mut target_rng);

    TileRecord {
        tile_id: tile_id(tile_index),
        georef: GeoRef {
            center_lon,
            center_lat,
            pixel_size_m: config.pixel_size_m,
            width_px: w,
            height_px: h,
            urban: settlement >= 0.25,
        },
        composite,
        ndvi_monthly,
        landsat_monthly,
        target,
    }
}

pub fn tile_id(index: u64) -> String {
    format!("synth-{index:06}")
}

/// Class fractions of a generated tile, in [`LandCover::ALL`] order.
pub fn class_fractions(config: &SynthConfig, tile_index: u64) -> [f64; 4] {
    let cover = land_cover(config, tile_index);
    let n = cover.len() as f64;
    LandCover::ALL.map(|c| cover.iter().filter(|&&x| x == c).count() as f64 / n)
}

/// Tiles `0..n`, generated in parallel.
pub fn gen_dataset(config: &SynthConfig, n: usize) -> Result<Vec<TileRecord>> {
    config.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument("tile count must be >= 1".into()));
    }
    Ok((0..n as u64)
        .into_par_iter()
        .map(|i| gen_tile(config, i))
        .collect())
}

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// Maximum displacement for the urban flag of a location.
pub fn max_displacement_m(urban: bool) -> f64 {
    if urban {
        2_000.0
    } else {
        5_000.0
    }
}

/// Displaces a tile center along a uniformly drawn bearing by a distance
/// drawn uniformly in `[0, max]`, with `max` 2 km for urban and 5 km for
/// rural locations. The destination is computed on the sphere, so the
/// great-circle displacement equals the drawn distance.
pub fn jitter_location(georef: &GeoRef, seed: u64) -> GeoRef {
    let mut rng = stream_rng(seed, 0, Stream::Jitter);
    let bearing = rng.random_range(0.0..2.0 * PI);
    let dist = rng.random::<f64>() * max_displacement_m(georef.urban);
    let delta = dist / EARTH_RADIUS_M;
    let lat1 = georef.center_lat.to_radians();
    let lon1 = georef.center_lon.to_radians();
    let lat2 = (lat1.sin() * delta.cos() + lat1.cos() * delta.sin() * bearing.cos()).asin();
    let lon2 = lon1
        + (bearing.sin() * delta.sin() * lat1.cos()).atan2(delta.cos() - lat1.sin() * lat2.sin());
    let mut lon = lon2.to_degrees();
    if lon >= 180.0 {
        lon -= 360.0;
    } else if lon < -180.0 {
        lon += 360.0;
    }
    GeoRef {
        center_lon: lon,
        center_lat: lat2.to_degrees(),
        ..georef.clone()
    }
}
