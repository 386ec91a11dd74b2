//! Single-level periodized DWT of the twelve-month signal and the six
//! coefficient summary planes.
//!
//! With `q` extended periodically (`q[m] = q[m mod 12]`), the analysis step is
//!
//! ```text
//! approx[n] = Σ_k lp[k] · q[2n + 1 - k]
//! detail[n] = Σ_k hp[k] · q[2n + 1 - k]      n = 0..6
//! ```
//!
//! accumulated in `f64` for ascending `k`. Periodization yields exactly six
//! coefficients per sub-band whatever the filter length, which is what makes
//! the 62-tap Meyer filter usable on a 12-sample signal.

mod filters;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::{Band, BandPlane, TimeSeriesStack, Units, MONTHS};

pub const SIGNAL_LEN: usize = MONTHS;
pub const HALF_LEN: usize = SIGNAL_LEN / 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FilterName {
    Haar,
    Db4,
    Dmey,
}

impl FilterName {
    pub const ALL: [FilterName; 3] = [FilterName::Haar, FilterName::Db4, FilterName::Dmey];

    pub fn as_str(self) -> &'static str {
        match self {
            FilterName::Haar => "haar",
            FilterName::Db4 => "db4",
            FilterName::Dmey => "dmey",
        }
    }
}

impl fmt::Display for FilterName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FilterName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "haar" => Ok(FilterName::Haar),
            "db4" => Ok(FilterName::Db4),
            "dmey" => Ok(FilterName::Dmey),
            _ => Err(Error::UnknownFilter(s.to_string())),
        }
    }
}

/// Orthonormal analysis filter pair.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveletFilter {
    pub name: FilterName,
    pub lp: Vec<f64>,
    pub hp: Vec<f64>,
}

impl WaveletFilter {
    pub fn new(name: FilterName) -> Self {
        let lp = match name {
            FilterName::Haar => vec![std::f64::consts::FRAC_1_SQRT_2; 2],
            FilterName::Db4 => filters::DB4_LP.to_vec(),
            FilterName::Dmey => filters::DMEY_LP.to_vec(),
        };
        Self::from_lowpass(name, lp)
    }

    fn from_lowpass(name: FilterName, lp: Vec<f64>) -> Self {
        let f = lp.len();
        let hp = (0..f)
            .map(|k| {
                if k % 2 == 0 {
                    lp[f - 1 - k]
                } else {
                    -lp[f - 1 - k]
                }
            })
            .collect();
        WaveletFilter { name, lp, hp }
    }

    pub fn len(&self) -> usize {
        self.lp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lp.is_empty()
    }

    /// The four filter identities as `(name, deviation)` pairs: lowpass sum
    /// minus √2, highpass sum, lowpass norm minus one, and the largest
    /// quadrature-mirror mismatch.
    pub fn identity_residuals(&self) -> [(&'static str, f64); 4] {
        let f = self.len();
        let sum_lp: f64 = self.lp.iter().sum();
        let sum_hp: f64 = self.hp.iter().sum();
        let norm = self.lp.iter().map(|v| v * v).sum::<f64>().sqrt();
        let qmf = (0..f)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                (self.hp[k] - sign * self.lp[f - 1 - k]).abs()
            })
            .fold(0.0, f64::max);
        [
            ("sum(lp) - sqrt(2)", sum_lp - std::f64::consts::SQRT_2),
            ("sum(hp)", sum_hp),
            ("norm(lp) - 1", norm - 1.0),
            ("qmf mismatch", qmf),
        ]
    }
}

/// Resolves a filter by name: `haar`, `db4` or `dmey`.
pub fn build_filter(name: &str) -> Result<WaveletFilter> {
    Ok(WaveletFilter::new(name.parse()?))
}

/// Approximation (low-frequency) and detail (high-frequency) coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DwtLevel1 {
    pub approx: [f64; HALF_LEN],
    pub detail: [f64; HALF_LEN],
}

#[inline]
fn periodic_index(n: usize, k: usize) -> usize {
    (2 * n as isize + 1 - k as isize).rem_euclid(SIGNAL_LEN as isize) as usize
}

pub fn dwt1_periodic(q: &[f64; SIGNAL_LEN], filter: &WaveletFilter) -> Result<DwtLevel1> {
    if let Some(m) = q.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("signal sample {m} is {}", q[m])));
    }
    Ok(dwt1_unchecked(q, filter))
}

#[inline]
fn dwt1_unchecked(q: &[f64; SIGNAL_LEN], filter: &WaveletFilter) -> DwtLevel1 {
    let mut approx = [0.0; HALF_LEN];
    let mut detail = [0.0; HALF_LEN];
    for n in 0..HALF_LEN {
        let (mut a, mut d) = (0.0, 0.0);
        for (k, (l, h)) in filter.lp.iter().zip(&filter.hp).enumerate() {
            let x = q[periodic_index(n, k)];
            a += l * x;
            d += h * x;
        }
        approx[n] = a;
        detail[n] = d;
    }
    DwtLevel1 { approx, detail }
}

/// Applies the transpose of the analysis operator; the inverse for an
/// orthonormal filter.
pub fn idwt1_periodic(c: &DwtLevel1, filter: &WaveletFilter) -> [f64; SIGNAL_LEN] {
    let mut q = [0.0; SIGNAL_LEN];
    for n in 0..HALF_LEN {
        for (k, (l, h)) in filter.lp.iter().zip(&filter.hp).enumerate() {
            q[periodic_index(n, k)] += l * c.approx[n] + h * c.detail[n];
        }
    }
    q
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoefStats {
    pub lfc_min: f64,
    pub lfc_max: f64,
    pub lfc_mean: f64,
    pub hfc_min: f64,
    pub hfc_max: f64,
    pub hfc_mean: f64,
}

fn min_max_mean(v: &[f64; HALF_LEN]) -> (f64, f64, f64) {
    let (mut lo, mut hi, mut sum) = (v[0], v[0], 0.0);
    for &x in v {
        lo = lo.min(x);
        hi = hi.max(x);
        sum += x;
    }
    // Rounding in the sum must not push the mean outside [min, max].
    (lo, hi, (sum / HALF_LEN as f64).clamp(lo, hi))
}

pub fn coef_stats(c: &DwtLevel1) -> CoefStats {
    let (lfc_min, lfc_max, lfc_mean) = min_max_mean(&c.approx);
    let (hfc_min, hfc_max, hfc_mean) = min_max_mean(&c.detail);
    CoefStats {
        lfc_min,
        lfc_max,
        lfc_mean,
        hfc_min,
        hfc_max,
        hfc_mean,
    }
}

/// One of the six summary statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WaveletStat {
    LfcMin,
    LfcMax,
    LfcMean,
    HfcMin,
    HfcMax,
    HfcMean,
}

impl WaveletStat {
    pub const ALL: [WaveletStat; 6] = [
        WaveletStat::LfcMin,
        WaveletStat::LfcMax,
        WaveletStat::LfcMean,
        WaveletStat::HfcMin,
        WaveletStat::HfcMax,
        WaveletStat::HfcMean,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            WaveletStat::LfcMin => "lfc_min",
            WaveletStat::LfcMax => "lfc_max",
            WaveletStat::LfcMean => "lfc_mean",
            WaveletStat::HfcMin => "hfc_min",
            WaveletStat::HfcMax => "hfc_max",
            WaveletStat::HfcMean => "hfc_mean",
        }
    }

    pub fn of(self, s: &CoefStats) -> f64 {
        match self {
            WaveletStat::LfcMin => s.lfc_min,
            WaveletStat::LfcMax => s.lfc_max,
            WaveletStat::LfcMean => s.lfc_mean,
            WaveletStat::HfcMin => s.hfc_min,
            WaveletStat::HfcMax => s.hfc_max,
            WaveletStat::HfcMean => s.hfc_mean,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for WaveletStat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WaveletStat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        WaveletStat::ALL
            .into_iter()
            .find(|w| w.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown wavelet statistic {s:?}")))
    }
}

/// Six planes in [`WaveletStat::ALL`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveletFeatureSet {
    pub width: usize,
    pub height: usize,
    pub planes: Vec<BandPlane>,
}

impl WaveletFeatureSet {
    pub fn plane(&self, stat: WaveletStat) -> &BandPlane {
        &self.planes[stat.index()]
    }

    pub fn bands() -> Vec<Band> {
        WaveletStat::ALL
            .iter()
            .map(|s| Band::new(s.as_str(), Units::Coefficient))
            .collect()
    }
}

/// Per pixel: gather the 12-month signal, transform, summarize. Pixels with
/// any missing month are `NaN` in all six planes.
pub fn wavelet_feature_planes(
    ndvi: &TimeSeriesStack,
    filter: &WaveletFilter,
) -> Result<WaveletFeatureSet> {
    if ndvi.bands.len() != 1 {
        return Err(Error::NotSingleBand(ndvi.bands.len()));
    }
    if ndvi.months.len() != MONTHS {
        return Err(Error::DimensionMismatch(format!(
            "month count {} != {MONTHS}",
            ndvi.months.len()
        )));
    }
    let n = ndvi.pixel_count();
    let months: Vec<&[f32]> = ndvi.months.iter().map(|m| m[0].values.as_slice()).collect();
    let stats: Vec<[f32; 6]> = (0..n)
        .into_par_iter()
        .with_min_len(256)
        .map(|p| {
            let q: [f64; SIGNAL_LEN] = std::array::from_fn(|m| months[m][p] as f64);
            if q.iter().any(|v| !v.is_finite()) {
                return [f32::NAN; 6];
            }
            let s = coef_stats(&dwt1_unchecked(&q, filter));
            WaveletStat::ALL.map(|w| w.of(&s) as f32)
        })
        .collect();
    let planes = (0..6)
        .map(|i| BandPlane {
            width: ndvi.width,
            height: ndvi.height,
            values: stats.iter().map(|s| s[i]).collect(),
        })
        .collect();
    Ok(WaveletFeatureSet {
        width: ndvi.width,
        height: ndvi.height,
        planes,
    })
}
