//! Grid and geometry types shared by every stage of the pipeline.
//!
//! A pixel is treated as a signal over time: one [`BandPlane`] holds the
//! value of a band at a single time for every pixel of a tile. Missing data is
//! stored in-band as `NaN`, except in [`ObservationSeries`] where cloud flags
//! are per-observation metadata and live in an explicit mask.

use std::collections::HashSet;
use std::fmt;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of month slots in a [`TimeSeriesStack`].
pub const MONTHS: usize = 12;

/// Landsat composite band order used throughout the crate.
pub const LANDSAT_BANDS: [&str; 7] = ["red", "green", "blue", "nir", "swir1", "swir2", "thermal"];

/// Name of the nighttime-light band.
pub const NL_BAND: &str = "nl";

/// Name of the NDVI band.
pub const NDVI_BAND: &str = "ndvi";

/// Physical units of a band; decides which value range is legal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    /// Normalized index in `[-1, 1]`.
    Ndvi,
    /// Surface reflectance in `[0, 1]`.
    Reflectance,
    /// Nighttime radiance, `>= 0`.
    Radiance,
    /// Non-negative band without a fixed upper bound (thermal).
    Generic,
    /// Derived coefficient planes, any finite value.
    Coefficient,
}

impl Units {
    pub fn as_str(self) -> &'static str {
        match self {
            Units::Ndvi => "ndvi",
            Units::Reflectance => "reflectance",
            Units::Radiance => "radiance",
            Units::Generic => "generic",
            Units::Coefficient => "coefficient",
        }
    }

    /// Inclusive legal range for finite values.
    pub fn range(self) -> (f32, f32) {
        match self {
            Units::Ndvi => (-1.0, 1.0),
            Units::Reflectance => (0.0, 1.0),
            Units::Radiance | Units::Generic => (0.0, f32::INFINITY),
            Units::Coefficient => (f32::NEG_INFINITY, f32::INFINITY),
        }
    }

    fn range_label(self) -> &'static str {
        match self {
            Units::Ndvi => "[-1,1]",
            Units::Reflectance => "[0,1]",
            Units::Radiance | Units::Generic => "[0,inf)",
            Units::Coefficient => "(-inf,inf)",
        }
    }
}

impl fmt::Display for Units {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Band {
    pub name: String,
    pub units: Units,
}

impl Band {
    pub fn new(name: impl Into<String>, units: Units) -> Self {
        Band {
            name: name.into(),
            units,
        }
    }

    /// Units conventionally attached to a band name.
    pub fn infer(name: &str) -> Self {
        let units = match name {
            NDVI_BAND => Units::Ndvi,
            NL_BAND => Units::Radiance,
            "thermal" => Units::Generic,
            n if LANDSAT_BANDS.contains(&n) => Units::Reflectance,
            _ => Units::Coefficient,
        };
        Band::new(name, units)
    }

    /// The seven Landsat composite bands in canonical order.
    pub fn landsat() -> Vec<Band> {
        LANDSAT_BANDS.iter().map(|n| Band::infer(n)).collect()
    }
}

/// Location and pixel grid of a tile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoRef {
    pub center_lon: f64,
    pub center_lat: f64,
    pub pixel_size_m: f64,
    pub width_px: usize,
    pub height_px: usize,
    pub urban: bool,
}

impl Default for GeoRef {
    fn default() -> Self {
        GeoRef {
            center_lon: 0.0,
            center_lat: 0.0,
            pixel_size_m: 30.0,
            width_px: 224,
            height_px: 224,
            urban: false,
        }
    }
}

impl GeoRef {
    /// East-west ground extent in meters.
    pub fn span_x_m(&self) -> f64 {
        self.width_px as f64 * self.pixel_size_m
    }

    pub fn span_y_m(&self) -> f64 {
        self.height_px as f64 * self.pixel_size_m
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.pixel_size_m > 0.0 && self.pixel_size_m.is_finite()) {
            out.push(format!("pixel_size_m {} not > 0", self.pixel_size_m));
        }
        if self.width_px == 0 || self.height_px == 0 {
            out.push(format!(
                "tile size {}x{} has an empty axis",
                self.width_px, self.height_px
            ));
        }
        if !self.center_lat.is_finite() || self.center_lat.abs() > 90.0 {
            out.push(format!("center_lat {} out of [-90,90]", self.center_lat));
        }
        if !self.center_lon.is_finite() || self.center_lon.abs() > 180.0 {
            out.push(format!("center_lon {} out of [-180,180]", self.center_lon));
        }
        out
    }
}

/// One band at one time, row-major `f32`, `NaN` for missing.
#[derive(Clone, Debug, PartialEq)]
pub struct BandPlane {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f32>,
}

impl BandPlane {
    pub fn new(width: usize, height: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {width}x{height} plane",
                values.len()
            )));
        }
        Ok(BandPlane {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        BandPlane {
            width,
            height,
            values: vec![value; width * height],
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.values[row * self.width + col]
    }

    pub fn same_shape(&self, other: &BandPlane) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn has_nan(&self) -> bool {
        self.values.iter().any(|v| v.is_nan())
    }

    /// First pixel whose finite value violates `units`, as `(row, col)`.
    pub fn first_out_of_range(&self, units: Units) -> Option<(usize, usize)> {
        let (lo, hi) = units.range();
        self.values
            .iter()
            .position(|v| v.is_infinite() || (v.is_finite() && (*v < lo || *v > hi)))
            .map(|i| (i / self.width.max(1), i % self.width.max(1)))
    }
}

/// A single acquisition: one plane per band plus its cloud-free mask.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub date: NaiveDate,
    pub planes: Vec<BandPlane>,
    pub valid: Vec<bool>,
}

/// Irregular acquisitions of a tile, sorted by date.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationSeries {
    pub bands: Vec<Band>,
    pub width: usize,
    pub height: usize,
    observations: Vec<Observation>,
}

impl ObservationSeries {
    /// Builds a series. Observations are put in canonical date order, so the
    /// result does not depend on the order they were supplied in.
    pub fn new(bands: Vec<Band>, mut observations: Vec<Observation>) -> Result<Self> {
        let first = observations
            .first()
            .ok_or_else(|| Error::Empty("observation series has no observations".into()))?;
        let (width, height) = first
            .planes
            .first()
            .map(|p| (p.width, p.height))
            .ok_or_else(|| Error::Empty("observation has no band planes".into()))?;
        for obs in &observations {
            if obs.planes.len() != bands.len() {
                return Err(Error::DimensionMismatch(format!(
                    "observation {} has {} planes for {} bands",
                    obs.date,
                    obs.planes.len(),
                    bands.len()
                )));
            }
            if obs
                .planes
                .iter()
                .any(|p| p.width != width || p.height != height)
                || obs.valid.len() != width * height
            {
                return Err(Error::DimensionMismatch(format!(
                    "observation {} does not match {width}x{height}",
                    obs.date
                )));
            }
        }
        observations.sort_by_key(|o| o.date);
        if let Some(w) = observations.windows(2).find(|w| w[0].date == w[1].date) {
            return Err(Error::InvalidArgument(format!(
                "duplicate observation date {}",
                w[0].date
            )));
        }
        Ok(ObservationSeries {
            bands,
            width,
            height,
            observations,
        })
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn band_index(&self, name: &str) -> Result<usize> {
        self.bands
            .iter()
            .position(|b| b.name == name)
            .ok_or_else(|| Error::MissingBand(name.to_string()))
    }

    /// Number of calendar months touched, first to last inclusive.
    pub fn span_months(&self) -> i32 {
        let key = |d: &NaiveDate| d.year() * 12 + d.month0() as i32;
        match (self.observations.first(), self.observations.last()) {
            (Some(a), Some(b)) => key(&b.date) - key(&a.date) + 1,
            _ => 0,
        }
    }
}

/// Twelve month-of-year slots, `months[month][band]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesStack {
    pub bands: Vec<Band>,
    pub width: usize,
    pub height: usize,
    pub months: Vec<Vec<BandPlane>>,
}

impl TimeSeriesStack {
    pub fn new(bands: Vec<Band>, months: Vec<Vec<BandPlane>>) -> Result<Self> {
        if months.len() != MONTHS {
            return Err(Error::DimensionMismatch(format!(
                "month count {} != {MONTHS}",
                months.len()
            )));
        }
        let (width, height) = months[0]
            .first()
            .map(|p| (p.width, p.height))
            .ok_or_else(|| Error::Empty("time series stack has no bands".into()))?;
        for (m, planes) in months.iter().enumerate() {
            if planes.len() != bands.len() {
                return Err(Error::DimensionMismatch(format!(
                    "month {} has {} planes for {} bands",
                    m + 1,
                    planes.len(),
                    bands.len()
                )));
            }
            if planes
                .iter()
                .any(|p| p.width != width || p.height != height)
            {
                return Err(Error::DimensionMismatch(format!(
                    "month {} plane size differs from {width}x{height}",
                    m + 1
                )));
            }
        }
        Ok(TimeSeriesStack {
            bands,
            width,
            height,
            months,
        })
    }

    /// Single-band stack from twelve planes.
    pub fn single(band: Band, planes: Vec<BandPlane>) -> Result<Self> {
        TimeSeriesStack::new(vec![band], planes.into_iter().map(|p| vec![p]).collect())
    }

    pub fn band_index(&self, name: &str) -> Result<usize> {
        self.bands
            .iter()
            .position(|b| b.name == name)
            .ok_or_else(|| Error::MissingBand(name.to_string()))
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// The monthly signal of one pixel of one band.
    pub fn pixel_series(&self, band: usize, pixel: usize) -> [f64; MONTHS] {
        std::array::from_fn(|m| self.months[m][band].values[pixel] as f64)
    }
}

/// Static per-pixel composite, one plane per band.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositeStack {
    pub bands: Vec<Band>,
    pub width: usize,
    pub height: usize,
    pub planes: Vec<BandPlane>,
}

impl CompositeStack {
    pub fn new(bands: Vec<Band>, planes: Vec<BandPlane>) -> Result<Self> {
        if bands.len() != planes.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} planes for {} bands",
                planes.len(),
                bands.len()
            )));
        }
        let (width, height) = planes
            .first()
            .map(|p| (p.width, p.height))
            .ok_or_else(|| Error::Empty("composite has no bands".into()))?;
        if planes
            .iter()
            .any(|p| p.width != width || p.height != height)
        {
            return Err(Error::DimensionMismatch(
                "composite planes differ in size".into(),
            ));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = bands.iter().find(|b| !seen.insert(b.name.as_str())) {
            return Err(Error::InvalidArgument(format!(
                "duplicate band name {:?}",
                dup.name
            )));
        }
        Ok(CompositeStack {
            bands,
            width,
            height,
            planes,
        })
    }

    pub fn band(&self, name: &str) -> Option<&BandPlane> {
        self.bands
            .iter()
            .position(|b| b.name == name)
            .map(|i| &self.planes[i])
    }
}

/// Everything known about one tile.
#[derive(Clone, Debug, PartialEq)]
pub struct TileRecord {
    pub tile_id: String,
    pub georef: GeoRef,
    pub composite: CompositeStack,
    /// Single-band monthly NDVI.
    pub ndvi_monthly: TimeSeriesStack,
    /// Monthly Landsat bands, only present when synthesized.
    pub landsat_monthly: Option<TimeSeriesStack>,
    /// Mean nighttime radiance or a wealth-like index.
    pub target: f64,
}

/// Tile ids are restricted to `[A-Za-z0-9_-]` so they are safe in CSV and file names.
pub fn is_valid_tile_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

fn plane_violations(out: &mut Vec<String>, band: &Band, plane: &BandPlane, w: usize, h: usize) {
    if plane.width != w || plane.height != h {
        out.push(format!(
            "{} plane is {}x{}, expected {w}x{h}",
            band.name, plane.width, plane.height
        ));
        return;
    }
    if plane.values.len() != w * h {
        out.push(format!(
            "{} plane holds {} values, expected {}",
            band.name,
            plane.values.len(),
            w * h
        ));
        return;
    }
    if let Some((r, c)) = plane.first_out_of_range(band.units) {
        out.push(format!(
            "{} out of {} at ({r},{c})",
            band.name,
            band.units.range_label()
        ));
    }
}

fn unique_band_violations(out: &mut Vec<String>, what: &str, bands: &[Band]) {
    let mut seen = HashSet::new();
    for b in bands {
        if !seen.insert(b.name.as_str()) {
            out.push(format!("{what}: duplicate band name {:?}", b.name));
        }
    }
}

fn stack_violations(
    out: &mut Vec<String>,
    what: &str,
    stack: &TimeSeriesStack,
    w: usize,
    h: usize,
) {
    if stack.months.len() != MONTHS {
        out.push(format!("month count {} != {MONTHS}", stack.months.len()));
    }
    unique_band_violations(out, what, &stack.bands);
    for (m, planes) in stack.months.iter().enumerate() {
        if planes.len() != stack.bands.len() {
            out.push(format!(
                "{what}: month {} has {} planes for {} bands",
                m + 1,
                planes.len(),
                stack.bands.len()
            ));
            continue;
        }
        for (band, plane) in stack.bands.iter().zip(planes) {
            plane_violations(out, band, plane, w, h);
        }
    }
}

/// Checks every structural invariant of a tile. Returns an empty list when
/// the tile is well-formed; violations are reported as data.
pub fn validate_tile(tile: &TileRecord) -> Vec<String> {
    let mut out = Vec::new();
    if !is_valid_tile_id(&tile.tile_id) {
        out.push(format!("tile_id {:?} not in [A-Za-z0-9_-]+", tile.tile_id));
    }
    out.extend(tile.georef.violations());
    if !tile.target.is_finite() {
        out.push(format!("target {} not finite", tile.target));
    }
    let (w, h) = (tile.georef.width_px, tile.georef.height_px);

    let comp = &tile.composite;
    if comp.bands.len() != comp.planes.len() {
        out.push(format!(
            "composite has {} planes for {} bands",
            comp.planes.len(),
            comp.bands.len()
        ));
    }
    unique_band_violations(&mut out, "composite", &comp.bands);
    for (band, plane) in comp.bands.iter().zip(&comp.planes) {
        plane_violations(&mut out, band, plane, w, h);
    }

    let ndvi = &tile.ndvi_monthly;
    if ndvi.bands.len() != 1 || ndvi.bands[0].units != Units::Ndvi {
        out.push(format!(
            "ndvi_monthly must be a single ndvi band, found {:?}",
            ndvi.bands
                .iter()
                .map(|b| b.name.as_str())
                .collect::<Vec<_>>()
        ));
    }
    stack_violations(&mut out, "ndvi_monthly", ndvi, w, h);

    if let Some(ls) = &tile.landsat_monthly {
        stack_violations(&mut out, "landsat_monthly", ls, w, h);
    }
    out
}
