//! Input variants and tile-level feature vectors.
//!
//! A variant picks which planes of a tile enter the model, always in the
//! canonical order: Landsat composite bands, nighttime light, then monthly
//! NDVI or wavelet planes. Each plane is reduced to its spatial mean and
//! population standard deviation.

use std::borrow::Cow;
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::{validate_tile, BandPlane, TileRecord, LANDSAT_BANDS, MONTHS, NL_BAND};
use crate::wavelet::{wavelet_feature_planes, WaveletFilter, WaveletStat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VariantId {
    /// Seven annual-composite Landsat bands.
    Base,
    /// Base plus the twelve monthly NDVI planes.
    BaseNdvi12,
    /// Seven Landsat bands for each of twelve months.
    FullMonthly84,
    /// The six wavelet summary planes alone.
    Wstats6,
    /// Base plus the six wavelet summary planes.
    BaseWstats6,
    /// Base plus a single wavelet summary plane.
    BasePlusOne(WaveletStat),
}

impl VariantId {
    /// Every variant compared by a default experiment run.
    pub fn table_rows() -> Vec<VariantId> {
        let mut v = vec![
            VariantId::Base,
            VariantId::BaseNdvi12,
            VariantId::FullMonthly84,
            VariantId::Wstats6,
            VariantId::BaseWstats6,
        ];
        v.extend(WaveletStat::ALL.map(VariantId::BasePlusOne));
        v
    }

    /// Number of planes, not counting nighttime light.
    pub fn plane_count(self) -> usize {
        match self {
            VariantId::Base => 7,
            VariantId::BaseNdvi12 => 19,
            VariantId::FullMonthly84 => 84,
            VariantId::Wstats6 => 6,
            VariantId::BaseWstats6 => 13,
            VariantId::BasePlusOne(_) => 8,
        }
    }

    fn has_base(self) -> bool {
        !matches!(self, VariantId::FullMonthly84 | VariantId::Wstats6)
    }
}

impl fmt::Display for VariantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VariantId::Base => f.write_str("BASE"),
            VariantId::BaseNdvi12 => f.write_str("BASE_NDVI12"),
            VariantId::FullMonthly84 => f.write_str("FULL_MONTHLY84"),
            VariantId::Wstats6 => f.write_str("WSTATS6"),
            VariantId::BaseWstats6 => f.write_str("BASE_WSTATS6"),
            VariantId::BasePlusOne(s) => write!(f, "BASE+{s}"),
        }
    }
}

impl FromStr for VariantId {
    type Err = Error;

    /// Accepts the display form, plus `BASE_PLUS_ONE(<stat>)` and `BASE_PLUS_<STAT>`.
    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownVariant(s.to_string());
        let t = s.trim().to_ascii_uppercase();
        match t.as_str() {
            "BASE" => return Ok(VariantId::Base),
            "BASE_NDVI12" => return Ok(VariantId::BaseNdvi12),
            "FULL_MONTHLY84" => return Ok(VariantId::FullMonthly84),
            "WSTATS6" => return Ok(VariantId::Wstats6),
            "BASE_WSTATS6" => return Ok(VariantId::BaseWstats6),
            _ => {}
        }
        let stat = if let Some(rest) = t.strip_prefix("BASE+") {
            rest
        } else if let Some(rest) = t
            .strip_prefix("BASE_PLUS_ONE(")
            .and_then(|r| r.strip_suffix(')'))
        {
            rest
        } else if let Some(rest) = t.strip_prefix("BASE_PLUS_") {
            rest
        } else {
            return Err(unknown());
        };
        stat.to_ascii_lowercase()
            .parse()
            .map(VariantId::BasePlusOne)
            .map_err(|_| unknown())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct VariantSpec {
    pub id: VariantId,
    pub include_nl: bool,
}

impl VariantSpec {
    pub fn new(id: VariantId, include_nl: bool) -> Self {
        VariantSpec { id, include_nl }
    }

    pub fn plane_count(&self) -> usize {
        self.id.plane_count() + usize::from(self.include_nl)
    }

    pub fn feature_len(&self) -> usize {
        2 * self.plane_count()
    }
}

impl fmt::Display for VariantSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.include_nl {
            write!(f, "{}+NL", self.id)
        } else {
            write!(f, "{}", self.id)
        }
    }
}

/// A plane selected by a variant.
#[derive(Clone, Debug)]
pub struct NamedPlane<'a> {
    pub name: String,
    pub plane: Cow<'a, BandPlane>,
}

/// Concatenates the planes a variant requires, in canonical order.
pub fn assemble_variant<'a>(
    tile: &'a TileRecord,
    spec: &VariantSpec,
    filter: &WaveletFilter,
) -> Result<Vec<NamedPlane<'a>>> {
    let mut out = Vec::with_capacity(spec.plane_count());
    let composite_band = |name: &str| {
        tile.composite
            .band(name)
            .ok_or_else(|| Error::MissingStack(format!("composite band {name}")))
    };
    if spec.id.has_base() {
        for name in LANDSAT_BANDS {
            out.push(NamedPlane {
                name: name.to_string(),
                plane: Cow::Borrowed(composite_band(name)?),
            });
        }
    }
    if spec.id == VariantId::FullMonthly84 {
        let ls = tile
            .landsat_monthly
            .as_ref()
            .ok_or_else(|| Error::MissingStack("landsat_monthly".into()))?;
        let idx = LANDSAT_BANDS
            .iter()
            .map(|b| {
                ls.band_index(b)
                    .map_err(|_| Error::MissingStack(format!("landsat_monthly band {b}")))
            })
            .collect::<Result<Vec<_>>>()?;
        for m in 0..MONTHS {
            for (name, &b) in LANDSAT_BANDS.iter().zip(&idx) {
                out.push(NamedPlane {
                    name: format!("{name}_m{:02}", m + 1),
                    plane: Cow::Borrowed(&ls.months[m][b]),
                });
            }
        }
    }
    if spec.include_nl {
        out.push(NamedPlane {
            name: NL_BAND.to_string(),
            plane: Cow::Borrowed(composite_band(NL_BAND)?),
        });
    }
    match spec.id {
        VariantId::BaseNdvi12 => {
            for m in 0..MONTHS {
                let plane = tile
                    .ndvi_monthly
                    .months
                    .get(m)
                    .and_then(|p| p.first())
                    .ok_or_else(|| Error::MissingStack(format!("ndvi_monthly month {}", m + 1)))?;
                out.push(NamedPlane {
                    name: format!("ndvi_m{:02}", m + 1),
                    plane: Cow::Borrowed(plane),
                });
            }
        }
        VariantId::Wstats6 | VariantId::BaseWstats6 | VariantId::BasePlusOne(_) => {
            let fs = wavelet_feature_planes(&tile.ndvi_monthly, filter)?;
            let stats: Vec<WaveletStat> = match spec.id {
                VariantId::BasePlusOne(s) => vec![s],
                _ => WaveletStat::ALL.to_vec(),
            };
            for s in stats {
                out.push(NamedPlane {
                    name: s.as_str().to_string(),
                    plane: Cow::Owned(fs.plane(s).clone()),
                });
            }
        }
        _ => {}
    }
    debug_assert_eq!(out.len(), spec.plane_count());
    Ok(out)
}

/// Spatial mean and population standard deviation of one plane.
pub fn plane_mean_std(plane: &BandPlane) -> Option<(f64, f64)> {
    let n = plane.values.len();
    if n == 0 || plane.has_nan() {
        return None;
    }
    let mean = plane.values.iter().map(|&v| v as f64).sum::<f64>() / n as f64;
    let var = plane
        .values
        .iter()
        .map(|&v| {
            let d = v as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / n as f64;
    Some((mean, var.sqrt()))
}

/// `[mean_0, std_0, mean_1, std_1, ...]` in plane order.
pub fn tile_feature_vector(planes: &[NamedPlane<'_>]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * planes.len());
    for p in planes {
        let (m, s) = plane_mean_std(&p.plane)
            .ok_or_else(|| Error::NonFinite(format!("plane {} contains NaN", p.name)))?;
        out.push(m);
        out.push(s);
    }
    Ok(out)
}

pub fn feature_names(planes: &[NamedPlane<'_>]) -> Vec<String> {
    planes
        .iter()
        .flat_map(|p| [format!("{}_mean", p.name), format!("{}_std", p.name)])
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetRow {
    pub tile_id: String,
    pub target: f64,
    pub features: Vec<f64>,
}

/// Tile-level regression table, rows sorted by tile id.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetTable {
    pub feature_names: Vec<String>,
    pub rows: Vec<DatasetRow>,
    pub variant: Option<VariantSpec>,
}

impl DatasetTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.target).collect()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.rows.iter().map(|r| r.tile_id.as_str()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DroppedTile {
    pub tile_id: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BuiltDataset {
    pub table: DatasetTable,
    pub dropped: Vec<DroppedTile>,
}

/// Reduces every tile to a feature row. Tiles that fail validation or
/// assembly, or whose planes still hold missing pixels, are dropped and
/// reported rather than failing the whole build.
pub fn build_dataset(
    tiles: &[TileRecord],
    spec: &VariantSpec,
    filter: &WaveletFilter,
) -> Result<BuiltDataset> {
    if tiles.is_empty() {
        return Err(Error::Empty("no tiles to build a dataset from".into()));
    }
    let mut ids = HashSet::new();
    if let Some(dup) = tiles.iter().find(|t| !ids.insert(t.tile_id.as_str())) {
        return Err(Error::DuplicateTileId(dup.tile_id.clone()));
    }
    let results: Vec<std::result::Result<(DatasetRow, Vec<String>), DroppedTile>> = tiles
        .par_iter()
        .map(|tile| {
            let drop = |reason: String| DroppedTile {
                tile_id: tile.tile_id.clone(),
                reason,
            };
            let violations = validate_tile(tile);
            if !violations.is_empty() {
                return Err(drop(violations.join("; ")));
            }
            let planes = assemble_variant(tile, spec, filter).map_err(|e| drop(e.to_string()))?;
            let features = tile_feature_vector(&planes).map_err(|e| drop(e.to_string()))?;
            Ok((
                DatasetRow {
                    tile_id: tile.tile_id.clone(),
                    target: tile.target,
                    features,
                },
                feature_names(&planes),
            ))
        })
        .collect();
    let mut rows = Vec::new();
    let mut dropped = Vec::new();
    let mut names: Option<Vec<String>> = None;
    for r in results {
        match r {
            Ok((row, n)) => {
                names.get_or_insert(n);
                rows.push(row);
            }
            Err(d) => dropped.push(d),
        }
    }
    if rows.is_empty() {
        return Err(Error::AllDropped(tiles.len()));
    }
    rows.sort_by(|a, b| a.tile_id.cmp(&b.tile_id));
    dropped.sort_by(|a, b| a.tile_id.cmp(&b.tile_id));
    for d in &dropped {
        log::debug!("dropped tile {}: {}", d.tile_id, d.reason);
    }
    Ok(BuiltDataset {
        table: DatasetTable {
            feature_names: names.unwrap_or_default(),
            rows,
            variant: Some(*spec),
        },
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane(values: Vec<f32>) -> NamedPlane<'static> {
        NamedPlane {
            name: "p".into(),
            plane: Cow::Owned(BandPlane::new(values.len(), 1, values).unwrap()),
        }
    }

    #[test]
    fn mean_std_of_small_planes() {
        assert_eq!(
            tile_feature_vector(&[plane(vec![3.0; 9])]).unwrap(),
            vec![3.0, 0.0]
        );
        assert_eq!(
            tile_feature_vector(&[plane(vec![0.0, 0.0, 2.0, 2.0])]).unwrap(),
            vec![1.0, 1.0]
        );
        assert!(matches!(
            tile_feature_vector(&[plane(vec![0.0, f32::NAN])]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn variant_names_round_trip() {
        for id in VariantId::table_rows() {
            assert_eq!(id.to_string().parse::<VariantId>().unwrap(), id);
        }
        assert_eq!(
            "BASE_PLUS_ONE(hfc_max)".parse::<VariantId>().unwrap(),
            VariantId::BasePlusOne(WaveletStat::HfcMax)
        );
        assert_eq!(
            "BASE_PLUS_LFC_MIN".parse::<VariantId>().unwrap(),
            VariantId::BasePlusOne(WaveletStat::LfcMin)
        );
        assert_eq!(
            " base+hfc_mean".parse::<VariantId>().unwrap(),
            VariantId::BasePlusOne(WaveletStat::HfcMean)
        );
        assert_eq!(
            "base_wstats6".parse::<VariantId>().unwrap(),
            VariantId::BaseWstats6
        );
        assert!("BASE+foo".parse::<VariantId>().is_err());
        assert!("NOPE".parse::<VariantId>().is_err());
    }

    #[test]
    fn band_counts() {
        let counts: Vec<_> = VariantId::table_rows()
            .into_iter()
            .map(|v| (v.plane_count(), VariantSpec::new(v, true).plane_count()))
            .collect();
        assert_eq!(
            &counts[..5],
            &[(7, 8), (19, 20), (84, 85), (6, 7), (13, 14)]
        );
        assert!(counts[5..].iter().all(|&c| c == (8, 9)));
    }
}
