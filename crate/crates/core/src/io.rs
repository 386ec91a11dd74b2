//! On-disk formats: the `RTSTACK1` raster container and the dataset CSV.
//!
//! An RTS file is
//!
//! ```text
//! magic       8 bytes   "RTSTACK1"
//! header_len  u32 LE
//! header      header_len bytes of UTF-8 JSON
//! body        f32 LE samples in [time][band][row][col] order
//! ```
//!
//! The JSON header carries `width`, `height`, `bands`, `time_axis` (`null`
//! for a static composite), `dtype` (always `"f32le"`), `nodata` (always
//! `"nan"`) and `georef`. Writing is a pure function of the inputs, so files
//! are byte-identical across runs.

use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{DatasetRow, DatasetTable};
use crate::raster::{
    is_valid_tile_id, Band, BandPlane, CompositeStack, GeoRef, Observation, ObservationSeries,
    TileRecord, TimeSeriesStack, MONTHS,
};

pub const MAGIC: &[u8; 8] = b"RTSTACK1";
const PREAMBLE: usize = 12;

#[derive(Serialize, Deserialize)]
struct HeaderGeoRef {
    center_lon: f64,
    center_lat: f64,
    pixel_size_m: f64,
    urban: bool,
}

#[derive(Serialize, Deserialize)]
struct Header {
    width: usize,
    height: usize,
    bands: Vec<Band>,
    time_axis: Option<Vec<String>>,
    dtype: String,
    nodata: String,
    georef: HeaderGeoRef,
}

/// Untyped content of an RTS file. `planes` is indexed `[t * bands + b]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RtsStack {
    pub bands: Vec<Band>,
    pub width: usize,
    pub height: usize,
    pub time_axis: Option<Vec<String>>,
    pub planes: Vec<BandPlane>,
    pub georef: GeoRef,
}

/// Borrowed stack accepted by [`write_stack`].
#[derive(Clone, Copy, Debug)]
pub enum StackRef<'a> {
    Monthly(&'a TimeSeriesStack),
    Composite(&'a CompositeStack),
}

impl<'a> From<&'a TimeSeriesStack> for StackRef<'a> {
    fn from(s: &'a TimeSeriesStack) -> Self {
        StackRef::Monthly(s)
    }
}

impl<'a> From<&'a CompositeStack> for StackRef<'a> {
    fn from(s: &'a CompositeStack) -> Self {
        StackRef::Composite(s)
    }
}

/// Typed content returned by [`read_stack`].
#[derive(Clone, Debug, PartialEq)]
pub enum Stack {
    Monthly(TimeSeriesStack),
    Composite(CompositeStack),
    /// A time axis that is not the twelve month-of-year slots, e.g. dated observations.
    Series(RtsStack),
}

/// Month slot labels written for a [`TimeSeriesStack`].
pub fn month_labels() -> Vec<String> {
    (1..=MONTHS).map(|m| m.to_string()).collect()
}

impl RtsStack {
    pub fn time_len(&self) -> usize {
        self.time_axis.as_ref().map_or(1, |t| t.len())
    }

    pub fn from_monthly(stack: &TimeSeriesStack, georef: &GeoRef) -> Self {
        RtsStack {
            bands: stack.bands.clone(),
            width: stack.width,
            height: stack.height,
            time_axis: Some(month_labels()),
            planes: stack.months.iter().flatten().cloned().collect(),
            georef: georef.clone(),
        }
    }

    pub fn from_composite(stack: &CompositeStack, georef: &GeoRef) -> Self {
        RtsStack {
            bands: stack.bands.clone(),
            width: stack.width,
            height: stack.height,
            time_axis: None,
            planes: stack.planes.clone(),
            georef: georef.clone(),
        }
    }

    pub fn into_typed(self) -> Result<Stack> {
        match &self.time_axis {
            None => Ok(Stack::Composite(CompositeStack::new(
                self.bands,
                self.planes,
            )?)),
            Some(axis) if *axis == month_labels() => {
                let nb = self.bands.len();
                let mut planes = self.planes.into_iter();
                let months = (0..MONTHS)
                    .map(|_| planes.by_ref().take(nb).collect())
                    .collect();
                Ok(Stack::Monthly(TimeSeriesStack::new(self.bands, months)?))
            }
            Some(_) => Ok(Stack::Series(self)),
        }
    }

    /// Interprets the time axis as `YYYY-MM-DD` acquisition dates. A pixel is
    /// valid in an observation when none of its band values is `NaN`.
    pub fn into_observations(self) -> Result<ObservationSeries> {
        let axis = self
            .time_axis
            .ok_or_else(|| Error::InvalidArgument("stack has no time axis".into()))?;
        let nb = self.bands.len();
        let mut planes = self.planes.into_iter();
        let mut observations = Vec::with_capacity(axis.len());
        for label in &axis {
            let date = NaiveDate::parse_from_str(label, "%Y-%m-%d").map_err(|e| {
                Error::InvalidArgument(format!("time label {label:?} is not a date: {e}"))
            })?;
            let obs_planes: Vec<BandPlane> = planes.by_ref().take(nb).collect();
            let n = self.width * self.height;
            let valid = (0..n)
                .map(|i| obs_planes.iter().all(|p| !p.values[i].is_nan()))
                .collect();
            observations.push(Observation {
                date,
                planes: obs_planes,
                valid,
            });
        }
        ObservationSeries::new(self.bands, observations)
    }
}

/// Serializes a stack to the RTS byte layout.
pub fn encode_rts(stack: &RtsStack) -> Result<Vec<u8>> {
    let expected = stack.time_len() * stack.bands.len();
    if stack.planes.len() != expected {
        return Err(Error::DimensionMismatch(format!(
            "{} planes for {} time slots x {} bands",
            stack.planes.len(),
            stack.time_len(),
            stack.bands.len()
        )));
    }
    if let Some(p) = stack.planes.iter().find(|p| {
        p.width != stack.width || p.height != stack.height || p.len() != p.width * p.height
    }) {
        return Err(Error::DimensionMismatch(format!(
            "plane {}x{} in a {}x{} stack",
            p.width, p.height, stack.width, stack.height
        )));
    }
    let header = Header {
        width: stack.width,
        height: stack.height,
        bands: stack.bands.clone(),
        time_axis: stack.time_axis.clone(),
        dtype: "f32le".into(),
        nodata: "nan".into(),
        georef: HeaderGeoRef {
            center_lon: stack.georef.center_lon,
            center_lat: stack.georef.center_lat,
            pixel_size_m: stack.georef.pixel_size_m,
            urban: stack.georef.urban,
        },
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::HeaderParse {
        offset: PREAMBLE as u64,
        message: e.to_string(),
    })?;
    let header_len = u32::try_from(json.len())
        .map_err(|_| Error::InvalidArgument("header exceeds 4 GiB".into()))?;
    let body_len = 4 * stack.planes.iter().map(BandPlane::len).sum::<usize>();
    let mut out = Vec::with_capacity(PREAMBLE + json.len() + body_len);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&header_len.to_le_bytes());
    out.extend_from_slice(&json);
    for plane in &stack.planes {
        for v in &plane.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

/// Parses RTS bytes. Errors name the byte offset where decoding failed.
pub fn decode_rts(bytes: &[u8]) -> Result<RtsStack> {
    if bytes.len() < MAGIC.len() || &bytes[..8] != MAGIC {
        let n = bytes.len().min(8);
        return Err(Error::BadMagic {
            offset: 0,
            found: String::from_utf8_lossy(&bytes[..n]).into_owned(),
        });
    }
    if bytes.len() < PREAMBLE {
        return Err(Error::HeaderParse {
            offset: 8,
            message: "file ends inside the header length field".into(),
        });
    }
    let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body_start = PREAMBLE + header_len;
    if bytes.len() < body_start {
        return Err(Error::HeaderParse {
            offset: bytes.len() as u64,
            message: format!("header declares {header_len} bytes, file ends early"),
        });
    }
    let header: Header =
        serde_json::from_slice(&bytes[PREAMBLE..body_start]).map_err(|e| Error::HeaderParse {
            offset: (PREAMBLE + e.column().saturating_sub(1)) as u64,
            message: e.to_string(),
        })?;
    let bad_header = |message: String| Error::HeaderParse {
        offset: PREAMBLE as u64,
        message,
    };
    if header.dtype != "f32le" {
        return Err(bad_header(format!("unsupported dtype {:?}", header.dtype)));
    }
    if header.nodata != "nan" {
        return Err(bad_header(format!(
            "unsupported nodata {:?}",
            header.nodata
        )));
    }
    if header.width == 0 || header.height == 0 || header.bands.is_empty() {
        return Err(bad_header("empty raster dimensions".into()));
    }
    if matches!(&header.time_axis, Some(t) if t.is_empty()) {
        return Err(bad_header("empty time axis".into()));
    }
    let t = header.time_axis.as_ref().map_or(1, Vec::len);
    let n = header.width * header.height;
    let expected = 4 * t * header.bands.len() * n;
    let found = bytes.len() - body_start;
    if found < expected {
        return Err(Error::TruncatedBody {
            offset: body_start as u64,
            expected: expected as u64,
            found: found as u64,
        });
    }
    if found > expected {
        return Err(Error::HeaderParse {
            offset: (body_start + expected) as u64,
            message: format!("{} trailing bytes after body", found - expected),
        });
    }
    let planes = bytes[body_start..]
        .chunks_exact(4 * n)
        .map(|chunk| BandPlane {
            width: header.width,
            height: header.height,
            values: chunk
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                .collect(),
        })
        .collect();
    Ok(RtsStack {
        georef: GeoRef {
            center_lon: header.georef.center_lon,
            center_lat: header.georef.center_lat,
            pixel_size_m: header.georef.pixel_size_m,
            width_px: header.width,
            height_px: header.height,
            urban: header.georef.urban,
        },
        bands: header.bands,
        width: header.width,
        height: header.height,
        time_axis: header.time_axis,
        planes,
    })
}

pub fn write_rts(path: &Path, stack: &RtsStack) -> Result<()> {
    let bytes = encode_rts(stack)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_rts(path: &Path) -> Result<RtsStack> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_rts(&bytes)
}

pub fn write_stack<'a>(path: &Path, stack: impl Into<StackRef<'a>>, georef: &GeoRef) -> Result<()> {
    let rts = match stack.into() {
        StackRef::Monthly(s) => RtsStack::from_monthly(s, georef),
        StackRef::Composite(s) => RtsStack::from_composite(s, georef),
    };
    write_rts(path, &rts)
}

pub fn read_stack(path: &Path) -> Result<(Stack, GeoRef)> {
    let rts = read_rts(path)?;
    let georef = rts.georef.clone();
    Ok((rts.into_typed()?, georef))
}

/// Renders a number with 17 significant digits so it parses back exactly.
fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_dataset(path: &Path, table: &DatasetTable) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_dataset_to(&mut out, table).map_err(|e| match e {
        Error::Csv(m) => Error::Csv(format!("{}: {m}", path.display())),
        other => other,
    })?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_dataset_to<W: Write>(out: W, table: &DatasetTable) -> Result<()> {
    if table.rows.is_empty() {
        return Err(Error::Empty("dataset table has no rows".into()));
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .quote_style(csv::QuoteStyle::Never)
        .from_writer(out);
    let csv_err = |e: csv::Error| Error::Csv(e.to_string());
    let mut header = vec!["tile_id".to_string(), "target".to_string()];
    header.extend(table.feature_names.iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    for row in &table.rows {
        if row.features.len() != table.feature_names.len() {
            return Err(Error::RaggedRow {
                line: 0,
                expected: table.feature_names.len() + 2,
                found: row.features.len() + 2,
            });
        }
        let mut rec = Vec::with_capacity(row.features.len() + 2);
        rec.push(row.tile_id.clone());
        rec.push(fmt_num(row.target));
        rec.extend(row.features.iter().map(|v| fmt_num(*v)));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))
}

pub fn read_dataset(path: &Path) -> Result<DatasetTable> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_dataset_from(bytes.as_slice())
}

pub fn read_dataset_from<R: std::io::Read>(input: R) -> Result<DatasetTable> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let header = r.headers().map_err(|e| Error::Csv(e.to_string()))?.clone();
    if header.len() < 2 || &header[0] != "tile_id" || &header[1] != "target" {
        return Err(Error::Csv(
            "header must start with \"tile_id,target\"".into(),
        ));
    }
    let feature_names: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
    let mut seen = HashSet::new();
    if let Some(dup) = feature_names.iter().find(|n| !seen.insert(n.as_str())) {
        return Err(Error::DuplicateFeature(dup.clone()));
    }
    let mut ids = HashSet::new();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(Error::RaggedRow {
                line,
                expected: header.len(),
                found: rec.len(),
            });
        }
        let tile_id = rec[0].to_string();
        if !is_valid_tile_id(&tile_id) {
            return Err(Error::Csv(format!(
                "line {line}: invalid tile_id {tile_id:?}"
            )));
        }
        if !ids.insert(tile_id.clone()) {
            return Err(Error::DuplicateTileId(tile_id));
        }
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Csv(format!("line {line}: {s:?}: {e}")))
        };
        let target = num(&rec[1])?;
        let features = rec.iter().skip(2).map(num).collect::<Result<Vec<_>>>()?;
        rows.push(DatasetRow {
            tile_id,
            target,
            features,
        });
    }
    if rows.is_empty() {
        return Err(Error::Empty("dataset csv has no rows".into()));
    }
    Ok(DatasetTable {
        feature_names,
        rows,
        variant: None,
    })
}

/// Paths of the files that hold one tile inside a tile directory.
pub struct TilePaths {
    pub composite: PathBuf,
    pub ndvi: PathBuf,
    pub landsat: PathBuf,
}

pub fn tile_paths(dir: &Path, tile_id: &str) -> TilePaths {
    TilePaths {
        composite: dir.join(format!("{tile_id}.composite.rts")),
        ndvi: dir.join(format!("{tile_id}.ndvi.rts")),
        landsat: dir.join(format!("{tile_id}.landsat.rts")),
    }
}

pub const TARGETS_FILE: &str = "targets.csv";

/// Writes tiles as RTS files plus a `targets.csv` listing `tile_id,target`,
/// sorted by tile id. Returns the paths written.
pub fn write_tiles(dir: &Path, tiles: &[TileRecord]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut order: Vec<&TileRecord> = tiles.iter().collect();
    order.sort_by(|a, b| a.tile_id.cmp(&b.tile_id));
    let mut written = Vec::new();
    let mut targets = String::from("tile_id,target\n");
    for tile in order {
        let p = tile_paths(dir, &tile.tile_id);
        write_stack(&p.composite, &tile.composite, &tile.georef)?;
        write_stack(&p.ndvi, &tile.ndvi_monthly, &tile.georef)?;
        written.push(p.composite);
        written.push(p.ndvi);
        if let Some(ls) = &tile.landsat_monthly {
            write_stack(&p.landsat, ls, &tile.georef)?;
            written.push(p.landsat);
        }
        targets.push_str(&format!("{},{}\n", tile.tile_id, fmt_num(tile.target)));
    }
    let tp = dir.join(TARGETS_FILE);
    fs::write(&tp, targets).map_err(|e| Error::io(&tp, e))?;
    written.push(tp);
    Ok(written)
}

/// Reads every tile listed in `targets.csv`, sorted by tile id.
pub fn read_tiles(dir: &Path) -> Result<Vec<TileRecord>> {
    let tp = dir.join(TARGETS_FILE);
    let text = fs::read_to_string(&tp).map_err(|e| Error::io(&tp, e))?;
    let mut lines = text.lines();
    if lines.next() != Some("tile_id,target") {
        return Err(Error::Csv(format!("{}: bad header", tp.display())));
    }
    let mut tiles = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
        let (id, target) = line.split_once(',').ok_or(Error::RaggedRow {
            line: i as u64 + 2,
            expected: 2,
            found: 1,
        })?;
        if !ids.insert(id.to_string()) {
            return Err(Error::DuplicateTileId(id.to_string()));
        }
        let target: f64 = target
            .parse()
            .map_err(|e| Error::Csv(format!("line {}: {e}", i + 2)))?;
        tiles.push(read_tile(dir, id, target)?);
    }
    tiles.sort_by(|a, b| a.tile_id.cmp(&b.tile_id));
    Ok(tiles)
}

pub fn read_tile(dir: &Path, tile_id: &str, target: f64) -> Result<TileRecord> {
    let p = tile_paths(dir, tile_id);
    let (composite, georef) = match read_stack(&p.composite)? {
        (Stack::Composite(c), g) => (c, g),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "{} is not a composite",
                p.composite.display()
            )))
        }
    };
    let ndvi_monthly = match read_stack(&p.ndvi)?.0 {
        Stack::Monthly(s) => s,
        _ => {
            return Err(Error::InvalidArgument(format!(
                "{} is not a monthly stack",
                p.ndvi.display()
            )))
        }
    };
    let landsat_monthly = if p.landsat.exists() {
        match read_stack(&p.landsat)?.0 {
            Stack::Monthly(s) => Some(s),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "{} is not a monthly stack",
                    p.landsat.display()
                )))
            }
        }
    } else {
        None
    };
    Ok(TileRecord {
        tile_id: tile_id.to_string(),
        georef,
        composite,
        ndvi_monthly,
        landsat_monthly,
        target,
    })
}
