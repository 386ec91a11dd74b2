use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, ensure, Context, Result};
use serde_json::json;
use wavestack_core::eval::{
    default_lambda_grid, fit_and_score, r2_score, run_cross_validation, run_experiment,
    shuffle_targets, split_dataset, ExperimentConfig, FitOutcome, DEFAULT_RATIOS,
};
use wavestack_core::features::{build_dataset, VariantId, VariantSpec};
use wavestack_core::index::ndvi;
use wavestack_core::io::{
    read_rts, read_tiles, write_dataset, write_rts, write_stack, write_tiles, RtsStack, Stack,
};
use wavestack_core::synth::{gen_dataset, jitter_location, SynthConfig};
use wavestack_core::temporal::{composite, monthly_mean, monthly_median_multiyear};
use wavestack_core::wavelet::{
    wavelet_feature_planes, WaveletFeatureSet, WaveletFilter, WaveletStat,
};
use wavestack_core::{Band, BandPlane, CompositeStack, TileRecord, TimeSeriesStack, Units};

use crate::manifest::{beside, RunInfo, DIR_MANIFEST};
use crate::{
    Command, CompositeArgs, DatasetBuildArgs, DatasetCommand, EvalCommand, ExperimentArgs,
    MonthlyArgs, MonthlyMethod, NdviArgs, R2Args, SynthArgs, WaveletArgs,
};

pub fn name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Synth(_) => "synth",
        Command::Ndvi(_) => "ndvi",
        Command::Monthly(_) => "monthly",
        Command::Composite(_) => "composite",
        Command::WaveletFeatures(_) => "wavelet-features",
        Command::Dataset(DatasetCommand::Build(_)) => "dataset build",
        Command::Eval(EvalCommand::R2(_)) => "eval r2",
        Command::Eval(EvalCommand::Experiment(_)) => "eval experiment",
    }
}

pub fn run(cmd: Command, info: &RunInfo) -> Result<()> {
    match cmd {
        Command::Synth(a) => synth(a, info),
        Command::Ndvi(a) => ndvi_cmd(a, info),
        Command::Monthly(a) => monthly(a, info),
        Command::Composite(a) => composite_cmd(a, info),
        Command::WaveletFeatures(a) => wavelet(a, info),
        Command::Dataset(DatasetCommand::Build(a)) => dataset_build(a, info),
        Command::Eval(EvalCommand::R2(a)) => eval_r2(a, info),
        Command::Eval(EvalCommand::Experiment(a)) => experiment(a, info),
    }
}

fn synth(a: SynthArgs, info: &RunInfo) -> Result<()> {
    let mut config = SynthConfig {
        seed: a.seed,
        tile_px: a.tile_px,
        monthly_landsat: a.monthly_landsat,
        ..SynthConfig::default()
    };
    if let Some(p) = a.cloud_prob {
        config.cloud_dropout_prob = p;
    }
    let mut tiles = gen_dataset(&config, a.n)?;
    if a.jitter {
        for (i, t) in tiles.iter_mut().enumerate() {
            t.georef = jitter_location(
                &t.georef,
                a.seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            );
        }
    }
    let written = write_tiles(&a.out, &tiles)?;
    info.write(
        &a.out.join(DIR_MANIFEST),
        Some(a.seed),
        &[],
        &written,
        json!({ "tiles": tiles.len(), "tile_px": a.tile_px, "jitter": a.jitter }),
    )?;
    println!(
        "wrote {} tiles ({} files) to {}",
        tiles.len(),
        written.len(),
        a.out.display()
    );
    Ok(())
}

fn plane_ndvi(nir: &BandPlane, red: &BandPlane) -> Result<BandPlane> {
    Ok(ndvi(nir, red)?)
}

fn band_pos(bands: &[Band], name: &str) -> Result<usize> {
    bands
        .iter()
        .position(|b| b.name == name)
        .ok_or_else(|| anyhow!("input has no {name:?} band"))
}

fn ndvi_cmd(a: NdviArgs, info: &RunInfo) -> Result<()> {
    let raw = read_rts(&a.input)?;
    let georef = raw.georef.clone();
    let (nir, red) = (band_pos(&raw.bands, "nir")?, band_pos(&raw.bands, "red")?);
    let band = Band::new("ndvi", Units::Ndvi);
    match raw.into_typed()? {
        Stack::Composite(c) => {
            let out = CompositeStack::new(
                vec![band],
                vec![plane_ndvi(&c.planes[nir], &c.planes[red])?],
            )?;
            write_stack(&a.out, &out, &georef)?;
        }
        Stack::Monthly(m) => {
            let planes = m
                .months
                .iter()
                .map(|p| plane_ndvi(&p[nir], &p[red]))
                .collect::<Result<Vec<_>>>()?;
            write_stack(&a.out, &TimeSeriesStack::single(band, planes)?, &georef)?;
        }
        Stack::Series(s) => {
            let nb = s.bands.len();
            let planes = s
                .planes
                .chunks(nb)
                .map(|obs| plane_ndvi(&obs[nir], &obs[red]))
                .collect::<Result<Vec<_>>>()?;
            let out = RtsStack {
                bands: vec![band],
                planes,
                ..s
            };
            write_rts(&a.out, &out)?;
        }
    }
    info.write(
        &beside(&a.out),
        None,
        &[a.input],
        std::slice::from_ref(&a.out),
        serde_json::Value::Null,
    )
}

fn monthly(a: MonthlyArgs, info: &RunInfo) -> Result<()> {
    let raw = read_rts(&a.input)?;
    let georef = raw.georef.clone();
    let obs = raw.into_observations()?;
    let stack = match a.method {
        MonthlyMethod::Mean => monthly_mean(&obs, &a.band)?,
        MonthlyMethod::MedianMultiyear => monthly_median_multiyear(&obs, &a.band)?,
    };
    write_stack(&a.out, &stack, &georef)?;
    info.write(
        &beside(&a.out),
        None,
        &[a.input],
        std::slice::from_ref(&a.out),
        json!({ "band": a.band, "method": format!("{:?}", a.method) }),
    )
}

fn composite_cmd(a: CompositeArgs, info: &RunInfo) -> Result<()> {
    let raw = read_rts(&a.input)?;
    let georef = raw.georef.clone();
    let obs = raw.into_observations()?;
    let out = composite(&obs, a.method.into())?;
    write_stack(&a.out, &out, &georef)?;
    info.write(
        &beside(&a.out),
        None,
        &[a.input],
        std::slice::from_ref(&a.out),
        json!({ "method": format!("{:?}", a.method) }),
    )
}

fn pixel_csv(path: &Path, fs_: &WaveletFeatureSet) -> Result<()> {
    let mut text = String::from("row,col");
    for s in WaveletStat::ALL {
        write!(text, ",{s}")?;
    }
    text.push('\n');
    for r in 0..fs_.height {
        for c in 0..fs_.width {
            write!(text, "{r},{c}")?;
            for p in &fs_.planes {
                write!(text, ",{}", p.values[r * fs_.width + c])?;
            }
            text.push('\n');
        }
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn wavelet(a: WaveletArgs, info: &RunInfo) -> Result<()> {
    let raw = read_rts(&a.input)?;
    let georef = raw.georef.clone();
    let stack = match raw.into_typed()? {
        Stack::Monthly(m) => m,
        _ => bail!("{} is not a twelve-month stack", a.input.display()),
    };
    let filter = WaveletFilter::new(a.filter);
    let fs_ = wavelet_feature_planes(&stack, &filter)?;
    let out = CompositeStack::new(WaveletFeatureSet::bands(), fs_.planes.clone())?;
    write_stack(&a.out, &out, &georef)?;
    let mut outputs = vec![a.out.clone()];
    if let Some(csv) = &a.csv {
        pixel_csv(csv, &fs_)?;
        outputs.push(csv.clone());
    }
    info.write(
        &beside(&a.out),
        None,
        &[a.input],
        &outputs,
        json!({ "filter": a.filter.as_str() }),
    )
}

fn tile_inputs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|x| x == "rts")
                || p.file_name().is_some_and(|n| n == "targets.csv")
        })
        .collect();
    files.sort();
    Ok(files)
}

fn dataset_build(a: DatasetBuildArgs, info: &RunInfo) -> Result<()> {
    let tiles = read_tiles(&a.tiles)?;
    let spec = VariantSpec::new(a.variant, a.nl);
    let built = build_dataset(&tiles, &spec, &WaveletFilter::new(a.filter))?;
    for d in &built.dropped {
        log::warn!("dropped {}: {}", d.tile_id, d.reason);
    }
    ensure!(
        !built.table.is_empty(),
        "all {} tiles were dropped",
        tiles.len()
    );
    write_dataset(&a.out, &built.table)?;
    let dropped: Vec<_> = built
        .dropped
        .iter()
        .map(|d| json!({ "tile_id": d.tile_id, "reason": d.reason }))
        .collect();
    info.write(
        &beside(&a.out),
        None,
        &tile_inputs(&a.tiles)?,
        std::slice::from_ref(&a.out),
        json!({ "variant": spec.to_string(), "filter": a.filter.as_str(), "rows": built.table.len(), "dropped": dropped }),
    )?;
    println!(
        "{}: {} rows x {} features, {} dropped",
        spec,
        built.table.len(),
        built.table.feature_names.len(),
        built.dropped.len()
    );
    Ok(())
}

struct Column {
    ids: Option<Vec<String>>,
    values: Vec<f64>,
}

fn read_column(path: &Path, requested: Option<&str>, preferred: &str) -> Result<Column> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header = r.headers()?.clone();
    ensure!(!header.is_empty(), "{}: empty header", path.display());
    let col = match requested {
        Some(name) => header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| anyhow!("{}: no column {name:?}", path.display()))?,
        None => header
            .iter()
            .position(|h| h == preferred)
            .unwrap_or(header.len() - 1),
    };
    let id_col = header.iter().position(|h| h == "tile_id");
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let cell = rec
            .get(col)
            .ok_or_else(|| anyhow!("{}: row {} is missing column {col}", path.display(), i + 2))?;
        values.push(
            cell.trim()
                .parse::<f64>()
                .with_context(|| format!("{}: row {}: {cell:?}", path.display(), i + 2))?,
        );
        if let Some(c) = id_col {
            ids.push(rec.get(c).unwrap_or_default().to_string());
        }
    }
    Ok(Column {
        ids: id_col.map(|_| ids),
        values,
    })
}

/// Pairs prediction and truth values, by `tile_id` when both files have
/// one and by row order otherwise.
fn align(pred: Column, truth: Column) -> Result<(Vec<f64>, Vec<f64>)> {
    ensure!(
        pred.values.len() == truth.values.len(),
        "{} predictions for {} truth rows",
        pred.values.len(),
        truth.values.len()
    );
    match (pred.ids, truth.ids) {
        (Some(pid), Some(tid)) => {
            let lookup: HashMap<&str, f64> = pid
                .iter()
                .map(String::as_str)
                .zip(pred.values.iter().copied())
                .collect();
            ensure!(
                lookup.len() == pid.len(),
                "duplicate tile_id in predictions"
            );
            let y_hat = tid
                .iter()
                .map(|id| {
                    lookup
                        .get(id.as_str())
                        .copied()
                        .ok_or_else(|| anyhow!("no prediction for {id}"))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((truth.values, y_hat))
        }
        _ => Ok((truth.values, pred.values)),
    }
}

fn eval_r2(a: R2Args, info: &RunInfo) -> Result<()> {
    let pred = read_column(&a.pred, a.pred_col.as_deref(), "prediction")?;
    let truth = read_column(&a.truth, a.truth_col.as_deref(), "target")?;
    let (y, y_hat) = align(pred, truth)?;
    let report = r2_score(&y, &y_hat)?;
    println!("r2 = {:?}", report.r2);
    println!("rss = {:?}", report.rss);
    println!("tss = {:?}", report.tss);
    println!("n = {}", report.n);
    if let Some(out) = &a.out {
        let body = json!({ "r2": report.r2, "rss": report.rss, "tss": report.tss, "n": report.n });
        fs::write(out, format!("{}\n", serde_json::to_string_pretty(&body)?))
            .with_context(|| format!("writing {}", out.display()))?;
        info.write(
            &beside(out),
            None,
            &[a.pred, a.truth],
            std::slice::from_ref(out),
            serde_json::Value::Null,
        )?;
    }
    Ok(())
}

fn parse_variants(names: &[String], nl: bool) -> Result<Vec<VariantSpec>> {
    let mut ids = Vec::new();
    for n in names {
        if n.eq_ignore_ascii_case("all") {
            ids.extend(VariantId::table_rows());
        } else {
            ids.push(n.parse::<VariantId>()?);
        }
    }
    ensure!(!ids.is_empty(), "no variants given");
    let mut seen = std::collections::HashSet::new();
    ids.retain(|id| seen.insert(*id));
    Ok(ids.into_iter().map(|id| VariantSpec::new(id, nl)).collect())
}

struct ResultRow {
    variant: String,
    fold: String,
    outcome: FitOutcome,
    dropped: usize,
}

fn render_tables(rows: &[ResultRow]) -> (String, String, String) {
    let mut csv = String::from("variant,fold,lambda,val_r2,test_r2,n_train,n_val,n_test,dropped\n");
    let mut lambdas = String::from("variant,fold,lambda,val_r2\n");
    let header = [
        "variant", "fold", "lambda", "val_r2", "test_r2", "n_train", "n_val", "n_test", "dropped",
    ];
    let cells: Vec<[String; 9]> = rows
        .iter()
        .map(|r| {
            let o = &r.outcome;
            [
                r.variant.clone(),
                r.fold.clone(),
                format!("{}", o.lambda),
                format!("{:.4}", o.val_r2),
                format!("{:.4}", o.test.r2),
                o.n_train.to_string(),
                o.n_val.to_string(),
                o.test.n.to_string(),
                r.dropped.to_string(),
            ]
        })
        .collect();
    for r in rows {
        let o = &r.outcome;
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            r.variant,
            r.fold,
            o.lambda,
            o.val_r2,
            o.test.r2,
            o.n_train,
            o.n_val,
            o.test.n,
            r.dropped
        )
        .unwrap();
        for s in &o.lambda_scores {
            writeln!(
                lambdas,
                "{},{},{},{}",
                r.variant, r.fold, s.lambda, s.val_r2
            )
            .unwrap();
        }
    }
    let widths: Vec<usize> = (0..9)
        .map(|i| {
            cells
                .iter()
                .map(|c| c[i].len())
                .chain([header[i].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut text = String::new();
    let line = |text: &mut String, cols: &[&str]| {
        for (i, c) in cols.iter().enumerate() {
            if i == 0 {
                write!(text, "{c:<w$}", w = widths[i]).unwrap();
            } else {
                write!(text, "  {c:>w$}", w = widths[i]).unwrap();
            }
        }
        text.push('\n');
    };
    line(&mut text, &header);
    for c in &cells {
        line(&mut text, &c.iter().map(String::as_str).collect::<Vec<_>>());
    }
    (csv, text, lambdas)
}

fn experiment(a: ExperimentArgs, info: &RunInfo) -> Result<()> {
    let variants = parse_variants(&a.variants, a.nl)?;
    let (tiles, inputs): (Vec<TileRecord>, Vec<PathBuf>) = match &a.tiles {
        Some(dir) => (read_tiles(dir)?, tile_inputs(dir)?),
        None => {
            let config = SynthConfig {
                seed: a.seed,
                tile_px: a.tile_px,
                ..SynthConfig::default()
            };
            (gen_dataset(&config, a.n)?, Vec::new())
        }
    };
    let mut config = ExperimentConfig::new(WaveletFilter::new(a.filter), a.seed);
    config.lambdas = a.lambdas.clone().unwrap_or_else(default_lambda_grid);

    let mut rows = Vec::new();
    match a.folds {
        Some(k) => {
            for cv in run_cross_validation(&tiles, &variants, k, &config)? {
                let mean = cv.mean_test_r2();
                for (i, f) in cv.folds.into_iter().enumerate() {
                    rows.push(ResultRow {
                        variant: cv.variant.to_string(),
                        fold: (i + 1).to_string(),
                        outcome: f,
                        dropped: 0,
                    });
                }
                log::info!("{}: mean test r2 over {k} folds {mean:.4}", cv.variant);
            }
        }
        None => {
            for r in run_experiment(&tiles, &variants, &config)? {
                rows.push(ResultRow {
                    variant: r.variant.to_string(),
                    fold: "-".into(),
                    outcome: r.outcome,
                    dropped: r.dropped,
                });
            }
        }
    }
    if a.shuffled_control {
        let ids: Vec<&str> = tiles.iter().map(|t| t.tile_id.as_str()).collect();
        let split = split_dataset(&ids, DEFAULT_RATIOS, a.seed)?;
        for spec in &variants {
            let built = build_dataset(&tiles, spec, &config.filter)?;
            let shuffled = shuffle_targets(&built.table, a.seed ^ 0x5EED);
            rows.push(ResultRow {
                variant: format!("{spec} shuffled"),
                fold: "-".into(),
                outcome: fit_and_score(&shuffled, &split, &config.lambdas)?,
                dropped: built.dropped.len(),
            });
        }
    }

    let (csv, text, lambdas) = render_tables(&rows);
    print!("{text}");
    if let Some(k) = a.folds {
        let mut means: Vec<(String, f64)> = Vec::new();
        for r in rows.iter().filter(|r| r.fold != "-") {
            match means.iter_mut().find(|(v, _)| *v == r.variant) {
                Some((_, s)) => *s += r.outcome.test.r2 / k as f64,
                None => means.push((r.variant.clone(), r.outcome.test.r2 / k as f64)),
            }
        }
        for (v, m) in means {
            println!("{v}: mean test_r2 {m:.4}");
        }
    }
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let files = [
            ("results.csv", csv),
            ("results.txt", text),
            ("lambda_scores.csv", lambdas),
        ];
        let mut outputs = Vec::new();
        for (name, body) in files {
            let p = dir.join(name);
            fs::write(&p, body).with_context(|| format!("writing {}", p.display()))?;
            outputs.push(p);
        }
        info.write(
            &dir.join(DIR_MANIFEST),
            Some(a.seed),
            &inputs,
            &outputs,
            json!({
                "tiles": tiles.len(),
                "filter": a.filter.as_str(),
                "lambdas": config.lambdas,
                "folds": a.folds,
            }),
        )?;
    }
    Ok(())
}
