//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::ThreadPoolBuilder;
use wavestack_core::eval::{
    kfold, r2_score, run_experiment, split_dataset, ExperimentConfig, DEFAULT_RATIOS,
};
use wavestack_core::features::{build_dataset, VariantId, VariantSpec};
use wavestack_core::io::{encode_rts, write_dataset_to, RtsStack};
use wavestack_core::synth::{gen_dataset, jitter_location, SynthConfig};
use wavestack_core::temporal::{median_composite, monthly_mean, monthly_median_multiyear};
use wavestack_core::wavelet::{
    build_filter, dwt1_periodic, idwt1_periodic, wavelet_feature_planes, DwtLevel1, WaveletStat,
};
use wavestack_core::{Band, BandPlane, GeoRef, TimeSeriesStack, Units};

use common::*;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn pool(threads: usize) -> rayon::ThreadPool {
    ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

const FILTERS: [&str; 3] = ["haar", "db4", "dmey"];

fn tolerance(filter: &str) -> f64 {
    if filter == "haar" {
        1e-12
    } else {
        1e-6
    }
}

fn coeffs(c: &DwtLevel1) -> [f64; 12] {
    std::array::from_fn(|i| if i < 6 { c.approx[i] } else { c.detail[i - 6] })
}

fn wavelet_correctness() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for name in FILTERS {
        let f = build_filter(name).unwrap();
        let tol = tolerance(name);
        let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
        let (mut rt, mut energy, mut oracle, mut shift_ok) = (0.0f64, 0.0f64, 0.0f64, true);
        for _ in 0..1000 {
            let q = random_signal(&mut rng);
            let c = dwt1_periodic(&q, &f).unwrap();
            let back = idwt1_periodic(&c, &f);
            rt = rt.max(
                q.iter()
                    .zip(&back)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max),
            );
            let eq: f64 = q.iter().map(|v| v * v).sum();
            let ec: f64 = coeffs(&c).iter().map(|v| v * v).sum();
            energy = energy.max((eq - ec).abs() / eq);
            let a = conv_downsample(&q, &f.lp);
            let d = conv_downsample(&q, &f.hp);
            for n in 0..6 {
                oracle = oracle
                    .max((a[n] - c.approx[n]).abs())
                    .max((d[n] - c.detail[n]).abs());
            }
            let shifted: [f64; 12] = std::array::from_fn(|i| q[(i + 10) % 12]);
            let cs = dwt1_periodic(&shifted, &f).unwrap();
            for n in 0..6 {
                let m = (n + 5) % 6;
                shift_ok &= cs.approx[n].to_bits() == c.approx[m].to_bits()
                    && cs.detail[n].to_bits() == c.detail[m].to_bits();
            }
        }
        let w: [[f64; 12]; 12] = {
            let mut w = [[0.0; 12]; 12];
            for j in 0..12 {
                let mut e = [0.0; 12];
                e[j] = 1.0;
                let c = coeffs(&dwt1_periodic(&e, &f).unwrap());
                for (i, v) in c.iter().enumerate() {
                    w[i][j] = *v;
                }
            }
            w
        };
        let ortho = gram_deviation(&w);
        let ok = rt <= tol && energy <= tol && ortho <= tol && oracle <= 1e-12 && shift_ok;
        pass &= ok;
        parts.push(format!(
            "{name}: roundtrip {rt:.1e} energy {energy:.1e} ortho {ortho:.1e} oracle {oracle:.1e} shift {} (tol {tol:.0e})",
            if shift_ok { "exact" } else { "INEXACT" }
        ));
    }
    let t = secs(start.elapsed());
    pass &= t < 1.0;
    outcome(pass, format!("{}; {t:.3} s < 1 s", parts.join("; ")))
}

fn filter_identities() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in FILTERS {
        let f = build_filter(name).unwrap();
        let sum_lp: f64 = f.lp.iter().sum();
        let sum_hp: f64 = f.hp.iter().sum();
        let len = f.lp.len();
        let qmf = (0..len)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                (f.hp[k] - sign * f.lp[len - 1 - k]).abs()
            })
            .fold(0.0, f64::max);
        let d_lp = (sum_lp - std::f64::consts::SQRT_2).abs();
        let len_ok = match name {
            "haar" => len == 2,
            "db4" => len == 8,
            _ => len == 62,
        };
        let ok = len_ok && d_lp <= 1e-6 && sum_hp.abs() <= 1e-6 && qmf <= 1e-6;
        pass &= ok;
        parts.push(format!(
            "{name}: len {len} |sum lp - sqrt2| {d_lp:.1e} |sum hp| {:.1e} qmf {qmf:.1e}",
            sum_hp.abs()
        ));
    }
    outcome(pass, parts.join("; "))
}

fn aggregation_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (w, h) = (100, 100);

    let year = random_series(&mut rng, w, h, 2, 12, 4);
    let mm = monthly_mean(&year, "b1").unwrap();
    let mut mean_rel = 0.0f64;
    for m in 0..12 {
        for p in 0..w * h {
            let want = oracle_month_mean(&year, 1, p, m as u32);
            let got = mm.months[m][0].values[p] as f64;
            mean_rel = mean_rel.max((got - want).abs() / want.abs());
        }
    }

    let comp = median_composite(&year).unwrap();
    let mut comp_mismatch = 0usize;
    for b in 0..2 {
        for p in 0..w * h {
            if comp.planes[b].values[p].to_bits() != oracle_composite_median(&year, b, p).to_bits()
            {
                comp_mismatch += 1;
            }
        }
    }

    let multi = random_series(&mut rng, w, h, 1, 36, 3);
    let mmed = monthly_median_multiyear(&multi, "b0").unwrap();
    let mut multi_mismatch = 0usize;
    for m in 0..12 {
        for p in 0..w * h {
            if mmed.months[m][0].values[p].to_bits()
                != oracle_month_median(&multi, 0, p, m as u32).to_bits()
            {
                multi_mismatch += 1;
            }
        }
    }
    let t = secs(start.elapsed());
    outcome(
        mean_rel <= 1e-7 && comp_mismatch == 0 && multi_mismatch == 0 && t < 10.0,
        format!(
            "{} pixel cases; monthly_mean max rel err {mean_rel:.1e} (tol 1e-7); median_composite mismatches {comp_mismatch}; \
             monthly_median_multiyear mismatches {multi_mismatch}; {t:.2} s < 10 s",
            w * h
        ),
    )
}

fn is_exact_cover(all: &[String], parts: &[&Vec<String>]) -> bool {
    let mut seen = std::collections::HashSet::new();
    let mut count = 0;
    for p in parts {
        for id in p.iter() {
            count += 1;
            if !seen.insert(id.clone()) {
                return false;
            }
        }
    }
    count == all.len() && all.iter().all(|id| seen.contains(id))
}

fn metric_oracles() -> Outcome {
    let hand = r2_score(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
    let hand_ok = hand.rss == 1.0 && hand.tss == 2.0 && hand.r2 == 0.5;

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut affine = 0.0f64;
    for _ in 0..1000 {
        let y: Vec<f64> = (0..50).map(|_| rng.random_range(-1.0..1.0)).collect();
        let yh: Vec<f64> = y.iter().map(|v| v + rng.random_range(-0.5..0.5)).collect();
        let base = r2_score(&y, &yh).unwrap().r2;
        let c = rng.random_range(-10.0..10.0);
        let s = rng.random_range(0.1..10.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let shifted = r2_score(
            &y.iter().map(|v| v + c).collect::<Vec<_>>(),
            &yh.iter().map(|v| v + c).collect::<Vec<_>>(),
        )
        .unwrap()
        .r2;
        let scaled = r2_score(
            &y.iter().map(|v| v * s).collect::<Vec<_>>(),
            &yh.iter().map(|v| v * s).collect::<Vec<_>>(),
        )
        .unwrap()
        .r2;
        affine = affine
            .max((shifted - base).abs())
            .max((scaled - base).abs());
    }

    let ids10: Vec<String> = (0..10).map(|i| format!("t{i}")).collect();
    let split = split_dataset(&ids10, DEFAULT_RATIOS, 11).unwrap();
    let sizes = (split.train.len(), split.val.len(), split.test.len());
    let split_cover = is_exact_cover(&ids10, &[&split.train, &split.val, &split.test]);

    let ids: Vec<String> = (0..103).map(|i| format!("t{i:03}")).collect();
    let folds = kfold(&ids, 5, 11).unwrap();
    let fold_cover = folds.len() == 5 && is_exact_cover(&ids, &folds.iter().collect::<Vec<_>>());

    outcome(
        hand_ok && affine <= 1e-12 && sizes == (6, 2, 2) && split_cover && fold_cover,
        format!(
            "hand case rss {} tss {} r2 {}; affine max dev {affine:.1e} (tol 1e-12); split sizes {sizes:?} cover {split_cover}; \
             5-fold cover {fold_cover}",
            hand.rss, hand.tss, hand.r2
        ),
    )
}

fn ordering_experiment() -> Outcome {
    let start = Instant::now();
    let config = SynthConfig {
        seed: 42,
        tile_px: 32,
        ..SynthConfig::default()
    };
    let tiles = gen_dataset(&config, 2000).unwrap();
    let variants = [
        VariantSpec::new(VariantId::Base, false),
        VariantSpec::new(VariantId::BaseWstats6, false),
        VariantSpec::new(VariantId::BasePlusOne(WaveletStat::HfcMax), false),
    ];
    let exp = ExperimentConfig::new(build_filter("dmey").unwrap(), 42);
    let r = run_experiment(&tiles, &variants, &exp).unwrap();
    let (base, all6, hfc_max) = (
        r[0].outcome.test.r2,
        r[1].outcome.test.r2,
        r[2].outcome.test.r2,
    );
    let t = secs(start.elapsed());
    outcome(
        all6 - base >= 0.03 && hfc_max - base >= 0.01 && t < 300.0,
        format!(
            "dmey, 2000 tiles of 32 px; BASE {base:.4}, BASE_WSTATS6 {all6:.4} (delta {:+.4} >= 0.03), \
             BASE+hfc_max {hfc_max:.4} (delta {:+.4} >= 0.01); {t:.1} s < 300 s",
            all6 - base,
            hfc_max - base
        ),
    )
}

fn jitter_bounds() -> Outcome {
    let mut worst = [0.0f64; 2];
    for (slot, urban) in [(0, true), (1, false)] {
        for i in 0..10_000u64 {
            let georef = GeoRef {
                center_lat: -60.0 + 120.0 * (i as f64 / 10_000.0),
                center_lon: -179.99 + 0.036 * i as f64,
                urban,
                ..GeoRef::default()
            };
            let moved = jitter_location(&georef, i);
            let d = haversine_m(
                georef.center_lat,
                georef.center_lon,
                moved.center_lat,
                moved.center_lon,
            );
            worst[slot] = worst[slot].max(d);
        }
    }
    outcome(
        worst[0] <= 2000.0 && worst[1] <= 5000.0,
        format!(
            "10000 draws each; max urban {:.2} m <= 2000 m, max rural {:.2} m <= 5000 m",
            worst[0], worst[1]
        ),
    )
}

/// Runs synth -> tiles -> dataset -> experiment and returns every output
/// as bytes.
fn pipeline_bytes() -> Vec<u8> {
    let config = SynthConfig {
        seed: 5,
        tile_px: 16,
        ..SynthConfig::default()
    };
    let tiles = gen_dataset(&config, 120).unwrap();
    let mut out = Vec::new();
    for t in &tiles {
        out.extend(encode_rts(&RtsStack::from_composite(&t.composite, &t.georef)).unwrap());
        out.extend(encode_rts(&RtsStack::from_monthly(&t.ndvi_monthly, &t.georef)).unwrap());
    }
    let filter = build_filter("dmey").unwrap();
    let spec = VariantSpec::new(VariantId::BaseWstats6, true);
    let built = build_dataset(&tiles, &spec, &filter).unwrap();
    write_dataset_to(&mut out, &built.table).unwrap();
    let variants = [
        VariantSpec::new(VariantId::Base, false),
        VariantSpec::new(VariantId::BaseWstats6, false),
    ];
    let results = run_experiment(&tiles, &variants, &ExperimentConfig::new(filter, 5)).unwrap();
    out.extend(format!("{results:?}").into_bytes());
    out
}

fn determinism() -> Outcome {
    let one = pool(1).install(pipeline_bytes);
    let many = pool(4).install(pipeline_bytes);
    let again = pool(3).install(pipeline_bytes);
    outcome(
        one == many && one == again,
        format!(
            "synth -> features -> dataset -> experiment; {} bytes; 1 vs 4 workers identical {}, 1 vs 3 identical {}",
            one.len(),
            one == many,
            one == again
        ),
    )
}

fn ndvi_stack_224(seed: u64) -> TimeSeriesStack {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planes = (0..12)
        .map(|_| BandPlane {
            width: 224,
            height: 224,
            values: (0..224 * 224)
                .map(|_| rng.random_range(-1.0f32..1.0))
                .collect(),
        })
        .collect();
    TimeSeriesStack::single(Band::new("ndvi", Units::Ndvi), planes).unwrap()
}

fn timed_features(stack: &TimeSeriesStack, threads: usize) -> f64 {
    let filter = build_filter("dmey").unwrap();
    pool(threads).install(|| {
        let _ = wavelet_feature_planes(stack, &filter).unwrap();
        let runs: Vec<f64> = (0..3)
            .map(|_| {
                let s = Instant::now();
                let _ = wavelet_feature_planes(stack, &filter).unwrap();
                secs(s.elapsed())
            })
            .collect();
        runs.into_iter().fold(f64::INFINITY, f64::min)
    })
}

fn throughput() -> Outcome {
    let stack = ndvi_stack_224(8);
    let t1 = timed_features(&stack, 1);
    let t8 = timed_features(&stack, 8);
    let speedup = t1 / t8;
    let cpus = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    outcome(
        t1 <= 1.0 && speedup >= 5.0,
        format!(
            "224x224x12 dmey single-threaded {t1:.3} s (limit 1 s, {}); speedup at 8 workers {speedup:.2}x \
             (need >= 5x, {}); {cpus} CPU(s) available",
            if t1 <= 1.0 { "ok" } else { "over" },
            if speedup >= 5.0 { "ok" } else { "short" }
        ),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 wavelet correctness", wavelet_correctness),
        ("2 filter identities", filter_identities),
        ("3 aggregation oracles", aggregation_oracles),
        ("4 metric oracles", metric_oracles),
        ("5 ordering experiment", ordering_experiment),
        ("6 jitter bounds", jitter_bounds),
        ("7 determinism", determinism),
        ("8 throughput", throughput),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.pass {
            failed += 1;
        }
        println!(
            "[{}] criterion {name}: {}",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
