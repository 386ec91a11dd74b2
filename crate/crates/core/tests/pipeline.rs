mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::ThreadPoolBuilder;
use wavestack_core::features::{
    assemble_variant, build_dataset, plane_mean_std, VariantId, VariantSpec,
};
use wavestack_core::io::write_dataset_to;
use wavestack_core::synth::{gen_dataset, gen_tile, SynthConfig};
use wavestack_core::wavelet::{
    build_filter, coef_stats, dwt1_periodic, wavelet_feature_planes, WaveletStat,
};
use wavestack_core::{Band, BandPlane, TimeSeriesStack, Units};

use common::*;

fn config(seed: u64, px: usize) -> SynthConfig {
    SynthConfig {
        seed,
        tile_px: px,
        ..SynthConfig::default()
    }
}

#[test]
fn ten_tiles_make_ten_rows_of_fourteen() {
    let tiles = gen_dataset(&config(1, 16), 10).unwrap();
    let built = build_dataset(
        &tiles,
        &VariantSpec::new(VariantId::Base, false),
        &build_filter("dmey").unwrap(),
    )
    .unwrap();
    assert_eq!(built.table.len(), 10);
    assert!(built.table.rows.iter().all(|r| r.features.len() == 14));
    assert_eq!(built.table.feature_names.len(), 14);
    assert_eq!(built.table.feature_names[0], "red_mean");
    assert_eq!(built.table.feature_names[1], "red_std");
    assert!(built.dropped.is_empty());
}

#[test]
fn unrecoverable_tile_is_dropped_and_reported() {
    let mut tiles = gen_dataset(&config(2, 8), 10).unwrap();
    for m in 1..12 {
        tiles[4].ndvi_monthly.months[m][0].values[0] = f32::NAN;
    }
    let spec = VariantSpec::new(VariantId::BaseWstats6, false);
    let built = build_dataset(&tiles, &spec, &build_filter("haar").unwrap()).unwrap();
    assert_eq!(built.table.len(), 9);
    assert_eq!(built.dropped.len(), 1);
    assert_eq!(built.dropped[0].tile_id, tiles[4].tile_id);
}

#[test]
fn dataset_bytes_are_repeatable() {
    let cfg = SynthConfig {
        monthly_landsat: true,
        ..config(3, 12)
    };
    let spec = VariantSpec::new(VariantId::FullMonthly84, true);
    let filter = build_filter("db4").unwrap();
    let render = || {
        let tiles = gen_dataset(&cfg, 12).unwrap();
        let mut out = Vec::new();
        write_dataset_to(
            &mut out,
            &build_dataset(&tiles, &spec, &filter).unwrap().table,
        )
        .unwrap();
        out
    };
    let a = render();
    assert_eq!(a, render());
    let header = String::from_utf8(a)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert_eq!(header.split(',').count(), 2 + 2 * 85);
}

#[test]
fn every_variant_has_twice_its_plane_count() {
    let cfg = SynthConfig {
        monthly_landsat: true,
        ..config(4, 6)
    };
    let tile = gen_tile(&cfg, 0);
    let filter = build_filter("dmey").unwrap();
    for id in VariantId::table_rows() {
        for nl in [false, true] {
            let spec = VariantSpec::new(id, nl);
            let planes = assemble_variant(&tile, &spec, &filter).unwrap();
            assert_eq!(planes.len(), spec.plane_count(), "{spec}");
            let built = build_dataset(std::slice::from_ref(&tile), &spec, &filter).unwrap();
            assert_eq!(
                built.table.rows[0].features.len(),
                2 * spec.plane_count(),
                "{spec}"
            );
        }
    }
    let w6 =
        assemble_variant(&tile, &VariantSpec::new(VariantId::Wstats6, false), &filter).unwrap();
    let names: Vec<&str> = w6.iter().map(|p| p.name.as_str()).collect();
    assert_eq!(
        names,
        ["lfc_min", "lfc_max", "lfc_mean", "hfc_min", "hfc_max", "hfc_mean"]
    );
}

#[test]
fn seasonless_noise_free_tiles_have_no_detail() {
    let mut cfg = config(5, 16);
    for c in &mut cfg.palette {
        c.amplitude = 0.0;
        c.noise_sigma = 0.0;
    }
    let tiles = gen_dataset(&cfg, 8).unwrap();
    for name in ["haar", "db4", "dmey"] {
        let f = build_filter(name).unwrap();
        let mut worst = 0.0f32;
        for t in &tiles {
            let fs = wavelet_feature_planes(&t.ndvi_monthly, &f).unwrap();
            for s in [
                WaveletStat::HfcMin,
                WaveletStat::HfcMax,
                WaveletStat::HfcMean,
            ] {
                worst = fs.plane(s).values.iter().fold(worst, |a, v| a.max(v.abs()));
            }
        }
        assert!(worst <= 1e-6, "{name}: {worst}");
    }
}

#[test]
fn single_pixel_matches_manual_composition() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let q = random_signal(&mut rng);
    let planes = (0..12)
        .map(|m| BandPlane::filled(1, 1, q[m] as f32))
        .collect();
    let stack = TimeSeriesStack::single(Band::new("ndvi", Units::Ndvi), planes).unwrap();
    for name in ["haar", "db4", "dmey"] {
        let f = build_filter(name).unwrap();
        let fs = wavelet_feature_planes(&stack, &f).unwrap();
        let q32: [f64; 12] = std::array::from_fn(|m| q[m] as f32 as f64);
        let s = coef_stats(&dwt1_periodic(&q32, &f).unwrap());
        for stat in WaveletStat::ALL {
            assert_eq!(
                fs.plane(stat).values[0],
                stat.of(&s) as f32,
                "{name} {stat}"
            );
        }
    }
}

#[test]
fn feature_planes_ignore_worker_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let planes = (0..12)
        .map(|_| BandPlane {
            width: 224,
            height: 224,
            values: (0..224 * 224)
                .map(|_| rng.random_range(-1.0f32..1.0))
                .collect(),
        })
        .collect();
    let stack = TimeSeriesStack::single(Band::new("ndvi", Units::Ndvi), planes).unwrap();
    let f = build_filter("dmey").unwrap();
    let run = |n| {
        ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
            .install(|| wavelet_feature_planes(&stack, &f).unwrap())
    };
    let a = run(1);
    let b = run(4);
    for (x, y) in a.planes.iter().zip(&b.planes) {
        assert!(x
            .values
            .iter()
            .zip(&y.values)
            .all(|(u, v)| u.to_bits() == v.to_bits()));
    }
}

proptest! {
    #[test]
    fn plane_summary_matches_loop_oracle(values in prop::collection::vec(-100.0f32..100.0, 1..400)) {
        let plane = BandPlane::new(values.len(), 1, values.clone()).unwrap();
        let (mean, std) = plane_mean_std(&plane).unwrap();
        let mut s = 0.0f64;
        for v in &values {
            s += *v as f64;
        }
        let m = s / values.len() as f64;
        let mut ss = 0.0f64;
        for v in &values {
            ss += (*v as f64 - m) * (*v as f64 - m);
        }
        let sd = (ss / values.len() as f64).sqrt();
        prop_assert!((mean - m).abs() <= 1e-9 * m.abs().max(1.0));
        prop_assert!((std - sd).abs() <= 1e-9 * sd.max(1.0));
    }
}
