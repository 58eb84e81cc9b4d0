use contrastive_crop::metrics::{csv_string, read_csv};
use contrastive_crop::simulator::random_scenes;
use contrastive_crop::{
    compare_samplers, contrastive_crop, localize, place_in_box, synth_heatmap, Arm, BoxStore,
    CropConfig, Draws, Error, Heatmap32, Rect, Rect32, RngStream, RunConfig, SceneSpec, StatsRow,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[test]
fn heatmap_to_crops() {
    let scene = SceneSpec::new(Rect::new(0.5, 0.25, 0.75, 0.75).unwrap(), 8, 8).with_noise(0.1);
    let mut rng = RngStream::new(3, 0);
    let m = synth_heatmap(&mut rng, &scene, 1.0).unwrap();
    let mut store = BoxStore::new();
    let b = store.refresh("img-0", &m, 0.1);
    assert_eq!(b, scene.object_box);
    let cfg = CropConfig::default();
    for _ in 0..10_000 {
        let c: Rect = contrastive_crop(&mut rng, &cfg, &store.get("img-0")).unwrap();
        assert!(c.intersection_area(&b) > 0.0);
        assert!(Rect::unit().contains_rect(&c));
    }
}

#[test]
fn f32_and_f64_agree_on_the_same_stream() {
    let cfg = CropConfig::default();
    let b64 = Rect::new(0.1, 0.2, 0.4, 0.9).unwrap();
    let b32: Rect32 = b64.cast();
    let mut r64 = RngStream::new(17, 4);
    let mut r32 = RngStream::new(17, 4);
    for _ in 0..1000 {
        let a: Rect = contrastive_crop(&mut r64, &cfg, &b64).unwrap();
        let c: Rect32 = contrastive_crop(&mut r32, &cfg, &b32).unwrap();
        for (x, y) in a.to_array().into_iter().zip(c.to_array()) {
            assert!((x - y as f64).abs() < 1e-5, "{x} vs {y}");
        }
    }
    let h: Heatmap32 = Heatmap32::new(2, 3, vec![0.0, 0.5, 0.0, 0.0, 1.0, 0.2]).unwrap();
    assert_eq!(localize(&h, 0.1f32).to_array(), [1.0 / 3.0, 0.0, 1.0, 1.0]);
}

#[test]
fn adapter_facing_config() {
    let cfg = RunConfig::from_pairs(Vec::<(String, String)>::new()).unwrap();
    assert_eq!((cfg.crop.k, cfg.crop.alpha), (0.1, 0.6));
    assert_eq!(
        RunConfig::from_pairs([("alpha", "-1")]).unwrap_err(),
        Error::InvalidAlpha(-1.0)
    );
    let err = RunConfig::from_pairs([("zoom", "2")]).unwrap_err();
    assert!(err.to_string().contains("zoom"));
}

#[test]
fn injected_draws_scale_to_pixels() {
    let d = Draws {
        scale: 0.25,
        ratio: 1.0,
        u: 0.5,
        v: 0.5,
    };
    let r = place_in_box(&d, &Rect::unit()).unwrap();
    let px: Vec<f64> = r.to_array().iter().map(|v| v * 100.0).collect();
    assert_eq!(px, vec![25.0, 25.0, 75.0, 75.0]);
}

#[test]
fn sampler_comparison_properties() {
    let scenes = random_scenes(7, 20, 0.05, 0.3).unwrap();
    let cmp = compare_samplers(7, &CropConfig::default(), &scenes, 100_000, 0.05).unwrap();
    for (i, c) in cmp.iter().enumerate() {
        let rc = c.arm(Arm::RandomCrop);
        let lo = c.arm(Arm::LocalizationOnly);
        let cc = c.arm(Arm::ContrastiveCrop);
        assert_eq!(cc.fp_rate_strict(), 0.0);
        assert_eq!(lo.fp_rate_strict(), 0.0);
        assert!(cc.fp_rate_strict() <= rc.fp_rate_strict());
        assert!(
            lo.mean_pair_iou() >= cc.mean_pair_iou(),
            "scene {i}: {} < {}",
            lo.mean_pair_iou(),
            cc.mean_pair_iou()
        );
        assert!(
            cc.mean_object_coverage() >= rc.mean_object_coverage(),
            "scene {i}: {} < {}",
            cc.mean_object_coverage(),
            rc.mean_object_coverage()
        );
    }
}

/// Straightforward RandomCrop miss rate with a fixed crop square of area `s`.
fn oracle_fixed_square_fp(object: &Rect, s: f64, n: usize, seed: u64) -> f64 {
    let mut rng = StdRng::seed_from_u64(seed);
    let side = s.sqrt();
    let mut hit = || {
        let x = rng.random_range(0.0..=1.0 - side);
        let y = rng.random_range(0.0..=1.0 - side);
        x < object.x1() && x + side > object.x0() && y < object.y1() && y + side > object.y0()
    };
    (0..n).filter(|_| !(hit() & hit())).count() as f64 / n as f64
}

#[test]
fn random_crop_fp_matches_independent_oracle() {
    let cfg = CropConfig::default().with_fixed_shape(0.2, 1.0);
    let side = 0.1f64.sqrt();
    let centered = Rect::new(
        0.5 - side / 2.0,
        0.5 - side / 2.0,
        0.5 + side / 2.0,
        0.5 + side / 2.0,
    )
    .unwrap();
    let corner = Rect::new(0.0, 0.0, side, side).unwrap();
    let n = 100_000;
    for (object, label) in [(centered, "centered"), (corner, "corner")] {
        let scenes = vec![SceneSpec::new(object, 8, 8)];
        let got = compare_samplers(5, &cfg, &scenes, n, 0.05).unwrap()[0]
            .arm(Arm::RandomCrop)
            .fp_rate_strict();
        let want = oracle_fixed_square_fp(&object, 0.2, n, 99);
        let se = ((got * (1.0 - got) + want * (1.0 - want)) / n as f64).sqrt();
        assert!(
            (got - want).abs() <= 3.0 * se,
            "{label}: {got} vs {want} (se {se})"
        );
        if label == "centered" {
            // every 0.2-area square overlaps a centered 10% object
            assert_eq!(got, 0.0);
        } else {
            assert!(got > 0.1);
        }
    }
}

#[test]
fn comparison_rows_survive_csv() {
    let scenes = random_scenes(2, 3, 0.05, 0.3).unwrap();
    let cmp = compare_samplers(2, &CropConfig::default(), &scenes, 5000, 0.05).unwrap();
    let rows: Vec<StatsRow> = cmp
        .iter()
        .enumerate()
        .flat_map(|(i, c)| {
            Arm::ALL
                .into_iter()
                .map(move |a| StatsRow::new("scene", i as f64, a.as_str(), c.arm(a), 2))
        })
        .collect();
    let back = read_csv(csv_string(&rows).as_bytes()).unwrap();
    assert_eq!(back.len(), rows.len());
    for (a, b) in rows.iter().zip(&back) {
        assert_eq!((&a.arm, a.n_pairs, a.seed), (&b.arm, b.n_pairs, b.seed));
        for (x, y) in [
            (a.fp_strict, b.fp_strict),
            (a.fp_tau, b.fp_tau),
            (a.mean_iou, b.mean_iou),
            (a.se_iou, b.se_iou),
            (a.mean_cov, b.mean_cov),
            (a.se_cov, b.se_cov),
        ] {
            assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
        }
    }
}
