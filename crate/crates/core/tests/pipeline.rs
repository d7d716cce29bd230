use mvdisp::data::{generate_slats, load_dataset, save_views, DatasetKind, SceneSpec, Slat};
use mvdisp::harness::report::parse_csv;
use mvdisp::harness::{best_alpha_envelope, rmse_hypotheses, run_experiment, write_csv, Method, RunOptions};
use mvdisp::{plan_schedule, run_progressive, DisparityField, PlanMode, SolverConfig};

fn small_scene() -> mvdisp::data::SlatsScene {
    let spec = SceneSpec {
        n_views: 7,
        slats: vec![Slat { x: 12.0, width: 16.0 }, Slat { x: 44.0, width: 14.0 }],
        ..SceneSpec::scaled(72, 32)
    };
    generate_slats(&spec).unwrap()
}

#[test]
fn saved_scene_loads_back() {
    let scene = small_scene();
    let dir = tempfile::tempdir().unwrap();
    save_views(dir.path(), &scene.views, Some(&scene.gt)).unwrap();
    let ds = load_dataset(dir.path()).unwrap();
    assert_eq!(ds.kind, DatasetKind::Slats);
    assert_eq!(ds.views.len(), 7);
    assert_eq!(ds.views.reference_index(), scene.views.reference_index());
    for (a, b) in ds.views.views().iter().zip(scene.views.views()) {
        assert_eq!(a.baseline, b.baseline);
        let err = a.image.data().iter().zip(b.image.data()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }
    let gt = ds.gt.unwrap();
    assert_eq!(gt.resolution(), scene.gt.resolution());
}

#[test]
fn progressive_estimate_finds_the_slats() {
    let scene = small_scene().with_noise(0.01, 0).unwrap();
    let plan = plan_schedule(&scene.views, PlanMode::Gate { k: 1.0, c: 1.0 }).unwrap();
    let cfg = SolverConfig {
        alpha: 0.05,
        irls_iters: 6,
        ..SolverConfig::default()
    };
    let stages = run_progressive(&scene.views, &plan, &cfg).unwrap();
    assert_eq!(stages.len(), plan.len());
    let w = &stages.last().unwrap().w;
    let gt = scene.gt_base().unwrap();
    // column ranges three pixels clear of every edge
    let region_mean = |cols: std::ops::Range<usize>| {
        let (mut sum, mut n) = (0.0, 0);
        for y in 4..28 {
            for x in cols.clone() {
                assert_eq!(gt.get(x, y), gt.get(cols.start, 4));
                sum += w.get(x, y);
                n += 1;
            }
        }
        sum / n as f64
    };
    for (cols, expect) in [(15..25, scene.spec.slat_w), (47..55, scene.spec.slat_w), (31..41, scene.spec.background_w)] {
        let got = region_mean(cols.clone());
        assert!((got - expect).abs() < 0.1, "{cols:?}: {got} vs {expect}");
    }
    let zero = rmse_hypotheses(&DisparityField::zeros(72, 32).unwrap(), &scene.gt).unwrap();
    assert!(rmse_hypotheses(w, &scene.gt).unwrap() < 0.5 * zero);
}

#[test]
fn sweep_rows_survive_csv() {
    let scene = small_scene();
    let plan = plan_schedule(&scene.views, PlanMode::Gate { k: 1.0, c: 1.0 }).unwrap();
    let cfg = SolverConfig {
        irls_iters: 2,
        ..SolverConfig::default()
    };
    let rows = run_experiment(
        &scene.views,
        &scene.gt,
        &[Method::WelschL1, Method::L2L2],
        &[0.2, 0.05],
        &plan,
        &cfg,
        RunOptions::default(),
    )
    .unwrap();
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).unwrap();
    let back = parse_csv(buf.as_slice(), std::path::Path::new("memory")).unwrap();
    assert_eq!(back.len(), rows.len());
    for (a, b) in rows.iter().zip(&back) {
        assert_eq!((a.method, a.alpha, a.n_views, a.stage, a.seed), (b.method, b.alpha, b.n_views, b.stage, b.seed));
        assert!((a.rmse - b.rmse).abs() <= 1e-5 * a.rmse.abs());
    }
    assert_eq!(best_alpha_envelope(&rows).len(), 2 * plan.len());
}
