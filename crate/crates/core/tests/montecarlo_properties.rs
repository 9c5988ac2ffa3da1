use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wetsim_core::montecarlo::{
    heatmap_aeo, heatmap_aeo_multi, run_scenario, sample_uniform_disk, square_layout, AEO_FLOOR,
};
use wetsim_core::{Deployment, FadingMode, HeatmapSpec, Point2D, Scenario, StrategyKind};

#[test]
fn disk_sampling_is_area_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let pts = sample_uniform_disk(&mut rng, 15.0, 100_000).unwrap();
    let r: Vec<f64> = pts.iter().map(|p| p.x.hypot(p.y)).collect();
    assert!(r.iter().all(|&x| x <= 15.0));
    let inner = r.iter().filter(|&&x| x < 15.0 / 2f64.sqrt()).count() as f64 / r.len() as f64;
    assert!((inner - 0.5).abs() < 0.01, "inner fraction {inner}");
    let mean = r.iter().sum::<f64>() / r.len() as f64;
    assert!((mean - 10.0).abs() < 0.1, "mean radius {mean}");
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
}

#[test]
fn results_independent_of_thread_count() {
    for strategy in StrategyKind::ALL {
        let s = Scenario {
            strategy,
            trials: 300,
            deployment: Deployment::UniformDisk {
                radius: 15.0,
                count: 5,
            },
            ..Scenario::default()
        };
        let a = pool(1).install(|| run_scenario(&s)).unwrap();
        let b = pool(4).install(|| run_scenario(&s)).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn aeo_standard_error_is_bernoulli() {
    let s = Scenario {
        strategy: StrategyKind::AaSs,
        trials: 20_000,
        deployment: Deployment::Fixed(vec![Point2D::new(7.0, 0.0).unwrap()]),
        ..Scenario::default()
    };
    let m = run_scenario(&s).unwrap();
    assert!(m.aeo > 0.01 && m.aeo < 0.99, "aeo {}", m.aeo);
    let bern = (m.aeo * (1.0 - m.aeo) / m.samples as f64).sqrt();
    let ratio = m.aeo_se / bern;
    assert!((1.0 / 1.5..=1.5).contains(&ratio), "se ratio {ratio}");
}

#[test]
fn standard_error_scales_with_root_trials() {
    let base = Scenario {
        strategy: StrategyKind::AaSs,
        deployment: Deployment::UniformDisk {
            radius: 15.0,
            count: 10,
        },
        trials: 4_000,
        ..Scenario::default()
    };
    let se = |t: usize| {
        run_scenario(&Scenario {
            trials: t,
            ..base.clone()
        })
        .unwrap()
        .ahe_se
    };
    let (s1, s2, s4) = (se(4_000), se(8_000), se(16_000));
    let r2 = s2 / s1;
    let r4 = s4 / s1;
    assert!(
        (r2 / std::f64::consts::FRAC_1_SQRT_2 - 1.0).abs() < 0.2,
        "doubling ratio {r2}"
    );
    assert!((r4 / 0.5 - 1.0).abs() < 0.2, "quadrupling ratio {r4}");
}

#[test]
fn switching_no_worse_far_from_beacon() {
    // Probes beyond ~2.5 m never saturate under a 1 W single PB.
    let probes: Vec<Point2D> = [4.0, 6.0, 7.0, 8.0, 9.0, 11.0]
        .iter()
        .map(|&d| Point2D::new(d, 0.0).unwrap())
        .collect();
    let s = Scenario {
        deployment: Deployment::Fixed(probes),
        trials: 20_000,
        ..Scenario::default()
    };
    let sa = run_scenario(&Scenario {
        strategy: StrategyKind::Sa,
        ..s.clone()
    })
    .unwrap();
    let ss = run_scenario(&Scenario {
        strategy: StrategyKind::AaSs,
        ..s
    })
    .unwrap();
    for (a, b) in sa.per_node.unwrap().iter().zip(ss.per_node.unwrap().iter()) {
        assert!(
            a.aeo <= b.aeo + 3.0 * a.aeo_se.max(b.aeo_se),
            "{:?} vs {:?}",
            a,
            b
        );
    }
}

#[test]
fn deterministic_heatmap_is_threshold_disk() {
    let s = Scenario {
        strategy: StrategyKind::AaIs,
        fading: FadingMode::Disabled,
        trials: 2,
        ..Scenario::default()
    };
    let spec = HeatmapSpec::square(10.0, 41);
    let map = heatmap_aeo(&s, &spec).unwrap();
    let radius = s
        .path_loss
        .threshold_radius(1.0, s.harvester.sensitivity_w());
    let cell = spec.dx().max(spec.dy());
    for (p, &a) in spec.probes().iter().zip(&map.aeo) {
        let d = p.x.hypot(p.y);
        if d < radius - cell {
            assert_eq!(a, AEO_FLOOR);
        } else if d > radius + cell {
            assert_eq!(a, 1.0);
        }
    }
    assert!(map.aeo.iter().all(|&a| (AEO_FLOOR..=1.0).contains(&a)));
}

#[test]
fn multi_pb_heatmap_floor_at_beacons() {
    let s = Scenario {
        pb_positions: square_layout(20.0),
        strategy: StrategyKind::Sa,
        trials: 5_000,
        ..Scenario::default()
    };
    let spec = HeatmapSpec::square(15.0, 7);
    let maps = heatmap_aeo_multi(&s, &spec, &[StrategyKind::Sa, StrategyKind::AaIs]).unwrap();
    for map in &maps {
        for (p, &a) in spec.probes().iter().zip(&map.aeo) {
            if s.pb_positions.iter().any(|b| b.distance(p) <= 1.0) {
                assert_eq!(a, AEO_FLOOR);
            }
        }
    }
}
