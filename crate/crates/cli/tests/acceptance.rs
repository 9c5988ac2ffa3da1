//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. Tolerances and trial counts are pinned here.

use std::process::ExitCode;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wetsim::commands::{cmd_sweep, run_oracle};
use wetsim::{parse_config, with_threads};
use wetsim_core::channel::sample_fading;
use wetsim_core::montecarlo::{
    compare_correlation, heatmap_aeo, heatmap_aeo_multi, square_layout, sweep_devices,
};
use wetsim_core::{
    Deployment, FadingMode, HarvesterModel, HeatmapGrid, HeatmapSpec, Metrics, PathLossModel,
    Point2D, Scenario, StrategyKind,
};

const EH_REL_TOL: f64 = 1e-9;
const FADING_DRAWS: usize = 1_000_000;
const MEAN_POWER_TOL: f64 = 0.01;
const K_REL_TOL: f64 = 0.05;
const TREND_TRIALS: usize = 20_000;
const HEATMAP_TRIALS: usize = 100_000;
const HEATMAP_CELLS: usize = 31;
const SIGMAS: f64 = 3.0;
const ORACLE_INSTANCES: usize = 24;
const ORACLE_GAP: f64 = 0.01;
const ANALYTIC_REL_TOL: f64 = 1e-6;

type Check = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn pooled(a: f64, b: f64) -> f64 {
    a.hypot(b)
}

fn eh_exactness() -> Outcome {
    let m = HarvesterModel::new(-22.0, -8.0, 0.35).unwrap();
    let a = m.harvest(1e-5).unwrap();
    let b = m.harvest(1e-7).unwrap();
    let c = m.harvest(1e-2).unwrap();
    // 0.35 * 10^-0.8 mW; the quoted 5.5472e-5 comes from rounding P_sat to
    // 1.5849e-4 first, so it is checked as stated and the closed form is
    // reported alongside.
    let closed = 0.35 * 10f64.powf(-0.8) * 1e-3;
    let pass = rel(a, 3.5e-6) <= EH_REL_TOL && b == 0.0 && rel(c, 5.5472e-5) <= EH_REL_TOL;
    outcome(
        pass,
        format!(
            "h(1e-5)={a:.10e} h(1e-7)={b:e} h(1e-2)={c:.10e}; rel err vs 5.5472e-5 {:.2e}, vs closed form {:.2e}",
            rel(c, 5.5472e-5),
            rel(c, closed)
        ),
    )
}

fn channel_statistics() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, k) in [1.0, 5.0, 15.0].into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + i as u64);
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..FADING_DRAWS {
            let p = sample_fading(&mut rng, k).unwrap().norm_sqr();
            s1 += p;
            s2 += p * p;
        }
        let n = FADING_DRAWS as f64;
        let mean = s1 / n;
        let var = s2 / n - mean * mean;
        // moment matching: Var(|h|^2)/E^2 = (2K+1)/(K+1)^2
        let s = (1.0 - var / (mean * mean)).max(0.0).sqrt();
        let k_hat = s / (1.0 - s);
        let ok = (mean - 1.0).abs() <= MEAN_POWER_TOL && rel(k_hat, k) <= K_REL_TOL;
        pass &= ok;
        parts.push(format!("k={k}: mean {mean:.4} k_hat {k_hat:.3}"));
    }
    outcome(pass, parts.join("; "))
}

fn find(rows: &[(usize, Metrics)], n: usize, st: StrategyKind) -> &Metrics {
    &rows
        .iter()
        .find(|(rn, m)| *rn == n && m.strategy == st)
        .unwrap()
        .1
}

fn single_pb_trends() -> Outcome {
    let s = Scenario {
        antennas: 4,
        deployment: Deployment::UniformDisk {
            radius: 15.0,
            count: 1,
        },
        transmit_power_w: 1.0,
        trials: TREND_TRIALS,
        seed: 401,
        ..Scenario::default()
    };
    let rows: Vec<(usize, Metrics)> = sweep_devices(&s, &[1, 2, 10, 100], &StrategyKind::ALL)
        .unwrap()
        .into_iter()
        .map(|r| (r.n, r.metrics))
        .collect();
    let mut parts = Vec::new();

    let mut flat = true;
    for st in StrategyKind::CSI_FREE {
        let ms: Vec<&Metrics> = [1, 10, 100].iter().map(|&n| find(&rows, n, st)).collect();
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in i + 1..3 {
                let z = (ms[i].ahe - ms[j].ahe).abs() / pooled(ms[i].ahe_se, ms[j].ahe_se);
                worst = worst.max(z);
            }
        }
        flat &= worst <= SIGMAS;
        parts.push(format!("{st} AHE max |z| {worst:.2}"));
    }

    let csi1 = find(&rows, 1, StrategyKind::AaCsi);
    let ss1 = find(&rows, 1, StrategyKind::AaSs);
    let z_csi = (csi1.ahe - ss1.ahe) / pooled(csi1.ahe_se, ss1.ahe_se);
    let gap = |n| {
        let c = find(&rows, n, StrategyKind::AaCsi).ahe;
        let a = find(&rows, n, StrategyKind::AaSs).ahe;
        (c - a) / a
    };
    let (g2, g100) = (gap(2), gap(100));
    let csi_ok = z_csi > SIGMAS && g100 < g2;
    parts.push(format!(
        "AA_CSI-AA_SS at N=1 z {z_csi:.1}; rel gap N=2 {g2:.4} N=100 {g100:.4}"
    ));

    let sa = find(&rows, 10, StrategyKind::Sa);
    let ss = find(&rows, 10, StrategyKind::AaSs);
    let z_out = (ss.aeo - sa.aeo) / pooled(sa.aeo_se, ss.aeo_se);
    parts.push(format!(
        "AEO N=10 SA {:.4} AA_SS {:.4} z {z_out:.1}",
        sa.aeo, ss.aeo
    ));

    outcome(flat && csi_ok && z_out > SIGMAS, parts.join("; "))
}

fn multi_pb_correlation() -> Outcome {
    let s = Scenario {
        pb_positions: square_layout(20.0),
        deployment: Deployment::UniformDisk {
            radius: 15.0,
            count: 10,
        },
        trials: TREND_TRIALS,
        seed: 402,
        ..Scenario::default()
    };
    let rows = compare_correlation(&s, &[2, 4, 8], &StrategyKind::CSI_FREE).unwrap();
    let get = |m: usize, st: StrategyKind| {
        rows.iter()
            .find(|r| r.antennas == m && r.strategy() == st)
            .unwrap()
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for st in [StrategyKind::AaSs, StrategyKind::AaIs] {
        let r = get(4, st);
        let ok = r.aeo_gain > SIGMAS * r.aeo_gain_se;
        pass &= ok;
        parts.push(format!(
            "{st} M=4 AEO gain {:+.4} se {:.4} [{}]",
            r.aeo_gain,
            r.aeo_gain_se,
            if ok { "ok" } else { "no" }
        ));
    }
    let sa: Vec<f64> = [2, 4, 8]
        .iter()
        .map(|&m| get(m, StrategyKind::Sa).aeo_gain)
        .collect();
    let ok = sa[2].abs() < sa[0].abs();
    pass &= ok;
    parts.push(format!(
        "SA AEO gain M=2 {:+.4} M=4 {:+.4} M=8 {:+.4} [{}]",
        sa[0],
        sa[1],
        sa[2],
        if ok { "ok" } else { "no" }
    ));
    outcome(pass, parts.join("; "))
}

fn heatmap_structure() -> Outcome {
    let pbs = square_layout(20.0);
    let s = Scenario {
        pb_positions: pbs.clone(),
        antennas: 4,
        trials: HEATMAP_TRIALS,
        seed: 403,
        ..Scenario::default()
    };
    let spec = HeatmapSpec::square(15.0, HEATMAP_CELLS);
    let grids = heatmap_aeo_multi(&s, &spec, &[StrategyKind::Sa, StrategyKind::AaSs]).unwrap();
    let (sa, ss) = (&grids[0], &grids[1]);
    let probes = spec.probes();
    let near: Vec<usize> = (0..probes.len())
        .filter(|&i| pbs.iter().any(|pb| pb.distance(&probes[i]) <= 1.0 + 1e-9))
        .collect();
    let floor_count = |g: &HeatmapGrid| near.iter().filter(|&&i| g.aeo[i] == 1e-6).count();
    let worst_near = |g: &HeatmapGrid| near.iter().map(|&i| g.aeo[i]).fold(0.0, f64::max);
    let floors_ok = floor_count(sa) == near.len() && floor_count(ss) == near.len();

    let (ia, ib) = (sa.argmax(), ss.argmax());
    let z_max = (ss.aeo[ib] - sa.aeo[ia]) / pooled(ss.aeo_se[ib], sa.aeo_se[ia]);
    // matched cell: where AA_SS is worst
    let z_cell = (ss.aeo[ib] - sa.aeo[ib]) / pooled(ss.aeo_se[ib], sa.aeo_se[ib]);
    let max_ok = z_max > SIGMAS && z_cell > SIGMAS;
    let detail = format!(
        "near-PB floored SA {}/{} AA_SS {}/{} (worst near-PB AEO SA {:.2e} AA_SS {:.2e}) [{}]; \
         max AEO SA {:.4} at ({:.0},{:.0}) AA_SS {:.4} at ({:.0},{:.0}) z {z_max:.1}, matched z {z_cell:.1} [{}]",
        floor_count(sa),
        near.len(),
        floor_count(ss),
        near.len(),
        worst_near(sa),
        worst_near(ss),
        if floors_ok { "ok" } else { "no" },
        sa.aeo[ia],
        probes[ia].x,
        probes[ia].y,
        ss.aeo[ib],
        probes[ib].x,
        probes[ib].y,
        if max_ok { "ok" } else { "no" }
    );
    outcome(floors_ok && max_ok, detail)
}

fn precoder_oracle() -> Outcome {
    let cfg = parse_config(&format!(
        "[run]\nseed = 404\n[oracle]\ninstances = {ORACLE_INSTANCES}\nn_values = [1, 2, 3]\n\
         grid_resolution = 256\nmax_gap = {ORACLE_GAP}\n"
    ))
    .unwrap();
    let report = run_oracle(&cfg).unwrap();
    let analytic_worst = report
        .rows
        .iter()
        .filter_map(|r| {
            r.analytic.map(|a| {
                if a > 0.0 {
                    rel(r.optimized, a)
                } else {
                    r.optimized
                }
            })
        })
        .fold(0.0, f64::max);
    let singles = report.rows.iter().filter(|r| r.analytic.is_some()).count();
    outcome(
        report.passed && report.rows.len() >= 20 && singles > 0 && analytic_worst <= ANALYTIC_REL_TOL,
        format!(
            "{} instances, max gap vs grid {:.4}%; single-user worst rel error {analytic_worst:.1e} over {singles}",
            report.rows.len(),
            100.0 * report.max_gap
        ),
    )
}

fn thread_determinism() -> Outcome {
    let cfg = parse_config(
        "[run]\ntrials = 2000\nseed = 405\n[devices]\nradius_m = 15.0\n[sweep]\nn_values = [1, 10]\n",
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in [1, 2, 4] {
        let path = dir.path().join(format!("sweep{threads}.csv"));
        with_threads(Some(threads), || cmd_sweep(&cfg, &path))
            .unwrap()
            .unwrap();
        outputs.push(std::fs::read(&path).unwrap());
    }
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    outcome(
        same,
        format!(
            "1/2/4 threads, {} bytes each, identical: {same}",
            outputs[0].len()
        ),
    )
}

fn threshold_radius() -> Outcome {
    let s = Scenario {
        antennas: 4,
        deployment: Deployment::Fixed(vec![Point2D::origin()]),
        strategy: StrategyKind::AaIs,
        fading: FadingMode::Disabled,
        trials: 1,
        ..Scenario::default()
    };
    let r0 = PathLossModel::default().threshold_radius(1.0, s.harvester.sensitivity_w());
    let spec = HeatmapSpec::square(15.0, HEATMAP_CELLS);
    let cell = spec.dx();
    let grid = heatmap_aeo(&s, &spec).unwrap();
    let probes = spec.probes();
    let mut violations = 0;
    let (mut inner, mut outer) = (0.0f64, f64::INFINITY);
    for (p, &v) in probes.iter().zip(&grid.aeo_raw) {
        let d = p.distance(&Point2D::origin());
        if v == 0.0 {
            inner = inner.max(d);
        } else if v == 1.0 {
            outer = outer.min(d);
        } else {
            violations += 1;
        }
    }
    let pass = (r0 - 7.36).abs() < 0.01
        && violations == 0
        && inner < r0
        && outer > r0
        && r0 - inner <= cell
        && outer - r0 <= cell;
    outcome(
        pass,
        format!("closed form {r0:.4} m; last powered probe {inner:.3} m, first outage probe {outer:.3} m, cell {cell} m"),
    )
}

fn main() -> ExitCode {
    let criteria: [Check; 8] = [
        ("EH model exactness", eh_exactness),
        ("channel statistics", channel_statistics),
        ("single-PB device-count trends", single_pb_trends),
        ("multi-PB signal correlation trends", multi_pb_correlation),
        ("multi-PB outage heatmap", heatmap_structure),
        ("precoder oracle", precoder_oracle),
        ("thread-count determinism", thread_determinism),
        ("deterministic threshold radius", threshold_radius),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != i + 1) {
            continue;
        }
        let t = Instant::now();
        let o = check();
        println!(
            "criterion {} {name}: {} ({:.1} s) {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("acceptance: {failed} criterion(s) failed");
        ExitCode::FAILURE
    } else {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    }
}
