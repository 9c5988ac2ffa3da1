//! Scenario assembly and Monte Carlo estimation of AHE and AEO.
//!
//! Every trial is one coherence block. Trial `t` draws all of its randomness
//! from a ChaCha8 stream keyed by `(seed, t)`, trials are grouped into
//! fixed-size batches, and batch results are reduced in batch order. Results
//! are therefore bit-identical for any rayon pool size.
//!
//! When several conditions (strategy and correlation mode pairs) are
//! evaluated together they all see the same device positions and channel
//! realization in each trial (common random numbers).

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{FadingMode, LinkBudget, PathLossModel, Point2D, RicianProfile};
use crate::error::{check_finite, invalid, Result, WetError};
use crate::precoder::PrecoderOptions;
use crate::strategies::{block_energy, SignalCorrelation, StrategyKind};
use crate::units::HarvesterModel;

/// Seed used when a configuration does not provide one.
pub const DEFAULT_SEED: u64 = 0x5745_5453_494d;

/// AEO values below this are reported as this value in heatmaps.
pub const AEO_FLOOR: f64 = 1e-6;

const BATCH_TRIALS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum Deployment {
    /// Devices at fixed positions, identical in every trial.
    Fixed(Vec<Point2D>),
    /// `count` devices uniform over a disk centered at the origin, redrawn in
    /// every trial.
    UniformDisk { radius: f64, count: usize },
}

impl Deployment {
    pub fn num_devices(&self) -> usize {
        match self {
            Deployment::Fixed(p) => p.len(),
            Deployment::UniformDisk { count, .. } => *count,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub pb_positions: Vec<Point2D>,
    pub antennas: usize,
    pub deployment: Deployment,
    pub strategy: StrategyKind,
    pub correlation: SignalCorrelation,
    /// Total transmit power per PB, watts.
    pub transmit_power_w: f64,
    pub harvester: HarvesterModel,
    pub path_loss: PathLossModel,
    pub rician: RicianProfile,
    pub fading: FadingMode,
    pub precoder: PrecoderOptions,
    pub trials: usize,
    pub seed: u64,
}

impl Default for Scenario {
    /// One PB with 4 antennas at the origin, 10 devices uniform in a 15 m
    /// disk, AA-SS, 1 W.
    fn default() -> Self {
        Self {
            pb_positions: vec![Point2D::origin()],
            antennas: 4,
            deployment: Deployment::UniformDisk {
                radius: 15.0,
                count: 10,
            },
            strategy: StrategyKind::AaSs,
            correlation: SignalCorrelation::Independent,
            transmit_power_w: 1.0,
            harvester: HarvesterModel::default(),
            path_loss: PathLossModel::default(),
            rician: RicianProfile::default(),
            fading: FadingMode::Rician,
            precoder: PrecoderOptions::default(),
            trials: 10_000,
            seed: DEFAULT_SEED,
        }
    }
}

/// PBs at the corners of a square of side `side` centered at the origin.
pub fn square_layout(side: f64) -> Vec<Point2D> {
    let h = side / 2.0;
    vec![
        Point2D { x: -h, y: -h },
        Point2D { x: h, y: -h },
        Point2D { x: -h, y: h },
        Point2D { x: h, y: h },
    ]
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.pb_positions.is_empty() {
            return Err(invalid(
                "pb_positions",
                "at least one power beacon is required",
            ));
        }
        for p in &self.pb_positions {
            check_finite("pb position", p.x)?;
            check_finite("pb position", p.y)?;
        }
        if self.antennas == 0 {
            return Err(invalid("antennas", "antennas must be at least 1"));
        }
        match &self.deployment {
            Deployment::Fixed(p) => {
                if p.is_empty() {
                    return Err(invalid("devices", "at least one device is required"));
                }
                for d in p {
                    check_finite("device position", d.x)?;
                    check_finite("device position", d.y)?;
                }
            }
            Deployment::UniformDisk { radius, count } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(invalid("radius_m", "disk radius must be positive"));
                }
                if *count == 0 {
                    return Err(invalid("count", "device count must be at least 1"));
                }
            }
        }
        check_finite("transmit_power_w", self.transmit_power_w)?;
        if self.transmit_power_w <= 0.0 {
            return Err(invalid(
                "transmit_power_w",
                "transmit power must be positive",
            ));
        }
        self.path_loss.validate()?;
        self.rician.validate()?;
        self.precoder.validate()?;
        if self.trials == 0 {
            return Err(invalid("trials", "trials must be at least 1"));
        }
        self.check_strategy(self.strategy)
    }

    fn check_strategy(&self, strategy: StrategyKind) -> Result<()> {
        if strategy.requires_csi() && self.pb_positions.len() != 1 {
            return Err(WetError::SinglePbOnly(strategy.label()));
        }
        Ok(())
    }
}

/// Samples `n` points uniformly (by area) over a disk of `radius` centered at
/// the origin.
pub fn sample_uniform_disk<R: Rng + ?Sized>(
    rng: &mut R,
    radius: f64,
    n: usize,
) -> Result<Vec<Point2D>> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(invalid("radius_m", "disk radius must be positive"));
    }
    if n == 0 {
        return Err(invalid("count", "device count must be at least 1"));
    }
    Ok(disk_points(rng, radius, n))
}

fn disk_points<R: Rng + ?Sized>(rng: &mut R, radius: f64, n: usize) -> Vec<Point2D> {
    (0..n)
        .map(|_| {
            let r = radius * rng.random::<f64>().sqrt();
            let (s, c) = (rng.random::<f64>() * TAU).sin_cos();
            Point2D { x: r * c, y: r * s }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeMetrics {
    pub position: Point2D,
    pub ahe: f64,
    pub ahe_se: f64,
    pub aeo: f64,
    pub aeo_se: f64,
}

/// Monte Carlo estimates for one strategy and correlation mode. Energies are
/// joules per unit-duration coherence block.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub strategy: StrategyKind,
    pub correlation: SignalCorrelation,
    pub ahe: f64,
    pub ahe_se: f64,
    pub aeo: f64,
    pub aeo_se: f64,
    pub trials: usize,
    /// Number of (device, trial) samples.
    pub samples: usize,
    /// Per-device estimates, only for fixed deployments.
    pub per_node: Option<Vec<NodeMetrics>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Condition {
    pub strategy: StrategyKind,
    pub correlation: SignalCorrelation,
}

#[derive(Debug, Clone, Copy, Default)]
struct NodeAccum {
    sum: f64,
    sum_sq: f64,
    outages: u64,
}

/// Per-trial device averages: mean energy and outage fraction.
#[derive(Debug, Clone, Copy, Default)]
struct TrialValue {
    energy: f64,
    outage: f64,
}

struct BatchOut {
    /// `[condition][trial in batch]`
    trials: Vec<Vec<TrialValue>>,
    /// `[condition][node]`
    nodes: Option<Vec<Vec<NodeAccum>>>,
}

struct SimOutput {
    trials: Vec<Vec<TrialValue>>,
    nodes: Option<Vec<Vec<NodeAccum>>>,
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn simulate(s: &Scenario, conds: &[Condition], collect_nodes: bool) -> Result<SimOutput> {
    s.validate()?;
    for c in conds {
        s.check_strategy(c.strategy)?;
    }
    let fixed_budget = match &s.deployment {
        Deployment::Fixed(p) => Some(LinkBudget::new(
            &s.pb_positions,
            p,
            &s.path_loss,
            &s.rician,
        )?),
        Deployment::UniformDisk { .. } => None,
    };
    let collect_nodes = collect_nodes && fixed_budget.is_some();
    let n_dev = s.deployment.num_devices();
    let n_batches = s.trials.div_ceil(BATCH_TRIALS);

    let run_batch = |batch: usize| -> Result<BatchOut> {
        let lo = batch * BATCH_TRIALS;
        let hi = (lo + BATCH_TRIALS).min(s.trials);
        let mut trials = vec![Vec::with_capacity(hi - lo); conds.len()];
        let mut nodes = collect_nodes.then(|| vec![vec![NodeAccum::default(); n_dev]; conds.len()]);
        for t in lo..hi {
            let mut rng = trial_rng(s.seed, t);
            let drawn;
            let budget = match (&fixed_budget, &s.deployment) {
                (Some(b), _) => b,
                (None, Deployment::UniformDisk { radius, count }) => {
                    let pos = disk_points(&mut rng, *radius, *count);
                    drawn = LinkBudget::new(&s.pb_positions, &pos, &s.path_loss, &s.rician)?;
                    &drawn
                }
                (None, Deployment::Fixed(_)) => unreachable!("fixed deployments precompute links"),
            };
            let real = budget.realize(&mut rng, s.antennas, s.fading);
            for (ci, c) in conds.iter().enumerate() {
                let mut crng = rng.clone();
                let e = block_energy(
                    &real,
                    c.strategy,
                    c.correlation,
                    s.transmit_power_w,
                    &s.harvester,
                    &s.precoder,
                    &mut crng,
                )?;
                let energies = e.energies();
                trials[ci].push(TrialValue {
                    energy: energies.iter().sum::<f64>() / n_dev as f64,
                    outage: e.outage_count() as f64 / n_dev as f64,
                });
                if let Some(nodes) = nodes.as_mut() {
                    for (acc, &v) in nodes[ci].iter_mut().zip(energies) {
                        acc.sum += v;
                        acc.sum_sq += v * v;
                        acc.outages += (v == 0.0) as u64;
                    }
                }
            }
        }
        Ok(BatchOut { trials, nodes })
    };

    let batches: Vec<BatchOut> = (0..n_batches)
        .into_par_iter()
        .map(run_batch)
        .collect::<Result<_>>()?;

    let mut trials = vec![Vec::with_capacity(s.trials); conds.len()];
    let mut nodes = collect_nodes.then(|| vec![vec![NodeAccum::default(); n_dev]; conds.len()]);
    for b in batches {
        for (all, part) in trials.iter_mut().zip(b.trials) {
            all.extend(part);
        }
        if let (Some(total), Some(part)) = (nodes.as_mut(), b.nodes) {
            for (tc, pc) in total.iter_mut().zip(part) {
                for (t, p) in tc.iter_mut().zip(pc) {
                    t.sum += p.sum;
                    t.sum_sq += p.sum_sq;
                    t.outages += p.outages;
                }
            }
        }
    }
    Ok(SimOutput { trials, nodes })
}

fn mean_se(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    let mean = values.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

fn bernoulli_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn metrics_for(
    s: &Scenario,
    cond: Condition,
    trials: &[TrialValue],
    nodes: Option<&[NodeAccum]>,
) -> Metrics {
    let (ahe, ahe_se) = mean_se(trials.iter().map(|t| t.energy));
    let (aeo, aeo_se) = mean_se(trials.iter().map(|t| t.outage));
    let per_node = match (nodes, &s.deployment) {
        (Some(nodes), Deployment::Fixed(pos)) => Some(
            nodes
                .iter()
                .zip(pos)
                .map(|(acc, &position)| {
                    let t = s.trials as f64;
                    let ahe = acc.sum / t;
                    let ahe_se = if s.trials > 1 {
                        ((acc.sum_sq / t - ahe * ahe).max(0.0) * t / (t - 1.0) / t).sqrt()
                    } else {
                        0.0
                    };
                    let aeo = acc.outages as f64 / t;
                    NodeMetrics {
                        position,
                        ahe,
                        ahe_se,
                        aeo,
                        aeo_se: bernoulli_se(aeo, s.trials),
                    }
                })
                .collect(),
        ),
        _ => None,
    };
    Metrics {
        strategy: cond.strategy,
        correlation: cond.correlation,
        ahe,
        ahe_se,
        aeo,
        aeo_se,
        trials: s.trials,
        samples: s.trials * s.deployment.num_devices(),
        per_node,
    }
}

/// Runs `s.strategy` under `s.correlation` for `s.trials` blocks.
pub fn run_scenario(s: &Scenario) -> Result<Metrics> {
    let cond = Condition {
        strategy: s.strategy,
        correlation: s.correlation,
    };
    Ok(run_conditions(s, &[cond])?.remove(0))
}

/// Runs several conditions over shared channel draws.
pub fn run_conditions(s: &Scenario, conds: &[Condition]) -> Result<Vec<Metrics>> {
    let out = simulate(s, conds, true)?;
    Ok(conds
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            metrics_for(
                s,
                c,
                &out.trials[i],
                out.nodes.as_ref().map(|n| n[i].as_slice()),
            )
        })
        .collect())
}

/// Difference `a - b` of two conditions' AHE and AEO with paired standard
/// errors from common random numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedDifference {
    pub ahe_diff: f64,
    pub ahe_diff_se: f64,
    pub aeo_diff: f64,
    pub aeo_diff_se: f64,
}

/// Runs two conditions on shared draws and returns both metrics and their
/// paired difference.
pub fn compare_conditions(
    s: &Scenario,
    a: Condition,
    b: Condition,
) -> Result<(Metrics, Metrics, PairedDifference)> {
    let out = simulate(s, &[a, b], false)?;
    let (ta, tb) = (&out.trials[0], &out.trials[1]);
    let (ahe_diff, ahe_diff_se) = mean_se(ta.iter().zip(tb).map(|(x, y)| x.energy - y.energy));
    let (aeo_diff, aeo_diff_se) = mean_se(ta.iter().zip(tb).map(|(x, y)| x.outage - y.outage));
    Ok((
        metrics_for(s, a, ta, None),
        metrics_for(s, b, tb, None),
        PairedDifference {
            ahe_diff,
            ahe_diff_se,
            aeo_diff,
            aeo_diff_se,
        },
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub metrics: Metrics,
}

/// Runs every strategy at every device count. Strategies at the same `N`
/// share positions and channels.
pub fn sweep_devices(
    s: &Scenario,
    n_values: &[usize],
    strategies: &[StrategyKind],
) -> Result<Vec<SweepRow>> {
    if n_values.is_empty() {
        return Err(invalid("n_values", "n_values must not be empty"));
    }
    if strategies.is_empty() {
        return Err(invalid("strategies", "at least one strategy is required"));
    }
    let radius = match s.deployment {
        Deployment::UniformDisk { radius, .. } => radius,
        Deployment::Fixed(_) => {
            return Err(invalid(
                "deployment",
                "device sweeps need a random (disk) deployment",
            ))
        }
    };
    let conds: Vec<Condition> = strategies
        .iter()
        .map(|&strategy| Condition {
            strategy,
            correlation: s.correlation,
        })
        .collect();
    let mut rows = Vec::new();
    for &n in n_values {
        let mut sn = s.clone();
        sn.deployment = Deployment::UniformDisk { radius, count: n };
        for metrics in run_conditions(&sn, &conds)? {
            rows.push(SweepRow { n, metrics });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRow {
    pub antennas: usize,
    pub independent: Metrics,
    pub sync: Metrics,
    /// `(AHE_ind - AHE_sync) / AHE_sync`
    pub ahe_gain: f64,
    pub ahe_gain_se: f64,
    /// `(AEO_sync - AEO_ind) / AEO_sync`
    pub aeo_gain: f64,
    pub aeo_gain_se: f64,
}

impl CorrelationRow {
    pub fn strategy(&self) -> StrategyKind {
        self.independent.strategy
    }
}

/// Relative change `x/y - 1` of paired per-trial means with a delta-method
/// standard error.
fn ratio_gain(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    if my == 0.0 {
        return (f64::NAN, f64::NAN);
    }
    let r = mx / my;
    let se = if x.len() > 1 {
        let var = x
            .iter()
            .zip(y)
            .map(|(a, b)| {
                let d = a - r * b;
                d * d
            })
            .sum::<f64>()
            / (n - 1.0);
        (var / n).sqrt() / my
    } else {
        0.0
    };
    (r - 1.0, se)
}

/// Independent versus synchronized PB signals for each antenna count and
/// strategy; both modes share positions and channels in every trial.
pub fn compare_correlation(
    s: &Scenario,
    m_values: &[usize],
    strategies: &[StrategyKind],
) -> Result<Vec<CorrelationRow>> {
    if s.pb_positions.len() < 2 {
        return Err(WetError::MultiPbRequired("correlation comparison"));
    }
    if m_values.is_empty() {
        return Err(invalid("m_values", "m_values must not be empty"));
    }
    if let Some(st) = strategies.iter().find(|st| st.requires_csi()) {
        return Err(WetError::SinglePbOnly(st.label()));
    }
    let conds: Vec<Condition> = strategies
        .iter()
        .flat_map(|&strategy| {
            [SignalCorrelation::Independent, SignalCorrelation::Sync].map(|correlation| Condition {
                strategy,
                correlation,
            })
        })
        .collect();
    let mut rows = Vec::new();
    for &m in m_values {
        let mut sm = s.clone();
        sm.antennas = m;
        let out = simulate(&sm, &conds, false)?;
        for (k, pair) in conds.chunks(2).enumerate() {
            let ti = &out.trials[2 * k];
            let ts = &out.trials[2 * k + 1];
            let e_ind: Vec<f64> = ti.iter().map(|t| t.energy).collect();
            let e_sync: Vec<f64> = ts.iter().map(|t| t.energy).collect();
            let o_ind: Vec<f64> = ti.iter().map(|t| t.outage).collect();
            let o_sync: Vec<f64> = ts.iter().map(|t| t.outage).collect();
            let (ahe_gain, ahe_gain_se) = ratio_gain(&e_ind, &e_sync);
            let (ratio, aeo_gain_se) = ratio_gain(&o_ind, &o_sync);
            rows.push(CorrelationRow {
                antennas: m,
                independent: metrics_for(&sm, pair[0], ti, None),
                sync: metrics_for(&sm, pair[1], ts, None),
                ahe_gain,
                ahe_gain_se,
                aeo_gain: -ratio,
                aeo_gain_se,
            });
        }
    }
    Ok(rows)
}

/// Probe grid for heatmaps: `nx * ny` probes at
/// `x_min + i (x_max - x_min) / (nx - 1)` and likewise in `y`, each probe
/// being the center of its cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatmapSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl HeatmapSpec {
    pub fn square(half_extent: f64, n: usize) -> Self {
        Self {
            x_min: -half_extent,
            x_max: half_extent,
            y_min: -half_extent,
            y_max: half_extent,
            nx: n,
            ny: n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 {
            return Err(invalid(
                "nx",
                "heatmap resolution must be at least 2 per axis",
            ));
        }
        for (name, v) in [
            ("x_min", self.x_min),
            ("x_max", self.x_max),
            ("y_min", self.y_min),
            ("y_max", self.y_max),
        ] {
            check_finite(name, v)?;
        }
        if self.x_max <= self.x_min || self.y_max <= self.y_min {
            return Err(invalid(
                "x_max",
                "heatmap extent must have positive width and height",
            ));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }

    /// Probe positions, row-major with `x` varying fastest.
    pub fn probes(&self) -> Vec<Point2D> {
        let (dx, dy) = (self.dx(), self.dy());
        (0..self.ny)
            .flat_map(|iy| {
                (0..self.nx).map(move |ix| Point2D {
                    x: self.x_min + ix as f64 * dx,
                    y: self.y_min + iy as f64 * dy,
                })
            })
            .collect()
    }
}

/// Per-cell AEO estimates, floored at [`AEO_FLOOR`].
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapGrid {
    pub spec: HeatmapSpec,
    pub strategy: StrategyKind,
    pub correlation: SignalCorrelation,
    pub pb_positions: Vec<Point2D>,
    pub trials: usize,
    /// Floored AEO, row-major with `x` fastest. Every entry is in `[1e-6, 1]`.
    pub aeo: Vec<f64>,
    /// Raw outage fraction before flooring.
    pub aeo_raw: Vec<f64>,
    /// Bernoulli standard error of the raw estimate.
    pub aeo_se: Vec<f64>,
}

impl HeatmapGrid {
    pub fn probes(&self) -> Vec<Point2D> {
        self.spec.probes()
    }

    pub fn cell(&self, ix: usize, iy: usize) -> f64 {
        self.aeo[iy * self.spec.nx + ix]
    }

    /// Index of the cell with the largest AEO (lowest index on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.aeo.iter().enumerate() {
            if v > self.aeo[best] {
                best = i;
            }
        }
        best
    }
}

/// AEO map for `s.strategy`; each probe is a fixed device.
pub fn heatmap_aeo(s: &Scenario, grid: &HeatmapSpec) -> Result<HeatmapGrid> {
    Ok(heatmap_aeo_multi(s, grid, &[s.strategy])?.remove(0))
}

/// AEO maps for several strategies over shared channel draws.
pub fn heatmap_aeo_multi(
    s: &Scenario,
    grid: &HeatmapSpec,
    strategies: &[StrategyKind],
) -> Result<Vec<HeatmapGrid>> {
    grid.validate()?;
    let mut sp = s.clone();
    sp.deployment = Deployment::Fixed(grid.probes());
    let conds: Vec<Condition> = strategies
        .iter()
        .map(|&strategy| Condition {
            strategy,
            correlation: s.correlation,
        })
        .collect();
    let out = simulate(&sp, &conds, true)?;
    let nodes = out.nodes.expect("fixed deployment collects per-node data");
    Ok(conds
        .iter()
        .zip(nodes)
        .map(|(c, accs)| {
            let aeo_raw: Vec<f64> = accs
                .iter()
                .map(|a| a.outages as f64 / s.trials as f64)
                .collect();
            HeatmapGrid {
                spec: *grid,
                strategy: c.strategy,
                correlation: c.correlation,
                pb_positions: s.pb_positions.clone(),
                trials: s.trials,
                aeo: aeo_raw.iter().map(|&p| p.max(AEO_FLOOR)).collect(),
                aeo_se: aeo_raw.iter().map(|&p| bernoulli_se(p, s.trials)).collect(),
                aeo_raw,
            }
        })
        .collect())
}
