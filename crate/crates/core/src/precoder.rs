//! Rank-1 energy precoder for the single-PB AA-CSI benchmark.
//!
//! The objective is the total harvested power over all devices,
//! `sum_j harvest(loss_j * |<g_j, w>|^2)`, with `<g, w> = sum_m conj(g_m) w_m`
//! and `||w||^2 <= P`. It is non-concave and discontinuous at the sensitivity
//! level, so [`optimize_precoder`] runs projected subgradient ascent from
//! several starting points and keeps the best one.

use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::ChannelRealization;
use crate::error::{check_finite, invalid, Result, WetError};
use crate::units::HarvesterModel;

const NORM_TOL: f64 = 1e-9;
/// Slope multipliers tried, in order, to lift a device over sensitivity.
const BOOSTS: [f64; 3] = [10.0, 100.0, 1000.0];
/// Below-sensitivity devices tried per activation round.
const ACTIVATION_CANDIDATES: usize = 3;
/// Runs that line up with an earlier run's solution this closely are stopped.
const DEDUP_ALIGNMENT: f64 = 1e-3;
const DEDUP_AFTER: usize = 10;
const DEDUP_EVERY: usize = 5;
/// Step-size reductions (factor 10 each) used to settle on a sensitivity edge.
const POLISH_STAGES: usize = 3;
const POLISH_ITERATIONS: usize = 200;

/// Precoding vector with its power budget; `||w||^2 <= P`.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    weights: Vec<Complex64>,
    power_budget: f64,
}

impl Precoder {
    pub fn new(weights: Vec<Complex64>, power_budget: f64) -> Result<Self> {
        check_finite("power budget", power_budget)?;
        if power_budget <= 0.0 {
            return Err(invalid("power_budget", "power budget must be positive"));
        }
        if weights.is_empty() {
            return Err(invalid("weights", "precoder needs at least one weight"));
        }
        let norm_sq = norm_sqr(&weights);
        if !norm_sq.is_finite() || norm_sq > power_budget * (1.0 + NORM_TOL) {
            return Err(WetError::PowerBudget {
                norm_sq,
                budget: power_budget,
            });
        }
        Ok(Self {
            weights,
            power_budget,
        })
    }

    pub fn zero(antennas: usize, power_budget: f64) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); antennas], power_budget)
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn power_budget(&self) -> f64 {
        self.power_budget
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.weights)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderOptions {
    /// Total number of starting points. `None` means `N + 8`. Matched filters
    /// to every device are always included.
    pub restarts: Option<usize>,
    /// Relative improvement of the best objective over `window` iterations
    /// below which a run stops.
    pub tol: f64,
    pub window: usize,
    pub max_iterations: usize,
    /// First step length as a fraction of `sqrt(P)`; step `k` is
    /// `initial_step / (k + 1)^step_decay`.
    pub initial_step: f64,
    /// Exponent of the diminishing step schedule, in `(0, 1]`.
    pub step_decay: f64,
    /// Greedy refinement that tries to lift devices just below sensitivity
    /// over the threshold after the multi-start search.
    pub activation: bool,
}

impl Default for PrecoderOptions {
    fn default() -> Self {
        Self {
            restarts: None,
            tol: 1e-6,
            window: 25,
            max_iterations: 5_000,
            initial_step: 0.5,
            step_decay: 0.5,
            activation: true,
        }
    }
}

impl PrecoderOptions {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == Some(0) {
            return Err(invalid("restarts", "restarts must be at least 1"));
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return Err(invalid("tol", "tol must be finite and non-negative"));
        }
        if self.window == 0 || self.max_iterations == 0 {
            return Err(invalid(
                "max_iterations",
                "window and iteration cap must be positive",
            ));
        }
        if !(self.initial_step.is_finite() && self.initial_step > 0.0) {
            return Err(invalid("initial_step", "initial step must be positive"));
        }
        if !(self.step_decay > 0.0 && self.step_decay <= 1.0) {
            return Err(invalid("step_decay", "step decay must be in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSolution {
    pub precoder: Precoder,
    pub objective: f64,
    /// False when at least one start hit the iteration cap.
    pub converged: bool,
    /// Index of the start that produced the returned precoder.
    pub best_start: usize,
    /// Total iterations (or grid points for the brute-force search).
    pub iterations: usize,
}

fn norm_sqr(w: &[Complex64]) -> f64 {
    w.iter().map(|x| x.norm_sqr()).sum()
}

#[inline]
fn inner(g: &[Complex64], w: &[Complex64]) -> Complex64 {
    g.iter().zip(w).map(|(g, w)| g.conj() * w).sum()
}

/// Incident power `loss_j * |<g_j, w>|^2` at `device` of a single-PB channel.
pub fn received_power(real: &ChannelRealization, device: usize, w: &[Complex64]) -> f64 {
    real.loss(0, device) * inner(real.link_gains(0, device), w).norm_sqr()
}

fn check_single(real: &ChannelRealization, len: usize) -> Result<()> {
    if real.num_pbs() != 1 {
        return Err(WetError::SinglePbOnly("AA_CSI precoding"));
    }
    if len != real.antennas() {
        return Err(WetError::Dimension {
            expected: real.antennas(),
            got: len,
        });
    }
    Ok(())
}

fn objective_raw(real: &ChannelRealization, m: &HarvesterModel, w: &[Complex64]) -> f64 {
    (0..real.num_devices())
        .map(|j| m.harvest_unchecked(received_power(real, j, w)))
        .sum()
}

/// Total harvested power over all devices for precoder `w`.
pub fn precoder_objective(
    w: &Precoder,
    real: &ChannelRealization,
    m: &HarvesterModel,
) -> Result<f64> {
    check_single(real, w.weights.len())?;
    Ok(objective_raw(real, m, &w.weights))
}

/// Subgradient of the objective with respect to `(Re w, Im w)`, packed as a
/// complex vector: `sum_j slope_j * loss_j * 2 g_j <g_j, w>`.
pub fn objective_subgradient(
    w: &[Complex64],
    real: &ChannelRealization,
    m: &HarvesterModel,
) -> Result<Vec<Complex64>> {
    check_single(real, w.len())?;
    let mut grad = vec![Complex64::new(0.0, 0.0); w.len()];
    objective_and_subgradient(real, m, w, &mut grad);
    Ok(grad)
}

fn objective_and_subgradient(
    real: &ChannelRealization,
    m: &HarvesterModel,
    w: &[Complex64],
    grad: &mut [Complex64],
) -> f64 {
    objective_and_boosted_subgradient(real, m, w, grad, None).0
}

/// Like [`objective_and_subgradient`], but devices flagged in `boost` that sit
/// below sensitivity get slope `factor * efficiency` instead of 0, pulling them
/// over the threshold. Returns the true objective and a surrogate in which
/// those devices contribute `efficiency * (P_sens + factor * (p - P_sens))`,
/// which is continuous at the threshold.
fn objective_and_boosted_subgradient(
    real: &ChannelRealization,
    m: &HarvesterModel,
    w: &[Complex64],
    grad: &mut [Complex64],
    boost: Option<(&[bool], f64)>,
) -> (f64, f64) {
    grad.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
    let mut total = 0.0;
    let mut surrogate = 0.0;
    for j in 0..real.num_devices() {
        let g = real.link_gains(0, j);
        let loss = real.loss(0, j);
        let y = inner(g, w);
        let p = loss * y.norm_sqr();
        let h = m.harvest_unchecked(p);
        total += h;
        let mut s = m.slope(p);
        let factor = boost.and_then(|(b, f)| b[j].then_some(f));
        if let (0.0, Some(f), true) = (s, factor, p < m.sensitivity_w()) {
            s = f * m.efficiency();
            surrogate += m.efficiency() * (m.sensitivity_w() + f * (p - m.sensitivity_w()));
        } else {
            surrogate += h;
        }
        if s > 0.0 {
            let coef = y * (2.0 * s * loss);
            for (gr, gm) in grad.iter_mut().zip(g) {
                *gr += gm * coef;
            }
        }
    }
    (total, surrogate)
}

/// Full-power beam aligned with `device`'s channel vector.
pub fn matched_filter(real: &ChannelRealization, device: usize, power: f64) -> Result<Precoder> {
    if real.num_pbs() != 1 {
        return Err(WetError::SinglePbOnly("matched filter"));
    }
    if device >= real.num_devices() {
        return Err(WetError::DeviceIndex {
            index: device,
            count: real.num_devices(),
        });
    }
    let g = real.link_gains(0, device);
    let norm = norm_sqr(g).sqrt();
    let weights = if norm > 0.0 {
        let scale = power.sqrt() / norm;
        g.iter().map(|x| x * scale).collect()
    } else {
        let mut w = vec![Complex64::new(0.0, 0.0); g.len()];
        w[0] = Complex64::new(power.sqrt(), 0.0);
        w
    };
    Precoder::new(weights, power)
}

fn project(w: &mut [Complex64], power: f64) {
    let n = norm_sqr(w);
    if n > power {
        let s = (power / n).sqrt();
        w.iter_mut().for_each(|x| *x *= s);
    }
}

struct AscentResult {
    weights: Vec<Complex64>,
    objective: f64,
    converged: bool,
    iterations: usize,
}

fn ascend(
    real: &ChannelRealization,
    m: &HarvesterModel,
    power: f64,
    opts: &PrecoderOptions,
    start: Vec<Complex64>,
    boost: Option<(&[bool], f64)>,
    archive: &[AscentResult],
) -> AscentResult {
    let radius = power.sqrt();
    let mut w = start;
    let mut grad = vec![Complex64::new(0.0, 0.0); w.len()];
    let mut best_w = w.clone();
    let (mut best, mut best_surrogate) =
        objective_and_boosted_subgradient(real, m, &w, &mut grad, boost);
    // best surrogate after each iteration, for the sliding-window stop rule
    let mut history = Vec::with_capacity(opts.max_iterations.min(1024) + 1);
    history.push(best_surrogate);
    for k in 0..opts.max_iterations {
        let gnorm = norm_sqr(&grad).sqrt();
        if gnorm == 0.0 || !gnorm.is_finite() {
            return AscentResult {
                weights: best_w,
                objective: best,
                converged: true,
                iterations: k,
            };
        }
        let step = opts.initial_step * radius / ((k + 1) as f64).powf(opts.step_decay) / gnorm;
        for (wm, gm) in w.iter_mut().zip(&grad) {
            *wm += gm * step;
        }
        project(&mut w, power);
        let (f, sur) = objective_and_boosted_subgradient(real, m, &w, &mut grad, boost);
        if f > best {
            best = f;
            best_w.copy_from_slice(&w);
        }
        best_surrogate = best_surrogate.max(sur);
        history.push(best_surrogate);
        if k >= DEDUP_AFTER && k % DEDUP_EVERY == 0 && joins_basin(&w, best, archive, power) {
            return AscentResult {
                weights: best_w,
                objective: best,
                converged: true,
                iterations: k + 1,
            };
        }
        if history.len() > opts.window {
            let old = history[history.len() - 1 - opts.window];
            if best_surrogate - old <= opts.tol * old.abs().max(f64::MIN_POSITIVE) {
                return AscentResult {
                    weights: best_w,
                    objective: best,
                    converged: true,
                    iterations: k + 1,
                };
            }
        }
    }
    AscentResult {
        weights: best_w,
        objective: best,
        converged: false,
        iterations: opts.max_iterations,
    }
}

/// True when `w` points (up to a global phase) in the direction of a finished
/// run that already reached at least objective `current`.
fn joins_basin(w: &[Complex64], current: f64, archive: &[AscentResult], power: f64) -> bool {
    let wn = norm_sqr(w);
    if wn < 0.25 * power {
        return false;
    }
    archive.iter().any(|done| {
        done.objective >= current
            && inner(&done.weights, w).norm_sqr()
                >= (1.0 - DEDUP_ALIGNMENT) * wn * norm_sqr(&done.weights)
    })
}

/// Multi-start projected subgradient ascent over the power ball.
///
/// Starts are the matched filters to each device (in device order) followed
/// by random full-power directions drawn from `rng` until `restarts` starts
/// exist. The best start wins, ties going to the lowest start index.
pub fn optimize_precoder<R: Rng + ?Sized>(
    real: &ChannelRealization,
    m: &HarvesterModel,
    power: f64,
    opts: &PrecoderOptions,
    rng: &mut R,
) -> Result<PrecoderSolution> {
    check_single(real, real.antennas())?;
    check_finite("transmit power", power)?;
    if power <= 0.0 {
        return Err(invalid(
            "transmit_power_w",
            "transmit power must be positive",
        ));
    }
    opts.validate()?;
    let n = real.num_devices();
    let restarts = opts.restarts.unwrap_or(n + 8);
    let mut starts: Vec<Vec<Complex64>> = (0..n)
        .map(|j| matched_filter(real, j, power).map(|p| p.weights))
        .collect::<Result<_>>()?;
    for _ in 0..restarts.saturating_sub(n) {
        starts.push(random_direction(rng, real.antennas(), power));
    }

    let mut archive: Vec<AscentResult> = Vec::with_capacity(starts.len());
    let mut best_start = 0;
    let mut converged = true;
    let mut iterations = 0;
    for (idx, start) in starts.into_iter().enumerate() {
        let run = ascend(real, m, power, opts, start, None, &archive);
        converged &= run.converged;
        iterations += run.iterations;
        if run.objective
            > archive
                .get(best_start)
                .map_or(f64::NEG_INFINITY, |b| b.objective)
        {
            best_start = idx;
        }
        archive.push(run);
    }
    let mut run = archive.swap_remove(best_start);
    if opts.activation {
        loop {
            let (next, iters, ok) = activate(real, m, power, opts, &run);
            iterations += iters;
            converged &= ok;
            match next {
                Some(better) => run = better,
                None => break,
            }
        }
        let (polished, iters, ok) = polish(real, m, power, opts, run, None, BOOSTS[0]);
        run = polished;
        iterations += iters;
        converged &= ok;
    }
    Ok(PrecoderSolution {
        precoder: Precoder::new(run.weights, power)?,
        objective: run.objective,
        converged,
        best_start,
        iterations,
    })
}

/// One greedy activation round: for the below-sensitivity devices closest to
/// the threshold, re-run the ascent from the incumbent while pulling that
/// device (and every device already harvesting) above sensitivity. Returns
/// the first strict improvement of the true objective.
fn activate(
    real: &ChannelRealization,
    m: &HarvesterModel,
    power: f64,
    opts: &PrecoderOptions,
    incumbent: &AscentResult,
) -> (Option<AscentResult>, usize, bool) {
    let powers: Vec<f64> = (0..real.num_devices())
        .map(|j| received_power(real, j, &incumbent.weights))
        .collect();
    let active: Vec<bool> = powers.iter().map(|&p| p >= m.sensitivity_w()).collect();
    let mut candidates: Vec<usize> = (0..powers.len())
        .filter(|&j| !active[j] && powers[j] > 0.0)
        .collect();
    candidates.sort_by(|&a, &b| powers[b].total_cmp(&powers[a]).then(a.cmp(&b)));
    let mut iterations = 0;
    let mut converged = true;
    for &c in candidates.iter().take(ACTIVATION_CANDIDATES) {
        let mut mask = active.clone();
        mask[c] = true;
        // escalate the pull until the candidate actually crosses over
        for factor in BOOSTS {
            let run = ascend(
                real,
                m,
                power,
                opts,
                incumbent.weights.clone(),
                Some((&mask, factor)),
                &[],
            );
            iterations += run.iterations;
            converged &= run.converged;
            if received_power(real, c, &run.weights) < m.sensitivity_w()
                && run.objective <= incumbent.objective
            {
                continue;
            }
            let (run, iters, ok) = polish(real, m, power, opts, run, Some(&mask), factor);
            iterations += iters;
            converged &= ok;
            // the boosted run tracks the true objective, so compare directly
            if run.objective > incumbent.objective {
                return (Some(run), iterations, converged);
            }
            break;
        }
    }
    (None, iterations, converged)
}

/// Optima often sit exactly on some device's sensitivity edge, where the
/// plain ascent oscillates with its step size. Re-runs the boosted ascent
/// with ever smaller steps, holding every harvesting device (plus `mask`)
/// at or above sensitivity, and keeps any improvement.
fn polish(
    real: &ChannelRealization,
    m: &HarvesterModel,
    power: f64,
    opts: &PrecoderOptions,
    mut run: AscentResult,
    mask: Option<&[bool]>,
    factor: f64,
) -> (AscentResult, usize, bool) {
    let mut iterations = 0;
    let mut converged = true;
    let mut fine = opts.clone();
    fine.max_iterations = fine.max_iterations.min(POLISH_ITERATIONS);
    for _ in 0..POLISH_STAGES {
        fine.initial_step *= 0.1;
        let mut keep: Vec<bool> = (0..real.num_devices())
            .map(|j| received_power(real, j, &run.weights) >= m.sensitivity_w())
            .collect();
        if let Some(mask) = mask {
            keep.iter_mut().zip(mask).for_each(|(k, &f)| *k |= f);
        }
        let next = ascend(
            real,
            m,
            power,
            &fine,
            run.weights.clone(),
            Some((&keep, factor)),
            &[],
        );
        iterations += next.iterations;
        converged &= next.converged;
        if next.objective > run.objective {
            run = next;
        }
    }
    (run, iterations, converged)
}

fn random_direction<R: Rng + ?Sized>(rng: &mut R, antennas: usize, power: f64) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..antennas)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let n = norm_sqr(&v).sqrt();
        if n > 0.0 {
            let s = power.sqrt() / n;
            return v.into_iter().map(|x| x * s).collect();
        }
    }
}

/// Full-power two-antenna precoder `sqrt(P) * (cos a, e^{i phi} sin a)`.
pub fn two_antenna_precoder(power: f64, alpha: f64, phi: f64) -> [Complex64; 2] {
    let r = power.sqrt();
    [
        Complex64::new(r * alpha.cos(), 0.0),
        Complex64::from_polar(r * alpha.sin(), phi),
    ]
}

/// Exhaustive grid search for `M = 2`.
///
/// Every unit-norm two-antenna precoder equals `(cos a, e^{i phi} sin a)` up
/// to a global phase, which the objective ignores. The grid is
/// `a = (pi/2) i / r` for `i = 0..=r` and `phi = 2 pi k / r` for `k < r`, so
/// doubling `r` refines it. Only full-power precoders are searched since the
/// objective never decreases when all incident powers are scaled up.
pub fn brute_force_precoder(
    real: &ChannelRealization,
    m: &HarvesterModel,
    power: f64,
    grid_resolution: usize,
) -> Result<PrecoderSolution> {
    if real.num_pbs() != 1 {
        return Err(WetError::SinglePbOnly("brute-force precoder"));
    }
    if real.antennas() != 2 {
        return Err(invalid(
            "antennas",
            "brute-force precoder search requires exactly 2 antennas",
        ));
    }
    if grid_resolution < 64 {
        return Err(invalid(
            "grid_resolution",
            "grid_resolution must be at least 64",
        ));
    }
    check_finite("transmit power", power)?;
    if power <= 0.0 {
        return Err(invalid(
            "transmit_power_w",
            "transmit power must be positive",
        ));
    }
    let r = grid_resolution;
    let mut best = (f64::NEG_INFINITY, [Complex64::new(0.0, 0.0); 2]);
    for i in 0..=r {
        let alpha = FRAC_PI_2 * i as f64 / r as f64;
        for k in 0..r {
            let phi = TAU * k as f64 / r as f64;
            let w = two_antenna_precoder(power, alpha, phi);
            let f = objective_raw(real, m, &w);
            if f > best.0 {
                best = (f, w);
            }
        }
    }
    Ok(PrecoderSolution {
        precoder: Precoder::new(best.1.to_vec(), power)?,
        objective: best.0,
        converged: true,
        best_start: 0,
        iterations: (r + 1) * r,
    })
}
