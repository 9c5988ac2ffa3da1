//! Experiment subcommands. Each writes a CSV table to the requested path.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wetsim_core::montecarlo::{
    compare_correlation, heatmap_aeo, sample_uniform_disk, sweep_devices,
};
use wetsim_core::precoder::{brute_force_precoder, optimize_precoder};
use wetsim_core::{HeatmapGrid, LinkBudget, Point2D};

use crate::config::ExperimentConfig;
use crate::svg::render_heatmap;

/// Fixed-width scientific notation with 9 significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.8e}")
}

fn write_output(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

/// AHE and AEO against the number of devices, one row per (N, strategy).
pub fn sweep_csv(cfg: &ExperimentConfig) -> Result<String> {
    let rows = sweep_devices(&cfg.scenario, &cfg.n_values, &cfg.strategies)?;
    let mut out = String::from("n,strategy,ahe_j,ahe_se,aeo,aeo_se\n");
    for r in &rows {
        let m = &r.metrics;
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.n,
            m.strategy,
            fmt_num(m.ahe),
            fmt_num(m.ahe_se),
            fmt_num(m.aeo),
            fmt_num(m.aeo_se)
        )?;
    }
    Ok(out)
}

pub fn cmd_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let csv = sweep_csv(cfg)?;
    write_output(out, &csv)
}

/// Independent versus synchronized signals, one row per (M, strategy).
pub fn correlation_csv(cfg: &ExperimentConfig) -> Result<String> {
    let rows = compare_correlation(&cfg.scenario, &cfg.m_values, &cfg.strategies)?;
    let mut out = String::from(
        "m,strategy,ahe_ind,ahe_ind_se,ahe_sync,ahe_sync_se,ahe_gain,ahe_gain_se,\
         aeo_ind,aeo_ind_se,aeo_sync,aeo_sync_se,aeo_gain,aeo_gain_se\n",
    );
    for r in &rows {
        let (i, s) = (&r.independent, &r.sync);
        let cols = [
            i.ahe,
            i.ahe_se,
            s.ahe,
            s.ahe_se,
            r.ahe_gain,
            r.ahe_gain_se,
            i.aeo,
            i.aeo_se,
            s.aeo,
            s.aeo_se,
            r.aeo_gain,
            r.aeo_gain_se,
        ];
        write!(out, "{},{}", r.antennas, r.strategy())?;
        for c in cols {
            write!(out, ",{}", fmt_num(c))?;
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn cmd_correlation(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let csv = correlation_csv(cfg)?;
    write_output(out, &csv)
}

pub fn heatmap_csv(grid: &HeatmapGrid) -> String {
    let mut out = String::from("x,y,aeo\n");
    for (p, v) in grid.probes().iter().zip(&grid.aeo) {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt_num(p.x),
            fmt_num(p.y),
            fmt_num(*v)
        ));
    }
    out
}

/// The SVG is written next to the CSV with an `.svg` extension.
pub fn svg_path(out: &Path) -> PathBuf {
    out.with_extension("svg")
}

pub fn cmd_heatmap(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let grid = heatmap_aeo(&cfg.scenario, &cfg.heatmap)?;
    write_output(out, &heatmap_csv(&grid))?;
    write_output(&svg_path(out), &render_heatmap(&grid))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub instance: usize,
    pub n: usize,
    pub optimized: f64,
    pub grid: f64,
    /// `(grid - optimized) / grid`, clamped at zero; zero when both vanish.
    pub gap: f64,
    pub converged: bool,
    /// Closed-form optimum for a single device: matched filter at full power.
    pub analytic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub rows: Vec<OracleRow>,
    pub max_gap: f64,
    pub passed: bool,
}

/// Compares the multi-start precoder against an exhaustive grid on random
/// two-antenna single-PB instances.
pub fn run_oracle(cfg: &ExperimentConfig) -> Result<OracleReport> {
    let s = &cfg.scenario;
    let o = &cfg.oracle;
    let pb = [Point2D::origin()];
    let mut rows = Vec::with_capacity(o.instances);
    for i in 0..o.instances {
        let n = o.n_values[i % o.n_values.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
        rng.set_stream(i as u64);
        let devices = sample_uniform_disk(&mut rng, o.radius_m, n)?;
        let real =
            LinkBudget::new(&pb, &devices, &s.path_loss, &s.rician)?.realize(&mut rng, 2, s.fading);
        let sol = optimize_precoder(
            &real,
            &s.harvester,
            s.transmit_power_w,
            &s.precoder,
            &mut rng,
        )?;
        let grid =
            brute_force_precoder(&real, &s.harvester, s.transmit_power_w, o.grid_resolution)?;
        let gap = if grid.objective > 0.0 {
            ((grid.objective - sol.objective) / grid.objective).max(0.0)
        } else {
            0.0
        };
        let analytic = (n == 1).then(|| {
            let g2: f64 = real.link_gains(0, 0).iter().map(|g| g.norm_sqr()).sum();
            s.harvester
                .harvest_unchecked(s.transmit_power_w * real.loss(0, 0) * g2)
        });
        rows.push(OracleRow {
            instance: i,
            n,
            optimized: sol.objective,
            grid: grid.objective,
            gap,
            converged: sol.converged,
            analytic,
        });
    }
    let max_gap = rows.iter().map(|r| r.gap).fold(0.0, f64::max);
    Ok(OracleReport {
        rows,
        max_gap,
        passed: max_gap <= o.max_gap,
    })
}

pub fn oracle_csv(report: &OracleReport) -> String {
    let mut out = String::from("instance,n,optimized,grid,relative_gap,converged,analytic\n");
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.instance,
            r.n,
            fmt_num(r.optimized),
            fmt_num(r.grid),
            fmt_num(r.gap),
            r.converged,
            r.analytic.map(fmt_num).unwrap_or_default()
        ));
    }
    out
}

/// Writes the per-instance table and fails when any gap exceeds the tolerance.
pub fn cmd_oracle(cfg: &ExperimentConfig, out: &Path) -> Result<OracleReport> {
    let report = run_oracle(cfg)?;
    write_output(out, &oracle_csv(&report))?;
    if !report.passed {
        anyhow::bail!(
            "precoder gap {:.3}% exceeds tolerance {:.3}%",
            100.0 * report.max_gap,
            100.0 * cfg.oracle.max_gap
        );
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_num(5.547189361e-5), "5.54718936e-5");
        assert_eq!(fmt_num(0.0), "0.00000000e0");
        assert_eq!(fmt_num(1.0), "1.00000000e0");
    }

    #[test]
    fn svg_next_to_csv() {
        assert_eq!(
            svg_path(Path::new("out/map.csv")),
            PathBuf::from("out/map.svg")
        );
        assert_eq!(svg_path(Path::new("map")), PathBuf::from("map.svg"));
    }
}
