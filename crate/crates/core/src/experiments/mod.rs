//! Experiment orchestration: configurations, presets, Monte Carlo runs,
//! convergence studies, PDE checks and closed-form cost tables.

mod config;
mod pde_check;
mod presets;
mod report;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{
    emit_config, parse_config, Checks, ExperimentConfig, GMatrixConfig, OutputConfig, SimConfig, SystemConfig,
    WeightConfig, WeightFormKind,
};
pub use pde_check::{pde_check, terminal_expectation_mc, PdeCheckOutcome, PdeCheckRow, DEFAULT_RESOLUTIONS};
pub use presets::{preset, preset_description, DEFAULT_SEED, PRESET_NAMES};
pub use report::{fmt_f64, ReportRow, REPORT_HEADER};

use crate::error::{Error, Result};
use crate::simulator::{monte_carlo, McReport};
use report::{ensure_dir, write_csv, write_text};

/// Monte Carlo rows plus every threshold violation found.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub rows: Vec<ReportRow>,
    pub reports: Vec<McReport>,
    /// Seconds per row; kept out of `report.csv` so that it stays reproducible.
    pub wall_times: Vec<f64>,
    pub failures: Vec<String>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn summary(&self, cfg: &ExperimentConfig) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment {}", cfg.id);
        for ((row, rep), secs) in self.rows.iter().zip(&self.reports).zip(&self.wall_times) {
            let _ = writeln!(
                s,
                "N = {} (gamma {}), {} paths, seed {}, {} aborted, wall time {:.3} s",
                row.grid_n, row.gamma, row.paths, row.seed, row.aborted, secs
            );
            let _ = writeln!(
                s,
                "  mean |x(T) - f|^2  = {:.6e} +/- {:.2e}",
                rep.gap_sq.mean, rep.gap_sq.se
            );
            let _ = writeln!(s, "  mean cost          = {:.6} +/- {:.6}", rep.cost.mean, rep.cost.se);
            let _ = writeln!(
                s,
                "  closed-form cost   = {:.6} (optimal under {})",
                rep.closed_form_cost,
                rep.measure.label()
            );
            let _ = writeln!(
                s,
                "  E(int |u| dt)^2    = {:.6} +/- {:.6}",
                rep.abs_control_sq.mean, rep.abs_control_sq.se
            );
            let _ = writeln!(
                s,
                "  E int g|u|^2 dt    = {:.6} +/- {:.6}",
                rep.weighted_control_sq.mean, rep.weighted_control_sq.se
            );
            if let Some(r) = row.gap_ratio {
                let _ = writeln!(s, "  gap ratio vs previous N = {r:.4}");
            }
        }
        if self.failures.is_empty() {
            let _ = writeln!(s, "all configured checks passed");
        } else {
            let _ = writeln!(s, "{} check(s) failed:", self.failures.len());
            for f in &self.failures {
                let _ = writeln!(s, "  - {f}");
            }
        }
        s
    }

    /// Writes `report.csv` and `summary.txt` (as selected by the config) into `dir`.
    pub fn write(&self, cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
        ensure_dir(dir)?;
        let mut written = Vec::new();
        if cfg.outputs.formats.iter().any(|f| f == "csv") {
            written.push(write_csv(
                &dir.join("report.csv"),
                &REPORT_HEADER,
                self.rows.iter().map(ReportRow::fields),
            )?);
        }
        if cfg.outputs.formats.iter().any(|f| f == "summary") {
            written.push(write_text(&dir.join("summary.txt"), &self.summary(cfg))?);
        }
        Ok(written)
    }
}

fn cost_failures(cfg: &ExperimentConfig, rep: &McReport, grid_n: usize) -> Vec<String> {
    let mut out = Vec::new();
    let diff = (rep.cost.mean - rep.closed_form_cost).abs();
    if let Some(k) = cfg.checks.cost_se_multiple {
        if diff > k * rep.cost.se {
            out.push(format!(
                "N={grid_n}: mean cost {:.6} is {:.2} standard errors from the closed form {:.6} (allowed {k})",
                rep.cost.mean,
                diff / rep.cost.se,
                rep.closed_form_cost
            ));
        }
    }
    if let Some(tol) = cfg.checks.cost_rel_tol {
        if diff > tol * rep.closed_form_cost.abs() {
            out.push(format!(
                "N={grid_n}: mean cost {:.6} differs from the closed form {:.6} by more than {}%",
                rep.cost.mean,
                rep.closed_form_cost,
                tol * 100.0
            ));
        }
    }
    out
}

fn gap_failure(cfg: &ExperimentConfig, rep: &McReport, grid_n: usize) -> Option<String> {
    let limit = cfg.checks.max_mean_gap_sq?;
    (rep.gap_sq.mean > limit).then(|| {
        format!(
            "N={grid_n}: mean |x(T) - f|^2 = {:.3e} exceeds {limit:e}",
            rep.gap_sq.mean
        )
    })
}

fn simulate(cfg: &ExperimentConfig, grid_n: usize) -> Result<(McReport, f64)> {
    let law = cfg.build_law()?;
    let grid = cfg.build_grid(grid_n)?;
    let start = Instant::now();
    let rep = monte_carlo(&law, &grid, cfg.sim.paths, cfg.sim.seed, cfg.sim.workers)?;
    Ok((rep, start.elapsed().as_secs_f64()))
}

/// A single Monte Carlo run at `sim.grid_n`, checked against every configured threshold.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let n = cfg.sim.grid_n;
    let (rep, secs) = simulate(cfg, n)?;
    let mut failures = cost_failures(cfg, &rep, n);
    failures.extend(gap_failure(cfg, &rep, n));
    Ok(RunOutcome {
        rows: vec![ReportRow::new(&cfg.id, n, cfg.sim.gamma, cfg.sim.seed, &rep)],
        reports: vec![rep],
        wall_times: vec![secs],
        failures,
    })
}

/// One run per step count, all with the configured seed. The gap threshold
/// applies to the finest grid, the ratio threshold to every consecutive pair.
pub fn converge(cfg: &ExperimentConfig, n_list: &[usize]) -> Result<RunOutcome> {
    cfg.validate()?;
    if n_list.is_empty() || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("step counts must be non-empty and strictly increasing"));
    }
    let mut out = RunOutcome {
        rows: Vec::new(),
        reports: Vec::new(),
        wall_times: Vec::new(),
        failures: Vec::new(),
    };
    for &n in n_list {
        let (rep, secs) = simulate(cfg, n)?;
        let mut row = ReportRow::new(&cfg.id, n, cfg.sim.gamma, cfg.sim.seed, &rep);
        if let Some(prev) = out.rows.last() {
            let ratio = rep.gap_sq.mean / prev.mean_gap_sq;
            row.gap_ratio = Some(ratio);
            if let Some(max) = cfg.checks.max_gap_ratio {
                if !(ratio <= max) {
                    out.failures.push(format!(
                        "mean gap ratio N={} -> N={n} is {ratio:.4}, above {max}",
                        prev.grid_n
                    ));
                }
            }
        }
        out.rows.push(row);
        out.reports.push(rep);
        out.wall_times.push(secs);
    }
    let last = out.reports.last().expect("non-empty");
    out.failures.extend(gap_failure(cfg, last, *n_list.last().unwrap()));
    Ok(out)
}

/// Closed-form optimal cost split into its two terms, plus the same total
/// computed through `∫ tr(Q E[μμᵀ]) dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct CostRow {
    pub experiment_id: String,
    pub mean_term: f64,
    pub martingale_term: f64,
    pub total: f64,
    pub total_via_mu: f64,
    pub measure: String,
}

pub const COST_HEADER: [&str; 6] = [
    "experiment_id",
    "mean_term",
    "martingale_term",
    "total",
    "total_via_mu",
    "measure",
];

impl CostRow {
    pub fn fields(&self) -> Vec<String> {
        vec![
            self.experiment_id.clone(),
            fmt_f64(self.mean_term),
            fmt_f64(self.martingale_term),
            fmt_f64(self.total),
            fmt_f64(self.total_via_mu),
            self.measure.clone(),
        ]
    }
}

pub fn cost_table(configs: &[ExperimentConfig]) -> Result<Vec<CostRow>> {
    configs
        .iter()
        .map(|cfg| {
            let law = cfg.build_law()?;
            let moments = law.claim().second_moment().clone();
            let c = law.optimal_cost()?;
            Ok(CostRow {
                experiment_id: cfg.id.clone(),
                mean_term: c.mean_term,
                martingale_term: c.martingale_term,
                total: c.total,
                total_via_mu: law.optimal_cost_via_mu_variance(|t| moments.at(t))?,
                measure: c.measure.label().into(),
            })
        })
        .collect()
}

pub fn write_cost_table(rows: &[CostRow], dir: &Path) -> Result<PathBuf> {
    ensure_dir(dir)?;
    write_csv(
        &dir.join("cost_table.csv"),
        &COST_HEADER,
        rows.iter().map(CostRow::fields),
    )
}
