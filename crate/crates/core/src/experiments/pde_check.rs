//! Finite-difference `H` against its closed form, and `H(y0, 0)` against a
//! direct Monte Carlo estimate of `E F(y(T))`.

use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use super::report::{ensure_dir, fmt_f64, write_csv};
use crate::claims::{solve_h, ClaimSpec, DiffusionSpec, HSolution, HSolverSpec, Measure, PayoffSpec, SpaceTimeGrid};
use crate::error::{Error, Result};
use crate::simulator::{Estimate, PathRng};

/// `(space_nodes, time_steps)` pairs used when none are given.
pub const DEFAULT_RESOLUTIONS: [(usize, usize); 3] = [(50, 50), (100, 100), (200, 200)];
/// Errors are measured where `|x - y0| ≤ WINDOW_SDS · β √T`; the Dirichlet
/// data at the far edges of the solved grid is only approximate.
pub const WINDOW_SDS: f64 = 3.0;
pub const MC_SAMPLES: usize = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub struct PdeCheckRow {
    pub space_nodes: usize,
    pub time_steps: usize,
    pub max_err_h: f64,
    pub l2_err_h: f64,
    pub max_err_dh: f64,
    pub l2_err_dh: f64,
    /// Largest error on the terminal slice.
    pub terminal_err: f64,
    /// Finite-difference `H(y0, 0)`.
    pub h_at_origin: f64,
}

pub const PDE_HEADER: [&str; 8] = [
    "space_nodes",
    "time_steps",
    "max_err_h",
    "l2_err_h",
    "max_err_dh",
    "l2_err_dh",
    "terminal_err",
    "h_at_origin",
];

#[derive(Clone, Debug, PartialEq)]
pub struct PdeCheckOutcome {
    pub experiment_id: String,
    pub rows: Vec<PdeCheckRow>,
    /// Closed-form `H(y0, 0)`.
    pub h_exact: f64,
    /// Monte Carlo `E F(y(T))` under the claim's measure.
    pub mc: Estimate,
}

impl PdeCheckOutcome {
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        ensure_dir(dir)?;
        write_csv(
            &dir.join("pde_check.csv"),
            &PDE_HEADER,
            self.rows.iter().map(|r| {
                vec![
                    r.space_nodes.to_string(),
                    r.time_steps.to_string(),
                    fmt_f64(r.max_err_h),
                    fmt_f64(r.l2_err_h),
                    fmt_f64(r.max_err_dh),
                    fmt_f64(r.l2_err_dh),
                    fmt_f64(r.terminal_err),
                    fmt_f64(r.h_at_origin),
                ]
            }),
        )
    }

    pub fn summary(&self) -> String {
        let mut s = format!("pde check for {}\n", self.experiment_id);
        for r in &self.rows {
            s += &format!(
                "  {}x{}: max |H err| {:.3e}, L2 {:.3e}; max |H_x err| {:.3e}, L2 {:.3e}; terminal {:.1e}\n",
                r.space_nodes, r.time_steps, r.max_err_h, r.l2_err_h, r.max_err_dh, r.l2_err_dh, r.terminal_err
            );
        }
        s += &format!(
            "  H(y0,0) exact {:.6}, Monte Carlo E F(y(T)) = {:.6} +/- {:.6} ({} samples)\n",
            self.h_exact, self.mc.mean, self.mc.se, MC_SAMPLES
        );
        s
    }
}

/// `E F(y(T))` from `samples` Euler paths with `steps` steps; under the
/// Girsanov measure the drift is dropped.
pub fn terminal_expectation_mc(
    payoff: &PayoffSpec,
    diffusion: &DiffusionSpec,
    measure: Measure,
    horizon: f64,
    samples: usize,
    steps: usize,
    seed: u64,
) -> Estimate {
    let dt = horizon / steps as f64;
    let sq = dt.sqrt();
    let values: Vec<f64> = (0..samples)
        .map(|i| {
            let mut rng = PathRng::new(seed, i as u64);
            let mut y = diffusion.y0;
            for _ in 0..steps {
                let drift = match measure {
                    Measure::Physical => diffusion.drift_at(y),
                    Measure::GirsanovQ => 0.0,
                };
                y += drift * dt + diffusion.vol_at(y) * sq * rng.normal();
            }
            payoff.eval(y)
        })
        .collect();
    Estimate::from_samples(&values)
}

/// Errors of the finite-difference `H` and `∂H/∂x` at each resolution.
/// Refuses claims without a closed-form reference.
pub fn pde_check(cfg: &ExperimentConfig, resolutions: &[(usize, usize)]) -> Result<PdeCheckOutcome> {
    cfg.validate()?;
    let ClaimSpec::MarkovTerminal1d {
        payoff,
        diffusion,
        solver,
        measure,
    } = &cfg.claim
    else {
        return Err(Error::invalid("pde-check needs a markov claim"));
    };
    if let PayoffSpec::Tabulated { .. } = payoff {
        return Err(Error::invalid(
            "tabulated payoffs have no analytic reference; compare H(y0, 0) with a Monte Carlo estimate of E F(y(T)) instead",
        ));
    }
    let horizon = cfg.system.horizon;
    let exact = HSolution::analytic(payoff, diffusion, *measure, horizon).ok_or_else(|| {
        Error::invalid(
            "no analytic reference: H has a closed form only for constant volatility without effective drift",
        )
    })?;
    let gamma = match solver {
        HSolverSpec::FiniteDifference { gamma, .. } => *gamma,
        HSolverSpec::Analytic => 2.0,
    };
    let vol = diffusion
        .vol
        .constant_value()
        .expect("analytic reference implies constant volatility");
    let half = WINDOW_SDS * vol.abs() * horizon.sqrt();
    let mut rows = Vec::with_capacity(resolutions.len());
    for &(nx, nt) in resolutions {
        let grid = SpaceTimeGrid::covering(diffusion, *measure, horizon, nx, nt, gamma)?;
        let sol = solve_h(payoff, diffusion, &grid, *measure)?;
        let xs = grid.xs();
        let (mut max_h, mut max_d, mut sum_h, mut sum_d, mut count) = (0.0f64, 0.0f64, 0.0, 0.0, 0usize);
        let mut terminal: f64 = 0.0;
        for (k, &t) in grid.times.iter().enumerate() {
            let (vals, ders) = sol.slice(k).expect("grid solution");
            for (i, &x) in xs.iter().enumerate() {
                if (x - diffusion.y0).abs() > half {
                    continue;
                }
                let eh = (vals[i] - exact.value(x, t)?).abs();
                let ed = (ders[i] - exact.derivative(x, t)?).abs();
                if k + 1 == grid.times.len() {
                    terminal = terminal.max(eh);
                }
                max_h = max_h.max(eh);
                max_d = max_d.max(ed);
                sum_h += eh * eh;
                sum_d += ed * ed;
                count += 1;
            }
        }
        rows.push(PdeCheckRow {
            space_nodes: nx,
            time_steps: nt,
            max_err_h: max_h,
            l2_err_h: (sum_h / count.max(1) as f64).sqrt(),
            max_err_dh: max_d,
            l2_err_dh: (sum_d / count.max(1) as f64).sqrt(),
            terminal_err: terminal,
            h_at_origin: sol.value(diffusion.y0, 0.0)?,
        });
    }
    let steps =
        if diffusion.vol.constant_value().is_some() && (*measure == Measure::GirsanovQ || diffusion.has_zero_drift()) {
            1
        } else {
            200
        };
    Ok(PdeCheckOutcome {
        experiment_id: cfg.id.clone(),
        rows,
        h_exact: exact.value(diffusion.y0, 0.0)?,
        mc: terminal_expectation_mc(payoff, diffusion, *measure, horizon, MC_SAMPLES, steps, cfg.sim.seed),
    })
}
