//! Parallel path ensembles with worker-count-independent results.
//!
//! Paths are simulated on a dedicated rayon pool and collected in path order;
//! all moments are then pairwise-summed sequentially, so the floating-point
//! result depends only on `(seed, n_paths, grid)`.

use rayon::prelude::*;
use serde::Serialize;

use super::grid::TimeGrid;
use super::path::{PerturbedResult, SimResult, Simulator};
use super::perturb::{PerturbationProfile, StepPerturbation};
use super::rng::PathRng;
use crate::claims::Measure;
use crate::controller::ControlLaw;
use crate::error::{Error, Result};
use crate::quadrature::pairwise_sum;

pub const MIN_PATHS: usize = 100;
/// Largest tolerated fraction of aborted paths.
pub const MAX_ABORT_FRACTION: f64 = 1e-3;

/// Sample mean and its standard error `stdev / sqrt(n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                se: f64::NAN,
            };
        }
        let mean = pairwise_sum(xs) / n as f64;
        if n == 1 {
            return Self { mean, se: 0.0 };
        }
        let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = pairwise_sum(&dev) / (n - 1) as f64;
        Self {
            mean,
            se: (var / n as f64).sqrt(),
        }
    }

    /// `|mean - target| ≤ k·se`, with `se = 0` requiring exact agreement.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.se
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McReport {
    pub n_paths: usize,
    pub n_aborted: usize,
    pub gap_sq: Estimate,
    pub cost: Estimate,
    pub closed_form_cost: f64,
    /// `E(∫|û| dt)²`
    pub abs_control_sq: Estimate,
    /// `E∫ g|û|² dt`
    pub weighted_control_sq: Estimate,
    pub measure: Measure,
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))
}

/// Simulates `n_paths` independent paths; path `i` uses stream `i` under `seed`.
/// `workers = 0` picks the machine default.
pub fn run_paths<T: Send>(
    n_paths: usize,
    seed: u64,
    workers: usize,
    f: impl Fn(&mut PathRng) -> Result<T> + Sync,
) -> Result<Vec<Result<T>>> {
    let pool = pool(workers)?;
    Ok(pool.install(|| {
        (0..n_paths)
            .into_par_iter()
            .map(|i| {
                let mut rng = PathRng::new(seed, i as u64);
                f(&mut rng).map_err(|e| match e {
                    Error::PathAbort { reason, .. } => Error::PathAbort { path: i as u64, reason },
                    other => other,
                })
            })
            .collect()
    }))
}

/// Splits outcomes into successes and aborts; fails when aborts exceed the budget
/// or a non-abort error occurred.
fn partition<T>(n_paths: usize, outcomes: Vec<Result<T>>) -> Result<(Vec<T>, usize)> {
    let mut ok = Vec::with_capacity(n_paths);
    let mut aborted = 0;
    let mut first = None;
    for o in outcomes {
        match o {
            Ok(v) => ok.push(v),
            Err(Error::PathAbort { path, reason }) => {
                aborted += 1;
                first.get_or_insert((path, reason));
            }
            Err(e) => return Err(e),
        }
    }
    if aborted as f64 > MAX_ABORT_FRACTION * n_paths as f64 {
        let (path, reason) = first.expect("at least one abort");
        return Err(Error::PathAbort {
            path,
            reason: format!("{aborted} of {n_paths} paths aborted; first: {reason}"),
        });
    }
    Ok((ok, aborted))
}

fn check_paths(n_paths: usize) -> Result<()> {
    if n_paths < MIN_PATHS {
        return Err(Error::invalid(format!(
            "need at least {MIN_PATHS} paths, got {n_paths}"
        )));
    }
    Ok(())
}

fn collect<T>(rows: &[T], f: impl Fn(&T) -> f64) -> Vec<f64> {
    rows.iter().map(f).collect()
}

pub fn monte_carlo(law: &ControlLaw, grid: &TimeGrid, n_paths: usize, seed: u64, workers: usize) -> Result<McReport> {
    check_paths(n_paths)?;
    let sim = Simulator::new(law, grid)?;
    let outcomes = run_paths(n_paths, seed, workers, |rng| sim.simulate_path(rng))?;
    let (rows, n_aborted): (Vec<SimResult>, usize) = partition(n_paths, outcomes)?;
    Ok(McReport {
        n_paths,
        n_aborted,
        gap_sq: Estimate::from_samples(&collect(&rows, |r| r.gap_sq)),
        cost: Estimate::from_samples(&collect(&rows, |r| r.cost)),
        closed_form_cost: law.optimal_cost()?.total,
        abs_control_sq: Estimate::from_samples(&collect(&rows, |r| r.abs_control_sq)),
        weighted_control_sq: Estimate::from_samples(&collect(&rows, |r| r.weighted_control_sq)),
        measure: law.claim().measure(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbationReport {
    pub n_paths: usize,
    pub cost_opt: Estimate,
    pub cost_perturbed: Estimate,
    /// Paired per-path `cost' - cost`.
    pub increase: Estimate,
    /// `∫ hᵀ Q h dt`
    pub expected_increase: f64,
    /// `2∫ hᵀ Q μ dt`, zero in expectation
    pub cross_term: Estimate,
    pub gap_sq_opt: Estimate,
    pub gap_sq_perturbed: Estimate,
    /// Paired per-path `|x'(T) - f|² - |x(T) - f|²`.
    pub gap_sq_shift: Estimate,
}

pub fn perturbation_test(
    law: &ControlLaw,
    grid: &TimeGrid,
    profile: &PerturbationProfile,
    n_paths: usize,
    seed: u64,
    workers: usize,
) -> Result<PerturbationReport> {
    check_paths(n_paths)?;
    let sim = Simulator::new(law, grid)?;
    let pert = StepPerturbation::new(&sim, profile)?;
    let outcomes = run_paths(n_paths, seed, workers, |rng| sim.simulate_perturbed(rng, &pert))?;
    let (rows, _): (Vec<PerturbedResult>, usize) = partition(n_paths, outcomes)?;
    Ok(PerturbationReport {
        n_paths,
        cost_opt: Estimate::from_samples(&collect(&rows, |r| r.optimal.cost)),
        cost_perturbed: Estimate::from_samples(&collect(&rows, |r| r.perturbed.cost)),
        increase: Estimate::from_samples(&collect(&rows, |r| r.perturbed.cost - r.optimal.cost)),
        expected_increase: profile.quadratic_cost(law)?,
        cross_term: Estimate::from_samples(&collect(&rows, |r| r.cross_term)),
        gap_sq_opt: Estimate::from_samples(&collect(&rows, |r| r.optimal.gap_sq)),
        gap_sq_perturbed: Estimate::from_samples(&collect(&rows, |r| r.perturbed.gap_sq)),
        gap_sq_shift: Estimate::from_samples(&collect(&rows, |r| r.perturbed.gap_sq - r.optimal.gap_sq)),
    })
}
