//! Terminal claims `f` together with their mean and martingale
//! representation kernel `k_f`, so that `f = E f + ∫_0^T k_f dw`.
//!
//! Two families are supported: linear functionals of the terminal Brownian
//! position, and Markov claims `f = F(y(T))` of a scalar diffusion, whose
//! kernel is `∂H/∂x · β` with `H` the solution of the backward equation.

mod diffusion;
mod payoff;
mod pde;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use diffusion::{Coefficient, DiffusionSpec};
pub use payoff::PayoffSpec;
pub use pde::{solve_h, HMode, HSolution, Measure, SpaceTimeGrid, TimeLocator, COVERAGE_SDS};

use crate::error::{Error, Result};

/// How `H` is obtained for a Markov claim.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum HSolverSpec {
    Analytic,
    FiniteDifference {
        space_nodes: usize,
        time_steps: usize,
        gamma: f64,
    },
}

/// Serializable description of a terminal claim.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum ClaimSpec {
    /// `f = c w(T) + d_0` with `c` an `n×d` matrix.
    LinearTerminal { coeff: Vec<Vec<f64>>, offset: Vec<f64> },
    /// `f = F(y(T))`, scalar.
    MarkovTerminal1d {
        payoff: PayoffSpec,
        diffusion: DiffusionSpec,
        solver: HSolverSpec,
        #[serde(default)]
        measure: Measure,
    },
}

impl ClaimSpec {
    /// `f = w(T)` in one dimension.
    pub fn scalar_brownian() -> Self {
        ClaimSpec::LinearTerminal {
            coeff: vec![vec![1.0]],
            offset: vec![0.0],
        }
    }

    /// `f = w(T) + (0.5, -0.5)` with a two-dimensional Brownian motion.
    pub fn brownian_2d() -> Self {
        ClaimSpec::LinearTerminal {
            coeff: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            offset: vec![0.5, -0.5],
        }
    }

    /// A deterministic claim `f = d_0` in `n = offset.len()` dimensions.
    pub fn deterministic(offset: Vec<f64>) -> Self {
        let n = offset.len();
        ClaimSpec::LinearTerminal {
            coeff: vec![vec![0.0]; n],
            offset,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ClaimSpec::LinearTerminal { offset, .. } => offset.len(),
            ClaimSpec::MarkovTerminal1d { .. } => 1,
        }
    }

    /// Every violated constraint, as human-readable messages.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            ClaimSpec::LinearTerminal { coeff, offset } => {
                if offset.is_empty() {
                    out.push("linear claim needs a non-empty offset".into());
                }
                if coeff.len() != offset.len() {
                    out.push(format!(
                        "linear claim coefficient has {} rows but offset has {} entries",
                        coeff.len(),
                        offset.len()
                    ));
                }
                let d = coeff.first().map_or(0, Vec::len);
                if d == 0 || coeff.iter().any(|r| r.len() != d) {
                    out.push("linear claim coefficient rows must share a positive length".into());
                }
                if coeff.iter().flatten().chain(offset).any(|v| !v.is_finite()) {
                    out.push("linear claim has non-finite entries".into());
                }
            }
            ClaimSpec::MarkovTerminal1d {
                payoff,
                diffusion,
                solver,
                measure,
            } => {
                if let Err(e) = payoff.validate() {
                    out.push(e.to_string());
                }
                if let Err(e) = diffusion.validate() {
                    out.push(e.to_string());
                }
                match solver {
                    HSolverSpec::Analytic => {
                        let mut probe = *diffusion;
                        if *measure == Measure::GirsanovQ {
                            probe.drift = Coefficient::Constant { value: 0.0 };
                        }
                        if !payoff.has_closed_form() || probe.vol.constant_value().is_none() || !probe.has_zero_drift()
                        {
                            out.push(
                                "analytic H requires a square, cosine or linear payoff with constant volatility and no effective drift"
                                    .into(),
                            );
                        }
                    }
                    HSolverSpec::FiniteDifference {
                        space_nodes,
                        time_steps,
                        gamma,
                    } => {
                        if *space_nodes < 5 || *time_steps < 1 || !(*gamma >= 1.0) {
                            out.push(
                                "finite-difference solver needs >= 5 space nodes, >= 1 time step, gamma >= 1".into(),
                            );
                        }
                    }
                }
            }
        }
        out
    }
}

/// Second moment `E[k_f(t) k_f(t)ᵀ]` as a function of time.
#[derive(Clone, Debug)]
pub enum SecondMoment {
    Constant(DMatrix<f64>),
    /// Closed form for driftless constant-volatility Markov claims.
    Markov {
        payoff: PayoffSpec,
        vol: f64,
        y0: f64,
        horizon: f64,
    },
    /// Monte Carlo estimates on a time grid, linearly interpolated.
    Table {
        times: Vec<f64>,
        values: Vec<f64>,
    },
}

impl SecondMoment {
    pub fn at(&self, t: f64) -> DMatrix<f64> {
        match self {
            SecondMoment::Constant(m) => m.clone(),
            SecondMoment::Markov {
                payoff,
                vol,
                y0,
                horizon,
            } => {
                let s2 = vol * vol;
                let v = match payoff {
                    PayoffSpec::Square => 4.0 * s2 * (y0 * y0 + s2 * t),
                    PayoffSpec::Cosine => {
                        0.5 * s2 * (-s2 * (horizon - t)).exp() * (1.0 - (2.0 * y0).cos() * (-2.0 * s2 * t).exp())
                    }
                    PayoffSpec::Linear => s2,
                    PayoffSpec::Tabulated { .. } => unreachable!("tabulated payoffs use a Monte Carlo table"),
                };
                DMatrix::from_element(1, 1, v)
            }
            SecondMoment::Table { times, values } => {
                let last = times.len() - 1;
                let v = if t <= times[0] {
                    values[0]
                } else if t >= times[last] {
                    values[last]
                } else {
                    let j = times.partition_point(|&s| s <= t) - 1;
                    let w = (t - times[j]) / (times[j + 1] - times[j]);
                    values[j] + w * (values[j + 1] - values[j])
                };
                DMatrix::from_element(1, 1, v)
            }
        }
    }

    pub fn is_analytic(&self) -> bool {
        !matches!(self, SecondMoment::Table { .. })
    }
}

/// Monte Carlo settings for second-moment tables and kernel diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentSampling {
    pub samples: usize,
    pub time_nodes: usize,
    pub substeps: usize,
    pub seed: u64,
}

impl Default for MomentSampling {
    fn default() -> Self {
        Self {
            samples: 100_000,
            time_nodes: 64,
            substeps: 4,
            seed: 0x005e_ed0f_c1a1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LinearClaim {
    pub coeff: DMatrix<f64>,
    pub offset: DVector<f64>,
}

#[derive(Clone, Debug)]
pub struct MarkovClaim {
    pub payoff: PayoffSpec,
    pub diffusion: DiffusionSpec,
    pub h: HSolution,
    pub measure: Measure,
}

impl MarkovClaim {
    /// `k_f = ∂H/∂x · β` at state `y`.
    pub fn kernel(&self, y: f64, loc: TimeLocator) -> Result<f64> {
        Ok(self.h.derivative_located(y, loc)? * self.diffusion.vol_at(y))
    }
}

#[derive(Clone, Debug)]
pub enum ClaimKind {
    Linear(LinearClaim),
    Markov(MarkovClaim),
}

/// A claim ready for simulation: kernel, mean and second moments resolved.
#[derive(Clone, Debug)]
pub struct Claim {
    spec: ClaimSpec,
    horizon: f64,
    kind: ClaimKind,
    moments: SecondMoment,
}

impl Claim {
    pub fn build(spec: &ClaimSpec, horizon: f64) -> Result<Self> {
        Self::build_with(spec, horizon, MomentSampling::default())
    }

    pub fn build_with(spec: &ClaimSpec, horizon: f64, sampling: MomentSampling) -> Result<Self> {
        let violations = spec.violations();
        if !violations.is_empty() {
            return Err(Error::InvalidArgument(violations.join("; ")));
        }
        match spec {
            ClaimSpec::LinearTerminal { coeff, offset } => {
                let (n, d) = (coeff.len(), coeff[0].len());
                let coeff = DMatrix::from_fn(n, d, |i, j| coeff[i][j]);
                let moments = SecondMoment::Constant(&coeff * coeff.transpose());
                Ok(Self {
                    spec: spec.clone(),
                    horizon,
                    kind: ClaimKind::Linear(LinearClaim {
                        coeff,
                        offset: DVector::from_column_slice(offset),
                    }),
                    moments,
                })
            }
            ClaimSpec::MarkovTerminal1d {
                payoff,
                diffusion,
                solver,
                measure,
            } => {
                let h = match *solver {
                    HSolverSpec::Analytic => HSolution::analytic(payoff, diffusion, *measure, horizon)
                        .ok_or_else(|| Error::invalid("no closed-form H for this claim"))?,
                    HSolverSpec::FiniteDifference {
                        space_nodes,
                        time_steps,
                        gamma,
                    } => {
                        let grid =
                            SpaceTimeGrid::covering(diffusion, *measure, horizon, space_nodes, time_steps, gamma)?;
                        solve_h(payoff, diffusion, &grid, *measure)?
                    }
                };
                let markov = MarkovClaim {
                    payoff: payoff.clone(),
                    diffusion: *diffusion,
                    h,
                    measure: *measure,
                };
                let effective_driftless = *measure == Measure::GirsanovQ || diffusion.has_zero_drift();
                let moments = match diffusion.vol.constant_value() {
                    Some(vol) if effective_driftless && payoff.has_closed_form() => SecondMoment::Markov {
                        payoff: payoff.clone(),
                        vol,
                        y0: diffusion.y0,
                        horizon,
                    },
                    _ => moment_table(&markov, horizon, sampling)?,
                };
                Ok(Self {
                    spec: spec.clone(),
                    horizon,
                    kind: ClaimKind::Markov(markov),
                    moments,
                })
            }
        }
    }

    pub fn spec(&self) -> &ClaimSpec {
        &self.spec
    }

    pub fn kind(&self) -> &ClaimKind {
        &self.kind
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// Dimension of the driving Brownian motion.
    pub fn noise_dim(&self) -> usize {
        match &self.kind {
            ClaimKind::Linear(l) => l.coeff.ncols(),
            ClaimKind::Markov(_) => 1,
        }
    }

    /// Measure under which the mean and the cost optimality are understood.
    pub fn measure(&self) -> Measure {
        match &self.kind {
            ClaimKind::Linear(_) => Measure::Physical,
            ClaimKind::Markov(m) => m.measure,
        }
    }

    /// `E f`; for Markov claims `H(y0, 0)`.
    pub fn mean(&self) -> Result<DVector<f64>> {
        match &self.kind {
            ClaimKind::Linear(l) => Ok(l.offset.clone()),
            ClaimKind::Markov(m) => Ok(DVector::from_element(1, m.h.value(m.diffusion.y0, 0.0)?)),
        }
    }

    /// Initial claim state: `w(0) = 0` or `y(0) = y0`.
    pub fn initial_state(&self) -> Vec<f64> {
        match &self.kind {
            ClaimKind::Linear(l) => vec![0.0; l.coeff.ncols()],
            ClaimKind::Markov(m) => vec![m.diffusion.y0],
        }
    }

    /// `k_f(t)` at claim state `state` (`w(t)` or `[y(t)]`).
    pub fn kf_at(&self, t: f64, state: &[f64]) -> Result<DMatrix<f64>> {
        if !(t >= 0.0 && t < self.horizon) {
            return Err(Error::Domain {
                t,
                horizon: self.horizon,
            });
        }
        match &self.kind {
            ClaimKind::Linear(l) => Ok(l.coeff.clone()),
            ClaimKind::Markov(m) => {
                let k = m.kernel(state[0], m.h.locate(t))?;
                Ok(DMatrix::from_element(1, 1, k))
            }
        }
    }

    /// `f` from the terminal claim state.
    pub fn realized(&self, terminal_state: &[f64]) -> DVector<f64> {
        match &self.kind {
            ClaimKind::Linear(l) => &l.coeff * DVector::from_column_slice(terminal_state) + &l.offset,
            ClaimKind::Markov(m) => DVector::from_element(1, m.payoff.eval(terminal_state[0])),
        }
    }

    pub fn second_moment(&self) -> &SecondMoment {
        &self.moments
    }
}

/// `E f` of a claim specification.
pub fn claim_mean(spec: &ClaimSpec, horizon: f64) -> Result<DVector<f64>> {
    Claim::build(spec, horizon)?.mean()
}

/// Euler paths of `y` under the measure relevant for the kernel moments,
/// visiting `time_nodes + 1` uniformly spaced times. Calls `visit(node, t, y)`.
fn sample_markov_paths(
    markov: &MarkovClaim,
    horizon: f64,
    sampling: MomentSampling,
    drifted: bool,
    mut visit: impl FnMut(usize, f64, f64),
) {
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let nodes = sampling.time_nodes.max(1);
    let sub = sampling.substeps.max(1);
    let dt = horizon / (nodes * sub) as f64;
    let sq = dt.sqrt();
    let diff = &markov.diffusion;
    for _ in 0..sampling.samples {
        let mut y = diff.y0;
        visit(0, 0.0, y);
        for j in 0..nodes {
            for _ in 0..sub {
                let z: f64 = StandardNormal.sample(&mut rng);
                let a = if drifted { diff.drift_at(y) } else { 0.0 };
                y += a * dt + diff.vol_at(y) * sq * z;
            }
            let t = if j + 1 == nodes {
                horizon
            } else {
                horizon * (j + 1) as f64 / nodes as f64
            };
            visit(j + 1, t, y);
        }
    }
}

fn moment_table(markov: &MarkovClaim, horizon: f64, sampling: MomentSampling) -> Result<SecondMoment> {
    let nodes = sampling.time_nodes.max(1);
    let mut sums = vec![0.0; nodes + 1];
    let mut counts = vec![0usize; nodes + 1];
    let drifted = markov.measure == Measure::Physical;
    sample_markov_paths(markov, horizon, sampling, drifted, |j, t, y| {
        if let Ok(k) = markov.kernel(y, markov.h.locate(t)) {
            sums[j] += k * k;
            counts[j] += 1;
        }
    });
    if counts.contains(&0) {
        return Err(Error::invalid(
            "second-moment pre-pass lost every sample at some time node",
        ));
    }
    Ok(SecondMoment::Table {
        times: (0..=nodes).map(|j| horizon * j as f64 / nodes as f64).collect(),
        values: sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect(),
    })
}

/// Estimate of `sup_{t ∈ [τ, T)} E|k_f(t)|²` on the pre-pass time grid.
pub fn kf_condition_check(claim: &Claim, tau: f64, sampling: MomentSampling) -> Result<f64> {
    let horizon = claim.horizon();
    if !(tau > 0.0 && tau < horizon) {
        return Err(Error::invalid(format!("tau = {tau} must lie in (0, {horizon})")));
    }
    match claim.kind() {
        ClaimKind::Linear(l) => Ok(l.coeff.iter().map(|v| v * v).sum()),
        ClaimKind::Markov(m) => {
            let nodes = sampling.time_nodes.max(1);
            let mut sums = vec![0.0; nodes + 1];
            let mut counts = vec![0usize; nodes + 1];
            sample_markov_paths(m, horizon, sampling, true, |j, t, y| {
                if t >= tau && t < horizon {
                    if let Ok(k) = m.kernel(y, m.h.locate(t)) {
                        sums[j] += k * k;
                        counts[j] += 1;
                    }
                }
            });
            Ok(sums
                .iter()
                .zip(&counts)
                .filter(|(_, &c)| c > 0)
                .map(|(s, &c)| s / c as f64)
                .fold(0.0, f64::max))
        }
    }
}
