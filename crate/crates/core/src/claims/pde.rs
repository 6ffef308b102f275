//! Backward parabolic equation for `H(x, t) = E{F(y(T)) | y(t) = x}`:
//!
//! ```text
//! ∂H/∂t + ½β² ∂²H/∂x² + a ∂H/∂x = 0,   H(x, T) = F(x)
//! ```
//!
//! Under the Girsanov measure the drift term is dropped, making `y` a
//! martingale. Crank-Nicolson on a uniform space grid with Dirichlet data
//! `H = F` at both ends.

use serde::{Deserialize, Serialize};

use super::diffusion::DiffusionSpec;
use super::payoff::PayoffSpec;
use crate::error::{Error, Result};

/// Measure under which `H` is the conditional expectation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    #[default]
    Physical,
    GirsanovQ,
}

impl Measure {
    pub fn label(&self) -> &'static str {
        match self {
            Measure::Physical => "P",
            Measure::GirsanovQ => "Q",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HMode {
    Analytic,
    FiniteDifference,
}

/// Uniform space grid times an arbitrary increasing time grid ending at `T`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeGrid {
    pub x_lo: f64,
    pub x_hi: f64,
    pub space_nodes: usize,
    pub times: Vec<f64>,
}

/// Standard deviations of `y(T)` covered on each side of `y0`.
pub const COVERAGE_SDS: f64 = 8.0;

impl SpaceTimeGrid {
    /// Window of [`COVERAGE_SDS`] standard deviations around `y0`, time nodes
    /// `T(1 - (1 - k/N)^γ)`.
    pub fn covering(
        diff: &DiffusionSpec,
        measure: Measure,
        horizon: f64,
        space_nodes: usize,
        time_steps: usize,
        gamma: f64,
    ) -> Result<Self> {
        if time_steps < 1 || !(gamma >= 1.0) {
            return Err(Error::Grid(format!(
                "need at least one time step and gamma >= 1 (got {time_steps}, {gamma})"
            )));
        }
        let mut effective = *diff;
        if measure == Measure::GirsanovQ {
            effective.drift = super::diffusion::Coefficient::Constant { value: 0.0 };
        }
        let half = effective.covering_half_width(horizon, COVERAGE_SDS);
        let times = (0..=time_steps)
            .map(|k| {
                if k == time_steps {
                    horizon
                } else {
                    horizon * (1.0 - (1.0 - k as f64 / time_steps as f64).powf(gamma))
                }
            })
            .collect();
        Ok(Self {
            x_lo: diff.y0 - half,
            x_hi: diff.y0 + half,
            space_nodes,
            times,
        })
    }

    pub fn dx(&self) -> f64 {
        (self.x_hi - self.x_lo) / (self.space_nodes - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.space_nodes {
            self.x_hi
        } else {
            self.x_lo + self.dx() * i as f64
        }
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.space_nodes).map(|i| self.x(i)).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.space_nodes < 5 {
            return Err(Error::Grid("need at least 5 space nodes".into()));
        }
        if !(self.x_hi > self.x_lo) {
            return Err(Error::Grid("empty space window".into()));
        }
        if self.times.len() < 2 || self.times[0] != 0.0 || self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Grid("time nodes must increase strictly from 0".into()));
        }
        Ok(())
    }
}

/// Position of a time inside the solution's time grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeLocator {
    slice: usize,
    weight: f64,
}

#[derive(Clone, Debug)]
struct GridValues {
    grid: SpaceTimeGrid,
    /// `values[k][i] = H(x_i, t_k)`
    values: Vec<Vec<f64>>,
    derivs: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
enum Repr {
    Analytic { payoff: PayoffSpec, vol: f64, horizon: f64 },
    Grid(GridValues),
}

/// `H` and `∂H/∂x`, either closed-form or on a space-time grid.
#[derive(Clone, Debug)]
pub struct HSolution {
    measure: Measure,
    repr: Repr,
}

impl HSolution {
    /// Closed forms for constant volatility and no effective drift:
    /// `x² + β²(T-t)`, `e^{-β²(T-t)/2} cos x`, `x`.
    pub fn analytic(payoff: &PayoffSpec, diff: &DiffusionSpec, measure: Measure, horizon: f64) -> Option<Self> {
        let vol = diff.vol.constant_value()?;
        if measure == Measure::Physical && !diff.has_zero_drift() {
            return None;
        }
        if !payoff.has_closed_form() {
            return None;
        }
        Some(Self {
            measure,
            repr: Repr::Analytic {
                payoff: payoff.clone(),
                vol,
                horizon,
            },
        })
    }

    pub fn measure(&self) -> Measure {
        self.measure
    }

    pub fn mode(&self) -> HMode {
        match self.repr {
            Repr::Analytic { .. } => HMode::Analytic,
            Repr::Grid(_) => HMode::FiniteDifference,
        }
    }

    pub fn grid(&self) -> Option<&SpaceTimeGrid> {
        match &self.repr {
            Repr::Grid(g) => Some(&g.grid),
            Repr::Analytic { .. } => None,
        }
    }

    /// Solved slice at time index `k` (grid mode only).
    pub fn slice(&self, k: usize) -> Option<(&[f64], &[f64])> {
        match &self.repr {
            Repr::Grid(g) => Some((&g.values[k], &g.derivs[k])),
            Repr::Analytic { .. } => None,
        }
    }

    pub fn locate(&self, t: f64) -> TimeLocator {
        match &self.repr {
            Repr::Analytic { .. } => TimeLocator { slice: 0, weight: t },
            Repr::Grid(g) => {
                let ts = &g.grid.times;
                let last = ts.len() - 1;
                if t >= ts[last] {
                    return TimeLocator {
                        slice: last - 1,
                        weight: 1.0,
                    };
                }
                let j = ts.partition_point(|&s| s <= t).saturating_sub(1).min(last - 1);
                TimeLocator {
                    slice: j,
                    weight: ((t - ts[j]) / (ts[j + 1] - ts[j])).clamp(0.0, 1.0),
                }
            }
        }
    }

    pub fn value(&self, x: f64, t: f64) -> Result<f64> {
        self.eval_located(x, self.locate(t), false)
    }

    pub fn derivative(&self, x: f64, t: f64) -> Result<f64> {
        self.eval_located(x, self.locate(t), true)
    }

    pub fn derivative_located(&self, x: f64, loc: TimeLocator) -> Result<f64> {
        self.eval_located(x, loc, true)
    }

    fn eval_located(&self, x: f64, loc: TimeLocator, deriv: bool) -> Result<f64> {
        match &self.repr {
            Repr::Analytic { payoff, vol, horizon } => {
                let rem = horizon - loc.weight;
                let var = vol * vol * rem;
                Ok(match (payoff, deriv) {
                    (PayoffSpec::Square, false) => x * x + var,
                    (PayoffSpec::Square, true) => 2.0 * x,
                    (PayoffSpec::Cosine, false) => (-0.5 * var).exp() * x.cos(),
                    (PayoffSpec::Cosine, true) => -(-0.5 * var).exp() * x.sin(),
                    (PayoffSpec::Linear, false) => x,
                    (PayoffSpec::Linear, true) => 1.0,
                    (PayoffSpec::Tabulated { .. }, _) => unreachable!("no closed form for tabulated payoffs"),
                })
            }
            Repr::Grid(g) => {
                let grid = &g.grid;
                if !(x >= grid.x_lo && x <= grid.x_hi) {
                    return Err(Error::Extrapolation {
                        x,
                        lo: grid.x_lo,
                        hi: grid.x_hi,
                    });
                }
                // Cubic Hermite in x from nodal values and slopes, linear in t.
                let dx = grid.dx();
                let s = (x - grid.x_lo) / dx;
                let i = (s.floor() as usize).min(grid.space_nodes - 2);
                let w = s - i as f64;
                let at = |k: usize| {
                    let (v0, v1) = (g.values[k][i], g.values[k][i + 1]);
                    let (d0, d1) = (g.derivs[k][i] * dx, g.derivs[k][i + 1] * dx);
                    if deriv {
                        let w2 = w * w;
                        ((6.0 * w2 - 6.0 * w) * (v0 - v1) + (3.0 * w2 - 4.0 * w + 1.0) * d0 + (3.0 * w2 - 2.0 * w) * d1)
                            / dx
                    } else {
                        let (w2, w3) = (w * w, w * w * w);
                        (2.0 * w3 - 3.0 * w2 + 1.0) * v0
                            + (w3 - 2.0 * w2 + w) * d0
                            + (-2.0 * w3 + 3.0 * w2) * v1
                            + (w3 - w2) * d1
                    }
                };
                let (a, b) = (at(loc.slice), at(loc.slice + 1));
                Ok(a + loc.weight * (b - a))
            }
        }
    }
}

/// Solves the backward equation on `grid` by Crank-Nicolson.
pub fn solve_h(payoff: &PayoffSpec, diff: &DiffusionSpec, grid: &SpaceTimeGrid, measure: Measure) -> Result<HSolution> {
    payoff.validate()?;
    diff.validate()?;
    grid.validate()?;
    let m = grid.space_nodes;
    let dx = grid.dx();
    let xs = grid.xs();
    diff.check_ellipticity(xs.iter().copied())?;

    let drift: Vec<f64> = xs
        .iter()
        .map(|&x| match measure {
            Measure::Physical => diff.drift_at(x),
            Measure::GirsanovQ => 0.0,
        })
        .collect();
    let diffusivity: Vec<f64> = xs.iter().map(|&x| diff.diffusivity_at(x)).collect();
    for i in 0..m {
        let peclet = drift[i].abs() * dx / (2.0 * diffusivity[i]);
        if peclet > 1.0 {
            return Err(Error::Grid(format!(
                "cell Péclet number {peclet:.3} > 1 at x = {}; refine the space grid",
                xs[i]
            )));
        }
    }
    // L H_i = lo_i H_{i-1} + mid_i H_i + up_i H_{i+1}
    let inv_dx2 = 1.0 / (dx * dx);
    let lo: Vec<f64> = (0..m)
        .map(|i| diffusivity[i] * inv_dx2 - drift[i] / (2.0 * dx))
        .collect();
    let mid: Vec<f64> = (0..m).map(|i| -2.0 * diffusivity[i] * inv_dx2).collect();
    let up: Vec<f64> = (0..m)
        .map(|i| diffusivity[i] * inv_dx2 + drift[i] / (2.0 * dx))
        .collect();

    let n_t = grid.times.len();
    let terminal: Vec<f64> = xs.iter().map(|&x| payoff.eval(x)).collect();
    let mut values = vec![Vec::new(); n_t];
    values[n_t - 1] = terminal.clone();
    let mut cur = terminal.clone();
    let (f_lo, f_hi) = (terminal[0], terminal[m - 1]);

    let mut rhs = vec![0.0; m];
    let mut sub = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut sup = vec![0.0; m];
    for k in (0..n_t - 1).rev() {
        let half_dt = 0.5 * (grid.times[k + 1] - grid.times[k]);
        rhs[0] = f_lo;
        rhs[m - 1] = f_hi;
        for i in 1..m - 1 {
            rhs[i] = cur[i] + half_dt * (lo[i] * cur[i - 1] + mid[i] * cur[i] + up[i] * cur[i + 1]);
            sub[i] = -half_dt * lo[i];
            diag[i] = 1.0 - half_dt * mid[i];
            sup[i] = -half_dt * up[i];
        }
        diag[0] = 1.0;
        sup[0] = 0.0;
        diag[m - 1] = 1.0;
        sub[m - 1] = 0.0;
        cur = thomas(&sub, &diag, &sup, &rhs);
        values[k] = cur.clone();
    }
    let derivs = values.iter().map(|v| central_difference(v, dx)).collect();
    Ok(HSolution {
        measure,
        repr: Repr::Grid(GridValues {
            grid: grid.clone(),
            values,
            derivs,
        }),
    })
}

fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i] * c[i - 1];
        c[i] = if i + 1 < n { sup[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Central differences inside, second-order one-sided at the ends.
fn central_difference(v: &[f64], dx: f64) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; n];
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dx);
    out[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * dx);
    for i in 1..n - 1 {
        out[i] = (v[i + 1] - v[i - 1]) / (2.0 * dx);
    }
    out
}
