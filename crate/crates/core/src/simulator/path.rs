//! Joint simulation of the Brownian driver, the claim state, `μ`, the plant
//! and the running cost.
//!
//! The plant is advanced with the exact Gramian-increment step
//!
//! ```text
//! x_{k+1} = e^{AΔ_k} x_k + e^{-A(T - t_{k+1})} (R(t_k) - R(t_{k+1})) μ_k
//! ```
//!
//! which integrates `e^{A(t_{k+1}-s)} b û(s)` over the step with `μ` frozen at
//! `t_k`, so the singular control is never evaluated pointwise. The cost of
//! the step under the same freezing is `μ_kᵀ (R(t_k) - R(t_{k+1})) μ_k`.

use nalgebra::{DMatrix, DVector};

use super::grid::TimeGrid;
use super::perturb::StepPerturbation;
use super::rng::PathRng;
use crate::claims::{ClaimKind, Measure, TimeLocator};
use crate::controller::ControlLaw;
use crate::error::{Error, Result};
use crate::linalg::spd_inverse;

/// Outcome of a single path.
#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    /// `x(T) - f`
    pub terminal_gap: Vec<f64>,
    pub gap_sq: f64,
    /// `∫ ûᵀ Γ û dt`
    pub cost: f64,
    pub f_realized: Vec<f64>,
    /// `(∫ |û| dt)²`
    pub abs_control_sq: f64,
    /// `∫ g |û|² dt`
    pub weighted_control_sq: f64,
}

/// A path together with its perturbed twin driven by the same noise.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbedResult {
    pub optimal: SimResult,
    pub perturbed: SimResult,
    /// `2 ∫ hᵀ Q μ dt`
    pub cross_term: f64,
}

/// Every intermediate quantity of one path.
#[derive(Clone, Debug, PartialEq)]
pub struct PathBundle {
    pub increments: Vec<Vec<f64>>,
    pub claim_states: Vec<Vec<f64>>,
    /// `k_f(t_k) Δw_k`, or `∂H/∂x Δy_k` under the Girsanov measure.
    pub kernel_increments: Vec<Vec<f64>>,
    pub mu: Vec<Vec<f64>>,
    pub x: Vec<Vec<f64>>,
    /// Running cost at each node; non-decreasing.
    pub cost: Vec<f64>,
    pub result: SimResult,
}

/// Row-major `n×m` block stored contiguously.
#[derive(Clone, Debug)]
struct Blocks {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Blocks {
    fn new(rows: usize, cols: usize, count: usize) -> Self {
        Self {
            rows,
            cols,
            data: Vec::with_capacity(rows * cols * count),
        }
    }

    fn push(&mut self, m: &DMatrix<f64>) {
        debug_assert_eq!((m.nrows(), m.ncols()), (self.rows, self.cols));
        for i in 0..self.rows {
            for j in 0..self.cols {
                self.data.push(m[(i, j)]);
            }
        }
    }

    #[inline]
    fn get(&self, k: usize) -> &[f64] {
        let sz = self.rows * self.cols;
        &self.data[k * sz..(k + 1) * sz]
    }

    fn matrix(&self, k: usize) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, self.get(k))
    }
}

/// `out = M v` for a row-major `M`.
#[inline]
fn mat_vec(m: &[f64], v: &[f64], out: &mut [f64]) {
    let cols = v.len();
    for (i, o) in out.iter_mut().enumerate() {
        let row = &m[i * cols..(i + 1) * cols];
        *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
    }
}

#[inline]
fn quad_form(m: &[f64], v: &[f64]) -> f64 {
    let n = v.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += m[i * n + j] * v[j];
        }
        acc += v[i] * row;
    }
    acc
}

/// Per-step matrices shared by every path on a given grid.
#[derive(Clone, Debug)]
pub struct Simulator<'a> {
    law: &'a ControlLaw,
    grid: TimeGrid,
    n: usize,
    d: usize,
    /// `R(t_k)`, `k = 0..=N`
    r: Blocks,
    /// `R(t_k)^{-1}`, `k < N`
    r_inv: Blocks,
    /// `R(t_k) - R(t_{k+1})`
    dr: Blocks,
    /// `e^{AΔ_k}`
    prop: Blocks,
    /// `e^{-A(T - t_{k+1})}`
    back: Blocks,
    /// `e^{-A(T - t_{k+1})} (R(t_k) - R(t_{k+1}))`
    push: Blocks,
    /// `G^{-1} bᵀ e^{Aᵀ(T - s)}` at the step midpoint
    ctrl: Blocks,
    /// `∫ g^{-1}` over the step
    inv_weight: Vec<f64>,
    sqrt_dt: Vec<f64>,
    locators: Vec<Option<TimeLocator>>,
}

impl<'a> Simulator<'a> {
    pub fn new(law: &'a ControlLaw, grid: &TimeGrid) -> Result<Self> {
        if (grid.horizon() - law.horizon()).abs() > 0.0 {
            return Err(Error::invalid(format!(
                "grid horizon {} differs from the control horizon {}",
                grid.horizon(),
                law.horizon()
            )));
        }
        let n = law.dim();
        let d = law.claim().noise_dim();
        let steps = grid.steps();
        let rem = grid.remaining();
        let gramian = law.gramian();
        let sys = law.system();
        let weight = law.weight();
        let bt = law.g_matrix().inverse() * sys.input_matrix().transpose();

        let mut r = Blocks::new(n, n, steps + 1);
        let mut r_vals = Vec::with_capacity(steps + 1);
        for &e in rem {
            let m = gramian.at_remaining(e)?;
            r.push(&m);
            r_vals.push(m);
        }
        let mut r_inv = Blocks::new(n, n, steps);
        let mut dr = Blocks::new(n, n, steps);
        let mut prop = Blocks::new(n, n, steps);
        let mut back = Blocks::new(n, n, steps);
        let mut push = Blocks::new(n, n, steps);
        let mut ctrl = Blocks::new(n, n, steps);
        let mut inv_weight = Vec::with_capacity(steps);
        let mut sqrt_dt = Vec::with_capacity(steps);
        let mut locators = Vec::with_capacity(steps);
        let h = match law.claim().kind() {
            ClaimKind::Markov(m) => Some(&m.h),
            ClaimKind::Linear(_) => None,
        };
        for k in 0..steps {
            r_inv.push(&spd_inverse(&r_vals[k])?);
            let diff = &r_vals[k] - &r_vals[k + 1];
            let dt = grid.step_length(k);
            let b = sys.propagator(-rem[k + 1]);
            prop.push(&sys.propagator(dt));
            push.push(&(&b * &diff));
            back.push(&b);
            dr.push(&diff);
            ctrl.push(&(&bt * sys.propagator(0.5 * (rem[k] + rem[k + 1])).transpose()));
            inv_weight.push(weight.inverse_integral(rem[k + 1], rem[k]));
            sqrt_dt.push(dt.sqrt());
            locators.push(h.map(|h| h.locate(grid.nodes()[k])));
        }
        Ok(Self {
            law,
            grid: grid.clone(),
            n,
            d,
            r,
            r_inv,
            dr,
            prop,
            back,
            push,
            ctrl,
            inv_weight,
            sqrt_dt,
            locators,
        })
    }

    pub fn law(&self) -> &ControlLaw {
        self.law
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// `R(t_k)` as used by the integrator.
    pub fn gramian_at_node(&self, k: usize) -> DMatrix<f64> {
        self.r.matrix(k)
    }

    /// `R(t_k)^{-1}` as used by the integrator, `k < N`.
    pub fn gramian_inverse_at_node(&self, k: usize) -> DMatrix<f64> {
        self.r_inv.matrix(k)
    }

    pub fn simulate_path(&self, rng: &mut PathRng) -> Result<SimResult> {
        self.run(rng, None, None).map(|(res, _, _)| res)
    }

    pub fn simulate_traced(&self, rng: &mut PathRng) -> Result<PathBundle> {
        let mut bundle = PathBundle {
            increments: Vec::new(),
            claim_states: Vec::new(),
            kernel_increments: Vec::new(),
            mu: Vec::new(),
            x: Vec::new(),
            cost: Vec::new(),
            result: empty_result(),
        };
        let (res, _, _) = self.run(rng, None, Some(&mut bundle))?;
        bundle.result = res;
        Ok(bundle)
    }

    pub(crate) fn simulate_perturbed(&self, rng: &mut PathRng, pert: &StepPerturbation) -> Result<PerturbedResult> {
        let (optimal, perturbed, cross) = self.run(rng, Some(pert), None)?;
        Ok(PerturbedResult {
            optimal,
            perturbed: perturbed.expect("perturbed twin requested"),
            cross_term: cross,
        })
    }

    fn run(
        &self,
        rng: &mut PathRng,
        pert: Option<&StepPerturbation>,
        mut trace: Option<&mut PathBundle>,
    ) -> Result<(SimResult, Option<SimResult>, f64)> {
        let (n, d) = (self.n, self.d);
        let law = self.law;
        let claim = law.claim();
        let mut x: Vec<f64> = law.system().initial_state().iter().copied().collect();
        let mut mu: Vec<f64> = law.mu_bar().iter().copied().collect();
        let mut state = claim.initial_state();
        let mut dw = vec![0.0; d];
        let mut kdw = vec![0.0; n];
        let mut tmp = vec![0.0; n];
        let mut tmp2 = vec![0.0; n];
        let mut cost = 0.0;
        let mut abs_int = 0.0;
        let mut weighted = 0.0;
        let mut x_alt = x.clone();
        let mut cost_alt = 0.0;
        let mut abs_alt = 0.0;
        let mut weighted_alt = 0.0;
        let mut cross = 0.0;
        let mut mu_alt = vec![0.0; n];

        if let Some(tr) = trace.as_deref_mut() {
            tr.claim_states.push(state.clone());
            tr.mu.push(mu.clone());
            tr.x.push(x.clone());
            tr.cost.push(0.0);
        }

        for k in 0..self.grid.steps() {
            let sq = self.sqrt_dt[k];
            for z in dw.iter_mut() {
                *z = rng.normal() * sq;
            }
            // Claim kernel increment and next claim state.
            match claim.kind() {
                ClaimKind::Linear(l) => {
                    for (i, out) in kdw.iter_mut().enumerate() {
                        *out = dw.iter().enumerate().map(|(j, z)| l.coeff[(i, j)] * z).sum();
                    }
                }
                ClaimKind::Markov(m) => {
                    let y = state[0];
                    let loc = self.locators[k].expect("markov locator");
                    let dh = m.h.derivative_located(y, loc).map_err(|e| abort(e.to_string()))?;
                    let vol = m.diffusion.vol_at(y);
                    let dy = m.diffusion.drift_at(y) * (sq * sq) + vol * dw[0];
                    kdw[0] = match m.measure {
                        Measure::Physical => dh * vol * dw[0],
                        Measure::GirsanovQ => dh * dy,
                    };
                    state[0] = y + dy;
                }
            }

            // Plant, cost and admissibility under μ frozen at t_k.
            mat_vec(self.prop.get(k), &x, &mut tmp);
            mat_vec(self.push.get(k), &mu, &mut tmp2);
            for i in 0..n {
                x[i] = tmp[i] + tmp2[i];
            }
            let dr = self.dr.get(k);
            cost += quad_form(dr, &mu);
            mat_vec(self.ctrl.get(k), &mu, &mut tmp);
            let u_sq: f64 = tmp.iter().map(|v| v * v).sum();
            abs_int += u_sq.sqrt() * self.inv_weight[k];
            weighted += u_sq * self.inv_weight[k];

            if let Some(p) = pert {
                // x' gets the extra e^{-A(T-t_{k+1})} Σ ΔR_p h_p on top of the optimal step.
                mat_vec(self.prop.get(k), &x_alt, &mut tmp);
                mat_vec(self.push.get(k), &mu, &mut tmp2);
                let shift = p.shift(k);
                let mut extra = vec![0.0; n];
                mat_vec(self.back.get(k), shift, &mut extra);
                for i in 0..n {
                    x_alt[i] = tmp[i] + tmp2[i] + extra[i];
                }
                let c: f64 = 2.0 * mu.iter().zip(shift).map(|(a, b)| a * b).sum::<f64>();
                cross += c;
                cost_alt += quad_form(dr, &mu) + c + p.quadratic(k);
                for i in 0..n {
                    mu_alt[i] = mu[i] + p.level(k)[i];
                }
                mat_vec(self.ctrl.get(k), &mu_alt, &mut tmp);
                let u_sq: f64 = tmp.iter().map(|v| v * v).sum();
                abs_alt += u_sq.sqrt() * self.inv_weight[k];
                weighted_alt += u_sq * self.inv_weight[k];
            }

            // μ_{k+1} = μ_k + R(t_k)^{-1} k_f Δw
            mat_vec(self.r_inv.get(k), &kdw, &mut tmp);
            for i in 0..n {
                mu[i] += tmp[i];
            }
            if let ClaimKind::Linear(_) = claim.kind() {
                for (s, z) in state.iter_mut().zip(&dw) {
                    *s += z;
                }
            }
            if !(x.iter().chain(&mu).all(|v| v.is_finite()) && cost.is_finite()) {
                return Err(abort(format!("non-finite state at step {k}")));
            }
            if let Some(tr) = trace.as_deref_mut() {
                tr.increments.push(dw.clone());
                tr.kernel_increments.push(kdw.clone());
                tr.claim_states.push(state.clone());
                tr.mu.push(mu.clone());
                tr.x.push(x.clone());
                tr.cost.push(cost);
            }
        }

        let f = claim.realized(&state);
        let result = finish(&x, &f, cost, abs_int, weighted);
        let alt = pert.map(|_| finish(&x_alt, &f, cost_alt, abs_alt, weighted_alt));
        Ok((result, alt, cross))
    }
}

fn finish(x: &[f64], f: &DVector<f64>, cost: f64, abs_int: f64, weighted: f64) -> SimResult {
    let gap: Vec<f64> = x.iter().zip(f.iter()).map(|(a, b)| a - b).collect();
    SimResult {
        gap_sq: gap.iter().map(|v| v * v).sum(),
        terminal_gap: gap,
        cost,
        f_realized: f.iter().copied().collect(),
        abs_control_sq: abs_int * abs_int,
        weighted_control_sq: weighted,
    }
}

fn empty_result() -> SimResult {
    SimResult {
        terminal_gap: vec![],
        gap_sq: 0.0,
        cost: 0.0,
        f_realized: vec![],
        abs_control_sq: 0.0,
        weighted_control_sq: 0.0,
    }
}

fn abort(reason: String) -> Error {
    Error::PathAbort { path: u64::MAX, reason }
}

/// Runs one path on a fresh simulator.
pub fn simulate_path(law: &ControlLaw, grid: &TimeGrid, rng: &mut PathRng) -> Result<SimResult> {
    Simulator::new(law, grid)?.simulate_path(rng)
}

/// Relative defect of the discrete replication identity
/// `x(T) - e^{AT} a = R(0) μ̄ + Σ_k R(t_{k+1}) R(t_k)^{-1} κ_k`, where `κ_k` are
/// the recorded kernel increments.
pub fn replication_identity_defect(sim: &Simulator<'_>, bundle: &PathBundle) -> f64 {
    let law = sim.law();
    let steps = sim.grid().steps();
    let lhs = DVector::from_column_slice(&bundle.x[steps]) - law.free_terminal_state();
    let mut rhs = sim.gramian_at_node(0) * law.mu_bar();
    let mut scale = rhs.abs().sum() + law.free_terminal_state().abs().sum();
    for k in 0..steps {
        let kappa = DVector::from_column_slice(&bundle.kernel_increments[k]);
        let term = sim.gramian_at_node(k + 1) * (sim.gramian_inverse_at_node(k) * kappa);
        scale += term.abs().sum();
        rhs += term;
    }
    (lhs - rhs).abs().max() / scale.max(1.0)
}
