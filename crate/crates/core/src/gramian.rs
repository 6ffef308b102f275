//! The kernel `Q(t) = e^{A(T-t)} b Γ(t)^{-1} bᵀ e^{Aᵀ(T-t)}` and the Gramian
//! `R(s) = ∫_s^T Q(t) dt`, which vanishes at the horizon.
//!
//! All internal bookkeeping is in remaining time `e = T - t`, so values close
//! to the horizon are resolved without cancellation. `Q` has an integrable
//! singularity `e^{-α}` at `e = 0`; panels are laid out uniformly in
//! `v = e^{1-α}`, which makes the pure-power integrand smooth.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{frobenius_norm, mat_exp, spd_inverse, symmetrize};
use crate::quadrature::GaussLegendre;
use crate::system::SystemSpec;
use crate::weight::{GMatrix, WeightForm, WeightSpec};

pub const MIN_GRAMIAN_NODES: usize = 64;
const PANEL_ORDER: usize = 16;

/// The smooth factor `e^{Ae} b G^{-1} bᵀ e^{Aᵀe}` of `Q`, plus the weight.
#[derive(Clone, Debug)]
pub struct QKernel {
    state_matrix: DMatrix<f64>,
    zero_dynamics: bool,
    bgb: DMatrix<f64>,
    weight: WeightSpec,
}

impl QKernel {
    pub fn new(sys: &SystemSpec, weight: &WeightSpec, g: &GMatrix) -> Result<Self> {
        if g.dim() != sys.dim() {
            return Err(Error::invalid(format!(
                "G is {0}x{0} but the system has dimension {1}",
                g.dim(),
                sys.dim()
            )));
        }
        if (weight.horizon() - sys.horizon()).abs() > 0.0 {
            return Err(Error::invalid(format!(
                "weight horizon {} differs from system horizon {}",
                weight.horizon(),
                sys.horizon()
            )));
        }
        let b = sys.input_matrix();
        let bgb = symmetrize(&(b * g.inverse() * b.transpose()));
        Ok(Self {
            state_matrix: sys.state_matrix().clone(),
            zero_dynamics: sys.has_zero_dynamics(),
            bgb,
            weight: weight.clone(),
        })
    }

    pub fn weight(&self) -> &WeightSpec {
        &self.weight
    }

    pub fn horizon(&self) -> f64 {
        self.weight.horizon()
    }

    pub fn dim(&self) -> usize {
        self.bgb.nrows()
    }

    /// `b G^{-1} bᵀ`.
    pub fn input_gram(&self) -> &DMatrix<f64> {
        &self.bgb
    }

    fn smooth_part(&self, rem: f64) -> DMatrix<f64> {
        if self.zero_dynamics {
            return self.bgb.clone();
        }
        let e = mat_exp(&self.state_matrix, rem).expect("finite state matrix");
        symmetrize(&(&e * &self.bgb * e.transpose()))
    }

    /// `Q` at remaining time `rem > 0`.
    pub fn at_remaining(&self, rem: f64) -> DMatrix<f64> {
        self.smooth_part(rem) / self.weight.at_remaining(rem)
    }

    /// Integrand of `R` in the substituted variable `v`.
    fn substituted(&self, v: f64) -> DMatrix<f64> {
        let p = self.weight.substitution_power();
        self.smooth_part(v.powf(p)) * self.weight.substituted_inverse_weight(v)
    }
}

/// `Q(t)` for `t ∈ [0, T)`.
pub fn q_kernel(sys: &SystemSpec, weight: &WeightSpec, g: &GMatrix, t: f64) -> Result<DMatrix<f64>> {
    let kernel = QKernel::new(sys, weight, g)?;
    if !(t >= 0.0 && t < kernel.horizon()) {
        return Err(Error::Domain {
            t,
            horizon: kernel.horizon(),
        });
    }
    Ok(kernel.at_remaining(kernel.horizon() - t))
}

/// How `R` is evaluated between tabulated nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interpolation {
    /// Closed form `b G^{-1} bᵀ (T-s)^{1-α}/(1-α)` (pure-power weight, `A = 0`).
    Analytic,
    /// Tabulated node value plus a Gauss-Legendre partial panel.
    PanelQuadrature,
}

/// `R(s)` tabulated on a grid clustered at the horizon.
#[derive(Clone, Debug)]
pub struct GramianTable {
    kernel: QKernel,
    /// Ascending substituted nodes; `v = 0` is the horizon.
    v_nodes: Vec<f64>,
    r_nodes: Vec<DMatrix<f64>>,
    interpolation: Interpolation,
    rule: GaussLegendre,
}

/// `R(s) = ∫_s^T Q(t) dt` on at least `nodes` panels.
pub fn build_gramian(sys: &SystemSpec, weight: &WeightSpec, g: &GMatrix, nodes: usize) -> Result<GramianTable> {
    GramianTable::build(QKernel::new(sys, weight, g)?, nodes)
}

impl GramianTable {
    pub fn build(kernel: QKernel, nodes: usize) -> Result<Self> {
        if nodes < MIN_GRAMIAN_NODES {
            return Err(Error::invalid(format!(
                "Gramian table needs at least {MIN_GRAMIAN_NODES} nodes, got {nodes}"
            )));
        }
        let weight = kernel.weight();
        let horizon = weight.horizon();
        let beta = 1.0 - weight.alpha();
        let v_max = horizon.powf(beta);
        let mut v_nodes: Vec<f64> = (0..=nodes).map(|j| v_max * j as f64 / nodes as f64).collect();
        *v_nodes.last_mut().unwrap() = v_max;
        for bp in weight.breakpoints() {
            let vb = bp.powf(beta);
            if vb > 0.0 && vb < v_max && !v_nodes.iter().any(|&v| (v - vb).abs() <= 1e-14 * v_max) {
                v_nodes.push(vb);
            }
        }
        v_nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());

        let rule = GaussLegendre::new(PANEL_ORDER);
        let n = kernel.dim();
        let mut r_nodes = Vec::with_capacity(v_nodes.len());
        let mut acc = DMatrix::zeros(n, n);
        r_nodes.push(acc.clone());
        for w in v_nodes.windows(2) {
            acc += panel(&kernel, &rule, w[0], w[1]);
            r_nodes.push(symmetrize(&acc));
        }
        let interpolation = if kernel.zero_dynamics && weight.form() == WeightForm::PurePower {
            Interpolation::Analytic
        } else {
            Interpolation::PanelQuadrature
        };
        Ok(Self {
            kernel,
            v_nodes,
            r_nodes,
            interpolation,
            rule,
        })
    }

    pub fn kernel(&self) -> &QKernel {
        &self.kernel
    }

    pub fn weight(&self) -> &WeightSpec {
        self.kernel.weight()
    }

    pub fn horizon(&self) -> f64 {
        self.kernel.horizon()
    }

    pub fn alpha(&self) -> f64 {
        self.weight().alpha()
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    /// Tabulated times, strictly increasing from 0 to `T`.
    pub fn times(&self) -> Vec<f64> {
        let p = self.weight().substitution_power();
        let horizon = self.horizon();
        let mut ts: Vec<f64> = self.v_nodes.iter().rev().map(|v| horizon - v.powf(p)).collect();
        ts[0] = 0.0;
        *ts.last_mut().unwrap() = horizon;
        ts
    }

    /// Tabulated values matching [`Self::times`].
    pub fn values(&self) -> Vec<DMatrix<f64>> {
        self.r_nodes.iter().rev().cloned().collect()
    }

    /// `R` at remaining time `rem ∈ [0, T]`.
    pub fn at_remaining(&self, rem: f64) -> Result<DMatrix<f64>> {
        let horizon = self.horizon();
        if !(rem >= 0.0 && rem <= horizon * (1.0 + 1e-15)) {
            return Err(Error::Domain {
                t: horizon - rem,
                horizon,
            });
        }
        let n = self.dim();
        if rem == 0.0 {
            return Ok(DMatrix::zeros(n, n));
        }
        let beta = 1.0 - self.alpha();
        if self.interpolation == Interpolation::Analytic {
            return Ok(self.kernel.input_gram() * (rem.powf(beta) / beta));
        }
        let v = rem.powf(beta).min(*self.v_nodes.last().unwrap());
        let j = match self.v_nodes.binary_search_by(|x| x.partial_cmp(&v).unwrap()) {
            Ok(j) => return Ok(self.r_nodes[j].clone()),
            Err(j) => j - 1,
        };
        Ok(symmetrize(
            &(&self.r_nodes[j] + panel(&self.kernel, &self.rule, self.v_nodes[j], v)),
        ))
    }

    /// `R(t)` for `t ∈ [0, T]`.
    pub fn at(&self, t: f64) -> Result<DMatrix<f64>> {
        if !(t >= 0.0 && t <= self.horizon()) {
            return Err(Error::Domain {
                t,
                horizon: self.horizon(),
            });
        }
        self.at_remaining(self.horizon() - t)
    }

    /// `∫ Q` over remaining times `lo ≤ e ≤ hi`, integrated directly rather
    /// than as a difference of tabulated values.
    pub fn increment(&self, lo: f64, hi: f64) -> Result<DMatrix<f64>> {
        if !(0.0 <= lo && lo <= hi && hi <= self.horizon()) {
            return Err(Error::invalid(format!("bad remaining-time interval [{lo}, {hi}]")));
        }
        let beta = 1.0 - self.alpha();
        let (va, vb) = (lo.powf(beta), hi.powf(beta));
        let mut acc = DMatrix::zeros(self.dim(), self.dim());
        let mut cuts: Vec<f64> = vec![va];
        cuts.extend(self.v_nodes.iter().copied().filter(|&v| v > va && v < vb));
        cuts.push(vb);
        for w in cuts.windows(2) {
            acc += panel(&self.kernel, &self.rule, w[0], w[1]);
        }
        Ok(symmetrize(&acc))
    }

    /// `R(t)^{-1}` for `t ∈ [0, T)`.
    pub fn inverse(&self, t: f64) -> Result<DMatrix<f64>> {
        if !(t >= 0.0 && t < self.horizon()) {
            return Err(Error::Domain {
                t,
                horizon: self.horizon(),
            });
        }
        self.inverse_at_remaining(self.horizon() - t)
    }

    pub fn inverse_at_remaining(&self, rem: f64) -> Result<DMatrix<f64>> {
        if !(rem > 0.0) {
            return Err(Error::Domain {
                t: self.horizon() - rem,
                horizon: self.horizon(),
            });
        }
        spd_inverse(&self.at_remaining(rem)?)
    }
}

fn panel(kernel: &QKernel, rule: &GaussLegendre, va: f64, vb: f64) -> DMatrix<f64> {
    let n = kernel.dim();
    let mut acc = DMatrix::zeros(n, n);
    for (v, w) in rule.points(va, vb) {
        acc += kernel.substituted(v) * w;
    }
    acc
}

/// `R(t)^{-1}`, `t ∈ [0, T)`.
pub fn gramian_inverse(table: &GramianTable, t: f64) -> Result<DMatrix<f64>> {
    table.inverse(t)
}

/// Square-integrability diagnostics for `R^{-1}` near the horizon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrabilityDiagnostic {
    /// `∫_τ^T ‖R(t)^{-1}‖² dt` (Frobenius norm).
    pub integral_value: f64,
    /// Smallest `C` with `‖R(t)^{-1}‖ ≤ C(1-α)(T-t)^{-(1-α)}` on a dense grid of `[τ, T)`.
    pub bound_constant: f64,
}

const DYADIC_MAX_LEVELS: usize = 900;
const DIVERGENCE_STREAK: usize = 8;

/// Integrates `‖R^{-1}‖²` over `[τ, T]` on dyadic panels approaching the
/// horizon, extrapolating the geometric tail. Reports divergence when panel
/// contributions stop shrinking.
pub fn inverse_square_integral(table: &GramianTable, tau: f64) -> Result<IntegrabilityDiagnostic> {
    let horizon = table.horizon();
    if !(tau > 0.0 && tau < horizon) {
        return Err(Error::invalid(format!("tau = {tau} must lie in (0, {horizon})")));
    }
    let rule = GaussLegendre::new(PANEL_ORDER);
    let sq_norm = |rem: f64| -> Result<f64> {
        let inv = table.inverse_at_remaining(rem)?;
        Ok(frobenius_norm(&inv).powi(2))
    };
    let top = horizon - tau;
    let mut sum = 0.0;
    let mut prev_panel = f64::NAN;
    let mut prev_total = f64::NAN;
    let mut growing = 0;
    let mut agreeing = 0;
    let mut integral = None;
    for level in 0..DYADIC_MAX_LEVELS {
        let hi = top * 0.5f64.powi(level as i32);
        let lo = 0.5 * hi;
        let mut contrib = 0.0;
        for (e, w) in rule.points(lo, hi) {
            contrib += w * sq_norm(e)?;
        }
        if !contrib.is_finite() {
            return Err(Error::Divergence(format!(
                "non-finite contribution at remaining time {lo:e}"
            )));
        }
        sum += contrib;
        if level > 0 {
            let ratio = contrib / prev_panel;
            if ratio >= 1.0 - 1e-9 {
                growing += 1;
                if level >= 10 && growing >= DIVERGENCE_STREAK {
                    return Err(Error::Divergence(format!(
                        "panel contributions of ‖R^-1‖² stop shrinking near the horizon (ratio {ratio:.4}); \
                         the inverse Gramian is not square integrable"
                    )));
                }
            } else {
                growing = 0;
                let total = sum + contrib * ratio / (1.0 - ratio);
                if level >= 20 && (total - prev_total).abs() <= 1e-13 * total.abs() {
                    agreeing += 1;
                    if agreeing >= 3 {
                        integral = Some(total);
                        break;
                    }
                } else {
                    agreeing = 0;
                }
                prev_total = total;
            }
        }
        prev_panel = contrib;
    }
    let integral_value = integral
        .ok_or_else(|| Error::Divergence(format!("no convergence after {DYADIC_MAX_LEVELS} dyadic refinements")))?;

    let beta = 1.0 - table.alpha();
    let mut bound_constant: f64 = 0.0;
    const GRID: usize = 2000;
    for i in 0..GRID {
        let rem = top * 10f64.powf(-12.0 * i as f64 / (GRID - 1) as f64);
        let norm = sq_norm(rem)?.sqrt();
        bound_constant = bound_constant.max(norm * rem.powf(beta) / beta);
    }
    Ok(IntegrabilityDiagnostic {
        integral_value,
        bound_constant,
    })
}

/// Least-squares slope of `log ‖R(t)^{-1}‖` against `log(T - t)` for
/// `t ∈ [t_lo, t_hi]`.
pub fn inverse_growth_slope(table: &GramianTable, t_lo: f64, t_hi: f64, points: usize) -> Result<f64> {
    let horizon = table.horizon();
    if !(0.0 <= t_lo && t_lo < t_hi && t_hi < horizon) || points < 2 {
        return Err(Error::invalid(
            "slope window must satisfy 0 <= t_lo < t_hi < T with >= 2 points",
        ));
    }
    let (r_hi, r_lo) = ((horizon - t_lo).ln(), (horizon - t_hi).ln());
    let mut xs = Vec::with_capacity(points);
    let mut ys = Vec::with_capacity(points);
    for i in 0..points {
        let lr = r_lo + (r_hi - r_lo) * i as f64 / (points - 1) as f64;
        xs.push(lr);
        ys.push(frobenius_norm(&table.inverse_at_remaining(lr.exp())?).ln());
    }
    let mx = xs.iter().sum::<f64>() / points as f64;
    let my = ys.iter().sum::<f64>() / points as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, min_eigenvalue, RealVector, SquareMatrix};

    fn scalar_table() -> GramianTable {
        let sys = SystemSpec::scalar_integrator(0.0, 1.0).unwrap();
        let w = WeightSpec::pure_power(0.75, 1.0, 1.0).unwrap();
        build_gramian(&sys, &w, &GMatrix::identity(1), 128).unwrap()
    }

    fn nilpotent_sys() -> SystemSpec {
        SystemSpec::new(
            SquareMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap(),
            SquareMatrix::identity(2),
            RealVector::zeros(2),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn q_kernel_scalar_values() {
        let sys = SystemSpec::scalar_integrator(0.0, 1.0).unwrap();
        let w = WeightSpec::pure_power(0.75, 1.0, 1.0).unwrap();
        let g = GMatrix::identity(1);
        let q = q_kernel(&sys, &w, &g, 0.5).unwrap()[(0, 0)];
        assert!((q - 0.5f64.powf(-0.75)).abs() < 1e-14);
        assert!((q - 1.681_792_830_507_429).abs() < 1e-12);
        assert_eq!(q_kernel(&sys, &w, &g, 0.0).unwrap()[(0, 0)], 1.0);
        assert!(matches!(q_kernel(&sys, &w, &g, 1.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn q_kernel_nilpotent_closed_form() {
        let w = WeightSpec::pure_power(0.75, 1.0, 1.0).unwrap();
        for t in [0.0, 0.3, 0.9, 0.999] {
            let q = q_kernel(&nilpotent_sys(), &w, &GMatrix::identity(2), t).unwrap();
            let r = 1.0 - t;
            let ginv = r.powf(-0.75);
            let expect = DMatrix::from_row_slice(2, 2, &[1.0 + r * r, r, r, 1.0]) * ginv;
            assert!(max_abs(&(q - &expect)) <= 1e-13 * max_abs(&expect));
        }
    }

    #[test]
    fn scalar_benchmark_closed_form_on_nodes() {
        let table = scalar_table();
        assert_eq!(table.interpolation(), Interpolation::Analytic);
        for (t, r) in table.times().iter().zip(table.values()) {
            let exact = 4.0 * (1.0 - t).powf(0.25);
            assert!((r[(0, 0)] - exact).abs() <= 1e-8, "t={t}: {} vs {exact}", r[(0, 0)]);
        }
        assert!((table.at(0.0).unwrap()[(0, 0)] - 4.0).abs() < 1e-14);
        assert_eq!(table.at(1.0).unwrap()[(0, 0)], 0.0);
    }

    #[test]
    fn scalar_inverse_values() {
        let table = scalar_table();
        assert!((gramian_inverse(&table, 0.0).unwrap()[(0, 0)] - 0.25).abs() < 1e-14);
        assert!((gramian_inverse(&table, 1.0 - 1.0 / 16.0).unwrap()[(0, 0)] - 0.5).abs() < 1e-14);
        assert!(matches!(gramian_inverse(&table, 1.0), Err(Error::Domain { .. })));
    }

    /// Brute force: midpoint rule with 10^6 nodes uniform in v = (T-t)^{1/4},
    /// integrand 4 e^{Aε}e^{Aᵀε} with ε = v^4 written out by hand.
    #[test]
    fn nilpotent_r0_matches_brute_force() {
        let w = WeightSpec::pure_power(0.75, 1.0, 1.0).unwrap();
        let table = build_gramian(&nilpotent_sys(), &w, &GMatrix::identity(2), 64).unwrap();
        assert_eq!(table.interpolation(), Interpolation::PanelQuadrature);
        let m = 1_000_000;
        let h = 1.0 / m as f64;
        let mut acc = [0.0; 3];
        for i in 0..m {
            let v = (i as f64 + 0.5) * h;
            let e = v.powi(4);
            acc[0] += 4.0 * (1.0 + e * e) * h;
            acc[1] += 4.0 * e * h;
            acc[2] += 4.0 * h;
        }
        let r0 = table.at(0.0).unwrap();
        assert!((r0[(0, 0)] - acc[0]).abs() < 1e-6);
        assert!((r0[(0, 1)] - acc[1]).abs() < 1e-6);
        assert!((r0[(1, 0)] - acc[1]).abs() < 1e-6);
        assert!((r0[(1, 1)] - acc[2]).abs() < 1e-6);
        // exact: ∫_0^1 (1+e²) e^{-3/4} de = 4 + 4/9, ∫ e^{1/4} = 4/5, ∫ e^{-3/4} = 4
        assert!((r0[(0, 0)] - (4.0 + 4.0 / 9.0)).abs() < 1e-12);
        assert!((r0[(0, 1)] - 0.8).abs() < 1e-12);
        assert!((r0[(1, 1)] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn loewner_monotone_and_spd() {
        let w = WeightSpec::plateau(0.75, 0.4, 2.0, 1.0).unwrap();
        let table = build_gramian(&nilpotent_sys(), &w, &GMatrix::identity(2), 64).unwrap();
        let vals = table.values();
        for win in vals.windows(2) {
            assert!(min_eigenvalue(&(&win[0] - &win[1])).unwrap() >= -1e-10);
        }
        for r in &vals[..vals.len() - 1] {
            assert!(min_eigenvalue(r).unwrap() > 0.0);
        }
        assert_eq!(max_abs(vals.last().unwrap()), 0.0);
    }

    #[test]
    fn plateau_tabulates_breakpoint_and_is_additive() {
        let w = WeightSpec::plateau(0.75, 0.4, 2.0, 1.0).unwrap();
        let table = build_gramian(&nilpotent_sys(), &w, &GMatrix::identity(2), 64).unwrap();
        assert!(table.times().iter().any(|&t| (t - 0.6).abs() < 1e-12));
        for (a, b) in [(0.0, 0.3), (0.1, 0.55), (0.35, 0.5), (0.2, 1.0)] {
            let direct = table.increment(a, b).unwrap();
            let diff = table.at_remaining(b).unwrap() - table.at_remaining(a).unwrap();
            assert!(max_abs(&(direct - diff)) < 1e-10);
        }
        let whole = table.increment(0.1, 0.9).unwrap();
        let split = table.increment(0.1, 0.45).unwrap() + table.increment(0.45, 0.9).unwrap();
        assert!(max_abs(&(whole - split)) < 1e-10);
    }

    #[test]
    fn plateau_scalar_closed_form() {
        // R(0) = ∫_0^τ e^{-α} de + (T - τ) = 4 τ^{1/4} + T - τ
        let sys = SystemSpec::scalar_integrator(0.0, 1.0).unwrap();
        let w = WeightSpec::plateau(0.75, 0.5, 2.0, 1.0).unwrap();
        let table = build_gramian(&sys, &w, &GMatrix::identity(1), 64).unwrap();
        let expect = 4.0 * 0.5f64.powf(0.25) + 0.5;
        assert!((table.at(0.0).unwrap()[(0, 0)] - expect).abs() < 1e-12);
        let expect = 4.0 * 0.3f64.powf(0.25);
        assert!((table.at(0.7).unwrap()[(0, 0)] - expect).abs() < 1e-12);
    }

    #[test]
    fn inverse_square_integral_scalar_benchmark() {
        let diag = inverse_square_integral(&scalar_table(), 0.5).unwrap();
        let exact = 0.125 * 0.5f64.sqrt();
        assert!((diag.integral_value - exact).abs() < 1e-10, "{}", diag.integral_value);
        assert!((diag.bound_constant - 1.0).abs() < 1e-10);
        for rem in [1e-4, 1e-8, 1e-12] {
            let near = inverse_square_integral(&scalar_table(), 1.0 - rem).unwrap();
            let exact = 0.125 * (1.0 - (1.0 - rem)).sqrt();
            assert!((near.integral_value - exact).abs() <= 1e-9 * exact);
        }
    }

    #[test]
    fn inverse_square_integral_diverges_for_inadmissible_exponent() {
        let sys = SystemSpec::scalar_integrator(0.0, 1.0).unwrap();
        let w = WeightSpec::new_unchecked(WeightForm::PurePower, 0.4, 1.0, 1.0);
        let table = build_gramian(&sys, &w, &GMatrix::identity(1), 64).unwrap();
        assert!(matches!(inverse_square_integral(&table, 0.5), Err(Error::Divergence(_))));
    }

    #[test]
    fn growth_slope_matches_exponent() {
        let slope = inverse_growth_slope(&scalar_table(), 0.9, 0.999, 50).unwrap();
        assert!((slope + 0.25).abs() < 1e-10);
        let w = WeightSpec::plateau(0.6, 0.5, 2.0, 1.0).unwrap();
        let table = build_gramian(&nilpotent_sys(), &w, &GMatrix::identity(2), 64).unwrap();
        let slope = inverse_growth_slope(&table, 0.9, 0.999, 50).unwrap();
        assert!((slope + 0.4).abs() < 0.05, "{slope}");
    }
}
