//! The optimal control law.
//!
//! With `q = e^{AT} a`, the multiplier martingale is
//! `μ(t) = R(0)^{-1}(E f - q) + ∫_0^t R(s)^{-1} k_f(s) dw(s)`, the adjoint is
//! `ψ(t) = e^{Aᵀ(T-t)} μ(t)` and the control is `û(t) = Γ(t)^{-1} bᵀ ψ(t)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::claims::{Claim, Measure};
use crate::error::{Error, Result};
use crate::gramian::{GramianTable, QKernel};
use crate::linalg::spd_inverse;
use crate::quadrature::SingularRule;
use crate::system::SystemSpec;
use crate::weight::{GMatrix, WeightSpec};

pub const DEFAULT_GRAMIAN_NODES: usize = 256;

/// Everything needed to evaluate `û` and its cost.
#[derive(Clone, Debug)]
pub struct ControlLaw {
    system: SystemSpec,
    g: GMatrix,
    gramian: Arc<GramianTable>,
    claim: Arc<Claim>,
    free_terminal: DVector<f64>,
    claim_mean: DVector<f64>,
    mu_bar: DVector<f64>,
}

impl ControlLaw {
    pub fn new(system: SystemSpec, weight: WeightSpec, g: GMatrix, claim: Claim, gramian_nodes: usize) -> Result<Self> {
        let horizon = system.horizon();
        if weight.horizon() != horizon || claim.horizon() != horizon {
            return Err(Error::invalid(format!(
                "horizons disagree: system {horizon}, weight {}, claim {}",
                weight.horizon(),
                claim.horizon()
            )));
        }
        if claim.dim() != system.dim() {
            return Err(Error::invalid(format!(
                "claim has dimension {} but the system has dimension {}",
                claim.dim(),
                system.dim()
            )));
        }
        let gramian = GramianTable::build(QKernel::new(&system, &weight, &g)?, gramian_nodes)?;
        let free_terminal = system.free_terminal_state();
        let claim_mean = claim.mean()?;
        let r0_inv = spd_inverse(&gramian.at(0.0)?)?;
        let mu_bar = &r0_inv * (&claim_mean - &free_terminal);
        Ok(Self {
            system,
            g,
            gramian: Arc::new(gramian),
            claim: Arc::new(claim),
            free_terminal,
            claim_mean,
            mu_bar,
        })
    }

    pub fn system(&self) -> &SystemSpec {
        &self.system
    }

    pub fn weight(&self) -> &WeightSpec {
        self.gramian.weight()
    }

    pub fn g_matrix(&self) -> &GMatrix {
        &self.g
    }

    pub fn gramian(&self) -> &GramianTable {
        &self.gramian
    }

    pub fn claim(&self) -> &Claim {
        &self.claim
    }

    pub fn horizon(&self) -> f64 {
        self.system.horizon()
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    /// `q = e^{AT} a`.
    pub fn free_terminal_state(&self) -> &DVector<f64> {
        &self.free_terminal
    }

    pub fn claim_mean(&self) -> &DVector<f64> {
        &self.claim_mean
    }

    /// `μ̄ = R(0)^{-1}(E f - q)`.
    pub fn mu_bar(&self) -> &DVector<f64> {
        &self.mu_bar
    }

    /// `ψ(t) = e^{Aᵀ(T-t)} μ(t)`, `t ∈ [0, T]`.
    pub fn adjoint_psi(&self, t: f64, mu_t: &DVector<f64>) -> Result<DVector<f64>> {
        let horizon = self.horizon();
        if !(t >= 0.0 && t <= horizon) {
            return Err(Error::Domain { t, horizon });
        }
        Ok(self.system.propagator(horizon - t).transpose() * mu_t)
    }

    /// `û(t) = g(t)^{-1} G^{-1} bᵀ ψ(t)`, `t ∈ [0, T)`.
    pub fn u_value(&self, t: f64, mu_t: &DVector<f64>) -> Result<DVector<f64>> {
        let g = self.weight().value(t)?;
        let psi = self.adjoint_psi(t, mu_t)?;
        Ok(self.g.inverse() * self.system.input_matrix().transpose() * psi / g)
    }

    /// Optimal cost using the claim's own second-moment function.
    pub fn optimal_cost(&self) -> Result<CostBreakdown> {
        let moments = self.claim.second_moment().clone();
        self.optimal_cost_with(move |t| moments.at(t))
    }

    /// `(Ef - q)ᵀ R(0)^{-1} (Ef - q) + ∫_0^T tr(R(t)^{-1} E[k_f k_fᵀ](t)) dt`.
    pub fn optimal_cost_with(&self, second_moment: impl Fn(f64) -> DMatrix<f64>) -> Result<CostBreakdown> {
        let horizon = self.horizon();
        let gap = &self.claim_mean - &self.free_terminal;
        let mean_term = gap.dot(&self.mu_bar);
        let alpha = self.weight().alpha();
        let integrate = |panels: usize| -> Result<f64> {
            let rule = SingularRule::new(alpha, 16, panels, 40);
            let mut acc = 0.0;
            for (rem, w) in rule.points(0.0, horizon) {
                let r_inv = self.gramian.inverse_at_remaining(rem)?;
                acc += w * (r_inv * second_moment(horizon - rem)).trace();
            }
            Ok(acc)
        };
        let coarse = integrate(32)?;
        let fine = integrate(64)?;
        if !fine.is_finite() || (fine - coarse).abs() > 1e-4 * fine.abs().max(1e-12) {
            return Err(Error::Integrability(format!(
                "cost quadrature did not settle ({coarse} vs {fine})"
            )));
        }
        Ok(CostBreakdown {
            mean_term,
            martingale_term: fine,
            total: mean_term + fine,
            measure: self.claim.measure(),
        })
    }

    /// The same optimal cost computed as `∫_0^T tr(Q(t) E[μ(t)μ(t)ᵀ]) dt` with
    /// `E[μμᵀ](t) = μ̄μ̄ᵀ + ∫_0^t R^{-1} E[k_f k_fᵀ] R^{-1} ds`.
    pub fn optimal_cost_via_mu_variance(&self, second_moment: impl Fn(f64) -> DMatrix<f64>) -> Result<f64> {
        let horizon = self.horizon();
        let alpha = self.weight().alpha();
        let kernel = self.gramian.kernel();
        let outer = SingularRule::new(1.0 - alpha, 16, 64, 40);
        let inner_beta = 2.0 * alpha - 1.0;
        let inner = SingularRule::new(inner_beta, 16, 1, 0);
        let mut points = outer.points(0.0, horizon);
        points.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let n = self.dim();
        let mu_outer = &self.mu_bar * self.mu_bar.transpose();
        let mut spread = DMatrix::zeros(n, n);
        let mut last_rem = horizon;
        let mut acc = 0.0;
        for (rem, w) in points {
            for (e, wi) in inner.points(rem, last_rem) {
                let r_inv = self.gramian.inverse_at_remaining(e)?;
                spread += &r_inv * second_moment(horizon - e) * &r_inv * wi;
            }
            last_rem = rem;
            acc += w * (kernel.at_remaining(rem) * (&mu_outer + &spread)).trace();
        }
        if !acc.is_finite() {
            return Err(Error::Integrability("non-finite multiplier variance integral".into()));
        }
        Ok(acc)
    }
}

/// Optimal value of `E ∫ uᵀ Γ u dt`, split into its two contributions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostBreakdown {
    /// `(Ef - q)ᵀ R(0)^{-1} (Ef - q)`
    pub mean_term: f64,
    /// `∫ tr(R^{-1} E[k_f k_fᵀ]) dt`
    pub martingale_term: f64,
    pub total: f64,
    /// Expectation under which the cost is minimal.
    pub measure: Measure,
}

pub fn mu_bar(law: &ControlLaw) -> DVector<f64> {
    law.mu_bar().clone()
}

pub fn adjoint_psi(law: &ControlLaw, t: f64, mu_t: &DVector<f64>) -> Result<DVector<f64>> {
    law.adjoint_psi(t, mu_t)
}

pub fn u_value(law: &ControlLaw, t: f64, mu_t: &DVector<f64>) -> Result<DVector<f64>> {
    law.u_value(t, mu_t)
}

pub fn optimal_cost_closed_form(law: &ControlLaw, second_moment: impl Fn(f64) -> DMatrix<f64>) -> Result<f64> {
    Ok(law.optimal_cost_with(second_moment)?.total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::claims::{ClaimSpec, DiffusionSpec, HSolverSpec, PayoffSpec};
    use crate::linalg::{RealVector, SquareMatrix};
    use nalgebra::dvector;

    fn scalar_law(a: f64, claim: &ClaimSpec) -> ControlLaw {
        ControlLaw::new(
            SystemSpec::scalar_integrator(a, 1.0).unwrap(),
            WeightSpec::pure_power(0.75, 1.0, 1.0).unwrap(),
            GMatrix::identity(1),
            Claim::build(claim, 1.0).unwrap(),
            DEFAULT_GRAMIAN_NODES,
        )
        .unwrap()
    }

    fn square_claim() -> ClaimSpec {
        ClaimSpec::MarkovTerminal1d {
            payoff: PayoffSpec::Square,
            diffusion: DiffusionSpec::brownian(0.0),
            solver: HSolverSpec::Analytic,
            measure: Measure::Physical,
        }
    }

    fn nilpotent_law(claim: ClaimSpec) -> ControlLaw {
        let sys = SystemSpec::new(
            SquareMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap(),
            SquareMatrix::identity(2),
            RealVector::from_slice(&[1.0, 0.0]).unwrap(),
            1.0,
        )
        .unwrap();
        ControlLaw::new(
            sys,
            WeightSpec::pure_power(0.75, 1.0, 1.0).unwrap(),
            GMatrix::identity(2),
            Claim::build(&claim, 1.0).unwrap(),
            64,
        )
        .unwrap()
    }

    #[test]
    fn mu_bar_examples() {
        assert_eq!(mu_bar(&scalar_law(0.0, &ClaimSpec::scalar_brownian()))[0], 0.0);
        assert!((mu_bar(&scalar_law(1.0, &ClaimSpec::scalar_brownian()))[0] + 0.25).abs() < 1e-14);
        assert!((mu_bar(&scalar_law(0.0, &square_claim()))[0] - 0.25).abs() < 1e-14);
    }

    #[test]
    fn adjoint_examples() {
        let law = scalar_law(0.0, &ClaimSpec::scalar_brownian());
        assert_eq!(adjoint_psi(&law, 0.3, &dvector![2.0]).unwrap()[0], 2.0);
        let law = nilpotent_law(ClaimSpec::brownian_2d());
        let mu = dvector![0.5, -1.5];
        for t in [0.0, 0.4, 1.0] {
            let psi = adjoint_psi(&law, t, &mu).unwrap();
            let r = 1.0 - t;
            assert!((psi[0] - mu[0]).abs() < 1e-14);
            assert!((psi[1] - (r * mu[0] + mu[1])).abs() < 1e-14);
        }
        assert!(adjoint_psi(&law, 1.5, &mu).is_err());
    }

    #[test]
    fn u_value_examples() {
        let law = scalar_law(0.0, &ClaimSpec::scalar_brownian());
        assert_eq!(u_value(&law, 0.2, &dvector![0.0]).unwrap()[0], 0.0);
        assert!((u_value(&law, 0.5, &dvector![1.0]).unwrap()[0] - 1.681_793).abs() < 1e-6);
        assert!((u_value(&law, 0.0, &dvector![-0.25]).unwrap()[0] + 0.25).abs() < 1e-15);
        assert!(matches!(u_value(&law, 1.0, &dvector![1.0]), Err(Error::Domain { .. })));
    }

    #[test]
    fn closed_form_costs() {
        let law = scalar_law(0.0, &ClaimSpec::scalar_brownian());
        let c = law.optimal_cost().unwrap();
        assert!((c.total - 1.0 / 3.0).abs() < 1e-10, "{c:?}");
        let law = scalar_law(1.0, &ClaimSpec::scalar_brownian());
        assert!((law.optimal_cost().unwrap().total - 7.0 / 12.0).abs() < 1e-10);
        let law = scalar_law(0.0, &square_claim());
        let c = law.optimal_cost().unwrap();
        assert!((c.mean_term - 0.25).abs() < 1e-14);
        assert!((c.martingale_term - 16.0 / 21.0).abs() < 1e-10);
        assert!((c.total - 85.0 / 84.0).abs() < 1e-10);
    }

    #[test]
    fn deterministic_replicable_claim_costs_nothing() {
        let law = scalar_law(0.7, &ClaimSpec::deterministic(vec![0.7]));
        assert_eq!(law.mu_bar()[0], 0.0);
        assert_eq!(law.optimal_cost().unwrap().total, 0.0);
    }

    #[test]
    fn quadratic_homogeneity() {
        let base = scalar_law(1.0, &ClaimSpec::scalar_brownian())
            .optimal_cost()
            .unwrap()
            .total;
        // doubling a and the kernel doubles μ̄ and k_f
        let doubled = ClaimSpec::LinearTerminal {
            coeff: vec![vec![2.0]],
            offset: vec![0.0],
        };
        let scaled = scalar_law(2.0, &doubled).optimal_cost().unwrap().total;
        assert!((scaled - 4.0 * base).abs() < 1e-10);
    }

    #[test]
    fn mu_variance_route_agrees() {
        for claim in [ClaimSpec::scalar_brownian(), square_claim()] {
            let law = scalar_law(0.5, &claim);
            let moments = law.claim().second_moment().clone();
            let closed = law.optimal_cost().unwrap().total;
            let alt = law.optimal_cost_via_mu_variance(|t| moments.at(t)).unwrap();
            assert!((closed - alt).abs() < 1e-6, "{closed} vs {alt}");
        }
    }

    #[test]
    fn mu_variance_route_agrees_nilpotent() {
        let law = nilpotent_law(ClaimSpec::brownian_2d());
        let moments = law.claim().second_moment().clone();
        let closed = law.optimal_cost().unwrap().total;
        let alt = law.optimal_cost_via_mu_variance(|t| moments.at(t)).unwrap();
        assert!((closed - alt).abs() < 1e-6 * closed, "{closed} vs {alt}");
    }

    #[test]
    fn horizon_mismatch_rejected() {
        let err = ControlLaw::new(
            SystemSpec::scalar_integrator(0.0, 2.0).unwrap(),
            WeightSpec::pure_power(0.75, 1.0, 1.0).unwrap(),
            GMatrix::identity(1),
            Claim::build(&ClaimSpec::scalar_brownian(), 1.0).unwrap(),
            64,
        );
        assert!(err.is_err());
    }
}
