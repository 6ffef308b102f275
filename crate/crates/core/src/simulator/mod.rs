//! Monte Carlo simulation of the optimally controlled plant.

mod grid;
mod monte_carlo;
mod path;
mod perturb;
mod rng;

pub use grid::{build_grid, TimeGrid};
pub use monte_carlo::{
    monte_carlo, perturbation_test, run_paths, Estimate, McReport, PerturbationReport, MAX_ABORT_FRACTION, MIN_PATHS,
};
pub use path::{replication_identity_defect, simulate_path, PathBundle, PerturbedResult, SimResult, Simulator};
pub use perturb::{PerturbationProfile, CONSTRAINT_TOL};
pub use rng::PathRng;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::claims::{Claim, ClaimSpec};
    use crate::controller::ControlLaw;
    use crate::system::SystemSpec;
    use crate::weight::{GMatrix, WeightSpec};

    fn scalar_law(claim: ClaimSpec, a: f64) -> ControlLaw {
        let sys = SystemSpec::scalar_integrator(a, 1.0).unwrap();
        let w = WeightSpec::pure_power(0.75, 1.0, 1.0).unwrap();
        let claim = Claim::build(&claim, 1.0).unwrap();
        ControlLaw::new(sys, w, GMatrix::identity(1), claim, 256).unwrap()
    }

    #[test]
    fn deterministic_claim_is_hit_exactly_at_zero_cost() {
        let law = scalar_law(ClaimSpec::deterministic(vec![0.0]), 0.0);
        let grid = build_grid(1.0, 64, 2.0).unwrap();
        let rep = monte_carlo(&law, &grid, 100, 1, 2).unwrap();
        assert_eq!(rep.gap_sq.mean, 0.0);
        assert_eq!(rep.cost.mean, 0.0);
        assert_eq!(rep.closed_form_cost, 0.0);
    }

    #[test]
    fn abel_identity_holds_per_path() {
        let law = scalar_law(ClaimSpec::scalar_brownian(), 0.0);
        let grid = build_grid(1.0, 512, 2.0).unwrap();
        let sim = Simulator::new(&law, &grid).unwrap();
        for i in 0..10 {
            let b = sim.simulate_traced(&mut PathRng::new(3, i)).unwrap();
            assert!(replication_identity_defect(&sim, &b) < 1e-12);
            assert!(b.cost.windows(2).all(|w| w[1] >= w[0]));
            assert_eq!(b.x.len(), 513);
        }
    }

    #[test]
    fn scalar_cost_is_near_one_third() {
        let law = scalar_law(ClaimSpec::scalar_brownian(), 0.0);
        let grid = build_grid(1.0, 1024, 2.0).unwrap();
        let rep = monte_carlo(&law, &grid, 4000, 11, 0).unwrap();
        assert!((rep.closed_form_cost - 1.0 / 3.0).abs() < 1e-6);
        assert!(rep.cost.within(1.0 / 3.0, 4.0), "{rep:?}");
        assert!(rep.gap_sq.mean < 1e-3);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let law = scalar_law(ClaimSpec::scalar_brownian(), 0.0);
        let grid = build_grid(1.0, 128, 2.0).unwrap();
        let a = monte_carlo(&law, &grid, 300, 5, 1).unwrap();
        let b = monte_carlo(&law, &grid, 300, 5, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_few_paths_rejected() {
        let law = scalar_law(ClaimSpec::scalar_brownian(), 0.0);
        let grid = build_grid(1.0, 16, 1.0).unwrap();
        assert!(monte_carlo(&law, &grid, 99, 0, 1).is_err());
    }

    #[test]
    fn zero_perturbation_changes_nothing() {
        let law = scalar_law(ClaimSpec::scalar_brownian(), 0.0);
        let grid = build_grid(1.0, 64, 2.0).unwrap();
        let rep = perturbation_test(&law, &grid, &PerturbationProfile::zero(1, 1.0), 100, 2, 2).unwrap();
        assert_eq!(rep.cost_opt, rep.cost_perturbed);
        assert_eq!(rep.gap_sq_opt, rep.gap_sq_perturbed);
        assert_eq!(rep.expected_increase, 0.0);
    }

    #[test]
    fn unbalanced_profile_rejected() {
        let law = scalar_law(ClaimSpec::scalar_brownian(), 0.0);
        let grid = build_grid(1.0, 64, 2.0).unwrap();
        let h = PerturbationProfile {
            breakpoints: vec![0.0, 1.0],
            levels: vec![vec![1.0]],
        };
        assert!(matches!(
            perturbation_test(&law, &grid, &h, 100, 0, 1),
            Err(crate::Error::InvalidProfile(_))
        ));
    }

    #[test]
    fn perturbation_cost_is_quadratic_in_h() {
        let law = scalar_law(ClaimSpec::scalar_brownian(), 0.0);
        let h = PerturbationProfile::balanced_two_piece(&law, &[1.0]).unwrap();
        let q1 = h.quadratic_cost(&law).unwrap();
        let q2 = h.scaled(2.0).quadratic_cost(&law).unwrap();
        assert!((q2 - 4.0 * q1).abs() < 1e-12 * q2);
        // Independent oracle: h2 from R(s) = 4(1-s)^{1/4}, cost ∫ h² (1-t)^{-3/4}.
        let r = |s: f64| 4.0 * (1.0f64 - s).powf(0.25);
        let h2 = -(r(0.0) - r(0.5)) / r(0.5);
        let oracle = (r(0.0) - r(0.5)) + h2 * h2 * r(0.5);
        assert!((q1 - oracle).abs() < 1e-8, "{q1} vs {oracle}");
    }
}
