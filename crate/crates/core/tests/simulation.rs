use exactrep::experiments::{converge, preset, run, ExperimentConfig, WeightFormKind};
use exactrep::simulator::{
    build_grid, monte_carlo, perturbation_test, replication_identity_defect, PathRng, PerturbationProfile, Simulator,
};

fn small(name: &str, paths: usize, grid_n: usize) -> ExperimentConfig {
    let mut c = preset(name).unwrap();
    c.sim.paths = paths;
    c.sim.grid_n = grid_n;
    c
}

#[test]
fn replication_identity_holds_for_every_preset() {
    for name in exactrep::experiments::PRESET_NAMES {
        let c = small(name, 100, 256);
        let law = c.build_law().unwrap();
        let grid = c.build_grid(256).unwrap();
        let sim = Simulator::new(&law, &grid).unwrap();
        for i in 0..20 {
            let b = sim.simulate_traced(&mut PathRng::new(1, i)).unwrap();
            let defect = replication_identity_defect(&sim, &b);
            assert!(defect < 1e-12, "{name}: {defect}");
        }
    }
}

#[test]
fn nilpotent_cost_matches_closed_form() {
    let out = run(&small("nilpotent-2d", 4000, 1024)).unwrap();
    let rep = &out.reports[0];
    assert!(rep.cost.within(rep.closed_form_cost, 3.0), "{rep:?}");
    assert!(rep.gap_sq.mean < 1e-3);
}

#[test]
fn markov_cos_cost_matches_closed_form() {
    let out = run(&small("markov-cos", 4000, 1024)).unwrap();
    let rep = &out.reports[0];
    assert!(rep.cost.within(rep.closed_form_cost, 3.0), "{rep:?}");
}

#[test]
fn plateau_weight_cost_matches_closed_form() {
    let mut c = small("scalar-w", 4000, 1024);
    c.weight.form = WeightFormKind::Plateau;
    c.weight.tau = Some(0.5);
    c.weight.c = 2.0;
    let out = run(&c).unwrap();
    let rep = &out.reports[0];
    assert!(rep.cost.within(rep.closed_form_cost, 3.0), "{rep:?}");
    // 1/g = 1 < (1-t)^{-3/4} on the plateau shrinks R, so ∫1/R exceeds 1/3.
    assert!(rep.closed_form_cost > 1.0 / 3.0);
}

#[test]
fn admissibility_estimates_are_stable_under_refinement() {
    let c = small("scalar-w", 4000, 512);
    let law = c.build_law().unwrap();
    let coarse = monte_carlo(&law, &build_grid(1.0, 512, 2.0).unwrap(), 4000, 5, 0).unwrap();
    let fine = monte_carlo(&law, &build_grid(1.0, 1024, 2.0).unwrap(), 4000, 5, 0).unwrap();
    for (a, b) in [
        (coarse.abs_control_sq.mean, fine.abs_control_sq.mean),
        (coarse.weighted_control_sq.mean, fine.weighted_control_sq.mean),
    ] {
        assert!(a.is_finite() && b.is_finite());
        let r = b / a;
        assert!((0.8..=1.2).contains(&r), "{r}");
    }
}

#[test]
fn perturbation_increase_scales_quadratically() {
    let c = small("scalar-w", 2000, 512);
    let law = c.build_law().unwrap();
    let grid = build_grid(1.0, 512, 2.0).unwrap();
    let h = PerturbationProfile::balanced_two_piece(&law, &[0.5]).unwrap();
    let one = perturbation_test(&law, &grid, &h, 2000, 4, 0).unwrap();
    let two = perturbation_test(&law, &grid, &h.scaled(2.0), 2000, 4, 0).unwrap();
    assert!((two.expected_increase - 4.0 * one.expected_increase).abs() < 1e-12);
    assert!(one.expected_increase > 0.0);
    assert!(one.increase.within(one.expected_increase, 3.0), "{one:?}");
    assert!(one.cross_term.within(0.0, 3.0));
    assert!(one.gap_sq_shift.mean.abs() < 1e-12);
}

#[test]
fn perturbation_of_nilpotent_plant_preserves_replication() {
    let c = small("nilpotent-2d", 1000, 256);
    let law = c.build_law().unwrap();
    let grid = build_grid(1.0, 256, 2.0).unwrap();
    let h = PerturbationProfile::balanced_two_piece(&law, &[1.0, -0.5]).unwrap();
    assert!(h.constraint_residual(&law).unwrap().amax() < 1e-10);
    let rep = perturbation_test(&law, &grid, &h, 1000, 2, 0).unwrap();
    assert!(rep.gap_sq_shift.mean.abs() < 1e-12);
    assert!(rep.increase.within(rep.expected_increase, 3.0), "{rep:?}");
}

#[test]
fn single_step_count_gives_one_row_without_ratio() {
    let out = converge(&small("scalar-w", 200, 64), &[64]).unwrap();
    assert_eq!(out.rows.len(), 1);
    assert!(out.rows[0].gap_ratio.is_none());
}

#[test]
fn mean_gap_decreases_with_refinement() {
    let out = converge(&small("scalar-w2", 2000, 64), &[128, 256, 512]).unwrap();
    let gaps: Vec<f64> = out.rows.iter().map(|r| r.mean_gap_sq).collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}
