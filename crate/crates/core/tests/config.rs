use exactrep::claims::{ClaimSpec, Coefficient, DiffusionSpec, HSolverSpec, Measure, PayoffSpec};
use exactrep::experiments::{emit_config, parse_config, preset, ExperimentConfig, WeightFormKind, PRESET_NAMES};
use exactrep::Error;
use proptest::prelude::*;

fn scalar_doc() -> String {
    r#"{
        "id": "scalar",
        "system": {"state_matrix": [[0.0]], "input_matrix": [[1.0]], "initial_state": [0.0], "horizon": 1.0},
        "weight": {"form": "pure-power", "alpha": 0.75, "c": 1.0},
        "gmatrix": {"entries": [[1.0]]},
        "claim": {"variant": "linear-terminal", "coeff": [[1.0]], "offset": [0.0]},
        "sim": {"paths": 1000, "grid_n": 256, "gamma": 2.0, "seed": 7}
    }"#
    .to_string()
}

fn violations(text: &str) -> Vec<String> {
    match parse_config(text) {
        Err(Error::Config(v)) => v,
        other => panic!("expected configuration errors, got {other:?}"),
    }
}

#[test]
fn scalar_benchmark_is_valid() {
    let cfg = parse_config(&scalar_doc()).unwrap();
    assert_eq!(cfg.weight.alpha, 0.75);
    assert_eq!(cfg.sim.workers, 0);
    assert_eq!(cfg.outputs.formats, vec!["csv", "summary"]);
}

#[test]
fn exponent_outside_range_is_rejected_with_condition() {
    let v = violations(&scalar_doc().replace("0.75", "0.4"));
    assert!(v.iter().any(|m| m.contains("(0.5, 1)")), "{v:?}");
}

#[test]
fn singular_input_matrix_is_rejected() {
    let v = violations(&scalar_doc().replace(r#""input_matrix": [[1.0]]"#, r#""input_matrix": [[0.0]]"#));
    assert!(v.iter().any(|m| m.contains("non-degenerate")), "{v:?}");
}

#[test]
fn non_spd_weight_factor_is_rejected() {
    let v = violations(&scalar_doc().replace(r#""entries": [[1.0]]"#, r#""entries": [[-2.0]]"#));
    assert!(v.iter().any(|m| m.contains("positive definite")), "{v:?}");
}

#[test]
fn every_violation_is_reported() {
    let doc = scalar_doc()
        .replace("0.75", "1.2")
        .replace(r#""input_matrix": [[1.0]]"#, r#""input_matrix": [[0.0]]"#)
        .replace(r#""paths": 1000"#, r#""paths": 5"#)
        .replace(r#""gamma": 2.0"#, r#""gamma": 0.5"#);
    assert_eq!(violations(&doc).len(), 4, "{:?}", violations(&doc));
}

#[test]
fn malformed_and_unknown_keys_are_rejected() {
    assert!(matches!(parse_config("{"), Err(Error::Config(_))));
    let doc = scalar_doc().replace(r#""id": "scalar","#, r#""id": "scalar", "colour": 3,"#);
    assert!(matches!(parse_config(&doc), Err(Error::Config(_))));
}

#[test]
fn plateau_needs_tau_inside_horizon() {
    let doc = scalar_doc().replace(r#""form": "pure-power""#, r#""form": "plateau""#);
    assert!(violations(&doc).iter().any(|m| m.contains("tau")));
    let doc = scalar_doc().replace(r#""form": "pure-power""#, r#""form": "plateau", "tau": 1.5"#);
    assert!(violations(&doc).iter().any(|m| m.contains("tau")));
    let doc = scalar_doc()
        .replace(r#""form": "pure-power""#, r#""form": "plateau", "tau": 0.5"#)
        .replace(r#""c": 1.0"#, r#""c": 2.0"#);
    let cfg = parse_config(&doc).unwrap();
    assert_eq!(cfg.weight.form, WeightFormKind::Plateau);
}

#[test]
fn claim_dimension_must_match_state() {
    let doc = scalar_doc().replace(r#""offset": [0.0]"#, r#""offset": [0.0, 1.0]"#);
    assert!(!violations(&doc).is_empty());
}

#[test]
fn presets_are_valid_and_round_trip() {
    for name in PRESET_NAMES {
        let cfg = preset(name).unwrap();
        assert_eq!(cfg.id, name);
        assert_eq!(parse_config(&emit_config(&cfg)).unwrap(), cfg);
    }
    assert!(preset("nope").is_err());
}

fn arb_claim() -> impl Strategy<Value = ClaimSpec> {
    prop_oneof![
        (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(c, d)| ClaimSpec::LinearTerminal {
            coeff: vec![vec![c]],
            offset: vec![d],
        }),
        (-2.0..2.0f64, 0.8..2.0f64, -0.5..0.5f64, any::<bool>()).prop_map(|(y0, vol, kappa, q)| {
            ClaimSpec::MarkovTerminal1d {
                payoff: PayoffSpec::Cosine,
                diffusion: DiffusionSpec {
                    drift: Coefficient::Affine {
                        slope: kappa,
                        intercept: 0.0,
                    },
                    vol: Coefficient::Constant { value: vol },
                    y0,
                    ellipticity_floor: 0.1,
                },
                solver: HSolverSpec::FiniteDifference {
                    space_nodes: 101,
                    time_steps: 50,
                    gamma: 1.5,
                },
                measure: if q { Measure::GirsanovQ } else { Measure::Physical },
            }
        }),
    ]
}

fn arb_config() -> impl Strategy<Value = ExperimentConfig> {
    (
        0.51..0.99f64,
        0.1..5.0f64,
        -2.0..2.0f64,
        0.5..4.0f64,
        0.5..3.0f64,
        arb_claim(),
        (100usize..100_000, 2usize..10_000, 1.0..4.0f64, any::<u64>(), 0usize..16),
    )
        .prop_map(
            |(alpha, horizon, a, b, g, claim, (paths, grid_n, gamma, seed, workers))| {
                let mut cfg = preset("scalar-w").unwrap();
                cfg.id = format!("random-{seed}");
                cfg.weight.alpha = alpha;
                // c large enough for both growth bounds on [0, horizon].
                cfg.weight.c = 2.0 * (1.0 + horizon.powf(alpha));
                cfg.system.horizon = horizon;
                cfg.system.state_matrix = vec![vec![a]];
                cfg.system.input_matrix = vec![vec![b]];
                cfg.gmatrix.entries = vec![vec![g]];
                cfg.claim = claim;
                cfg.sim.paths = paths;
                cfg.sim.grid_n = grid_n;
                cfg.sim.gamma = gamma;
                cfg.sim.seed = seed;
                cfg.sim.workers = workers;
                cfg
            },
        )
}

proptest! {
    #[test]
    fn parse_inverts_emit(cfg in arb_config()) {
        prop_assert!(cfg.validate().is_ok(), "{:?}", cfg.violations());
        prop_assert_eq!(parse_config(&emit_config(&cfg)).unwrap(), cfg);
    }
}
