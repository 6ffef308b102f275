//! Built-in experiments, runnable without writing a configuration.

use super::config::{
    Checks, ExperimentConfig, GMatrixConfig, OutputConfig, SimConfig, SystemConfig, WeightConfig, WeightFormKind,
};
use crate::claims::{ClaimSpec, Coefficient, DiffusionSpec, HSolverSpec, Measure, PayoffSpec};
use crate::controller::DEFAULT_GRAMIAN_NODES;
use crate::error::{Error, Result};

pub const PRESET_NAMES: [&str; 6] = [
    "scalar-w",
    "scalar-w2",
    "nilpotent-2d",
    "markov-square",
    "markov-cos",
    "girsanov-linear",
];

pub const DEFAULT_SEED: u64 = 20_240_601;

/// One-line description of each preset, in [`PRESET_NAMES`] order.
pub fn preset_description(name: &str) -> Option<&'static str> {
    Some(match name {
        "scalar-w" => "n=d=1, A=0, b=G=1, g=(1-t)^(3/4), T=1, a=0, f=w(1); optimal cost 1/3",
        "scalar-w2" => "as scalar-w with f=w(1)^2; optimal cost 85/84",
        "nilpotent-2d" => "A=[[0,1],[0,0]], b=G=I, a=(1,0), f=w(1)+(0.5,-0.5) with 2-d Brownian w",
        "markov-square" => "f=y(1)^2, y Brownian from 0.5, H by Crank-Nicolson",
        "markov-cos" => "f=cos y(1), y Brownian from 0.3, H by Crank-Nicolson",
        "girsanov-linear" => "f=y(1), dy=0.5 y dt + dw from 1, replicated with dy-driven increments",
        _ => return None,
    })
}

fn scalar_system() -> SystemConfig {
    SystemConfig {
        state_matrix: vec![vec![0.0]],
        input_matrix: vec![vec![1.0]],
        initial_state: vec![0.0],
        horizon: 1.0,
    }
}

fn standard_weight() -> WeightConfig {
    WeightConfig {
        form: WeightFormKind::PurePower,
        alpha: 0.75,
        tau: None,
        c: 1.0,
    }
}

fn base(id: &str, system: SystemConfig, claim: ClaimSpec) -> ExperimentConfig {
    let n = system.initial_state.len();
    let gmatrix = GMatrixConfig {
        entries: (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect(),
    };
    ExperimentConfig {
        id: id.into(),
        system,
        weight: standard_weight(),
        gmatrix,
        claim,
        sim: SimConfig {
            paths: 20_000,
            grid_n: 4096,
            gamma: 2.0,
            seed: DEFAULT_SEED,
            workers: 0,
        },
        gramian_nodes: DEFAULT_GRAMIAN_NODES,
        outputs: OutputConfig::default(),
        checks: Checks {
            max_mean_gap_sq: Some(1e-3),
            cost_se_multiple: Some(3.0),
            cost_rel_tol: None,
            max_gap_ratio: Some(0.7),
        },
    }
}

fn heat_claim(payoff: PayoffSpec, y0: f64) -> ClaimSpec {
    ClaimSpec::MarkovTerminal1d {
        payoff,
        diffusion: DiffusionSpec::brownian(y0),
        solver: HSolverSpec::FiniteDifference {
            space_nodes: 200,
            time_steps: 200,
            gamma: 2.0,
        },
        measure: Measure::Physical,
    }
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let cfg = match name {
        "scalar-w" => {
            let mut c = base(name, scalar_system(), ClaimSpec::scalar_brownian());
            c.checks.cost_rel_tol = Some(0.02);
            c
        }
        "scalar-w2" => base(
            name,
            scalar_system(),
            ClaimSpec::MarkovTerminal1d {
                payoff: PayoffSpec::Square,
                diffusion: DiffusionSpec::brownian(0.0),
                solver: HSolverSpec::Analytic,
                measure: Measure::Physical,
            },
        ),
        "nilpotent-2d" => base(
            name,
            SystemConfig {
                state_matrix: vec![vec![0.0, 1.0], vec![0.0, 0.0]],
                input_matrix: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                initial_state: vec![1.0, 0.0],
                horizon: 1.0,
            },
            ClaimSpec::brownian_2d(),
        ),
        "markov-square" => base(name, scalar_system(), heat_claim(PayoffSpec::Square, 0.5)),
        "markov-cos" => base(name, scalar_system(), heat_claim(PayoffSpec::Cosine, 0.3)),
        "girsanov-linear" => {
            let mut c = base(
                name,
                scalar_system(),
                ClaimSpec::MarkovTerminal1d {
                    payoff: PayoffSpec::Linear,
                    diffusion: DiffusionSpec {
                        drift: Coefficient::Affine {
                            slope: 0.5,
                            intercept: 0.0,
                        },
                        ..DiffusionSpec::brownian(1.0)
                    },
                    solver: HSolverSpec::FiniteDifference {
                        space_nodes: 201,
                        time_steps: 100,
                        gamma: 2.0,
                    },
                    measure: Measure::GirsanovQ,
                },
            );
            // The realized cost averages under the physical measure while the
            // closed form is its minimum under Q, so only replication is checked.
            c.checks.cost_se_multiple = None;
            c
        }
        other => {
            return Err(Error::invalid(format!(
                "unknown preset {other:?}; available: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    debug_assert!(cfg.validate().is_ok());
    Ok(cfg)
}
