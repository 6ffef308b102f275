//! Experiment documents: a JSON description of plant, weight, claim and
//! simulation budget, validated as a whole.

use serde::{Deserialize, Serialize};

use crate::claims::{Claim, ClaimSpec};
use crate::controller::{ControlLaw, DEFAULT_GRAMIAN_NODES};
use crate::error::{Error, Result};
use crate::linalg::{RealVector, SquareMatrix};
use crate::simulator::{TimeGrid, MIN_PATHS};
use crate::system::SystemSpec;
use crate::weight::{GMatrix, WeightForm, WeightSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub state_matrix: Vec<Vec<f64>>,
    pub input_matrix: Vec<Vec<f64>>,
    pub initial_state: Vec<f64>,
    pub horizon: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightFormKind {
    PurePower,
    Plateau,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConfig {
    pub form: WeightFormKind,
    pub alpha: f64,
    /// Plateau threshold; only meaningful for the plateau form.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    pub c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GMatrixConfig {
    pub entries: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub paths: usize,
    pub grid_n: usize,
    pub gamma: f64,
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub workers: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: String,
    /// Subset of `csv` and `summary`.
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: "out".into(),
            formats: vec!["csv".into(), "summary".into()],
        }
    }
}

/// Acceptance thresholds; a run fails iff a configured threshold is violated.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checks {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_mean_gap_sq: Option<f64>,
    /// Allowed `|mean cost - closed form|` in standard errors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_se_multiple: Option<f64>,
    /// Allowed `|mean cost - closed form| / closed form`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_rel_tol: Option<f64>,
    /// Upper bound on `MSE(2N) / MSE(N)` in convergence studies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_gap_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    pub system: SystemConfig,
    pub weight: WeightConfig,
    pub gmatrix: GMatrixConfig,
    pub claim: ClaimSpec,
    pub sim: SimConfig,
    #[serde(default = "default_gramian_nodes")]
    pub gramian_nodes: usize,
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default)]
    pub checks: Checks,
}

fn default_gramian_nodes() -> usize {
    DEFAULT_GRAMIAN_NODES
}

impl WeightConfig {
    fn form(&self) -> Result<WeightForm> {
        match (self.form, self.tau) {
            (WeightFormKind::PurePower, None) => Ok(WeightForm::PurePower),
            (WeightFormKind::PurePower, Some(_)) => Err(Error::invalid("tau is only allowed with the plateau form")),
            (WeightFormKind::Plateau, Some(tau)) => Ok(WeightForm::Plateau { tau }),
            (WeightFormKind::Plateau, None) => Err(Error::invalid("plateau weight needs tau")),
        }
    }

    pub fn build(&self, horizon: f64) -> Result<WeightSpec> {
        WeightSpec::new(self.form()?, self.alpha, self.c, horizon)
    }
}

impl ExperimentConfig {
    /// Every violated constraint; empty iff the configuration is usable.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.id.trim().is_empty() {
            out.push("id must not be empty".into());
        }
        let horizon = self.system.horizon;
        let system = self.build_system();
        if let Err(e) = &system {
            out.push(e.to_string());
        }
        match self.weight.form() {
            Ok(form) => {
                out.extend(WeightSpec::new_unchecked(form, self.weight.alpha, self.weight.c, horizon).violations())
            }
            Err(e) => out.push(e.to_string()),
        }
        match self.build_g() {
            Ok(g) => {
                if let Ok(sys) = &system {
                    if g.dim() != sys.dim() {
                        out.push(format!(
                            "G is {0}x{0} but the state has dimension {1}",
                            g.dim(),
                            sys.dim()
                        ));
                    }
                }
            }
            Err(e) => out.push(format!("G must be symmetric positive definite: {e}")),
        }
        out.extend(self.claim.violations());
        if let Ok(sys) = &system {
            if self.claim.dim() != sys.dim() {
                out.push(format!(
                    "claim has dimension {} but the state has dimension {}",
                    self.claim.dim(),
                    sys.dim()
                ));
            }
        }
        if self.sim.paths < MIN_PATHS {
            out.push(format!(
                "sim.paths must be at least {MIN_PATHS}, got {}",
                self.sim.paths
            ));
        }
        if let Err(e) = TimeGrid::new(horizon, self.sim.grid_n, self.sim.gamma) {
            out.push(e.to_string());
        }
        if self.gramian_nodes < 64 {
            out.push(format!("gramian_nodes must be at least 64, got {}", self.gramian_nodes));
        }
        for f in &self.outputs.formats {
            if f != "csv" && f != "summary" {
                out.push(format!("unknown output format {f:?} (expected csv or summary)"));
            }
        }
        let c = &self.checks;
        for (name, v) in [
            ("max_mean_gap_sq", c.max_mean_gap_sq),
            ("cost_se_multiple", c.cost_se_multiple),
            ("cost_rel_tol", c.cost_rel_tol),
            ("max_gap_ratio", c.max_gap_ratio),
        ] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    out.push(format!("checks.{name} must be a non-negative number, got {v}"));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }

    pub fn build_system(&self) -> Result<SystemSpec> {
        let s = &self.system;
        SystemSpec::new(
            SquareMatrix::from_rows(&s.state_matrix)?,
            SquareMatrix::from_rows(&s.input_matrix)?,
            RealVector::from_slice(&s.initial_state)?,
            s.horizon,
        )
    }

    pub fn build_g(&self) -> Result<GMatrix> {
        GMatrix::new(SquareMatrix::from_rows(&self.gmatrix.entries)?)
    }

    pub fn build_claim(&self) -> Result<Claim> {
        Claim::build(&self.claim, self.system.horizon)
    }

    pub fn build_law(&self) -> Result<ControlLaw> {
        self.validate()?;
        ControlLaw::new(
            self.build_system()?,
            self.weight.build(self.system.horizon)?,
            self.build_g()?,
            self.build_claim()?,
            self.gramian_nodes,
        )
    }

    pub fn build_grid(&self, grid_n: usize) -> Result<TimeGrid> {
        TimeGrid::new(self.system.horizon, grid_n, self.sim.gamma)
    }
}

/// Parses and validates a JSON experiment document, reporting every violation.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig =
        serde_json::from_str(text).map_err(|e| Error::Config(vec![format!("malformed configuration: {e}")]))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Pretty JSON that [`parse_config`] reads back unchanged.
pub fn emit_config(cfg: &ExperimentConfig) -> String {
    serde_json::to_string_pretty(cfg).expect("configuration serializes")
}
