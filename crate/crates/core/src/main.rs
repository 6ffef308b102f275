use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use exactrep::experiments::{
    converge, cost_table, parse_config, pde_check, preset, preset_description, run, write_cost_table, ExperimentConfig,
    DEFAULT_RESOLUTIONS, PRESET_NAMES,
};

#[derive(Parser)]
#[command(
    name = "exactrep",
    version,
    about = "Optimal replication of terminal claims by degenerate-weight controls"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo run checked against the closed-form cost.
    Run(Common),
    /// Mean terminal gap over a sequence of step counts.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Comma-separated, strictly increasing step counts.
        #[arg(long, value_delimiter = ',', default_values_t = [512usize, 1024, 2048, 4096])]
        n_list: Vec<usize>,
    },
    /// Finite-difference H against its closed form.
    PdeCheck {
        #[command(flatten)]
        common: Common,
        /// Comma-separated SPACExTIME resolutions, e.g. 100x100,200x200.
        #[arg(long, value_delimiter = ',')]
        resolutions: Vec<String>,
    },
    /// Closed-form optimal costs (all presets when no experiment is given).
    CostTable(Common),
    /// List the built-in presets.
    Presets,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment document.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in experiment name.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    grid_n: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory (overrides the configuration).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn has_source(&self) -> bool {
        self.config.is_some() || self.preset.is_some()
    }

    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                parse_config(&text)?
            }
            (None, Some(name)) => preset(name)?,
            (None, None) => bail!("give --config PATH or --preset NAME"),
        };
        if let Some(v) = self.seed {
            cfg.sim.seed = v;
        }
        if let Some(v) = self.paths {
            cfg.sim.paths = v;
        }
        if let Some(v) = self.grid_n {
            cfg.sim.grid_n = v;
        }
        if let Some(v) = self.gamma {
            cfg.sim.gamma = v;
        }
        if let Some(v) = self.workers {
            cfg.sim.workers = v;
        }
        if let Some(v) = &self.out {
            cfg.outputs.directory = v.display().to_string();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn out_dir(&self, cfg: Option<&ExperimentConfig>) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.map(|c| PathBuf::from(&c.outputs.directory)))
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

fn parse_resolution(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .with_context(|| format!("resolution {s:?} is not of the form SPACExTIME"))?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

fn report_files(files: &[PathBuf]) {
    for f in files {
        eprintln!("wrote {}", f.display());
    }
}

fn finish(summary: &str, failures: &[String], files: &[PathBuf]) -> ExitCode {
    print!("{summary}");
    report_files(files);
    if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run(common) => {
            let cfg = common.load()?;
            let outcome = run(&cfg)?;
            let files = outcome.write(&cfg, Path::new(&cfg.outputs.directory))?;
            Ok(finish(&outcome.summary(&cfg), &outcome.failures, &files))
        }
        Command::Converge { common, n_list } => {
            let cfg = common.load()?;
            let outcome = converge(&cfg, &n_list)?;
            let files = outcome.write(&cfg, Path::new(&cfg.outputs.directory))?;
            Ok(finish(&outcome.summary(&cfg), &outcome.failures, &files))
        }
        Command::PdeCheck { common, resolutions } => {
            let cfg = common.load()?;
            let res = if resolutions.is_empty() {
                DEFAULT_RESOLUTIONS.to_vec()
            } else {
                resolutions.iter().map(|s| parse_resolution(s)).collect::<Result<_>>()?
            };
            let outcome = pde_check(&cfg, &res)?;
            let file = outcome.write(&common.out_dir(Some(&cfg)))?;
            Ok(finish(&outcome.summary(), &[], &[file]))
        }
        Command::CostTable(common) => {
            let configs = if common.has_source() {
                vec![common.load()?]
            } else {
                PRESET_NAMES
                    .iter()
                    .map(|n| preset(n))
                    .collect::<exactrep::Result<_>>()?
            };
            let rows = cost_table(&configs)?;
            for r in &rows {
                println!(
                    "{:<16} mean {:.6}  martingale {:.6}  total {:.6}  (via mu {:.6}, {})",
                    r.experiment_id, r.mean_term, r.martingale_term, r.total, r.total_via_mu, r.measure
                );
            }
            let dir = common.out_dir(configs.first().filter(|_| common.has_source()));
            let file = write_cost_table(&rows, &dir)?;
            Ok(finish("", &[], &[file]))
        }
        Command::Presets => {
            for name in PRESET_NAMES {
                println!("{name:<16} {}", preset_description(name).unwrap_or_default());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
