use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dronesense_harness::config::{ExperimentConfig, Preset, SweepParameter};
use dronesense_harness::{output, HarnessError};

#[derive(Parser)]
#[command(name = "dronesense", version, about = "Drone swarm sensing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every method on every scenario instance.
    Run(Common),
    /// Write the generated plan sets.
    ExportPlans(Common),
    /// Running mean of the final global cost as instances accumulate.
    Stability {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 50)]
        max_maps: usize,
    },
    /// One run per value of each sweep axis.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `parameter=v1,v2,...`; overrides the axes in the config.
        #[arg(long = "axis")]
        axes: Vec<String>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; missing fields take the basic defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = ["basic", "desk", "traffic"])]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf), HarnessError> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(_), Some(_)) => {
                return Err(HarnessError::config("preset", "give either --config or --preset"))
            }
            (Some(path), None) => {
                let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
                ExperimentConfig::from_json(&text)?
            }
            (None, Some(name)) => Preset::parse(name)?.config(),
            (None, None) => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        let out = self.out.clone().unwrap_or_else(|| cfg.output.clone());
        cfg.output = out.clone();
        Ok((cfg, out))
    }
}

fn parse_axis(text: &str) -> Result<(SweepParameter, Vec<f64>), HarnessError> {
    let (name, values) = text
        .split_once('=')
        .ok_or_else(|| HarnessError::config("axis", format!("expected parameter=values, got `{text}`")))?;
    let values = values
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| HarnessError::config("axis", format!("`{v}` is not a number")))
        })
        .collect::<Result<_, _>>()?;
    Ok((SweepParameter::parse(name.trim())?, values))
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let manifest = match cli.command {
        Command::Run(common) => {
            let (cfg, out) = common.load()?;
            output::write_run(&cfg, &out)?
        }
        Command::ExportPlans(common) => {
            let (cfg, out) = common.load()?;
            output::write_plans(&cfg, &out)?
        }
        Command::Stability { common, max_maps } => {
            let (cfg, out) = common.load()?;
            output::write_stability(&cfg, max_maps, &out)?
        }
        Command::Sweep { common, axes } => {
            let (mut cfg, out) = common.load()?;
            let axes: Vec<(SweepParameter, Vec<f64>)> = if axes.is_empty() {
                cfg.sweep.iter().map(|a| (a.parameter, a.values.clone())).collect()
            } else {
                let parsed = axes.iter().map(|a| parse_axis(a)).collect::<Result<Vec<_>, _>>()?;
                cfg.sweep = parsed
                    .iter()
                    .map(|(p, v)| dronesense_harness::config::SweepAxis {
                        parameter: *p,
                        values: v.clone(),
                    })
                    .collect();
                cfg.validate()?;
                parsed
            };
            output::write_sweep(&cfg, &axes, &out)?
        }
    };
    for f in &manifest.files {
        println!("{}", cfg_path(&manifest, f).display());
    }
    Ok(())
}

fn cfg_path(m: &dronesense_harness::RunManifest, file: &str) -> PathBuf {
    m.config.output.join(file)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
