use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gcsl_nf::distance::{DistanceKind, DistanceMeasure};
use gcsl_nf::env::{EnvKind, EnvSpec};
use gcsl_nf::error::{Error, Result};
use gcsl_nf::harness::{
    ablate_distance_policy_dependence, ablate_feedback, aggregate_runs, bench, export_heatmap, run_experiment,
    write_heatmap, Algorithm, RunConfig,
};
use gcsl_nf::harness::ablation::DEFAULT_REFERENCE;
use gcsl_nf::nn::read_snapshot;

#[derive(Parser)]
#[command(name = "gcsl-nf", about = "Train and evaluate goal-conditioned learners on 2D tasks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Environment, when no config file is given.
    #[arg(long)]
    env: Option<EnvKind>,
    /// Learner, when no config file is given.
    #[arg(long)]
    algorithm: Option<Algorithm>,
    /// Extra `key=value` overrides applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// One seeded run.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mean and std across run directories.
    Aggregate {
        #[arg(long)]
        out: PathBuf,
        #[arg(required = true)]
        runs: Vec<PathBuf>,
    },
    /// Both losses vs L+ only vs L_o only on point_mass_obstacle.
    AblateFeedback {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
        seeds: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Four-room p_phi heatmaps from joint, random and planner data.
    AblateDistance {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        reference: Option<Vec<f64>>,
        #[arg(long, default_value_t = 48)]
        resolution: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Similarity grid of a saved distance network.
    Heatmap {
        #[arg(long)]
        env: EnvKind,
        #[arg(long, default_value = "p_phi")]
        kind: DistanceKind,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        reference: Vec<f64>,
        #[arg(long, default_value_t = 48)]
        resolution: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Every learner for one environment over several seeds.
    Bench {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
        seeds: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(args: &ConfigArgs, default_env: Option<EnvKind>, default_alg: Algorithm) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            RunConfig::parse(&text)?
        }
        None => {
            let env = args
                .env
                .or(default_env)
                .ok_or_else(|| Error::Config("give --config or --env".into()))?;
            RunConfig::new(env, args.algorithm.unwrap_or(default_alg))
        }
    };
    if args.config.is_some() {
        if let Some(env) = args.env {
            cfg.env = env;
        }
        if let Some(alg) = args.algorithm {
            cfg.algorithm = alg;
        }
    }
    for o in &args.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{o}` is not key=value")))?;
        cfg.set(k.trim(), v.trim()).map_err(Error::Config)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn point(v: &[f64]) -> Result<[f64; 2]> {
    match v {
        [x, y] => Ok([*x, *y]),
        _ => Err(Error::Config("reference needs two coordinates `x,y`".into())),
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { cfg, out } => {
            let cfg = load_config(&cfg, None, Algorithm::GcslNf)?;
            let res = run_experiment(&cfg, &out)?;
            let names = cfg.spec().metric_names();
            for (n, v) in names.iter().zip(res.final_components()) {
                println!("final {n}: {v:.4}");
            }
        }
        Command::Aggregate { out, runs } => {
            let agg = aggregate_runs(&runs, &out)?;
            println!("{} points over {} runs", agg.rows.len(), runs.len());
        }
        Command::AblateFeedback { cfg, seeds, out } => {
            let cfg = load_config(&cfg, Some(EnvKind::PointMassObstacle), Algorithm::GcslNf)?;
            for (f, agg) in ablate_feedback(&cfg, &seeds, Some(&out))? {
                println!("{}: final position {:.4}", f.name(), agg.final_mean("position").unwrap_or(f64::NAN));
            }
        }
        Command::AblateDistance {
            cfg,
            reference,
            resolution,
            out,
        } => {
            let cfg = load_config(&cfg, Some(EnvKind::FourRoom), Algorithm::GcslNf)?;
            let r = reference.as_deref().map(point).transpose()?.unwrap_or(DEFAULT_REFERENCE);
            let grids = ablate_distance_policy_dependence(&cfg, r, resolution, Some(&out))?;
            println!("wrote {} heatmaps to {}", grids.len(), out.display());
        }
        Command::Heatmap {
            env,
            kind,
            checkpoint,
            reference,
            resolution,
            out,
        } => {
            let bytes = fs::read(&checkpoint).map_err(|e| Error::Config(format!("{}: {e}", checkpoint.display())))?;
            let net = read_snapshot(&bytes)?;
            let measure = DistanceMeasure::from_net(kind, net, EnvSpec::new(env).obs_scale(), 1e-3, 5)?;
            let grid = export_heatmap(&measure, env, point(&reference)?, resolution, resolution)?;
            fs::write(&out, write_heatmap(&grid)).map_err(|e| Error::Config(format!("{}: {e}", out.display())))?;
        }
        Command::Bench { cfg, seeds, out } => {
            let cfg = load_config(&cfg, None, Algorithm::GcslNf)?;
            for (alg, agg) in bench(&cfg, &seeds, Some(&out))? {
                let name = cfg.spec().metric_names()[0];
                println!("{alg}: final {name} {:.4}", agg.final_mean(name).unwrap_or(f64::NAN));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
