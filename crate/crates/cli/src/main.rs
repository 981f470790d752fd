//! Command-line front end: `simulate`, `render`, `presets`, `ablate-collisions`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use splatweather::pipeline::{
    ablate_collisions, list_presets, run_render, run_simulate, FrameRange, RunConfig,
};
use splatweather::Error;

#[derive(Parser)]
#[command(name = "splatweather", version, about = "Weather effects for Gaussian splat scenes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the configured effect and write one state file per frame.
    Simulate(RunArgs),
    /// Render stored frame states to PNG.
    Render(RunArgs),
    /// Print every preset field; with --config, show that run's overrides.
    Presets {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Compare rest distances with and without collision handling.
    AblateCollisions(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Frame range `a..b` (half-open), `a..=b` or a single frame.
    #[arg(long)]
    frames: Option<String>,
    #[arg(long)]
    no_collision_handling: bool,
    #[arg(long)]
    strict_paper_rotation: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self) -> Result<(RunConfig, Option<FrameRange>), Error> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if self.no_collision_handling {
            cfg.collision_handling = false;
        }
        if self.strict_paper_rotation {
            cfg.strict_paper_rotation = true;
        }
        if let Some(out) = &self.output {
            cfg.output = out.clone();
        }
        let range = self.frames.as_deref().map(FrameRange::parse).transpose()?;
        Ok((cfg, range))
    }
}

fn run(cli: Cli) -> Result<serde_json::Value, Error> {
    match cli.command {
        Command::Simulate(args) => {
            let (cfg, range) = args.load()?;
            let summary = run_simulate(&cfg, range)?;
            Ok(json!({ "status": "ok", "command": "simulate", "summary": summary }))
        }
        Command::Render(args) => {
            let (cfg, range) = args.load()?;
            let summary = run_render(&cfg, range)?;
            Ok(json!({ "status": "ok", "command": "render", "summary": summary }))
        }
        Command::Presets { config } => {
            let cfg = config.map(RunConfig::load).transpose()?;
            print!("{}", list_presets(cfg.as_ref())?);
            Ok(serde_json::Value::Null)
        }
        Command::AblateCollisions(args) => {
            let (mut cfg, range) = args.load()?;
            if let Some(r) = range {
                if r.start != 0 {
                    return Err(Error::Config("ablation always starts at frame 0; pass --frames 0..n".into()));
                }
                cfg.frames = Some(r.end);
            }
            let report = ablate_collisions(&cfg)?;
            Ok(json!({ "status": "ok", "command": "ablate-collisions", "report": report }))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(serde_json::Value::Null) => ExitCode::SUCCESS,
        Ok(v) => {
            println!("{v}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let line = json!({
                "status": "error",
                "kind": e.kind(),
                "frame": e.frame(),
                "message": e.to_string(),
            });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
