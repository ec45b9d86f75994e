use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use clipcurate::config::{load_config, Overrides, PipelineConfig, SyntheticConfig};
use clipcurate::fixtures::write_fixture_dir;
use clipcurate::provider::synthetic::input_manifest;
use clipcurate::runner::{Action, StageOutcome};
use clipcurate::transcode::{emit_transcode_plan, plan_bytes};
use clipcurate::{Providers, Runner, StageName, Workspace};
use clipcurate_core::labels::Vocabulary;
use clipcurate_core::manifest::{load_manifest, save_manifest, write_atomic};
use clipcurate_core::segment::SegmentConfig;

#[derive(Parser)]
#[command(name = "clipcurate", version, about = "Curate long walking and drone videos into diverse 60 s training clips")]
struct Cli {
    /// Pipeline configuration file.
    #[arg(long, short, global = true, default_value = "clipcurate.toml")]
    config: PathBuf,
    /// Overrides the configured workspace directory.
    #[arg(long, global = true)]
    workspace: Option<PathBuf>,
    /// Overrides the sampling seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Serve annotations from this fixture directory.
    #[arg(long, global = true)]
    fixtures: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the configuration and print the effective settings.
    Validate,
    /// Cut shots and clips (runs the segment stage).
    Segment,
    /// Apply the luminance, quality, subtitle and trajectory filters.
    Filter,
    /// Match clips to chapter locations and attach labels, captions and embeddings.
    MatchLocations,
    /// Run the five diversity samplers.
    Sample,
    /// Write corpus statistics.
    Report,
    /// Run stages in order, skipping those that are up to date.
    Run {
        /// Comma-separated subset, e.g. `filter,annotate`. Defaults to all stages.
        #[arg(long, value_delimiter = ',')]
        stages: Vec<StageName>,
    },
    /// Show which stages have a valid checkpoint.
    Status,
    /// Write one transcode job per active clip.
    PlanTranscode {
        /// Manifest to plan; defaults to the latest stage output in the workspace.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Output file; defaults to `<workspace>/transcode_plan.jsonl`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate synthetic inputs.
    #[command(subcommand)]
    Synth(SynthCommand),
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Video manifest that segments into at least `--clips` clips.
    Input {
        #[arg(long, default_value_t = 10_000)]
        clips: usize,
        #[arg(long = "synth-seed", default_value_t = 0)]
        synth_seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fixture directory answering every provider request for a video manifest.
    Fixtures {
        #[arg(long)]
        input: PathBuf,
        #[arg(long = "synth-seed", default_value_t = 0)]
        synth_seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Config(Vec<String>),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(errors)) => {
            for e in errors {
                eprintln!("config error: {e}");
            }
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn config(cli: &Cli) -> Result<PipelineConfig, Failure> {
    let overrides = Overrides { workspace: cli.workspace.clone(), seed: cli.seed, fixtures: cli.fixtures.clone() };
    load_config(&cli.config, &overrides).map_err(|errs| Failure::Config(errs.iter().map(|e| e.to_string()).collect()))
}

fn run_stages(cfg: &PipelineConfig, stages: &[StageName]) -> Result<(), Failure> {
    let providers = Providers::from_config(cfg).context("setting up providers")?;
    let runner = Runner::new(cfg, &providers);
    let outcomes = runner.run(stages).map_err(anyhow::Error::from)?;
    print_outcomes(&outcomes);
    let counts = providers.cache_counts();
    if counts.hits + counts.misses > 0 {
        println!("provider cache: {} hit(s), {} miss(es)", counts.hits, counts.misses);
    }
    Ok(())
}

fn print_outcomes(outcomes: &[StageOutcome]) {
    for o in outcomes {
        let action = match (o.action, o.enabled) {
            (Action::Skipped, _) => "up to date",
            (Action::Ran, true) => "ran",
            (Action::Ran, false) => "passed through",
        };
        println!("{:<9} {:<15} {:>8.2}s  {}", o.stage.name(), action, o.seconds, &o.input_digest[..12]);
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Validate => {
            let cfg = config(&cli)?;
            let text = toml::to_string_pretty(&cfg).context("rendering configuration")?;
            println!("{text}");
            eprintln!("configuration is valid");
            Ok(())
        }
        Command::Segment => run_stages(&config(&cli)?, &[StageName::Segment]),
        Command::Filter => run_stages(&config(&cli)?, &[StageName::Filter]),
        Command::MatchLocations => run_stages(&config(&cli)?, &[StageName::Annotate]),
        Command::Sample => run_stages(&config(&cli)?, &[StageName::Sample]),
        Command::Report => run_stages(&config(&cli)?, &[StageName::Report]),
        Command::Run { stages } => {
            let cfg = config(&cli)?;
            let stages = if stages.is_empty() { StageName::ORDER.to_vec() } else { stages.clone() };
            run_stages(&cfg, &stages)
        }
        Command::Status => {
            let cfg = config(&cli)?;
            let ws = Workspace::new(&cfg.workspace);
            for s in StageName::ORDER {
                let state = match (ws.valid_checkpoint(s), ws.read_checkpoint(s)) {
                    (Some(cp), _) => format!("complete ({} output file(s))", cp.outputs.len()),
                    (None, Some(_)) => "checkpoint does not match its outputs".to_string(),
                    (None, None) => "not run".to_string(),
                };
                println!("{:<9} {state}", s.name());
            }
            Ok(())
        }
        Command::PlanTranscode { manifest, out } => {
            let cfg = config(&cli)?;
            let ws = Workspace::new(&cfg.workspace);
            let path = match manifest {
                Some(p) => p.clone(),
                None => ws.latest_manifest().context("no completed stage in the workspace; pass --manifest")?,
            };
            let m = load_manifest(&path).and_then(|r| r.into_strict()).with_context(|| format!("reading {}", path.display()))?;
            let jobs = emit_transcode_plan(&m);
            let out = out.clone().unwrap_or_else(|| cfg.workspace.join("transcode_plan.jsonl"));
            write_atomic(&out, &plan_bytes(&jobs)).with_context(|| format!("writing {}", out.display()))?;
            println!("{} job(s) written to {}", jobs.len(), out.display());
            Ok(())
        }
        Command::Synth(SynthCommand::Input { clips, synth_seed, out }) => {
            let (m, n) = input_manifest(*synth_seed, *clips, &SegmentConfig::default());
            save_manifest(&m, out).with_context(|| format!("writing {}", out.display()))?;
            println!("{} video(s), {n} clip(s) under default segmentation, written to {}", m.video_count(), out.display());
            Ok(())
        }
        Command::Synth(SynthCommand::Fixtures { input, synth_seed, out }) => {
            let m = read_videos(input)?;
            let syn = SyntheticConfig { seed: *synth_seed, ..Default::default() };
            let n = write_fixture_dir(out, &m, &syn, &Vocabulary::default(), &SegmentConfig::default())
                .with_context(|| format!("writing fixtures to {}", out.display()))?;
            println!("fixtures for {} video(s) and {n} clip(s) written to {}", m.video_count(), out.display());
            Ok(())
        }
    }
}

fn read_videos(path: &Path) -> Result<clipcurate_core::manifest::Manifest, Failure> {
    Ok(load_manifest(path)
        .and_then(|r| r.into_strict())
        .with_context(|| format!("reading {}", path.display()))?)
}
