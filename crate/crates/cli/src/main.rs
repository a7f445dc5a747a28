use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aircsc::ingest::{write_table, Table};
use aircsc::pipeline::{run_stages, Manifest, RunConfig, Stage};
use aircsc::synth::{generate, DgpConfig, TruthCell};
use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

/// Common-subcontracting price analysis of airline ticket samples.
#[derive(Parser, Debug)]
#[command(name = "aircsc", version)]
struct Cli {
    /// Run configuration (TOML). For `synth`, the generator settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for the bootstrap and the generator.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Quarters to keep, e.g. `2` or `1,2,3,4`.
    #[arg(long, global = true, value_delimiter = ',')]
    quarters: Option<Vec<u8>>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate and normalize the raw input tables.
    Ingest,
    /// Apply the sample filters and split tickets into directional trips.
    BuildSample,
    /// Aggregate trips to carrier-market-period cells.
    Panel,
    /// Common-subcontracting, multimarket-contact and concentration measures.
    Metrics,
    /// Weather, regional-network and network-size instruments.
    Instruments,
    /// Fit every configured specification.
    Estimate,
    /// Render fitted specifications as text tables.
    Report,
    /// All stages in order.
    Run,
    /// Write a synthetic input bundle with its ground truth and a run
    /// configuration pointing at it.
    Synth,
}

fn run_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let Some(path) = &cli.config else {
        bail!("--config <path> is required for this command");
    };
    let mut cfg = RunConfig::load(path)?;
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(q) = &cli.quarters {
        if let Some(bad) = q.iter().find(|q| !(1..=4).contains(*q)) {
            bail!("quarter {bad} is not in 1..=4");
        }
        cfg.sample.quarters = q.clone();
    }
    Ok(cfg)
}

fn synth(cli: &Cli) -> anyhow::Result<()> {
    let mut dgp = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str::<DgpConfig>(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => DgpConfig::default(),
    };
    if let Some(s) = cli.seed {
        dgp.seed = s;
    }
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("synth"));
    let (bundle, truth) = generate(&dgp)?;
    bundle.write_to(&dir)?;
    write_table(&dir.join(TruthCell::NAME), &truth.cells)?;

    let mut run = RunConfig::for_bundle(Path::new(""), Path::new("out"));
    run.seed = dgp.seed;
    run.threads = cli.threads;
    if let Some(q) = &cli.quarters {
        run.sample.quarters = q.clone();
    }
    let text = toml::to_string(&run).context("serializing run configuration")?;
    std::fs::write(dir.join("run.toml"), text).with_context(|| format!("writing {}", dir.display()))?;
    println!(
        "wrote {} tickets, {} truth cells and run.toml to {}",
        bundle.tickets.len(),
        truth.cells.len(),
        dir.display()
    );
    Ok(())
}

fn summarize(m: &Manifest) {
    for stage in &m.stages {
        let outputs: Vec<String> = m
            .entries
            .iter()
            .filter(|e| &e.stage == stage && e.role == "output")
            .map(|e| format!("{} ({} rows)", e.file, e.rows))
            .collect();
        println!("{stage}: {}", outputs.join(", "));
    }
}

fn main_inner(cli: &Cli) -> anyhow::Result<()> {
    let stages: Vec<Stage> = match cli.command {
        Command::Synth => return synth(cli),
        Command::Run => Stage::ALL.to_vec(),
        Command::Ingest => vec![Stage::Ingest],
        Command::BuildSample => vec![Stage::Sample],
        Command::Panel => vec![Stage::Panel],
        Command::Metrics => vec![Stage::Metrics],
        Command::Instruments => vec![Stage::Instruments],
        Command::Estimate => vec![Stage::Estimate],
        Command::Report => vec![Stage::Report],
    };
    let cfg = run_config(cli)?;
    let manifest = run_stages(&cfg, &stages)?;
    summarize(&manifest);
    if stages.contains(&Stage::Report) {
        let text = std::fs::read_to_string(cfg.out.join("report.txt")).context("reading report.txt")?;
        print!("{text}");
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match main_inner(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
