//! `twosys` subcommands.

use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use twosys_core::aligner::{annotate_stream, AlignmentConfig};
use twosys_core::bank::{augment, parse_bank, seed_entries, write_bank, ClassifyOptions, TemplateParaphraser};
use twosys_core::bench::{run_benchmark, BenchmarkSpec, Fault, OutputFormat};
use twosys_core::config::Config;
use twosys_core::dataset::{write_dataset, DatasetSpec};
use twosys_core::model::Family;
use twosys_core::orchestrator::{Session, Unpaced};

#[derive(Parser, Debug)]
#[command(name = "twosys", version, about = "Fast/slow instruction routing over a simulated tabletop")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Serve the HTTP API.
    Serve {
        /// Overrides `server.listen_addr`.
        #[arg(long)]
        listen: Option<String>,
    },
    /// Run one episode on a generated scene and print the result as JSON.
    Run {
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Defaults to the generated task instruction.
        #[arg(long)]
        text: Option<String>,
    },
    /// Success rates over seeded episodes per family.
    Bench(BenchArgs),
    /// Generate a trajectory corpus.
    GenData(GenArgs),
    /// Think bank tools.
    Bank {
        #[command(subcommand)]
        command: BankCommand,
    },
    /// Annotate a trajectory file with step/frame pairings.
    Align {
        #[arg(long)]
        input: PathBuf,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `aligner.alpha`.
        #[arg(long)]
        alpha: Option<f64>,
    },
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Comma-separated family names; all families when absent.
    #[arg(long, value_delimiter = ',')]
    pub families: Vec<String>,
    #[arg(long, default_value_t = 20)]
    pub episodes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, value_enum)]
    pub fault: Option<FaultArg>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also print each failed episode to stderr.
    #[arg(long)]
    pub failures: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Format {
    Csv,
    Markdown,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FaultArg {
    ReversedSteps,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub count: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// `family=weight` pairs, comma-separated. Slow families with equal weight when absent.
    #[arg(long, value_delimiter = ',')]
    pub weights: Vec<String>,
}

#[derive(Subcommand, Debug)]
pub enum BankCommand {
    /// Classify one instruction.
    Classify {
        #[arg(long)]
        text: String,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Grow a bank from seeds with the template paraphraser.
    Augment {
        #[arg(long, default_value_t = 10)]
        iterations: usize,
        #[arg(long, default_value_t = 2)]
        branching: usize,
        #[arg(long)]
        cap: Option<usize>,
        /// Seed bank file; the built-in hand-written seeds when absent.
        #[arg(long)]
        seeds: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<Config> {
    match path {
        Some(p) => Config::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(Config::default()),
    }
}

fn write_out(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn emit<T: serde::Serialize + ?Sized>(value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match write_out(&None, &text) {
        Err(e) if e.downcast_ref::<std::io::Error>().is_some_and(|e| e.kind() == std::io::ErrorKind::BrokenPipe) => Ok(()),
        other => other,
    }
}

fn families(names: &[String]) -> Result<Vec<Family>> {
    if names.is_empty() {
        return Ok(Family::ALL.to_vec());
    }
    names.iter().map(|n| n.trim().parse::<Family>().map_err(|_| anyhow::anyhow!("unsupported task family `{n}`"))).collect()
}

fn weights(pairs: &[String]) -> Result<Option<Vec<(Family, f64)>>> {
    if pairs.is_empty() {
        return Ok(None);
    }
    let mut out = Vec::new();
    for p in pairs {
        let (name, w) = p.split_once('=').unwrap_or((p.as_str(), "1"));
        let f: Family = name.trim().parse().map_err(|_| anyhow::anyhow!("unsupported task family `{name}`"))?;
        let w: f64 = w.trim().parse().with_context(|| format!("weight for {name}"))?;
        out.push((f, w));
    }
    Ok(Some(out))
}

pub async fn run(cli: Cli) -> Result<()> {
    let config = load_config(&cli.config)?;
    match cli.command {
        Command::Serve { listen } => {
            let addr = listen.unwrap_or_else(|| config.server.listen_addr.clone());
            let state = Arc::new(crate::AppState::new(config)?);
            let listener = tokio::net::TcpListener::bind(&addr).await.with_context(|| format!("binding {addr}"))?;
            log::info!("listening on {}", listener.local_addr()?);
            axum::serve(listener, crate::router(state)).await?;
        }
        Command::Run { family, seed, text } => {
            let exec = Arc::new(config.executive()?);
            let mut s = Session::new("cli", exec, config.sim.width, config.sim.height);
            s.reset(seed, &family)?;
            let text = text.unwrap_or_else(|| s.task.as_ref().expect("reset sets a task").instruction_text.clone());
            let r = s.handle_instruction(&text, &Unpaced);
            emit(r)?;
            if !r.success {
                std::process::exit(1);
            }
        }
        Command::Bench(a) => {
            let exec = config.executive()?;
            let spec = BenchmarkSpec {
                families: families(&a.families)?,
                episodes_per_family: a.episodes,
                base_seed: a.seed,
                width: config.sim.width,
                height: config.sim.height,
                fault: a.fault.map(|_| Fault::ReversedSteps),
                method: format!("{:?}", config.planner.kind).to_lowercase(),
            };
            let table = run_benchmark(&spec, exec.bank.clone(), exec.planner.clone())?;
            if a.failures {
                for r in &table.rows {
                    for f in &r.failures {
                        eprintln!("{} #{} seed {}: {} step {:?}: {}", r.family, f.index, f.seed, f.stage, f.step, f.detail);
                    }
                }
            }
            let format = match a.format {
                Format::Csv => OutputFormat::Csv,
                Format::Markdown => OutputFormat::Markdown,
            };
            write_out(&a.out, &table.render(format))?;
        }
        Command::GenData(a) => {
            let mut spec = DatasetSpec {
                n_trajectories: a.count,
                base_seed: a.seed,
                width: config.sim.width,
                height: config.sim.height,
                ..Default::default()
            };
            if let Some(w) = weights(&a.weights)? {
                spec.weights = w;
            }
            let m = write_dataset(&spec, &a.out)?;
            emit(&m)?;
        }
        Command::Bank { command: BankCommand::Classify { text, k } } => {
            let bank = config.bank(config.embedder()?)?;
            let c = bank.classify(&text, ClassifyOptions { k: k.unwrap_or(config.bank.k), floor: config.bank.floor })?;
            emit(&c)?;
        }
        Command::Bank { command: BankCommand::Augment { iterations, branching, cap, seeds, out } } => {
            let seeds = match seeds {
                Some(p) => {
                    let f = std::fs::File::open(&p).with_context(|| format!("opening {}", p.display()))?;
                    parse_bank(std::io::BufReader::new(f))?.1
                }
                None => seed_entries(),
            };
            let a = augment(&seeds, iterations, &TemplateParaphraser::new(branching), cap)?;
            for f in &a.failures {
                eprintln!("paraphrase failed for entry {}: {}", f.id, f.error);
            }
            let mut buf = Vec::new();
            write_bank(&mut buf, &config.embedder_spec(), &a.entries)?;
            std::fs::write(&out, buf).with_context(|| format!("writing {}", out.display()))?;
            eprintln!("{} entries ({} new)", a.entries.len(), a.added());
        }
        Command::Align { input, out, alpha } => {
            let mut cfg: AlignmentConfig = config.alignment();
            if let Some(a) = alpha {
                cfg.alpha = a;
            }
            let embedder = config.embedder()?;
            let f = std::fs::File::open(&input).with_context(|| format!("opening {}", input.display()))?;
            let mut buf = Vec::new();
            let stats = annotate_stream(std::io::BufReader::new(f), &mut buf, &cfg, embedder.as_ref())?;
            write_out(&out, std::str::from_utf8(&buf)?)?;
            eprintln!("{}", serde_json::to_string(&stats)?);
            if stats.trajectories == 0 && stats.steps == 0 && !buf.is_empty() {
                bail!("unexpected output without trajectories");
            }
        }
    }
    Ok(())
}
