use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use fiberair::air::Receiver;
use fiberair::harness::{
    awgn_capacity, correlate, estimate_receivers, read_grid_csv, read_records_csv, read_symbols_csv,
    render_air_plot, render_correlation, render_sections, run_experiment, write_grid_csv, ExperimentConfig,
    RunOptions,
};
use fiberair::link::Scheme;
use fiberair::rng::derive_seed;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "fiberair", version, about = "WDM link simulation, XPM correlation and AIR estimation")]
struct Cli {
    /// Experiment configuration (TOML). Defaults to the desk preset.
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration: desk or paper.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Master seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Semi-analytic XPM correlation grids for every configured scheme.
    Correlate,
    /// Full AIR sweep over schemes, launch powers and receivers.
    Sweep {
        /// Stop after this many new cells; rerun to resume.
        #[arg(long)]
        max_cells: Option<usize>,
        /// Discard records of earlier runs in the output directory.
        #[arg(long)]
        fresh: bool,
    },
    /// AIR of the configured receivers on stored symbols (x_re,x_im,y_re,y_im).
    Air {
        #[arg(long)]
        symbols: PathBuf,
    },
    /// Render SVG charts from CSV output.
    Plot {
        /// Sweep records (default: <out>/records.csv when present).
        #[arg(long)]
        records: Option<PathBuf>,
        /// Correlation grid CSV files.
        #[arg(long, num_args = 1..)]
        grids: Vec<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match (&cli.config, &cli.preset) {
        (Some(path), _) => {
            ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?
        }
        (None, Some(name)) => ExperimentConfig::preset(name)?,
        (None, None) => ExperimentConfig::desk(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let cfg = load_config(cli)?;
    std::fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("creating {}", cfg.output_dir.display()))?;
    match &cli.command {
        Command::Correlate => cmd_correlate(&cfg),
        Command::Sweep { max_cells, fresh } => cmd_sweep(&cfg, *max_cells, *fresh),
        Command::Air { symbols } => cmd_air(&cfg, symbols),
        Command::Plot { records, grids } => cmd_plot(&cfg, records.as_deref(), grids),
    }
}

fn cmd_correlate(cfg: &ExperimentConfig) -> Result<bool> {
    let grids = correlate(cfg)?;
    for g in &grids {
        let path = cfg.output_dir.join(format!("correlation_{}.csv", g.scheme));
        write_grid_csv(g, &path)?;
        render_correlation(g, &cfg.output_dir)?;
        println!(
            "{}: R(0,0,0) = {:.4e}, peak {:.4e}, M = {}, quadrature change {:.2e} -> {}",
            g.scheme,
            g.df0_section().first().map(|v| v.norm()).unwrap_or(0.0),
            g.peak,
            g.m,
            g.rel_change,
            path.display()
        );
    }
    render_sections(&grids, &cfg.output_dir, "sections")?;
    Ok(true)
}

fn cmd_sweep(cfg: &ExperimentConfig, max_cells: Option<usize>, fresh: bool) -> Result<bool> {
    if fresh {
        let jsonl = cfg.output_dir.join(fiberair::harness::run::RECORDS_JSONL);
        if jsonl.exists() {
            std::fs::remove_file(&jsonl)?;
        }
    }
    let outcome = run_experiment(cfg, &RunOptions { max_cells, in_memory: false })?;
    for r in &outcome.records {
        match (&r.result, &r.error) {
            (Some(a), _) => println!(
                "{:>4} {:>5} {:>6.2} dBm  AIR {:.4} +- {:.4}",
                r.scheme, r.receiver, r.power_dbm, a.air, a.std_error
            ),
            (None, e) => println!(
                "{:>4} {:>5} {:>6.2} dBm  FAILED: {}",
                r.scheme,
                r.receiver,
                r.power_dbm,
                e.as_deref().unwrap_or("unknown")
            ),
        }
    }
    if !outcome.records.is_empty() {
        let reference = capacity_curve(cfg);
        render_air_plot(&outcome.records, &reference, &cfg.output_dir.join("air.svg"))?;
    }
    if !outcome.complete {
        eprintln!(
            "sweep incomplete: {} cells run, {} resumed; rerun to continue",
            outcome.cells_run, outcome.cells_resumed
        );
    }
    Ok(outcome.all_succeeded())
}

fn capacity_curve(cfg: &ExperimentConfig) -> Vec<(f64, f64)> {
    cfg.powers_dbm.iter().map(|&p| (p, awgn_capacity(cfg, p))).collect()
}

#[derive(Serialize)]
struct AirEntry {
    receiver: Receiver,
    result: Option<fiberair::air::AirResult>,
    error: Option<String>,
}

fn cmd_air(cfg: &ExperimentConfig, symbols: &Path) -> Result<bool> {
    let data = read_symbols_csv(symbols).with_context(|| format!("reading {}", symbols.display()))?;
    let seed = derive_seed(cfg.seed, "air");
    let digest = cfg.digest();
    let (outcomes, degenerate) =
        estimate_receivers(&data, &cfg.receivers, cfg.n_train, &cfg.particles, &cfg.ga, seed)?;
    if degenerate {
        eprintln!("note: the noise estimate sits on its lower limit");
    }
    let mut ok = true;
    let entries: Vec<AirEntry> = outcomes
        .into_iter()
        .map(|o| match o.result {
            Ok(mut r) => {
                r.config_digest = digest.clone();
                println!("{:>5}  AIR {:.4} +- {:.4}", o.receiver, r.air, r.std_error);
                AirEntry { receiver: o.receiver, result: Some(r), error: None }
            }
            Err(e) => {
                ok = false;
                println!("{:>5}  FAILED: {e}", o.receiver);
                AirEntry { receiver: o.receiver, result: None, error: Some(e.to_string()) }
            }
        })
        .collect();
    std::fs::write(cfg.output_dir.join("air.json"), serde_json::to_string_pretty(&entries)?)?;
    Ok(ok)
}

fn cmd_plot(cfg: &ExperimentConfig, records: Option<&Path>, grids: &[PathBuf]) -> Result<bool> {
    let default_records = cfg.output_dir.join(fiberair::harness::run::RECORDS_CSV);
    let records = records
        .map(Path::to_path_buf)
        .or_else(|| default_records.exists().then_some(default_records));
    if records.is_none() && grids.is_empty() {
        bail!("nothing to plot: pass --records and/or --grids");
    }
    if let Some(path) = records {
        let recs = read_records_csv(&path).with_context(|| format!("reading {}", path.display()))?;
        let mut powers: Vec<f64> = recs.iter().map(|r| r.power_dbm).collect();
        powers.sort_by(f64::total_cmp);
        powers.dedup();
        let reference: Vec<(f64, f64)> = powers.iter().map(|&p| (p, awgn_capacity(cfg, p))).collect();
        let out = cfg.output_dir.join("air.svg");
        render_air_plot(&recs, &reference, &out)?;
        println!("{}", out.display());
    }
    if !grids.is_empty() {
        let loaded = grids
            .iter()
            .map(|p| read_grid_csv(p).with_context(|| format!("reading {}", p.display())))
            .collect::<Result<Vec<_>>>()?;
        for g in &loaded {
            for p in render_correlation(g, &cfg.output_dir)? {
                println!("{}", p.display());
            }
        }
        let mut schemes: Vec<Scheme> = loaded.iter().map(|g| g.scheme).collect();
        schemes.dedup();
        if schemes.len() > 1 {
            for p in render_sections(&loaded, &cfg.output_dir, "sections")? {
                println!("{}", p.display());
            }
        }
    }
    Ok(true)
}
