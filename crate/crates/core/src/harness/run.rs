//! The sweep: one cell per (scheme, power), every receiver evaluated on the
//! same received symbols.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{dbm_to_w, ExperimentConfig};
use super::io::{write_records_csv, write_symbols_csv};
use crate::air::{
    air_awgn, air_particle, estimate_gain_noise, fit_phase_model, fit_phase_model_seeded, AirResult, AuxChannelParams,
    GaConfig, ParticleConfig, Receiver,
};
use crate::error::{Error, Result};
use crate::link::{dbp, run_link, Scheme};
use crate::rng::{derive_seed, stream};
use crate::transceiver::{matched_filter_and_sample, modulate, wdm_demux, wdm_mux, SymbolFrame};

pub const RECORDS_JSONL: &str = "records.jsonl";
pub const RECORDS_CSV: &str = "records.csv";
pub const RUN_JSON: &str = "run.json";

/// Outcome of one receiver in one sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scheme: Scheme,
    pub receiver: Receiver,
    pub power_dbm: f64,
    /// `None` when the cell failed; see `error`.
    pub result: Option<AirResult>,
    pub error: Option<String>,
    /// The noise estimate sat on its lower limit (a practically noiseless channel).
    pub sigma_n_degenerate: bool,
    pub wall_time_s: f64,
    pub config_digest: String,
}

impl RunRecord {
    pub fn succeeded(&self) -> bool {
        self.result.is_some()
    }

    pub fn air(&self) -> Option<f64> {
        self.result.as_ref().map(|r| r.air)
    }
}

/// Transmitted and received symbols of the channel of interest.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelData {
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
}

pub fn cell_seed(master: u64, scheme: Scheme, power_dbm: f64) -> u64 {
    derive_seed(master, &format!("cell {scheme} {power_dbm}"))
}

/// Transmitter, link, DBP and matched filter for one cell.
///
/// The received symbols are derotated by the mean phase measured on the
/// training prefix, so a receiver that ignores phase is not penalized for the
/// constant part of the nonlinear phase shift.
pub fn simulate_cell(cfg: &ExperimentConfig, scheme: Scheme, power_dbm: f64, seed: u64) -> Result<ChannelData> {
    let wdm = cfg.wdm.spec(dbm_to_w(power_dbm));
    wdm.validate()?;
    let link = cfg.link.spec(scheme, cfg.wdm.grid_spacing_hz);
    let frame = SymbolFrame::gaussian(&wdm, derive_seed(seed, "symbols"))?;
    let waveforms = frame
        .channels()
        .iter()
        .map(|s| modulate(s, &wdm))
        .collect::<Result<Vec<_>>>()?;
    let launched = wdm_mux(&waveforms, &wdm)?;
    let mut rng = stream(derive_seed(seed, "ase"));
    let received = run_link(&launched, &link, &cfg.ssfm, cfg.link.ase_noise, &mut rng)?;
    let coi = wdm_demux(&received, 0, &wdm)?;
    let back = dbp(&coi, &link, &cfg.ssfm)?;
    let mut y = matched_filter_and_sample(&back, wdm.symbol_rate_baud)?;
    let x = frame.channel(0).to_vec();
    let n_train = cfg.n_train.min(x.len());
    let corr: Complex64 = x[..n_train].iter().zip(&y[..n_train]).map(|(x, y)| y * x.conj()).sum();
    if corr.norm() > 0.0 {
        let r = Complex64::from_polar(1.0, -corr.arg());
        y.iter_mut().for_each(|v| *v *= r);
    }
    Ok(ChannelData { x, y })
}

/// Per-receiver AIR estimates on one set of symbols.
#[derive(Debug, Clone)]
pub struct ReceiverOutcome {
    pub receiver: Receiver,
    pub result: Result<AirResult>,
}

/// Fits every requested receiver on the first `n_train` symbols and
/// evaluates it on the remainder. HOAR starts from the AR1 optimum.
pub fn estimate_receivers(
    data: &ChannelData,
    receivers: &[Receiver],
    n_train: usize,
    particles: &ParticleConfig,
    ga: &GaConfig,
    seed: u64,
) -> Result<(Vec<ReceiverOutcome>, bool)> {
    if n_train >= data.x.len() || data.x.len() != data.y.len() {
        return Err(Error::InsufficientData(format!(
            "{} symbols cannot be split at {n_train}",
            data.x.len()
        )));
    }
    let (xt, xe) = data.x.split_at(n_train);
    let (yt, ye) = data.y.split_at(n_train);
    let est = estimate_gain_noise(xt, yt)?;
    let base = AuxChannelParams::awgn(est.h0, est.sigma_n);
    let pcfg = ParticleConfig {
        seed: derive_seed(seed, &format!("particles {}", particles.seed)),
        ..*particles
    };
    let gcfg = GaConfig {
        seed: derive_seed(seed, &format!("ga {}", ga.seed)),
        ..*ga
    };
    let finish = |r: AirResult| AirResult {
        n_train,
        seed,
        ..r
    };
    let needs_ar1 = receivers.iter().any(|r| *r != Receiver::Awgn);
    let ar1_fit = needs_ar1.then(|| fit_phase_model(xt, yt, Receiver::Ar1, est.h0, est.sigma_n, &gcfg, &pcfg));
    let outcomes = receivers
        .iter()
        .map(|&receiver| {
            let result = match receiver {
                Receiver::Awgn => air_awgn(xe, ye, &base),
                Receiver::Ar1 => ar1_fit
                    .clone()
                    .expect("AR1 fit exists")
                    .and_then(|fit| air_particle(xe, ye, &fit.params, &pcfg)),
                Receiver::Hoar => ar1_fit.clone().expect("AR1 fit exists").and_then(|ar1| {
                    let fit = fit_phase_model_seeded(
                        xt,
                        yt,
                        Receiver::Hoar,
                        est.h0,
                        est.sigma_n,
                        &gcfg,
                        &pcfg,
                        &[ar1.params.phase_model],
                    )?;
                    air_particle(xe, ye, &fit.params, &pcfg)
                }),
            }
            .map(finish);
            ReceiverOutcome { receiver, result }
        })
        .collect();
    Ok((outcomes, est.degenerate))
}

fn run_cell(cfg: &ExperimentConfig, digest: &str, scheme: Scheme, power_dbm: f64) -> Vec<RunRecord> {
    let start = Instant::now();
    let seed = cell_seed(cfg.seed, scheme, power_dbm);
    let outcome = simulate_cell(cfg, scheme, power_dbm, seed).and_then(|data| {
        if cfg.save_symbols {
            let dir = cfg.output_dir.join("symbols");
            std::fs::create_dir_all(&dir)?;
            write_symbols_csv(&data, &dir.join(format!("{scheme}_{power_dbm}dBm.csv")))?;
        }
        estimate_receivers(&data, &cfg.receivers, cfg.n_train, &cfg.particles, &cfg.ga, seed)
    });
    let wall = start.elapsed().as_secs_f64();
    let record = |receiver, result: Result<AirResult>, degenerate| {
        let (result, error) = match result {
            Ok(r) => (
                Some(AirResult {
                    config_digest: digest.to_string(),
                    ..r
                }),
                None,
            ),
            Err(e) => (None, Some(e.to_string())),
        };
        RunRecord {
            scheme,
            receiver,
            power_dbm,
            result,
            error,
            sigma_n_degenerate: degenerate,
            wall_time_s: wall,
            config_digest: digest.to_string(),
        }
    };
    match outcome {
        Ok((outcomes, degenerate)) => outcomes
            .into_iter()
            .map(|o| record(o.receiver, o.result, degenerate))
            .collect(),
        Err(e) => cfg
            .receivers
            .iter()
            .map(|&r| record(r, Err(e.clone()), false))
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Stop after this many new cells (used to exercise resumption).
    pub max_cells: Option<usize>,
    /// Keep no files; everything stays in memory.
    pub in_memory: bool,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    /// Records in canonical order (config order of schemes, powers, receivers).
    pub records: Vec<RunRecord>,
    /// Every cell of the sweep has records.
    pub complete: bool,
    pub cells_run: usize,
    pub cells_resumed: usize,
}

impl SweepOutcome {
    pub fn all_succeeded(&self) -> bool {
        self.complete && self.records.iter().all(RunRecord::succeeded)
    }
}

type CellKey = (Scheme, u64);

fn load_previous(path: &Path, digest: &str) -> Result<BTreeMap<CellKey, Vec<RunRecord>>> {
    let mut done: BTreeMap<CellKey, Vec<RunRecord>> = BTreeMap::new();
    if !path.exists() {
        return Ok(done);
    }
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        // a torn final line from an interrupted run is simply ignored
        let Ok(r) = serde_json::from_str::<RunRecord>(&line) else {
            continue;
        };
        if r.config_digest == digest {
            done.entry((r.scheme, r.power_dbm.to_bits())).or_default().push(r);
        }
    }
    Ok(done)
}

/// Runs every (scheme, power) cell of `cfg`.
///
/// Records are appended to `records.jsonl` in the output directory as cells
/// finish. Cells already present there under the same config digest are not
/// recomputed, so an interrupted sweep picks up where it stopped. On return
/// `records.csv` and `run.json` describe everything known so far.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<SweepOutcome> {
    cfg.validate()?;
    let digest = cfg.digest();
    let out = &cfg.output_dir;
    let jsonl_path = out.join(RECORDS_JSONL);
    let mut previous = BTreeMap::new();
    let mut sink: Option<Mutex<File>> = None;
    if !opts.in_memory {
        std::fs::create_dir_all(out)?;
        previous = load_previous(&jsonl_path, &digest)?;
        previous.retain(|_, v: &mut Vec<RunRecord>| cfg.receivers.iter().all(|r| v.iter().any(|x| x.receiver == *r)));
        sink = Some(Mutex::new(OpenOptions::new().create(true).append(true).open(&jsonl_path)?));
    }

    let all_cells: Vec<(Scheme, f64)> = cfg
        .schemes
        .iter()
        .flat_map(|&s| cfg.powers_dbm.iter().map(move |&p| (s, p)))
        .collect();
    let pending: Vec<(Scheme, f64)> = all_cells
        .iter()
        .copied()
        .filter(|(s, p)| !previous.contains_key(&(*s, p.to_bits())))
        .take(opts.max_cells.unwrap_or(usize::MAX))
        .collect();
    let cells_resumed = previous.len();

    let fresh: Vec<Result<Vec<RunRecord>>> = pending
        .par_iter()
        .map(|&(scheme, power)| {
            let recs = run_cell(cfg, &digest, scheme, power);
            if let Some(sink) = &sink {
                let mut text = String::new();
                for r in &recs {
                    text.push_str(&serde_json::to_string(r)?);
                    text.push('\n');
                }
                let mut f = sink.lock().expect("record sink poisoned");
                f.write_all(text.as_bytes())?;
                f.flush()?;
            }
            Ok(recs)
        })
        .collect();
    for (cell, recs) in pending.iter().zip(fresh) {
        previous.insert((cell.0, cell.1.to_bits()), recs?);
    }

    let mut records = Vec::new();
    for (s, p) in &all_cells {
        if let Some(v) = previous.get(&(*s, p.to_bits())) {
            for r in &cfg.receivers {
                if let Some(rec) = v.iter().find(|x| x.receiver == *r) {
                    records.push(rec.clone());
                }
            }
        }
    }
    let outcome = SweepOutcome {
        complete: previous.len() == all_cells.len(),
        records,
        cells_run: pending.len(),
        cells_resumed,
    };
    if !opts.in_memory {
        write_records_csv(&outcome.records, &out.join(RECORDS_CSV))?;
        write_run_json(cfg, &digest, &outcome, &out.join(RUN_JSON))?;
    }
    Ok(outcome)
}

#[derive(Serialize)]
struct RunSummary<'a> {
    config_digest: &'a str,
    complete: bool,
    cells_run: usize,
    cells_resumed: usize,
    config: &'a ExperimentConfig,
    records: &'a [RunRecord],
}

fn write_run_json(cfg: &ExperimentConfig, digest: &str, o: &SweepOutcome, path: &PathBuf) -> Result<()> {
    let summary = RunSummary {
        config_digest: digest,
        complete: o.complete,
        cells_run: o.cells_run,
        cells_resumed: o.cells_resumed,
        config: cfg,
        records: &o.records,
    };
    std::fs::write(path, serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}
