//! CSV schemas.
//!
//! * records: `scheme,receiver,power_dbm,status,air,std_error,h0,sigma_n,phase_model,sigma_z,a_mix,l0,n_train,n_eval,seed,sigma_n_degenerate,config_digest,error`
//! * correlation grid: `scheme,delta_f_hz,tau_s,re,im,m,rel_change`
//! * symbols: `x_re,x_im,y_re,y_im`
//!
//! Empty fields stand for "not applicable". Floats are written in their
//! shortest round-trip form, so reading a file back gives identical values.
//! Wall-clock times are left out of the records file so that reruns are
//! byte-identical; they are kept in the JSON run record.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::run::{ChannelData, RunRecord};
use crate::air::{AirResult, AuxChannelParams, PhaseModel, Receiver};
use crate::error::{Error, Result};
use crate::link::Scheme;
use crate::xpm::CorrelationGrid;

#[derive(Debug, Serialize, Deserialize)]
struct RecordRow {
    scheme: Scheme,
    receiver: Receiver,
    power_dbm: f64,
    status: String,
    air: Option<f64>,
    std_error: Option<f64>,
    h0: Option<f64>,
    sigma_n: Option<f64>,
    phase_model: Option<String>,
    sigma_z: Option<f64>,
    a_mix: Option<f64>,
    l0: Option<usize>,
    n_train: Option<usize>,
    n_eval: Option<usize>,
    seed: Option<u64>,
    sigma_n_degenerate: bool,
    config_digest: String,
    error: Option<String>,
}

impl From<&RunRecord> for RecordRow {
    fn from(r: &RunRecord) -> Self {
        let res = r.result.as_ref();
        let model = res.map(|a| a.params.phase_model);
        let (name, sigma_z, a_mix, l0) = match model {
            None => (None, None, None, None),
            Some(PhaseModel::Awgn) => (Some("awgn"), None, None, None),
            Some(PhaseModel::Ar1 { sigma_z }) => (Some("ar1"), Some(sigma_z), None, None),
            Some(PhaseModel::Hoar { sigma_z, a_mix, l0 }) => (Some("hoar"), Some(sigma_z), Some(a_mix), Some(l0)),
        };
        RecordRow {
            scheme: r.scheme,
            receiver: r.receiver,
            power_dbm: r.power_dbm,
            status: if res.is_some() { "ok" } else { "failed" }.to_string(),
            air: res.map(|a| a.air),
            std_error: res.map(|a| a.std_error),
            h0: res.map(|a| a.params.h0),
            sigma_n: res.map(|a| a.params.sigma_n),
            phase_model: name.map(str::to_string),
            sigma_z,
            a_mix,
            l0,
            n_train: res.map(|a| a.n_train),
            n_eval: res.map(|a| a.n_eval),
            seed: res.map(|a| a.seed),
            sigma_n_degenerate: r.sigma_n_degenerate,
            config_digest: r.config_digest.clone(),
            error: r.error.clone(),
        }
    }
}

impl RecordRow {
    fn into_record(self) -> Result<RunRecord> {
        let bad = |m: &str| Error::Io(format!("malformed record row: {m}"));
        let result = if self.status == "ok" {
            let model = match self.phase_model.as_deref() {
                Some("awgn") => PhaseModel::Awgn,
                Some("ar1") => PhaseModel::Ar1 {
                    sigma_z: self.sigma_z.ok_or_else(|| bad("sigma_z"))?,
                },
                Some("hoar") => PhaseModel::Hoar {
                    sigma_z: self.sigma_z.ok_or_else(|| bad("sigma_z"))?,
                    a_mix: self.a_mix.ok_or_else(|| bad("a_mix"))?,
                    l0: self.l0.ok_or_else(|| bad("l0"))?,
                },
                _ => return Err(bad("phase_model")),
            };
            Some(AirResult {
                air: self.air.ok_or_else(|| bad("air"))?,
                std_error: self.std_error.ok_or_else(|| bad("std_error"))?,
                params: AuxChannelParams {
                    h0: self.h0.ok_or_else(|| bad("h0"))?,
                    sigma_n: self.sigma_n.ok_or_else(|| bad("sigma_n"))?,
                    phase_model: model,
                },
                n_train: self.n_train.ok_or_else(|| bad("n_train"))?,
                n_eval: self.n_eval.ok_or_else(|| bad("n_eval"))?,
                seed: self.seed.ok_or_else(|| bad("seed"))?,
                config_digest: self.config_digest.clone(),
            })
        } else {
            None
        };
        Ok(RunRecord {
            scheme: self.scheme,
            receiver: self.receiver,
            power_dbm: self.power_dbm,
            result,
            error: self.error,
            sigma_n_degenerate: self.sigma_n_degenerate,
            wall_time_s: 0.0,
            config_digest: self.config_digest,
        })
    }
}

const RECORD_HEADER: [&str; 18] = [
    "scheme",
    "receiver",
    "power_dbm",
    "status",
    "air",
    "std_error",
    "h0",
    "sigma_n",
    "phase_model",
    "sigma_z",
    "a_mix",
    "l0",
    "n_train",
    "n_eval",
    "seed",
    "sigma_n_degenerate",
    "config_digest",
    "error",
];

pub fn write_records_csv(records: &[RunRecord], path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    // written explicitly so an empty file still carries the header
    w.write_record(RECORD_HEADER)?;
    for r in records {
        w.serialize(RecordRow::from(r))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a records file; wall times come back as zero.
pub fn read_records_csv(path: &Path) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize::<RecordRow>().map(|row| row?.into_record()).collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct GridRow {
    scheme: Scheme,
    delta_f_hz: f64,
    tau_s: f64,
    re: f64,
    im: f64,
    m: usize,
    rel_change: f64,
}

pub fn write_grid_csv(grid: &CorrelationGrid, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (i, &df) in grid.delta_f.iter().enumerate() {
        for (j, &tau) in grid.tau.iter().enumerate() {
            let v = grid.value(i, j);
            w.serialize(GridRow {
                scheme: grid.scheme,
                delta_f_hz: df,
                tau_s: tau,
                re: v.re,
                im: v.im,
                m: grid.m,
                rel_change: grid.rel_change,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_grid_csv(path: &Path) -> Result<CorrelationGrid> {
    let mut r = csv::Reader::from_path(path)?;
    let rows: Vec<GridRow> = r.deserialize().collect::<std::result::Result<_, _>>()?;
    let first = rows.first().ok_or_else(|| Error::Io("empty correlation grid".into()))?;
    let mut tau = Vec::new();
    for row in rows.iter().take_while(|r| r.delta_f_hz.to_bits() == first.delta_f_hz.to_bits()) {
        tau.push(row.tau_s);
    }
    if !rows.len().is_multiple_of(tau.len()) {
        return Err(Error::Io("correlation grid is not rectangular".into()));
    }
    let delta_f: Vec<f64> = rows.iter().step_by(tau.len()).map(|r| r.delta_f_hz).collect();
    for (k, row) in rows.iter().enumerate() {
        let (i, j) = (k / tau.len(), k % tau.len());
        if row.delta_f_hz.to_bits() != delta_f[i].to_bits() || row.tau_s.to_bits() != tau[j].to_bits() {
            return Err(Error::Io(format!("correlation grid row {} is out of order", k + 2)));
        }
    }
    let values: Vec<Complex64> = rows.iter().map(|r| Complex64::new(r.re, r.im)).collect();
    let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(CorrelationGrid {
        scheme: first.scheme,
        delta_f,
        tau,
        values,
        peak,
        m: first.m,
        rel_change: first.rel_change,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct SymbolRow {
    x_re: f64,
    x_im: f64,
    y_re: f64,
    y_im: f64,
}

pub fn write_symbols_csv(data: &ChannelData, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (x, y) in data.x.iter().zip(&data.y) {
        w.serialize(SymbolRow {
            x_re: x.re,
            x_im: x.im,
            y_re: y.re,
            y_im: y.im,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_symbols_csv(path: &Path) -> Result<ChannelData> {
    let mut r = csv::Reader::from_path(path)?;
    let mut data = ChannelData { x: Vec::new(), y: Vec::new() };
    for row in r.deserialize::<SymbolRow>() {
        let row = row?;
        data.x.push(Complex64::new(row.x_re, row.x_im));
        data.y.push(Complex64::new(row.y_re, row.y_im));
    }
    Ok(data)
}
