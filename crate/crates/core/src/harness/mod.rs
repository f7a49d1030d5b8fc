//! Experiment orchestration: configuration, sweeps, persistence and plots.

pub mod config;
pub mod io;
pub mod plot;
pub mod run;

pub use config::{dbm_to_w, Axis, CorrelationConfig, ExperimentConfig, LinkConfig, WdmConfig, SCHEMA_VERSION};
pub use io::{
    read_grid_csv, read_records_csv, read_symbols_csv, write_grid_csv, write_records_csv, write_symbols_csv,
};
pub use plot::{awgn_capacity, render_air_plot, render_correlation, render_sections};
pub use run::{
    cell_seed, estimate_receivers, run_experiment, simulate_cell, ChannelData, ReceiverOutcome, RunOptions,
    RunRecord, SweepOutcome,
};

use crate::error::Result;
use crate::link::Scheme;
use crate::xpm::{correlation_grid, CorrelationGrid};

/// Correlation grids of every configured scheme at the configured power.
pub fn correlate(cfg: &ExperimentConfig) -> Result<Vec<CorrelationGrid>> {
    correlate_schemes(cfg, &cfg.schemes)
}

pub fn correlate_schemes(cfg: &ExperimentConfig, schemes: &[Scheme]) -> Result<Vec<CorrelationGrid>> {
    let interferer = cfg.interferer();
    let df = cfg.delta_f_axis();
    let tau = cfg.tau_axis();
    schemes
        .iter()
        .map(|&s| {
            let link = cfg.link.spec(s, cfg.wdm.grid_spacing_hz);
            correlation_grid(&link, &interferer, &df, &tau, cfg.correlation.quadrature_points)
        })
        .collect()
}
