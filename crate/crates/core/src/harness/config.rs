//! Experiment configuration: a versioned TOML document with two shipped presets.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::air::{GaConfig, ParticleConfig, Receiver};
use crate::error::{Error, Result};
use crate::link::{AmplifierSpec, AsePlacement, FiberSpan, LinkSpec, Scheme, SsfmConfig};
use crate::transceiver::WdmSpec;
use crate::xpm::{tau_axis_symbols, InterfererSpec, DEFAULT_QUADRATURE_POINTS};

pub const SCHEMA_VERSION: u32 = 1;

pub fn dbm_to_w(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

/// WDM comb without the launch power, which the sweep supplies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WdmConfig {
    pub n_channels: usize,
    pub grid_spacing_hz: f64,
    pub symbol_rate_baud: f64,
    pub oversampling: usize,
    pub n_symbols: usize,
}

impl WdmConfig {
    pub fn spec(&self, channel_power_w: f64) -> WdmSpec {
        WdmSpec {
            n_channels: self.n_channels,
            grid_spacing_hz: self.grid_spacing_hz,
            symbol_rate_baud: self.symbol_rate_baud,
            channel_power_w,
            oversampling: self.oversampling,
            n_symbols: self.n_symbols,
        }
    }
}

/// Link without the compensation scheme, which the sweep supplies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub span: FiberSpan,
    pub n_spans: usize,
    #[serde(default)]
    pub amplifier: AmplifierSpec,
    pub ase_placement: AsePlacement,
    /// Set to `false` for a noiseless link.
    #[serde(default = "yes")]
    pub ase_noise: bool,
}

fn yes() -> bool {
    true
}

impl LinkConfig {
    pub fn spec(&self, scheme: Scheme, grid_spacing_hz: f64) -> LinkSpec {
        LinkSpec {
            span: self.span,
            n_spans: self.n_spans,
            scheme,
            channel_bandwidth_hz: grid_spacing_hz,
            amplifier: self.amplifier,
            ase_placement: self.ase_placement,
        }
    }
}

/// Evenly spaced axis, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.start + step * i as f64).collect()
    }
}

/// Settings of the `correlate` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationConfig {
    pub delta_f_hz: Axis,
    pub tau_symbols: Axis,
    pub quadrature_points: usize,
    /// Launch power per channel for the interferer model, dBm.
    pub power_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub seed: u64,
    /// Not part of the digest.
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub powers_dbm: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub receivers: Vec<Receiver>,
    /// Leading symbols used for parameter fitting; the rest are evaluated.
    pub n_train: usize,
    /// Also write the received symbols of every cell.
    #[serde(default)]
    pub save_symbols: bool,
    pub wdm: WdmConfig,
    pub link: LinkConfig,
    pub ssfm: SsfmConfig,
    pub particles: ParticleConfig,
    pub ga: GaConfig,
    pub correlation: CorrelationConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    /// Three channels over ten spans with 10^4 symbols; runs on a laptop.
    pub fn desk() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 1,
            output_dir: default_output_dir(),
            powers_dbm: vec![-4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0],
            schemes: Scheme::ALL.to_vec(),
            receivers: vec![Receiver::Awgn, Receiver::Ar1, Receiver::Hoar],
            n_train: 1000,
            save_symbols: false,
            wdm: WdmConfig {
                n_channels: 3,
                grid_spacing_hz: 50e9,
                symbol_rate_baud: 50e9,
                oversampling: 4,
                n_symbols: 10_000,
            },
            link: LinkConfig {
                span: FiberSpan::standard_smf(),
                n_spans: 10,
                amplifier: AmplifierSpec::default(),
                ase_placement: AsePlacement::Inline,
                ase_noise: true,
            },
            ssfm: SsfmConfig { steps_per_span: 200 },
            particles: ParticleConfig::default(),
            ga: GaConfig {
                population: 12,
                generations: 10,
                ..GaConfig::default()
            },
            correlation: CorrelationConfig {
                delta_f_hz: Axis {
                    start: -25e9,
                    stop: 25e9,
                    points: 11,
                },
                tau_symbols: Axis {
                    start: -10.0,
                    stop: 80.0,
                    points: 91,
                },
                quadrature_points: DEFAULT_QUADRATURE_POINTS,
                power_dbm: 0.0,
            },
        }
    }

    /// The full system of the numerical examples: 20 spans and 10^5 symbols.
    pub fn paper() -> Self {
        let mut c = Self::desk();
        c.powers_dbm = vec![-5.0, -4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0];
        c.n_train = 2000;
        c.wdm.n_symbols = 100_000;
        c.link.n_spans = 20;
        c.ga = GaConfig::default();
        c.correlation.tau_symbols = Axis {
            start: -10.0,
            stop: 100.0,
            points: 111,
        };
        c
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "desk" => Ok(Self::desk()),
            "paper" => Ok(Self::paper()),
            other => Err(Error::Config(format!("unknown preset {other:?} (expected desk or paper)"))),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let c: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.powers_dbm.is_empty() || self.schemes.is_empty() || self.receivers.is_empty() {
            return bad("powers_dbm, schemes and receivers must be nonempty".into());
        }
        if self.powers_dbm.iter().any(|p| !p.is_finite()) {
            return bad("launch powers must be finite".into());
        }
        let distinct_powers: BTreeSet<u64> = self.powers_dbm.iter().map(|p| p.to_bits()).collect();
        if distinct_powers.len() != self.powers_dbm.len()
            || self.schemes.iter().collect::<BTreeSet<_>>().len() != self.schemes.len()
            || self.receivers.iter().collect::<BTreeSet<_>>().len() != self.receivers.len()
        {
            return bad("sweep lists must not repeat entries".into());
        }
        self.wdm.spec(1e-3).validate()?;
        for &s in &self.schemes {
            self.link.spec(s, self.wdm.grid_spacing_hz).validate()?;
        }
        self.ssfm.validate()?;
        self.particles.validate()?;
        self.ga.validate()?;
        if self.n_train < 100 || self.n_train + 100 > self.wdm.n_symbols {
            return bad(format!(
                "n_train = {} must leave at least 100 symbols on both sides of the split",
                self.n_train
            ));
        }
        if self.receivers.contains(&Receiver::Hoar) && self.n_train < 10 * self.ga.l0_bounds.1 {
            return bad(format!(
                "n_train = {} is shorter than 10 x the largest l0 ({})",
                self.n_train, self.ga.l0_bounds.1
            ));
        }
        let c = &self.correlation;
        if c.delta_f_hz.points == 0 || c.tau_symbols.points == 0 || c.quadrature_points < 16 {
            return bad("correlation axes need points and at least 16 quadrature nodes".into());
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form, ignoring the output directory.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let json = serde_json::to_string(&c).expect("configuration serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Interferer seen by the middle channel at the correlation power.
    pub fn interferer(&self) -> InterfererSpec {
        InterfererSpec::wdm_neighbours(&self.wdm.spec(dbm_to_w(self.correlation.power_dbm)))
    }

    pub fn delta_f_axis(&self) -> Vec<f64> {
        self.correlation.delta_f_hz.values()
    }

    pub fn tau_axis(&self) -> Vec<f64> {
        tau_axis_symbols(&self.correlation.tau_symbols.values(), self.wdm.symbol_rate_baud)
    }
}
