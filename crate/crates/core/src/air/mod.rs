//! Achievable information rates with mismatched (auxiliary-channel) decoding.
//!
//! The auxiliary law is `y = h0 x exp(j theta) + n` with circular Gaussian
//! `n` of variance `sigma_n^2` and a phase process chosen by [`PhaseModel`].
//! The rate is the empirical average of `log2 q(y|x) - log2 q(y)`. For
//! circularly symmetric Gaussian inputs the output marginal `q(y)` does not
//! depend on the phase process at all, so it is evaluated in closed form for
//! every model and only `q(y_l | x^N, y^{l-1})` needs a particle filter.

mod bessel;
pub mod awgn;
pub mod estimate;
pub mod fit;
pub mod particle;
pub mod simulate;

pub use awgn::air_awgn;
pub use estimate::{estimate_gain_noise, GainNoiseEstimate};
pub use fit::{fit_phase_model, fit_phase_model_seeded, PhaseFit};
pub use particle::air_particle;
pub use simulate::{simulate_aux, simulate_aux_trace};

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of contiguous blocks used for the statistical error of an AIR.
pub const ERROR_BLOCKS: usize = 20;

/// Phase process of the auxiliary channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PhaseModel {
    /// `theta = 0`.
    Awgn,
    /// Wiener phase: `theta_l = theta_{l-1} + z_l (mod 2 pi)`.
    Ar1 { sigma_z: f64 },
    /// `theta_l = a theta_{l-1} + (1 - a) theta_{l-l0} + z_l (mod 2 pi)`.
    ///
    /// The mixture is taken along the shortest arc between the two past
    /// phases, so it is unaffected by where the `2 pi` wrap falls.
    Hoar { sigma_z: f64, a_mix: f64, l0: usize },
}

impl PhaseModel {
    pub fn sigma_z(&self) -> f64 {
        match *self {
            PhaseModel::Awgn => 0.0,
            PhaseModel::Ar1 { sigma_z } | PhaseModel::Hoar { sigma_z, .. } => sigma_z,
        }
    }

    pub fn receiver(&self) -> Receiver {
        match self {
            PhaseModel::Awgn => Receiver::Awgn,
            PhaseModel::Ar1 { .. } => Receiver::Ar1,
            PhaseModel::Hoar { .. } => Receiver::Hoar,
        }
    }

    /// Length of the phase history the model reads.
    pub fn memory(&self) -> usize {
        match *self {
            PhaseModel::Hoar { l0, .. } => l0,
            _ => 1,
        }
    }
}

/// Receiver (auxiliary channel family) names used in sweeps and records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Receiver {
    Awgn,
    Ar1,
    Hoar,
}

impl Receiver {
    pub fn name(self) -> &'static str {
        match self {
            Receiver::Awgn => "awgn",
            Receiver::Ar1 => "ar1",
            Receiver::Hoar => "hoar",
        }
    }
}

impl std::fmt::Display for Receiver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Receiver {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "awgn" => Ok(Receiver::Awgn),
            "ar1" => Ok(Receiver::Ar1),
            "hoar" => Ok(Receiver::Hoar),
            other => Err(Error::Config(format!("unknown receiver {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuxChannelParams {
    pub h0: f64,
    pub sigma_n: f64,
    pub phase_model: PhaseModel,
}

impl AuxChannelParams {
    pub fn awgn(h0: f64, sigma_n: f64) -> Self {
        Self {
            h0,
            sigma_n,
            phase_model: PhaseModel::Awgn,
        }
    }

    pub fn with_phase(self, phase_model: PhaseModel) -> Self {
        Self { phase_model, ..self }
    }

    /// Parameters usable by a decoder: `sigma_n` must be positive.
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_n > 0.0) {
            return Err(Error::InvalidParams("sigma_n must be finite and > 0".into()));
        }
        self.validate_law()
    }

    /// Parameters of a generating channel, which may be noiseless.
    pub fn validate_law(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if !(self.h0 >= 0.0 && self.h0.is_finite()) {
            return bad("h0 must be finite and >= 0");
        }
        if !(self.sigma_n >= 0.0 && self.sigma_n.is_finite()) {
            return bad("sigma_n must be finite and >= 0");
        }
        match self.phase_model {
            PhaseModel::Awgn => {}
            PhaseModel::Ar1 { sigma_z } => {
                if !(sigma_z >= 0.0 && sigma_z.is_finite()) {
                    return bad("sigma_z must be >= 0");
                }
            }
            PhaseModel::Hoar { sigma_z, a_mix, l0 } => {
                if !(sigma_z >= 0.0 && sigma_z.is_finite()) {
                    return bad("sigma_z must be >= 0");
                }
                if !(0.0..=1.0).contains(&a_mix) {
                    return bad("a_mix must lie in [0, 1]");
                }
                if l0 < 2 {
                    return bad("l0 must be at least 2");
                }
            }
        }
        Ok(())
    }

    /// `log q(y | x, theta = 0)` in nats for the Gaussian part.
    pub(crate) fn log_norm(&self) -> f64 {
        -(PI * self.sigma_n * self.sigma_n).ln()
    }
}

/// Output of an AIR estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AirResult {
    /// bits/symbol
    pub air: f64,
    pub std_error: f64,
    pub params: AuxChannelParams,
    pub n_train: usize,
    pub n_eval: usize,
    pub seed: u64,
    pub config_digest: String,
}

impl AirResult {
    pub fn with_provenance(mut self, n_train: usize, config_digest: &str) -> Self {
        self.n_train = n_train;
        self.config_digest = config_digest.to_string();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleConfig {
    pub n_particles: usize,
    /// Resample when the effective sample size drops below this fraction of `n_particles`.
    pub resample_threshold: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ParticleConfig {
    fn default() -> Self {
        Self {
            n_particles: 512,
            resample_threshold: 0.5,
            seed: 0,
        }
    }
}

impl ParticleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles < 2 {
            return Err(Error::InvalidParams("need at least 2 particles".into()));
        }
        if !(self.resample_threshold > 0.0 && self.resample_threshold <= 1.0) {
            return Err(Error::InvalidParams("resample threshold must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub sigma_z_bounds: (f64, f64),
    pub a_mix_bounds: (f64, f64),
    pub l0_bounds: (usize, usize),
    #[serde(default)]
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 20,
            generations: 30,
            sigma_z_bounds: (1e-4, 1.0),
            a_mix_bounds: (0.0, 1.0),
            l0_bounds: (2, 64),
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidGa(m.to_string()));
        if self.population < 4 {
            return bad("population must be at least 4");
        }
        if self.generations == 0 {
            return bad("generations must be at least 1");
        }
        let (s0, s1) = self.sigma_z_bounds;
        if !(s0 > 0.0 && s0 <= s1 && s1.is_finite()) {
            return bad("sigma_z bounds must satisfy 0 < lo <= hi");
        }
        let (a0, a1) = self.a_mix_bounds;
        if !(0.0 <= a0 && a0 <= a1 && a1 <= 1.0) {
            return bad("a_mix bounds must satisfy 0 <= lo <= hi <= 1");
        }
        let (l0, l1) = self.l0_bounds;
        if !(2 <= l0 && l0 <= l1) {
            return bad("l0 bounds must satisfy 2 <= lo <= hi");
        }
        Ok(())
    }
}

/// Circular Gaussian output marginal `log q(y)` (nats) for input power `p`.
pub(crate) fn log_marginal(y: Complex64, params: &AuxChannelParams, p: f64) -> f64 {
    let s2 = params.h0 * params.h0 * p + params.sigma_n * params.sigma_n;
    -(PI * s2).ln() - y.norm_sqr() / s2
}

pub(crate) fn mean_power(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64
}

/// Mean of per-symbol information densities (nats) in bits, with the
/// standard error from [`ERROR_BLOCKS`] contiguous block means.
pub(crate) fn blockwise_bits(info_nats: &[f64]) -> (f64, f64) {
    let n = info_nats.len();
    let mean = info_nats.iter().sum::<f64>() / n as f64 / LN_2;
    let blocks = ERROR_BLOCKS.min(n);
    if blocks < 2 {
        return (mean, 0.0);
    }
    let means: Vec<f64> = (0..blocks)
        .map(|b| {
            let lo = b * n / blocks;
            let hi = (b + 1) * n / blocks;
            info_nats[lo..hi].iter().sum::<f64>() / (hi - lo) as f64 / LN_2
        })
        .collect();
    let bm = means.iter().sum::<f64>() / blocks as f64;
    let var = means.iter().map(|m| (m - bm).powi(2)).sum::<f64>() / (blocks - 1) as f64;
    (mean, (var / blocks as f64).sqrt())
}

pub(crate) fn check_pairs(x: &[Complex64], y: &[Complex64], min: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InsufficientData(format!("{} inputs vs {} outputs", x.len(), y.len())));
    }
    if x.len() < min {
        return Err(Error::InsufficientData(format!("{} pairs, need {min}", x.len())));
    }
    Ok(())
}

/// Wraps an angle to `(-pi, pi]`.
pub(crate) fn wrap_pi(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Wraps an angle to `[0, 2 pi)`.
pub(crate) fn wrap_2pi(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w >= 2.0 * PI {
        0.0
    } else {
        w
    }
}

/// One step of the phase process from the previous phase and the phase `l0` steps back.
#[inline]
pub(crate) fn phase_step(model: &PhaseModel, prev: f64, lagged: f64, z: f64) -> f64 {
    match *model {
        PhaseModel::Awgn => 0.0,
        PhaseModel::Ar1 { .. } => wrap_2pi(prev + z),
        PhaseModel::Hoar { a_mix, .. } => wrap_2pi(prev + (1.0 - a_mix) * wrap_pi(lagged - prev) + z),
    }
}
