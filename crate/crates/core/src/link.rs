//! Fiber link: SMF spans by split-step Fourier, lumped dispersion
//! compensation (full-band DCF or per-channel FBG), EDFAs with ASE, and
//! single-channel digital back propagation.
//!
//! Field equation per span (power attenuation `alpha`):
//!
//! ```text
//! du/dz = j beta2/2 d2u/dt2 - j gamma |u|^2 u - alpha/2 u
//! ```
//!
//! so a linear span multiplies the spectrum by `exp(-j 2 pi^2 f^2 beta2 z)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{fft_in_place, ifft_in_place, SampledSignal};
use crate::transceiver::generate_gaussian_symbols;
use crate::xpm::folded_freq;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Group-velocity dispersion `beta2` (s^2/m) from `D` (ps/nm/km) at `lambda` (nm).
pub fn beta2_from_d(d_ps_nm_km: f64, lambda_nm: f64) -> f64 {
    let d = d_ps_nm_km * 1e-6; // s/m^2
    let lambda = lambda_nm * 1e-9;
    -d * lambda * lambda / (2.0 * PI * SPEED_OF_LIGHT)
}

/// CD transfer function for an accumulated `beta2 * z` (s^2).
pub fn cd_transfer(beta2_accumulated: f64, f: f64) -> Complex64 {
    Complex64::from_polar(1.0, -2.0 * PI * PI * f * f * beta2_accumulated)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberSpan {
    pub length_m: f64,
    pub attenuation_db_per_km: f64,
    pub dispersion_ps_nm_km: f64,
    pub gamma_per_w_km: f64,
    pub wavelength_nm: f64,
}

impl FiberSpan {
    /// Standard SMF span used throughout the numerical examples.
    pub fn standard_smf() -> Self {
        Self {
            length_m: 100e3,
            attenuation_db_per_km: 0.2,
            dispersion_ps_nm_km: 17.0,
            gamma_per_w_km: 1.27,
            wavelength_nm: 1550.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_m > 0.0) || !(self.gamma_per_w_km >= 0.0) || !(self.attenuation_db_per_km >= 0.0) {
            return Err(Error::InvalidLink(format!("bad span parameters {self:?}")));
        }
        if !(self.wavelength_nm > 0.0) || !self.dispersion_ps_nm_km.is_finite() {
            return Err(Error::InvalidLink("bad wavelength or dispersion".into()));
        }
        Ok(())
    }

    pub fn beta2(&self) -> f64 {
        beta2_from_d(self.dispersion_ps_nm_km, self.wavelength_nm)
    }

    /// Power attenuation coefficient in 1/m.
    pub fn alpha(&self) -> f64 {
        self.attenuation_db_per_km * std::f64::consts::LN_10 / 10.0 / 1e3
    }

    /// Nonlinear coefficient in 1/(W m).
    pub fn gamma(&self) -> f64 {
        self.gamma_per_w_km / 1e3
    }

    pub fn effective_length(&self) -> f64 {
        let a = self.alpha();
        if a * self.length_m < 1e-12 {
            self.length_m
        } else {
            -(-a * self.length_m).exp_m1() / a
        }
    }

    /// Power gain that exactly compensates the span loss.
    pub fn loss_compensating_gain(&self) -> f64 {
        (self.alpha() * self.length_m).exp()
    }

    pub fn carrier_frequency(&self) -> f64 {
        SPEED_OF_LIGHT / (self.wavelength_nm * 1e-9)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Electronic CD compensation only.
    Ndm,
    /// Full-band inline compensation (DCF) at the end of every span.
    Dm,
    /// Per-channel inline compensation (FBG) at the end of every span.
    Cdm,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Ndm, Scheme::Dm, Scheme::Cdm];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Ndm => "ndm",
            Scheme::Dm => "dm",
            Scheme::Cdm => "cdm",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ndm" => Ok(Scheme::Ndm),
            "dm" => Ok(Scheme::Dm),
            "cdm" => Ok(Scheme::Cdm),
            other => Err(Error::Config(format!("unknown scheme {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsePlacement {
    /// Each amplifier adds its own ASE.
    Inline,
    /// All amplifiers are noiseless; the accumulated ASE is added before the first span.
    AtTransmitter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplifierSpec {
    pub noise_figure_db: f64,
}

impl Default for AmplifierSpec {
    fn default() -> Self {
        Self { noise_figure_db: 5.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub span: FiberSpan,
    pub n_spans: usize,
    pub scheme: Scheme,
    /// WDM grid spacing `B`, used for per-channel folding.
    pub channel_bandwidth_hz: f64,
    pub amplifier: AmplifierSpec,
    pub ase_placement: AsePlacement,
}

impl LinkSpec {
    pub fn validate(&self) -> Result<()> {
        self.span.validate()?;
        if self.n_spans == 0 {
            return Err(Error::InvalidLink("n_spans must be positive".into()));
        }
        if !(self.channel_bandwidth_hz > 0.0) {
            return Err(Error::InvalidLink("channel bandwidth must be positive".into()));
        }
        if !self.amplifier.noise_figure_db.is_finite() {
            return Err(Error::InvalidLink("noise figure".into()));
        }
        Ok(())
    }

    /// One-sided ASE PSD (W/Hz) of a single amplifier.
    pub fn ase_psd(&self) -> f64 {
        ase_psd(&self.span, self.amplifier.noise_figure_db)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SsfmConfig {
    pub steps_per_span: usize,
}

impl SsfmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps_per_span == 0 {
            return Err(Error::InvalidLink("steps_per_span must be at least 1".into()));
        }
        Ok(())
    }
}

/// Transfer function of the inline compensating element at absolute frequency `f`.
///
/// DCF cancels one span of CD everywhere; an FBG cancels it only relative to
/// the nearest channel center, so its phase is periodic in `f` with period `B`.
pub fn dc_element_transfer(scheme: Scheme, span: &FiberSpan, b: f64, f: f64) -> Result<Complex64> {
    let bl = span.beta2() * span.length_m;
    match scheme {
        Scheme::Dm => Ok(cd_transfer(-bl, f)),
        Scheme::Cdm => Ok(cd_transfer(-bl, folded_freq(f, b))),
        Scheme::Ndm => Err(Error::NoDcElement(scheme.to_string())),
    }
}

/// Symmetric split-step solver on one sample buffer.
///
/// Parameters may be negated to run the equation backwards (used by DBP); the
/// uniform symmetric scheme is then the exact step-by-step inverse.
struct SplitStep {
    half_linear: Vec<Complex64>,
    steps: usize,
    nl_step: f64,
}

impl SplitStep {
    fn new(freqs: &[f64], beta2: f64, gamma: f64, alpha: f64, length: f64, steps: usize) -> Self {
        let h = length / steps as f64;
        let half_linear = freqs
            .iter()
            .map(|&f| {
                let phase = -2.0 * PI * PI * f * f * beta2 * h / 2.0;
                Complex64::from_polar((-alpha * h / 4.0).exp(), phase)
            })
            .collect();
        Self {
            half_linear,
            steps,
            nl_step: gamma * h,
        }
    }

    fn linear(&self, buf: &mut [Complex64], times: u32) {
        fft_in_place(buf);
        if times == 1 {
            buf.iter_mut().zip(&self.half_linear).for_each(|(b, h)| *b *= h);
        } else {
            buf.iter_mut().zip(&self.half_linear).for_each(|(b, h)| *b *= h * h);
        }
        ifft_in_place(buf);
    }

    fn nonlinear(&self, buf: &mut [Complex64]) {
        if self.nl_step == 0.0 {
            return;
        }
        for v in buf.iter_mut() {
            let phi = -self.nl_step * v.norm_sqr();
            *v *= Complex64::new(phi.cos(), phi.sin());
        }
    }

    fn run(&self, buf: &mut [Complex64]) {
        self.linear(buf, 1);
        for s in 0..self.steps {
            self.nonlinear(buf);
            self.linear(buf, if s + 1 == self.steps { 1 } else { 2 });
        }
    }
}

fn check_finite(buf: &[Complex64]) -> Result<()> {
    if buf.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NumericBlowUp)
    }
}

/// Propagates `signal` through one SMF span.
pub fn ssfm_propagate(signal: &SampledSignal, span: &FiberSpan, cfg: &SsfmConfig) -> Result<SampledSignal> {
    span.validate()?;
    cfg.validate()?;
    let freqs = signal.absolute_frequencies();
    let stepper = SplitStep::new(
        &freqs,
        span.beta2(),
        span.gamma(),
        span.alpha(),
        span.length_m,
        cfg.steps_per_span,
    );
    let mut buf = signal.samples().to_vec();
    stepper.run(&mut buf);
    check_finite(&buf)?;
    Ok(signal.with_samples(buf))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmplifierMode {
    AddAse,
    Noiseless,
}

/// ASE PSD `(G - 1) h nu n_sp` with `n_sp = NF / 2`, one polarization.
pub fn ase_psd(span: &FiberSpan, noise_figure_db: f64) -> f64 {
    let g = span.loss_compensating_gain();
    let n_sp = 10f64.powf(noise_figure_db / 10.0) / 2.0;
    (g - 1.0) * PLANCK * span.carrier_frequency() * n_sp
}

/// Adds circular white Gaussian noise of one-sided PSD `psd` (W/Hz) over the simulated band.
pub fn add_white_noise<R: Rng + ?Sized>(signal: &SampledSignal, psd: f64, rng: &mut R) -> SampledSignal {
    let noise = generate_gaussian_symbols(signal.len(), psd * signal.sample_rate(), rng);
    let samples = signal.samples().iter().zip(&noise).map(|(s, n)| s + n).collect();
    signal.with_samples(samples)
}

/// Lumped amplifier that restores the span loss, optionally adding ASE.
pub fn amplify<R: Rng + ?Sized>(
    signal: &SampledSignal,
    span: &FiberSpan,
    noise_figure_db: f64,
    mode: AmplifierMode,
    rng: &mut R,
) -> SampledSignal {
    let g = span.loss_compensating_gain().sqrt();
    let amplified = signal.with_samples(signal.samples().iter().map(|s| s * g).collect());
    match mode {
        AmplifierMode::Noiseless => amplified,
        AmplifierMode::AddAse => add_white_noise(&amplified, ase_psd(span, noise_figure_db), rng),
    }
}

fn apply_dc(buf: &mut [Complex64], freqs: &[f64], link: &LinkSpec, inverse: bool) -> Result<()> {
    if link.scheme == Scheme::Ndm {
        return Ok(());
    }
    fft_in_place(buf);
    for (b, &f) in buf.iter_mut().zip(freqs) {
        let h = dc_element_transfer(link.scheme, &link.span, link.channel_bandwidth_hz, f)?;
        *b *= if inverse { h.conj() } else { h };
    }
    ifft_in_place(buf);
    Ok(())
}

/// Full link: `n_spans` x [SMF -> DC element (DM/CDM) -> EDFA].
pub fn run_link<R: Rng + ?Sized>(
    waveform: &SampledSignal,
    link: &LinkSpec,
    cfg: &SsfmConfig,
    noise: bool,
    rng: &mut R,
) -> Result<SampledSignal> {
    link.validate()?;
    cfg.validate()?;
    let span = &link.span;
    let freqs = waveform.absolute_frequencies();
    let stepper = SplitStep::new(
        &freqs,
        span.beta2(),
        span.gamma(),
        span.alpha(),
        span.length_m,
        cfg.steps_per_span,
    );
    let inline_noise = noise && link.ase_placement == AsePlacement::Inline;
    let mut signal = if noise && link.ase_placement == AsePlacement::AtTransmitter {
        add_white_noise(waveform, link.n_spans as f64 * link.ase_psd(), rng)
    } else {
        waveform.clone()
    };
    let mode = if inline_noise {
        AmplifierMode::AddAse
    } else {
        AmplifierMode::Noiseless
    };
    for _ in 0..link.n_spans {
        let mut buf = signal.into_samples();
        stepper.run(&mut buf);
        check_finite(&buf)?;
        apply_dc(&mut buf, &freqs, link, false)?;
        let propagated = waveform.with_samples(buf);
        signal = amplify(&propagated, span, link.amplifier.noise_figure_db, mode, rng);
    }
    Ok(signal)
}

/// Noiseless backward propagation of a single band through the link.
///
/// Spans are undone in reverse order: remove the amplifier gain, invert the
/// compensating element (evaluated at the band's absolute frequencies), then
/// integrate the SMF equation with `beta2`, `gamma` and `alpha` negated.
pub fn dbp(signal: &SampledSignal, link: &LinkSpec, cfg: &SsfmConfig) -> Result<SampledSignal> {
    link.validate()?;
    cfg.validate()?;
    let span = &link.span;
    let freqs = signal.absolute_frequencies();
    let stepper = SplitStep::new(
        &freqs,
        -span.beta2(),
        -span.gamma(),
        -span.alpha(),
        span.length_m,
        cfg.steps_per_span,
    );
    let inv_gain = 1.0 / span.loss_compensating_gain().sqrt();
    let mut buf: Vec<Complex64> = signal.samples().to_vec();
    for _ in 0..link.n_spans {
        buf.iter_mut().for_each(|v| *v *= inv_gain);
        apply_dc(&mut buf, &freqs, link, true)?;
        stepper.run(&mut buf);
        check_finite(&buf)?;
    }
    Ok(signal.with_samples(buf))
}
