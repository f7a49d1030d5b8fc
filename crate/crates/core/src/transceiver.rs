//! Gaussian-symbol WDM transmitter and matched-filter receiver front end.
//!
//! Pulses are periodic sincs: a symbol block is placed on a rectangular
//! spectrum of width `R_s` on the circular frame, which gives exact Nyquist
//! orthogonality for any frame length. Multiplexing and demultiplexing are
//! exact bin shifts because every channel center lands on a DFT bin.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream};
use crate::signal::{bin_index, fft_in_place, ifft_in_place, SampledSignal};

/// Minimum guard band beyond the outermost channel edge, as a fraction of the
/// edge frequency.
pub const GUARD_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WdmSpec {
    /// Odd number of channels; channel 0 (the middle one) is the channel of interest.
    pub n_channels: usize,
    pub grid_spacing_hz: f64,
    pub symbol_rate_baud: f64,
    /// Average launch power per channel, W.
    pub channel_power_w: f64,
    /// Samples per symbol of the aggregate simulation grid.
    pub oversampling: usize,
    pub n_symbols: usize,
}

impl WdmSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidWdm(m));
        if self.n_channels == 0 || self.n_channels.is_multiple_of(2) {
            return bad(format!("n_channels = {} must be positive and odd", self.n_channels));
        }
        if !(self.symbol_rate_baud > 0.0 && self.grid_spacing_hz > 0.0) {
            return bad("symbol rate and grid spacing must be positive".into());
        }
        if self.symbol_rate_baud > self.grid_spacing_hz * (1.0 + 1e-12) {
            return bad("symbol rate exceeds grid spacing; sinc channels would overlap".into());
        }
        if self.oversampling == 0 || self.n_symbols == 0 {
            return bad("oversampling and n_symbols must be positive".into());
        }
        if !(self.channel_power_w >= 0.0 && self.channel_power_w.is_finite()) {
            return bad(format!("channel power {}", self.channel_power_w));
        }
        let occupied = self.n_channels as f64 * self.grid_spacing_hz;
        if self.sample_rate() < occupied * (1.0 + GUARD_FRACTION) * (1.0 - 1e-12) {
            return bad(format!(
                "sample rate {:.4e} Hz leaves less than {:.0}% guard beyond the {:.4e} Hz comb",
                self.sample_rate(),
                GUARD_FRACTION * 100.0,
                occupied
            ));
        }
        self.channel_bins()?;
        Ok(())
    }

    pub fn sample_rate(&self) -> f64 {
        self.oversampling as f64 * self.symbol_rate_baud
    }

    pub fn n_samples(&self) -> usize {
        self.oversampling * self.n_symbols
    }

    pub fn bin_spacing(&self) -> f64 {
        self.symbol_rate_baud / self.n_symbols as f64
    }

    /// Largest channel index `K`; channels run over `-K..=K`.
    pub fn max_index(&self) -> i64 {
        (self.n_channels as i64 - 1) / 2
    }

    pub fn channel_indices(&self) -> impl Iterator<Item = i64> {
        let k = self.max_index();
        -k..=k
    }

    pub fn channel_center(&self, k: i64) -> f64 {
        k as f64 * self.grid_spacing_hz
    }

    /// Grid spacing expressed in DFT bins of the aggregate frame.
    pub fn channel_bins(&self) -> Result<i64> {
        let ratio = self.grid_spacing_hz / self.bin_spacing();
        let rounded = ratio.round();
        if (ratio - rounded).abs() > 1e-6 * ratio.max(1.0) {
            return Err(Error::GridMismatch(format!(
                "grid spacing is {ratio} bins; B * n_symbols / R_s must be an integer"
            )));
        }
        Ok(rounded as i64)
    }

    fn check_index(&self, k: i64) -> Result<()> {
        if k.abs() > self.max_index() {
            return Err(Error::ChannelOutOfRange {
                index: k,
                n_channels: self.n_channels,
            });
        }
        Ok(())
    }
}

/// Per-channel symbol sequences, ordered from channel `-K` to `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame {
    channels: Vec<Vec<Complex64>>,
}

impl SymbolFrame {
    pub fn new(channels: Vec<Vec<Complex64>>) -> Result<Self> {
        let len = channels.first().map(Vec::len).unwrap_or(0);
        if channels.is_empty() || len == 0 {
            return Err(Error::InvalidWdm("empty symbol frame".into()));
        }
        if channels.iter().any(|c| c.len() != len) {
            return Err(Error::InvalidWdm("channels differ in length".into()));
        }
        if channels.iter().flatten().any(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::InvalidWdm("non-finite symbol".into()));
        }
        Ok(Self { channels })
    }

    /// Independent Gaussian symbols for every channel, one derived stream each.
    pub fn gaussian(spec: &WdmSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let channels = spec
            .channel_indices()
            .map(|k| {
                let mut rng = stream(derive_seed(seed, &format!("channel {k}")));
                generate_gaussian_symbols(spec.n_symbols, spec.channel_power_w, &mut rng)
            })
            .collect();
        Self::new(channels)
    }

    pub fn channels(&self) -> &[Vec<Complex64>] {
        &self.channels
    }

    /// Symbols of channel index `k` in `-K..=K`.
    pub fn channel(&self, k: i64) -> &[Complex64] {
        let mid = (self.channels.len() as i64 - 1) / 2;
        &self.channels[(k + mid) as usize]
    }
}

/// I.i.d. circularly-symmetric complex Gaussian symbols with `E|x|^2 = power`.
pub fn generate_gaussian_symbols<R: Rng + ?Sized>(n: usize, power: f64, rng: &mut R) -> Vec<Complex64> {
    let sd = (power / 2.0).sqrt();
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(sd * re, sd * im)
        })
        .collect()
}

/// Sinc-pulse modulation of one channel onto the aggregate sample grid, at baseband.
pub fn modulate(symbols: &[Complex64], spec: &WdmSpec) -> Result<SampledSignal> {
    spec.validate()?;
    if symbols.len() != spec.n_symbols {
        return Err(Error::InvalidWdm(format!(
            "{} symbols for a frame of {}",
            symbols.len(),
            spec.n_symbols
        )));
    }
    let n_sym = spec.n_symbols;
    let n = spec.n_samples();
    let mut sym_spec = symbols.to_vec();
    fft_in_place(&mut sym_spec);
    let gain = (spec.oversampling as f64).sqrt();
    let mut bins = vec![Complex64::default(); n];
    for s in symbol_band(n_sym) {
        bins[bin_index(s, n)] = sym_spec[bin_index(s, n_sym)] * gain;
    }
    ifft_in_place(&mut bins);
    Ok(SampledSignal::from_parts(bins, spec.sample_rate(), 0.0))
}

/// Sums baseband channel waveforms (ordered `-K..=K`) onto the comb at `k * B`.
pub fn wdm_mux(waveforms: &[SampledSignal], spec: &WdmSpec) -> Result<SampledSignal> {
    spec.validate()?;
    if waveforms.len() != spec.n_channels {
        return Err(Error::GridMismatch(format!(
            "{} waveforms for {} channels",
            waveforms.len(),
            spec.n_channels
        )));
    }
    let n = spec.n_samples();
    for w in waveforms {
        if w.len() != n || (w.sample_rate() - spec.sample_rate()).abs() > 1e-9 * spec.sample_rate() {
            return Err(Error::GridMismatch("waveform grid differs from the WDM grid".into()));
        }
    }
    let shift = spec.channel_bins()?;
    let mut total = vec![Complex64::default(); n];
    for (w, k) in waveforms.iter().zip(spec.channel_indices()) {
        let mut bins = w.samples().to_vec();
        fft_in_place(&mut bins);
        let offset = k * shift;
        for (j, b) in bins.iter().enumerate() {
            let dst = (j as i64 + offset).rem_euclid(n as i64) as usize;
            total[dst] += b;
        }
    }
    ifft_in_place(&mut total);
    Ok(SampledSignal::from_parts(total, spec.sample_rate(), 0.0))
}

/// Ideal brick-wall selection of channel `k`, shifted down to baseband.
///
/// The returned signal keeps the aggregate sample grid; its `center_offset`
/// records the channel's position `k * B` on the comb.
pub fn wdm_demux(aggregate: &SampledSignal, k: i64, spec: &WdmSpec) -> Result<SampledSignal> {
    spec.validate()?;
    spec.check_index(k)?;
    let n = aggregate.len();
    if n != spec.n_samples() {
        return Err(Error::GridMismatch("aggregate length differs from the WDM grid".into()));
    }
    let shift = spec.channel_bins()?;
    let mut bins = aggregate.samples().to_vec();
    fft_in_place(&mut bins);
    let mut out = vec![Complex64::default(); n];
    for j in symbol_band(shift as usize) {
        out[bin_index(j, n)] = bins[bin_index(j + k * shift, n)];
    }
    ifft_in_place(&mut out);
    Ok(SampledSignal::from_parts(
        out,
        aggregate.sample_rate(),
        aggregate.center_offset() + spec.channel_center(k),
    ))
}

/// Filter matched to the sinc pulse (brick wall of width `R_s`) followed by
/// sampling at the symbol instants.
pub fn matched_filter_and_sample(signal: &SampledSignal, symbol_rate: f64) -> Result<Vec<Complex64>> {
    let os = signal.sample_rate() / symbol_rate;
    let os_int = os.round() as usize;
    if os_int == 0 || (os - os_int as f64).abs() > 1e-9 * os || !signal.len().is_multiple_of(os_int) {
        return Err(Error::GridMismatch(format!(
            "{} samples at {} samples/symbol",
            signal.len(),
            os
        )));
    }
    let n = signal.len();
    let n_sym = n / os_int;
    let mut bins = signal.samples().to_vec();
    fft_in_place(&mut bins);
    let scale = 1.0 / (os_int as f64).sqrt();
    let mut sym = vec![Complex64::default(); n_sym];
    for s in symbol_band(n_sym) {
        sym[bin_index(s, n_sym)] = bins[bin_index(s, n)] * scale;
    }
    ifft_in_place(&mut sym);
    Ok(sym)
}

/// Signed bins of a band `width` bins wide, centered on zero: `[-floor(w/2), ceil(w/2))`.
fn symbol_band(width: usize) -> std::ops::Range<i64> {
    let w = width as i64;
    -(w / 2)..(w - w / 2)
}
