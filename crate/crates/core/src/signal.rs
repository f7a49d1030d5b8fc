//! Sampled complex envelopes and the spectral primitives built on them.
//!
//! Every signal is treated as one period of a periodic waveform, so all
//! filtering is circular. Transforms use the unitary DFT normalization
//! (`1/sqrt(N)` in both directions), which makes `sum |x|^2` identical in
//! time and frequency.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unitary forward DFT in place (`exp(-j 2 pi k n / N)` kernel).
pub fn fft_in_place(buf: &mut [Complex64]) {
    let n = buf.len();
    if n == 0 {
        return;
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n));
    fft.process(buf);
    let scale = 1.0 / (n as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= scale);
}

/// Unitary inverse DFT in place.
pub fn ifft_in_place(buf: &mut [Complex64]) {
    let n = buf.len();
    if n == 0 {
        return;
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n));
    fft.process(buf);
    let scale = 1.0 / (n as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= scale);
}

/// Signed index of FFT-ordered bin `k` in a length-`n` transform.
///
/// Bins `0..ceil(n/2)` are non-negative, the rest wrap to negative values,
/// so the signed range is `[-floor(n/2), ceil(n/2) - 1]`.
pub fn signed_bin(k: usize, n: usize) -> i64 {
    if k < n.div_ceil(2) {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// FFT-order position of signed bin `s` in a length-`n` transform.
pub fn bin_index(s: i64, n: usize) -> usize {
    s.rem_euclid(n as i64) as usize
}

/// Frequencies (Hz, relative to the band center) of each FFT-ordered bin.
pub fn bin_frequencies(n: usize, sample_rate: f64) -> Vec<f64> {
    let df = sample_rate / n as f64;
    (0..n).map(|k| signed_bin(k, n) as f64 * df).collect()
}

/// Uniformly sampled complex baseband envelope in sqrt(W).
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    samples: Vec<Complex64>,
    sample_rate: f64,
    center_offset: f64,
}

impl SampledSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64, center_offset: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidSignal("no samples".into()));
        }
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::InvalidSignal(format!("sample rate {sample_rate}")));
        }
        if !center_offset.is_finite() {
            return Err(Error::InvalidSignal("center offset not finite".into()));
        }
        if let Some(i) = samples.iter().position(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::InvalidSignal(format!("sample {i} not finite")));
        }
        Ok(Self {
            samples,
            sample_rate,
            center_offset,
        })
    }

    /// Builds a signal without the finiteness scan. Callers guarantee validity.
    pub(crate) fn from_parts(samples: Vec<Complex64>, sample_rate: f64, center_offset: f64) -> Self {
        debug_assert!(!samples.is_empty() && sample_rate > 0.0);
        Self {
            samples,
            sample_rate,
            center_offset,
        }
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    /// Offset of this band's center from the WDM comb center, in Hz.
    pub fn center_offset(&self) -> f64 {
        self.center_offset
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Frame duration in seconds (one period of the circular model).
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    /// Mean of `|x|^2` over the frame, in W.
    pub fn mean_power(&self) -> f64 {
        self.energy() / self.samples.len() as f64
    }

    /// Bin frequencies in Hz relative to the comb center (includes `center_offset`).
    pub fn absolute_frequencies(&self) -> Vec<f64> {
        bin_frequencies(self.len(), self.sample_rate)
            .into_iter()
            .map(|f| f + self.center_offset)
            .collect()
    }

    pub(crate) fn with_samples(&self, samples: Vec<Complex64>) -> Self {
        Self::from_parts(samples, self.sample_rate, self.center_offset)
    }
}

/// Unitary DFT of a [`SampledSignal`], bins in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    bins: Vec<Complex64>,
    bin_spacing: f64,
    center_offset: f64,
}

impl Spectrum {
    pub fn new(bins: Vec<Complex64>, bin_spacing: f64, center_offset: f64) -> Result<Self> {
        if bins.is_empty() || !(bin_spacing > 0.0) {
            return Err(Error::InvalidSignal("empty spectrum or bad spacing".into()));
        }
        Ok(Self {
            bins,
            bin_spacing,
            center_offset,
        })
    }

    pub fn bins(&self) -> &[Complex64] {
        &self.bins
    }

    pub fn bins_mut(&mut self) -> &mut [Complex64] {
        &mut self.bins
    }

    pub fn bin_spacing(&self) -> f64 {
        self.bin_spacing
    }

    pub fn center_offset(&self) -> f64 {
        self.center_offset
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn sample_rate(&self) -> f64 {
        self.bin_spacing * self.bins.len() as f64
    }

    /// Bin frequencies relative to the band center.
    pub fn frequencies(&self) -> Vec<f64> {
        bin_frequencies(self.len(), self.sample_rate())
    }

    pub fn energy(&self) -> f64 {
        self.bins.iter().map(|b| b.norm_sqr()).sum()
    }
}

pub fn to_frequency(signal: &SampledSignal) -> Spectrum {
    let mut bins = signal.samples.clone();
    fft_in_place(&mut bins);
    Spectrum {
        bins,
        bin_spacing: signal.sample_rate / signal.len() as f64,
        center_offset: signal.center_offset,
    }
}

pub fn to_time(spectrum: &Spectrum) -> SampledSignal {
    let mut samples = spectrum.bins.clone();
    ifft_in_place(&mut samples);
    SampledSignal::from_parts(samples, spectrum.sample_rate(), spectrum.center_offset)
}

/// Multiplies the spectrum of `signal` by `transfer(f)`.
///
/// `f` is the absolute frequency of each bin (band-relative frequency plus
/// the signal's `center_offset`).
pub fn apply_transfer<F>(signal: &SampledSignal, transfer: F) -> Result<SampledSignal>
where
    F: Fn(f64) -> Complex64,
{
    let mut spec = to_frequency(signal);
    let freqs = signal.absolute_frequencies();
    for (bin, &f) in spec.bins.iter_mut().zip(&freqs) {
        let h = transfer(f);
        if !(h.re.is_finite() && h.im.is_finite()) {
            return Err(Error::NonFiniteTransfer { freq_hz: f });
        }
        *bin *= h;
    }
    Ok(to_time(&spec))
}
