//! Frequency-resolved logarithmic-perturbation model of XPM.
//!
//! The interfering field `w` perturbs the channel of interest through a
//! frequency-dependent phase
//!
//! ```text
//! theta(f, t) = 2 ∬ K(f, mu, nu) W(mu) W*(nu) exp(j 2 pi (mu - nu) t) dmu dnu
//! ```
//!
//! with a kernel `K` that depends on the dispersion map. For a Gaussian
//! interferer with rectangular PSD the autocorrelation of `theta` reduces to
//! a double integral of `K(f1, .) K*(f2, .)` over each interfering band,
//! which is evaluated here by a midpoint rule.
//!
//! Kernel conventions (per span of length `L`, `N` spans):
//!
//! ```text
//! g(f, mu, nu) = 4 pi^2 beta2 (nu - f)(nu - mu)
//! C            = gamma (exp((-alpha + j g) L) - 1) / (-alpha + j g)
//! DM   K = C N
//! NDM  K = C sum_n exp(j n L g)
//! CDM  K = C sum_n exp(j n L (g - g_folded))
//! ```
//!
//! `g_folded` evaluates `g` at each frequency's signed offset from its
//! nearest channel center. The sums over `n` are geometric and are always
//! evaluated in closed (Dirichlet) form.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link::{LinkSpec, Scheme, SPEED_OF_LIGHT};
use crate::signal::Spectrum;
use crate::transceiver::WdmSpec;

/// Default number of quadrature points per axis and per band.
pub const DEFAULT_QUADRATURE_POINTS: usize = 256;
/// Largest resolution the adaptive doubling will try.
pub const MAX_QUADRATURE_POINTS: usize = 4096;
/// Relative change allowed between resolutions `M` and `2M`.
pub const QUADRATURE_TOLERANCE: f64 = 0.01;

/// Distance from `f` to the nearest multiple of `b`, in `[0, b/2]`.
pub fn folded_freq(f: f64, b: f64) -> f64 {
    folded_offset(f, b).abs()
}

/// Signed offset of `f` from its nearest multiple of `b`, in `[-b/2, b/2]`.
///
/// A channel edge belongs to the channel nearer the origin, so `f = ±b/2`
/// stays inside the middle channel.
pub fn folded_offset(f: f64, b: f64) -> f64 {
    let q = f / b;
    f - b * q.signum() * (q.abs() - 0.5).ceil()
}

/// `4 pi^2 beta2 (nu - f)(nu - mu)` in rad/m.
pub fn g_coeff(f: f64, mu: f64, nu: f64, beta2: f64) -> f64 {
    4.0 * PI * PI * beta2 * (nu - f) * (nu - mu)
}

/// `sum_{n=0}^{count-1} exp(j n phi)`.
pub fn geometric_phase_sum(phi: f64, count: usize) -> Complex64 {
    let half = 0.5 * phi;
    let s = half.sin();
    let n = count as f64;
    if s.abs() < 1e-12 {
        return Complex64::new(n, 0.0);
    }
    Complex64::from_polar((n * half).sin() / s, (n - 1.0) * half)
}

/// `(exp(x L) - 1) / x`, continuous through `x = 0`.
fn span_integral(x: Complex64, length: f64) -> Complex64 {
    let xl = x * length;
    if xl.norm() < 1e-6 {
        length * (1.0 + xl / 2.0 + xl * xl / 6.0)
    } else {
        (xl.exp() - 1.0) / x
    }
}

/// Precomputed link constants for fast kernel evaluation.
#[derive(Debug, Clone, Copy)]
pub struct KernelParams {
    scheme: Scheme,
    beta2: f64,
    alpha: f64,
    gamma: f64,
    length: f64,
    n_spans: usize,
    b: f64,
}

impl KernelParams {
    pub fn new(scheme: Scheme, link: &LinkSpec) -> Self {
        Self {
            scheme,
            beta2: link.span.beta2(),
            alpha: link.span.alpha(),
            gamma: link.span.gamma(),
            length: link.span.length_m,
            n_spans: link.n_spans,
            b: link.channel_bandwidth_hz,
        }
    }

    pub fn eval(&self, f: f64, mu: f64, nu: f64) -> Complex64 {
        let g = g_coeff(f, mu, nu, self.beta2);
        let c = self.gamma * span_integral(Complex64::new(-self.alpha, g), self.length);
        match self.scheme {
            Scheme::Dm => c * self.n_spans as f64,
            Scheme::Ndm => c * geometric_phase_sum(g * self.length, self.n_spans),
            Scheme::Cdm => {
                let g_fold = g_coeff(
                    folded_offset(f, self.b),
                    folded_offset(mu, self.b),
                    folded_offset(nu, self.b),
                    self.beta2,
                );
                c * geometric_phase_sum((g - g_fold) * self.length, self.n_spans)
            }
        }
    }
}

/// XPM kernel `K(f, mu, nu)` in rad/W for the given dispersion map.
pub fn xpm_kernel(scheme: Scheme, f: f64, mu: f64, nu: f64, link: &LinkSpec) -> Complex64 {
    KernelParams::new(scheme, link).eval(f, mu, nu)
}

/// Gaussian interferer with rectangular PSD.
///
/// Each entry of `center_offsets` is one pair of bands at `±f_w`; each pair
/// carries `total_power` spread as `total_power / (2 B_w)` over both bands.
/// For a WDM comb this means `total_power = 2 P` (one channel of power `P`
/// on either side) and one offset per neighbour distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfererSpec {
    pub total_power: f64,
    pub bandwidth: f64,
    pub center_offsets: Vec<f64>,
}

impl InterfererSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0) || !(self.total_power >= 0.0) {
            return Err(Error::InvalidInterferer("bandwidth must be > 0 and power >= 0".into()));
        }
        if self.center_offsets.is_empty() {
            return Err(Error::InvalidInterferer("no interfering bands".into()));
        }
        for &f in &self.center_offsets {
            if !(f - self.bandwidth / 2.0 > 0.0) {
                return Err(Error::InvalidInterferer(format!("band at {f} Hz touches baseband")));
            }
        }
        Ok(())
    }

    /// Neighbours of the middle channel of a WDM comb.
    pub fn wdm_neighbours(spec: &WdmSpec) -> Self {
        Self {
            total_power: 2.0 * spec.channel_power_w,
            bandwidth: spec.symbol_rate_baud,
            center_offsets: (1..=spec.max_index()).map(|k| spec.channel_center(k)).collect(),
        }
    }

    /// Centers of every band (both signs).
    pub fn band_centers(&self) -> Vec<f64> {
        self.center_offsets.iter().flat_map(|&f| [f, -f]).collect()
    }

    /// PSD level inside each band, W/Hz.
    pub fn psd(&self) -> f64 {
        self.total_power / (2.0 * self.bandwidth)
    }

    /// Midpoint-rule nodes of one band.
    pub fn band_nodes(&self, center: f64, m: usize) -> Vec<f64> {
        let d = self.bandwidth / m as f64;
        (0..m)
            .map(|i| center - self.bandwidth / 2.0 + (i as f64 + 0.5) * d)
            .collect()
    }
}

/// Autocorrelation as a function of lag, for fixed `(f1, f2)`.
///
/// Within a band `mu - nu` only takes values `d * delta`, so the double sum
/// collapses to `sum_d A_d exp(-j 2 pi d delta tau)`.
#[derive(Debug, Clone)]
struct LagProfile {
    delta: f64,
    m: usize,
    sums: Vec<Complex64>,
    /// `R(f2, f2, 0)` from the same nodes.
    var2: f64,
}

impl LagProfile {
    fn eval(&self, tau: f64) -> Complex64 {
        let m = self.m as i64;
        let w = -2.0 * PI * self.delta * tau;
        self.sums
            .iter()
            .enumerate()
            .map(|(idx, a)| a * Complex64::from_polar(1.0, w * (idx as i64 - (m - 1)) as f64))
            .sum()
    }
}

/// Lag profiles for `f1` against each of `f2s`, midpoint rule with `m` nodes per band.
fn lag_profiles(kp: &KernelParams, interferer: &InterfererSpec, f1: f64, f2s: &[f64], m: usize) -> (Vec<LagProfile>, f64) {
    let delta = interferer.bandwidth / m as f64;
    let scale = (interferer.total_power / interferer.bandwidth).powi(2) * delta * delta;
    let mut sums = vec![vec![Complex64::default(); 2 * m - 1]; f2s.len()];
    let mut var1 = 0.0;
    let mut var2 = vec![0.0; f2s.len()];
    let mut row1 = vec![Complex64::default(); m];
    let mut row2 = vec![Complex64::default(); m];
    for center in interferer.band_centers() {
        let nodes = interferer.band_nodes(center, m);
        for (i, &mu) in nodes.iter().enumerate() {
            for (k, &nu) in nodes.iter().enumerate() {
                row1[k] = kp.eval(f1, mu, nu);
            }
            var1 += row1.iter().map(|v| v.norm_sqr()).sum::<f64>();
            for (j, &f2) in f2s.iter().enumerate() {
                if f2 == f1 {
                    row2.copy_from_slice(&row1);
                } else {
                    for (k, &nu) in nodes.iter().enumerate() {
                        row2[k] = kp.eval(f2, mu, nu);
                    }
                }
                var2[j] += row2.iter().map(|v| v.norm_sqr()).sum::<f64>();
                let acc = &mut sums[j];
                // lag index (i - k) + (m - 1)
                for k in 0..m {
                    acc[i + m - 1 - k] += row1[k] * row2[k].conj();
                }
            }
        }
    }
    let profiles = sums
        .into_iter()
        .zip(var2)
        .map(|(s, v2)| LagProfile {
            delta,
            m,
            sums: s.into_iter().map(|a| a * scale).collect(),
            var2: v2 * scale,
        })
        .collect();
    (profiles, var1 * scale)
}

/// Midpoint-rule evaluation of the autocorrelation at a fixed resolution.
pub fn xpm_autocorr_fixed(
    f1: f64,
    f2: f64,
    tau: f64,
    link: &LinkSpec,
    interferer: &InterfererSpec,
    m: usize,
) -> Result<Complex64> {
    interferer.validate()?;
    link.validate()?;
    let kp = KernelParams::new(link.scheme, link);
    let (profiles, _) = lag_profiles(&kp, interferer, f1, &[f2], m);
    Ok(profiles[0].eval(tau))
}

/// Converged autocorrelation value together with the resolution that achieved it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Autocorr {
    pub value: Complex64,
    pub m: usize,
    pub rel_change: f64,
}

/// `R(f1, f2, tau)` with adaptive doubling of the quadrature resolution.
///
/// The change between `M` and `2M` is measured against
/// `sqrt(R(f1,f1,0) R(f2,f2,0))`, the Cauchy–Schwarz bound on `|R|`, so
/// points where the correlation has decayed to zero still converge.
pub fn xpm_autocorr(
    f1: f64,
    f2: f64,
    tau: f64,
    link: &LinkSpec,
    interferer: &InterfererSpec,
    m: usize,
) -> Result<Autocorr> {
    interferer.validate()?;
    link.validate()?;
    if m < 16 {
        return Err(Error::InvalidInterferer(format!("quadrature M = {m} < 16")));
    }
    if interferer.total_power == 0.0 {
        return Ok(Autocorr {
            value: Complex64::default(),
            m,
            rel_change: 0.0,
        });
    }
    let kp = KernelParams::new(link.scheme, link);
    let (p, _) = lag_profiles(&kp, interferer, f1, &[f2], m);
    let mut prev = p[0].eval(tau);
    let mut m = m;
    loop {
        let m2 = 2 * m;
        let (p, var1) = lag_profiles(&kp, interferer, f1, &[f2], m2);
        let cur = p[0].eval(tau);
        let bound = (var1 * p[0].var2).sqrt().max(cur.norm());
        let rel = if bound > 0.0 { (cur - prev).norm() / bound } else { 0.0 };
        if rel < QUADRATURE_TOLERANCE {
            return Ok(Autocorr {
                value: cur,
                m: m2,
                rel_change: rel,
            });
        }
        if m2 >= MAX_QUADRATURE_POINTS {
            return Err(Error::QuadratureNotConverged { m: m2, rel_change: rel });
        }
        prev = cur;
        m = m2;
    }
}

/// `R(0, delta_f, tau)` sampled on a rectangular grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationGrid {
    pub scheme: Scheme,
    pub delta_f: Vec<f64>,
    pub tau: Vec<f64>,
    /// Row-major: `values[i_df * tau.len() + i_tau]`.
    pub values: Vec<Complex64>,
    /// Largest `|value|`, used for normalized output.
    pub peak: f64,
    /// Quadrature points per axis and band that met the tolerance.
    pub m: usize,
    pub rel_change: f64,
}

impl CorrelationGrid {
    pub fn value(&self, i_df: usize, i_tau: usize) -> Complex64 {
        self.values[i_df * self.tau.len() + i_tau]
    }

    fn nearest(axis: &[f64], x: f64) -> usize {
        axis.iter()
            .enumerate()
            .min_by(|a, b| (a.1 - x).abs().total_cmp(&(b.1 - x).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    /// `R(0, delta_f, 0)` along the frequency axis (uses the lag closest to 0).
    pub fn tau0_section(&self) -> Vec<Complex64> {
        let j = Self::nearest(&self.tau, 0.0);
        (0..self.delta_f.len()).map(|i| self.value(i, j)).collect()
    }

    /// `R(0, 0, tau)` along the lag axis (uses the frequency closest to 0).
    pub fn df0_section(&self) -> Vec<Complex64> {
        let i = Self::nearest(&self.delta_f, 0.0);
        (0..self.tau.len()).map(|j| self.value(i, j)).collect()
    }

    /// Magnitudes divided by `norm` (pass `self.peak` for a per-grid normalization).
    pub fn normalized(section: &[Complex64], norm: f64) -> Vec<f64> {
        section.iter().map(|v| v.norm() / norm).collect()
    }
}

/// Lag axis in seconds from a list of lags in symbol durations.
pub fn tau_axis_symbols(symbols: &[f64], symbol_rate: f64) -> Vec<f64> {
    symbols.iter().map(|s| s / symbol_rate).collect()
}

/// Evaluates `R(0, delta_f, tau)` on a grid, doubling `m` until every point
/// changes by less than 1% of its Cauchy–Schwarz bound.
pub fn correlation_grid(
    link: &LinkSpec,
    interferer: &InterfererSpec,
    delta_f: &[f64],
    tau: &[f64],
    m: usize,
) -> Result<CorrelationGrid> {
    link.validate()?;
    interferer.validate()?;
    if delta_f.is_empty() || tau.is_empty() {
        return Err(Error::InvalidInterferer("empty grid axis".into()));
    }
    if m < 16 {
        return Err(Error::InvalidInterferer(format!("quadrature M = {m} < 16")));
    }
    let kp = KernelParams::new(link.scheme, link);
    let eval = |m: usize| -> (Vec<Complex64>, Vec<f64>) {
        // split the frequency axis so rows can be evaluated in parallel
        let chunk = delta_f.len().div_ceil(rayon::current_num_threads()).max(1);
        let parts: Vec<(Vec<LagProfile>, f64)> = delta_f
            .par_chunks(chunk)
            .map(|dfs| lag_profiles(&kp, interferer, 0.0, dfs, m))
            .collect();
        let mut values = Vec::with_capacity(delta_f.len() * tau.len());
        let mut bounds = Vec::with_capacity(values.capacity());
        for (profiles, var1) in parts {
            for p in profiles {
                let b = (var1 * p.var2).sqrt();
                for &t in tau {
                    values.push(p.eval(t));
                    bounds.push(b);
                }
            }
        }
        (values, bounds)
    };
    let (mut prev, _) = eval(m);
    let mut m = m;
    loop {
        let m2 = 2 * m;
        let (cur, bounds) = eval(m2);
        let rel = cur
            .iter()
            .zip(&prev)
            .zip(&bounds)
            .map(|((c, p), b)| {
                let b = b.max(c.norm());
                if b > 0.0 {
                    (c - p).norm() / b
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max);
        if rel < QUADRATURE_TOLERANCE || interferer.total_power == 0.0 {
            let peak = cur.iter().map(|v| v.norm()).fold(0.0, f64::max);
            return Ok(CorrelationGrid {
                scheme: link.scheme,
                delta_f: delta_f.to_vec(),
                tau: tau.to_vec(),
                values: cur,
                peak,
                m: m2,
                rel_change: rel,
            });
        }
        if m2 >= MAX_QUADRATURE_POINTS {
            return Err(Error::QuadratureNotConverged { m: m2, rel_change: rel });
        }
        prev = cur;
        m = m2;
    }
}

/// Per-span walk-off `D * delta_lambda * L` in seconds.
pub fn walkoff_period(d_ps_nm_km: f64, delta_lambda_nm: f64, span_length_m: f64) -> f64 {
    // ps/nm/km * nm * km
    d_ps_nm_km * 1e-12 * delta_lambda_nm * (span_length_m / 1e3)
}

/// Wavelength separation (nm) of a frequency spacing at `lambda_nm`.
pub fn spacing_to_delta_lambda(spacing_hz: f64, lambda_nm: f64) -> f64 {
    let lambda = lambda_nm * 1e-9;
    lambda * lambda * spacing_hz / SPEED_OF_LIGHT * 1e9
}

/// Kernels of one link between a set of interferer lines, for each COI frequency.
///
/// Reusable across interferer realizations: only the line amplitudes change.
#[derive(Debug, Clone)]
pub struct ThetaKernel {
    lines: Vec<f64>,
    freqs: Vec<f64>,
    kernels: Vec<Vec<Complex64>>,
}

impl ThetaKernel {
    pub fn new(link: &LinkSpec, lines: &[f64], freqs: &[f64]) -> Self {
        let kp = KernelParams::new(link.scheme, link);
        let kernels = freqs
            .iter()
            .map(|&f| {
                lines
                    .iter()
                    .flat_map(|&mu| lines.iter().map(move |&nu| kp.eval(f, mu, nu)))
                    .collect()
            })
            .collect();
        Self {
            lines: lines.to_vec(),
            freqs: freqs.to_vec(),
            kernels,
        }
    }

    pub fn lines(&self) -> &[f64] {
        &self.lines
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    /// `theta(f_i, t)` for line amplitudes `coeffs` (complex amplitude of each spectral line).
    pub fn field_at(&self, coeffs: &[Complex64], i_f: usize, t: f64) -> Complex64 {
        let nl = self.lines.len();
        let a: Vec<Complex64> = coeffs
            .iter()
            .zip(&self.lines)
            .map(|(c, &mu)| c * Complex64::from_polar(1.0, 2.0 * PI * mu * t))
            .collect();
        let k = &self.kernels[i_f];
        let mut acc = Complex64::default();
        for (r, ar) in a.iter().enumerate() {
            let row = &k[r * nl..(r + 1) * nl];
            let inner: Complex64 = row.iter().zip(&a).map(|(kv, am)| kv * am.conj()).sum();
            acc += ar * inner;
        }
        2.0 * acc
    }
}

/// `theta(f, t)` sampled on a grid; `coarse` is set when fewer than
/// [`ThetaField::MIN_LINES`] interferer lines carried energy.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaField {
    /// `values[i_f][i_t]`.
    pub values: Vec<Vec<Complex64>>,
    pub coarse: bool,
}

impl ThetaField {
    pub const MIN_LINES: usize = 8;
}

/// XPM phase field synthesized from a periodic interfering waveform.
///
/// A frame of `N` samples is a sum of spectral lines; the unitary bin `W_k`
/// corresponds to a line of amplitude `W_k / sqrt(N)` at the bin frequency
/// (plus the spectrum's `center_offset`).
pub fn theta_field(spectrum: &Spectrum, link: &LinkSpec, freqs: &[f64], times: &[f64]) -> Result<ThetaField> {
    link.validate()?;
    let norm = 1.0 / (spectrum.len() as f64).sqrt();
    let (lines, coeffs): (Vec<f64>, Vec<Complex64>) = spectrum
        .frequencies()
        .into_iter()
        .zip(spectrum.bins())
        .filter(|(_, b)| b.norm_sqr() > 0.0)
        .map(|(f, b)| (f + spectrum.center_offset(), b * norm))
        .unzip();
    let coarse = lines.len() < ThetaField::MIN_LINES;
    let kernel = ThetaKernel::new(link, &lines, freqs);
    let values = (0..freqs.len())
        .map(|i| times.iter().map(|&t| kernel.field_at(&coeffs, i, t)).collect())
        .collect();
    Ok(ThetaField { values, coarse })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::{AmplifierSpec, AsePlacement, FiberSpan};
    use crate::rng::stream;
    use crate::transceiver::generate_gaussian_symbols;

    pub(crate) fn table_link(scheme: Scheme, n_spans: usize) -> LinkSpec {
        LinkSpec {
            span: FiberSpan::standard_smf(),
            n_spans,
            scheme,
            channel_bandwidth_hz: 50e9,
            amplifier: AmplifierSpec::default(),
            ase_placement: AsePlacement::Inline,
        }
    }

    fn three_channel(p: f64) -> InterfererSpec {
        InterfererSpec {
            total_power: 2.0 * p,
            bandwidth: 50e9,
            center_offsets: vec![50e9],
        }
    }

    #[test]
    fn folding() {
        assert_eq!(folded_freq(0.0, 50e9), 0.0);
        assert!((folded_freq(30e9, 50e9) - 20e9).abs() < 1e-3);
        assert!((folded_freq(75e9, 50e9) - 25e9).abs() < 1e-3);
        assert!((folded_offset(30e9, 50e9) + 20e9).abs() < 1e-3);
        assert_eq!(folded_offset(25e9, 50e9), 25e9);
        assert_eq!(folded_offset(-25e9, 50e9), -25e9);
        assert_eq!(folded_offset(75e9, 50e9), 25e9);
        assert_eq!(folded_offset(-75e9, 50e9), -25e9);
        for f in [-130e9, -20e9, 3e9, 49e9, 101e9] {
            let v = folded_freq(f, 50e9);
            assert!((0.0..=25e9).contains(&v));
        }
    }

    #[test]
    fn g_values() {
        let b2 = -21.7e-27;
        assert_eq!(g_coeff(1e9, 2e9, 1e9, b2), 0.0);
        assert_eq!(g_coeff(1e9, 2e9, 2e9, b2), 0.0);
        let g = g_coeff(0.0, -50e9, 50e9, b2);
        // 4 pi^2 (-21.7e-27)(50e9)(100e9)
        assert!((g - (-4.283e-3)).abs() < 1e-6, "{g}");
    }

    #[test]
    fn geometric_sum_matches_explicit() {
        for phi in [0.0, 1e-14, 0.3, -2.0, 2.0 * PI, 7.0] {
            for n in [1usize, 2, 7, 20] {
                let explicit: Complex64 = (0..n).map(|k| Complex64::from_polar(1.0, k as f64 * phi)).sum();
                assert!((geometric_phase_sum(phi, n) - explicit).norm() < 1e-9, "{phi} {n}");
            }
        }
    }

    #[test]
    fn kernel_at_zero_g_is_effective_length() {
        let link = table_link(Scheme::Dm, 20);
        let k = xpm_kernel(Scheme::Dm, 10e9, 40e9, 10e9, &link);
        // gamma * L_eff = 1.27e-3 * (1 - e^{-4.605}) / 4.605e-5 rad/W, i.e. 27.3e-3 rad/mW
        let gl = link.span.gamma() * link.span.effective_length();
        assert!((gl - 27.3).abs() < 0.1, "{gl}");
        assert!((k.re - 20.0 * gl).abs() < 1e-9 && k.im.abs() < 1e-9);
        assert!((k.re - 546.0).abs() < 2.0);
    }

    #[test]
    fn lossless_zero_g_limit() {
        let mut link = table_link(Scheme::Ndm, 3);
        link.span.attenuation_db_per_km = 0.0;
        let k = xpm_kernel(Scheme::Ndm, 0.0, 5e9, 0.0, &link);
        assert!((k - 3.0 * link.span.gamma() * link.span.length_m).norm() < 1e-12);
    }

    #[test]
    fn kernel_scheme_relations() {
        let link = table_link(Scheme::Cdm, 20);
        let mut wide = link;
        wide.channel_bandwidth_hz = 1e15;
        let mut rng = stream(5);
        use rand::Rng;
        for _ in 0..50 {
            let f = rng.random_range(-25e9..25e9);
            let mu = rng.random_range(25e9..75e9);
            let nu = rng.random_range(25e9..75e9);
            let dm = xpm_kernel(Scheme::Dm, f, mu, nu, &link);
            let cdm_wide = xpm_kernel(Scheme::Cdm, f, mu, nu, &wide);
            assert!((dm - cdm_wide).norm() < 1e-12 * dm.norm().max(1e-30));
            let ndm = xpm_kernel(Scheme::Ndm, f, mu, nu, &link);
            assert!(ndm.norm() <= dm.norm() * (1.0 + 1e-12));
            // in-band arguments: folding is the identity
            let (fi, mi, ni) = (f * 0.4, f * 0.2 + 1e9, -f * 0.3);
            let c = xpm_kernel(Scheme::Cdm, fi, mi, ni, &link);
            let d = xpm_kernel(Scheme::Dm, fi, mi, ni, &link);
            assert!((c - d).norm() < 1e-12 * d.norm());
        }
        // equality of |NDM| and |DM| when g L is a multiple of 2 pi
        let g = xpm_kernel(Scheme::Ndm, 0.0, 40e9, 40e9, &link);
        assert!((g.norm() - xpm_kernel(Scheme::Dm, 0.0, 40e9, 40e9, &link).norm()).abs() < 1e-12);
    }

    #[test]
    fn walkoff_values() {
        let dl = spacing_to_delta_lambda(50e9, 1550.0);
        assert!((dl - 0.4007).abs() < 1e-3, "{dl}");
        let tp = walkoff_period(17.0, dl, 100e3);
        assert!((tp - 681e-12).abs() < 1e-12, "{tp}");
        assert_eq!(walkoff_period(17.0, 0.0, 100e3), 0.0);
        let tp2 = walkoff_period(17.0, spacing_to_delta_lambda(100e9, 1550.0), 100e3);
        assert!((tp2 - 2.0 * tp).abs() < 1e-18);
        assert!((tp2 - 1362e-12).abs() < 2e-12);
    }

    #[test]
    fn autocorr_symmetry_and_zero_power() {
        let link = table_link(Scheme::Cdm, 4);
        let intf = three_channel(1e-3);
        let mut rng = stream(8);
        use rand::Rng;
        for _ in 0..5 {
            let f1 = rng.random_range(-20e9..20e9);
            let f2 = rng.random_range(-20e9..20e9);
            let tau = rng.random_range(-1e-9..1e-9);
            let a = xpm_autocorr_fixed(f1, f2, tau, &link, &intf, 32).unwrap();
            let b = xpm_autocorr_fixed(f2, f1, -tau, &link, &intf, 32).unwrap();
            assert!((a - b.conj()).norm() < 1e-10 * a.norm());
        }
        let r0 = xpm_autocorr_fixed(0.0, 0.0, 0.0, &link, &intf, 32).unwrap();
        assert!(r0.re > 0.0 && r0.im.abs() < 1e-12 * r0.re);
        let zero = InterfererSpec { total_power: 0.0, ..intf };
        assert_eq!(xpm_autocorr(0.0, 0.0, 0.0, &link, &zero, 16).unwrap().value, Complex64::default());
        assert!(xpm_autocorr(0.0, 0.0, 0.0, &link, &three_channel(1e-3), 8).is_err());
    }

    #[test]
    fn interferer_validation() {
        let mut i = three_channel(1e-3);
        assert!(i.validate().is_ok());
        i.center_offsets = vec![20e9];
        assert!(i.validate().is_err());
        i.center_offsets = vec![];
        assert!(i.validate().is_err());
    }

    #[test]
    fn theta_of_zero_and_single_tone() {
        let link = table_link(Scheme::Ndm, 5);
        let n = 64;
        let zero = Spectrum::new(vec![Complex64::default(); n], 1e9, 0.0).unwrap();
        let th = theta_field(&zero, &link, &[0.0, 1e9], &[0.0, 1e-10]).unwrap();
        assert!(th.values.iter().flatten().all(|v| v.norm() == 0.0));
        let mut bins = vec![Complex64::default(); n];
        bins[20] = Complex64::new(0.3, 0.1);
        let tone = Spectrum::new(bins, 1e9, 30e9).unwrap();
        let th = theta_field(&tone, &link, &[0.0], &[0.0, 1e-10, 3.3e-9]).unwrap();
        assert!(th.coarse);
        let v0 = th.values[0][0];
        assert!(v0.norm() > 0.0);
        assert!(th.values[0].iter().all(|v| (v - v0).norm() < 1e-12 * v0.norm()));
    }

    /// Sample covariance of theta over Gaussian interferer realizations
    /// versus the quadrature of the autocorrelation on the same lines.
    #[test]
    fn monte_carlo_theta_matches_autocorr() {
        let link = table_link(Scheme::Cdm, 4);
        let intf = three_channel(1e-3);
        let m = 24;
        let lines: Vec<f64> = intf.band_centers().iter().flat_map(|&c| intf.band_nodes(c, m)).collect();
        let kernel = ThetaKernel::new(&link, &lines, &[0.0, 10e9]);
        let line_power = intf.psd() * intf.bandwidth / m as f64;
        let mut rng = stream(123);
        let realizations = 3000;
        let tau = 300e-12;
        let mut samples = Vec::with_capacity(realizations);
        for _ in 0..realizations {
            let c = generate_gaussian_symbols(lines.len(), line_power, &mut rng);
            samples.push((kernel.field_at(&c, 0, 0.0), kernel.field_at(&c, 1, tau)));
        }
        let n = realizations as f64;
        let mean0: Complex64 = samples.iter().map(|s| s.0).sum::<Complex64>() / n;
        let mean1: Complex64 = samples.iter().map(|s| s.1).sum::<Complex64>() / n;
        let var = samples.iter().map(|s| (s.0 - mean0).norm_sqr()).sum::<f64>() / (n - 1.0);
        let cov: Complex64 = samples.iter().map(|s| (s.0 - mean0) * (s.1 - mean1).conj()).sum::<Complex64>() / (n - 1.0);
        let r0 = xpm_autocorr_fixed(0.0, 0.0, 0.0, &link, &intf, m).unwrap();
        let r1 = xpm_autocorr_fixed(0.0, 10e9, tau, &link, &intf, m).unwrap();
        assert!((var / r0.re - 1.0).abs() < 0.1, "var ratio {}", var / r0.re);
        assert!((cov - r1).norm() / r0.re < 0.1, "cov {cov} vs {r1}");
    }
}
