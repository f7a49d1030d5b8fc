//! Joint estimate of the auxiliary gain `h0` and noise level `sigma_n`.
//!
//! The output power ties the two together
//! (`E|y|^2 = h0^2 E|x|^2 + sigma_n^2`), so `h0` is eliminated and the
//! likelihood of the magnitudes `|y|` given `|x|` is maximized over
//! `sigma_n` alone. The magnitudes follow a noncentral chi law whatever the
//! phase process, so the estimate is unaffected by phase noise.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::bessel::ln_i0_scaled;
use super::check_pairs;
use crate::error::{Error, Result};

const MIN_PAIRS: usize = 100;
const GRID_POINTS: usize = 96;
const MAX_REFINEMENTS: usize = 200;
const TOLERANCE: f64 = 1e-10;
/// Lower search limit on `sigma_n` relative to the RMS output.
const SIGMA_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainNoiseEstimate {
    pub h0: f64,
    pub sigma_n: f64,
    /// `sigma_n` sits on the lower search limit: the data are
    /// indistinguishable from a noiseless channel at this precision.
    pub degenerate: bool,
    pub evaluations: usize,
}

struct Profile {
    ax: Vec<f64>,
    ay: Vec<f64>,
    px: f64,
    py: f64,
}

impl Profile {
    fn gain(&self, u: f64) -> f64 {
        ((self.py - (2.0 * u).exp()) / self.px).max(0.0).sqrt()
    }

    /// Log-likelihood of `|y|` at `sigma_n = exp(u)`, up to a constant.
    fn log_likelihood(&self, u: f64) -> f64 {
        let h = self.gain(u);
        let s2 = (2.0 * u).exp();
        let mut ll = 0.0;
        for (&ax, &ay) in self.ax.iter().zip(&self.ay) {
            let a = h * ax;
            // -(|y|^2 + a^2)/s2 + ln I0(2 a |y| / s2), rearranged to avoid cancellation
            ll += -(ay - a) * (ay - a) / s2 + ln_i0_scaled(2.0 * a * ay / s2);
        }
        ll - 2.0 * u * self.ax.len() as f64
    }
}

/// Estimates `h0` and `sigma_n` from input/output pairs.
pub fn estimate_gain_noise(x: &[Complex64], y: &[Complex64]) -> Result<GainNoiseEstimate> {
    check_pairs(x, y, MIN_PAIRS)?;
    let n = x.len() as f64;
    let px: f64 = x.iter().map(|v| v.norm_sqr()).sum::<f64>() / n;
    let py: f64 = y.iter().map(|v| v.norm_sqr()).sum::<f64>() / n;
    if !(py > 0.0 && py.is_finite()) {
        return Err(Error::InvalidParams("output power is zero, noise variance estimate <= 0".into()));
    }
    if !(px > 0.0 && px.is_finite()) {
        return Err(Error::InsufficientData("input power is zero".into()));
    }
    let prof = Profile {
        ax: x.iter().map(|v| v.norm()).collect(),
        ay: y.iter().map(|v| v.norm()).collect(),
        px,
        py,
    };
    // sigma_n ranges from the floor up to the point where all output power is noise
    let u_min = (SIGMA_FLOOR * py.sqrt()).ln();
    let u_max = 0.5 * py.ln();
    let step = (u_max - u_min) / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS).map(|i| u_min + step * i as f64).collect();
    let ll: Vec<f64> = grid.iter().map(|&u| prof.log_likelihood(u)).collect();
    let mut evaluations = GRID_POINTS;
    let best = (0..GRID_POINTS)
        .max_by(|&i, &j| ll[i].total_cmp(&ll[j]))
        .expect("grid is non-empty");

    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(GRID_POINTS - 1)]);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = prof.log_likelihood(c);
    let mut fd = prof.log_likelihood(d);
    evaluations += 2;
    let mut converged = false;
    for _ in 0..MAX_REFINEMENTS {
        if b - a < TOLERANCE {
            converged = true;
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = prof.log_likelihood(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = prof.log_likelihood(d);
        }
        evaluations += 1;
    }
    if !converged {
        return Err(Error::EstimationNotConverged(MAX_REFINEMENTS));
    }
    let mut u = 0.5 * (a + b);
    // golden section never lands exactly on the search limits
    if best == 0 && ll[0] >= prof.log_likelihood(u) {
        u = u_min;
    } else if best == GRID_POINTS - 1 && ll[best] >= prof.log_likelihood(u) {
        u = u_max;
    }
    let sigma_n = u.exp();
    if !(sigma_n > 0.0) {
        return Err(Error::InvalidParams("noise variance estimate <= 0".into()));
    }
    Ok(GainNoiseEstimate {
        h0: prof.gain(u),
        sigma_n,
        degenerate: u - u_min < 1e-6,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::transceiver::generate_gaussian_symbols;

    fn channel(n: usize, h: f64, sigma: f64, phase_walk: f64, seed: u64) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut rng = stream(seed);
        let x = generate_gaussian_symbols(n, 1.0, &mut rng);
        let w = generate_gaussian_symbols(n, sigma * sigma, &mut rng);
        let z = generate_gaussian_symbols(n, phase_walk * phase_walk, &mut rng);
        let mut theta = 0.0;
        let y = x
            .iter()
            .zip(&w)
            .zip(&z)
            .map(|((x, w), z)| {
                theta += z.re * std::f64::consts::SQRT_2;
                x * Complex64::from_polar(h, theta) + w
            })
            .collect();
        (x, y)
    }

    #[test]
    fn recovers_awgn_parameters() {
        let (x, y) = channel(20_000, 0.8, 0.3, 0.0, 3);
        let e = estimate_gain_noise(&x, &y).unwrap();
        assert!((e.h0 - 0.8).abs() < 0.01, "{e:?}");
        assert!((e.sigma_n - 0.3).abs() < 0.01, "{e:?}");
        assert!(!e.degenerate);
    }

    #[test]
    fn low_noise_unit_gain() {
        let (x, y) = channel(10_000, 1.0, 0.1, 0.0, 11);
        let e = estimate_gain_noise(&x, &y).unwrap();
        assert!((e.h0 - 1.0).abs() < 0.02, "{e:?}");
        assert!((e.sigma_n - 0.1).abs() < 0.005, "{e:?}");
    }

    #[test]
    fn exact_doubling_hits_noise_floor() {
        let (x, _) = channel(1000, 1.0, 0.0, 0.0, 12);
        let y: Vec<_> = x.iter().map(|v| v * 2.0).collect();
        let e = estimate_gain_noise(&x, &y).unwrap();
        assert!(e.degenerate);
        assert!((e.h0 - 2.0).abs() < 1e-6, "{e:?}");
    }

    #[test]
    fn insensitive_to_phase_noise() {
        let (x, y) = channel(20_000, 1.2, 0.2, 0.1, 4);
        let e = estimate_gain_noise(&x, &y).unwrap();
        assert!((e.h0 - 1.2).abs() < 0.02, "{e:?}");
        assert!((e.sigma_n - 0.2).abs() < 0.01, "{e:?}");
    }

    #[test]
    fn noiseless_is_flagged() {
        let (x, _) = channel(1000, 1.0, 0.0, 0.0, 5);
        let y: Vec<_> = x.iter().map(|v| v * 0.5).collect();
        let e = estimate_gain_noise(&x, &y).unwrap();
        assert!(e.degenerate);
        assert!((e.h0 - 0.5).abs() < 1e-6);
    }

    #[test]
    fn pure_noise_has_negligible_gain() {
        let mut rng = stream(9);
        let x = generate_gaussian_symbols(5000, 1.0, &mut rng);
        let y = generate_gaussian_symbols(5000, 0.25, &mut rng);
        let e = estimate_gain_noise(&x, &y).unwrap();
        // estimated SNR stays below -10 dB
        assert!(e.h0 * e.h0 < 0.1 * 0.25, "{e:?}");
        assert!((e.sigma_n - 0.5).abs() < 0.03, "{e:?}");
    }

    #[test]
    fn errors() {
        let x = vec![Complex64::new(1.0, 0.0); 50];
        assert!(matches!(estimate_gain_noise(&x, &x), Err(Error::InsufficientData(_))));
        let x = vec![Complex64::new(1.0, 0.0); 200];
        let y = vec![Complex64::new(0.0, 0.0); 200];
        assert!(matches!(estimate_gain_noise(&x, &y), Err(Error::InvalidParams(_))));
        assert!(estimate_gain_noise(&x, &y[..150]).is_err());
    }
}
