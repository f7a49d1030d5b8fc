//! Sequential Monte Carlo evaluation of `q(y_l | x^N, y^{l-1})` for auxiliary
//! channels with a phase process.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{
    air_awgn, blockwise_bits, check_pairs, log_marginal, mean_power, phase_step, AirResult, AuxChannelParams,
    ParticleConfig, PhaseModel,
};
use crate::error::{Error, Result};
use crate::rng::stream;

/// AIR of `params` on the pairs `(x, y)`, estimated with a particle filter.
pub fn air_particle(
    x: &[Complex64],
    y: &[Complex64],
    params: &AuxChannelParams,
    cfg: &ParticleConfig,
) -> Result<AirResult> {
    params.validate()?;
    cfg.validate()?;
    if params.phase_model == PhaseModel::Awgn {
        let mut r = air_awgn(x, y, params)?;
        r.seed = cfg.seed;
        return Ok(r);
    }
    check_pairs(x, y, 2)?;
    let info = information_density(x, y, params, cfg)?;
    let (air, std_error) = blockwise_bits(&info);
    Ok(AirResult {
        air,
        std_error,
        params: *params,
        n_train: 0,
        n_eval: x.len(),
        seed: cfg.seed,
        config_digest: String::new(),
    })
}

/// Per-symbol `ln q(y_l | x^N, y^{l-1}) - ln q(y_l)`.
pub(crate) fn information_density(
    x: &[Complex64],
    y: &[Complex64],
    params: &AuxChannelParams,
    cfg: &ParticleConfig,
) -> Result<Vec<f64>> {
    let model = params.phase_model;
    let n_p = cfg.n_particles;
    let mem = model.memory();
    let sigma_z = model.sigma_z();
    let s2 = params.sigma_n * params.sigma_n;
    let h = params.h0;
    let norm = params.log_norm();
    let p = mean_power(x);
    let mut rng = stream(cfg.seed);

    // history[i * mem + (t mod mem)] holds particle i's phase at step t
    let mut history: Vec<f64> = Vec::with_capacity(n_p * mem);
    for _ in 0..n_p {
        let th = rng.random::<f64>() * 2.0 * PI;
        history.extend(std::iter::repeat_n(th, mem));
    }
    let mut scratch = vec![0.0; n_p * mem];
    let mut log_w = vec![-(n_p as f64).ln(); n_p];
    let mut v = vec![0.0; n_p];
    let mut e = vec![0.0; n_p];
    let mut cumulative = vec![0.0; n_p];
    let ess_min = cfg.resample_threshold * n_p as f64;

    let mut info = Vec::with_capacity(x.len());
    for (t, (&xl, &yl)) in x.iter().zip(y).enumerate() {
        let slot = t % mem;
        let prev_slot = (t + mem - 1) % mem;
        let base = norm - (yl.norm_sqr() + h * h * xl.norm_sqr()) / s2;
        let k = 2.0 * h * xl.norm() * yl.norm() / s2;
        let phi = xl.arg() - yl.arg();

        let mut m = f64::NEG_INFINITY;
        for i in 0..n_p {
            let row = &mut history[i * mem..(i + 1) * mem];
            let z: f64 = rng.sample(StandardNormal);
            let th = phase_step(&model, row[prev_slot], row[slot], sigma_z * z);
            row[slot] = th;
            v[i] = log_w[i] + k * (th + phi).cos();
            m = m.max(v[i]);
        }
        if !m.is_finite() {
            return Err(Error::WeightUnderflow { index: t });
        }
        let mut s = 0.0;
        for i in 0..n_p {
            e[i] = (v[i] - m).exp();
            s += e[i];
        }
        let ln_s = s.ln();
        let log_pred = base + m + ln_s;
        if !log_pred.is_finite() {
            return Err(Error::WeightUnderflow { index: t });
        }
        info.push(log_pred - log_marginal(yl, params, p));

        let mut sum_sq = 0.0;
        for i in 0..n_p {
            log_w[i] = v[i] - m - ln_s;
            let w = e[i] / s;
            sum_sq += w * w;
        }
        if 1.0 / sum_sq < ess_min {
            // systematic resampling
            let mut acc = 0.0;
            for i in 0..n_p {
                acc += e[i] / s;
                cumulative[i] = acc;
            }
            let u0: f64 = rng.random::<f64>() / n_p as f64;
            let mut j = 0;
            for i in 0..n_p {
                let u = u0 + i as f64 / n_p as f64;
                while j < n_p - 1 && cumulative[j] < u {
                    j += 1;
                }
                scratch[i * mem..(i + 1) * mem].copy_from_slice(&history[j * mem..(j + 1) * mem]);
            }
            std::mem::swap(&mut history, &mut scratch);
            log_w.fill(-(n_p as f64).ln());
        }
    }
    Ok(info)
}
